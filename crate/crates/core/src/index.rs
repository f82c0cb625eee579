//! Spatial index functions `x -> beta(x)` with values in a compact subset of `(0, 2)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::{norm, Scalar};

/// Serializable description of an index function, as written in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IndexDescriptor {
    Constant {
        value: f64,
    },
    /// `max(base(x), floor)`.
    Clamped {
        base: Box<IndexDescriptor>,
        floor: f64,
    },
    /// `floor + height / (1 + |x|^2 / width^2)`.
    RationalBump {
        floor: f64,
        height: f64,
        width: f64,
    },
    /// Piecewise linear interpolation of `values` over `knots`, constant outside.
    Table {
        axis: TableAxis,
        knots: Vec<f64>,
        values: Vec<f64>,
        lipschitz: f64,
    },
}

/// Which scalar feature of `x` a tabulated index function reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableAxis {
    /// Euclidean norm `|x|`.
    Radial,
    /// A single coordinate `x[i]`.
    Coordinate(usize),
}

impl IndexDescriptor {
    /// The bump `0.6 + 0.8 / (1 + x^2)`, ranging over `(0.6, 1.4]`.
    pub fn default_bump() -> Self {
        IndexDescriptor::RationalBump {
            floor: 0.6,
            height: 0.8,
            width: 1.0,
        }
    }
}

impl fmt::Display for IndexDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexDescriptor::Constant { value } => write!(f, "const:{value}"),
            IndexDescriptor::Clamped { base, floor } => write!(f, "clamp:{floor}:{base}"),
            IndexDescriptor::RationalBump {
                floor,
                height,
                width,
            } => write!(f, "bump:{floor},{height},{width}"),
            IndexDescriptor::Table { knots, .. } => write!(f, "table[{} knots]", knots.len()),
        }
    }
}

/// Parses the compact command-line form:
/// `const:1.5`, `bump`, `bump:0.6,0.8,1`, `clamp:1.0:bump`.
/// Tables are only accepted through config files.
impl FromStr for IndexDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        let num = |v: &str| -> Result<f64> {
            v.trim()
                .parse::<f64>()
                .map_err(|_| invalid("beta", format!("cannot parse number `{v}`")))
        };
        match (head, rest) {
            ("const" | "constant", Some(v)) => Ok(IndexDescriptor::Constant { value: num(v)? }),
            ("bump", None) => Ok(IndexDescriptor::default_bump()),
            ("bump", Some(v)) => {
                let parts: Vec<&str> = v.split(',').collect();
                if parts.len() != 3 {
                    return Err(invalid("beta", "bump expects floor,height,width"));
                }
                Ok(IndexDescriptor::RationalBump {
                    floor: num(parts[0])?,
                    height: num(parts[1])?,
                    width: num(parts[2])?,
                })
            }
            ("clamp", Some(v)) => {
                let (a, inner) = v
                    .split_once(':')
                    .ok_or_else(|| invalid("beta", "clamp expects clamp:<floor>:<base>"))?;
                Ok(IndexDescriptor::Clamped {
                    base: Box::new(inner.parse()?),
                    floor: num(a)?,
                })
            }
            _ => Err(invalid("beta", format!("unrecognised index descriptor `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind<T> {
    Constant(T),
    Clamped { base: Box<IndexFunction<T>>, floor: T },
    RationalBump { floor: T, height: T, width: T, inv_width_sq: T },
    Table { axis: TableAxis, knots: Vec<T>, values: Vec<T> },
}

/// A Lipschitz index function with declared range `[beta_min, beta_max] ⊂ (0, 2)`.
///
/// Immutable once built; cloning is cheap apart from tables.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexFunction<T> {
    kind: Kind<T>,
    lipschitz: T,
    beta_min: T,
    beta_max: T,
}

fn check_range<T: Scalar>(lo: T, hi: T) -> Result<()> {
    if !(lo > T::zero() && lo <= hi && hi < T::lit(2.0)) {
        return Err(Error::IndexOutOfRange(format!(
            "range [{lo}, {hi}] is not a compact subset of (0, 2)"
        )));
    }
    Ok(())
}

impl<T: Scalar> IndexFunction<T> {
    pub fn constant(alpha: T) -> Result<Self> {
        check_range(alpha, alpha)?;
        Ok(Self {
            kind: Kind::Constant(alpha),
            lipschitz: T::zero(),
            beta_min: alpha,
            beta_max: alpha,
        })
    }

    /// `beta_a(x) = max(base(x), a)`.
    pub fn clamped(base: IndexFunction<T>, a: T) -> Result<Self> {
        let beta_min = base.beta_min.max(a);
        let beta_max = base.beta_max.max(a);
        check_range(beta_min, beta_max)?;
        let lipschitz = base.lipschitz;
        Ok(Self {
            kind: Kind::Clamped {
                base: Box::new(base),
                floor: a,
            },
            lipschitz,
            beta_min,
            beta_max,
        })
    }

    /// `floor + height / (1 + |x|^2 / width^2)`, range `(floor, floor + height]`.
    pub fn rational_bump(floor: T, height: T, width: T) -> Result<Self> {
        if !(height >= T::zero()) || !(width > T::zero()) {
            return Err(invalid("beta", "bump needs height >= 0 and width > 0"));
        }
        check_range(floor, floor + height)?;
        // sup of |d/ds h/(1+s^2/w^2)| is attained at s = w/sqrt(3): 9h / (8 sqrt(3) w).
        let lipschitz = T::lit(9.0) * height / (T::lit(8.0) * T::lit(3.0).sqrt() * width);
        Ok(Self {
            kind: Kind::RationalBump {
                floor,
                height,
                width,
                inv_width_sq: T::one() / (width * width),
            },
            lipschitz,
            beta_min: floor,
            beta_max: floor + height,
        })
    }

    /// Tabulated index with a user-declared Lipschitz constant.
    pub fn table(axis: TableAxis, knots: Vec<T>, values: Vec<T>, lipschitz: T) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(invalid("beta", "table needs equally many knots and values (>= 1)"));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("beta", "table knots must be strictly increasing"));
        }
        if !(lipschitz >= T::zero()) {
            return Err(invalid("beta", "table lipschitz constant must be >= 0"));
        }
        let lo = values.iter().copied().fold(T::infinity(), T::min);
        let hi = values.iter().copied().fold(T::neg_infinity(), T::max);
        check_range(lo, hi)?;
        Ok(Self {
            kind: Kind::Table {
                axis,
                knots,
                values,
            },
            lipschitz,
            beta_min: lo,
            beta_max: hi,
        })
    }

    pub fn from_descriptor(desc: &IndexDescriptor) -> Result<Self> {
        match desc {
            IndexDescriptor::Constant { value } => Self::constant(T::lit(*value)),
            IndexDescriptor::Clamped { base, floor } => {
                Self::clamped(Self::from_descriptor(base)?, T::lit(*floor))
            }
            IndexDescriptor::RationalBump {
                floor,
                height,
                width,
            } => Self::rational_bump(T::lit(*floor), T::lit(*height), T::lit(*width)),
            IndexDescriptor::Table {
                axis,
                knots,
                values,
                lipschitz,
            } => Self::table(
                *axis,
                knots.iter().map(|&k| T::lit(k)).collect(),
                values.iter().map(|&v| T::lit(v)).collect(),
                T::lit(*lipschitz),
            ),
        }
    }

    pub fn descriptor(&self) -> IndexDescriptor {
        match &self.kind {
            Kind::Constant(a) => IndexDescriptor::Constant {
                value: a.to_f64_lossless(),
            },
            Kind::Clamped { base, floor } => IndexDescriptor::Clamped {
                base: Box::new(base.descriptor()),
                floor: floor.to_f64_lossless(),
            },
            Kind::RationalBump {
                floor,
                height,
                width,
                ..
            } => IndexDescriptor::RationalBump {
                floor: floor.to_f64_lossless(),
                height: height.to_f64_lossless(),
                width: width.to_f64_lossless(),
            },
            Kind::Table {
                axis,
                knots,
                values,
            } => IndexDescriptor::Table {
                axis: *axis,
                knots: knots.iter().map(|k| k.to_f64_lossless()).collect(),
                values: values.iter().map(|v| v.to_f64_lossless()).collect(),
                lipschitz: self.lipschitz.to_f64_lossless(),
            },
        }
    }

    pub fn lipschitz(&self) -> T {
        self.lipschitz
    }

    pub fn beta_min(&self) -> T {
        self.beta_min
    }

    pub fn beta_max(&self) -> T {
        self.beta_max
    }

    /// True when the function does not depend on `x`.
    pub fn is_constant(&self) -> bool {
        match &self.kind {
            Kind::Constant(_) => true,
            Kind::Clamped { base, floor } => base.is_constant() || *floor >= base.beta_max,
            _ => self.beta_min == self.beta_max,
        }
    }

    /// Evaluates `beta(x)` without input validation. Used on the simulation hot path.
    #[inline]
    pub fn eval(&self, x: &[T]) -> T {
        let v = match &self.kind {
            Kind::Constant(a) => *a,
            Kind::Clamped { base, floor } => base.eval(x).max(*floor),
            Kind::RationalBump {
                floor,
                height,
                inv_width_sq,
                ..
            } => {
                let r2 = x.iter().fold(T::zero(), |acc, &v| acc + v * v);
                *floor + *height / (T::one() + r2 * *inv_width_sq)
            }
            Kind::Table {
                axis,
                knots,
                values,
            } => {
                let s = match axis {
                    TableAxis::Radial => norm(x),
                    TableAxis::Coordinate(i) => x.get(*i).copied().unwrap_or_else(T::zero),
                };
                interpolate(knots, values, s)
            }
        };
        debug_assert!(
            v >= self.beta_min && v <= self.beta_max,
            "index value {v} escaped [{}, {}]",
            self.beta_min,
            self.beta_max
        );
        v
    }

    /// Probe-grid check of the declared range and Lipschitz constant on `n` Halton points
    /// of the box `[-half_width, half_width]^d`. Consecutive probe points are paired for
    /// the Lipschitz test, along with each point and a small perturbation of it.
    pub fn check_invariants(&self, d: usize, half_width: T, n: usize) -> Result<()> {
        if d == 0 {
            return Err(invalid("d", "dimension must be >= 1"));
        }
        let tol = T::lit(1e-9);
        let mut prev: Option<Vec<T>> = None;
        for i in 0..n {
            let x: Vec<T> = (0..d)
                .map(|k| half_width * (T::lit(2.0 * halton(i as u64 + 1, PRIMES[k % PRIMES.len()])) - T::one()))
                .collect();
            let v = self.eval(&x);
            if v < self.beta_min - tol || v > self.beta_max + tol {
                return Err(Error::IndexOutOfRange(format!(
                    "beta({x:?}) = {v} outside [{}, {}]",
                    self.beta_min, self.beta_max
                )));
            }
            let mut near = x.clone();
            near[0] = near[0] + T::lit(1e-3) * half_width;
            let pairs = [prev.as_deref(), Some(&near[..])];
            for y in pairs.into_iter().flatten() {
                let lhs = (v - self.eval(y)).abs();
                let rhs = self.lipschitz * crate::scalar::distance(&x, y);
                if lhs > rhs * (T::one() + tol) + tol {
                    return Err(Error::IndexOutOfRange(format!(
                        "Lipschitz bound violated between {x:?} and {y:?}: {lhs} > {rhs}"
                    )));
                }
            }
            prev = Some(x);
        }
        Ok(())
    }
}

fn interpolate<T: Scalar>(knots: &[T], values: &[T], s: T) -> T {
    let n = knots.len();
    if s <= knots[0] {
        return values[0];
    }
    if s >= knots[n - 1] {
        return values[n - 1];
    }
    let i = knots.partition_point(|&k| k <= s);
    let (k0, k1) = (knots[i - 1], knots[i]);
    let w = (s - k0) / (k1 - k0);
    // Convex combination: stays inside [min, max] of the two values.
    (values[i - 1] + w * (values[i] - values[i - 1]))
        .max(values[i - 1].min(values[i]))
        .min(values[i - 1].max(values[i]))
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Radical inverse of `i` in base `b` (Halton coordinate).
pub(crate) fn halton(mut i: u64, b: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

/// Evaluates `beta(x)`, rejecting non-finite points.
pub fn eval_index<T: Scalar>(beta: &IndexFunction<T>, x: &[T]) -> Result<T> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("index argument"));
    }
    Ok(beta.eval(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump() -> IndexFunction<f64> {
        IndexFunction::from_descriptor(&IndexDescriptor::default_bump()).unwrap()
    }

    #[test]
    fn constant_eval() {
        let b = IndexFunction::constant(1.5).unwrap();
        assert_eq!(eval_index(&b, &[3.2]).unwrap(), 1.5);
    }

    #[test]
    fn clamp_dominates() {
        let b = IndexFunction::clamped(IndexFunction::constant(0.7).unwrap(), 1.1).unwrap();
        for x in [-5.0, 0.0, 17.0] {
            assert_eq!(b.eval(&[x]), 1.1);
        }
        assert_eq!(b.beta_min(), 1.1);
        assert_eq!(b.beta_max(), 1.1);
    }

    #[test]
    fn bump_at_origin() {
        let b = bump();
        assert!((eval_index(&b, &[0.0]).unwrap() - 1.4).abs() < 1e-15);
        assert_eq!(b.beta_min(), 0.6);
        assert!((b.beta_max() - 1.4).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_finite() {
        let b = bump();
        assert!(matches!(eval_index(&b, &[f64::NAN]), Err(Error::NonFinite(_))));
        assert!(eval_index(&b, &[f64::INFINITY]).is_err());
    }

    #[test]
    fn rejects_out_of_band() {
        assert!(IndexFunction::constant(2.0).is_err());
        assert!(IndexFunction::constant(0.0).is_err());
        assert!(IndexFunction::rational_bump(0.6, 1.5, 1.0).is_err());
        assert!(IndexFunction::clamped(bump(), 2.5).is_err());
    }

    #[test]
    fn clamp_is_exact_max() {
        let base = bump();
        let c = IndexFunction::clamped(base.clone(), 1.0).unwrap();
        for i in 0..200 {
            let x = [-4.0 + 0.04 * i as f64];
            assert_eq!(c.eval(&x), base.eval(&x).max(1.0));
        }
    }

    #[test]
    fn clamp_idempotent() {
        let once = IndexFunction::clamped(bump(), 0.9).unwrap();
        let twice = IndexFunction::clamped(once.clone(), 0.9).unwrap();
        for i in 0..1000 {
            let x = [-10.0 + 0.02 * i as f64, 0.3 * i as f64 - 7.0];
            assert_eq!(once.eval(&x), twice.eval(&x));
        }
    }

    #[test]
    fn probe_invariants_hold_for_builtins() {
        bump().check_invariants(1, 5.0, 10_000).unwrap();
        bump().check_invariants(3, 5.0, 10_000).unwrap();
        IndexFunction::clamped(bump(), 1.0)
            .unwrap()
            .check_invariants(2, 5.0, 10_000)
            .unwrap();
        IndexFunction::constant(0.3f64).unwrap().check_invariants(2, 5.0, 1000).unwrap();
    }

    #[test]
    fn probe_detects_understated_lipschitz() {
        let t = IndexFunction::table(TableAxis::Coordinate(0), vec![0.0, 0.1], vec![0.5, 1.5], 0.5).unwrap();
        assert!(t.check_invariants(1, 1.0, 1000).is_err());
        let ok = IndexFunction::table(TableAxis::Coordinate(0), vec![0.0, 0.1], vec![0.5, 1.5], 10.0).unwrap();
        ok.check_invariants(1, 1.0, 1000).unwrap();
    }

    #[test]
    fn table_interpolates_and_clamps_ends() {
        let t = IndexFunction::<f64>::table(TableAxis::Radial, vec![0.0, 1.0, 2.0], vec![1.2, 0.8, 0.8], 0.4).unwrap();
        assert!((t.eval(&[0.5]) - 1.0).abs() < 1e-15);
        assert!((t.eval(&[0.3, 0.4]) - 1.0).abs() < 1e-15);
        assert_eq!(t.eval(&[-9.0, 9.0]), 0.8);
        assert_eq!(t.beta_min(), 0.8);
    }

    #[test]
    fn descriptor_parsing_and_round_trip() {
        let d: IndexDescriptor = "clamp:1.0:bump".parse().unwrap();
        let f = IndexFunction::<f64>::from_descriptor(&d).unwrap();
        assert_eq!(f.descriptor(), d);
        assert_eq!(f.eval(&[10.0]), 1.0);
        let c: IndexDescriptor = "const:1.5".parse().unwrap();
        assert_eq!(c, IndexDescriptor::Constant { value: 1.5 });
        assert!("nonsense:1".parse::<IndexDescriptor>().is_err());
        let b: IndexDescriptor = "bump:0.5,1,2".parse().unwrap();
        assert_eq!(b.to_string().parse::<IndexDescriptor>().unwrap(), b);
    }

    #[test]
    fn f32_instantiation() {
        let b = IndexFunction::<f32>::from_descriptor(&IndexDescriptor::default_bump()).unwrap();
        assert!((b.eval(&[0.0f32]) - 1.4).abs() < 1e-6);
    }
}
