//! The generator `L^β f(x) = ∫ (f(x+u) - f(x) - 1_{|u|<1} u·∇f(x)) ν_x(du)` of the
//! simulated process and its symbol `q(x, ξ) = a(x) |ξ|^{β(x)}`.
//!
//! The jump `θ r^{1/β}` under intensity `H(dθ) r^{-2} dr` has Lévy measure
//! `β ρ^{-1-β} dρ H(dθ)` in the variable `ρ = r^{1/β}`. Consequently
//! `a(x) = β C_β E_H|θ·e₁|^β` with `C_α = ∫_0^∞ (1 - cos r) r^{-1-α} dr`.
//! All numerics run in `f64`.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{invalid, Error, Result};
use crate::index::{halton, IndexFunction};
use crate::quad::{integrate, integrate_breaks, oscillatory_tail, Tolerance};
use crate::scalar::Scalar;

/// Quadrature tolerance for the symbol constants.
pub const INNER_TOL: f64 = 1e-8;
/// Agreement required between independent routes to the same symbol value.
pub const CROSS_CHECK_TOL: f64 = 1e-4;
/// Admissible range of the index in every quadrature.
pub const GUARD_BAND: (f64, f64) = (0.05, 1.95);

const TIGHT: Tolerance = Tolerance::new(1e-14, 1e-12);

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= GUARD_BAND.0 && alpha <= GUARD_BAND.1) {
        return Err(invalid(
            "alpha",
            format!("{alpha} outside the guard band [{}, {}]", GUARD_BAND.0, GUARD_BAND.1),
        ));
    }
    Ok(())
}

/// `C_α = ∫_0^∞ (1 - cos r) r^{-1-α} dr`.
///
/// On `[0, 1]` the cosine series is integrated term by term. On `[1, ∞)` the
/// constant part gives `1/α`; the oscillatory part is integrated by parts a few
/// times until its envelope decays fast, then summed panel by panel.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let mut head = 0.0;
    let mut fact = 1.0;
    for k in 1..=12 {
        let n = 2 * k;
        fact *= ((n - 1) * n) as f64;
        let term = 1.0 / (fact * (n as f64 - alpha));
        head += if k % 2 == 1 { term } else { -term };
    }
    Ok(head + 1.0 / alpha - cos_moment_tail(1.0 + alpha)?)
}

/// `I(p) = ∫_1^∞ cos r · r^{-p} dr` for `p > 1`, via
/// `I(p) = -sin 1 + p J(p+1)` and `J(p) = cos 1 - p I(p+1)`.
fn cos_moment_tail(p: f64) -> Result<f64> {
    const STEPS: usize = 6;
    const UPPER: f64 = 1200.0;
    let (s1, c1) = 1f64.sin_cos();
    // Walk down the recursion: value = Σ coeff_k * boundary_k + coeff * remainder.
    let mut coeff = 1.0;
    let mut acc = 0.0;
    let mut q = p;
    let mut cosine = true;
    for _ in 0..STEPS {
        if cosine {
            acc += coeff * -s1;
        } else {
            acc += coeff * c1;
        }
        coeff *= if cosine { q } else { -q };
        q += 1.0;
        cosine = !cosine;
    }
    let mut breaks = vec![1.0];
    let mut k = 1.0;
    while k * PI < UPPER {
        breaks.push(k * PI);
        k += 1.0;
    }
    let rem = if cosine {
        integrate_breaks(|r| r.cos() * r.powf(-q), &breaks, TIGHT)?
    } else {
        integrate_breaks(|r| r.sin() * r.powf(-q), &breaks, TIGHT)?
    };
    // Beyond UPPER the remainder is below UPPER^{1-q}/(q-1) ≈ 1e-20.
    Ok(acc + coeff * rem)
}

/// Closed form `Γ(2-α) cos(πα/2) / (α(1-α))`, with the limit `π/2` at `α = 1`.
pub fn c_alpha_closed_form(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(invalid("alpha", "must lie in (0, 2)"));
    }
    let raw = |a: f64| statrs::function::gamma::gamma(2.0 - a) * (PI * a / 2.0).cos() / (a * (1.0 - a));
    const H: f64 = 1e-5;
    if (alpha - 1.0).abs() < H {
        // Removable singularity: interpolate across it.
        let (lo, hi) = (raw(1.0 - H), raw(1.0 + H));
        return Ok(lo + (hi - lo) * (alpha - 1.0 + H) / (2.0 * H));
    }
    Ok(raw(alpha))
}

/// `E_H |θ·e₁|^α` for `θ` uniform on `S^{d-1}`.
pub fn sphere_moment(alpha: f64, d: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(invalid("alpha", "must lie in (0, 2)"));
    }
    match d {
        0 => Err(invalid("d", "dimension must be >= 1")),
        1 => Ok(1.0),
        _ => {
            // θ·e₁ = cos φ with polar density ∝ sin^{d-2} φ.
            let w = (d - 2) as i32;
            let num = integrate(
                |phi: f64| phi.cos().max(0.0).powf(alpha) * phi.sin().powi(w),
                0.0,
                FRAC_PI_2,
                TIGHT,
            )?
            .0;
            let den = integrate(|phi: f64| phi.sin().powi(w), 0.0, FRAC_PI_2, TIGHT)?.0;
            Ok(num / den)
        }
    }
}

/// `a = α C_α E_H|θ·e₁|^α`, the coefficient of `|ξ|^α` in the symbol.
pub fn symbol_coefficient(alpha: f64, d: usize) -> Result<f64> {
    Ok(alpha * c_alpha(alpha)? * sphere_moment(alpha, d)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolEval {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub beta: f64,
    pub value: f64,
    pub a_of_x: f64,
    pub c_alpha: f64,
    pub sphere_moment: f64,
}

fn to_f64<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|t| t.to_f64_lossless()).collect()
}

fn index_at<T: Scalar>(beta: &IndexFunction<T>, x: &[T]) -> Result<f64> {
    let b = crate::index::eval_index(beta, x)?.to_f64_lossless();
    check_alpha(b)?;
    Ok(b)
}

/// `q(x, ξ) = a(x) |ξ|^{β(x)}`.
pub fn symbol<T: Scalar>(x: &[T], xi: &[T], beta: &IndexFunction<T>) -> Result<SymbolEval> {
    if x.len() != xi.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: xi.len(),
        });
    }
    let xi = to_f64(xi);
    if xi.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("xi"));
    }
    let b = index_at(beta, x)?;
    let c = c_alpha(b)?;
    let s = sphere_moment(b, x.len())?;
    let a = b * c * s;
    let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(SymbolEval {
        x: to_f64(x),
        xi,
        beta: b,
        value: a * norm.powf(b),
        a_of_x: a,
        c_alpha: c,
        sphere_moment: s,
    })
}

/// Relative gap between `q(x, ξ)` and a direct quadrature of
/// `β ∫_0^∞ (1 - cos(uξ)) u^{-1-β} du` in `d = 1`.
///
/// The direct route shares no code with [`c_alpha`]: near zero the substitution
/// `u = s^{1/(2-β)}` removes the singularity, and beyond one half period the
/// cosine part is summed over half periods and extrapolated.
pub fn symbol_fourier_check<T: Scalar>(x: &[T], xi: T, beta: &IndexFunction<T>) -> Result<f64> {
    if x.len() != 1 {
        return Err(Error::Unsupported("the Fourier cross-check is one-dimensional".into()));
    }
    let xi_f = xi.to_f64_lossless();
    if xi_f == 0.0 || !xi_f.is_finite() {
        return Err(invalid("xi", "must be finite and non-zero"));
    }
    let q = symbol(x, &[xi], beta)?;
    let numeric = direct_symbol_1d(q.beta, xi_f)?;
    Ok((numeric - q.value).abs() / q.value)
}

/// `β ∫_0^∞ (1 - cos(uξ)) u^{-1-β} du` by direct quadrature.
pub fn direct_symbol_1d(b: f64, xi: f64) -> Result<f64> {
    check_alpha(b)?;
    let w = xi.abs();
    let c = PI / w;
    // (1 - cos(uw)) / u², evaluated without cancellation.
    let g = |u: f64| {
        let h = 0.5 * u * w;
        if h < 1e-8 {
            0.5 * w * w
        } else {
            let s = h.sin();
            2.0 * s * s / (u * u)
        }
    };
    let m = 1.0 / (2.0 - b);
    let s_max = c.powf(2.0 - b);
    let head = integrate(|s| m * g(s.powf(m)), 0.0, s_max, TIGHT)?.0;
    let tail_const = c.powf(-b) / b;
    let tail_cos = oscillatory_tail(|u| (u * w).cos() * u.powf(-1.0 - b), c, c, 40, TIGHT)?;
    Ok(b * (head + tail_const - tail_cos))
}

/// `β_∞` for symbols `a(x)|ξ|^{β(x)}` with bounded `a`: the supremum of `β`.
pub fn beta_infinity<T: Scalar>(beta: &IndexFunction<T>) -> f64 {
    beta.beta_max().to_f64_lossless()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthProbe {
    pub scales: Vec<f64>,
    /// `sup_x q(x, ξ) / |ξ|^δ` at `δ = β_max + margin`, per scale.
    pub above: Vec<f64>,
    /// The same ratio at `δ = β_max - margin`.
    pub below: Vec<f64>,
}

impl GrowthProbe {
    /// True when the ratio decays above `β_max` and grows below it.
    pub fn brackets_beta_max(&self) -> bool {
        self.above.windows(2).all(|w| w[1] < w[0]) && self.below.windows(2).all(|w| w[1] > w[0])
    }
}

/// Evaluates `sup_{x, |η| <= |ξ|} q(x, η) / |ξ|^δ` on probe points (the origin and a
/// Halton cloud in `[-half_width, half_width]^d`).
pub fn beta_infinity_probe<T: Scalar>(
    beta: &IndexFunction<T>,
    d: usize,
    half_width: f64,
    n_probe: usize,
    scales: &[f64],
    margin: f64,
) -> Result<GrowthProbe> {
    const BASES: [u64; 6] = [2, 3, 5, 7, 11, 13];
    if d == 0 || d > BASES.len() {
        return Err(invalid("d", "probe supports 1 <= d <= 6"));
    }
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(n_probe + 1);
    let mut x = vec![T::zero(); d];
    for i in 0..=n_probe {
        if i > 0 {
            for (j, v) in x.iter_mut().enumerate() {
                *v = T::lit(half_width * (2.0 * halton(i as u64, BASES[j]) - 1.0));
            }
        }
        let b = index_at(beta, &x)?;
        pts.push((b, symbol_coefficient(b, d)?));
    }
    let bmax = beta_infinity(beta);
    let ratio = |xi: f64, delta: f64| {
        // q(x, η) increases in |η|, so the sup over |η| <= |ξ| sits at |η| = |ξ|.
        pts.iter()
            .map(|&(b, a)| a * xi.powf(b - delta))
            .fold(0.0f64, f64::max)
    };
    Ok(GrowthProbe {
        scales: scales.to_vec(),
        above: scales.iter().map(|&s| ratio(s, bmax + margin)).collect(),
        below: scales.iter().map(|&s| ratio(s, bmax - margin)).collect(),
    })
}

/// Behaviour of a test function along a ray `ρ ↦ f(x + ρθ)`, for the far field
/// of the generator integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RayProfile {
    /// `f(x + ρθ) = 0` for `ρ > beyond`.
    Vanishes { beyond: f64 },
    /// `f(x + ρθ)` oscillates in `ρ` with this angular frequency (0: constant).
    Oscillates { frequency: f64 },
}

/// A `C²` function on `R^d` with its gradient.
pub trait TestFunction {
    fn dim(&self) -> usize;
    fn value(&self, y: &[f64]) -> f64;
    fn gradient(&self, y: &[f64], out: &mut [f64]);
    fn ray(&self, x: &[f64], theta: &[f64]) -> RayProfile;
    /// A direction the function varies along, used to align the sphere quadrature.
    fn axis(&self) -> Option<Vec<f64>> {
        None
    }
}

/// `cos(ξ·y + phase)`; phases `0` and `π/2` give the real and imaginary parts
/// of `e^{-iξ·y}` up to sign.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWave {
    pub xi: Vec<f64>,
    pub phase: f64,
}

impl TestFunction for PlaneWave {
    fn dim(&self) -> usize {
        self.xi.len()
    }
    fn value(&self, y: &[f64]) -> f64 {
        (dot(&self.xi, y) + self.phase).cos()
    }
    fn gradient(&self, y: &[f64], out: &mut [f64]) {
        let s = -(dot(&self.xi, y) + self.phase).sin();
        for (o, &k) in out.iter_mut().zip(&self.xi) {
            *o = s * k;
        }
    }
    fn ray(&self, _x: &[f64], theta: &[f64]) -> RayProfile {
        RayProfile::Oscillates {
            frequency: dot(&self.xi, theta).abs(),
        }
    }
    fn axis(&self) -> Option<Vec<f64>> {
        let n = dot(&self.xi, &self.xi).sqrt();
        (n > 0.0).then(|| self.xi.iter().map(|v| v / n).collect())
    }
}

/// Smooth bump `exp(1 - 1/(1 - |y-c|²/R²))` supported in the ball `B(c, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Bump {
    fn s(&self, y: &[f64]) -> f64 {
        self.center
            .iter()
            .zip(y)
            .map(|(c, v)| (v - c) * (v - c))
            .sum::<f64>()
            / (self.radius * self.radius)
    }
}

impl TestFunction for Bump {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, y: &[f64]) -> f64 {
        let s = self.s(y);
        if s >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - s)).exp()
        }
    }
    fn gradient(&self, y: &[f64], out: &mut [f64]) {
        let s = self.s(y);
        let k = if s >= 1.0 {
            0.0
        } else {
            let v = (1.0 - 1.0 / (1.0 - s)).exp();
            -v / ((1.0 - s) * (1.0 - s)) * 2.0 / (self.radius * self.radius)
        };
        for ((o, &c), &v) in out.iter_mut().zip(&self.center).zip(y) {
            *o = k * (v - c);
        }
    }
    fn ray(&self, x: &[f64], _theta: &[f64]) -> RayProfile {
        let dist = self
            .center
            .iter()
            .zip(x)
            .map(|(c, v)| (v - c) * (v - c))
            .sum::<f64>()
            .sqrt();
        RayProfile::Vanishes {
            beyond: dist + self.radius,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Antipodally symmetric quadrature on `S^{d-1}` for `d <= 3`: `(θ, weight)` with
/// weights summing to one. Panels are split where `θ·axis = 0`, since integrands
/// built from `|θ·ξ|^β` have a kink there.
fn sphere_nodes(d: usize, axis: Option<&[f64]>) -> Result<Vec<(Vec<f64>, f64)>> {
    const NG: usize = 24;
    let (gx, gw) = gauss_legendre(NG);
    match d {
        1 => Ok(vec![(vec![1.0], 0.5), (vec![-1.0], 0.5)]),
        2 => {
            let phi0 = axis.map_or(0.0, |a| a[1].atan2(a[0]));
            let mut out = Vec::with_capacity(4 * NG);
            for quarter in 0..4 {
                let lo = phi0 + quarter as f64 * FRAC_PI_2;
                for (x, w) in gx.iter().zip(&gw) {
                    let phi = lo + FRAC_PI_2 * 0.5 * (x + 1.0);
                    out.push((vec![phi.cos(), phi.sin()], w / 8.0));
                }
            }
            Ok(out)
        }
        3 => {
            let e3 = axis.map_or(vec![0.0, 0.0, 1.0], |a| a.to_vec());
            let pick = if e3[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            let k = dot(&pick, &e3);
            let mut e1: Vec<f64> = pick.iter().zip(&e3).map(|(p, e)| p - k * e).collect();
            let n1 = dot(&e1, &e1).sqrt();
            e1.iter_mut().for_each(|v| *v /= n1);
            let e2 = [
                e3[1] * e1[2] - e3[2] * e1[1],
                e3[2] * e1[0] - e3[0] * e1[2],
                e3[0] * e1[1] - e3[1] * e1[0],
            ];
            // Gauss–Legendre in z on each hemisphere times the trapezoid rule in azimuth.
            let na = 32;
            let mut out = Vec::with_capacity(2 * NG * na);
            for half in [-1.0, 1.0] {
                for (x, w) in gx.iter().zip(&gw) {
                    let z = half * 0.5 * (x + 1.0);
                    let rho = (1.0 - z * z).sqrt();
                    for j in 0..na {
                        let phi = 2.0 * PI * (j as f64 + 0.5) / na as f64;
                        let (c, s) = (rho * phi.cos(), rho * phi.sin());
                        let theta = (0..3).map(|i| c * e1[i] + s * e2[i] + z * e3[i]).collect();
                        out.push((theta, w / (4.0 * na as f64)));
                    }
                }
            }
            Ok(out)
        }
        _ => Err(Error::Unsupported(format!("generator quadrature for d = {d} (need d <= 3)"))),
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// `L^β f(x)` with the index frozen at `β(x)`, in spherical coordinates:
/// `β ∫_S ∫_0^∞ (f(x+ρθ) - f(x) - 1_{ρ<1} ρ θ·∇f(x)) ρ^{-1-β} dρ H(dθ)`.
///
/// Below a small radius `ρ₀` the increment is replaced by its second-order Taylor
/// term, with the curvature along `θ` taken from a central difference of `∇f`.
/// Supports `d <= 3`.
pub fn apply_generator<T: Scalar>(f: &dyn TestFunction, x: &[T], beta: &IndexFunction<T>) -> Result<f64> {
    let d = x.len();
    if f.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: f.dim(),
        });
    }
    let b = index_at(beta, x)?;
    let xf = to_f64(x);
    let fx = f.value(&xf);
    let mut grad = vec![0.0; d];
    f.gradient(&xf, &mut grad);
    let mut total = 0.0;
    let axis = f.axis();
    for (theta, weight) in sphere_nodes(d, axis.as_deref())? {
        total += weight * ray_integral(f, &xf, fx, &grad, &theta, b)?;
    }
    Ok(b * total)
}

fn ray_integral(f: &dyn TestFunction, x: &[f64], fx: f64, grad: &[f64], theta: &[f64], b: f64) -> Result<f64> {
    let d = x.len();
    let slope = dot(grad, theta);
    let profile = f.ray(x, theta);
    let scale = match profile {
        RayProfile::Oscillates { frequency } => frequency.max(1.0),
        RayProfile::Vanishes { .. } => 1.0,
    };
    let rho0 = 1e-4 / scale;

    // Curvature θᵀ D²f(x) θ from the gradient.
    let h = 1e-5 / scale;
    let mut yp = vec![0.0; d];
    let mut ym = vec![0.0; d];
    let mut gp = vec![0.0; d];
    let mut gm = vec![0.0; d];
    for i in 0..d {
        yp[i] = x[i] + h * theta[i];
        ym[i] = x[i] - h * theta[i];
    }
    f.gradient(&yp, &mut gp);
    f.gradient(&ym, &mut gm);
    let curv = (dot(&gp, theta) - dot(&gm, theta)) / (2.0 * h);
    let near = 0.5 * curv * rho0.powf(2.0 - b) / (2.0 - b);

    let mut y = vec![0.0; d];
    let mut along = |rho: f64| {
        for i in 0..d {
            y[i] = x[i] + rho * theta[i];
        }
        f.value(&y)
    };
    // Rounding in the increment near ρ₀ sets a floor on the attainable error.
    let floor = 64.0 * f64::EPSILON * (fx.abs() + slope.abs() + 1.0) * rho0.powf(-b) / b;
    let tol = Tolerance::new(floor.max(1e-11), 1e-11);

    let mut breaks = vec![rho0];
    if let RayProfile::Oscillates { frequency } = profile {
        if frequency > 0.0 {
            let hp = PI / frequency;
            let mut k = (rho0 / hp).ceil();
            while k * hp < 1.0 {
                breaks.push(k * hp);
                k += 1.0;
            }
        }
    }
    breaks.push(1.0);
    let inner = integrate_breaks(|r| (along(r) - fx - r * slope) * r.powf(-1.0 - b), &breaks, tol)?;

    // ∫_1^∞ (f(x+ρθ) - f(x)) ρ^{-1-β} dρ.
    let outer = match profile {
        RayProfile::Vanishes { beyond } => {
            let mut v = -fx / b;
            if beyond > 1.0 {
                let n = (beyond.ceil() as usize).clamp(1, 4096);
                let pts: Vec<f64> = (0..=n).map(|k| 1.0 + (beyond - 1.0) * k as f64 / n as f64).collect();
                v += integrate_breaks(|r| along(r) * r.powf(-1.0 - b), &pts, tol)?;
            }
            v
        }
        RayProfile::Oscillates { frequency } if frequency <= 1e-12 => 0.0,
        RayProfile::Oscillates { frequency } => {
            let hp = PI / frequency;
            let start = (1.0 / hp).ceil() * hp;
            let lead = if start > 1.0 {
                integrate(|r| along(r) * r.powf(-1.0 - b), 1.0, start, tol)?.0
            } else {
                0.0
            };
            lead + oscillatory_tail(|r| along(r) * r.powf(-1.0 - b), start, hp, 40, tol)? - fx / b
        }
    };
    Ok(near + inner + outer)
}

/// Relative error of `L^β e^{-iξ·y}(x)` against `-q(x, ξ) e^{-iξ·x}`, computed
/// from the real and imaginary parts separately.
pub fn plane_wave_check<T: Scalar>(x: &[T], xi: &[f64], beta: &IndexFunction<T>) -> Result<f64> {
    let xi_t: Vec<T> = xi.iter().map(|&v| T::lit(v)).collect();
    let q = symbol(x, &xi_t, beta)?.value;
    if q == 0.0 {
        return Err(invalid("xi", "must be non-zero"));
    }
    let re = PlaneWave {
        xi: xi.to_vec(),
        phase: 0.0,
    };
    let im = PlaneWave {
        xi: xi.to_vec(),
        phase: FRAC_PI_2,
    };
    let xf = to_f64(x);
    let l_re = apply_generator(&re, x, beta)?;
    let l_im = apply_generator(&im, x, beta)?;
    let e_re = l_re + q * re.value(&xf);
    let e_im = l_im + q * im.value(&xf);
    Ok(e_re.hypot(e_im) / q)
}

/// `∫_0^1 (r^{1/β(x)} - r^{1/β(y)})² r^{-2} dr` and the bound
/// `4 L² / (β_min⁴ e² ε₀³) |x - y|²` with `ε₀ = (2/β_max - 1)/2`.
pub fn lipschitz_quadrature_check<T: Scalar>(x: &[T], y: &[T], beta: &IndexFunction<T>) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let bx = crate::index::eval_index(beta, x)?.to_f64_lossless();
    let by = crate::index::eval_index(beta, y)?.to_f64_lossless();
    let lhs = if bx == by {
        0.0
    } else {
        let (a, c) = (1.0 / bx, 1.0 / by);
        // r = s^m with m(2·min(a, c) - 1) = 1 makes the integrand bounded at 0.
        let m = 1.0 / (2.0 * a.min(c) - 1.0);
        // After the substitution the integrand is m (1 - s^{m|a - c|})².
        let k = m * (a - c).abs();
        integrate(|s: f64| m * (1.0 - s.powf(k)).powi(2), 0.0, 1.0, TIGHT)?.0
    };
    let lip = beta.lipschitz().to_f64_lossless();
    let bmin = beta.beta_min().to_f64_lossless();
    let eps0 = 0.5 * (2.0 / beta.beta_max().to_f64_lossless() - 1.0);
    let dist2: f64 = x
        .iter()
        .zip(y)
        .map(|(&u, &v)| (u - v).to_f64_lossless().powi(2))
        .sum();
    let c = 4.0 * lip * lip / (bmin.powi(4) * std::f64::consts::E.powi(2) * eps0.powi(3));
    Ok((lhs, c * dist2))
}

/// `∫_0^1 r^{2/β} r^{-2} dr` by quadrature, paired with its closed form `1/(2/β - 1)`.
///
/// With `r = e^{-u}` the integrand becomes `e^{-u(2/β - 1)}` on `(0, ∞)`; the range
/// is cut where the remainder drops below `1e-18` of the total.
pub fn growth_integral(b: f64) -> Result<(f64, f64)> {
    if !(b > 0.0 && b < 2.0) {
        return Err(invalid("beta", "must lie in (0, 2)"));
    }
    let e = 2.0 / b - 1.0;
    let upper = 18.0 * std::f64::consts::LN_10 / e;
    let breaks: Vec<f64> = (0..=16).map(|k| upper * k as f64 / 16.0).collect();
    let numeric = integrate_breaks(|u| (-u * e).exp(), &breaks, TIGHT)?;
    Ok((numeric, 1.0 / e))
}

/// Tabulates `(α, C_α)` on a grid.
pub fn c_alpha_table(alphas: &[f64]) -> Result<Vec<(f64, f64)>> {
    alphas.iter().map(|&a| Ok((a, c_alpha(a)?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_alpha_examples() {
        assert!((c_alpha(1.0).unwrap() - FRAC_PI_2).abs() < 1e-10);
        assert!((c_alpha(0.5).unwrap() - 2.5066).abs() < 1e-4);
        assert!(c_alpha(0.04).is_err());
        assert!(c_alpha(1.96).is_err());
        assert!(c_alpha(1.95).unwrap().is_finite());
    }

    #[test]
    fn c_alpha_matches_closed_form() {
        for &a in &[0.05, 0.3, 0.5, 0.9, 0.99, 1.0, 1.01, 1.1, 1.5, 1.9, 1.95] {
            let num = c_alpha(a).unwrap();
            let cf = c_alpha_closed_form(a).unwrap();
            assert!((num - cf).abs() / cf < 1e-9, "alpha {a}: {num} vs {cf}");
        }
    }

    #[test]
    fn sphere_moment_examples() {
        assert_eq!(sphere_moment(0.7, 1).unwrap(), 1.0);
        assert!((sphere_moment(1.0, 2).unwrap() - 2.0 / PI).abs() < 1e-12);
        assert!((sphere_moment(1.0, 3).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn symbol_examples() {
        let one = IndexFunction::constant(1.0).unwrap();
        let s = symbol(&[0.0], &[1.0], &one).unwrap();
        assert!((s.value - FRAC_PI_2).abs() < 1e-10);
        assert_eq!(symbol(&[0.0], &[0.0], &one).unwrap().value, 0.0);
        let bump = IndexFunction::rational_bump(0.6, 0.8, 1.0).unwrap();
        let q1 = symbol(&[0.3], &[1.7], &bump).unwrap();
        let q2 = symbol(&[0.3], &[3.4], &bump).unwrap();
        assert!((q2.value / q1.value - 2f64.powf(q1.beta)).abs() < 1e-12);
        assert_eq!(q1.value, q1.a_of_x * 1.7f64.powf(q1.beta));
    }

    #[test]
    fn fourier_check_examples() {
        let one = IndexFunction::constant(1.0).unwrap();
        assert!(symbol_fourier_check(&[0.0], 1.0, &one).unwrap() <= CROSS_CHECK_TOL);
        let b = IndexFunction::constant(1.5).unwrap();
        assert!(symbol_fourier_check(&[0.0], 3.0, &b).unwrap() <= CROSS_CHECK_TOL);
        assert!(symbol_fourier_check(&[0.0], 0.0, &b).is_err());
    }

    #[test]
    fn beta_infinity_examples() {
        assert_eq!(beta_infinity(&IndexFunction::constant(1.3).unwrap()), 1.3);
        let bump = IndexFunction::rational_bump(0.6, 0.8, 1.0).unwrap();
        assert!((beta_infinity(&bump) - 1.4).abs() < 1e-15);
        let probe = beta_infinity_probe(&bump, 1, 5.0, 200, &[1e2, 1e4, 1e6], 0.05).unwrap();
        assert!(probe.brackets_beta_max());
        let cl = IndexFunction::clamped(bump, 1.6).unwrap();
        assert_eq!(beta_infinity(&cl), 1.6);
    }

    #[test]
    fn generator_of_constant_vanishes() {
        struct One;
        impl TestFunction for One {
            fn dim(&self) -> usize {
                1
            }
            fn value(&self, _: &[f64]) -> f64 {
                1.0
            }
            fn gradient(&self, _: &[f64], out: &mut [f64]) {
                out[0] = 0.0;
            }
            fn ray(&self, _: &[f64], _: &[f64]) -> RayProfile {
                RayProfile::Oscillates { frequency: 0.0 }
            }
        }
        let b = IndexFunction::constant(1.2).unwrap();
        assert!(apply_generator(&One, &[0.4], &b).unwrap().abs() < 1e-12);
    }

    #[test]
    fn plane_waves_in_low_dimension() {
        let bump = IndexFunction::rational_bump(0.6, 0.8, 1.0).unwrap();
        for &xi in &[0.5, 1.0, 4.0] {
            assert!(plane_wave_check(&[0.2], &[xi], &bump).unwrap() < 1e-6);
        }
        let k = IndexFunction::constant(1.7).unwrap();
        assert!(plane_wave_check(&[0.1, -0.3], &[1.0, 2.0], &k).unwrap() < 1e-3);
    }

    #[test]
    fn lipschitz_examples() {
        let bump = IndexFunction::rational_bump(0.6, 0.8, 1.0).unwrap();
        let (l, _) = lipschitz_quadrature_check(&[0.3], &[0.3], &bump).unwrap();
        assert_eq!(l, 0.0);
        let (l, r) = lipschitz_quadrature_check(&[0.0], &[0.1], &bump).unwrap();
        assert!(l > 0.0 && l <= r);
        let (a, c) = (1.0 / 1.4, 1.0 / bump.eval(&[0.1]));
        let exact = 1.0 / (2.0 * a - 1.0) - 2.0 / (a + c - 1.0) + 1.0 / (2.0 * c - 1.0);
        assert!((l - exact).abs() < 1e-10 * exact);
        for b in [0.3, 0.6, 1.0, 1.4, 1.9] {
            let (q, closed) = growth_integral(b).unwrap();
            assert!((q - closed).abs() < 1e-10 * closed, "beta {b}: {q} vs {closed}");
        }
    }
}
