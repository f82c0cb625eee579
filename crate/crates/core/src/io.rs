//! CSV and binary persistence for jump streams and sample paths.
//!
//! Values are written through `f64` with shortest round-trip formatting, so both
//! widths read back bit-identically. The binary layouts are little-endian:
//!
//! ```text
//! stream: b"SLSTRM01" | dim u32 | seed u64 | epsilon f64 | horizon f64 | n u64 | n × (t, θ_1..θ_d, r) f64
//! path:   b"SLPATH01" | dim u32 | horizon f64 | n u64 | n × (t, x_1..x_d) f64, flag u8
//! ```
//!
//! CSV carries no header metadata, so readers take `(ε, T, seed)` or `T` from the caller.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::jumps::JumpStream;
use crate::path::SamplePath;
use crate::scalar::Scalar;

/// Leading bytes of a binary jump stream.
pub const STREAM_MAGIC: &[u8; 8] = b"SLSTRM01";
/// Leading bytes of a binary sample path.
pub const PATH_MAGIC: &[u8; 8] = b"SLPATH01";

fn fmt<T: Scalar>(v: T) -> String {
    format!("{}", v.to_f64_lossless())
}

fn parse<T: Scalar>(field: &str, line: u64) -> Result<T> {
    field
        .trim()
        .parse::<f64>()
        .map(T::lit)
        .map_err(|e| Error::Malformed(format!("line {line}: `{field}`: {e}")))
}

fn header(first: &str, dim: usize, last: &str) -> Vec<String> {
    let mut h = vec![first.to_string()];
    h.extend((1..=dim).map(|i| format!("x{i}")));
    h.push(last.to_string());
    h
}

/// Columns `t, x1..xd, r` with `x` the direction components.
pub fn write_stream_csv<T: Scalar, W: Write>(stream: &JumpStream<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header("t", stream.dim(), "r"))?;
    let mut row = Vec::with_capacity(stream.dim() + 2);
    for ev in stream.events() {
        row.clear();
        row.push(fmt(ev.t));
        row.extend(ev.theta.iter().map(|&v| fmt(v)));
        row.push(fmt(ev.r));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_stream_csv<T: Scalar, R: Read>(input: R, epsilon: T, horizon: T, seed: u64) -> Result<JumpStream<T>> {
    let mut rd = csv::Reader::from_reader(input);
    let cols = rd.headers()?.len();
    if cols < 3 {
        return Err(Error::Malformed("stream CSV needs t, at least one direction column and r".into()));
    }
    let dim = cols - 2;
    let mut events = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let t = parse(&rec[0], line)?;
        let theta = (1..=dim).map(|k| parse(&rec[k], line)).collect::<Result<Vec<T>>>()?;
        let r = parse(&rec[dim + 1], line)?;
        events.push((t, theta, r));
    }
    JumpStream::from_events(events, epsilon, horizon, dim, seed)
}

/// Columns `t, x1..xd, jump_flag` with the flag as `0`/`1`.
pub fn write_path_csv<T: Scalar, W: Write>(path: &SamplePath<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header("t", path.dim(), "jump_flag"))?;
    let mut row = Vec::with_capacity(path.dim() + 2);
    for (k, x) in path.states().enumerate() {
        row.clear();
        row.push(fmt(path.times()[k]));
        row.extend(x.iter().map(|&v| fmt(v)));
        row.push(if path.jump_flags()[k] { "1" } else { "0" }.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_path_csv<T: Scalar, R: Read>(input: R, horizon: T) -> Result<SamplePath<T>> {
    let mut rd = csv::Reader::from_reader(input);
    let cols = rd.headers()?.len();
    if cols < 3 {
        return Err(Error::Malformed("path CSV needs t, at least one coordinate and jump_flag".into()));
    }
    let dim = cols - 2;
    let (mut times, mut states, mut flags) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        times.push(parse(&rec[0], line)?);
        for k in 1..=dim {
            states.push(parse(&rec[k], line)?);
        }
        flags.push(match rec[dim + 1].trim() {
            "0" => false,
            "1" => true,
            other => return Err(Error::Malformed(format!("line {line}: jump_flag `{other}`"))),
        });
    }
    SamplePath::new(times, states, flags, horizon, dim)
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.inner
            .read_exact(&mut b)
            .map_err(|e| Error::Malformed(format!("truncated binary input: {e}")))?;
        Ok(b)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    fn magic(&mut self, want: &[u8; 8]) -> Result<()> {
        let got: [u8; 8] = self.bytes()?;
        if &got != want {
            return Err(Error::Malformed(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&got),
                String::from_utf8_lossy(want)
            )));
        }
        Ok(())
    }

    fn count(&mut self, per_item: usize) -> Result<usize> {
        let n = self.u64()?;
        // Refuse sizes that cannot be allocated rather than aborting.
        usize::try_from(n)
            .ok()
            .filter(|n| n.checked_mul(per_item.max(1)).is_some_and(|b| b < isize::MAX as usize / 8))
            .ok_or_else(|| Error::Malformed(format!("implausible record count {n}")))
    }
}

fn put_f64<T: Scalar>(buf: &mut Vec<u8>, v: T) {
    buf.extend_from_slice(&v.to_f64_lossless().to_le_bytes());
}

pub fn write_stream_binary<T: Scalar, W: Write>(stream: &JumpStream<T>, mut out: W) -> Result<()> {
    let mut buf = Vec::with_capacity(40 + stream.len() * (stream.dim() + 2) * 8);
    buf.extend_from_slice(STREAM_MAGIC);
    buf.extend_from_slice(&(stream.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&stream.seed().to_le_bytes());
    put_f64(&mut buf, stream.epsilon());
    put_f64(&mut buf, stream.horizon());
    buf.extend_from_slice(&(stream.len() as u64).to_le_bytes());
    for ev in stream.events() {
        put_f64(&mut buf, ev.t);
        for &v in ev.theta {
            put_f64(&mut buf, v);
        }
        put_f64(&mut buf, ev.r);
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_stream_binary<T: Scalar, R: Read>(input: R) -> Result<JumpStream<T>> {
    let mut r = Reader { inner: input };
    r.magic(STREAM_MAGIC)?;
    let dim = r.u32()? as usize;
    let seed = r.u64()?;
    let epsilon = T::lit(r.f64()?);
    let horizon = T::lit(r.f64()?);
    let n = r.count(dim + 2)?;
    let mut events = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        let t = T::lit(r.f64()?);
        let theta = (0..dim).map(|_| r.f64().map(T::lit)).collect::<Result<Vec<T>>>()?;
        let radius = T::lit(r.f64()?);
        events.push((t, theta, radius));
    }
    JumpStream::from_events(events, epsilon, horizon, dim, seed)
}

pub fn write_path_binary<T: Scalar, W: Write>(path: &SamplePath<T>, mut out: W) -> Result<()> {
    let mut buf = Vec::with_capacity(28 + path.len() * ((path.dim() + 1) * 8 + 1));
    buf.extend_from_slice(PATH_MAGIC);
    buf.extend_from_slice(&(path.dim() as u32).to_le_bytes());
    put_f64(&mut buf, path.horizon());
    buf.extend_from_slice(&(path.len() as u64).to_le_bytes());
    for (k, x) in path.states().enumerate() {
        put_f64(&mut buf, path.times()[k]);
        for &v in x {
            put_f64(&mut buf, v);
        }
        buf.push(path.jump_flags()[k] as u8);
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_path_binary<T: Scalar, R: Read>(input: R) -> Result<SamplePath<T>> {
    let mut r = Reader { inner: input };
    r.magic(PATH_MAGIC)?;
    let dim = r.u32()? as usize;
    let horizon = T::lit(r.f64()?);
    let n = r.count(dim + 1)?;
    let cap = n.min(1 << 20);
    let (mut times, mut states, mut flags) = (Vec::with_capacity(cap), Vec::with_capacity(cap * dim), Vec::with_capacity(cap));
    for _ in 0..n {
        times.push(T::lit(r.f64()?));
        for _ in 0..dim {
            states.push(T::lit(r.f64()?));
        }
        let [f] = r.bytes::<1>()?;
        flags.push(match f {
            0 => false,
            1 => true,
            other => return Err(Error::Malformed(format!("jump flag byte {other}"))),
        });
    }
    SamplePath::new(times, states, flags, horizon, dim)
}

/// Columns `alpha, c_alpha`.
pub fn write_c_alpha_csv<W: Write>(table: &[(f64, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alpha", "c_alpha"])?;
    for &(a, c) in table {
        w.write_record([a.to_string(), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_c_alpha_csv<R: Read>(input: R) -> Result<Vec<(f64, f64)>> {
    let mut rd = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::Malformed(format!("line {}: expected 2 columns", i + 2)));
        }
        out.push((parse(&rec[0], i as u64 + 2)?, parse(&rec[1], i as u64 + 2)?));
    }
    Ok(out)
}
