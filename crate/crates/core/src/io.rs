//! Text formats for trajectories, parameters, error curves and heatmaps.
//!
//! Reals are written with 17 significant digits (`{:.16e}`), which
//! round-trips every `f64` exactly.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::dynamics::{NetworkParams, StateVector, Trajectory};
use crate::error::{Error, Result};
use crate::metrics::{BlowUpReport, ErrorCurve};
use crate::scalar::Real;

pub fn fmt_real<T: Real>(v: T) -> String {
    format!("{:.16e}", v.to_f64_lossy())
}

fn parse_real(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("not a number: `{s}`")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("not a non-negative integer: `{s}`")))
}

fn lines<R: BufRead>(r: R) -> Result<Vec<String>> {
    Ok(r.lines().collect::<std::io::Result<Vec<_>>>()?)
}

/// Header `t,x0,...,x{n-1}` then one row per state.
pub fn write_trajectory_csv<T: Real, W: Write>(mut w: W, traj: &Trajectory<T>) -> Result<()> {
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((0..traj.n()).map(|i| format!("x{i}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for (k, s) in traj.states().iter().enumerate() {
        write!(w, "{}", traj.t0() + k)?;
        for &v in s.iter() {
            write!(w, ",{}", fmt_real(v))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_trajectory_csv<R: BufRead>(r: R) -> Result<Trajectory<f64>> {
    let lines = lines(r)?;
    let header = lines.first().ok_or_else(|| Error::Parse("empty trajectory file".into()))?;
    let n = header.split(',').count().saturating_sub(1);
    if !header.starts_with("t,") || n == 0 {
        return Err(Error::Parse(format!("bad trajectory header `{header}`")));
    }
    let mut t0 = None;
    let mut states = Vec::new();
    for line in lines[1..].iter().filter(|l| !l.is_empty()) {
        let mut fields = line.split(',');
        let t = parse_usize(fields.next().unwrap_or_default())?;
        t0.get_or_insert(t);
        let values = fields.map(parse_real).collect::<Result<Vec<_>>>()?;
        if values.len() != n {
            return Err(Error::Parse(format!("row at t={t} has {} values, expected {n}", values.len())));
        }
        states.push(StateVector::new(values)?);
    }
    Trajectory::from_states(states, t0.unwrap_or(0))
}

/// `n`, then `n` bias lines, then `n` weight rows.
pub fn write_params<T: Real, W: Write>(mut w: W, params: &NetworkParams<T>) -> Result<()> {
    writeln!(w, "{}", params.n())?;
    for &b in params.bias() {
        writeln!(w, "{}", fmt_real(b))?;
    }
    for i in 0..params.n() {
        let row: Vec<String> = params.row(i).iter().map(|&v| fmt_real(v)).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn read_params<R: BufRead>(r: R) -> Result<NetworkParams<f64>> {
    let lines = lines(r)?;
    let mut it = lines.iter().filter(|l| !l.trim().is_empty());
    let n = parse_usize(it.next().ok_or_else(|| Error::Parse("empty params file".into()))?)?;
    let missing = || Error::Parse("params file truncated".into());
    let b = (0..n)
        .map(|_| parse_real(it.next().ok_or_else(missing)?))
        .collect::<Result<Vec<_>>>()?;
    let mut w = Vec::with_capacity(n * n);
    for _ in 0..n {
        let row = it
            .next()
            .ok_or_else(missing)?
            .split_whitespace()
            .map(parse_real)
            .collect::<Result<Vec<_>>>()?;
        if row.len() != n {
            return Err(Error::Parse(format!("weight row has {} entries, expected {n}", row.len())));
        }
        w.extend(row);
    }
    if it.next().is_some() {
        return Err(Error::Parse("trailing data in params file".into()));
    }
    NetworkParams::new(n, w, b)
}

/// Header `t,eps_percent`.
pub fn write_error_curve_csv<W: Write>(mut w: W, curve: &ErrorCurve) -> Result<()> {
    writeln!(w, "t,eps_percent")?;
    for (k, &e) in curve.eps.iter().enumerate() {
        writeln!(w, "{},{}", curve.t0 + k, fmt_real(e))?;
    }
    Ok(())
}

pub fn read_error_curve_csv<R: BufRead>(r: R) -> Result<ErrorCurve> {
    let lines = lines(r)?;
    if lines.first().map(String::as_str) != Some("t,eps_percent") {
        return Err(Error::Parse("bad error-curve header".into()));
    }
    let mut t0 = None;
    let mut eps = Vec::new();
    for line in lines[1..].iter().filter(|l| !l.is_empty()) {
        let (t, e) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("bad error-curve row `{line}`")))?;
        t0.get_or_insert(parse_usize(t)?);
        eps.push(parse_real(e)?);
    }
    Ok(ErrorCurve::new(eps, t0.unwrap_or(0)))
}

pub const BLOW_UP_HEADER: &str = "threshold,blow_up_step,growth_rate,saturated";

/// One row in [`BLOW_UP_HEADER`] layout; absent values are empty fields.
pub fn blow_up_row(report: &BlowUpReport) -> String {
    format!(
        "{},{},{},{}",
        fmt_real(report.threshold),
        report.blow_up_step.map(|s| s.to_string()).unwrap_or_default(),
        report.growth_rate.map(fmt_real).unwrap_or_default(),
        report.saturated
    )
}

pub fn write_blow_up_csv<W: Write>(mut w: W, report: &BlowUpReport) -> Result<()> {
    writeln!(w, "{BLOW_UP_HEADER}")?;
    writeln!(w, "{}", blow_up_row(report))?;
    Ok(())
}

pub fn parse_blow_up_row(row: &str) -> Result<BlowUpReport> {
    let fields: Vec<&str> = row.trim().split(',').collect();
    let [threshold, step, rate, saturated] = fields[..] else {
        return Err(Error::Parse(format!("bad blow-up row `{row}`")));
    };
    Ok(BlowUpReport {
        threshold: parse_real(threshold)?,
        blow_up_step: (!step.is_empty()).then(|| parse_usize(step)).transpose()?,
        growth_rate: (!rate.is_empty()).then(|| parse_real(rate)).transpose()?,
        saturated: saturated
            .parse()
            .map_err(|_| Error::Parse(format!("bad saturated flag `{saturated}`")))?,
    })
}

/// Header `epoch,loss`.
pub fn write_loss_csv<T: Real, W: Write>(mut w: W, history: &[T]) -> Result<()> {
    writeln!(w, "epoch,loss")?;
    for (epoch, &l) in history.iter().enumerate() {
        writeln!(w, "{epoch},{}", fmt_real(l))?;
    }
    Ok(())
}

/// `key=value` lines in key order.
pub fn spec_echo(entries: &BTreeMap<String, String>) -> String {
    entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

/// Map an activity in [-1, 1] to a gray level: -1 -> 0, +1 -> 255. Values
/// outside the range are clamped.
pub fn gray_level(v: f64) -> u8 {
    ((v.clamp(-1.0, 1.0) + 1.0) * 127.5).round() as u8
}

/// Binary PGM (P5) with time along x and component along y: one pixel per
/// `(t, i)`.
pub fn write_heatmap<W: Write>(mut w: W, states: &[Vec<f64>]) -> Result<()> {
    let width = states.len();
    let height = states.first().map_or(0, Vec::len);
    write!(w, "P5\n{width} {height}\n255\n")?;
    let mut pixels = Vec::with_capacity(width * height);
    for i in 0..height {
        pixels.extend(states.iter().map(|s| gray_level(s[i])));
    }
    w.write_all(&pixels)?;
    Ok(())
}

pub fn write_trajectory_heatmap<T: Real, W: Write>(w: W, traj: &Trajectory<T>) -> Result<()> {
    let states: Vec<Vec<f64>> = traj
        .states()
        .iter()
        .map(|s| s.iter().map(|v| v.to_f64_lossy()).collect())
        .collect();
    write_heatmap(w, &states)
}

/// Heatmap of `test - reference`.
pub fn write_difference_heatmap<T: Real, W: Write>(w: W, test: &Trajectory<T>, reference: &Trajectory<T>) -> Result<()> {
    let states: Vec<Vec<f64>> = test
        .states()
        .iter()
        .zip(reference.states())
        .map(|(y, x)| y.iter().zip(x.iter()).map(|(&a, &b)| (a - b).to_f64_lossy()).collect())
        .collect();
    write_heatmap(w, &states)
}
