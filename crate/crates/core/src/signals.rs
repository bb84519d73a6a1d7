//! Benchmark and chaotic signal generators, forecast-step selection and
//! supervised train/validation/test splits.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;

/// A scalar series sampled every `dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesRecord {
    pub values: Vec<f64>,
    pub dt: f64,
    pub name: String,
    pub params: BTreeMap<String, f64>,
}

/// A three-dimensional trajectory sampled every `dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<[f64; 3]>,
    pub dt: f64,
    pub name: String,
    pub params: BTreeMap<String, f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The `x` component, the scalar observable used for reconstruction.
    pub fn observable(&self) -> Vec<f64> {
        self.points.iter().map(|p| p[0]).collect()
    }

    /// Every `factor`-th point, starting from the first.
    pub fn downsample(&self, factor: usize) -> Trajectory {
        let factor = factor.max(1);
        Trajectory {
            points: self.points.iter().step_by(factor).copied().collect(),
            dt: self.dt * factor as f64,
            name: self.name.clone(),
            params: self.params.clone(),
        }
    }

    pub fn to_record(&self) -> TimeSeriesRecord {
        TimeSeriesRecord {
            values: self.observable(),
            dt: self.dt,
            name: self.name.clone(),
            params: self.params.clone(),
        }
    }
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive, got {v}")))
    }
}

// ---------------------------------------------------------------------------
// Mackey-Glass

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MackeyGlassParams {
    pub n: usize,
    pub tau: f64,
    pub alpha: f64,
    pub beta: f64,
    pub dt: f64,
    pub x0: f64,
}

impl Default for MackeyGlassParams {
    fn default() -> Self {
        Self {
            n: 150_000,
            tau: 17.0,
            alpha: 0.2,
            beta: 0.1,
            dt: 0.1,
            x0: 1.2,
        }
    }
}

/// Fixed-step Euler integration of the Mackey-Glass delay equation with a
/// constant history `x0` for `t <= 0`. `values[0] = x0`.
pub fn gen_mackey_glass(p: &MackeyGlassParams) -> Result<TimeSeriesRecord> {
    if p.n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    check_positive("dt", p.dt)?;
    check_positive("tau", p.tau)?;
    let lag = (p.tau / p.dt).round().max(1.0) as usize;
    // ring[k % lag] holds x at step k - lag once overwritten
    let mut ring = vec![p.x0; lag];
    let mut values = Vec::with_capacity(p.n);
    let mut x = p.x0;
    for k in 0..p.n {
        values.push(x);
        let slot = k % lag;
        let delayed = ring[slot];
        ring[slot] = x;
        x += p.dt * (p.alpha * delayed / (1.0 + delayed.powi(10)) - p.beta * x);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("mackey-glass series"));
    }
    Ok(TimeSeriesRecord {
        values,
        dt: p.dt,
        name: "mackey_glass".into(),
        params: params(&[
            ("n", p.n as f64),
            ("tau", p.tau),
            ("alpha", p.alpha),
            ("beta", p.beta),
            ("dt", p.dt),
            ("x0", p.x0),
        ]),
    })
}

// ---------------------------------------------------------------------------
// NARMA

/// How the NARMA right-hand side is mapped to the next output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NarmaVariant {
    /// The plain recursion. For `r = 20` and inputs on `[0, 1]` it blows up
    /// after a few dozen steps.
    Raw,
    /// The right-hand side passed through `tanh`, which keeps the series
    /// bounded for any input.
    #[default]
    Saturated,
}

/// Input/output pairs of a NARMA system: `targets[t] = y(t + 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarmaSeries {
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
    pub order: usize,
    pub variant: NarmaVariant,
}

/// Runs the order-`r` NARMA recursion on `inputs` from `y(0) = 0`, with
/// `x` and `y` taken as zero before time 0. Returns `y(1), ..., y(n)`.
pub fn narma_response(inputs: &[f64], r: usize, variant: NarmaVariant) -> Result<Vec<f64>> {
    if r == 0 {
        return Err(Error::invalid("r", "must be at least 1"));
    }
    let n = inputs.len();
    // y[t] for t = 0..=n
    let mut y = vec![0.0; n + 1];
    for t in 0..n {
        // summed directly, a running sum would drift by rounding
        let window: f64 = (0..=r.min(t)).map(|i| y[t - i]).sum();
        let x_lag = if t >= r { inputs[t - r] } else { 0.0 };
        let rhs = 0.3 * y[t] + 0.05 * y[t] * window + 1.5 * x_lag * inputs[t] + 0.1;
        y[t + 1] = match variant {
            NarmaVariant::Raw => rhs,
            NarmaVariant::Saturated => rhs.tanh(),
        };
    }
    y.remove(0);
    Ok(y)
}

/// NARMA pairs driven by i.i.d. uniform `[0, 1]` inputs.
pub fn gen_narma(n: usize, r: usize, seed: u64, variant: NarmaVariant) -> Result<NarmaSeries> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    let mut rng = stream(seed, "narma-input");
    let inputs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let targets = narma_response(&inputs, r, variant)?;
    if targets.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("narma series"));
    }
    Ok(NarmaSeries {
        inputs,
        targets,
        order: r,
        variant,
    })
}

// ---------------------------------------------------------------------------
// Multiple superimposed oscillator

pub const MSO_FREQUENCIES: [f64; 6] = [0.2, 0.311, 0.42, 0.51, 0.63, 0.74];

pub fn gen_mso(n: usize, dt: f64) -> Result<TimeSeriesRecord> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    check_positive("dt", dt)?;
    let values = (0..n)
        .map(|k| {
            let t = k as f64 * dt;
            MSO_FREQUENCIES.iter().map(|f| (f * t).sin()).sum()
        })
        .collect();
    Ok(TimeSeriesRecord {
        values,
        dt,
        name: "mso".into(),
        params: params(&[("n", n as f64), ("dt", dt)]),
    })
}

// ---------------------------------------------------------------------------
// ODE systems

/// One classical fourth-order Runge-Kutta step.
pub fn rk4_step(f: impl Fn(&[f64; 3]) -> [f64; 3], s: &[f64; 3], dt: f64) -> [f64; 3] {
    let add =
        |a: &[f64; 3], b: &[f64; 3], h: f64| [a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2]];
    let k1 = f(s);
    let k2 = f(&add(s, &k1, dt / 2.0));
    let k3 = f(&add(s, &k2, dt / 2.0));
    let k4 = f(&add(s, &k3, dt));
    let mut out = *s;
    for i in 0..3 {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrates `steps` RK4 steps and returns `steps + 1` points including `init`.
pub fn rk4_integrate(
    f: impl Fn(&[f64; 3]) -> [f64; 3],
    init: [f64; 3],
    dt: f64,
    steps: usize,
) -> Result<Vec<[f64; 3]>> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut s = init;
    out.push(s);
    for _ in 0..steps {
        s = rk4_step(&f, &s, dt);
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("trajectory"));
        }
        out.push(s);
    }
    Ok(out)
}

pub fn lorenz_rhs(sigma: f64, rho: f64, beta: f64) -> impl Fn(&[f64; 3]) -> [f64; 3] + Copy {
    move |s| {
        [
            sigma * (s[1] - s[0]),
            s[0] * (rho - s[2]) - s[1],
            s[0] * s[1] - beta * s[2],
        ]
    }
}

pub fn moore_spiegel_rhs(t: f64, r: f64) -> impl Fn(&[f64; 3]) -> [f64; 3] + Copy {
    move |s| {
        [
            s[1],
            s[2],
            -s[2] - (t - r + r * s[0] * s[0]) * s[1] - t * s[0],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LorenzParams {
    pub n: usize,
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub dt: f64,
    pub init: [f64; 3],
    pub transient: usize,
}

impl Default for LorenzParams {
    fn default() -> Self {
        Self {
            n: 20_000,
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
            dt: 0.01,
            init: [1.0, 1.0, 1.0],
            transient: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MooreSpiegelParams {
    pub n: usize,
    pub t_param: f64,
    pub r_param: f64,
    pub dt: f64,
    pub init: [f64; 3],
    pub transient: usize,
}

impl Default for MooreSpiegelParams {
    fn default() -> Self {
        Self {
            n: 20_000,
            t_param: 10.0,
            r_param: 100.0,
            dt: 0.01,
            init: [0.1, 0.0, 0.0],
            transient: 1000,
        }
    }
}

fn integrate_after_transient(
    f: impl Fn(&[f64; 3]) -> [f64; 3],
    init: [f64; 3],
    dt: f64,
    n: usize,
    transient: usize,
) -> Result<Vec<[f64; 3]>> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    check_positive("dt", dt)?;
    let mut pts = rk4_integrate(f, init, dt, transient + n - 1)?;
    pts.drain(..transient);
    Ok(pts)
}

/// Lorenz trajectory (RK4, fixed step), with the first `transient` steps
/// discarded.
pub fn gen_lorenz(p: &LorenzParams) -> Result<Trajectory> {
    let points = integrate_after_transient(
        lorenz_rhs(p.sigma, p.rho, p.beta),
        p.init,
        p.dt,
        p.n,
        p.transient,
    )?;
    Ok(Trajectory {
        points,
        dt: p.dt,
        name: "lorenz".into(),
        params: params(&[
            ("n", p.n as f64),
            ("sigma", p.sigma),
            ("rho", p.rho),
            ("beta", p.beta),
            ("dt", p.dt),
            ("transient", p.transient as f64),
        ]),
    })
}

/// Moore-Spiegel trajectory (RK4, fixed step), with the first `transient`
/// steps discarded.
pub fn gen_moore_spiegel(p: &MooreSpiegelParams) -> Result<Trajectory> {
    let points = integrate_after_transient(
        moore_spiegel_rhs(p.t_param, p.r_param),
        p.init,
        p.dt,
        p.n,
        p.transient,
    )?;
    Ok(Trajectory {
        points,
        dt: p.dt,
        name: "moore_spiegel".into(),
        params: params(&[
            ("n", p.n as f64),
            ("t_param", p.t_param),
            ("r_param", p.r_param),
            ("dt", p.dt),
            ("transient", p.transient as f64),
        ]),
    })
}

// ---------------------------------------------------------------------------
// Forecast step and splits

/// Sample autocorrelation at `lag` (biased estimator, normalised by the lag-0
/// sum).
fn acf_at(centered: &[f64], denom: f64, lag: usize) -> f64 {
    let n = centered.len();
    let s: f64 = centered[..n - lag]
        .iter()
        .zip(&centered[lag..])
        .map(|(a, b)| a * b)
        .sum();
    s / denom
}

/// First zero crossing of the sample autocorrelation, linearly interpolated
/// between neighbouring lags and rounded to the nearest lag (at least 1).
pub fn autocorr_first_zero(x: &[f64]) -> Result<usize> {
    autocorr_first_below(x, 0.0)
}

/// First lag at which the sample autocorrelation drops to `level`
/// (interpolated and rounded as in [`autocorr_first_zero`]). With
/// `level = 1/e` this is the usual decorrelation time.
pub fn autocorr_first_below(x: &[f64], level: f64) -> Result<usize> {
    let n = x.len();
    if n < 3 {
        return Err(Error::SeriesTooShort {
            len: n,
            m: 1,
            tau: 1,
        });
    }
    if !(level < 1.0) {
        return Err(Error::invalid("level", "must be below 1"));
    }
    let max_lag = n / 2;
    let m = crate::linalg::pairwise_sum(x) / n as f64;
    let centered: Vec<f64> = x.iter().map(|v| v - m).collect();
    let denom: f64 = centered.iter().map(|v| v * v).sum();
    if !(denom > 1e-300) {
        return Err(Error::NoZeroCrossing { max_lag });
    }
    let mut prev = 1.0;
    for lag in 1..=max_lag {
        let r = acf_at(&centered, denom, lag);
        if r <= level {
            let frac = (prev - level) / (prev - r);
            let crossing = (lag - 1) as f64 + frac;
            return Ok((crossing.round() as usize).max(1));
        }
        prev = r;
    }
    Err(Error::NoZeroCrossing { max_lag })
}

/// Embedding delay: the lag where the autocorrelation falls to `1/e`.
pub fn decorrelation_lag(x: &[f64]) -> Result<usize> {
    autocorr_first_below(x, (-1.0f64).exp())
}

/// Inputs paired with targets for one contiguous segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Segment {
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
    /// Inputs between the previous segment's last input and this segment's
    /// first one (they have no target inside the previous segment). Closed
    /// loop runs pass through them so the input stream stays contiguous.
    #[serde(default)]
    pub lead_in: Vec<f64>,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupervisedSplit {
    pub train: Segment,
    pub validation: Segment,
    pub test: Segment,
    pub tau_f: usize,
}

fn segment_lengths(n: usize, fractions: [f64; 3]) -> Result<[usize; 3]> {
    if fractions.iter().any(|f| !(*f >= 0.0) || !f.is_finite()) {
        return Err(Error::invalid("fractions", "must be non-negative"));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(
            "fractions",
            format!("must sum to 1, got {total}"),
        ));
    }
    let a = ((n as f64) * fractions[0] + 1e-9).floor() as usize;
    let b = ((n as f64) * fractions[1] + 1e-9).floor() as usize;
    let a = a.min(n);
    let b = b.min(n - a);
    Ok([a, b, n - a - b])
}

const SEGMENT_NAMES: [&str; 3] = ["train", "validation", "test"];

/// Cuts `x` into three contiguous chronological segments and, inside each,
/// pairs `x[t]` with `x[t + tau_f]`. The last `tau_f` samples of a segment
/// have no target and are dropped from its inputs.
pub fn split_dataset(x: &[f64], tau_f: usize, fractions: [f64; 3]) -> Result<SupervisedSplit> {
    if tau_f == 0 {
        return Err(Error::invalid("tau_f", "must be at least 1"));
    }
    let lens = segment_lengths(x.len(), fractions)?;
    let mut start = 0;
    let mut segs = Vec::with_capacity(3);
    for (i, &len) in lens.iter().enumerate() {
        if len <= tau_f {
            return Err(Error::SegmentTooShort {
                segment: SEGMENT_NAMES[i],
                len,
                min: tau_f + 1,
            });
        }
        let seg = &x[start..start + len];
        let lead_in = if start == 0 {
            Vec::new()
        } else {
            x[start - tau_f..start].to_vec()
        };
        segs.push(Segment {
            inputs: seg[..len - tau_f].to_vec(),
            targets: seg[tau_f..].to_vec(),
            lead_in,
        });
        start += len;
    }
    let test = segs.pop().unwrap_or_default();
    let validation = segs.pop().unwrap_or_default();
    let train = segs.pop().unwrap_or_default();
    Ok(SupervisedSplit {
        train,
        validation,
        test,
        tau_f,
    })
}

/// Splits aligned input/target sequences (e.g. a NARMA system) into three
/// contiguous segments; `tau_f` is recorded as 1.
pub fn split_pairs(
    inputs: &[f64],
    targets: &[f64],
    fractions: [f64; 3],
) -> Result<SupervisedSplit> {
    if inputs.len() != targets.len() {
        return Err(Error::LengthMismatch {
            expected: inputs.len(),
            got: targets.len(),
        });
    }
    let lens = segment_lengths(inputs.len(), fractions)?;
    let mut start = 0;
    let mut segs = Vec::with_capacity(3);
    for (i, &len) in lens.iter().enumerate() {
        if len == 0 {
            return Err(Error::SegmentTooShort {
                segment: SEGMENT_NAMES[i],
                len,
                min: 1,
            });
        }
        segs.push(Segment {
            inputs: inputs[start..start + len].to_vec(),
            targets: targets[start..start + len].to_vec(),
            lead_in: Vec::new(),
        });
        start += len;
    }
    let test = segs.pop().unwrap_or_default();
    let validation = segs.pop().unwrap_or_default();
    let train = segs.pop().unwrap_or_default();
    Ok(SupervisedSplit {
        train,
        validation,
        test,
        tau_f: 1,
    })
}

// ---------------------------------------------------------------------------
// CSV persistence

#[derive(Serialize, Deserialize)]
struct Header {
    name: String,
    dt: f64,
    params: BTreeMap<String, f64>,
}

fn write_header<W: Write>(
    w: &mut W,
    name: &str,
    dt: f64,
    params: &BTreeMap<String, f64>,
) -> Result<()> {
    let h = Header {
        name: name.to_string(),
        dt,
        params: params.clone(),
    };
    writeln!(w, "# {}", serde_json::to_string(&h)?)?;
    Ok(())
}

/// Writes `t,value` rows preceded by a `#` comment line holding the
/// generator parameters as JSON.
pub fn write_series_csv<W: Write>(mut w: W, rec: &TimeSeriesRecord) -> Result<()> {
    write_header(&mut w, &rec.name, rec.dt, &rec.params)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "value"])?;
    for (k, v) in rec.values.iter().enumerate() {
        out.serialize((k as f64 * rec.dt, v))?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `t,x,y,z` rows with the same comment header as
/// [`write_series_csv`].
pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &Trajectory) -> Result<()> {
    write_header(&mut w, &traj.name, traj.dt, &traj.params)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "x", "y", "z"])?;
    for (k, p) in traj.points.iter().enumerate() {
        out.serialize((k as f64 * traj.dt, p[0], p[1], p[2]))?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `t,c1,c2,c3` rows: a reconstructed trajectory whose coordinates
/// are not the system variables (projected reservoir states, embeddings).
pub fn write_components_csv<W: Write>(mut w: W, traj: &Trajectory) -> Result<()> {
    write_header(&mut w, &traj.name, traj.dt, &traj.params)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "c1", "c2", "c3"])?;
    for (k, p) in traj.points.iter().enumerate() {
        out.serialize((k as f64 * traj.dt, p[0], p[1], p[2]))?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `t,input,target` rows of a NARMA system; the order and variant go
/// into the comment header.
pub fn write_narma_csv<W: Write>(mut w: W, series: &NarmaSeries) -> Result<()> {
    let saturated = f64::from(u8::from(series.variant == NarmaVariant::Saturated));
    let p = params(&[("order", series.order as f64), ("saturated", saturated)]);
    write_header(&mut w, "narma", 1.0, &p)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "input", "target"])?;
    for (k, (u, y)) in series.inputs.iter().zip(&series.targets).enumerate() {
        out.serialize((k, u, y))?;
    }
    out.flush()?;
    Ok(())
}

/// A series file read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub enum SeriesFile {
    Scalar(TimeSeriesRecord),
    Trajectory(Trajectory),
    Narma(NarmaSeries),
}

impl SeriesFile {
    /// The scalar observable (the `x` column for trajectories).
    pub fn observable(&self) -> Vec<f64> {
        match self {
            SeriesFile::Scalar(r) => r.values.clone(),
            SeriesFile::Trajectory(t) => t.observable(),
            SeriesFile::Narma(n) => n.targets.clone(),
        }
    }

    pub fn dt(&self) -> f64 {
        match self {
            SeriesFile::Scalar(r) => r.dt,
            SeriesFile::Trajectory(t) => t.dt,
            SeriesFile::Narma(_) => 1.0,
        }
    }
}

/// Reads a file written by [`write_series_csv`], [`write_trajectory_csv`],
/// [`write_components_csv`] or [`write_narma_csv`].
/// The comment header is optional; without it `dt` is inferred from the `t`
/// column.
pub fn read_series_csv<R: BufRead>(mut r: R) -> Result<SeriesFile> {
    let mut body = String::new();
    let mut header: Option<Header> = None;
    let mut line = String::new();
    while r.read_line(&mut line)? > 0 {
        if let Some(rest) = line.trim_start().strip_prefix('#') {
            if header.is_none() {
                header = serde_json::from_str(rest.trim()).ok();
            }
        } else {
            body.push_str(&line);
        }
        line.clear();
    }
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let cols: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != cols.len() {
            return Err(Error::Parse(format!(
                "expected {} columns, got {}",
                cols.len(),
                row.len()
            )));
        }
        rows.push(row);
    }
    let dt = match &header {
        Some(h) => h.dt,
        None if rows.len() >= 2 => rows[1][0] - rows[0][0],
        None => 1.0,
    };
    let (name, params) = header
        .map(|h| (h.name, h.params))
        .unwrap_or_else(|| ("series".into(), BTreeMap::new()));
    match cols
        .iter()
        .map(String::as_str)
        .collect::<Vec<_>>()
        .as_slice()
    {
        ["t", "value"] => Ok(SeriesFile::Scalar(TimeSeriesRecord {
            values: rows.iter().map(|r| r[1]).collect(),
            dt,
            name,
            params,
        })),
        ["t", "x", "y", "z"] | ["t", "c1", "c2", "c3"] => Ok(SeriesFile::Trajectory(Trajectory {
            points: rows.iter().map(|r| [r[1], r[2], r[3]]).collect(),
            dt,
            name,
            params,
        })),
        ["t", "input", "target"] => Ok(SeriesFile::Narma(NarmaSeries {
            inputs: rows.iter().map(|r| r[1]).collect(),
            targets: rows.iter().map(|r| r[2]).collect(),
            order: params.get("order").copied().unwrap_or(0.0) as usize,
            variant: match params.get("saturated") {
                Some(v) if *v == 0.0 => NarmaVariant::Raw,
                _ => NarmaVariant::Saturated,
            },
        })),
        other => Err(Error::Parse(format!("unrecognised columns {other:?}"))),
    }
}
