//! Nonlinear time-series analysis: delay embedding, false nearest
//! neighbours, correlation dimension and largest Lyapunov exponent.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{mean_std, squared_distance};
use crate::rng::stream;

/// A point cloud stored row-major, one `m`-dimensional point per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    data: Vec<f64>,
    pub m: usize,
    pub tau_e: usize,
}

impl Embedding {
    /// Wraps already-reconstructed points (e.g. an ODE trajectory).
    pub fn from_points<const D: usize>(points: &[[f64; D]]) -> Self {
        Self {
            data: points.iter().flat_map(|p| p.iter().copied()).collect(),
            m: D,
            tau_e: 1,
        }
    }

    pub fn from_rows(rows: &nalgebra::DMatrix<f64>) -> Self {
        let m = rows.ncols();
        let mut data = Vec::with_capacity(rows.len());
        for r in rows.row_iter() {
            data.extend(r.iter().copied());
        }
        Self { data, m, tau_e: 1 }
    }

    pub fn len(&self) -> usize {
        if self.m == 0 {
            0
        } else {
            self.data.len() / self.m
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    /// Column `j` as a series.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.data[i * self.m + j]).collect()
    }

    /// The first `n` points.
    pub fn truncate(&self, n: usize) -> Embedding {
        let n = n.min(self.len());
        Embedding {
            data: self.data[..n * self.m].to_vec(),
            m: self.m,
            tau_e: self.tau_e,
        }
    }
}

/// `point(i)[j] = x[i + j * tau_e]`, `N - (m - 1) tau_e` rows.
pub fn delay_embed(x: &[f64], m: usize, tau_e: usize) -> Result<Embedding> {
    if m == 0 || tau_e == 0 {
        return Err(Error::invalid("m/tau_e", "must both be at least 1"));
    }
    let span = (m - 1) * tau_e;
    if x.len() <= span {
        return Err(Error::SeriesTooShort {
            len: x.len(),
            m,
            tau: tau_e,
        });
    }
    let rows = x.len() - span;
    let mut data = Vec::with_capacity(rows * m);
    for i in 0..rows {
        for j in 0..m {
            data.push(x[i + j * tau_e]);
        }
    }
    Ok(Embedding { data, m, tau_e })
}

/// Least-squares line through `(x, y)`; returns `(slope, intercept)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn nearest_neighbor(e: &Embedding, i: usize, limit: usize, exclude: usize) -> Option<(usize, f64)> {
    let p = e.point(i);
    let mut best: Option<(usize, f64)> = None;
    for j in 0..limit {
        if j.abs_diff(i) <= exclude {
            continue;
        }
        let d = squared_distance(p, e.point(j));
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((j, d));
        }
    }
    best
}

// ---------------------------------------------------------------------------
// False nearest neighbours

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FnnConfig {
    /// Distance-ratio threshold for the first criterion.
    pub r_tol: f64,
    /// Attractor-size threshold for the second criterion; `None` disables it.
    pub a_tol: Option<f64>,
    /// A dimension is accepted once the false fraction drops below this.
    pub threshold: f64,
    /// At most this many leading samples are used.
    pub max_points: usize,
}

impl Default for FnnConfig {
    fn default() -> Self {
        Self {
            r_tol: 10.0,
            a_tol: Some(2.0),
            threshold: 0.01,
            max_points: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnnResult {
    /// Smallest dimension whose false fraction is below the threshold, or
    /// `m_max` when none is.
    pub dimension: usize,
    /// `fractions[k]` is the false fraction for `m = k + 1`.
    pub fractions: Vec<f64>,
    pub converged: bool,
}

/// False-nearest-neighbour fractions for `m = 1..=m_max`.
pub fn fnn_analysis(x: &[f64], tau_e: usize, m_max: usize, cfg: &FnnConfig) -> Result<FnnResult> {
    if m_max < 2 {
        return Err(Error::invalid("m_max", "must be at least 2"));
    }
    let x = &x[..x.len().min(cfg.max_points)];
    let (_, r_a) = mean_std(x);
    let mut fractions = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let ext = delay_embed(x, m + 1, tau_e)?;
        let base = delay_embed(x, m, tau_e)?.truncate(ext.len());
        let n = base.len();
        let verdicts: Vec<Option<bool>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let (j, d2) = nearest_neighbor(&base, i, n, 0)?;
                if d2 <= 0.0 {
                    return None;
                }
                let extra = (ext.point(i)[m] - ext.point(j)[m]).abs();
                let first = extra / d2.sqrt() > cfg.r_tol;
                let second = cfg
                    .a_tol
                    .is_some_and(|a| (d2 + extra * extra).sqrt() / r_a > a);
                Some(first || second)
            })
            .collect();
        let valid: Vec<bool> = verdicts.into_iter().flatten().collect();
        if valid.is_empty() {
            return Err(Error::NoNeighbors);
        }
        fractions.push(valid.iter().filter(|&&f| f).count() as f64 / valid.len() as f64);
    }
    let found = fractions.iter().position(|&f| f < cfg.threshold);
    Ok(FnnResult {
        dimension: found.map_or(m_max, |k| k + 1),
        fractions,
        converged: found.is_some(),
    })
}

/// Smallest sufficient embedding dimension; `NoConvergence` when the false
/// fraction never drops below the threshold.
pub fn false_nearest_neighbors(x: &[f64], tau_e: usize, m_max: usize) -> Result<usize> {
    let r = fnn_analysis(x, tau_e, m_max, &FnnConfig::default())?;
    if r.converged {
        Ok(r.dimension)
    } else {
        log::warn!("false nearest neighbours did not converge up to m = {m_max}");
        Err(Error::NoConvergence { m_max })
    }
}

// ---------------------------------------------------------------------------
// Correlation sum and D2

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSumCurve {
    pub epsilons: Vec<f64>,
    pub c2: Vec<f64>,
    /// Admissible pairs closer than each epsilon.
    pub counts: Vec<u64>,
    pub total_pairs: u64,
    pub m: usize,
    pub tau_c: usize,
}

/// Number of pairs `j < i` with `i - j > tau_c`.
pub fn admissible_pairs(n: usize, tau_c: usize) -> u64 {
    if n <= tau_c + 1 {
        return 0;
    }
    let k = (n - tau_c - 1) as u64;
    k * (k + 1) / 2
}

/// Correlation sum with a Theiler window: the fraction of admissible pairs
/// (`|i - j| > tau_c`) whose Euclidean distance is below each epsilon.
pub fn correlation_sum(
    points: &Embedding,
    epsilons: &[f64],
    tau_c: usize,
) -> Result<CorrelationSumCurve> {
    if epsilons.is_empty() || epsilons.windows(2).any(|w| w[1] <= w[0]) || epsilons[0] <= 0.0 {
        return Err(Error::invalid(
            "epsilons",
            "must be positive and strictly increasing",
        ));
    }
    let n = points.len();
    let total = admissible_pairs(n, tau_c);
    if total == 0 {
        return Err(Error::InsufficientPairs);
    }
    let eps_sq: Vec<f64> = epsilons.iter().map(|e| e * e).collect();
    let k = eps_sq.len();
    // hist[b] counts pairs with eps[b-1] <= r < eps[b]; hist[k] the rest
    let hist = (tau_c + 1..n)
        .into_par_iter()
        .fold(
            || vec![0u64; k + 1],
            |mut h, i| {
                let p = points.point(i);
                for j in 0..i - tau_c {
                    let d = squared_distance(p, points.point(j));
                    h[eps_sq.partition_point(|&e| e <= d)] += 1;
                }
                h
            },
        )
        .reduce(
            || vec![0u64; k + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let mut counts = Vec::with_capacity(k);
    let mut acc = 0u64;
    for &h in &hist[..k] {
        acc += h;
        counts.push(acc);
    }
    Ok(CorrelationSumCurve {
        epsilons: epsilons.to_vec(),
        c2: counts.iter().map(|&c| c as f64 / total as f64).collect(),
        counts,
        total_pairs: total,
        m: points.m,
        tau_c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpsilonGrid {
    pub count: usize,
    pub lo_percentile: f64,
    pub hi_percentile: f64,
    /// Random admissible pairs used to estimate the percentiles.
    pub sample_pairs: usize,
}

impl Default for EpsilonGrid {
    fn default() -> Self {
        Self {
            count: 40,
            lo_percentile: 0.5,
            hi_percentile: 20.0,
            sample_pairs: 50_000,
        }
    }
}

/// Log-spaced radii between two percentiles of the pairwise distances,
/// estimated from a deterministic random subsample of pairs.
pub fn epsilon_grid(points: &Embedding, tau_c: usize, grid: &EpsilonGrid) -> Result<Vec<f64>> {
    let n = points.len();
    if admissible_pairs(n, tau_c) == 0 {
        return Err(Error::InsufficientPairs);
    }
    if grid.count < 2 {
        return Err(Error::invalid("count", "need at least 2 radii"));
    }
    let mut rng = stream(n as u64, "epsilon-grid");
    let mut d: Vec<f64> = Vec::with_capacity(grid.sample_pairs);
    while d.len() < grid.sample_pairs {
        let i = rng.random_range(tau_c + 1..n);
        let j = rng.random_range(0..i - tau_c);
        d.push(squared_distance(points.point(i), points.point(j)).sqrt());
    }
    d.sort_by(f64::total_cmp);
    let pick = |p: f64| d[((p / 100.0) * (d.len() - 1) as f64).round() as usize];
    let hi = pick(grid.hi_percentile);
    let lo = pick(grid.lo_percentile).max(hi * 1e-6);
    if !(hi > 0.0) || lo >= hi {
        return Err(Error::NoScalingRegion);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..grid.count)
        .map(|k| (a + (b - a) * k as f64 / (grid.count - 1) as f64).exp())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct D2Estimate {
    pub d2: f64,
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScalingRegion {
    /// Maximum relative spread `(max - min) / mean` of local slopes.
    pub slope_tolerance: f64,
    pub min_points: usize,
}

impl Default for ScalingRegion {
    fn default() -> Self {
        Self {
            slope_tolerance: 0.15,
            min_points: 5,
        }
    }
}

pub fn estimate_d2(curve: &CorrelationSumCurve) -> Result<D2Estimate> {
    estimate_d2_with(curve, &ScalingRegion::default())
}

/// Slope of `log C2` against `log eps` over the longest contiguous window
/// whose local slopes stay within the tolerance.
pub fn estimate_d2_with(curve: &CorrelationSumCurve, region: &ScalingRegion) -> Result<D2Estimate> {
    let pts: Vec<(f64, f64)> = curve
        .epsilons
        .iter()
        .zip(&curve.c2)
        .filter(|(_, &c)| c > 0.0 && c < 1.0)
        .map(|(e, c)| (e.ln(), c.ln()))
        .collect();
    let min_points = region.min_points.max(2);
    if pts.len() < min_points {
        return Err(Error::NoScalingRegion);
    }
    let slopes: Vec<f64> = pts
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .collect();
    // window of points [a, b] uses slopes [a, b)
    let mut best: Option<(usize, usize)> = None;
    for a in 0..slopes.len() {
        let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for b in a..slopes.len() {
            lo = lo.min(slopes[b]);
            hi = hi.max(slopes[b]);
            sum += slopes[b];
            let mean = sum / (b - a + 1) as f64;
            if !(mean > 0.0) || (hi - lo) / mean >= region.slope_tolerance {
                break;
            }
            let len = b - a + 2;
            if len >= min_points && best.is_none_or(|(x, y)| len > y - x + 1) {
                best = Some((a, b + 1));
            }
        }
    }
    let (a, b) = best.ok_or(Error::NoScalingRegion)?;
    let xs: Vec<f64> = pts[a..=b].iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts[a..=b].iter().map(|p| p.1).collect();
    let (d2, _) = linear_fit(&xs, &ys);
    Ok(D2Estimate {
        d2,
        eps_lo: xs[0].exp(),
        eps_hi: xs[xs.len() - 1].exp(),
        n_points: xs.len(),
    })
}

// ---------------------------------------------------------------------------
// Largest Lyapunov exponent

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LleConfig {
    /// Number of steps the divergence is followed; three Theiler windows
    /// when unset.
    pub t_max: Option<usize>,
    /// Upper bound on reference points (evenly spaced).
    pub max_references: usize,
    /// The fit covers the part of the divergence curve between these
    /// fractions of its total rise.
    pub fit_lo: f64,
    pub fit_hi: f64,
}

impl Default for LleConfig {
    fn default() -> Self {
        Self {
            t_max: None,
            max_references: 2000,
            fit_lo: 0.2,
            fit_hi: 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LleEstimate {
    /// Natural-log exponent per unit time.
    pub lle: f64,
    /// Mean log separation after `t` steps.
    pub p_curve: Vec<f64>,
    pub fit_start: usize,
    pub fit_end: usize,
}

pub fn lle_divergence(
    points: &Embedding,
    dt: f64,
    t_max: usize,
    tau_c: usize,
) -> Result<LleEstimate> {
    lle_divergence_with(
        points,
        dt,
        tau_c,
        &LleConfig {
            t_max: Some(t_max),
            ..Default::default()
        },
    )
}

/// Nearest-neighbour divergence: each reference point is paired with its
/// nearest neighbour outside the Theiler window and the mean log distance
/// is followed for `t_max` steps. The exponent is the slope of that curve
/// over its initial rise.
pub fn lle_divergence_with(
    points: &Embedding,
    dt: f64,
    tau_c: usize,
    cfg: &LleConfig,
) -> Result<LleEstimate> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    let t_max = cfg.t_max.unwrap_or((3 * tau_c).max(10));
    if t_max < 2 {
        return Err(Error::invalid("t_max", "must be at least 2"));
    }
    let n = points.len();
    if n <= t_max + tau_c + 1 {
        return Err(Error::NoNeighbors);
    }
    let usable = n - t_max;
    let stride = usable.div_ceil(cfg.max_references.max(1)).max(1);
    let refs: Vec<usize> = (0..usable).step_by(stride).collect();
    let t_len = t_max + 1;
    let (sums, counts) = refs
        .par_iter()
        .fold(
            || (vec![0.0f64; t_len], vec![0u64; t_len]),
            |(mut s, mut c), &k| {
                if let Some((j, d0)) = nearest_neighbor(points, k, usable, tau_c) {
                    if d0 > 0.0 {
                        for t in 0..t_len {
                            let d = squared_distance(points.point(k + t), points.point(j + t));
                            if d > 0.0 {
                                s[t] += 0.5 * d.ln();
                                c[t] += 1;
                            }
                        }
                    }
                }
                (s, c)
            },
        )
        .reduce(
            || (vec![0.0; t_len], vec![0; t_len]),
            |(mut s, mut c), (s2, c2)| {
                s.iter_mut().zip(s2).for_each(|(a, b)| *a += b);
                c.iter_mut().zip(c2).for_each(|(a, b)| *a += b);
                (s, c)
            },
        );
    if counts.iter().any(|&c| c == 0) {
        return Err(Error::NoNeighbors);
    }
    let p: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    let (fit_start, fit_end) = fit_window(&p, cfg.fit_lo, cfg.fit_hi);
    let ts: Vec<f64> = (fit_start..=fit_end).map(|t| t as f64 * dt).collect();
    let (lle, _) = linear_fit(&ts, &p[fit_start..=fit_end]);
    Ok(LleEstimate {
        lle,
        p_curve: p,
        fit_start,
        fit_end,
    })
}

/// Indices bracketing the part of `p` between `lo` and `hi` of its rise from
/// `p[0]` to its maximum; at least two points.
fn fit_window(p: &[f64], lo: f64, hi: f64) -> (usize, usize) {
    let p0 = p[0];
    let (arg_max, p_max) =
        p.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
        );
    let rise = p_max - p0;
    if !(rise > 1e-6) {
        return (0, p.len() - 1);
    }
    let start = p[..=arg_max]
        .iter()
        .position(|&v| v >= p0 + lo * rise)
        .unwrap_or(0);
    let end = p[..=arg_max]
        .iter()
        .position(|&v| v >= p0 + hi * rise)
        .unwrap_or(arg_max)
        .max(start + 1)
        .min(p.len() - 1);
    (start.min(end - 1), end)
}

// ---------------------------------------------------------------------------
// Combined measurement

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InvariantConfig {
    pub grid: EpsilonGrid,
    pub region: ScalingRegion,
    pub lle: LleConfig,
    /// Theiler window; the first ACF zero of the first coordinate if unset.
    pub theiler: Option<usize>,
    /// At most this many leading points go into the correlation sum.
    pub max_points: usize,
}

impl Default for InvariantConfig {
    fn default() -> Self {
        Self {
            grid: EpsilonGrid::default(),
            region: ScalingRegion::default(),
            lle: LleConfig::default(),
            theiler: None,
            max_points: 10_000,
        }
    }
}

/// D2 and LLE of a single trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantMeasurement {
    pub d2: D2Estimate,
    pub lle: f64,
    pub theiler: usize,
    pub n_points: usize,
}

pub fn measure_invariants(
    points: &Embedding,
    dt: f64,
    cfg: &InvariantConfig,
) -> Result<InvariantMeasurement> {
    let pts = points.truncate(cfg.max_points);
    let theiler = match cfg.theiler {
        Some(t) => t,
        None => crate::signals::autocorr_first_zero(&pts.column(0))?,
    };
    let eps = epsilon_grid(&pts, theiler, &cfg.grid)?;
    let curve = correlation_sum(&pts, &eps, theiler)?;
    let d2 = estimate_d2_with(&curve, &cfg.region)?;
    let lle = lle_divergence_with(&pts, dt, theiler, &cfg.lle)?;
    Ok(InvariantMeasurement {
        d2,
        lle: lle.lle,
        theiler,
        n_points: pts.len(),
    })
}

/// Mean and spread of D2 and LLE over repeated runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantEstimates {
    pub d2_mean: f64,
    pub d2_std: f64,
    pub lle_mean: f64,
    pub lle_std: f64,
    pub n_repeats: usize,
    pub d2_values: Vec<f64>,
    pub lle_values: Vec<f64>,
    /// Set when fewer than two repeats make the spread meaningless.
    pub single_run: bool,
}

impl InvariantEstimates {
    pub fn from_measurements(ms: &[InvariantMeasurement]) -> Result<Self> {
        if ms.is_empty() {
            return Err(Error::invalid("repeats", "must be at least 1"));
        }
        let d2_values: Vec<f64> = ms.iter().map(|m| m.d2.d2).collect();
        let lle_values: Vec<f64> = ms.iter().map(|m| m.lle).collect();
        let (d2_mean, d2_std) = mean_std(&d2_values);
        let (lle_mean, lle_std) = mean_std(&lle_values);
        Ok(Self {
            d2_mean,
            d2_std,
            lle_mean,
            lle_std,
            n_repeats: ms.len(),
            d2_values,
            lle_values,
            single_run: ms.len() < 2,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embed_small() {
        let e = delay_embed(&[1.0, 2.0, 3.0, 4.0, 5.0], 2, 1).unwrap();
        assert_eq!(e.len(), 4);
        assert_eq!(e.point(0), &[1.0, 2.0]);
        assert_eq!(e.point(3), &[4.0, 5.0]);
        let x: Vec<f64> = (1..=10).map(f64::from).collect();
        let e = delay_embed(&x, 3, 2).unwrap();
        assert_eq!(e.len(), 6);
        assert_eq!(e.point(0), &[1.0, 3.0, 5.0]);
        assert_eq!(delay_embed(&x, 1, 3).unwrap().column(0), x);
        assert!(matches!(
            delay_embed(&x, 4, 4),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn admissible_pair_count() {
        assert_eq!(admissible_pairs(5, 0), 10);
        assert_eq!(admissible_pairs(5, 1), 6);
        assert_eq!(admissible_pairs(3, 2), 0);
    }

    #[test]
    fn identical_points_saturate() {
        let e = Embedding::from_points(&[[1.0, 2.0]; 20]);
        let c = correlation_sum(&e, &[1e-9, 1e-3, 1.0], 2).unwrap();
        assert_eq!(c.c2, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn small_eps_is_zero() {
        let e = Embedding::from_points(&[[0.0], [1.0], [2.0], [3.0]]);
        let c = correlation_sum(&e, &[0.5, 1.5, 10.0], 0).unwrap();
        assert_eq!(c.c2[0], 0.0);
        assert_eq!(c.counts, vec![0, 3, 6]);
        assert_eq!(c.c2[2], 1.0);
        assert!(matches!(
            correlation_sum(&e, &[1.0], 3),
            Err(Error::InsufficientPairs)
        ));
        assert!(correlation_sum(&e, &[1.0, 0.5], 0).is_err());
    }

    #[test]
    fn fit_window_linear_then_flat() {
        let p: Vec<f64> = (0..30).map(|t| (t as f64).min(10.0)).collect();
        let (a, b) = fit_window(&p, 0.1, 0.6);
        assert_eq!((a, b), (1, 6));
        let (a, b) = fit_window(&p, 0.2, 0.7);
        assert_eq!((a, b), (2, 7));
    }

    #[test]
    fn linear_fit_exact() {
        let (s, c) = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]);
        assert!((s - 2.0).abs() < 1e-12 && (c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_region_on_power_law() {
        let eps: Vec<f64> = (0..20).map(|k| 0.01 * 1.3f64.powi(k)).collect();
        let c2: Vec<f64> = eps.iter().map(|e| 0.5 * e * e).collect();
        let curve = CorrelationSumCurve {
            counts: vec![0; eps.len()],
            epsilons: eps,
            c2,
            total_pairs: 1,
            m: 2,
            tau_c: 0,
        };
        let est = estimate_d2(&curve).unwrap();
        assert!((est.d2 - 2.0).abs() < 1e-10);
        // the last radius has C2 > 1 and is dropped
        assert_eq!(est.n_points, 19);
    }

    #[test]
    fn no_scaling_region_when_flat() {
        let curve = CorrelationSumCurve {
            epsilons: vec![1.0, 2.0, 3.0],
            c2: vec![0.0, 1.0, 1.0],
            counts: vec![0, 1, 1],
            total_pairs: 1,
            m: 1,
            tau_c: 0,
        };
        assert!(matches!(estimate_d2(&curve), Err(Error::NoScalingRegion)));
    }

    #[test]
    fn estimates_single_run_flag() {
        let m = InvariantMeasurement {
            d2: D2Estimate {
                d2: 2.0,
                eps_lo: 0.1,
                eps_hi: 1.0,
                n_points: 5,
            },
            lle: 0.9,
            theiler: 1,
            n_points: 10,
        };
        let e = InvariantEstimates::from_measurements(&[m]).unwrap();
        assert!(e.single_run);
        assert_eq!(e.d2_std, 0.0);
    }
}
