//! Stationary densities of the frozen fast subsystems.
//!
//! For additive noise the zero-current solution on the reflecting interval
//! `(a, b)` is the potential density `p(x) ∝ exp((2/σ²) E(x))` with
//!
//! ```text
//! fold           E = -y x - x³/3 + (2/3)(-y)^{3/2}     on (-√-y, ∞)
//! transcritical  E = y x²/2 - x³/3 - y³/6              on (y, ∞)
//! pitchfork      E = y x²/2 + x⁴/4 + y²/4              on (-√-y, √-y)
//! ```
//!
//! The Arnold–Boxler model has the Gamma-type density
//! `p(x) ∝ x^{2y/σ² - 1} e^{-2x/σ²}` on `x > 0`.

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::indicators::IndicatorSeries;
use crate::model::{escape_boundaries, ModelKind};
use crate::numerics;
use crate::sde::path_rng;

/// D-bifurcation of the Arnold–Boxler model.
pub const D_BIFURCATION_Y: f64 = 0.0;

/// `ln(1e-16)`: densities are cut where they drop this far below the peak.
const LOG_CUTOFF: f64 = -36.841_361_487_904_734;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Number of Simpson intervals (even).
    pub n_intervals: usize,
    /// Relative density level at which infinite ranges are truncated.
    pub cutoff: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n_intervals: 8192,
            cutoff: 1e-16,
        }
    }
}

impl GridSpec {
    pub fn with_intervals(n_intervals: usize) -> Self {
        GridSpec {
            n_intervals,
            ..GridSpec::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_intervals < 4 || self.n_intervals % 2 != 0 {
            return Err(Error::contract("grid needs an even number of at least 4 intervals"));
        }
        if !(self.cutoff > 0.0 && self.cutoff < 1.0) {
            return Err(Error::contract("cutoff must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// A normalized density on a grid together with its quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub kind: ModelKind,
    pub y: f64,
    pub sigma: f64,
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    /// Quadrature weights in `x`, so `∫ h p dx ≈ Σ w h(x) p`.
    pub weights: Vec<f64>,
    /// Logarithm of the normalizer `N` of the unnormalized kernel.
    pub log_norm: f64,
    /// Power of `x` at the lower wall when the density behaves like
    /// `x^e` there (Arnold–Boxler only).
    pub boundary_exponent: Option<f64>,
}

impl DensityGrid {
    pub fn norm_constant(&self) -> f64 {
        self.log_norm.exp()
    }

    pub fn integral(&self) -> f64 {
        self.expect(|_| 1.0)
    }

    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.xs
            .iter()
            .zip(&self.ps)
            .zip(&self.weights)
            .map(|((&x, &p), &w)| w * f(x) * p)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
}

fn potential_exponent(kind: ModelKind, x: f64, y: f64) -> f64 {
    match kind {
        ModelKind::Fold => -y * x - x * x * x / 3.0 + 2.0 / 3.0 * (-y).powf(1.5),
        ModelKind::Transcritical => 0.5 * y * x * x - x * x * x / 3.0 - y * y * y / 6.0,
        ModelKind::Pitchfork => 0.5 * y * x * x + 0.25 * x.powi(4) + 0.25 * y * y,
        _ => unreachable!(),
    }
}

/// Potential density on the reflecting interval of `kind` at frozen `y`.
pub fn potential_density(kind: ModelKind, y: f64, sigma: f64, grid: GridSpec) -> Result<DensityGrid> {
    grid.validate()?;
    if !matches!(kind, ModelKind::Fold | ModelKind::Transcritical | ModelKind::Pitchfork) {
        return Err(Error::domain(format!("no potential density for {kind}")));
    }
    if !(sigma > 0.0) {
        return Err(Error::domain("sigma must be > 0"));
    }
    let walls = escape_boundaries(kind, y)?;
    let scale = 2.0 / (sigma * sigma);
    let log_p = |x: f64| scale * potential_exponent(kind, x, y);
    // The exponent increases up to the stable point and decreases after it.
    let peak = match kind {
        ModelKind::Fold => (-y).sqrt(),
        ModelKind::Transcritical => y.max(0.0),
        _ => 0.0,
    };
    let peak = peak.clamp(walls.lo, walls.hi);
    let log_max = log_p(peak);
    let log_cut = grid.cutoff.ln();
    let below = |x: f64| log_p(x) - log_max - log_cut;

    let lo = if below(walls.lo) >= 0.0 {
        walls.lo
    } else {
        numerics::bisect(below, walls.lo, peak, 1e-14 * (1.0 + peak.abs()))?
    };
    let hi = if walls.hi.is_finite() && below(walls.hi) >= 0.0 {
        walls.hi
    } else {
        let mut step = sigma.max(1e-3);
        let mut probe = peak + step;
        while below(probe) > 0.0 {
            step *= 2.0;
            probe = peak + step;
            if walls.hi.is_finite() && probe >= walls.hi {
                probe = walls.hi;
                break;
            }
            if !probe.is_finite() {
                return Err(Error::Normalization("upper tail does not decay".into()));
            }
        }
        if below(probe) >= 0.0 {
            probe
        } else {
            numerics::bisect(below, peak, probe, 1e-14 * (1.0 + probe.abs()))?
        }
    };
    if !(hi > lo) {
        return Err(Error::Normalization(format!("empty support [{lo}, {hi}]")));
    }

    let n = grid.n_intervals;
    let h = (hi - lo) / n as f64;
    let xs: Vec<f64> = (0..=n).map(|i| if i == n { hi } else { lo + i as f64 * h }).collect();
    let weights = numerics::simpson_weights(n, h);
    let logs: Vec<f64> = xs.iter().map(|&x| log_p(x)).collect();
    normalize(kind, y, sigma, xs, logs, weights, None)
}

fn normalize(
    kind: ModelKind,
    y: f64,
    sigma: f64,
    xs: Vec<f64>,
    logs: Vec<f64>,
    weights: Vec<f64>,
    boundary_exponent: Option<f64>,
) -> Result<DensityGrid> {
    let shift = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logs.iter().zip(&weights).map(|(l, w)| w * (l - shift).exp()).sum();
    if !(z > 0.0 && z.is_finite()) || !shift.is_finite() {
        return Err(Error::Normalization(format!("normalizer is {z} (shift {shift})")));
    }
    let log_norm = z.ln() + shift;
    let ps = logs.iter().map(|l| (l - log_norm).exp()).collect();
    Ok(DensityGrid {
        kind,
        y,
        sigma,
        xs,
        ps,
        weights,
        log_norm,
        boundary_exponent,
    })
}

/// Mean, variance and skewness by quadrature.
pub fn density_moments(density: &DensityGrid) -> MomentSet {
    let mean = density.expect(|x| x);
    let variance = density.expect(|x| (x - mean).powi(2)).max(0.0);
    let third = density.expect(|x| (x - mean).powi(3));
    MomentSet {
        mean,
        variance,
        skewness: if variance > 0.0 { third / variance.powf(1.5) } else { 0.0 },
    }
}

/// Stationary variance at each `y` of an increasing negative grid.
pub fn variance_curve(kind: ModelKind, sigma: f64, y_grid: &[f64], grid: GridSpec) -> Result<IndicatorSeries> {
    if y_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::contract("y grid must be increasing"));
    }
    if y_grid.iter().any(|&y| !(y < 0.0)) {
        return Err(Error::contract("variance curve needs y < 0"));
    }
    let values = y_grid
        .par_iter()
        .map(|&y| potential_density(kind, y, sigma, grid).map(|d| density_moments(&d).variance))
        .collect::<Result<Vec<_>>>()?;
    Ok(IndicatorSeries::new(
        "stationary_variance",
        y_grid.to_vec(),
        values,
        vec![grid.n_intervals + 1; y_grid.len()],
    ))
}

/// Location and value of the largest interior local maximum of a series.
pub fn interior_maximum(series: &IndicatorSeries) -> Option<(f64, f64)> {
    let v = &series.values;
    (1..v.len().saturating_sub(1))
        .filter(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1])
        .max_by(|&i, &j| v[i].total_cmp(&v[j]))
        .map(|i| (series.ys[i], v[i]))
}

/// Shape `k = 2y/σ²` and rate `λ = 2/σ²` of the Arnold–Boxler density.
fn ab_shape_rate(y: f64, sigma: f64) -> Result<(f64, f64)> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::domain(format!("Arnold-Boxler density needs y > 0, got {y}")));
    }
    if !(sigma > 0.0) {
        return Err(Error::domain("sigma must be > 0"));
    }
    let s2 = sigma * sigma;
    Ok((2.0 * y / s2, 2.0 / s2))
}

/// Arnold–Boxler stationary density for `y > 0`.
///
/// Quadrature runs on `x = t^p` with `p = m/k` and integer `m >= 2`, so the
/// integrand in `t` behaves like `t^{m-1}` at the origin and the grid can
/// skip `x = 0`.
pub fn ab_density(y: f64, sigma: f64, grid: GridSpec) -> Result<DensityGrid> {
    grid.validate()?;
    let (k, lambda) = ab_shape_rate(y, sigma)?;
    let m = (3.0 * k).ceil().max(2.0);
    let p = m / k;
    // log of the t-space integrand with an x² weight, peaked at t_peak.
    let log_g = |t: f64| (m - 1.0 + 2.0 * p) * t.ln() - lambda * t.powf(p);
    let t_peak = ((m - 1.0 + 2.0 * p) / (lambda * p)).powf(1.0 / p);
    let g_max = log_g(t_peak);
    let target = |t: f64| log_g(t) - g_max - grid.cutoff.ln().min(LOG_CUTOFF);
    let mut t_hi = 2.0 * t_peak;
    while target(t_hi) > 0.0 {
        t_hi *= 2.0;
    }
    let t_hi = numerics::bisect(target, t_peak, t_hi, 1e-14 * t_hi)?;

    let n = grid.n_intervals;
    let h = t_hi / n as f64;
    let wt = numerics::simpson_weights(n, h);
    let mut xs = Vec::with_capacity(n);
    let mut logs = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 1..=n {
        let t = i as f64 * h;
        let x = t.powf(p);
        if x == 0.0 {
            continue;
        }
        xs.push(x);
        logs.push((k - 1.0) * x.ln() - lambda * x);
        weights.push(wt[i] * p * t.powf(p - 1.0));
    }
    normalize(ModelKind::ArnoldBoxlerTranscritical, y, sigma, xs, logs, weights, Some(k - 1.0))
}

/// `ln Γ(k) - k ln λ`, the log-normalizer of the Arnold–Boxler kernel.
pub fn ab_log_norm(y: f64, sigma: f64) -> Result<f64> {
    let (k, lambda) = ab_shape_rate(y, sigma)?;
    Ok(ln_gamma(k) - k * lambda.ln())
}

/// Mean of the Arnold–Boxler density, `Γ(k+1) / (Γ(k) λ)`, evaluated in log space.
pub fn ab_mean(y: f64, sigma: f64) -> Result<f64> {
    let (k, lambda) = ab_shape_rate(y, sigma)?;
    finite((ln_gamma(k + 1.0) - ln_gamma(k) - lambda.ln()).exp(), "mean")
}

/// Variance of the Arnold–Boxler density,
/// `Γ(k+2) / (Γ(k) λ²) - mean²`, evaluated in log space.
pub fn ab_variance(y: f64, sigma: f64) -> Result<f64> {
    let (k, lambda) = ab_shape_rate(y, sigma)?;
    let second = (ln_gamma(k + 2.0) - ln_gamma(k) - 2.0 * lambda.ln()).exp();
    let mean = ab_mean(y, sigma)?;
    finite(second - mean * mean, "variance")
}

/// The closed-form mean as it is usually printed,
/// `4^{-y/σ²} y (1/σ²)^{-2y/σ²} Γ(2y/σ²)`.
///
/// This is the first moment of the kernel `x^{k-1} e^{-λx}` without the
/// normalizer, so it tends to `σ²/2` as `y → 0` instead of to 0.
pub fn ab_mean_printed(y: f64, sigma: f64) -> Result<f64> {
    let (k, _) = ab_shape_rate(y, sigma)?;
    let s2 = sigma * sigma;
    let log = -(y / s2) * 4f64.ln() + y.ln() + k * s2.ln() + ln_gamma(k);
    finite(log.exp(), "printed mean")
}

/// The closed-form variance as it is usually printed,
/// `y² + yσ²/2 - 4^{-y/σ²} y (1/σ²)^{-2y/σ²} σ² Γ(1+2y/σ²)
///  + 2^{-4y/σ²} y² (1/σ²)^{-4y/σ²} Γ(2y/σ²)²`.
///
/// It equals `E[(x - m)²]` with `m` from [`ab_mean_printed`], which is the
/// curve with an interior minimum and maximum above `σ²/2`.
pub fn ab_variance_printed(y: f64, sigma: f64) -> Result<f64> {
    let (k, _) = ab_shape_rate(y, sigma)?;
    let s2 = sigma * sigma;
    let ln4 = 4f64.ln();
    let t3 = (-(y / s2) * ln4 + y.ln() + k * s2.ln() + s2.ln() + ln_gamma(1.0 + k)).exp();
    let t4 = (-(2.0 * y / s2) * ln4 + 2.0 * y.ln() + 2.0 * k * s2.ln() + 2.0 * ln_gamma(k)).exp();
    finite(y * y + 0.5 * y * s2 - t3 + t4, "printed variance")
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Normalization(format!("{what} overflowed")))
    }
}

/// The two P-bifurcation points `±σ²/2`.
pub fn p_bifurcation_point(sigma: f64) -> Result<(f64, f64)> {
    if !(sigma >= 0.0) {
        return Err(Error::domain("sigma must be >= 0"));
    }
    let y = 0.5 * sigma * sigma;
    Ok((y, -y))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeTag {
    SingularAtBoundary,
    Unimodal,
    Bimodal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeClass {
    pub tag: ShapeTag,
    pub mode_locations: Vec<f64>,
}

/// Relative prominence at or above which a maximum counts as a mode.
pub const MODE_PROMINENCE: f64 = 1e-3;
/// Relative prominence below which a maximum is treated as noise.
pub const NOISE_PROMINENCE: f64 = 1e-8;

/// Classify a density as singular at its lower wall, unimodal or bimodal.
pub fn classify_shape(density: &DensityGrid) -> Result<ShapeClass> {
    let ps = &density.ps;
    let xs = &density.xs;
    if ps.len() < 3 {
        return Err(Error::contract("density grid too small to classify"));
    }
    if let Some(e) = density.boundary_exponent {
        if e < 0.0 && ps[0] > ps[1] {
            return Ok(ShapeClass {
                tag: ShapeTag::SingularAtBoundary,
                mode_locations: vec![0.0],
            });
        }
    }
    let p_max = ps.iter().cloned().fold(0.0, f64::max);
    let n = ps.len();
    let is_peak = |i: usize| {
        let left_ok = i == 0 || ps[i] > ps[i - 1];
        let right_ok = i == n - 1 || ps[i] >= ps[i + 1];
        left_ok && right_ok
    };
    let mut modes = Vec::new();
    let mut ambiguous = Vec::new();
    for i in (0..n).filter(|&i| is_peak(i)) {
        let prom = prominence(ps, i) / p_max;
        if prom >= MODE_PROMINENCE {
            modes.push(xs[i]);
        } else if prom >= NOISE_PROMINENCE {
            ambiguous.push(xs[i]);
        }
    }
    if !ambiguous.is_empty() {
        return Err(Error::Indeterminate(format!(
            "maxima near {ambiguous:?} have prominence below {MODE_PROMINENCE}"
        )));
    }
    let tag = match modes.len() {
        1 => ShapeTag::Unimodal,
        2 => ShapeTag::Bimodal,
        k => return Err(Error::Indeterminate(format!("{k} modes found"))),
    };
    Ok(ShapeClass {
        tag,
        mode_locations: modes,
    })
}

/// Height of peak `i` above the higher of its two key cols. A side that
/// reaches the grid end without taller terrain contributes its minimum; an
/// empty side contributes 0.
fn prominence(ps: &[f64], i: usize) -> f64 {
    let peak = ps[i];
    let col = |side: &mut dyn Iterator<Item = usize>| {
        let mut lowest = f64::INFINITY;
        for j in side {
            if ps[j] > peak {
                break;
            }
            lowest = lowest.min(ps[j]);
        }
        if lowest.is_finite() {
            lowest
        } else {
            0.0
        }
    };
    let left = col(&mut (0..i).rev());
    let right = col(&mut (i + 1..ps.len()));
    peak - left.max(right)
}

/// Monte Carlo samples of the random equilibrium
/// `x* = ±1 / ∫_0^∞ e^{-|y| s + σ W_s} ds`, negative for `y < 0`.
///
/// The integral is truncated at `horizon`; each step integrates the
/// exponential of the linearly interpolated exponent exactly and the tail
/// beyond the horizon follows the drift alone.
pub fn ab_random_equilibrium_sample(y: f64, sigma: f64, n: usize, horizon: f64, dt: f64, seed: u64) -> Result<Vec<f64>> {
    use rand_distr::{Distribution, StandardNormal};
    if y == 0.0 || !y.is_finite() {
        return Err(Error::domain("the random equilibrium is undefined at y = 0"));
    }
    if horizon * y.abs() < 20.0 {
        return Err(Error::contract("horizon · |y| must be at least 20"));
    }
    if !(dt > 0.0) || n == 0 || sigma < 0.0 {
        return Err(Error::contract("need dt > 0, n >= 1 and sigma >= 0"));
    }
    let rate = y.abs();
    let steps = (horizon / dt).ceil() as usize;
    let sqrt_dt = dt.sqrt();
    let sign = y.signum();
    Ok((0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let mut e0 = 0.0f64;
            let mut integral = 0.0;
            for _ in 0..steps {
                let z: f64 = if sigma > 0.0 { StandardNormal.sample(&mut rng) } else { 0.0 };
                let e1 = e0 - rate * dt + sigma * sqrt_dt * z;
                let d = e1 - e0;
                integral += if d.abs() < 1e-12 {
                    dt * e0.exp() * (1.0 + 0.5 * d)
                } else {
                    dt * (e1.exp() - e0.exp()) / d
                };
                e0 = e1;
            }
            integral += e0.exp() / rate;
            sign / integral
        })
        .collect())
}
