//! Euler–Maruyama integration of the catalog models.
//!
//! Each path owns a ChaCha8 stream selected by `(seed, path index)`, so an
//! ensemble gives the same numbers however the paths are scheduled across
//! threads. Gaussian increments come from the ziggurat sampler of
//! `rand_distr::StandardNormal`, scaled by `√dt`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::indicators::IndicatorSeries;
use crate::model::{escape_boundaries, ModelKind, ModelSpec, NoiseType};
use crate::numerics;

/// `|x|` beyond which a path is treated as escaped to infinity.
pub const OVERFLOW_GUARD: f64 = 1e6;
pub const DEFAULT_DT: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryMode {
    None,
    /// Walls of [`escape_boundaries`] at the current `y`, continued to
    /// `y >= 0` by freezing the lower wall at `min(wall, 0)`.
    Absorbing,
    /// Fixed window `lo < x < hi` on the first fast coordinate.
    Window { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    pub x0: Vec<f64>,
    pub y0: f64,
    pub boundary_mode: BoundaryMode,
    /// Keep every `record_every`-th step (1 keeps all).
    pub record_every: usize,
}

impl SimConfig {
    pub fn new(dt: f64, t_end: f64, seed: u64, x0: Vec<f64>, y0: f64) -> Self {
        SimConfig {
            dt,
            t_end,
            seed,
            x0,
            y0,
            boundary_mode: BoundaryMode::None,
            record_every: 1,
        }
    }

    pub fn with_boundary(mut self, mode: BoundaryMode) -> Self {
        self.boundary_mode = mode;
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Run from `y0` until the slow variable reaches `y_end` (`g ≡ 1`).
    pub fn until_y(spec: &ModelSpec, dt: f64, seed: u64, x0: Vec<f64>, y0: f64, y_end: f64) -> Result<Self> {
        if !(spec.epsilon > 0.0) || y_end <= y0 {
            return Err(Error::contract("until_y needs epsilon > 0 and y_end > y0"));
        }
        Ok(SimConfig::new(dt, (y_end - y0) / spec.epsilon, seed, x0, y0))
    }

    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= 0.1) {
            return Err(Error::contract(format!("dt must lie in (0, 0.1], got {}", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::contract(format!("t_end must be > 0, got {}", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(Error::contract("record_every must be >= 1"));
        }
        if !self.y0.is_finite() || self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("initial state must be finite"));
        }
        spec.state_from_slice(&self.x0)?;
        if let BoundaryMode::Window { lo, hi } = self.boundary_mode {
            if !(lo < hi) {
                return Err(Error::contract("window boundary needs lo < hi"));
            }
        }
        if self.boundary_mode == BoundaryMode::Absorbing {
            absorbing_walls(spec.kind, self.y0)?;
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EscapeKind {
    Boundary,
    Overflow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Escape {
    pub t: f64,
    pub y: f64,
    /// First fast coordinate of the state that crossed.
    pub x: f64,
    pub kind: EscapeKind,
}

/// One seeded realization.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub kind: ModelKind,
    pub epsilon: f64,
    pub sigma: f64,
    pub dt: f64,
    pub seed: u64,
    pub index: u64,
    pub y0: f64,
    pub times: Vec<f64>,
    /// First fast coordinate.
    pub xs: Vec<f64>,
    /// Second fast coordinate (Hopf only).
    pub xs2: Option<Vec<f64>>,
    pub ys: Vec<f64>,
    pub escaped: Option<Escape>,
}

impl SamplePath {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Spacing of recorded samples in fast time.
    pub fn sample_dt(&self) -> f64 {
        if self.times.len() > 1 {
            self.times[1] - self.times[0]
        } else {
            self.dt
        }
    }

    /// Slow value at which the path escaped, if it did.
    pub fn escape_y(&self) -> Option<f64> {
        self.escaped.as_ref().map(|e| e.y)
    }

    /// `x` at the first recorded sample with `y >= y_target`; `None` if the
    /// path escaped before or never reached it.
    pub fn x_at_y(&self, y_target: f64) -> Option<f64> {
        let i = self.ys.partition_point(|&y| y < y_target - 1e-12);
        self.xs.get(i).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathFailure {
    pub index: u64,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub spec: ModelSpec,
    pub config: SimConfig,
    pub base_seed: u64,
    pub n_paths: usize,
    pub paths: Vec<SamplePath>,
    pub failures: Vec<PathFailure>,
}

/// Random stream for path `index` under `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Ito drift used by the integrator.
#[inline]
fn sde_drift(spec: &ModelSpec, x: [f64; 2], y: f64) -> [f64; 2] {
    let mut f = spec.drift(x, y);
    if spec.noise_type == NoiseType::MultiplicativeLinear {
        f[0] += 0.5 * spec.sigma * spec.sigma * x[0];
    }
    f
}

#[inline]
fn step_fast(spec: &ModelSpec, x: [f64; 2], y: f64, dt: f64, dw: [f64; 2]) -> [f64; 2] {
    let f = sde_drift(spec, x, y);
    match spec.noise_type {
        NoiseType::Additive => [
            x[0] + f[0] * dt + spec.sigma * dw[0],
            x[1] + f[1] * dt + spec.sigma * dw[1],
        ],
        NoiseType::MultiplicativeLinear => [x[0] + f[0] * dt + spec.sigma * x[0] * dw[0], 0.0],
    }
}

/// One Euler–Maruyama step. `dw` holds Brownian increments of variance `dt`,
/// one per fast coordinate.
pub fn em_step(spec: &ModelSpec, x: &[f64], y: f64, dt: f64, dw: &[f64]) -> Result<(Vec<f64>, f64)> {
    if !(dt > 0.0) {
        return Err(Error::contract("dt must be > 0"));
    }
    let state = spec.state_from_slice(x)?;
    let dim = spec.kind.fast_dim();
    if dw.len() != dim {
        return Err(Error::contract(format!("expected {dim} increments, got {}", dw.len())));
    }
    let inc = if dim == 2 { [dw[0], dw[1]] } else { [dw[0], 0.0] };
    let next = step_fast(spec, state, y, dt, inc);
    let y_next = y + spec.epsilon * spec.slow_drift(state) * dt;
    if !(next[0].is_finite() && next[1].is_finite() && y_next.is_finite()) {
        return Err(Error::NumericOverflow {
            last_x: x.to_vec(),
            last_y: y,
        });
    }
    Ok((next[..dim].to_vec(), y_next))
}

/// Escape interval used for absorbing boundaries.
fn absorbing_walls(kind: ModelKind, y: f64) -> Result<(f64, f64)> {
    match kind {
        ModelKind::Fold if y >= 0.0 => Ok((0.0, f64::INFINITY)),
        ModelKind::Pitchfork if y >= 0.0 => Ok((0.0, 0.0)),
        ModelKind::Transcritical | ModelKind::ArnoldBoxlerTranscritical => {
            let w = escape_boundaries(kind, y)?;
            Ok((w.lo.min(0.0), w.hi))
        }
        _ => escape_boundaries(kind, y).map(|w| (w.lo, w.hi)),
    }
}

fn outside(mode: BoundaryMode, kind: ModelKind, x: f64, y: f64) -> bool {
    match mode {
        BoundaryMode::None => false,
        BoundaryMode::Window { lo, hi } => !(x > lo && x < hi),
        BoundaryMode::Absorbing => match absorbing_walls(kind, y) {
            Ok((lo, hi)) => !(x > lo && x < hi),
            Err(_) => false,
        },
    }
}

/// Simulate path 0 of `config.seed`.
pub fn simulate_path(spec: &ModelSpec, config: &SimConfig) -> Result<SamplePath> {
    simulate_path_indexed(spec, config, 0)
}

/// Simulate the path with stream `index` of `config.seed`.
pub fn simulate_path_indexed(spec: &ModelSpec, config: &SimConfig, index: u64) -> Result<SamplePath> {
    spec.validate()?;
    config.validate(spec)?;
    let mut rng = path_rng(config.seed, index);
    let dim = spec.kind.fast_dim();
    let n_steps = config.n_steps();
    let dt = config.dt;
    let sqrt_dt = dt.sqrt();
    let every = config.record_every;
    let capacity = n_steps / every + 1;
    let unit_slow = spec.kind.has_unit_slow_drift();

    let mut x = spec.state_from_slice(&config.x0)?;
    let mut y = config.y0;
    let mut path = SamplePath {
        kind: spec.kind,
        epsilon: spec.epsilon,
        sigma: spec.sigma,
        dt,
        seed: config.seed,
        index,
        y0: config.y0,
        times: Vec::with_capacity(capacity),
        xs: Vec::with_capacity(capacity),
        xs2: (dim == 2).then(|| Vec::with_capacity(capacity)),
        ys: Vec::with_capacity(capacity),
        escaped: None,
    };
    let push = |path: &mut SamplePath, t: f64, x: [f64; 2], y: f64| {
        path.times.push(t);
        path.xs.push(x[0]);
        if let Some(xs2) = path.xs2.as_mut() {
            xs2.push(x[1]);
        }
        path.ys.push(y);
    };

    if outside(config.boundary_mode, spec.kind, x[0], y) {
        return Err(Error::contract("initial state lies outside the escape domain"));
    }
    push(&mut path, 0.0, x, y);

    for i in 1..=n_steps {
        let mut dw = [0.0; 2];
        if spec.sigma > 0.0 {
            for w in dw.iter_mut().take(dim) {
                let z: f64 = StandardNormal.sample(&mut rng);
                *w = z * sqrt_dt;
            }
        }
        let next = step_fast(spec, x, y, dt, dw);
        let t = i as f64 * dt;
        let y_next = if unit_slow {
            config.y0 + spec.epsilon * t
        } else {
            y + spec.epsilon * spec.slow_drift(x) * dt
        };
        if next[0].is_nan() || next[1].is_nan() || y_next.is_nan() {
            return Err(Error::NumericOverflow {
                last_x: x[..dim].to_vec(),
                last_y: y,
            });
        }
        if next[0].abs() > OVERFLOW_GUARD || next[1].abs() > OVERFLOW_GUARD {
            path.escaped = Some(Escape {
                t,
                y: y_next,
                x: next[0],
                kind: EscapeKind::Overflow,
            });
            break;
        }
        if outside(config.boundary_mode, spec.kind, next[0], y_next) {
            path.escaped = Some(Escape {
                t,
                y: y_next,
                x: next[0],
                kind: EscapeKind::Boundary,
            });
            break;
        }
        x = next;
        y = y_next;
        if i % every == 0 {
            push(&mut path, t, x, y);
        }
    }
    Ok(path)
}

/// Simulate `n` paths with streams `0..n` of `config.seed`. Per-path
/// failures are collected rather than aborting the ensemble.
pub fn simulate_ensemble(spec: &ModelSpec, config: &SimConfig, n: usize) -> Result<Ensemble> {
    let results = run_ensemble_map(spec, config, n, |p| p.clone())?;
    let mut paths = Vec::with_capacity(n);
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(p) => paths.push(p),
            Err(error) => failures.push(PathFailure {
                index: i as u64,
                error,
            }),
        }
    }
    Ok(Ensemble {
        spec: *spec,
        config: config.clone(),
        base_seed: config.seed,
        n_paths: n,
        paths,
        failures,
    })
}

/// Simulate `n` paths in parallel and reduce each one with `f` right away,
/// so large ensembles never hold every path in memory. Results come back in
/// path-index order.
pub fn run_ensemble_map<T, F>(spec: &ModelSpec, config: &SimConfig, n: usize, f: F) -> Result<Vec<Result<T>>>
where
    T: Send,
    F: Fn(&SamplePath) -> T + Sync,
{
    if n == 0 {
        return Err(Error::contract("ensemble size must be >= 1"));
    }
    spec.validate()?;
    config.validate(spec)?;
    Ok((0..n as u64)
        .into_par_iter()
        .map(|i| simulate_path_indexed(spec, config, i).map(|p| f(&p)))
        .collect())
}

/// Fraction of paths whose escape `y` is at most each grid value.
pub fn escape_fraction_series(ensemble: &Ensemble, y_grid: &[f64]) -> Result<IndicatorSeries> {
    for p in &ensemble.paths {
        if p.y0 != ensemble.config.y0 || p.epsilon != ensemble.spec.epsilon {
            return Err(Error::contract("paths disagree on y0 or epsilon"));
        }
    }
    let escapes: Vec<Option<f64>> = ensemble.paths.iter().map(|p| p.escape_y()).collect();
    Ok(escape_fraction_from(&escapes, y_grid))
}

/// Escape fractions from per-path escape values.
pub fn escape_fraction_from(escapes: &[Option<f64>], y_grid: &[f64]) -> IndicatorSeries {
    let n = escapes.len();
    let values = y_grid
        .iter()
        .map(|&y| escapes.iter().filter(|e| matches!(e, Some(ye) if *ye <= y)).count() as f64 / n as f64)
        .collect();
    IndicatorSeries::new("escape_fraction", y_grid.to_vec(), values, vec![n; y_grid.len()])
}

/// Fourth-order Runge–Kutta step of the noise-free system on the state
/// `(x1, x2, y)`.
pub fn rk4_step(spec: &ModelSpec, s: [f64; 3], dt: f64) -> [f64; 3] {
    let rhs = |s: [f64; 3]| -> [f64; 3] {
        let x = [s[0], s[1]];
        let f = spec.drift(x, s[2]);
        [f[0], f[1], spec.epsilon * spec.slow_drift(x)]
    };
    let add = |a: [f64; 3], b: [f64; 3], h: f64| [a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2]];
    let k1 = rhs(s);
    let k2 = rhs(add(s, k1, 0.5 * dt));
    let k3 = rhs(add(s, k2, 0.5 * dt));
    let k4 = rhs(add(s, k3, dt));
    [
        s[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        s[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        s[2] + dt / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    ]
}

/// Noise-free trajectory from RK4, recorded every `record_every` steps.
/// Multiplicative-noise models use their Stratonovich drift here.
pub fn deterministic_path(spec: &ModelSpec, config: &SimConfig) -> Result<SamplePath> {
    spec.validate()?;
    config.validate(spec)?;
    let x0 = spec.state_from_slice(&config.x0)?;
    let dim = spec.kind.fast_dim();
    let mut s = [x0[0], x0[1], config.y0];
    let n_steps = config.n_steps();
    let mut path = SamplePath {
        kind: spec.kind,
        epsilon: spec.epsilon,
        sigma: 0.0,
        dt: config.dt,
        seed: config.seed,
        index: 0,
        y0: config.y0,
        times: vec![0.0],
        xs: vec![s[0]],
        xs2: (dim == 2).then(|| vec![s[1]]),
        ys: vec![s[2]],
        escaped: None,
    };
    for i in 1..=n_steps {
        let next = rk4_step(spec, s, config.dt);
        let t = i as f64 * config.dt;
        if next.iter().any(|v| !v.is_finite()) || next[0].abs() > OVERFLOW_GUARD {
            path.escaped = Some(Escape {
                t,
                y: next[2],
                x: next[0],
                kind: EscapeKind::Overflow,
            });
            break;
        }
        if outside(config.boundary_mode, spec.kind, next[0], next[2]) {
            path.escaped = Some(Escape {
                t,
                y: next[2],
                x: next[0],
                kind: EscapeKind::Boundary,
            });
            break;
        }
        s = next;
        if i % config.record_every == 0 {
            path.times.push(t);
            path.xs.push(s[0]);
            if let Some(xs2) = path.xs2.as_mut() {
                xs2.push(s[1]);
            }
            path.ys.push(s[2]);
        }
    }
    Ok(path)
}

/// Default start for the transition models: `y0 = -1` on the attracting
/// branch.
pub fn default_start(spec: &ModelSpec, y0: f64) -> Result<Vec<f64>> {
    let branch = spec.approach_branch()?;
    Ok(vec![branch.x_of_y(y0); spec.kind.fast_dim()])
}

/// Early-escape probabilities over an `(ε, σ)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable {
    pub kind: ModelKind,
    pub epsilons: Vec<f64>,
    pub sigmas: Vec<f64>,
    /// `probability[i][j]` for `epsilons[i]`, `sigmas[j]`.
    pub probability: Vec<Vec<f64>>,
    pub n_paths: usize,
    pub y_stop: f64,
}

impl ScanTable {
    /// Monte Carlo standard error of an entry.
    pub fn standard_error(&self, i: usize, j: usize) -> f64 {
        let p = self.probability[i][j];
        (p * (1.0 - p) / self.n_paths as f64).sqrt()
    }
}

/// Settings shared by all cells of a scaling scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSettings {
    pub y0: f64,
    pub dt: f64,
    pub seed: u64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        ScanSettings {
            y0: -1.0,
            dt: DEFAULT_DT,
            seed: 0,
        }
    }
}

/// Fraction of `n` absorbing-boundary paths that escape strictly before `y_stop`,
/// for every `(ε, σ)` pair.
pub fn scaling_scan(
    kind: ModelKind,
    epsilon_grid: &[f64],
    sigma_grid: &[f64],
    n: usize,
    y_stop: f64,
    settings: ScanSettings,
) -> Result<ScanTable> {
    if epsilon_grid.is_empty() || sigma_grid.is_empty() {
        return Err(Error::contract("scan grids must be non-empty"));
    }
    if y_stop <= settings.y0 {
        return Err(Error::contract("y_stop must exceed the start value"));
    }
    let mut probability = Vec::with_capacity(epsilon_grid.len());
    for &eps in epsilon_grid {
        let mut row = Vec::with_capacity(sigma_grid.len());
        for &sigma in sigma_grid {
            let spec = ModelSpec::new(kind, eps, sigma)?;
            let x0 = default_start(&spec, settings.y0)?;
            let cfg = SimConfig::until_y(&spec, settings.dt, settings.seed, x0, settings.y0, y_stop)?
                .with_boundary(BoundaryMode::Absorbing)
                .with_record_every(usize::MAX / 2);
            let escaped = run_ensemble_map(&spec, &cfg, n, |p| p.escaped.as_ref().is_some_and(|e| e.y < y_stop))?;
            let count = escaped
                .into_iter()
                .map(|r| r.unwrap_or(true))
                .filter(|&e| e)
                .count();
            row.push(count as f64 / n as f64);
        }
        probability.push(row);
    }
    Ok(ScanTable {
        kind,
        epsilons: epsilon_grid.to_vec(),
        sigmas: sigma_grid.to_vec(),
        probability,
        n_paths: n,
        y_stop,
    })
}

/// For each `ε` row, the `σ` at which the escape probability first reaches
/// `level`, by log-linear interpolation. Rows that never cross are skipped.
pub fn level_curve(table: &ScanTable, level: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for (i, &eps) in table.epsilons.iter().enumerate() {
        let row = &table.probability[i];
        for j in 1..row.len() {
            let (p0, p1) = (row[j - 1], row[j]);
            if p0 < level && p1 >= level {
                let (s0, s1) = (table.sigmas[j - 1], table.sigmas[j]);
                let w = (level - p0) / (p1 - p0);
                let sigma = if s0 > 0.0 {
                    (s0.ln() + w * (s1.ln() - s0.ln())).exp()
                } else {
                    s0 + w * (s1 - s0)
                };
                out.push((eps, sigma));
                break;
            }
        }
    }
    out
}

/// Log-log slope of a level curve `σ(ε)`.
pub fn fit_level_exponent(curve: &[(f64, f64)]) -> Result<f64> {
    if curve.len() < 2 {
        return Err(Error::Estimation("level curve has fewer than two points".into()));
    }
    let (e, s): (Vec<f64>, Vec<f64>) = curve.iter().cloned().unzip();
    Ok(numerics::loglog_slope(&e, &s)?.coefficients[1])
}

/// Barrier height and escape-time scale of the frozen fold potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kramers {
    /// `H = (4/3) y^{3/2}`.
    pub barrier: f64,
    /// `exp(2H/σ²)`, without prefactor.
    pub time_scale: f64,
}

/// Kramers quantities for the potential `U(x) = -y x + x³/3`.
pub fn kramers_quantities(y: f64, sigma: f64) -> Result<Kramers> {
    if y < 0.0 || !y.is_finite() {
        return Err(Error::domain(format!("the potential has no well for y = {y}")));
    }
    if !(sigma > 0.0) {
        return Err(Error::domain("sigma must be > 0"));
    }
    let barrier = 4.0 / 3.0 * y.powf(1.5);
    Ok(Kramers {
        barrier,
        time_scale: (2.0 * barrier / (sigma * sigma)).exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spec(kind: ModelKind, eps: f64, sigma: f64) -> ModelSpec {
        ModelSpec::new(kind, eps, sigma).unwrap()
    }

    #[test]
    fn em_step_examples() {
        let s = spec(ModelKind::Fold, 0.02, 0.0);
        let (x, y) = em_step(&s, &[1.0], -1.0, 0.01, &[0.0]).unwrap();
        assert_eq!(x, vec![1.0]);
        assert_relative_eq!(y, -1.0 + 0.01 * 0.02);

        let s = spec(ModelKind::Transcritical, 0.02, 0.1);
        let (x, _) = em_step(&s, &[0.1], -1.0, 0.1, &[0.0]).unwrap();
        assert_relative_eq!(x[0], 0.089, epsilon = 1e-15);

        let s = spec(ModelKind::ArnoldBoxlerTranscritical, 0.0, 0.8f64.sqrt());
        let (x, y) = em_step(&s, &[1.0], 0.5, 1.0, &[0.0]).unwrap();
        assert_relative_eq!(x[0] - 1.0, -0.1, epsilon = 1e-12);
        assert_eq!(y, 0.5);
    }

    #[test]
    fn em_step_reports_overflow() {
        let s = spec(ModelKind::Fold, 0.02, 0.0);
        let err = em_step(&s, &[1e200], -1.0, 0.01, &[0.0]).unwrap_err();
        assert!(matches!(err, Error::NumericOverflow { ref last_x, .. } if last_x == &vec![1e200]));
    }

    #[test]
    fn slow_variable_is_exact_linear_in_time() {
        let s = spec(ModelKind::Fold, 0.02, 0.1);
        let cfg = SimConfig::new(0.01, 20.0, 3, vec![1.0], -1.0);
        let p = simulate_path(&s, &cfg).unwrap();
        assert_eq!(p.len(), 2001);
        for (t, y) in p.times.iter().zip(&p.ys) {
            assert_eq!(*y, -1.0 + 0.02 * t);
        }
    }

    #[test]
    fn same_seed_same_path() {
        let s = spec(ModelKind::HopfPlanar, 0.02, 0.05);
        let cfg = SimConfig::new(0.01, 10.0, 11, vec![0.1, 0.0], -0.5);
        assert_eq!(simulate_path(&s, &cfg).unwrap(), simulate_path(&s, &cfg).unwrap());
        let other = simulate_path(&s, &cfg.clone().with_seed(12)).unwrap();
        assert_ne!(other.xs, simulate_path(&s, &cfg).unwrap().xs);
    }

    #[test]
    fn singleton_ensemble_equals_single_path() {
        let s = spec(ModelKind::Transcritical, 0.02, 0.1);
        let cfg = SimConfig::new(0.01, 5.0, 9, vec![0.0], -1.0);
        let e = simulate_ensemble(&s, &cfg, 1).unwrap();
        assert_eq!(e.paths[0], simulate_path(&s, &cfg).unwrap());
    }

    #[test]
    fn absorbing_boundary_truncates() {
        let s = spec(ModelKind::Fold, 0.02, 0.0);
        let cfg = SimConfig::new(0.01, 100.0, 0, vec![1.0], -1.0).with_boundary(BoundaryMode::Absorbing);
        let p = simulate_path(&s, &cfg).unwrap();
        let esc = p.escaped.clone().expect("deterministic fold path jumps after y = 0");
        assert!(esc.y > 0.0);
        assert_eq!(p.len(), (esc.t / 0.01).round() as usize);
        assert!(p.xs.iter().all(|&x| x > -1.0));
    }

    #[test]
    fn escape_walls_extend_past_zero() {
        assert_eq!(absorbing_walls(ModelKind::Fold, 0.3).unwrap(), (0.0, f64::INFINITY));
        assert_eq!(absorbing_walls(ModelKind::Transcritical, 0.3).unwrap(), (0.0, f64::INFINITY));
        assert_eq!(absorbing_walls(ModelKind::Transcritical, -0.3).unwrap(), (-0.3, f64::INFINITY));
        assert_eq!(absorbing_walls(ModelKind::Pitchfork, -0.25).unwrap(), (-0.5, 0.5));
    }

    #[test]
    fn sigma_zero_fold_has_no_early_escape() {
        let s = spec(ModelKind::Fold, 0.02, 0.0);
        let cfg = SimConfig::new(0.01, 60.0, 0, vec![1.0], -1.0).with_boundary(BoundaryMode::Absorbing);
        let e = simulate_ensemble(&s, &cfg, 4).unwrap();
        let grid: Vec<f64> = (0..10).map(|i| -1.0 + 0.1 * i as f64).collect();
        let series = escape_fraction_series(&e, &grid).unwrap();
        assert!(series.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn deterministic_em_converges_to_rk4() {
        for (kind, x0, y0, t_end) in [
            (ModelKind::Fold, 1.2, -0.6, 10.0),
            (ModelKind::VanDerPol, 2.0, 2.0 / 3.0, 20.0),
        ] {
            let s = spec(kind, 0.05, 0.0);
            let reference = deterministic_path(&s, &SimConfig::new(1e-4, t_end, 0, vec![x0], y0)).unwrap();
            let mut errs = Vec::new();
            for dt in [0.02, 0.01] {
                let p = simulate_path(&s, &SimConfig::new(dt, t_end, 0, vec![x0], y0)).unwrap();
                let stride = (dt / 1e-4).round() as usize;
                let err = p
                    .xs
                    .iter()
                    .enumerate()
                    .map(|(i, x)| (x - reference.xs[i * stride]).abs())
                    .fold(0.0, f64::max);
                errs.push(err);
            }
            assert!(errs[0] < 0.05, "{kind}: {errs:?}");
            let ratio = errs[0] / errs[1];
            assert!(ratio > 1.6 && ratio < 2.4, "{kind}: first order expected, ratio {ratio}");
        }
    }

    #[test]
    fn kramers_examples() {
        assert_relative_eq!(kramers_quantities(1.0, 0.1).unwrap().barrier, 4.0 / 3.0);
        let k = kramers_quantities(0.0, 0.1).unwrap();
        assert_eq!((k.barrier, k.time_scale), (0.0, 1.0));
        let k = kramers_quantities(0.25, 0.1).unwrap();
        assert_relative_eq!(k.barrier, 1.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(k.time_scale.ln(), 100.0 / 3.0, epsilon = 1e-12);
        assert!(kramers_quantities(-0.1, 0.1).is_err());
    }

    #[test]
    fn level_curve_interpolates() {
        let table = ScanTable {
            kind: ModelKind::Transcritical,
            epsilons: vec![0.01, 0.1],
            sigmas: vec![0.01, 0.1, 1.0],
            probability: vec![vec![0.0, 1.0, 1.0], vec![0.0, 0.0, 1.0]],
            n_paths: 10,
            y_stop: 0.0,
        };
        let curve = level_curve(&table, 0.5);
        assert_relative_eq!(curve[0].1, 0.01f64.sqrt() * 0.1f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(fit_level_exponent(&curve).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let s = spec(ModelKind::Fold, 0.02, 0.1);
        assert!(simulate_path(&s, &SimConfig::new(0.2, 1.0, 0, vec![1.0], -1.0)).is_err());
        assert!(simulate_path(&s, &SimConfig::new(0.01, 0.0, 0, vec![1.0], -1.0)).is_err());
        assert!(simulate_path(&s, &SimConfig::new(0.01, 1.0, 0, vec![1.0, 0.0], -1.0)).is_err());
        assert!(simulate_ensemble(&s, &SimConfig::new(0.01, 1.0, 0, vec![1.0], -1.0), 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn escape_fraction_is_monotone(seed in 0u64..1000, sigma in 0.05f64..0.4) {
            let s = spec(ModelKind::Transcritical, 0.05, sigma);
            let cfg = SimConfig::new(0.01, 20.0, seed, vec![0.0], -1.0)
                .with_boundary(BoundaryMode::Absorbing);
            let e = simulate_ensemble(&s, &cfg, 16).unwrap();
            let grid: Vec<f64> = (0..=20).map(|i| -1.0 + 0.05 * i as f64).collect();
            let series = escape_fraction_series(&e, &grid).unwrap();
            prop_assert!(series.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
