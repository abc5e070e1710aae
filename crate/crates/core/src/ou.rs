//! The linear regime away from transitions: Ornstein–Uhlenbeck closed forms,
//! the variance neighborhood of the slow manifold, detrending and OU
//! parameter estimation.
//!
//! The OU model here lives on the slow time `τ`:
//! `dx = -(α/ε) x dτ + (σ/√ε) dW`. On fast time this is `dx = -α x dt + σ dW`,
//! which is how [`crate::ModelKind::OrnsteinUhlenbeck`] is simulated.
//!
//! The transient variance in [`ou_moments`] is
//! `(x0 - σ²/2α) e^{-2ατ/ε} + σ²/2α`. For a deterministic start the exact
//! process has variance `(σ²/2α)(1 - e^{-2ατ/ε})`; the two agree once
//! `τ ≫ ε/α`, which is the only regime the rest of the crate relies on.

use crate::error::{Error, Result};
use crate::model::{ManifoldBranch, ModelKind, ModelSpec, Stability};
use crate::sde::SamplePath;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuMoments {
    pub mean: f64,
    pub variance: f64,
    /// `E[x_τ x_s]`.
    pub correlation: f64,
}

pub fn ou_moments(alpha: f64, sigma: f64, epsilon: f64, x0: f64, tau: f64, s: f64) -> Result<OuMoments> {
    if !(alpha > 0.0 && epsilon > 0.0) {
        return Err(Error::contract("ou_moments needs alpha > 0 and epsilon > 0"));
    }
    if tau < 0.0 || s < 0.0 {
        return Err(Error::contract("times must be >= 0"));
    }
    let stat = sigma * sigma / (2.0 * alpha);
    let rate = alpha / epsilon;
    Ok(OuMoments {
        mean: x0 * (-rate * tau).exp(),
        variance: (x0 - stat) * (-2.0 * rate * tau).exp() + stat,
        correlation: -stat * (-rate * (tau + s)).exp() + stat * (-rate * (tau - s).abs()).exp(),
    })
}

/// `σ² / (2α)`.
pub fn stationary_variance(alpha: f64, sigma: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::domain(format!("alpha must be > 0, got {alpha}")));
    }
    Ok(sigma * sigma / (2.0 * alpha))
}

/// Neighborhood `N(r) = {(x - h0(y))² / (σ² H(y)) < r²}` of an attracting
/// branch, with `H = -1/(2A)` and `A = ∂f/∂x` on the branch.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodSpec {
    pub spec: ModelSpec,
    pub branch: ManifoldBranch,
    pub r: f64,
    pub ys: Vec<f64>,
    pub h0: Vec<f64>,
    pub big_h: Vec<f64>,
}

impl NeighborhoodSpec {
    pub fn h0_at(&self, y: f64) -> f64 {
        self.branch.x_of_y(y)
    }

    pub fn big_h_at(&self, y: f64) -> Result<f64> {
        variance_scale(&self.spec, &self.branch, y)
    }

    /// Half-width `r σ √H` at grid index `i`.
    pub fn half_width(&self, i: usize) -> f64 {
        self.r * self.spec.sigma * self.big_h[i].sqrt()
    }

    pub fn band(&self) -> Vec<(f64, f64, f64, f64)> {
        (0..self.ys.len())
            .map(|i| {
                let w = self.half_width(i);
                (self.ys[i], self.h0[i], self.h0[i] - w, self.h0[i] + w)
            })
            .collect()
    }
}

fn variance_scale(spec: &ModelSpec, branch: &ManifoldBranch, y: f64) -> Result<f64> {
    let a = spec.leading_eigenvalue(y, branch)?;
    if !(a < 0.0) {
        return Err(Error::domain(format!(
            "branch is not normally hyperbolic and attracting at y = {y} (A = {a})"
        )));
    }
    Ok(-1.0 / (2.0 * a))
}

pub fn variance_profile(spec: &ModelSpec, branch: &ManifoldBranch, y_grid: &[f64], r: f64) -> Result<NeighborhoodSpec> {
    if branch.stability != Stability::Attracting {
        return Err(Error::domain("variance profile needs an attracting branch"));
    }
    let big_h = y_grid
        .iter()
        .map(|&y| variance_scale(spec, branch, y))
        .collect::<Result<Vec<_>>>()?;
    Ok(NeighborhoodSpec {
        spec: *spec,
        branch: *branch,
        r,
        ys: y_grid.to_vec(),
        h0: y_grid.iter().map(|&y| branch.x_of_y(y)).collect(),
        big_h,
    })
}

/// Fraction of recorded samples inside `N(r)`.
pub fn containment_fraction(path: &SamplePath, nbhd: &NeighborhoodSpec, r: f64) -> Result<f64> {
    if path.kind != nbhd.spec.kind {
        return Err(Error::contract("path and neighborhood belong to different models"));
    }
    if path.is_empty() {
        return Err(Error::contract("empty path"));
    }
    let scale = nbhd.spec.sigma * nbhd.spec.sigma;
    let mut inside = 0usize;
    for (&x, &y) in path.xs.iter().zip(&path.ys) {
        let h = nbhd.big_h_at(y)?;
        let d = x - nbhd.h0_at(y);
        if d * d < r * r * scale * h {
            inside += 1;
        }
    }
    Ok(inside as f64 / path.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetrendMethod {
    /// Subtract the attracting branch `h0(y)`.
    SubtractBranch,
    /// Subtract a centered moving average over `window` samples.
    MovingAverage { window: usize },
}

impl DetrendMethod {
    /// Moving average spanning `0.1` of slow time.
    pub fn default_moving_average(epsilon: f64, dt: f64) -> Self {
        DetrendMethod::MovingAverage {
            window: ((0.1 / epsilon) / dt).round().max(1.0) as usize,
        }
    }
}

/// Residuals `ξ = x - trend` on the path's grid.
pub fn detrend(path: &SamplePath, method: DetrendMethod) -> Result<Vec<f64>> {
    match method {
        DetrendMethod::SubtractBranch => {
            if path.kind == ModelKind::VanDerPol {
                return Err(Error::contract("no single attracting branch for van der Pol; use a moving average"));
            }
            let spec = ModelSpec::new(path.kind, path.epsilon, path.sigma)?;
            let branch = spec.approach_branch()?;
            Ok(path
                .xs
                .iter()
                .zip(&path.ys)
                .map(|(&x, &y)| x - branch.x_of_y(y))
                .collect())
        }
        DetrendMethod::MovingAverage { window } => moving_average_residuals(&path.xs, window),
    }
}

/// Residuals about a centered moving average; the window shrinks
/// symmetrically near the ends.
pub fn moving_average_residuals(xs: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 || window > xs.len() {
        return Err(Error::contract(format!(
            "moving-average window {window} must lie in 1..={}",
            xs.len()
        )));
    }
    let n = xs.len();
    let half = window / 2;
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + xs[i];
    }
    Ok((0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            let (lo, hi) = (i - h, i + h + 1);
            xs[i] - (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect())
}

/// Discrete-time OU fit on the slow time scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuParams {
    /// `α/ε`.
    pub alpha_tilde: f64,
    /// `σ/√ε`.
    pub sigma_tilde: f64,
    /// Lag-one regression coefficient.
    pub phi: f64,
    pub dt: f64,
}

impl OuParams {
    /// The decay happens within one sample, so the rate is poorly resolved.
    pub fn is_out_of_band(&self) -> bool {
        self.alpha_tilde * self.dt > 1.0
    }

    /// `ε` implied by assuming `α = 1`.
    pub fn epsilon_for_unit_alpha(&self) -> f64 {
        1.0 / self.alpha_tilde
    }
}

/// Maximum-likelihood estimate of `dξ = -α̃ ξ dτ + σ̃ dW` from residuals
/// sampled every `dt` units of slow time.
pub fn estimate_ou_params(residuals: &[f64], dt: f64) -> Result<OuParams> {
    if residuals.len() < 100 {
        return Err(Error::contract("need at least 100 residuals"));
    }
    if !(dt > 0.0) {
        return Err(Error::contract("dt must be > 0"));
    }
    let (lead, lag) = (&residuals[..residuals.len() - 1], &residuals[1..]);
    let sxx: f64 = lead.iter().map(|x| x * x).sum();
    let sxy: f64 = lead.iter().zip(lag).map(|(a, b)| a * b).sum();
    if !(sxx > 0.0) {
        return Err(Error::Estimation("residuals are identically zero".into()));
    }
    let phi = sxy / sxx;
    if !(phi > 0.0 && phi < 1.0) {
        return Err(Error::Estimation(format!(
            "lag-one coefficient {phi} outside (0, 1); segment is not a stationary OU window"
        )));
    }
    let resid: Vec<f64> = lead.iter().zip(lag).map(|(a, b)| b - phi * a).collect();
    let s2 = resid.iter().map(|r| r * r).sum::<f64>() / resid.len() as f64;
    let alpha_tilde = -phi.ln() / dt;
    let sigma2 = s2 * 2.0 * alpha_tilde / (1.0 - phi * phi);
    Ok(OuParams {
        alpha_tilde,
        sigma_tilde: sigma2.sqrt(),
        phi,
        dt,
    })
}
