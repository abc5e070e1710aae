//! Model catalog: the normal-form fast-slow systems, their critical
//! manifolds, linear stability along each branch and transition metadata.
//!
//! All catalog models are written on the fast time `t`:
//!
//! ```text
//! dx = f(x, y) dt + σ dW        (σ x dW for the Arnold–Boxler model)
//! dy = ε g(x, y) dt
//! ```
//!
//! with `g ≡ 1` except for van der Pol (`g = a - x`) and Arnold–Boxler,
//! where `y` is a frozen parameter.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics;

/// Tolerance used for the bisection fallback on user-supplied drifts.
pub const ROOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// `f = -y - x²`
    Fold,
    /// `f = y x - x²`
    Transcritical,
    /// Subcritical pitchfork, `f = y x + x³`
    Pitchfork,
    /// Planar Hopf normal form in Cartesian coordinates with first
    /// Lyapunov coefficient `l1`.
    HopfPlanar,
    /// `f = y - x³/3 + x`, `g = a - x`
    VanDerPol,
    /// Stratonovich transcritical with multiplicative noise `σ x ∘ dW`.
    ArnoldBoxlerTranscritical,
    /// Linear relaxation `f = -α x`, the model used away from transitions.
    OrnsteinUhlenbeck,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::Fold,
        ModelKind::Transcritical,
        ModelKind::Pitchfork,
        ModelKind::HopfPlanar,
        ModelKind::VanDerPol,
        ModelKind::ArnoldBoxlerTranscritical,
        ModelKind::OrnsteinUhlenbeck,
    ];

    /// The three scalar normal forms used for the variance and
    /// autocorrelation studies.
    pub const SCALAR_TRANSITIONS: [ModelKind; 3] =
        [ModelKind::Fold, ModelKind::Transcritical, ModelKind::Pitchfork];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Fold => "fold",
            ModelKind::Transcritical => "transcritical",
            ModelKind::Pitchfork => "pitchfork",
            ModelKind::HopfPlanar => "hopf",
            ModelKind::VanDerPol => "vdp",
            ModelKind::ArnoldBoxlerTranscritical => "ab",
            ModelKind::OrnsteinUhlenbeck => "ou",
        }
    }

    /// Dimension of the fast variable.
    pub fn fast_dim(self) -> usize {
        match self {
            ModelKind::HopfPlanar => 2,
            _ => 1,
        }
    }

    pub fn noise_type(self) -> NoiseType {
        match self {
            ModelKind::ArnoldBoxlerTranscritical => NoiseType::MultiplicativeLinear,
            _ => NoiseType::Additive,
        }
    }

    /// Whether `y(t) = y0 + ε t` holds exactly.
    pub fn has_unit_slow_drift(self) -> bool {
        !matches!(
            self,
            ModelKind::VanDerPol | ModelKind::ArnoldBoxlerTranscritical
        )
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| {
                let names: Vec<_> = ModelKind::ALL.iter().map(|k| k.name()).collect();
                Error::config(
                    "model",
                    format!("unknown model `{s}`; expected one of {}", names.join(", ")),
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseType {
    Additive,
    MultiplicativeLinear,
}

/// A fully parametrized catalog model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Time-scale ratio; 0 freezes the slow variable.
    pub epsilon: f64,
    pub sigma: f64,
    /// First Lyapunov coefficient (Hopf only).
    pub l1: f64,
    /// Offset of the van der Pol slow drift.
    pub a: f64,
    /// Relaxation rate of the OU model.
    pub alpha: f64,
    pub noise_type: NoiseType,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, epsilon: f64, sigma: f64) -> Result<Self> {
        let spec = ModelSpec {
            kind,
            epsilon,
            sigma,
            l1: 1.0,
            a: 1.05,
            alpha: 1.0,
            noise_type: kind.noise_type(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_l1(mut self, l1: f64) -> Self {
        self.l1 = l1;
        self
    }

    pub fn with_a(mut self, a: f64) -> Self {
        self.a = a;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::contract(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::contract(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if self.noise_type != self.kind.noise_type() {
            return Err(Error::contract(
                "multiplicative noise is reserved for the Arnold-Boxler model",
            ));
        }
        if self.kind == ModelKind::OrnsteinUhlenbeck && !(self.alpha > 0.0) {
            return Err(Error::contract("OU model needs alpha > 0"));
        }
        if !(self.l1.is_finite() && self.a.is_finite()) {
            return Err(Error::contract("model constants must be finite"));
        }
        Ok(())
    }

    /// Fast drift `f(x, y)` for a state of the model's dimension.
    pub fn fast_drift(&self, x: &[f64], y: f64) -> Result<Vec<f64>> {
        let state = self.state_from_slice(x)?;
        let f = self.drift(state, y);
        Ok(f[..self.kind.fast_dim()].to_vec())
    }

    pub(crate) fn state_from_slice(&self, x: &[f64]) -> Result<[f64; 2]> {
        let dim = self.kind.fast_dim();
        if x.len() != dim {
            return Err(Error::contract(format!(
                "{} expects a fast state of dimension {dim}, got {}",
                self.kind,
                x.len()
            )));
        }
        Ok(if dim == 2 { [x[0], x[1]] } else { [x[0], 0.0] })
    }

    /// Deterministic fast drift on the padded two-component state.
    #[inline]
    pub(crate) fn drift(&self, x: [f64; 2], y: f64) -> [f64; 2] {
        let u = x[0];
        match self.kind {
            ModelKind::Fold => [-y - u * u, 0.0],
            ModelKind::Transcritical | ModelKind::ArnoldBoxlerTranscritical => {
                [y * u - u * u, 0.0]
            }
            ModelKind::Pitchfork => [y * u + u * u * u, 0.0],
            ModelKind::HopfPlanar => {
                let r2 = x[0] * x[0] + x[1] * x[1];
                [
                    y * x[0] - x[1] + self.l1 * x[0] * r2,
                    x[0] + y * x[1] + self.l1 * x[1] * r2,
                ]
            }
            ModelKind::VanDerPol => [y - u * u * u / 3.0 + u, 0.0],
            ModelKind::OrnsteinUhlenbeck => [-self.alpha * u, 0.0],
        }
    }

    /// Slow drift `g(x, y)`, to be multiplied by `ε`.
    #[inline]
    pub(crate) fn slow_drift(&self, x: [f64; 2]) -> f64 {
        match self.kind {
            ModelKind::VanDerPol => self.a - x[0],
            ModelKind::ArnoldBoxlerTranscritical => 0.0,
            _ => 1.0,
        }
    }

    /// `∂f/∂x` for the scalar models.
    fn dfdx(&self, x: f64, y: f64) -> f64 {
        match self.kind {
            ModelKind::Fold => -2.0 * x,
            ModelKind::Transcritical | ModelKind::ArnoldBoxlerTranscritical => y - 2.0 * x,
            ModelKind::Pitchfork => y + 3.0 * x * x,
            ModelKind::VanDerPol => 1.0 - x * x,
            ModelKind::OrnsteinUhlenbeck => -self.alpha,
            // Real part of the complex pair at the origin.
            ModelKind::HopfPlanar => y,
        }
    }

    /// All real roots of `f(·, y) = 0` on normally hyperbolic branches.
    pub fn manifold_branches(&self, y: f64) -> Vec<ManifoldPoint> {
        branches_of(self.kind)
            .into_iter()
            .filter(|b| b.y_domain.contains(y))
            .map(|branch| ManifoldPoint {
                x: branch.x_of_y(y),
                branch,
            })
            .collect()
    }

    /// The branch that is attracting for `y < 0` and loses stability at the
    /// transition.
    pub fn approach_branch(&self) -> Result<ManifoldBranch> {
        let id = match self.kind {
            ModelKind::Fold => BranchId::FoldUpper,
            ModelKind::Transcritical
            | ModelKind::ArnoldBoxlerTranscritical
            | ModelKind::Pitchfork => BranchId::Trivial,
            ModelKind::HopfPlanar => BranchId::Origin,
            ModelKind::OrnsteinUhlenbeck => BranchId::Origin,
            ModelKind::VanDerPol => {
                return Err(Error::domain("van der Pol has no transition at y = 0"))
            }
        };
        Ok(branches_of(self.kind)
            .into_iter()
            .find(|b| b.id == id && b.stability == Stability::Attracting)
            .expect("catalog branch"))
    }

    /// Real part of the least stable eigenvalue of `D_x f` on `branch`.
    pub fn leading_eigenvalue(&self, y: f64, branch: &ManifoldBranch) -> Result<f64> {
        if branch.kind != self.kind {
            return Err(Error::contract("branch belongs to a different model"));
        }
        if !branch.y_domain.contains(y) {
            return Err(Error::domain(format!(
                "y = {y} outside branch {} domain ({}, {})",
                branch.id.label(),
                branch.y_domain.lo,
                branch.y_domain.hi
            )));
        }
        Ok(self.dfdx(branch.x_of_y(y), y))
    }

    /// Log-log slope of `|λ(y)|` against `|y|` along the approach branch.
    pub fn fit_recovery_exponent(&self, y_samples: &[f64]) -> Result<RecoveryFit> {
        if y_samples.len() < 5 {
            return Err(Error::contract("need at least 5 y samples"));
        }
        if let Some(y) = y_samples.iter().find(|y| !(**y < 0.0)) {
            return Err(Error::domain(format!("recovery fit needs y < 0, got {y}")));
        }
        let mags: Vec<f64> = y_samples.iter().map(|y| y.abs()).collect();
        let span = mags.iter().cloned().fold(0.0, f64::max)
            / mags.iter().cloned().fold(f64::INFINITY, f64::min);
        if span < 100.0 * (1.0 - 1e-9) {
            return Err(Error::contract("y samples must span at least two decades"));
        }
        let branch = self.approach_branch()?;
        let lambdas = y_samples
            .iter()
            .map(|&y| self.leading_eigenvalue(y, &branch).map(f64::abs))
            .collect::<Result<Vec<_>>>()?;
        let fit = numerics::loglog_slope(&mags, &lambdas)?;
        Ok(RecoveryFit {
            exponent: fit.coefficients[1],
            residual: (fit.ssr / mags.len() as f64).sqrt(),
        })
    }
}

/// Result of [`ModelSpec::fit_recovery_exponent`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryFit {
    pub exponent: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Attracting,
    Repelling,
}

/// Open interval `(lo, hi)`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        v > self.lo && v < self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BranchId {
    /// `x = √(-y)` of the fold.
    FoldUpper,
    /// `x = -√(-y)` of the fold.
    FoldLower,
    /// `x = 0`.
    Trivial,
    /// `x = y` of the transcritical normal form.
    Diagonal,
    PitchforkUpper,
    PitchforkLower,
    /// Origin of the planar Hopf model or the OU model.
    Origin,
    /// Van der Pol branch with `x < -1`.
    VdpLeft,
    /// Van der Pol branch with `-1 < x < 1`.
    VdpMiddle,
    /// Van der Pol branch with `x > 1`.
    VdpRight,
}

impl BranchId {
    pub fn label(self) -> &'static str {
        match self {
            BranchId::FoldUpper => "fold-upper",
            BranchId::FoldLower => "fold-lower",
            BranchId::Trivial => "trivial",
            BranchId::Diagonal => "diagonal",
            BranchId::PitchforkUpper => "pitchfork-upper",
            BranchId::PitchforkLower => "pitchfork-lower",
            BranchId::Origin => "origin",
            BranchId::VdpLeft => "vdp-left",
            BranchId::VdpMiddle => "vdp-middle",
            BranchId::VdpRight => "vdp-right",
        }
    }
}

/// A normally hyperbolic piece of the critical manifold with constant
/// stability over `y_domain`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldBranch {
    pub kind: ModelKind,
    pub id: BranchId,
    pub stability: Stability,
    pub y_domain: Interval,
}

impl ManifoldBranch {
    /// Graph `x = h0(y)` of the branch (the first coordinate for Hopf, whose
    /// branch is the origin of the plane).
    pub fn x_of_y(&self, y: f64) -> f64 {
        match self.id {
            BranchId::FoldUpper | BranchId::PitchforkUpper => (-y).sqrt(),
            BranchId::FoldLower | BranchId::PitchforkLower => -(-y).sqrt(),
            BranchId::Trivial | BranchId::Origin => 0.0,
            BranchId::Diagonal => y,
            BranchId::VdpLeft | BranchId::VdpMiddle | BranchId::VdpRight => vdp_root(self.id, y),
        }
    }
}

/// A point on the critical manifold at a given `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldPoint {
    pub branch: ManifoldBranch,
    pub x: f64,
}

impl ManifoldPoint {
    pub fn stability(&self) -> Stability {
        self.branch.stability
    }
}

fn branches_of(kind: ModelKind) -> Vec<ManifoldBranch> {
    use BranchId::*;
    use Stability::*;
    let neg = Interval::new(f64::NEG_INFINITY, 0.0);
    let pos = Interval::new(0.0, f64::INFINITY);
    let all = Interval::new(f64::NEG_INFINITY, f64::INFINITY);
    let b = |id, stability, y_domain| ManifoldBranch {
        kind,
        id,
        stability,
        y_domain,
    };
    match kind {
        ModelKind::Fold => vec![b(FoldUpper, Attracting, neg), b(FoldLower, Repelling, neg)],
        ModelKind::Transcritical | ModelKind::ArnoldBoxlerTranscritical => vec![
            b(Trivial, Attracting, neg),
            b(Diagonal, Repelling, neg),
            b(Trivial, Repelling, pos),
            b(Diagonal, Attracting, pos),
        ],
        ModelKind::Pitchfork => vec![
            b(Trivial, Attracting, neg),
            b(PitchforkUpper, Repelling, neg),
            b(PitchforkLower, Repelling, neg),
            b(Trivial, Repelling, pos),
        ],
        ModelKind::HopfPlanar => vec![b(Origin, Attracting, neg), b(Origin, Repelling, pos)],
        ModelKind::VanDerPol => vec![
            b(VdpLeft, Attracting, Interval::new(f64::NEG_INFINITY, 2.0 / 3.0)),
            b(VdpMiddle, Repelling, Interval::new(-2.0 / 3.0, 2.0 / 3.0)),
            b(VdpRight, Attracting, Interval::new(-2.0 / 3.0, f64::INFINITY)),
        ],
        ModelKind::OrnsteinUhlenbeck => vec![b(Origin, Attracting, all)],
    }
}

/// Roots of `x³/3 - x = y`, i.e. the depressed cubic `x³ - 3x - 3y = 0`.
fn vdp_root(id: BranchId, y: f64) -> f64 {
    let c = 1.5 * y;
    if c.abs() <= 1.0 {
        let phi = c.acos() / 3.0;
        // Trigonometric form: x_k = 2 cos(phi - 2πk/3); k = 0 is the largest.
        match id {
            BranchId::VdpRight => 2.0 * phi.cos(),
            BranchId::VdpLeft => 2.0 * (phi - 4.0 * PI / 3.0).cos(),
            _ => 2.0 * (phi - 2.0 * PI / 3.0).cos(),
        }
    } else {
        // Single real root.
        2.0 * c.signum() * (c.abs().acosh() / 3.0).cosh()
    }
}

/// Root of a user-supplied scalar drift on a bracketing interval, for
/// systems outside the closed-form catalog.
pub fn find_branch_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Result<f64> {
    numerics::bisect(f, lo, hi, ROOT_TOL).map_err(|e| Error::domain(e.to_string()))
}

/// Polar coordinates `(r, θ)` of a planar Hopf state.
pub fn hopf_to_polar(x: [f64; 2]) -> (f64, f64) {
    (x[0].hypot(x[1]), x[1].atan2(x[0]))
}

/// Polar form of the Hopf drift: `(r', θ') = (y r + l1 r³, 1)`.
pub fn hopf_polar_drift(r: f64, y: f64, l1: f64) -> (f64, f64) {
    (y * r + l1 * r * r * r, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criticality {
    Subcritical,
    Supercritical,
}

/// Exact rational number, used for recovery exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub num: u32,
    pub den: u32,
}

impl Ratio {
    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionInfo {
    pub kind: ModelKind,
    pub is_critical_transition: bool,
    /// Distance to the closest reachable fast-subsystem attractor.
    pub l_inf: f64,
    /// Distance to the most distant reachable attractor.
    pub l_sup: f64,
    pub recovery_exponent: Ratio,
}

/// Classification of the transition at `y = 0` for each normal form.
/// Hopf and pitchfork need the sub/supercritical selector.
pub fn transition_info(kind: ModelKind, criticality: Option<Criticality>) -> Result<TransitionInfo> {
    let half = Ratio { num: 1, den: 2 };
    let one = Ratio { num: 1, den: 1 };
    let info = |critical, l_inf, l_sup, recovery_exponent| TransitionInfo {
        kind,
        is_critical_transition: critical,
        l_inf,
        l_sup,
        recovery_exponent,
    };
    match kind {
        ModelKind::Fold => Ok(info(true, f64::INFINITY, f64::INFINITY, half)),
        ModelKind::Transcritical | ModelKind::ArnoldBoxlerTranscritical => {
            Ok(info(true, 0.0, f64::INFINITY, one))
        }
        ModelKind::Pitchfork | ModelKind::HopfPlanar => match criticality {
            Some(Criticality::Subcritical) => Ok(info(true, f64::INFINITY, f64::INFINITY, one)),
            // The bifurcating attractor grows continuously out of the branch.
            Some(Criticality::Supercritical) => Ok(info(false, 0.0, 0.0, one)),
            None => Err(Error::contract(format!(
                "{kind} needs a sub/supercritical selector"
            ))),
        },
        ModelKind::VanDerPol | ModelKind::OrnsteinUhlenbeck => Err(Error::domain(format!(
            "{kind} is not a local normal form with a transition at y = 0"
        ))),
    }
}

/// Walls of the escape domain: reflecting for stationary densities,
/// absorbing for simulations.
pub fn escape_boundaries(kind: ModelKind, y: f64) -> Result<Interval> {
    match kind {
        ModelKind::Fold => {
            if y < 0.0 {
                Ok(Interval::new(-(-y).sqrt(), f64::INFINITY))
            } else {
                Err(Error::domain(format!("fold walls degenerate for y = {y} >= 0")))
            }
        }
        ModelKind::Transcritical | ModelKind::ArnoldBoxlerTranscritical => {
            Ok(Interval::new(y, f64::INFINITY))
        }
        ModelKind::Pitchfork => {
            if y < 0.0 {
                let r = (-y).sqrt();
                Ok(Interval::new(-r, r))
            } else {
                Err(Error::domain(format!("pitchfork walls degenerate for y = {y} >= 0")))
            }
        }
        _ => Err(Error::domain(format!("{kind} has no escape walls"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spec(kind: ModelKind) -> ModelSpec {
        ModelSpec::new(kind, 0.02, 0.1).unwrap()
    }

    #[test]
    fn fast_drift_examples() {
        assert_eq!(spec(ModelKind::Fold).fast_drift(&[1.0], -1.0).unwrap(), vec![0.0]);
        assert_eq!(spec(ModelKind::Transcritical).fast_drift(&[0.0], 0.7).unwrap(), vec![0.0]);
        let v = spec(ModelKind::VanDerPol).fast_drift(&[2.0], 2.0 / 3.0).unwrap()[0];
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn fast_drift_dimension_mismatch() {
        let err = spec(ModelKind::HopfPlanar).fast_drift(&[1.0], 0.0).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
        assert!(spec(ModelKind::Fold).fast_drift(&[1.0, 2.0], 0.0).is_err());
    }

    #[test]
    fn noise_type_is_tied_to_kind() {
        let mut s = spec(ModelKind::Fold);
        s.noise_type = NoiseType::MultiplicativeLinear;
        assert!(s.validate().is_err());
        assert_eq!(
            spec(ModelKind::ArnoldBoxlerTranscritical).noise_type,
            NoiseType::MultiplicativeLinear
        );
        assert!(ModelSpec::new(ModelKind::Fold, -0.1, 0.1).is_err());
        assert!(ModelSpec::new(ModelKind::Fold, 0.1, -0.1).is_err());
    }

    fn labels(points: &[ManifoldPoint]) -> Vec<(f64, Stability)> {
        let mut v: Vec<_> = points.iter().map(|p| (p.x, p.stability())).collect();
        v.sort_by(|a, b| b.0.total_cmp(&a.0));
        v
    }

    #[test]
    fn branch_examples() {
        use Stability::*;
        assert_eq!(
            labels(&spec(ModelKind::Fold).manifold_branches(-1.0)),
            vec![(1.0, Attracting), (-1.0, Repelling)]
        );
        assert!(spec(ModelKind::Fold).manifold_branches(0.5).is_empty());
        assert_eq!(
            labels(&spec(ModelKind::Transcritical).manifold_branches(-1.0)),
            vec![(0.0, Attracting), (-1.0, Repelling)]
        );
        assert_eq!(
            labels(&spec(ModelKind::Pitchfork).manifold_branches(-1.0)),
            vec![(1.0, Repelling), (0.0, Attracting), (-1.0, Repelling)]
        );
    }

    #[test]
    fn vdp_branches_cover_the_cubic() {
        let s = spec(ModelKind::VanDerPol);
        let pts = s.manifold_branches(0.0);
        assert_eq!(pts.len(), 3);
        let mut xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
        xs.sort_by(f64::total_cmp);
        assert_relative_eq!(xs[0], -3f64.sqrt(), epsilon = 1e-12);
        assert!(xs[1].abs() < 1e-12);
        assert_relative_eq!(xs[2], 3f64.sqrt(), epsilon = 1e-12);
        let right = s.manifold_branches(2.0 / 3.0 + 1e-3);
        assert_eq!(right.len(), 1);
        assert!(right[0].x > 1.0);
        let left = s.manifold_branches(-5.0);
        assert_eq!(left.len(), 1);
        assert!(left[0].x < -1.0);
    }

    #[test]
    fn leading_eigenvalue_examples() {
        let fold = spec(ModelKind::Fold);
        let b = fold.approach_branch().unwrap();
        assert_relative_eq!(fold.leading_eigenvalue(-0.25, &b).unwrap(), -1.0);
        assert!(fold.leading_eigenvalue(-1e-300, &b).unwrap().abs() < 1e-140);
        assert!(matches!(fold.leading_eigenvalue(0.1, &b), Err(Error::Domain(_))));
        let tc = spec(ModelKind::Transcritical);
        let b = tc.approach_branch().unwrap();
        assert_relative_eq!(tc.leading_eigenvalue(-0.5, &b).unwrap(), -0.5);
    }

    #[test]
    fn recovery_exponents() {
        let grid: Vec<f64> = (0..=12).map(|i| -10f64.powf(-1.0 - 0.25 * i as f64)).collect();
        let fold = spec(ModelKind::Fold).fit_recovery_exponent(&grid).unwrap();
        assert!((fold.exponent - 0.5).abs() < 1e-6);
        for kind in [ModelKind::Pitchfork, ModelKind::Transcritical, ModelKind::HopfPlanar] {
            let fit = spec(kind).fit_recovery_exponent(&grid).unwrap();
            assert!((fit.exponent - 1.0).abs() < 1e-6, "{kind}: {}", fit.exponent);
        }
    }

    #[test]
    fn recovery_fit_preconditions() {
        let s = spec(ModelKind::Fold);
        assert!(matches!(
            s.fit_recovery_exponent(&[-0.1, -0.01, 0.0, -0.001, -0.0001]),
            Err(Error::Domain(_))
        ));
        assert!(s.fit_recovery_exponent(&[-0.1, -0.09, -0.08, -0.07, -0.06]).is_err());
        assert!(s.fit_recovery_exponent(&[-0.1, -0.01]).is_err());
    }

    #[test]
    fn transition_table() {
        let fold = transition_info(ModelKind::Fold, None).unwrap();
        assert!(fold.is_critical_transition);
        assert!(fold.l_inf.is_infinite() && fold.l_sup.is_infinite());
        assert_eq!(fold.recovery_exponent, Ratio { num: 1, den: 2 });

        let hopf = transition_info(ModelKind::HopfPlanar, Some(Criticality::Supercritical)).unwrap();
        assert!(!hopf.is_critical_transition);
        let hopf = transition_info(ModelKind::HopfPlanar, Some(Criticality::Subcritical)).unwrap();
        assert!(hopf.is_critical_transition);

        let tc = transition_info(ModelKind::Transcritical, None).unwrap();
        assert!(tc.is_critical_transition);
        assert_eq!(tc.l_inf, 0.0);
        assert!(tc.l_sup.is_infinite());
        assert_eq!(tc.recovery_exponent.as_f64(), 1.0);

        assert!(transition_info(ModelKind::Pitchfork, None).is_err());
        for kind in ModelKind::ALL {
            if let Ok(info) = transition_info(kind, Some(Criticality::Subcritical)) {
                assert!(info.l_inf <= info.l_sup);
                let a = info.recovery_exponent.as_f64();
                assert!(a == 0.5 || a == 1.0);
            }
        }
    }

    #[test]
    fn escape_boundary_examples() {
        assert_eq!(
            escape_boundaries(ModelKind::Fold, -1.0).unwrap(),
            Interval::new(-1.0, f64::INFINITY)
        );
        assert_eq!(
            escape_boundaries(ModelKind::Pitchfork, -0.25).unwrap(),
            Interval::new(-0.5, 0.5)
        );
        assert_eq!(
            escape_boundaries(ModelKind::Transcritical, -0.3).unwrap(),
            Interval::new(-0.3, f64::INFINITY)
        );
        assert!(escape_boundaries(ModelKind::Fold, 0.0).is_err());
        assert!(escape_boundaries(ModelKind::Pitchfork, 0.1).is_err());
    }

    #[test]
    fn polar_form_matches_cartesian() {
        let s = spec(ModelKind::HopfPlanar).with_l1(0.7);
        let x = [0.3, -0.4];
        let y = -0.2;
        let f = s.fast_drift(&x, y).unwrap();
        let (r, _) = hopf_to_polar(x);
        let radial = (x[0] * f[0] + x[1] * f[1]) / r;
        let angular = (x[0] * f[1] - x[1] * f[0]) / (r * r);
        let (dr, dtheta) = hopf_polar_drift(r, y, 0.7);
        assert_relative_eq!(radial, dr, epsilon = 1e-14);
        assert_relative_eq!(angular, dtheta, epsilon = 1e-14);
    }

    #[test]
    fn bisection_fallback_matches_closed_form() {
        let root = find_branch_root(|x| -(-0.3) - x * x, 0.0, 2.0).unwrap();
        assert_relative_eq!(root, 0.3f64.sqrt(), epsilon = 1e-11);
    }

    #[test]
    fn names_round_trip() {
        for kind in ModelKind::ALL {
            assert_eq!(kind.name().parse::<ModelKind>().unwrap(), kind);
        }
        assert!("saddle".parse::<ModelKind>().is_err());
    }

    proptest! {
        #[test]
        fn branch_points_are_equilibria_with_consistent_stability(
            kind_idx in 0usize..7,
            y in -3.0f64..3.0,
        ) {
            let kind = ModelKind::ALL[kind_idx];
            let s = spec(kind);
            for p in s.manifold_branches(y) {
                let mut x = vec![p.x; kind.fast_dim()];
                if kind == ModelKind::HopfPlanar { x = vec![0.0, 0.0]; }
                let f = s.fast_drift(&x, y).unwrap();
                prop_assert!(f.iter().all(|v| v.abs() < 1e-12), "{kind} y={y} f={f:?}");
                let lambda = s.leading_eigenvalue(y, &p.branch).unwrap();
                match p.stability() {
                    Stability::Attracting => prop_assert!(lambda < 0.0),
                    Stability::Repelling => prop_assert!(lambda > 0.0),
                }
            }
        }

        #[test]
        fn walls_contain_the_attracting_point(kind_idx in 0usize..3, y in -4.0f64..-1e-6) {
            let kind = ModelKind::SCALAR_TRANSITIONS[kind_idx];
            let s = spec(kind);
            let b = s.approach_branch().unwrap();
            let walls = escape_boundaries(kind, y).unwrap();
            prop_assert!(walls.contains(b.x_of_y(y)));
        }
    }
}
