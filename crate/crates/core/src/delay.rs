//! Delayed loss of stability: the jump past a fold, contraction onto the
//! slow manifold and the Hopf way-in/way-out map.
//!
//! All runs here are noise-free and use the RK4 integrator of
//! [`crate::sde::rk4_step`]; section crossings are located by linear
//! interpolation between steps.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{ModelKind, ModelSpec};
use crate::numerics;
use crate::sde::rk4_step;

pub const DEFAULT_RHO: f64 = 0.5;
pub const DEFAULT_DELAY_DT: f64 = 1e-2;

/// Entry section `{y = -ρ²}` and exit section `{x = -ρ}` around the fold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionSpec {
    pub rho: f64,
}

impl Default for SectionSpec {
    fn default() -> Self {
        SectionSpec { rho: DEFAULT_RHO }
    }
}

impl SectionSpec {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::contract(format!("rho must lie in (0, 1], got {rho}")));
        }
        Ok(SectionSpec { rho })
    }

    pub fn y_in(&self) -> f64 {
        -self.rho * self.rho
    }

    pub fn x_out(&self) -> f64 {
        -self.rho
    }

    /// Entry point on the attracting branch.
    pub fn entry_point(&self) -> (f64, f64) {
        (self.rho, self.y_in())
    }
}

fn fold_spec(epsilon: f64) -> Result<ModelSpec> {
    if !(epsilon > 0.0 && epsilon <= 0.1) {
        return Err(Error::contract(format!("epsilon must lie in (0, 0.1], got {epsilon}")));
    }
    ModelSpec::new(ModelKind::Fold, epsilon, 0.0)
}

/// Slow value at which the fold trajectory from `(x0, y0)` first crosses
/// `x = x_out`.
pub fn fold_crossing(epsilon: f64, x0: f64, y0: f64, x_out: f64, dt: f64) -> Result<f64> {
    let spec = fold_spec(epsilon)?;
    let t_max = (1.0 + y0.abs()) / epsilon;
    let steps = (t_max / dt).ceil() as usize;
    let mut s = [x0, 0.0, y0];
    for _ in 0..steps {
        let next = rk4_step(&spec, s, dt);
        if next[0] <= x_out {
            let w = (s[0] - x_out) / (s[0] - next[0]);
            return Ok(s[2] + w * (next[2] - s[2]));
        }
        if !next[0].is_finite() {
            break;
        }
        s = next;
    }
    Err(Error::Horizon(format!("no crossing of x = {x_out} before y = {}", s[2])))
}

/// Slow value at the exit section for a run started on the entry section.
pub fn fold_exit_point(epsilon: f64, section: SectionSpec) -> Result<f64> {
    fold_exit_point_dt(epsilon, section, DEFAULT_DELAY_DT)
}

pub fn fold_exit_point_dt(epsilon: f64, section: SectionSpec, dt: f64) -> Result<f64> {
    let (x0, y0) = section.entry_point();
    fold_crossing(epsilon, x0, y0, section.x_out(), dt)
}

/// Least-squares power law `v = c ε^a`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub epsilons: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn fit_power_law(epsilons: &[f64], values: &[f64]) -> Result<PowerLawFit> {
    let fit = numerics::loglog_slope(epsilons, values)?;
    Ok(PowerLawFit {
        exponent: fit.coefficients[1],
        prefactor: fit.coefficients[0].exp(),
        epsilons: epsilons.to_vec(),
        values: values.to_vec(),
    })
}

/// Fit `y_exit ∝ ε^a` over a grid of at least five values spanning about
/// 1.4 decades.
pub fn fit_delay_exponent(epsilon_grid: &[f64], section: SectionSpec) -> Result<PowerLawFit> {
    if epsilon_grid.len() < 5 {
        return Err(Error::contract("need at least 5 epsilon values"));
    }
    let (lo, hi) = epsilon_grid
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    // 1.4 decades, rounded to one digit so the 0.002..0.05 grid qualifies.
    if (hi / lo).log10() < 1.35 {
        return Err(Error::contract("epsilon grid must span about 1.4 decades"));
    }
    let exits = epsilon_grid
        .iter()
        .map(|&e| fold_exit_point(e, section))
        .collect::<Result<Vec<_>>>()?;
    fit_power_law(epsilon_grid, &exits)
}

/// Separation at the exit section of two runs started `dx0` apart on the
/// entry section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contraction {
    pub epsilon: f64,
    pub dx0: f64,
    pub separation: f64,
    /// The separation is at the level of rounding error.
    pub underflow: bool,
}

pub fn contraction_estimate(epsilon: f64, section: SectionSpec, dx0: f64) -> Result<Contraction> {
    if !(0.0..=0.1).contains(&dx0) {
        return Err(Error::contract("dx0 must lie in [0, 0.1]"));
    }
    let spec = fold_spec(epsilon)?;
    let dt = DEFAULT_DELAY_DT;
    let (x0, y0) = section.entry_point();
    let x_out = section.x_out();
    let mut a = [x0, 0.0, y0];
    let mut b = [x0 + dx0, 0.0, y0];
    let steps = ((1.0 + y0.abs()) / epsilon / dt).ceil() as usize;
    for _ in 0..steps {
        let na = rk4_step(&spec, a, dt);
        let nb = rk4_step(&spec, b, dt);
        if na[0] <= x_out {
            let w = (a[0] - x_out) / (a[0] - na[0]);
            let xb = b[0] + w * (nb[0] - b[0]);
            let separation = (xb - x_out).abs();
            return Ok(Contraction {
                epsilon,
                dx0,
                separation,
                underflow: dx0 > 0.0 && separation < 1e-15 * x_out.abs().max(1.0) * 8.0,
            });
        }
        a = na;
        b = nb;
    }
    Err(Error::Horizon("reference run never reached the exit section".into()))
}

/// Fit `ln(separation/dx0) ≈ c - K/ε`; returns `K`.
pub fn fit_contraction_rate(samples: &[Contraction]) -> Result<f64> {
    let usable: Vec<&Contraction> = samples.iter().filter(|c| !c.underflow && c.separation > 0.0).collect();
    if usable.len() < 2 {
        return Err(Error::Estimation("need two resolved separations".into()));
    }
    let inv: Vec<f64> = usable.iter().map(|c| 1.0 / c.epsilon).collect();
    let logs: Vec<f64> = usable.iter().map(|c| (c.separation / c.dx0).ln()).collect();
    Ok(-numerics::polyfit(&inv, &logs, 1)?.coefficients[1])
}

/// `Ψ(τ) = ∫_0^τ λ₁(s) ds` by adaptive quadrature.
pub fn complex_phase<F: Fn(f64) -> Complex64>(lambda1: &F, tau: f64) -> Complex64 {
    let re = numerics::integrate(&|s| lambda1(s).re, 0.0, tau, 1e-13);
    let im = numerics::integrate(&|s| lambda1(s).im, 0.0, tau, 1e-13);
    Complex64::new(re, im)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayPrediction {
    pub y_entry: f64,
    pub y_exit_predicted: f64,
    pub psi_entry: Complex64,
    pub psi_exit: Complex64,
}

/// Way-in/way-out map: the `τ > 0` with `Re Ψ(τ) = Re Ψ(y_a)`.
pub fn hopf_delay_predict<F: Fn(f64) -> Complex64>(y_a: f64, lambda1: F) -> Result<DelayPrediction> {
    if !(y_a < 0.0) {
        return Err(Error::contract("entry value must be negative"));
    }
    let psi_entry = complex_phase(&lambda1, y_a);
    let target = psi_entry.re;
    let gap = |tau: f64| complex_phase(&lambda1, tau).re - target;
    let mut hi = y_a.abs();
    while gap(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::Prediction("accumulated expansion never balances contraction".into()));
        }
    }
    let tau = numerics::bisect(gap, 0.0, hi, 1e-12)?;
    Ok(DelayPrediction {
        y_entry: y_a,
        y_exit_predicted: tau,
        psi_entry,
        psi_exit: complex_phase(&lambda1, tau),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfDelay {
    pub y_a: f64,
    pub y_r: f64,
}

/// Entry and exit values of `y` for the tube `|x| < halfwidth` around the
/// origin, with `|x|` the planar norm.
pub fn hopf_delay_measure(epsilon: f64, l1: f64, x0: [f64; 2], y0: f64, tube_halfwidth: f64) -> Result<HopfDelay> {
    if !(l1 > 0.0) {
        return Err(Error::contract("measurement targets the subcritical case l1 > 0"));
    }
    if !(epsilon > 0.0 && tube_halfwidth > 0.0) {
        return Err(Error::contract("epsilon and tube width must be > 0"));
    }
    let spec = ModelSpec::new(ModelKind::HopfPlanar, epsilon, 0.0)?.with_l1(l1);
    let dt = DEFAULT_DELAY_DT;
    let y_max = 2.0 * y0.abs() + 1.0;
    let steps = ((y_max - y0) / epsilon / dt).ceil() as usize;
    let mut s = [x0[0], x0[1], y0];
    let mut r = s[0].hypot(s[1]);
    let mut y_a = if r < tube_halfwidth { Some(y0) } else { None };
    for _ in 0..steps {
        let next = rk4_step(&spec, s, dt);
        let rn = next[0].hypot(next[1]);
        if !rn.is_finite() {
            break;
        }
        let cross = |level: f64| {
            let w = (r - level) / (r - rn);
            s[2] + w * (next[2] - s[2])
        };
        match y_a {
            None if rn < tube_halfwidth => y_a = Some(cross(tube_halfwidth)),
            Some(y_a) if rn >= tube_halfwidth => {
                return Ok(HopfDelay {
                    y_a,
                    y_r: cross(tube_halfwidth),
                })
            }
            _ => {}
        }
        s = next;
        r = rn;
    }
    Err(Error::Horizon(match y_a {
        None => "trajectory never entered the tube".into(),
        Some(_) => "trajectory never left the tube".into(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fold_exit_is_order_eps_two_thirds() {
        let y = fold_exit_point(0.02, SectionSpec::default()).unwrap();
        assert!(y > 0.0 && y < 0.3, "{y}");
        let r = y / 0.02f64.powf(2.0 / 3.0);
        assert!((0.5..=3.0).contains(&r), "{r}");
    }

    #[test]
    fn fold_exit_decreases_with_epsilon() {
        let ys: Vec<f64> = [0.05, 0.02, 0.01, 0.005, 0.002]
            .iter()
            .map(|&e| fold_exit_point(e, SectionSpec::default()).unwrap())
            .collect();
        assert!(ys.windows(2).all(|w| w[1] < w[0]), "{ys:?}");
    }

    #[test]
    fn fold_exit_is_stable_under_dt_halving() {
        for eps in [0.05, 0.02, 0.01] {
            let a = fold_exit_point_dt(eps, SectionSpec::default(), 0.01).unwrap();
            let b = fold_exit_point_dt(eps, SectionSpec::default(), 0.005).unwrap();
            assert!((a - b).abs() < 2.0 * 0.01 * eps, "{eps}: {a} vs {b}");
        }
    }

    #[test]
    fn power_law_self_tests() {
        let e = [0.05, 0.02, 0.01, 0.005, 0.002];
        let v: Vec<f64> = e.iter().map(|x: &f64| x.powf(2.0 / 3.0)).collect();
        assert!((fit_power_law(&e, &v).unwrap().exponent - 2.0 / 3.0).abs() < 1e-12);
        assert!((fit_power_law(&e, &e).unwrap().exponent - 1.0).abs() < 1e-12);
        assert!(fit_delay_exponent(&e[..4], SectionSpec::default()).is_err());
        assert!(fit_delay_exponent(&[0.05, 0.04, 0.03, 0.02, 0.01], SectionSpec::default()).is_err());
    }

    #[test]
    fn zero_initial_separation_stays_zero() {
        let c = contraction_estimate(0.05, SectionSpec::default(), 0.0).unwrap();
        assert_eq!(c.separation, 0.0);
    }

    #[test]
    fn symmetric_way_in_way_out() {
        for y_a in [-0.5, -0.3] {
            let p = hopf_delay_predict(y_a, |y| Complex64::new(y, 1.0)).unwrap();
            assert!((p.y_exit_predicted + y_a).abs() < 1e-8);
            assert!((p.psi_exit.re - p.psi_entry.re).abs() < 1e-10);
        }
    }

    #[test]
    fn asymmetric_way_in_way_out_matches_polynomial_root() {
        let p = hopf_delay_predict(-0.4, |y| Complex64::new(y + y * y, 1.0)).unwrap();
        // Re Ψ(τ) = τ²/2 + τ³/3; solve by Newton from the symmetric guess.
        let target = 0.08 - 0.064 / 3.0;
        let mut tau: f64 = 0.4;
        for _ in 0..50 {
            tau -= (tau * tau / 2.0 + tau.powi(3) / 3.0 - target) / (tau + tau * tau);
        }
        assert_relative_eq!(p.y_exit_predicted, tau, epsilon = 1e-9);
        assert!((tau - 0.3116).abs() < 1e-3);
    }

    #[test]
    fn prediction_fails_without_balance() {
        assert!(matches!(
            hopf_delay_predict(-0.5, |_| Complex64::new(-1.0, 1.0)),
            Err(Error::Prediction(_))
        ));
    }

    #[test]
    fn hopf_measurement_shows_delay() {
        let d = hopf_delay_measure(0.01, 1.0, [0.3, 0.3], -0.5, 0.01).unwrap();
        assert!(d.y_a < 0.0 && d.y_r > 0.0, "{d:?}");
        assert!((d.y_r + d.y_a).abs() < 0.1 * d.y_a.abs(), "{d:?}");
    }
}
