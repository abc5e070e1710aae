//! Small numerical kernels shared across modules: quadrature, root finding,
//! least squares and summary statistics.

use crate::error::{Error, Result};

/// Composite Simpson weights for `n_intervals` (even) uniform intervals of
/// width `h`; the returned vector has `n_intervals + 1` entries.
pub fn simpson_weights(n_intervals: usize, h: f64) -> Vec<f64> {
    assert!(n_intervals >= 2 && n_intervals % 2 == 0, "Simpson needs an even interval count");
    let mut w = vec![0.0; n_intervals + 1];
    for (i, wi) in w.iter_mut().enumerate() {
        let c = if i == 0 || i == n_intervals {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        *wi = c * h / 3.0;
    }
    w
}

/// Composite Simpson rule on uniformly spaced samples.
pub fn simpson(ys: &[f64], h: f64) -> f64 {
    let w = simpson_weights(ys.len() - 1, h);
    w.iter().zip(ys).map(|(w, y)| w * y).sum()
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Bisection on a bracket with a sign change. Stops when the bracket is
/// narrower than `tol`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(Error::Prediction(format!(
            "no sign change on [{a}, {b}] (f = {fa}, {fb})"
        )));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a <= tol || m == a || m == b {
            return Ok(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Least-squares polynomial fit. Coefficients are returned lowest order
/// first, in the original (unscaled) variable.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyFit {
    pub coefficients: Vec<f64>,
    /// Sum of squared residuals.
    pub ssr: f64,
}

impl PolyFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (i, c)| acc * x + i as f64 * c)
    }
}

pub fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Result<PolyFit> {
    if xs.len() != ys.len() {
        return Err(Error::contract("polyfit: length mismatch"));
    }
    if xs.len() <= degree {
        return Err(Error::contract(format!(
            "polyfit: need more than {degree} points, got {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let center = xs.iter().sum::<f64>() / n;
    let scale = xs
        .iter()
        .map(|x| (x - center).abs())
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let m = degree + 1;
    // Normal equations in the scaled variable u = (x - center) / scale.
    let mut a = vec![vec![0.0; m + 1]; m];
    for (&x, &y) in xs.iter().zip(ys) {
        let u = (x - center) / scale;
        let mut pows = vec![1.0; m];
        for k in 1..m {
            pows[k] = pows[k - 1] * u;
        }
        for r in 0..m {
            for c in 0..m {
                a[r][c] += pows[r] * pows[c];
            }
            a[r][m] += pows[r] * y;
        }
    }
    let b = solve_augmented(a)?;
    // Expand sum_k b_k ((x - c)/s)^k into powers of x.
    let mut coefficients = vec![0.0; m];
    for (k, bk) in b.iter().enumerate() {
        let factor = bk / scale.powi(k as i32);
        for j in 0..=k {
            let binom = binomial(k, j);
            coefficients[j] += factor * binom * (-center).powi((k - j) as i32);
        }
    }
    let mut fit = PolyFit {
        coefficients,
        ssr: 0.0,
    };
    fit.ssr = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (y - fit.eval(x)).powi(2))
        .sum();
    Ok(fit)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn solve_augmented(mut a: Vec<Vec<f64>>) -> Result<Vec<f64>> {
    let m = a.len();
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::Estimation("singular least-squares system".into()));
        }
        a.swap(col, pivot);
        for row in 0..m {
            if row != col {
                let factor = a[row][col] / a[col][col];
                for k in col..=m {
                    a[row][k] -= factor * a[col][k];
                }
            }
        }
    }
    Ok((0..m).map(|i| a[i][m] / a[i][i]).collect())
}

/// Slope of the least-squares line through `(ln x, ln y)`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<PolyFit> {
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::domain("log-log fit needs strictly positive data"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    polyfit(&lx, &ly, 1)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Variance with the `1/n` normalization.
pub fn population_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64
}

/// Variance with the unbiased `1/(n-1)` normalization.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simpson_is_exact_on_cubics() {
        let h = 0.1;
        let ys: Vec<f64> = (0..=10).map(|i| (i as f64 * h).powi(3)).collect();
        assert_relative_eq!(simpson(&ys, h), 0.25, epsilon = 1e-14);
    }

    #[test]
    fn adaptive_simpson_gaussian() {
        let v = integrate(&|x: f64| (-x * x).exp(), -8.0, 8.0, 1e-12);
        assert_relative_eq!(v, std::f64::consts::PI.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-13).unwrap();
        assert_relative_eq!(r, 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn bisect_without_sign_change_fails() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-10).is_err());
    }

    #[test]
    fn quadratic_fit_recovers_coefficients() {
        let xs: Vec<f64> = (0..20).map(|i| -1.0 + 0.05 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.3 - 2.0 * x + 5.0 * x * x).collect();
        let fit = polyfit(&xs, &ys, 2).unwrap();
        assert_relative_eq!(fit.coefficients[0], 0.3, epsilon = 1e-11);
        assert_relative_eq!(fit.coefficients[1], -2.0, epsilon = 1e-11);
        assert_relative_eq!(fit.coefficients[2], 5.0, epsilon = 1e-11);
        assert!(fit.ssr < 1e-20);
        assert_relative_eq!(fit.derivative(0.5), 3.0, epsilon = 1e-10);
    }

    #[test]
    fn loglog_slope_of_power_law() {
        let xs = [0.05, 0.02, 0.01, 0.005, 0.002];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(2.0 / 3.0)).collect();
        let fit = loglog_slope(&xs, &ys).unwrap();
        assert!((fit.coefficients[1] - 2.0 / 3.0).abs() < 1e-12);
    }
}
