//! Early-warning statistics on paths and ensembles: cross-sectional and
//! sliding-window variance, lag-k autocorrelation and trend fits.

use crate::error::{Error, Result};
use crate::numerics::{self, PolyFit};
use crate::sde::{Ensemble, SamplePath};

/// A statistic indexed by the slow variable.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSeries {
    pub name: String,
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
    /// Surviving paths (ensembles) or samples (single paths) behind each value.
    pub n_contributing: Vec<usize>,
    /// Grid points dropped because the statistic was undefined there.
    pub omitted: Vec<f64>,
}

impl IndicatorSeries {
    pub fn new(name: &str, ys: Vec<f64>, values: Vec<f64>, n_contributing: Vec<usize>) -> Self {
        assert_eq!(ys.len(), values.len());
        assert_eq!(ys.len(), n_contributing.len());
        IndicatorSeries {
            name: name.to_string(),
            ys,
            values,
            n_contributing,
            omitted: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    /// Restrict to `lo <= y <= hi`.
    pub fn restrict(&self, lo: f64, hi: f64) -> IndicatorSeries {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.ys[i] >= lo && self.ys[i] <= hi).collect();
        IndicatorSeries {
            name: self.name.clone(),
            ys: keep.iter().map(|&i| self.ys[i]).collect(),
            values: keep.iter().map(|&i| self.values[i]).collect(),
            n_contributing: keep.iter().map(|&i| self.n_contributing[i]).collect(),
            omitted: self.omitted.iter().copied().filter(|y| *y >= lo && *y <= hi).collect(),
        }
    }
}

/// Sliding window of length `s` in fast time, evaluated every `stride`
/// samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpec {
    pub s: f64,
    pub stride: usize,
}

impl WindowSpec {
    pub fn new(s: f64, stride: usize) -> Result<Self> {
        if !(s > 0.0) || stride == 0 {
            return Err(Error::contract("window needs s > 0 and stride >= 1"));
        }
        Ok(WindowSpec { s, stride })
    }

    /// Window covering `y_length` of the slow variable at rate `epsilon`.
    pub fn from_y_length(y_length: f64, epsilon: f64, stride: usize) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::contract("epsilon must be > 0"));
        }
        WindowSpec::new(y_length / epsilon, stride)
    }

    /// Number of samples `N*` in a window at spacing `dt`.
    pub fn samples(&self, dt: f64) -> Result<usize> {
        let n = (self.s / dt + 1e-9).floor() as usize + 1;
        if n < 10 {
            return Err(Error::contract(format!("window holds {n} samples, need at least 10")));
        }
        Ok(n)
    }
}

/// Recorded `x` at each grid value, or `None` once the path has escaped or
/// ended.
pub fn samples_at_grid(path: &SamplePath, y_grid: &[f64]) -> Vec<Option<f64>> {
    y_grid.iter().map(|&y| path.x_at_y(y)).collect()
}

/// Cross-sectional unbiased variance from per-path grid samples. Points
/// with fewer than two survivors are omitted.
pub fn variance_from_samples(y_grid: &[f64], samples: &[Vec<Option<f64>>]) -> IndicatorSeries {
    let mut series = IndicatorSeries::new("ensemble_variance", vec![], vec![], vec![]);
    for (j, &y) in y_grid.iter().enumerate() {
        let xs: Vec<f64> = samples.iter().filter_map(|s| s[j]).collect();
        if xs.len() < 2 {
            series.omitted.push(y);
            continue;
        }
        series.ys.push(y);
        series.values.push(numerics::sample_variance(&xs));
        series.n_contributing.push(xs.len());
    }
    series
}

/// Variance of `x` across the surviving paths at each grid value.
pub fn ensemble_variance_series(ensemble: &Ensemble, y_grid: &[f64]) -> Result<IndicatorSeries> {
    for p in &ensemble.paths {
        if p.y0 != ensemble.config.y0 || p.epsilon != ensemble.spec.epsilon {
            return Err(Error::contract("paths disagree on y0 or epsilon"));
        }
    }
    let samples: Vec<_> = ensemble.paths.iter().map(|p| samples_at_grid(p, y_grid)).collect();
    Ok(variance_from_samples(y_grid, &samples))
}

/// Rolling mean and population variance over a fixed-size window.
struct Rolling {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Rolling {
    fn new(window: &[f64]) -> Self {
        let n = window.len() as f64;
        let mean = window.iter().sum::<f64>() / n;
        let m2 = window.iter().map(|x| (x - mean).powi(2)).sum();
        Rolling { n, mean, m2 }
    }

    fn replace(&mut self, old: f64, new: f64) {
        let mean = self.mean + (new - old) / self.n;
        self.m2 += (new - old) * (new - mean + old - self.mean);
        self.mean = mean;
    }

    fn variance(&self) -> f64 {
        (self.m2 / self.n).max(0.0)
    }
}

/// Trailing-window sample variance `V(t*) = (1/N*) Σ (x_j - μ)²`, indexed by
/// the slow value at the window end.
pub fn sliding_variance(path: &SamplePath, window: WindowSpec) -> Result<IndicatorSeries> {
    let n = window.samples(path.sample_dt())?;
    sliding_variance_raw(&path.xs, &path.ys, n, window.stride)
}

/// [`sliding_variance`] on bare arrays with a window of `n` samples.
pub fn sliding_variance_raw(xs: &[f64], ys: &[f64], n: usize, stride: usize) -> Result<IndicatorSeries> {
    if n > xs.len() {
        return Err(Error::contract(format!(
            "window of {n} samples exceeds series of length {}",
            xs.len()
        )));
    }
    if n < 2 || stride == 0 {
        return Err(Error::contract("window needs >= 2 samples and stride >= 1"));
    }
    let mut rolling = Rolling::new(&xs[..n]);
    let mut series = IndicatorSeries::new("sliding_variance", vec![], vec![], vec![]);
    let mut end = n - 1;
    loop {
        series.ys.push(ys[end]);
        series.values.push(rolling.variance());
        series.n_contributing.push(n);
        if end + stride >= xs.len() {
            break;
        }
        for j in end + 1..=end + stride {
            rolling.replace(xs[j - n], xs[j]);
        }
        end += stride;
        // Refresh to keep the running sums from drifting.
        if series.values.len() % 4096 == 0 {
            rolling = Rolling::new(&xs[end + 1 - n..=end]);
        }
    }
    Ok(series)
}

/// Mean and variance of the trailing window ending at fast time `t_star`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowStat {
    pub t_star: f64,
    pub y_star: f64,
    pub mean: f64,
    pub variance: f64,
    pub n: usize,
}

pub fn window_mean_decomposition(path: &SamplePath, window: WindowSpec, t_stars: &[f64]) -> Result<Vec<WindowStat>> {
    let dt = path.sample_dt();
    let n = window.samples(dt)?;
    t_stars
        .iter()
        .map(|&t| {
            let end = ((t - path.times[0]) / dt).round();
            if end < (n - 1) as f64 {
                return Err(Error::contract(format!("t* = {t} is less than one window from the start")));
            }
            let end = end as usize;
            if end >= path.len() {
                return Err(Error::contract(format!("t* = {t} lies beyond the path")));
            }
            let w = &path.xs[end + 1 - n..=end];
            Ok(WindowStat {
                t_star: path.times[end],
                y_star: path.ys[end],
                mean: numerics::mean(w),
                variance: numerics::population_variance(w),
                n,
            })
        })
        .collect()
}

/// Normalization of the lag-k autocorrelation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AcfNorm {
    /// `1 / ((n - k) v²)`.
    #[default]
    Verbatim,
    /// `1 / ((n - k) v)`, the usual autocorrelation.
    Standard,
}

/// `R(k) = 1/((n-k) v²) Σ_{l=1}^{n-k} (x_l - μ)(x_{l+k} - μ)` with `v`
/// squared under [`AcfNorm::Verbatim`] and not under [`AcfNorm::Standard`].
pub fn lag_autocorrelation(series: &[f64], k: usize, mu: f64, v: f64, norm: AcfNorm) -> Result<f64> {
    let n = series.len();
    if k == 0 || k >= n {
        return Err(Error::contract(format!("lag k = {k} needs 1 <= k < n = {n}")));
    }
    if !(v > 0.0) {
        return Err(Error::UndefinedStatistic(format!("variance v = {v} is not positive")));
    }
    let sum: f64 = series[..n - k]
        .iter()
        .zip(&series[k..])
        .map(|(a, b)| (a - mu) * (b - mu))
        .sum();
    let denom = match norm {
        AcfNorm::Verbatim => (n - k) as f64 * v * v,
        AcfNorm::Standard => (n - k) as f64 * v,
    };
    Ok(sum / denom)
}

/// Convert a slow-variable length into a whole number of samples.
pub fn y_to_samples(y_length: f64, epsilon: f64, dt: f64) -> Result<usize> {
    let raw = y_length / (epsilon * dt);
    let n = raw.round();
    if n < 1.0 || (raw - n).abs() > 1e-6 * n.max(1.0) {
        return Err(Error::contract(format!(
            "length {y_length} in y is {raw} samples, not a whole number"
        )));
    }
    Ok(n as usize)
}

/// Settings of [`sliding_autocorrelation`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcfSpec {
    /// Lag in slow-variable units.
    pub lag_y: f64,
    /// Segment length in slow-variable units.
    pub segment_y: f64,
    /// Step between segment ends in samples; `None` uses the segment length.
    pub stride: Option<usize>,
    pub norm: AcfNorm,
}

impl Default for AcfSpec {
    fn default() -> Self {
        AcfSpec {
            lag_y: 0.002,
            segment_y: 0.016,
            stride: None,
            norm: AcfNorm::Verbatim,
        }
    }
}

/// Lag-k autocorrelation over trailing segments of a single path, each
/// segment using its own mean and population variance.
pub fn sliding_autocorrelation(path: &SamplePath, acf: AcfSpec) -> Result<IndicatorSeries> {
    let dt = path.sample_dt();
    let k = y_to_samples(acf.lag_y, path.epsilon, dt)?;
    let m = y_to_samples(acf.segment_y, path.epsilon, dt)?;
    if k >= m {
        return Err(Error::contract("lag must be shorter than the segment"));
    }
    let stride = acf.stride.unwrap_or(m);
    let mut series = IndicatorSeries::new("autocorrelation", vec![], vec![], vec![]);
    let mut end = m;
    while end <= path.len() {
        let seg = &path.xs[end - m..end];
        let y = path.ys[end - 1];
        let mu = numerics::mean(seg);
        let v = numerics::population_variance(seg);
        match lag_autocorrelation(seg, k, mu, v, acf.norm) {
            Ok(r) => {
                series.ys.push(y);
                series.values.push(r);
                series.n_contributing.push(m);
            }
            Err(_) => series.omitted.push(y),
        }
        end += stride;
    }
    Ok(series)
}

/// Pointwise average of series evaluated on a common grid (paths that
/// escaped early contribute a prefix). Averages are taken over the series
/// present at each point, in input order.
pub fn average_series(name: &str, series: &[IndicatorSeries]) -> Result<IndicatorSeries> {
    let longest = series
        .iter()
        .max_by_key(|s| s.len())
        .ok_or_else(|| Error::contract("no series to average"))?;
    let n = longest.len();
    let mut sums = vec![0.0; n];
    let mut counts = vec![0usize; n];
    for s in series {
        for (i, (&y, &v)) in s.ys.iter().zip(&s.values).enumerate() {
            let j = match longest.ys.get(i) {
                Some(&yl) if (yl - y).abs() <= 1e-9 * (1.0 + y.abs()) => i,
                _ => match longest.ys.iter().position(|&yl| (yl - y).abs() <= 1e-9 * (1.0 + y.abs())) {
                    Some(j) => j,
                    None => return Err(Error::contract("series are not on a common grid")),
                },
            };
            sums[j] += v;
            counts[j] += 1;
        }
    }
    let mut out = IndicatorSeries::new(name, vec![], vec![], vec![]);
    for j in 0..n {
        if counts[j] > 0 {
            out.ys.push(longest.ys[j]);
            out.values.push(sums[j] / counts[j] as f64);
            out.n_contributing.push(counts[j]);
        } else {
            out.omitted.push(longest.ys[j]);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrendModel {
    Linear,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendFit {
    pub model: TrendModel,
    /// Polynomial coefficients in `y`, lowest order first.
    pub coefficients: Vec<f64>,
    /// Sum of squared residuals.
    pub ssr: f64,
    pub slope_at_end: f64,
    pub classification: Trend,
}

impl TrendFit {
    pub fn eval(&self, y: f64) -> f64 {
        PolyFit {
            coefficients: self.coefficients.clone(),
            ssr: self.ssr,
        }
        .eval(y)
    }
}

/// Least-squares trend of a series in `y`, classified by the slope at the
/// last point.
pub fn fit_trend(series: &IndicatorSeries, model: TrendModel) -> Result<TrendFit> {
    if series.len() < 5 {
        return Err(Error::contract("trend fit needs at least 5 points"));
    }
    let degree = match model {
        TrendModel::Linear => 1,
        TrendModel::Quadratic => 2,
    };
    let fit = numerics::polyfit(&series.ys, &series.values, degree)?;
    let y_end = *series.ys.last().unwrap();
    let slope_at_end = fit.derivative(y_end);
    Ok(TrendFit {
        model,
        coefficients: fit.coefficients,
        ssr: fit.ssr,
        slope_at_end,
        classification: if slope_at_end > 0.0 {
            Trend::Increasing
        } else {
            Trend::Decreasing
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::path_rng;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn naive_window_variance(xs: &[f64], n: usize) -> Vec<f64> {
        (n - 1..xs.len())
            .map(|end| numerics::population_variance(&xs[end + 1 - n..=end]))
            .collect()
    }

    fn gaussian(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = path_rng(seed, 0);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn rolling_matches_naive() {
        let xs: Vec<f64> = gaussian(3000, 1).iter().enumerate().map(|(i, z)| 0.001 * i as f64 + z).collect();
        let ys: Vec<f64> = (0..xs.len()).map(|i| i as f64).collect();
        let s = sliding_variance_raw(&xs, &ys, 101, 1).unwrap();
        let naive = naive_window_variance(&xs, 101);
        assert_eq!(s.len(), naive.len());
        for (a, b) in s.values.iter().zip(&naive) {
            assert_relative_eq!(a, b, max_relative = 1e-9);
        }
        assert_eq!(s.ys[0], 100.0);
    }

    #[test]
    fn constant_series_has_zero_variance() {
        let xs = vec![2.5; 200];
        let ys: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let s = sliding_variance_raw(&xs, &ys, 20, 3).unwrap();
        assert!(s.values.iter().all(|&v| v.abs() < 1e-24));
    }

    #[test]
    fn window_longer_than_series_is_rejected() {
        let xs = vec![0.0; 10];
        assert!(matches!(sliding_variance_raw(&xs, &xs, 11, 1), Err(Error::Contract(_))));
    }

    #[test]
    fn window_length_from_y_units() {
        let w = WindowSpec::from_y_length(0.2861, 0.02, 1).unwrap();
        assert_relative_eq!(w.s, 14.305, epsilon = 1e-9);
        assert_eq!(w.samples(0.01).unwrap(), 1431);
        assert!(WindowSpec::new(0.05, 1).unwrap().samples(0.01).is_err());
    }

    #[test]
    fn autocorrelation_of_white_noise_is_small() {
        let xs = gaussian(10_000, 7);
        let mu = numerics::mean(&xs);
        let v = numerics::population_variance(&xs);
        let r = lag_autocorrelation(&xs, 1, mu, v, AcfNorm::Standard).unwrap();
        assert!(r.abs() < 3.0 / 100.0, "{r}");
    }

    #[test]
    fn autocorrelation_verbatim_fixture() {
        // Period-2 series: x_{l+2} = x_l.
        let xs = [1.0, 3.0, 1.0, 3.0, 1.0, 3.0];
        let mu = 2.0;
        // Four unit products over (n - k) v² = 4 · 2².
        let verbatim = lag_autocorrelation(&xs, 2, mu, 2.0, AcfNorm::Verbatim).unwrap();
        assert_relative_eq!(verbatim, 0.25);
        let standard = lag_autocorrelation(&xs, 2, mu, 1.0, AcfNorm::Standard).unwrap();
        assert_relative_eq!(standard, 1.0);
        assert!(matches!(
            lag_autocorrelation(&xs, 2, mu, 0.0, AcfNorm::Verbatim),
            Err(Error::UndefinedStatistic(_))
        ));
        assert!(lag_autocorrelation(&xs, 6, mu, 1.0, AcfNorm::Verbatim).is_err());
    }

    #[test]
    fn autocorrelation_of_ar1_matches_exponential() {
        // Discrete OU with φ = exp(-α̃Δ).
        let phi: f64 = (-50.0 * 0.01f64).exp();
        let z = gaussian(200_000, 3);
        let mut xs = vec![0.0; z.len()];
        for i in 1..z.len() {
            xs[i] = phi * xs[i - 1] + z[i];
        }
        let mu = numerics::mean(&xs);
        let v = numerics::population_variance(&xs);
        let r = lag_autocorrelation(&xs, 2, mu, v, AcfNorm::Standard).unwrap();
        assert!((r - phi * phi).abs() < 0.01, "{r} vs {}", phi * phi);
        let verbatim = lag_autocorrelation(&xs, 2, mu, v, AcfNorm::Verbatim).unwrap();
        assert_relative_eq!(verbatim * v, r, max_relative = 1e-12);
    }

    #[test]
    fn y_units_must_convert_to_whole_samples() {
        assert_eq!(y_to_samples(0.002, 0.02, 0.01).unwrap(), 10);
        assert_eq!(y_to_samples(0.016, 0.02, 0.01).unwrap(), 80);
        assert!(y_to_samples(0.0025, 0.02, 0.003).is_err());
    }

    #[test]
    fn trend_fits() {
        let ys: Vec<f64> = (0..10).map(|i| -1.0 + 0.1 * i as f64).collect();
        let line = IndicatorSeries::new("t", ys.clone(), ys.iter().map(|y| 2.0 * y + 1.0).collect(), vec![1; 10]);
        let fit = fit_trend(&line, TrendModel::Linear).unwrap();
        assert_relative_eq!(fit.coefficients[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.coefficients[1], 2.0, epsilon = 1e-12);
        assert_eq!(fit.classification, Trend::Increasing);
        let down = IndicatorSeries::new("t", ys.clone(), ys.iter().map(|y| -y).collect(), vec![1; 10]);
        assert_eq!(fit_trend(&down, TrendModel::Quadratic).unwrap().classification, Trend::Decreasing);
        let short = line.restrict(-1.0, -0.7);
        assert!(fit_trend(&short, TrendModel::Linear).is_err());
    }

    #[test]
    fn averaging_handles_truncated_series() {
        let a = IndicatorSeries::new("a", vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 3.0], vec![1; 3]);
        let b = IndicatorSeries::new("b", vec![0.0, 1.0], vec![3.0, 4.0], vec![1; 2]);
        let avg = average_series("avg", &[a, b]).unwrap();
        assert_eq!(avg.values, vec![2.0, 3.0, 3.0]);
        assert_eq!(avg.n_contributing, vec![2, 2, 1]);
    }

    proptest! {
        #[test]
        fn sliding_variance_shift_and_scale(
            xs in proptest::collection::vec(-10.0f64..10.0, 30..200),
            shift in -100.0f64..100.0,
            scale in 0.1f64..10.0,
        ) {
            let ys: Vec<f64> = (0..xs.len()).map(|i| i as f64).collect();
            let base = sliding_variance_raw(&xs, &ys, 12, 1).unwrap();
            let shifted: Vec<f64> = xs.iter().map(|x| x + shift).collect();
            let scaled: Vec<f64> = xs.iter().map(|x| x * scale).collect();
            let s1 = sliding_variance_raw(&shifted, &ys, 12, 1).unwrap();
            let s2 = sliding_variance_raw(&scaled, &ys, 12, 1).unwrap();
            for i in 0..base.len() {
                prop_assert!(base.values[i] >= 0.0);
                prop_assert!((s1.values[i] - base.values[i]).abs() <= 1e-8 * (1.0 + base.values[i]) + 1e-9);
                prop_assert!((s2.values[i] - scale * scale * base.values[i]).abs()
                    <= 1e-8 * (1.0 + scale * scale * base.values[i]));
            }
        }

        #[test]
        fn autocorrelation_reversal_symmetry(
            xs in proptest::collection::vec(-5.0f64..5.0, 20..100),
            k in 1usize..10,
        ) {
            let mu = numerics::mean(&xs);
            let v = numerics::population_variance(&xs);
            prop_assume!(v > 1e-6);
            let rev: Vec<f64> = xs.iter().rev().copied().collect();
            let a = lag_autocorrelation(&xs, k, mu, v, AcfNorm::Verbatim).unwrap();
            let b = lag_autocorrelation(&rev, k, mu, v, AcfNorm::Verbatim).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }
}
