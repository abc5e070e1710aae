//! Experiment runner and figure recipes.
//!
//! Every run writes CSV files plus `manifest.txt` into its output
//! directory. Figure recipes also write a `README.txt` that maps columns to
//! plot axes. CSV content depends only on parameters and seed; the manifest
//! additionally records wall time.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;

use crate::config::{default_spec, ExperimentConfig, ExperimentKind};
use crate::csv::CsvTable;
use crate::delay::{self, SectionSpec};
use crate::error::{Error, Result};
use crate::fokker_planck::{self, GridSpec};
use crate::indicators::{self, AcfNorm, AcfSpec, IndicatorSeries, TrendFit, TrendModel, WindowSpec};
use crate::model::{escape_boundaries, ModelKind, ModelSpec};
use crate::ou;
use crate::sde::{self, BoundaryMode, SimConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fidelity {
    #[default]
    Full,
    /// Fewer paths and coarser grids.
    Fast,
}

impl Fidelity {
    fn pick<T>(self, full: T, fast: T) -> T {
        match self {
            Fidelity::Full => full,
            Fidelity::Fast => fast,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
    manifest: Vec<(String, String)>,
    started: Instant,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Writer {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            manifest: Vec::new(),
            started: Instant::now(),
        })
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        self.manifest.push((key.to_string(), value.to_string()));
    }

    fn model(&mut self, spec: &ModelSpec) {
        self.note("model", spec.kind);
        self.note("epsilon", spec.epsilon);
        self.note("sigma", spec.sigma);
        match spec.kind {
            ModelKind::HopfPlanar => self.note("l1", spec.l1),
            ModelKind::VanDerPol => self.note("a", spec.a),
            ModelKind::OrnsteinUhlenbeck => self.note("alpha", spec.alpha),
            _ => {}
        }
    }

    fn table(&mut self, name: &str, table: &CsvTable) -> Result<()> {
        let path = self.dir.join(name);
        table.write(&path)?;
        self.files.push(path);
        Ok(())
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, body)?;
        self.files.push(path);
        Ok(())
    }

    fn finish(mut self) -> Result<RunOutput> {
        self.note("version", VERSION);
        self.note("wall_time_s", format!("{:.3}", self.started.elapsed().as_secs_f64()));
        let mut body = String::new();
        for (k, v) in &self.manifest {
            let _ = writeln!(body, "{k} = {v}");
        }
        let manifest = self.dir.join("manifest.txt");
        fs::write(&manifest, body)?;
        Ok(RunOutput {
            dir: self.dir,
            files: self.files,
            manifest,
        })
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Grid `lo, lo + step, ...` up to `hi`, built by multiplication.
fn step_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

fn series_table(series: &IndicatorSeries, value: &str) -> CsvTable {
    let mut t = CsvTable::new(&["y", value, "n"]);
    for i in 0..series.len() {
        t.rows.push(vec![series.ys[i], series.values[i], series.n_contributing[i] as f64]);
    }
    t
}

/// Path dump: one row per recorded sample, plus a final `escaped = 1` row
/// holding the state that crossed a wall.
fn path_table(path: &sde::SamplePath) -> CsvTable {
    let mut header = vec!["t", "y", "x"];
    if path.xs2.is_some() {
        header.push("x2");
    }
    header.push("escaped");
    let mut t = CsvTable::new(&header)
        .meta("model", path.kind)
        .meta("epsilon", path.epsilon)
        .meta("sigma", path.sigma)
        .meta("seed", path.seed)
        .meta("dt", path.dt);
    for i in 0..path.len() {
        let mut row = vec![path.times[i], path.ys[i], path.xs[i]];
        if let Some(x2) = &path.xs2 {
            row.push(x2[i]);
        }
        row.push(0.0);
        t.rows.push(row);
    }
    if let Some(e) = &path.escaped {
        let mut row = vec![e.t, e.y, e.x];
        if path.xs2.is_some() {
            row.push(f64::NAN);
        }
        row.push(1.0);
        t.rows.push(row);
        t.push_meta("escape_y", e.y);
        t.push_meta("escape_kind", format!("{:?}", e.kind));
    }
    t
}

fn sim_config(cfg: &ExperimentConfig) -> Result<SimConfig> {
    let spec = &cfg.model;
    let x0 = match &cfg.sim.x0 {
        Some(x0) => x0.clone(),
        None => sde::default_start(spec, cfg.sim.y0)?,
    };
    let sim = match cfg.sim.t_end {
        Some(t_end) => SimConfig::new(cfg.sim.dt, t_end, cfg.sim.seed, x0, cfg.sim.y0),
        None => SimConfig::until_y(spec, cfg.sim.dt, cfg.sim.seed, x0, cfg.sim.y0, cfg.sim.y_end)?,
    };
    Ok(sim
        .with_boundary(cfg.sim.boundary)
        .with_record_every(cfg.sim.record_every))
}

/// Run a configured experiment and write its outputs.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let mut w = Writer::new(&cfg.output_dir)?;
    w.note("experiment", cfg.experiment.name());
    w.model(&cfg.model);
    w.note("seed", cfg.sim.seed);
    let spec = cfg.model;
    match cfg.experiment {
        ExperimentKind::Simulate => {
            let sim = sim_config(cfg)?;
            w.note("dt", sim.dt);
            let path = sde::simulate_path(&spec, &sim)?;
            w.table("path.csv", &path_table(&path))?;
        }
        ExperimentKind::Ensemble => {
            let sim = sim_config(cfg)?;
            w.note("n_paths", cfg.sim.n_paths);
            w.note("dt", sim.dt);
            let ens = sde::simulate_ensemble(&spec, &sim, cfg.sim.n_paths)?;
            let y_end = sim.y0 + spec.epsilon * sim.t_end;
            let grid = step_grid(sim.y0, y_end, cfg.indicators.grid_step);
            let var = indicators::ensemble_variance_series(&ens, &grid)?;
            let esc = sde::escape_fraction_series(&ens, &grid)?;
            let mut t = CsvTable::new(&["y", "variance", "n_survivors", "escaped_fraction"]);
            for (i, &y) in grid.iter().enumerate() {
                let (v, n) = match var.ys.iter().position(|&vy| vy == y) {
                    Some(j) => (var.values[j], var.n_contributing[j] as f64),
                    None => (f64::NAN, 0.0),
                };
                t.rows.push(vec![y, v, n, esc.values[i]]);
            }
            t.push_meta("failed_paths", ens.failures.len());
            w.table("ensemble.csv", &t)?;
        }
        ExperimentKind::Density => {
            let grid = GridSpec::with_intervals(cfg.density.n_intervals);
            let mut t = CsvTable::new(&["y", "x", "p"]);
            let mut m = CsvTable::new(&["y", "mean", "variance", "skewness"]);
            for &y in &cfg.density.ys {
                let d = match spec.kind {
                    ModelKind::ArnoldBoxlerTranscritical => fokker_planck::ab_density(y, spec.sigma, grid)?,
                    kind => fokker_planck::potential_density(kind, y, spec.sigma, grid)?,
                };
                for (x, p) in d.xs.iter().zip(&d.ps) {
                    t.rows.push(vec![y, *x, *p]);
                }
                let mo = fokker_planck::density_moments(&d);
                m.rows.push(vec![y, mo.mean, mo.variance, mo.skewness]);
            }
            w.table("density.csv", &t)?;
            w.table("moments.csv", &m)?;
        }
        ExperimentKind::VarianceCurve => {
            let ys = linspace(cfg.density.y_min, cfg.density.y_max, cfg.density.n_points);
            let grid = GridSpec::with_intervals(cfg.density.n_intervals);
            let s = fokker_planck::variance_curve(spec.kind, spec.sigma, &ys, grid)?;
            let mut t = series_table(&s, "variance");
            if let Some((y, v)) = fokker_planck::interior_maximum(&s) {
                t.push_meta("interior_max_y", y);
                t.push_meta("interior_max_variance", v);
            }
            w.table("variance_curve.csv", &t)?;
        }
        ExperimentKind::Delay => {
            let section = SectionSpec::new(cfg.delay.rho)?;
            let fit = delay::fit_delay_exponent(&cfg.delay.epsilons, section)?;
            let mut t = CsvTable::from_columns(&["epsilon", "y_exit"], &[&fit.epsilons, &fit.values])?;
            t.push_meta("exponent", fit.exponent);
            t.push_meta("prefactor", fit.prefactor);
            w.table("fold_delay.csv", &t)?;
        }
        ExperimentKind::ScalingScan => {
            let settings = sde::ScanSettings {
                y0: cfg.sim.y0,
                dt: cfg.sim.dt,
                seed: cfg.sim.seed,
            };
            let table = sde::scaling_scan(
                spec.kind,
                &cfg.scan.epsilons,
                &cfg.scan.sigmas,
                cfg.sim.n_paths,
                cfg.scan.y_stop,
                settings,
            )?;
            let mut t = CsvTable::new(&["epsilon", "sigma", "probability", "standard_error"]);
            for (i, &e) in table.epsilons.iter().enumerate() {
                for (j, &s) in table.sigmas.iter().enumerate() {
                    t.rows.push(vec![e, s, table.probability[i][j], table.standard_error(i, j)]);
                }
            }
            t.push_meta("n_paths", table.n_paths);
            t.push_meta("y_stop", table.y_stop);
            w.table("scan.csv", &t)?;
        }
        ExperimentKind::Indicators => {
            let sim = sim_config(cfg)?;
            let acf = AcfSpec {
                lag_y: cfg.indicators.lag_y,
                segment_y: cfg.indicators.segment_y,
                stride: None,
                norm: cfg.indicators.norm,
            };
            let window = WindowSpec::from_y_length(cfg.indicators.window_y, spec.epsilon, 10)?;
            let results = sde::run_ensemble_map(&spec, &sim, cfg.sim.n_paths, |p| {
                Ok::<_, Error>((indicators::sliding_variance(p, window)?, indicators::sliding_autocorrelation(p, acf)?))
            })?;
            let mut vars = Vec::new();
            let mut acfs = Vec::new();
            for r in results.into_iter().flatten() {
                let (v, a) = r?;
                vars.push(v);
                acfs.push(a);
            }
            w.table("sliding_variance.csv", &series_table(&indicators::average_series("variance", &vars)?, "variance"))?;
            w.table(
                "autocorrelation.csv",
                &series_table(&indicators::average_series("autocorrelation", &acfs)?, "autocorrelation"),
            )?;
        }
    }
    w.finish()
}

/// Dataset recipe for one figure.
#[derive(Debug, Clone, Copy)]
pub struct FigureRecipe {
    pub id: &'static str,
    pub title: &'static str,
    pub parameters: &'static str,
    /// `(file, column meaning)` lines for the README.
    pub columns: &'static [(&'static str, &'static str)],
}

pub const FIGURES: &[FigureRecipe] = &[
    FigureRecipe {
        id: "fig1",
        title: "stochastic van der Pol sample path",
        parameters: "(eps, a, sigma) = (0.05, 1.05, 0.1), start (2, 2/3), stopped at slow time 2400",
        columns: &[
            ("path.csv", "tau = slow time, x = horizontal axis, y = vertical axis"),
            ("manifold.csv", "critical manifold y = x^3/3 - x"),
        ],
    },
    FigureRecipe {
        id: "fig2",
        title: "stationary variance against y with reflecting walls",
        parameters: "sigma = 0.1, eps = 0",
        columns: &[("variance.csv", "y = horizontal axis; fold, transcritical, pitchfork = variance curves")],
    },
    FigureRecipe {
        id: "fig4b",
        title: "deterministic fold trajectory",
        parameters: "eps = 0.02, start (x, y) = (1.2, -0.6)",
        columns: &[
            ("path.csv", "y = horizontal axis, x = vertical axis"),
            ("manifold.csv", "critical manifold y = -x^2 with stability flag"),
        ],
    },
    FigureRecipe {
        id: "fig5",
        title: "delayed Hopf passage",
        parameters: "l1 = 1, eps = 0.01, start (0.3, 0.3, -0.5), tube |x| < eps",
        columns: &[("path.csv", "y = horizontal axis, x = x1 axis, x2 = second fast coordinate; metadata holds y_a and y_r")],
    },
    FigureRecipe {
        id: "fig6",
        title: "OU sample path in its variance neighborhood",
        parameters: "eps = 0.02, sigma = 0.1, alpha = 1",
        columns: &[
            ("path.csv", "y = horizontal axis, x = vertical axis"),
            ("band.csv", "h0 = slow manifold, n_lo/n_hi = neighborhood N(r), s_lo/s_hi = one stationary standard deviation"),
        ],
    },
    FigureRecipe {
        id: "fig7",
        title: "Arnold-Boxler bifurcation diagram with density slices",
        parameters: "sigma^2 = 0.8, slices at y = -0.8, -0.2, 0.2, 0.8",
        columns: &[
            ("branches.csv", "y = horizontal axis; trivial and diagonal branches, stable flags"),
            ("densities.csv", "y = slice, x = state, p = density (y < 0 slices by the x -> -x, y -> -y symmetry)"),
        ],
    },
    FigureRecipe {
        id: "fig8",
        title: "Arnold-Boxler variance against y",
        parameters: "sigma^2 = 0.8",
        columns: &[(
            "variance.csv",
            "y = horizontal axis; v_printed = closed form as printed, v_gamma = variance of the normalized density",
        )],
    },
    FigureRecipe {
        id: "fig9",
        title: "ensemble variance and escaped fraction",
        parameters: "(sigma, eps) = (0.1, 0.02), 1000 paths, absorbing walls",
        columns: &[(
            "<kind>.csv",
            "y = horizontal axis; variance = ensemble variance, escaped = fraction escaped, stationary = reflecting-wall variance",
        )],
    },
    FigureRecipe {
        id: "fig10",
        title: "sliding-window variance averaged over paths",
        parameters: "(sigma, eps) = (0.1, 0.02), 1000 paths, window 0.2861 in y",
        columns: &[("<kind>.csv", "y = window end, variance = mean sliding variance, n = contributing paths")],
    },
    FigureRecipe {
        id: "fig11",
        title: "fold path with two variance windows",
        parameters: "(sigma, eps) = (0.1, 0.02), windows of 0.2861 in y ending near y = -0.7 and -0.02",
        columns: &[
            ("path.csv", "y = horizontal axis, x = vertical axis"),
            ("windows.csv", "y_star = window end, mean = red dot, lo/hi = mean -/+ 20 V"),
        ],
    },
    FigureRecipe {
        id: "fig12",
        title: "single fold and transcritical time series",
        parameters: "(sigma, eps) = (0.1, 0.02)",
        columns: &[("fold.csv, transcritical.csv", "t = horizontal axis, x = vertical axis; metadata transition_t marks the escape")],
    },
    FigureRecipe {
        id: "fig13",
        title: "ensemble lag-k autocorrelation with trend fits",
        parameters: "(sigma, eps) = (0.1, 0.02), k = 0.002, segments 8k, 10000 paths",
        columns: &[(
            "<kind>.csv, <kind>_verbatim.csv",
            "y = horizontal axis, autocorrelation = thin curve, fit = dashed trend; standard and v-squared normalizations",
        )],
    },
    FigureRecipe {
        id: "fig14",
        title: "two single-path autocorrelations with opposite trends",
        parameters: "transcritical, (sigma, eps) = (0.1, 0.02), k = 0.002",
        columns: &[("path_a.csv, path_b.csv", "y = horizontal axis, autocorrelation = thin line, fit = linear trend")],
    },
];

pub fn figure_ids() -> Vec<&'static str> {
    FIGURES.iter().map(|f| f.id).collect()
}

pub fn find_figure(id: &str) -> Result<&'static FigureRecipe> {
    FIGURES.iter().find(|f| f.id == id).ok_or_else(|| {
        Error::config(
            "figure",
            format!("unknown figure `{id}`; available: {}", figure_ids().join(", ")),
        )
    })
}

/// Walls used for the autocorrelation ensembles.
pub fn acf_window(kind: ModelKind) -> BoundaryMode {
    match kind {
        ModelKind::Pitchfork => BoundaryMode::Window { lo: -1.0, hi: 1.0 },
        _ => BoundaryMode::Window {
            lo: -1.0,
            hi: f64::INFINITY,
        },
    }
}

/// Configuration shared by the early-warning ensembles: start on the
/// attracting branch at `y = -1`, run to `y_end`.
pub fn transition_config(spec: &ModelSpec, seed: u64, y_end: f64, boundary: BoundaryMode) -> Result<SimConfig> {
    let x0 = sde::default_start(spec, -1.0)?;
    Ok(SimConfig::until_y(spec, sde::DEFAULT_DT, seed, x0, -1.0, y_end)?.with_boundary(boundary))
}

/// Sliding lag-k autocorrelation of each of `n` paths.
pub fn autocorrelation_paths(spec: &ModelSpec, n: usize, seed: u64, acf: AcfSpec, y_end: f64) -> Result<Vec<IndicatorSeries>> {
    let cfg = transition_config(spec, seed, y_end, acf_window(spec.kind))?;
    sde::run_ensemble_map(spec, &cfg, n, |p| indicators::sliding_autocorrelation(p, acf))?
        .into_iter()
        .map(|r| r.and_then(|s| s))
        .collect()
}

/// Ensemble average of the sliding autocorrelation.
pub fn autocorrelation_ensemble(spec: &ModelSpec, n: usize, seed: u64, acf: AcfSpec, y_end: f64) -> Result<IndicatorSeries> {
    let paths = autocorrelation_paths(spec, n, seed, acf, y_end)?;
    indicators::average_series("autocorrelation", &paths)
}

fn trend_table(series: &IndicatorSeries, fit: &TrendFit) -> CsvTable {
    let mut t = CsvTable::new(&["y", "autocorrelation", "n", "fit"]);
    for i in 0..series.len() {
        let y = series.ys[i];
        t.rows.push(vec![y, series.values[i], series.n_contributing[i] as f64, fit.eval(y)]);
    }
    t.push_meta("fit_model", format!("{:?}", fit.model));
    t.push_meta("fit_coefficients", format!("{:?}", fit.coefficients));
    t.push_meta("slope_at_end", fit.slope_at_end);
    t.push_meta("ssr", fit.ssr);
    t
}

fn readme(recipe: &FigureRecipe) -> String {
    let mut s = format!("{} ({})\n\nParameters: {}\n\nColumns:\n", recipe.id, recipe.title, recipe.parameters);
    for (file, cols) in recipe.columns {
        let _ = writeln!(s, "  {file}: {cols}");
    }
    s
}

const SCALAR_KINDS: [ModelKind; 3] = [ModelKind::Fold, ModelKind::Transcritical, ModelKind::Pitchfork];

/// Write the dataset behind a figure into `out_dir/<id>`.
pub fn reproduce_figure(id: &str, out_dir: &Path, fidelity: Fidelity, seed: u64) -> Result<RunOutput> {
    let recipe = find_figure(id)?;
    let mut w = Writer::new(&out_dir.join(recipe.id))?;
    w.note("figure", recipe.id);
    w.note("parameters", recipe.parameters);
    w.note("seed", seed);
    w.note("fidelity", format!("{fidelity:?}"));
    w.text("README.txt", &readme(recipe))?;
    match recipe.id {
        "fig1" => fig1(&mut w, seed)?,
        "fig2" => fig2(&mut w, fidelity)?,
        "fig4b" => fig4b(&mut w)?,
        "fig5" => fig5(&mut w)?,
        "fig6" => fig6(&mut w, seed)?,
        "fig7" => fig7(&mut w, fidelity)?,
        "fig8" => fig8(&mut w)?,
        "fig9" => fig9(&mut w, fidelity, seed)?,
        "fig10" => fig10(&mut w, fidelity, seed)?,
        "fig11" => fig11(&mut w, seed)?,
        "fig12" => fig12(&mut w, seed)?,
        "fig13" => fig13(&mut w, fidelity, seed)?,
        "fig14" => fig14(&mut w, seed)?,
        _ => unreachable!("recipe table and dispatch agree"),
    }
    w.finish()
}

fn fig1(w: &mut Writer, seed: u64) -> Result<()> {
    let spec = ModelSpec::new(ModelKind::VanDerPol, 0.05, 0.1)?.with_a(1.05);
    w.model(&spec);
    let t_end = 2400.0 / spec.epsilon;
    let cfg = SimConfig::new(sde::DEFAULT_DT, t_end, seed, vec![2.0], 2.0 / 3.0).with_record_every(100);
    let path = sde::simulate_path(&spec, &cfg)?;
    let mut t = CsvTable::new(&["tau", "x", "y"]);
    for i in 0..path.len() {
        t.rows.push(vec![path.times[i] * spec.epsilon, path.xs[i], path.ys[i]]);
    }
    w.table("path.csv", &t)?;
    let xs = linspace(-2.5, 2.5, 501);
    let ys: Vec<f64> = xs.iter().map(|x| x * x * x / 3.0 - x).collect();
    w.table("manifold.csv", &CsvTable::from_columns(&["x", "y"], &[&xs, &ys])?)
}

fn fig2(w: &mut Writer, fidelity: Fidelity) -> Result<()> {
    let sigma = 0.1;
    w.note("sigma", sigma);
    let ys = linspace(-1.5, -0.005, fidelity.pick(300, 100));
    let grid = GridSpec::with_intervals(fidelity.pick(8192, 2048));
    let mut cols = vec![ys.clone()];
    let mut t_meta = Vec::new();
    for kind in SCALAR_KINDS {
        let s = fokker_planck::variance_curve(kind, sigma, &ys, grid)?;
        if let Some((y, _)) = fokker_planck::interior_maximum(&s) {
            t_meta.push((format!("{kind}_max_y"), y));
        }
        cols.push(s.values);
    }
    let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
    let mut t = CsvTable::from_columns(&["y", "fold", "transcritical", "pitchfork"], &refs)?;
    for (k, v) in t_meta {
        t.push_meta(&k, v);
    }
    w.table("variance.csv", &t)
}

fn fig4b(w: &mut Writer) -> Result<()> {
    let spec = ModelSpec::new(ModelKind::Fold, 0.02, 0.0)?;
    w.model(&spec);
    let cfg = SimConfig::until_y(&spec, sde::DEFAULT_DT, 0, vec![1.2], -0.6, 0.5)?
        .with_boundary(BoundaryMode::Window {
            lo: -2.0,
            hi: f64::INFINITY,
        })
        .with_record_every(5);
    let path = sde::deterministic_path(&spec, &cfg)?;
    let mut t = path_table(&path);
    t.push_meta("y_at_x_minus_half", delay::fold_crossing(spec.epsilon, 1.2, -0.6, -0.5, sde::DEFAULT_DT)?);
    w.table("path.csv", &t)?;
    let xs = linspace(-1.5, 1.5, 301);
    let ys: Vec<f64> = xs.iter().map(|x| -x * x).collect();
    let stable: Vec<f64> = xs.iter().map(|&x| if x > 0.0 { 1.0 } else { 0.0 }).collect();
    w.table("manifold.csv", &CsvTable::from_columns(&["x", "y", "stable"], &[&xs, &ys, &stable])?)
}

fn fig5(w: &mut Writer) -> Result<()> {
    let eps = 0.01;
    let spec = ModelSpec::new(ModelKind::HopfPlanar, eps, 0.0)?.with_l1(1.0);
    w.model(&spec);
    let cfg = SimConfig::until_y(&spec, sde::DEFAULT_DT, 0, vec![0.3, 0.3], -0.5, 0.6)?
        .with_boundary(BoundaryMode::Window { lo: -2.0, hi: 2.0 })
        .with_record_every(5);
    let path = sde::deterministic_path(&spec, &cfg)?;
    let mut t = path_table(&path);
    let measured = delay::hopf_delay_measure(eps, 1.0, [0.3, 0.3], -0.5, eps)?;
    let predicted = delay::hopf_delay_predict(measured.y_a, |y| Complex64::new(y, 1.0))?;
    t.push_meta("tube_halfwidth", eps);
    t.push_meta("y_a", measured.y_a);
    t.push_meta("y_r", measured.y_r);
    t.push_meta("y_r_predicted", predicted.y_exit_predicted);
    w.table("path.csv", &t)
}

fn fig6(w: &mut Writer, seed: u64) -> Result<()> {
    let spec = ModelSpec::new(ModelKind::OrnsteinUhlenbeck, 0.02, 0.1)?.with_alpha(1.0);
    w.model(&spec);
    let cfg = SimConfig::until_y(&spec, sde::DEFAULT_DT, seed, vec![0.0], 0.0, 1.0)?;
    let path = sde::simulate_path(&spec, &cfg)?;
    let mut t = CsvTable::new(&["y", "x"]);
    for i in 0..path.len() {
        t.rows.push(vec![path.ys[i], path.xs[i]]);
    }
    let branch = spec.approach_branch()?;
    let r = 2.0;
    let ys = linspace(0.0, 1.0, 201);
    let nbhd = ou::variance_profile(&spec, &branch, &ys, r)?;
    t.push_meta("containment_fraction_r2", ou::containment_fraction(&path, &nbhd, r)?);
    w.table("path.csv", &t)?;
    let sd = ou::stationary_variance(spec.alpha, spec.sigma)?.sqrt();
    let mut b = CsvTable::new(&["y", "h0", "n_lo", "n_hi", "s_lo", "s_hi"]).meta("r", r);
    for (y, h0, lo, hi) in nbhd.band() {
        b.rows.push(vec![y, h0, lo, hi, h0 - sd, h0 + sd]);
    }
    w.table("band.csv", &b)
}

fn fig7(w: &mut Writer, fidelity: Fidelity) -> Result<()> {
    let sigma = 0.8f64.sqrt();
    w.note("sigma_squared", 0.8);
    let ys = linspace(-1.0, 1.0, 201);
    let mut b = CsvTable::new(&["y", "trivial", "diagonal", "trivial_stable", "diagonal_stable"]);
    for &y in &ys {
        b.rows.push(vec![y, 0.0, y, f64::from(u8::from(y < 0.0)), f64::from(u8::from(y > 0.0))]);
    }
    let (p_plus, p_minus) = fokker_planck::p_bifurcation_point(sigma)?;
    b.push_meta("y_p_plus", p_plus);
    b.push_meta("y_p_minus", p_minus);
    b.push_meta("y_d", fokker_planck::D_BIFURCATION_Y);
    w.table("branches.csv", &b)?;
    let grid = GridSpec::with_intervals(fidelity.pick(8192, 2048));
    let mut d = CsvTable::new(&["y", "x", "p"]);
    for y in [-0.8, -0.2, 0.2, 0.8] {
        let dens = fokker_planck::ab_density(f64::abs(y), sigma, grid)?;
        let shape = fokker_planck::classify_shape(&dens)?;
        d.push_meta(&format!("shape_at_{y}"), format!("{:?}", shape.tag));
        let sign = y.signum();
        for (x, p) in dens.xs.iter().zip(&dens.ps) {
            d.rows.push(vec![y, sign * x, *p]);
        }
    }
    w.table("densities.csv", &d)
}

fn fig8(w: &mut Writer) -> Result<()> {
    let sigma = 0.8f64.sqrt();
    w.note("sigma_squared", 0.8);
    let mut t = CsvTable::new(&["y", "v_printed", "v_gamma"]);
    for y in step_grid(0.01, 2.0, 0.01) {
        t.rows.push(vec![
            y,
            fokker_planck::ab_variance_printed(y, sigma)?,
            fokker_planck::ab_variance(y, sigma)?,
        ]);
    }
    w.table("variance.csv", &t)
}

fn fig9(w: &mut Writer, fidelity: Fidelity, seed: u64) -> Result<()> {
    let n = fidelity.pick(1000, 200);
    w.note("n_paths", n);
    let grid = step_grid(-1.0, 0.2, 0.01);
    let fp_grid = GridSpec::with_intervals(fidelity.pick(8192, 2048));
    for kind in SCALAR_KINDS {
        let spec = ModelSpec::new(kind, 0.02, 0.1)?;
        let cfg = transition_config(&spec, seed, 0.2, BoundaryMode::Absorbing)?;
        let ens = sde::simulate_ensemble(&spec, &cfg, n)?;
        let var = indicators::ensemble_variance_series(&ens, &grid)?;
        let esc = sde::escape_fraction_series(&ens, &grid)?;
        let mut t = CsvTable::new(&["y", "variance", "n_survivors", "escaped", "stationary"]);
        for (i, &y) in grid.iter().enumerate() {
            let (v, c) = match var.ys.iter().position(|&vy| vy == y) {
                Some(j) => (var.values[j], var.n_contributing[j] as f64),
                None => (f64::NAN, 0.0),
            };
            let stationary = if y < 0.0 {
                fokker_planck::potential_density(kind, y, spec.sigma, fp_grid)
                    .map(|d| fokker_planck::density_moments(&d).variance)
                    .unwrap_or(f64::NAN)
            } else {
                f64::NAN
            };
            t.rows.push(vec![y, v, c, esc.values[i], stationary]);
        }
        w.table(&format!("{kind}.csv"), &t)?;
    }
    Ok(())
}

fn fig10(w: &mut Writer, fidelity: Fidelity, seed: u64) -> Result<()> {
    let n = fidelity.pick(1000, 200);
    w.note("n_paths", n);
    for kind in SCALAR_KINDS {
        let spec = ModelSpec::new(kind, 0.02, 0.1)?;
        let cfg = transition_config(&spec, seed, 0.2, BoundaryMode::Absorbing)?;
        let window = WindowSpec::from_y_length(0.2861, spec.epsilon, 10)?;
        let series: Vec<IndicatorSeries> = sde::run_ensemble_map(&spec, &cfg, n, |p| indicators::sliding_variance(p, window))?
            .into_iter()
            .filter_map(|r| r.ok())
            .filter_map(|r| r.ok())
            .collect();
        let avg = indicators::average_series("variance", &series)?;
        w.table(&format!("{kind}.csv"), &series_table(&avg, "variance"))?;
    }
    Ok(())
}

fn fig11(w: &mut Writer, seed: u64) -> Result<()> {
    let spec = ModelSpec::new(ModelKind::Fold, 0.02, 0.1)?;
    w.model(&spec);
    let cfg = transition_config(&spec, seed, 0.1, BoundaryMode::Absorbing)?;
    let path = sde::simulate_path(&spec, &cfg)?;
    let mut t = CsvTable::new(&["y", "x"]);
    for i in 0..path.len() {
        t.rows.push(vec![path.ys[i], path.xs[i]]);
    }
    w.table("path.csv", &t)?;
    let window = WindowSpec::from_y_length(0.2861, spec.epsilon, 1)?;
    let t_stars: Vec<f64> = [-0.7, -0.02]
        .iter()
        .map(|y| (y - cfg.y0) / spec.epsilon)
        .filter(|&t| t <= *path.times.last().unwrap())
        .collect();
    let stats = indicators::window_mean_decomposition(&path, window, &t_stars)?;
    let mut s = CsvTable::new(&["t_star", "y_star", "mean", "variance", "lo", "hi"]);
    for st in stats {
        s.rows.push(vec![
            st.t_star,
            st.y_star,
            st.mean,
            st.variance,
            st.mean - 20.0 * st.variance,
            st.mean + 20.0 * st.variance,
        ]);
    }
    w.table("windows.csv", &s)
}

/// First recorded time at which the path lies outside the absorbing walls.
fn transition_time(path: &sde::SamplePath) -> Option<f64> {
    (0..path.len()).find_map(|i| {
        let y = path.ys[i];
        let walls = match path.kind {
            ModelKind::Fold if y >= 0.0 => return (path.xs[i] < -1.0).then_some(path.times[i]),
            ModelKind::Transcritical if y >= 0.0 => crate::model::Interval::new(0.0, f64::INFINITY),
            kind => escape_boundaries(kind, y).ok()?,
        };
        (!walls.contains(path.xs[i])).then_some(path.times[i])
    })
}

fn fig12(w: &mut Writer, seed: u64) -> Result<()> {
    for kind in [ModelKind::Fold, ModelKind::Transcritical] {
        let spec = ModelSpec::new(kind, 0.02, 0.1)?;
        let cfg = transition_config(&spec, seed, 0.4, BoundaryMode::Window { lo: -2.0, hi: 2.0 })?.with_record_every(5);
        let path = sde::simulate_path(&spec, &cfg)?;
        let mut t = path_table(&path);
        t.push_meta("transition_t", transition_time(&path).unwrap_or(f64::NAN));
        w.table(&format!("{kind}.csv"), &t)?;
    }
    Ok(())
}

fn fig13(w: &mut Writer, fidelity: Fidelity, seed: u64) -> Result<()> {
    let n = fidelity.pick(10_000, 1000);
    w.note("n_paths", n);
    for kind in SCALAR_KINDS {
        let spec = ModelSpec::new(kind, 0.02, 0.1)?;
        let model = if kind == ModelKind::Fold {
            TrendModel::Quadratic
        } else {
            TrendModel::Linear
        };
        for (norm, suffix) in [(AcfNorm::Standard, ""), (AcfNorm::Verbatim, "_verbatim")] {
            let acf = AcfSpec {
                norm,
                ..AcfSpec::default()
            };
            let avg = autocorrelation_ensemble(&spec, n, seed, acf, 0.0)?;
            let fit = indicators::fit_trend(&avg, model)?;
            let t = trend_table(&avg, &fit).meta("normalization", format!("{norm:?}"));
            w.table(&format!("{kind}{suffix}.csv"), &t)?;
        }
    }
    Ok(())
}

/// First pair of seeded transcritical paths, among `n`, whose linear
/// autocorrelation trends have opposite signs.
pub fn opposite_trend_pair(n: usize, seed: u64, norm: AcfNorm) -> Result<Option<[(usize, IndicatorSeries, TrendFit); 2]>> {
    let spec = ModelSpec::new(ModelKind::Transcritical, 0.02, 0.1)?;
    let acf = AcfSpec {
        norm,
        ..AcfSpec::default()
    };
    let paths = autocorrelation_paths(&spec, n, seed, acf, 0.0)?;
    let mut up = None;
    let mut down = None;
    for (i, s) in paths.into_iter().enumerate() {
        let fit = indicators::fit_trend(&s, TrendModel::Linear)?;
        let slot = if fit.slope_at_end > 0.0 { &mut up } else { &mut down };
        if slot.is_none() {
            *slot = Some((i, s, fit));
        }
        if up.is_some() && down.is_some() {
            break;
        }
    }
    Ok(match (up, down) {
        (Some(a), Some(b)) => Some([a, b]),
        _ => None,
    })
}

fn fig14(w: &mut Writer, seed: u64) -> Result<()> {
    let pair = opposite_trend_pair(100, seed, AcfNorm::Standard)?
        .ok_or_else(|| Error::Estimation("no pair with opposite trends among 100 paths".into()))?;
    for (name, (index, series, fit)) in ["path_a.csv", "path_b.csv"].into_iter().zip(pair) {
        let t = trend_table(&series, &fit).meta("path_index", index);
        w.table(name, &t)?;
    }
    Ok(())
}

/// Human-readable table of models and their default parameters.
pub fn list_models_and_defaults() -> String {
    let mut s = String::from("model           defaults\n");
    for kind in ModelKind::ALL {
        let d = default_spec(kind);
        let params = match kind {
            ModelKind::VanDerPol => format!("(eps, a, sigma) = ({}, {}, {})", d.epsilon, d.a, d.sigma),
            ModelKind::ArnoldBoxlerTranscritical => format!("eps = {}, sigma^2 = {}", d.epsilon, round(d.sigma * d.sigma)),
            ModelKind::HopfPlanar => format!("(sigma, eps) = ({}, {}), l1 = {}", d.sigma, d.epsilon, d.l1),
            ModelKind::OrnsteinUhlenbeck => format!("(sigma, eps) = ({}, {}), alpha = {}", d.sigma, d.epsilon, d.alpha),
            _ => format!("(sigma, eps) = ({}, {})", d.sigma, d.epsilon),
        };
        let _ = writeln!(s, "{:<15} {params}", kind.name());
    }
    s.push_str("\nconfiguration keys\n");
    s.push_str(&crate::config::describe_keys());
    s.push_str("\nfigures\n");
    for f in FIGURES {
        let _ = writeln!(s, "{:<6} {}: {}", f.id, f.title, f.parameters);
    }
    s
}

fn round(v: f64) -> f64 {
    (v * 1e12).round() / 1e12
}
