//! Experiment configuration files.
//!
//! Grammar, one item per line:
//!
//! ```text
//! # comment (also `;`)
//! [section]
//! key = value
//! ```
//!
//! A key's full path is `section.key`. Blank lines are ignored, values are
//! trimmed, lists are comma separated. Unknown keys, keys outside a section
//! and repeated keys are errors. [`KEYS`] lists every key with its default.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::indicators::AcfNorm;
use crate::model::{ModelKind, ModelSpec};
use crate::sde::{BoundaryMode, DEFAULT_DT};

#[derive(Debug, Clone, Copy)]
pub struct KeyDoc {
    pub key: &'static str,
    /// `None` marks a required key.
    pub default: Option<&'static str>,
    pub doc: &'static str,
}

const fn key(key: &'static str, default: Option<&'static str>, doc: &'static str) -> KeyDoc {
    KeyDoc { key, default, doc }
}

pub const KEYS: &[KeyDoc] = &[
    key("experiment.name", None, "simulate | ensemble | density | variance-curve | delay | scaling-scan | indicators"),
    key("model.kind", None, "fold | transcritical | pitchfork | hopf | vdp | ab | ou"),
    key("model.epsilon", Some("model default"), "time-scale separation"),
    key("model.sigma", Some("model default"), "noise level"),
    key("model.l1", Some("1"), "first Lyapunov coefficient (hopf)"),
    key("model.a", Some("1.05"), "equilibrium parameter (vdp)"),
    key("model.alpha", Some("1"), "linear restoring rate (ou)"),
    key("sim.dt", Some("0.01"), "Euler-Maruyama step in fast time"),
    key("sim.y0", Some("-1"), "initial slow value"),
    key("sim.y_end", Some("0.2"), "final slow value"),
    key("sim.t_end", Some("from y_end"), "fast-time horizon; overrides y_end"),
    key("sim.seed", Some("0"), "base seed"),
    key("sim.x0", Some("attracting branch at y0"), "initial fast state, comma separated"),
    key("sim.boundary", Some("absorbing"), "none | absorbing | window"),
    key("sim.window_lo", Some("-1"), "lower wall for boundary = window"),
    key("sim.window_hi", Some("inf"), "upper wall for boundary = window"),
    key("sim.record_every", Some("1"), "keep every n-th step"),
    key("sim.n_paths", Some("1000"), "ensemble size"),
    key("indicators.window_y", Some("0.2861"), "sliding-variance window length in y"),
    key("indicators.lag_y", Some("0.002"), "autocorrelation lag in y"),
    key("indicators.segment_y", Some("0.016"), "autocorrelation segment length in y"),
    key("indicators.norm", Some("verbatim"), "verbatim | standard autocorrelation normalization"),
    key("indicators.grid_step", Some("0.01"), "y spacing of ensemble statistics"),
    key("density.ys", Some("-0.8,-0.4,-0.1"), "slow values for density slices"),
    key("density.n_intervals", Some("8192"), "Simpson intervals"),
    key("density.y_min", Some("-1.5"), "variance curve start"),
    key("density.y_max", Some("-0.005"), "variance curve end"),
    key("density.n_points", Some("300"), "variance curve points"),
    key("scan.epsilons", Some("0.005,0.01,0.02,0.04"), "epsilon grid"),
    key("scan.sigmas", Some("0.001,0.003,0.01,0.03,0.1,0.3,0.5"), "sigma grid"),
    key("scan.y_stop", Some("0"), "escapes before this y count as early"),
    key("delay.rho", Some("0.5"), "section parameter"),
    key("delay.epsilons", Some("0.05,0.02,0.01,0.005,0.002"), "epsilon grid for the exit fit"),
    key("output.dir", None, "output directory"),
];

pub fn required_keys() -> Vec<&'static str> {
    KEYS.iter().filter(|k| k.default.is_none()).map(|k| k.key).collect()
}

fn is_known(k: &str) -> bool {
    KEYS.iter().any(|d| d.key == k)
}

/// Parsed but uninterpreted `section.key -> value` map.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        let mut section: Option<String> = None;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            let at = format!("line {}", n + 1);
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::config(&at, "unterminated section header"))?
                    .trim();
                if name.is_empty() {
                    return Err(Error::config(&at, "empty section name"));
                }
                section = Some(name.to_string());
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::config(&at, format!("expected `key = value`, got `{line}`")))?;
            let sec = section
                .as_deref()
                .ok_or_else(|| Error::config(k.trim(), "key appears before any [section]"))?;
            let full = format!("{sec}.{}", k.trim());
            if raw.values.contains_key(&full) {
                return Err(Error::config(&full, "key given twice"));
            }
            raw.set(&full, v.trim())?;
        }
        Ok(raw)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !is_known(key) {
            return Err(Error::config(key, "unknown key"));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn num<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e| Error::config(key, format!("cannot parse `{v}`: {e}"))),
        }
    }

    fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => parse_list(v).map_err(|m| Error::config(key, m)),
        }
    }
}

pub fn parse_list(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| format!("cannot parse `{s}`: {e}")))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Simulate,
    Ensemble,
    Density,
    VarianceCurve,
    Delay,
    ScalingScan,
    Indicators,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Simulate,
        ExperimentKind::Ensemble,
        ExperimentKind::Density,
        ExperimentKind::VarianceCurve,
        ExperimentKind::Delay,
        ExperimentKind::ScalingScan,
        ExperimentKind::Indicators,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Ensemble => "ensemble",
            ExperimentKind::Density => "density",
            ExperimentKind::VarianceCurve => "variance-curve",
            ExperimentKind::Delay => "delay",
            ExperimentKind::ScalingScan => "scaling-scan",
            ExperimentKind::Indicators => "indicators",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config("experiment.name", format!("unknown experiment `{s}`")))
    }
}

/// Defaults taken from the figure parameter sets.
pub fn default_spec(kind: ModelKind) -> ModelSpec {
    let (eps, sigma) = match kind {
        ModelKind::VanDerPol => (0.05, 0.1),
        ModelKind::ArnoldBoxlerTranscritical => (0.02, 0.8f64.sqrt()),
        ModelKind::HopfPlanar => (0.01, 0.1),
        _ => (0.02, 0.1),
    };
    ModelSpec::new(kind, eps, sigma).expect("catalog defaults are valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub dt: f64,
    pub y0: f64,
    pub y_end: f64,
    pub t_end: Option<f64>,
    pub seed: u64,
    pub x0: Option<Vec<f64>>,
    pub boundary: BoundaryMode,
    pub record_every: usize,
    pub n_paths: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSettings {
    pub window_y: f64,
    pub lag_y: f64,
    pub segment_y: f64,
    pub norm: AcfNorm,
    pub grid_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensitySettings {
    pub ys: Vec<f64>,
    pub n_intervals: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub epsilons: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub y_stop: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelaySettings {
    pub rho: f64,
    pub epsilons: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub model: ModelSpec,
    pub sim: SimSettings,
    pub indicators: IndicatorSettings,
    pub density: DensitySettings,
    pub scan: ScanConfig,
    pub delay: DelaySettings,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let missing: Vec<&str> = required_keys()
            .into_iter()
            .filter(|k| raw.get(k).is_none())
            .collect();
        if !missing.is_empty() {
            return Err(Error::config(
                missing.join(", "),
                format!("missing required keys (required: {})", required_keys().join(", ")),
            ));
        }
        let experiment = ExperimentKind::parse(raw.get("experiment.name").unwrap())?;
        let kind: ModelKind = raw.get("model.kind").unwrap().parse()?;
        let base = default_spec(kind);
        let model = base
            .with_epsilon(raw.num("model.epsilon", base.epsilon)?)
            .with_sigma(raw.num("model.sigma", base.sigma)?)
            .with_l1(raw.num("model.l1", base.l1)?)
            .with_a(raw.num("model.a", base.a)?)
            .with_alpha(raw.num("model.alpha", base.alpha)?);
        model
            .validate()
            .map_err(|e| Error::config("model", e.to_string()))?;

        let boundary = match raw.get("sim.boundary").unwrap_or("absorbing") {
            "none" => BoundaryMode::None,
            "absorbing" => BoundaryMode::Absorbing,
            "window" => BoundaryMode::Window {
                lo: raw.num("sim.window_lo", -1.0)?,
                hi: raw.num("sim.window_hi", f64::INFINITY)?,
            },
            other => return Err(Error::config("sim.boundary", format!("unknown boundary `{other}`"))),
        };
        let x0 = match raw.get("sim.x0") {
            None => None,
            Some(v) => Some(parse_list(v).map_err(|m| Error::config("sim.x0", m))?),
        };
        let sim = SimSettings {
            dt: raw.num("sim.dt", DEFAULT_DT)?,
            y0: raw.num("sim.y0", -1.0)?,
            y_end: raw.num("sim.y_end", 0.2)?,
            t_end: match raw.get("sim.t_end") {
                None => None,
                Some(_) => Some(raw.num("sim.t_end", 0.0)?),
            },
            seed: raw.num("sim.seed", 0u64)?,
            x0,
            boundary,
            record_every: raw.num("sim.record_every", 1usize)?,
            n_paths: raw.num("sim.n_paths", 1000usize)?,
        };
        if !(sim.dt > 0.0 && sim.dt <= 0.1) {
            return Err(Error::config("sim.dt", "must lie in (0, 0.1]"));
        }
        if sim.record_every == 0 || sim.n_paths == 0 {
            return Err(Error::config("sim", "record_every and n_paths must be >= 1"));
        }
        let indicators = IndicatorSettings {
            window_y: raw.num("indicators.window_y", 0.2861)?,
            lag_y: raw.num("indicators.lag_y", 0.002)?,
            segment_y: raw.num("indicators.segment_y", 0.016)?,
            norm: match raw.get("indicators.norm").unwrap_or("verbatim") {
                "verbatim" => AcfNorm::Verbatim,
                "standard" => AcfNorm::Standard,
                other => return Err(Error::config("indicators.norm", format!("unknown normalization `{other}`"))),
            },
            grid_step: raw.num("indicators.grid_step", 0.01)?,
        };
        let density = DensitySettings {
            ys: raw.list("density.ys", &[-0.8, -0.4, -0.1])?,
            n_intervals: raw.num("density.n_intervals", 8192usize)?,
            y_min: raw.num("density.y_min", -1.5)?,
            y_max: raw.num("density.y_max", -0.005)?,
            n_points: raw.num("density.n_points", 300usize)?,
        };
        let scan = ScanConfig {
            epsilons: raw.list("scan.epsilons", &[0.005, 0.01, 0.02, 0.04])?,
            sigmas: raw.list("scan.sigmas", &[0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 0.5])?,
            y_stop: raw.num("scan.y_stop", 0.0)?,
        };
        let delay = DelaySettings {
            rho: raw.num("delay.rho", 0.5)?,
            epsilons: raw.list("delay.epsilons", &[0.05, 0.02, 0.01, 0.005, 0.002])?,
        };
        Ok(ExperimentConfig {
            experiment,
            model,
            sim,
            indicators,
            density,
            scan,
            delay,
            output_dir: PathBuf::from(raw.get("output.dir").unwrap()),
        })
    }
}

/// Table of all keys with defaults.
pub fn describe_keys() -> String {
    let mut out = String::new();
    for k in KEYS {
        let d = k.default.unwrap_or("(required)");
        out.push_str(&format!("{:<24} {:<28} {}\n", k.key, d, k.doc));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[experiment]\nname = simulate\n[model]\nkind = fold\n[output]\ndir = out\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.experiment, ExperimentKind::Simulate);
        assert_eq!(c.model.epsilon, 0.02);
        assert_eq!(c.model.sigma, 0.1);
        assert_eq!(c.sim.boundary, BoundaryMode::Absorbing);
        assert_eq!(c.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn empty_config_lists_required_keys() {
        let e = ExperimentConfig::parse("").unwrap_err();
        let msg = e.to_string();
        for k in ["experiment.name", "model.kind", "output.dir"] {
            assert!(msg.contains(k), "{msg}");
        }
        assert!(e.is_config_error());
    }

    #[test]
    fn unknown_key_reports_its_path() {
        let text = format!("{MINIMAL}[sim]\nsped = 3\n");
        match ExperimentConfig::parse(&text) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "sim.sped"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_values_report_their_path() {
        let text = format!("{MINIMAL}[sim]\ndt = fast\n");
        match ExperimentConfig::parse(&text) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "sim.dt"),
            other => panic!("{other:?}"),
        }
        assert!(ExperimentConfig::parse("name = x\n").is_err());
        assert!(ExperimentConfig::parse(&format!("{MINIMAL}[model]\nkind = fold\n")).is_err());
    }

    #[test]
    fn lists_and_comments() {
        let text = format!("# top\n{MINIMAL}; note\n[scan]\nsigmas = 0.1, 0.2\n[sim]\nboundary = window\nwindow_lo = -2\n");
        let c = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(c.scan.sigmas, vec![0.1, 0.2]);
        assert_eq!(c.sim.boundary, BoundaryMode::Window { lo: -2.0, hi: f64::INFINITY });
    }

    #[test]
    fn every_key_is_documented() {
        let table = describe_keys();
        assert_eq!(table.lines().count(), KEYS.len());
    }
}
