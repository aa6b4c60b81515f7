//! Run configuration: `key = value` lines grouped under `[section]` headers.
//!
//! Every field has a default, so an empty file is a valid configuration.
//! Unknown sections and keys are rejected with their line and column.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use super::fmt_num;
use crate::continuation::{BranchOptions, DEFAULT_SWEEP};
use crate::error::{Error, Result};
use crate::model::{Calibration, ModelParams};
use crate::orbits::ShootingOptions;

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub nu: f64,
    pub r: f64,
    pub lambda_star: f64,
    pub phi_at_zero: f64,
    pub pi_star: f64,
    pub kappa0: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let c = Calibration::benchmark();
        Self {
            alpha: c.alpha,
            beta: c.beta,
            delta: c.delta,
            nu: c.nu,
            r: c.r,
            lambda_star: c.lambda_star,
            phi_at_zero: c.phi_at_zero,
            pi_star: c.pi_star,
            kappa0: c.kappa0,
            kappa1: c.kappa1,
            kappa2: c.kappa2,
        }
    }
}

impl ModelSection {
    pub fn calibration(&self) -> Calibration {
        Calibration {
            alpha: self.alpha,
            beta: self.beta,
            delta: self.delta,
            nu: self.nu,
            r: self.r,
            lambda_star: self.lambda_star,
            phi_at_zero: self.phi_at_zero,
            pi_star: self.pi_star,
            kappa0: self.kappa0,
            kappa1: self.kappa1,
            kappa2: self.kappa2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub rk_tol: f64,
    pub newton_tol: f64,
    pub max_iter: usize,
    /// Phase grid of the zero-interest cycles and sampled orbits.
    pub theta_grid: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        let s = ShootingOptions::default();
        Self {
            rk_tol: s.rk_tol,
            newton_tol: s.newton_tol,
            max_iter: s.max_iter,
            theta_grid: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub kappa2_min: f64,
    pub kappa2_max: f64,
    pub steps: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            kappa2_min: DEFAULT_SWEEP.0,
            kappa2_max: DEFAULT_SWEEP.1,
            steps: 121,
        }
    }
}

/// Branch points sit at `κ₂* − gap` with gaps spaced geometrically.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BranchSection {
    pub min_gap: f64,
    pub max_gap: f64,
    pub points: usize,
    pub max_halvings: usize,
    /// Extra orbits located by amplitude between branch points.
    pub match_amplitudes: Vec<f64>,
}

impl Default for BranchSection {
    fn default() -> Self {
        Self {
            min_gap: 2e-4,
            max_gap: 0.25,
            points: 16,
            max_halvings: 4,
            match_amplitudes: vec![0.00198499, 0.00264177],
        }
    }
}

/// Linear grid of family parameters for the reduction tables.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReduceSection {
    pub amplitude_min: f64,
    pub amplitude_max: f64,
    pub amplitude_points: usize,
}

impl Default for ReduceSection {
    fn default() -> Self {
        Self {
            amplitude_min: 0.002,
            amplitude_max: 0.05,
            amplitude_points: 25,
        }
    }
}

impl ReduceSection {
    pub fn grid(&self) -> Vec<f64> {
        let n = self.amplitude_points;
        if n == 1 {
            return vec![self.amplitude_min];
        }
        (0..n)
            .map(|k| self.amplitude_min + (self.amplitude_max - self.amplitude_min) * k as f64 / (n - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: "keen_output".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelSection,
    pub numerics: Numerics,
    pub sweep: SweepSection,
    pub branch: BranchSection,
    pub reduce: ReduceSection,
    pub output: OutputSection,
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, column)
}

fn config_error(text: &str, offset: usize, message: impl Into<String>) -> Error {
    let (line, column) = line_column(text, offset);
    Error::Config {
        line,
        column,
        message: message.into(),
    }
}

/// Offset of `key` on the line that assigns it inside `[section]`.
fn key_offset(text: &str, section: &str, key: &str) -> usize {
    let mut current = String::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if let Some(name) = trimmed.strip_prefix('[').and_then(|s| s.split(']').next()) {
            current = name.trim().to_string();
        } else if current == section {
            if let Some((lhs, _)) = line.split_once('=') {
                if lhs.trim() == key {
                    return offset + line.find(key).unwrap_or(0);
                }
            }
        }
        offset += line.len();
    }
    0
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let offset = e.span().map_or(0, |s| s.start);
            config_error(text, offset, e.message().trim().to_string())
        })?;
        cfg.check(text)?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    fn check(&self, text: &str) -> Result<()> {
        let fail = |section: &str, key: &str, why: &str| {
            Err(config_error(
                text,
                key_offset(text, section, key),
                format!("{section}.{key}: {why}"),
            ))
        };
        let n = &self.numerics;
        if !(1e-13..=1e-6).contains(&n.rk_tol) {
            return fail("numerics", "rk_tol", "must lie in [1e-13, 1e-6]");
        }
        if !(n.newton_tol > 0.0) {
            return fail("numerics", "newton_tol", "must be positive");
        }
        if n.max_iter == 0 {
            return fail("numerics", "max_iter", "must be positive");
        }
        if n.theta_grid < 256 {
            return fail("numerics", "theta_grid", "must be at least 256");
        }
        if !(self.sweep.kappa2_min < self.sweep.kappa2_max) {
            return fail("sweep", "kappa2_max", "must exceed kappa2_min");
        }
        if self.sweep.steps < 2 {
            return fail("sweep", "steps", "must be at least 2");
        }
        let b = &self.branch;
        if !(b.min_gap > 0.0 && b.max_gap >= b.min_gap) {
            return fail("branch", "max_gap", "gaps must satisfy 0 < min_gap <= max_gap");
        }
        if b.points == 0 {
            return fail("branch", "points", "must be positive");
        }
        if b.match_amplitudes.iter().any(|a| !(*a > 0.0)) {
            return fail("branch", "match_amplitudes", "amplitudes must be positive");
        }
        let r = &self.reduce;
        if !(r.amplitude_min > 0.0 && r.amplitude_max >= r.amplitude_min) {
            return fail("reduce", "amplitude_max", "need 0 < amplitude_min <= amplitude_max");
        }
        if r.amplitude_points == 0 {
            return fail("reduce", "amplitude_points", "must be positive");
        }
        if self.output.dir.is_empty() {
            return fail("output", "dir", "must not be empty");
        }
        Ok(())
    }

    /// Builds the calibrated parameters; inadmissible values are config errors.
    pub fn params(&self) -> Result<ModelParams> {
        self.model.calibration().build().map_err(|e| Error::Config {
            line: 0,
            column: 0,
            message: format!("model section is inadmissible: {e}"),
        })
    }

    pub fn shooting(&self) -> ShootingOptions {
        ShootingOptions {
            rk_tol: self.numerics.rk_tol,
            newton_tol: self.numerics.newton_tol,
            max_iter: self.numerics.max_iter,
            grid: self.numerics.theta_grid.max(512),
        }
    }

    pub fn branch_options(&self) -> BranchOptions {
        BranchOptions {
            shooting: self.shooting(),
            reduced_grid: self.numerics.theta_grid,
            max_halvings: self.branch.max_halvings,
            compute_reduced: true,
        }
    }

    /// Canonical text of the resolved configuration; parses back to `self`.
    pub fn render(&self) -> String {
        let m = &self.model;
        let n = &self.numerics;
        let s = &self.sweep;
        let b = &self.branch;
        let r = &self.reduce;
        let mut out = String::new();
        let mut section = |name: &str, fields: &[(&str, String)]| {
            let _ = writeln!(out, "[{name}]");
            for (k, v) in fields {
                let _ = writeln!(out, "{k} = {v}");
            }
        };
        section(
            "model",
            &[
                ("alpha", fmt_num(m.alpha)),
                ("beta", fmt_num(m.beta)),
                ("delta", fmt_num(m.delta)),
                ("nu", fmt_num(m.nu)),
                ("r", fmt_num(m.r)),
                ("lambda_star", fmt_num(m.lambda_star)),
                ("phi_at_zero", fmt_num(m.phi_at_zero)),
                ("pi_star", fmt_num(m.pi_star)),
                ("kappa0", fmt_num(m.kappa0)),
                ("kappa1", fmt_num(m.kappa1)),
                ("kappa2", fmt_num(m.kappa2)),
            ],
        );
        section(
            "numerics",
            &[
                ("rk_tol", fmt_num(n.rk_tol)),
                ("newton_tol", fmt_num(n.newton_tol)),
                ("max_iter", n.max_iter.to_string()),
                ("theta_grid", n.theta_grid.to_string()),
            ],
        );
        section(
            "sweep",
            &[
                ("kappa2_min", fmt_num(s.kappa2_min)),
                ("kappa2_max", fmt_num(s.kappa2_max)),
                ("steps", s.steps.to_string()),
            ],
        );
        section(
            "branch",
            &[
                ("min_gap", fmt_num(b.min_gap)),
                ("max_gap", fmt_num(b.max_gap)),
                ("points", b.points.to_string()),
                ("max_halvings", b.max_halvings.to_string()),
                (
                    "match_amplitudes",
                    format!(
                        "[{}]",
                        b.match_amplitudes.iter().map(|&a| fmt_num(a)).collect::<Vec<_>>().join(", ")
                    ),
                ),
            ],
        );
        section(
            "reduce",
            &[
                ("amplitude_min", fmt_num(r.amplitude_min)),
                ("amplitude_max", fmt_num(r.amplitude_max)),
                ("amplitude_points", r.amplitude_points.to_string()),
            ],
        );
        section("output", &[("dir", format!("{:?}", self.output.dir))]);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BENCHMARK: &str = "\
# benchmark economy
[model]
alpha = 0.025
beta = 0.02
delta = 0.01
nu = 3
r = 0.003
";

    #[test]
    fn benchmark_values_are_read() {
        let cfg = RunConfig::parse(BENCHMARK).unwrap();
        assert_eq!(cfg.model.alpha, 0.025);
        assert_eq!(cfg.model.beta, 0.02);
        assert_eq!(cfg.model.delta, 0.01);
        assert_eq!(cfg.model.nu, 3.0);
        assert_eq!(cfg.model.r, 0.003);
        assert_eq!(cfg.params().unwrap(), ModelParams::benchmark());
    }

    #[test]
    fn missing_numerics_fall_back_to_defaults() {
        let cfg = RunConfig::parse(BENCHMARK).unwrap();
        assert_eq!(cfg.numerics, Numerics::default());
        assert!(cfg.render().contains("rk_tol = 1.00000000000e-12"));
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn misspelled_key_is_reported_with_position() {
        let err = RunConfig::parse("[model]\nbeta = 0.02\n  aplha = 0.025\n").unwrap_err();
        match err {
            Error::Config { line, column, message } => {
                assert_eq!((line, column), (3, 3));
                assert!(message.contains("aplha"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_section_is_an_error() {
        let err = RunConfig::parse("[modle]\nalpha = 0.025\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 1, .. }), "{err:?}");
    }

    #[test]
    fn range_violations_point_at_the_key() {
        let err = RunConfig::parse("[numerics]\n\nrk_tol = 1e-3\n").unwrap_err();
        match err {
            Error::Config { line, column, message } => {
                assert_eq!((line, column), (3, 1));
                assert!(message.contains("rk_tol"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rendered_config_parses_back() {
        let mut cfg = RunConfig::default();
        cfg.model.kappa2 = 12.75;
        cfg.branch.points = 7;
        cfg.branch.match_amplitudes = vec![0.003];
        cfg.output.dir = "runs/a b".into();
        assert_eq!(RunConfig::parse(&cfg.render()).unwrap(), cfg);
    }

    #[test]
    fn inadmissible_model_is_a_config_error() {
        let cfg = RunConfig::parse("[model]\nkappa0 = 0.5\n").unwrap();
        assert!(cfg.params().unwrap_err().is_config());
    }
}
