//! Run configuration: JSON file schema, defaults, command-line overrides,
//! and the fully resolved form written back into every output directory.

use crate::CliError;
use sbmgrowth::ModelParams;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// On-disk configuration. Every field is optional; matrices mirror the
/// model's symmetric 2x2 presentation and the redundancy is validated.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// Probability matrix `[[a, b], [b, a]]`.
    pub p: Option<[[f64; 2]; 2]>,
    /// Weight matrix `[[alpha, beta], [beta, alpha]]`.
    pub zeta: Option<[[f64; 2]; 2]>,
    pub lambda: Option<f64>,
    pub n0: Option<usize>,
    pub n0_red: Option<usize>,
    pub t_max: Option<u64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub epsilon: Option<f64>,
    pub dump_graphs: Option<bool>,
    /// Explicit phase ratio for `detmap`/`sweep`; defaults to the value
    /// derived from `p` and `zeta`.
    pub rho: Option<f64>,
    /// Start point for `detmap`; defaults to `n0_red / n0`.
    pub x0: Option<f64>,
    pub max_iter: Option<usize>,
    pub tol_conv: Option<f64>,
    pub population_cap: Option<usize>,
    pub sweep: Option<SweepSpec>,
}

/// Sweep axes: either explicit `rho` values or rate grids, crossed with
/// `lambda` values.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub rho: Option<Vec<f64>>,
    pub a: Option<Vec<f64>>,
    pub b: Option<Vec<f64>>,
    pub alpha: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
    pub lambda: Option<Vec<f64>>,
}

/// Fully explicit configuration; serialized verbatim as `config.json`
/// next to the outputs so a run directory is self-describing.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub p: [[f64; 2]; 2],
    pub zeta: [[f64; 2]; 2],
    pub lambda: f64,
    pub n0: usize,
    pub n0_red: usize,
    pub t_max: u64,
    pub trials: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub dump_graphs: bool,
    pub rho: f64,
    pub x0: f64,
    pub max_iter: usize,
    pub tol_conv: f64,
    pub population_cap: usize,
    pub threads: usize,
    pub sweep: SweepSpec,
}

/// Command-line overrides applied on top of the file.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub threads: Option<usize>,
}

/// Per-command defaults where the file leaves gaps.
#[derive(Clone, Copy, Debug)]
pub enum CommandKind {
    Simulate,
    Detmap,
    Sweep,
    Verify,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {path:?}: {e}")))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config {path:?}: {e}")))
    }

    pub fn resolve(&self, cmd: CommandKind, ov: Overrides) -> Result<ResolvedConfig, CliError> {
        let p = self.p.unwrap_or([[0.75, 0.25], [0.25, 0.75]]);
        let zeta = self.zeta.unwrap_or([[1.0, 100.0], [100.0, 1.0]]);
        check_symmetric("p", &p)?;
        check_symmetric("zeta", &zeta)?;
        let (a, b) = (p[0][0], p[0][1]);
        let (alpha, beta) = (zeta[0][0], zeta[0][1]);

        let (n0_default, n0_red_default, trials_default) = match cmd {
            CommandKind::Verify => (2000, 600, 10_000),
            _ => (70, 5, 50),
        };
        let n0 = self.n0.unwrap_or(n0_default);
        let n0_red = self.n0_red.unwrap_or(n0_red_default);
        if n0_red > n0 {
            return Err(CliError::Validation(format!(
                "n0_red = {n0_red} exceeds n0 = {n0}"
            )));
        }
        let lambda = self.lambda.unwrap_or(0.1);
        let rho = match self.rho {
            Some(r) if r > 0.0 && r.is_finite() => r,
            Some(r) => {
                return Err(CliError::Validation(format!(
                    "rho must be positive and finite, got {r}"
                )))
            }
            None => (a * alpha) / (b * beta),
        };
        let x0 = match self.x0 {
            Some(x) if x > 0.0 && x < 1.0 => x,
            Some(x) => {
                return Err(CliError::Validation(format!(
                    "x0 must lie strictly inside (0, 1), got {x}"
                )))
            }
            None => {
                if n0 == 0 {
                    return Err(CliError::Validation("n0 = 0".into()));
                }
                n0_red as f64 / n0 as f64
            }
        };

        let cfg = ResolvedConfig {
            p,
            zeta,
            lambda,
            n0,
            n0_red,
            t_max: self.t_max.unwrap_or(60),
            trials: ov.trials.or(self.trials).unwrap_or(trials_default),
            seed: ov.seed.or(self.seed).unwrap_or(42),
            epsilon: self.epsilon.unwrap_or(0.25),
            dump_graphs: self.dump_graphs.unwrap_or(false),
            rho,
            x0,
            max_iter: self.max_iter.unwrap_or(10_000),
            tol_conv: self.tol_conv.unwrap_or(1e-10),
            population_cap: self
                .population_cap
                .unwrap_or(sbmgrowth::dynamics::DEFAULT_POPULATION_CAP),
            threads: ov.threads.unwrap_or(0), // 0 = all available
            sweep: self.sweep.clone().unwrap_or(SweepSpec {
                rho: Some(vec![0.2, 1.0, 12.0]),
                lambda: Some(vec![2.0]),
                ..SweepSpec::default()
            }),
        };

        if cfg.trials == 0 {
            return Err(CliError::Validation("trials must be at least 1".into()));
        }
        if cfg.tol_conv.is_nan() || cfg.tol_conv <= 0.0 || cfg.max_iter == 0 {
            return Err(CliError::Validation(
                "tol_conv must be positive and max_iter at least 1".into(),
            ));
        }
        Ok(cfg)
    }
}

fn check_symmetric(name: &str, m: &[[f64; 2]; 2]) -> Result<(), CliError> {
    if m[0][1] != m[1][0] || m[0][0] != m[1][1] {
        return Err(CliError::Validation(format!(
            "{name} must have the form [[x, y], [y, x]], got {m:?}"
        )));
    }
    Ok(())
}

impl ResolvedConfig {
    /// Validate the stochastic parameter set against `n0`.
    pub fn model_params(&self) -> Result<ModelParams, CliError> {
        ModelParams::validate(
            self.p[0][0],
            self.p[0][1],
            self.zeta[0][0],
            self.zeta[0][1],
            self.lambda,
            self.n0,
        )
        .map_err(|e| CliError::Validation(e.to_string()))
    }

    /// The sweep grid as explicit `(rho, lambda)` cells, row-major with
    /// lambda varying fastest.
    pub fn sweep_cells(&self) -> Result<Vec<(f64, f64)>, CliError> {
        let lambdas = self
            .sweep
            .lambda
            .clone()
            .unwrap_or_else(|| vec![self.lambda]);
        let rhos: Vec<f64> = if let Some(rhos) = &self.sweep.rho {
            rhos.clone()
        } else {
            let axis = |v: &Option<Vec<f64>>, fallback: f64| -> Vec<f64> {
                v.clone().unwrap_or_else(|| vec![fallback])
            };
            let mut out = Vec::new();
            for a in axis(&self.sweep.a, self.p[0][0]) {
                for b in axis(&self.sweep.b, self.p[0][1]) {
                    for alpha in axis(&self.sweep.alpha, self.zeta[0][0]) {
                        for beta in axis(&self.sweep.beta, self.zeta[0][1]) {
                            out.push((a * alpha) / (b * beta));
                        }
                    }
                }
            }
            out
        };
        if rhos.is_empty() || lambdas.is_empty() {
            return Err(CliError::Validation("sweep grid is empty".into()));
        }
        let mut cells = Vec::with_capacity(rhos.len() * lambdas.len());
        for &r in &rhos {
            for &l in &lambdas {
                cells.push((r, l));
            }
        }
        Ok(cells)
    }

    pub fn write_into(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Validation(format!("config serialization: {e}")))?;
        std::fs::write(dir.join("config.json"), text)?;
        Ok(())
    }
}
