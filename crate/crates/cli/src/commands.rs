//! The four subcommands. Every command materializes its output directory,
//! writes the resolved `config.json` first, and then its own artifacts, so
//! a run directory plus the same build reproduces itself bit for bit.

use crate::config::ResolvedConfig;
use crate::CliError;
use rayon::prelude::*;
use sbmgrowth::detmap::{DetParams, FixedPointAnalysis, Phase};
use sbmgrowth::dynamics::{self, DynState, StepRecord};
use sbmgrowth::fmt::sig17;
use sbmgrowth::params::{ModelParams, Population, SeedSpec};
use sbmgrowth::verify;
use serde::Serialize;
use std::fs;
use std::path::Path;

#[derive(Serialize)]
struct Summary {
    trials: usize,
    t_max: u64,
    final_phi: Vec<f64>,
    median: f64,
    q1: f64,
    q3: f64,
}

pub fn cmd_simulate(cfg: &ResolvedConfig, out: &Path) -> Result<(), CliError> {
    let params = cfg.model_params()?;
    fs::create_dir_all(out)?;
    cfg.write_into(out)?;
    let initial = Population::new(cfg.n0_red, cfg.n0 - cfg.n0_red);

    let results: Vec<Result<Vec<StepRecord>, CliError>> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|stream| run_trial(cfg, &params, initial, stream, out))
        .collect();

    let mut final_phi = Vec::with_capacity(cfg.trials);
    for res in results {
        let records = res?;
        final_phi.push(records.last().expect("at least the t=0 record").phi);
    }
    let summary = Summary {
        trials: cfg.trials,
        t_max: cfg.t_max,
        median: quantile(&final_phi, 0.5),
        q1: quantile(&final_phi, 0.25),
        q3: quantile(&final_phi, 0.75),
        final_phi,
    };
    write_json(out.join("summary.json"), &summary)?;
    println!(
        "simulate: {} trial(s), t_max = {}, median final phi = {:.6} -> {}",
        cfg.trials,
        cfg.t_max,
        summary.median,
        out.display()
    );
    Ok(())
}

/// One trajectory on stream `stream`, optionally dumping each round's
/// graph. Trajectories are identical whether or not graphs are dumped.
fn run_trial(
    cfg: &ResolvedConfig,
    params: &ModelParams,
    initial: Population,
    stream: u64,
    out: &Path,
) -> Result<Vec<StepRecord>, CliError> {
    let mut state = DynState::new(initial, SeedSpec::new(cfg.seed, stream));
    let mut records = Vec::with_capacity(cfg.t_max as usize + 1);
    records.push(StepRecord::initial(initial));

    let graph_dir = if cfg.dump_graphs {
        let dir = out.join(format!("graphs/trial_{stream:04}"));
        fs::create_dir_all(&dir)?;
        Some(dir)
    } else {
        None
    };

    for _ in 0..cfg.t_max {
        let rec = match &graph_dir {
            Some(dir) => {
                let (rec, g) = state.step_with_graph(params);
                fs::write(
                    dir.join(format!("graph_t{:05}.txt", rec.t)),
                    g.dump_edge_list(state.vertices()),
                )?;
                rec
            }
            None => state.step(params),
        };
        if rec.n > cfg.population_cap {
            return Err(CliError::RuntimeLimit(format!(
                "population {} exceeded the cap {} at round {}",
                rec.n, cfg.population_cap, rec.t
            )));
        }
        records.push(rec);
    }
    fs::write(
        out.join(format!("trajectory_{stream:04}.csv")),
        dynamics::trajectory_csv(&records),
    )?;
    Ok(records)
}

#[derive(Serialize)]
struct StabilityReport {
    rho: f64,
    lambda: f64,
    x0: f64,
    phase: Phase,
    identity_map: bool,
    fixed_points: FixedPointAnalysis,
    converged_to: Option<f64>,
    iterations: usize,
}

pub fn cmd_detmap(cfg: &ResolvedConfig, out: &Path) -> Result<(), CliError> {
    let det =
        DetParams::new(cfg.rho, cfg.lambda).map_err(|e| CliError::Validation(e.to_string()))?;
    fs::create_dir_all(out)?;
    cfg.write_into(out)?;

    let traj = det.iterate(cfg.x0, cfg.max_iter, cfg.tol_conv);
    fs::write(
        out.join("det_trajectory.csv"),
        sbmgrowth::detmap::det_trajectory_csv(&traj),
    )?;
    fs::write(out.join("curve.csv"), det.curve_csv(1001))?;

    let fixed_points = det.fixed_points();
    let report = StabilityReport {
        rho: cfg.rho,
        lambda: cfg.lambda,
        x0: cfg.x0,
        phase: det.phase(),
        identity_map: matches!(fixed_points, FixedPointAnalysis::IdentityMap),
        fixed_points,
        converged_to: traj.converged_to,
        iterations: traj.iterations,
    };
    write_json(out.join("stability.json"), &report)?;
    println!(
        "detmap: rho = {}, lambda = {}, phase = {:?}, converged_to = {:?} -> {}",
        cfg.rho,
        cfg.lambda,
        report.phase,
        report.converged_to,
        out.display()
    );
    Ok(())
}

fn phase_label(p: Phase) -> &'static str {
    match p {
        Phase::MinorityVanishes => "minority_vanishes",
        Phase::ParityReached => "parity_reached",
        Phase::Frozen => "frozen",
    }
}

pub fn cmd_sweep(cfg: &ResolvedConfig, out: &Path) -> Result<(), CliError> {
    let cells = cfg.sweep_cells()?;
    fs::create_dir_all(out)?;
    cfg.write_into(out)?;

    let mut csv = String::from("rho,lambda,phase,fprime_0,fprime_half\n");
    for &(rho, lambda) in &cells {
        let det = DetParams::new(rho, lambda).map_err(|e| CliError::Validation(e.to_string()))?;
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            sig17(rho),
            sig17(lambda),
            phase_label(det.phase()),
            sig17(det.derivative(0.0)),
            sig17(det.derivative(0.5)),
        ));
    }
    fs::write(out.join("phase.csv"), csv)?;
    println!("sweep: {} cell(s) -> {}", cells.len(), out.display());
    Ok(())
}

pub fn cmd_verify(cfg: &ResolvedConfig, out: &Path) -> Result<(), CliError> {
    let params = cfg.model_params()?;
    fs::create_dir_all(out)?;
    cfg.write_into(out)?;

    let suite = verify::SuiteConfig {
        params,
        n0: cfg.n0,
        n0_red: cfg.n0_red,
        epsilon: cfg.epsilon,
        trials: cfg.trials,
        seed: SeedSpec::new(cfg.seed, 0),
    };
    let report = verify::run_suite(&suite);
    fs::write(out.join("report.json"), report.to_json())?;

    for c in &report.checks {
        let status = match c.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "SKIP",
        };
        let kind = if c.enforced { "enforced" } else { "advisory" };
        println!("{status} [{kind}] {}: {}", c.name, c.note);
    }
    let failures = report.enforced_failures();
    if failures > 0 {
        return Err(CliError::CheckFailure(failures));
    }
    println!("verify: all enforced checks passed -> {}", out.display());
    Ok(())
}

/// Linear-interpolation quantile on a copy of the data.
fn quantile(xs: &[f64], q: f64) -> f64 {
    assert!(!xs.is_empty());
    let mut v = xs.to_vec();
    v.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 < v.len() {
        v[lo] * (1.0 - frac) + v[lo + 1] * frac
    } else {
        v[lo]
    }
}

fn write_json<T: Serialize>(path: std::path::PathBuf, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Validation(format!("serialization: {e}")))?;
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::quantile;

    #[test]
    fn quantiles_interpolate() {
        let xs = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(quantile(&xs, 0.5), 2.5);
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        assert_eq!(quantile(&xs, 0.25), 1.75);
        assert_eq!(quantile(&[5.0], 0.5), 5.0);
    }
}
