//! Browser bindings for the interactive demo page (`www/`).
//!
//! Three operations, all returning JSON strings for the page to parse:
//! stochastic trajectories, deterministic-map analysis (curve, fixed
//! points, iterated trajectory), and the phase ratio helper. The JSON
//! builders are plain Rust and unit-tested natively; compile the crate
//! for `wasm32-unknown-unknown` to produce the browser module.

use sbmgrowth::detmap::{DetParams, FixedPointAnalysis, Phase};
use sbmgrowth::dynamics::run_trajectory_capped;
use sbmgrowth::params::{ModelParams, Population, SeedSpec};
use serde::Serialize;
use wasm_bindgen::prelude::*;

// Browser-side guard rails: keep a single interaction comfortably under a
// frame budget even on slow machines.
const MAX_TRIALS: usize = 64;
const MAX_ROUNDS: u64 = 400;
const MAX_N0: usize = 20_000;
const BROWSER_POPULATION_CAP: usize = 2_000_000;

#[derive(Serialize)]
struct TrajectoriesOut {
    rho: f64,
    t: Vec<u64>,
    /// One phi-series per trial, indexed by stream id.
    phi: Vec<Vec<f64>>,
    n: Vec<usize>,
}

#[allow(clippy::too_many_arguments)] // scalar-only signature for the js boundary
fn simulate_json(
    a: f64,
    b: f64,
    alpha: f64,
    beta: f64,
    lambda: f64,
    n0: usize,
    n0_red: usize,
    t_max: u64,
    trials: usize,
    seed: u32,
) -> Result<String, String> {
    if trials == 0 || trials > MAX_TRIALS {
        return Err(format!("trials must be in 1..={MAX_TRIALS}"));
    }
    if t_max > MAX_ROUNDS {
        return Err(format!("t_max must be at most {MAX_ROUNDS}"));
    }
    if n0 > MAX_N0 {
        return Err(format!("n0 must be at most {MAX_N0}"));
    }
    if n0_red > n0 {
        return Err(format!("n0_red = {n0_red} exceeds n0 = {n0}"));
    }
    let params = ModelParams::validate(a, b, alpha, beta, lambda, n0).map_err(|e| e.to_string())?;
    let initial = Population::new(n0_red, n0 - n0_red);

    let mut phi = Vec::with_capacity(trials);
    let mut n_series = Vec::new();
    for stream in 0..trials as u64 {
        let records = run_trajectory_capped(
            initial,
            &params,
            t_max,
            SeedSpec::new(seed as u64, stream),
            BROWSER_POPULATION_CAP,
        )
        .map_err(|e| e.to_string())?;
        if stream == 0 {
            n_series = records.iter().map(|r| r.n).collect();
        }
        phi.push(records.iter().map(|r| r.phi).collect());
    }
    let out = TrajectoriesOut {
        rho: params.rho(),
        t: (0..=t_max).collect(),
        phi,
        n: n_series,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct CurveOut {
    x: Vec<f64>,
    f: Vec<f64>,
    fprime: Vec<f64>,
}

#[derive(Serialize)]
struct DetOut {
    rho: f64,
    lambda: f64,
    phase: Phase,
    identity_map: bool,
    fixed_points: FixedPointAnalysis,
    curve: CurveOut,
    trajectory: Vec<f64>,
    converged_to: Option<f64>,
}

fn det_analysis_json(
    rho: f64,
    lambda: f64,
    x0: f64,
    points: usize,
    max_iter: usize,
) -> Result<String, String> {
    if x0.is_nan() || x0 <= 0.0 || x0 >= 1.0 {
        return Err(format!("x0 must lie strictly inside (0, 1), got {x0}"));
    }
    let points = points.clamp(2, 4001);
    let max_iter = max_iter.clamp(1, 100_000);
    let det = DetParams::new(rho, lambda).map_err(|e| e.to_string())?;

    let mut x = Vec::with_capacity(points);
    let mut f = Vec::with_capacity(points);
    let mut fprime = Vec::with_capacity(points);
    for k in 0..points {
        let xv = k as f64 / (points - 1) as f64;
        x.push(xv);
        f.push(det.update(xv));
        fprime.push(det.derivative(xv));
    }
    let traj = det.iterate(x0, max_iter, 1e-10);
    let fixed_points = det.fixed_points();
    let out = DetOut {
        rho,
        lambda,
        phase: det.phase(),
        identity_map: matches!(fixed_points, FixedPointAnalysis::IdentityMap),
        fixed_points,
        curve: CurveOut { x, f, fprime },
        trajectory: traj.xs,
        converged_to: traj.converged_to,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// Stochastic growth trajectories as JSON:
/// `{rho, t: [...], phi: [[...], ...], n: [...]}`.
#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn simulate_trajectories(
    a: f64,
    b: f64,
    alpha: f64,
    beta: f64,
    lambda: f64,
    n0: u32,
    n0_red: u32,
    t_max: u32,
    trials: u32,
    seed: u32,
) -> Result<String, JsValue> {
    simulate_json(
        a,
        b,
        alpha,
        beta,
        lambda,
        n0 as usize,
        n0_red as usize,
        t_max as u64,
        trials as usize,
        seed,
    )
    .map_err(|e| JsValue::from_str(&e))
}

/// Deterministic-map analysis as JSON: the `f`/`f'` curve on a uniform
/// grid, fixed points with stability, the phase, and the iterated
/// trajectory from `x0`.
#[wasm_bindgen]
pub fn det_analysis(
    rho: f64,
    lambda: f64,
    x0: f64,
    points: u32,
    max_iter: u32,
) -> Result<String, JsValue> {
    det_analysis_json(rho, lambda, x0, points as usize, max_iter as usize)
        .map_err(|e| JsValue::from_str(&e))
}

/// The phase ratio `a*alpha / (b*beta)`.
#[wasm_bindgen]
pub fn rho_of(a: f64, b: f64, alpha: f64, beta: f64) -> f64 {
    (a * alpha) / (b * beta)
}
