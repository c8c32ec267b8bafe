//! Deterministic approximation of the growth dynamics: the recruitment
//! probability `Gamma`, the one-round update map `f`, its derivative,
//! fixed points with stability, and iteration to convergence.
//!
//! Everything here depends on the rates only through
//! `rho = a*alpha / (b*beta)` and on the arrival fraction `lambda`. The
//! stochastic system restricts `lambda` to (0, 1); the map itself is
//! well defined for any `lambda > 0`, and larger values are useful for
//! visualizing the curvature of `f`.

use crate::fmt::sig17;
use crate::params::{ModelParams, RHO_ONE_TOL};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `|f'(x)|` must differ from 1 by more than this to call a fixed point
/// stable or unstable.
pub const STABILITY_TOL: f64 = 1e-12;

/// `converged_to` snaps to a fixed point within this multiple of the
/// iteration tolerance.
const SNAP_FACTOR: f64 = 100.0;

#[derive(Debug, Error, PartialEq)]
pub enum DetError {
    #[error("rho must be strictly positive and finite, got {0}")]
    InvalidRho(f64),
    #[error("lambda must be strictly positive and finite, got {0}")]
    InvalidLambda(f64),
}

/// Probability that an arriving node is red, as a function of the red
/// fraction `x`, for explicit rates.
pub fn gamma(x: f64, a: f64, alpha: f64, b: f64, beta: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&x));
    let aa = a * alpha;
    let bb = b * beta;
    let num = aa * x * x + bb * x * (1.0 - x);
    let den = aa * x * x + 2.0 * bb * x * (1.0 - x) + aa * (1.0 - x) * (1.0 - x);
    assert!(
        den > 0.0,
        "recruitment-ratio denominator not positive at x = {x}"
    );
    num / den
}

/// Parameters of the deterministic map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetParams {
    rho: f64,
    lambda: f64,
}

/// Stability of a fixed point `x`: stable when `|f'(x)| < 1`, unstable
/// when `|f'(x)| > 1`, neutral inside the classification tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    Neutral,
}

impl Stability {
    pub fn from_derivative(d: f64) -> Stability {
        let m = d.abs();
        if m < 1.0 - STABILITY_TOL {
            Stability::Stable
        } else if m > 1.0 + STABILITY_TOL {
            Stability::Unstable
        } else {
            Stability::Neutral
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub x: f64,
    pub derivative: f64,
    pub stability: Stability,
}

/// Fixed-point structure of the map: three isolated points away from
/// `rho = 1`, the identity map at `rho = 1` (every point fixed).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "points", rename_all = "snake_case")]
pub enum FixedPointAnalysis {
    IdentityMap,
    Points(Vec<FixedPoint>),
}

/// Long-run behavior, decided by `rho` alone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    MinorityVanishes,
    ParityReached,
    Frozen,
}

/// An iterated trajectory of the map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetTrajectory {
    /// Visited points, starting at `x0`.
    pub xs: Vec<f64>,
    /// Nearest fixed point if the trajectory settled next to one.
    pub converged_to: Option<f64>,
    /// Number of map applications performed.
    pub iterations: usize,
}

impl DetParams {
    pub fn new(rho: f64, lambda: f64) -> Result<Self, DetError> {
        if rho <= 0.0 || !rho.is_finite() {
            return Err(DetError::InvalidRho(rho));
        }
        if lambda <= 0.0 || !lambda.is_finite() {
            return Err(DetError::InvalidLambda(lambda));
        }
        Ok(DetParams { rho, lambda })
    }

    /// Read `rho` and `lambda` off a validated stochastic parameter set,
    /// reusing its stored `rho` rather than recomputing it.
    pub fn from_model(params: &ModelParams) -> Self {
        DetParams {
            rho: params.rho(),
            lambda: params.lambda(),
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `Gamma` expressed through `rho` alone.
    pub fn gamma(&self, x: f64) -> f64 {
        gamma(x, self.rho, 1.0, 1.0, 1.0)
    }

    fn denominator(&self, x: f64) -> f64 {
        let rm = self.rho - 1.0;
        let den = 2.0 * x * x * rm - 2.0 * x * rm + self.rho;
        assert!(
            den > 0.0,
            "update-map denominator not positive at x = {x}, rho = {}",
            self.rho
        );
        den
    }

    /// One application of the update map, `(x + lambda Gamma(x)) / (1 + lambda)`.
    ///
    /// This arrangement is algebraically identical to the single rational
    /// closed form but keeps the three fixed points exact in floating
    /// point; the rational form cancels catastrophically for extreme
    /// `rho`/`lambda` combinations.
    pub fn update(&self, x: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&x));
        (x + self.lambda * self.gamma(x)) / (1.0 + self.lambda)
    }

    /// Closed-form derivative of the update map.
    pub fn derivative(&self, x: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&x));
        let (rho, lam) = (self.rho, self.lambda);
        let rm = rho - 1.0;
        let x2 = x * x;
        let num = 4.0 * x2 * x2 * rm * rm - 8.0 * x2 * x * rm * rm + rho * (lam + rho)
            - 2.0 * x2 * rm * (2.0 + rho * (lam - 4.0))
            + 2.0 * x * rho * rm * (lam - 2.0);
        let den = self.denominator(x);
        num / ((1.0 + lam) * den * den)
    }

    /// Fixed points with stability, or the identity-map sentinel when
    /// `rho` sits within [`RHO_ONE_TOL`] of 1.
    pub fn fixed_points(&self) -> FixedPointAnalysis {
        if (self.rho - 1.0).abs() <= RHO_ONE_TOL {
            return FixedPointAnalysis::IdentityMap;
        }
        let points = [0.0, 0.5, 1.0]
            .into_iter()
            .map(|x| {
                let d = self.derivative(x);
                FixedPoint {
                    x,
                    derivative: d,
                    stability: Stability::from_derivative(d),
                }
            })
            .collect();
        FixedPointAnalysis::Points(points)
    }

    /// Phase by the sign of `rho - 1`.
    pub fn phase(&self) -> Phase {
        if (self.rho - 1.0).abs() <= RHO_ONE_TOL {
            Phase::Frozen
        } else if self.rho > 1.0 {
            Phase::MinorityVanishes
        } else {
            Phase::ParityReached
        }
    }

    /// Iterate from `x0` until successive points differ by less than
    /// `tol_conv` or `max_iter` applications have been made.
    pub fn iterate(&self, x0: f64, max_iter: usize, tol_conv: f64) -> DetTrajectory {
        assert!(x0 > 0.0 && x0 < 1.0, "x0 must lie strictly inside (0, 1)");
        assert!(max_iter >= 1);
        assert!(tol_conv > 0.0);
        let mut xs = Vec::with_capacity(max_iter.min(4096) + 1);
        xs.push(x0);
        let mut x = x0;
        let mut iterations = 0;
        while iterations < max_iter {
            let next = self.update(x);
            iterations += 1;
            xs.push(next);
            let done = (next - x).abs() < tol_conv;
            x = next;
            if done {
                break;
            }
        }
        let converged_to = [0.0, 0.5, 1.0]
            .into_iter()
            .min_by(|p, q| (x - p).abs().partial_cmp(&(x - q).abs()).unwrap())
            .filter(|p| (x - p).abs() <= SNAP_FACTOR * tol_conv);
        DetTrajectory {
            xs,
            converged_to,
            iterations,
        }
    }

    /// `x,f,fprime` curve on a uniform grid over [0, 1].
    pub fn curve_csv(&self, points: usize) -> String {
        assert!(points >= 2);
        let mut out = String::from("x,f,fprime\n");
        for k in 0..points {
            let x = k as f64 / (points - 1) as f64;
            out.push_str(&format!(
                "{},{},{}\n",
                sig17(x),
                sig17(self.update(x)),
                sig17(self.derivative(x))
            ));
        }
        out
    }
}

/// Deterministic trajectory CSV: `t,x`.
pub fn det_trajectory_csv(traj: &DetTrajectory) -> String {
    let mut out = String::from("t,x\n");
    for (t, x) in traj.xs.iter().enumerate() {
        out.push_str(&format!("{},{}\n", t, sig17(*x)));
    }
    out
}
