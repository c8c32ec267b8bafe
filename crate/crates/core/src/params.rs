//! Shared domain types: colors, model parameters, populations, and RNG seeding.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance below which `rho` counts as exactly 1 when classifying phases
/// and fixed points. Lives here so every module agrees on the boundary.
pub const RHO_ONE_TOL: f64 = 1e-12;

/// The per-trial random number generator. Every trial owns one, derived
/// from a [`SeedSpec`], and no generator state is ever shared.
pub type TrialRng = ChaCha8Rng;

/// Node community. `Red` is matrix index 1, `Blue` is matrix index 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    Red,
    Blue,
}

impl Color {
    /// 1-based matrix index (Red = 1, Blue = 2).
    pub fn matrix_index(self) -> usize {
        match self {
            Color::Red => 1,
            Color::Blue => 2,
        }
    }

    pub fn flip(self) -> Color {
        match self {
            Color::Red => Color::Blue,
            Color::Blue => Color::Red,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("rates a, b and weights alpha, beta must be strictly positive and finite")]
    NonPositiveRate,
    #[error("lambda must lie strictly inside (0, 1), got {0}")]
    LambdaOutOfRange(f64),
    #[error("edge probability {rate}/{n0} exceeds 1; increase the initial population")]
    ProbabilityOverflow { rate: f64, n0: usize },
    #[error("initial population is empty")]
    EmptyPopulation,
    #[error("rho = a*alpha/(b*beta) is not finite")]
    RhoNotFinite,
}

/// Validated model parameters.
///
/// `a` (same-color) and `b` (cross-color) are the edge-rate entries of the
/// probability matrix; a pair is connected with probability `rate / n`.
/// `alpha` and `beta` are the corresponding edge weights. `lambda` is the
/// arrival fraction per round. `rho = a*alpha / (b*beta)` is computed once
/// at validation and read everywhere else, so a single rounding governs
/// classification near `rho = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    a: f64,
    b: f64,
    alpha: f64,
    beta: f64,
    lambda: f64,
    rho: f64,
}

impl ModelParams {
    /// Validate raw parameters against an initial population of size `n0`.
    ///
    /// Growth only increases `n`, so `a/n0 <= 1` and `b/n0 <= 1` guarantee
    /// valid edge probabilities for the whole run.
    pub fn validate(
        a: f64,
        b: f64,
        alpha: f64,
        beta: f64,
        lambda: f64,
        n0: usize,
    ) -> Result<Self, ParamError> {
        for v in [a, b, alpha, beta] {
            if v <= 0.0 || !v.is_finite() {
                return Err(ParamError::NonPositiveRate);
            }
        }
        if lambda.is_nan() || lambda <= 0.0 || lambda >= 1.0 {
            return Err(ParamError::LambdaOutOfRange(lambda));
        }
        if n0 == 0 {
            return Err(ParamError::EmptyPopulation);
        }
        let n0_f = n0 as f64;
        if a / n0_f > 1.0 {
            return Err(ParamError::ProbabilityOverflow { rate: a, n0 });
        }
        if b / n0_f > 1.0 {
            return Err(ParamError::ProbabilityOverflow { rate: b, n0 });
        }
        let rho = (a * alpha) / (b * beta);
        if !rho.is_finite() || rho <= 0.0 {
            return Err(ParamError::RhoNotFinite);
        }
        Ok(ModelParams {
            a,
            b,
            alpha,
            beta,
            lambda,
            rho,
        })
    }

    /// Re-run validation on an already validated set. Idempotent: returns
    /// an equal value.
    pub fn revalidate(&self, n0: usize) -> Result<Self, ParamError> {
        Self::validate(self.a, self.b, self.alpha, self.beta, self.lambda, n0)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// The phase ratio `a*alpha / (b*beta)`, fixed at validation.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Probability-matrix entry for a pair of colors (unscaled rate; divide
    /// by the current `n` to get the edge probability).
    pub fn edge_rate(&self, ci: Color, cj: Color) -> f64 {
        if ci == cj {
            self.a
        } else {
            self.b
        }
    }

    /// Weight-matrix entry for a pair of colors.
    pub fn weight(&self, ci: Color, cj: Color) -> f64 {
        if ci == cj {
            self.alpha
        } else {
            self.beta
        }
    }
}

/// Node counts per color at one point in time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Population {
    pub n_red: usize,
    pub n_blue: usize,
}

impl Population {
    pub fn new(n_red: usize, n_blue: usize) -> Self {
        Population { n_red, n_blue }
    }

    pub fn n(&self) -> usize {
        self.n_red + self.n_blue
    }

    /// Fraction of red nodes. Requires a non-empty population.
    pub fn phi(&self) -> f64 {
        assert!(self.n() > 0, "phi of an empty population");
        self.n_red as f64 / self.n() as f64
    }

    /// Swap the two color counts.
    pub fn swapped(&self) -> Population {
        Population {
            n_red: self.n_blue,
            n_blue: self.n_red,
        }
    }
}

/// Seed for one reproducible trial stream.
///
/// Identical `(master_seed, stream_id)` reproduces a trajectory bit-for-bit
/// on one build; distinct stream ids give independent streams. Derivation:
/// the pair is mixed by SplitMix64 into a 32-byte ChaCha8 key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        SeedSpec {
            master_seed,
            stream_id,
        }
    }

    /// Same master seed, different stream.
    pub fn with_stream(self, stream_id: u64) -> Self {
        SeedSpec { stream_id, ..self }
    }

    /// Build the trial generator for this stream.
    pub fn rng(&self) -> TrialRng {
        const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
        let mut state = self
            .master_seed
            .wrapping_add(self.stream_id.wrapping_mul(GOLDEN).rotate_left(17));
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            state = state.wrapping_add(GOLDEN);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            chunk.copy_from_slice(&z.to_le_bytes());
        }
        TrialRng::from_seed(key)
    }
}
