//! Growth dynamics: per round, re-draw every edge, then recruit a batch of
//! same-color arrivals by weighted-degree preferential attachment.
//!
//! A round at time `t` works on the vertex set left by round `t-1`: sample
//! the round's graph, draw the arrival count `m_t` (randomized rounding of
//! `lambda * n`), sample `m_t` recruiters with replacement proportionally
//! to weighted degree, and append one new vertex per sampled occurrence,
//! copying the recruiter's color. All recruiters are drawn against the
//! pre-arrival graph; arrivals never change weights mid-round. Graphs are
//! not retained across rounds (every edge is re-drawn anyway).

use crate::alias::AliasTable;
use crate::fmt::sig17;
use crate::params::{Color, ModelParams, Population, SeedSpec, TrialRng};
use crate::sbm::{self, ColoredVertexSet, WeightedGraph};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Growth is geometric; trajectories abort beyond this many vertices
/// unless a different cap is passed explicitly.
pub const DEFAULT_POPULATION_CAP: usize = 10_000_000;

/// Relative slack under which `lambda * n` counts as an integer. The
/// product carries quarter-ulp float error, so a literal floor/ceil could
/// split a mathematically integral `lambda * n` into two values.
const INTEGER_SNAP_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum DynError {
    #[error("population {n} exceeds the cap {cap}")]
    PopulationOverflow { n: usize, cap: usize },
}

/// Per-round record of a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    pub n: usize,
    pub n_red: usize,
    pub phi: f64,
    /// Arrivals this round (0 in the `t = 0` record).
    pub m_t: usize,
    /// Red arrivals among them.
    pub m_red: usize,
    /// Total weight of red in the round's graph (0 at `t = 0`).
    pub r_weight: f64,
    /// Total weight of blue in the round's graph (0 at `t = 0`).
    pub b_weight: f64,
    /// True when the round's graph had zero total weight and recruiters
    /// fell back to uniform sampling.
    pub uniform_fallback: bool,
}

impl StepRecord {
    /// The `t = 0` record: just the starting population, everything else
    /// zeroed.
    pub fn initial(pop: Population) -> StepRecord {
        StepRecord {
            t: 0,
            n: pop.n(),
            n_red: pop.n_red,
            phi: pop.phi(),
            m_t: 0,
            m_red: 0,
            r_weight: 0.0,
            b_weight: 0.0,
            uniform_fallback: false,
        }
    }
}

/// Mathematical floor/ceil/fraction of `lambda * n`, with the float product
/// snapped to an integer when it is within [`INTEGER_SNAP_TOL`] of one.
pub(crate) fn lambda_n_parts(lambda: f64, n: usize) -> (usize, usize, f64) {
    let x = lambda * n as f64;
    let nearest = x.round();
    if (x - nearest).abs() <= INTEGER_SNAP_TOL * nearest.max(1.0) {
        let k = nearest as usize;
        return (k, k, 0.0);
    }
    (x.floor() as usize, x.ceil() as usize, x - x.floor())
}

/// Number of arrivals for a round: `floor(lambda*n)` or `ceil(lambda*n)`,
/// picked so the expectation is exactly `lambda*n`; deterministic when
/// `lambda*n` is an integer.
pub fn arrivals_count(n_prev: usize, lambda: f64, rng: &mut TrialRng) -> usize {
    assert!(n_prev >= 1);
    assert!(lambda > 0.0 && lambda < 1.0);
    let (lo, _hi, frac) = lambda_n_parts(lambda, n_prev);
    if frac == 0.0 {
        lo
    } else if rng.random::<f64>() < frac {
        lo + 1
    } else {
        lo
    }
}

/// Draw `m` vertices with replacement, each with probability proportional
/// to its weighted degree. Returns the draws plus a flag that is true when
/// the graph had zero total weight and the draws fell back to uniform.
pub fn sample_recruiters(g: &WeightedGraph, m: usize, rng: &mut TrialRng) -> (Vec<u32>, bool) {
    let degrees = g.weighted_degrees();
    match AliasTable::new(&degrees) {
        Some(table) => ((0..m).map(|_| table.sample(rng) as u32).collect(), false),
        None => (
            (0..m).map(|_| rng.random_range(0..g.n()) as u32).collect(),
            true,
        ),
    }
}

/// One live trajectory. Strictly sequential: each round depends on the
/// previous one. Independent trials run on independent [`SeedSpec`]
/// streams.
#[derive(Clone, Debug)]
pub struct DynState {
    t: u64,
    vertices: ColoredVertexSet,
    rng: TrialRng,
}

impl DynState {
    pub fn new(initial: Population, seed: SeedSpec) -> Self {
        assert!(initial.n() >= 1, "dynamics need at least one vertex");
        DynState {
            t: 0,
            vertices: ColoredVertexSet::from_population(initial),
            rng: seed.rng(),
        }
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn population(&self) -> Population {
        self.vertices.population()
    }

    pub fn vertices(&self) -> &ColoredVertexSet {
        &self.vertices
    }

    pub fn phi(&self) -> f64 {
        self.population().phi()
    }

    /// Advance one round and report it.
    pub fn step(&mut self, params: &ModelParams) -> StepRecord {
        self.step_impl(params, false).0
    }

    /// Advance one round, also returning the round's final graph (the
    /// re-drawn edges plus one recruitment edge per arrival). Only useful
    /// for exporting visual traces; the graph is otherwise discarded.
    pub fn step_with_graph(&mut self, params: &ModelParams) -> (StepRecord, WeightedGraph) {
        let (rec, g) = self.step_impl(params, true);
        (rec, g.expect("graph requested"))
    }

    fn step_impl(
        &mut self,
        params: &ModelParams,
        keep_graph: bool,
    ) -> (StepRecord, Option<WeightedGraph>) {
        let n_prev = self.vertices.len();
        let graph = sbm::sample_graph(&self.vertices, params, &mut self.rng);
        let weights = sbm::color_weights(&graph, &self.vertices);

        let m_t = arrivals_count(n_prev, params.lambda(), &mut self.rng);
        let (recruiters, uniform_fallback) = sample_recruiters(&graph, m_t, &mut self.rng);

        let mut m_red = 0usize;
        let mut recruit_edges = Vec::new();
        for (k, &v) in recruiters.iter().enumerate() {
            let color = self.vertices.color(v as usize);
            if color == Color::Red {
                m_red += 1;
            }
            if keep_graph {
                // the new vertex copies its recruiter's color, so the
                // recruitment edge is monochrome with weight alpha
                let u = (n_prev + k) as u32;
                recruit_edges.push((v, u, params.weight(color, color)));
            }
            self.vertices.push(color);
        }
        self.t += 1;

        let pop = self.vertices.population();
        let record = StepRecord {
            t: self.t,
            n: pop.n(),
            n_red: pop.n_red,
            phi: pop.phi(),
            m_t,
            m_red,
            r_weight: weights.red,
            b_weight: weights.blue,
            uniform_fallback,
        };
        let out_graph = keep_graph.then(|| {
            let grown = graph
                .edges()
                .iter()
                .map(|e| (e.i, e.j, e.w))
                .chain(recruit_edges)
                .collect::<Vec<_>>();
            WeightedGraph::from_edges(self.vertices.len(), grown)
        });
        (record, out_graph)
    }
}

/// Run a full trajectory with the default population cap; the record at
/// `t = 0` holds the initial population with arrivals and weights zeroed.
pub fn run_trajectory(
    initial: Population,
    params: &ModelParams,
    t_max: u64,
    seed: SeedSpec,
) -> Result<Vec<StepRecord>, DynError> {
    run_trajectory_capped(initial, params, t_max, seed, DEFAULT_POPULATION_CAP)
}

pub fn run_trajectory_capped(
    initial: Population,
    params: &ModelParams,
    t_max: u64,
    seed: SeedSpec,
    cap: usize,
) -> Result<Vec<StepRecord>, DynError> {
    let mut state = DynState::new(initial, seed);
    let mut records = Vec::with_capacity(t_max as usize + 1);
    records.push(StepRecord::initial(initial));
    for _ in 0..t_max {
        let rec = state.step(params);
        if rec.n > cap {
            return Err(DynError::PopulationOverflow { n: rec.n, cap });
        }
        records.push(rec);
    }
    Ok(records)
}

/// Trajectory CSV: `t,n,n_red,phi,m_t,m_red,R_t,B_t`, floats with 17
/// significant digits.
pub fn trajectory_csv(records: &[StepRecord]) -> String {
    let mut out = String::from("t,n,n_red,phi,m_t,m_red,R_t,B_t\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.t,
            r.n,
            r.n_red,
            sig17(r.phi),
            r.m_t,
            r.m_red,
            sig17(r.r_weight),
            sig17(r.b_weight),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parity_params(n0: usize) -> ModelParams {
        ModelParams::validate(0.75, 0.25, 1.0, 100.0, 0.1, n0).unwrap()
    }

    #[test]
    fn arrivals_integer_case_is_deterministic() {
        let mut rng = SeedSpec::new(1, 0).rng();
        for _ in 0..200 {
            assert_eq!(arrivals_count(70, 0.1, &mut rng), 7);
            assert_eq!(arrivals_count(2000, 0.1, &mut rng), 200);
        }
    }

    #[test]
    fn arrivals_randomized_rounding_mean() {
        // n = 75, lambda = 0.1: 7 or 8 with equal probability; the mean
        // over 1e5 draws sits within 3 standard errors of 7.5
        // (se = 0.5 / sqrt(1e5)).
        let mut rng = SeedSpec::new(2, 0).rng();
        let draws = 100_000;
        let sum: usize = (0..draws).map(|_| arrivals_count(75, 0.1, &mut rng)).sum();
        let mean = sum as f64 / draws as f64;
        assert!(
            (mean - 7.5).abs() < 3.0 * 0.5 / (draws as f64).sqrt(),
            "mean {mean}"
        );
        // support check
        let mut rng = SeedSpec::new(2, 1).rng();
        for _ in 0..1000 {
            let m = arrivals_count(75, 0.1, &mut rng);
            assert!(m == 7 || m == 8);
        }
    }

    #[test]
    fn arrivals_skewed_rounding() {
        // n = 10, lambda = 0.99: 9 w.p. 0.1 and 10 w.p. 0.9.
        let mut rng = SeedSpec::new(3, 0).rng();
        let draws = 100_000;
        let tens = (0..draws)
            .filter(|_| arrivals_count(10, 0.99, &mut rng) == 10)
            .count();
        let freq = tens as f64 / draws as f64;
        let se = (0.9 * 0.1 / draws as f64).sqrt();
        assert!((freq - 0.9).abs() < 3.0 * se, "freq {freq}");
    }

    #[test]
    fn recruiters_single_candidate() {
        let g = WeightedGraph::from_edges(1, [(0, 0, 2.0)]);
        let mut rng = SeedSpec::new(4, 0).rng();
        let (picks, fallback) = sample_recruiters(&g, 3, &mut rng);
        assert_eq!(picks, vec![0, 0, 0]);
        assert!(!fallback);
    }

    #[test]
    fn recruiters_follow_degrees() {
        // degrees 1 and 3: vertex 1 is drawn with probability 3/4
        let g = WeightedGraph::from_edges(2, [(0, 0, 1.0), (1, 1, 3.0)]);
        let mut rng = SeedSpec::new(5, 0).rng();
        let draws = 100_000;
        let (picks, fallback) = sample_recruiters(&g, draws, &mut rng);
        assert!(!fallback);
        let freq = picks.iter().filter(|&&v| v == 1).count() as f64 / draws as f64;
        let se = (0.75 * 0.25 / draws as f64).sqrt();
        assert!((freq - 0.75).abs() < 3.0 * se, "freq {freq}");
    }

    #[test]
    fn recruiters_uniform_fallback_on_empty_graph() {
        let g = WeightedGraph::from_edges(5, []);
        let mut rng = SeedSpec::new(6, 0).rng();
        let (picks, fallback) = sample_recruiters(&g, 2000, &mut rng);
        assert!(fallback);
        assert!(picks.iter().all(|&v| (v as usize) < 5));
        // crude uniformity: every vertex shows up
        for v in 0..5u32 {
            assert!(picks.contains(&v));
        }
    }

    #[test]
    fn step_copies_recruiter_color() {
        // single red vertex with a forced self-loop (a = n = 1); the first
        // seed with m_t = 1 grows the population to two reds
        let params = ModelParams::validate(1.0, 0.5, 2.0, 3.0, 0.9, 1).unwrap();
        for master in 0..20 {
            let mut state = DynState::new(Population::new(1, 0), SeedSpec::new(master, 0));
            let rec = state.step(&params);
            if rec.m_t == 1 {
                assert_eq!(rec.n, 2);
                assert_eq!(rec.n_red, 2);
                assert_eq!(rec.phi, 1.0);
                assert_eq!(rec.m_red, 1);
                return;
            }
        }
        panic!("no seed produced an arrival at lambda = 0.9");
    }

    #[test]
    fn all_blue_is_absorbing() {
        let params = parity_params(70);
        let mut state = DynState::new(Population::new(0, 70), SeedSpec::new(7, 0));
        for _ in 0..30 {
            let rec = state.step(&params);
            assert_eq!(rec.n_red, 0);
            assert_eq!(rec.phi, 0.0);
        }
        // and the all-red boundary
        let mut state = DynState::new(Population::new(70, 0), SeedSpec::new(7, 1));
        for _ in 0..30 {
            let rec = state.step(&params);
            assert_eq!(rec.n_red, rec.n);
            assert_eq!(rec.phi, 1.0);
        }
    }

    #[test]
    fn trajectory_growth_and_color_accounting() {
        let params = parity_params(70);
        let records =
            run_trajectory(Population::new(5, 65), &params, 40, SeedSpec::new(8, 0)).unwrap();
        assert_eq!(records.len(), 41);
        assert_eq!(records[0].t, 0);
        assert_eq!((records[0].n, records[0].n_red), (70, 5));
        for w in records.windows(2) {
            let (prev, cur) = (&w[0], &w[1]);
            assert_eq!(cur.t, prev.t + 1);
            // arrivals bounded by the floor/ceil bracket, population monotone
            let lo = (0.1 * prev.n as f64).floor() as usize;
            let hi = (0.1 * prev.n as f64).ceil() as usize;
            assert!(cur.m_t >= lo && cur.m_t <= hi);
            assert!(cur.n > prev.n, "m_t >= 1 once n >= 1/lambda");
            assert_eq!(cur.n, prev.n + cur.m_t);
            assert_eq!(cur.n_red, prev.n_red + cur.m_red);
            assert!(cur.m_red <= cur.m_t);
            assert_eq!(cur.phi, cur.n_red as f64 / cur.n as f64);
        }
    }

    #[test]
    fn trajectory_zero_rounds() {
        let params = parity_params(70);
        let records =
            run_trajectory(Population::new(5, 65), &params, 0, SeedSpec::new(9, 0)).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].phi, 5.0 / 70.0);
    }

    #[test]
    fn population_cap_overflows() {
        let params = parity_params(70);
        let err = run_trajectory_capped(
            Population::new(5, 65),
            &params,
            100,
            SeedSpec::new(10, 0),
            500,
        )
        .unwrap_err();
        assert!(matches!(err, DynError::PopulationOverflow { cap: 500, .. }));
    }

    #[test]
    fn trajectories_reproduce_bit_for_bit() {
        let params = parity_params(70);
        let a = run_trajectory(Population::new(5, 65), &params, 25, SeedSpec::new(11, 3)).unwrap();
        let b = run_trajectory(Population::new(5, 65), &params, 25, SeedSpec::new(11, 3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(trajectory_csv(&a), trajectory_csv(&b));
        let c = run_trajectory(Population::new(5, 65), &params, 25, SeedSpec::new(11, 4)).unwrap();
        assert_ne!(trajectory_csv(&a), trajectory_csv(&c));
    }

    #[test]
    fn csv_header_and_shape() {
        let params = parity_params(70);
        let records =
            run_trajectory(Population::new(5, 65), &params, 3, SeedSpec::new(12, 0)).unwrap();
        let csv = trajectory_csv(&records);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,n,n_red,phi,m_t,m_red,R_t,B_t"));
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 4);
        let first: Vec<&str> = rows[0].split(',').collect();
        assert_eq!(first[0], "0");
        assert_eq!(first[1], "70");
        assert_eq!(first[2], "5");
        assert_eq!(first[3], sig17(5.0 / 70.0));
        // phi column round-trips through text
        for row in rows {
            let cols: Vec<&str> = row.split(',').collect();
            let phi: f64 = cols[3].parse().unwrap();
            let n: f64 = cols[1].parse().unwrap();
            let n_red: f64 = cols[2].parse().unwrap();
            assert_eq!(phi, n_red / n);
        }
    }

    #[test]
    fn step_mean_matches_binomial_collapse_oracle() {
        // Conditioned on the graph, each recruit is red with probability
        // red_weight / total_weight, and the class totals are sums of
        // binomial edge counts. That reduced model reproduces phi_1's law
        // without building graphs, giving an independent check of the
        // sampler + recruiter pipeline.
        use rand_distr::{Binomial, Distribution};

        let params = parity_params(70);
        let trials = 20_000u64;

        let mut sum_prod = 0.0;
        let mut sumsq_prod = 0.0;
        for s in 0..trials {
            let mut state = DynState::new(Population::new(5, 65), SeedSpec::new(100, s));
            let rec = state.step(&params);
            sum_prod += rec.phi;
            sumsq_prod += rec.phi * rec.phi;
        }

        let mut rng = SeedSpec::new(101, 0).rng();
        let (n_r, n_b) = (5u64, 65u64);
        let n = (n_r + n_b) as f64;
        let mut sum_orc = 0.0;
        let mut sumsq_orc = 0.0;
        for _ in 0..trials {
            let d_rr = Binomial::new(n_r * (n_r - 1) / 2, 0.75 / n).unwrap();
            let d_rl = Binomial::new(n_r, 0.75 / n).unwrap();
            let d_bb = Binomial::new(n_b * (n_b - 1) / 2, 0.75 / n).unwrap();
            let d_bl = Binomial::new(n_b, 0.75 / n).unwrap();
            let d_rb = Binomial::new(n_r * n_b, 0.25 / n).unwrap();
            let x_rb = d_rb.sample(&mut rng) as f64;
            let r = 1.0 * (2.0 * d_rr.sample(&mut rng) as f64 + d_rl.sample(&mut rng) as f64)
                + 100.0 * x_rb;
            let b = 1.0 * (2.0 * d_bb.sample(&mut rng) as f64 + d_bl.sample(&mut rng) as f64)
                + 100.0 * x_rb;
            let m = 7u64; // lambda * n = 7 exactly
            let p_red = if r + b == 0.0 {
                n_r as f64 / n
            } else {
                r / (r + b)
            };
            let m_red = Binomial::new(m, p_red).unwrap().sample(&mut rng) as f64;
            let phi = (n_r as f64 + m_red) / (n + m as f64);
            sum_orc += phi;
            sumsq_orc += phi * phi;
        }

        let t = trials as f64;
        let (m1, m2) = (sum_prod / t, sum_orc / t);
        let v1 = (sumsq_prod / t - m1 * m1) * t / (t - 1.0);
        let v2 = (sumsq_orc / t - m2 * m2) * t / (t - 1.0);
        let se = ((v1 + v2) / t).sqrt();
        assert!(
            (m1 - m2).abs() < 3.0 * se,
            "pipeline mean {m1} vs oracle mean {m2} (3se = {})",
            3.0 * se
        );
    }

    #[test]
    fn exchange_symmetry_in_distribution() {
        // swapping the initial counts and relabeling colors turns phi into
        // 1 - phi in distribution; compare Monte Carlo means of phi_T
        let params = parity_params(40);
        let trials = 600u64;
        let t_max = 6;
        let (mut s1, mut q1, mut s2, mut q2) = (0.0, 0.0, 0.0, 0.0);
        for s in 0..trials {
            let a = run_trajectory(
                Population::new(12, 28),
                &params,
                t_max,
                SeedSpec::new(200, s),
            )
            .unwrap();
            let x = a.last().unwrap().phi;
            s1 += x;
            q1 += x * x;
            let b = run_trajectory(
                Population::new(28, 12),
                &params,
                t_max,
                SeedSpec::new(201, s),
            )
            .unwrap();
            let y = 1.0 - b.last().unwrap().phi;
            s2 += y;
            q2 += y * y;
        }
        let t = trials as f64;
        let (m1, m2) = (s1 / t, s2 / t);
        let v1 = (q1 / t - m1 * m1) * t / (t - 1.0);
        let v2 = (q2 / t - m2 * m2) * t / (t - 1.0);
        let se = ((v1 + v2) / t).sqrt();
        assert!((m1 - m2).abs() < 3.0 * se, "means {m1} vs {m2}");
    }

    #[test]
    fn step_with_graph_contains_recruit_edges() {
        let params = parity_params(70);
        let mut state = DynState::new(Population::new(5, 65), SeedSpec::new(13, 0));
        let (rec, g) = state.step_with_graph(&params);
        assert_eq!(g.n(), rec.n);
        // every new vertex has at least its recruitment edge
        for u in 70..rec.n {
            assert!(g.weighted_degree(u) > 0.0);
        }
    }

    proptest! {
        #[test]
        fn lambda_n_parts_brackets(lambda in 0.01f64..0.99, n in 1usize..100_000) {
            let (lo, hi, frac) = lambda_n_parts(lambda, n);
            prop_assert!(lo == hi || lo + 1 == hi);
            prop_assert!((0.0..1.0).contains(&frac));
            let x = lambda * n as f64;
            prop_assert!(lo as f64 <= x + 1e-6);
            prop_assert!(hi as f64 >= x - 1e-6);
        }
    }
}
