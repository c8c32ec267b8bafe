//! One round's weighted random graph: sampling, weighted degrees, and
//! per-color weight totals.
//!
//! Every unordered pair `{i, j}` with `i != j` is connected independently
//! with probability `p(c_i, c_j) / n` and then carries weight
//! `zeta(c_i, c_j)`; every vertex independently carries a self-loop with
//! probability `a / n` and weight `alpha`. A self-loop contributes its
//! weight once to its vertex's weighted degree, which makes the expected
//! color weight come out as `a*alpha*n_R^2/n + b*beta*n_R*n_B/n` with no
//! finite-size correction.

use crate::fmt::sig17;
use crate::params::{Color, ModelParams, Population, TrialRng};
use rand::Rng;

/// Above this vertex count, per-class geometric skip sampling replaces the
/// per-pair Bernoulli loop, for O(#edges) expected time.
pub const SKIP_SAMPLING_THRESHOLD: usize = 512;

/// Vertex colors in arrival order (index 0 is the oldest vertex).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoredVertexSet {
    colors: Vec<Color>,
    n_red: usize,
}

impl ColoredVertexSet {
    /// Lay out an initial population: red vertices first, then blue.
    pub fn from_population(pop: Population) -> Self {
        let mut colors = Vec::with_capacity(pop.n());
        colors.extend(std::iter::repeat_n(Color::Red, pop.n_red));
        colors.extend(std::iter::repeat_n(Color::Blue, pop.n_blue));
        ColoredVertexSet {
            colors,
            n_red: pop.n_red,
        }
    }

    pub fn from_colors(colors: Vec<Color>) -> Self {
        let n_red = colors.iter().filter(|c| **c == Color::Red).count();
        ColoredVertexSet { colors, n_red }
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn color(&self, u: usize) -> Color {
        self.colors[u]
    }

    pub fn colors(&self) -> &[Color] {
        &self.colors
    }

    pub fn n_red(&self) -> usize {
        self.n_red
    }

    pub fn population(&self) -> Population {
        Population::new(self.n_red, self.colors.len() - self.n_red)
    }

    /// Append an arriving vertex.
    pub fn push(&mut self, c: Color) {
        if c == Color::Red {
            self.n_red += 1;
        }
        self.colors.push(c);
    }

    /// The same vertex set with every color flipped.
    pub fn flipped(&self) -> ColoredVertexSet {
        ColoredVertexSet {
            colors: self.colors.iter().map(|c| c.flip()).collect(),
            n_red: self.colors.len() - self.n_red,
        }
    }
}

/// One realized edge; `i <= j`, and `i == j` is a self-loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub i: u32,
    pub j: u32,
    pub w: f64,
}

/// A realized graph for one round. Immutable after construction; absent
/// pairs are simply not stored.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    /// Build from an explicit edge list (mainly for tests and tools).
    /// Edges are canonicalized to `i <= j` and sorted.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (u32, u32, f64)>) -> Self {
        let mut edges: Vec<Edge> = edges
            .into_iter()
            .map(|(i, j, w)| Edge {
                i: i.min(j),
                j: i.max(j),
                w,
            })
            .collect();
        assert!(
            edges.iter().all(|e| (e.j as usize) < n),
            "vertex out of range"
        );
        edges.sort_unstable_by_key(|e| (e.i, e.j));
        assert!(
            edges
                .windows(2)
                .all(|w| (w[0].i, w[0].j) != (w[1].i, w[1].j)),
            "duplicate edge"
        );
        WeightedGraph { n, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sum of incident edge weights of `u`; a self-loop counts once.
    pub fn weighted_degree(&self, u: usize) -> f64 {
        assert!(u < self.n, "vertex {u} out of range (n = {})", self.n);
        let u = u as u32;
        let mut d = 0.0;
        for e in &self.edges {
            if e.i == u || e.j == u {
                d += e.w;
            }
        }
        d
    }

    /// All weighted degrees in one pass over the edge list.
    pub fn weighted_degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0f64; self.n];
        for e in &self.edges {
            d[e.i as usize] += e.w;
            if e.i != e.j {
                d[e.j as usize] += e.w;
            }
        }
        d
    }

    /// Edge-list text dump: header `n n_red`, then one `i j w` line per
    /// edge with 1-based indices and 17-significant-digit weights.
    pub fn dump_edge_list(&self, vertices: &ColoredVertexSet) -> String {
        assert_eq!(vertices.len(), self.n);
        let mut out = String::new();
        out.push_str(&format!("{} {}\n", self.n, vertices.n_red()));
        for e in &self.edges {
            out.push_str(&format!("{} {} {}\n", e.i + 1, e.j + 1, sig17(e.w)));
        }
        out
    }
}

/// Weight totals per color for one graph. `red`/`blue` are the sums of
/// weighted degrees over the vertices of each color; `rr`, `rb`, `bb` split
/// the totals by edge class (`red = rr + rb`, `blue = bb + rb`; monochrome
/// non-loop edges count toward both endpoints, so twice).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ColorWeights {
    pub red: f64,
    pub blue: f64,
    pub rr: f64,
    pub rb: f64,
    pub bb: f64,
}

pub fn color_weights(g: &WeightedGraph, vertices: &ColoredVertexSet) -> ColorWeights {
    assert_eq!(vertices.len(), g.n());
    let (mut rr, mut rb, mut bb) = (0.0f64, 0.0f64, 0.0f64);
    for e in g.edges() {
        let same = vertices.color(e.i as usize) == vertices.color(e.j as usize);
        if !same {
            rb += e.w;
        } else {
            let mult = if e.i == e.j { 1.0 } else { 2.0 };
            if vertices.color(e.i as usize) == Color::Red {
                rr += mult * e.w;
            } else {
                bb += mult * e.w;
            }
        }
    }
    ColorWeights {
        red: rr + rb,
        blue: bb + rb,
        rr,
        rb,
        bb,
    }
}

/// Sample one round's graph with the default skip-sampling threshold.
pub fn sample_graph(
    vertices: &ColoredVertexSet,
    params: &ModelParams,
    rng: &mut TrialRng,
) -> WeightedGraph {
    sample_graph_with_threshold(vertices, params, rng, SKIP_SAMPLING_THRESHOLD)
}

/// As [`sample_graph`], with an explicit threshold for switching from the
/// per-pair Bernoulli loop to geometric skip sampling. Both schemes draw
/// from the same distribution; the threshold only selects the algorithm.
pub fn sample_graph_with_threshold(
    vertices: &ColoredVertexSet,
    params: &ModelParams,
    rng: &mut TrialRng,
    direct_threshold: usize,
) -> WeightedGraph {
    let n = vertices.len();
    assert!(n >= 1, "cannot sample a graph on an empty vertex set");
    let n_f = n as f64;
    let p_same = params.a() / n_f;
    let p_cross = params.b() / n_f;
    assert!(
        p_same <= 1.0 && p_cross <= 1.0,
        "edge probability above 1; parameters were not validated for n = {n}"
    );

    let mut edges: Vec<Edge> = Vec::new();
    if n <= direct_threshold {
        for i in 0..n as u32 {
            for j in i..n as u32 {
                let same = vertices.color(i as usize) == vertices.color(j as usize);
                let p = if same { p_same } else { p_cross };
                if rng.random::<f64>() < p {
                    let w = if same { params.alpha() } else { params.beta() };
                    edges.push(Edge { i, j, w });
                }
            }
        }
    } else {
        let mut reds: Vec<u32> = Vec::with_capacity(vertices.n_red());
        let mut blues: Vec<u32> = Vec::with_capacity(n - vertices.n_red());
        for (u, c) in vertices.colors().iter().enumerate() {
            match c {
                Color::Red => reds.push(u as u32),
                Color::Blue => blues.push(u as u32),
            }
        }
        sample_within_class(&reds, p_same, params.alpha(), rng, &mut edges);
        sample_within_class(&blues, p_same, params.alpha(), rng, &mut edges);
        sample_cross_class(&reds, &blues, p_cross, params.beta(), rng, &mut edges);
        // self-loops: weight alpha for either color
        skip_sample(n as u64, p_same, rng, |k| {
            edges.push(Edge {
                i: k as u32,
                j: k as u32,
                w: params.alpha(),
            });
        });
    }

    edges.sort_unstable_by_key(|e| (e.i, e.j));
    WeightedGraph { n, edges }
}

/// Visit each index in `0..total` independently with probability `p`,
/// jumping between hits with geometric skips.
fn skip_sample(total: u64, p: f64, rng: &mut TrialRng, mut emit: impl FnMut(u64)) {
    if total == 0 || p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        for k in 0..total {
            emit(k);
        }
        return;
    }
    let ln_q = (1.0 - p).ln(); // strictly negative here
    let mut cur: u64 = 0;
    loop {
        let u = 1.0 - rng.random::<f64>(); // in (0, 1]
        let skip = (u.ln() / ln_q).floor();
        if skip >= (total - cur) as f64 {
            return;
        }
        cur += skip as u64;
        emit(cur);
        cur += 1;
        if cur >= total {
            return;
        }
    }
}

/// Decode a linear pair index into `(lo, hi)` with `lo < hi`, where pairs
/// are laid out as `idx = hi*(hi-1)/2 + lo`.
fn pair_from_index(idx: u64) -> (u64, u64) {
    let mut hi = ((1.0 + (1.0 + 8.0 * idx as f64).sqrt()) / 2.0).floor() as u64;
    // the float estimate can be off by one at large idx
    while hi * (hi - 1) / 2 > idx {
        hi -= 1;
    }
    while (hi + 1) * hi / 2 <= idx {
        hi += 1;
    }
    (idx - hi * (hi - 1) / 2, hi)
}

fn sample_within_class(members: &[u32], p: f64, w: f64, rng: &mut TrialRng, edges: &mut Vec<Edge>) {
    let m = members.len() as u64;
    if m < 2 {
        return;
    }
    skip_sample(m * (m - 1) / 2, p, rng, |idx| {
        let (lo, hi) = pair_from_index(idx);
        // members is ascending, so the pair is already canonical
        edges.push(Edge {
            i: members[lo as usize],
            j: members[hi as usize],
            w,
        });
    });
}

fn sample_cross_class(
    reds: &[u32],
    blues: &[u32],
    p: f64,
    w: f64,
    rng: &mut TrialRng,
    edges: &mut Vec<Edge>,
) {
    let (nr, nb) = (reds.len() as u64, blues.len() as u64);
    if nr == 0 || nb == 0 {
        return;
    }
    skip_sample(nr * nb, p, rng, |idx| {
        let r = reds[(idx / nb) as usize];
        let b = blues[(idx % nb) as usize];
        edges.push(Edge {
            i: r.min(b),
            j: r.max(b),
            w,
        });
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SeedSpec;
    use proptest::prelude::*;

    fn parity_params(n0: usize) -> ModelParams {
        ModelParams::validate(0.75, 0.25, 1.0, 100.0, 0.1, n0).unwrap()
    }

    #[test]
    fn forced_self_loop_on_single_vertex() {
        // a = n = 1 makes the loop probability exactly 1.
        let params = ModelParams::validate(1.0, 0.5, 2.0, 3.0, 0.1, 1).unwrap();
        let vs = ColoredVertexSet::from_population(Population::new(1, 0));
        for s in 0..100 {
            let g = sample_graph(&vs, &params, &mut SeedSpec::new(5, s).rng());
            assert_eq!(g.edges(), &[Edge { i: 0, j: 0, w: 2.0 }]);
        }
    }

    #[test]
    fn near_zero_rates_give_empty_graphs() {
        let params = ModelParams::validate(1e-13, 1e-13, 1.0, 1.0, 0.1, 70).unwrap();
        let vs = ColoredVertexSet::from_population(Population::new(30, 40));
        for s in 0..100 {
            let g = sample_graph(&vs, &params, &mut SeedSpec::new(6, s).rng());
            assert_eq!(g.edge_count(), 0);
        }
    }

    #[test]
    fn weighted_degree_direct_sums() {
        // loop of weight 2 plus one cross edge of weight 3 -> degree 5
        let g = WeightedGraph::from_edges(3, [(0, 0, 2.0), (0, 1, 3.0)]);
        assert_eq!(g.weighted_degree(0), 5.0);
        assert_eq!(g.weighted_degree(1), 3.0);
        assert_eq!(g.weighted_degree(2), 0.0);
        assert_eq!(g.weighted_degrees(), vec![5.0, 3.0, 0.0]);
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn weighted_degree_rejects_bad_vertex() {
        let g = WeightedGraph::from_edges(2, [(0, 1, 1.0)]);
        g.weighted_degree(2);
    }

    #[test]
    fn degree_sum_identity_on_fixed_graph() {
        // Five vertices; integer weights so every float sum is exact.
        // Non-loop edges: (0,1,2), (1,3,3), (2,4,2), (0,4,3) total 10.
        // Loops: (2,2,2), (4,4,2) total 4.
        let g = WeightedGraph::from_edges(
            5,
            [
                (0, 1, 2.0),
                (1, 3, 3.0),
                (2, 4, 2.0),
                (0, 4, 3.0),
                (2, 2, 2.0),
                (4, 4, 2.0),
            ],
        );
        let total: f64 = (0..5).map(|u| g.weighted_degree(u)).sum();
        assert_eq!(total, 2.0 * 10.0 + 4.0);
    }

    #[test]
    fn color_weights_small_cases() {
        let vs = ColoredVertexSet::from_colors(vec![Color::Red, Color::Blue]);
        let empty = WeightedGraph::from_edges(2, []);
        let cw = color_weights(&empty, &vs);
        assert_eq!((cw.red, cw.blue), (0.0, 0.0));

        // one cross edge of weight beta: both endpoints count it
        let g = WeightedGraph::from_edges(2, [(0, 1, 100.0)]);
        let cw = color_weights(&g, &vs);
        assert_eq!((cw.red, cw.blue), (100.0, 100.0));
        assert_eq!((cw.rr, cw.rb, cw.bb), (0.0, 100.0, 0.0));
    }

    #[test]
    fn color_weight_totals_equal_degree_sum() {
        // integer weights, so the equality is exact
        let params = ModelParams::validate(0.9, 0.6, 2.0, 3.0, 0.1, 50).unwrap();
        let vs = ColoredVertexSet::from_population(Population::new(20, 30));
        for s in 0..50 {
            let g = sample_graph(&vs, &params, &mut SeedSpec::new(7, s).rng());
            let cw = color_weights(&g, &vs);
            let dsum: f64 = g.weighted_degrees().iter().sum();
            assert_eq!(cw.red + cw.blue, dsum);
            assert_eq!(cw.red, cw.rr + cw.rb);
            assert_eq!(cw.blue, cw.bb + cw.rb);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let params = parity_params(70);
        let vs = ColoredVertexSet::from_population(Population::new(5, 65));
        let g1 = sample_graph(&vs, &params, &mut SeedSpec::new(11, 3).rng());
        let g2 = sample_graph(&vs, &params, &mut SeedSpec::new(11, 3).rng());
        assert_eq!(g1, g2);
        let g3 = sample_graph(&vs, &params, &mut SeedSpec::new(11, 4).rng());
        assert_ne!(g1, g3);
    }

    #[test]
    fn pair_index_roundtrip() {
        let mut idx = 0u64;
        for hi in 1..60u64 {
            for lo in 0..hi {
                assert_eq!(pair_from_index(idx), (lo, hi));
                idx += 1;
            }
        }
        // spot-check far out
        let (lo, hi) = pair_from_index(4_999_999_950_000_000);
        assert_eq!(hi * (hi - 1) / 2 + lo, 4_999_999_950_000_000);
        assert!(lo < hi);
    }

    #[test]
    fn mean_color_weight_matches_closed_form() {
        // E[red] = nR^2 * a*alpha / n + nR*nB * b*beta / n with the
        // loop-counted-once convention; n = 1000 exercises skip sampling.
        let params = parity_params(1000);
        let pop = Population::new(300, 700);
        let vs = ColoredVertexSet::from_population(pop);
        let trials = 2000;
        let (mut sum_r, mut sum_b, mut sumsq_r) = (0.0, 0.0, 0.0);
        for s in 0..trials {
            let g = sample_graph(&vs, &params, &mut SeedSpec::new(20, s).rng());
            let cw = color_weights(&g, &vs);
            sum_r += cw.red;
            sum_b += cw.blue;
            sumsq_r += cw.red * cw.red;
        }
        let t = trials as f64;
        let (mean_r, mean_b) = (sum_r / t, sum_b / t);
        let er = 300.0f64.powi(2) * 0.75 / 1000.0 + 300.0 * 700.0 * 25.0 / 1000.0;
        let eb = 700.0f64.powi(2) * 0.75 / 1000.0 + 300.0 * 700.0 * 25.0 / 1000.0;
        assert_eq!(er, 5317.5);
        assert_eq!(eb, 5617.5);
        let sd_r = ((sumsq_r / t - mean_r * mean_r) * t / (t - 1.0)).sqrt();
        let se_r = sd_r / t.sqrt();
        assert!(
            (mean_r - er).abs() < 3.0 * se_r,
            "mean {mean_r} vs {er} (3se = {})",
            3.0 * se_r
        );
        assert!((mean_r - er).abs() / er < 0.01);
        assert!((mean_b - eb).abs() / eb < 0.01);
    }

    #[test]
    fn direct_and_skip_paths_agree_in_distribution() {
        // Same instance sampled through both code paths; edge-count means
        // must agree within 3 combined standard errors.
        let params = ModelParams::validate(1.0, 1.0, 1.0, 1.0, 0.1, 600).unwrap();
        let vs = ColoredVertexSet::from_population(Population::new(200, 400));
        let trials = 400;
        let run = |threshold: usize, master: u64| {
            let mut counts = Vec::with_capacity(trials);
            for s in 0..trials as u64 {
                let g = sample_graph_with_threshold(
                    &vs,
                    &params,
                    &mut SeedSpec::new(master, s).rng(),
                    threshold,
                );
                counts.push(g.edge_count() as f64);
            }
            counts
        };
        let direct = run(usize::MAX, 31);
        let skip = run(0, 32);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let var = |v: &[f64]| {
            let m = mean(v);
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
        };
        let (md, ms) = (mean(&direct), mean(&skip));
        let se = ((var(&direct) + var(&skip)) / trials as f64).sqrt();
        assert!(
            (md - ms).abs() < 3.0 * se,
            "means {md} vs {ms}, 3se {}",
            3.0 * se
        );
        // expected count: (n+1)/2 when a = b = 1
        let expected = (600.0 + 1.0) / 2.0;
        let se_single = (var(&direct) / trials as f64).sqrt();
        assert!((md - expected).abs() < 4.0 * se_single);
    }

    #[test]
    fn edge_count_concentration() {
        // a = b = 1: every pair (loops included) present w.p. 1/n, so the
        // expected total count is n(n+1)/2 / n = (n+1)/2.
        let n = 2000;
        let params = ModelParams::validate(1.0, 1.0, 1.0, 1.0, 0.1, n).unwrap();
        let vs = ColoredVertexSet::from_population(Population::new(600, 1400));
        let trials = 1000;
        let mut counts = Vec::with_capacity(trials);
        for s in 0..trials as u64 {
            let g = sample_graph(&vs, &params, &mut SeedSpec::new(77, s).rng());
            counts.push(g.edge_count() as f64);
        }
        let mean = counts.iter().sum::<f64>() / trials as f64;
        let var = counts.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials as f64 - 1.0);
        let se = (var / trials as f64).sqrt();
        let expected = (n as f64 + 1.0) / 2.0;
        assert!(
            (mean - expected).abs() < 3.0 * se,
            "mean {mean} vs {expected} (3se = {})",
            3.0 * se
        );
    }

    #[test]
    fn color_swap_symmetry() {
        // Swapping both the colors and the counts exchanges red and blue in
        // distribution; compare Monte Carlo means on matched instances.
        let params = parity_params(100);
        let vs = ColoredVertexSet::from_population(Population::new(30, 70));
        let flipped = ColoredVertexSet::from_population(Population::new(70, 30)).flipped();
        // `flipped` holds 30 red placed after 70 blue; same counts as vs.
        assert_eq!(flipped.n_red(), 30);
        let trials = 1500u64;
        let (mut s1, mut s2, mut q1, mut q2) = (0.0, 0.0, 0.0, 0.0);
        for s in 0..trials {
            let g1 = sample_graph(&vs, &params, &mut SeedSpec::new(40, s).rng());
            let r1 = color_weights(&g1, &vs).red;
            let g2 = sample_graph(&flipped, &params, &mut SeedSpec::new(41, s).rng());
            let r2 = color_weights(&g2, &flipped).red;
            s1 += r1;
            s2 += r2;
            q1 += r1 * r1;
            q2 += r2 * r2;
        }
        let t = trials as f64;
        let (m1, m2) = (s1 / t, s2 / t);
        let v1 = (q1 / t - m1 * m1) * t / (t - 1.0);
        let v2 = (q2 / t - m2 * m2) * t / (t - 1.0);
        let se = ((v1 + v2) / t).sqrt();
        assert!((m1 - m2).abs() < 3.0 * se, "means {m1} vs {m2}");
    }

    #[test]
    fn dump_format_is_stable() {
        let vs = ColoredVertexSet::from_colors(vec![Color::Red, Color::Red, Color::Blue]);
        let g = WeightedGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 100.0), (0, 0, 1.0)]);
        let dump = g.dump_edge_list(&vs);
        let mut lines = dump.lines();
        assert_eq!(lines.next(), Some("3 2"));
        assert_eq!(lines.next(), Some("1 1 1.0000000000000000e0"));
        assert_eq!(lines.next(), Some("1 2 1.0000000000000000e0"));
        assert_eq!(lines.next(), Some("2 3 1.0000000000000000e2"));
        assert_eq!(lines.next(), None);
    }

    proptest! {
        #[test]
        fn sampled_graphs_are_well_formed(
            n_red in 0usize..40,
            n_blue in 0usize..40,
            seed in 0u64..1000,
        ) {
            prop_assume!(n_red + n_blue >= 1);
            let n = n_red + n_blue;
            let params = ModelParams::validate(0.9, 0.4, 2.0, 3.0, 0.1, n).unwrap();
            let vs = ColoredVertexSet::from_population(Population::new(n_red, n_blue));
            let g = sample_graph(&vs, &params, &mut SeedSpec::new(900, seed).rng());
            // weights are assigned, never computed: exact alpha or beta
            for e in g.edges() {
                prop_assert!(e.i <= e.j);
                let same = vs.color(e.i as usize) == vs.color(e.j as usize);
                prop_assert_eq!(e.w, if same { 2.0 } else { 3.0 });
                if e.i == e.j {
                    prop_assert!(same, "self-loops are monochrome");
                }
            }
            // at most one edge per unordered pair
            let mut keys: Vec<(u32, u32)> = g.edges().iter().map(|e| (e.i, e.j)).collect();
            keys.dedup();
            prop_assert_eq!(keys.len(), g.edge_count());
            // totals tie out against degrees (integer weights: exact)
            let cw = color_weights(&g, &vs);
            let dsum: f64 = g.weighted_degrees().iter().sum();
            prop_assert_eq!(cw.red + cw.blue, dsum);
        }
    }
}
