//! Seeded random-instance generation and the numeric property suites
//! behind `mwnet verify`: the Laplacian factorization identity, balanced
//! gauge directions, gauge-mixture independence, and the NBS kernel
//! characterizations.
//!
//! Every check is deterministic given its inputs and seed; suite trials
//! derive their seeds as `seed + trial index` so results do not depend on
//! evaluation order.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::balance::{
    self, canonical_bipartitions, gauge_consensus_subspace, gauge_fixed_vectors, gauge_matrix,
};
use crate::graph::{classify_weight, Edge, MatrixWeightedGraph, DEFAULT_CLASS_TOL};
use crate::subspace;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("graph is not structurally balanced")]
    NotBalanced,

    #[error("graph has no positive-negative spanning tree")]
    NoPnTree,

    #[error("could not sample {r} independent vectors in dimension {d}")]
    BadRank { d: usize, r: usize },

    #[error(transparent)]
    Balance(#[from] balance::BalanceError),
}

/// Parameters for the random graph generator. Values outside the
/// supported ranges are clamped.
#[derive(Clone, Debug)]
pub struct GeneratorConfig {
    /// Node count, 2..=8.
    pub n: usize,
    /// State dimension, 1..=4.
    pub d: usize,
    /// Probability of each chord beyond the spanning tree.
    pub edge_density: f64,
    /// Probability that an eligible edge is semi-definite.
    pub semidef_fraction: f64,
    /// Probability that an edge is negative class.
    pub negative_fraction: f64,
    /// Plant a definite spanning tree before the chords.
    pub force_pn_tree: bool,
    /// Draw node sides first and make every edge sign consistent with them.
    pub force_balanced: bool,
    pub seed: u64,
}

// Gram construction: rank-planted PSD factor, definite matrices get a
// diagonal shift. Semi-definite weights need d >= 2 so the planted rank
// can be deficient.
fn random_weight(rng: &mut ChaCha8Rng, d: usize, semidef: bool, negative: bool) -> crate::graph::WeightMatrix {
    let rank = if semidef { rng.random_range(1..d) } else { d };
    let factor = DMatrix::from_fn(rank, d, |_, _| rng.random_range(-1.0..1.0));
    let mut m = factor.transpose() * factor;
    if !semidef {
        m += DMatrix::identity(d, d) * 0.1;
    }
    if negative {
        m = -m;
    }
    classify_weight(&m, DEFAULT_CLASS_TOL).expect("Gram-built weights always classify")
}

/// Generates a validated graph, deterministically in the seed.
/// Connectivity comes from seeding a random spanning tree before the
/// density-driven chords.
pub fn random_graph(cfg: &GeneratorConfig) -> MatrixWeightedGraph {
    let n = cfg.n.clamp(2, 8);
    let d = cfg.d.clamp(1, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut sides = vec![1i8; n];
    if cfg.force_balanced {
        for side in sides.iter_mut().skip(1) {
            *side = if rng.random_bool(0.5) { 1 } else { -1 };
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut pairs: Vec<(usize, usize, bool)> = Vec::new();
    for k in 1..n {
        let parent = order[rng.random_range(0..k)];
        pairs.push((order[k], parent, true));
    }
    let in_tree: std::collections::HashSet<(usize, usize)> = pairs
        .iter()
        .map(|&(u, v, _)| (u.min(v), u.max(v)))
        .collect();
    for u in 0..n {
        for v in (u + 1)..n {
            if !in_tree.contains(&(u, v)) && rng.random_bool(cfg.edge_density.clamp(0.0, 1.0)) {
                pairs.push((u, v, false));
            }
        }
    }

    let edges = pairs
        .into_iter()
        .map(|(u, v, is_tree)| {
            let negative = if cfg.force_balanced {
                sides[u] != sides[v]
            } else {
                rng.random_bool(cfg.negative_fraction.clamp(0.0, 1.0))
            };
            let semidef = d >= 2
                && !(cfg.force_pn_tree && is_tree)
                && rng.random_bool(cfg.semidef_fraction.clamp(0.0, 1.0));
            Edge::new(u, v, random_weight(&mut rng, d, semidef, negative))
        })
        .collect();
    MatrixWeightedGraph::new(n, d, edges).expect("generated graphs always validate")
}

/// Mixed-parameter graph derived entirely from one seed; the workhorse
/// behind the property tests.
pub fn sample_graph(seed: u64, max_nodes: usize, max_dim: usize) -> MatrixWeightedGraph {
    let mut meta = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let cfg = GeneratorConfig {
        n: meta.random_range(2..=max_nodes.clamp(2, 8)),
        d: meta.random_range(1..=max_dim.clamp(1, 4)),
        edge_density: meta.random_range(0.3..0.9),
        semidef_fraction: meta.random_range(0.3..0.8),
        negative_fraction: meta.random_range(0.2..0.7),
        force_pn_tree: false,
        force_balanced: false,
        seed: meta.random(),
    };
    random_graph(&cfg)
}

/// Seeded initial condition, uniform on `[−2, 2]` per coordinate.
pub fn random_initial_state(len: usize, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DVector::from_fn(len, |_, _| rng.random_range(-2.0..2.0))
}

fn stacked_identities(n: usize, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n * d, d, |i, j| if i % d == j { 1.0 } else { 0.0 })
}

/// Laplacian factorization identity: both constructions agree entrywise
/// within `1e-10`.
pub fn check_lemma1(g: &MatrixWeightedGraph) -> bool {
    (g.laplacian() - g.laplacian_via_incidence()).amax() <= 1e-10
}

/// For a structurally balanced graph, every column of `D(1_n ⊗ I_d)` lies
/// in the Laplacian kernel.
pub fn check_lemma3(g: &MatrixWeightedGraph) -> Result<bool, VerifyError> {
    let p = balance::is_structurally_balanced(g).ok_or(VerifyError::NotBalanced)?;
    let d = g.state_dim();
    let candidates = gauge_matrix(&p, d) * stacked_identities(g.node_count(), d);
    Ok((g.laplacian() * candidates).amax() <= 1e-8)
}

/// Both directions of the NBS/kernel equivalence.
///
/// Forward: every NBS direction `D(1_n ⊗ ξ)` is flat for the Laplacian.
/// Backward: any gauge-consensus vectors found inside `null(L)` must be
/// covered by the matching balancing set's kernel intersection.
pub fn check_theorem1(g: &MatrixWeightedGraph) -> Result<bool, VerifyError> {
    let d = g.state_dim();
    let lap = g.laplacian();
    let report = balance::enumerate_nbs(g)?;

    for bs in &report.nbs_list {
        let consensus = gauge_consensus_subspace(&bs.partition, &bs.null);
        for col in consensus.basis().column_iter() {
            if (&lap * col.into_owned()).norm() > 1e-8 {
                return Ok(false);
            }
        }
    }

    let null_l = subspace::null_space(&lap, subspace::DEFAULT_NULL_TOL);
    for p in canonical_bipartitions(g.node_count())? {
        let fixed = gauge_fixed_vectors(&null_l, &p, d);
        if fixed.dimension() == 0 {
            continue;
        }
        let bs = balance::balancing_set(g, &p);
        for v in fixed.basis().column_iter() {
            if !bs.null.contains(&v.into_owned(), subspace::DEFAULT_CONTAIN_TOL) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The spanning-tree biconditional: with a PN spanning tree present, the
/// NBS is unique exactly when `null(L)` equals the predicted subspace
/// `span{D(1_n ⊗ null(E^nb))}`, and an empty NBS list forces a trivial
/// kernel.
pub fn check_theorem3(g: &MatrixWeightedGraph) -> Result<bool, VerifyError> {
    if balance::pn_spanning_tree(g).is_none() {
        return Err(VerifyError::NoPnTree);
    }
    let report = balance::enumerate_nbs(g)?;
    let null_l = g.laplacian_null_space();
    if report.nbs_list.is_empty() {
        return Ok(null_l.dimension() == 0);
    }
    if report.nbs_unique {
        let nbs = &report.nbs_list[0];
        let predicted = gauge_consensus_subspace(&nbs.partition, &nbs.null);
        Ok(null_l.equals(&predicted, 1e-8))
    } else {
        // With several NBS the kernel strictly exceeds any single
        // prediction, so no prediction may match it.
        Ok(report.nbs_list.iter().all(|nbs| {
            let predicted = gauge_consensus_subspace(&nbs.partition, &nbs.null);
            !null_l.equals(&predicted, 1e-8)
        }))
    }
}

fn sample_independent(
    rng: &mut ChaCha8Rng,
    d: usize,
    r: usize,
) -> Result<Vec<DVector<f64>>, VerifyError> {
    for _ in 0..100 {
        let m = DMatrix::from_fn(d, r, |_, _| rng.random_range(-1.0..1.0));
        if subspace::column_space(&m, subspace::DEFAULT_NULL_TOL).dimension() == r {
            return Ok(m.column_iter().map(|c| c.into_owned()).collect());
        }
    }
    Err(VerifyError::BadRank { d, r })
}

fn random_nonzero(rng: &mut ChaCha8Rng) -> f64 {
    let magnitude = rng.random_range(0.5..2.0);
    if rng.random_bool(0.5) {
        magnitude
    } else {
        -magnitude
    }
}

fn gauge_term(n: usize, mask: u64, v: &DVector<f64>, coefficient: f64) -> DVector<f64> {
    let d = v.len();
    let mut x = DVector::zeros(n * d);
    for i in 0..n {
        let sign = if i == 0 || (mask >> (n - 1 - i)) & 1 == 0 {
            1.0
        } else {
            -1.0
        };
        x.view_mut((i * d, 0), (d, 1)).copy_from(&(v * (sign * coefficient)));
    }
    x
}

// True iff some canonical gauge D makes all blocks of D·x equal.
fn has_gauge_consensus_form(n: usize, d: usize, x: &DVector<f64>) -> bool {
    let scale = (0..n)
        .map(|i| x.rows(i * d, d).norm())
        .fold(0.0f64, f64::max)
        .max(1.0);
    'gauges: for mask in 0..(1u64 << (n - 1)) {
        let mut first: Option<DVector<f64>> = None;
        for i in 0..n {
            let sign = if i == 0 || (mask >> (n - 1 - i)) & 1 == 0 {
                1.0
            } else {
                -1.0
            };
            let block = x.rows(i * d, d).into_owned() * sign;
            match &first {
                None => first = Some(block),
                Some(reference) => {
                    if (&block - reference).norm() > 1e-9 * scale {
                        continue 'gauges;
                    }
                }
            }
        }
        return true;
    }
    false
}

/// Mixing distinct gauges never collapses to gauge-consensus form: a
/// combination `Σ k_i·D_i(1_n ⊗ v_i)` of independent vectors over
/// pairwise distinct gauges is not `D(1_n ⊗ v)` for any gauge `D`. Also
/// exercises the degenerate two-gauge case with `v₂` a multiple of `v₁`.
/// Returns true (skipped) when fewer than `r` distinct gauges exist.
pub fn check_lemma5(n: usize, d: usize, r: usize, seed: u64) -> Result<bool, VerifyError> {
    assert!(n >= 2, "need at least two agents");
    assert!((2..=d).contains(&r), "check_lemma5 requires 2 <= r <= d");
    let gauge_count = 1u64 << (n - 1);
    if (r as u64) > gauge_count {
        return Ok(true);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vectors = sample_independent(&mut rng, d, r)?;
    let mut masks: Vec<u64> = Vec::with_capacity(r);
    while masks.len() < r {
        let mask = rng.random_range(0..gauge_count);
        if !masks.contains(&mask) {
            masks.push(mask);
        }
    }
    let coefficients: Vec<f64> = (0..r).map(|_| random_nonzero(&mut rng)).collect();

    let mut x = DVector::zeros(n * d);
    for ((mask, v), k) in masks.iter().zip(&vectors).zip(&coefficients) {
        x += gauge_term(n, *mask, v, *k);
    }
    if has_gauge_consensus_form(n, d, &x) {
        return Ok(false);
    }

    // Degenerate case: dependent vectors over two distinct gauges.
    let multiple = random_nonzero(&mut rng);
    let degenerate = gauge_term(n, masks[0], &vectors[0], coefficients[0])
        + gauge_term(n, masks[1], &(&vectors[0] * multiple), coefficients[1]);
    Ok(!has_gauge_consensus_form(n, d, &degenerate))
}

/// The property suites runnable from the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Lemma1,
    Lemma3,
    Lemma5,
    Thm1,
    Thm3,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Lemma1,
        Suite::Lemma3,
        Suite::Lemma5,
        Suite::Thm1,
        Suite::Thm3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lemma1 => "lemma1",
            Suite::Lemma3 => "lemma3",
            Suite::Lemma5 => "lemma5",
            Suite::Thm1 => "thm1",
            Suite::Thm3 => "thm3",
        }
    }

    pub fn from_name(name: &str) -> Option<Suite> {
        Suite::ALL.iter().copied().find(|s| s.name() == name)
    }
}

/// A failed trial, carrying the offending graph for minimization when one
/// exists.
#[derive(Debug)]
pub struct Violation {
    pub trial: usize,
    pub detail: String,
    pub graph: Option<MatrixWeightedGraph>,
}

#[derive(Debug)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub trials: usize,
    pub violations: Vec<Violation>,
}

impl SuiteOutcome {
    pub fn passes(&self) -> usize {
        self.trials - self.violations.len()
    }

    pub fn all_passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn trial_config(suite: Suite, trial_seed: u64, max_nodes: usize, max_dim: usize) -> GeneratorConfig {
    let mut meta = ChaCha8Rng::seed_from_u64(trial_seed);
    GeneratorConfig {
        n: meta.random_range(2..=max_nodes.clamp(2, 8)),
        d: meta.random_range(1..=max_dim.clamp(1, 4)),
        edge_density: meta.random_range(0.3..0.9),
        semidef_fraction: meta.random_range(0.3..0.8),
        negative_fraction: meta.random_range(0.2..0.7),
        force_pn_tree: suite == Suite::Thm3,
        force_balanced: suite == Suite::Lemma3,
        seed: meta.random(),
    }
}

/// Runs `trials` independent seeded trials of one suite.
pub fn run_suite(
    suite: Suite,
    trials: usize,
    seed: u64,
    max_nodes: usize,
    max_dim: usize,
) -> SuiteOutcome {
    let mut violations = Vec::new();
    for trial in 0..trials {
        let trial_seed = seed.wrapping_add(trial as u64);
        let result: Result<bool, (String, Option<MatrixWeightedGraph>)> = match suite {
            Suite::Lemma1 => {
                let g = random_graph(&trial_config(suite, trial_seed, max_nodes, max_dim));
                let ok = check_lemma1(&g);
                if ok { Ok(true) } else { Err(("Laplacian factorization identity violated".into(), Some(g))) }
            }
            Suite::Lemma3 => {
                let g = random_graph(&trial_config(suite, trial_seed, max_nodes, max_dim));
                match check_lemma3(&g) {
                    Ok(true) => Ok(true),
                    Ok(false) => Err(("balanced gauge directions escaped the kernel".into(), Some(g))),
                    Err(e) => Err((e.to_string(), Some(g))),
                }
            }
            Suite::Thm1 => {
                let g = random_graph(&trial_config(suite, trial_seed, max_nodes, max_dim));
                match check_theorem1(&g) {
                    Ok(true) => Ok(true),
                    Ok(false) => Err(("NBS/kernel equivalence violated".into(), Some(g))),
                    Err(e) => Err((e.to_string(), Some(g))),
                }
            }
            Suite::Thm3 => {
                let g = random_graph(&trial_config(suite, trial_seed, max_nodes, max_dim));
                match check_theorem3(&g) {
                    Ok(true) => Ok(true),
                    Ok(false) => Err(("spanning-tree biconditional violated".into(), Some(g))),
                    Err(e) => Err((e.to_string(), Some(g))),
                }
            }
            Suite::Lemma5 => {
                let mut meta = ChaCha8Rng::seed_from_u64(trial_seed);
                let d = meta.random_range(2..=max_dim.clamp(2, 4));
                let n = meta.random_range(2..=(16 / d).clamp(2, 8));
                let r = meta.random_range(2..=d);
                match check_lemma5(n, d, r, meta.random()) {
                    Ok(true) => Ok(true),
                    Ok(false) => Err((
                        format!("gauge combination collapsed (n={n}, d={d}, r={r})"),
                        None,
                    )),
                    Err(e) => Err((e.to_string(), None)),
                }
            }
        };
        if let Err((detail, graph)) = result {
            violations.push(Violation { trial, detail, graph });
        }
    }
    SuiteOutcome { suite, trials, violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g1() -> MatrixWeightedGraph {
        crate::json::parse_graph(include_str!("../fixtures/g1.json")).unwrap()
    }

    #[test]
    fn generator_is_deterministic_and_respects_flags() {
        let cfg = GeneratorConfig {
            n: 2,
            d: 1,
            edge_density: 1.0,
            semidef_fraction: 0.0,
            negative_fraction: 0.0,
            force_pn_tree: false,
            force_balanced: false,
            seed: 7,
        };
        let g = random_graph(&cfg);
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert!(g.edges()[0].weight.sign_class().is_definite());
        assert!(g.edges()[0].weight.sign_class().is_positive());

        let again = random_graph(&cfg);
        assert_eq!(
            crate::json::graph_to_string(&g),
            crate::json::graph_to_string(&again)
        );
    }

    #[test]
    fn planted_tree_guarantees_pn_spanning_tree() {
        for seed in 0..20 {
            let cfg = GeneratorConfig {
                n: 6,
                d: 3,
                edge_density: 0.5,
                semidef_fraction: 0.8,
                negative_fraction: 0.5,
                force_pn_tree: true,
                force_balanced: false,
                seed,
            };
            let g = random_graph(&cfg);
            assert!(balance::pn_spanning_tree(&g).is_some(), "seed {seed}");
        }
    }

    #[test]
    fn lemma1_holds_on_fixtures_and_seeds() {
        assert!(check_lemma1(&g1()));
        for n in [3usize, 5, 8] {
            let g = random_graph(&GeneratorConfig {
                n,
                d: 3,
                edge_density: 0.6,
                semidef_fraction: 0.5,
                negative_fraction: 0.5,
                force_pn_tree: false,
                force_balanced: false,
                seed: n as u64,
            });
            assert!(check_lemma1(&g), "n = {n}");
        }
        let single = random_graph(&GeneratorConfig {
            n: 2,
            d: 2,
            edge_density: 0.0,
            semidef_fraction: 0.5,
            negative_fraction: 0.5,
            force_pn_tree: false,
            force_balanced: false,
            seed: 1,
        });
        assert!(check_lemma1(&single));
    }

    #[test]
    fn lemma3_on_balanced_graphs() {
        // All-positive-definite graphs are balanced with every node on
        // one side.
        let all_positive = random_graph(&GeneratorConfig {
            n: 5,
            d: 3,
            edge_density: 0.7,
            semidef_fraction: 0.0,
            negative_fraction: 0.0,
            force_pn_tree: false,
            force_balanced: false,
            seed: 2,
        });
        let p = balance::is_structurally_balanced(&all_positive).unwrap();
        assert!(p.signs().iter().all(|&s| s == 1));
        assert!(check_lemma3(&all_positive).unwrap());

        // Negating e23 balances the running example.
        let balanced = g1().negate_edges(&[1]);
        assert!(check_lemma3(&balanced).unwrap());
        assert!(matches!(check_lemma3(&g1()), Err(VerifyError::NotBalanced)));

        for seed in 0..30 {
            let cfg = GeneratorConfig {
                n: 5,
                d: 3,
                edge_density: 0.6,
                semidef_fraction: 0.5,
                negative_fraction: 0.5,
                force_pn_tree: false,
                force_balanced: true,
                seed,
            };
            let g = random_graph(&cfg);
            assert!(check_lemma3(&g).unwrap(), "seed {seed}");
        }
    }

    #[test]
    fn theorem1_on_example_and_balanced_graph() {
        assert!(check_theorem1(&g1()).unwrap());

        let cfg = GeneratorConfig {
            n: 4,
            d: 2,
            edge_density: 0.7,
            semidef_fraction: 0.0,
            negative_fraction: 0.4,
            force_pn_tree: false,
            force_balanced: true,
            seed: 11,
        };
        assert!(check_theorem1(&random_graph(&cfg)).unwrap());
    }

    #[test]
    fn theorem3_on_the_no_nbs_variant() {
        let g = crate::json::parse_graph(include_str!("../fixtures/g1_a23_negdef.json")).unwrap();
        let report = balance::enumerate_nbs(&g).unwrap();
        assert!(report.nbs_list.is_empty());
        assert!(check_theorem3(&g).unwrap());
        assert_eq!(g.laplacian_null_space().dimension(), 0);
    }

    #[test]
    fn theorem3_requires_a_tree() {
        assert!(matches!(check_theorem3(&g1()), Err(VerifyError::NoPnTree)));
    }

    #[test]
    fn lemma5_base_and_degenerate_cases() {
        assert!(check_lemma5(3, 2, 2, 1).unwrap());
        // n = 2 supplies exactly two canonical gauges, enough for r = 2.
        assert!(check_lemma5(2, 2, 2, 5).unwrap());
        // r = 3 cannot find three distinct gauges on two nodes: skipped.
        assert!(check_lemma5(2, 3, 3, 5).unwrap());
    }

    #[test]
    fn suites_pass_on_default_seeds() {
        for suite in Suite::ALL {
            let outcome = run_suite(suite, 25, 42, 6, 3);
            assert!(
                outcome.all_passed(),
                "{}: {:?}",
                suite.name(),
                outcome.violations.first().map(|v| &v.detail)
            );
        }
    }
}
