//! Consensus dynamics `ẋ = −Lx`: fixed-step integration, the exact
//! steady state as the projection of `x(0)` onto `null(L)`, steady-state
//! classification, and the prediction read off the balance report.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::balance::{self, Bipartition};
use crate::graph::MatrixWeightedGraph;
use crate::subspace::Subspace;

/// Relative residual `‖Lx(t_final)‖ ≤ tol·max(1, ‖x0‖)` for convergence.
pub const CONVERGENCE_TOL: f64 = 1e-6;
/// Default tolerance for steady-state classification.
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-5;
/// Cap on recorded sample instants per trajectory.
const MAX_SAMPLES: usize = 2000;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("t_final must be positive, got {t_final}")]
    NonPositiveHorizon { t_final: f64 },

    #[error("initial state has {found} entries, expected {expected}")]
    StateSizeMismatch { found: usize, expected: usize },
}

/// Time-stamped agent states from integrating the collective dynamics.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// Strictly increasing sample times starting at zero.
    pub times: Vec<f64>,
    /// Stacked agent states at each sample time.
    pub states: Vec<DVector<f64>>,
    /// `‖L·x(t_final)‖`.
    pub residual: f64,
    pub converged: bool,
}

impl Trajectory {
    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory has at least one sample")
    }

    /// Writes the trajectory as CSV with header `t,x1_1,…,xn_d` and each
    /// float printed with 12 significant digits.
    pub fn write_csv<W: std::io::Write>(&self, d: usize, out: &mut W) -> std::io::Result<()> {
        let n = self.final_state().len() / d;
        let mut header = String::from("t");
        for i in 1..=n {
            for k in 1..=d {
                header.push_str(&format!(",x{i}_{k}"));
            }
        }
        writeln!(out, "{header}")?;
        for (t, x) in self.times.iter().zip(&self.states) {
            let mut line = format!("{t:.11e}");
            for value in x.iter() {
                line.push_str(&format!(",{value:.11e}"));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Horizon `40/λ₂⁺` from the smallest nonzero Laplacian eigenvalue, long
/// enough to damp the slowest decaying mode to roundoff.
pub fn default_t_final(g: &MatrixWeightedGraph) -> f64 {
    let eig = SymmetricEigen::new(g.laplacian());
    let lambda_max = eig.eigenvalues.max();
    let cut = 1e-9 * lambda_max.max(1.0);
    let lambda2 = eig
        .eigenvalues
        .iter()
        .copied()
        .filter(|&l| l > cut)
        .fold(f64::INFINITY, f64::min);
    if lambda2.is_finite() {
        40.0 / lambda2
    } else {
        // Fully flat dynamics; any horizon works.
        1.0
    }
}

/// Integrates `ẋ = −Lx` with the classical fourth-order scheme at a fixed
/// step. The automatic step is `min(0.5/λ_max(L), t_final/1000)`, well
/// inside the stability region; at most [`MAX_SAMPLES`] instants plus the
/// final state are recorded.
pub fn simulate(
    g: &MatrixWeightedGraph,
    x0: &DVector<f64>,
    t_final: f64,
    dt: Option<f64>,
) -> Result<Trajectory, DynamicsError> {
    let nd = g.node_count() * g.state_dim();
    if x0.len() != nd {
        return Err(DynamicsError::StateSizeMismatch { found: x0.len(), expected: nd });
    }
    if t_final <= 0.0 || t_final.is_nan() {
        return Err(DynamicsError::NonPositiveHorizon { t_final });
    }
    let lap = g.laplacian();
    let dt = match dt {
        Some(dt) if dt > 0.0 => dt,
        _ => {
            let lambda_max = SymmetricEigen::new(lap.clone()).eigenvalues.max();
            if lambda_max > 0.0 {
                (0.5 / lambda_max).min(t_final / 1000.0)
            } else {
                t_final / 1000.0
            }
        }
    };
    let steps = (t_final / dt).ceil().max(1.0) as usize;
    let dt = t_final / steps as f64;
    let stride = steps.div_ceil(MAX_SAMPLES);

    let deriv = |x: &DVector<f64>| -(&lap * x);
    let mut x = x0.clone();
    let mut times = vec![0.0];
    let mut states = vec![x.clone()];
    for k in 1..=steps {
        let k1 = deriv(&x);
        let k2 = deriv(&(&x + &k1 * (dt / 2.0)));
        let k3 = deriv(&(&x + &k2 * (dt / 2.0)));
        let k4 = deriv(&(&x + &k3 * dt));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFiniteState { t: k as f64 * dt });
        }
        if k % stride == 0 || k == steps {
            times.push(k as f64 * dt);
            states.push(x.clone());
        }
    }
    let residual = (&lap * &x).norm();
    let converged = residual <= CONVERGENCE_TOL * x0.norm().max(1.0);
    Ok(Trajectory { times, states, residual, converged })
}

/// The exact limit of the dynamics: since `L` is symmetric positive
/// semi-definite, `e^{−Lt}x0` converges to the orthogonal projection of
/// `x0` onto `null(L)`.
pub fn steady_state_exact(g: &MatrixWeightedGraph, x0: &DVector<f64>) -> DVector<f64> {
    g.laplacian_null_space().project(x0)
}

/// Classified steady state of the collective dynamics.
#[derive(Clone, Debug)]
pub enum SteadyStateClass {
    /// Every agent block decays to zero.
    Trivial,
    /// All agents agree on a common nonzero value.
    Consensus { value: DVector<f64> },
    /// Every agent reaches `±value` with both signs present; the
    /// partition is canonical (node 1 on the positive side), so `value`
    /// is node 1's steady block.
    Bipartite { partition: Bipartition, value: DVector<f64> },
    /// Agents settle, but not onto a single value up to sign.
    Clustered,
}

impl SteadyStateClass {
    pub fn name(&self) -> &'static str {
        match self {
            SteadyStateClass::Trivial => "trivial",
            SteadyStateClass::Consensus { .. } => "consensus",
            SteadyStateClass::Bipartite { .. } => "bipartite",
            SteadyStateClass::Clustered => "clustered",
        }
    }
}

/// Applies the decision rules in the order Trivial → Consensus →
/// Bipartite → Clustered, so the zero state never classifies as a
/// consensus on the zero value. A block matches `±value` when
/// `min(‖x_i−v‖, ‖x_i+v‖) ≤ tol·max(1, ‖v‖)`.
pub fn classify_steady_state(xbar: &DVector<f64>, d: usize, tol: f64) -> SteadyStateClass {
    assert!(d > 0 && xbar.len().is_multiple_of(d));
    let n = xbar.len() / d;
    let blocks: Vec<DVector<f64>> = (0..n)
        .map(|i| xbar.rows(i * d, d).into_owned())
        .collect();

    if blocks.iter().all(|b| b.norm() <= tol) {
        return SteadyStateClass::Trivial;
    }

    let value = blocks[0].clone();
    let scale = value.norm().max(1.0);
    if value.norm() > tol && blocks.iter().all(|b| (b - &value).norm() <= tol * scale) {
        return SteadyStateClass::Consensus { value };
    }

    if value.norm() > tol {
        let mut signs = Vec::with_capacity(n);
        for b in &blocks {
            let plus = (b - &value).norm();
            let minus = (b + &value).norm();
            if plus.min(minus) > tol * scale {
                return SteadyStateClass::Clustered;
            }
            signs.push(if plus <= minus { 1 } else { -1 });
        }
        if signs.contains(&-1) {
            return SteadyStateClass::Bipartite {
                partition: Bipartition::new(signs),
                value,
            };
        }
    }
    SteadyStateClass::Clustered
}

/// Steady-state prediction from the balance report alone.
#[derive(Clone, Debug)]
pub enum NbsPrediction {
    /// Unique NBS and a PN spanning tree: `null(L)` is exactly
    /// `span{D(1_n ⊗ null(E^nb))}` and steady states project onto it.
    Bipartite { division: Bipartition, subspace: Subspace },
    /// No NBS and a PN spanning tree: every trajectory decays to zero.
    Trivial,
    /// No NBS and no PN spanning tree: bipartite consensus is ruled out,
    /// but the trivial outcome is not guaranteed.
    NoNbs,
    /// More than one NBS: bipartite consensus is ruled out.
    MultipleNbs,
    /// Unique NBS without a PN spanning tree: uniqueness is necessary but
    /// not sufficient, so no prediction is made.
    NoPnTree,
}

impl NbsPrediction {
    /// The class label used in reports.
    pub fn class_name(&self) -> &'static str {
        match self {
            NbsPrediction::Bipartite { .. } => "bipartite",
            NbsPrediction::Trivial => "trivial",
            NbsPrediction::NoNbs | NbsPrediction::MultipleNbs => "no-bipartite",
            NbsPrediction::NoPnTree => "indeterminate",
        }
    }

    /// Reason code when no bipartite prediction is made.
    pub fn reason(&self) -> Option<&'static str> {
        match self {
            NbsPrediction::Bipartite { .. } => None,
            NbsPrediction::Trivial | NbsPrediction::NoNbs => Some("NoNBS"),
            NbsPrediction::MultipleNbs => Some("MultipleNBS"),
            NbsPrediction::NoPnTree => Some("NoPNTree"),
        }
    }
}

/// Predicts the steady-state class from NBS uniqueness and the spanning
/// tree verdict.
pub fn predict_from_nbs(g: &MatrixWeightedGraph) -> Result<NbsPrediction, balance::BalanceError> {
    let report = balance::enumerate_nbs(g)?;
    Ok(prediction_from_report(&report))
}

/// Same prediction, reusing an existing report.
pub fn prediction_from_report(report: &balance::BalanceReport) -> NbsPrediction {
    let has_tree = report.pn_spanning_tree.is_some();
    match (report.nbs_list.len(), has_tree) {
        (1, true) => {
            let nbs = &report.nbs_list[0];
            NbsPrediction::Bipartite {
                division: nbs.partition.clone(),
                subspace: balance::gauge_consensus_subspace(&nbs.partition, &nbs.null),
            }
        }
        (1, false) => NbsPrediction::NoPnTree,
        (0, true) => NbsPrediction::Trivial,
        (0, false) => NbsPrediction::NoNbs,
        _ => NbsPrediction::MultipleNbs,
    }
}

/// Lyapunov value `V(x) = xᵀLx`, non-increasing along trajectories.
pub fn energy(lap: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    x.dot(&(lap * x))
}
