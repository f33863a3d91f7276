//! Command-line front end: analyze balance structure, simulate the
//! consensus dynamics, predict steady states, and run the verification
//! suites.
//!
//! Exit codes: 0 ok, 1 verification failure, 2 input error,
//! 3 non-convergence.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use nalgebra::DVector;
use serde::Serialize;

use mwnet::balance::BalanceReport;
use mwnet::dynamics::{self, NbsPrediction, SteadyStateClass};
use mwnet::graph::MatrixWeightedGraph;
use mwnet::subspace::Subspace;
use mwnet::{balance, json, verify};

#[derive(Parser)]
#[command(name = "mwnet", version, about = "Signed matrix-weighted network analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report balance structure, balancing sets and the steady-state prediction.
    Analyze {
        /// Graph JSON file.
        graph: PathBuf,
        /// Emit machine-readable JSON instead of the table.
        #[arg(long)]
        json: bool,
    },
    /// Integrate the consensus dynamics and classify the outcome.
    Simulate {
        graph: PathBuf,
        /// Time horizon, or "auto" for 40/λ₂⁺.
        #[arg(long = "t-final", default_value = "auto")]
        t_final: String,
        /// Fixed integration step, or "auto".
        #[arg(long, default_value = "auto")]
        dt: String,
        /// "random" (requires --seed) or a JSON file with the stacked state.
        #[arg(long, default_value = "random")]
        x0: String,
        /// Seed for the random initial state.
        #[arg(long)]
        seed: Option<u64>,
        /// Trajectory CSV destination.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predict the steady-state class from the balance report alone.
    Predict {
        graph: PathBuf,
        /// "random" (requires --seed) or a JSON file; enables the exact
        /// steady-state projection.
        #[arg(long)]
        x0: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the numeric property suites on seeded random graphs.
    Verify {
        /// lemma1 | lemma3 | lemma5 | thm1 | thm3 | all
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "max-nodes", default_value_t = 6)]
        max_nodes: usize,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        /// Directory for violating-graph dumps.
        #[arg(long = "dump-dir", default_value = "violations")]
        dump_dir: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            2
        }
    };
    std::process::exit(code);
}

fn run(command: Command) -> Result<i32, String> {
    match command {
        Command::Analyze { graph, json } => cmd_analyze(&graph, json),
        Command::Simulate { graph, t_final, dt, x0, seed, out } => {
            cmd_simulate(&graph, &t_final, &dt, &x0, seed, out.as_deref())
        }
        Command::Predict { graph, x0, seed } => cmd_predict(&graph, x0.as_deref(), seed),
        Command::Verify { suite, trials, seed, max_nodes, dim, dump_dir } => {
            cmd_verify(&suite, trials, seed, max_nodes, dim, &dump_dir)
        }
    }
}

fn load_graph(path: &std::path::Path) -> Result<MatrixWeightedGraph, String> {
    json::load_graph(path).map_err(|e| format!("{}: {e}", path.display()))
}

#[derive(Serialize)]
struct NbsEntry {
    partition: Vec<i8>,
    edges: Vec<[usize; 2]>,
    null_basis: Vec<Vec<f64>>,
    null_dim: usize,
}

#[derive(Serialize)]
struct AnalyzeOutput {
    structurally_balanced: Option<Vec<i8>>,
    nbs: Vec<NbsEntry>,
    nbs_unique: bool,
    pn_spanning_tree: Option<Vec<[usize; 2]>>,
    laplacian_null_dim: usize,
    predicted_class: String,
}

fn basis_rows(s: &Subspace) -> Vec<Vec<f64>> {
    s.basis()
        .column_iter()
        .map(|c| c.iter().copied().collect())
        .collect()
}

fn edge_pairs(g: &MatrixWeightedGraph, indices: &[usize]) -> Vec<[usize; 2]> {
    let mut pairs: Vec<[usize; 2]> = indices
        .iter()
        .map(|&k| {
            let (u, v) = g.edges()[k].endpoints();
            [u + 1, v + 1]
        })
        .collect();
    pairs.sort();
    pairs
}

fn analyze_output(g: &MatrixWeightedGraph, report: &BalanceReport) -> AnalyzeOutput {
    let prediction = dynamics::prediction_from_report(report);
    AnalyzeOutput {
        structurally_balanced: report
            .structurally_balanced
            .as_ref()
            .map(|p| p.signs().to_vec()),
        nbs: report
            .nbs_list
            .iter()
            .map(|bs| NbsEntry {
                partition: bs.partition.signs().to_vec(),
                edges: edge_pairs(g, &bs.edges),
                null_basis: basis_rows(&bs.null),
                null_dim: bs.null.dimension(),
            })
            .collect(),
        nbs_unique: report.nbs_unique,
        pn_spanning_tree: report
            .pn_spanning_tree
            .as_ref()
            .map(|tree| edge_pairs(g, tree)),
        laplacian_null_dim: g.laplacian_null_space().dimension(),
        predicted_class: prediction.class_name().to_string(),
    }
}

fn side_list(signs: &[i8], sign: i8) -> String {
    let nodes: Vec<String> = signs
        .iter()
        .enumerate()
        .filter(|(_, &s)| s == sign)
        .map(|(i, _)| (i + 1).to_string())
        .collect();
    format!("{{{}}}", nodes.join(", "))
}

fn cmd_analyze(path: &std::path::Path, as_json: bool) -> Result<i32, String> {
    let g = load_graph(path)?;
    let report = balance::enumerate_nbs(&g).map_err(|e| e.to_string())?;
    let output = analyze_output(&g, &report);
    if as_json {
        println!("{}", serde_json::to_string_pretty(&output).expect("serializable"));
        return Ok(0);
    }

    println!(
        "nodes: {}, dimension: {}, edges: {}",
        g.node_count(),
        g.state_dim(),
        g.edge_count()
    );
    match &output.structurally_balanced {
        Some(signs) => println!(
            "structurally balanced: yes, V1 = {}, V2 = {}",
            side_list(signs, 1),
            side_list(signs, -1)
        ),
        None => println!("structurally balanced: no"),
    }
    match &output.pn_spanning_tree {
        Some(tree) => {
            let edges: Vec<String> = tree.iter().map(|[u, v]| format!("({u}, {v})")).collect();
            println!("pn spanning tree: {}", edges.join(", "));
        }
        None => println!("pn spanning tree: none"),
    }
    println!("laplacian null dimension: {}", output.laplacian_null_dim);
    println!(
        "non-trivial balancing sets: {}{}",
        output.nbs.len(),
        if output.nbs_unique { " (unique)" } else { "" }
    );
    for (i, entry) in output.nbs.iter().enumerate() {
        let edges: Vec<String> = entry
            .edges
            .iter()
            .map(|[u, v]| format!("({u}, {v})"))
            .collect();
        println!(
            "  [{}] V1 = {}, V2 = {}; edges = {{{}}}; null dim = {}",
            i + 1,
            side_list(&entry.partition, 1),
            side_list(&entry.partition, -1),
            edges.join(", "),
            entry.null_dim
        );
    }
    println!("predicted class: {}", output.predicted_class);
    Ok(0)
}

fn parse_initial_state(
    g: &MatrixWeightedGraph,
    x0: &str,
    seed: Option<u64>,
) -> Result<DVector<f64>, String> {
    let nd = g.node_count() * g.state_dim();
    if x0 == "random" {
        let seed = seed.ok_or("--seed is required with --x0 random")?;
        return Ok(verify::random_initial_state(nd, seed));
    }
    let text = std::fs::read_to_string(x0).map_err(|e| format!("{x0}: {e}"))?;
    let values: Vec<f64> =
        serde_json::from_str(&text).map_err(|e| format!("{x0}: expected a JSON array: {e}"))?;
    if values.len() != nd {
        return Err(format!("{x0}: expected {nd} entries, found {}", values.len()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(format!("{x0}: initial state has a non-finite entry"));
    }
    Ok(DVector::from_vec(values))
}

#[derive(Serialize)]
struct SimulateSummary {
    class: String,
    partition: Option<Vec<i8>>,
    final_value: Option<Vec<f64>>,
    residual: f64,
    converged: bool,
}

fn cmd_simulate(
    path: &std::path::Path,
    t_final: &str,
    dt: &str,
    x0: &str,
    seed: Option<u64>,
    out: Option<&std::path::Path>,
) -> Result<i32, String> {
    let g = load_graph(path)?;
    let x0 = parse_initial_state(&g, x0, seed)?;
    let t_final = if t_final == "auto" {
        dynamics::default_t_final(&g)
    } else {
        t_final
            .parse()
            .map_err(|_| "--t-final must be a number or \"auto\"".to_string())?
    };
    let dt = if dt == "auto" {
        None
    } else {
        Some(
            dt.parse()
                .map_err(|_| "--dt must be a number or \"auto\"".to_string())?,
        )
    };

    let trajectory = match dynamics::simulate(&g, &x0, t_final, dt) {
        Ok(t) => t,
        Err(e @ dynamics::DynamicsError::NonFiniteState { .. }) => {
            eprintln!("error: {e}");
            return Ok(3);
        }
        Err(e) => return Err(e.to_string()),
    };

    if let Some(out) = out {
        let mut file =
            std::fs::File::create(out).map_err(|e| format!("{}: {e}", out.display()))?;
        trajectory
            .write_csv(g.state_dim(), &mut file)
            .map_err(|e| format!("{}: {e}", out.display()))?;
    }

    let class = dynamics::classify_steady_state(
        trajectory.final_state(),
        g.state_dim(),
        dynamics::DEFAULT_CLASSIFY_TOL,
    );
    let (partition, final_value) = match &class {
        SteadyStateClass::Bipartite { partition, value } => (
            Some(partition.signs().to_vec()),
            Some(value.iter().copied().collect()),
        ),
        SteadyStateClass::Consensus { value } => (None, Some(value.iter().copied().collect())),
        _ => (None, None),
    };
    let summary = SimulateSummary {
        class: class.name().to_string(),
        partition,
        final_value,
        residual: trajectory.residual,
        converged: trajectory.converged,
    };
    println!("{}", serde_json::to_string_pretty(&summary).expect("serializable"));
    Ok(if trajectory.converged { 0 } else { 3 })
}

#[derive(Serialize)]
struct PredictSummary {
    predicted_class: String,
    reason: Option<String>,
    division: Option<Vec<i8>>,
    subspace_basis: Option<Vec<Vec<f64>>>,
    theorem1_containment: Option<bool>,
    exact_steady_state: Option<Vec<f64>>,
}

fn cmd_predict(
    path: &std::path::Path,
    x0: Option<&str>,
    seed: Option<u64>,
) -> Result<i32, String> {
    let g = load_graph(path)?;
    let report = balance::enumerate_nbs(&g).map_err(|e| e.to_string())?;
    let prediction = dynamics::prediction_from_report(&report);

    // Numeric confirmation that every reported NBS direction is flat for
    // the Laplacian, independent of the spanning-tree verdict.
    let theorem1_containment = (!report.nbs_list.is_empty()).then(|| {
        let lap = g.laplacian();
        report.nbs_list.iter().all(|bs| {
            let consensus = balance::gauge_consensus_subspace(&bs.partition, &bs.null);
            consensus
                .basis()
                .column_iter()
                .all(|col| (&lap * col.into_owned()).norm() <= 1e-8)
        })
    });

    let (division, subspace_basis) = match &prediction {
        NbsPrediction::Bipartite { division, subspace } => (
            Some(division.signs().to_vec()),
            Some(basis_rows(subspace)),
        ),
        _ => (None, None),
    };
    let exact_steady_state = match x0 {
        Some(x0) => {
            let x0 = parse_initial_state(&g, x0, seed)?;
            Some(
                dynamics::steady_state_exact(&g, &x0)
                    .iter()
                    .copied()
                    .collect(),
            )
        }
        None => None,
    };
    let summary = PredictSummary {
        predicted_class: prediction.class_name().to_string(),
        reason: prediction.reason().map(str::to_string),
        division,
        subspace_basis,
        theorem1_containment,
        exact_steady_state,
    };
    println!("{}", serde_json::to_string_pretty(&summary).expect("serializable"));
    Ok(0)
}

fn cmd_verify(
    suite: &str,
    trials: usize,
    seed: u64,
    max_nodes: usize,
    dim: usize,
    dump_dir: &std::path::Path,
) -> Result<i32, String> {
    let suites: Vec<verify::Suite> = if suite == "all" {
        verify::Suite::ALL.to_vec()
    } else {
        vec![verify::Suite::from_name(suite).ok_or_else(|| {
            format!("unknown suite {suite:?}; expected lemma1, lemma3, lemma5, thm1, thm3 or all")
        })?]
    };

    let mut all_passed = true;
    for suite in suites {
        let outcome = verify::run_suite(suite, trials, seed, max_nodes, dim);
        println!(
            "{}: {}/{} pass",
            suite.name(),
            outcome.passes(),
            outcome.trials
        );
        if !outcome.all_passed() {
            all_passed = false;
            std::fs::create_dir_all(dump_dir)
                .map_err(|e| format!("{}: {e}", dump_dir.display()))?;
            for violation in &outcome.violations {
                eprintln!("  trial {}: {}", violation.trial, violation.detail);
                if let Some(graph) = &violation.graph {
                    let file =
                        dump_dir.join(format!("{}_trial{}.json", suite.name(), violation.trial));
                    std::fs::write(&file, json::graph_to_string(graph))
                        .map_err(|e| format!("{}: {e}", file.display()))?;
                    eprintln!("  offending graph written to {}", file.display());
                }
            }
        }
    }
    Ok(if all_passed { 0 } else { 1 })
}
