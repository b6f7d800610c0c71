//! Command-line front end over the `gridpart` library.
//!
//! One subcommand per capability: `partition`, `flow`, `lodf`, `verify`,
//! `influence`, `switch`, `switch-search`. All subcommands accept a network
//! file (native JSON or a Matpower-style `.m` case), an optional seeded
//! susceptance perturbation, and an optional dangling-bridge collapse.
//! Results go to stdout (JSON or CSV per subcommand); notes and ingest
//! reports go to stderr.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use num_traits::ToPrimitive;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use gridpart::balance::{BalanceError, BalanceRule};
use gridpart::flow::solve_dc_with;
use gridpart::forest::{self, ForestEnsemble};
use gridpart::localize::{cross_region_edges, influence_graph};
use gridpart::lodf::{lodf_matrix_lenient, lodf_nonbridge, ColumnKind, LodfMatrix};
use gridpart::network::matpower::{load_matpower, MatpowerReport};
use gridpart::network::native::load_native;
use gridpart::network::collapse_dangling_bridges;
use gridpart::networks::{random_connected, with_random_susceptances};
use gridpart::partition::{cell_decomposition, find_bridges, irreducible_tree_partition};
use gridpart::perturb::{perturb, PerturbationSpec};
use gridpart::switching::{enumerate_bridging_cuts, evaluate_switch};
use gridpart::tolerance::{DEFAULT_TOLERANCE, INFLUENCE_THRESHOLD};
use gridpart::{BusId, LineId, Network};

#[derive(Parser)]
#[command(
    name = "gridpart",
    version,
    about = "Tree partitions, DC power flows, line-outage distribution factors, \
             and switching studies for power networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// How to obtain the network every subcommand works on.
#[derive(Args)]
struct NetArgs {
    /// Network file: native JSON, or a Matpower-style case if the
    /// extension is `.m`.
    file: PathBuf,

    /// Perturb every susceptance by a seeded random relative factor after
    /// loading, e.g. "eps=1e-3,dist=uniform,seed=42". Distributions:
    /// uniform, truncated-gaussian, truncated-laplace.
    #[arg(long, value_name = "SPEC")]
    perturb: Option<PerturbationSpec>,

    /// Absorb buses that hang off the rest of the network through chains
    /// of bridges into their anchor bus before analysing.
    #[arg(long)]
    collapse: bool,
}

/// Injection override and balance rule, shared by the factor-matrix
/// subcommands.
#[derive(Args)]
struct RuleArgs {
    /// CSV file "bus_id,injection" replacing the stored injections; buses
    /// not listed get 0.
    #[arg(long, value_name = "FILE")]
    injection: Option<PathBuf>,

    /// Balance rule for bridge columns: "uniform-gen", "uniform-all", or
    /// "weights:<file>" with CSV lines "bus_id,alpha".
    #[arg(long, value_name = "RULE")]
    rule: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Print regions, bridges, cells, and cut vertices as JSON.
    Partition {
        #[command(flatten)]
        net: NetArgs,
    },

    /// Solve the DC power flow and print one CSV row per line.
    Flow {
        #[command(flatten)]
        net: NetArgs,

        /// Print flows with magnitude below this as exactly 0.
        #[arg(long, value_name = "T", default_value_t = 0.0)]
        zero_tol: f64,
    },

    /// Print the full outage distribution factor matrix as CSV
    /// (row = observed line, column = tripped line) plus a JSON sidecar
    /// describing each column.
    Lodf {
        #[command(flatten)]
        net: NetArgs,

        #[command(flatten)]
        rule: RuleArgs,

        /// Print entries with magnitude below this as exactly 0.
        #[arg(long, value_name = "T", default_value_t = DEFAULT_TOLERANCE)]
        threshold: f64,

        /// Write the CSV matrix here instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,

        /// Write the JSON sidecar here (default: next to --out with a
        /// .kinds.json suffix, or stderr when printing to stdout).
        #[arg(long, value_name = "FILE")]
        kinds: Option<PathBuf>,
    },

    /// Check the float matrix route against the exact rational
    /// spanning-forest oracle, on the given file (when small enough) and
    /// on a random graph suite. Exits nonzero on disagreement.
    Verify {
        #[command(flatten)]
        net: NetArgs,

        /// Largest bus count in the random suite.
        #[arg(long, value_name = "N", default_value_t = 6)]
        max_n: u32,

        /// Number of random graphs in the suite.
        #[arg(long, value_name = "K", default_value_t = 25)]
        cases: usize,

        /// Seed for the random suite.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },

    /// Threshold the factor matrix into an influence graph; print it as
    /// JSON or DOT.
    Influence {
        #[command(flatten)]
        net: NetArgs,

        #[command(flatten)]
        rule: RuleArgs,

        /// Two lines influence each other when either direction's factor
        /// reaches this magnitude.
        #[arg(long, value_name = "T", default_value_t = INFLUENCE_THRESHOLD)]
        threshold: f64,

        /// Write the graph in DOT format to this file.
        #[arg(long, value_name = "FILE")]
        dot: Option<PathBuf>,

        /// Write the graph as JSON to this file.
        #[arg(long, value_name = "FILE")]
        json: Option<PathBuf>,
    },

    /// Switch off a set of lines and report how congestion and influence
    /// change; prints a JSON evaluation.
    Switch {
        #[command(flatten)]
        net: NetArgs,

        #[command(flatten)]
        rule: RuleArgs,

        /// Comma-separated line ids to switch off, e.g. --off 12,47,101.
        #[arg(long, required = true, value_delimiter = ',', value_name = "IDS")]
        off: Vec<u32>,

        /// Influence-graph threshold used for the before/after densities.
        #[arg(long, value_name = "T", default_value_t = INFLUENCE_THRESHOLD)]
        threshold: f64,

        /// Also write per-line CSV "line_id,flow_before,flow_after,
        /// normalized_change" to this file.
        #[arg(long, value_name = "FILE")]
        changes: Option<PathBuf>,
    },

    /// List line sets (up to size k) whose removal keeps the network
    /// connected but splits it into more regions, best-balanced first.
    SwitchSearch {
        #[command(flatten)]
        net: NetArgs,

        /// Largest set size to try (at most 3).
        #[arg(long, default_value_t = 3)]
        k: usize,

        /// Print at most this many candidates; 0 means all.
        #[arg(long, default_value_t = 20)]
        top: usize,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Partition { net } => {
            let net = load_network(&net)?;
            cmd_partition(&net)?;
        }
        Command::Flow { net, zero_tol } => {
            let net = load_network(&net)?;
            cmd_flow(&net, zero_tol)?;
        }
        Command::Lodf { net, rule, threshold, out, kinds } => {
            let net = load_network(&net)?;
            cmd_lodf(&net, &rule, threshold, out.as_deref(), kinds.as_deref())?;
        }
        Command::Verify { net, max_n, cases, seed } => {
            let net = load_network(&net)?;
            return cmd_verify(&net, max_n, cases, seed);
        }
        Command::Influence { net, rule, threshold, dot, json } => {
            let net = load_network(&net)?;
            cmd_influence(&net, &rule, threshold, dot.as_deref(), json.as_deref())?;
        }
        Command::Switch { net, rule, off, threshold, changes } => {
            let net = load_network(&net)?;
            cmd_switch(&net, &rule, &off, threshold, changes.as_deref())?;
        }
        Command::SwitchSearch { net, k, top } => {
            let net = load_network(&net)?;
            cmd_switch_search(&net, k, top)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn load_network(args: &NetArgs) -> Result<Network> {
    let ext = args.file.extension().and_then(|e| e.to_str()).unwrap_or("");
    let mut net = if ext.eq_ignore_ascii_case("m") {
        let case = load_matpower(&args.file)
            .with_context(|| format!("loading {}", args.file.display()))?;
        report_matpower(&case.report);
        case.network
    } else {
        load_native(&args.file).with_context(|| format!("loading {}", args.file.display()))?
    };
    if let Some(spec) = &args.perturb {
        net = perturb(&net, spec);
        eprintln!(
            "perturbed susceptances: scale {}, {:?}, seed {}",
            spec.scale, spec.distribution, spec.seed
        );
    }
    if args.collapse {
        let (collapsed, report) = collapse_dangling_bridges(&net);
        if !report.removed.is_empty() {
            eprintln!(
                "collapsed {} dangling buses into their anchors ({} buses, {} lines remain)",
                report.removed.len(),
                collapsed.bus_count(),
                collapsed.line_count()
            );
        }
        net = collapsed;
    }
    Ok(net)
}

fn report_matpower(report: &MatpowerReport) {
    if !report.dropped_out_of_service.is_empty() {
        eprintln!(
            "matpower: dropped {} out-of-service branch rows",
            report.dropped_out_of_service.len()
        );
    }
    if !report.merged_parallel.is_empty() {
        eprintln!(
            "matpower: merged {} groups of parallel circuits",
            report.merged_parallel.len()
        );
    }
    if report.slack_mismatch.abs() > DEFAULT_TOLERANCE {
        eprintln!(
            "matpower: balanced the case with {:+.6} p.u. added at the slack bus",
            report.slack_mismatch
        );
    }
}

#[derive(Serialize)]
struct PartitionOutput<'a> {
    regions: &'a [BTreeSet<BusId>],
    bridges: &'a BTreeSet<LineId>,
    cells: &'a [BTreeSet<LineId>],
    cut_vertices: &'a BTreeSet<BusId>,
}

fn cmd_partition(net: &Network) -> Result<()> {
    let tp = irreducible_tree_partition(net);
    let cells = cell_decomposition(net, &tp);
    let out = PartitionOutput {
        regions: tp.regions(),
        bridges: tp.bridges(),
        cells: cells.cells(),
        cut_vertices: cells.cut_vertices(),
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn cmd_flow(net: &Network, zero_tol: f64) -> Result<()> {
    let solution = solve_dc_with(net, &net.injections())?;
    let mut out = String::from("line_id,from,to,susceptance,flow\n");
    for line in net.lines() {
        let mut flow = solution.flow(line.id).expect("every line is solved");
        if flow.abs() < zero_tol {
            flow = 0.0;
        }
        writeln!(
            out,
            "{},{},{},{:.12},{:.12}",
            line.id, line.from, line.to, line.susceptance, flow
        )?;
    }
    print!("{out}");
    eprintln!("total |flow| = {:.6} over {} lines", solution.total_absolute_flow(), net.line_count());
    Ok(())
}

/// Resolves `--injection`: full replacement when a file is given, stored
/// injections otherwise.
fn resolve_injections(net: &Network, args: &RuleArgs) -> Result<BTreeMap<BusId, f64>> {
    match &args.injection {
        Some(path) => read_injections(path, net),
        None => Ok(net.injections()),
    }
}

fn read_injections(path: &Path, net: &Network) -> Result<BTreeMap<BusId, f64>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut injections: BTreeMap<BusId, f64> =
        net.buses().iter().map(|b| (b.id, 0.0)).collect();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split(',');
        let bus_txt = parts.next().unwrap_or_default().trim();
        let val_txt = parts.next().unwrap_or_default().trim();
        let bus = match bus_txt.parse::<u32>() {
            Ok(v) => BusId(v),
            // Tolerate a single header row.
            Err(_) if idx == 0 => continue,
            Err(e) => bail!("line {}: bad bus id {bus_txt:?}: {e}", idx + 1),
        };
        let value: f64 = val_txt
            .parse()
            .with_context(|| format!("line {}: bad injection {val_txt:?}", idx + 1))?;
        match injections.get_mut(&bus) {
            Some(slot) => *slot = value,
            None => bail!("line {}: bus {bus} is not in the network", idx + 1),
        }
    }
    Ok(injections)
}

/// Parses `--rule`. `fallback` picks a default when the flag is absent:
/// uniform over generators, or over all buses when none are marked.
fn resolve_rule(
    net: &Network,
    spec: Option<&str>,
    fallback: bool,
) -> Result<Option<(BalanceRule, String)>> {
    let Some(spec) = spec else {
        if !fallback {
            return Ok(None);
        }
        return match BalanceRule::uniform_generators(net) {
            Ok(rule) => Ok(Some((rule, "uniform-gen".to_string()))),
            Err(BalanceError::NoGenerators) => {
                eprintln!("no generator buses marked; using the uniform-all balance rule");
                Ok(Some((BalanceRule::uniform_all(net)?, "uniform-all".to_string())))
            }
            Err(e) => Err(e.into()),
        };
    };
    let resolved = match spec {
        "uniform-gen" => (BalanceRule::uniform_generators(net)?, spec.to_string()),
        "uniform-all" => (BalanceRule::uniform_all(net)?, spec.to_string()),
        _ => match spec.strip_prefix("weights:") {
            Some(path) => (
                gridpart::balance::load_weights(Path::new(path), net)
                    .with_context(|| format!("loading balance weights from {path}"))?,
                spec.to_string(),
            ),
            None => bail!(
                "unknown balance rule {spec:?}; expected uniform-gen, uniform-all, \
                 or weights:<file>"
            ),
        },
    };
    Ok(Some(resolved))
}

/// Builds the lenient factor matrix under the resolved rule context.
fn build_matrix(
    net: &Network,
    args: &RuleArgs,
    fallback_rule: bool,
) -> Result<(LodfMatrix, BTreeMap<LineId, String>)> {
    let injections = resolve_injections(net, args)?;
    let resolved = resolve_rule(net, args.rule.as_deref(), fallback_rule)?;
    let (matrix, skipped) = match &resolved {
        Some((rule, name)) => {
            lodf_matrix_lenient(net, Some((&injections, rule, name.as_str())))?
        }
        None => lodf_matrix_lenient(net, None)?,
    };
    for (line, reason) in &skipped {
        eprintln!("bridge column {line} skipped: {reason}");
    }
    Ok((matrix, skipped))
}

fn matrix_csv(matrix: &LodfMatrix, zero_tol: f64) -> String {
    let order = matrix.line_order();
    let mut out = String::from("line");
    for e in order {
        let _ = write!(out, ",{e}");
    }
    out.push('\n');
    for &ehat in order {
        let _ = write!(out, "{ehat}");
        for &e in order {
            match matrix.get(e, ehat) {
                None => out.push(','),
                Some(v) => {
                    let shown = if v.abs() < zero_tol { 0.0 } else { v };
                    let _ = write!(out, ",{shown:.12}");
                }
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct KindsSidecar<'a> {
    column_kinds: BTreeMap<LineId, ColumnKind>,
    skipped: &'a BTreeMap<LineId, String>,
    /// Balance rule behind the bridge columns, when any were computed.
    rule: Option<&'a str>,
}

fn cmd_lodf(
    net: &Network,
    rule: &RuleArgs,
    threshold: f64,
    out: Option<&Path>,
    kinds: Option<&Path>,
) -> Result<()> {
    let (matrix, skipped) = build_matrix(net, rule, false)?;
    let csv = matrix_csv(&matrix, threshold);
    let sidecar = KindsSidecar {
        column_kinds: matrix.column_kinds(),
        skipped: &skipped,
        rule: matrix.context().map(|c| c.rule_name.as_str()),
    };
    let sidecar_json = serde_json::to_string_pretty(&sidecar)?;
    match out {
        Some(path) => {
            fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote factor matrix to {}", path.display());
            let kinds_path = kinds
                .map(Path::to_path_buf)
                .unwrap_or_else(|| path.with_extension("kinds.json"));
            fs::write(&kinds_path, sidecar_json)
                .with_context(|| format!("writing {}", kinds_path.display()))?;
            eprintln!("wrote column kinds to {}", kinds_path.display());
        }
        None => {
            match kinds {
                Some(path) => {
                    fs::write(path, sidecar_json)
                        .with_context(|| format!("writing {}", path.display()))?;
                    eprintln!("wrote column kinds to {}", path.display());
                }
                None => eprintln!("column kinds: {sidecar_json}"),
            }
            print!("{csv}");
        }
    }
    Ok(())
}

fn cmd_verify(net: &Network, max_n: u32, cases: usize, seed: u64) -> Result<ExitCode> {
    let started = Instant::now();
    let mut overall_max = 0.0_f64;
    let mut overall_pairs = 0_usize;

    if net.bus_count() <= forest::MAX_BUSES && net.line_count() <= forest::MAX_LINES {
        let (pairs, max_diff) = verify_one(net)?;
        overall_max = overall_max.max(max_diff);
        overall_pairs += pairs;
        println!(
            "input network (n={}, m={}): {} non-bridge pairs, max |matrix - oracle| = {:.3e}",
            net.bus_count(),
            net.line_count(),
            pairs,
            max_diff
        );
    } else {
        println!(
            "input network (n={}, m={}) exceeds the exact oracle bounds (n <= {}, m <= {}); \
             checking the random suite only",
            net.bus_count(),
            net.line_count(),
            forest::MAX_BUSES,
            forest::MAX_LINES
        );
    }

    let max_n = max_n.clamp(3, forest::MAX_BUSES as u32);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut suite_pairs = 0_usize;
    let mut suite_max = 0.0_f64;
    for _ in 0..cases {
        let n = rng.random_range(3..=max_n);
        let simple_cap = (n * (n - 1) / 2) as usize;
        let room = simple_cap.min(forest::MAX_LINES) - (n as usize - 1);
        let extra = rng.random_range(0..=room.min(3));
        let shape = random_connected(n, extra, &mut rng);
        let case = with_random_susceptances(&shape, 0.5, 5.0, &mut rng);
        let (pairs, max_diff) = verify_one(&case)?;
        suite_pairs += pairs;
        suite_max = suite_max.max(max_diff);
    }
    overall_max = overall_max.max(suite_max);
    overall_pairs += suite_pairs;
    println!(
        "random suite: {} graphs with n in [3,{}]: {} non-bridge pairs, \
         max |matrix - oracle| = {:.3e}",
        cases, max_n, suite_pairs, suite_max
    );

    let ok = overall_max <= DEFAULT_TOLERANCE && overall_pairs > 0;
    println!(
        "{}: {} pairs checked, max discrepancy {:.3e} (tolerance {:.0e}, {:.2}s)",
        if ok { "PASS" } else { "FAIL" },
        overall_pairs,
        overall_max,
        DEFAULT_TOLERANCE,
        started.elapsed().as_secs_f64()
    );
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

/// Compares every non-bridge factor of one network across three routes:
/// float matrix, exact forest enumeration, exact elimination.
fn verify_one(net: &Network) -> Result<(usize, f64)> {
    let ensemble = ForestEnsemble::new(net)?;
    let bridges = find_bridges(net);
    let mut pairs = 0_usize;
    let mut max_diff = 0.0_f64;
    for e in net.lines() {
        if bridges.contains(&e.id) {
            continue;
        }
        let column = lodf_nonbridge(net, e.id)?;
        let exact = forest::lodf_exact_column(net, e.id)?;
        for ehat in net.lines() {
            if ehat.id == e.id {
                continue;
            }
            let k_matrix = column[&ehat.id];
            let k_forest = ensemble
                .lodf(net, e.id, ehat.id)?
                .to_f64()
                .context("oracle value does not fit in an f64")?;
            let k_elim = exact[&ehat.id]
                .to_f64()
                .context("elimination value does not fit in an f64")?;
            max_diff = max_diff
                .max((k_matrix - k_forest).abs())
                .max((k_matrix - k_elim).abs());
            pairs += 1;
        }
    }
    Ok((pairs, max_diff))
}

fn cmd_influence(
    net: &Network,
    rule: &RuleArgs,
    threshold: f64,
    dot: Option<&Path>,
    json: Option<&Path>,
) -> Result<()> {
    let (matrix, _skipped) = build_matrix(net, rule, false)?;
    let graph = influence_graph(&matrix, threshold);
    let tp = irreducible_tree_partition(net);
    let cross = cross_region_edges(&graph, net, &tp);
    eprintln!(
        "influence graph at threshold {}: {} lines, {} edges ({} across regions)",
        threshold,
        net.line_count(),
        graph.edge_count(),
        cross.len()
    );
    let mut wrote = false;
    if let Some(path) = dot {
        fs::write(path, graph.to_dot(net))
            .with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote DOT to {}", path.display());
        wrote = true;
    }
    if let Some(path) = json {
        fs::write(path, graph.to_json())
            .with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote JSON to {}", path.display());
        wrote = true;
    }
    if !wrote {
        println!("{}", graph.to_json());
    }
    Ok(())
}

fn cmd_switch(
    net: &Network,
    rule: &RuleArgs,
    off: &[u32],
    threshold: f64,
    changes: Option<&Path>,
) -> Result<()> {
    let off: Vec<LineId> = off.iter().map(|&id| LineId(id)).collect();
    let injections = resolve_injections(net, rule)?;
    let (balance_rule, _name) = resolve_rule(net, rule.rule.as_deref(), true)?
        .expect("fallback always yields a rule");
    let evaluation = evaluate_switch(net, &injections, &off, &balance_rule, threshold)?;
    if let Some(path) = changes {
        let before = solve_dc_with(net, &injections)?;
        let after_net = net.without_lines(&off).expect("evaluate_switch checked removal");
        let after = solve_dc_with(&after_net, &injections)?;
        let mut out = String::from("line_id,flow_before,flow_after,normalized_change\n");
        for line in after_net.lines() {
            let b = before.flow(line.id).expect("line exists before");
            let a = after.flow(line.id).expect("line exists after");
            match evaluation.flow_changes.get(&line.id) {
                Some(change) => {
                    writeln!(out, "{},{:.12},{:.12},{:.12}", line.id, b, a, change)?
                }
                None => writeln!(out, "{},{:.12},{:.12},undefined", line.id, b, a)?,
            }
        }
        fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote per-line flow changes to {}", path.display());
    }
    println!("{}", serde_json::to_string_pretty(&evaluation)?);
    Ok(())
}

fn cmd_switch_search(net: &Network, k: usize, top: usize) -> Result<()> {
    if !(1..=3).contains(&k) {
        bail!("--k must be 1, 2, or 3 (got {k})");
    }
    let candidates = enumerate_bridging_cuts(net, k);
    eprintln!(
        "{} candidate cuts of size <= {} on {} lines",
        candidates.len(),
        k,
        net.line_count()
    );
    let shown = if top == 0 { candidates.len() } else { top.min(candidates.len()) };
    println!("lines,region_count,region_sizes,balance");
    for cut in &candidates[..shown] {
        let lines = cut.lines.iter().map(ToString::to_string).collect::<Vec<_>>().join("+");
        let sizes =
            cut.region_sizes.iter().map(ToString::to_string).collect::<Vec<_>>().join("+");
        println!("{lines},{},{sizes},{:.6}", cut.region_count, cut.balance);
    }
    Ok(())
}
