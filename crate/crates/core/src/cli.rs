//! Command-line front end.
//!
//! Three subcommands: `regularize` decomposes graph instances (directed,
//! undirected via `--undirected`, or `k`-partite — told apart by the input
//! header), `cube` decomposes grid subsets of the unit cube, and `verify`
//! runs the seeded property suites. Exit codes: 0 when everything asked for
//! was validated with exact certificates, 2 when validated in sample mode
//! (regularity not certified), 1 on errors or failed validation.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::instances::{
    decompose_cube, decompose_digraph, decompose_kpartite, decompose_undirected,
    digraph_sr_system, grid_set, grid_sr_system, header_field_count, kpartite_sr_system,
    parse_digraph, parse_grid, parse_kpartite, CubeSemiRing,
};
use crate::measure::MSet;
use crate::partition::Partition;
use crate::rational::{parse_rational, require_unit_interval, Rat};
use crate::regularity::{regularize, Bounding, EngineConfig, Mode};
use crate::report::{driver_report, plain_report, Report, RunMeta};
use crate::verify::{claim_k_root_check, default_cases, run_suite, SUITES};

#[derive(Parser, Debug)]
#[command(
    name = "regulens",
    about = "Regularity decompositions of graphs and grid sets, with exact certificates",
    version
)]
pub struct CliArgs {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decompose directed, undirected or k-partite graph instances.
    Regularize(RegularizeArgs),
    /// Decompose grid-discretized subsets of the unit cube.
    Cube(CubeArgs),
    /// Run the property suites (or the empirical root-exponent check).
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Sample,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BoundingArg {
    ProductFamily,
    Equitable,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CubeSemiRingArg {
    Sets,
    Intervals,
}

#[derive(Args, Debug)]
pub struct CommonRunArgs {
    /// Regularity parameter in (0,1): `a/b` or a decimal, parsed exactly.
    #[arg(long)]
    pub eps: String,
    /// Witness search: exhaustive or seeded sampling.
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    pub mode: ModeArg,
    /// Candidates drawn per cell in sample mode.
    #[arg(long, default_value_t = 256)]
    pub samples: u32,
    /// Seed for all randomized behavior.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Abort after this many refinement rounds.
    #[arg(long)]
    pub max_iterations: Option<u64>,
    /// Exact-mode cap on the per-cell sub-cell search space.
    #[arg(long, default_value_t = 1 << 22)]
    pub witness_cap: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
}

#[derive(Args, Debug)]
pub struct RegularizeArgs {
    #[command(flatten)]
    pub common: CommonRunArgs,
    /// How to re-coarsen after each refinement; `equitable` runs the full
    /// instance-level driver with validated theorem conditions.
    #[arg(long, value_enum, default_value_t = BoundingArg::ProductFamily)]
    pub bounding: BoundingArg,
    /// Treat digraph inputs as undirected: symmetrize, validate closure,
    /// count unordered index sets.
    #[arg(long)]
    pub undirected: bool,
    /// Input files (digraph `k n` or k-partite `k n_1 ... n_k` headers).
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CubeArgs {
    #[command(flatten)]
    pub common: CommonRunArgs,
    /// Axis classes: arbitrary measurable sets or intervals.
    #[arg(long, value_enum, default_value_t = CubeSemiRingArg::Sets)]
    pub semiring: CubeSemiRingArg,
    /// Input files (grid `k m` header).
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Suites to run (default: all).
    #[arg(long = "suite")]
    pub suites: Vec<String>,
    /// Cases per suite (default: per-suite).
    #[arg(long)]
    pub cases: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Run the empirical root-exponent probe instead of the suites.
    /// Its findings are informational and never fail the run.
    #[arg(long)]
    pub claim_k_root: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
}

/// Rendered output plus the exit code.
pub struct CliOutcome {
    pub output: String,
    pub output_path: Option<PathBuf>,
    pub exit_code: i32,
}

fn engine_config(common: &CommonRunArgs, eps: &Rat) -> EngineConfig {
    EngineConfig {
        eps: eps.clone(),
        mode: match common.mode {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Sample => Mode::Sample,
        },
        sample_count: common.samples,
        seed: common.seed,
        max_iterations: common.max_iterations,
        coordinate_subset_cap: common.witness_cap,
    }
}

fn run_meta(subcommand: &str, inputs: &[PathBuf], common: &CommonRunArgs, eps: &Rat, bounding: &str) -> RunMeta {
    RunMeta {
        subcommand: subcommand.into(),
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        eps: eps.clone(),
        mode: match common.mode {
            ModeArg::Exact => "exact".into(),
            ModeArg::Sample => "sample".into(),
        },
        samples: common.samples,
        seed: common.seed,
        bounding: bounding.into(),
        format: match common.format {
            FormatArg::Json => "json".into(),
            FormatArg::Text => "text".into(),
        },
    }
}

fn render(report: &Report, format: FormatArg) -> String {
    match format {
        FormatArg::Json => report.to_json(),
        FormatArg::Text => report.to_text(),
    }
}

fn read_inputs(paths: &[PathBuf]) -> Result<Vec<(String, String)>> {
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p)?;
            Ok((p.display().to_string(), text))
        })
        .collect()
}

fn driver_exit(validated: bool, certified: bool) -> i32 {
    match (validated, certified) {
        (true, true) => 0,
        (true, false) => 2,
        (false, _) => 1,
    }
}

/// The `regularize` subcommand.
pub fn run_regularize(args: &RegularizeArgs) -> Result<CliOutcome> {
    let eps = parse_rational(&args.common.eps)?;
    require_unit_interval(&eps, "eps")?;
    let cfg = engine_config(&args.common, &eps);
    let files = read_inputs(&args.inputs)?;
    let bounding_name = match args.bounding {
        BoundingArg::ProductFamily => "product-family",
        BoundingArg::Equitable => "equitable",
        BoundingArg::None => "none",
    };
    let meta = run_meta("regularize", &args.inputs, &args.common, &eps, bounding_name);

    let kpartite = header_field_count(&files[0].1) >= 3;
    let (report, exit_code) = if kpartite {
        let graphs: Vec<_> = files
            .iter()
            .map(|(id, text)| Ok((id.clone(), parse_kpartite(text)?)))
            .collect::<Result<Vec<_>>>()?;
        if args.undirected {
            return Err(Error::Validation(
                "--undirected applies to digraph inputs".into(),
            ));
        }
        let points: Vec<(String, u64)> = graphs
            .iter()
            .map(|(id, g)| (id.clone(), g.edge_count() as u64))
            .collect();
        match args.bounding {
            BoundingArg::Equitable => {
                let data = decompose_kpartite(&graphs, &eps, &cfg)?;
                let (sys, _) = kpartite_sr_system(&graphs[0].1)?;
                let exit = driver_exit(data.conditions.validated, data.run.certified);
                (driver_report(&sys, &data, &points, &meta), exit)
            }
            _ => {
                let (sys, _) = kpartite_sr_system(&graphs[0].1)?;
                let sets: Vec<(String, MSet)> = graphs
                    .iter()
                    .map(|(id, g)| Ok((id.clone(), kpartite_sr_system(g)?.1)))
                    .collect::<Result<_>>()?;
                let bounding = plain_bounding(args.bounding);
                let p0 = Partition::trivial(sys.semiring.clone())?;
                let run = regularize(&sys, &sets, &p0, &cfg, &bounding)?;
                let exit = if run.certified { 0 } else { 2 };
                (plain_report(&sys, &run, &points, &meta), exit)
            }
        }
    } else {
        let mut graphs: Vec<_> = files
            .iter()
            .map(|(id, text)| Ok((id.clone(), parse_digraph(text)?)))
            .collect::<Result<Vec<_>>>()?;
        if args.undirected {
            for (_, g) in graphs.iter_mut() {
                *g = g.symmetrized()?;
            }
        }
        let points: Vec<(String, u64)> = graphs
            .iter()
            .map(|(id, g)| (id.clone(), g.edge_count() as u64))
            .collect();
        match args.bounding {
            BoundingArg::Equitable => {
                let data = if args.undirected {
                    decompose_undirected(&graphs, &eps, &cfg)?
                } else {
                    decompose_digraph(&graphs, &eps, &cfg)?
                };
                let (sys, _) = digraph_sr_system(&graphs[0].1)?;
                let exit = driver_exit(data.conditions.validated, data.run.certified);
                (driver_report(&sys, &data, &points, &meta), exit)
            }
            _ => {
                let (sys, _) = digraph_sr_system(&graphs[0].1)?;
                let sets: Vec<(String, MSet)> = graphs
                    .iter()
                    .map(|(id, g)| Ok((id.clone(), digraph_sr_system(g)?.1)))
                    .collect::<Result<_>>()?;
                let bounding = plain_bounding(args.bounding);
                let p0 = Partition::trivial(sys.semiring.clone())?;
                let run = regularize(&sys, &sets, &p0, &cfg, &bounding)?;
                let exit = if run.certified { 0 } else { 2 };
                (plain_report(&sys, &run, &points, &meta), exit)
            }
        }
    };
    Ok(CliOutcome {
        output: render(&report, args.common.format),
        output_path: args.common.output.clone(),
        exit_code,
    })
}

fn plain_bounding(arg: BoundingArg) -> Bounding {
    match arg {
        BoundingArg::ProductFamily => Bounding::ProductFamily,
        BoundingArg::None => Bounding::None,
        BoundingArg::Equitable => unreachable!("equitable runs go through the drivers"),
    }
}

/// The `cube` subcommand.
pub fn run_cube(args: &CubeArgs) -> Result<CliOutcome> {
    let eps = parse_rational(&args.common.eps)?;
    require_unit_interval(&eps, "eps")?;
    let cfg = engine_config(&args.common, &eps);
    let files = read_inputs(&args.inputs)?;
    let subsets: Vec<_> = files
        .iter()
        .map(|(id, text)| Ok((id.clone(), parse_grid(text)?)))
        .collect::<Result<Vec<_>>>()?;
    let semiring = match args.semiring {
        CubeSemiRingArg::Sets => CubeSemiRing::Sets,
        CubeSemiRingArg::Intervals => CubeSemiRing::Intervals,
    };
    let bounding_name = match args.semiring {
        CubeSemiRingArg::Sets => "equitable",
        CubeSemiRingArg::Intervals => "equitable",
    };
    let meta = run_meta("cube", &args.inputs, &args.common, &eps, bounding_name);
    let points: Vec<(String, u64)> = subsets
        .iter()
        .map(|(id, l)| (id.clone(), l.cell_count() as u64))
        .collect();
    let data = decompose_cube(&subsets, &eps, &cfg, semiring)?;
    let sys = grid_sr_system(subsets[0].1.k(), subsets[0].1.m(), semiring)?;
    // sanity: the system must measure the inputs it reports on
    for (_, l) in &subsets {
        let _ = grid_set(&sys, l)?;
    }
    let exit = driver_exit(data.conditions.validated, data.run.certified);
    let report = driver_report(&sys, &data, &points, &meta);
    Ok(CliOutcome {
        output: render(&report, args.common.format),
        output_path: args.common.output.clone(),
        exit_code: exit,
    })
}

// ----------------------------------------------------------------------
// Verify subcommand.
// ----------------------------------------------------------------------

#[derive(Serialize)]
struct VerifyReport {
    config: VerifyConfigEcho,
    suites: Vec<SuiteEntry>,
    claim_k_root: Option<ClaimEntry>,
    all_passed: bool,
}

#[derive(Serialize)]
struct VerifyConfigEcho {
    subcommand: String,
    suites: Vec<String>,
    cases: Option<u64>,
    seed: u64,
}

#[derive(Serialize)]
struct SuiteEntry {
    name: String,
    cases: u64,
    passes: u64,
    failures: u64,
    first_counterexample: Option<String>,
}

#[derive(Serialize)]
struct ClaimEntry {
    cases: u64,
    premise_held: u64,
    violations: u64,
    first_violation: Option<String>,
}

/// The `verify` subcommand.
pub fn run_verify(args: &VerifyArgs) -> Result<CliOutcome> {
    let chosen: Vec<String> = if args.suites.is_empty() {
        SUITES.iter().map(|s| s.to_string()).collect()
    } else {
        args.suites.clone()
    };

    let mut suites = Vec::new();
    let mut claim = None;
    let mut all_passed = true;
    if args.claim_k_root {
        let cases = args.cases.unwrap_or(50);
        let r = claim_k_root_check(cases, args.seed)?;
        claim = Some(ClaimEntry {
            cases: r.cases,
            premise_held: r.premise_held,
            violations: r.violations,
            first_violation: r.first_violation,
        });
    } else {
        for name in &chosen {
            let cases = args.cases.unwrap_or_else(|| default_cases(name));
            let report = run_suite(name, cases, args.seed)?;
            all_passed &= report.all_passed();
            suites.push(SuiteEntry {
                name: report.name,
                cases: report.cases,
                passes: report.passes,
                failures: report.failures,
                first_counterexample: report.first_counterexample,
            });
        }
    }

    let report = VerifyReport {
        config: VerifyConfigEcho {
            subcommand: "verify".into(),
            suites: if args.claim_k_root { vec!["claim-k-root".into()] } else { chosen },
            cases: args.cases,
            seed: args.seed,
        },
        suites,
        claim_k_root: claim,
        all_passed,
    };
    let output = match args.format {
        FormatArg::Json => {
            let mut s = serde_json::to_string_pretty(&report).expect("verify report serializes");
            s.push('\n');
            s
        }
        FormatArg::Text => {
            let mut out = String::new();
            use std::fmt::Write as _;
            for s in &report.suites {
                let _ = writeln!(
                    out,
                    "suite {}: {}/{} passed{}",
                    s.name,
                    s.passes,
                    s.cases,
                    match &s.first_counterexample {
                        Some(ce) => format!("; first counterexample: {ce}"),
                        None => String::new(),
                    }
                );
            }
            if let Some(c) = &report.claim_k_root {
                let _ = writeln!(
                    out,
                    "root-exponent probe: {} cases, premise held {}, violations {}{}",
                    c.cases,
                    c.premise_held,
                    c.violations,
                    match &c.first_violation {
                        Some(v) => format!("; first: {v}"),
                        None => String::new(),
                    }
                );
            }
            let _ = writeln!(out, "all passed: {}", report.all_passed);
            out
        }
    };
    Ok(CliOutcome {
        output,
        output_path: args.output.clone(),
        exit_code: if all_passed { 0 } else { 1 },
    })
}

/// Dispatch a parsed command line; returns the process exit code.
pub fn run(cli: CliArgs) -> i32 {
    let result = match &cli.command {
        Command::Regularize(args) => run_regularize(args),
        Command::Cube(args) => run_cube(args),
        Command::Verify(args) => run_verify(args),
    };
    match result {
        Ok(outcome) => {
            match &outcome.output_path {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &outcome.output) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return 1;
                    }
                }
                None => {
                    use std::io::Write;
                    // a closed pipe downstream is not our error
                    let mut stdout = std::io::stdout().lock();
                    let _ = stdout.write_all(outcome.output.as_bytes());
                    let _ = stdout.flush();
                }
            }
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Capacity(_)) {
                eprintln!("hint: retry with --mode sample or raise --witness-cap");
            }
            1
        }
    }
}
