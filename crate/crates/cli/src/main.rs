//! `malg` — command-line front end for the measure-algebra workbench.
//!
//! Every subcommand reads rational literals, runs exactly (floats only in
//! the spectral iteration), echoes the seed, and can emit a JSON report
//! with sorted keys: identical argv + seed give byte-identical output.

mod schemas;

use clap::{Args, Parser, Subcommand};
use malg_core::backforth::{run_back_and_forth, DloStructure, RadoStructure};
use malg_core::bernoulli::{
    generator_iets, independence_check, joint_type_factorization, Coord, CylinderSet,
};
use malg_core::freegroup::{ball, markov_operator};
use malg_core::homog::{back_and_forth_malg, match_partitions, transport_map};
use malg_core::kesten::kesten_certificate;
use malg_core::logic::{eval_at_depth, eval_bounds, modulus, EvalOptions, Formula, Trend};
use malg_core::malg::MSet;
use malg_core::rat::{fmt_q, parse_q, Q};
use malg_core::types::{
    distance_to_type, orbit_distance, qf_type, type_space_net, TypeVector,
};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::io::Write;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "malg",
    about = "Exact workbench for the measure algebra of the unit interval",
    after_help = "Literals: sets are unions of half-open rational intervals, e.g. \
\"[0,1/3)u[1/2,1)\"; tuples join set literals with ';'. Cylinder sets are \
\"coords|truth-indices\", e.g. \"0:e,0:a|1,3\" (coordinate level:word, word \
letters a,b with ' for inverse, e for the identity)."
)]
struct Cli {
    /// Seed for every seeded construction; echoed in all reports
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Emit a JSON report instead of human-readable text
    #[arg(long, global = true)]
    json: bool,
    /// Print the JSON schemas of all reports and exit
    #[arg(long)]
    schema: bool,
    /// Print the module-to-topic table and exit
    #[arg(long)]
    paper_map: bool,
    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a continuous-logic formula at a dyadic depth
    Eval(EvalArgs),
    /// Quantifier-free type of a tuple of sets
    Type(TypeArgs),
    /// Orbit distance between two tuples or type vectors
    Dist(DistArgs),
    /// Construct an exchange moving one tuple onto another
    Homog(HomogArgs),
    /// Run the discrete back-and-forth engine
    Backforth(BackforthArgs),
    /// Spectral certificate for the walk on the free group
    Kesten(KestenArgs),
    /// Bernoulli-shift checks on cylinder sets
    #[command(subcommand)]
    Bernoulli(BernoulliCmd),
    /// Finite epsilon-net of the space of types
    Net(NetArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// Formula text, e.g. "sup x . inf y . |m(x /\ y) - 1/2 * m(x)|"
    #[arg(long)]
    formula: String,
    /// Quantifier depth: ranges are unions of length-2^-d dyadic atoms
    #[arg(long, default_value_t = 2)]
    depth: usize,
    /// Additional depths to tabulate, comma-separated, e.g. 1,2,3
    #[arg(long)]
    depths: Option<String>,
    /// Bind a free variable to a set literal, e.g. x=[0,1/2); repeatable
    #[arg(long = "bind")]
    bindings: Vec<String>,
    /// Report the per-variable Lipschitz constants
    #[arg(long)]
    show_modulus: bool,
    /// Depth cap override
    #[arg(long, default_value_t = 4)]
    depth_cap: usize,
}

#[derive(Args)]
struct TypeArgs {
    /// Tuple of set literals separated by ';'
    #[arg(long)]
    tuple: String,
}

#[derive(Args)]
struct DistArgs {
    /// Left tuple of set literals
    #[arg(long)]
    left: Option<String>,
    /// Right tuple of set literals
    #[arg(long)]
    right: Option<String>,
    /// Left type as JSON {"n":..,"weights":{..}} (alternative to --left)
    #[arg(long)]
    left_type: Option<String>,
    /// Right type as JSON (alternative to --right)
    #[arg(long)]
    right_type: Option<String>,
}

#[derive(Args)]
struct HomogArgs {
    /// Left tuple of set literals
    #[arg(long)]
    left: String,
    /// Right tuple of set literals
    #[arg(long)]
    right: String,
    /// match (exact partitions), transport (optimal), backforth (staged)
    #[arg(long, default_value = "transport")]
    mode: String,
    /// Defect budget for transport/backforth
    #[arg(long, default_value = "1/100")]
    epsilon: String,
    /// Stages for backforth
    #[arg(long, default_value_t = 4)]
    stages: usize,
}

#[derive(Args)]
struct BackforthArgs {
    /// rado (BIT graph vs seeded permuted copy) or dlo (two seeded orders)
    #[arg(long)]
    structure: String,
    /// Number of va-et-vient stages
    #[arg(long, default_value_t = 20)]
    stages: usize,
    /// Window size of the seeded permutation (rado)
    #[arg(long, default_value_t = 128)]
    window: usize,
}

#[derive(Args)]
struct KestenArgs {
    /// Ball radius (up to 12)
    #[arg(long, default_value_t = 6)]
    radius: usize,
    /// Successive-change tolerance of the spectral iteration
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 200_000)]
    max_iters: usize,
    /// Run the non-certified minimax displacement probe
    #[arg(long)]
    probe: bool,
    /// Write the Markov operator in coordinate-list form to this file
    #[arg(long)]
    export_operator: Option<String>,
}

#[derive(Subcommand)]
enum BernoulliCmd {
    /// Check mu(A ∩ B) = mu(A)·mu(B)
    Independence(IndependenceArgs),
    /// Check the joint type of two single-column tuples factors
    Factorization(FactorizationArgs),
    /// Export the shift generators as dyadic exchanges on a window
    Generators(GeneratorsArgs),
}

#[derive(Args)]
struct IndependenceArgs {
    /// First cylinder set literal, e.g. "0:e|1"
    #[arg(long)]
    a: String,
    /// Second cylinder set literal
    #[arg(long)]
    b: String,
}

#[derive(Args)]
struct FactorizationArgs {
    /// Tuple of cylinder-set literals separated by ';' (one group column)
    #[arg(long)]
    left: String,
    /// Tuple of cylinder-set literals (a different group column)
    #[arg(long)]
    right: String,
}

#[derive(Args)]
struct GeneratorsArgs {
    /// Window coordinates, comma-separated, e.g. "0:e,0:a"
    #[arg(long)]
    window: String,
}

#[derive(Args)]
struct NetArgs {
    /// Type arity
    #[arg(long)]
    arity: usize,
    /// Covering radius (rational)
    #[arg(long)]
    epsilon: String,
}

enum CliError {
    /// Malformed input; names the offending flag. Exit code 2.
    Input { flag: &'static str, msg: String },
    /// An operation failed semantically. Exit code 3.
    Module(String),
}

impl CliError {
    fn input(flag: &'static str, msg: impl ToString) -> CliError {
        CliError::Input {
            flag,
            msg: msg.to_string(),
        }
    }
}

type CliResult = Result<Value, CliError>;

/// Floats print with 12 significant digits everywhere.
fn f12(x: f64) -> Value {
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float");
    Value::Number(serde_json::Number::from_f64(rounded).expect("finite"))
}

fn parse_tuple(flag: &'static str, text: &str) -> Result<Vec<MSet>, CliError> {
    text.split(';')
        .map(|s| MSet::parse(s.trim()).map_err(|e| CliError::input(flag, e)))
        .collect()
}

fn parse_cyl_tuple(flag: &'static str, text: &str) -> Result<Vec<CylinderSet>, CliError> {
    text.split(';')
        .map(|s| CylinderSet::parse(s.trim()).map_err(|e| CliError::input(flag, e)))
        .collect()
}

fn parse_rat(flag: &'static str, text: &str) -> Result<Q, CliError> {
    parse_q(text).map_err(|e| CliError::input(flag, e))
}

fn run_eval(args: &EvalArgs, seed: u64) -> CliResult {
    let formula =
        Formula::parse(&args.formula).map_err(|e| CliError::input("--formula", e))?;
    let mut env: BTreeMap<String, MSet> = BTreeMap::new();
    for b in &args.bindings {
        let (name, lit) = b
            .split_once('=')
            .ok_or_else(|| CliError::input("--bind", format!("expected var=literal, got {b:?}")))?;
        let set = MSet::parse(lit).map_err(|e| CliError::input("--bind", e))?;
        env.insert(name.trim().to_string(), set);
    }
    let opts = EvalOptions {
        depth_cap: args.depth_cap,
    };
    let value = eval_at_depth(&formula, &env, args.depth, &opts)
        .map_err(|e| CliError::Module(e.to_string()))?;
    let mut report = json!({
        "command": "eval",
        "seed": seed,
        "formula": args.formula,
        "depth": args.depth,
        "value": fmt_q(&value),
        "free_vars": formula.free_vars().into_iter().collect::<Vec<_>>(),
    });
    if args.show_modulus {
        let m: BTreeMap<String, String> = modulus(&formula)
            .into_iter()
            .map(|(k, v)| (k, fmt_q(&v)))
            .collect();
        report["modulus"] = json!(m);
    }
    if let Some(list) = &args.depths {
        let depths: Vec<usize> = list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|e| CliError::input("--depths", e))
            })
            .collect::<Result<_, _>>()?;
        let bounds = eval_bounds(&formula, &env, &depths, &opts)
            .map_err(|e| CliError::Module(e.to_string()))?;
        report["depths"] = json!(bounds
            .values
            .iter()
            .map(|(d, v)| json!({"depth": d, "value": fmt_q(v)}))
            .collect::<Vec<_>>());
        report["trend"] = json!(match bounds.trend {
            Trend::Constant => "constant",
            Trend::NonIncreasing => "non-increasing",
            Trend::NonDecreasing => "non-decreasing",
            Trend::Mixed => "mixed",
        });
        report["halving"] = json!(bounds.halving);
        report["bounds"] = json!({
            "lower": fmt_q(&bounds.bounds.lower),
            "upper": fmt_q(&bounds.bounds.upper),
        });
    }
    Ok(report)
}

fn run_type(args: &TypeArgs, seed: u64) -> CliResult {
    let tuple = parse_tuple("--tuple", &args.tuple)?;
    let p = qf_type(&tuple).map_err(|e| CliError::Module(e.to_string()))?;
    let mut report = p.to_json();
    report["command"] = json!("type");
    report["seed"] = json!(seed);
    Ok(report)
}

fn run_dist(args: &DistArgs, seed: u64) -> CliResult {
    let left_tuple = match &args.left {
        Some(t) => Some(parse_tuple("--left", t)?),
        None => None,
    };
    let left = match (&left_tuple, &args.left_type) {
        (Some(tuple), None) => qf_type(tuple).map_err(|e| CliError::Module(e.to_string()))?,
        (None, Some(j)) => {
            let v: Value =
                serde_json::from_str(j).map_err(|e| CliError::input("--left-type", e))?;
            TypeVector::from_json(&v).map_err(|e| CliError::input("--left-type", e))?
        }
        _ => {
            return Err(CliError::input(
                "--left",
                "provide exactly one of --left or --left-type",
            ))
        }
    };
    let (right, right_via_type) = match (&args.right, &args.right_type) {
        (Some(t), None) => {
            let tuple = parse_tuple("--right", t)?;
            (
                qf_type(&tuple).map_err(|e| CliError::Module(e.to_string()))?,
                false,
            )
        }
        (None, Some(j)) => {
            let v: Value =
                serde_json::from_str(j).map_err(|e| CliError::input("--right-type", e))?;
            (
                TypeVector::from_json(&v).map_err(|e| CliError::input("--right-type", e))?,
                true,
            )
        }
        _ => {
            return Err(CliError::input(
                "--right",
                "provide exactly one of --right or --right-type",
            ))
        }
    };
    // tuple against a bare type: the definable distance predicate route
    let d = match (&left_tuple, right_via_type) {
        (Some(tuple), true) => {
            distance_to_type(tuple, &right).map_err(|e| CliError::Module(e.to_string()))?
        }
        _ => orbit_distance(&left, &right).map_err(|e| CliError::Module(e.to_string()))?,
    };
    Ok(json!({
        "command": "dist",
        "seed": seed,
        "arity": left.arity(),
        "distance": fmt_q(&d),
        "left_type": left.to_json(),
        "right_type": right.to_json(),
    }))
}

fn run_homog(args: &HomogArgs, seed: u64) -> CliResult {
    let left = parse_tuple("--left", &args.left)?;
    let right = parse_tuple("--right", &args.right)?;
    let eps = parse_rat("--epsilon", &args.epsilon)?;
    match args.mode.as_str() {
        "match" => {
            let t = match_partitions(&left, &right)
                .map_err(|e| CliError::Module(e.to_string()))?;
            let achieved: Q = left
                .iter()
                .zip(&right)
                .map(|(a, b)| t.apply(a).dist(b))
                .sum();
            Ok(json!({
                "command": "homog",
                "seed": seed,
                "mode": "match",
                "iet": t.to_json(),
                "achieved": fmt_q(&achieved),
            }))
        }
        "transport" => {
            let out = transport_map(&left, &right, &eps)
                .map_err(|e| CliError::Module(e.to_string()))?;
            Ok(json!({
                "command": "homog",
                "seed": seed,
                "mode": "transport",
                "iet": out.iet.to_json(),
                "achieved": fmt_q(&out.achieved),
            }))
        }
        "backforth" => {
            let out = back_and_forth_malg(&left, &right, &[], &eps, args.stages)
                .map_err(|e| CliError::Module(e.to_string()))?;
            Ok(json!({
                "command": "homog",
                "seed": seed,
                "mode": "backforth",
                "iet": out.iet.to_json(),
                "achieved": fmt_q(&out.defect),
                "stages": out.stages.iter().map(|s| json!({
                    "element": s.element.literal(),
                    "budget": fmt_q(&s.budget),
                    "defect": fmt_q(&s.defect),
                })).collect::<Vec<_>>(),
            }))
        }
        other => Err(CliError::input(
            "--mode",
            format!("unknown mode {other:?} (match|transport|backforth)"),
        )),
    }
}

fn run_backforth(args: &BackforthArgs, seed: u64) -> CliResult {
    let (pairs, size) = match args.structure.as_str() {
        "rado" => {
            let left = RadoStructure::identity();
            let right = RadoStructure::permuted(seed, args.window);
            let iso = run_back_and_forth(&left, &right, args.stages)
                .map_err(|e| CliError::Module(e.to_string()))?;
            let v = iso.to_json();
            (v["pairs"].clone(), iso.pairs.len())
        }
        "dlo" => {
            let count = args.stages * 2 + 8;
            let left = DloStructure::seeded(seed, count);
            let right = DloStructure::seeded(seed.wrapping_add(1), count);
            let iso = run_back_and_forth(&left, &right, args.stages)
                .map_err(|e| CliError::Module(e.to_string()))?;
            let v = iso.to_json();
            (v["pairs"].clone(), iso.pairs.len())
        }
        other => {
            return Err(CliError::input(
                "--structure",
                format!("unknown structure {other:?} (rado|dlo)"),
            ))
        }
    };
    Ok(json!({
        "command": "backforth",
        "seed": seed,
        "structure": args.structure,
        "stages": args.stages,
        "pairs": pairs,
        "size": size,
        "verified": true,
    }))
}

fn run_kesten(args: &KestenArgs, seed: u64) -> CliResult {
    if let Some(path) = &args.export_operator {
        let b = ball(args.radius).map_err(|e| CliError::Module(e.to_string()))?;
        let m = markov_operator(&b);
        let file = std::fs::File::create(path)
            .map_err(|e| CliError::input("--export-operator", e))?;
        m.write_coo(std::io::BufWriter::new(file))
            .map_err(|e| CliError::Module(e.to_string()))?;
    }
    let rep = kesten_certificate(args.radius, args.tol, args.max_iters, args.probe)
        .map_err(|e| CliError::Module(e.to_string()))?;
    let mut report = json!({
        "command": "kesten",
        "seed": seed,
        "radius": rep.radius,
        "lambda_max": f12(rep.lambda_max),
        "iterations": rep.iterations,
        "min_avg_disp_sq": f12(rep.min_avg_disp_sq),
        "min_max_disp": f12(rep.min_max_disp),
        "targets": {
            "lambda": f12(rep.target_lambda),
            "disp_sq": f12(rep.target_disp_sq),
            "disp": f12(rep.target_disp),
        },
        "lambda_bound_ok": rep.lambda_bound_ok,
        "disp_bound_ok": rep.disp_bound_ok,
        "tol": f12(rep.tol),
        "return_probs": rep.return_probs.iter()
            .map(|(k, p)| json!({"steps": k, "p": fmt_q(p)}))
            .collect::<Vec<_>>(),
    });
    if let Some(probe) = rep.probe_max_disp {
        report["probe_max_disp"] = f12(probe);
    }
    Ok(report)
}

fn run_bernoulli(cmd: &BernoulliCmd, seed: u64) -> CliResult {
    match cmd {
        BernoulliCmd::Independence(args) => {
            let a = CylinderSet::parse(&args.a).map_err(|e| CliError::input("--a", e))?;
            let b = CylinderSet::parse(&args.b).map_err(|e| CliError::input("--b", e))?;
            let rep = independence_check(&a, &b).map_err(|e| CliError::Module(e.to_string()))?;
            Ok(json!({
                "command": "bernoulli-independence",
                "seed": seed,
                "independent": rep.independent,
                "mu_intersection": fmt_q(&rep.lhs),
                "mu_product": fmt_q(&rep.rhs),
            }))
        }
        BernoulliCmd::Factorization(args) => {
            let left = parse_cyl_tuple("--left", &args.left)?;
            let right = parse_cyl_tuple("--right", &args.right)?;
            let rep = joint_type_factorization(&left, &right)
                .map_err(|e| CliError::Module(e.to_string()))?;
            Ok(json!({
                "command": "bernoulli-factorization",
                "seed": seed,
                "holds": rep.holds,
                "joint": rep.joint.to_json(),
                "product": rep.product.to_json(),
            }))
        }
        BernoulliCmd::Generators(args) => {
            let window: Vec<Coord> = args
                .window
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| Coord::parse(s.trim()).map_err(|e| CliError::input("--window", e)))
                .collect::<Result<_, _>>()?;
            let out = generator_iets(&window).map_err(|e| CliError::Module(e.to_string()))?;
            Ok(json!({
                "command": "bernoulli-generators",
                "seed": seed,
                "t1": out.t1.to_json(),
                "t2": out.t2.to_json(),
                "embedding": out.embedding.to_json(),
            }))
        }
    }
}

fn run_net(args: &NetArgs, seed: u64) -> CliResult {
    let eps = parse_rat("--epsilon", &args.epsilon)?;
    let net = type_space_net(args.arity, &eps).map_err(|e| CliError::Module(e.to_string()))?;
    Ok(json!({
        "command": "net",
        "seed": seed,
        "arity": args.arity,
        "epsilon": fmt_q(&eps),
        "size": net.len(),
        "members": net.iter().map(TypeVector::to_json).collect::<Vec<_>>(),
    }))
}

fn human_summary(report: &Value) -> String {
    let cmd = report["command"].as_str().unwrap_or("?");
    let mut out = String::new();
    match cmd {
        "eval" => {
            out.push_str(&format!(
                "value = {}\n",
                report["value"].as_str().unwrap_or("?")
            ));
            if let Some(depths) = report["depths"].as_array() {
                for d in depths {
                    out.push_str(&format!(
                        "depth {} -> {}\n",
                        d["depth"],
                        d["value"].as_str().unwrap_or("?")
                    ));
                }
                out.push_str(&format!(
                    "trend: {}, halving: {}\n",
                    report["trend"].as_str().unwrap_or("?"),
                    report["halving"]
                ));
            }
            if let Some(m) = report["modulus"].as_object() {
                for (k, v) in m {
                    out.push_str(&format!("modulus {k}: {}\n", v.as_str().unwrap_or("?")));
                }
            }
        }
        "type" => {
            out.push_str(&format!("arity {}\n", report["n"]));
            if let Some(w) = report["weights"].as_object() {
                for (k, v) in w {
                    out.push_str(&format!("  {k}: {}\n", v.as_str().unwrap_or("?")));
                }
            }
        }
        "dist" => out.push_str(&format!(
            "orbit distance = {}\n",
            report["distance"].as_str().unwrap_or("?")
        )),
        "homog" => out.push_str(&format!(
            "mode {}: achieved defect {}\niet: {}\n",
            report["mode"].as_str().unwrap_or("?"),
            report["achieved"].as_str().unwrap_or("?"),
            report["iet"]
        )),
        "backforth" => out.push_str(&format!(
            "{} pairs verified over {} stages\n",
            report["size"], report["stages"]
        )),
        "kesten" => out.push_str(&format!(
            "radius {}: lambda_max = {} (target {}), min_avg_disp_sq = {} (target {}), bounds ok: {}/{}\n",
            report["radius"],
            report["lambda_max"],
            report["targets"]["lambda"],
            report["min_avg_disp_sq"],
            report["targets"]["disp_sq"],
            report["lambda_bound_ok"],
            report["disp_bound_ok"],
        )),
        "bernoulli-independence" => out.push_str(&format!(
            "independent: {} (mu(A∩B) = {}, mu(A)mu(B) = {})\n",
            report["independent"],
            report["mu_intersection"].as_str().unwrap_or("?"),
            report["mu_product"].as_str().unwrap_or("?")
        )),
        "bernoulli-factorization" => {
            out.push_str(&format!("joint type factors: {}\n", report["holds"]))
        }
        "bernoulli-generators" => out.push_str(&format!(
            "embedding depth {}\nt1: {}\nt2: {}\n",
            report["embedding"]["depth"], report["t1"], report["t2"]
        )),
        "net" => out.push_str(&format!(
            "net of size {} at epsilon {}\n",
            report["size"],
            report["epsilon"].as_str().unwrap_or("?")
        )),
        _ => out.push_str(&report.to_string()),
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.schema {
        println!("{}", schemas::SCHEMAS);
        return ExitCode::SUCCESS;
    }
    if cli.paper_map {
        print!("{}", schemas::TOPIC_MAP);
        return ExitCode::SUCCESS;
    }
    let Some(cmd) = &cli.command else {
        eprintln!("error: a subcommand is required (see --help)");
        return ExitCode::from(2);
    };
    let result = match cmd {
        Cmd::Eval(args) => run_eval(args, cli.seed),
        Cmd::Type(args) => run_type(args, cli.seed),
        Cmd::Dist(args) => run_dist(args, cli.seed),
        Cmd::Homog(args) => run_homog(args, cli.seed),
        Cmd::Backforth(args) => run_backforth(args, cli.seed),
        Cmd::Kesten(args) => run_kesten(args, cli.seed),
        Cmd::Bernoulli(sub) => run_bernoulli(sub, cli.seed),
        Cmd::Net(args) => run_net(args, cli.seed),
    };
    match result {
        Ok(report) => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            if cli.json {
                writeln!(lock, "{report}").expect("stdout");
            } else {
                write!(lock, "{}", human_summary(&report)).expect("stdout");
            }
            ExitCode::SUCCESS
        }
        Err(CliError::Input { flag, msg }) => {
            eprintln!("error: {flag}: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Module(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
