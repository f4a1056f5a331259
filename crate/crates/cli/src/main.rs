use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use spinglass_core::format::{load_instance, validate, AnyInstance};
use spinglass_core::genbench::{
    generate, run_suite, BenchSuite, Distribution3, GeneratorKind, GeneratorSpec,
};
use spinglass_core::outerplanar::{levels_for_epsilon, peel_layers, remove_edge_class};
use spinglass_core::quantum::coarse_grain;
use spinglass_core::solve::{classical_parts, quantum_parts, solve, Method, SolveOptions};
use spinglass_core::treedec::build_tree_decomposition;
use spinglass_core::verify::{verify, VerifyOptions, VerifyReport};
use spinglass_core::{Error, SolveResult};

#[derive(Parser)]
#[command(
    name = "spinglass",
    version,
    about = "Ground states of classical and quantum Ising spin glasses"
)]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print machine-readable JSON on stdout instead of the human summary.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded random instance.
    Gen(GenArgs),
    /// Solve an instance with one method.
    Solve(SolveArgs),
    /// Re-check a result file against its instance.
    Verify(VerifyArgs),
    /// Run a benchmark suite and write a CSV report.
    Bench(BenchArgs),
    /// Print structural statistics of an instance.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct GenArgs {
    /// lattice, random-planar, star, quantum-planar or quantum-lattice.
    #[arg(long)]
    kind: Option<GeneratorKind>,
    /// Read the whole generator spec from a JSON file instead.
    #[arg(long, conflicts_with = "kind")]
    spec: Option<PathBuf>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// pm1, uniform:LO:HI or gaussian:SIGMA.
    #[arg(long, value_parser = parse_distribution)]
    couplings: Option<Distribution3>,
    #[arg(long, value_parser = parse_distribution)]
    fields: Option<Distribution3>,
    #[arg(long, default_value_t = 0.0)]
    delete_prob: f64,
    #[arg(long, default_value_t = 0.5)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 1.0)]
    local_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SolverFlags {
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    /// Tree-decomposition width cap for planar-ptas.
    #[arg(long)]
    width_cap: Option<usize>,
    /// Components up to this size are brute-forced when the TD is too wide.
    #[arg(long, default_value_t = 22)]
    fallback_cap: usize,
    /// Largest component the quantum-kpr method diagonalizes.
    #[arg(long, default_value_t = 14)]
    component_cap: usize,
}

impl SolverFlags {
    fn options(&self) -> SolveOptions {
        SolveOptions {
            epsilon: self.epsilon,
            width_cap: self.width_cap,
            fallback_cap: self.fallback_cap,
            component_cap: self.component_cap,
            ..SolveOptions::default()
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    method: Method,
    #[command(flatten)]
    solver: SolverFlags,
    /// Write the result JSON here.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// Result JSON produced by `solve`.
    #[arg(short, long)]
    result: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(short, long)]
    suite: PathBuf,
    /// CSV report path; CSV goes to stdout when absent.
    #[arg(short, long, visible_alias = "out")]
    output: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// Epsilon used for the layer classes and star grouping statistics.
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn parse_distribution(s: &str) -> Result<Distribution3, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |x: &str| x.parse::<f64>().map_err(|e| format!("{x}: {e}"));
    let int = |x: &str| x.parse::<i64>().map_err(|e| format!("{x}: {e}"));
    match parts.as_slice() {
        ["pm1"] => Ok(Distribution3::PlusMinusOne),
        ["uniform", lo, hi] => Ok(Distribution3::Uniform {
            lo: int(lo)?,
            hi: int(hi)?,
        }),
        ["gaussian", sigma] => Ok(Distribution3::Gaussian { sigma: num(sigma)? }),
        _ => Err(format!(
            "expected pm1, uniform:LO:HI or gaussian:SIGMA, got '{s}'"
        )),
    }
}

/// Exit code 1 for solver failures and failed checks, 2 for bad input.
enum Failure {
    Input(String),
    Solver(String),
    Rejected,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Solver(e.to_string())
        }
    }
}

type CliResult = Result<(), Failure>;

fn read_instance(path: &Path) -> Result<AnyInstance, Failure> {
    load_instance(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> CliResult {
    fs::write(path, text)
        .map_err(|e| Failure::Solver(format!("cannot write {}: {e}", path.display())))
}

fn to_json(v: &impl serde::Serialize) -> Result<String, Failure> {
    serde_json::to_string_pretty(v).map_err(|e| Failure::Solver(e.to_string()))
}

/// Sends JSON to `--output` and, under `--json`, to stdout.
fn emit(json: bool, output: Option<&Path>, text: &str) -> CliResult {
    if let Some(p) = output {
        write_file(p, text)?;
    }
    if json {
        println!("{text}");
    }
    Ok(())
}

fn cmd_gen(args: GenArgs, json: bool) -> CliResult {
    let spec = match (&args.spec, args.kind) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?
        }
        (None, Some(kind)) => {
            let mut spec = GeneratorSpec::new(kind, args.seed);
            spec.width = args.width;
            spec.height = args.height;
            spec.n = args.n;
            if let Some(c) = args.couplings {
                spec.couplings = c;
            }
            spec.fields = args.fields;
            spec.delete_prob = args.delete_prob;
            spec.a = args.a;
            spec.b = args.b;
            spec.local_scale = args.local_scale;
            spec
        }
        (None, None) => return Err(Failure::Input("gen needs --kind or --spec".into())),
    };
    let inst = generate(&spec)?;
    let text = inst.to_json()?;
    match &args.output {
        Some(p) => {
            write_file(p, &text)?;
            if json {
                println!("{text}");
            } else {
                println!("wrote {} instance to {}", inst.kind(), p.display());
            }
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn print_result(r: &SolveResult) {
    println!("method     {}", r.method);
    println!("energy     {}", r.energy);
    match r.guarantee.value() {
        Some(v) => println!("guarantee  {} ({v})", r.guarantee.kind()),
        None => println!("guarantee  {}", r.guarantee.kind()),
    }
    if let Some(w) = r.diagnostics.removed_weight {
        println!("removed    {w}");
    }
    println!("wall_ms    {:.3}", r.diagnostics.wall_ms);
}

fn cmd_solve(args: SolveArgs, json: bool) -> CliResult {
    let inst = read_instance(&args.input)?;
    let result = solve(&inst, args.method, &args.solver.options())?;
    // Witness energy only; oracle comparisons are left to `verify`.
    let check = verify(
        &inst,
        &result,
        &VerifyOptions {
            classical_oracle_cap: 0,
            quantum_oracle_cap: 0,
        },
    )?;
    if !check.passed() {
        eprintln!("witness re-evaluation disagrees with the solver:");
        print_checks(&check, true);
        return Err(Failure::Solver("witness energy mismatch".into()));
    }
    let text = to_json(&result)?;
    emit(json, args.output.as_deref(), &text)?;
    if !json {
        print_result(&result);
        println!("witness    re-evaluated ok");
    }
    Ok(())
}

fn print_checks(report: &VerifyReport, to_stderr: bool) {
    for c in &report.checks {
        let tag = match c.passed {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "N/A ",
        };
        if to_stderr {
            eprintln!("{tag} {:<12} {}", c.name, c.detail);
        } else {
            println!("{tag} {:<12} {}", c.name, c.detail);
        }
    }
}

fn cmd_verify(args: VerifyArgs, json: bool) -> CliResult {
    let inst = read_instance(&args.input)?;
    let text = fs::read_to_string(&args.result)
        .map_err(|e| Failure::Input(format!("{}: {e}", args.result.display())))?;
    let result: SolveResult = serde_json::from_str(&text)
        .map_err(|e| Failure::Input(format!("{}: {e}", args.result.display())))?;
    let report = verify(&inst, &result, &VerifyOptions::default())?;
    let out = to_json(&json!({ "passed": report.passed(), "report": report }))?;
    emit(json, args.output.as_deref(), &out)?;
    if !json {
        print_checks(&report, false);
        println!(
            "{}",
            if report.passed() {
                "verified"
            } else {
                "rejected"
            }
        );
    }
    if report.passed() {
        Ok(())
    } else {
        if let Some(e) = report.recomputed_energy {
            eprintln!(
                "claimed energy {} but the witness evaluates to {e}",
                result.energy
            );
        }
        Err(Failure::Rejected)
    }
}

fn cmd_bench(args: BenchArgs, json: bool) -> CliResult {
    let text = fs::read_to_string(&args.suite)
        .map_err(|e| Failure::Input(format!("{}: {e}", args.suite.display())))?;
    let suite = BenchSuite::from_json(&text, args.suite.parent())
        .map_err(|e| Failure::Input(format!("{}: {e}", args.suite.display())))?;
    let report = run_suite(&suite, &args.solver.options());
    let csv = report.to_csv_string()?;
    if let Some(p) = &args.output {
        write_file(p, &csv)?;
    }
    if json {
        println!("{}", to_json(&report.rows)?);
    } else if args.output.is_some() {
        print!("{}", report.summary());
    } else {
        print!("{csv}");
    }
    Ok(())
}

fn inspect_value(inst: &AnyInstance, epsilon: f64) -> Result<serde_json::Value, Failure> {
    let mut out = json!({ "kind": inst.kind() });
    if let Some((c, emb)) = classical_parts(inst)? {
        out["validation"] = serde_json::to_value(validate(&c, emb.as_ref())).unwrap_or_default();
        out["coupling_weight"] = json!(c.coupling_weight());
        if let Some(emb) = emb {
            let mut sizes: Vec<usize> = emb.faces().iter().map(|f| f.len()).collect();
            sizes.sort_unstable();
            let layers = peel_layers(&emb);
            let t = levels_for_epsilon(epsilon)?;
            let mut classes = Vec::new();
            for j in 0..t {
                let (reduced, removed) = remove_edge_class(&layers, &c, t, j);
                let pairs: Vec<(usize, usize)> =
                    reduced.edges().iter().map(|e| (e.u, e.v)).collect();
                let width = build_tree_decomposition(reduced.n(), &pairs, usize::MAX)
                    .map(|td| td.width())
                    .ok();
                classes.push(json!({ "class": j, "removed_weight": removed, "td_width": width }));
            }
            out["embedding"] = json!({
                "faces": emb.faces().len(),
                "outer_face": emb.outer_face(),
                "outer_face_length": emb.faces()[emb.outer_face()].len(),
                "face_lengths": sizes,
                "euler_characteristic": c.n() as i64 - emb.edge_count() as i64 + emb.faces().len() as i64,
                "dual_graph": { "vertices": emb.faces().len(), "edges": emb.edge_count() },
                "layers": layers.depth(),
                "layer_sizes": (0..layers.depth()).map(|l| layers.level.iter().filter(|&&x| x == l).count()).collect::<Vec<_>>(),
                "cross_edges": layers.cross.iter().map(Vec::len).collect::<Vec<_>>(),
            });
            out["ptas_classes"] = json!({ "epsilon": epsilon, "levels": t, "classes": classes });
        }
    }
    if let Some((h, emb)) = quantum_parts(inst)? {
        out["qubits"] = json!(h.n());
        out["edges"] = json!(h.edges().len());
        out["max_degree"] = json!(h.degrees().into_iter().max().unwrap_or(0));
        out["components"] = json!(h.components().len());
        out["coupling_weight"] = json!(h.coupling_weight());
        out["local_weight"] = json!(h.local_weight());
        if let Some(emb) = emb {
            out["faces"] = json!(emb.faces().len());
        }
        if let AnyInstance::Star(s) = inst {
            let g = coarse_grain(s, epsilon)?;
            out["star"] = json!({
                "epsilon": epsilon,
                "groups": g.groups.len(),
                "group_sizes": g.group_sizes(),
                "mesh_step": g.step,
                "reduced_dimension": g.reduced_dimension(),
            });
        }
    }
    Ok(out)
}

fn cmd_inspect(args: InspectArgs, json: bool) -> CliResult {
    let inst = read_instance(&args.input)?;
    let value = inspect_value(&inst, args.epsilon)?;
    let text = to_json(&value)?;
    emit(json, args.output.as_deref(), &text)?;
    if !json {
        print_tree(&value, 0);
    }
    Ok(())
}

fn print_tree(v: &serde_json::Value, depth: usize) {
    let pad = "  ".repeat(depth);
    if let serde_json::Value::Object(map) = v {
        for (k, x) in map {
            match x {
                serde_json::Value::Object(_) => {
                    println!("{pad}{k}:");
                    print_tree(x, depth + 1);
                }
                serde_json::Value::Array(items) if items.iter().any(|i| i.is_object()) => {
                    println!("{pad}{k}:");
                    for item in items {
                        println!("{pad}  {item}");
                    }
                }
                _ => println!("{pad}{k}: {x}"),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: cannot configure {t} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let json = cli.json;
    let outcome = match cli.command {
        Command::Gen(a) => cmd_gen(a, json),
        Command::Solve(a) => cmd_solve(a, json),
        Command::Verify(a) => cmd_verify(a, json),
        Command::Bench(a) => cmd_bench(a, json),
        Command::Inspect(a) => cmd_inspect(a, json),
    };
    let _ = std::io::stdout().flush();
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Rejected) => ExitCode::from(1),
    }
}
