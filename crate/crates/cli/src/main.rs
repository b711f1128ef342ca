use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use l1geo::ballgeo::{brute_force_feasible_signs, enumerate_feasible_signs, hasse_diagram, is_extremal};
use l1geo::construct::{construct_arbitrary_face, construct_theorem_arb, verify_construction, ConstructedInstance};
use l1geo::io::{self, CoordinateBound, DescriptionDoc, VerificationDoc, SCHEMA};
use l1geo::linalg::to_rows;
use l1geo::solset::{coordinate_bounds, describe_solution_set, enumerate_extreme_solutions, solve_admm};
use l1geo::{Dictionary, Error, SignVector, Tolerances};

#[derive(Parser)]
#[command(name = "l1geo", version, about = "Faces, signs and solution sets of analysis-l1 regularization")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Log more to stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sign-vector enumeration on a dictionary.
    #[command(subcommand)]
    Signs(SignsCommand),
    /// Solve an instance and describe its solution set.
    Solve(SolveArgs),
    /// Build an instance whose solution set is a prescribed slice of the ball.
    Construct(ConstructArgs),
}

#[derive(Subcommand)]
enum SignsCommand {
    /// List feasible and extremal signs.
    Enumerate(EnumerateArgs),
    /// Write the Hasse diagram of feasible signs as DOT.
    Hasse(HasseArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Text,
    Json,
}

#[derive(Args)]
struct EnumerateArgs {
    /// Dictionary file: CSV rows of D (n×p) or an instance JSON.
    #[arg(long)]
    dict: PathBuf,
    /// Also run the randomized sampling oracle and report agreement.
    #[arg(long)]
    oracle: bool,
    /// Oracle samples per cosupport stratum.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, value_enum, default_value_t = OutFormat::Text)]
    out: OutFormat,
}

#[derive(Args)]
struct HasseArgs {
    #[arg(long)]
    dict: PathBuf,
    /// Output DOT file.
    #[arg(long)]
    dot: PathBuf,
    #[arg(long, value_enum, default_value_t = OutFormat::Text)]
    out: OutFormat,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance JSON.
    #[arg(long)]
    instance: PathBuf,
    /// Print maximal sign, dimension, compactness and a relative-interior point.
    #[arg(long)]
    describe: bool,
    /// List the extreme points of a compact solution set.
    #[arg(long)]
    extreme: bool,
    /// Range of coordinate x_i over the solution set (1-based indices).
    #[arg(long, num_args = 1..)]
    bounds: Vec<usize>,
    #[arg(long, default_value_t = 50_000)]
    max_iter: usize,
    #[arg(long, value_enum, default_value_t = OutFormat::Text)]
    out: OutFormat,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConstructMode {
    /// Slice of the face with maximal sign --sign.
    Face,
    /// Slice of the whole ball; A must touch it only on the sphere.
    TheoremArb,
}

#[derive(Args)]
struct ConstructArgs {
    #[arg(long)]
    dict: PathBuf,
    /// Maximal sign of the face, e.g. "-+" (face mode).
    #[arg(long, allow_hyphen_values = true)]
    sign: Option<SignVector>,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Affine subspace JSON: {"origin", "normals"|"directions"} or {"points"}.
    /// Omitted means the whole space.
    #[arg(long)]
    affine: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, value_enum, default_value_t = ConstructMode::Face)]
    mode: ConstructMode,
    /// Re-solve the built instance and compare with the target.
    #[arg(long)]
    verify: bool,
    /// Support-function tolerance for --verify.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Write the instance JSON (with provenance) here.
    #[arg(long)]
    save: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutFormat::Text)]
    out: OutFormat,
}

/// Prints to stdout, ignoring a closed pipe.
macro_rules! outln {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).map_err(|e| anyhow::Error::new(Error::Input(format!("{}: {e}", path.display()))))
}

fn load_dict(path: &Path) -> anyhow::Result<Dictionary> {
    let text = read(path)?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    Ok(io::parse_dictionary(&text, ext, Tolerances::default())?)
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    use std::io::Write as _;
    let _ = std::io::stdout().write_all(io::to_json(value)?.as_bytes());
    Ok(())
}

fn fmt_num(x: f64) -> String {
    format!("{:.6}", if x.abs() < 5e-7 { 0.0 } else { x })
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|&x| fmt_num(x)).collect();
    format!("({})", parts.join(", "))
}

#[derive(Serialize)]
struct EnumerateDoc {
    schema: &'static str,
    n: usize,
    p: usize,
    candidates: u64,
    feasible: Vec<SignVector>,
    extremal: Vec<SignVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleDoc>,
}

#[derive(Serialize)]
struct OracleDoc {
    samples_per_stratum: usize,
    found: usize,
    subset: bool,
    equal: bool,
}

fn signs_enumerate(args: &EnumerateArgs, seed: u64) -> anyhow::Result<()> {
    let dict = load_dict(&args.dict)?;
    let feasible = enumerate_feasible_signs(&dict)?;
    let mut extremal = Vec::new();
    for s in &feasible {
        if is_extremal(&dict, s)? {
            extremal.push(s.clone());
        }
    }
    let candidates = 3u64.pow(dict.p() as u32);
    let oracle = if args.oracle {
        let found = brute_force_feasible_signs(&dict, args.samples, seed)?;
        let subset = found.iter().all(|s| feasible.binary_search(s).is_ok());
        Some(OracleDoc {
            samples_per_stratum: args.samples,
            found: found.len(),
            subset,
            equal: subset && found.len() == feasible.len(),
        })
    } else {
        None
    };
    if args.out == OutFormat::Json {
        return print_json(&EnumerateDoc {
            schema: SCHEMA,
            n: dict.n(),
            p: dict.p(),
            candidates,
            feasible,
            extremal,
            oracle,
        });
    }
    outln!("feasible: {} / {}", feasible.len(), candidates);
    outln!("extremal: {}", extremal.len());
    for s in &feasible {
        let mark = if extremal.binary_search(s).is_ok() { "  extremal" } else { "" };
        outln!("{s}{mark}");
    }
    if let Some(o) = oracle {
        outln!(
            "oracle: {} found, subset: {}, agreement: {}",
            o.found,
            if o.subset { "yes" } else { "no" },
            if o.equal { "yes" } else { "no" }
        );
    }
    Ok(())
}

fn signs_hasse(args: &HasseArgs) -> anyhow::Result<()> {
    let dict = load_dict(&args.dict)?;
    let h = hasse_diagram(&dict)?;
    fs::write(&args.dot, h.to_dot()).with_context(|| format!("writing {}", args.dot.display()))?;
    let (nodes, edges, extremal) = (h.len(), h.poset.cover_edges.len(), h.extremal_count());
    if args.out == OutFormat::Json {
        #[derive(Serialize)]
        struct Doc {
            schema: &'static str,
            nodes: usize,
            edges: usize,
            extremal: usize,
        }
        return print_json(&Doc {
            schema: SCHEMA,
            nodes,
            edges,
            extremal,
        });
    }
    outln!("nodes: {nodes}, edges: {edges}, extremal: {extremal}");
    Ok(())
}

#[derive(Serialize)]
struct SolveDoc {
    schema: &'static str,
    x: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    description: Option<DescriptionDoc>,
}

fn solve(args: &SolveArgs) -> anyhow::Result<()> {
    let inst = io::parse_instance(&read(&args.instance)?, Tolerances::default())?;
    let x = solve_admm(&inst, inst.tol().solver_tol, args.max_iter)?;
    let need_desc = args.describe || args.extreme || !args.bounds.is_empty();
    let mut doc = SolveDoc {
        schema: SCHEMA,
        x: x.clone(),
        description: None,
    };
    if need_desc {
        let desc = describe_solution_set(&inst, &x)?;
        let mut d = DescriptionDoc::new(&desc);
        if args.extreme {
            if !desc.compact {
                return Err(Error::Precondition("the solution set is unbounded; it has no extreme points".into()).into());
            }
            d.extreme_points = Some(enumerate_extreme_solutions(&inst, &desc)?);
        }
        for &i in &args.bounds {
            if i == 0 || i > inst.n() {
                return Err(Error::Input(format!("coordinate index {i} out of range 1..={}", inst.n())).into());
            }
            let mut w = vec![0.0; inst.n()];
            w[i - 1] = 1.0;
            let (lo, hi) = coordinate_bounds(&desc, &w, inst.tol())?;
            d.bounds.push(CoordinateBound {
                index: i,
                lo: lo.is_finite().then_some(lo),
                hi: hi.is_finite().then_some(hi),
            });
        }
        doc.description = Some(d);
    }
    if args.out == OutFormat::Json {
        return print_json(&doc);
    }
    outln!("x: {}", fmt_vec(&doc.x));
    if let Some(d) = &doc.description {
        if args.describe {
            outln!("max sign: {}", d.max_sign);
            outln!("radius: {:.9}", d.radius);
            outln!("dim: {}", d.dim);
            outln!("compact: {}", d.compact);
            outln!("relative interior point: {}", fmt_vec(&d.x_ri));
        }
        if let Some(ext) = &d.extreme_points {
            outln!("extreme points: {}", ext.len());
            for e in ext {
                outln!("  {}", fmt_vec(e));
            }
        }
        for b in &d.bounds {
            let show = |v: Option<f64>, inf: &str| v.map_or(inf.to_string(), fmt_num);
            outln!("x{}: [{}, {}]", b.index, show(b.lo, "-inf"), show(b.hi, "+inf"));
        }
    }
    Ok(())
}

fn construct(args: &ConstructArgs) -> anyhow::Result<()> {
    let dict = load_dict(&args.dict)?;
    let affine = match &args.affine {
        Some(path) => io::parse_affine(&read(path)?, dict.n(), dict.tol())?,
        None => l1geo::AffineSubspace::whole_space(dict.n()),
    };
    let ci: ConstructedInstance = match args.mode {
        ConstructMode::Face => {
            let Some(sign) = &args.sign else {
                bail!(Error::Input("--sign is required in face mode".into()));
            };
            construct_arbitrary_face(&dict, sign, args.radius, &affine, args.lambda)?
        }
        ConstructMode::TheoremArb => construct_theorem_arb(&dict, &affine, args.radius, args.lambda)?,
    };
    let instance_json = io::constructed_to_json(&ci)?;
    if let Some(path) = &args.save {
        fs::write(path, &instance_json).with_context(|| format!("writing {}", path.display()))?;
    }
    let report = if args.verify {
        Some(verify_construction(&ci, args.tol)?)
    } else {
        None
    };
    if args.out == OutFormat::Json {
        #[derive(Serialize)]
        struct Doc<'a> {
            schema: &'static str,
            instance: serde_json::Value,
            #[serde(skip_serializing_if = "Option::is_none")]
            verification: Option<VerificationDoc<'a>>,
        }
        let instance: serde_json::Value = serde_json::from_str(&instance_json)?;
        print_json(&Doc {
            schema: SCHEMA,
            instance,
            verification: report.as_ref().map(VerificationDoc::new),
        })?;
    } else {
        outln!("Phi:");
        for row in to_rows(&ci.inst.phi) {
            outln!("  {}", fmt_vec(&row));
        }
        outln!("y: {}", fmt_vec(&ci.inst.y));
        outln!("lambda: {}", ci.inst.lambda);
        if let Some(r) = &report {
            outln!("verification: {}", if r.passed { "PASS" } else { "FAIL" });
            outln!("  support gap: {:.3e}", r.support_gap);
            outln!("  kernel relation: {}", if r.kernel_relation_ok { "ok" } else { "violated" });
            outln!("  certificate residual: {:.3e}", r.certificate_residual);
            outln!("  recovered max sign: {}, dim {}", r.recovered_max_sign, r.recovered_dim);
            for e in &r.extreme_points {
                outln!("  extreme point {}", fmt_vec(e));
            }
        }
    }
    if report.is_some_and(|r| !r.passed) {
        bail!("verification failed");
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Input(_)) => 2,
        Some(Error::Precondition(_)) => 3,
        Some(Error::Convergence(_)) | Some(Error::IterationCap { .. }) => 4,
        Some(Error::Internal(_)) | None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
    let result = match &cli.command {
        Command::Signs(SignsCommand::Enumerate(a)) => signs_enumerate(a, cli.seed),
        Command::Signs(SignsCommand::Hasse(a)) => signs_hasse(a),
        Command::Solve(a) => solve(a),
        Command::Construct(a) => construct(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            log::debug!("{err:?}");
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
