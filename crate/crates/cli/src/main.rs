use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fpwb_core::analysis::{local_error, ErrorReport, LocalErrorTree};
use fpwb_core::rewriter::{rule_infos, rule_table};
use fpwb_core::sampler::Sample;
use fpwb_core::session::{build_spec, JobStatus, JobView, Source, SuggestOptions, Workbench, WorkbenchConfig};
use fpwb_core::{parse_f64, parse_fpcore, parse_math, Error, FloatFormat, VarRange};
use fpwb_server::{seed_from_env, translate_text, ServeOptions, SEED_ENV};

#[derive(Parser)]
#[command(name = "fpwb", version, about = "Floating-point error workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure an expression's error on a seeded sample.
    Analyze(AnalyzeArgs),
    /// Search for more accurate rewritings.
    Suggest(SuggestArgs),
    /// Per-operation error at one point.
    Localerror(LocalErrorArgs),
    /// Convert between math text, FPCore and LaTeX.
    Translate(TranslateArgs),
    /// Run the HTTP API.
    Serve(ServeArgs),
    /// Print the rewrite rule catalog.
    Rules(RulesArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Args)]
struct Input {
    /// Expression in math syntax.
    #[arg(long, conflicts_with = "fpcore", required_unless_present = "fpcore")]
    expr: Option<String>,
    /// File holding one FPCore form.
    #[arg(long)]
    fpcore: Option<PathBuf>,
}

impl Input {
    fn source(&self) -> Result<Source, Failure> {
        match (&self.expr, &self.fpcore) {
            (Some(e), _) => Ok(Source::Math(e.clone())),
            (None, Some(path)) => std::fs::read_to_string(path)
                .map(Source::FpCore)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
            (None, None) => Err(Failure::Usage("give --expr or --fpcore".into())),
        }
    }
}

#[derive(Args)]
struct SpecArgs {
    #[command(flatten)]
    input: Input,
    /// Variable range as NAME=LO:HI; bounds may use scientific notation or
    /// 0x bit patterns. Repeat for each variable.
    #[arg(long = "range", value_parser = parse_range)]
    ranges: Vec<VarRange>,
    /// Sample size.
    #[arg(long)]
    points: Option<usize>,
    /// Sampling seed (default: $FPWB_SEED, else 42).
    #[arg(long)]
    seed: Option<u64>,
}

impl SpecArgs {
    /// A one-session workbench holding this spec as session `s1`.
    fn open(&self) -> Result<Workbench, Failure> {
        let spec = build_spec(&self.input.source()?, &self.ranges, self.points, self.seed, seed_from_env())?;
        let wb = Workbench::new(WorkbenchConfig { workers: 1, ..WorkbenchConfig::default() });
        wb.create_session(spec)?;
        Ok(wb)
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct SuggestArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Number of suggestions.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    beam: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    /// Search budget in seconds.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct LocalErrorArgs {
    #[command(flatten)]
    input: Input,
    /// Coordinate as NAME=VALUE. Repeat for each variable.
    #[arg(long = "point", value_parser = parse_coord, required = true)]
    point: Vec<(String, f64)>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct TranslateArgs {
    #[arg(long, default_value = "math")]
    from: String,
    #[arg(long)]
    to: String,
    /// Ranges for the FPCore precondition.
    #[arg(long = "range", value_parser = parse_range)]
    ranges: Vec<VarRange>,
    /// The text to translate.
    text: String,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Directory of a static UI bundle to serve at /.
    #[arg(long)]
    ui_dir: Option<PathBuf>,
    /// Background suggestion workers.
    #[arg(long, default_value_t = fpwb_core::session::DEFAULT_WORKERS)]
    workers: usize,
    /// Write a JSON snapshot of each session here after every change.
    #[arg(long)]
    snapshot_dir: Option<PathBuf>,
}

#[derive(Args)]
struct RulesArgs {
    #[arg(long)]
    json: bool,
}

enum Failure {
    Usage(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        if e.is_usage() {
            Failure::Usage(format!("{}: {e}", e.code()))
        } else {
            Failure::Internal(format!("{}: {e}", e.code()))
        }
    }
}

fn parse_value(text: &str) -> Result<f64, String> {
    parse_f64(text).ok_or_else(|| format!("`{text}` is not a number"))
}

fn parse_range(text: &str) -> Result<VarRange, String> {
    let (name, bounds) = text.split_once('=').ok_or("expected NAME=LO:HI")?;
    let (lo, hi) = bounds.split_once(':').ok_or("expected NAME=LO:HI")?;
    Ok(VarRange::new(name.trim(), parse_value(lo)?, parse_value(hi)?))
}

fn parse_coord(text: &str) -> Result<(String, f64), String> {
    let (name, v) = text.split_once('=').ok_or("expected NAME=VALUE")?;
    Ok((name.trim().to_string(), parse_value(v)?))
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

fn fmt_value(x: f64) -> String {
    format!("{x:e} ({})", x.to_hex())
}

fn report_table(expr: &str, sample: &Sample, r: &ErrorReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "expression  {expr}");
    let _ = writeln!(out, "spec key    {}", r.spec_key);
    let _ = writeln!(out, "points      {} of {} (seed {})", sample.achieved, sample.requested, sample.seed);
    let _ = writeln!(out, "average     {:.2} bits", r.average);
    let coords: Vec<String> =
        sample.vars.iter().zip(&r.worst.point).map(|(v, x)| format!("{v} = {}", fmt_value(*x))).collect();
    let _ = writeln!(out, "worst       {:.2} bits at {}", r.worst.bits, coords.join(", "));
    out
}

fn report_csv(sample: &Sample, r: &ErrorReport) -> String {
    let mut out = String::from("index");
    for v in &sample.vars {
        let _ = write!(out, ",{v},{v}_hex");
    }
    out.push_str(",bits\n");
    for (i, (p, b)) in sample.points.iter().zip(&r.bits).enumerate() {
        let _ = write!(out, "{i}");
        for x in p {
            let _ = write!(out, ",{x:e},{}", x.to_hex());
        }
        let _ = writeln!(out, ",{b}");
    }
    out
}

fn analyze(args: &AnalyzeArgs) -> Result<String, Failure> {
    let wb = args.spec.open()?;
    let report = wb.errors("s1", 0)?;
    let sample = wb.sample("s1")?;
    let table = wb.table("s1")?;
    if sample.short {
        eprintln!("warning: only {} of {} points could be sampled", sample.achieved, sample.requested);
    }
    Ok(match args.format {
        Format::Json => json(&report) + "\n",
        Format::Csv => report_csv(&sample, &report),
        Format::Table => report_table(&table.spec.expr.to_string(), &sample, &report),
    })
}

fn suggest_table(view: &JobView) -> String {
    let mut out = String::from("rank  bits    expression\n");
    for (i, c) in view.results.iter().flatten().enumerate() {
        let _ = writeln!(out, "{:<5} {:<7.2} {}", i + 1, c.average().unwrap_or(f64::NAN), c.expr);
        let rules: Vec<&str> = c.derivation.steps.iter().map(|s| s.rule.as_str()).collect();
        if !rules.is_empty() {
            let _ = writeln!(out, "      via {}", rules.join(", "));
        }
    }
    out
}

fn suggest(args: &SuggestArgs) -> Result<String, Failure> {
    let wb = args.spec.open()?;
    let opts = SuggestOptions {
        k: args.k,
        beam: args.beam,
        depth: args.depth,
        budget: args.budget.map(Duration::from_secs_f64),
    };
    let jid = wb.run_suggest("s1", 0, &opts)?;
    let view = wb.wait_job(&jid)?;
    match view.status {
        JobStatus::Timeout => eprintln!("warning: search budget exceeded; results are partial"),
        JobStatus::Failed => {
            let msg = view.error.map(|e| format!("{}: {}", e.code, e.message)).unwrap_or_default();
            return Err(Failure::Internal(msg));
        }
        _ => {}
    }
    Ok(match args.format {
        Format::Json => json(&view) + "\n",
        _ => suggest_table(&view),
    })
}

fn tree_table(t: &LocalErrorTree) -> String {
    let mut depth = vec![0usize; t.nodes.len()];
    for n in &t.nodes {
        for &c in &n.children {
            depth[c] = depth[n.index] + 1;
        }
    }
    let mut out = format!("{:<28} {:>10}  {:<24} {:<24}\n", "node", "bits", "exact", "computed");
    for n in &t.nodes {
        let label = format!("{}{}", "  ".repeat(depth[n.index]), n.label);
        let bits = n.local_bits.map(|b| format!("{b:.2}")).unwrap_or_else(|| "-".into());
        let show = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(out, "{label:<28} {bits:>10}  {:<24} {:<24}", show(n.exact), show(n.float_op));
    }
    out
}

fn localerror(args: &LocalErrorArgs) -> Result<String, Failure> {
    let e = match args.input.source()? {
        Source::Math(t) => parse_math(&t)?,
        Source::FpCore(t) => parse_fpcore(&t)?.expr,
    };
    let vars: Vec<String> = args.point.iter().map(|(v, _)| v.clone()).collect();
    let point: Vec<f64> = args.point.iter().map(|(_, x)| *x).collect();
    let tree = local_error(&e, &vars, &point)?;
    Ok(match args.format {
        Format::Json => json(&tree) + "\n",
        _ => tree_table(&tree),
    })
}

fn translate(args: &TranslateArgs) -> Result<String, Failure> {
    Ok(translate_text(&format!("{}->{}", args.from, args.to), &args.text, &args.ranges)? + "\n")
}

fn serve(args: &ServeArgs) -> Result<String, Failure> {
    let opts = ServeOptions {
        host: args.host.clone(),
        port: args.port,
        ui_dir: args.ui_dir.clone(),
        workers: args.workers,
        snapshot_dir: args.snapshot_dir.clone(),
        seed: seed_from_env(),
    };
    tracing::info!("default seed {} (set {SEED_ENV} to change)", opts.seed);
    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Internal(e.to_string()))?;
    rt.block_on(fpwb_server::serve(opts)).map_err(|e| Failure::Internal(e.to_string()))?;
    Ok(String::new())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn,fpwb_server=info,fpwb=info")),
        )
        .init();
    let cli = Cli::parse();
    let out = match &cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Suggest(a) => suggest(a),
        Command::Localerror(a) => localerror(a),
        Command::Translate(a) => translate(a),
        Command::Serve(a) => serve(a),
        Command::Rules(a) => Ok(if a.json { json(&rule_infos()) + "\n" } else { rule_table() }),
    };
    match out {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
