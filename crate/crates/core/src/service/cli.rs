//! Command line front end. `run` returns the process exit code: 0 on
//! success, 1 on usage or validation errors, 2 on internal failures.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::analysis::{run_analyses, write_bundle, AnalysisError, AnalysisOptions, ReportKind};
use crate::campaign::{
    import_export_file, load_gold_bundle, write_atomic, CampaignConfig, CampaignError, ErrorKind, ExportFilter, Store, StoreOptions,
    DEFAULT_DOUBLE_PAIRS,
};
use crate::corpus::{builtin_schema, corpus_summary, import_corpus_with, load_schema, CorpusError};

#[derive(Debug, Parser)]
#[command(name = "abceval", version, about = "Behavior-labeling evaluation campaigns and their analyses")]
struct Cli {
    /// Campaign store directory.
    #[arg(long, env = "ABCEVAL_STORE", global = true)]
    store: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create a store from a corpus file, or add exported records to one.
    Import(ImportArgs),
    /// Print the builtin schema, or validate a schema file.
    Schema {
        #[arg(long)]
        file: Option<PathBuf>,
    },
    #[command(subcommand)]
    Campaign(CampaignCommand),
    #[command(subcommand)]
    Tokens(TokensCommand),
    /// Write annotation records as JSON Lines.
    Export {
        #[arg(long)]
        task: Option<String>,
        #[arg(long)]
        annotator: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run analyses and write a report bundle.
    Analyze(AnalyzeArgs),
    /// Power of the two-sample t-test (`--d`) or regression F-test (`--f2`).
    Power(PowerArgs),
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        /// Directory for analysis bundles; `<store>/reports` by default.
        #[arg(long)]
        reports: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct ImportArgs {
    #[arg(long, conflicts_with = "records", required_unless_present = "records")]
    corpus: Option<PathBuf>,
    #[arg(long, requires = "corpus")]
    schema: Option<PathBuf>,
    /// Export file whose records are added to an existing campaign.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Store to create; defaults to `--store`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum CampaignCommand {
    /// Attach a campaign (coverage plan, caps, gold bundles) to an imported store.
    Create {
        #[arg(long, default_value = "campaign")]
        name: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Session pairs in the double-annotation subset.
        #[arg(long, default_value_t = DEFAULT_DOUBLE_PAIRS)]
        double_pairs: usize,
        #[arg(long)]
        cap: Option<u32>,
        #[arg(long)]
        assignment_ttl: Option<u64>,
        #[arg(long)]
        token_ttl: Option<u64>,
        /// Directory of `<task>.json` gold bundles.
        #[arg(long)]
        gold: Option<PathBuf>,
        /// Full campaign config file; overrides the flags above.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    Status,
}

#[derive(Debug, Subcommand)]
enum TokensCommand {
    /// Mint an annotator token, or an admin token without `--annotator`.
    Mint {
        #[arg(long)]
        annotator: Option<String>,
        /// Create the annotator first.
        #[arg(long, requires = "annotator")]
        create: bool,
        #[arg(long)]
        ttl: Option<u64>,
    },
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long, default_value = "all")]
    report: ReportKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    resamples: Option<usize>,
    #[arg(long)]
    downsample: Option<usize>,
    #[arg(long)]
    beam_width: Option<usize>,
    #[arg(long)]
    dialogues: Option<usize>,
    #[arg(long)]
    wage: Option<f64>,
}

#[derive(Debug, Args)]
struct PowerArgs {
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    d: Vec<f64>,
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    f2: Vec<f64>,
    /// Per-group n for `--d`, total n for `--f2`.
    #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    df1: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

#[derive(Debug)]
struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn usage(m: impl Into<String>) -> Self {
        Self { code: 1, message: m.into() }
    }

    fn internal(m: impl Into<String>) -> Self {
        Self { code: 2, message: m.into() }
    }
}

impl From<CampaignError> for CliError {
    fn from(e: CampaignError) -> Self {
        Self { code: if e.kind() == ErrorKind::Internal { 2 } else { 1 }, message: e.to_string() }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        Self { code: if matches!(e, AnalysisError::Io { .. }) { 2 } else { 1 }, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        // a closed stdout (`| head`) ends the command quietly
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            return Self { code: 0, message: String::new() };
        }
        Self::internal(e.to_string())
    }
}

type CliResult = Result<(), CliError>;

fn store_dir(cli_store: &Option<PathBuf>) -> Result<PathBuf, CliError> {
    cli_store.clone().ok_or_else(|| CliError::usage("no store given: pass --store or set ABCEVAL_STORE"))
}

fn read_only() -> StoreOptions {
    StoreOptions { read_only: true, ..Default::default() }
}

fn json_line(out: &mut dyn Write, value: &impl serde::Serialize) -> CliResult {
    writeln!(out, "{}", serde_json::to_string_pretty(value).expect("serializable"))?;
    Ok(())
}

fn import(store: &Option<PathBuf>, args: ImportArgs, out: &mut dyn Write) -> CliResult {
    if let Some(records) = args.records {
        let dir = args.out.map(Ok).unwrap_or_else(|| store_dir(store))?;
        let (_, recs) = import_export_file(&records).map_err(|e| CliError::usage(format!("{}: {e}", records.display())))?;
        let store = Store::open(&dir, StoreOptions::default())?;
        let n = store.import_records(&recs)?;
        writeln!(out, "imported {n} records into {}", dir.display())?;
        return Ok(());
    }
    let corpus_path = args.corpus.expect("clap requires corpus or records");
    let dir = args.out.map(Ok).unwrap_or_else(|| store_dir(store))?;
    let schema = match &args.schema {
        Some(p) => load_schema(p)?,
        None => builtin_schema(),
    };
    let corpus = import_corpus_with(&corpus_path, schema)?;
    Store::init(&dir, &corpus)?;
    writeln!(out, "created store {}", dir.display())?;
    json_line(out, &corpus_summary(&corpus))
}

fn schema(file: Option<PathBuf>, out: &mut dyn Write) -> CliResult {
    match file {
        Some(p) => {
            let s = load_schema(&p)?;
            writeln!(out, "valid schema: {} labels, {} tasks, digest {}", s.labels.len(), s.tasks.len(), s.digest())?;
        }
        None => writeln!(out, "{}", builtin_schema().to_json())?,
    }
    Ok(())
}

fn load_gold_dir(dir: &Path) -> Result<Vec<crate::campaign::GoldBundle>, CliError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::usage(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| load_gold_bundle(p).map_err(CliError::from)).collect()
}

fn campaign(store: &Option<PathBuf>, cmd: CampaignCommand, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let dir = store_dir(store)?;
    match cmd {
        CampaignCommand::Create { name, seed, double_pairs, cap, assignment_ttl, token_ttl, gold, config } => {
            let corpus = Store::load_corpus(&dir)?;
            let config = match config {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
                    serde_json::from_str::<CampaignConfig>(&text).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?
                }
                None => {
                    let mut c = CampaignConfig::with_defaults(&name, &corpus, seed, double_pairs);
                    if let Some(cap) = cap {
                        c.cap_per_task = cap;
                    }
                    if let Some(t) = assignment_ttl {
                        c.assignment_ttl_secs = t;
                    }
                    if let Some(t) = token_ttl {
                        c.token_ttl_secs = t;
                    }
                    c
                }
            };
            let gold = match gold {
                Some(d) => load_gold_dir(&d)?,
                None => Vec::new(),
            };
            let missing: Vec<&str> = corpus
                .schema()
                .tasks
                .iter()
                .filter(|t| t.requires_training && !gold.iter().any(|g| g.task_key == t.key))
                .map(|t| t.key.as_str())
                .collect();
            if !missing.is_empty() {
                writeln!(err, "warning: no gold bundle for {}; annotators cannot train on these tasks", missing.join(", "))?;
            }
            Store::create_campaign(&dir, &config, &gold)?;
            writeln!(out, "created campaign {:?} in {}", config.name, dir.display())?;
            Ok(())
        }
        CampaignCommand::Status => {
            let store = Store::open(&dir, read_only())?;
            json_line(out, &store.status())
        }
    }
}

fn tokens(store: &Option<PathBuf>, cmd: TokensCommand, out: &mut dyn Write) -> CliResult {
    let TokensCommand::Mint { annotator, create, ttl } = cmd;
    let store = Store::open(&store_dir(store)?, StoreOptions::default())?;
    if create {
        let id = annotator.as_deref().expect("clap requires annotator");
        store.create_annotator(id, id)?;
    }
    let t = store.mint_token(annotator.as_deref(), ttl)?;
    json_line(out, &t)
}

fn export(store: &Option<PathBuf>, task: Option<String>, annotator: Option<String>, path: Option<PathBuf>, out: &mut dyn Write) -> CliResult {
    let store = Store::open(&store_dir(store)?, read_only())?;
    if let Some(t) = &task {
        if store.schema().task(t).is_none() {
            return Err(CampaignError::UnknownTask(t.clone()).into());
        }
    }
    let text = store.export(&ExportFilter { task, annotator });
    match path {
        Some(p) => write_atomic(&p, text.as_bytes(), true)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn analyze(store: &Option<PathBuf>, a: AnalyzeArgs, out: &mut dyn Write) -> CliResult {
    let store = Store::open(&store_dir(store)?, read_only())?;
    let mut opts = AnalysisOptions { report: a.report, seed: a.seed, ..Default::default() };
    opts.cost_dialogues = store.config().cost_dialogues;
    opts.wage_per_hour = store.config().wage_per_hour;
    if let Some(r) = a.resamples {
        opts.bootstrap_resamples = r;
    }
    if let Some(d) = a.downsample {
        opts.downsample = d;
    }
    if let Some(b) = a.beam_width {
        opts.beam_width = b;
    }
    if let Some(d) = a.dialogues {
        opts.cost_dialogues = d;
    }
    if let Some(w) = a.wage {
        opts.wage_per_hour = w;
    }
    let snapshot = store.snapshot();
    let results = run_analyses(&snapshot, &opts)?;
    let manifest = write_bundle(&snapshot, &opts, &results, &a.out)?;
    writeln!(out, "wrote {} files to {}", manifest.files.len() + 1, a.out.display())?;
    Ok(())
}

fn power(a: PowerArgs, out: &mut dyn Write) -> CliResult {
    if a.d.is_empty() && a.f2.is_empty() {
        return Err(CliError::usage("give --d and/or --f2"));
    }
    let mut rows = Vec::new();
    for &n in &a.n {
        for &d in &a.d {
            rows.push(("t", d, n, statkit::power_t_test(d, n, a.alpha).map_err(|e| CliError::usage(e.to_string()))?));
        }
        for &f2 in &a.f2 {
            rows.push(("f", f2, n, statkit::power_f_test(f2, n, a.df1, a.alpha).map_err(|e| CliError::usage(e.to_string()))?));
        }
    }
    if let [(_, _, _, p)] = rows.as_slice() {
        writeln!(out, "{p:.4}")?;
    } else {
        writeln!(out, "test,effect,n,alpha,power")?;
        for (t, e, n, p) in rows {
            writeln!(out, "{t},{e},{n},{},{p:.6}", a.alpha)?;
        }
    }
    Ok(())
}

fn serve(store: &Option<PathBuf>, bind: String, reports: Option<PathBuf>, out: &mut dyn Write) -> CliResult {
    let _ = tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .try_init();
    let dir = store_dir(store)?;
    let store = Arc::new(Store::open(&dir, StoreOptions::default())?);
    let reports = reports.unwrap_or_else(|| dir.join("reports"));
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(&bind).await.map_err(|e| CliError::internal(format!("bind {bind}: {e}")))?;
        writeln!(out, "listening on http://{}", listener.local_addr()?)?;
        out.flush()?;
        super::serve(store, reports, listener, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
        Ok(())
    })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_with(args: impl IntoIterator<Item = OsString>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{}", e.render()) } else { write!(out, "{}", e.render()) };
            return code;
        }
    };
    let store = cli.store;
    let result = match cli.command {
        Command::Import(a) => import(&store, a, out),
        Command::Schema { file } => schema(file, out),
        Command::Campaign(c) => campaign(&store, c, out, err),
        Command::Tokens(t) => tokens(&store, t, out),
        Command::Export { task, annotator, out: path } => export(&store, task, annotator, path, out),
        Command::Analyze(a) => analyze(&store, a, out),
        Command::Power(a) => power(a, out),
        Command::Serve { bind, reports } => serve(&store, bind, reports, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            if !e.message.is_empty() {
                let _ = writeln!(err, "error: {}", e.message);
            }
            e.code
        }
    }
}

pub fn run(args: impl IntoIterator<Item = OsString>) -> i32 {
    run_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}
