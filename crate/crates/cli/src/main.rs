//! `gazecode`: simulate verification campaigns, sweep code lengths, audit
//! session logs, export labels, preview trial plans and run the collection
//! server.

mod spec;

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gazecode_core::log::{extract_labels, labels_to_csv, parse_session, validate_session, SessionLog};
use gazecode_core::protocol::{plan_trial, DeviceGeometry, SessionConfig, TimeModelParams};
use gazecode_core::rng::{split_seed, Domain};
use gazecode_core::sim::report::{render_frontier, render_metrics, OutputFormat};
use gazecode_core::sim::{simulate_campaign, sweep_entropy_throughput, CampaignConfig};
use gazecode_service::{GatePolicy, ServiceConfig};

use spec::{parse_mixture, parse_schedule, FoveatorChoice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
    Records,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Table => OutputFormat::Table,
            Format::Csv => OutputFormat::Csv,
            Format::Records => OutputFormat::Records,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "gazecode", version, about = "Recall-verified gaze data collection toolkit")]
struct Cli {
    /// Master seed for everything random.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte-Carlo campaign over a participant mixture.
    Simulate(SimulateArgs),
    /// Guess probability, expected mislabels and throughput across code lengths.
    Sweep(SweepArgs),
    /// Audit a session log; exits 1 on violations, 2 if it does not parse.
    Validate { log: PathBuf },
    /// Frame/target label pairs from accepted trials of a session log.
    ExportLabels { log: PathBuf },
    /// Print planned trials without running anything.
    Plan(PlanArgs),
    /// Run the collection server.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct SessionArgs {
    /// Digits per code.
    #[arg(long, short = 'n', default_value_t = 4)]
    code_length: usize,
    #[arg(long, default_value_t = 10)]
    alphabet: u8,
    /// Condition blocks, e.g. `control:300@1.0x6,control:300@0.1x6`; default is that pair.
    #[arg(long, conflicts_with = "formative")]
    schedule: Option<String>,
    /// Use the 16-block formative study schedule.
    #[arg(long)]
    formative: bool,
    /// Full session config as JSON; flags above are ignored.
    #[arg(long)]
    session_config: Option<PathBuf>,
}

impl SessionArgs {
    fn build(&self) -> Result<SessionConfig> {
        if let Some(path) = &self.session_config {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            return serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()));
        }
        let mut cfg = if self.formative { SessionConfig::formative_study() } else { SessionConfig::default() };
        cfg.code_length = self.code_length;
        cfg.alphabet_size = self.alphabet;
        if let Some(s) = &self.schedule {
            cfg.schedule = parse_schedule(s)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, short = 'm', default_value_t = 100_000)]
    trials: u64,
    /// Weighted models: guesser, foveator, peripheral.
    #[arg(long, default_value = "guesser=0.5,foveator=0.5")]
    mixture: String,
    /// Trial acceptance of the foveator through keypad slips alone.
    #[arg(long, default_value_t = 0.9)]
    foveator_accept: f64,
    /// Use the opacity/duration-calibrated foveator instead.
    #[arg(long)]
    calibrated_foveator: bool,
    #[command(flatten)]
    session: SessionArgs,
    /// Whole campaign config as JSON; replaces every other simulate option except --seed.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 2)]
    n_min: u32,
    #[arg(long, default_value_t = 5)]
    n_max: u32,
    #[arg(long, default_value_t = 2000.0)]
    t_setup_ms: f64,
    #[arg(long, default_value_t = 800.0)]
    t_digit_ms: f64,
    #[arg(long, default_value_t = 3000.0)]
    t_entry_ms: f64,
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[arg(long, short = 'k', default_value_t = 12)]
    trials: u64,
    #[command(flatten)]
    session: SessionArgs,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, env = "GAZECODE_BIND")]
    bind: Option<String>,
    #[arg(long, env = "GAZECODE_DATA_DIR")]
    data_dir: Option<PathBuf>,
    /// Built capture client to serve at `/`.
    #[arg(long, env = "GAZECODE_STATIC_DIR")]
    static_dir: Option<PathBuf>,
    /// JSON service config with defaults for the options here.
    #[arg(long, env = "GAZECODE_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, env = "GAZECODE_GATE_POLICY", value_parser = |s: &str| s.parse::<GatePolicy>())]
    gate_policy: Option<GatePolicy>,
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

/// Exit code 2 when the file cannot be read or parsed.
fn load_log(path: &Path) -> std::result::Result<SessionLog, String> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_session(&bytes).map_err(|e| format!("{}: {e}", path.display()))
}

fn simulate(cli: &Cli, args: &SimulateArgs) -> Result<String> {
    let cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut cfg: CampaignConfig =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            cfg.rng_seed = cli.seed;
            cfg
        }
        None => {
            let session = args.session.build()?;
            let foveator = if args.calibrated_foveator {
                FoveatorChoice::Calibrated
            } else {
                FoveatorChoice::Acceptance(args.foveator_accept)
            };
            let mixture = parse_mixture(&args.mixture, foveator, session.code_length)?;
            CampaignConfig::new(session, mixture, args.trials, cli.seed)
        }
    };
    let metrics = simulate_campaign(&cfg)?;
    Ok(render_metrics(&metrics, cli.format.into()))
}

fn sweep(cli: &Cli, args: &SweepArgs) -> Result<String> {
    let time = TimeModelParams { t_setup_ms: args.t_setup_ms, t_digit_ms: args.t_digit_ms, t_entry_ms: args.t_entry_ms };
    let rows = sweep_entropy_throughput(args.n_min..=args.n_max, &time)?;
    Ok(render_frontier(&rows, cli.format.into()))
}

fn plan(cli: &Cli, args: &PlanArgs) -> Result<String> {
    let cfg = args.session.build()?;
    let geometry = DeviceGeometry::default();
    let mut out = String::new();
    match cli.format {
        Format::Table => writeln!(out, "# seed={} trials={}", cli.seed, args.trials)?,
        Format::Csv => writeln!(out, "trial_id,code,condition,opacity,orientation,placements")?,
        Format::Records => {}
    }
    for k in 0..args.trials {
        let block = cfg.block_for_trial(k);
        let spec = plan_trial(&cfg, &block, &geometry, k, split_seed(cli.seed, Domain::TrialPlan, k))?;
        let places = spec.digit_placements.iter().map(|p| format!("{:.4}:{:.4}", p.u, p.v)).collect::<Vec<_>>().join(" ");
        match cli.format {
            Format::Records => writeln!(out, "{}", serde_json::to_string(&spec)?)?,
            Format::Csv => writeln!(
                out,
                "{},{},{},{},{},{}",
                spec.trial_id, spec.code, spec.condition, spec.stimulus.opacity, spec.required_orientation, places
            )?,
            Format::Table => writeln!(
                out,
                "{:>4}  {:<8} {:<16} a={:<4} {:<18} {}",
                spec.trial_id,
                spec.code.to_string(),
                spec.condition.to_string(),
                spec.stimulus.opacity,
                spec.required_orientation.to_string(),
                places
            )?,
        }
    }
    Ok(out)
}

fn export_labels(cli: &Cli, log: &SessionLog) -> Result<String> {
    let labels = extract_labels(log);
    Ok(match cli.format {
        Format::Csv => labels_to_csv(&labels.pairs),
        Format::Records => {
            let mut out = String::new();
            for p in &labels.pairs {
                writeln!(out, "{}", serde_json::to_string(p)?)?;
            }
            out
        }
        Format::Table => {
            let mut out = format!(
                "# session={} accepted_trials={} rejected_trials={} pairs={}\n",
                log.meta.session_id,
                labels.accepted_trials.len(),
                labels.rejected_trials.len(),
                labels.pairs.len()
            );
            writeln!(out, "{:>8} {:>14} {:>8} {:>8} {:<18} {:>6} {:>5}", "frame", "ts_ns", "u", "v", "orientation", "trial", "digit")?;
            for p in &labels.pairs {
                writeln!(
                    out,
                    "{:>8} {:>14} {:>8.4} {:>8.4} {:<18} {:>6} {:>5}",
                    p.frame_index,
                    p.ts.0,
                    p.u,
                    p.v,
                    p.orientation.to_string(),
                    p.trial,
                    p.digit_index
                )?;
            }
            out
        }
    })
}

fn serve(args: &ServeArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => ServiceConfig::from_file(path)?,
        None => ServiceConfig::default(),
    };
    if let Some(b) = &args.bind {
        cfg.bind = b.clone();
    }
    if let Some(d) = &args.data_dir {
        cfg.data_dir = d.clone();
    }
    if let Some(s) = &args.static_dir {
        cfg.static_dir = Some(s.clone());
    }
    if let Some(p) = args.gate_policy {
        cfg.gate_policy = p;
    }
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(gazecode_service::serve(cfg, async {
        let _ = tokio::signal::ctrl_c().await;
    }))?;
    Ok(())
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let text = match &cli.command {
        Command::Simulate(args) => simulate(cli, args)?,
        Command::Sweep(args) => sweep(cli, args)?,
        Command::Plan(args) => plan(cli, args)?,
        Command::Validate { log } => {
            let log = match load_log(log) {
                Ok(l) => l,
                Err(e) => {
                    eprintln!("error: {e}");
                    return Ok(ExitCode::from(2));
                }
            };
            let report = validate_session(&log);
            let text = match cli.format {
                Format::Records => format!("{}\n", serde_json::to_string(&report)?),
                Format::Csv => {
                    let mut out = String::from("kind,detail\n");
                    for v in &report.violations {
                        let kind = serde_json::to_value(v)?["kind"].as_str().unwrap_or_default().to_string();
                        writeln!(out, "{kind},\"{}\"", v.to_string().replace('"', "\"\""))?;
                    }
                    out
                }
                Format::Table => report.to_string(),
            };
            emit(&cli.out, &text)?;
            return Ok(if report.is_clean() { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
        Command::ExportLabels { log } => {
            let log = match load_log(log) {
                Ok(l) => l,
                Err(e) => {
                    eprintln!("error: {e}");
                    return Ok(ExitCode::from(2));
                }
            };
            export_labels(cli, &log)?
        }
        Command::Serve(args) => {
            serve(args)?;
            return Ok(ExitCode::SUCCESS);
        }
    };
    emit(&cli.out, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
