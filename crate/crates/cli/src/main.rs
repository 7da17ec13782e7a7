use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ismd_cli::config::{ConfigError, LoadedConfig};
use ismd_cli::scenario::{self, header};
use ismd_core::codec::FILE_EXTENSION;
use ismd_core::model::evaluate;

#[derive(Parser)]
#[command(name = "ismd", version, about = "In-situ model downloading simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; defaults to the config's `output`, then `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed; overrides ISMD_SEED and the config.
    #[arg(long, global = true, env = "ISMD_SEED")]
    seed: Option<u64>,
    /// Channel trials per experiment; overrides the config.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// No progress messages on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write the train and test splits as CSV.
    GenData,
    /// Train the root with exit heads and write it as a container.
    Train,
    /// Measure the plan grid and write the accuracy profile.
    Grid,
    /// Answer the configured DSI and write the outcome.
    Serve,
    /// Accuracy vs. sub-model size per technique and BER.
    SweepFig3,
    /// Link-budget table as a file.
    SweepFig4,
    /// Link-budget table; printed to stdout unless --out is given.
    Linkbudget {
        #[arg(long)]
        peak_rate: Option<f64>,
    },
    /// Full scenario: grid, library, serving, progressive upgrade and device trace.
    Run,
}

enum Failure {
    Validation(String),
    Internal(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Validation(e.0)
    }
}

impl From<ismd_core::Error> for Failure {
    fn from(e: ismd_core::Error) -> Self {
        Failure::Internal(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Internal(e.to_string())
    }
}

struct Ctx {
    loaded: LoadedConfig,
    seed: u64,
    out: PathBuf,
}

impl Cli {
    fn ctx(&self) -> Result<Ctx, Failure> {
        let path = self.config.as_deref().ok_or_else(|| Failure::Validation("--config is required".into()))?;
        let mut loaded = LoadedConfig::load(path)?;
        if let Some(t) = self.trials {
            if t == 0 {
                return Err(Failure::Validation("--trials: must be positive".into()));
            }
            loaded.config.trials = t;
        }
        let seed = self.seed.unwrap_or(loaded.config.seed);
        let out = self.out.clone().or_else(|| loaded.config.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
        Ok(Ctx { loaded, seed, out })
    }

    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Internal(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::GenData => {
            let c = cli.ctx()?;
            let (train, test) = scenario::generate_data(&c.loaded.config, c.seed)?;
            fs::create_dir_all(&c.out)?;
            train.write_csv(fs::File::create(c.out.join("train.csv"))?)?;
            test.write_csv(fs::File::create(c.out.join("test.csv"))?)?;
            cli.say(format!("wrote {} and {} samples to {}", train.len(), test.len(), c.out.display()));
        }
        Command::Train => {
            let c = cli.ctx()?;
            let prep = scenario::prepare(&c.loaded.config, c.seed)?;
            fs::create_dir_all(&c.out)?;
            fs::write(c.out.join(format!("root.{FILE_EXTENSION}")), prep.root_container.as_bytes())?;
            let acc = evaluate(&prep.root, &prep.test)?;
            write_json(
                &c.out.join("train.json"),
                &serde_json::json!({
                    "config_hash": c.loaded.hash,
                    "seed": c.seed,
                    "prng": ismd_core::rng::PRNG_ID,
                    "report": prep.train_report,
                    "test_accuracy": acc,
                    "params": prep.root.param_count(),
                    "bits": prep.root_container.bit_len(),
                }),
            )?;
            cli.say(format!("root test accuracy {acc:.4}"));
        }
        Command::Grid => {
            let c = cli.ctx()?;
            let prep = scenario::prepare(&c.loaded.config, c.seed)?;
            let profile = scenario::build_profile(&c.loaded.config, &prep, c.seed)?;
            fs::create_dir_all(&c.out)?;
            fs::write(c.out.join(format!("root.{FILE_EXTENSION}")), prep.root_container.as_bytes())?;
            profile.write_csv(fs::File::create(c.out.join("profile.csv"))?, &[header(&c.loaded.hash, c.seed)])?;
            cli.say(format!("{} plans measured", profile.rows.len()));
        }
        Command::Serve => {
            let c = cli.ctx()?;
            let cfg = &c.loaded.config;
            let prep = scenario::prepare(cfg, c.seed)?;
            let profile = scenario::build_profile(cfg, &prep, c.seed)?;
            let card = scenario::card(cfg, &prep, profile);
            let outcomes = scenario::serve_trials(cfg, &prep, &card, c.seed)?;
            fs::create_dir_all(&c.out)?;
            write_json(
                &c.out.join("serve.json"),
                &serde_json::json!({"config_hash": c.loaded.hash, "seed": c.seed, "prng": ismd_core::rng::PRNG_ID, "trials": outcomes}),
            )?;
            cli.say(format!("served {} trial(s)", outcomes.len()));
        }
        Command::SweepFig3 => {
            let c = cli.ctx()?;
            let points = scenario::sweep_fig3(&c.loaded.config, c.seed, c.loaded.config.trials)?;
            fs::create_dir_all(&c.out)?;
            scenario::write_fig3_csv(&points, fs::File::create(c.out.join("fig3.csv"))?, &[header(&c.loaded.hash, c.seed)])?;
            cli.say(format!("{} size points", points.len()));
        }
        Command::SweepFig4 => {
            let (hash, seed, lb, out) = match &cli.config {
                Some(_) => {
                    let c = cli.ctx()?;
                    (c.loaded.hash, c.seed, c.loaded.config.linkbudget, c.out)
                }
                None => (
                    scenario::no_config_hash(),
                    cli.seed.unwrap_or(0),
                    Default::default(),
                    cli.out.clone().unwrap_or_else(|| PathBuf::from("out")),
                ),
            };
            let rows = scenario::sweep_fig4(lb.peak_rate_bps, lb.experienced_rate_bps)?;
            fs::create_dir_all(&out)?;
            scenario::write_fig4(&rows, fs::File::create(out.join("fig4.csv"))?, &hash, seed, lb.peak_rate_bps)?;
            cli.say(format!("{} rows", rows.len()));
        }
        Command::Linkbudget { peak_rate } => {
            let (hash, seed, mut lb) = match &cli.config {
                Some(_) => {
                    let c = cli.ctx()?;
                    (c.loaded.hash, c.seed, c.loaded.config.linkbudget)
                }
                None => (scenario::no_config_hash(), cli.seed.unwrap_or(0), Default::default()),
            };
            if let Some(p) = peak_rate {
                if !(p.is_finite() && *p > 0.0) {
                    return Err(Failure::Validation("--peak-rate: must be positive".into()));
                }
                lb.peak_rate_bps = *p;
            }
            let rows = scenario::sweep_fig4(lb.peak_rate_bps, lb.experienced_rate_bps)?;
            match &cli.out {
                Some(out) => {
                    fs::create_dir_all(out)?;
                    scenario::write_fig4(&rows, fs::File::create(out.join("linkbudget.csv"))?, &hash, seed, lb.peak_rate_bps)?;
                }
                None => scenario::write_fig4(&rows, std::io::stdout().lock(), &hash, seed, lb.peak_rate_bps)?,
            }
        }
        Command::Run => {
            let c = cli.ctx()?;
            let report = scenario::run_scenario(&c.loaded.config, &c.loaded.hash, c.seed)?;
            scenario::write_run(&report, &c.out, &c.loaded.hash, c.seed)?;
            let s = &report.outcome["summary"];
            cli.say(format!("verdict {} mean accuracy {}", s["verdict"], s["mean_accuracy"]));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(2)
        }
    }
}
