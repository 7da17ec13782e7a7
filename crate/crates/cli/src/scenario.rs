//! End-to-end scenario runs and the two sweep reports.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use ismd_core::channel::{transmit, ChannelProfile, Tier};
use ismd_core::codec::{self, Container};
use ismd_core::compress::grid::{build_plan_grid, AccuracyProfile, Generator};
use ismd_core::data::{gen_dataset, Dataset};
use ismd_core::library::{
    serve, start_session, upgrade, DeviceEvent, DeviceState, DownloadOutcome, Library, ModelCard, ProgressiveSource,
    Verdict,
};
use ismd_core::linkbudget::{default_apps, default_roots, figure4_report, write_report_csv, LinkBudgetRow};
use ismd_core::model::{attach_exits, build_model, evaluate, mlp_spec, train, ModelGraph, TrainReport};
use ismd_core::plan::{BitWidths, CompressionPlan, SplitDepth};
use ismd_core::rng::{derive_seed, tags, PRNG_ID};
use ismd_core::Result;

use crate::config::{hash_text, ScenarioConfig};

/// `# config_hash=… seed=… prng=…`, without the `# `.
pub fn header(config_hash: &str, seed: u64) -> String {
    format!("config_hash={config_hash} seed={seed} prng={PRNG_ID}")
}

/// Datasets plus the trained root with exit heads, in canonical (32-bit decoded) form.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub train: Dataset,
    pub test: Dataset,
    pub root: ModelGraph,
    pub root_container: Container,
    pub train_report: TrainReport,
}

pub fn generate_data(cfg: &ScenarioConfig, seed: u64) -> Result<(Dataset, Dataset)> {
    let d = &cfg.dataset;
    gen_dataset(d.kind, d.n, d.num_classes, d.noise, seed)
}

pub fn prepare(cfg: &ScenarioConfig, seed: u64) -> Result<Prepared> {
    let (train_ds, test_ds) = generate_data(cfg, seed)?;
    let init = build_model(&mlp_spec(train_ds.dim(), &cfg.model.hidden, cfg.dataset.num_classes), seed)?;
    let (trained, train_report) = train(&init, &train_ds, &cfg.train.with_seed(seed))?;
    let depths: Vec<usize> = (1..cfg.root_depth()).collect();
    let with_exits = attach_exits(&trained, &depths, &train_ds, &cfg.exits.with_seed(seed))?;
    // The grid is measured on the root as the library stores it.
    let root_container = codec::encode(&with_exits, &CompressionPlan::full(), None)?;
    let root = codec::decode(&root_container, false)?.model;
    Ok(Prepared { train: train_ds, test: test_ds, root, root_container, train_report })
}

impl Prepared {
    pub fn generator(&self, cfg: &ScenarioConfig, seed: u64) -> Generator<'_> {
        Generator::new(&self.root, &self.train, &self.test, cfg.finetune.with_seed(seed))
    }

    pub fn root_id(&self) -> String {
        hex_prefix(self.root_container.as_bytes())
    }
}

fn hex_prefix(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub fn dataset_id(cfg: &ScenarioConfig) -> String {
    let d = &cfg.dataset;
    format!("{}-n{}-c{}-noise{}", serde_json::to_value(d.kind).unwrap().as_str().unwrap(), d.n, d.num_classes, d.noise)
}

pub fn build_profile(cfg: &ScenarioConfig, prep: &Prepared, seed: u64) -> Result<AccuracyProfile> {
    let gen = prep.generator(cfg, seed);
    let (rows, _) = build_plan_grid(&gen, &cfg.grid.depths, &cfg.grid.retentions, &cfg.grid.widths)?;
    Ok(AccuracyProfile { root_id: prep.root_id(), dataset_id: dataset_id(cfg), seed, rows })
}

pub fn card(cfg: &ScenarioConfig, prep: &Prepared, profile: AccuracyProfile) -> ModelCard {
    ModelCard::new(cfg.card.id.clone(), cfg.card.task.clone(), cfg.card.class, prep.root_container.clone(), profile)
}

fn trial_channel(cfg: &ScenarioConfig, tier: Tier, seed: u64, trial: usize) -> ChannelProfile {
    cfg.channel(tier, derive_seed(seed, tags::CHANNEL, trial as u64))
}

/// Serves the DSI once per trial.
pub fn serve_trials(cfg: &ScenarioConfig, prep: &Prepared, card: &ModelCard, seed: u64) -> Result<Vec<DownloadOutcome>> {
    let gen = prep.generator(cfg, seed);
    (0..cfg.trials).map(|t| serve(&cfg.dsi, card, &gen, &trial_channel(cfg, card.tier, seed, t))).collect()
}

/// Full download of the first level, then one delta per further level.
pub fn progressive_run(cfg: &ScenarioConfig, prep: &Prepared, card: &ModelCard, seed: u64) -> Result<Option<Vec<DownloadOutcome>>> {
    let Some(p) = &cfg.progressive else { return Ok(None) };
    let gen = prep.generator(cfg, seed);
    let hyper = cfg.finetune.with_seed(derive_seed(seed, tags::NESTED, 0));
    let source = ProgressiveSource::build(&gen, p.depth, BitWidths::Uniform(p.widths), &p.retentions, &hyper)?;
    let channel = trial_channel(cfg, card.tier, seed, 0);
    let (mut session, first) = start_session(&source, p.retentions[0], &cfg.dsi, &channel, &card.id, &prep.test)?;
    let mut out = vec![first];
    for (k, &rho) in p.retentions.iter().enumerate().skip(1) {
        let ch = channel.with_seed(derive_seed(seed, tags::CHANNEL, k as u64));
        out.push(upgrade(&mut session, &source, rho, &ch, &card.id, &prep.test)?);
    }
    Ok(Some(out))
}

/// Replays downloads on a dual-slot device: each arrives in four chunks
/// with an inference request after every chunk.
pub fn device_trace(downloads: &[(String, u64)]) -> DeviceState {
    let mut state = DeviceState::new();
    for (id, bits) in downloads {
        let mut events = vec![DeviceEvent::StartDownload { model_id: id.clone(), bits: *bits }];
        let chunk = bits.div_ceil(4);
        let mut left = *bits;
        while left > 0 {
            let b = chunk.min(left);
            events.push(DeviceEvent::ChunkArrived { bits: b });
            events.push(DeviceEvent::InferRequest);
            left -= b;
        }
        events.push(DeviceEvent::DownloadComplete);
        if state.active().is_some() {
            events.push(DeviceEvent::Swap);
        }
        events.push(DeviceEvent::InferRequest);
        for e in events {
            // Every event above is legal by construction.
            state.step(e).expect("legal device trace");
        }
    }
    state
}

pub fn write_trace_csv<W: Write>(state: &DeviceState, w: W, comments: &[String]) -> Result<()> {
    let mut w = w;
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["step", "event", "response"])?;
    for (i, e) in state.log.iter().enumerate() {
        out.write_record([i.to_string(), serde_json::to_string(&e.event)?, serde_json::to_string(&e.response)?])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub outcome: Value,
    pub profile: AccuracyProfile,
    pub trace: DeviceState,
    pub library: Library,
    pub trials: Vec<DownloadOutcome>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn run_scenario(cfg: &ScenarioConfig, config_hash: &str, seed: u64) -> Result<RunReport> {
    let prep = prepare(cfg, seed)?;
    let profile = build_profile(cfg, &prep, seed)?;
    let mut library = Library::default();
    for (&tier, c) in &cfg.channels {
        library.prop_delays.insert(tier, c.prop_delay_s.unwrap_or(tier.default_prop_delay_s()));
    }
    library.register(card(cfg, &prep, profile.clone()))?;
    let card = library.card(&cfg.card.id)?.clone();
    let choice = library.plan_request(&cfg.dsi, &card.id)?;
    let trials = serve_trials(cfg, &prep, &card, seed)?;
    let progressive = progressive_run(cfg, &prep, &card, seed)?;

    let downloads: Vec<(String, u64)> = match &progressive {
        Some(p) => p.iter().map(|o| (o.plan.clone().unwrap_or_default(), o.bits)).collect(),
        None => trials.iter().take(1).filter_map(|o| o.plan.clone().map(|p| (p, o.bits))).collect(),
    };
    let trace = device_trace(&downloads);

    let accs: Vec<f64> = trials.iter().filter_map(|o| o.accuracy).collect();
    let verdict = if trials.iter().all(|o| o.verdict == Verdict::Feasible) { Verdict::Feasible } else { Verdict::Infeasible };
    let outcome = json!({
        "config_hash": config_hash,
        "seed": seed,
        "prng": PRNG_ID,
        "card": {"id": card.id, "class": card.class, "tier": card.tier},
        "root": {
            "bits": prep.root_container.bit_len(),
            "params": prep.root.param_count(),
            "train_accuracy": prep.train_report.train_acc,
            "test_accuracy": evaluate(&prep.root, &prep.test)?,
        },
        "request": choice.map(|c| json!({
            "plan": c.row.plan.id(),
            "bits": c.row.bits,
            "profile_accuracy": c.row.accuracy,
            "predicted_latency_s": c.latency_s,
            "accuracy_shortfall": c.accuracy_shortfall,
        })),
        "summary": {
            "verdict": verdict,
            "trials": trials.len(),
            "mean_accuracy": if accs.is_empty() { Value::Null } else { json!(mean(&accs)) },
            "min_accuracy": accs.iter().copied().reduce(f64::min),
        },
        "trials": trials,
        "progressive": progressive,
    });
    Ok(RunReport { outcome, profile, trace, library, trials })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Writes `outcome.json`, `profile.csv`, `device_trace.csv` and `catalog/`.
pub fn write_run(report: &RunReport, out: &Path, config_hash: &str, seed: u64) -> Result<()> {
    fs::create_dir_all(out)?;
    let comments = [header(config_hash, seed)];
    write_json(&out.join("outcome.json"), &report.outcome)?;
    report.profile.write_csv(fs::File::create(out.join("profile.csv"))?, &comments)?;
    write_trace_csv(&report.trace, fs::File::create(out.join("device_trace.csv"))?, &comments)?;
    report.library.save(&out.join("catalog"), &comments)?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Technique {
    Depth,
    Parameter,
    Bit,
}

impl Technique {
    pub fn as_str(self) -> &'static str {
        match self {
            Technique::Depth => "depth",
            Technique::Parameter => "parameter",
            Technique::Bit => "bit",
        }
    }
}

/// One measured size point of one technique at one BER.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fig3Point {
    pub technique: Technique,
    pub plan: String,
    pub bits: u64,
    pub ber: f64,
    /// One accuracy per trial seed.
    pub accuracies: Vec<f64>,
}

impl Fig3Point {
    pub fn mean(&self) -> f64 {
        mean(&self.accuracies)
    }

    /// Sample standard deviation; 0 for a single trial.
    pub fn stddev(&self) -> f64 {
        let n = self.accuracies.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        (self.accuracies.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    }
}

/// Size points per technique: split depths, retentions and bit widths, each
/// varying one knob from the full root.
pub fn fig3_plans(cfg: &ScenarioConfig) -> Result<Vec<(Technique, CompressionPlan)>> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| ismd_core::Error::InvalidArgument("config has no [sweep] section".into()))?;
    let payload = BitWidths::Uniform(sweep.payload_bits);
    let mut plans = Vec::new();
    for &d in &cfg.grid.depths {
        plans.push((Technique::Depth, CompressionPlan::new(d.normalize(cfg.root_depth()), 1.0, payload.clone())?));
    }
    for &r in &cfg.grid.retentions {
        plans.push((Technique::Parameter, CompressionPlan::new(SplitDepth::Full, r, payload.clone())?));
    }
    for &b in &sweep.bit_widths {
        plans.push((Technique::Bit, CompressionPlan::new(SplitDepth::Full, 1.0, BitWidths::Uniform(b))?));
    }
    Ok(plans)
}

/// Accuracy of every size point under every configured BER, `trials` seeds each.
pub fn sweep_fig3(cfg: &ScenarioConfig, seed: u64, trials: usize) -> Result<Vec<Fig3Point>> {
    let prep = prepare(cfg, seed)?;
    sweep_fig3_prepared(cfg, &prep, seed, trials)
}

pub fn sweep_fig3_prepared(cfg: &ScenarioConfig, prep: &Prepared, seed: u64, trials: usize) -> Result<Vec<Fig3Point>> {
    let plans = fig3_plans(cfg)?;
    let gen = prep.generator(cfg, seed);
    let bers = &cfg.sweep.as_ref().expect("checked by fig3_plans").bers;
    let mut out = Vec::new();
    for (technique, plan) in plans {
        let sub = gen.generate(&plan)?;
        for &ber in bers {
            let mut accuracies = Vec::with_capacity(trials);
            for t in 0..trials {
                let ch = ChannelProfile::for_tier(Tier::Edge, 1.0, ber, derive_seed(seed, tags::CHANNEL, t as u64));
                let (rx, _) = transmit(&sub.container, &ch)?;
                accuracies.push(gen.accuracy(&rx)?);
            }
            out.push(Fig3Point { technique, plan: sub.plan.id(), bits: sub.container.bit_len(), ber, accuracies });
        }
    }
    Ok(out)
}

/// `technique,plan,bits,ber,trial,accuracy`; each point is followed by `mean` and `stddev` rows.
pub fn write_fig3_csv<W: Write>(points: &[Fig3Point], mut w: W, comments: &[String]) -> Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["technique", "plan", "bits", "ber", "trial", "accuracy"])?;
    for p in points {
        let base = [p.technique.as_str().to_owned(), p.plan.clone(), p.bits.to_string(), p.ber.to_string()];
        for (t, a) in p.accuracies.iter().enumerate() {
            out.write_record(base.iter().cloned().chain([t.to_string(), a.to_string()]))?;
        }
        out.write_record(base.iter().cloned().chain(["mean".to_owned(), p.mean().to_string()]))?;
        out.write_record(base.iter().cloned().chain(["stddev".to_owned(), p.stddev().to_string()]))?;
    }
    out.flush()?;
    Ok(())
}

/// Link-budget table at the experienced and peak rates.
pub fn sweep_fig4(peak_rate_bps: f64, experienced_rate_bps: f64) -> Result<Vec<LinkBudgetRow>> {
    figure4_report(&default_roots(), &default_apps(), &[experienced_rate_bps, peak_rate_bps])
}

pub fn write_fig4<W: Write>(rows: &[LinkBudgetRow], w: W, config_hash: &str, seed: u64, peak_rate_bps: f64) -> Result<()> {
    let comments = [
        header(config_hash, seed),
        format!("assumed peak_rate_bps={peak_rate_bps}"),
    ];
    write_report_csv(rows, w, &comments)
}

/// Hash recorded when a command runs without a config file.
pub fn no_config_hash() -> String {
    hash_text("")
}
