//! Three-tier model library: cards, placement, DSI-driven plan selection,
//! serving, progressive upgrades and the device's dual-slot hot-swap.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{transmit, transmit_delta, ChannelProfile, Tier};
use crate::codec::{self, Container, Decoded, FILE_EXTENSION};
use crate::compress::grid::{AccuracyProfile, Generator, ProfileRow};
use crate::compress::prune::{build_nested_family, NestedFamily};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{evaluate, TrainHyper};
use crate::plan::{BitWidths, CompressionPlan, SplitDepth};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelClass {
    RealTime,
    NonRealTime,
    Generic,
}

impl fmt::Display for ModelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelClass::RealTime => "real-time",
            ModelClass::NonRealTime => "non-real-time",
            ModelClass::Generic => "generic",
        })
    }
}

pub fn place(class: ModelClass) -> Tier {
    match class {
        ModelClass::RealTime => Tier::Edge,
        ModelClass::NonRealTime => Tier::Local,
        ModelClass::Generic => Tier::Central,
    }
}

/// Device situation information sent with a download request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dsi {
    pub storage_bits: u64,
    /// Observed downlink rate.
    pub rate_bps: f64,
    /// Observed bit-error rate.
    pub ber: f64,
    /// Zero is accepted and makes every plan infeasible.
    pub latency_req_s: f64,
    pub accuracy_req: f64,
    /// Largest bit width the device can execute.
    pub hardware_bits: u8,
    #[serde(default)]
    pub location: String,
}

impl Dsi {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.storage_bits == 0 {
            return bad("storage_bits must be positive".into());
        }
        if !(self.rate_bps.is_finite() && self.rate_bps > 0.0) {
            return bad(format!("rate_bps must be positive, got {}", self.rate_bps));
        }
        if !(0.0..=1.0).contains(&self.ber) {
            return bad(format!("ber must be in [0, 1], got {}", self.ber));
        }
        if !(self.latency_req_s.is_finite() && self.latency_req_s >= 0.0) {
            return bad(format!("latency_req_s must be non-negative, got {}", self.latency_req_s));
        }
        if !(0.0..=1.0).contains(&self.accuracy_req) {
            return bad(format!("accuracy_req must be in [0, 1], got {}", self.accuracy_req));
        }
        if self.hardware_bits == 0 {
            return bad("hardware_bits must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelCard {
    pub id: String,
    pub task: String,
    pub class: ModelClass,
    pub tier: Tier,
    /// Root model at full precision.
    pub root: Container,
    pub profile: AccuracyProfile,
}

impl ModelCard {
    pub fn new(id: impl Into<String>, task: impl Into<String>, class: ModelClass, root: Container, profile: AccuracyProfile) -> Self {
        Self { id: id.into(), task: task.into(), class, tier: place(class), root, profile }
    }
}

/// Best feasible profile row for a request.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanChoice {
    pub row: ProfileRow,
    /// Predicted download latency over the DSI's observed rate.
    pub latency_s: f64,
    /// No feasible row reaches the requested accuracy.
    pub accuracy_shortfall: bool,
}

fn row_fits(row: &ProfileRow, dsi: &Dsi, prop_delay_s: f64) -> bool {
    row.bits <= dsi.storage_bits
        && row.bits as f64 / dsi.rate_bps + prop_delay_s <= dsi.latency_req_s
        && row.plan.widths.max_width() <= dsi.hardware_bits
}

/// Highest-accuracy row meeting storage, latency and hardware limits.
///
/// Ties prefer fewer bits, then the canonically smaller plan. `Ok(None)`
/// means nothing fits.
pub fn plan_request(dsi: &Dsi, profile: &AccuracyProfile, prop_delay_s: f64) -> Result<Option<PlanChoice>> {
    if profile.rows.is_empty() {
        return Err(Error::EmptyProfile);
    }
    dsi.validate()?;
    let best = profile.rows.iter().filter(|r| row_fits(r, dsi, prop_delay_s)).min_by(|a, b| {
        b.accuracy
            .total_cmp(&a.accuracy)
            .then(a.bits.cmp(&b.bits))
            .then_with(|| a.plan.canonical_cmp(&b.plan))
    });
    Ok(best.map(|row| PlanChoice {
        row: row.clone(),
        latency_s: row.bits as f64 / dsi.rate_bps + prop_delay_s,
        accuracy_shortfall: row.accuracy < dsi.accuracy_req,
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Feasible,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DownloadOutcome {
    pub card_id: String,
    pub tier: Tier,
    /// Plan id, absent when nothing fits.
    pub plan: Option<String>,
    /// Bits sent over the link.
    pub bits: u64,
    pub latency_s: f64,
    pub flipped_bits: u64,
    /// Accuracy of the received model on the test split.
    pub accuracy: Option<f64>,
    /// Accuracy the profile promised for the plan.
    pub profile_accuracy: Option<f64>,
    pub accuracy_shortfall: bool,
    pub param_crc_ok: bool,
    pub clamped: usize,
    pub verdict: Verdict,
}

impl DownloadOutcome {
    fn infeasible(card: &ModelCard) -> Self {
        Self {
            card_id: card.id.clone(),
            tier: card.tier,
            plan: None,
            bits: 0,
            latency_s: 0.0,
            flipped_bits: 0,
            accuracy: None,
            profile_accuracy: None,
            accuracy_shortfall: false,
            param_crc_ok: true,
            clamped: 0,
            verdict: Verdict::Infeasible,
        }
    }
}

fn verdict(bits: u64, latency_s: f64, dsi: &Dsi) -> Verdict {
    if bits <= dsi.storage_bits && latency_s <= dsi.latency_req_s {
        Verdict::Feasible
    } else {
        Verdict::Infeasible
    }
}

/// Answers `dsi` with the card's best plan, generated from the root and sent over `channel`.
///
/// `generator` must wrap the decoded card root and the datasets the profile was measured on.
pub fn serve(dsi: &Dsi, card: &ModelCard, generator: &Generator<'_>, channel: &ChannelProfile) -> Result<DownloadOutcome> {
    let Some(choice) = plan_request(dsi, &card.profile, channel.prop_delay_s)? else {
        return Ok(DownloadOutcome::infeasible(card));
    };
    let sub = generator.generate(&choice.row.plan)?;
    let (rx, link) = transmit(&sub.container, channel)?;
    let dec = codec::decode(&rx, true)?;
    let accuracy = evaluate(&dec.model, generator.test)?;
    let bits = sub.container.bit_len();
    Ok(DownloadOutcome {
        card_id: card.id.clone(),
        tier: card.tier,
        plan: Some(sub.plan.id()),
        bits,
        latency_s: link.latency_s,
        flipped_bits: link.flipped_bits,
        accuracy: Some(accuracy),
        profile_accuracy: Some(choice.row.accuracy),
        accuracy_shortfall: choice.accuracy_shortfall,
        param_crc_ok: dec.param_crc_ok,
        clamped: dec.clamped,
        verdict: verdict(bits, link.latency_s, dsi),
    })
}

/// Nested sub-models at one depth and width, ready for progressive delivery.
#[derive(Clone, Debug)]
pub struct ProgressiveSource {
    pub depth: SplitDepth,
    pub widths: BitWidths,
    pub family: NestedFamily,
}

impl ProgressiveSource {
    pub fn build(generator: &Generator<'_>, depth: SplitDepth, widths: BitWidths, retentions: &[f64], hyper: &TrainHyper) -> Result<Self> {
        let depth = depth.normalize(generator.root.depth());
        let device = crate::compress::split::split_at(generator.root, depth)?.device;
        let family = build_nested_family(&device, retentions, generator.train, hyper)?;
        Ok(Self { depth, widths, family })
    }

    pub fn plan(&self, rho: f64) -> Result<CompressionPlan> {
        CompressionPlan::new(self.depth, rho, self.widths.clone())
    }

    fn level(&self, rho: f64) -> Result<&crate::plan::PruneMask> {
        self.family
            .level(rho)
            .ok_or_else(|| Error::NotNested(format!("retention {rho} is not a level of this family")))
    }

    /// Full download of one level, without a channel.
    pub fn encode(&self, rho: f64) -> Result<Container> {
        codec::encode(&self.family.model, &self.plan(rho)?, Some(self.level(rho)?))
    }
}

/// A device's progressively upgraded download.
#[derive(Clone, Debug)]
pub struct Session {
    pub dsi: Dsi,
    pub current: Decoded,
}

impl Session {
    pub fn retention(&self) -> f64 {
        self.current.plan.retention
    }
}

fn outcome_for(card_id: &str, channel: &ChannelProfile, dsi: &Dsi, plan: &CompressionPlan, bits: u64, latency_s: f64, flipped: u64, dec: &Decoded, test: &Dataset) -> Result<DownloadOutcome> {
    Ok(DownloadOutcome {
        card_id: card_id.to_owned(),
        tier: channel.tier,
        plan: Some(plan.id()),
        bits,
        latency_s,
        flipped_bits: flipped,
        accuracy: Some(evaluate(&dec.model, test)?),
        profile_accuracy: None,
        accuracy_shortfall: false,
        param_crc_ok: dec.param_crc_ok,
        clamped: dec.clamped,
        verdict: verdict(bits, latency_s, dsi),
    })
}

/// Downloads the first level of a progressive session in full.
pub fn start_session(source: &ProgressiveSource, rho: f64, dsi: &Dsi, channel: &ChannelProfile, card_id: &str, test: &Dataset) -> Result<(Session, DownloadOutcome)> {
    let container = source.encode(rho)?;
    let (rx, link) = transmit(&container, channel)?;
    let dec = codec::decode(&rx, true)?;
    let outcome = outcome_for(card_id, channel, dsi, &dec.plan, container.bit_len(), link.latency_s, link.flipped_bits, &dec, test)?;
    Ok((Session { dsi: dsi.clone(), current: dec }, outcome))
}

/// Sends only the parameters `target_retention` adds to the session's model.
///
/// `bits` and latency count the delta's parameter bits alone.
pub fn upgrade(session: &mut Session, source: &ProgressiveSource, target_retention: f64, channel: &ChannelProfile, card_id: &str, test: &Dataset) -> Result<DownloadOutcome> {
    let base = session.current.plan.clone();
    if target_retention < base.retention {
        return Err(Error::NotNested(format!("cannot upgrade from {} down to {target_retention}", base.retention)));
    }
    let base_mask = source.level(base.retention)?;
    let target = source.plan(target_retention)?;
    let delta = codec::encode_delta(&source.family.model, &base, Some(base_mask), &target, Some(source.level(target_retention)?))?;
    let (rx, link) = transmit_delta(&delta, channel)?;
    let dec = codec::apply_delta(&session.current.model, &rx, true)?;
    let bits = delta.param_bit_len()?;
    let outcome = outcome_for(card_id, channel, &session.dsi, &target, bits, link.latency_s, link.flipped_bits, &dec, test)?;
    session.current = dec;
    Ok(outcome)
}

/// One accelerator + memory pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
#[derive(Default)]
pub enum Slot {
    #[default]
    Empty,
    Loading { model_id: String, bits_expected: u64, bits_received: u64, complete: bool },
    Active { model_id: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum DeviceEvent {
    StartDownload { model_id: String, bits: u64 },
    ChunkArrived { bits: u64 },
    DownloadComplete,
    InferRequest,
    Swap,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "response", rename_all = "snake_case")]
pub enum Response {
    Loading { slot: usize },
    Received { total: u64 },
    /// Completed download waiting for a swap.
    Ready { slot: usize },
    /// First model, activated on completion since nothing was running.
    Activated { model_id: String },
    Answered { model_id: String },
    NoModel,
    Swapped { from: String, to: String },
    Rejected { reason: String },
    ProtocolError { reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub event: DeviceEvent,
    pub response: Response,
}

/// Dual-slot device: one slot serves while the other loads.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceState {
    pub slots: [Slot; 2],
    pub log: Vec<LogEntry>,
}


impl DeviceState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn active(&self) -> Option<&str> {
        self.slots.iter().find_map(|s| match s {
            Slot::Active { model_id } => Some(model_id.as_str()),
            _ => None,
        })
    }

    fn loading_slot(&self) -> Option<usize> {
        self.slots.iter().position(|s| matches!(s, Slot::Loading { .. }))
    }

    fn transition(&mut self, event: &DeviceEvent) -> Result<Response> {
        match event {
            DeviceEvent::StartDownload { model_id, bits } => {
                let slot = self
                    .slots
                    .iter()
                    .position(|s| *s == Slot::Empty)
                    .ok_or_else(|| Error::Rejected("both slots busy".into()))?;
                self.slots[slot] =
                    Slot::Loading { model_id: model_id.clone(), bits_expected: *bits, bits_received: 0, complete: false };
                Ok(Response::Loading { slot })
            }
            DeviceEvent::ChunkArrived { bits } => match self.loading_slot().map(|i| &mut self.slots[i]) {
                Some(Slot::Loading { bits_received, complete: false, .. }) => {
                    *bits_received += bits;
                    Ok(Response::Received { total: *bits_received })
                }
                _ => Err(Error::Protocol("chunk without a download in progress".into())),
            },
            DeviceEvent::DownloadComplete => {
                let i = self.loading_slot();
                let has_active = self.active().is_some();
                match i.map(|i| (i, &mut self.slots[i])) {
                    Some((i, Slot::Loading { model_id, bits_expected, bits_received, complete: complete @ false })) => {
                        *bits_received = (*bits_received).max(*bits_expected);
                        if has_active {
                            *complete = true;
                            Ok(Response::Ready { slot: i })
                        } else {
                            let model_id = model_id.clone();
                            self.slots[i] = Slot::Active { model_id: model_id.clone() };
                            Ok(Response::Activated { model_id })
                        }
                    }
                    _ => Err(Error::Protocol("completion without a download in progress".into())),
                }
            }
            DeviceEvent::InferRequest => Ok(match self.active() {
                Some(id) => Response::Answered { model_id: id.to_owned() },
                None => Response::NoModel,
            }),
            DeviceEvent::Swap => {
                let ready = self.slots.iter().position(|s| matches!(s, Slot::Loading { complete: true, .. }));
                let (Some(new), Some(old)) = (ready, self.slots.iter().position(|s| matches!(s, Slot::Active { .. }))) else {
                    return Err(Error::Protocol("swap without a completed download".into()));
                };
                let Slot::Loading { model_id: to, .. } = std::mem::take(&mut self.slots[new]) else { unreachable!() };
                let Slot::Active { model_id: from } = std::mem::take(&mut self.slots[old]) else { unreachable!() };
                self.slots[new] = Slot::Active { model_id: to.clone() };
                Ok(Response::Swapped { from, to })
            }
        }
    }

    /// Applies one event and logs it. Errors leave the slots unchanged.
    pub fn step(&mut self, event: DeviceEvent) -> Result<Response> {
        let result = self.transition(&event);
        let response = match &result {
            Ok(r) => r.clone(),
            Err(Error::Rejected(m)) => Response::Rejected { reason: m.clone() },
            Err(e) => Response::ProtocolError { reason: e.to_string() },
        };
        self.log.push(LogEntry { event, response });
        result
    }
}

/// Functional form of [`DeviceState::step`].
pub fn device_step(mut state: DeviceState, event: DeviceEvent) -> Result<DeviceState> {
    state.step(event)?;
    Ok(state)
}

/// Registered cards plus per-tier propagation delays.
#[derive(Clone, Debug, PartialEq)]
pub struct Library {
    pub cards: BTreeMap<String, ModelCard>,
    pub prop_delays: BTreeMap<Tier, f64>,
}

impl Default for Library {
    fn default() -> Self {
        Self { cards: BTreeMap::new(), prop_delays: Tier::ALL.into_iter().map(|t| (t, t.default_prop_delay_s())).collect() }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CardFile {
    id: String,
    task: String,
    class: ModelClass,
    tier: Tier,
    root: String,
    profile: String,
}

impl Library {
    /// Adds a card at its class's tier; returns the tier.
    pub fn register(&mut self, card: ModelCard) -> Result<Tier> {
        if card.profile.rows.is_empty() {
            return Err(Error::EmptyProfile);
        }
        let tier = place(card.class);
        self.cards.insert(card.id.clone(), ModelCard { tier, ..card });
        Ok(tier)
    }

    pub fn card(&self, id: &str) -> Result<&ModelCard> {
        self.cards.get(id).ok_or_else(|| Error::UnknownId(id.to_owned()))
    }

    pub fn prop_delay(&self, tier: Tier) -> f64 {
        self.prop_delays.get(&tier).copied().unwrap_or_else(|| tier.default_prop_delay_s())
    }

    pub fn plan_request(&self, dsi: &Dsi, card_id: &str) -> Result<Option<PlanChoice>> {
        let card = self.card(card_id)?;
        plan_request(dsi, &card.profile, self.prop_delay(card.tier))
    }

    /// Writes `<id>.ismd`, `<id>.profile.csv` and `<id>.card.json` per card.
    pub fn save(&self, dir: &Path, comments: &[String]) -> Result<()> {
        fs::create_dir_all(dir)?;
        for card in self.cards.values() {
            let root = format!("{}.{FILE_EXTENSION}", card.id);
            let profile = format!("{}.profile.csv", card.id);
            fs::write(dir.join(&root), card.root.as_bytes())?;
            card.profile.write_csv(fs::File::create(dir.join(&profile))?, comments)?;
            let file = CardFile { id: card.id.clone(), task: card.task.clone(), class: card.class, tier: card.tier, root, profile };
            let mut json = serde_json::to_string_pretty(&file)?;
            json.push('\n');
            fs::write(dir.join(format!("{}.card.json", card.id)), json)?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let mut lib = Library::default();
        let mut names: Vec<_> = fs::read_dir(dir)?.collect::<std::io::Result<Vec<_>>>()?;
        names.sort_by_key(|e| e.file_name());
        for entry in names {
            let name = entry.file_name().to_string_lossy().into_owned();
            if !name.ends_with(".card.json") {
                continue;
            }
            let file: CardFile = serde_json::from_slice(&fs::read(entry.path())?)?;
            if file.tier != place(file.class) {
                return Err(Error::Format(format!("card {} placed at {} but class {} belongs at {}", file.id, file.tier, file.class, place(file.class))));
            }
            let root = Container::from_bytes(fs::read(dir.join(&file.root))?);
            let profile = AccuracyProfile::read_csv(BufReader::new(fs::File::open(dir.join(&file.profile))?))?;
            lib.register(ModelCard::new(file.id, file.task, file.class, root, profile))?;
        }
        Ok(lib)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(d: usize, rho: f64, w: u8, bits: u64, acc: f64) -> ProfileRow {
        ProfileRow { plan: CompressionPlan::new(SplitDepth::At(d), rho, BitWidths::Uniform(w)).unwrap(), bits, accuracy: acc }
    }

    fn profile(rows: Vec<ProfileRow>) -> AccuracyProfile {
        AccuracyProfile { root_id: "r".into(), dataset_id: "d".into(), seed: 1, rows }
    }

    fn dsi() -> Dsi {
        Dsi {
            storage_bits: 1_000,
            rate_bps: 1_000.0,
            ber: 0.0,
            latency_req_s: 10.0,
            accuracy_req: 0.5,
            hardware_bits: 32,
            location: String::new(),
        }
    }

    #[test]
    fn placement_follows_class() {
        assert_eq!(place(ModelClass::RealTime), Tier::Edge);
        assert_eq!(place(ModelClass::NonRealTime), Tier::Local);
        assert_eq!(place(ModelClass::Generic), Tier::Central);
    }

    #[test]
    fn unconstrained_request_takes_best_row() {
        let p = profile(vec![row(1, 1.0, 8, 100, 0.8), row(2, 1.0, 8, 200, 0.9), row(2, 0.5, 8, 150, 0.9)]);
        let c = plan_request(&dsi(), &p, 0.0).unwrap().unwrap();
        assert_eq!(c.row, p.rows[2]);
        assert!(!c.accuracy_shortfall);
    }

    #[test]
    fn constraints_and_shortfall() {
        let p = profile(vec![row(1, 1.0, 8, 100, 0.4), row(2, 1.0, 16, 200, 0.9)]);
        let mut d = dsi();
        d.hardware_bits = 8;
        let c = plan_request(&d, &p, 0.0).unwrap().unwrap();
        assert_eq!(c.row, p.rows[0]);
        assert!(c.accuracy_shortfall);
        d.storage_bits = 99;
        assert!(plan_request(&d, &p, 0.0).unwrap().is_none());
        let mut d = dsi();
        d.latency_req_s = 0.0;
        assert!(plan_request(&d, &p, 0.0).unwrap().is_none());
        assert!(matches!(plan_request(&dsi(), &profile(vec![]), 0.0), Err(Error::EmptyProfile)));
    }

    #[test]
    fn contract_trace() {
        let mut s = DeviceState::new();
        s.step(DeviceEvent::StartDownload { model_id: "a".into(), bits: 10 }).unwrap();
        s.step(DeviceEvent::DownloadComplete).unwrap();
        assert_eq!(s.active(), Some("a"));
        let trace = [
            DeviceEvent::StartDownload { model_id: "b".into(), bits: 10 },
            DeviceEvent::InferRequest,
            DeviceEvent::ChunkArrived { bits: 4 },
            DeviceEvent::InferRequest,
            DeviceEvent::DownloadComplete,
            DeviceEvent::Swap,
            DeviceEvent::InferRequest,
        ];
        let responses: Vec<Response> = trace.into_iter().map(|e| s.step(e).unwrap()).collect();
        assert_eq!(responses[1], Response::Answered { model_id: "a".into() });
        assert_eq!(responses[3], Response::Answered { model_id: "a".into() });
        assert_eq!(responses[5], Response::Swapped { from: "a".into(), to: "b".into() });
        assert_eq!(responses[6], Response::Answered { model_id: "b".into() });
    }

    #[test]
    fn illegal_events() {
        let mut s = DeviceState::new();
        assert_eq!(s.step(DeviceEvent::InferRequest).unwrap(), Response::NoModel);
        assert!(matches!(s.step(DeviceEvent::Swap), Err(Error::Protocol(_))));
        s.step(DeviceEvent::StartDownload { model_id: "a".into(), bits: 1 }).unwrap();
        s.step(DeviceEvent::DownloadComplete).unwrap();
        s.step(DeviceEvent::StartDownload { model_id: "b".into(), bits: 1 }).unwrap();
        let before = s.slots.clone();
        assert!(matches!(s.step(DeviceEvent::Swap), Err(Error::Protocol(_))));
        assert!(matches!(
            s.step(DeviceEvent::StartDownload { model_id: "c".into(), bits: 1 }),
            Err(Error::Rejected(_))
        ));
        assert_eq!(s.slots, before);
        assert!(matches!(s.log.last().unwrap().response, Response::Rejected { .. }));
    }
}
