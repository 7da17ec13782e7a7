//! Acceptance criteria 1-7. Prints one PASS/FAIL line per criterion; exits 1 if any fail.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::Rng;

use ismd_cli::config::{LoadedConfig, ScenarioConfig};
use ismd_cli::scenario::{self, Technique};
use ismd_core::codec::{apply_delta, decode, encode, encode_delta};
use ismd_core::compress::grid::{build_plan_grid, AccuracyProfile, ProfileRow, WidthChoice};
use ismd_core::compress::mixed::{allocate_bits, assignment_bits, TensorCost};
use ismd_core::compress::prune::magnitude_mask;
use ismd_core::compress::quant::quantize_uniform;
use ismd_core::compress::split::split_at;
use ismd_core::data::{gen_dataset, DataKind, Dataset};
use ismd_core::library::{plan_request, DeviceEvent, DeviceState, Dsi, Response, Slot};
use ismd_core::linkbudget::{self, feasible_fraction, required_rate};
use ismd_core::model::{build_model, evaluate, mlp_spec, ModelGraph, TensorId};
use ismd_core::plan::{BitWidths, CompressionPlan, SplitDepth};
use ismd_core::rng::{self, StreamRng};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn reference_config() -> ScenarioConfig {
    LoadedConfig::load(&workspace_root().join("reference.toml")).expect("reference.toml").config
}

fn within(v: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&v)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 0.01 * b.abs()
}

fn criterion1() -> Outcome {
    let e = |x: ismd_core::Error| x.to_string();
    let rn50 = linkbudget::resnet50().bits();
    let vgg = linkbudget::vgg16().bits();
    let vit = linkbudget::vit_large().bits();

    let a = required_rate(rn50, 1.0).map_err(e)?;
    ensure(close(a, 0.736e9) && a <= 1e9, format!("(a) ResNet-50 needs {a} bps"))?;
    let b = feasible_fraction(vgg, 1e9, 1.0).map_err(e)?;
    ensure(close(b, 0.2315) && within(1.0 - b, 0.75, 0.85), format!("(b) VGG-16 fraction {b}"))?;
    let c = required_rate(vit, 1.0).map_err(e)?;
    ensure(close(c, 9.824e9) && within(c, 9.5e9, 10.5e9), format!("(c) ViT-Large needs {c} bps"))?;
    let d = feasible_fraction(rn50, 1e9, 0.2).map_err(e)?;
    ensure(close(d, 0.272) && within(d, 0.25, 0.32), format!("(d) ResNet-50 video-call fraction {d}"))?;

    let rows = scenario::sweep_fig4(linkbudget::DEFAULT_PEAK_RATE_BPS, linkbudget::EXPERIENCED_RATE_BPS).map_err(e)?;
    let tactile = |model: &str| {
        rows.iter()
            .find(|r| r.model == model && r.app == "tactile" && r.rate_bps == linkbudget::DEFAULT_PEAK_RATE_BPS)
            .map(|r| r.feasible)
    };
    let verdicts = (tactile("ResNet-50"), tactile("VGG-16"), tactile("ViT-Large"));
    ensure(verdicts == (Some(true), Some(false), Some(false)), format!("(e) tactile verdicts {verdicts:?}"))?;
    Ok(format!(
        "ResNet-50 {:.3} Gb/s; VGG-16 removal {:.1}%; ViT-Large {:.3} Gb/s; video-call fraction {:.1}%; tactile at 1 Tb/s (assumed peak) = ResNet only",
        a / 1e9,
        (1.0 - b) * 100.0,
        c / 1e9,
        d * 100.0
    ))
}

fn criterion2() -> Outcome {
    let cfg = reference_config();
    let prep = scenario::prepare(&cfg, cfg.seed).map_err(|e| e.to_string())?;
    let clean = evaluate(&prep.root, &prep.test).map_err(|e| e.to_string())?;
    ensure(clean >= 0.90, format!("clean accuracy {clean} below 0.90"))?;
    let points = scenario::sweep_fig3_prepared(&cfg, &prep, cfg.seed, 20).map_err(|e| e.to_string())?;
    ensure(points.iter().all(|p| p.accuracies.len() == 20), "expected 20 seeds per point")?;
    let mut by_plan: BTreeMap<(String, String), BTreeMap<String, f64>> = BTreeMap::new();
    for p in &points {
        by_plan.entry((p.technique.as_str().to_owned(), p.plan.clone())).or_default().insert(p.ber.to_string(), p.mean());
    }
    for t in [Technique::Depth, Technique::Parameter, Technique::Bit] {
        ensure(points.iter().any(|p| p.technique == t), format!("no {} points", t.as_str()))?;
    }
    let mut worst_gap = 0.0f64;
    for ((tech, plan), m) in &by_plan {
        let (m0, m3, m2) = (m["0"], m["0.001"], m["0.01"]);
        worst_gap = worst_gap.max(m0 - m3);
        ensure((m0 - m3).abs() <= 0.02, format!("{tech} {plan}: ber 1e-3 mean {m3:.4} vs {m0:.4}"))?;
        ensure(m3 <= m0 + 0.01 && m2 <= m3 + 0.01, format!("{tech} {plan}: ordering {m0:.4} {m3:.4} {m2:.4}"))?;
    }
    Ok(format!("clean {clean:.4}; {} size points x 3 BERs x 20 seeds; worst 1e-3 drop {:.2} points", by_plan.len(), worst_gap * 100.0))
}

fn oracle(d: &Dsi, p: &AccuracyProfile, prop: f64) -> Option<ProfileRow> {
    let mut best: Option<&ProfileRow> = None;
    for r in &p.rows {
        let fits = r.bits <= d.storage_bits
            && r.bits as f64 / d.rate_bps + prop <= d.latency_req_s
            && r.plan.widths.max_width() <= d.hardware_bits;
        let better = best.is_none_or(|b| {
            r.accuracy > b.accuracy
                || (r.accuracy == b.accuracy
                    && (r.bits < b.bits || (r.bits == b.bits && r.plan.canonical_cmp(&b.plan).is_lt())))
        });
        if fits && better {
            best = Some(r);
        }
    }
    best.cloned()
}

fn dsi(storage_bits: u64, rate_bps: f64, latency_req_s: f64, hardware_bits: u8) -> Dsi {
    Dsi { storage_bits, rate_bps, ber: 0.0, latency_req_s, accuracy_req: 0.9, hardware_bits, location: String::new() }
}

fn random_profile(r: &mut StreamRng) -> AccuracyProfile {
    let depths = [SplitDepth::At(1), SplitDepth::At(2), SplitDepth::Full];
    let rows = (0..r.gen_range(1..25))
        .map(|_| ProfileRow {
            plan: CompressionPlan::new(
                depths[r.gen_range(0..3)],
                [1.0, 0.5, 0.2][r.gen_range(0..3)],
                BitWidths::Uniform([2, 4, 8, 16, 32][r.gen_range(0..5)]),
            )
            .unwrap(),
            bits: r.gen_range(1..40) * 100,
            accuracy: 0.7 + f64::from(r.gen_range(0..6u32)) * 0.05,
        })
        .collect();
    AccuracyProfile { root_id: "r".into(), dataset_id: "d".into(), seed: 0, rows }
}

fn greedy_gap_report() -> (usize, Vec<String>) {
    let cells: Vec<(u64, f64)> = [1u64, 3, 7].iter().flat_map(|&p| [0.0, 0.1, 0.35].map(move |s| (p, s))).collect();
    let choice_sets: [&[u8]; 4] = [&[4], &[2, 8], &[2, 4, 8], &[3, 5, 6]];
    let (mut instances, mut gaps) = (0, Vec::new());
    let mut combos: Vec<Vec<(u64, f64)>> = vec![vec![]];
    for _ in 0..3 {
        let mut next = Vec::new();
        for c in &combos {
            for &cell in &cells {
                let mut c = c.clone();
                c.push(cell);
                next.push(c);
            }
        }
        combos = next.clone();
        for combo in &next {
            let tensors: Vec<TensorCost> = combo
                .iter()
                .enumerate()
                .map(|(i, &(params, sensitivity))| TensorCost { id: TensorId::Weight(i + 1), params, sensitivity })
                .collect();
            for choices in choice_sets {
                let mut all = vec![BTreeMap::new()];
                for t in &tensors {
                    all = all
                        .into_iter()
                        .flat_map(|a: BTreeMap<TensorId, u8>| {
                            choices.iter().map(move |&c| {
                                let mut a = a.clone();
                                a.insert(t.id, c);
                                a
                            })
                        })
                        .collect();
                }
                let proxy = |a: &BTreeMap<TensorId, u8>| -> f64 {
                    tensors.iter().filter(|t| a[&t.id] == choices[0]).map(|t| t.sensitivity).sum()
                };
                let mut budgets: Vec<u64> = all.iter().map(|a| assignment_bits(&tensors, a)).collect();
                budgets.sort_unstable();
                budgets.dedup();
                for budget in budgets {
                    instances += 1;
                    let g = allocate_bits(&tensors, budget, choices).unwrap();
                    assert!(assignment_bits(&tensors, &g) <= budget, "greedy over budget");
                    let best = all
                        .iter()
                        .filter(|a| assignment_bits(&tensors, a) <= budget)
                        .map(&proxy)
                        .fold(f64::INFINITY, f64::min);
                    let gap = proxy(&g) - best;
                    if gap > 1e-12 {
                        gaps.push(format!("tensors={combo:?} choices={choices:?} budget={budget} gap={gap:.3}"));
                    }
                }
            }
        }
    }
    (instances, gaps)
}

fn numeric_gradient_error(model: &ModelGraph, ds: &Dataset) -> f64 {
    let (_, grads) = model.loss_gradient(ds).unwrap();
    let mut worst = 0.0f64;
    for (id, g) in &grads {
        for (i, a) in g.iter().enumerate() {
            let h = 1e-5;
            let mut plus = model.clone();
            plus.tensor_mut(*id).unwrap()[i] += h;
            let mut minus = model.clone();
            minus.tensor_mut(*id).unwrap()[i] -= h;
            let b = (plus.loss(ds).unwrap() - minus.loss(ds).unwrap()) / (2.0 * h);
            worst = worst.max((a - b).abs() / (a.abs() + b.abs()).max(1e-7));
        }
    }
    worst
}

fn criterion3(cfg: &ScenarioConfig) -> Outcome {
    let mut r = rng::stream(3, "acceptance/oracle", 0);
    for i in 0..2000 {
        let p = random_profile(&mut r);
        let d = dsi(r.gen_range(100..4000), r.gen_range(1e3..1e5), r.gen_range(0.0..2.0), [2, 4, 8, 16, 32][r.gen_range(0..5)]);
        let prop = f64::from(r.gen_range(0..50u32)) * 1e-3;
        let got = plan_request(&d, &p, prop).map_err(|e| e.to_string())?.map(|c| c.row);
        ensure(got == oracle(&d, &p, prop), format!("random grid {i}: plan_request differs from exhaustive search"))?;
    }
    let prep = scenario::prepare(cfg, cfg.seed).map_err(|e| e.to_string())?;
    let gen = prep.generator(cfg, cfg.seed);
    let (rows, _) = build_plan_grid(&gen, &cfg.grid.depths, &cfg.grid.retentions, &cfg.grid.widths).map_err(|e| e.to_string())?;
    let profile = AccuracyProfile { root_id: prep.root_id(), dataset_id: scenario::dataset_id(cfg), seed: cfg.seed, rows };
    let mut bits: Vec<u64> = profile.rows.iter().map(|r| r.bits).collect();
    bits.sort_unstable();
    for &storage in &bits {
        for rate in [1e5, 1e6, 1e7] {
            for latency in [0.0, 0.02, 0.05, 0.2, 1.0] {
                for hw in [4u8, 8, 32] {
                    let d = dsi(storage, rate, latency, hw);
                    let got = plan_request(&d, &profile, 1e-3).map_err(|e| e.to_string())?.map(|c| c.row);
                    ensure(got == oracle(&d, &profile, 1e-3), format!("reference grid: mismatch at storage {storage}"))?;
                }
            }
        }
    }

    let (instances, gaps) = greedy_gap_report();
    for g in &gaps {
        println!("    allocation gap: {g}");
    }

    let (rings, _) = gen_dataset(DataKind::Rings, 24, 3, 0.1, 5).map_err(|e| e.to_string())?;
    let mlp = build_model(&mlp_spec(2, &[6, 5], 3), 11).map_err(|e| e.to_string())?;
    let device = split_at(&prep.root, SplitDepth::At(1)).map_err(|e| e.to_string())?.device;
    let small = prep.train.select(&(0..12).collect::<Vec<_>>());
    let grad_err = numeric_gradient_error(&mlp, &rings).max(numeric_gradient_error(&device, &small));
    ensure(grad_err <= 1e-4, format!("gradient relative error {grad_err:e}"))?;
    Ok(format!(
        "plan_request = exhaustive on 2000 random grids and {} reference requests; greedy allocation: {instances} instances, {} with a proxy gap (listed above); gradient rel. error {grad_err:.1e}",
        bits.len() * 45,
        gaps.len()
    ))
}

fn criterion4(cfg: &ScenarioConfig) -> Outcome {
    let mut r = rng::stream(4, "acceptance/structure", 0);
    let mut checked = 0;
    for case in 0..200u64 {
        let hidden: Vec<usize> = (0..r.gen_range(1..4)).map(|_| r.gen_range(2..12)).collect();
        let classes = r.gen_range(2..5);
        let m = build_model(&mlp_spec(r.gen_range(1..5), &hidden, classes), case).map_err(|e| e.to_string())?;
        let bits = r.gen_range(2..=32u8);
        let (lo, hi) = {
            let a = r.gen_range(0.05..=1.0);
            let b = r.gen_range(0.05..=1.0);
            if a <= b { (a, b) } else { (b, a) }
        };
        let (ml, mh) = (magnitude_mask(&m, lo).unwrap(), magnitude_mask(&m, hi).unwrap());
        ensure(ml.is_subset_of(&mh), format!("case {case}: masks {lo} and {hi} not nested"))?;

        let plan = |rho| CompressionPlan::new(SplitDepth::Full, rho, BitWidths::Uniform(bits)).unwrap();
        let c = encode(&m, &plan(hi), Some(&mh)).unwrap();
        let d = decode(&c, false).unwrap();
        let again = encode(&d.model, &d.plan, d.mask.as_ref()).unwrap();
        ensure(again.as_bytes() == c.as_bytes(), format!("case {case}: codec round trip not byte-identical"))?;
        let pbits = c.param_bit_len().unwrap();
        ensure(pbits == mh.kept() as u64 * u64::from(bits), format!("case {case}: parameter bits {pbits}"))?;
        let topo = c.topology_len().unwrap();
        ensure(
            c.as_bytes().len() == 4 + 2 + 4 + topo + 4 + 8 + pbits.div_ceil(8) as usize + 4,
            format!("case {case}: container length"),
        )?;

        let src = mh.apply(&m).unwrap();
        let base = decode(&encode(&src, &plan(lo), Some(&ml)).unwrap(), false).unwrap();
        let direct = decode(&encode(&src, &plan(hi), Some(&mh)).unwrap(), false).unwrap();
        let delta = encode_delta(&src, &plan(lo), Some(&ml), &plan(hi), Some(&mh)).unwrap();
        let merged = apply_delta(&base.model, &delta, false).unwrap();
        ensure(merged.model.param_bytes() == direct.model.param_bytes(), format!("case {case}: delta identity"))?;

        for id in m.tensor_ids() {
            let t = m.tensor(id).unwrap();
            let q = quantize_uniform(t, bits).unwrap();
            let deq = q.dequantize();
            ensure(
                t.iter().zip(&deq).all(|(w, v)| (w - v).abs() <= q.scale / 2.0 + 1e-12 * q.scale),
                format!("case {case}: quantizer bound on {id}"),
            )?;
        }
        checked += 1;
    }

    let prep = scenario::prepare(cfg, cfg.seed).map_err(|e| e.to_string())?;
    let root = &prep.root;
    for d in 1..=root.depth() {
        let pair = split_at(root, SplitDepth::At(d)).map_err(|e| e.to_string())?;
        for _ in 0..50 {
            let x: Vec<f64> = (0..root.input_width()).map(|_| r.gen_range(-5.0..5.0)).collect();
            let full = root.predict_proba(&x).unwrap();
            let composed = if pair.server.is_empty() {
                pair.device.predict_proba(&x).unwrap()
            } else {
                pair.server.forward(&pair.device_features(&x).unwrap()).unwrap()
            };
            ensure(composed == full, format!("split at {d} changes the output"))?;
        }
    }
    Ok(format!("{checked} random models: nesting, codec round trip, bit accounting, delta identity, quantizer bound; split identity at {} depths", root.depth()))
}

fn criterion5(cfg: &ScenarioConfig) -> Outcome {
    let mut full = Vec::new();
    let mut half = Vec::new();
    for seed in 0..10u64 {
        let prep = scenario::prepare(cfg, seed).map_err(|e| e.to_string())?;
        let gen = prep.generator(cfg, seed);
        for (rho, out) in [(1.0, &mut full), (0.5, &mut half)] {
            let (m, _) = gen.pruned(SplitDepth::Full, rho).map_err(|e| e.to_string())?;
            out.push(evaluate(&m, &prep.test).map_err(|e| e.to_string())?);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (m1, m5) = (mean(&full), mean(&half));
    ensure(m1 - m5 <= 0.05, format!("retention 0.5 mean {m5:.4} vs 1.0 mean {m1:.4}"))?;

    let prep = scenario::prepare(cfg, cfg.seed).map_err(|e| e.to_string())?;
    let gen = prep.generator(cfg, cfg.seed);
    let (model, _) = gen.pruned(SplitDepth::Full, 1.0).map_err(|e| e.to_string())?;
    let mut acc = BTreeMap::new();
    for choice in [WidthChoice::Uniform(32), WidthChoice::mixed(4)] {
        let widths = gen.resolve(&model, None, &choice).map_err(|e| e.to_string())?;
        let c = encode(&model, &CompressionPlan::new(SplitDepth::Full, 1.0, widths).map_err(|e| e.to_string())?, None)
            .map_err(|e| e.to_string())?;
        acc.insert(choice.to_string(), gen.accuracy(&c).map_err(|e| e.to_string())?);
    }
    let (a32, a4) = (acc["32"], acc["mixed4"]);
    ensure(a32 - a4 <= 0.03, format!("mixed4 {a4:.4} vs 32-bit {a32:.4}"))?;
    Ok(format!("10-seed mean: retention 1.0 {m1:.4}, 0.5 {m5:.4}; mixed4 {a4:.4} vs 32-bit {a32:.4}"))
}

fn legal_event(s: &DeviceState, r: &mut StreamRng, next_id: &mut u32) -> DeviceEvent {
    let loading = s.slots.iter().find_map(|x| match x {
        Slot::Loading { complete, .. } => Some(*complete),
        _ => None,
    });
    let mut options = vec![DeviceEvent::InferRequest];
    if s.slots.contains(&Slot::Empty) {
        *next_id += 1;
        options.push(DeviceEvent::StartDownload { model_id: format!("m{next_id}"), bits: r.gen_range(1..1000) });
    }
    if loading == Some(false) {
        options.push(DeviceEvent::ChunkArrived { bits: r.gen_range(1..500) });
        options.push(DeviceEvent::DownloadComplete);
    }
    if loading == Some(true) && s.active().is_some() {
        options.push(DeviceEvent::Swap);
    }
    options.swap_remove(r.gen_range(0..options.len()))
}

fn criterion6() -> Outcome {
    let (mut infers, mut swaps, mut rejected) = (0, 0, 0);
    for trace in 0..1000u64 {
        let mut r = rng::stream(6, "acceptance/device", trace);
        let (mut s, mut ids, mut loaded) = (DeviceState::new(), 0, false);
        for step in 0..r.gen_range(5..60) {
            let ev = legal_event(&s, &mut r, &mut ids);
            match s.step(ev).map_err(|e| format!("trace {trace} step {step}: legal event failed: {e}"))? {
                Response::Activated { .. } => loaded = true,
                Response::Answered { .. } => infers += 1,
                Response::NoModel => ensure(!loaded, format!("trace {trace} step {step}: unanswered inference"))?,
                Response::Swapped { .. } => swaps += 1,
                _ => {}
            }
        }
    }
    for trace in 0..1000u64 {
        let mut r = rng::stream(6, "acceptance/device-swap", trace);
        let (mut s, mut ids) = (DeviceState::new(), 0);
        for _ in 0..30 {
            let ev = if r.gen_bool(0.3) { DeviceEvent::Swap } else { legal_event(&s, &mut r, &mut ids) };
            let legal = ev != DeviceEvent::Swap
                || (s.active().is_some() && s.slots.iter().any(|x| matches!(x, Slot::Loading { complete: true, .. })));
            let before = s.slots.clone();
            let res = s.step(ev);
            if !legal {
                ensure(res.is_err() && s.slots == before, format!("trace {trace}: illegal swap accepted"))?;
                rejected += 1;
            } else {
                ensure(res.is_ok(), format!("trace {trace}: legal event refused"))?;
            }
        }
    }
    Ok(format!("1000 legal traces ({infers} answered inferences, {swaps} swaps), {rejected} illegal swaps rejected"))
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn criterion7() -> Outcome {
    let mut trees = Vec::new();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    for run in 0..2 {
        let out = tmp.path().join(format!("run{run}"));
        let status = Command::new(env!("CARGO_BIN_EXE_ismd"))
            .current_dir(workspace_root())
            .args(["run", "--config", "reference.toml", "--seed", "42", "--quiet", "--out"])
            .arg(&out)
            .env_remove("ISMD_SEED")
            .status()
            .map_err(|e| e.to_string())?;
        ensure(status.success(), format!("run {run} exited with {status}"))?;
        trees.push(snapshot(&out));
    }
    ensure(!trees[0].is_empty(), "no report files written")?;
    let names: Vec<_> = trees[0].keys().map(|p| p.display().to_string()).collect();
    ensure(trees[0] == trees[1], "report trees differ")?;
    Ok(format!("{} files byte-identical: {}", names.len(), names.join(", ")))
}

fn main() -> ExitCode {
    let started = Instant::now();
    let cfg = reference_config();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("link budget", Box::new(criterion1)),
        ("BER robustness", Box::new(criterion2)),
        ("oracle equivalences", Box::new(|| criterion3(&cfg))),
        ("structural exactness", Box::new(|| criterion4(&cfg))),
        ("compression trend", Box::new(|| criterion5(&cfg))),
        ("hot-swap liveness", Box::new(criterion6)),
        ("end-to-end determinism", Box::new(criterion7)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {} ({name}, {secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}, {secs:.1}s): {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} passed in {:.1}s", criteria.len() - failed, criteria.len(), started.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
