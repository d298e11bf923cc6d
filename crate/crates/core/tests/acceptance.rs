//! Acceptance criteria 1-8. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use grayspace::engine::{cell_gray_channels, PreparedScenario, RunOptions, Scenario};
use grayspace::griddata::{compensate_area, HouseholdGrid};
use grayspace::linkbudget::{achieved_ci, quantize_distance, separation_report, verify_margin};
use grayspace::propagation::path_loss;
use grayspace::scenario::{MuxSet, ReceiverRealization};
use grayspace::stats::CdfCurve;
use grayspace::streams::RealizationStream;
use grayspace::synth::{synthesize, SynthSpec};
use grayspace::{
    run_monte_carlo, ChannelPlan, ChannelRelation, DeviceProfile, Environment, Execution,
    HataParams, KnowledgeConfig, ProtectionCriteria, ShareInterpretation,
    TimePeriod,
};

use common::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn rel_within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target.abs()
}

fn suburban(hb: f64) -> HataParams {
    HataParams::new(650.0, hb, 10.0, Environment::Suburban).unwrap()
}

struct Fixture {
    grid: HouseholdGrid,
    criteria: ProtectionCriteria,
    hata: HataParams,
    plan: ChannelPlan,
}

impl Fixture {
    fn new(grid: HouseholdGrid) -> Self {
        Self {
            grid,
            criteria: ProtectionCriteria::ofcom(),
            hata: suburban(30.0),
            plan: ChannelPlan::abstract_default(),
        }
    }

    fn prepare<'a>(
        &'a self,
        device: &'a DeviceProfile,
        knowledge: &'a KnowledgeConfig,
        options: RunOptions,
    ) -> PreparedScenario<'a> {
        PreparedScenario::new(self.scenario(device, knowledge), options).unwrap()
    }

    fn scenario<'a>(&'a self, device: &'a DeviceProfile, knowledge: &'a KnowledgeConfig) -> Scenario<'a> {
        Scenario {
            grid: &self.grid,
            device,
            criteria: &self.criteria,
            hata: &self.hata,
            plan: &self.plan,
            knowledge,
        }
    }
}

fn random_grid(rng: &mut TestRng, rows: usize, cols: usize, res: f64, density: f64) -> HouseholdGrid {
    let counts = (0..rows * cols)
        .map(|_| if rng.chance(density) { 1 + rng.below(12) as u32 } else { 0 })
        .collect();
    HouseholdGrid::from_counts(rows, cols, res, counts, None).unwrap()
}

fn options(realizations: usize, seed: u64) -> RunOptions {
    RunOptions { realizations, master_seed: seed, ..RunOptions::default() }
}

fn knowledge_ladder() -> Vec<KnowledgeConfig> {
    vec![
        KnowledgeConfig::kl1(),
        KnowledgeConfig::kl2(),
        KnowledgeConfig::kl3(TimePeriod::TP2, ShareInterpretation::Unconditional),
        KnowledgeConfig::kl3(TimePeriod::TP1, ShareInterpretation::Unconditional),
    ]
}

fn c1_table_ii() -> Outcome {
    let start = Instant::now();
    let ofcom = ProtectionCriteria::ofcom();
    // (device, h_b, E_TCR, L_min co/adj, d_min co/adj in m) as published.
    let rows = [
        (DeviceProfile::fixed_4w(), 30.0, 140.8, 123.8, 73.8, 7350.0, 281.0),
        (DeviceProfile::portable_100mw(), 2.0, 124.8, 107.8, 57.8, 910.0, 62.0),
    ];
    let mut detail = Vec::new();
    for (device, hb, e, l_co, l_adj, d_co, d_adj) in rows {
        let r = separation_report(&device, &ofcom, &suburban(hb)).map_err(|e| e.to_string())?;
        ensure!(within(r.tx_field_strength, e, 0.05), "{} E_TCR {}", device.label, r.tx_field_strength);
        ensure!(within(r.min_loss_co, l_co, 0.05), "{} L_co {}", device.label, r.min_loss_co);
        ensure!(within(r.min_loss_adj, l_adj, 0.05), "{} L_adj {}", device.label, r.min_loss_adj);
        ensure!(rel_within(r.min_distance_co_m, d_co, 0.02), "{} d_co {}", device.label, r.min_distance_co_m);
        ensure!(rel_within(r.min_distance_adj_m, d_adj, 0.02), "{} d_adj {}", device.label, r.min_distance_adj_m);

        // Independent restatement: free-space field strength at 1 m and a
        // bisection inverse of the textbook Hata formula.
        let e_phys = free_space_field(device.eirp_mw, 1.0);
        ensure!(within(r.tx_field_strength, e_phys, 0.05), "{} E vs free space {e_phys}", device.label);
        let oracle_co = 1000.0 * hata_distance_km(650.0, hb, 10.0, field_strength_1m(device.eirp_mw) - 17.0, true);
        let oracle_adj = 1000.0 * hata_distance_km(650.0, hb, 10.0, field_strength_1m(device.eirp_mw) - 67.0, true);
        ensure!(rel_within(r.min_distance_co_m, oracle_co, 1e-9), "{} d_co vs oracle {oracle_co}", device.label);
        ensure!(rel_within(r.min_distance_adj_m, oracle_adj, 1e-9), "{} d_adj vs oracle {oracle_adj}", device.label);
        detail.push(format!(
            "{}: E={:.2} L={:.2}/{:.2} d={:.0}/{:.1} m",
            device.label, r.tx_field_strength, r.min_loss_co, r.min_loss_adj, r.min_distance_co_m, r.min_distance_adj_m
        ));
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_millis(100), "took {elapsed:?}");
    Ok(format!("{} ({elapsed:?})", detail.join("; ")))
}

fn c2_margins() -> Outcome {
    let e = |e: grayspace::Error| e.to_string();
    let device = DeviceProfile::fixed_4w();
    let ofcom = ProtectionCriteria::ofcom();
    let h = suburban(30.0);
    let l8 = path_loss(&h, 8.0).map_err(e)?;
    let l1 = path_loss(&h, 1.0).map_err(e)?;
    let ci_co = achieved_ci(&device, &ofcom, &h, 8.0).map_err(e)?;
    let ci_adj = achieved_ci(&device, &ofcom, &h, 1.0).map_err(e)?;
    let margin_adj = verify_margin(&device, &ofcom, &h, 1.0, ChannelRelation::Adjacent).map_err(e)?;
    ensure!(within(l8, 125.0, 0.1), "L(8 km) = {l8}");
    ensure!(within(l1, 93.2, 0.1), "L(1 km) = {l1}");
    ensure!(within(ci_co, 34.2, 0.15), "co C/I = {ci_co}");
    ensure!(within(ci_adj, 2.4, 0.15), "adjacent C/I = {ci_adj}");
    ensure!(within(margin_adj, 19.4, 0.15), "adjacent margin = {margin_adj}");
    for (d, l) in [(8.0, l8), (1.0, l1)] {
        let oracle = hata_loss(650.0, 30.0, 10.0, d, true);
        ensure!(within(l, oracle, 1e-9), "L({d} km) {l} vs oracle {oracle}");
    }
    Ok(format!(
        "L(8km)={l8:.2} C/I co={ci_co:.2}; L(1km)={l1:.2} C/I adj={ci_adj:.2} margin={margin_adj:.2}"
    ))
}

fn c3_accounting() -> Outcome {
    let plan = ChannelPlan::abstract_default();
    let white = plan.white_space_amount().map_err(|e| e.to_string())?;
    ensure!(white == 200.0, "white space {white}");
    ensure!(plan.gray_space_capacity() == 120.0, "capacity {}", plan.gray_space_capacity());
    let mut rng = TestRng::new(3);
    let mut checked = 0;
    for _ in 0..2000 {
        let n = 1 + rng.below(8) as usize;
        let mut used: Vec<u32> = (0..n).map(|_| 21 + rng.below(40) as u32).collect();
        used.sort_unstable();
        used.dedup();
        let dedup = rng.chance(0.5);
        let Ok(plan) = ChannelPlan::new(320.0, 8.0, 21, used.clone(), dedup) else {
            continue;
        };
        let total = plan.gray_space_capacity() + plan.white_space_amount().map_err(|e| e.to_string())?;
        ensure!(within(total, 320.0, 1e-9), "plan {used:?} dedup={dedup}: {total}");
        checked += 1;
    }
    ensure!(checked > 1000, "only {checked} plans were valid");
    Ok(format!("white=200 capacity=120; capacity+white=320 on {checked} random plans"))
}

fn c4_quantization() -> Outcome {
    let e = |e: grayspace::Error| e.to_string();
    let coarse = quantize_distance(7350.0, 1000.0).map_err(e)?;
    let fine = quantize_distance(7350.0, 100.0).map_err(e)?;
    ensure!(coarse == 8000.0, "7350 m @ 1 km -> {coarse}");
    ensure!(fine == 7400.0, "7350 m @ 100 m -> {fine}");
    Ok("7350 m -> 8000 m @ 1 km, 7400 m @ 100 m".into())
}

fn c5_closed_forms() -> Outcome {
    let kl2 = KnowledgeConfig::kl2().sampler(5).map_err(|e| e.to_string())?;
    let bundle = MuxSet::from_bits(0b11110);

    // Enumeration oracle: each household is uncovered, covered without the
    // bundle, or a bundle subscriber. Sum the 3^3 outcomes of a 3-household
    // cell in which nobody subscribes.
    let p_sub = 0.15;
    let p_cov = 0.98;
    let outcomes = [1.0 - p_cov, p_cov - p_sub, p_sub];
    let mut enumerated = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                if a != 2 && b != 2 && c != 2 {
                    enumerated += outcomes[a] * outcomes[b] * outcomes[c];
                }
            }
        }
    }
    ensure!(within(enumerated, 0.85f64.powi(3), 1e-12), "enumeration {enumerated}");

    let k = 10;
    let cells = 100_000u64;
    let mut stream = RealizationStream::new(2024, 0);
    let mut none = 0u64;
    for cell in 0..cells {
        if stream.cell(cell).take(k).all(|u| (kl2.sample(&u).bits() & bundle.bits()) == 0) {
            none += 1;
        }
    }
    let p = 0.85f64.powi(k as i32);
    let sigma = (p * (1.0 - p) / cells as f64).sqrt();
    let p_hat = none as f64 / cells as f64;
    ensure!((p_hat - p).abs() <= 3.0 * sigma, "KL2 P(no bundle) {p_hat} vs {p} (sigma {sigma})");

    let kl3 = KnowledgeConfig::kl3(TimePeriod::TP2, ShareInterpretation::Unconditional)
        .sampler(5)
        .map_err(|e| e.to_string())?;
    let households = 1_000_000u64;
    let mut stream = RealizationStream::new(2024, 1);
    let mut using = 0u64;
    for h in 0..households {
        if !kl3.sample(&stream.cell(h).next().unwrap()).is_empty() {
            using += 1;
        }
    }
    let q = 0.451;
    let q_sigma = (q * (1.0 - q) / households as f64).sqrt();
    let q_hat = using as f64 / households as f64;
    ensure!((q_hat - q).abs() <= 3.0 * q_sigma, "KL3 TP2 usage {q_hat} vs {q} (sigma {q_sigma})");
    Ok(format!(
        "P(no bundle | k=10) = {p_hat:.4} vs {p:.4} ({:.1} sigma); KL3-TP2 usage = {q_hat:.4} vs 0.451 ({:.1} sigma)",
        (p_hat - p).abs() / sigma,
        (q_hat - q).abs() / q_sigma
    ))
}

fn c6_kl1_zero() -> Outcome {
    let mut rng = TestRng::new(6);
    let kl1 = KnowledgeConfig::kl1();
    let mut grids: Vec<HouseholdGrid> = (0..5)
        .map(|i| {
            let res = if i % 2 == 0 { 1000.0 } else { 100.0 };
            let (rows, cols) = (10 + rng.below(30) as usize, 10 + rng.below(30) as usize);
            random_grid(&mut rng, rows, cols, res, 0.1)
        })
        .collect();
    grids.push(synthesize(&SynthSpec::clustered(), 1000.0).unwrap());
    for (gi, grid) in grids.iter().enumerate() {
        for device in [DeviceProfile::fixed_4w(), DeviceProfile::portable_100mw()] {
            let f = Fixture::new(grid.clone());
            let r = run_monte_carlo(f.scenario(&device, &kl1), options(100, gi as u64))
                .map_err(|e| e.to_string())?;
            for (i, &k) in grid.counts().iter().enumerate() {
                if k > 0 {
                    ensure!(r.mean_map.values[i] == Some(0.0), "grid {gi} cell {i}: {:?}", r.mean_map.values[i]);
                }
            }
            ensure!(
                r.utilization.buckets.iter().all(|b| b.mean_households == 0.0),
                "grid {gi}: {:?}",
                r.utilization
            );
        }
    }
    // Timing on a 64x64 grid.
    let f = Fixture::new(random_grid(&mut rng, 64, 64, 1000.0, 0.05));
    let device = DeviceProfile::fixed_4w();
    let start = Instant::now();
    run_monte_carlo(f.scenario(&device, &kl1), options(100, 1)).map_err(|e| e.to_string())?;
    let t64 = start.elapsed();
    ensure!(t64 < Duration::from_secs(1), "64x64 KL1 took {t64:?}");
    Ok(format!("{} grids x 2 devices: household cells at 0 MHz, buckets empty; 64x64 in {t64:?}", grids.len()))
}

fn c7a_oracle() -> Outcome {
    let mut compared = 0usize;
    for seed in 0..50u64 {
        let mut rng = TestRng::new(1000 + seed);
        let res = if rng.chance(0.5) { 1000.0 } else { 100.0 };
        let rows = 1 + rng.below(32) as usize;
        let cols = 1 + rng.below(32) as usize;
        let density = 0.02 + 0.2 * rng.unit();
        let mut grid = random_grid(&mut rng, rows, cols, res, density);
        // Random municipal area so some border cells become invalid.
        let area = grid.grid_area_km2() * (0.6 + 0.4 * rng.unit());
        grid = HouseholdGrid::from_counts(rows, cols, res, grid.counts().to_vec(), Some(area)).unwrap();
        grid = compensate_area(&grid).unwrap_or(grid);
        if grid.valid_cells() == 0 {
            grid = HouseholdGrid::from_counts(rows, cols, res, grid.counts().to_vec(), None).unwrap();
        }

        let eirp_mw = 10f64.powf(1.0 + 2.6 * rng.unit());
        let height = [2.0, 10.0, 30.0, 50.0][rng.below(4) as usize];
        let device = DeviceProfile::new(format!("d{seed}"), eirp_mw, height).unwrap();
        let knowledge = match rng.below(5) {
            0 => KnowledgeConfig::kl1(),
            1 => KnowledgeConfig::kl2(),
            2 => KnowledgeConfig::kl3(TimePeriod::TP1, ShareInterpretation::Unconditional),
            3 => KnowledgeConfig::kl3(TimePeriod::TP2, ShareInterpretation::Unconditional),
            _ => KnowledgeConfig::kl3(TimePeriod::TP2, ShareInterpretation::ConditionalOnSubscription),
        };
        let used: Vec<u32> = if rng.chance(0.5) {
            vec![22, 25, 28, 31, 34]
        } else {
            vec![21, 23, 24, 30, 45]
        };
        let f = Fixture {
            plan: ChannelPlan::new(320.0, 8.0, 21, used.clone(), true).unwrap(),
            ..Fixture::new(grid.clone())
        };
        let p = f.prepare(&device, &knowledge, options(3, seed));

        let e_tx = field_strength_1m(eirp_mw);
        let d_co = 1000.0 * hata_distance_km(650.0, height, 10.0, e_tx - 17.0, true);
        let d_adj = 1000.0 * hata_distance_km(650.0, height, 10.0, e_tx - 67.0, true);
        let (r_co, r_adj) = (quantize(d_co, res), quantize(d_adj, res));
        ensure!(
            p.radius_m(ChannelRelation::Co) == r_co && p.radius_m(ChannelRelation::Adjacent) == r_adj,
            "seed {seed}: radii {}/{} vs oracle {r_co}/{r_adj}",
            p.radius_m(ChannelRelation::Co),
            p.radius_m(ChannelRelation::Adjacent)
        );
        let plan = OraclePlan::new(21, 40, &used);
        let mut per_realization = Vec::new();
        for r in 0..3 {
            let naive = naive_channels(&grid, &p.realization(r), &plan, r_co, r_adj);
            let engine = engine_channels(&p, &grid, r);
            ensure!(naive == engine, "seed {seed} realization {r}: engine differs from brute force");
            per_realization.push(naive);
            compared += grid.valid_cells();
        }
        // Full reduction against the brute-force maps.
        let result = p.run().map_err(|e| e.to_string())?;
        let valid = grid.valid_cells() as f64;
        for point in &result.cdf.points {
            let level = (point.gray_mhz / 8.0).round() as usize;
            let hits: usize = per_realization
                .iter()
                .map(|m| m.iter().flatten().filter(|&&c| c >= level).count())
                .sum();
            let want = 100.0 * hits as f64 / (3.0 * valid);
            ensure!(within(point.percent_area, want, 1e-9), "seed {seed}: cdf at {} {} vs {want}", point.gray_mhz, point.percent_area);
        }
        for (i, v) in result.mean_map.values.iter().enumerate() {
            let want = grid.valid()[i].then(|| {
                per_realization.iter().map(|m| m[i].unwrap() as f64 * 8.0).sum::<f64>() / 3.0
            });
            ensure!(
                match (v, want) {
                    (Some(a), Some(b)) => within(*a, b, 1e-9),
                    (None, None) => true,
                    _ => false,
                },
                "seed {seed}: mean map cell {i}"
            );
        }
    }
    Ok(format!("50 scenarios, {compared} cell-realizations identical to brute force"))
}

fn c7b_kl_monotone() -> Outcome {
    let mut checked = 0usize;
    let device = DeviceProfile::fixed_4w();
    let ladder = {
        let mut l = knowledge_ladder();
        l.push(KnowledgeConfig::kl3(TimePeriod::TP2, ShareInterpretation::ConditionalOnSubscription));
        l
    };
    for seed in 0..20u64 {
        let mut rng = TestRng::new(7000 + seed);
        let f = Fixture::new(random_grid(&mut rng, 24, 24, 1000.0, 0.15));
        let prepared: Vec<PreparedScenario> =
            ladder.iter().map(|k| f.prepare(&device, k, options(5, seed))).collect();
        for r in 0..5 {
            let maps: Vec<Vec<u8>> = prepared.iter().map(|p| p.realization_channels(r)).collect();
            // KL1 <= KL2 <= KL3-TP2 <= KL3-TP1, and unconditional <= conditional.
            for (lo, hi) in [(0, 1), (1, 2), (2, 3), (2, 4)] {
                for (i, (a, b)) in maps[lo].iter().zip(&maps[hi]).enumerate() {
                    ensure!(
                        a <= b,
                        "seed {seed} r {r} cell {i}: {} > {}",
                        ladder[lo].tag(),
                        ladder[hi].tag()
                    );
                }
            }
            checked += maps[0].len();
        }
    }
    Ok(format!("{checked} cell-realizations ordered KL1<=KL2<=KL3-TP2<=KL3-TP1, unconditional<=conditional"))
}

fn c7c_eirp_monotone() -> Outcome {
    let kl = KnowledgeConfig::kl2();
    let mut checked = 0usize;
    for seed in 0..10u64 {
        let mut rng = TestRng::new(8000 + seed);
        let res = if seed % 2 == 0 { 1000.0 } else { 100.0 };
        let f = Fixture::new(random_grid(&mut rng, 30, 30, res, 0.05));
        let sweep: Vec<DeviceProfile> = [10.0, 100.0, 400.0, 1000.0, 4000.0]
            .iter()
            .map(|&p| DeviceProfile::new(format!("{p}mW"), p, 30.0).unwrap())
            .collect();
        let maps: Vec<Vec<u8>> = sweep
            .iter()
            .map(|d| f.prepare(d, &kl, options(1, seed)).realization_channels(0))
            .collect();
        for w in maps.windows(2) {
            ensure!(w[0].iter().zip(&w[1]).all(|(a, b)| a >= b), "seed {seed}: EIRP sweep not monotone");
        }
        let small = DeviceProfile::portable_100mw();
        let large = DeviceProfile::fixed_4w();
        for r in 0..3 {
            let a = f.prepare(&small, &kl, options(3, seed)).realization_channels(r);
            let b = f.prepare(&large, &kl, options(3, seed)).realization_channels(r);
            ensure!(a.iter().zip(&b).all(|(x, y)| x >= y), "seed {seed}: 100mW map below 4W map");
            checked += a.len();
        }
    }
    Ok(format!("100mW >= 4W on {checked} cell-realizations; 10 mW..4 W sweeps monotone"))
}

fn c7d_resolution() -> Outcome {
    let mut checked = 0usize;
    for seed in 0..6u64 {
        let mut rng = TestRng::new(9000 + seed);
        let (rows, cols) = (12, 14);
        let coarse = random_grid(&mut rng, rows, cols, 1000.0, 0.08);
        let mut fine_counts = vec![0u32; rows * cols * 100];
        for (i, &k) in coarse.counts().iter().enumerate() {
            let (x, y) = (i % cols, i / cols);
            fine_counts[(y * 10 + 5) * cols * 10 + x * 10 + 5] = k;
        }
        let fine = HouseholdGrid::from_counts(rows * 10, cols * 10, 100.0, fine_counts, None).unwrap();
        let fc = Fixture::new(coarse.clone());
        let ff = Fixture::new(fine);
        let kl1 = KnowledgeConfig::kl1();
        for device in [DeviceProfile::fixed_4w(), DeviceProfile::portable_100mw()] {
            let pc = fc.prepare(&device, &kl1, options(1, seed));
            let pf = ff.prepare(&device, &kl1, options(1, seed));
            // KL1 through the engine, then random shared usage through the masks.
            let mut pairs = vec![(pc.realization_channels(0), pf.realization_channels(0))];
            for _ in 0..3 {
                let usage: Vec<MuxSet> = coarse
                    .counts()
                    .iter()
                    .map(|&k| if k > 0 { MuxSet::from_bits(rng.below(32) as u8) } else { MuxSet::EMPTY })
                    .collect();
                let mut fine_usage = vec![MuxSet::EMPTY; rows * cols * 100];
                for (i, &u) in usage.iter().enumerate() {
                    fine_usage[((i / cols) * 10 + 5) * cols * 10 + (i % cols) * 10 + 5] = u;
                }
                let rc = ReceiverRealization::from_usage(rows, cols, usage, seed, 0);
                let rf = ReceiverRealization::from_usage(rows * 10, cols * 10, fine_usage, seed, 0);
                let mc = pc.masks(&rc, Execution::Sequential);
                let mf = pf.masks(&rf, Execution::Sequential);
                let plan = &fc.plan;
                let c: Vec<u8> = (0..rows * cols).map(|i| cell_gray_channels(&mc, plan, i).unwrap() as u8).collect();
                let f: Vec<u8> = (0..rows * cols * 100).map(|i| cell_gray_channels(&mf, plan, i).unwrap() as u8).collect();
                pairs.push((c, f));
            }
            for (c, f) in &pairs {
                for fy in 0..rows * 10 {
                    for fx in 0..cols * 10 {
                        let coarse_value = c[(fy / 10) * cols + fx / 10];
                        ensure!(
                            f[fy * cols * 10 + fx] >= coarse_value,
                            "seed {seed} {}: fine ({fx},{fy}) below coarse",
                            device.label
                        );
                        checked += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{checked} fine cells >= their 1 km parent"))
}

fn c7e_workers() -> Outcome {
    let grid = synthesize(&SynthSpec::clustered(), 1000.0).unwrap();
    let grid = compensate_area(&grid).unwrap();
    let f = Fixture::new(grid);
    let device = DeviceProfile::fixed_4w();
    let mut compared = 0;
    for k in [KnowledgeConfig::kl2(), KnowledgeConfig::kl3(TimePeriod::TP2, ShareInterpretation::Unconditional)] {
        let run = |exec: Execution| {
            run_monte_carlo(f.scenario(&device, &k), RunOptions { execution: exec, ..options(40, 99) }).unwrap()
        };
        let base = run(Execution::with_workers(1));
        for exec in [Execution::with_workers(4), Execution::with_workers(8), Execution::Parallel] {
            let other = run(exec);
            ensure!(other.mean_map == base.mean_map, "{} {exec:?}: map differs", k.tag());
            ensure!(other.cdf == base.cdf, "{} {exec:?}: cdf differs", k.tag());
            ensure!(other.utilization == base.utilization, "{} {exec:?}: utilization differs", k.tag());
            compared += 1;
        }
    }
    Ok(format!("{compared} runs bit-identical to the sequential run (workers 1/4/8/global pool)"))
}

fn c8_orderings() -> Outcome {
    // Separate samples at the two resolutions, so that comparison allows
    // for Monte Carlo noise; the knowledge ladder is coupled and exact.
    const RESOLUTION_TOL: f64 = 1.0;
    let mut notes = Vec::new();
    for spec in [SynthSpec::scattered(), SynthSpec::clustered()] {
        let grids: Vec<HouseholdGrid> = [100.0, 1000.0]
            .iter()
            .map(|&r| compensate_area(&synthesize(&spec, r).unwrap()).unwrap())
            .collect();
        for device in [DeviceProfile::fixed_4w(), DeviceProfile::portable_100mw()] {
            let mut curves: Vec<Vec<CdfCurve>> = Vec::new();
            for grid in &grids {
                let f = Fixture::new(grid.clone());
                let per_kl = knowledge_ladder()
                    .iter()
                    .map(|k| run_monte_carlo(f.scenario(&device, k), options(30, 42)).unwrap().cdf)
                    .collect::<Vec<_>>();
                curves.push(per_kl);
            }
            let ladder = knowledge_ladder();
            for (ri, per_kl) in curves.iter().enumerate() {
                for i in 0..per_kl.len() - 1 {
                    ensure!(
                        per_kl[i + 1].dominates(&per_kl[i], 1e-9),
                        "{} {} res#{ri}: {} not >= {}",
                        spec.layout.as_str(),
                        device.label,
                        ladder[i + 1].tag(),
                        ladder[i].tag()
                    );
                }
            }
            let mut worst: f64 = 0.0;
            for (ki, k) in ladder.iter().enumerate() {
                let (fine, coarse) = (&curves[0][ki], &curves[1][ki]);
                for p in &coarse.points {
                    worst = worst.max(p.percent_area - fine.percent_at_least(p.gray_mhz));
                }
                ensure!(
                    fine.dominates(coarse, RESOLUTION_TOL),
                    "{} {} {}: 100 m curve below 1 km curve",
                    spec.layout.as_str(),
                    device.label,
                    k.tag()
                );
            }
            notes.push(format!("{}/{} worst 1km-100m gap {worst:.2} pp", spec.layout.as_str(), device.label));
        }
    }
    Ok(notes.join("; "))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("1", "separation distances", c1_table_ii),
        ("2", "path loss and C/I margins", c2_margins),
        ("3", "spectrum accounting", c3_accounting),
        ("4", "distance quantization", c4_quantization),
        ("5", "KL2/KL3 closed forms", c5_closed_forms),
        ("6", "KL1 zero utilization", c6_kl1_zero),
        ("7a", "brute-force pipeline oracle", c7a_oracle),
        ("7b", "knowledge-level monotonicity", c7b_kl_monotone),
        ("7c", "EIRP monotonicity", c7c_eirp_monotone),
        ("7d", "resolution refinement", c7d_resolution),
        ("7e", "worker-count determinism", c7e_workers),
        ("8", "qualitative curve orderings", c8_orderings),
    ];
    let total = Instant::now();
    let mut failed = 0;
    for (id, name, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id} PASS {name} [{secs:.2}s]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id} FAIL {name} [{secs:.2}s]: {detail}");
            }
        }
    }
    println!("acceptance: {failed} failed, total {:.1}s", total.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
