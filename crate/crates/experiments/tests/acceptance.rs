//! End-to-end acceptance checks at full scale. Prints one PASS/FAIL line per
//! criterion and exits non-zero if any fails.
//!
//! Scale: 10 seeds x 4 methods x 1000 samples per system, plus a 5-seed
//! balance sweep on Gray-Scott. Expect about an hour on one core.

use std::ops::ControlFlow;
use std::path::PathBuf;
use std::time::Instant;

use cdexplore_core::explorer::{
    run_exploration, select_candidate, ExplorerConfig, Method, Mode, Roi,
};
use cdexplore_core::features::hu::hu_invariants;
use cdexplore_core::grid::Grid2D;
use cdexplore_core::metrics::{diversity, BinningSpec};
use cdexplore_core::systems::gray_scott::{step_gray_scott, GrayScottParams};
use cdexplore_core::systems::{
    convolve_direct, growth, lenia_kernel, Bump, FftConvolver, KernelParams,
};
use cdexplore_core::{system, EvalEmbedding, KillTerm, Laplacian, RolloutConfig, SystemKind};
use cdexplore_experiments::{run_balance_sweep, run_plan, summarize, ExperimentPlan, ResultBundle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: std::ops::Range<u64> = 0..10;
const SWEEP: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
const SWEEP_SEEDS: std::ops::Range<u64> = 0..5;

struct Report {
    results: Vec<(String, bool)>,
}

impl Report {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.results.push((name.to_string(), pass));
    }
}

fn out_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR"))
        .join("acceptance")
        .join(name)
}

fn full_plan(kind: SystemKind) -> ExperimentPlan {
    let mut plan = ExperimentPlan::new(kind, Method::ALL.to_vec(), SEEDS.collect());
    plan.output_dir = out_dir(kind.as_str());
    plan
}

fn timed<T>(label: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    println!("  ({label} took {:.0} s)", start.elapsed().as_secs_f64());
    out
}

fn acceptance(bundle: &ResultBundle, m: Method) -> f64 {
    summarize(bundle)
        .get(m)
        .and_then(|s| s.acceptance)
        .unwrap_or(0.0)
}

fn final_diversity(bundle: &ResultBundle, m: Method) -> (f64, f64) {
    let c = bundle
        .curve(m, bundle.plan.balance_prob)
        .expect("method curve");
    (
        *c.global_mean.last().unwrap(),
        *c.constrained_mean.last().unwrap(),
    )
}

fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

fn acceptance_gray_scott(r: &mut Report, gs: &ResultBundle) {
    let [ar, an, anra, anrab] = Method::ALL.map(|m| acceptance(gs, m));
    let pass = anrab > anra && an > ar && anrab >= 2.0 * an.max(anra) && anrab >= 5.0 * ar;
    let stretch = [(ar, 0.0068), (an, 0.0535), (anra, 0.056), (anrab, 0.1366)]
        .iter()
        .all(|(got, reference)| (got / reference - 1.0).abs() <= 0.5);
    r.check(
        "acceptance_rates_gray_scott",
        pass,
        format!(
            "R {} N {} NRA {} NRAB {}; NRAB/max(N,NRA) {:.2} (>= 2), NRAB/R {:.2} (>= 5); within 50% of reference values: {}",
            pct(ar),
            pct(an),
            pct(anra),
            pct(anrab),
            anrab / an.max(anra),
            anrab / ar,
            if stretch { "yes" } else { "no" }
        ),
    );
}

fn acceptance_lenia(r: &mut Report, lenia: &ResultBundle) {
    let [ar, an, anra, anrab] = Method::ALL.map(|m| acceptance(lenia, m));
    let pass = anrab > an.max(anra).max(ar) && ar < an.min(anra) && anrab >= 1.3 * an.max(anra);
    r.check(
        "acceptance_rates_lenia",
        pass,
        format!(
            "R {} N {} NRA {} NRAB {}; NRAB/max(N,NRA) {:.2} (>= 1.3)",
            pct(ar),
            pct(an),
            pct(anra),
            pct(anrab),
            anrab / an.max(anra)
        ),
    );
}

fn homogeneity(r: &mut Report, gs: &ResultBundle, lenia: &ResultBundle) {
    // Method R draws every sample uniformly, so its runs are a random-sampling census.
    let frac = |b: &ResultBundle| {
        let (h, n) = b.runs_of(Method::R).fold((0, 0), |(h, n), run| {
            (h + run.homogeneous_count(), n + run.samples())
        });
        (h as f64 / n as f64, n)
    };
    let (g, gn) = frac(gs);
    let (l, ln) = frac(lenia);
    let pass = gn >= 1000 && (g - 0.908).abs() <= 0.05 && l < 0.40;
    r.check(
        "homogeneity_statistics",
        pass,
        format!(
            "Gray-Scott {} of {gn} samples (90.8% +- 5 pp); Lenia {} of {ln} samples (< 40%)",
            pct(g),
            pct(l)
        ),
    );
}

fn diversity_ordering(r: &mut Report, gs: &ResultBundle, lenia: &ResultBundle) {
    let d = |b: &ResultBundle| Method::ALL.map(|m| final_diversity(b, m));
    let [(_, cr), (_, cn), (gnra, cnra), (gnrab, cnrab)] = d(gs);
    let gs_pass = cnrab > cnra && cnra >= cn && cn > cr && (gnrab - gnra).abs() <= 0.1 * gnra;
    let [(_, lr), (_, ln), (lgnra, lnra), (lgnrab, lnrab)] = d(lenia);
    let lenia_pass = lnrab > lr.max(ln).max(lnra) && (lgnrab - lgnra).abs() <= 0.1 * lgnra;
    r.check(
        "diversity_ordering",
        gs_pass && lenia_pass,
        format!(
            "Gray-Scott constrained R {cr:.1} N {cn:.1} NRA {cnra:.1} NRAB {cnrab:.1}, global NRAB/NRA {:.3}; \
             Lenia constrained R {lr:.1} N {ln:.1} NRA {lnra:.1} NRAB {lnrab:.1}, global NRAB/NRA {:.3}",
            gnrab / gnra,
            lgnrab / lgnra
        ),
    );
}

fn balance_sweep(r: &mut Report, sweep: &ResultBundle) {
    let at = |b: f64| {
        let c = sweep.curve(Method::NRAB, b).expect("sweep curve");
        (
            *c.global_mean.last().unwrap(),
            *c.constrained_mean.last().unwrap(),
        )
    };
    let points: Vec<(f64, f64, f64)> = SWEEP.iter().map(|&b| (b, at(b).0, at(b).1)).collect();
    let best = points.iter().map(|p| p.2).fold(0.0, f64::max);
    let (g0, c0) = at(0.0);
    let (g1, c1) = at(1.0);
    let (_, c_half) = at(0.5);
    let pass = c1 >= c0 && g0 >= g1 && c_half >= 0.8 * best;
    let detail = points
        .iter()
        .map(|(b, g, c)| format!("b={b}: global {g:.1} constrained {c:.1}"))
        .collect::<Vec<_>>();
    r.check(
        "balance_tradeoff",
        pass,
        format!(
            "{}; b=0.5 reaches {:.0}% of best constrained",
            detail.join(", "),
            100.0 * c_half / best
        ),
    );
}

fn interactivity(r: &mut Report, gs: &ResultBundle, lenia: &ResultBundle) {
    let ms = |b: &ResultBundle| {
        let (w, n) = b.runs.iter().fold((0.0, 0), |(w, n), run| {
            (w + run.wall_seconds, n + run.samples())
        });
        1000.0 * w / n as f64
    };
    let (g, l) = (ms(gs), ms(lenia));
    r.check(
        "interactivity_time_per_sample",
        g <= 500.0 && l <= 1000.0,
        format!("Gray-Scott {g:.1} ms (<= 500), Lenia {l:.1} ms (<= 1000)"),
    );
}

/// Spot checks of the module invariants against independent oracles. The
/// property-based versions live in each crate's unit tests.
fn invariants(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures: Vec<&str> = Vec::new();
    let mut expect = |ok: bool, name: &'static str| {
        if !ok {
            failures.push(name);
        }
    };

    // Resting state of Gray-Scott.
    let u = Grid2D::<f64>::filled(16, 16, 1.0);
    let v = Grid2D::<f64>::zeros(16, 16);
    let mut fixed = true;
    for lap in [Laplacian::FivePoint, Laplacian::NinePoint] {
        let (un, vn) = step_gray_scott(
            &u,
            &v,
            &GrayScottParams::new(0.05, 0.06),
            1.0,
            KillTerm::Classical,
            lap,
        )
        .unwrap();
        fixed &= un == u && vn == v;
    }
    expect(fixed, "gray_scott_fixed_point");

    // FFT convolution against the direct sum.
    let field = Grid2D::<f64>::from_fn(32, 32, |_, _| rng.random());
    let kernel = Grid2D::<f64>::from_fn(32, 32, |_, _| rng.random::<f64>() * 0.01);
    let fft = FftConvolver::new(32, 32).convolve(&kernel, &field);
    let direct = convolve_direct(&kernel, &field);
    let err = fft
        .values()
        .iter()
        .zip(direct.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    expect(err <= 1e-6, "fft_vs_direct");

    // Hu invariants under rotation and translation of an interior blob.
    let blob = Grid2D::<f64>::from_fn(32, 32, |x, y| {
        let (dx, dy) = (x as f64 - 12.0, y as f64 - 14.0);
        if (4.0..=22.0).contains(&(x as f64)) && (6.0..=20.0).contains(&(y as f64)) {
            (-(dx * dx / 18.0 + dy * dy / 8.0)).exp() + 0.3 * (x as f64 / 22.0)
        } else {
            0.0
        }
    });
    let h = hu_invariants(&blob);
    let close = |a: [f64; 7], b: [f64; 7]| {
        a.iter()
            .zip(&b)
            .all(|(x, y)| (x - y).abs() <= 1e-6 * x.abs().max(1e-12).max(1.0))
    };
    expect(
        close(h, hu_invariants(&blob.rot90())) && close(h, hu_invariants(&blob.roll(5, 3))),
        "hu_invariance",
    );

    // Lenia kernel mass and growth anchors.
    let bumps = [
        Bump {
            b: 1.0,
            w: 0.15,
            a: 0.5,
        },
        Bump {
            b: 0.4,
            w: 0.1,
            a: 0.2,
        },
        Bump {
            b: 0.7,
            w: 0.2,
            a: 0.8,
        },
    ];
    let kp = KernelParams {
        mu: 0.2,
        sigma: 0.03,
        h: 0.5,
        r: 0.8,
        bumps,
    };
    let k = lenia_kernel(&kp, 13.0, 64, 64).unwrap();
    expect(
        (k.values().iter().sum::<f64>() - 1.0).abs() <= 1e-9,
        "kernel_unit_sum",
    );
    let (mu, s) = (0.27f64, 0.04f64);
    expect(
        growth(mu, mu, s) == 1.0
            && (growth(mu + 10.0 * s, mu, s) + 1.0).abs() <= 1e-9
            && growth(mu + s * (2.0 * 2f64.ln()).sqrt(), mu, s).abs() <= 1e-9,
        "growth_anchors",
    );

    // Binning against an exhaustive per-cell membership count.
    let points: Vec<[f64; 4]> = (0..500)
        .map(|_| std::array::from_fn(|_| rng.random::<f64>()))
        .collect();
    let spec = BinningSpec::new(625, [0.0; 4], [1.0; 4]).unwrap();
    let b = spec.bins_per_dim as usize;
    let mut occupied = 0;
    for cell in 0..b.pow(4) {
        let idx: [usize; 4] = std::array::from_fn(|d| cell / b.pow(d as u32) % b);
        let inside = |p: &[f64; 4]| {
            (0..4)
                .all(|d| p[d] >= idx[d] as f64 / b as f64 && p[d] < (idx[d] + 1) as f64 / b as f64)
        };
        occupied += usize::from(points.iter().any(inside));
    }
    let emb: Vec<EvalEmbedding> = points
        .iter()
        .map(|&coords| EvalEmbedding { coords })
        .collect();
    expect(diversity(&emb, &spec) == occupied, "binning_brute_force");

    // Nearest neighbour against a scan with its own standardization.
    let mut nn_ok = true;
    for _ in 0..200 {
        let n = rng.random_range(1..30);
        let beh: Vec<[f64; 9]> = (0..n)
            .map(|_| std::array::from_fn(|_| rng.random_range(-3.0..3.0)))
            .collect();
        let cls: Vec<i8> = (0..n)
            .map(|_| if rng.random_bool(0.3) { 1 } else { -1 })
            .collect();
        let goal: [f64; 9] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
        let axes = [1usize, 4, 7];
        let z = |d: usize, x: f64| {
            let m = beh.iter().map(|b| b[d]).sum::<f64>() / n as f64;
            let sd = (beh.iter().map(|b| (b[d] - m).powi(2)).sum::<f64>() / n as f64).sqrt();
            if sd <= 1e-12 {
                0.0
            } else {
                (x - m) / sd
            }
        };
        let dist = |i: usize| {
            axes.iter()
                .map(|&d| (z(d, beh[i][d]) - z(d, goal[d])).powi(2))
                .sum::<f64>()
        };
        let pool: Vec<usize> = if cls.contains(&1) {
            (0..n).filter(|&i| cls[i] == 1).collect()
        } else {
            (0..n).collect()
        };
        let best = pool
            .iter()
            .copied()
            .fold(pool[0], |a, i| if dist(i) < dist(a) { i } else { a });
        nn_ok &= select_candidate(&beh, &cls, &goal, Mode::Constrained, &axes) == best;
    }
    expect(nn_ok, "nearest_neighbour_brute_force");

    // Re-classification and NRAB(0) = NRA on short real explorations.
    let small = RolloutConfig {
        size: 16,
        steps: 300,
        perlin_cell_size: 4,
        ..RolloutConfig::gray_scott()
    };
    let sys = system(SystemKind::GrayScott, small);
    let run = |method: Method, balance_prob: f64| {
        let cfg = ExplorerConfig {
            method,
            n_init: 30,
            budget: 80,
            balance_prob,
            seed: 11,
            ..Default::default()
        };
        run_exploration(sys.clone(), cfg, Roi::volume(0.05, 0.9), |_, _| {
            ControlFlow::Continue(())
        })
        .unwrap()
    };
    let mut h = run(Method::NRAB, 0.5);
    let wide = h.update_roi(&Roi::volume(0.0, 1.0)).unwrap();
    let narrow = h.update_roi(&Roi::volume(0.2, 0.5)).unwrap();
    let before = h.classifications().to_vec();
    let again = h.update_roi(&Roi::volume(0.2, 0.5)).unwrap();
    expect(
        narrow <= wide && again == narrow && h.classifications() == before.as_slice(),
        "roi_reclassification",
    );
    let a = run(Method::NRAB, 0.0);
    let b = run(Method::NRA, 0.5);
    expect(
        a.entries()
            .iter()
            .zip(b.entries())
            .all(|(x, y)| x.params == y.params),
        "nrab0_equals_nra",
    );

    let pass = failures.is_empty();
    let detail = if pass {
        "fixed points, FFT vs direct, Hu invariance, kernel mass, growth anchors, binning and nearest-neighbour oracles, \
         ROI re-classification, NRAB(0) = NRA"
            .to_string()
    } else {
        format!("failed: {}", failures.join(", "))
    };
    r.check("property_invariants", pass, detail);
}

fn main() {
    let mut report = Report {
        results: Vec::new(),
    };
    invariants(&mut report);

    let gs = timed("gray-scott plan", || {
        run_plan(&full_plan(SystemKind::GrayScott)).expect("gray-scott plan")
    });
    println!("{}", summarize(&gs));
    let mut sweep_plan = ExperimentPlan::new(
        SystemKind::GrayScott,
        vec![Method::NRAB],
        SWEEP_SEEDS.collect(),
    );
    sweep_plan.balance_sweep = Some(SWEEP.to_vec());
    sweep_plan.output_dir = out_dir("gray_scott_sweep");
    let sweep = timed("balance sweep", || {
        run_balance_sweep(&sweep_plan).expect("balance sweep")
    });
    let lenia = timed("lenia plan", || {
        run_plan(&full_plan(SystemKind::Lenia)).expect("lenia plan")
    });
    println!("{}", summarize(&lenia));

    acceptance_gray_scott(&mut report, &gs);
    acceptance_lenia(&mut report, &lenia);
    homogeneity(&mut report, &gs, &lenia);
    balance_sweep(&mut report, &sweep);
    diversity_ordering(&mut report, &gs, &lenia);
    interactivity(&mut report, &gs, &lenia);

    let passed = report.results.iter().filter(|(_, p)| *p).count();
    println!(
        "acceptance: {passed}/{} criteria passed",
        report.results.len()
    );
    if passed != report.results.len() {
        std::process::exit(1);
    }
}
