use std::io::BufReader;
use std::ops::ControlFlow;
use std::sync::Arc;

use cdexplore_core::explorer::Origin;
use cdexplore_core::export::{decode_png, encode_png, history_jsonl, read_history_jsonl};
use cdexplore_core::systems::System;
use cdexplore_core::{
    classify, run_exploration, system, ExplorerConfig, HistoryRecord, Method, Roi, RolloutConfig,
    SystemKind,
};
use proptest::prelude::*;

fn small(kind: SystemKind) -> RolloutConfig {
    let mut c = RolloutConfig::for_kind(kind);
    c.size = 16;
    c.steps = if kind == SystemKind::GrayScott {
        120
    } else {
        30
    };
    c.perlin_cell_size = 4;
    c
}

fn config(method: Method, seed: u64, budget: usize, n_init: usize) -> ExplorerConfig {
    ExplorerConfig {
        method,
        seed,
        budget,
        n_init,
        ..ExplorerConfig::default()
    }
}

fn method() -> impl Strategy<Value = Method> {
    prop_oneof![
        Just(Method::R),
        Just(Method::N),
        Just(Method::NRA),
        Just(Method::NRAB)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn histories_are_well_formed(m in method(), seed in 0u64..1000, lenia in any::<bool>()) {
        let kind = if lenia { SystemKind::Lenia } else { SystemKind::GrayScott };
        let sys = system(kind, small(kind));
        let roi = Roi::volume(0.2, 0.8);
        let (budget, n_init) = (24, 8);
        let h = run_exploration(sys.clone(), config(m, seed, budget, n_init), roi.clone(), |_, _| ControlFlow::Continue(()))
            .unwrap();
        prop_assert_eq!(h.len(), budget);
        for (i, e) in h.entries().iter().enumerate() {
            prop_assert_eq!(e.index, i);
            for (v, d) in e.params.values.iter().zip(sys.param_space().dims()) {
                prop_assert!(*v >= d.lo && *v <= d.hi);
            }
            prop_assert!(e.observation.values().iter().all(|x| (0.0..=1.0).contains(x)));
            prop_assert_eq!(e.classification, classify(&e.constraint_features, &roi).unwrap());
            match e.origin {
                Origin::Random => prop_assert!(i < n_init || m == Method::R),
                Origin::Mutation { source, .. } => {
                    prop_assert!(i >= n_init);
                    prop_assert!(source < i);
                }
            }
        }
    }

    #[test]
    fn explorations_replay_exactly(m in method(), seed in 0u64..1000) {
        let sys = system(SystemKind::GrayScott, small(SystemKind::GrayScott));
        let run = || {
            run_exploration(sys.clone(), config(m, seed, 20, 6), Roi::volume(0.6, 0.7), |_, _| ControlFlow::Continue(()))
                .unwrap()
        };
        prop_assert_eq!(run(), run());
    }
}

#[test]
fn progress_reports_running_totals_and_can_stop() {
    let sys = system(SystemKind::GrayScott, small(SystemKind::GrayScott));
    let mut seen = Vec::new();
    let h = run_exploration(
        sys,
        config(Method::NRAB, 3, 30, 10),
        Roi::unconstrained(),
        |e, p| {
            seen.push((e.index, p));
            if e.index == 14 {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        },
    )
    .unwrap();
    assert_eq!(h.len(), 15);
    assert_eq!(seen.len(), 15);
    for (i, (index, p)) in seen.iter().enumerate() {
        assert_eq!(*index, i);
        assert_eq!(p.inliers, i + 1);
        assert_eq!(p.acceptance, (i >= 10).then_some(1.0));
    }
}

#[test]
fn exports_round_trip() {
    let sys = system(SystemKind::Lenia, small(SystemKind::Lenia));
    let h = run_exploration(
        sys,
        config(Method::NRA, 5, 12, 4),
        Roi::volume(0.1, 0.9),
        |_, _| ControlFlow::Continue(()),
    )
    .unwrap();
    let text = history_jsonl(&h);
    let back = read_history_jsonl::<f64, _>(BufReader::new(text.as_bytes())).unwrap();
    let expected: Vec<HistoryRecord> = h.entries().iter().map(HistoryRecord::from).collect();
    assert_eq!(back, expected);

    for e in h.entries() {
        let (w, hgt, px) = decode_png(&encode_png(&e.observation).unwrap()).unwrap();
        assert_eq!((w, hgt), (16, 16));
        for (p, v) in px.iter().zip(e.observation.values()) {
            assert_eq!(*p, (255.0 * v.clamp(0.0, 1.0)).round() as u8);
        }
    }
}

#[test]
fn single_and_double_precision_rollouts_agree() {
    let cfg = small(SystemKind::Lenia);
    let lo = cdexplore_core::systems::Lenia::<f32>::new(cfg.clone());
    let hi = cdexplore_core::systems::Lenia::<f64>::new(cfg);
    let p64: Vec<f64> = hi
        .param_space()
        .dims()
        .iter()
        .map(|d| 0.5 * (d.lo + d.hi))
        .collect();
    let p32: Vec<f32> = p64.iter().map(|&v| v as f32).collect();
    let a = Arc::new(lo).rollout(&p32, 7).unwrap();
    let b = hi.rollout(&p64, 7).unwrap();
    let max_err = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (*x as f64 - y).abs())
        .fold(0.0, f64::max);
    assert!(max_err < 1e-3, "max |f32 - f64| = {max_err}");
}
