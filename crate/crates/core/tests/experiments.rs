use shrinklab::harness::{run_experiment, sample_points, ExperimentConfig, ExperimentKind};
use shrinklab::iet::rotation_iet;
use shrinklab::numbers::{CFExpansion, Rational};
use shrinklab::targets::big_r_deviations;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn larger_balls_deviate_less() {
    let t = rotation_iet(&CFExpansion::golden(50).value()).unwrap();
    let xs = sample_points(5, 32);
    let dev = |s: u64| {
        let rows = big_r_deviations(&t, &xs, s, 10..=16).unwrap();
        median(rows.into_iter().flatten().collect())
    };
    let (small, large) = (dev(4), dev(64));
    assert!(large <= small, "s = 64: {large}, s = 4: {small}");
}

#[test]
fn undetermined_run_holds_exact_bounds() {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Undetermined, "random:30:4:2");
    cfg.seeds = 6;
    cfg.checkpoints = vec![1_000, 10_000, 100_000];
    let rep = run_experiment(&cfg).unwrap();
    assert!(rep.all_passed(), "{:?}", rep.assertions);
    assert_eq!(rep.aggregate.len(), 3);
    for s in &rep.seeds {
        let rows = &s.undetermined.as_ref().unwrap().rows;
        assert!(rows.windows(2).all(|w| w[0].hits <= w[1].hits && w[0].lambda <= w[1].lambda));
    }
}

#[test]
fn decay_run_is_reproducible() {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Decay, "golden:40");
    cfg.seeds = 4;
    cfg.l_max = 4;
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert!(a.all_passed());
    // slopes may be NaN, so compare the serialized form
    assert_eq!(serde_json::to_string(&a.seeds).unwrap(), serde_json::to_string(&b.seeds).unwrap());
    let first = a.seeds[0].decay.as_ref().unwrap();
    assert!(first.levels.iter().all(|l| l.discrepancy <= Rational::one()));
}

#[test]
fn guard_off_drops_checkpoints_past_the_horizon() {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Hits, "golden:20");
    cfg.radius = Some("harmonic:1/2".parse().unwrap());
    cfg.seeds = 2;
    cfg.checkpoints = vec![100, 1_000, 100_000];
    assert!(run_experiment(&cfg).is_err());
    cfg.horizon_guard = false;
    let rep = run_experiment(&cfg).unwrap();
    assert_eq!(rep.checkpoints, vec![100, 1_000]);
    assert!(rep.notes.iter().any(|n| n.contains("100000")));
}
