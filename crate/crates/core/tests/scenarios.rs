use wsimplex::middleware::Strategy;
use wsimplex::{runner, RunConfig};

fn learned(cfg: &RunConfig, track: &wsimplex::sim::Track) -> wsimplex::rl::QTable {
    runner::explore(cfg, track).unwrap().q
}

#[test]
fn slow_laps_stay_on_track_for_every_strategy() {
    let mut cfg = RunConfig::default();
    let track = cfg.load_track().unwrap();
    let q = learned(&cfg, &track);
    cfg.speed_setpoint = cfg.pipeline.calibration.speed_to_duty(0.25).value();
    for s in Strategy::ALL {
        let (r, _) = runner::evaluate(&cfg, &track, s, Some(&q)).unwrap();
        assert!(r.completed, "{s} did not finish: {:.2} laps", r.laps_completed);
        assert!(r.out_of_track <= 1, "{s}: {} departures at 0.25 m/s", r.out_of_track);
        assert!(r.max_speed <= 0.25 + 1e-9, "{s}: {}", r.max_speed);
    }
}

#[test]
fn evaluation_is_repeatable() {
    let cfg = RunConfig { laps: 2, ..RunConfig::default() };
    let track = cfg.load_track().unwrap();
    for s in [Strategy::LecOnly, Strategy::Conventional] {
        let a = runner::evaluate(&cfg, &track, s, None).unwrap();
        let b = runner::evaluate(&cfg, &track, s, None).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1.len(), b.1.len());
    }
}

#[test]
fn different_seeds_diverge() {
    let mut cfg = RunConfig { laps: 1, ..RunConfig::default() };
    let track = cfg.load_track().unwrap();
    let a = runner::evaluate(&cfg, &track, Strategy::LecOnly, None).unwrap().0;
    cfg.seed = 99;
    let b = runner::evaluate(&cfg, &track, Strategy::LecOnly, None).unwrap().0;
    assert_ne!(a.t_r.mean, b.t_r.mean);
}

#[test]
fn dynamic_needs_a_table() {
    let cfg = RunConfig::default();
    let track = cfg.load_track().unwrap();
    assert!(runner::evaluate(&cfg, &track, Strategy::Dynamic, None).is_err());
}

#[test]
fn per_segment_breakdown_covers_the_loop() {
    let cfg = RunConfig { laps: 1, ..RunConfig::default() };
    let track = cfg.load_track().unwrap();
    let (r, recs) = runner::evaluate(&cfg, &track, Strategy::LecOnly, None).unwrap();
    let cycles: usize = r.per_segment.values().map(|s| s.cycles).sum();
    assert_eq!(cycles, recs.len());
    assert_eq!(r.per_segment.len(), 2);
}
