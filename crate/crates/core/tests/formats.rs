use wsimplex::controllers::{read_dataset, synthetic_dataset, write_dataset, SweepParams};
use wsimplex::rl::{load_qtable, save_qtable, QTable, RlState};
use wsimplex::sim::{CameraParams, Segment, Track, TrackSpec};
use wsimplex::{Error, RunConfig};

#[test]
fn track_toml_round_trip() {
    let spec = TrackSpec::default_loop();
    let text = spec.to_toml();
    assert!(text.contains("kind = \"right_arc\""));
    let back = TrackSpec::from_toml(&text).unwrap();
    assert_eq!(back, spec);
    assert!((Track::new(back).unwrap().length() - Track::default_loop().length()).abs() < 1e-12);
}

#[test]
fn handwritten_track_loads() {
    let text = r#"
lane_width = 0.4
closed = true

[[segments]]
kind = "straight"
length = 2.0

[[segments]]
kind = "left_arc"
radius = 0.5
angle_deg = 180.0

[[segments]]
kind = "straight"
length = 2.0

[[segments]]
kind = "left_arc"
radius = 0.5
angle_deg = 180.0
"#;
    let t = Track::new(TrackSpec::from_toml(text).unwrap()).unwrap();
    let expected = 4.0 + std::f64::consts::TAU * 0.5;
    assert!((t.length() - expected).abs() < 1e-9);
    assert_eq!(t.spec().segments[1], Segment::LeftArc { radius: 0.5, angle_deg: 180.0 });
}

#[test]
fn open_ring_is_rejected() {
    let mut spec = TrackSpec::default_loop();
    spec.segments.pop();
    assert!(Track::new(spec).is_err());
}

#[test]
fn unknown_track_keys_are_rejected() {
    let text = "lane_width = 0.5\nclosed = true\nsurface = \"wood\"\nsegments = []\n";
    assert!(matches!(TrackSpec::from_toml(text), Err(Error::Config(_))));
}

#[test]
fn qtable_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.txt");
    let mut q = QTable::new();
    let s = RlState::new(3, 17, 2, 1).unwrap();
    q.set_value(s, 4, -1.25);
    q.record_visit(s, 4);
    q.set_value(RlState::new(20, 40, 10, 2).unwrap(), 0, 0.1 + 0.2);
    save_qtable(&q, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut head = text.lines();
    assert_eq!(head.next(), Some("wsimplex-qtable 1"));
    assert_eq!(head.next(), Some("dims 21 41 11 3"));
    let back = load_qtable(&path).unwrap();
    assert_eq!(back.value(s, 4), -1.25);
    assert_eq!(back.visits(s, 4), 1);
    assert_eq!(back.to_text(), text);
}

#[test]
fn qtable_with_foreign_dims_is_rejected() {
    let text = QTable::new().to_text().replace("dims 21 41", "dims 11 41");
    assert!(matches!(QTable::from_text(&text), Err(Error::Format(_))));
    let text = QTable::new().to_text().replace("wsimplex-qtable 1", "wsimplex-qtable 2");
    assert!(QTable::from_text(&text).is_err());
}

#[test]
fn raster_dataset_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = SweepParams { frames: 12, ..Default::default() };
    let frames = synthetic_dataset(&Track::default_loop(), &CameraParams::default(), &sweep);
    write_dataset(dir.path(), &frames).unwrap();
    let back = read_dataset(dir.path()).unwrap();
    assert_eq!(back.len(), 12);
    for ((a, la), (b, lb)) in frames.iter().zip(&back) {
        assert_eq!(la, lb);
        assert_eq!(a.as_bytes(), b.as_bytes());
    }
}

#[test]
fn config_round_trip_and_partial_files() {
    let cfg = RunConfig::default();
    assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap().to_toml(), cfg.to_toml());
    let partial = RunConfig::from_toml("seed = 9\nlaps = 3\n[rl]\nruns = 2\n").unwrap();
    assert_eq!((partial.seed, partial.laps, partial.rl.runs), (9, 3, 2));
    assert!(RunConfig::from_toml("sed = 9\n").is_err());
}
