use proptest::prelude::*;
use rbmelt::io::{Profile, RunConfig, Snapshot};
use rbmelt::Grid;

proptest! {
    #[test]
    fn snapshots_round_trip_bit_for_bit(
        values in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 32),
        time in 0.0f64..10.0,
    ) {
        let g = Grid::new(8, 4, 2.0).unwrap();
        let s = Snapshot::new(&g, time, "temperature", values.clone()).unwrap();
        let back = Snapshot::parse(&s.to_text()).unwrap();
        prop_assert_eq!(back.time.to_bits(), time.to_bits());
        for (a, b) in back.values.iter().zip(&values) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn any_positive_rayleigh_number_is_accepted(ra in 1e-3f64..1e8) {
        let text = format!("[physics]\nra = {ra:e}\n");
        let c = RunConfig::from_toml(Profile::Desk, &text).unwrap();
        prop_assert_eq!(c.physics.ra, ra);
    }
}

#[test]
fn written_snapshot_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid::new(8, 4, 2.0).unwrap();
    let values: Vec<f64> = (0..g.len()).map(|k| (k as f64).sin() / 3.0).collect();
    let s = Snapshot::new(&g, 0.125, "phi", values).unwrap();
    let p = dir.path().join("a/phi.txt");
    s.write(&p).unwrap();
    assert_eq!(Snapshot::read(&p).unwrap(), s);
}
