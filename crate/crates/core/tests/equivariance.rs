use lumi_core::algorithms::{apply_isometry, compute, Isometry};
use lumi_core::{AlgorithmId, Color, Point, Rational, Snapshot};
use proptest::prelude::*;

/// Rational points on the unit circle.
const UNIT: [(i64, i64, i64); 4] = [(1, 0, 1), (3, 4, 5), (5, 12, 13), (8, 15, 17)];

fn arb_color() -> impl Strategy<Value = Color> {
    prop_oneof![Just(Color::A), Just(Color::B)]
}

fn arb_isometry() -> impl Strategy<Value = Isometry> {
    (0..UNIT.len(), any::<bool>(), any::<bool>(), -20i64..20, -20i64..20, 1i64..7).prop_map(
        |(u, flip_sin, reflect, tx, ty, den)| {
            let (c, s, h) = UNIT[u];
            let sin = if flip_sin { Rational::new(-s, h) } else { Rational::new(s, h) };
            let rot = Isometry::rotation(Rational::new(c, h), sin).unwrap();
            let rot = if reflect { rot.compose(&Isometry::reflect_x()) } else { rot };
            Isometry::translation(Point::new(Rational::new(tx, den), Rational::new(ty, den))).compose(&rot)
        },
    )
}

/// Snapshots whose two points are a rational distance apart: a point on the
/// x-axis moved by an isometry.
fn arb_snapshot(with_delta: bool) -> impl Strategy<Value = Snapshot> {
    (
        -40i64..40,
        0i64..40,
        1i64..9,
        arb_color(),
        arb_color(),
        arb_isometry(),
    )
        .prop_map(move |(x, d, den, me_light, other_light, iso)| {
            let me = Point::on_axis(Rational::new(x, den));
            let other = Point::on_axis(Rational::new(x + d, den));
            Snapshot {
                me_position: iso.apply(&me),
                me_light,
                other_position: iso.apply(&other),
                other_light,
                known_delta: with_delta.then(Rational::one),
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn light_table_commutes_with_isometries(snap in arb_snapshot(false), iso in arb_isometry()) {
        let direct = compute(AlgorithmId::Rendezvous, &snap).unwrap();
        let moved = compute(AlgorithmId::Rendezvous, &apply_isometry(&snap, &iso)).unwrap();
        prop_assert_eq!(moved.new_light, direct.new_light);
        prop_assert_eq!(moved.destination, iso.apply(&direct.destination));
    }

    #[test]
    fn banded_algorithm_commutes_with_isometries(snap in arb_snapshot(true), iso in arb_isometry()) {
        let direct = compute(AlgorithmId::RendezvousWithDelta, &snap).unwrap();
        let moved = compute(AlgorithmId::RendezvousWithDelta, &apply_isometry(&snap, &iso)).unwrap();
        prop_assert_eq!(moved.new_light, direct.new_light);
        prop_assert_eq!(moved.destination, iso.apply(&direct.destination));
    }
}
