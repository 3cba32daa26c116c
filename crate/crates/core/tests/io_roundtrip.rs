use gibbslab_core::grid::make_grid;
use gibbslab_core::io::{read_volume, write_volume, Payload};
use gibbslab_core::{BoolMask, Fov, LabelVolume, ScalarVolume};
use proptest::prelude::*;

fn payload() -> impl Strategy<Value = Payload> {
    let dims = [2usize..=6, 2..=6, 2..=6];
    (dims, -10.0f64..0.0, 0.1f64..10.0, 0u8..3).prop_flat_map(|(d, lo, span, kind)| {
        let grid =
            make_grid(Fov::new([lo, lo * 0.5, lo * 0.25], [lo + span, lo * 0.5 + span, lo * 0.25 + span]).unwrap(), d)
                .unwrap();
        let len = grid.len();
        match kind {
            0 => prop::collection::vec(any::<f32>().prop_filter("finite", |v| v.is_finite()), len)
                .prop_map(move |v| {
                    Payload::Scalar(ScalarVolume::new(grid, v.into_iter().map(f64::from).collect()).unwrap())
                })
                .boxed(),
            1 => prop::collection::vec(0u32..=65535, len)
                .prop_map(move |l| {
                    let n = *l.iter().max().unwrap() as usize + 1;
                    Payload::Labels(LabelVolume::with_label_count(grid, l, n).unwrap())
                })
                .boxed(),
            _ => prop::collection::vec(any::<bool>(), len)
                .prop_map(move |b| Payload::Mask { grid, mask: BoolMask::new(d, b).unwrap() })
                .boxed(),
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn write_then_read_is_identity(p in payload()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v");
        write_volume(&path, &p).unwrap();
        prop_assert_eq!(read_volume(&path).unwrap(), p);
    }

    #[test]
    fn read_then_write_reproduces_bytes(p in payload()) {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a"), dir.path().join("b"));
        write_volume(&a, &p).unwrap();
        write_volume(&b, &read_volume(&a).unwrap()).unwrap();
        for ext in ["a.json", "a.raw"] {
            let other = ext.replacen('a', "b", 1);
            prop_assert_eq!(std::fs::read(dir.path().join(ext)).unwrap(), std::fs::read(dir.path().join(other)).unwrap());
        }
    }
}
