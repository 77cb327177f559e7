mod common;

use proptest::prelude::*;

use reconkit::harmonic::{synthetic_field, Field};
use reconkit::io::*;
use reconkit::models::canonical_polynomial_model;
use reconkit::paracontrolled::compute_brackets;
use reconkit::structures::partition_of_unity;
use reconkit::ReconError;

use common::{poly, smooth_model, tree};

fn grid() -> impl Strategy<Value = (usize, u32)> {
    prop_oneof![(Just(1usize), 1u32..=9), (Just(2usize), 1u32..=4)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rkf_round_trips_bit_for_bit((d, l) in grid(), count in 0usize..4, seed in any::<u64>()) {
        let n = 1usize << (l as usize * d);
        let fields: Vec<Field> = (0..count)
            .map(|i| {
                let mut rng = seed.wrapping_add(i as u64);
                let values = (0..n)
                    .map(|_| {
                        rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                        f64::from_bits(rng >> 12 | 0x3ff0_0000_0000_0000) - 1.5
                    })
                    .collect();
                Field::new(d, l, values).unwrap()
            })
            .collect();
        let bytes = encode_rkf(&fields, d, l).unwrap();
        prop_assert_eq!(bytes.len(), 10 + count * n * 8);
        let (d2, l2, back) = decode_rkf(&bytes).unwrap();
        prop_assert_eq!((d2, l2), (d, l));
        prop_assert_eq!(back, fields);
    }

    #[test]
    fn truncated_rkf_is_rejected(cut in 1usize..64) {
        let f = synthetic_field(1, 5, 0.0, 1);
        let bytes = encode_rkf(&[f], 1, 5).unwrap();
        let short = &bytes[..bytes.len().saturating_sub(cut)];
        prop_assert!(matches!(decode_rkf(short), Err(ReconError::Parse(_))));
    }
}

#[test]
fn bad_magic_is_rejected() {
    let mut bytes = encode_rkf(&[Field::zeros(1, 4)], 1, 4).unwrap();
    bytes[0] = b'X';
    assert!(matches!(decode_rkf(&bytes), Err(ReconError::Parse(_))));
}

#[test]
fn mixed_grids_cannot_share_a_file() {
    assert!(encode_rkf(&[Field::zeros(1, 4), Field::zeros(1, 5)], 1, 4).is_err());
}

#[test]
fn model_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let s = smooth_model(tree(), 8, 3);
    let path = dir.path().join("model.json");
    save_model(&s.model, &path).unwrap();
    assert!(dir.path().join("model.rkf").exists());
    let back = load_model(&path, s.st.clone()).unwrap();
    assert_eq!(back.pi, s.model.pi);
    assert_eq!(back.g.values, s.model.g.values);
    assert_eq!(back.provenance, s.model.provenance);
}

#[test]
fn model_for_another_structure_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let p = partition_of_unity(1, 8).unwrap();
    let m = canonical_polynomial_model(poly(1, "3"), &p).unwrap();
    let path = dir.path().join("model.json");
    save_model(&m, &path).unwrap();
    assert!(load_model(&path, poly(1, "4")).is_err());
    assert!(load_model(&path, poly(1, "3")).is_ok());
}

#[test]
fn corrupted_model_files_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = partition_of_unity(1, 8).unwrap();
    let st = poly(1, "3");
    let m = canonical_polynomial_model(st.clone(), &p).unwrap();
    let path = dir.path().join("model.json");
    save_model(&m, &path).unwrap();

    let rkf = dir.path().join("model.rkf");
    let bytes = std::fs::read(&rkf).unwrap();
    std::fs::write(&rkf, &bytes[..bytes.len() - 8]).unwrap();
    assert!(load_model(&path, st.clone()).is_err());
    std::fs::write(&rkf, &bytes).unwrap();

    std::fs::write(&path, "{ not json").unwrap();
    assert!(load_model(&path, st.clone()).is_err());
    std::fs::remove_file(&path).unwrap();
    assert!(matches!(load_model(&path, st), Err(ReconError::Io(_))));
}

#[test]
fn brackets_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let s = smooth_model(tree(), 8, 5);
    let set = compute_brackets(&s.model).unwrap();
    let path = dir.path().join("brackets.json");
    save_brackets(&s.st, &set, 1, 8, &path).unwrap();
    let (back, d, l) = load_brackets(&path, &s.st).unwrap();
    assert_eq!((d, l), (1, 8));
    assert_eq!(back.m, set.m);
    for (sym, f) in &set.g {
        if !sym.is_unit() {
            assert_eq!(&back.g[sym], f);
        }
    }
}

#[test]
fn regularity_table_flags_smooth_fields() {
    let rough = synthetic_field(1, 10, -0.5, 2);
    let flat = Field::constant(1, 10, 1.0);
    let rows = regularity_rows(
        &[("rough".to_string(), -0.5, &rough), ("flat, constant".to_string(), 1.0, &flat)],
        reconkit::harmonic::default_window(10),
        0.2,
    );
    assert!(rows[0].estimated.is_some());
    assert_eq!(rows[1].estimated, None);
    assert!(rows[1].pass);
    let csv = regularity_csv(&rows);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "symbol,declared,estimated,pass");
    assert!(lines[2].starts_with("\"flat, constant\",1.000000,insufficient-data,true"));
}

#[test]
fn atomic_write_leaves_no_temporary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sub").join("out.txt");
    write_atomic(&path, b"one").unwrap();
    write_atomic(&path, b"two").unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), b"two");
    let names: Vec<_> = std::fs::read_dir(path.parent().unwrap()).unwrap().collect();
    assert_eq!(names.len(), 1);
}
