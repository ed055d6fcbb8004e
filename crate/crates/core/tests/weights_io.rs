mod common;

use common::Rng;
use compactflow::model::{build_model, count_params, ModelOverrides, Network, Variant};
use compactflow::weights::*;
use compactflow::Error;
use proptest::prelude::*;

fn random_store(rng: &mut Rng, n: usize) -> WeightStore {
    let mut s = WeightStore::new();
    for i in 0..n {
        let rank = rng.int(1, 4);
        let dims: Vec<usize> = (0..rank).map(|_| rng.int(1, 4)).collect();
        let numel = dims.iter().product();
        s.insert(format!("block{i}.weight"), WeightTensor::new(dims, rng.vec(numel, -3.0, 3.0)).unwrap())
            .unwrap();
    }
    s
}

#[test]
fn every_variant_consumes_exactly_its_counted_parameters() {
    for v in Variant::ALL {
        let m = build_model(v, &ModelOverrides::default()).unwrap();
        let store = init_deterministic(&m, 5);
        assert_eq!(store.num_scalars(), count_params(&m).total, "{v}");
        // strict binding: all present, nothing extra
        Network::load(&m, &store).unwrap();
    }
}

#[test]
fn seeds_give_distinct_reproducible_fingerprints() {
    let m = build_model(Variant::PwcnetSmall, &ModelOverrides::default()).unwrap();
    assert_eq!(fingerprint(&init_deterministic(&m, 1)), fingerprint(&init_deterministic(&m, 1)));
    assert_ne!(fingerprint(&init_deterministic(&m, 1)), fingerprint(&init_deterministic(&m, 2)));
}

#[test]
fn compact_model_fits_in_ten_mebibytes_at_half_precision() {
    let m = build_model(Variant::Compactflownet, &ModelOverrides::default()).unwrap();
    let bytes = save_weights(&init_deterministic(&m, 0), DType::F16);
    assert!(bytes.len() < 10 << 20, "{} bytes", bytes.len());
}

#[test]
fn single_element_perturbation_changes_digest() {
    let mut rng = Rng::new(3);
    let s = random_store(&mut rng, 6);
    let base = fingerprint(&s);
    for (name, t) in s.iter() {
        for i in 0..t.numel() {
            let mut p = s.clone();
            let v = &mut p.get_mut(name).unwrap().data[i];
            *v = f32::from_bits(v.to_bits() ^ 1);
            assert_ne!(fingerprint(&p), base);
        }
    }
}

#[test]
fn empty_store_digest_is_pinned() {
    assert_eq!(fingerprint(&WeightStore::new()), 0xcbf2_9ce4_8422_2325);
    assert_eq!(EMPTY_FINGERPRINT, 0xcbf2_9ce4_8422_2325);
    assert!(load_weights(&save_weights(&WeightStore::new(), DType::F32)).unwrap().is_empty());
}

#[test]
fn error_kinds_are_distinct() {
    let s = random_store(&mut Rng::new(1), 2);
    let good = save_weights(&s, DType::F32);
    let mut magic = good.clone();
    magic[0] = b'X';
    assert!(matches!(load_weights(&magic), Err(Error::BadMagic(_))));
    let mut version = good.clone();
    version[4] = 9;
    assert!(matches!(load_weights(&version), Err(Error::VersionMismatch { found: 9, .. })));
    assert!(matches!(load_weights(&good[..good.len() - 9]), Err(Error::Truncated(_))));

    // duplicate names: write the same record twice and fix up count and digest
    let mut dup = WeightStore::new();
    dup.insert("a", WeightTensor::new(vec![1], vec![1.0]).unwrap()).unwrap();
    let one = save_weights(&dup, DType::F32);
    let record = &one[12..one.len() - 8];
    let mut bytes = one[..12].to_vec();
    bytes[8..12].copy_from_slice(&2u32.to_le_bytes());
    bytes.extend_from_slice(record);
    bytes.extend_from_slice(record);
    let digest = {
        use std::hash::Hasher;
        let mut h = fnv::FnvHasher::default();
        h.write(record);
        h.write(record);
        h.finish()
    };
    bytes.extend_from_slice(&digest.to_le_bytes());
    assert!(matches!(load_weights(&bytes), Err(Error::DuplicateName(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn f32_round_trip_is_bit_exact_and_canonical(seed in any::<u64>(), n in 0usize..8) {
        let s = random_store(&mut Rng::new(seed), n);
        let bytes = save_weights(&s, DType::F32);
        let back = load_weights(&bytes).unwrap();
        prop_assert_eq!(back.len(), s.len());
        for ((na, a), (nb, b)) in s.iter().zip(back.iter()) {
            prop_assert_eq!(na, nb);
            prop_assert_eq!(&a.dims, &b.dims);
            prop_assert!(a.data.iter().zip(&b.data).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        prop_assert_eq!(save_weights(&back, DType::F32), bytes);
    }

    #[test]
    fn f16_round_trip_exact_for_representable_values(seed in any::<u64>(), n in 1usize..6) {
        let s = random_store(&mut Rng::new(seed), n).converted(DType::F16);
        let bytes = save_weights(&s, DType::F16);
        let back = load_weights(&bytes).unwrap();
        for ((_, a), (_, b)) in s.iter().zip(back.iter()) {
            prop_assert_eq!(&a.data, &b.data);
        }
        prop_assert_eq!(save_weights(&back, DType::F16), bytes);
    }
}
