use std::collections::{HashMap, HashSet};

use hmac::{Hmac, Mac};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::Sha256;
use wmlab_core::randomness::{
    decode_hex, derive_seed, derive_seeds, permutation, prf64, rand_unit, rand_vector, ContextScheme, Prf, SecretKey, Seed,
    KEY_LEN,
};
use wmlab_core::text::TokenId;

const BOS: TokenId = 99;

fn key_of(rng: &mut ChaCha20Rng) -> SecretKey {
    let mut bytes = [0u8; KEY_LEN];
    rng.fill(&mut bytes);
    SecretKey(bytes)
}

#[test]
fn prf_matches_golden_vectors() {
    let text = include_str!("data/prf_vectors.tsv");
    let mut checked = 0;
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        let cols: Vec<&str> = line.split('\t').collect();
        let key = SecretKey::from_hex(cols[0]).unwrap();
        let msg = decode_hex(cols[1]).unwrap();
        let want: u64 = cols[2].parse().unwrap();
        assert_eq!(prf64(&key, &msg).0, want, "key {} message {}", cols[0], cols[1]);
        checked += 1;
    }
    assert_eq!(checked, 24);
}

#[test]
fn prf_matches_direct_hmac() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    for _ in 0..200 {
        let key = key_of(&mut rng);
        let msg: Vec<u8> = (0..rng.gen_range(0..64)).map(|_| rng.gen()).collect();
        let mut mac = Hmac::<Sha256>::new_from_slice(&key.0).unwrap();
        mac.update(&msg);
        let digest = mac.finalize().into_bytes();
        let want = u64::from_le_bytes(digest[..8].try_into().unwrap());
        assert_eq!(prf64(&key, &msg).0, want);
    }
}

#[test]
fn key_bit_flips_never_collide() {
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let mut collisions = 0;
    for _ in 0..1000 {
        let key = key_of(&mut rng);
        let mut flipped = key;
        let bit = rng.gen_range(0..KEY_LEN * 8);
        flipped.0[bit / 8] ^= 1 << (bit % 8);
        let msg: [u8; 8] = rng.gen();
        collisions += usize::from(prf64(&key, &msg) == prf64(&flipped, &msg));
    }
    assert_eq!(collisions, 0);
}

#[test]
fn message_avalanche() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let key = key_of(&mut rng);
    let prf = Prf::new(&key);
    let trials = 10_000;
    let mut flipped_bits = 0u64;
    for _ in 0..trials {
        let mut msg: [u8; 12] = rng.gen();
        let before = prf.eval(&msg).0;
        let bit = rng.gen_range(0..96);
        msg[bit / 8] ^= 1 << (bit % 8);
        flipped_bits += u64::from((before ^ prf.eval(&msg).0).count_ones());
    }
    let mean = flipped_bits as f64 / trials as f64;
    assert!((24.0..=40.0).contains(&mean), "mean flipped bits {mean}");
    assert!((mean - 32.0).abs() < 0.5, "mean flipped bits {mean}");
}

#[test]
fn window_hash_byte_layout() {
    let key = SecretKey::from_u64(17);
    let prf = Prf::new(&key);
    // independent re-implementation of the encoding: 4-byte LE ids, oldest first
    let encode = |ids: &[u32]| ids.iter().flat_map(|i| i.to_le_bytes()).collect::<Vec<u8>>();
    let prior = [5u32, 7, 9];
    let got = derive_seed(ContextScheme::WindowHash { w: 3 }, &prf, &prior, 3, BOS);
    assert_eq!(got, prf64(&key, &encode(&[5, 7, 9])));
    // at t = 1 the two missing positions are bos-padded on the left
    let got = derive_seed(ContextScheme::WindowHash { w: 3 }, &prf, &prior, 1, BOS);
    assert_eq!(got, prf64(&key, &encode(&[BOS, BOS, 5])));
    let got = derive_seed(ContextScheme::IndexDependent, &prf, &prior, 2, BOS);
    assert_eq!(got, prf64(&key, &2u64.to_le_bytes()));
    let got = derive_seed(ContextScheme::MinHash { w: 2 }, &prf, &prior, 3, BOS);
    assert_eq!(got, prf64(&key, &7u32.to_le_bytes()).min(prf64(&key, &9u32.to_le_bytes())));
    assert_eq!(derive_seed(ContextScheme::ContextFree, &prf, &prior, 0, BOS), prf64(&key, &[]));
}

#[test]
fn context_free_is_position_independent() {
    let prf = Prf::new(&SecretKey::from_u64(1));
    let prior: Vec<u32> = (0..1000).collect();
    let a = derive_seed(ContextScheme::ContextFree, &prf, &prior, 0, BOS);
    assert_eq!(a, derive_seed(ContextScheme::ContextFree, &prf, &prior, 999, BOS));
}

#[test]
fn index_dependent_positions_are_distinct() {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let (mut pairs, mut collisions) = (0usize, 0usize);
    for _ in 0..100 {
        let prf = Prf::new(&key_of(&mut rng));
        let seeds: Vec<Seed> = (0..200).map(|t| derive_seed(ContextScheme::IndexDependent, &prf, &[0; 200], t, BOS)).collect();
        let unique: HashSet<Seed> = seeds.iter().copied().collect();
        pairs += 200 * 199 / 2;
        collisions += 200 - unique.len();
    }
    assert!(1.0 - collisions as f64 / pairs as f64 >= 0.9999);
    assert_eq!(collisions, 0);
}

#[test]
fn window_hash_sees_exactly_its_window() {
    // every prefix of length 5 over d = 4, w = 2, seed at t = 5
    let prf = Prf::new(&SecretKey::from_u64(23));
    let scheme = ContextScheme::WindowHash { w: 2 };
    let d = 4u32;
    let all: Vec<Vec<u32>> = (0..d.pow(5)).map(|mut n| (0..5).map(|_| { let x = n % d; n /= d; x }).collect()).collect();
    let mut by_window: HashMap<(u32, u32), Seed> = HashMap::new();
    for prefix in &all {
        let seed = derive_seed(scheme, &prf, prefix, 5, BOS);
        // tokens outside the window never matter
        let window = (prefix[3], prefix[4]);
        assert_eq!(*by_window.entry(window).or_insert(seed), seed);
    }
    // any change inside the window changes the seed
    let distinct: HashSet<Seed> = by_window.values().copied().collect();
    assert_eq!(distinct.len(), 16);
}

#[test]
fn splitmix_reference_outputs() {
    // published SplitMix64 outputs for state 1234567
    let reference = [6457827717110365317u64, 3203168211198807973, 9817491932198370423, 4593380528125082431, 16408922859458223821];
    for (c, &x) in reference.iter().enumerate() {
        let want = ((x >> 12) as f64 + 0.5) / (1u64 << 52) as f64;
        assert_eq!(rand_unit(Seed(1234567), c as u64), want);
    }
}

#[test]
fn rand_unit_mean() {
    let n = 100_000;
    let mean = (0..n).map(|i| rand_unit(Seed(0xfeed), i)).sum::<f64>() / n as f64;
    assert!((0.497..=0.503).contains(&mean), "mean {mean}");
}

#[test]
fn rand_vectors_of_different_seeds_differ_everywhere() {
    let a = rand_vector(Seed(1), 100);
    let b = rand_vector(Seed(2), 100);
    assert!(a.iter().zip(&b).all(|(x, y)| x != y));
    assert_eq!(rand_vector(Seed(9), 1)[0], rand_unit(Seed(9), 0));
}

#[test]
fn permutations_are_uniform() {
    let trials = 24_000;
    let mut counts: HashMap<Vec<u32>, usize> = HashMap::new();
    for s in 0..trials {
        *counts.entry(permutation(Seed(s), 4)).or_default() += 1;
    }
    assert_eq!(counts.len(), 24);
    let expected = trials as f64 / 24.0;
    let sigma = (trials as f64 * (1.0 / 24.0) * (23.0 / 24.0)).sqrt();
    let mut chi2 = 0.0;
    for &c in counts.values() {
        assert!((c as f64 - expected).abs() <= 3.0 * sigma + 1.0, "count {c}");
        chi2 += (c as f64 - expected).powi(2) / expected;
    }
    // chi-square critical value, 23 degrees of freedom, alpha = 0.001
    assert!(chi2 < 49.728, "chi2 {chi2}");
}

#[test]
fn permutation_of_thousand_is_bijective() {
    let mut p = permutation(Seed(77), 1000);
    p.sort_unstable();
    assert_eq!(p, (0..1000).collect::<Vec<u32>>());
    assert_eq!(permutation(Seed(3), 1), vec![0]);
}

proptest! {
    #[test]
    fn rand_unit_is_open_interval(seed in any::<u64>(), counter in any::<u64>()) {
        let u = rand_unit(Seed(seed), counter);
        prop_assert!(u > 0.0 && u < 1.0);
        prop_assert_eq!(u, rand_unit(Seed(seed), counter));
    }

    #[test]
    fn derive_seed_is_pure(key in any::<u64>(), tokens in prop::collection::vec(0u32..50, 1..20), w in 1usize..4) {
        let prf = Prf::new(&SecretKey::from_u64(key));
        for scheme in [ContextScheme::IndexDependent, ContextScheme::WindowHash { w }, ContextScheme::MinHash { w }, ContextScheme::ContextFree] {
            let seeds = derive_seeds(scheme, &prf, &tokens, BOS);
            prop_assert_eq!(seeds.len(), tokens.len());
            for (t, s) in seeds.iter().enumerate() {
                prop_assert_eq!(*s, derive_seed(scheme, &prf, &tokens, t, BOS));
            }
        }
    }

    #[test]
    fn window_and_min_hash_agree_at_width_one(key in any::<u64>(), tokens in prop::collection::vec(0u32..50, 1..20)) {
        let prf = Prf::new(&SecretKey::from_u64(key));
        prop_assert_eq!(
            derive_seeds(ContextScheme::WindowHash { w: 1 }, &prf, &tokens, BOS),
            derive_seeds(ContextScheme::MinHash { w: 1 }, &prf, &tokens, BOS)
        );
    }

    #[test]
    fn permutation_is_a_permutation(seed in any::<u64>(), d in 1usize..300) {
        let mut p = permutation(Seed(seed), d);
        p.sort_unstable();
        prop_assert_eq!(p, (0..d as u32).collect::<Vec<_>>());
    }
}
