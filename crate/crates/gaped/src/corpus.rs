//! Seeded generation of test string pairs with a bounded edit distance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Maps a symbol index to a byte: letters for small alphabets, raw bytes
/// otherwise.
fn letter(idx: u16, alphabet: u16) -> u8 {
    if alphabet <= 26 {
        b'a' + idx as u8
    } else {
        idx as u8
    }
}

/// Generates `(x, y)` where `x` is uniform over an `alphabet`-ary alphabet
/// of length `n` and `y` is `x` after `e` random single-character edits
/// (substitute / insert / delete), so `editd(x, y) ≤ e`.
pub fn generate_pair(n: usize, e: usize, alphabet: u16, seed: u64) -> (Vec<u8>, Vec<u8>) {
    assert!(alphabet >= 1 && alphabet as usize <= 256);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<u8> = (0..n).map(|_| letter(rng.gen_range(0..alphabet), alphabet)).collect();
    let mut y = x.clone();
    for _ in 0..e {
        let op = rng.gen_range(0..3u8);
        match op {
            0 if !y.is_empty() => {
                let p = rng.gen_range(0..y.len());
                y[p] = letter(rng.gen_range(0..alphabet), alphabet);
            }
            1 => {
                let p = rng.gen_range(0..=y.len());
                y.insert(p, letter(rng.gen_range(0..alphabet), alphabet));
            }
            _ if !y.is_empty() => {
                let p = rng.gen_range(0..y.len());
                y.remove(p);
            }
            _ => {}
        }
    }
    (x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strings::{exact_edit_distance, to_symbols};

    #[test]
    fn zero_edits_identical() {
        let (x, y) = generate_pair(64, 0, 4, 7);
        assert_eq!(x, y);
        assert_eq!(x.len(), 64);
    }

    #[test]
    fn edit_budget_respected() {
        for seed in 0..30 {
            let (x, y) = generate_pair(100, 9, 26, seed);
            let d = exact_edit_distance(&to_symbols(&x), &to_symbols(&y));
            assert!(d <= 9, "seed {seed}: distance {d} exceeds budget");
        }
    }

    #[test]
    fn deterministic_in_seed() {
        assert_eq!(generate_pair(50, 5, 2, 42), generate_pair(50, 5, 2, 42));
        assert_ne!(generate_pair(50, 5, 2, 42).0, generate_pair(50, 5, 2, 43).0);
    }

    #[test]
    fn alphabet_respected() {
        let (x, y) = generate_pair(200, 20, 2, 3);
        assert!(x.iter().chain(y.iter()).all(|&c| c == b'a' || c == b'b'));
    }
}
