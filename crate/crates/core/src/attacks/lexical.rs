use crate::randomness::{permutation, Seed, SeedStream};

use super::resources::ResourceTables;
use super::words::{join, match_case, split, Word};

const SELECT: u64 = 0x5e1ec7;
const EDIT: u64 = 0xed17;

/// Indices of `eligible` chosen by a seeded shuffle: `ceil(rate * n)` of them.
fn choose(eligible: &[usize], rate: f64, seed: u64) -> Vec<usize> {
    let n = eligible.len();
    let k = ((rate * n as f64) - 1e-9).ceil().clamp(0.0, n as f64) as usize;
    let mut picked: Vec<usize> =
        permutation(Seed(seed).derive(SELECT), n).into_iter().take(k).map(|i| eligible[i as usize]).collect();
    picked.sort_unstable();
    picked
}

fn replace_selected(text: &str, rate: f64, seed: u64, mut rewrite: impl FnMut(&Word, &mut SeedStream) -> Option<String>) -> String {
    let mut words = split(text);
    let parsed: Vec<Word> = words.iter().map(|w| Word::parse(w)).collect();
    let mut probe = SeedStream::new(Seed(0));
    let eligible: Vec<usize> = (0..parsed.len()).filter(|&i| rewrite(&parsed[i], &mut probe).is_some()).collect();
    let mut stream = SeedStream::new(Seed(seed).derive(EDIT));
    for i in choose(&eligible, rate, seed) {
        if let Some(core) = rewrite(&parsed[i], &mut stream) {
            words[i] = format!("{}{}{}", parsed[i].prefix, core, parsed[i].suffix);
        }
    }
    join(&words)
}

/// Swaps in the common misspelling of a `rate` fraction of the words that
/// have one.
pub fn misspell(text: &str, rate: f64, seed: u64, tables: &ResourceTables) -> String {
    replace_selected(text, rate, seed, |w, _| tables.misspelling(&w.core).map(|m| match_case(&w.core, m)))
}

/// Replaces a `rate` fraction of the words with a listed synonym.
pub fn synonymize(text: &str, rate: f64, seed: u64, tables: &ResourceTables) -> String {
    replace_selected(text, rate, seed, |w, rng| {
        let alts = tables.synonyms(&w.core);
        (!alts.is_empty()).then(|| match_case(&w.core, &alts[rng.below(alts.len())]))
    })
}

/// Substitutes one letter in a `rate` fraction of the words that contain
/// letters.
pub fn typo(text: &str, rate: f64, seed: u64) -> String {
    replace_selected(text, rate, seed, |w, rng| {
        let chars: Vec<char> = w.core.chars().collect();
        let letters: Vec<usize> = (0..chars.len()).filter(|&i| chars[i].is_alphabetic()).collect();
        if letters.is_empty() {
            return None;
        }
        let pos = letters[rng.below(letters.len())];
        let old = chars[pos];
        let lower = old.to_ascii_lowercase();
        let pool: Vec<char> = ('a'..='z').filter(|&c| c != lower).collect();
        let mut new = pool[rng.below(pool.len())];
        if old.is_uppercase() {
            new = new.to_ascii_uppercase();
        }
        let mut out = chars;
        out[pos] = new;
        Some(out.into_iter().collect())
    })
}

/// Exchanges `count` random pairs of word positions.
pub fn swap(text: &str, count: usize, seed: u64) -> String {
    let mut words = split(text);
    let n = words.len();
    if n < 2 {
        return text.to_string();
    }
    let mut rng = SeedStream::new(Seed(seed).derive(SELECT));
    for _ in 0..count {
        let i = rng.below(n);
        let j = (i + 1 + rng.below(n - 1)) % n;
        words.swap(i, j);
    }
    join(&words)
}
