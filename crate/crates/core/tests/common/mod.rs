#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::OnceLock;

use wmlab_core::randomness::SecretKey;
use wmlab_core::scheme::{Registry, Watermarker};
use wmlab_core::text::{TokenSeq, Vocabulary};
use wmlab_core::NgramModel;

pub struct Toy {
    pub vocab: Vocabulary,
    pub model: NgramModel,
    pub prompts: Vec<TokenSeq>,
}

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

/// Trigram model over the bundled corpus, shared by every test in a binary.
pub fn toy() -> &'static Toy {
    static TOY: OnceLock<Toy> = OnceLock::new();
    TOY.get_or_init(|| {
        let corpus = std::fs::read_to_string(data("corpus.txt")).unwrap();
        let vocab = Vocabulary::build(&corpus).unwrap();
        let docs: Vec<TokenSeq> = corpus.lines().map(|l| vocab.tokenize(l)).collect();
        let model = NgramModel::train(vocab.clone(), &docs, 3, 0.001).unwrap();
        let prompts = std::fs::read_to_string(data("prompts.txt")).unwrap().lines().map(|l| vocab.tokenize(l)).collect();
        Toy { vocab, model, prompts }
    })
}

impl Toy {
    pub fn prompt(&self, i: usize) -> &[u32] {
        &self.prompts[i % self.prompts.len()]
    }

    pub fn preset(&self, name: &str, key: u64) -> Watermarker {
        Registry::builtin().build_preset(name, SecretKey::from_u64(key), &self.vocab).unwrap()
    }
}
