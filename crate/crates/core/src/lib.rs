//! Text watermarking over a pluggable next-token model: keyed randomness,
//! watermarked generation, detection, removal attacks and evaluation
//! metrics.

pub mod attacks;
pub mod detect;
pub mod generate;
pub mod lm;
pub mod metrics;
pub mod randomness;
pub mod scheme;
pub mod text;

pub use detect::{detect, DetectError, DetectionResult, Detector, Score};
pub use generate::{generate_text, generate_traced, generate_unwatermarked, GenerateError, GenerationStrategy, Trace};
pub use lm::{Distribution, NextTokenModel, NgramModel, Temperature};
pub use randomness::{ContextScheme, SecretKey, Seed};
pub use scheme::{Registry, SchemeConfig, SchemeError, Watermarker};
pub use text::{TokenId, TokenSeq, Vocabulary};
