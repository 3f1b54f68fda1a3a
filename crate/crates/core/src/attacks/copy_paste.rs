use serde::{Deserialize, Serialize};

use super::words::{join, split};
use super::AttackError;

/// One watermarked segment of a copy-paste output, in words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    /// Start within the output.
    pub start: usize,
    pub len: usize,
    /// Start within the watermarked input.
    pub source_start: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CopyPaste {
    pub text: String,
    pub segments: Vec<Segment>,
    pub total_words: usize,
}

impl CopyPaste {
    pub fn watermarked_words(&self) -> usize {
        self.segments.iter().map(|s| s.len).sum()
    }
}

pub fn validate_copy_paste(n: usize, m_pct: f64) -> Result<(), AttackError> {
    if n == 0 {
        return Err(AttackError::InvalidSpec("copy-paste needs n >= 1".into()));
    }
    if !(m_pct > 0.0 && m_pct < 100.0) {
        return Err(AttackError::InvalidSpec(format!("copy-paste m must be in (0,100), got {m_pct}")));
    }
    if n as f64 * m_pct > 100.0 {
        return Err(AttackError::InvalidSpec(format!("copy-paste n*m = {} exceeds 100", n as f64 * m_pct)));
    }
    Ok(())
}

/// CP-n-m: output of `|wm_text|` words holding `n` watermarked segments of
/// `floor(m% * |wm_text|)` words each. Segments come from evenly spaced
/// offsets of `wm_text` and sit at evenly spaced positions among cover
/// words taken in order from the start of `cover_text`.
pub fn copy_paste(wm_text: &str, cover_text: &str, n: usize, m_pct: f64) -> Result<CopyPaste, AttackError> {
    validate_copy_paste(n, m_pct)?;
    let wm = split(wm_text);
    let cover = split(cover_text);
    let total = wm.len();
    let seg_len = (m_pct * total as f64 / 100.0 + 1e-9).floor() as usize;
    let filler = total - n * seg_len;
    if cover.len() < filler {
        return Err(AttackError::CoverTooShort { need: filler, have: cover.len() });
    }
    // cover words before gap k: ceil(k * filler / (n + 1))
    let boundary = |k: usize| (k * filler).div_ceil(n + 1);
    let mut out = Vec::with_capacity(total);
    let mut segments = Vec::with_capacity(n);
    let mut used = 0;
    for k in 0..n {
        let gap_end = boundary(k + 1);
        out.extend_from_slice(&cover[used..gap_end]);
        used = gap_end;
        let source_start = k * total / n;
        segments.push(Segment { start: out.len(), len: seg_len, source_start });
        out.extend_from_slice(&wm[source_start..source_start + seg_len]);
    }
    out.extend_from_slice(&cover[used..filler]);
    Ok(CopyPaste { text: join(&out), segments, total_words: total })
}
