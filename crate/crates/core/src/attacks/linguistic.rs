use super::resources::ResourceTables;
use super::words::{join, match_case, split, Word};

pub fn lowercase(text: &str) -> String {
    text.to_lowercase()
}

/// Replaces every expanded phrase with its contraction, longest match first,
/// scanning left to right.
pub fn contract(text: &str, tables: &ResourceTables) -> String {
    let words: Vec<Word> = split(text).iter().map(|w| Word::parse(w)).collect();
    let mut out = Vec::with_capacity(words.len());
    let mut i = 0;
    'scan: while i < words.len() {
        for (phrase, contracted) in tables.contractions() {
            let k = phrase.len();
            if i + k > words.len() {
                continue;
            }
            let span = &words[i..i + k];
            let joins_cleanly = span.iter().enumerate().all(|(j, w)| {
                (j == 0 || w.prefix.is_empty()) && (j + 1 == k || w.suffix.is_empty()) && w.core.to_lowercase() == phrase[j]
            });
            if joins_cleanly {
                let core = match_case(&span[0].core, contracted);
                out.push(format!("{}{}{}", span[0].prefix, core, span[k - 1].suffix));
                i += k;
                continue 'scan;
            }
        }
        out.push(words[i].render());
        i += 1;
    }
    join(&out)
}

/// Replaces every contraction with its expansion.
pub fn expand(text: &str, tables: &ResourceTables) -> String {
    let out: Vec<String> = split(text)
        .iter()
        .map(|raw| {
            let w = Word::parse(raw);
            match tables.expansion(&w.core) {
                Some(expanded) if !w.core.is_empty() => format!("{}{}{}", w.prefix, match_case(&w.core, expanded), w.suffix),
                _ => raw.clone(),
            }
        })
        .collect();
    join(&out)
}
