//! Whitespace words split into punctuation prefix, core and suffix.

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Word {
    pub prefix: String,
    pub core: String,
    pub suffix: String,
}

impl Word {
    pub fn parse(raw: &str) -> Self {
        let start = raw.find(|c: char| c.is_alphanumeric()).unwrap_or(raw.len());
        let end = raw.rfind(|c: char| c.is_alphanumeric()).map(|i| i + raw[i..].chars().next().unwrap().len_utf8()).unwrap_or(start);
        let end = end.max(start);
        Self { prefix: raw[..start].to_string(), core: raw[start..end].to_string(), suffix: raw[end..].to_string() }
    }

    pub fn render(&self) -> String {
        format!("{}{}{}", self.prefix, self.core, self.suffix)
    }
}

pub(crate) fn split(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

pub(crate) fn join(words: &[String]) -> String {
    words.join(" ")
}

/// Carries the capitalization of `original` over to `replacement`: all caps
/// stays all caps, a leading capital stays a leading capital, a lowercase
/// start lowercases the first letter.
pub(crate) fn match_case(original: &str, replacement: &str) -> String {
    let letters: Vec<char> = original.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()) {
        return replacement.to_uppercase();
    }
    let mut chars = replacement.chars();
    let Some(first) = chars.next() else { return String::new() };
    let rest: String = chars.collect();
    match original.chars().next() {
        Some(c) if c.is_uppercase() => first.to_uppercase().collect::<String>() + &rest,
        Some(c) if c.is_lowercase() => first.to_lowercase().collect::<String>() + &rest,
        _ => replacement.to_string(),
    }
}
