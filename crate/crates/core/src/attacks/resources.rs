use std::collections::HashMap;
use std::path::Path;

use super::AttackError;

const CONTRACTIONS: &str = include_str!("../../../../data/contractions.tsv");
const MISSPELLINGS: &str = include_str!("../../../../data/misspellings.tsv");
const SYNONYMS: &str = include_str!("../../../../data/synonyms.tsv");

/// Lookup tables behind the table-driven attacks. Keys are lowercase.
#[derive(Debug, Clone)]
pub struct ResourceTables {
    /// Expanded phrase (lowercase words) and its contraction, longest first.
    contract: Vec<(Vec<String>, String)>,
    /// Contraction to its first listed expansion.
    expand: HashMap<String, String>,
    misspellings: HashMap<String, String>,
    synonyms: HashMap<String, Vec<String>>,
}

fn parse_pairs(src: &str, what: &str) -> Result<Vec<(String, String)>, AttackError> {
    let mut out = Vec::new();
    for (n, line) in src.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (a, b) = line
            .split_once('\t')
            .ok_or_else(|| AttackError::Resource(format!("{what} line {}: expected `word<TAB>replacement`", n + 1)))?;
        let (a, b) = (a.trim(), b.trim());
        if a.is_empty() || b.is_empty() {
            return Err(AttackError::Resource(format!("{what} line {}: empty field", n + 1)));
        }
        out.push((a.to_string(), b.to_string()));
    }
    if out.is_empty() {
        return Err(AttackError::Resource(format!("{what} table is empty")));
    }
    Ok(out)
}

impl ResourceTables {
    /// Tables compiled into the library.
    pub fn builtin() -> Self {
        Self::parse(CONTRACTIONS, MISSPELLINGS, SYNONYMS).expect("bundled resource tables are well formed")
    }

    pub fn parse(contractions: &str, misspellings: &str, synonyms: &str) -> Result<Self, AttackError> {
        let mut contract = Vec::new();
        let mut expand = HashMap::new();
        for (expanded, contracted) in parse_pairs(contractions, "contractions")? {
            let words: Vec<String> = expanded.split_whitespace().map(str::to_lowercase).collect();
            expand.entry(contracted.to_lowercase()).or_insert(expanded);
            contract.push((words, contracted));
        }
        contract.sort_by_key(|c| std::cmp::Reverse(c.0.len()));

        let mut miss = HashMap::new();
        for (word, wrong) in parse_pairs(misspellings, "misspellings")? {
            miss.entry(word.to_lowercase()).or_insert(wrong);
        }
        let mut syn: HashMap<String, Vec<String>> = HashMap::new();
        for (word, alt) in parse_pairs(synonyms, "synonyms")? {
            syn.entry(word.to_lowercase()).or_default().push(alt);
        }
        Ok(Self { contract, expand, misspellings: miss, synonyms: syn })
    }

    /// Loads `contractions.tsv`, `misspellings.tsv` and `synonyms.tsv` from `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, AttackError> {
        let read = |name: &str| {
            std::fs::read_to_string(dir.join(name)).map_err(|e| AttackError::Resource(format!("{}: {e}", dir.join(name).display())))
        };
        Self::parse(&read("contractions.tsv")?, &read("misspellings.tsv")?, &read("synonyms.tsv")?)
    }

    pub(crate) fn contractions(&self) -> &[(Vec<String>, String)] {
        &self.contract
    }

    pub fn expansion(&self, contracted: &str) -> Option<&str> {
        self.expand.get(&contracted.to_lowercase()).map(String::as_str)
    }

    pub fn misspelling(&self, word: &str) -> Option<&str> {
        self.misspellings.get(&word.to_lowercase()).map(String::as_str)
    }

    pub fn synonyms(&self, word: &str) -> &[String] {
        self.synonyms.get(&word.to_lowercase()).map(Vec::as_slice).unwrap_or(&[])
    }
}

impl Default for ResourceTables {
    fn default() -> Self {
        Self::builtin()
    }
}
