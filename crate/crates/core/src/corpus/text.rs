use std::collections::HashSet;
use std::path::Path;

use super::{porter, CorpusError, Result};

const SMART_STOPWORDS: &str = include_str!("../../data/smart_stopwords.txt");

/// A set of lowercase stop-words.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopWords(HashSet<String>);

impl StopWords {
    /// Whitespace-separated words; `#` starts a comment line.
    pub fn parse(text: &str) -> Self {
        Self(
            text.lines()
                .filter(|l| !l.trim_start().starts_with('#'))
                .flat_map(str::split_whitespace)
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The bundled SMART stop-list.
pub fn smart_stopwords() -> StopWords {
    StopWords::parse(SMART_STOPWORDS)
}

/// Lowercase, split on non-letters, drop stop-words, optionally Porter-stem.
pub fn preprocess(text: &str, stopwords: &StopWords, stem: bool) -> Vec<String> {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| !stopwords.contains(t))
        .map(|t| if stem { porter::stem(&t) } else { t })
        .collect()
}

/// Preprocessing configuration shared by documents and queries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pipeline {
    pub stopwords: StopWords,
    pub stem: bool,
    /// Section markers whose text is indexed, e.g. `.T` and `.W`.
    pub sections: Vec<String>,
}

impl Default for Pipeline {
    fn default() -> Self {
        Self { stopwords: smart_stopwords(), stem: true, sections: vec![".T".into(), ".W".into()] }
    }
}

impl Pipeline {
    pub fn tokens(&self, doc: &super::RawDocument) -> Vec<String> {
        preprocess(&doc.text_of(&self.sections), &self.stopwords, self.stem)
    }

    /// Reads `key = value` lines:
    ///
    /// ```text
    /// stopwords = smart        # or a path, relative to `base`; "none" disables
    /// stem = true
    /// sections = .T .W
    /// ```
    ///
    /// Unknown keys are an error.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut pipeline = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| CorpusError::BadPipeline { line: n + 1, message };
            let (key, value) =
                line.split_once('=').ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            pipeline.set(key.trim(), value.trim(), base).map_err(err)?;
        }
        Ok(pipeline)
    }

    /// Applies one configuration key. Returns `Err` with a message on a bad key or value.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> std::result::Result<(), String> {
        match key {
            "stopwords" => {
                self.stopwords = match value {
                    "smart" => smart_stopwords(),
                    "none" => StopWords::default(),
                    path => StopWords::from_file(&base.join(path)).map_err(|e| format!("{path}: {e}"))?,
                }
            }
            "stem" => self.stem = value.parse().map_err(|_| format!("stem must be true or false, got {value:?}"))?,
            "sections" => {
                let sections: Vec<String> = value.split_whitespace().map(str::to_owned).collect();
                if sections.is_empty() || sections.iter().any(|s| !s.starts_with('.')) {
                    return Err(format!("sections must be markers like .T .W, got {value:?}"));
                }
                self.sections = sections;
            }
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }
}
