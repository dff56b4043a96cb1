//! Experiment configuration: one `key = value` file per collection.
//!
//! ```text
//! name = med
//! data_dir = ../data/med
//! docs = MED.ALL
//! queries = MED.QRY
//! qrels = MED.REL
//! qrels_columns = query=0 doc=2 rel=3 min_rel=1
//! methods = cosine lsa qlsa
//! sweep = 50..300:10
//! ```
//!
//! `data_dir` and `output` are relative to the config file; `docs`,
//! `queries` and `qrels` are relative to `data_dir`. Preprocessing keys
//! (`stopwords`, `stem`, `sections`) follow [`Pipeline::set`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use qlsa::{Method, Pipeline, QrelsColumns};

/// A retrieval method under evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunMethod {
    Cosine,
    Latent(Method),
}

impl RunMethod {
    pub const ALL: [RunMethod; 3] =
        [RunMethod::Cosine, RunMethod::Latent(Method::Lsa), RunMethod::Latent(Method::Qlsa)];

    fn position(self) -> usize {
        match self {
            RunMethod::Cosine => 0,
            RunMethod::Latent(Method::Lsa) => 1,
            RunMethod::Latent(Method::Qlsa) => 2,
        }
    }

    pub fn latent(self) -> Option<Method> {
        match self {
            RunMethod::Cosine => None,
            RunMethod::Latent(m) => Some(m),
        }
    }
}

/// Report order: cosine, lsa, qlsa.
impl Ord for RunMethod {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.position().cmp(&other.position())
    }
}

impl PartialOrd for RunMethod {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for RunMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunMethod::Cosine => f.write_str("cosine"),
            RunMethod::Latent(m) => m.fmt(f),
        }
    }
}

impl FromStr for RunMethod {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(RunMethod::Cosine),
            other => other
                .parse::<Method>()
                .map(RunMethod::Latent)
                .map_err(|_| anyhow!("unknown method {other:?} (expected cosine, lsa or qlsa)")),
        }
    }
}

/// Parses a list of methods separated by spaces or commas; `all` expands to every method.
pub fn parse_methods(value: &str) -> Result<Vec<RunMethod>> {
    let mut methods = Vec::new();
    for word in value.split(|c: char| c == ',' || c.is_whitespace()).filter(|w| !w.is_empty()) {
        if word == "all" {
            methods.extend(RunMethod::ALL);
        } else {
            methods.push(word.parse()?);
        }
    }
    methods.sort();
    methods.dedup();
    if methods.is_empty() {
        bail!("methods must not be empty");
    }
    Ok(methods)
}

/// How query ids are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QueryNumbering {
    /// The `.I` id from the query file.
    #[default]
    File,
    /// 1, 2, 3, ... in file order, for query files whose `.I` ids do not
    /// match the judgments.
    Sequential,
}

/// Parses `a..b:step` (inclusive), a space/comma separated list, or `none`.
pub fn parse_sweep(value: &str) -> Result<Vec<usize>> {
    let value = value.trim();
    if value.is_empty() || value == "none" {
        return Ok(Vec::new());
    }
    let values: Vec<usize> = if let Some((range, step)) = value.split_once(':') {
        let (lo, hi) = range.split_once("..").ok_or_else(|| anyhow!("sweep {value:?}: expected a..b:step"))?;
        let (lo, hi, step): (usize, usize, usize) = (
            lo.trim().parse().with_context(|| format!("sweep start {lo:?}"))?,
            hi.trim().parse().with_context(|| format!("sweep end {hi:?}"))?,
            step.trim().parse().with_context(|| format!("sweep step {step:?}"))?,
        );
        if step == 0 || lo > hi {
            bail!("sweep {value:?}: need start <= end and step >= 1");
        }
        (lo..=hi).step_by(step).collect()
    } else {
        value
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|w| !w.is_empty())
            .map(|w| w.parse().with_context(|| format!("sweep value {w:?}")))
            .collect::<Result<_>>()?
    };
    if values.contains(&0) {
        bail!("sweep values must be at least 1");
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        bail!("sweep values must be strictly increasing: {values:?}");
    }
    Ok(values)
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    pub docs: PathBuf,
    pub queries: PathBuf,
    pub qrels: PathBuf,
    pub qrels_columns: QrelsColumns,
    pub pipeline: Pipeline,
    pub query_numbering: QueryNumbering,
    pub methods: Vec<RunMethod>,
    pub sweep: Vec<usize>,
    pub output: PathBuf,
    pub seed: u64,
    pub lsa_sigma_weighting: bool,
    /// Directory for fitted models; `None` disables caching.
    pub cache: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, None).with_context(|| format!("config {}", path.display()))
    }

    /// Parses config text. Relative paths resolve against `base`;
    /// `data_dir` replaces the file's own `data_dir` when given.
    pub fn parse(text: &str, base: &Path, data_dir: Option<&Path>) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key = value, got {line:?}", n + 1))?;
            entries.push((n + 1, key.trim().to_owned(), value.trim().to_owned()));
        }
        let data_dir = match data_dir {
            Some(dir) => dir.to_path_buf(),
            None => entries
                .iter()
                .find(|(_, k, _)| k == "data_dir")
                .map(|(_, _, v)| base.join(v))
                .unwrap_or_else(|| base.to_path_buf()),
        };

        let mut name = None;
        let (mut docs, mut queries, mut qrels, mut qrels_columns) = (None, None, None, None);
        let mut pipeline = Pipeline::default();
        let mut query_numbering = QueryNumbering::File;
        let mut methods = RunMethod::ALL.to_vec();
        let mut sweep = Vec::new();
        let mut output = None;
        let mut seed = 42;
        let mut lsa_sigma_weighting = false;
        let mut cache: Option<Option<PathBuf>> = None;
        for (line, key, value) in entries {
            let at = || format!("line {line}: {key}");
            match key.as_str() {
                "name" => name = Some(value),
                "data_dir" => {}
                "docs" => docs = Some(data_dir.join(&value)),
                "queries" => queries = Some(data_dir.join(&value)),
                "qrels" => qrels = Some(data_dir.join(&value)),
                "qrels_columns" => qrels_columns = Some(value.parse::<QrelsColumns>().with_context(at)?),
                "stopwords" | "stem" | "sections" => {
                    pipeline.set(&key, &value, base).map_err(|e| anyhow!("{}: {e}", at()))?
                }
                "query_numbering" => {
                    query_numbering = match value.as_str() {
                        "file" => QueryNumbering::File,
                        "sequential" => QueryNumbering::Sequential,
                        _ => bail!("{}: expected file or sequential, got {value:?}", at()),
                    }
                }
                "methods" => methods = parse_methods(&value).with_context(at)?,
                "sweep" => sweep = parse_sweep(&value).with_context(at)?,
                "output" => output = Some(base.join(&value)),
                "seed" => seed = value.parse().with_context(at)?,
                "lsa_sigma_weighting" => lsa_sigma_weighting = value.parse().with_context(at)?,
                "cache" => cache = Some(if value == "none" { None } else { Some(base.join(&value)) }),
                _ => bail!("line {line}: unknown key {key:?}"),
            }
        }
        let missing = |what: &str| anyhow!("missing required key {what:?}");
        let name = name.ok_or_else(|| missing("name"))?;
        let output = output.unwrap_or_else(|| base.join("results").join(&name));
        let cache = cache.unwrap_or_else(|| Some(output.join("cache")));
        let config = Self {
            docs: docs.ok_or_else(|| missing("docs"))?,
            queries: queries.ok_or_else(|| missing("queries"))?,
            qrels: qrels.ok_or_else(|| missing("qrels"))?,
            qrels_columns: qrels_columns.ok_or_else(|| missing("qrels_columns"))?,
            name,
            pipeline,
            query_numbering,
            methods,
            sweep,
            output,
            seed,
            lsa_sigma_weighting,
            cache,
        };
        config.check()?;
        Ok(config)
    }

    /// Checks that do not need the collection.
    pub fn check(&self) -> Result<()> {
        if self.methods.is_empty() {
            bail!("methods must not be empty");
        }
        if self.methods.iter().any(|m| m.latent().is_some()) && self.sweep.is_empty() {
            bail!("lsa and qlsa need at least one sweep value");
        }
        parse_sweep(&self.sweep.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" "))?;
        Ok(())
    }

    /// Checks the sweep against the indexed matrix shape.
    pub fn check_sweep(&self, nterms: usize, ndocs: usize) -> Result<()> {
        let max = nterms.min(ndocs);
        if let Some(&r) = self.sweep.iter().find(|&&r| r > max) {
            bail!("sweep value {r} exceeds min(terms, documents) = {max}");
        }
        Ok(())
    }

    pub fn latent_methods(&self) -> impl Iterator<Item = Method> + '_ {
        self.methods.iter().filter_map(|m| m.latent())
    }
}
