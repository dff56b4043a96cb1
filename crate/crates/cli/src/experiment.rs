//! Loading a collection, fitting and caching latent spaces, dimension
//! sweeps, and the report files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{anyhow, bail, Context, Result};
use log::{info, warn};
use qlsa::eval::{evaluate_run, improvement_pct, write_curves_csv, write_metrics_csv, RunEvaluation};
use qlsa::retrieval::{run_cosine, run_latent, FoldOptions, LatentIndex};
use qlsa::topics::fit;
use qlsa::{
    build_matrix, parse_qrels, parse_smart_file, LatentSpace, Method, Qrels, QueryVector, RankedRun, SvdOptions,
    TermDocMatrix, Vocabulary,
};

use crate::config::{ExperimentConfig, QueryNumbering, RunMethod};

/// Pipeline step named in error messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Index,
    Fit,
    Search,
    Evaluate,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Index => "index",
            Stage::Fit => "fit",
            Stage::Search => "search",
            Stage::Evaluate => "evaluate",
            Stage::Write => "write",
        })
    }
}

pub trait StageContext<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T, E: Into<anyhow::Error>> StageContext<T> for std::result::Result<T, E> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.into().context(format!("{stage} stage failed")))
    }
}

/// Marker file present while outputs are being written or after a failure.
pub const INCOMPLETE: &str = "INCOMPLETE";

#[derive(Debug, Clone)]
pub struct Collection {
    pub vocab: Vocabulary,
    pub td: TermDocMatrix,
    pub queries: Vec<QueryVector>,
    pub qrels: Qrels,
    /// Judged (query, doc) pairs naming documents absent from the collection.
    pub unknown_judged_docs: Vec<(u32, u32)>,
}

fn read_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

/// Parses documents, queries and judgments and builds the term-document matrix.
pub fn load_collection(cfg: &ExperimentConfig) -> Result<Collection> {
    let missing: Vec<String> = [&cfg.docs, &cfg.queries, &cfg.qrels]
        .into_iter()
        .filter(|p| !p.is_file())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        bail!("collection files missing: {}", missing.join(", "));
    }
    let docs = parse_smart_file(&read_text(&cfg.docs)?).with_context(|| format!("{}", cfg.docs.display()))?;
    let (vocab, td) = build_matrix(&docs, &cfg.pipeline)?;
    if !td.dropped().is_empty() {
        warn!("{}: dropped {} empty documents", cfg.name, td.dropped().len());
    }

    let mut raw_queries =
        parse_smart_file(&read_text(&cfg.queries)?).with_context(|| format!("{}", cfg.queries.display()))?;
    if cfg.query_numbering == QueryNumbering::Sequential {
        for (i, q) in raw_queries.iter_mut().enumerate() {
            q.id = i as u32 + 1;
        }
    }
    let queries: Vec<QueryVector> =
        raw_queries.iter().map(|q| QueryVector::from_tokens(q.id, &vocab, &cfg.pipeline.tokens(q))).collect();
    for q in queries.iter().filter(|q| q.counts.indices().is_empty()) {
        warn!("{}: query {} has no indexed terms", cfg.name, q.id);
    }

    let qrels =
        parse_qrels(&read_text(&cfg.qrels)?, &cfg.qrels_columns).with_context(|| format!("{}", cfg.qrels.display()))?;
    let query_ids: BTreeSet<u32> = queries.iter().map(|q| q.id).collect();
    let doc_ids: BTreeSet<u32> = docs.iter().map(|d| d.id).collect();
    let report = qrels.validate(&query_ids, &doc_ids)?;
    if !report.unknown_docs.is_empty() {
        warn!("{}: {} judgments name unknown documents", cfg.name, report.unknown_docs.len());
    }
    if !report.unjudged_queries.is_empty() {
        warn!("{}: queries without judgments: {:?}", cfg.name, report.unjudged_queries);
    }
    info!(
        "{}: {} documents, {} terms, {} queries, {} judged pairs",
        cfg.name,
        td.ndocs(),
        td.nterms(),
        queries.len(),
        qrels.num_pairs()
    );
    Ok(Collection { vocab, td, queries, qrels, unknown_judged_docs: report.unknown_docs })
}

/// FNV-1a over the matrix shape and entries.
pub fn fingerprint(td: &TermDocMatrix) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    feed(td.nterms() as u64);
    feed(td.ndocs() as u64);
    for col in td.counts().columns() {
        feed(col.nnz() as u64);
        for (j, c) in col.iter() {
            feed(j as u64);
            feed(u64::from(c));
        }
    }
    h
}

fn cache_path(dir: &Path, td: &TermDocMatrix, method: Method, r: usize) -> PathBuf {
    dir.join(format!("{method}-r{r}-{:016x}.bin", fingerprint(td)))
}

/// Fits `method` at rank `r`, reusing a cached model of the same matrix and rank.
pub fn fit_space(cfg: &ExperimentConfig, td: &TermDocMatrix, method: Method, r: usize) -> Result<LatentSpace> {
    let path = cfg.cache.as_ref().map(|dir| cache_path(dir, td, method, r));
    if let Some(path) = path.as_ref().filter(|p| p.is_file()) {
        match File::open(path)
            .map_err(anyhow::Error::from)
            .and_then(|f| LatentSpace::read_binary(std::io::BufReader::new(f)).map_err(anyhow::Error::from))
        {
            Ok(space) if space.method() == method && space.nterms() == td.nterms() => {
                info!("{method} r={r}: loaded {}", path.display());
                return Ok(space);
            }
            Ok(_) => warn!("{}: cached model does not match, refitting", path.display()),
            Err(e) => warn!("{}: unreadable cached model ({e:#}), refitting", path.display()),
        }
    }
    info!("{method}: fitting r={r} on {} x {}", td.nterms(), td.ndocs());
    let space = fit(method, td, r, &SvdOptions::default())?;
    if let Some(path) = path {
        if let Err(e) = store(&space, &path) {
            warn!("{}: could not cache model: {e:#}", path.display());
        }
    }
    Ok(space)
}

fn store(space: &LatentSpace, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    let mut w = BufWriter::new(File::create(&tmp)?);
    space.write_binary(&mut w)?;
    w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn fold_options(cfg: &ExperimentConfig) -> FoldOptions {
    FoldOptions { lsa_sigma_weighting: cfg.lsa_sigma_weighting }
}

/// Ranks every query inside `space` truncated to `r`.
pub fn latent_run(cfg: &ExperimentConfig, coll: &Collection, space: &LatentSpace, r: usize) -> Result<RankedRun> {
    let index = LatentIndex::build(space.truncate(r), &coll.td, fold_options(cfg)).stage(Stage::Search)?;
    let flagged = index.flagged();
    if !flagged.is_empty() {
        warn!("{} r={r}: {} documents have no projection", space.method(), flagged.len());
    }
    run_latent(&index, &coll.queries).stage(Stage::Search)
}

/// MAP and curves of one (method, r) point.
#[derive(Debug, Clone)]
pub struct Point {
    pub method: RunMethod,
    pub r: Option<usize>,
    pub eval: RunEvaluation,
}

fn evaluate(coll: &Collection, run: &RankedRun) -> Result<RunEvaluation> {
    let eval = evaluate_run(run, &coll.qrels).stage(Stage::Evaluate)?;
    if !eval.excluded.is_empty() {
        warn!("{}: {} queries without relevant documents left out of MAP", run.tag, eval.excluded.len());
    }
    Ok(eval)
}

/// Evaluates `method` at every r in `sweep` from one factorization at the largest r,
/// which is returned with the points. Points run on all available cores;
/// results come back in sweep order.
pub fn sweep_method(
    cfg: &ExperimentConfig,
    coll: &Collection,
    method: Method,
    sweep: &[usize],
) -> Result<(LatentSpace, Vec<Point>)> {
    let &max_r = sweep.last().ok_or_else(|| anyhow!("empty sweep"))?;
    let space = fit_space(cfg, &coll.td, method, max_r).stage(Stage::Fit)?;
    if space.rank() < max_r {
        warn!("{method}: numerical rank {} below requested {max_r}", space.rank());
    }
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(sweep.len());
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<RunEvaluation>>>> = Mutex::new((0..sweep.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= sweep.len() {
                    break;
                }
                let out = latent_run(cfg, coll, &space, sweep[i]).and_then(|run| evaluate(coll, &run));
                results.lock().expect("no worker panicked")[i] = Some(out);
            });
        }
    });
    let results = results.into_inner().expect("no worker panicked");
    let points = sweep
        .iter()
        .zip(results)
        .map(|(&r, out)| {
            let eval = out.expect("every point evaluated")?;
            info!("{method} r={r}: MAP {:.4}", eval.map);
            Ok(Point { method: RunMethod::Latent(method), r: Some(r), eval })
        })
        .collect::<Result<_>>()?;
    Ok((space, points))
}

/// The r with the highest MAP; ties go to the smallest r.
pub fn best_r(points: &[(usize, f64)]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &(r, map) in points {
        match best {
            Some((br, bm)) if map < bm || (map == bm && r >= br) => {}
            _ => best = Some((r, map)),
        }
    }
    best.map(|b| b.0)
}

/// Everything `run_experiment` computed.
#[derive(Debug, Clone)]
pub struct Report {
    pub name: String,
    /// Every evaluated point: cosine once, each latent method per sweep value.
    pub points: Vec<Point>,
    /// The best point per method.
    pub best: BTreeMap<RunMethod, Point>,
}

impl Report {
    pub fn best_map(&self, method: RunMethod) -> Option<f64> {
        self.best.get(&method).map(|p| p.eval.map)
    }

    pub fn sweep_of(&self, method: Method) -> Vec<(usize, f64)> {
        self.points
            .iter()
            .filter(|p| p.method == RunMethod::Latent(method))
            .filter_map(|p| p.r.map(|r| (r, p.eval.map)))
            .collect()
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn r_field(r: Option<usize>) -> String {
    r.map(|r| r.to_string()).unwrap_or_default()
}

/// Runs every configured method and sweep point and writes:
///
/// - `map.csv`: MAP per (method, r)
/// - `sweep.csv`: MAP per latent method and r (only with a non-empty sweep)
/// - `metrics.csv`: per-query AP at each method's best r
/// - `rp_curves.csv`: mean 11-point interpolated precision at each best r
/// - `summary.csv`: best MAP per method with the improvement over cosine
/// - `run_<method>.txt`: ranked lists at the best r
///
/// An `INCOMPLETE` file sits in the output directory until everything is written.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    fs::create_dir_all(&cfg.output)
        .with_context(|| format!("creating {}", cfg.output.display()))
        .stage(Stage::Write)?;
    let marker = cfg.output.join(INCOMPLETE);
    fs::write(&marker, "outputs in this directory are partial\n").stage(Stage::Write)?;

    let coll = load_collection(cfg).stage(Stage::Index)?;
    cfg.check_sweep(coll.td.nterms(), coll.td.ndocs()).stage(Stage::Index)?;

    let mut points = Vec::new();
    let mut runs = BTreeMap::new();
    let mut best = BTreeMap::new();
    for &method in &cfg.methods {
        match method.latent() {
            None => {
                let run = run_cosine(&coll.td, &coll.queries);
                let point = Point { method, r: None, eval: evaluate(&coll, &run)? };
                info!("cosine: MAP {:.4}", point.eval.map);
                points.push(point.clone());
                best.insert(method, point);
                runs.insert(method, run);
            }
            Some(latent) => {
                let (space, swept) = sweep_method(cfg, &coll, latent, &cfg.sweep)?;
                let maps: Vec<(usize, f64)> = swept.iter().map(|p| (p.r.expect("latent point"), p.eval.map)).collect();
                let r = best_r(&maps).expect("sweep is non-empty");
                let point = swept.iter().find(|p| p.r == Some(r)).expect("best r is a sweep point").clone();
                runs.insert(method, latent_run(cfg, &coll, &space, r)?);
                points.extend(swept);
                best.insert(method, point);
            }
        }
    }
    let report = Report { name: cfg.name.clone(), points, best };
    write_report(cfg, &report, &runs).stage(Stage::Write)?;
    fs::remove_file(&marker).stage(Stage::Write)?;
    Ok(report)
}

fn write_report(cfg: &ExperimentConfig, report: &Report, runs: &BTreeMap<RunMethod, RankedRun>) -> Result<()> {
    let out = &cfg.output;
    let mut w = create(&out.join("map.csv"))?;
    writeln!(w, "method,r,MAP")?;
    for p in &report.points {
        writeln!(w, "{},{},{:.6}", p.method, r_field(p.r), p.eval.map)?;
    }
    w.flush()?;

    let sweep_path = out.join("sweep.csv");
    if cfg.sweep.is_empty() || cfg.latent_methods().next().is_none() {
        if sweep_path.exists() {
            fs::remove_file(&sweep_path)?;
        }
    } else {
        let mut w = create(&sweep_path)?;
        writeln!(w, "method,r,MAP")?;
        for p in report.points.iter().filter(|p| p.r.is_some()) {
            writeln!(w, "{},{},{:.6}", p.method, r_field(p.r), p.eval.map)?;
        }
        w.flush()?;
    }

    let rows: Vec<(String, Option<usize>, &RunEvaluation)> =
        report.best.values().map(|p| (p.method.to_string(), p.r, &p.eval)).collect();
    let mut w = create(&out.join("metrics.csv"))?;
    write_metrics_csv(&mut w, &rows)?;
    w.flush()?;
    let mut w = create(&out.join("rp_curves.csv"))?;
    write_curves_csv(&mut w, &rows)?;
    w.flush()?;

    let baseline = report.best_map(RunMethod::Cosine);
    let mut w = create(&out.join("summary.csv"))?;
    writeln!(w, "collection,method,r,MAP,improvement_pct,queries")?;
    for p in report.best.values() {
        let improvement = match (p.method, baseline) {
            (RunMethod::Latent(_), Some(base)) => format!("{:.2}", improvement_pct(p.eval.map, base)),
            _ => String::new(),
        };
        writeln!(
            w,
            "{},{},{},{:.6},{},{}",
            report.name,
            p.method,
            r_field(p.r),
            p.eval.map,
            improvement,
            p.eval.queries.len()
        )?;
    }
    w.flush()?;

    for (method, run) in runs {
        let mut w = create(&out.join(format!("run_{method}.txt")))?;
        run.write_trec(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

/// Writes `index.csv` (collection statistics) and `vocabulary.txt`.
pub fn write_index(cfg: &ExperimentConfig, coll: &Collection) -> Result<()> {
    fs::create_dir_all(&cfg.output)?;
    let mut w = create(&cfg.output.join("index.csv"))?;
    writeln!(w, "statistic,value")?;
    writeln!(w, "documents,{}", coll.td.ndocs())?;
    writeln!(w, "dropped_documents,{}", coll.td.dropped().len())?;
    writeln!(w, "terms,{}", coll.td.nterms())?;
    writeln!(w, "nonzeros,{}", coll.td.counts().nnz())?;
    writeln!(w, "queries,{}", coll.queries.len())?;
    writeln!(w, "judged_queries,{}", coll.qrels.num_queries())?;
    writeln!(w, "relevant_pairs,{}", coll.qrels.num_pairs())?;
    writeln!(w, "unknown_judged_documents,{}", coll.unknown_judged_docs.len())?;
    w.flush()?;
    let mut w = create(&cfg.output.join("vocabulary.txt"))?;
    for term in coll.vocab.terms() {
        writeln!(w, "{term}")?;
    }
    w.flush()?;
    Ok(())
}

/// Ranks all queries with one method at one r (ignored for cosine).
pub fn search(
    cfg: &ExperimentConfig,
    coll: &Collection,
    method: RunMethod,
    r: Option<usize>,
) -> Result<(RankedRun, RunEvaluation)> {
    let run = match method.latent() {
        None => run_cosine(&coll.td, &coll.queries),
        Some(latent) => {
            let r = r.ok_or_else(|| anyhow!("{latent} needs --r"))?;
            cfg.check_sweep(coll.td.nterms(), coll.td.ndocs()).stage(Stage::Index)?;
            let space = fit_space(cfg, &coll.td, latent, r).stage(Stage::Fit)?;
            latent_run(cfg, coll, &space, r)?
        }
    };
    let eval = evaluate(coll, &run)?;
    Ok((run, eval))
}
