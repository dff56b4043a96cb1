use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use qlsa_cli::config::{parse_methods, parse_sweep, ExperimentConfig, RunMethod};
use qlsa_cli::experiment::{
    best_r, fit_space, load_collection, run_experiment, search, sweep_method, write_index, Stage, StageContext,
};

#[derive(Parser)]
#[command(name = "qlsa", version, about = "QLSA, LSA and cosine retrieval experiments on SMART collections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the collection and write index.csv and vocabulary.txt.
    Index(Common),
    /// Fit one latent space and write it as a text model.
    Fit(Common),
    /// Rank all queries with one method and write its run file.
    Search(Common),
    /// Evaluate the latent methods at every sweep point and write sweep.csv.
    Sweep(Common),
    /// Run the full experiment: MAP tables, sweeps, curves, summary and runs.
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config file.
    #[arg(short, long)]
    config: PathBuf,
    /// Methods, comma separated: cosine, lsa, qlsa or all.
    #[arg(short, long)]
    method: Option<String>,
    /// Latent dimension; replaces the sweep with this single value.
    #[arg(short, long)]
    r: Option<usize>,
    /// Sweep as `a..b:step` or a list.
    #[arg(long, conflicts_with = "r")]
    sweep: Option<String>,
    /// Output directory.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Directory holding the collection files.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Divide LSA latent coordinates by the singular values.
    #[arg(long)]
    lsa_sigma_weighting: bool,
    /// Do not read or write cached models.
    #[arg(long)]
    no_cache: bool,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let text = fs::read_to_string(&self.config).with_context(|| format!("reading {}", self.config.display()))?;
        let base = self.config.parent().unwrap_or(std::path::Path::new("."));
        let mut cfg = ExperimentConfig::parse(&text, base, self.data_dir.as_deref())
            .with_context(|| format!("config {}", self.config.display()))?;
        if let Some(m) = &self.method {
            cfg.methods = parse_methods(m)?;
        }
        if let Some(r) = self.r {
            cfg.sweep = vec![r];
        }
        if let Some(s) = &self.sweep {
            cfg.sweep = parse_sweep(s)?;
        }
        if let Some(out) = &self.output {
            if cfg.cache.as_ref() == Some(&cfg.output.join("cache")) {
                cfg.cache = Some(out.join("cache"));
            }
            cfg.output = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.lsa_sigma_weighting |= self.lsa_sigma_weighting;
        if self.no_cache {
            cfg.cache = None;
        }
        cfg.check()?;
        Ok(cfg)
    }
}

fn single_method(cfg: &ExperimentConfig) -> Result<RunMethod> {
    match cfg.methods.as_slice() {
        [m] => Ok(*m),
        _ => Err(anyhow!("pick one method with --method")),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Index(c) => {
            let cfg = c.load()?;
            let coll = load_collection(&cfg).stage(Stage::Index)?;
            write_index(&cfg, &coll).stage(Stage::Write)?;
            println!(
                "{}: {} documents, {} terms, {} queries",
                cfg.name,
                coll.td.ndocs(),
                coll.td.nterms(),
                coll.queries.len()
            );
        }
        Command::Fit(c) => {
            let cfg = c.load()?;
            let method = single_method(&cfg)?.latent().ok_or_else(|| anyhow!("cosine has no model to fit"))?;
            let r = *cfg.sweep.last().ok_or_else(|| anyhow!("fit needs --r"))?;
            let coll = load_collection(&cfg).stage(Stage::Index)?;
            cfg.check_sweep(coll.td.nterms(), coll.td.ndocs()).stage(Stage::Index)?;
            let space = fit_space(&cfg, &coll.td, method, r).stage(Stage::Fit)?;
            fs::create_dir_all(&cfg.output).stage(Stage::Write)?;
            let path = cfg.output.join(format!("{method}_r{r}.model"));
            let mut w = BufWriter::new(File::create(&path).stage(Stage::Write)?);
            space.write_text(&mut w).stage(Stage::Write)?;
            println!("{method} r={r}: rank {} written to {}", space.rank(), path.display());
        }
        Command::Search(c) => {
            let cfg = c.load()?;
            let method = single_method(&cfg)?;
            let coll = load_collection(&cfg).stage(Stage::Index)?;
            let r = method.latent().and(cfg.sweep.last().copied());
            let (run, eval) = search(&cfg, &coll, method, r)?;
            fs::create_dir_all(&cfg.output).stage(Stage::Write)?;
            let name = match r {
                Some(r) => format!("run_{method}_r{r}.txt"),
                None => format!("run_{method}.txt"),
            };
            run.write_trec(BufWriter::new(File::create(cfg.output.join(&name)).stage(Stage::Write)?))
                .stage(Stage::Write)?;
            println!("{method}: MAP {:.4} over {} queries ({name})", eval.map, eval.queries.len());
        }
        Command::Sweep(c) => {
            let cfg = c.load()?;
            let coll = load_collection(&cfg).stage(Stage::Index)?;
            cfg.check_sweep(coll.td.nterms(), coll.td.ndocs()).stage(Stage::Index)?;
            fs::create_dir_all(&cfg.output).stage(Stage::Write)?;
            let mut csv = String::from("method,r,MAP\n");
            for method in cfg.latent_methods() {
                let (_, points) = sweep_method(&cfg, &coll, method, &cfg.sweep)?;
                let maps: Vec<(usize, f64)> = points.iter().filter_map(|p| p.r.map(|r| (r, p.eval.map))).collect();
                for (r, map) in &maps {
                    csv.push_str(&format!("{method},{r},{map:.6}\n"));
                }
                if let Some(r) = best_r(&maps) {
                    println!("{method}: best r {r}");
                }
            }
            fs::write(cfg.output.join("sweep.csv"), csv).stage(Stage::Write)?;
        }
        Command::Report(c) => {
            let cfg = c.load()?;
            let report = run_experiment(&cfg)?;
            for p in report.best.values() {
                let r = p.r.map(|r| format!(" r={r}")).unwrap_or_default();
                println!("{} {}{r}: MAP {:.4}", report.name, p.method, p.eval.map);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
