use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use swapreg::bench::{
    generate_instances, read_results, run_experiment, run_path_mode, summarize, write_experiment,
    write_path, write_summary, ExperimentConfig, Workspace,
};
use swapreg::theory::{theory_report, NuMode, TheoryOptions};
use swapreg::Error;

#[derive(Parser)]
#[command(name = "swapreg", version, about = "Sparse regression by greedy variable swapping")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 picks the number of cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides `output.dir` (default `results`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct CellArgs {
    #[arg(long, default_value_t = 0)]
    a_index: usize,
    #[arg(long, default_value_t = 0)]
    n_index: usize,
    #[arg(long, default_value_t = 0)]
    trial: usize,
}

#[derive(Subcommand)]
enum Verb {
    /// Write the configured instances as CSV files.
    Generate(Common),
    /// Run the experiment and write results and summary tables.
    Run(Common),
    /// Recompute summary tables from a results file.
    Summarize {
        /// A `results-<hash>.jsonl` file.
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Print the theory report for one instance of the configuration.
    Theory {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        cell: CellArgs,
        /// Extra ℓ values for the restricted eigenvalues.
        #[arg(long, value_delimiter = ',')]
        ell: Vec<usize>,
        /// Extra d values for γ_d and ν_d.
        #[arg(long, value_delimiter = ',')]
        d: Vec<usize>,
        /// Use the main-text index sets for ν_d.
        #[arg(long)]
        nu_main_text: bool,
    },
    /// Supports of size 1..=k_max for every solver, refined by swapping.
    Path {
        #[command(flatten)]
        common: Common,
        /// Largest support size; defaults to 2k capped at min(n, p).
        #[arg(long)]
        k_max: Option<usize>,
    },
}

fn load(c: &Common) -> swapreg::Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(&c.config)?;
    if let Some(s) = c.seed {
        cfg.master_seed = s;
    }
    let dir = c
        .out_dir
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    Ok((cfg, dir))
}

fn show(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn results_tag(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    stem.strip_prefix("results-").unwrap_or(stem).to_string()
}

fn execute(verb: Verb) -> swapreg::Result<()> {
    match verb {
        Verb::Generate(c) => {
            let (cfg, dir) = load(&c)?;
            let dirs = generate_instances(&cfg, &dir.join(format!("instances-{}", cfg.hash())))?;
            show(&dirs);
        }
        Verb::Run(c) => {
            let (cfg, dir) = load(&c)?;
            let out = run_experiment(&cfg, c.threads)?;
            let files = write_experiment(&cfg, &out, &dir)?;
            if !out.errors.is_empty() {
                eprintln!("{} rows failed; see {}", out.errors.len(), files.errors.display());
            }
            show(&[files.results, files.errors]);
            show(&files.summaries);
        }
        Verb::Summarize { results, out_dir } => {
            let rows = read_results(&results)?;
            let dir = out_dir
                .or_else(|| results.parent().map(Path::to_path_buf))
                .unwrap_or_default();
            std::fs::create_dir_all(&dir)?;
            show(&write_summary(&dir, &results_tag(&results), &summarize(&rows))?);
        }
        Verb::Theory {
            common,
            cell,
            ell,
            d,
            nu_main_text,
        } => {
            let (cfg, dir) = load(&common)?;
            let target = cfg
                .cells()
                .into_iter()
                .find(|c| c.a_index == cell.a_index && c.n_index == cell.n_index && c.trial == cell.trial)
                .ok_or_else(|| Error::Config("no such (a, n, trial) cell".into()))?;
            let inst = Workspace::prepare(&cfg)?.instance(&cfg, &target)?;
            let opts = TheoryOptions {
                ells: ell,
                ds: d,
                nu_mode: if nu_main_text { NuMode::MainText } else { NuMode::Appendix },
                sigma: cfg.sigma,
                ..TheoryOptions::default()
            };
            let report = theory_report(&inst.x, &inst.s_star, Some(inst.beta_star.values.view()), &opts)?;
            let json = report.to_json()?;
            std::fs::create_dir_all(&dir)?;
            let path = dir.join(format!(
                "theory-{}-a{}_n{}_t{}.json",
                cfg.hash(),
                cell.a_index,
                cell.n_index,
                cell.trial
            ));
            std::fs::write(&path, &json)?;
            println!("{json}");
        }
        Verb::Path { common, k_max } => {
            let (cfg, dir) = load(&common)?;
            let k_max = match k_max {
                Some(k) => k,
                None => {
                    let ws = Workspace::prepare(&cfg)?;
                    let x = ws.instance(&cfg, &cfg.cells()[0])?.x;
                    (2 * cfg.k).min(x.n()).min(x.p())
                }
            };
            let (rows, errors) = run_path_mode(&cfg, k_max, common.threads)?;
            if !errors.is_empty() {
                eprintln!("{} paths failed", errors.len());
            }
            show(&write_path(&dir, &cfg.hash(), &rows, &errors)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.verb) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
