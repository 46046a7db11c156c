use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use evofss::data::stratified_split;
use evofss::harness::config::{DataFormat, DataSource};
use evofss::harness::report::{emit_reports, emit_speedup, load_campaign, CampaignRecord};
use evofss::harness::{run_experiment, speedup, ExperimentConfig};
use evofss::{engine, Algorithm, EngineConfig, Error, Result};

#[derive(Parser)]
#[command(name = "evofss", version, about = "Evolutionary wrapper feature subset selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full campaign described by a config file and write reports.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one algorithm once and print the selected subset.
    Select(Box<SelectArgs>),
    /// Time sequential against parallel runs for each configured algorithm.
    Speedup {
        #[arg(long)]
        config: PathBuf,
    },
    /// Regenerate report files from a previous campaign's runs.json.
    Report {
        #[arg(long = "in")]
        dir: PathBuf,
    },
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "csv")]
    format: DataFormat,
    /// Label column name, or zero-based index when the file has no header.
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    header: bool,
    #[arg(long)]
    nfeat: Option<usize>,
    #[arg(long, default_value = "pbtade")]
    algorithm: Algorithm,
    #[arg(long)]
    mf: Option<f64>,
    #[arg(long)]
    cr: Option<f64>,
    #[arg(long)]
    tmf: Option<usize>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    cool: Option<f64>,
    #[arg(long)]
    pop: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long = "ta-iters")]
    ta_iters: Option<usize>,
    #[arg(long)]
    islands: Option<usize>,
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    bias: Option<f64>,
    #[arg(long = "split-ratio", default_value_t = 0.8)]
    split_ratio: f64,
    #[arg(long = "split-seed", default_value_t = 42)]
    split_seed: u64,
    /// Print the result as JSON.
    #[arg(long)]
    json: bool,
}

fn select(a: SelectArgs) -> Result<()> {
    let mut cfg = EngineConfig::default().with_algorithm(a.algorithm);
    cfg.master_seed = a.seed;
    if let Some(v) = a.mf {
        cfg.de.mf = v;
    }
    if let Some(v) = a.cr {
        cfg.de.cr = v;
    }
    if let Some(v) = a.tmf {
        cfg.ta.tmf = v;
    }
    if let Some(v) = a.t0 {
        cfg.ta.t0 = v;
    }
    if let Some(v) = a.cool {
        cfg.ta.cool = v;
    }
    if let Some(v) = a.pop {
        cfg.pop_size = v;
    }
    if let Some(v) = a.iters {
        cfg.max_iter1 = v;
    }
    if let Some(v) = a.ta_iters {
        cfg.max_iter2 = v;
    }
    if let Some(v) = a.islands {
        cfg.islands = v;
    }
    if let Some(v) = a.parallelism {
        cfg.parallelism = v;
    }
    if let Some(v) = a.bias {
        cfg.bias = v;
    }
    cfg.validate()?;

    let source = DataSource {
        path: a.data,
        format: a.format,
        label: a.label,
        header: a.header,
        nfeat: a.nfeat,
    };
    let ds = source.load()?;
    let split = stratified_split(&ds, a.split_ratio, a.split_seed)?;
    let result = engine::run(&cfg, &split)?;

    if a.json {
        let record = CampaignRecord::from_results(split.train.feature_names(), 1, &[(cfg.algorithm, vec![result])]);
        let text = serde_json::to_string_pretty(&record.records[0]).map_err(|e| Error::Runtime(e.to_string()))?;
        println!("{text}");
    } else {
        let best = &result.best;
        let score = best.auc.unwrap_or_else(evofss::FitnessScore::worst);
        println!("algorithm    {}", cfg.algorithm);
        println!("test AUC     {:.4}", score.auc);
        println!("sensitivity  {:.4}", score.sensitivity);
        println!("specificity  {:.4}", score.specificity);
        println!("cardinality  {}", best.cardinality());
        println!("evaluations  {}", result.evaluations);
        println!("features     {}", best.selected_ids.join(" "));
    }
    Ok(())
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { config } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let campaign = run_experiment(&cfg)?;
            emit_reports(&cfg.output, &campaign)?;
            let summary = std::fs::read_to_string(cfg.output.join("summary.txt")).unwrap_or_default();
            print!("{summary}");
            eprintln!("reports written to {}", cfg.output.display());
        }
        Command::Select(args) => select(*args)?,
        Command::Speedup { config } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let rows = speedup(&cfg)?;
            emit_speedup(&cfg.output, &rows)?;
            println!("{:<10} {:>12} {:>12} {:>8}", "algorithm", "sequential", "parallel", "speedup");
            for (alg, r) in &rows {
                println!(
                    "{:<10} {:>11.3}s {:>11.3}s {:>8.2}",
                    alg.to_string(),
                    r.sequential_seconds,
                    r.parallel_seconds,
                    r.speedup
                );
            }
        }
        Command::Report { dir } => {
            let campaign = load_campaign(&dir)?;
            emit_reports(&dir, &campaign)?;
            let summary = std::fs::read_to_string(dir.join("summary.txt")).unwrap_or_default();
            print!("{summary}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
