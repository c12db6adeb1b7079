use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tailnet::charts::emit_charts;
use tailnet::config::{parse_delimiter, parse_periods, ConfigFile, StudyConfig};
use tailnet::study::{
    build_study_networks, load_panel, rank_all, read_networks, read_reports, read_timeseries,
    run_study_on, weight_distribution_stats, write_networks, write_rankings,
};
use tailnet::synthetic::{factor_panel, FactorPanelSpec};
use tailnet::{Error, Result};

#[derive(Parser)]
#[command(name = "tailnet", version, about = "Tail-risk networks and weighted effective resistance centrality")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and save the per-window networks only.
    Build(StudyArgs),
    /// Run the full study: networks, reports, rankings, time series.
    Analyze {
        #[command(flatten)]
        study: StudyArgs,
        /// Also write SVG charts.
        #[arg(long)]
        charts: bool,
    },
    /// Recompute ranking tables from saved reports.
    Rank {
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        periods: Option<String>,
    },
    /// Render SVG charts from a saved output tree.
    ExportCharts {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Write a seeded synthetic factor-model return panel as CSV.
    Simulate {
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 120)]
        firms: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct StudyArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Tail probability, e.g. 0.05 for a 95% confidence level.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    min_obs: Option<usize>,
    /// Sub-periods as NAME:YYYY-MM..YYYY-MM, comma separated.
    #[arg(long)]
    periods: Option<String>,
    #[arg(long)]
    delimiter: Option<String>,
}

fn study_config(args: &StudyArgs) -> Result<StudyConfig> {
    let mut config = StudyConfig::default();
    if let Some(path) = &args.config {
        config.merge_file(&ConfigFile::load(path)?)?;
    }
    if let Some(input) = &args.input {
        config.input = input.clone();
    }
    if let Some(out) = &args.out {
        config.output_dir = out.clone();
    }
    if let Some(alpha) = args.alpha {
        config.alpha = alpha;
    }
    if let Some(min_obs) = args.min_obs {
        config.min_obs = min_obs;
    }
    if let Some(periods) = &args.periods {
        config.sub_periods = parse_periods(periods)?;
    }
    if let Some(d) = &args.delimiter {
        config.delimiter = parse_delimiter(d)?;
    }
    if config.input.as_os_str().is_empty() {
        return Err(Error::Config("no input given (--input or config `input`)".into()));
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Build(args) => {
            let config = study_config(&args)?;
            let panel = load_panel(&config)?;
            let (networks, skipped) = build_study_networks(&config, &panel)?;
            write_networks(&config.output_dir, &networks)?;
            log::info!("{} networks written, {} windows skipped", networks.len(), skipped.len());
        }
        Command::Analyze { study, charts } => {
            let mut config = study_config(&study)?;
            config.charts |= charts;
            let panel = load_panel(&config)?;
            let output = run_study_on(&config, &panel)?;
            output.write(&config.output_dir, config.charts)?;
            log::info!(
                "{} of {} windows analyzed, {} skipped",
                output.reports.len(),
                output.windows,
                output.skipped.len()
            );
        }
        Command::Rank {
            out,
            config,
            periods,
        } => {
            let mut study = StudyConfig::default();
            if let Some(path) = &config {
                study.merge_file(&ConfigFile::load(path)?)?;
            }
            if let Some(p) = &periods {
                study.sub_periods = parse_periods(p)?;
            }
            study.validate()?;
            let reports = read_reports(&out.join("reports"))?;
            if reports.is_empty() {
                return Err(Error::Empty(format!("no reports under {}", out.display())));
            }
            write_rankings(&out, &rank_all(&reports, &study.sub_periods))?;
        }
        Command::ExportCharts { out } => export_charts(&out)?,
        Command::Simulate {
            output,
            firms,
            seed,
        } => {
            let mut spec = FactorPanelSpec {
                n_firms: firms,
                tail_firm: firms / 2,
                ..FactorPanelSpec::default()
            };
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            let panel = factor_panel(&spec)?;
            let file = std::fs::File::create(&output).map_err(|e| Error::io(&output, e))?;
            tailnet::panel::write_returns(&panel, std::io::BufWriter::new(file), &Default::default())?;
            log::info!("tail-factor firm: {}", spec.tail_firm_name());
        }
    }
    Ok(())
}

fn export_charts(out: &Path) -> Result<()> {
    let ts_path = out.join("timeseries.csv");
    let file = std::fs::File::open(&ts_path).map_err(|e| Error::io(&ts_path, e))?;
    let rows = read_timeseries(file)?;
    let networks = read_networks(&out.join("networks"))?;
    emit_charts(&out.join("charts"), &rows, &weight_distribution_stats(&networks))
}

fn fail(kind: &str, message: &str) -> ExitCode {
    let body = serde_json::json!({ "error": kind, "message": message });
    eprintln!("{body}");
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim()),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}
