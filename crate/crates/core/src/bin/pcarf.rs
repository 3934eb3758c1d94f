use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pcarf::data::load_csv;
use pcarf::experiment::{self, ExperimentConfig, OUTPUT_DIR_ENV};
use pcarf::metrics::{format_percent, RocCurve, METRIC_NAMES};
use pcarf::pipeline::Pipeline;
use pcarf::{plot, Error, Result};

#[derive(Parser)]
#[command(name = "pcarf", version, about = "PCA + random forest / MLP classification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config file.
    Run {
        config: PathBuf,
        /// Override a config key, e.g. `--set forest.n_trees=50`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory (overrides the config and $PCARF_OUTPUT_DIR).
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Score a CSV file with a saved model and print its metrics.
    Evaluate {
        model: PathBuf,
        csv: PathBuf,
        /// Also write the ROC points to this CSV file.
        #[arg(long)]
        roc: Option<PathBuf>,
    },
    /// Render a ROC CSV file as SVG.
    RocPlot {
        roc_csv: PathBuf,
        /// Output path; defaults to the input with an `.svg` extension.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long, default_value = "ROC curve")]
        title: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run {
            config,
            overrides,
            output,
        } => run(&config, &overrides, output),
        Command::Evaluate { model, csv, roc } => evaluate(&model, &csv, roc.as_deref()),
        Command::RocPlot {
            roc_csv,
            output,
            title,
        } => roc_plot(&roc_csv, output, &title),
    }
}

fn run(path: &Path, overrides: &[String], output: Option<PathBuf>) -> Result<()> {
    let mut config = ExperimentConfig::load(path, overrides)?;
    if let Some(dir) = output.or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from)) {
        config.run.output_dir = dir;
    }
    let report = experiment::run(&config)?;
    print!("{}", experiment::comparison_table(&report));
    eprintln!("wrote results to {}", config.run.output_dir.display());
    Ok(())
}

fn evaluate(model_path: &Path, csv: &Path, roc_out: Option<&Path>) -> Result<()> {
    let pipeline = Pipeline::load(model_path)?;
    let ds = load_csv(csv, &pipeline.label_column, &pipeline.drop_columns)?;
    let eval = pipeline.evaluate(&ds)?;
    let cm = eval.confusion;
    println!(
        "samples {}  tp {}  fp {}  tn {}  fn {}",
        cm.total(),
        cm.tp,
        cm.fp,
        cm.tn,
        cm.fn_
    );
    for (name, v) in METRIC_NAMES.iter().zip(eval.report.values()) {
        println!("{name:<12} {}", format_percent(v));
    }
    match &eval.roc {
        Some(roc) => println!("{:<12} {:.6}", "AUC", roc.auc),
        None => println!("{:<12} n/a (single class)", "AUC"),
    }
    if eval.report.degenerate.any() {
        println!("zero denominators: {}", eval.report.degenerate.describe());
    }
    if let Some(path) = roc_out {
        let roc = eval.roc.as_ref().ok_or_else(|| {
            Error::Dataset("ROC needs both classes in the evaluation data".into())
        })?;
        std::fs::write(path, roc.to_csv()).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn roc_plot(input: &Path, output: Option<PathBuf>, title: &str) -> Result<()> {
    let roc = RocCurve::load(input)?;
    let output = output.unwrap_or_else(|| input.with_extension("svg"));
    std::fs::write(&output, plot::roc_svg(&roc, title)).map_err(|e| Error::io(&output, e))?;
    eprintln!("wrote {}", output.display());
    Ok(())
}
