use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bitplane_lab::harness::{
    self, ClassifierKind, ExperimentConfig, Extractor, IngestMode, Representation,
};
use bitplane_lab::{Error, NlmParams};
use clap::{Args, Parser, Subcommand};

const THREADS_ENV: &str = "BITPLANE_LAB_THREADS";

#[derive(Parser)]
#[command(name = "bitplane-lab", version, about = "Bit-plane partial denoising experiments on X-ray images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a dataset and print a summary
    Ingest {
        #[command(flatten)]
        data: DataArgs,
        /// Also print one `id,label,path` line per image
        #[arg(long)]
        list: bool,
    },
    /// Write every representation of every image as PGM, plus labels.csv
    ExportReps {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        nlm: NlmArgs,
    },
    /// Write quality.csv with SNR and SSIM of each representation
    Quality {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        nlm: NlmArgs,
    },
    /// Run the full experiment matrix and write reports and charts
    Run {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
        /// Representations to evaluate
        #[arg(long, value_delimiter = ',', default_value = "original,msb4,lsb4,full_denoised,partial_denoised")]
        reps: Vec<Representation>,
        /// `handcrafted` or `csv:<path>`; repeat or comma-separate for several
        #[arg(long, value_delimiter = ',', default_value = "handcrafted")]
        extractor: Vec<Extractor>,
        /// `dt`, `rf` or both
        #[arg(long, value_delimiter = ',', default_value = "dt,rf")]
        classifiers: Vec<ClassifierKind>,
        #[arg(long, default_value_t = 0.2)]
        split_frac: f64,
        /// Seed for the split, the tree and the forest
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Trees in the random forest
        #[arg(long, default_value_t = 100)]
        trees: usize,
        #[command(flatten)]
        nlm: NlmArgs,
        /// Skip SVG charts
        #[arg(long)]
        no_charts: bool,
    },
    /// Render SVG charts from a report.json
    Chart {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct DataArgs {
    /// Dataset root
    #[arg(long)]
    root: PathBuf,
    /// auto, folder or csv
    #[arg(long, default_value = "auto")]
    mode: IngestMode,
}

#[derive(Args)]
struct NlmArgs {
    #[arg(long, default_value_t = 10.0)]
    nlm_h: f64,
    #[arg(long, default_value_t = 3)]
    nlm_template: usize,
    #[arg(long, default_value_t = 10)]
    nlm_search: usize,
}

impl NlmArgs {
    fn params(&self) -> Result<NlmParams, Error> {
        NlmParams::new(self.nlm_h, self.nlm_template, self.nlm_search)
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParams(format!("{THREADS_ENV} must be a non-negative integer, got {raw:?}")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParams(format!("cannot configure thread pool: {e}")))?;
    }
    Ok(())
}

fn print_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn ensure_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Ingest { data, list } => {
            let set = harness::ingest(&data.root, data.mode)?;
            let [non, frac] = set.class_counts();
            println!(
                "{} images ({frac} fractured, {non} non-fractured) from {:?} layout",
                set.len(),
                set.provenance
            );
            if list {
                for e in &set.entries {
                    println!("{},{},{}", e.id, e.label, e.path.display());
                }
            }
        }
        Command::ExportReps { data, out, nlm } => {
            let nlm = nlm.params()?;
            let set = harness::ingest(&data.root, data.mode)?;
            let written = harness::export_representations(&set, &nlm, &out)?;
            println!("wrote {} files to {}", written.len(), out.display());
        }
        Command::Quality { data, out, nlm } => {
            let config = ExperimentConfig {
                nlm: nlm.params()?,
                ..ExperimentConfig::default()
            };
            let set = harness::ingest(&data.root, data.mode)?;
            let rows = harness::quality_table(&set, &config)?;
            ensure_dir(&out)?;
            let path = out.join(harness::QUALITY_FILE);
            harness::write_quality_csv(&rows, &path)?;
            print_written(&[path]);
        }
        Command::Run {
            data,
            out,
            reps,
            extractor,
            classifiers,
            split_frac,
            seed,
            trees,
            nlm,
            no_charts,
        } => {
            let mut config = ExperimentConfig {
                representations: reps,
                extractors: extractor,
                classifiers,
                nlm: nlm.params()?,
                output_dir: Some(out.clone()),
                ..ExperimentConfig::default()
            }
            .with_seed(seed);
            config.split.test_fraction = split_frac;
            config.forest.n_estimators = trees;
            config.validate()?;
            let set = harness::ingest(&data.root, data.mode)?;
            let report = harness::run_experiment(&set, &config)?;
            print_written(&harness::emit_report(&report, &out)?);
            if !no_charts {
                print_written(&harness::emit_charts(&report, &out)?);
            }
            for r in &report.class_rows {
                println!(
                    "{:<12} {:<14} {:<17} accuracy {:.4}  f1 {:.4}",
                    r.extractor,
                    r.classifier.name(),
                    r.representation.name(),
                    r.accuracy,
                    r.f1
                );
            }
        }
        Command::Chart { report, out } => {
            let report = harness::read_report(&report)?;
            print_written(&harness::emit_charts(&report, &out)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = configure_threads().and_then(|()| execute(cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage_error() { 1 } else { 2 })
        }
    }
}
