use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mgnss::config::{Ablation, FlatConfig, PipelineConfig};
use mgnss::io::{self, RawFloat};
use mgnss::mask::{apply_mask, DegradationSpec, MissingKind};
use mgnss::metrics::{evaluate, PsnrMode};
use mgnss::pipeline::{recover, run_benchmark_file};
use mgnss::synthetic::synthetic_cube;
use mgnss::{Error, Result};

#[derive(Parser)]
#[command(name = "mgnss", version, about = "Hyperspectral tensor completion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mask a ground-truth cube and write the observation and its mask.
    Degrade {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output_tensor: PathBuf,
        #[arg(long)]
        output_mask: PathBuf,
        #[arg(long, default_value = "pixel")]
        kind: MissingKind,
        #[arg(long)]
        rate: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Complete an observed cube.
    Recover {
        #[arg(long)]
        observed: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Ground truth; adds PSNR, SSIM and RSE to the report.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, default_value = "band")]
        psnr_mode: PsnrMode,
    },
    /// Score a candidate cube against a reference.
    Metrics {
        #[arg(long)]
        candidate: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long, default_value = "band")]
        psnr_mode: PsnrMode,
    },
    /// Convert headerless little-endian floats (mode 0 fastest) to a tensor file.
    Import {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Comma-separated dimensions, e.g. 256,256,31.
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long, default_value = "f32")]
        dtype: RawFloat,
    },
    /// Write one band as a binary PGM image.
    ExportBand {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        band: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Write a seeded synthetic cube.
    Synth {
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "30,30,10")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Degrade, recover and score a ground-truth cube for every kind and rate.
    Benchmark {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "pixel,stripe")]
        kinds: Vec<MissingKind>,
        #[arg(long, value_delimiter = ',', required = true)]
        rates: Vec<f64>,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = "band")]
        psnr_mode: PsnrMode,
        /// Machine-readable table destination.
        #[arg(long)]
        table: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key=value` override applied after the file; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    ablation: Option<Ablation>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut config = PipelineConfig::default();
        if let Some(path) = &self.config {
            let text = read_text(path)?;
            config.apply(&FlatConfig::from_toml_str(&text)?)?;
        }
        for assignment in &self.overrides {
            config.apply(&FlatConfig::from_assignment(assignment)?)?;
        }
        if let Some(ablation) = self.ablation {
            config.ablation = ablation;
        }
        config.validate()?;
        Ok(config)
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Degrade {
            input,
            output_tensor,
            output_mask,
            kind,
            rate,
            seed,
        } => {
            let truth = io::load_tensor(&input)?;
            let mask = DegradationSpec {
                kind,
                sampling_rate: rate,
                seed,
            }
            .make_mask(truth.dims())?;
            io::save_tensor(&output_tensor, &apply_mask(&truth, &mask)?)?;
            io::save_mask(&output_mask, &mask)?;
            println!("realized_rate = {}", mask.realized_rate());
        }
        Command::Recover {
            observed,
            mask,
            config,
            output,
            report,
            truth,
            psnr_mode,
        } => {
            let config = config.resolve()?;
            let t = io::load_tensor(&observed)?;
            let mask = io::load_mask(&mask)?;
            let (x, mut rep) = recover(&t, &mask, &config)?;
            if let Some(path) = truth {
                let reference = io::load_tensor(&path)?;
                rep.metrics = Some(evaluate(&x, &reference, psnr_mode)?);
            }
            io::save_tensor(&output, &x)?;
            let text = rep.to_toml_string();
            match report {
                Some(path) => write_text(&path, &text)?,
                None => print!("{text}"),
            }
        }
        Command::Metrics {
            candidate,
            reference,
            psnr_mode,
        } => {
            let x = io::load_tensor(&candidate)?;
            let r = io::load_tensor(&reference)?;
            let q = evaluate(&x, &r, psnr_mode)?;
            print!("{}", toml::to_string(&q).expect("report always serializes"));
        }
        Command::Import {
            input,
            output,
            dims,
            dtype,
        } => {
            let t = io::import_raw(&input, &dims, dtype)?;
            io::save_tensor(&output, &t)?;
            println!("dims = {:?}", t.dims());
        }
        Command::ExportBand {
            input,
            band,
            output,
        } => {
            let t = io::load_tensor(&input)?;
            io::export_band(&t, band, &output)?;
        }
        Command::Synth { output, dims, seed } => {
            if dims.len() != 3 || dims.contains(&0) {
                return Err(Error::InvalidArgument(format!(
                    "synthetic cubes need three positive dims, got {dims:?}"
                )));
            }
            io::save_tensor(&output, &synthetic_cube(&dims, seed))?;
        }
        Command::Benchmark {
            truth,
            kinds,
            rates,
            config,
            psnr_mode,
            table,
        } => {
            let config = config.resolve()?;
            let result = run_benchmark_file(&truth, &kinds, &rates, &config, psnr_mode)?;
            print!("{}", result.to_text());
            if let Some(path) = table {
                write_text(&path, &result.to_toml_string())?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
