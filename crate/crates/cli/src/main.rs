use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use deconv_core::experiment::{format_csv, preset, run_experiment, ExperimentConfig};
use deconv_core::{
    average_kernel, gaussian_kernel, motion_kernel, save_image, DeconvError, Kernel, NoiseSpec,
};

/// Blur synthesis and deconvolution experiments.
#[derive(Parser, Debug)]
#[command(name = "deconv-bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run one of the canned experiments (fig2, fig3, fig4).
    Preset {
        name: String,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a PSF in the kernel text format.
    Kernel {
        #[command(subcommand)]
        kind: KernelKind,
        /// Output file; stdout when omitted.
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Regenerate the synthetic fixture images into a directory.
    Fixtures {
        #[arg(long)]
        out: PathBuf,
    },
}

/// Values that replace the corresponding config-file keys.
#[derive(Args, Debug)]
struct Overrides {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// noise-free-known-psf, noisy-known-psf or blind.
    #[arg(long)]
    regime: Option<String>,
    /// e.g. "gaussian 19 0.3".
    #[arg(long)]
    blur: Option<String>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    noise_seed: Option<u64>,
    /// Repeatable; replaces every method from the file, e.g. "lucy iterations=10".
    #[arg(long = "method")]
    methods: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum KernelKind {
    Gaussian {
        #[arg(long, default_value_t = 19)]
        size: usize,
        #[arg(long, default_value_t = 0.3)]
        alfa: f64,
    },
    Motion {
        #[arg(long)]
        length: f64,
        #[arg(long, default_value_t = 0.0)]
        angle: f64,
    },
    Average {
        #[arg(long)]
        horizontal: f64,
        #[arg(long)]
        vertical: f64,
    },
}

fn apply_overrides(cfg: &mut ExperimentConfig, o: Overrides) -> deconv_core::Result<()> {
    if let Some(input) = o.input {
        cfg.input = input;
    }
    if let Some(out) = o.out {
        cfg.output_dir = out;
    }
    if let Some(regime) = o.regime {
        cfg.regime = regime.parse()?;
    }
    if let Some(blur) = o.blur {
        cfg.blur = blur.parse()?;
    }
    if o.noise_sigma.is_some() || o.noise_seed.is_some() {
        let sigma = o
            .noise_sigma
            .or(cfg.noise.map(|n| n.sigma()))
            .ok_or_else(|| {
                DeconvError::Config("--noise-seed given without a noise level".into())
            })?;
        let seed = o.noise_seed.or(cfg.noise.map(|n| n.seed())).unwrap_or(0);
        cfg.noise = Some(NoiseSpec::new(sigma, seed)?);
    }
    if !o.methods.is_empty() {
        cfg.methods = o
            .methods
            .iter()
            .map(|m| m.parse())
            .collect::<deconv_core::Result<_>>()?;
    }
    Ok(())
}

fn execute(cfg: ExperimentConfig) -> deconv_core::Result<()> {
    let report = run_experiment(&cfg)?;
    print!("{}", format_csv(&report.rows));
    eprintln!("wrote {}", report.csv_path.display());
    Ok(())
}

fn make_kernel(kind: KernelKind) -> deconv_core::Result<Kernel> {
    match kind {
        KernelKind::Gaussian { size, alfa } => gaussian_kernel(size, alfa),
        KernelKind::Motion { length, angle } => motion_kernel(length, angle),
        KernelKind::Average {
            horizontal,
            vertical,
        } => average_kernel(horizontal, vertical),
    }
}

fn dispatch(cli: Cli) -> deconv_core::Result<()> {
    match cli.command {
        Command::Run { config, overrides } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            apply_overrides(&mut cfg, overrides)?;
            execute(cfg)
        }
        Command::Preset { name, input, out } => {
            let mut cfg = preset(&name)?;
            if let Some(input) = input {
                cfg.input = input;
            }
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            execute(cfg)
        }
        Command::Kernel { kind, out } => {
            let text = make_kernel(kind)?.to_text();
            match out {
                Some(path) => {
                    fs::write(&path, text).map_err(|source| DeconvError::Io { path, source })
                }
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::Fixtures { out } => {
            fs::create_dir_all(&out).map_err(|source| DeconvError::Io {
                path: out.clone(),
                source,
            })?;
            for (stem, img) in deconv_core::fixtures::shipped() {
                save_image(&img, out.join(format!("{stem}.pgm")))?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    // clap already exits with 2 on malformed arguments
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
