//! Experiment runner: degrade a pristine image, restore it with a list of
//! methods, and write the restored images plus a CSV of metrics.
//!
//! Configurations are flat `key = value` text:
//!
//! ```text
//! # comments and blank lines are ignored
//! input = fixtures/checkerboard.pgm
//! output_dir = out/fig3
//! regime = noisy-known-psf          # noise-free-known-psf | noisy-known-psf | blind
//! blur = gaussian 19 0.3            # gaussian <size> <alfa> | motion <length> <angle> | average <h> <v>
//! noise_sigma = 0.0027729           # required unless the regime is noise-free
//! noise_seed = 1
//! method = wiener nsr=oracle        # nsr=<value> or nsr=oracle (sigma^2 / var(input))
//! method = regularized lambda=1e-4,1e-3,1e-2   # several values: keep the best by RMSE
//! method = lucy iterations=10 [epsilon=1e-12]
//! method = blind psf_size=19 iterations=60 weight_threshold=0.2 [epsilon=1e-12]
//! ```
//!
//! `method` may repeat; rows are reported in the order given.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::degrade::{degrade, NoiseSpec};
use crate::error::{DeconvError, Result};
use crate::image::{load_image, save_image, Image};
use crate::kernels::{average_kernel, gaussian_kernel, motion_kernel, Kernel};
use crate::metrics::{rmse, MetricRow};
use crate::restore::{
    blind_deconv, lucy_richardson, regularized, wiener, BlindParams, LucyParams, RegularizedParams,
    WienerParams, DEFAULT_EPSILON,
};

/// Noise level for the noisy preset: variance 0.5 on the 0-255 scale.
pub const PRESET_NOISE_VARIANCE_8BIT: f64 = 0.5;
pub const PRESET_NOISE_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    NoiseFreeKnownPsf,
    NoisyKnownPsf,
    Blind,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::NoiseFreeKnownPsf => "noise-free-known-psf",
            Regime::NoisyKnownPsf => "noisy-known-psf",
            Regime::Blind => "blind",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = DeconvError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noise-free-known-psf" => Ok(Regime::NoiseFreeKnownPsf),
            "noisy-known-psf" => Ok(Regime::NoisyKnownPsf),
            "blind" => Ok(Regime::Blind),
            other => Err(DeconvError::Config(format!("unknown regime {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlurSpec {
    Gaussian { size: usize, alfa: f64 },
    Motion { length: f64, angle: f64 },
    Average { horizontal: f64, vertical: f64 },
}

impl BlurSpec {
    pub fn kernel(&self) -> Result<Kernel> {
        match *self {
            BlurSpec::Gaussian { size, alfa } => gaussian_kernel(size, alfa),
            BlurSpec::Motion { length, angle } => motion_kernel(length, angle),
            BlurSpec::Average {
                horizontal,
                vertical,
            } => average_kernel(horizontal, vertical),
        }
    }
}

impl fmt::Display for BlurSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlurSpec::Gaussian { size, alfa } => write!(f, "gaussian {size} {alfa}"),
            BlurSpec::Motion { length, angle } => write!(f, "motion {length} {angle}"),
            BlurSpec::Average {
                horizontal,
                vertical,
            } => write!(f, "average {horizontal} {vertical}"),
        }
    }
}

fn parse_num<T: FromStr>(what: &str, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| DeconvError::Config(format!("bad {what} value {s:?}")))
}

impl FromStr for BlurSpec {
    type Err = DeconvError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        match parts.as_slice() {
            ["gaussian", size, alfa] => Ok(BlurSpec::Gaussian {
                size: parse_num("gaussian size", size)?,
                alfa: parse_num("gaussian alfa", alfa)?,
            }),
            ["motion", length, angle] => Ok(BlurSpec::Motion {
                length: parse_num("motion length", length)?,
                angle: parse_num("motion angle", angle)?,
            }),
            ["average", h, v] => Ok(BlurSpec::Average {
                horizontal: parse_num("average h", h)?,
                vertical: parse_num("average v", v)?,
            }),
            _ => Err(DeconvError::Config(format!(
                "blur must be 'gaussian <size> <alfa>', 'motion <length> <angle>' or 'average <h> <v>', got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NsrChoice {
    Value(f64),
    /// `sigma^2 / var(pristine)`, using the configured noise level.
    Oracle,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaChoice {
    Value(f64),
    /// Run every candidate and keep the lowest-RMSE restoration.
    GridBest(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum MethodSpec {
    Wiener(NsrChoice),
    Regularized(LambdaChoice),
    Lucy(LucyParams),
    Blind(BlindParams),
}

impl MethodSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MethodSpec::Wiener(_) => "wiener",
            MethodSpec::Regularized(_) => "regularized",
            MethodSpec::Lucy(_) => "lucy_richardson",
            MethodSpec::Blind(_) => "blind_deconv",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MethodSpec::Wiener(NsrChoice::Value(nsr)) => WienerParams::new(*nsr).map(drop),
            MethodSpec::Wiener(NsrChoice::Oracle) => Ok(()),
            MethodSpec::Regularized(LambdaChoice::Value(l)) => RegularizedParams::new(*l).map(drop),
            MethodSpec::Regularized(LambdaChoice::GridBest(grid)) => {
                if grid.is_empty() {
                    return Err(DeconvError::Config("empty lambda grid".into()));
                }
                grid.iter()
                    .try_for_each(|l| RegularizedParams::new(*l).map(drop))
            }
            MethodSpec::Lucy(p) => p.validate(),
            MethodSpec::Blind(p) => p.validate(),
        }
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodSpec::Wiener(NsrChoice::Value(nsr)) => write!(f, "wiener nsr={nsr}"),
            MethodSpec::Wiener(NsrChoice::Oracle) => write!(f, "wiener nsr=oracle"),
            MethodSpec::Regularized(LambdaChoice::Value(l)) => write!(f, "regularized lambda={l}"),
            MethodSpec::Regularized(LambdaChoice::GridBest(grid)) => {
                let list: Vec<String> = grid.iter().map(f64::to_string).collect();
                write!(f, "regularized lambda={}", list.join(","))
            }
            MethodSpec::Lucy(p) => {
                write!(f, "lucy iterations={}", p.iterations)?;
                if p.epsilon != DEFAULT_EPSILON {
                    write!(f, " epsilon={}", p.epsilon)?;
                }
                Ok(())
            }
            MethodSpec::Blind(p) => {
                write!(
                    f,
                    "blind psf_size={} iterations={} weight_threshold={}",
                    p.psf_size, p.iterations, p.weight_threshold
                )?;
                if p.epsilon != DEFAULT_EPSILON {
                    write!(f, " epsilon={}", p.epsilon)?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for MethodSpec {
    type Err = DeconvError;

    fn from_str(s: &str) -> Result<Self> {
        let mut words = s.split_whitespace();
        let name = words
            .next()
            .ok_or_else(|| DeconvError::Config("empty method".into()))?;
        let mut args: Vec<(&str, &str)> = Vec::new();
        for word in words {
            let (k, v) = word.split_once('=').ok_or_else(|| {
                DeconvError::Config(format!("method argument {word:?} is not key=value"))
            })?;
            args.push((k, v));
        }
        let mut take = |key: &str| -> Option<&str> {
            let pos = args.iter().position(|(k, _)| *k == key)?;
            Some(args.remove(pos).1)
        };
        fn need<'a>(v: Option<&'a str>, name: &str, key: &str) -> Result<&'a str> {
            v.ok_or_else(|| DeconvError::Config(format!("method {name} needs {key}=...")))
        }
        let required = |v, key| need(v, name, key);
        let epsilon = |v: Option<&str>| -> Result<f64> {
            v.map_or(Ok(DEFAULT_EPSILON), |v| parse_num("epsilon", v))
        };
        let spec = match name {
            "wiener" => {
                let nsr = required(take("nsr"), "nsr")?;
                MethodSpec::Wiener(if nsr == "oracle" {
                    NsrChoice::Oracle
                } else {
                    NsrChoice::Value(parse_num("nsr", nsr)?)
                })
            }
            "regularized" => {
                let raw = required(take("lambda"), "lambda")?;
                let values = raw
                    .split(',')
                    .map(|v| parse_num("lambda", v))
                    .collect::<Result<Vec<f64>>>()?;
                MethodSpec::Regularized(match values.as_slice() {
                    [single] => LambdaChoice::Value(*single),
                    _ => LambdaChoice::GridBest(values),
                })
            }
            "lucy" => MethodSpec::Lucy(LucyParams {
                iterations: parse_num("iterations", required(take("iterations"), "iterations")?)?,
                epsilon: epsilon(take("epsilon"))?,
            }),
            "blind" => MethodSpec::Blind(BlindParams {
                psf_size: parse_num("psf_size", required(take("psf_size"), "psf_size")?)?,
                iterations: parse_num("iterations", required(take("iterations"), "iterations")?)?,
                weight_threshold: parse_num(
                    "weight_threshold",
                    required(take("weight_threshold"), "weight_threshold")?,
                )?,
                epsilon: epsilon(take("epsilon"))?,
            }),
            other => return Err(DeconvError::Config(format!("unknown method {other:?}"))),
        };
        if let Some((k, _)) = args.first() {
            return Err(DeconvError::Config(format!(
                "unknown argument {k:?} for {name}"
            )));
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub input: PathBuf,
    pub regime: Regime,
    pub blur: BlurSpec,
    pub noise: Option<NoiseSpec>,
    pub methods: Vec<MethodSpec>,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(DeconvError::Config("no methods requested".into()));
        }
        match (self.regime, self.noise.is_some()) {
            (Regime::NoiseFreeKnownPsf, true) => {
                return Err(DeconvError::Config(
                    "noise-free-known-psf regime must not specify noise".into(),
                ))
            }
            (Regime::NoisyKnownPsf | Regime::Blind, false) => {
                return Err(DeconvError::Config(format!(
                    "{} regime requires noise_sigma",
                    self.regime
                )))
            }
            _ => {}
        }
        if self.regime == Regime::Blind
            && !self
                .methods
                .iter()
                .any(|m| matches!(m, MethodSpec::Blind(_)))
        {
            return Err(DeconvError::Config(
                "blind regime requires a blind method".into(),
            ));
        }
        for m in &self.methods {
            m.validate()?;
        }
        self.blur.kernel().map(drop)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut input = None;
        let mut output_dir = None;
        let mut regime = None;
        let mut blur = None;
        let mut sigma = None;
        let mut seed = 0u64;
        let mut methods = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                DeconvError::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let value = value.trim();
            match key.trim() {
                "input" => input = Some(PathBuf::from(value)),
                "output_dir" => output_dir = Some(PathBuf::from(value)),
                "regime" => regime = Some(value.parse()?),
                "blur" => blur = Some(value.parse()?),
                "noise_sigma" => sigma = Some(parse_num::<f64>("noise_sigma", value)?),
                "noise_seed" => seed = parse_num("noise_seed", value)?,
                "method" => methods.push(value.parse()?),
                other => {
                    return Err(DeconvError::Config(format!(
                        "line {}: unknown key {other:?}",
                        lineno + 1
                    )))
                }
            }
        }
        let missing = |key: &str| DeconvError::Config(format!("missing {key}"));
        let noise = sigma
            .map(|s| NoiseSpec::new(s, seed))
            .transpose()
            .map_err(|e| DeconvError::Config(e.to_string()))?;
        Ok(Self {
            input: input.ok_or_else(|| missing("input"))?,
            output_dir: output_dir.ok_or_else(|| missing("output_dir"))?,
            regime: regime.ok_or_else(|| missing("regime"))?,
            blur: blur.ok_or_else(|| missing("blur"))?,
            noise,
            methods,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| DeconvError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_config_string(&self) -> String {
        let mut out = format!(
            "input = {}\noutput_dir = {}\nregime = {}\nblur = {}\n",
            self.input.display(),
            self.output_dir.display(),
            self.regime,
            self.blur
        );
        if let Some(noise) = self.noise {
            out += &format!(
                "noise_sigma = {}\nnoise_seed = {}\n",
                noise.sigma(),
                noise.seed()
            );
        }
        for m in &self.methods {
            out += &format!("method = {m}\n");
        }
        out
    }
}

/// Canned configurations for the three reference experiments. The input and
/// output directory are placeholders meant to be overridden.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let sharp_gaussian = BlurSpec::Gaussian {
        size: 19,
        alfa: 0.3,
    };
    let noise = NoiseSpec::from_variance_8bit(PRESET_NOISE_VARIANCE_8BIT, PRESET_NOISE_SEED)?;
    let lucy = MethodSpec::Lucy(LucyParams::new(10)?);
    let blind_30 = MethodSpec::Blind(BlindParams::new(19, 30, 0.2)?);
    let (regime, blur, noise, methods) = match name {
        "fig2" => (
            Regime::NoiseFreeKnownPsf,
            sharp_gaussian,
            None,
            vec![
                MethodSpec::Wiener(NsrChoice::Value(0.0)),
                MethodSpec::Regularized(LambdaChoice::Value(1e-4)),
                lucy,
                blind_30,
            ],
        ),
        "fig3" => (
            Regime::NoisyKnownPsf,
            sharp_gaussian,
            Some(noise),
            vec![
                MethodSpec::Wiener(NsrChoice::Oracle),
                MethodSpec::Regularized(LambdaChoice::GridBest(vec![1e-4, 1e-3, 1e-2])),
                lucy,
                blind_30,
            ],
        ),
        "fig4" => (
            Regime::Blind,
            BlurSpec::Gaussian { size: 9, alfa: 1.5 },
            Some(noise),
            vec![MethodSpec::Blind(BlindParams::new(19, 60, 0.2)?)],
        ),
        other => return Err(DeconvError::UnknownPreset(other.to_string())),
    };
    Ok(ExperimentConfig {
        input: PathBuf::from("fixtures/checkerboard.pgm"),
        regime,
        blur,
        noise,
        methods,
        output_dir: PathBuf::from("out").join(name),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub method: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub rows: Vec<MetricRow>,
    /// Restored image written for each method, in config order.
    pub artifacts: Vec<Artifact>,
    /// Concrete parameters each method ran with (oracle NSR and grid
    /// choices resolved).
    pub resolved_methods: Vec<MethodSpec>,
    /// Kernel recovered by each blind method.
    pub recovered_kernels: Vec<(String, Kernel)>,
    pub degraded_path: PathBuf,
    pub csv_path: PathBuf,
    pub config_echo: ExperimentConfig,
}

impl ExperimentReport {
    pub fn row(&self, method: &str) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

/// `%.6g`-style formatting with `inf` for infinities.
pub fn format_sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    fn trim(s: &str) -> &str {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.')
        } else {
            s
        }
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exponent) = sci.split_once('e').expect("exponent form");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if (-5..6).contains(&exponent) {
        let decimals = (5 - exponent).max(0) as usize;
        trim(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exponent}", trim(mantissa))
    }
}

pub fn format_csv(rows: &[MetricRow]) -> String {
    let mut out = String::from("method,regime,rmse,psnr,snr\n");
    for r in rows {
        out += &format!(
            "{},{},{},{},{}\n",
            r.method,
            r.regime,
            format_sig6(r.rmse),
            format_sig6(r.psnr),
            format_sig6(r.snr)
        );
    }
    out
}

fn method_labels(methods: &[MethodSpec]) -> Vec<String> {
    let mut labels = Vec::with_capacity(methods.len());
    for (i, m) in methods.iter().enumerate() {
        let seen = methods[..i].iter().filter(|p| p.name() == m.name()).count();
        labels.push(if seen == 0 {
            m.name().to_string()
        } else {
            format!("{}_{}", m.name(), seen + 1)
        });
    }
    labels
}

struct Restoration {
    image: Image,
    resolved: MethodSpec,
    kernel: Option<Kernel>,
}

fn restore_with(
    method: &MethodSpec,
    pristine: &Image,
    observed: &Image,
    psf: &Kernel,
    noise_sigma: f64,
) -> Result<Restoration> {
    let plain = |image: Image, resolved: MethodSpec| Restoration {
        image,
        resolved,
        kernel: None,
    };
    Ok(match method {
        MethodSpec::Wiener(choice) => {
            let nsr = match choice {
                NsrChoice::Value(v) => *v,
                NsrChoice::Oracle => {
                    let var = pristine.variance();
                    if var > 0.0 {
                        noise_sigma * noise_sigma / var
                    } else {
                        0.0
                    }
                }
            };
            plain(
                wiener(observed, psf, WienerParams::new(nsr)?)?,
                MethodSpec::Wiener(NsrChoice::Value(nsr)),
            )
        }
        MethodSpec::Regularized(LambdaChoice::Value(lambda)) => plain(
            regularized(observed, psf, RegularizedParams::new(*lambda)?)?,
            method.clone(),
        ),
        MethodSpec::Regularized(LambdaChoice::GridBest(grid)) => {
            let mut best: Option<(f64, f64, Image)> = None;
            for &lambda in grid {
                let img = regularized(observed, psf, RegularizedParams::new(lambda)?)?;
                let err = rmse(&img, pristine)?;
                if best.as_ref().is_none_or(|(e, _, _)| err < *e) {
                    best = Some((err, lambda, img));
                }
            }
            let (_, lambda, img) = best.expect("non-empty grid");
            plain(img, MethodSpec::Regularized(LambdaChoice::Value(lambda)))
        }
        MethodSpec::Lucy(p) => plain(lucy_richardson(observed, psf, *p)?, method.clone()),
        MethodSpec::Blind(p) => {
            let (image, kernel) = blind_deconv(observed, *p)?;
            Restoration {
                image,
                resolved: method.clone(),
                kernel: Some(kernel),
            }
        }
    })
}

/// Runs the configured experiment and writes, under `output_dir`:
/// `degraded.pgm`, one `<method>.pgm` per method, `<method>_kernel.txt` for
/// blind methods, `config.txt` (the resolved configuration) and
/// `report.csv`.
///
/// In the blind regime, non-blind methods are given the PSF recovered by the
/// first blind method rather than the true one.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let pristine = load_image(&cfg.input)?;
    let true_psf = cfg.blur.kernel()?;
    let observed = degrade(&pristine, &true_psf, cfg.noise)?;
    let sigma = cfg.noise.map_or(0.0, |n| n.sigma());

    fs::create_dir_all(&cfg.output_dir).map_err(|e| DeconvError::io(&cfg.output_dir, e))?;
    let out = |name: &str| cfg.output_dir.join(name);
    let degraded_path = out("degraded.pgm");
    save_image(&observed, &degraded_path)?;

    let labels = method_labels(&cfg.methods);
    let mut results: Vec<Option<Restoration>> = cfg.methods.iter().map(|_| None).collect();

    let working_psf = if cfg.regime == Regime::Blind {
        let idx = cfg
            .methods
            .iter()
            .position(|m| matches!(m, MethodSpec::Blind(_)))
            .expect("validated");
        let r = restore_with(&cfg.methods[idx], &pristine, &observed, &true_psf, sigma)?;
        let k = r.kernel.clone().expect("blind restoration yields a kernel");
        results[idx] = Some(r);
        k
    } else {
        true_psf.clone()
    };

    for (slot, method) in results.iter_mut().zip(&cfg.methods) {
        if slot.is_none() {
            *slot = Some(restore_with(
                method,
                &pristine,
                &observed,
                &working_psf,
                sigma,
            )?);
        }
    }

    let mut report = ExperimentReport {
        rows: Vec::new(),
        artifacts: Vec::new(),
        resolved_methods: Vec::new(),
        recovered_kernels: Vec::new(),
        degraded_path,
        csv_path: out("report.csv"),
        config_echo: cfg.clone(),
    };
    for (label, result) in labels.iter().zip(results) {
        let result = result.expect("every method ran");
        let path = out(&format!("{label}.pgm"));
        save_image(&result.image, &path)?;
        report.rows.push(MetricRow::measure(
            label.clone(),
            cfg.regime.name(),
            &pristine,
            &result.image,
        )?);
        report.artifacts.push(Artifact {
            method: label.clone(),
            path,
        });
        report.resolved_methods.push(result.resolved);
        if let Some(kernel) = result.kernel {
            let kpath = out(&format!("{label}_kernel.txt"));
            fs::write(&kpath, kernel.to_text()).map_err(|e| DeconvError::io(&kpath, e))?;
            report.recovered_kernels.push((label.clone(), kernel));
        }
    }

    let echo = out("config.txt");
    fs::write(&echo, cfg.to_config_string()).map_err(|e| DeconvError::io(&echo, e))?;
    fs::write(&report.csv_path, format_csv(&report.rows))
        .map_err(|e| DeconvError::io(&report.csv_path, e))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(f64::INFINITY), "inf");
        assert_eq!(format_sig6(0.00277297), "0.00277297");
        assert_eq!(format_sig6(1.0 / 3.0), "0.333333");
        assert_eq!(format_sig6(20.0), "20");
        assert_eq!(format_sig6(123456789.0), "1.23457e8");
        assert_eq!(format_sig6(1.5e-16), "1.5e-16");
        assert_eq!(format_sig6(-6.020599913), "-6.0206");
        assert_eq!(format_sig6(9.9999996), "10");
    }

    #[test]
    fn presets() {
        let fig4 = preset("fig4").unwrap();
        assert_eq!(
            fig4.methods,
            vec![MethodSpec::Blind(BlindParams::new(19, 60, 0.2).unwrap())]
        );
        assert_eq!(fig4.regime, Regime::Blind);
        let fig2 = preset("fig2").unwrap();
        assert!(fig2.noise.is_none());
        assert_eq!(
            fig2.blur,
            BlurSpec::Gaussian {
                size: 19,
                alfa: 0.3
            }
        );
        let fig3 = preset("fig3").unwrap();
        let sigma = fig3.noise.unwrap().sigma();
        assert!((sigma - 0.5f64.sqrt() / 255.0).abs() < 1e-15);
        assert!(matches!(preset("fig9"), Err(DeconvError::UnknownPreset(_))));
        for name in ["fig2", "fig3", "fig4"] {
            preset(name).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn validation_rules() {
        let mut cfg = preset("fig2").unwrap();
        cfg.methods.clear();
        assert!(matches!(cfg.validate(), Err(DeconvError::Config(_))));

        let mut cfg = preset("fig2").unwrap();
        cfg.noise = Some(NoiseSpec::new(0.01, 0).unwrap());
        assert!(cfg.validate().is_err());

        let mut cfg = preset("fig3").unwrap();
        cfg.noise = None;
        assert!(cfg.validate().is_err());

        let mut cfg = preset("fig4").unwrap();
        cfg.methods = vec![MethodSpec::Lucy(LucyParams::new(3).unwrap())];
        assert!(cfg.validate().is_err());

        let mut cfg = preset("fig2").unwrap();
        cfg.methods.push(MethodSpec::Lucy(LucyParams {
            iterations: 0,
            epsilon: 1e-12,
        }));
        assert!(cfg.validate().unwrap_err().is_config_error());
    }

    #[test]
    fn config_text_round_trip() {
        for name in ["fig2", "fig3", "fig4"] {
            let cfg = preset(name).unwrap();
            let text = cfg.to_config_string();
            assert_eq!(ExperimentConfig::parse(&text).unwrap(), cfg, "{text}");
        }
    }

    #[test]
    fn config_parse_errors() {
        let base = "input = a.pgm\noutput_dir = out\nregime = blind\nblur = gaussian 9 1.5\n";
        assert!(ExperimentConfig::parse(&format!("{base}bogus = 1\n")).is_err());
        assert!(ExperimentConfig::parse(&format!("{base}method = lucy\n")).is_err());
        assert!(
            ExperimentConfig::parse(&format!("{base}method = lucy iterations=3 foo=1\n")).is_err()
        );
        assert!(ExperimentConfig::parse(&format!("{base}method = sharpen x=1\n")).is_err());
        assert!(ExperimentConfig::parse("regime = blind\n").is_err());
        assert!(ExperimentConfig::parse(&format!("{base}noise_sigma = -1\n")).is_err());
        let ok = ExperimentConfig::parse(&format!(
            "# header\n{base}noise_sigma = 0.01   # trailing\nmethod = blind psf_size=5 iterations=3 weight_threshold=0.1\n"
        ))
        .unwrap();
        assert_eq!(ok.noise.unwrap().seed(), 0);
        ok.validate().unwrap();
    }

    #[test]
    fn duplicate_methods_get_distinct_labels() {
        let methods = vec![
            MethodSpec::Lucy(LucyParams::new(1).unwrap()),
            MethodSpec::Wiener(NsrChoice::Oracle),
            MethodSpec::Lucy(LucyParams::new(5).unwrap()),
        ];
        assert_eq!(
            method_labels(&methods),
            vec!["lucy_richardson", "wiener", "lucy_richardson_2"]
        );
    }
}
