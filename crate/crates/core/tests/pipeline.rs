use std::fs;

use deconv_core::experiment::{format_csv, LambdaChoice, NsrChoice};
use deconv_core::fixtures::checkerboard;
use deconv_core::restore::damped_lucy_step;
use deconv_core::{
    degrade, gaussian_kernel, preset, regularized, rmse, run_experiment, save_image, wiener,
    BlurSpec, DeconvError, ExperimentConfig, Image, Kernel, MethodSpec, NoiseSpec, Regime,
    RegularizedParams, WienerParams,
};

fn write_fixture(dir: &std::path::Path) -> std::path::PathBuf {
    let path = dir.join("board.pgm");
    save_image(&checkerboard(48, 8), &path).unwrap();
    path
}

fn small_config(dir: &std::path::Path) -> ExperimentConfig {
    ExperimentConfig {
        input: write_fixture(dir),
        regime: Regime::NoisyKnownPsf,
        blur: BlurSpec::Gaussian { size: 7, alfa: 1.0 },
        noise: Some(NoiseSpec::new(0.01, 3).unwrap()),
        methods: vec![
            MethodSpec::Wiener(NsrChoice::Oracle),
            MethodSpec::Regularized(LambdaChoice::GridBest(vec![1e-3, 1e-2])),
            "lucy iterations=5".parse().unwrap(),
            "lucy iterations=2".parse().unwrap(),
            "blind psf_size=7 iterations=3 weight_threshold=0.1"
                .parse()
                .unwrap(),
        ],
        output_dir: dir.join("out"),
    }
}

#[test]
fn run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.rows.len(), cfg.methods.len());
    let labels: Vec<&str> = report.rows.iter().map(|r| r.method.as_str()).collect();
    assert_eq!(
        labels,
        [
            "wiener",
            "regularized",
            "lucy_richardson",
            "lucy_richardson_2",
            "blind_deconv"
        ]
    );
    for artifact in &report.artifacts {
        assert!(artifact.path.exists(), "{}", artifact.path.display());
    }
    assert!(report.degraded_path.exists());
    assert!(cfg.output_dir.join("blind_deconv_kernel.txt").exists());
    let csv = fs::read_to_string(&report.csv_path).unwrap();
    assert_eq!(csv, format_csv(&report.rows));
    assert!(csv.starts_with("method,regime,rmse,psnr,snr\n"));
    assert_eq!(csv.lines().count(), 6);
    let echo = fs::read_to_string(cfg.output_dir.join("config.txt")).unwrap();
    assert_eq!(ExperimentConfig::parse(&echo).unwrap(), cfg);
    assert_eq!(report.config_echo, cfg);
}

#[test]
fn resolved_methods_record_choices() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let report = run_experiment(&cfg).unwrap();
    let pristine = checkerboard(48, 8);
    let expected_nsr = 0.01f64.powi(2) / pristine.variance();
    match report.resolved_methods[0] {
        MethodSpec::Wiener(NsrChoice::Value(nsr)) => assert!((nsr - expected_nsr).abs() < 1e-15),
        ref other => panic!("{other:?}"),
    }
    // the grid winner must be the better of the two candidates
    let g = degrade(&pristine, &gaussian_kernel(7, 1.0).unwrap(), cfg.noise).unwrap();
    let k = gaussian_kernel(7, 1.0).unwrap();
    let best = [1e-3, 1e-2]
        .into_iter()
        .map(|l| {
            (
                rmse(
                    &regularized(&g, &k, RegularizedParams::new(l).unwrap()).unwrap(),
                    &pristine,
                )
                .unwrap(),
                l,
            )
        })
        .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a });
    assert_eq!(
        report.resolved_methods[1],
        MethodSpec::Regularized(LambdaChoice::Value(best.1))
    );
    assert!((report.rows[1].rmse - best.0).abs() < 1e-12);
}

#[test]
fn rejects_bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.methods.clear();
    assert!(matches!(run_experiment(&cfg), Err(DeconvError::Config(_))));

    let mut cfg = small_config(dir.path());
    cfg.input = dir.path().join("missing.pgm");
    assert!(matches!(run_experiment(&cfg), Err(DeconvError::Io { .. })));

    let mut cfg = small_config(dir.path());
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    cfg.output_dir = blocker.join("sub");
    assert!(matches!(run_experiment(&cfg), Err(DeconvError::Io { .. })));

    let mut cfg = small_config(dir.path());
    cfg.methods = vec!["lucy iterations=0".parse().unwrap()];
    assert!(run_experiment(&cfg).unwrap_err().is_config_error());
}

#[test]
fn blind_regime_feeds_recovered_kernel_to_other_methods() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.regime = Regime::Blind;
    cfg.methods = vec![
        "lucy iterations=4".parse().unwrap(),
        "blind psf_size=7 iterations=3 weight_threshold=0.1"
            .parse()
            .unwrap(),
    ];
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.rows[0].method, "lucy_richardson");
    let (_, recovered) = &report.recovered_kernels[0];
    let pristine = checkerboard(48, 8);
    let g = degrade(&pristine, &cfg.blur.kernel().unwrap(), cfg.noise).unwrap();
    let expected =
        deconv_core::lucy_richardson(&g, recovered, deconv_core::LucyParams::new(4).unwrap())
            .unwrap();
    assert!((report.rows[0].rmse - rmse(&expected, &pristine).unwrap()).abs() < 1e-12);
}

#[test]
fn noise_free_preset_regularized_beats_blurred() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = preset("fig2").unwrap();
    cfg.input = write_fixture(dir.path());
    cfg.output_dir = dir.path().join("fig2");
    let report = run_experiment(&cfg).unwrap();
    let pristine = checkerboard(48, 8);
    let blurred = degrade(&pristine, &cfg.blur.kernel().unwrap(), None).unwrap();
    assert!(report.row("regularized").unwrap().rmse < rmse(&blurred, &pristine).unwrap());
}

#[test]
fn oracle_wiener_improves_noisy_input() {
    let f = checkerboard(64, 8);
    let k = gaussian_kernel(9, 1.5).unwrap();
    let sigma = 0.01;
    let g = degrade(&f, &k, Some(NoiseSpec::new(sigma, 9).unwrap())).unwrap();
    let restored = wiener(
        &g,
        &k,
        WienerParams::new(sigma * sigma / f.variance()).unwrap(),
    )
    .unwrap();
    assert!(rmse(&restored, &f).unwrap() < rmse(&g, &f).unwrap());
}

#[test]
fn damping_can_enlarge_a_step_with_overlapping_kernels() {
    // the ratios 1.15 flank 0.6 and partly cancel it in the correlation;
    // suppressing them at threshold 0.2 removes the cancellation
    let g = Image::new(4, 1, vec![1.15, 0.6, 1.15, 1.0]).unwrap();
    let u = Image::filled(4, 1, 1.0).unwrap();
    let k = Kernel::from_weights(3, 1, vec![0.25, 0.5, 0.25]).unwrap();
    let step = |t| rmse(&damped_lucy_step(&g, &u, &k, t, 1e-12).unwrap(), &u).unwrap();
    assert!((step(0.0) - 0.075).abs() < 1e-9);
    assert!((step(0.2) - 0.15f64.sqrt() / 10f64.sqrt()).abs() < 1e-9);
    assert!(step(0.2) > step(0.0));
}

#[test]
fn round_trip_improves_on_blurred_input() {
    let sharp = Image::from_fn(32, 32, |x, y| ((x / 4 + y / 4) % 2) as f64).unwrap();
    let psf = gaussian_kernel(7, 1.0).unwrap();
    let blurred = degrade(&sharp, &psf, None).unwrap();
    let restored =
        deconv_core::lucy_richardson(&blurred, &psf, deconv_core::LucyParams::new(20).unwrap())
            .unwrap();
    assert!(rmse(&restored, &sharp).unwrap() < rmse(&blurred, &sharp).unwrap());
}
