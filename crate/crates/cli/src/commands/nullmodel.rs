//! `nullmodel`: Monte Carlo of random-unit-vector updates against the
//! exact trace-identity targets, projection-mass concentration, and the
//! Rayleigh split bound. Exit 0 iff every target lands within 3 stderr
//! and no split violations occur.

use serde::Serialize;

use driftlab::geometry::{eigendecompose, top_projector, SymMatrix};
use driftlab::io::{to_json_pretty, write_series_csv, McDoc};
use driftlab::mat::{orthonormalize_columns, Mat};
use driftlab::nullmodel::{expected_loss_mc, projection_mass, rayleigh_split_check, SphereSampler};
use driftlab::rng::CounterRng;

use super::effective_seed;
use crate::config::{NullmodelConfig, SpectrumConfig};
use crate::manifest::ManifestBuilder;
use crate::{CliError, RunArgs};

#[derive(Debug, Serialize)]
struct ProjectionDoc {
    n: usize,
    d: usize,
    trials: usize,
    epsilon: f64,
    mean: f64,
    stderr: f64,
    target: f64,
    tail_freq: f64,
}

#[derive(Debug, Serialize)]
struct NullmodelDoc {
    expected_loss: McDoc,
    within_three_sigma: bool,
    projection: Option<ProjectionDoc>,
    rayleigh_violations: Option<usize>,
}

fn build_spectrum(n: usize, spec: &SpectrumConfig) -> Result<SymMatrix<f64>, CliError> {
    match spec {
        SpectrumConfig::Identity => Ok(SymMatrix::identity(n)),
        SpectrumConfig::Diag(values) => {
            if values.len() != n {
                return Err(CliError::config(format!(
                    "diag spectrum has {} values for n = {n}",
                    values.len()
                )));
            }
            Ok(SymMatrix::diag(values))
        }
        SpectrumConfig::Spiked {
            spikes,
            bulk,
            rotation_seed,
        } => {
            if spikes.len() > n {
                return Err(CliError::config("more spikes than dimensions"));
            }
            let mut eigenvalues = vec![*bulk; n];
            eigenvalues[..spikes.len()].copy_from_slice(spikes);
            let rng = CounterRng::new(*rotation_seed);
            let mut s = rng.stream(0);
            let mut basis = Mat::from_fn(n, n, |_, _| s.next_gaussian::<f64>());
            orthonormalize_columns(&mut basis);
            Ok(SymMatrix::from_fn_sym(n, |i, j| {
                (0..n)
                    .map(|k| eigenvalues[k] * basis[(i, k)] * basis[(j, k)])
                    .sum()
            }))
        }
    }
}

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let bytes = args.read_config_bytes()?;
    let config: NullmodelConfig = args.parse_config(&bytes)?;
    let mut manifest = ManifestBuilder::new(&args.out, &bytes)?;

    let f = build_spectrum(config.n, &config.spectrum)?;
    let seed = effective_seed(config.seed, args.seed_override);
    let mut sampler = SphereSampler::<f64>::new(config.n, seed);
    let report = expected_loss_mc(&f, config.eta, config.trials, &mut sampler)?;
    let within = report.within_sigmas(3.0);

    let projection = match &config.projection {
        Some(pc) => {
            let spectrum = eigendecompose(&SymMatrix::identity(pc.n));
            let p = top_projector(&spectrum, pc.d).map_err(|e| CliError::config(e.to_string()))?;
            let mut psampler =
                SphereSampler::<f64>::new(pc.n, effective_seed(pc.seed, args.seed_override));
            let mass = projection_mass(&p, pc.trials, &mut psampler)?;
            let mean = mass.mean()?;
            if pc.emit_samples {
                let rows: Vec<Vec<f64>> = mass.samples().iter().map(|&s| vec![s]).collect();
                let mut csv = Vec::new();
                write_series_csv(&mut csv, &["projection_mass"], &rows)?;
                manifest.write_output("projection_samples.csv", &csv)?;
            }
            Some(ProjectionDoc {
                n: pc.n,
                d: pc.d,
                trials: pc.trials,
                epsilon: pc.epsilon,
                mean: mean.mean,
                stderr: mean.std_error,
                target: pc.d as f64 / pc.n as f64,
                tail_freq: mass.tail_freq(pc.epsilon),
            })
        }
        None => None,
    };

    let rayleigh_violations = match &config.rayleigh {
        Some(rc) => {
            let spectrum = eigendecompose(&f);
            let p = top_projector(&spectrum, rc.d).map_err(|e| CliError::config(e.to_string()))?;
            let mut rsampler =
                SphereSampler::<f64>::new(config.n, effective_seed(rc.seed, args.seed_override));
            Some(rayleigh_split_check(&f, &p, rc.trials, &mut rsampler)?)
        }
        None => None,
    };

    let doc = NullmodelDoc {
        expected_loss: McDoc::from_report(&report, seed),
        within_three_sigma: within,
        projection,
        rayleigh_violations,
    };
    manifest.write_output("mc_summary.json", to_json_pretty(&doc)?.as_bytes())?;
    manifest.finalize()?;

    let mut failures = Vec::new();
    if !within {
        failures.push(format!(
            "expected loss {:.6e} vs target {:.6e} beyond 3 stderr",
            report.estimate.mean, report.target
        ));
    }
    if let Some(p) = &doc.projection {
        // mean of ‖Pg‖² must sit within 3 stderr of d/n
        if (p.mean - p.target).abs() > 3.0 * p.stderr.max(1e-15) {
            failures.push(format!(
                "projection mass mean {:.6e} vs target {:.6e}",
                p.mean, p.target
            ));
        }
    }
    if let Some(v) = doc.rayleigh_violations {
        if v > 0 {
            failures.push(format!("{v} Rayleigh split violations"));
        }
    }
    if !failures.is_empty() {
        return Err(CliError::check_failed(failures.join("; ")));
    }
    println!(
        "nullmodel: mean {:.6e} within 3 stderr of target {:.6e}",
        report.estimate.mean, report.target
    );
    Ok(())
}
