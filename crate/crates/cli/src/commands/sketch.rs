//! `sketch`: build or load per-sample gradients, form the sketched
//! Fisher, export the eigenvalue-decay spectrum, check the low-rank
//! bound, and score configured updates against the sketched curvature.

use serde::Serialize;

use driftlab::geometry::eigendecompose;
use driftlab::io::{read_gradient_samples, read_matrix_csv, to_json_pretty, write_series_csv};
use driftlab::mat::Mat;
use driftlab::sketch::{
    eigen_decay_report, overlap_score, overlap_score_normalized, projected_fim, rank_bound_check,
    synth_lowrank_gradients, GradientSampleSet, RademacherProjection,
};

use super::effective_seed;
use crate::config::{GradientsConfig, SketchConfig};
use crate::manifest::ManifestBuilder;
use crate::{CliError, RunArgs};

#[derive(Debug, Serialize)]
struct RankDoc {
    numerical_rank: usize,
    bound: usize,
    holds: bool,
}

#[derive(Debug, Serialize)]
struct OverlapDoc {
    os: f64,
    os_normalized: f64,
    update_norm: f64,
    projection_seed: u64,
}

#[derive(Debug, Serialize)]
struct SketchDoc {
    n_samples: usize,
    d_out: usize,
    d_in: usize,
    k: usize,
    projection_seed: u64,
    rank: Option<RankDoc>,
    overlap: Option<OverlapDoc>,
}

fn load_gradients(
    config: &GradientsConfig,
    override_seed: Option<u64>,
) -> Result<GradientSampleSet<f64>, CliError> {
    match config {
        GradientsConfig::Synth { d, r, n, seed } => {
            synth_lowrank_gradients(*d, *r, *n, effective_seed(*seed, override_seed))
                .map_err(CliError::from)
        }
        GradientsConfig::File(path) => {
            let mut file = std::fs::File::open(path).map_err(|e| {
                if e.kind() == std::io::ErrorKind::NotFound {
                    CliError::missing_input(format!("gradient file {path}"))
                } else {
                    CliError::config(format!("cannot open {path}: {e}"))
                }
            })?;
            read_gradient_samples(&mut file).map_err(CliError::from)
        }
    }
}

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let bytes = args.read_config_bytes()?;
    let config: SketchConfig = args.parse_config(&bytes)?;
    let mut manifest = ManifestBuilder::new(&args.out, &bytes)?;

    let samples = load_gradients(&config.gradients, args.seed_override)?;
    let projection_seed = effective_seed(config.projection_seed, args.seed_override);
    let proj = RademacherProjection::new(projection_seed, config.k, samples.ambient_dim());
    let fim = projected_fim(&samples, &proj)?;

    let decay = eigen_decay_report(&fim, config.top.min(config.k))?;
    let rows: Vec<Vec<f64>> = decay
        .eigenvalues
        .iter()
        .zip(&decay.cumulative_mass)
        .enumerate()
        .map(|(i, (&l, &mass))| vec![i as f64, l, mass])
        .collect();
    let mut csv = Vec::new();
    write_series_csv(&mut csv, &["index", "eigenvalue", "cumulative_mass"], &rows)?;
    manifest.write_output("spectrum.csv", &csv)?;

    let rank = if config.rank_check {
        let report = rank_bound_check(&samples, true, Some(&proj), None)?;
        Some(RankDoc {
            numerical_rank: report.numerical_rank,
            bound: report.bound,
            holds: report.holds,
        })
    } else {
        None
    };

    let overlap = match &config.overlap {
        Some(oc) => {
            // the update must be sketched with the pipeline's projection;
            // a differing seed is rejected as incompatible
            let update_proj =
                RademacherProjection::new(oc.projection_seed, config.k, samples.ambient_dim());
            let update: Mat<f64> = if let Some(path) = &oc.update_file {
                let mut file = std::fs::File::open(path).map_err(|e| {
                    if e.kind() == std::io::ErrorKind::NotFound {
                        CliError::missing_input(format!("update file {path}"))
                    } else {
                        CliError::config(format!("cannot open {path}: {e}"))
                    }
                })?;
                read_matrix_csv(&mut file)?
            } else if let Some(index) = oc.eigvec_index {
                // synthesize a source-space update whose sketch aligns with
                // the chosen eigenvector: unvec of a sample combination is
                // not available in general, so use the top sample direction
                let spectrum = eigendecompose(fim.matrix());
                if index >= spectrum.n() {
                    return Err(CliError::config(format!(
                        "eigvec_index {index} out of range"
                    )));
                }
                // project each sample onto the eigenvector and take the
                // best-aligned sample matrix as the update direction
                let v = spectrum.eigenvector(index);
                let mut best = (0usize, 0.0f64);
                for i in 0..samples.len() {
                    let y = proj.project_vec(&samples.flat_sample(i))?;
                    let align: f64 = y.iter().zip(&v).map(|(&a, &b)| a * b).sum::<f64>().abs();
                    if align > best.1 {
                        best = (i, align);
                    }
                }
                let flat = samples.flat_sample(best.0);
                Mat::from_fn(samples.d_out(), samples.d_in(), |i, j| {
                    flat[i * samples.d_in() + j]
                })
            } else {
                return Err(CliError::config(
                    "overlap needs update_file or eigvec_index",
                ));
            };
            let update = update.scale(oc.scale);
            let os = overlap_score(&update, &update_proj, &fim).map_err(CliError::from)?;
            let os_norm = overlap_score_normalized(&update, &update_proj, &fim)?;
            Some(OverlapDoc {
                os,
                os_normalized: os_norm,
                update_norm: update.frobenius_norm(),
                projection_seed: oc.projection_seed,
            })
        }
        None => None,
    };

    let doc = SketchDoc {
        n_samples: samples.len(),
        d_out: samples.d_out(),
        d_in: samples.d_in(),
        k: config.k,
        projection_seed,
        rank,
        overlap,
    };
    manifest.write_output("sketch_report.json", to_json_pretty(&doc)?.as_bytes())?;
    manifest.finalize()?;

    if let Some(r) = &doc.rank {
        if !r.holds {
            return Err(CliError::check_failed(format!(
                "numerical rank {} exceeds bound {}",
                r.numerical_rank, r.bound
            )));
        }
        println!(
            "sketch: rank {} within bound {} (k = {})",
            r.numerical_rank, r.bound, config.k
        );
    } else {
        println!("sketch: spectrum written (k = {})", config.k);
    }
    Ok(())
}
