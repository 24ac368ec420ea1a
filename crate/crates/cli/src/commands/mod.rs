pub mod aic_verify;
pub mod flow;
pub mod nullmodel;
pub mod policy_suite;
pub mod report;
pub mod sketch;

use crate::config::{InstanceSource, ParamsConfig};
use crate::CliError;
use driftlab::landscape::{
    build_aic_instance_with, build_first_order_instance, AicInstance, BuildOptions,
};

/// Applies --seed-override to a config seed.
pub fn effective_seed(config_seed: u64, override_seed: Option<u64>) -> u64 {
    override_seed.unwrap_or(config_seed)
}

pub fn build_from_params(
    n: usize,
    params: &ParamsConfig,
    seed: u64,
    utility_cubic: f64,
    objective_cubic: f64,
    ball_radius: f64,
) -> Result<AicInstance<f64>, CliError> {
    let options = BuildOptions {
        utility_cubic,
        objective_cubic,
        ball_radius,
    };
    build_aic_instance_with(n, &params.to_params(), seed, &options).map_err(CliError::from)
}

/// Resolves an instance source: prior document, inline build, or inline
/// first-order build.
pub fn resolve_instance(
    source: &InstanceSource,
    override_seed: Option<u64>,
) -> Result<AicInstance<f64>, CliError> {
    match source {
        InstanceSource::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                if e.kind() == std::io::ErrorKind::NotFound {
                    CliError::missing_input(format!("instance file {path}"))
                } else {
                    CliError::config(format!("cannot read instance {path}: {e}"))
                }
            })?;
            let doc: driftlab::io::InstanceDoc = driftlab::io::from_json_str(&text)?;
            Ok(doc.to_instance()?)
        }
        InstanceSource::Build {
            n,
            params,
            seed,
            utility_cubic,
            objective_cubic,
            ball_radius,
        } => build_from_params(
            *n,
            params,
            effective_seed(*seed, override_seed),
            *utility_cubic,
            *objective_cubic,
            *ball_radius,
        ),
        InstanceSource::FirstOrder {
            n,
            d,
            lambda,
            c,
            seed,
        } => build_first_order_instance(*n, *d, *lambda, *c, effective_seed(*seed, override_seed))
            .map_err(CliError::from),
    }
}
