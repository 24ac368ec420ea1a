//! `aic-verify`: build the configured instance, re-verify the certificate
//! from scratch, and emit both documents. Exit 1 when a demanded
//! condition fails.

use driftlab::io::{to_json_pretty, CertificateDoc, InstanceDoc};
use driftlab::landscape::verify_aic;

use super::effective_seed;
use crate::config::AicVerifyConfig;
use crate::manifest::ManifestBuilder;
use crate::{CliError, RunArgs};

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let bytes = args.read_config_bytes()?;
    let config: AicVerifyConfig = args.parse_config(&bytes)?;
    let mut manifest = ManifestBuilder::new(&args.out, &bytes)?;

    let seed = effective_seed(config.seed, args.seed_override);
    let instance = super::build_from_params(
        config.n,
        &config.params,
        seed,
        config.utility_cubic,
        config.objective_cubic,
        config.ball_radius,
    )?;

    let demanded = config
        .verify_params
        .as_ref()
        .unwrap_or(&config.params)
        .to_params();
    let certificate = verify_aic(&instance.utility, &instance.objective, &demanded)?;

    let instance_doc = InstanceDoc::from_instance(&instance);
    manifest.write_output("instance.json", to_json_pretty(&instance_doc)?.as_bytes())?;

    let cert_doc = CertificateDoc {
        tail_sum: certificate.tail_sum,
        lambda_d: certificate.lambda_d,
        proj_grad_norm: certificate.proj_grad_norm,
        coupling: certificate.coupling,
        conditions_met: certificate.conditions_met,
    };
    manifest.write_output("certificate.json", to_json_pretty(&cert_doc)?.as_bytes())?;

    if !certificate.all_met() {
        manifest.note(format!(
            "conditions not met: {:?}",
            certificate.conditions_met
        ));
        manifest.finalize()?;
        return Err(CliError::check_failed(format!(
            "certificate conditions {:?} (tail {:.3e}, |Pg0| {:.3e}, coupling {:.3e})",
            certificate.conditions_met,
            certificate.tail_sum,
            certificate.proj_grad_norm,
            certificate.coupling
        )));
    }
    manifest.finalize()?;
    println!("aic-verify: all conditions met (seed {seed})");
    Ok(())
}
