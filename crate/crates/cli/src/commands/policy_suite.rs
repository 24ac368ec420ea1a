//! `policy-suite`: exact toy-policy battery on one skill: the
//! KL-equals-utility-drop identity, Fisher vs finite-difference Hessian,
//! the cubic remainder of the local quadratic form, and gauge invariance.

use serde::Serialize;

use driftlab::io::to_json_pretty;
use driftlab::mat::Mat;
use driftlab::policy::{
    fisher_vs_kl_hessian, fit_optimal, kl_degradation, quadratic_form_check, utility,
    SkillDistribution, TabularPolicy,
};
use driftlab::rng::CounterRng;

use super::effective_seed;
use crate::config::{PolicySuiteConfig, SkillConfig};
use crate::manifest::ManifestBuilder;
use crate::{CliError, RunArgs};

#[derive(Debug, Serialize)]
struct PolicySuiteDoc {
    n_contexts: usize,
    n_outcomes: usize,
    seed: u64,
    /// Log-optimal policy logits (row-centered), full precision.
    optimal_logits: Vec<Vec<f64>>,
    kl_identity_max_gap: f64,
    fisher_hessian_max_dev: f64,
    remainder_exponent: f64,
    remainder_k: f64,
    gauge_gap: f64,
    passed: bool,
}

const KL_IDENTITY_TOL: f64 = 1e-12;
const HESSIAN_TOL: f64 = 1e-5;
const REMAINDER_RANGE: (f64, f64) = (2.9, 3.1);
const GAUGE_TOL: f64 = 1e-12;

fn build_skill(
    config: &SkillConfig,
    override_seed: Option<u64>,
) -> Result<SkillDistribution<f64>, CliError> {
    match config {
        SkillConfig::Random {
            n_contexts,
            n_outcomes,
            seed,
        } => Ok(SkillDistribution::seeded_random(
            *n_contexts,
            *n_outcomes,
            effective_seed(*seed, override_seed),
        )),
        SkillConfig::Explicit {
            context_probs,
            conditionals,
        } => SkillDistribution::new(context_probs.clone(), Mat::from_rows(conditionals.clone()))
            .map_err(CliError::from),
    }
}

fn skewed_direction(star: &TabularPolicy<f64>, skill: &SkillDistribution<f64>) -> Vec<f64> {
    let mut best = (0usize, 0usize, 0.0f64);
    for x in 0..skill.n_contexts() {
        let probs = star.probs_row(x);
        for (y, &p) in probs.iter().enumerate() {
            let skew = (1.0 - 2.0 * p).abs() * p * (1.0 - p);
            if skew > best.2 {
                best = (x, y, skew);
            }
        }
    }
    let mut v = vec![0.0; skill.n_contexts() * skill.n_outcomes()];
    v[best.0 * skill.n_outcomes() + best.1] = 1.0;
    v
}

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let bytes = args.read_config_bytes()?;
    let config: PolicySuiteConfig = args.parse_config(&bytes)?;
    let mut manifest = ManifestBuilder::new(&args.out, &bytes)?;

    let skill = build_skill(&config.skill, args.seed_override)?;
    // degenerate support is rejected here with the offending indices
    let star = fit_optimal(&skill)?;
    let u_star = utility(&star, &skill)?;
    let m = skill.n_contexts() * skill.n_outcomes();

    let seed = effective_seed(config.seed, args.seed_override);
    let rng = CounterRng::new(seed);
    let mut kl_gap = 0.0f64;
    for trial in 0..config.perturbations {
        let mut s = rng.stream(trial as u64);
        let delta: Vec<f64> = s
            .gaussian_vec::<f64>(m)
            .iter()
            .map(|&x| config.perturbation_scale * x)
            .collect();
        let moved = star.displaced(&delta)?;
        let kl = kl_degradation(&star, &moved, &skill)?;
        let drop = u_star - utility(&moved, &skill)?;
        kl_gap = kl_gap.max((kl - drop).abs());
    }

    let hessian_dev = fisher_vs_kl_hessian(&star, &skill)?;

    let direction = skewed_direction(&star, &skill);
    let checks = quadratic_form_check(&star, &skill, &[direction], &config.remainder_scales)?;
    let remainder = &checks[0];

    // exact row-shift gauge: shift context 0 by 0.5 (representable)
    let mut shifted_logits = star.logits().clone();
    for y in 0..skill.n_outcomes() {
        shifted_logits[(0, y)] += 0.5;
    }
    let shifted = TabularPolicy::new(shifted_logits)?;
    let gauge_gap = (utility(&shifted, &skill)? - u_star).abs();

    let passed = kl_gap <= KL_IDENTITY_TOL
        && hessian_dev <= HESSIAN_TOL
        && (REMAINDER_RANGE.0..=REMAINDER_RANGE.1).contains(&remainder.fitted_exponent)
        && gauge_gap <= GAUGE_TOL;

    let optimal_logits: Vec<Vec<f64>> = (0..skill.n_contexts())
        .map(|x| star.logits().row(x).to_vec())
        .collect();
    let doc = PolicySuiteDoc {
        n_contexts: skill.n_contexts(),
        n_outcomes: skill.n_outcomes(),
        seed,
        optimal_logits,
        kl_identity_max_gap: kl_gap,
        fisher_hessian_max_dev: hessian_dev,
        remainder_exponent: remainder.fitted_exponent,
        remainder_k: remainder.fitted_k,
        gauge_gap,
        passed,
    };
    manifest.write_output("policy_report.json", to_json_pretty(&doc)?.as_bytes())?;
    manifest.finalize()?;

    if !passed {
        return Err(CliError::check_failed(format!(
            "kl gap {:.3e}, hessian dev {:.3e}, remainder exponent {:.3}, gauge gap {:.3e}",
            doc.kl_identity_max_gap,
            doc.fisher_hessian_max_dev,
            doc.remainder_exponent,
            doc.gauge_gap
        )));
    }
    println!(
        "policy-suite: kl gap {:.2e}, hessian dev {:.2e}, remainder exponent {:.3}",
        doc.kl_identity_max_gap, doc.fisher_hessian_max_dev, doc.remainder_exponent
    );
    Ok(())
}
