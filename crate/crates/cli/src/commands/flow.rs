//! `flow`: integrate the configured gradient flow, export the trajectory
//! with drift/loss columns, and fit the scaling laws over the configured
//! (optionally data-driven) window.

use rayon::prelude::*;
use serde::Serialize;

use driftlab::flow::{
    check_drift_bound, data_driven_window, drift_curve, fit_power_law, integrate, loss_curve,
    IntegratorConfig, Method,
};
use driftlab::io::{to_json_pretty, write_series_csv, FitDoc};
use driftlab::landscape::AicInstance;

use crate::config::{FlowConfig, InstanceSource};
use crate::manifest::ManifestBuilder;
use crate::{CliError, RunArgs};

#[derive(Debug, Serialize)]
struct FlowRunDoc {
    seed: u64,
    gamma: f64,
    lambda: f64,
    epsilon: f64,
    d: usize,
    n: usize,
    window: [f64; 2],
    drift_fit: FitDoc,
    loss_fit: FitDoc,
    drift_bound_holds: bool,
    drift_bound_c: f64,
    eps_prime: f64,
    exited_ball: Option<f64>,
}

fn parse_method(name: &str) -> Result<Method, CliError> {
    match name {
        "rk4_fixed" => Ok(Method::Rk4Fixed),
        "euler" => Ok(Method::Euler),
        other => Err(CliError::config(format!(
            "unknown method '{other}' (expected rk4_fixed or euler)"
        ))),
    }
}

type SingleRun = (FlowRunDoc, Vec<Vec<f64>>);

fn run_single(
    instance: &AicInstance<f64>,
    config: &FlowConfig,
    seed: u64,
) -> Result<SingleRun, CliError> {
    let integrator = IntegratorConfig {
        method: parse_method(&config.method)?,
        step: config.step,
        horizon: config.horizon,
        record_every: config.record_every,
        ball_radius: config.ball_radius,
    };
    let traj = integrate(&instance.objective, &integrator)?;
    let (half, proj) = instance.sensitivity_geometry()?;
    let drift = drift_curve(&traj, &half, &proj)?;
    let loss = loss_curve(&traj, &instance.utility);

    let window = if config.window.data_driven {
        data_driven_window(
            &drift,
            instance.params.gamma,
            config.window.t_min,
            config.window.t_max,
        )
    } else {
        (config.window.t_min, config.window.t_max)
    };
    let drift_fit = fit_power_law(&drift, window)?;
    let loss_fit = fit_power_law(&loss, window)?;
    let bound = check_drift_bound(&traj, &half, &proj, &instance.params)?;

    let mut rows = Vec::with_capacity(traj.len());
    for k in 0..traj.len() {
        let mut row = vec![traj.times()[k], drift[k].1, loss[k].1];
        if config.emit_states {
            row.extend_from_slice(&traj.states()[k]);
        }
        rows.push(row);
    }

    Ok((
        FlowRunDoc {
            seed,
            gamma: instance.params.gamma,
            lambda: instance.params.lambda,
            epsilon: instance.params.epsilon,
            d: instance.params.d,
            n: instance.n(),
            window: [window.0, window.1],
            drift_fit: FitDoc::from_fit(&drift_fit, seed),
            loss_fit: FitDoc::from_fit(&loss_fit, seed),
            drift_bound_holds: bound.holds,
            drift_bound_c: bound.fitted_c,
            eps_prime: bound.eps_prime,
            exited_ball: traj.exited_ball(),
        },
        rows,
    ))
}

fn csv_headers(emit_states: bool, n: usize) -> Vec<String> {
    let mut headers = vec!["t".to_string(), "drift".to_string(), "loss".to_string()];
    if emit_states {
        headers.extend((0..n).map(|i| format!("theta_{i}")));
    }
    headers
}

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let bytes = args.read_config_bytes()?;
    let config: FlowConfig = args.parse_config(&bytes)?;
    let mut manifest = ManifestBuilder::new(&args.out, &bytes)?;

    if config.sweep_seeds.is_empty() {
        let instance = super::resolve_instance(&config.instance, args.seed_override)?;
        let (doc, rows) = run_single(&instance, &config, instance.seed)?;
        if let Some(exit) = doc.exited_ball {
            manifest.note(format!("exited_ball at t = {exit}"));
        }
        let mut csv = Vec::new();
        let headers = csv_headers(config.emit_states, instance.n());
        let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
        write_series_csv(&mut csv, &header_refs, &rows)?;
        manifest.write_output("trajectory.csv", &csv)?;
        manifest.write_output("fits.json", to_json_pretty(&doc)?.as_bytes())?;
        manifest.finalize()?;
        println!(
            "flow: loss exponent {:.4}, drift exponent {:.4}",
            doc.loss_fit.exponent, doc.drift_fit.exponent
        );
        return Ok(());
    }

    // seed sweep: rebuild the inline instance per seed, in parallel
    let base = match &config.instance {
        InstanceSource::Build { .. } | InstanceSource::FirstOrder { .. } => &config.instance,
        InstanceSource::File(_) => {
            return Err(CliError::config(
                "sweep_seeds requires an inline instance build",
            ))
        }
    };
    let results: Vec<Result<SingleRun, CliError>> = config
        .sweep_seeds
        .par_iter()
        .map(|&seed| {
            let source = match base {
                InstanceSource::Build {
                    n,
                    params,
                    utility_cubic,
                    objective_cubic,
                    ball_radius,
                    ..
                } => InstanceSource::Build {
                    n: *n,
                    params: params.clone(),
                    seed,
                    utility_cubic: *utility_cubic,
                    objective_cubic: *objective_cubic,
                    ball_radius: *ball_radius,
                },
                InstanceSource::FirstOrder {
                    n, d, lambda, c, ..
                } => InstanceSource::FirstOrder {
                    n: *n,
                    d: *d,
                    lambda: *lambda,
                    c: *c,
                    seed,
                },
                InstanceSource::File(_) => unreachable!(),
            };
            let instance = super::resolve_instance(&source, None)?;
            run_single(&instance, &config, seed)
        })
        .collect();

    let mut docs = Vec::new();
    for (i, result) in results.into_iter().enumerate() {
        let (doc, rows) = result?;
        let seed = config.sweep_seeds[i];
        let mut csv = Vec::new();
        let headers = csv_headers(config.emit_states, doc.n);
        let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
        write_series_csv(&mut csv, &header_refs, &rows)?;
        manifest.write_output(&format!("trajectory_seed{seed}.csv"), &csv)?;
        if let Some(exit) = doc.exited_ball {
            manifest.note(format!("seed {seed}: exited_ball at t = {exit}"));
        }
        docs.push(doc);
    }
    manifest.write_output("fits.json", to_json_pretty(&docs)?.as_bytes())?;
    manifest.finalize()?;
    println!("flow: swept {} seeds", docs.len());
    Ok(())
}
