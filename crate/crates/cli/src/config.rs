//! JSON configuration schemas, one per subcommand. Every randomized
//! quantity carries an explicit seed, and unknown fields are rejected so
//! configs round-trip unchanged.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub d: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

impl ParamsConfig {
    pub fn to_params(&self) -> driftlab::Params {
        driftlab::landscape::AicParams {
            d: self.d,
            lambda: self.lambda,
            gamma: self.gamma,
            epsilon: self.epsilon,
        }
    }
}

/// `aic-verify`: build a seeded instance and re-verify its certificate
/// from scratch (optionally against different demanded parameters).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AicVerifyConfig {
    pub n: usize,
    pub params: ParamsConfig,
    pub seed: u64,
    #[serde(default)]
    pub utility_cubic: f64,
    #[serde(default)]
    pub objective_cubic: f64,
    #[serde(default = "default_ball_radius")]
    pub ball_radius: f64,
    /// Parameters the verification must certify; defaults to `params`.
    #[serde(default)]
    pub verify_params: Option<ParamsConfig>,
}

fn default_ball_radius() -> f64 {
    1.0
}

/// Instance source for a flow run: a prior instance document, an inline
/// instability build, or an inline first-order build.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub enum InstanceSource {
    #[serde(rename = "file")]
    File(String),
    #[serde(rename = "build")]
    Build {
        n: usize,
        params: ParamsConfig,
        seed: u64,
        #[serde(default)]
        utility_cubic: f64,
        #[serde(default)]
        objective_cubic: f64,
        #[serde(default = "default_ball_radius")]
        ball_radius: f64,
    },
    #[serde(rename = "first_order")]
    FirstOrder {
        n: usize,
        d: usize,
        lambda: f64,
        c: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub t_min: f64,
    pub t_max: f64,
    /// Tighten the upper end where the drift's cubic remainder reaches 10%
    /// of its quadratic term.
    #[serde(default)]
    pub data_driven: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub instance: InstanceSource,
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default = "default_ball_radius")]
    pub ball_radius: f64,
    pub window: WindowConfig,
    /// Emit the state components into the trajectory CSV.
    #[serde(default)]
    pub emit_states: bool,
    /// Optional seed sweep: one sub-run per seed, in parallel.
    #[serde(default)]
    pub sweep_seeds: Vec<u64>,
}

fn default_method() -> String {
    "rk4_fixed".into()
}

fn default_step() -> f64 {
    5e-5
}

fn default_horizon() -> f64 {
    0.5
}

fn default_record_every() -> usize {
    10
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub enum SpectrumConfig {
    #[serde(rename = "identity")]
    Identity,
    #[serde(rename = "diag")]
    Diag(Vec<f64>),
    /// A few large eigenvalues over a constant bulk, rotated by a seeded
    /// orthonormal basis.
    #[serde(rename = "spiked")]
    Spiked {
        spikes: Vec<f64>,
        bulk: f64,
        rotation_seed: u64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProjectionMassConfig {
    pub n: usize,
    pub d: usize,
    pub trials: usize,
    pub epsilon: f64,
    pub seed: u64,
    #[serde(default)]
    pub emit_samples: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RayleighConfig {
    pub d: usize,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NullmodelConfig {
    pub n: usize,
    pub spectrum: SpectrumConfig,
    pub eta: f64,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub projection: Option<ProjectionMassConfig>,
    #[serde(default)]
    pub rayleigh: Option<RayleighConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub enum SkillConfig {
    #[serde(rename = "random")]
    Random {
        n_contexts: usize,
        n_outcomes: usize,
        seed: u64,
    },
    #[serde(rename = "explicit")]
    Explicit {
        context_probs: Vec<f64>,
        conditionals: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PolicySuiteConfig {
    pub skill: SkillConfig,
    pub perturbations: usize,
    pub perturbation_scale: f64,
    pub seed: u64,
    /// Scales for the quadratic-remainder fit.
    pub remainder_scales: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub enum GradientsConfig {
    #[serde(rename = "synth")]
    Synth {
        d: usize,
        r: usize,
        n: usize,
        seed: u64,
    },
    #[serde(rename = "file")]
    File(String),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OverlapConfig {
    /// Seed of the projection the update is sketched with; must equal the
    /// pipeline's projection seed.
    pub projection_seed: u64,
    /// Update synthesized along a sketched-Fisher eigenvector (index), or
    /// read from a CSV matrix file.
    #[serde(default)]
    pub eigvec_index: Option<usize>,
    #[serde(default)]
    pub update_file: Option<String>,
    #[serde(default = "default_update_scale")]
    pub scale: f64,
}

fn default_update_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SketchConfig {
    pub gradients: GradientsConfig,
    pub projection_seed: u64,
    pub k: usize,
    pub top: usize,
    #[serde(default)]
    pub rank_check: bool,
    #[serde(default)]
    pub overlap: Option<OverlapConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    /// Output directories of prior runs (each holding a manifest.json).
    pub runs: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::{Path, PathBuf};

    fn configs_dir() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
    }

    fn roundtrip<T>(name: &str)
    where
        T: serde::de::DeserializeOwned + serde::Serialize + PartialEq + std::fmt::Debug,
    {
        let path = configs_dir().join(name);
        let text = std::fs::read_to_string(&path).unwrap();
        let parsed: T = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let reserialized = serde_json::to_string(&parsed).unwrap();
        let reparsed: T = serde_json::from_str(&reserialized).unwrap();
        assert_eq!(parsed, reparsed, "{name} drifted through round trip");
    }

    #[test]
    fn bundled_configs_round_trip_through_their_schemas() {
        roundtrip::<AicVerifyConfig>("aic_eps0.json");
        roundtrip::<AicVerifyConfig>("aic_gamma0_demand.json");
        roundtrip::<FlowConfig>("flow_eps0.json");
        roundtrip::<FlowConfig>("flow_first_order.json");
        roundtrip::<FlowConfig>("flow_ball_exit.json");
        roundtrip::<FlowConfig>("flow_sweep.json");
        roundtrip::<NullmodelConfig>("nullmodel_n200.json");
        roundtrip::<NullmodelConfig>("nullmodel_identity_projection.json");
        roundtrip::<PolicySuiteConfig>("policy_3x4.json");
        roundtrip::<PolicySuiteConfig>("policy_degenerate.json");
        roundtrip::<SketchConfig>("sketch_d6r2.json");
        roundtrip::<SketchConfig>("sketch_seed_mismatch.json");
        roundtrip::<ReportConfig>("report_flows.json");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = serde_json::from_str::<AicVerifyConfig>(
            r#"{ "n": 8, "params": {"d":2,"lambda":1.0,"gamma":0.0,"epsilon":0.0}, "seed": 1, "typo_field": 3 }"#,
        );
        assert!(err.is_err());
    }
}
