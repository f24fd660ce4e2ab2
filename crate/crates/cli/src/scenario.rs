//! Scenario files: a JSON description of one instance plus audit settings.

use std::path::Path;

use privaudit_core::generators::{
    DomainSpec, GeneratorError, InstanceSpec, MechanismSpec, PriorSpec,
};
use privaudit_core::rational::serde_q;
use privaudit_core::relations::AuditConfig;
use privaudit_core::semantic::{BeliefFamily, SemanticOptions};
use privaudit_core::{JointPrior, Mechanism, Ratio, Q};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: field `{field}`: {message}")]
    Parse {
        path: String,
        field: String,
        message: String,
    },
    #[error("{path}: {source}")]
    Invalid {
        path: String,
        source: GeneratorError,
    },
    #[error("{path}: {message}")]
    Config { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeliefSettings {
    #[serde(default = "default_random")]
    pub random: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub families: Vec<BeliefFamily>,
}

fn default_random() -> usize {
    50
}

impl Default for BeliefSettings {
    fn default() -> Self {
        BeliefSettings {
            random: default_random(),
            seed: 0,
            families: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Theorem4Settings {
    /// Target ratio `R`, e.g. `"2"` or `"3/2"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Ratio>,
    /// Target as `ε`; converted to the exact binary value of `e^ε`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_eps: Option<f64>,
    #[serde(
        default,
        with = "serde_q::option",
        skip_serializing_if = "Option::is_none"
    )]
    pub weight: Option<Q>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSettings {
    #[serde(default = "default_pretty")]
    pub pretty: bool,
}

fn default_pretty() -> bool {
    true
}

impl Default for OutputSettings {
    fn default() -> Self {
        OutputSettings { pretty: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub domain: DomainSpec,
    pub n: usize,
    pub mechanism: MechanismSpec,
    pub prior: PriorSpec,
    #[serde(default)]
    pub beliefs: BeliefSettings,
    #[serde(default)]
    pub semantic: SemanticOptions,
    #[serde(default)]
    pub theorem4: Theorem4Settings,
    #[serde(default)]
    pub output: OutputSettings,
}

impl ScenarioConfig {
    pub fn instance(&self) -> InstanceSpec {
        InstanceSpec {
            domain: self.domain.clone(),
            n: self.n,
            mechanism: self.mechanism.clone(),
            prior: self.prior.clone(),
        }
    }

    pub fn audit_config(&self) -> Result<AuditConfig, String> {
        let target = match (&self.theorem4.target, self.theorem4.target_eps) {
            (Some(_), Some(_)) => {
                return Err("give theorem4.target or theorem4.target_eps, not both".into())
            }
            (Some(r), None) => r.clone(),
            (None, Some(eps)) => {
                if !(eps >= 0.0 && eps.is_finite()) {
                    return Err(format!(
                        "theorem4.target_eps {eps} must be a finite value >= 0"
                    ));
                }
                Ratio::finite(Q::from_float(eps.exp()).ok_or("theorem4.target_eps overflows")?)
            }
            (None, None) => Ratio::one(),
        };
        if target < Ratio::one() {
            return Err("theorem4 target must be at least 1".into());
        }
        Ok(AuditConfig {
            seed: self.beliefs.seed,
            random_beliefs: self.beliefs.random,
            families: self.beliefs.families.clone(),
            semantic: self.semantic,
            theorem4_target: target,
            theorem4_weight: self.theorem4.weight.clone(),
        })
    }
}

/// Parses scenario text; `path` labels diagnostics.
pub fn parse_scenario(text: &str, path: &str) -> Result<ScenarioConfig, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| ScenarioError::Parse {
        path: path.to_string(),
        field: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

/// A loaded scenario with its validated mechanism and prior.
pub struct Loaded {
    pub scenario: ScenarioConfig,
    pub mechanism: Mechanism,
    pub prior: JointPrior,
    pub config: AuditConfig,
}

pub fn load(path: &Path) -> Result<Loaded, ScenarioError> {
    let label = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: label.clone(),
        source,
    })?;
    let scenario = parse_scenario(&text, &label)?;
    let (mechanism, prior) =
        scenario
            .instance()
            .build()
            .map_err(|source| ScenarioError::Invalid {
                path: label.clone(),
                source,
            })?;
    let config = scenario
        .audit_config()
        .map_err(|message| ScenarioError::Config {
            path: label,
            message,
        })?;
    Ok(Loaded {
        scenario,
        mechanism,
        prior,
        config,
    })
}
