//! Experiment configuration: a TOML file of flat key = value sections.
//! Unknown keys are rejected so typos never pass silently. Every run writes
//! its fully resolved config next to the results, and every output embeds
//! the hash of that resolved file.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qfest::estimators::Estimator;
use qfest::param_spaces::{AdversarialConfig, AdversarialFamily, BallKind, BallSpec, NamedTheta};
use qfest::seq_model::{ModelConfig, ThetaVector, DEFAULT_PENALTY};

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Option<ModelSection>,
    pub ball: Option<BallSection>,
    pub experiment: Option<ExperimentSection>,
    pub adversarial: Option<AdversarialSection>,
    pub estimate: Option<EstimateSection>,
    pub simulate: Option<SimulateSection>,
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n: Option<u64>,
    pub n_grid: Option<Vec<u64>>,
    pub seed: Option<u64>,
    pub tail_blocks: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BallSection {
    pub kind: String,
    pub p: f64,
    pub q: Option<f64>,
    pub alpha: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub reps: Option<u64>,
    pub estimators: Option<Vec<String>>,
    pub family: Option<Vec<String>>,
    pub baseline_upto: Option<usize>,
    pub penalty: Option<f64>,
    pub clip: Option<bool>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AdversarialSection {
    pub b: Option<f64>,
    pub d: Option<f64>,
    pub spike_height: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    pub estimator: Option<String>,
    pub theta: Option<Vec<f64>>,
    pub observation: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub theta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub format: Option<String>,
    pub out: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

impl ExperimentConfig {
    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(format!("config parse error: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Hash of the resolved config text; embedded in every output.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_toml().as_bytes());
        let digest = hasher.finalize();
        let mut out = String::with_capacity(16);
        for b in &digest[..8] {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }

    pub fn seed(&self) -> u64 {
        self.model.as_ref().and_then(|m| m.seed).unwrap_or(0)
    }

    pub fn require_n(&self) -> Result<u64, ConfigError> {
        self.model
            .as_ref()
            .and_then(|m| m.n)
            .ok_or_else(|| ConfigError("missing required field: model.n".into()))
    }

    pub fn n_grid(&self) -> Option<Vec<u64>> {
        self.model.as_ref().and_then(|m| m.n_grid.clone())
    }

    pub fn tail_blocks(&self) -> usize {
        self.model.as_ref().and_then(|m| m.tail_blocks).unwrap_or(2)
    }

    pub fn model_config(&self, n: u64) -> Result<ModelConfig, ConfigError> {
        ModelConfig::with_tail_blocks(n, self.seed(), self.tail_blocks())
            .map_err(|e| ConfigError(format!("model section invalid: {e}")))
    }

    pub fn ball(&self) -> Result<Option<BallSpec>, ConfigError> {
        let Some(section) = &self.ball else {
            return Ok(None);
        };
        let kind = match section.kind.as_str() {
            "lp" => BallKind::Lp,
            "besov" => BallKind::Besov,
            other => {
                return Err(ConfigError(format!(
                    "ball.kind must be \"lp\" or \"besov\", got \"{other}\""
                )))
            }
        };
        let ball = BallSpec::validate(BallSpec {
            kind,
            p: section.p,
            q: section.q.unwrap_or(2.0),
            alpha: section.alpha,
            radius: section.radius,
        })
        .map_err(|e| ConfigError(format!("ball section invalid: {e}")))?;
        Ok(Some(ball))
    }

    pub fn require_ball(&self) -> Result<BallSpec, ConfigError> {
        self.ball()?
            .ok_or_else(|| ConfigError("missing required section: ball".into()))
    }

    pub fn reps(&self) -> u64 {
        self.experiment.as_ref().and_then(|e| e.reps).unwrap_or(1000)
    }

    pub fn penalty(&self) -> f64 {
        self.experiment
            .as_ref()
            .and_then(|e| e.penalty)
            .unwrap_or(DEFAULT_PENALTY)
    }

    pub fn clip(&self) -> bool {
        self.experiment.as_ref().and_then(|e| e.clip).unwrap_or(false)
    }

    pub fn format(&self) -> Result<OutputFormat, ConfigError> {
        let name = self
            .output
            .as_ref()
            .and_then(|o| o.format.clone())
            .unwrap_or_else(|| "csv".into());
        match name.as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "svg" => Ok(OutputFormat::Svg),
            other => Err(ConfigError(format!(
                "output.format must be csv, json or svg, got \"{other}\""
            ))),
        }
    }

    pub fn out_path(&self) -> Option<String> {
        self.output.as_ref().and_then(|o| o.out.clone())
    }

    fn adversarial(&self, family: AdversarialFamily) -> AdversarialConfig {
        let mut cfg = AdversarialConfig::new(family);
        if let Some(a) = &self.adversarial {
            if let Some(b) = a.b {
                cfg.b = b;
            }
            if let Some(d) = a.d {
                cfg.d = d;
            }
            cfg.spike_height = a.spike_height;
        }
        cfg
    }

    /// Build one named estimator from its config name.
    pub fn estimator(&self, name: &str, n: u64) -> Result<Estimator, ConfigError> {
        match name {
            "q_adaptive" => Ok(Estimator::QAdaptive {
                penalty: self.penalty(),
            }),
            "q_kstar" => Ok(Estimator::QKstar {
                ball: self.require_ball()?,
            }),
            "unbiased_baseline" => {
                let upto = self
                    .experiment
                    .as_ref()
                    .and_then(|e| e.baseline_upto)
                    .unwrap_or(n as usize);
                Ok(Estimator::UnbiasedBaseline { upto })
            }
            "plugin_oracle" => Ok(Estimator::PluginOracle),
            other => Err(ConfigError(format!(
                "experiment.estimators: unknown estimator \"{other}\""
            ))),
        }
    }

    pub fn estimators(&self, n: u64) -> Result<Vec<Estimator>, ConfigError> {
        let names = self
            .experiment
            .as_ref()
            .and_then(|e| e.estimators.clone())
            .ok_or_else(|| ConfigError("missing required field: experiment.estimators".into()))?;
        if names.is_empty() {
            return Err(ConfigError("experiment.estimators must be nonempty".into()));
        }
        names.iter().map(|name| self.estimator(name, n)).collect()
    }

    /// Build the theta family for one `(ball, n)` pair from the configured
    /// family names.
    pub fn family(&self, n: u64) -> Result<Vec<NamedTheta>, ConfigError> {
        let names = self
            .experiment
            .as_ref()
            .and_then(|e| e.family.clone())
            .ok_or_else(|| ConfigError("missing required field: experiment.family".into()))?;
        if names.is_empty() {
            return Err(ConfigError("experiment.family must be nonempty".into()));
        }
        let mut out = Vec::with_capacity(names.len());
        for name in &names {
            let member = match name.as_str() {
                "zero" => NamedTheta::zero(),
                "spike" => self
                    .adversarial(AdversarialFamily::SingleSpike)
                    .build(&self.require_ball()?, n)
                    .map_err(|e| ConfigError(format!("family \"spike\": {e}")))?,
                "dense_modulus" => self
                    .adversarial(AdversarialFamily::DenseModulus)
                    .build(&self.require_ball()?, n)
                    .map_err(|e| ConfigError(format!("family \"dense_modulus\": {e}")))?,
                "sparse_hypercube" => self
                    .adversarial(AdversarialFamily::SparseHypercube)
                    .build(&self.require_ball()?, n)
                    .map_err(|e| ConfigError(format!("family \"sparse_hypercube\": {e}")))?,
                other => {
                    return Err(ConfigError(format!(
                        "experiment.family: unknown member \"{other}\""
                    )))
                }
            };
            out.push(member);
        }
        Ok(out)
    }

    /// Fill every defaulted knob with its explicit value. Idempotent, so an
    /// emitted resolved config reruns to the same hash and the same output
    /// bytes.
    pub fn resolved(&self) -> ExperimentConfig {
        let mut cfg = self.clone();
        let model = cfg.model.get_or_insert_with(Default::default);
        model.seed = Some(model.seed.unwrap_or(0));
        model.tail_blocks = Some(model.tail_blocks.unwrap_or(2));
        let needs_experiment = cfg.experiment.is_some();
        if needs_experiment {
            let exp = cfg.experiment.as_mut().expect("checked");
            exp.reps = Some(exp.reps.unwrap_or(1000));
            exp.penalty = Some(exp.penalty.unwrap_or(DEFAULT_PENALTY));
            exp.clip = Some(exp.clip.unwrap_or(false));
            let uses_adversary = exp.family.as_ref().is_some_and(|f| {
                f.iter()
                    .any(|name| name == "dense_modulus" || name == "sparse_hypercube")
            });
            if uses_adversary {
                let adv = cfg.adversarial.get_or_insert_with(Default::default);
                adv.b = Some(adv.b.unwrap_or(0.05));
                adv.d = Some(adv.d.unwrap_or(0.8));
            }
        }
        let out = cfg.output.get_or_insert_with(Default::default);
        out.format = Some(out.format.clone().unwrap_or_else(|| "csv".into()));
        cfg
    }

    pub fn estimate_theta(&self) -> Result<Option<ThetaVector>, ConfigError> {
        let inline = self
            .estimate
            .as_ref()
            .and_then(|e| e.theta.clone())
            .or_else(|| self.simulate.as_ref().and_then(|s| s.theta.clone()));
        match inline {
            Some(v) => ThetaVector::new(v)
                .map(Some)
                .map_err(|e| ConfigError(format!("theta invalid: {e}"))),
            None => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let text = r#"
            [model]
            n = 1024
            seed = 7

            [ball]
            kind = "lp"
            p = 2.0
            alpha = 0.125
            radius = 1.0

            [experiment]
            reps = 500
            estimators = ["q_kstar", "q_adaptive"]
            family = ["zero", "dense_modulus"]

            [output]
            format = "csv"
            out = "run1"
        "#;
        let cfg = ExperimentConfig::from_str(text).unwrap();
        assert_eq!(cfg.require_n().unwrap(), 1024);
        assert_eq!(cfg.reps(), 500);
        assert_eq!(cfg.estimators(1024).unwrap().len(), 2);
        assert_eq!(cfg.family(1024).unwrap().len(), 2);
        assert_eq!(cfg.format().unwrap(), OutputFormat::Csv);
    }

    #[test]
    fn rejects_unknown_keys() {
        let err = ExperimentConfig::from_str("[model]\nn = 1024\nHats = 3\n").unwrap_err();
        assert!(err.0.contains("Hats") || err.0.contains("unknown"), "{err}");
    }

    #[test]
    fn missing_fields_are_named() {
        let cfg = ExperimentConfig::from_str("[model]\nseed = 1\n").unwrap();
        let err = cfg.require_n().unwrap_err();
        assert!(err.0.contains("model.n"), "{err}");
        let err = cfg.require_ball().unwrap_err();
        assert!(err.0.contains("ball"), "{err}");
    }

    #[test]
    fn resolved_config_hash_is_stable() {
        let cfg = ExperimentConfig::from_str("[model]\nn = 64\nseed = 1\n").unwrap();
        assert_eq!(cfg.hash(), cfg.hash());
        let other = ExperimentConfig::from_str("[model]\nn = 65\nseed = 1\n").unwrap();
        assert_ne!(cfg.hash(), other.hash());
    }

    #[test]
    fn besov_ball_with_infinite_q() {
        let cfg =
            ExperimentConfig::from_str("[ball]\nkind = \"besov\"\np = 2.0\nq = inf\nalpha = 0.5\nradius = 1.0\n")
                .unwrap();
        let ball = cfg.require_ball().unwrap();
        assert!(ball.q.is_infinite());
    }
}
