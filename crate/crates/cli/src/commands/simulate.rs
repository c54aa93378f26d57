//! `simulate`: draw one observation for a configured theta and seed, and
//! write it as JSON (readable back by `estimate`).

use qfest::seq_model::{simulate, ThetaVector};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{write_file, write_resolved_config, RunMeta};

pub fn run(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let n = cfg.require_n()?;
    let model = cfg.model_config(n)?;
    let theta = cfg.estimate_theta()?.unwrap_or_else(ThetaVector::zero);
    let obs = simulate(&theta, &model);

    let meta = RunMeta::new(cfg);
    let mut doc = meta.json_fields();
    doc.insert(
        "observation".into(),
        serde_json::to_value(&obs).expect("observation serializes"),
    );
    doc.insert(
        "theta".into(),
        serde_json::to_value(&theta).expect("theta serializes"),
    );
    let text = serde_json::to_string(&serde_json::Value::Object(doc)).expect("json");

    if let Some(stem) = cfg.out_path() {
        write_resolved_config(cfg, &stem)?;
        write_file(&stem, ".json", &text)?;
    }
    Ok(text)
}
