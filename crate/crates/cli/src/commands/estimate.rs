//! `estimate`: evaluate one report-producing estimator on an observation
//! taken from a file or simulated from `(theta, seed)`, and emit the full
//! JSON report with the component breakdown.

use qfest::estimators::{q_adaptive_with_penalty, q_kstar, EstimateReport};
use qfest::seq_model::{simulate, Observation, ThetaVector};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{read_to_string, write_file, write_resolved_config, RunMeta};

pub fn run(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let estimator_name = cfg
        .estimate
        .as_ref()
        .and_then(|e| e.estimator.clone())
        .unwrap_or_else(|| "q_adaptive".into());

    let obs = load_observation(cfg)?;
    let model = cfg.model_config(obs.n)?;
    let scheme = model.scheme();

    let report: EstimateReport = match estimator_name.as_str() {
        "q_adaptive" => q_adaptive_with_penalty(&obs, &scheme, cfg.penalty())?,
        "q_kstar" => q_kstar(&obs, &cfg.require_ball()?, &scheme)?,
        other => {
            return Err(CliError::Config(format!(
                "estimate.estimator must be q_adaptive or q_kstar, got \"{other}\""
            )))
        }
    };
    let report = if cfg.clip() {
        report.clipped_at_zero()
    } else {
        report
    };
    if !report.q_hat.is_finite() {
        return Err(CliError::Numeric(format!(
            "estimate produced non-finite value {}",
            report.q_hat
        )));
    }

    let meta = RunMeta::new(cfg);
    let mut doc = meta.json_fields();
    doc.insert("estimator".into(), estimator_name.into());
    doc.insert("n".into(), obs.n.into());
    doc.insert(
        "scheme".into(),
        serde_json::to_value(scheme).expect("scheme serializes"),
    );
    doc.insert(
        "report".into(),
        serde_json::to_value(&report).expect("report serializes"),
    );
    let text = serde_json::to_string(&serde_json::Value::Object(doc)).expect("json");

    if let Some(stem) = cfg.out_path() {
        write_resolved_config(cfg, &stem)?;
        write_file(&stem, ".json", &text)?;
    }
    Ok(text)
}

fn load_observation(cfg: &ExperimentConfig) -> Result<Observation, CliError> {
    if let Some(path) = cfg.estimate.as_ref().and_then(|e| e.observation.clone()) {
        let text = read_to_string(std::path::Path::new(&path))?;
        // accept either a bare observation or a simulate output document
        if let Ok(obs) = serde_json::from_str::<Observation>(&text) {
            return Ok(obs);
        }
        let doc: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("observation file {path}: {e}")))?;
        let inner = doc.get("observation").ok_or_else(|| {
            CliError::Config(format!("observation file {path}: no observation field"))
        })?;
        return serde_json::from_value(inner.clone())
            .map_err(|e| CliError::Config(format!("observation file {path}: {e}")));
    }
    let n = cfg.require_n()?;
    let model = cfg.model_config(n)?;
    let theta = cfg.estimate_theta()?.unwrap_or_else(ThetaVector::zero);
    Ok(simulate(&theta, &model))
}
