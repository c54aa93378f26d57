//! `check`: run the numerical check suites (closed forms vs quadrature,
//! moment bounds, blockwise dominance, block-geometry consistency) and
//! report pass/fail per check. Any failure exits with code 4.

use qfest::risk_lab::checks::{lemma1_suite, lemma2_dominance, scheme_consistency_suite, CheckReport};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{write_file, write_resolved_config, RunMeta};

pub fn run(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let reps = cfg
        .experiment
        .as_ref()
        .and_then(|e| e.reps)
        .unwrap_or(100_000)
        .max(100_000);
    let seed = cfg.seed();

    let mut combined = CheckReport::default();
    let consistency = scheme_consistency_suite(&[32, 128, 1024]).map_err(CliError::from)?;
    combined.checks.extend(consistency.checks);
    let moments = lemma1_suite(&[1.0, 2.0, 4.0, 8.0, 16.0, 32.0], reps, seed)
        .map_err(CliError::from)?;
    combined.checks.extend(moments.checks);
    let dominance = lemma2_dominance(1.0, 0.5, 2, reps, seed).map_err(CliError::from)?;
    combined.checks.extend(dominance.checks);

    let meta = RunMeta::new(cfg);
    let mut text = format!(
        "# config_hash={} seed={} version={}\n",
        meta.config_hash, meta.seed, crate::output::VERSION
    );
    for check in &combined.checks {
        text.push_str(&format!(
            "{} {}: {}\n",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        ));
    }
    let failed = combined.failures().len();
    text.push_str(&format!(
        "{} checks, {} failed\n",
        combined.checks.len(),
        failed
    ));

    if let Some(stem) = cfg.out_path() {
        write_resolved_config(cfg, &stem)?;
        write_file(&stem, ".txt", &text)?;
    }
    if failed > 0 {
        // print what we have before signalling failure
        print!("{text}");
        return Err(CliError::CheckFailed(format!("{failed} checks failed")));
    }
    Ok(text)
}
