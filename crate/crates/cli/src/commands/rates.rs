//! `rates`: emit the eight-cell comparison table of the model-selection
//! benchmark against the adaptive estimator (sparse side), or answer point
//! queries for a given `(p, alpha)`.

use qfest::param_spaces::BallSpec;
use qfest::rates::{adaptive_rate_pair, lm_rate_pair, minimax_rate, regime_table, table_cells};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{fmt_f64, write_file, write_resolved_config, RunMeta};

pub fn run(cfg: &ExperimentConfig, point: Option<(f64, f64)>) -> Result<String, CliError> {
    let meta = RunMeta::new(cfg);
    let mut out = meta.csv_header();
    match point {
        None => {
            out.push_str(
                "p_range,alpha_range,lm_rate,q_rate,lm_n_exp,lm_log_exp,q_n_exp,q_log_exp\n",
            );
            let table = regime_table(&table_cells()).map_err(CliError::from)?;
            for cell in table {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    cell.p_range,
                    cell.alpha_range,
                    quote(&cell.lm_rate),
                    quote(&cell.q_rate),
                    fmt_f64(cell.lm_pair.n_exp),
                    fmt_f64(cell.lm_pair.log_exp),
                    fmt_f64(cell.q_pair.n_exp),
                    fmt_f64(cell.q_pair.log_exp),
                ));
            }
        }
        Some((p, alpha)) => {
            out.push_str(
                "p,alpha,regime,r,log_exp,efficient_constant,q_n_exp,q_log_exp,lm_n_exp,lm_log_exp\n",
            );
            let ball = BallSpec::lp(p, alpha, 1.0).map_err(CliError::from)?;
            let summary = minimax_rate(&ball);
            let q = adaptive_rate_pair(&ball);
            let lm = if ball.p < 2.0 {
                let pair = lm_rate_pair(&ball).map_err(CliError::from)?;
                (fmt_f64(pair.n_exp), fmt_f64(pair.log_exp))
            } else {
                (String::new(), String::new())
            };
            out.push_str(&format!(
                "{},{},{:?},{},{},{},{},{},{},{}\n",
                fmt_f64(p),
                fmt_f64(alpha),
                summary.regime,
                fmt_f64(summary.r),
                fmt_f64(summary.log_exp),
                summary
                    .efficient_constant
                    .map(fmt_f64)
                    .unwrap_or_default(),
                fmt_f64(q.n_exp),
                fmt_f64(q.log_exp),
                lm.0,
                lm.1,
            ));
        }
    }
    if let Some(stem) = cfg.out_path() {
        write_resolved_config(cfg, &stem)?;
        write_file(&stem, ".csv", &out)?;
    }
    Ok(out)
}

fn quote(s: &str) -> String {
    if s.contains(',') {
        format!("\"{s}\"")
    } else {
        s.to_string()
    }
}
