//! `risk`: Monte Carlo risk experiments. A single `model.n` produces one
//! CSV row per (estimator, theta); a `model.n_grid` additionally fits the
//! risk-decay slope per estimator and annotates the minimax target. The SVG
//! format renders the slope chart from the same CSV rows the user receives.

use qfest::param_spaces::{a_theta, q_of_theta};
use qfest::rates::minimax_rate;
use qfest::risk_lab::{fit_slope, sup_risk_multi, RiskEstimate, SlopeFit};

use crate::config::{ExperimentConfig, OutputFormat};
use crate::error::CliError;
use crate::output::{fmt_f64, write_file, write_resolved_config, RunMeta};
use crate::svg::{slope_chart, Series};

struct Row {
    risk: RiskEstimate,
    q_true: f64,
}

pub fn run(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let grid: Vec<u64> = match (cfg.n_grid(), cfg.model.as_ref().and_then(|m| m.n)) {
        (Some(grid), _) => grid,
        (None, Some(n)) => vec![n],
        (None, None) => {
            return Err(CliError::Config(
                "missing required field: model.n or model.n_grid".into(),
            ))
        }
    };
    if grid.is_empty() {
        return Err(CliError::Config("model.n_grid must be nonempty".into()));
    }

    let reps = cfg.reps();
    let mut rows: Vec<Row> = Vec::new();
    // estimator index -> (n, sup mse, argmax theta)
    let mut sups: Vec<Vec<(u64, f64, String)>> = Vec::new();

    for &n in &grid {
        let model = cfg.model_config(n)?;
        let estimators = cfg.estimators(n)?;
        let family = cfg.family(n)?;
        if sups.is_empty() {
            sups = vec![Vec::new(); estimators.len()];
        }
        let result = sup_risk_multi(&estimators, &family, &model, reps)?;
        for (e_idx, sup) in result.into_iter().enumerate() {
            sups[e_idx].push((n, sup.sup.mse, sup.argmax_theta_id.clone()));
            for (t_idx, risk) in sup.per_theta.into_iter().enumerate() {
                rows.push(Row {
                    q_true: q_of_theta(&family[t_idx].theta),
                    risk,
                });
            }
        }
    }

    // slope fits need >= 4 grid points and a declared ball
    let ball = cfg.ball()?;
    let mut slopes: Vec<(String, SlopeFit)> = Vec::new();
    if grid.len() >= 4 {
        if let Some(ball) = &ball {
            let target = -minimax_rate(ball).r;
            for per_n in &sups {
                let ns: Vec<u64> = per_n.iter().map(|(n, _, _)| *n).collect();
                let mses: Vec<f64> = per_n.iter().map(|(_, m, _)| *m).collect();
                let estimator_id = rows
                    .iter()
                    .find(|r| r.risk.n == ns[0])
                    .map(|r| r.risk.estimator_id.clone())
                    .unwrap_or_default();
                let fit = fit_slope(&ns, &mses, target)?;
                slopes.push((estimator_id, fit));
            }
        }
    }
    // fix the estimator ids on the slope fits (one per estimator, in order)
    if !slopes.is_empty() {
        let n0 = grid[0];
        let ids: Vec<String> = cfg
            .estimators(n0)?
            .iter()
            .map(|e| e.id())
            .collect();
        for (slot, id) in slopes.iter_mut().zip(ids) {
            slot.0 = id;
        }
    }

    let meta = RunMeta::new(cfg);
    let csv = render_csv(&meta, &rows);

    let mut doc = meta.json_fields();
    doc.insert(
        "rows".into(),
        serde_json::to_value(rows.iter().map(|r| &r.risk).collect::<Vec<_>>()).expect("rows"),
    );
    doc.insert(
        "sup".into(),
        serde_json::to_value(
            sups.iter()
                .map(|per_n| {
                    per_n
                        .iter()
                        .map(|(n, mse, id)| {
                            serde_json::json!({"n": n, "sup_mse": mse, "argmax_theta": id})
                        })
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>(),
        )
        .expect("sups"),
    );
    if let Some(ball) = &ball {
        doc.insert(
            "regime".into(),
            serde_json::to_value(minimax_rate(ball)).expect("regime"),
        );
        doc.insert("a_theta".into(), a_theta(ball).into());
    }
    doc.insert(
        "slopes".into(),
        serde_json::to_value(
            slopes
                .iter()
                .map(|(id, fit)| serde_json::json!({"estimator": id, "fit": fit}))
                .collect::<Vec<_>>(),
        )
        .expect("slopes"),
    );
    let json = serde_json::to_string(&serde_json::Value::Object(doc)).expect("json");

    let format = cfg.format()?;
    if let Some(stem) = cfg.out_path() {
        write_resolved_config(cfg, &stem)?;
        write_file(&stem, ".csv", &csv)?;
        write_file(&stem, ".json", &json)?;
        if format == OutputFormat::Svg {
            // the chart is rendered from the CSV that was just written
            let written = crate::output::read_to_string(&std::path::PathBuf::from(format!(
                "{stem}.csv"
            )))?;
            let svg = chart_from_csv(&written, &slopes, &meta)?;
            write_file(&stem, ".svg", &svg)?;
        }
    }
    Ok(match format {
        OutputFormat::Json => json,
        _ => csv,
    })
}

fn render_csv(meta: &RunMeta, rows: &[Row]) -> String {
    let mut out = meta.csv_header();
    out.push_str("estimator,theta,n,reps,q_true,mean_error,variance,mse,se_mse\n");
    for row in rows {
        let r = &row.risk;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            csv_quote(&r.estimator_id),
            csv_quote(&r.theta_id),
            r.n,
            r.reps,
            fmt_f64(row.q_true),
            fmt_f64(r.mean_error),
            fmt_f64(r.variance),
            fmt_f64(r.mse),
            fmt_f64(r.se_mse),
        ));
    }
    out
}

fn csv_quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Build the slope chart from CSV text (the same bytes the user received):
/// per estimator, the supremum MSE over thetas at each n.
fn chart_from_csv(
    csv: &str,
    slopes: &[(String, SlopeFit)],
    meta: &RunMeta,
) -> Result<String, CliError> {
    use std::collections::BTreeMap;
    let mut by_estimator: BTreeMap<String, BTreeMap<u64, f64>> = BTreeMap::new();
    for line in csv.lines() {
        if line.starts_with('#') || line.starts_with("estimator,") || line.is_empty() {
            continue;
        }
        let fields = split_csv_line(line);
        if fields.len() != 9 {
            return Err(CliError::Io(format!("malformed csv row: {line}")));
        }
        let estimator = fields[0].clone();
        let n: u64 = fields[2]
            .parse()
            .map_err(|e| CliError::Io(format!("bad n in csv: {e}")))?;
        let mse: f64 = fields[7]
            .parse()
            .map_err(|e| CliError::Io(format!("bad mse in csv: {e}")))?;
        let slot = by_estimator.entry(estimator).or_default().entry(n).or_insert(mse);
        if mse > *slot {
            *slot = mse;
        }
    }
    let series: Vec<Series> = by_estimator
        .into_iter()
        .map(|(label, points)| {
            let target = slopes
                .iter()
                .find(|(id, _)| *id == label)
                .map(|(_, fit)| fit.target_slope);
            Series {
                points: points
                    .into_iter()
                    .map(|(n, mse)| ((n as f64).ln(), mse.ln()))
                    .collect(),
                label,
                target_slope: target,
            }
        })
        .collect();
    Ok(slope_chart(&series, &meta.svg_comment()))
}

fn split_csv_line(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut in_quotes = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if in_quotes && chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            '"' => in_quotes = !in_quotes,
            ',' if !in_quotes => {
                fields.push(std::mem::take(&mut cur));
            }
            other => cur.push(other),
        }
    }
    fields.push(cur);
    fields
}
