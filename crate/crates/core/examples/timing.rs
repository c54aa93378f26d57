fn main() {
    use qfest::estimators::Estimator;
    use qfest::param_spaces::{AdversarialConfig, AdversarialFamily, BallSpec, NamedTheta};
    use qfest::risk_lab::{fit_slope, sup_risk_multi};
    use qfest::seq_model::ModelConfig;

    let grid = [512u64, 1024, 2048, 4096, 8192, 16384];
    let mut args = std::env::args().skip(1);
    let reps: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(300);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(20260809);
    let ds: Vec<f64> = args.filter_map(|s| s.parse().ok()).collect();
    let ds = if ds.is_empty() { vec![1.0] } else { ds };

    for d in ds {
        let ball = BallSpec::lp(2.0, 0.125, 1.0).unwrap();
        let mut mses = Vec::new();
        let mut ratios: Vec<(u64, f64, f64)> = Vec::new();
        println!("== dense d = {d}, reps = {reps}, seed = {seed}");
        for &n in &grid {
            let cfg = ModelConfig::new(n, seed).unwrap();
            let mut dense_cfg = AdversarialConfig::new(AdversarialFamily::DenseModulus);
            dense_cfg.d = d;
            let family = vec![
                NamedTheta::zero(),
                dense_cfg.build(&ball, n).unwrap(),
                AdversarialConfig::new(AdversarialFamily::SingleSpike)
                    .build(&ball, n)
                    .unwrap(),
            ];
            let ests = [Estimator::QKstar { ball }, Estimator::adaptive()];
            let sups = sup_risk_multi(&ests, &family, &cfg, reps).unwrap();
            let at = sups[0]
                .per_theta
                .iter()
                .find(|r| r.theta_id == sups[0].argmax_theta_id)
                .unwrap();
            let b2 = at.mean_error * at.mean_error;
            let ratio = b2 / at.variance;
            let rel = ((2.0 * (at.variance / reps as f64).sqrt() / at.mean_error.abs()).powi(2)
                + 2.0 / (reps as f64 - 1.0))
                .sqrt();
            println!(
                "  n={n}: sup={:.4e}, ratio={:.2} (se {:.2}), ada/kstar={:.2}",
                sups[0].sup.mse,
                ratio,
                ratio * rel,
                sups[1].sup.mse / sups[0].sup.mse,
            );
            mses.push(sups[0].sup.mse);
            if n >= 2048 {
                ratios.push((n, ratio, ratio * rel));
            }
        }
        let fit = fit_slope(&grid, &mses, -2.0 / 3.0).unwrap();
        let crit3 = (-0.92..=-0.57).contains(&fit.slope);
        let mut crit6 = ratios.iter().all(|&(_, r, _)| r > 1.0);
        for w in ratios.windows(2) {
            let (_, r0, s0) = w[0];
            let (_, r1, s1) = w[1];
            if r1 < r0 - 2.0 * (s0 * s0 + s1 * s1).sqrt() {
                crit6 = false;
            }
        }
        println!(
            "  slope = {:.3} r2 = {:.3}  crit3 {}  crit6 {}",
            fit.slope,
            fit.r_squared,
            if crit3 { "PASS" } else { "FAIL" },
            if crit6 { "PASS" } else { "FAIL" },
        );
    }
}
