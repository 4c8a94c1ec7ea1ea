//! Three-arm treatment: multinomial-logit GPS and every pairwise contrast
//! over a sweep of sensitivity levels, from one prepared problem.

use rrsens::prelude::*;
use rrsens::sim::GAMMA0_GRID;

fn main() -> rrsens::Result<()> {
    let sim = generate_scenario(&ScenarioConfig::scenario_one(3000, 11), 0);
    let ds = &sim.dataset;
    println!("arm sizes {:?}", ds.arm_sizes());

    let model = gps::fit_multinomial_logit(ds)?;
    let probs = gps::predict_gps(&model, ds.covariates(), false)?;
    print!("{}", gps::gps_range(&probs));

    let problem = SensitivityProblem::new(ds, &probs)?;
    for c in ContrastSpec::all_pairs(3) {
        println!("{}: SIPW estimate {:.4}", c.label(), problem.point_estimate(&c)?);
        for g in GAMMA0_GRID {
            let est = problem.interval(&c, &SensitivitySpec::risk_ratio(g)?)?;
            println!("  gamma0 = {g:<4} ({:7.3}, {:7.3})", est.point_lower, est.point_upper);
        }
    }

    // a non-pairwise contrast: arm 1 against the average of arms 2 and 3
    let avg = ContrastSpec::new(vec![1.0, -0.5, -0.5])?.with_label("1_vs_rest");
    let est = problem.interval(&avg, &SensitivitySpec::risk_ratio(0.2)?)?;
    println!(
        "{} at gamma0 = 0.2: ({:.3}, {:.3})",
        avg.label(),
        est.point_lower,
        est.point_upper
    );
    Ok(())
}
