//! The same dataset under the risk-ratio model and the odds-ratio model at
//! equal `exp(gamma0)`.

use rrsens::prelude::*;

fn main() -> rrsens::Result<()> {
    let sim = generate_scenario(&ScenarioConfig::scenario_one(2000, 5), 0);
    let ds = &sim.dataset;
    let model = gps::fit_multinomial_logit(ds)?;
    let probs = gps::predict_gps(&model, ds.covariates(), false)?;
    let problem = SensitivityProblem::new(ds, &probs)?;
    let tau = ContrastSpec::pairwise(1, 2, 3)?;

    println!("{:>7} {:>22} {:>22}", "Gamma0", "risk ratio", "odds ratio");
    for ratio in [1.0, 1.25, 1.5, 2.0, 3.0] {
        let rr = problem.interval(&tau, &SensitivitySpec::from_ratio(ratio, ModelFamily::RiskRatio)?)?;
        let or = problem.interval(&tau, &SensitivitySpec::from_ratio(ratio, ModelFamily::OddsRatio)?)?;
        println!(
            "{ratio:>7} ({:8.3}, {:8.3})   ({:8.3}, {:8.3})",
            rr.point_lower, rr.point_upper, or.point_lower, or.point_upper
        );
    }
    Ok(())
}
