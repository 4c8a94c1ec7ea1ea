//! A small replicate study on the adequate-overlap design: bias in SD units,
//! non-coverage and medians against the population truth.
//!
//! cargo run --release --example simulation_study -- [reps] [boot]

use rrsens::data::ContrastSpec;
use rrsens::sim::{run_study, ScenarioConfig};

fn main() -> rrsens::Result<()> {
    let mut args = std::env::args().skip(1);
    let reps = args.next().map_or(50, |s| s.parse().expect("reps"));
    let boot = args.next().map_or(100, |s| s.parse().expect("boot"));
    let mut config = ScenarioConfig::scenario_one(750, 2024).with_reps(reps, boot);
    config.oracle_n = 200_000;
    let report = run_study(&config, &[ContrastSpec::pairwise(1, 2, 3)?])?;
    println!(
        "{} replicates, min fitted GPS {:.4}",
        report.completed_replicates, report.min_fitted_gps
    );
    for r in &report.rows {
        println!(
            "gamma0 = {:<4} truth ({:6.3}, {:6.3})  median ({:6.3}, {:6.3})  non-coverage {:.3}",
            r.gamma0, r.true_lower, r.true_upper, r.median_point_lower, r.median_point_upper, r.non_coverage
        );
    }
    Ok(())
}
