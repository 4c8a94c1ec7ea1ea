//! True partially identified intervals of the simulation design, computed on
//! a large population with the known GPS.
//!
//! cargo run --release --example oracle_intervals -- [N] [I|II]

use rrsens::data::ContrastSpec;
use rrsens::sim::{oracle_grid, Dgp, GAMMA0_GRID, NUM_ARMS};

fn main() -> rrsens::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(1_000_000, |s| s.parse().expect("population size"));
    let dgp = match args.next().as_deref() {
        Some("II") => Dgp::scenario_two(),
        _ => Dgp::scenario_one(),
    };
    let contrasts = ContrastSpec::all_pairs(NUM_ARMS);
    let grid = oracle_grid(&dgp, &contrasts, &GAMMA0_GRID, n, 2024)?;
    println!("k2 = {}, k3 = {}, N = {n}", dgp.k2, dgp.k3);
    for (c, rows) in contrasts.iter().zip(&grid) {
        for iv in rows {
            println!(
                "{:8} gamma0 = {:<4} ({:7.3}, {:7.3})  se ({:.4}, {:.4})",
                c.label(),
                iv.gamma0,
                iv.lower,
                iv.upper,
                iv.se_lower,
                iv.se_upper
            );
        }
    }
    Ok(())
}
