//! The core optimization on its own: the extreme values of a weighted mean
//! when each weight may move within a box, and the weights that attain them.

use rrsens::sens::{compute_z_bounds, extremize_weighted_mean, Direction, SensitivitySpec};

fn main() -> rrsens::Result<()> {
    let y = [3.0, 1.0, 0.0, 2.5, 1.5];
    let e = [0.2, 0.5, 0.7, 0.4, 0.9];
    let u: Vec<f64> = e.iter().map(|e| 1.0 / e).collect();
    let bounds = compute_z_bounds(&e, &SensitivitySpec::risk_ratio(0.5)?)?;
    for dir in [Direction::Min, Direction::Max] {
        let r = extremize_weighted_mean(&y, &u, &bounds.z_lo, &bounds.z_hi, dir)?;
        println!("{dir:?}: {:.4} with z = {:?}", r.value, r.z);
    }
    Ok(())
}
