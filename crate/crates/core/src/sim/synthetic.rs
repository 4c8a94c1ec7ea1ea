//! A synthetic household survey with a four-level ordered education
//! treatment assigned by a forward continuation-ratio model and a count
//! outcome. Stands in for survey data that cannot be redistributed.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::data::{read_csv, CovariateColumn, ObservationalDataset, Schema};
use crate::error::Result;
use crate::gps::sigmoid;
use crate::rng;

pub const EDUCATION_LEVELS: [&str; 4] = ["none", "primary", "secondary", "higher"];
const RESIDENCE: [&str; 2] = ["rural", "urban"];
const RELIGION: [&str; 3] = ["muslim", "christian", "other"];
const WEALTH: [&str; 5] = ["poorest", "poorer", "middle", "richer", "richest"];
const HEAD_EDUCATION: [&str; 4] = ["none", "primary", "secondary", "higher"];

/// Stage intercepts of the continuation-ratio assignment.
const STAGE_INTERCEPTS: [f64; 3] = [0.4, 0.2, 0.9];

fn strings(levels: &[&str]) -> Vec<String> {
    levels.iter().map(|s| s.to_string()).collect()
}

pub fn survey_schema() -> Schema {
    Schema {
        treatment: "education".into(),
        outcome: "children".into(),
        covariates: vec![
            CovariateColumn::categorical("residence", strings(&RESIDENCE)),
            CovariateColumn::categorical("religion", strings(&RELIGION)),
            CovariateColumn::categorical("wealth", strings(&WEALTH)),
            CovariateColumn::numeric("age_at_marriage"),
            CovariateColumn::categorical("head_education", strings(&HEAD_EDUCATION)),
        ],
        treatment_levels: Some(strings(&EDUCATION_LEVELS)),
        intercept_present: false,
    }
}

fn pick<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Writes `n` survey records as CSV. Deterministic in `(n, seed)`.
pub fn write_survey<W: Write>(n: usize, seed: u64, writer: W) -> Result<()> {
    let mut rng = rng::stream(seed, &[0x5eed]);
    let age_dist = Normal::new(19.0, 3.0).expect("valid normal");
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "residence",
        "religion",
        "wealth",
        "age_at_marriage",
        "head_education",
        "education",
        "children",
    ])?;
    for _ in 0..n {
        let urban = pick(&mut rng, &[0.6, 0.4]);
        let religion = pick(&mut rng, &[0.5, 0.4, 0.1]);
        let wealth = if urban == 1 {
            pick(&mut rng, &[0.1, 0.15, 0.2, 0.25, 0.3])
        } else {
            pick(&mut rng, &[0.3, 0.25, 0.2, 0.15, 0.1])
        };
        let head = pick(&mut rng, &[0.4, 0.3, 0.2, 0.1]);
        let age: f64 = age_dist.sample(&mut rng);
        let age = (age.clamp(12.0, 35.0) * 10.0).round() / 10.0;

        // propensity to continue schooling
        let drive = 0.7 * urban as f64 + 0.35 * wealth as f64 + 0.08 * (age - 19.0) + 0.4 * head as f64
            - 0.3 * f64::from(religion == 2)
            - 1.0;
        let mut education = EDUCATION_LEVELS.len() - 1;
        for (stage, alpha) in STAGE_INTERCEPTS.iter().enumerate() {
            if rng.random::<f64>() < sigmoid(alpha - drive) {
                education = stage;
                break;
            }
        }

        let log_mean = 1.4 - 0.18 * education as f64 - 0.15 * urban as f64 - 0.06 * wealth as f64 - 0.04 * (age - 19.0)
            + 0.1 * f64::from(religion == 0);
        let children: f64 = Poisson::new(log_mean.exp()).expect("positive mean").sample(&mut rng);

        w.write_record([
            RESIDENCE[urban].to_string(),
            RELIGION[religion].to_string(),
            WEALTH[wealth].to_string(),
            age.to_string(),
            HEAD_EDUCATION[head].to_string(),
            EDUCATION_LEVELS[education].to_string(),
            children.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// The survey parsed through [`survey_schema`].
pub fn survey_dataset(n: usize, seed: u64) -> Result<ObservationalDataset> {
    let mut buf = Vec::new();
    write_survey(n, seed, &mut buf)?;
    read_csv(buf.as_slice(), &survey_schema())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn survey_has_all_arms_and_expected_columns() {
        let ds = survey_dataset(2000, 4).unwrap();
        assert_eq!(ds.num_arms(), 4);
        // intercept + 1 + 2 + 4 + 1 + 3
        assert_eq!(ds.dim(), 12);
        assert!(ds.arm_sizes().iter().all(|&s| s > 100), "{:?}", ds.arm_sizes());
        assert!(ds.outcome().iter().all(|&y| y >= 0.0 && y.fract() == 0.0));
    }
}
