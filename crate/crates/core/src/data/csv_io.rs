use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::dataset::ObservationalDataset;
use crate::error::{Error, Result};

/// One covariate column. A column with `levels` is categorical and expands
/// into `levels.len() - 1` indicator columns, the first level being the
/// reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateColumn {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
}

impl CovariateColumn {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            levels: None,
        }
    }

    pub fn categorical(name: impl Into<String>, levels: Vec<String>) -> Self {
        Self {
            name: name.into(),
            levels: Some(levels),
        }
    }

    /// Parses `name` or `name=lvl1|lvl2|...`.
    pub fn parse(spec: &str) -> Result<Self> {
        match spec.split_once('=') {
            None => Ok(Self::numeric(spec.trim())),
            Some((name, levels)) => {
                let levels: Vec<String> = levels.split('|').map(|s| s.trim().to_string()).collect();
                if levels.len() < 2 || levels.iter().any(String::is_empty) {
                    return Err(Error::Schema(format!(
                        "categorical covariate `{name}` needs at least two non-empty levels"
                    )));
                }
                Ok(Self::categorical(name.trim(), levels))
            }
        }
    }
}

/// Column roles for CSV ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub treatment: String,
    pub outcome: String,
    pub covariates: Vec<CovariateColumn>,
    /// Ordered treatment levels. When absent, arms are numbered by first
    /// appearance in the file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub treatment_levels: Option<Vec<String>>,
    /// When true the covariate list already carries an intercept and none is
    /// prepended.
    #[serde(default)]
    pub intercept_present: bool,
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<ObservationalDataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<ObservationalDataset> {
    if schema.covariates.is_empty() {
        return Err(Error::Schema("at least one covariate column is required".into()));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let column = |name: &str| {
        index
            .get(name)
            .copied()
            .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))
    };

    let treat_col = column(&schema.treatment)?;
    let outcome_col = column(&schema.outcome)?;
    let cov_cols = schema
        .covariates
        .iter()
        .map(|c| column(&c.name))
        .collect::<Result<Vec<_>>>()?;

    let mut names = Vec::new();
    if !schema.intercept_present {
        names.push("(intercept)".to_string());
    }
    for c in &schema.covariates {
        match &c.levels {
            None => names.push(c.name.clone()),
            Some(levels) => names.extend(levels[1..].iter().map(|l| format!("{}={}", c.name, l))),
        }
    }
    let d = names.len();

    let mut levels: Vec<String> = schema.treatment_levels.clone().unwrap_or_default();
    let fixed_levels = schema.treatment_levels.is_some();
    let mut treatment = Vec::new();
    let mut outcome = Vec::new();
    let mut values = Vec::new();

    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        let cell = |col: usize| record.get(col).unwrap_or("");

        let level = cell(treat_col);
        let arm = match levels.iter().position(|l| l == level) {
            Some(p) => p + 1,
            None if fixed_levels => {
                return Err(Error::Parse {
                    row,
                    column: schema.treatment.clone(),
                    message: format!("treatment level `{level}` is not among the declared levels"),
                })
            }
            None => {
                if level.is_empty() {
                    return Err(Error::Parse {
                        row,
                        column: schema.treatment.clone(),
                        message: "empty treatment cell".into(),
                    });
                }
                levels.push(level.to_string());
                levels.len()
            }
        };
        treatment.push(arm);
        outcome.push(parse_number(cell(outcome_col), row, &schema.outcome)?);

        if !schema.intercept_present {
            values.push(1.0);
        }
        for (c, &col) in schema.covariates.iter().zip(&cov_cols) {
            let raw = cell(col);
            match &c.levels {
                None => values.push(parse_number(raw, row, &c.name)?),
                Some(lv) => {
                    let pos = lv.iter().position(|l| l == raw).ok_or_else(|| Error::Parse {
                        row,
                        column: c.name.clone(),
                        message: format!("level `{raw}` is not among the declared levels"),
                    })?;
                    values.extend((1..lv.len()).map(|k| if k == pos { 1.0 } else { 0.0 }));
                }
            }
        }
    }

    let n = treatment.len();
    let covariates = DMatrix::from_row_slice(n, d, &values);
    let num_arms = levels.len();
    ObservationalDataset::new(covariates, treatment, outcome, num_arms)?
        .with_covariate_names(names)?
        .with_arm_labels(levels)
}

fn parse_number(raw: &str, row: usize, column: &str) -> Result<f64> {
    let v: f64 = raw.parse().map_err(|_| Error::Parse {
        row,
        column: column.to_string(),
        message: format!("`{raw}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            row,
            column: column.to_string(),
            message: format!("`{raw}` is not finite"),
        });
    }
    Ok(v)
}

/// Writes the dataset as CSV: `treatment,outcome,<covariates...>`, with the
/// original arm labels and shortest round-trip float formatting.
pub fn write_csv<W: Write>(ds: &ObservationalDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["treatment".to_string(), "outcome".to_string()];
    header.extend(ds.covariate_names().iter().cloned());
    w.write_record(&header)?;
    let labels = ds.arm_labels();
    for i in 0..ds.n() {
        let mut rec = Vec::with_capacity(header.len());
        rec.push(labels[ds.treatment()[i] - 1].clone());
        rec.push(ds.outcome()[i].to_string());
        rec.extend(ds.covariates().row(i).iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// The schema that re-reads the output of [`write_csv`] into an identical
/// dataset.
pub fn written_schema(ds: &ObservationalDataset) -> Schema {
    Schema {
        treatment: "treatment".into(),
        outcome: "outcome".into(),
        covariates: ds.covariate_names().iter().map(CovariateColumn::numeric).collect(),
        treatment_levels: Some(ds.arm_labels().to_vec()),
        intercept_present: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema(covs: &[&str]) -> Schema {
        Schema {
            treatment: "a".into(),
            outcome: "y".into(),
            covariates: covs.iter().map(|c| CovariateColumn::numeric(*c)).collect(),
            treatment_levels: None,
            intercept_present: false,
        }
    }

    #[test]
    fn binary_reencoding_and_intercept() {
        let csv = "a,y,x\n0,1.5,0.2\n1,2.0,0.4\n0,0.5,-1\n1,3,2\n";
        let ds = read_csv(csv.as_bytes(), &schema(&["x"])).unwrap();
        assert_eq!(ds.num_arms(), 2);
        assert_eq!(ds.treatment(), &[1, 2, 1, 2]);
        assert_eq!(ds.dim(), 2);
        assert!(ds.has_intercept());
        assert_eq!(ds.arm_labels(), &["0".to_string(), "1".to_string()]);
    }

    #[test]
    fn ordinal_levels_fix_the_order() {
        let csv = "a,y,x\nhigh,1,0\nlow,2,1\nmid,3,2\nlow,4,3\n";
        let mut s = schema(&["x"]);
        s.treatment_levels = Some(vec!["low".into(), "mid".into(), "high".into()]);
        let ds = read_csv(csv.as_bytes(), &s).unwrap();
        assert_eq!(ds.treatment(), &[3, 1, 2, 1]);
    }

    #[test]
    fn declared_level_without_units_is_a_validation_error() {
        let csv = "a,y,x\nlow,1,0\nhigh,2,1\n";
        let mut s = schema(&["x"]);
        s.treatment_levels = Some(vec!["low".into(), "mid".into(), "high".into()]);
        match read_csv(csv.as_bytes(), &s) {
            Err(Error::Validation(f)) => assert_eq!(f[0].message, "arm 2 has 0 units"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn na_outcome_is_a_parse_error_naming_the_row() {
        let csv = "a,y,x\n0,1,0\n1,NA,1\n";
        match read_csv(csv.as_bytes(), &schema(&["x"])) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "y");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_a_schema_error() {
        let csv = "a,y\n0,1\n";
        assert!(matches!(
            read_csv(csv.as_bytes(), &schema(&["x"])),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn categorical_one_hot_drops_reference() {
        let csv = "a,y,r\n0,1,urban\n1,2,rural\n0,3,rural\n1,1,urban\n";
        let mut s = schema(&[]);
        s.covariates = vec![CovariateColumn::categorical("r", vec!["urban".into(), "rural".into()])];
        let ds = read_csv(csv.as_bytes(), &s).unwrap();
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.covariate_names()[1], "r=rural");
        assert_eq!(ds.covariates().column(1).as_slice(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn covariate_flag_parsing() {
        assert_eq!(CovariateColumn::parse("age").unwrap(), CovariateColumn::numeric("age"));
        let c = CovariateColumn::parse("rel=muslim|other").unwrap();
        assert_eq!(c.levels.unwrap(), vec!["muslim", "other"]);
        assert!(CovariateColumn::parse("rel=muslim").is_err());
    }
}
