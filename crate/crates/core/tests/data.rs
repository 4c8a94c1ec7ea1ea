use nalgebra::DMatrix;
use proptest::prelude::*;

use rrsens::data::{read_csv, write_csv, written_schema, CovariateColumn, ObservationalDataset, Schema, Severity};
use rrsens::Error;

fn dataset_strategy() -> impl Strategy<Value = ObservationalDataset> {
    (2usize..5, 1usize..4, 4usize..40).prop_flat_map(|(j, p, n)| {
        (
            proptest::collection::vec(-1e6f64..1e6, n * p),
            // every arm present: first j rows cycle through the arms
            proptest::collection::vec(1..=j, n - j.min(n)),
            proptest::collection::vec(-1e3f64..1e3, n),
        )
            .prop_map(move |(x, extra, y)| {
                let mut t: Vec<usize> = (1..=j).collect();
                t.extend(extra);
                t.truncate(n);
                let mut cov = DMatrix::from_element(n, p + 1, 1.0);
                for i in 0..n {
                    for k in 0..p {
                        cov[(i, k + 1)] = x[i * p + k];
                    }
                }
                let labels = (1..=j).map(|a| format!("arm{a}")).collect();
                ObservationalDataset::new(cov, t, y, j)
                    .unwrap()
                    .with_arm_labels(labels)
                    .unwrap()
            })
    })
}

proptest! {
    #[test]
    fn csv_round_trip_is_exact(ds in dataset_strategy()) {
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), &written_schema(&ds)).unwrap();
        prop_assert_eq!(back, ds);
    }
}

fn schema(covariates: Vec<CovariateColumn>) -> Schema {
    Schema {
        treatment: "t".into(),
        outcome: "y".into(),
        covariates,
        treatment_levels: None,
        intercept_present: false,
    }
}

#[test]
fn categorical_columns_expand_against_the_reference_level() {
    let csv = "t,y,colour,w\nb,1,red,0.5\na,2,blue,1.5\nb,0,green,2\na,4,red,-1\n";
    let cols = vec![
        CovariateColumn::parse("colour=red|green|blue").unwrap(),
        CovariateColumn::numeric("w"),
    ];
    let ds = read_csv(csv.as_bytes(), &schema(cols)).unwrap();
    assert_eq!(
        ds.covariate_names(),
        ["(intercept)", "colour=green", "colour=blue", "w"]
    );
    assert_eq!(
        ds.covariates().row(1).iter().copied().collect::<Vec<_>>(),
        [1.0, 0.0, 1.0, 1.5]
    );
    assert_eq!(
        ds.covariates().row(2).iter().copied().collect::<Vec<_>>(),
        [1.0, 1.0, 0.0, 2.0]
    );
    // arms in order of first appearance
    assert_eq!(ds.arm_labels(), ["b", "a"]);
    assert_eq!(ds.treatment(), [1, 2, 1, 2]);
    assert!(ds.has_intercept());
}

#[test]
fn declared_treatment_levels_fix_the_arm_order() {
    let csv = "t,y,w\nhigh,1,0\nlow,2,1\nmid,0,2\nlow,4,3\n";
    let mut s = schema(vec![CovariateColumn::numeric("w")]);
    s.treatment_levels = Some(vec!["low".into(), "mid".into(), "high".into()]);
    let ds = read_csv(csv.as_bytes(), &s).unwrap();
    assert_eq!(ds.treatment(), [3, 1, 2, 1]);
    assert_eq!(ds.arm_sizes(), [2, 1, 1]);
}

#[test]
fn parse_errors_name_row_and_column() {
    let s = schema(vec![CovariateColumn::numeric("w")]);
    let err = read_csv("t,y,w\n1,2,3\n2,abc,1\n".as_bytes(), &s).unwrap_err();
    match err {
        Error::Parse { row, column, .. } => assert_eq!((row, column.as_str()), (2, "y")),
        e => panic!("unexpected {e}"),
    }
    let err = read_csv("t,y,w\n1,2,inf\n2,1,1\n".as_bytes(), &s).unwrap_err();
    assert!(matches!(err, Error::Parse { row: 1, .. }), "{err}");

    let err = read_csv("t,y\n1,2\n".as_bytes(), &s).unwrap_err();
    assert!(err.to_string().contains("missing column `w`"), "{err}");

    let cat = schema(vec![CovariateColumn::parse("c=a|b").unwrap()]);
    let err = read_csv("t,y,c\n1,1,a\n2,1,z\n".as_bytes(), &cat).unwrap_err();
    assert!(err.to_string().contains("`z`"), "{err}");

    let mut fixed = schema(vec![CovariateColumn::numeric("w")]);
    fixed.treatment_levels = Some(vec!["x".into(), "y".into()]);
    assert!(read_csv("t,y,w\nx,1,1\nq,1,1\n".as_bytes(), &fixed).is_err());

    assert!(CovariateColumn::parse("c=a").is_err());
    assert!(matches!(
        read_csv("t,y\n".as_bytes(), &schema(vec![])),
        Err(Error::Schema(_))
    ));
}

#[test]
fn single_arm_file_fails_validation() {
    let s = schema(vec![CovariateColumn::numeric("w")]);
    let err = read_csv("t,y,w\n1,2,3\n1,1,1\n".as_bytes(), &s).unwrap_err();
    match err {
        Error::Validation(findings) => {
            assert!(findings.iter().any(|f| f.message.contains("at least 2 are required")));
        }
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn validation_reports_every_problem() {
    let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, 1.0, f64::NAN, 1.0, 2.0]);
    let ds = ObservationalDataset::new_unchecked(x, vec![1, 4, 1], vec![1.0, 2.0, f64::INFINITY], 3);
    let findings = ds.validate();
    let messages: Vec<&str> = findings.iter().map(|f| f.message.as_str()).collect();
    assert!(
        messages.iter().any(|m| m.contains("row 2: treatment label 4")),
        "{messages:?}"
    );
    assert!(messages.iter().any(|m| m.contains("arm 2 has 0 units")), "{messages:?}");
    assert!(
        messages.iter().any(|m| m.contains("row 3: outcome is inf")),
        "{messages:?}"
    );
    assert!(messages.iter().any(|m| m.contains("row 2: covariate")), "{messages:?}");
    assert!(findings
        .iter()
        .all(|f| f.severity == Severity::Error || f.severity == Severity::Warning));

    let err = ObservationalDataset::new(DMatrix::from_element(2, 1, 1.0), vec![1, 2], vec![0.0], 2).unwrap_err();
    assert!(err.to_string().contains("outcome has 1 rows"), "{err}");
}

#[test]
fn row_selection_keeps_labels() {
    let ds = ObservationalDataset::new(
        DMatrix::from_fn(4, 2, |i, k| if k == 0 { 1.0 } else { i as f64 }),
        vec![1, 2, 2, 1],
        vec![0.0, 1.0, 2.0, 3.0],
        2,
    )
    .unwrap()
    .with_arm_labels(vec!["c".into(), "t".into()])
    .unwrap();
    let sub = ds.select_rows(&[3, 3, 1]);
    assert_eq!(sub.treatment(), [1, 1, 2]);
    assert_eq!(sub.outcome(), [3.0, 3.0, 1.0]);
    assert_eq!(sub.arm_labels(), ["c", "t"]);
    assert_eq!(ds.arm_rows(2), [1, 2]);
}
