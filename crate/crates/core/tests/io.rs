//! Dataset and region files on disk.

use std::fs;

use discount::domain::{load_dataset, load_region_spec, save_dataset, ColumnMapping};
use discount::evaluation::make_regions;
use discount::Error;

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn three_row_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(&dir, "d.csv", "id,g,f\na,1,2\nb,2,2\nc,1,0\n");
    let ds = load_dataset(&path, &ColumnMapping::default()).unwrap();
    let eps = ds.domain.smoothing();
    assert_eq!(ds.domain.len(), 3);
    assert!((ds.domain.total_g() - (4.0 + 3.0 * eps)).abs() < 1e-12);
    let oracle = ds.oracle.unwrap();
    assert_eq!(oracle.len(), 3);
    assert_eq!(oracle.get(2), Some(0.0));
}

#[test]
fn partial_f_column_gives_no_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(&dir, "d.csv", "id,g,f\na,1,2\nb,2,\n");
    let ds = load_dataset(&path, &ColumnMapping::default()).unwrap();
    assert!(ds.oracle.is_none());
    assert_eq!(ds.domain.unit(0).oracle_f, Some(2.0));
}

#[test]
fn load_errors() {
    let dir = tempfile::tempdir().unwrap();
    let dup = write(&dir, "dup.csv", "id,g\na,1\nb,1\na,2\n");
    assert!(
        matches!(load_dataset(&dup, &ColumnMapping::default()), Err(Error::DuplicateId(id)) if id == "a")
    );

    let bad = write(&dir, "bad.csv", "id,g\na,1\nb,x\n");
    match load_dataset(&bad, &ColumnMapping::default()) {
        Err(Error::MalformedRow { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected malformed row, got {other:?}"),
    }

    let neg = write(&dir, "neg.csv", "id,g\na,-1\n");
    assert!(matches!(
        load_dataset(&neg, &ColumnMapping::default()),
        Err(Error::NegativeCount { .. })
    ));

    let missing = dir.path().join("nope.csv");
    assert!(load_dataset(&missing, &ColumnMapping::default()).is_err());
}

#[test]
fn custom_columns_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        &dir,
        "d.csv",
        "name,detections,truth,covariate\nx,3,4,0.5\ny,0,1,1.5\n",
    );
    let schema = ColumnMapping {
        id: "name".into(),
        g: "detections".into(),
        f: "truth".into(),
        ..ColumnMapping::default()
    };
    let ds = load_dataset(&path, &schema).unwrap();
    assert_eq!(ds.domain.covariates(), Some(vec![0.5, 1.5]));

    let out = dir.path().join("out.csv");
    save_dataset(&out, &ds.domain).unwrap();
    let again = load_dataset(&out, &ColumnMapping::default()).unwrap();
    assert_eq!(again.domain.units(), ds.domain.units());
}

#[test]
fn region_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(&dir, "d.csv", "id,g\na,1\nb,2\nc,1\nd,0\n");
    let ds = load_dataset(&data, &ColumnMapping::default()).unwrap();

    let explicit = write(
        &dir,
        "r.json",
        r#"{"left": ["a", "b"], "right": ["c", "d"]}"#,
    );
    let regions = make_regions(&ds.domain, &load_region_spec(&explicit).unwrap()).unwrap();
    let names: Vec<&str> = regions.iter().map(|r| r.name()).collect();
    assert_eq!(names, ["left", "right"]);
    assert_eq!(regions[1].members(), &[2, 3]);

    let prefix = write(&dir, "p.json", r#"{"type": "prefix", "sizes": [1, 3]}"#);
    let regions = make_regions(&ds.domain, &load_region_spec(&prefix).unwrap()).unwrap();
    assert_eq!(regions[1].members(), &[0, 1, 2]);

    let partition = write(&dir, "q.json", r#"{"type": "partition", "sizes": [3, 1]}"#);
    let regions = make_regions(&ds.domain, &load_region_spec(&partition).unwrap()).unwrap();
    assert_eq!(regions[1].members(), &[3]);

    let unknown = write(&dir, "u.json", r#"{"x": ["zz"]}"#);
    assert!(matches!(
        make_regions(&ds.domain, &load_region_spec(&unknown).unwrap()),
        Err(Error::UnknownUnit(_))
    ));
    let too_big = write(&dir, "t.json", r#"{"type": "partition", "sizes": [3, 2]}"#);
    assert!(make_regions(&ds.domain, &load_region_spec(&too_big).unwrap()).is_err());
    let not_json = write(&dir, "n.json", "[1, 2]");
    assert!(load_region_spec(&not_json).is_err());
}
