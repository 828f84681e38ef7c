//! Round-trip a dataset CSV and build regions from a region file.

use discount::domain::{load_dataset, parse_region_spec, save_dataset, ColumnMapping};
use discount::evaluation::{generate_synthetic, make_regions, SyntheticSpec};

fn main() -> discount::Result<()> {
    let data = generate_synthetic(&SyntheticSpec {
        units: 12,
        ..SyntheticSpec::default()
    })?;
    let path = std::env::temp_dir().join("discount-example.csv");
    save_dataset(&path, &data.domain)?;
    print!("{}", std::fs::read_to_string(&path)?);

    let loaded = load_dataset(&path, &ColumnMapping::default())?;
    assert_eq!(loaded.domain.units(), data.domain.units());
    println!(
        "\nreloaded {} units, oracle present: {}",
        loaded.domain.len(),
        loaded.oracle.is_some()
    );

    for text in [
        r#"{"type": "prefix", "sizes": [3, 6, 12]}"#,
        r#"{"type": "partition", "sizes": [4, 4, 4]}"#,
        r#"{"early": ["u00", "u01"], "late": ["u10", "u11"]}"#,
    ] {
        let regions = make_regions(&loaded.domain, &parse_region_spec(text)?)?;
        let summary: Vec<String> = regions
            .iter()
            .map(|r| format!("{}({})", r.name(), r.len()))
            .collect();
        println!("{text}\n  -> {}", summary.join(", "));
    }
    std::fs::remove_file(&path)?;
    Ok(())
}
