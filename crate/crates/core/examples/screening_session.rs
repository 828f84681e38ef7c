//! Drive a screening session the way the dashboard does: draw a batch,
//! label it, read estimates, stop when every interval is narrow enough.
//! The session is persisted and reloaded halfway through.

use std::sync::Arc;

use discount::domain::RegionSpec;
use discount::evaluation::{generate_synthetic, SyntheticSpec};
use discount::session::{LabelSubmission, LoadedDataset, SessionConfig, SessionService};

fn main() -> discount::Result<()> {
    let data = generate_synthetic(&SyntheticSpec::default())?;
    let oracle = data.oracle.clone().unwrap();
    let domain = Arc::new(data.domain);
    let dataset = LoadedDataset {
        name: "season".into(),
        domain: domain.clone(),
        regions: RegionSpec::partition(vec![91, 91, 91, 92]),
    };
    let state_dir = std::env::temp_dir().join("discount-screening-example");
    let service = SessionService::new(vec![dataset], Some(state_dir.clone()))?;

    let id = service.create_session(SessionConfig {
        stop_target: Some(0.05),
        seed: Some(3),
        ..SessionConfig::default()
    })?;
    println!("session {id} in {}", state_dir.display());

    for round in 1.. {
        let batch = service.draw_batch(&id, 20)?;
        // A unit drawn twice in one batch is labeled once.
        let mut seen = std::collections::HashSet::new();
        let labels: Vec<LabelSubmission> = batch
            .iter()
            .filter(|d| !d.labeled && seen.insert(d.unit_id.clone()))
            .map(|d| LabelSubmission {
                unit_id: d.unit_id.clone(),
                f: oracle.get(domain.index_of(&d.unit_id).unwrap()).unwrap(),
            })
            .collect();
        let est = service.submit_labels(&id, &labels)?;
        let widths: Vec<String> = est
            .regions
            .iter()
            .map(|r| {
                r.normalized_ci_width
                    .map_or("-".into(), |w| format!("{w:.3}"))
            })
            .collect();
        println!(
            "round {round:>2}: {:>3} labels, effort {:>5.2}%, widths {widths:?}",
            est.distinct_labels, est.effort_pct
        );
        if round == 3 {
            service.evict(&id);
            println!("          (reloaded from disk)");
        }
        if est.regions.iter().all(|r| r.stop_ok) {
            for r in &est.regions {
                println!(
                    "  {:<6} {:>9.0} ± {:.0}",
                    r.region,
                    r.value,
                    (r.ci_high.unwrap() - r.ci_low.unwrap()) / 2.0
                );
            }
            break;
        }
    }
    std::fs::remove_dir_all(&state_dir).ok();
    Ok(())
}
