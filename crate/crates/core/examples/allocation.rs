//! Split a labeling budget over separate regions.

use discount::estimators::{allocation_objective, optimal_allocation};

fn main() -> discount::Result<()> {
    let masses = [120.0, 45.0, 15.0];
    let n = 20;
    let a = optimal_allocation(&masses, n)?;
    println!("masses {masses:?}, budget {n}");
    println!(
        "  real-valued  {:?}",
        a.real.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>()
    );
    println!(
        "  rounded      {:?}  Σ G²/n = {:.1}",
        a.largest_remainder,
        allocation_objective(&masses, &a.largest_remainder)
    );
    println!(
        "  best integer {:?}  Σ G²/n = {:.1}",
        a.integer,
        allocation_objective(&masses, &a.integer)
    );
    let even = [7, 7, 6];
    println!(
        "  even split   {even:?}  Σ G²/n = {:.1}",
        allocation_objective(&masses, &even)
    );
    Ok(())
}
