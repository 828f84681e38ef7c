use crate::domain::{Domain, GeneratedRegions, Region, RegionSpec};
use crate::error::{invalid, Result};

/// Materializes a region spec against `domain`, in the spec's order.
///
/// Prefix regions are named `prefix1, prefix2, …`, partition chunks
/// `part1, part2, …` and the whole-domain region `all`. Explicit regions keep
/// their keys.
pub fn make_regions(domain: &Domain, spec: &RegionSpec) -> Result<Vec<Region>> {
    let n = domain.len();
    match spec {
        RegionSpec::Generated(GeneratedRegions::All) => Ok(vec![Region::all("all", domain)?]),
        RegionSpec::Generated(GeneratedRegions::Prefix { sizes }) => {
            if sizes.is_empty() {
                return Err(invalid("prefix spec needs at least one size"));
            }
            sizes
                .iter()
                .enumerate()
                .map(|(i, &size)| {
                    if size > n {
                        return Err(invalid(format!("prefix of {size} exceeds {n} units")));
                    }
                    Region::from_indices(format!("prefix{}", i + 1), (0..size).collect(), domain)
                })
                .collect()
        }
        RegionSpec::Generated(GeneratedRegions::Partition { sizes }) => {
            if sizes.is_empty() {
                return Err(invalid("partition spec needs at least one size"));
            }
            let total: usize = sizes.iter().sum();
            if total > n {
                return Err(invalid(format!("partition of {total} exceeds {n} units")));
            }
            let mut start = 0;
            sizes
                .iter()
                .enumerate()
                .map(|(i, &size)| {
                    let r = Region::from_indices(
                        format!("part{}", i + 1),
                        (start..start + size).collect(),
                        domain,
                    );
                    start += size;
                    r
                })
                .collect()
        }
        RegionSpec::Explicit(map) => {
            if map.is_empty() {
                return Err(invalid("region file defines no regions"));
            }
            map.iter()
                .map(|(name, ids)| {
                    let ids = ids
                        .as_array()
                        .ok_or_else(|| invalid(format!("region {name:?} must be a list of ids")))?;
                    let ids = ids
                        .iter()
                        .map(|v| {
                            v.as_str().ok_or_else(|| {
                                invalid(format!("region {name:?}: ids must be strings"))
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Region::new(name.as_str(), ids, domain)
                })
                .collect()
        }
    }
}

/// Splits `units` rows into `k` consecutive chunks whose sizes differ by at most one.
pub fn even_partition(units: usize, k: usize) -> RegionSpec {
    let sizes = (0..k)
        .map(|i| units / k + usize::from(i < units % k))
        .collect();
    RegionSpec::partition(sizes)
}
