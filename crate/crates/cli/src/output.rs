//! Result rows, CSV emission and output-directory handling.
//!
//! The CSV column order is fixed (`experiment,sampler,dim,metric,value,
//! replicate,seed`), rows are stable-sorted on (sampler, dim, replicate,
//! metric), values are written with shortest-roundtrip precision and LF line
//! endings — re-running a seeded experiment reproduces the file byte for
//! byte regardless of worker count.

use crate::HarnessResult;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// One (experiment, sampler, dimension, metric, replicate) observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub sampler: String,
    pub dim: usize,
    pub metric: String,
    pub value: f64,
    pub replicate: usize,
    pub seed: u64,
}

/// Render rows to CSV text in the canonical order.
pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.sampler, a.dim, a.replicate, &a.metric).cmp(&(&b.sampler, b.dim, b.replicate, &b.metric))
    });
    let mut out = String::from("experiment,sampler,dim,metric,value,replicate,seed\n");
    for r in sorted {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.experiment, r.sampler, r.dim, r.metric, r.value, r.replicate, r.seed
        )
        .expect("string write");
    }
    out
}

/// Write CSV and SVG artifacts under `dir`; returns the paths written.
pub fn emit_outputs(
    rows: &[ResultRow],
    plots: &[(String, String)],
    dir: &Path,
) -> HarnessResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let csv_path = dir.join("results.csv");
    std::fs::write(&csv_path, rows_to_csv(rows))?;
    written.push(csv_path);
    for (name, svg) in plots {
        let path = dir.join(name);
        std::fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}

/// Group rows into per-(sampler, metric) series over `dim`, averaging over
/// replicates; used by the sweep plots.
pub fn mean_series_over_dim(rows: &[ResultRow], metric: &str) -> Vec<(String, Vec<(f64, f64)>)> {
    use std::collections::BTreeMap;
    let mut acc: BTreeMap<(String, usize), (f64, usize)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.metric == metric) {
        let slot = acc.entry((r.sampler.clone(), r.dim)).or_insert((0.0, 0));
        slot.0 += r.value;
        slot.1 += 1;
    }
    let mut by_sampler: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for ((sampler, dim), (sum, n)) in acc {
        by_sampler
            .entry(sampler)
            .or_default()
            .push((dim as f64, sum / n as f64));
    }
    by_sampler.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(s: &str, dim: usize, metric: &str, value: f64, rep: usize) -> ResultRow {
        ResultRow {
            experiment: "test".into(),
            sampler: s.into(),
            dim,
            metric: metric.into(),
            value,
            replicate: rep,
            seed: 9,
        }
    }

    #[test]
    fn csv_is_sorted_and_full_precision() {
        let rows = vec![
            row("b", 2, "ess", 0.1000000000000000055511151231257827, 1),
            row("a", 2, "ess", 0.25, 0),
            row("a", 2, "ess", 0.5, 1),
        ];
        let csv = rows_to_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "experiment,sampler,dim,metric,value,replicate,seed");
        assert!(lines[1].starts_with("test,a,2,ess,0.25,0"));
        assert!(lines[2].starts_with("test,a,2,ess,0.5,1"));
        // shortest round-trip representation preserves the exact bits
        assert!(lines[3].contains(",0.1,"), "{}", lines[3]);
        assert!(csv.ends_with('\n'));
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn empty_rows_give_header_only() {
        assert_eq!(
            rows_to_csv(&[]),
            "experiment,sampler,dim,metric,value,replicate,seed\n"
        );
    }

    #[test]
    fn series_average_over_replicates() {
        let rows = vec![
            row("a", 2, "ess", 0.2, 0),
            row("a", 2, "ess", 0.4, 1),
            row("a", 5, "ess", 0.6, 0),
            row("a", 5, "tv", 0.9, 0),
        ];
        let series = mean_series_over_dim(&rows, "ess");
        assert_eq!(series.len(), 1);
        assert_eq!(series[0].0, "a");
        assert_eq!(series[0].1, vec![(2.0, 0.30000000000000004), (5.0, 0.6)]);
    }
}
