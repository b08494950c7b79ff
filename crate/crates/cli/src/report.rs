//! Comparison tables over bench CSVs.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::bench::BenchRecord;

type Key = (String, usize, String);

fn medians(records: &[BenchRecord]) -> BTreeMap<Key, f64> {
    records
        .iter()
        .map(|r| ((r.sweep.clone(), r.value, r.stage.clone()), r.p50_ms))
        .collect()
}

/// Per batch size: median of `ls_ver_x_n` over median of `la_ver`.
pub fn aggregation_speedups(records: &[BenchRecord]) -> Vec<(usize, f64, f64, f64)> {
    let m = medians(records);
    let mut out = Vec::new();
    for ((sweep, value, stage), &la) in &m {
        if sweep != "batch" || stage != "la_ver" {
            continue;
        }
        if let Some(&each) = m.get(&(sweep.clone(), *value, "ls_ver_x_n".to_string())) {
            out.push((*value, la, each, each / la));
        }
    }
    out
}

/// Medians of `runs[0]`, then the aggregation speedup, then for every later
/// run the ratio of its median to the first run's on shared rows.
pub fn render(runs: &[(String, Vec<BenchRecord>)]) -> String {
    let mut out = String::new();
    let Some((first_name, first)) = runs.first() else {
        return out;
    };
    let base = medians(first);
    writeln!(out, "medians from {first_name}").unwrap();
    writeln!(out, "{:<8} {:>7} {:<16} {:>12}", "sweep", "value", "stage", "p50_ms").unwrap();
    for ((sweep, value, stage), p50) in &base {
        writeln!(out, "{sweep:<8} {value:>7} {stage:<16} {p50:>12.6}").unwrap();
    }
    let speedups = aggregation_speedups(first);
    if !speedups.is_empty() {
        writeln!(out, "\naggregate verification speedup (N x ls_ver / la_ver)").unwrap();
        writeln!(out, "{:>7} {:>12} {:>14} {:>9}", "batch", "la_ver_ms", "ls_ver_x_n_ms", "speedup").unwrap();
        for (n, la, each, ratio) in speedups {
            writeln!(out, "{n:>7} {la:>12.6} {each:>14.6} {ratio:>9.2}").unwrap();
        }
    }
    for (name, recs) in &runs[1..] {
        writeln!(out, "\nratio {name} / {first_name}").unwrap();
        for (key, p50) in medians(recs) {
            if let Some(&b) = base.get(&key) {
                writeln!(out, "{:<8} {:>7} {:<16} {:>9.3}", key.0, key.1, key.2, p50 / b).unwrap();
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(value: usize, stage: &str, p50: f64) -> BenchRecord {
        BenchRecord {
            sweep: "batch".into(),
            value,
            stage: stage.into(),
            mean_ms: p50,
            p50_ms: p50,
            p95_ms: p50,
            reps: 5,
            profile: "desk".into(),
            seed: 1,
        }
    }

    #[test]
    fn speedup_column_and_self_ratio() {
        let recs = vec![rec(100, "la_ver", 0.5), rec(100, "ls_ver_x_n", 40.0), rec(2, "la_sign", 1.0)];
        assert_eq!(aggregation_speedups(&recs), vec![(100, 0.5, 40.0, 80.0)]);
        let text = render(&[("a".into(), recs.clone()), ("b".into(), recs)]);
        assert!(text.contains("speedup"));
        assert!(text.contains("80.00"));
        let ratios: Vec<&str> = text.lines().skip_while(|l| !l.starts_with("ratio")).skip(1).collect();
        assert_eq!(ratios.len(), 3);
        assert!(ratios.iter().all(|l| l.ends_with("1.000")));
    }
}
