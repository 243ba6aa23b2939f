use serde::{Deserialize, Serialize};

use super::Metric;

/// One cell of a results table: accuracy of `metric` under best-of-`topk`
/// sample rejection for one experimental setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub setting: String,
    pub metric: Metric,
    pub topk: usize,
    /// Percentage in [0, 100].
    pub accuracy: f64,
    pub n: usize,
    pub seed: u64,
    pub config_hash: String,
}

/// A point on an accuracy curve (vs iteration, scoring-set size or
/// eval-set size).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub setting: String,
    pub series: String,
    pub x: usize,
    pub metric: Metric,
    pub topk: usize,
    pub accuracy: f64,
    pub n: usize,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub rows: Vec<MetricRow>,
    pub curves: Vec<CurvePoint>,
}

impl MetricsTable {
    pub fn accuracy(&self, setting: &str, metric: Metric, topk: usize, seed: u64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.setting == setting && r.metric == metric && r.topk == topk && r.seed == seed)
            .map(|r| r.accuracy)
    }

    pub fn curve(&self, setting: &str, series: &str, metric: Metric, topk: usize, seed: u64) -> Vec<(usize, f64)> {
        self.curves
            .iter()
            .filter(|c| {
                c.setting == setting && c.series == series && c.metric == metric && c.topk == topk && c.seed == seed
            })
            .map(|c| (c.x, c.accuracy))
            .collect()
    }

    pub fn extend(&mut self, other: MetricsTable) {
        self.rows.extend(other.rows);
        self.curves.extend(other.curves);
    }

    /// `setting,metric,topk,accuracy,n,seed,config_hash`
    pub fn rows_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["setting", "metric", "topk", "accuracy", "n", "seed", "config_hash"]).expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.setting.clone(),
                r.metric.name().to_string(),
                r.topk.to_string(),
                format!("{:.2}", r.accuracy),
                r.n.to_string(),
                r.seed.to_string(),
                r.config_hash.clone(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    /// `setting,series,x,metric,topk,accuracy,n,seed,config_hash`
    pub fn curves_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["setting", "series", "x", "metric", "topk", "accuracy", "n", "seed", "config_hash"])
            .expect("in-memory write");
        for c in &self.curves {
            w.write_record([
                c.setting.clone(),
                c.series.clone(),
                c.x.to_string(),
                c.metric.name().to_string(),
                c.topk.to_string(),
                format!("{:.2}", c.accuracy),
                c.n.to_string(),
                c.seed.to_string(),
                c.config_hash.clone(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    /// Generalization, functional equivalence and exact match at top-1
    /// and top-k, one line per setting and seed.
    pub fn render(&self) -> String {
        let mut keys: Vec<(String, u64)> = Vec::new();
        let mut ks: Vec<usize> = Vec::new();
        for r in &self.rows {
            if !keys.contains(&(r.setting.clone(), r.seed)) {
                keys.push((r.setting.clone(), r.seed));
            }
            if !ks.contains(&r.topk) {
                ks.push(r.topk);
            }
        }
        ks.sort();
        let mut out = format!("{:<28} {:>4}", "setting", "seed");
        for m in Metric::ALL {
            for k in &ks {
                out.push_str(&format!(" {:>10}", format!("{}@{k}", short(m))));
            }
        }
        out.push('\n');
        for (setting, seed) in keys {
            out.push_str(&format!("{setting:<28} {seed:>4}"));
            for m in Metric::ALL {
                for &k in &ks {
                    match self.accuracy(&setting, m, k, seed) {
                        Some(a) => out.push_str(&format!(" {a:>10.2}")),
                        None => out.push_str(&format!(" {:>10}", "-")),
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

fn short(m: Metric) -> &'static str {
    match m {
        Metric::Generalization => "gen",
        Metric::FunctionalEquivalence => "fe",
        Metric::ExactMatch => "em",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let t = MetricsTable {
            rows: vec![MetricRow {
                setting: "random".into(),
                metric: Metric::FunctionalEquivalence,
                topk: 50,
                accuracy: 65.5,
                n: 500,
                seed: 1,
                config_hash: "abc".into(),
            }],
            curves: vec![],
        };
        assert_eq!(
            t.rows_csv(),
            "setting,metric,topk,accuracy,n,seed,config_hash\nrandom,functional_equivalence,50,65.50,500,1,abc\n"
        );
        assert_eq!(t.accuracy("random", Metric::FunctionalEquivalence, 50, 1), Some(65.5));
        assert!(t.render().contains("fe@50"));
    }
}
