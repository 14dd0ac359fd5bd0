//! Aggregating report rows over seeds and rendering result tables.

use std::fmt::Write as _;

use multihntf::eval::ReportRow;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stats {
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    /// `None` for an empty sample. The median of an even count is the mean
    /// of the two middle values.
    pub fn of(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        };
        Some(Stats {
            median,
            min: v[0],
            max: v[n - 1],
        })
    }
}

/// One method's statistics at one layer.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayerSummary {
    pub layer: usize,
    pub rank: usize,
    pub runs: usize,
    pub relative_loss: Stats,
    pub absolute_loss: Stats,
    pub accuracy: Option<Stats>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub supervised: bool,
    pub layers: Vec<LayerSummary>,
}

impl MethodSummary {
    pub fn display_name(&self) -> String {
        if self.supervised {
            format!("{} (supervised)", self.method)
        } else {
            self.method.clone()
        }
    }
}

/// Groups rows by (method, supervised) in order of first appearance, then
/// by layer.
pub fn summarize(rows: &[ReportRow]) -> Vec<MethodSummary> {
    let mut keys: Vec<(String, bool)> = Vec::new();
    for r in rows {
        let key = (r.method.clone(), r.supervised);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(method, supervised)| {
            let mine: Vec<&ReportRow> = rows
                .iter()
                .filter(|r| r.method == method && r.supervised == supervised)
                .collect();
            let depth = mine.iter().map(|r| r.layer + 1).max().unwrap_or(0);
            let layers = (0..depth)
                .filter_map(|l| {
                    let at: Vec<&&ReportRow> = mine.iter().filter(|r| r.layer == l).collect();
                    let rel: Vec<f64> = at.iter().map(|r| r.relative_loss).collect();
                    let abs: Vec<f64> = at.iter().map(|r| r.absolute_loss).collect();
                    let acc: Vec<f64> = at.iter().filter_map(|r| r.accuracy).collect();
                    Some(LayerSummary {
                        layer: l,
                        rank: at.first()?.rank,
                        runs: at.len(),
                        relative_loss: Stats::of(&rel)?,
                        absolute_loss: Stats::of(&abs)?,
                        accuracy: Stats::of(&acc),
                    })
                })
                .collect();
            MethodSummary {
                method,
                supervised,
                layers,
            }
        })
        .collect()
}

fn cell(s: &Stats, runs: usize) -> String {
    if runs > 1 {
        format!("{:.3} [{:.3}, {:.3}]", s.median, s.min, s.max)
    } else {
        format!("{:.3}", s.median)
    }
}

/// Relative loss per method and rank: median over seeds with `[min, max]`.
pub fn loss_table(summaries: &[MethodSummary]) -> String {
    let ranks: Vec<usize> = summaries
        .iter()
        .max_by_key(|s| s.layers.len())
        .map(|s| s.layers.iter().map(|l| l.rank).collect())
        .unwrap_or_default();
    let mut out = String::new();
    out.push_str("| Method |");
    for (l, r) in ranks.iter().enumerate() {
        let _ = write!(out, " r{l} = {r} |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(ranks.len()));
    out.push('\n');
    for s in summaries {
        let _ = write!(out, "| {} |", s.display_name());
        for l in 0..ranks.len() {
            match s.layers.get(l) {
                Some(ls) => {
                    let _ = write!(out, " {} |", cell(&ls.relative_loss, ls.runs));
                }
                None => out.push_str(" - |"),
            }
        }
        out.push('\n');
    }
    out
}

/// Reconstruction loss (absolute Frobenius) and accuracy at the final layer,
/// unsupervised next to supervised, one row per method.
pub fn supervision_table(summaries: &[MethodSummary]) -> String {
    let mut methods: Vec<&str> = Vec::new();
    for s in summaries {
        if !methods.contains(&s.method.as_str()) {
            methods.push(&s.method);
        }
    }
    let last = |method: &str, supervised: bool| {
        summaries
            .iter()
            .find(|s| s.method == method && s.supervised == supervised)
            .and_then(|s| s.layers.last())
    };
    let mut out = String::from(
        "| Method | Recon loss, unsup. | Recon loss, sup. | Accuracy, unsup. | Accuracy, sup. |\n\
         |---|---|---|---|---|\n",
    );
    for m in methods {
        let (u, s) = (last(m, false), last(m, true));
        let loss = |l: Option<&LayerSummary>| {
            l.map_or("-".to_string(), |l| format!("{:.2}", l.absolute_loss.median))
        };
        let acc = |l: Option<&LayerSummary>| {
            l.and_then(|l| l.accuracy)
                .map_or("-".to_string(), |a| format!("{:.3}", a.median))
        };
        let _ = writeln!(out, "| {m} | {} | {} | {} | {} |", loss(u), loss(s), acc(u), acc(s));
    }
    out
}

/// Long-form CSV of the summaries with full-precision values.
pub fn summary_csv(summaries: &[MethodSummary]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "method",
        "supervised",
        "layer",
        "rank",
        "runs",
        "relative_loss_median",
        "relative_loss_min",
        "relative_loss_max",
        "absolute_loss_median",
        "accuracy_median",
    ])?;
    for s in summaries {
        for l in &s.layers {
            w.write_record([
                s.method.clone(),
                s.supervised.to_string(),
                l.layer.to_string(),
                l.rank.to_string(),
                l.runs.to_string(),
                l.relative_loss.median.to_string(),
                l.relative_loss.min.to_string(),
                l.relative_loss.max.to_string(),
                l.absolute_loss.median.to_string(),
                l.accuracy.map_or(String::new(), |a| a.median.to_string()),
            ])?;
        }
    }
    Ok(w.into_inner()?)
}

/// Every report row as CSV.
pub fn rows_csv(rows: &[ReportRow]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record([
            "method",
            "layer",
            "rank",
            "relative_loss",
            "absolute_loss",
            "accuracy",
            "supervised",
            "seed",
            "wall_time_s",
        ])?;
    }
    Ok(w.into_inner()?)
}
