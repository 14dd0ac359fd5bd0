//! Metrics and report data: classification accuracy, topic keywords,
//! normalized heatmaps, and per-layer report rows.
//!
//! Keywords and heatmaps use factor columns rescaled to unit L1 norm; fitted
//! factors themselves are never normalized.

use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorization::fit_label_dictionary;
use crate::hierarchy::{LabelMatrix, LayerChain};

/// Row index of the largest entry in each column; the lowest index wins ties.
pub fn column_argmax(m: &Array2<f64>) -> Vec<usize> {
    m.columns()
        .into_iter()
        .map(|col| {
            let mut best = 0;
            for (i, &v) in col.iter().enumerate() {
                if v > col[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Predicted class per sample: argmax over rows of `B·S`.
pub fn classify(b: &Array2<f64>, s: &Array2<f64>) -> Result<Vec<usize>> {
    if b.ncols() != s.nrows() {
        return Err(Error::arg(format!(
            "label dictionary has {} topics but S has {}",
            b.ncols(),
            s.nrows()
        )));
    }
    Ok(column_argmax(&b.dot(s)))
}

/// Fraction of positions where `pred` equals `truth`.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::arg(format!(
            "{} predictions for {} labels",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::arg("accuracy of an empty prediction set"));
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Columns scaled to sum to one. Indices of all-zero columns (left as
/// zeros) are returned alongside.
pub fn l1_normalize_columns(m: &Array2<f64>) -> (Array2<f64>, Vec<usize>) {
    let mut out = m.clone();
    let mut zero = Vec::new();
    for (j, mut col) in out.columns_mut().into_iter().enumerate() {
        let total: f64 = col.iter().map(|v| v.abs()).sum();
        if total > 0.0 {
            col.mapv_inplace(|v| v / total);
        } else {
            zero.push(j);
        }
    }
    (out, zero)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Keyword {
    pub index: usize,
    pub token: String,
    /// Share of the topic's L1-normalized weight.
    pub weight: f64,
}

/// The `m` highest-weighted tokens of every topic column, descending; equal
/// weights keep the lower index first. `m` is clamped to the vocabulary.
pub fn top_keywords(
    word_factor: &Array2<f64>,
    vocab: &[String],
    m: usize,
) -> Result<Vec<Vec<Keyword>>> {
    let n = word_factor.nrows();
    if vocab.len() != n {
        return Err(Error::arg(format!(
            "vocabulary has {} tokens but the factor has {n} rows",
            vocab.len()
        )));
    }
    let m = if m > n {
        log::warn!("requested {m} keywords from a {n}-word vocabulary; using {n}");
        n
    } else {
        m
    };
    let (norm, _) = l1_normalize_columns(word_factor);
    Ok(norm
        .columns()
        .into_iter()
        .map(|col| {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| col[b].total_cmp(&col[a]).then(a.cmp(&b)));
            order
                .into_iter()
                .take(m)
                .map(|i| Keyword {
                    index: i,
                    token: vocab[i].clone(),
                    weight: col[i],
                })
                .collect()
        })
        .collect())
}

/// L1-column-normalized factor of one mode at one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub layer: usize,
    pub mode: usize,
    /// Rows are mode entities, columns are topics.
    pub values: Array2<f64>,
}

impl Heatmap {
    pub fn file_name(&self) -> String {
        format!("heatmap_layer{}_mode{}.csv", self.layer, self.mode + 1)
    }

    /// Comma-separated rows with a `topic_1..topic_r` header, written with
    /// shortest round-trip float formatting.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<String> = (1..=self.values.ncols()).map(|j| format!("topic_{j}")).collect();
        w.write_record(&header)?;
        for row in self.values.rows() {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Heatmaps of the requested zero-based `modes` at every layer of `chain`.
pub fn heatmaps(chain: &LayerChain, modes: &[usize]) -> Result<Vec<Heatmap>> {
    let order = chain.layers[0].factors.order();
    if let Some(&bad) = modes.iter().find(|&&m| m >= order) {
        return Err(Error::arg(format!("mode {bad} out of range for order {order}")));
    }
    let mut out = Vec::new();
    for (l, layer) in chain.layers.iter().enumerate() {
        for &mode in modes {
            let (values, zero) = l1_normalize_columns(layer.factors.factor(mode));
            if !zero.is_empty() {
                log::warn!("layer {l} mode {}: all-zero topic columns {zero:?}", mode + 1);
            }
            out.push(Heatmap {
                layer: l,
                mode,
                values,
            });
        }
    }
    Ok(out)
}

/// Writes each heatmap under `dir`, returning the paths written.
pub fn write_heatmaps(maps: &[Heatmap], dir: &Path) -> Result<Vec<PathBuf>> {
    maps.iter()
        .map(|h| {
            let path = dir.join(h.file_name());
            let file = std::fs::File::create(&path).map_err(|e| Error::from(e).in_file(&path))?;
            h.write_csv(std::io::BufWriter::new(file))
                .map_err(|e| e.in_file(&path))?;
            Ok(path)
        })
        .collect()
}

/// Classification accuracy at every layer of `chain`, using the transposed
/// factor of `sample_mode` as `S^(ℓ)`. Supervised chains use their stored
/// label dictionaries; otherwise `B^(ℓ)` is fitted to `S^(ℓ)` after the fact
/// with that layer's options.
pub fn chain_accuracy(
    chain: &LayerChain,
    labels: &LabelMatrix,
    sample_mode: usize,
) -> Result<Vec<f64>> {
    let truth = labels.classes();
    chain
        .layers
        .iter()
        .enumerate()
        .map(|(l, layer)| {
            if sample_mode >= layer.factors.order() {
                return Err(Error::arg(format!("sample mode {sample_mode} out of range")));
            }
            let s = layer.factors.factor(sample_mode).t().to_owned();
            let b = match chain.label_dictionaries.get(l) {
                Some(b) => b.clone(),
                None => fit_label_dictionary(labels.matrix(), &s, &chain.options[l])?,
            };
            accuracy(&classify(&b, &s)?, &truth)
        })
        .collect()
}

/// One line of a results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub layer: usize,
    pub rank: usize,
    pub relative_loss: f64,
    pub absolute_loss: f64,
    pub accuracy: Option<f64>,
    /// Whether the chain was fitted with label supervision.
    pub supervised: bool,
    pub seed: u64,
    pub wall_time_s: Option<f64>,
}

/// One row per layer of `chain`. `accuracy`, when given, holds one entry
/// per layer.
pub fn report_rows(chain: &LayerChain, accuracy: Option<&[Option<f64>]>) -> Vec<ReportRow> {
    chain
        .layers
        .iter()
        .enumerate()
        .map(|(l, layer)| ReportRow {
            method: chain.label(),
            layer: l,
            rank: layer.rank,
            relative_loss: layer.relative_loss,
            absolute_loss: layer.absolute_loss,
            accuracy: accuracy.and_then(|a| a.get(l).copied().flatten()),
            supervised: chain.supervision_lambda.is_some(),
            seed: chain.seed,
            wall_time_s: None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn classify_exact_labels() {
        let b = array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let s = array![[1.0, 0.0, 0.0, 1.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]];
        let pred = classify(&b, &s).unwrap();
        assert_eq!(pred, vec![0, 1, 2, 0]);
        assert_eq!(accuracy(&pred, &[0, 1, 2, 0]).unwrap(), 1.0);
        assert_eq!(accuracy(&pred, &[0, 1, 2, 1]).unwrap(), 0.75);
    }

    #[test]
    fn zero_column_predicts_class_zero() {
        let b = array![[1.0, 2.0], [3.0, 1.0]];
        let s = array![[0.0, 1.0], [0.0, 0.0]];
        assert_eq!(classify(&b, &s).unwrap()[0], 0);
    }

    #[test]
    fn classify_shape_mismatch() {
        assert!(classify(&Array2::zeros((2, 3)), &Array2::zeros((2, 4))).is_err());
        assert!(accuracy(&[0], &[0, 1]).is_err());
        assert!(accuracy(&[], &[]).is_err());
    }

    fn vocab(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("w{i}")).collect()
    }

    #[test]
    fn keywords_one_hot_and_ties() {
        let mut f = Array2::zeros((10, 2));
        f[[4, 0]] = 2.0;
        f[[3, 1]] = 1.0;
        f[[7, 1]] = 1.0;
        let kw = top_keywords(&f, &vocab(10), 2).unwrap();
        assert_eq!(kw[0][0].index, 4);
        assert_eq!(kw[0][0].weight, 1.0);
        let idx: Vec<usize> = kw[1].iter().map(|k| k.index).collect();
        assert_eq!(idx, vec![3, 7]);
        assert_eq!(top_keywords(&f, &vocab(10), 50).unwrap()[0].len(), 10);
        assert!(top_keywords(&f, &vocab(9), 2).is_err());
    }

    #[test]
    fn classify_brute_force_and_invariances() {
        let b = crate::test_util::random_nonneg(3, 4, 11);
        let s = crate::test_util::random_nonneg(4, 25, 12);
        let pred = classify(&b, &s).unwrap();
        for j in 0..25 {
            let scores: Vec<f64> = (0..3)
                .map(|c| (0..4).map(|t| b[[c, t]] * s[[t, j]]).sum())
                .collect();
            let best = (0..3).fold(0, |m, c| if scores[c] > scores[m] { c } else { m });
            assert_eq!(pred[j], best);
        }
        let mut scaled = s.clone();
        for (j, mut col) in scaled.columns_mut().into_iter().enumerate() {
            col *= 0.5 + j as f64;
        }
        assert_eq!(classify(&b, &scaled).unwrap(), pred);
        let truth: Vec<usize> = (0..25).map(|j| j % 3).collect();
        let perm = [2, 0, 1];
        let acc = accuracy(&pred, &truth).unwrap();
        let pp: Vec<usize> = pred.iter().map(|&p| perm[p]).collect();
        let pt: Vec<usize> = truth.iter().map(|&t| perm[t]).collect();
        assert_eq!(accuracy(&pp, &pt).unwrap(), acc);
    }

    #[test]
    fn keywords_match_full_sort() {
        let f = crate::test_util::random_nonneg(30, 3, 5);
        let kw = top_keywords(&f, &vocab(30), 7).unwrap();
        for (j, topic) in kw.iter().enumerate() {
            let mut idx: Vec<usize> = (0..30).collect();
            idx.sort_by(|&a, &b| f[[b, j]].partial_cmp(&f[[a, j]]).unwrap());
            let got: Vec<usize> = topic.iter().map(|k| k.index).collect();
            assert_eq!(got, idx[..7].to_vec());
        }
    }

    #[test]
    fn heatmap_rank_one_column_sums_to_one() {
        let v = array![[1.0], [3.0], [4.0]];
        let (n, zero) = l1_normalize_columns(&v);
        assert!(zero.is_empty());
        assert!((n.sum() - 1.0).abs() < 1e-15);
        let (_, zero) = l1_normalize_columns(&Array2::zeros((3, 2)));
        assert_eq!(zero, vec![0, 1]);
    }
}
