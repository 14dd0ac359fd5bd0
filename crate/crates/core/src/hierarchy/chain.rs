use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::MixingMatrix;
use crate::error::{Error, Result};
use crate::factorization::FitOptions;
use crate::matrix_serde::Rows;
use crate::tensor::{cp_reconstruct, frobenius_distance, relative_loss, DenseTensor, FactorSet};

pub const CHAIN_FORMAT_VERSION: u32 = 1;
const CHAIN_FORMAT_TAG: &str = "multihntf-chain";

/// Which algorithm produced a chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MultiHntf,
    Hnmf,
    HntfI,
    Hncpd,
    Ncpd,
    Nmf,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::MultiHntf,
        Method::Hnmf,
        Method::HntfI,
        Method::Hncpd,
        Method::Ncpd,
        Method::Nmf,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::MultiHntf => "multi-hntf",
            Method::Hnmf => "hnmf",
            Method::HntfI => "hntf-i",
            Method::Hncpd => "hncpd",
            Method::Ncpd => "ncpd",
            Method::Nmf => "nmf",
        }
    }

    /// Display name for tables; `lead_mode` is zero-based.
    pub fn label(self, lead_mode: Option<usize>) -> String {
        match self {
            Method::MultiHntf => "Multi-HNTF".into(),
            Method::Hnmf => "HNMF".into(),
            Method::HntfI => match lead_mode {
                Some(m) => format!("HNTF-{}", m + 1),
                None => "HNTF".into(),
            },
            Method::Hncpd => "Standard HNCPD".into(),
            Method::Ncpd => "Standard NCPD".into(),
            Method::Nmf => "NMF".into(),
        }
    }

    /// Whether the method only accepts order-2 input.
    pub fn matrix_only(self) -> bool {
        matches!(self, Method::Hnmf | Method::Nmf)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::arg(format!("unknown method {s:?}")))
    }
}

/// One layer of a hierarchy.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    /// Nominal rank `r_ℓ` of this layer.
    pub rank: usize,
    /// CP factors whose reconstruction approximates the data at this layer.
    pub factors: FactorSet,
    /// Mixing into the next layer, when the method has one.
    pub mixing: Option<MixingMatrix>,
    /// `‖X − X̂‖_F / ‖X‖_F`.
    pub relative_loss: f64,
    /// `‖X − X̂‖_F`.
    pub absolute_loss: f64,
}

impl Layer {
    pub(crate) fn evaluate(t: &DenseTensor, rank: usize, factors: FactorSet) -> Result<Layer> {
        let xhat = cp_reconstruct(&factors);
        Ok(Layer {
            rank,
            relative_loss: relative_loss(t, &xhat)?,
            absolute_loss: frobenius_distance(t, &xhat)?,
            factors,
            mixing: None,
        })
    }
}

/// A fitted hierarchy, from the finest layer (index 0) to the coarsest.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerChain {
    pub method: Method,
    pub seed: u64,
    pub ranks: Vec<usize>,
    pub options: Vec<FitOptions>,
    /// Zero-based mode placed first, for HNTF-i chains.
    pub lead_mode: Option<usize>,
    /// Supervision weight, for supervised chains.
    pub supervision_lambda: Option<f64>,
    pub layers: Vec<Layer>,
    /// Per-layer label dictionaries `B^(ℓ)` (`classes × r_ℓ`); empty when
    /// the chain is unsupervised.
    pub label_dictionaries: Vec<Array2<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainDoc {
    format: String,
    version: u32,
    method: Method,
    seed: u64,
    ranks: Vec<usize>,
    options: Vec<FitOptions>,
    #[serde(default)]
    lead_mode: Option<usize>,
    #[serde(default)]
    supervision_lambda: Option<f64>,
    layers: Vec<LayerDoc>,
    #[serde(default)]
    label_dictionaries: Vec<Rows>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDoc {
    rank: usize,
    factors: Vec<Rows>,
    mixing: Option<Rows>,
    relative_loss: f64,
    absolute_loss: f64,
}

impl LayerChain {
    pub(crate) fn new(method: Method, spec: &super::HierarchySpec) -> LayerChain {
        LayerChain {
            method,
            seed: spec.layer_options()[0].seed,
            ranks: spec.ranks().to_vec(),
            options: spec.layer_options().to_vec(),
            lead_mode: None,
            supervision_lambda: None,
            layers: Vec::with_capacity(spec.depth()),
            label_dictionaries: Vec::new(),
        }
    }

    pub fn label(&self) -> String {
        self.method.label(self.lead_mode)
    }

    pub fn final_layer(&self) -> &Layer {
        self.layers.last().expect("chains have at least one layer")
    }

    pub fn relative_losses(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.relative_loss).collect()
    }

    pub fn absolute_losses(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.absolute_loss).collect()
    }

    /// Relative losses recomputed from the stored factors against `t`.
    pub fn recompute_relative_losses(&self, t: &DenseTensor) -> Result<Vec<f64>> {
        self.layers
            .iter()
            .map(|l| relative_loss(t, &cp_reconstruct(&l.factors)))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ChainDoc {
            format: CHAIN_FORMAT_TAG.into(),
            version: CHAIN_FORMAT_VERSION,
            method: self.method,
            seed: self.seed,
            ranks: self.ranks.clone(),
            options: self.options.clone(),
            lead_mode: self.lead_mode,
            supervision_lambda: self.supervision_lambda,
            layers: self
                .layers
                .iter()
                .map(|l| LayerDoc {
                    rank: l.rank,
                    factors: l.factors.factors().iter().cloned().map(Rows).collect(),
                    mixing: l.mixing.as_ref().map(|w| Rows(w.as_array().clone())),
                    relative_loss: l.relative_loss,
                    absolute_loss: l.absolute_loss,
                })
                .collect(),
            label_dictionaries: self.label_dictionaries.iter().cloned().map(Rows).collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        Ok(s)
    }

    /// Parses and validates a chain document.
    pub fn from_json(text: &str) -> Result<LayerChain> {
        let doc: ChainDoc = serde_json::from_str(text)?;
        if doc.format != CHAIN_FORMAT_TAG {
            return Err(Error::arg(format!("not a chain document: format {:?}", doc.format)));
        }
        if doc.version != CHAIN_FORMAT_VERSION {
            return Err(Error::Unsupported(format!(
                "chain format version {} (supported: {CHAIN_FORMAT_VERSION})",
                doc.version
            )));
        }
        if doc.layers.is_empty() || doc.layers.len() != doc.ranks.len() {
            return Err(Error::arg(format!(
                "{} layers for {} ranks",
                doc.layers.len(),
                doc.ranks.len()
            )));
        }
        if doc.options.len() != doc.ranks.len() {
            return Err(Error::arg("one option set per layer is required"));
        }
        for o in &doc.options {
            o.validate()?;
        }
        let mut layers = Vec::with_capacity(doc.layers.len());
        let mut shape: Option<Vec<usize>> = None;
        for (l, ld) in doc.layers.into_iter().enumerate() {
            if ld.rank != doc.ranks[l] {
                return Err(Error::arg(format!(
                    "layer {l} has rank {} but ranks list {}",
                    ld.rank, doc.ranks[l]
                )));
            }
            let factors = FactorSet::new(ld.factors.into_iter().map(|r| r.0).collect())?;
            match &shape {
                Some(s) if *s != factors.shape() => {
                    return Err(Error::arg(format!("layer {l} factor shapes disagree")))
                }
                None => shape = Some(factors.shape()),
                _ => {}
            }
            let mixing = ld.mixing.map(|w| MixingMatrix::new(w.0)).transpose()?;
            if let Some(w) = &mixing {
                let next = doc.ranks.get(l + 1).copied();
                if w.from_rank() != ld.rank || Some(w.to_rank()) != next {
                    return Err(Error::arg(format!("layer {l} mixing matrix has the wrong shape")));
                }
            }
            for v in [ld.relative_loss, ld.absolute_loss] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::arg(format!("layer {l} has an invalid loss {v}")));
                }
            }
            layers.push(Layer {
                rank: ld.rank,
                factors,
                mixing,
                relative_loss: ld.relative_loss,
                absolute_loss: ld.absolute_loss,
            });
        }
        let label_dictionaries: Vec<Array2<f64>> =
            doc.label_dictionaries.into_iter().map(|r| r.0).collect();
        if !label_dictionaries.is_empty() && label_dictionaries.len() != layers.len() {
            return Err(Error::arg("label dictionaries must cover every layer"));
        }
        if let Some(lambda) = doc.supervision_lambda {
            if !(lambda.is_finite() && lambda >= 0.0) {
                return Err(Error::arg("supervision lambda must be finite and ≥ 0"));
            }
        }
        if let Some(m) = doc.lead_mode {
            if m >= layers[0].factors.order() {
                return Err(Error::arg(format!("lead mode {m} out of range")));
            }
        }
        Ok(LayerChain {
            method: doc.method,
            seed: doc.seed,
            ranks: doc.ranks,
            options: doc.options,
            lead_mode: doc.lead_mode,
            supervision_lambda: doc.supervision_lambda,
            layers,
            label_dictionaries,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.tag().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.tag()));
        }
        assert!("hals".parse::<Method>().is_err());
        assert_eq!(Method::HntfI.label(Some(2)), "HNTF-3");
    }

    #[test]
    fn rejects_malformed_documents() {
        assert!(LayerChain::from_json("{}").is_err());
        assert!(LayerChain::from_json("not json").is_err());
        let doc = r#"{"format":"multihntf-chain","version":1,"method":"nmf","seed":0,
            "ranks":[1],"options":[{}],"layers":[{"rank":1,"factors":[[[1.0]],[[1.0],[2.0]]],
            "mixing":null,"relative_loss":0.0,"absolute_loss":0.0}]}"#;
        let chain = LayerChain::from_json(doc).unwrap();
        assert_eq!(chain.layers[0].factors.shape(), vec![1, 2]);
        let bad = doc.replace("[[1.0],[2.0]]", "[[1.0],[-2.0]]");
        assert!(LayerChain::from_json(&bad).is_err());
        let bad = doc.replace("\"version\":1", "\"version\":9");
        assert!(matches!(LayerChain::from_json(&bad), Err(Error::Unsupported(_))));
        let bad = doc.replace("[[1.0],[2.0]]", "[[1.0],[2.0, 3.0]]");
        assert!(LayerChain::from_json(&bad).is_err());
    }
}
