//! Fitting jobs: one (method, lead mode, seed, supervision) combination each.

use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::{bail, Context};
use multihntf::data::{gen_synthetic, load_labels, load_tensor, Labels};
use multihntf::eval::chain_accuracy;
use multihntf::hierarchy::{
    hnmf, hnmf_supervised, hntf_i, independent_ranks, multi_hntf, multi_hntf_supervised,
    standard_hncpd,
};
use multihntf::{DenseTensor, HierarchySpec, LayerChain, Method};
use rayon::prelude::*;

use crate::config::RunConfig;

/// Seed offset between restarts of one run seed.
const RESTART_STRIDE: u64 = 0xD1B5_4A32_D192_ED03;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Job {
    pub method: Method,
    /// Zero-based, `hntf-i` only.
    pub lead_mode: Option<usize>,
    pub seed: u64,
    pub supervised: bool,
}

impl Job {
    pub fn label(&self) -> String {
        self.method.label(self.lead_mode)
    }

    /// File stem for this job's chain, e.g. `hntf-2-supervised-seed3`.
    pub fn stem(&self) -> String {
        let mut s = match self.lead_mode {
            Some(m) => format!("hntf-{}", m + 1),
            None => self.method.tag().to_string(),
        };
        if self.supervised {
            s.push_str("-supervised");
        }
        s.push_str(&format!("-seed{}", self.seed));
        s
    }
}

pub struct JobOutput {
    pub chain: LayerChain,
    /// Per-mode HNMF chains of a standard HNCPD fit.
    pub mode_chains: Vec<LayerChain>,
    /// Per-layer accuracy, when labels are configured.
    pub accuracy: Option<Vec<f64>>,
    pub wall_time_s: f64,
}

/// Data shared by every job of a run.
pub struct Workspace {
    /// Tensor per run seed when synthetic input is resampled; otherwise a
    /// single entry under key 0 used by every seed.
    tensors: BTreeMap<u64, DenseTensor>,
    resample: bool,
    pub labels: Option<Labels>,
    /// Zero-based.
    pub sample_mode: usize,
    pub lambda: Option<f64>,
}

impl Workspace {
    pub fn load(cfg: &RunConfig) -> anyhow::Result<Workspace> {
        let Some(input) = &cfg.input else {
            bail!("input: this command needs an input section");
        };
        let mut tensors = BTreeMap::new();
        match (&input.path, &input.synthetic) {
            (Some(path), _) => {
                tensors.insert(0, load_tensor(path)?);
            }
            (None, Some(spec)) if input.resample => {
                for &seed in &cfg.seeds {
                    let spec = spec.clone().with_seed(seed);
                    tensors.insert(seed, gen_synthetic(&spec)?.tensor);
                }
            }
            (None, Some(spec)) => {
                tensors.insert(0, gen_synthetic(spec)?.tensor);
            }
            (None, None) => bail!("input: needs path or synthetic"),
        }
        let (labels, sample_mode, lambda) = match &cfg.supervision {
            Some(s) => (Some(load_labels(&s.labels)?), s.sample_mode - 1, s.lambda),
            None => (None, 1, None),
        };
        let ws = Workspace {
            tensors,
            resample: input.resample,
            labels,
            sample_mode,
            lambda,
        };
        if let Some(l) = &ws.labels {
            let Some(&n) = ws.any_tensor().shape().get(sample_mode) else {
                bail!("supervision.sample_mode: mode {} out of range", sample_mode + 1);
            };
            if l.matrix.num_samples() != n {
                bail!(
                    "supervision.labels: {} labelled samples but mode {} has {n} entries",
                    l.matrix.num_samples(),
                    sample_mode + 1
                );
            }
        }
        Ok(ws)
    }

    fn any_tensor(&self) -> &DenseTensor {
        self.tensors.values().next().expect("at least one tensor")
    }

    pub fn order(&self) -> usize {
        self.any_tensor().order()
    }

    pub fn tensor(&self, seed: u64) -> &DenseTensor {
        if self.resample {
            &self.tensors[&seed]
        } else {
            self.any_tensor()
        }
    }
}

fn fit_once(
    ws: &Workspace,
    job: &Job,
    spec: &HierarchySpec,
) -> multihntf::Result<(LayerChain, Vec<LayerChain>)> {
    let t = ws.tensor(job.seed);
    if job.supervised {
        let labels = &ws.labels.as_ref().expect("checked by caller").matrix;
        let lambda = ws.lambda.expect("checked by caller");
        let chain = match job.method {
            Method::MultiHntf => multi_hntf_supervised(t, labels, lambda, spec)?,
            Method::Hnmf => hnmf_supervised(t, labels, lambda, spec)?,
            other => {
                return Err(multihntf::Error::Unsupported(format!(
                    "{other} has no supervised variant"
                )))
            }
        };
        return Ok((chain, Vec::new()));
    }
    Ok(match job.method {
        Method::MultiHntf => (multi_hntf(t, spec)?, Vec::new()),
        Method::Hnmf => (hnmf(t, spec)?, Vec::new()),
        Method::HntfI => (hntf_i(t, spec, job.lead_mode.unwrap_or(0))?, Vec::new()),
        Method::Hncpd => {
            let r = standard_hncpd(t, spec)?;
            (r.chain, r.mode_chains)
        }
        Method::Ncpd | Method::Nmf => (independent_ranks(t, spec, job.method)?, Vec::new()),
    })
}

/// Fits `job` `cfg.restarts` times and keeps the fit with the lowest
/// final-layer relative loss (the first on ties).
pub fn run_job(cfg: &RunConfig, ws: &Workspace, job: &Job) -> anyhow::Result<JobOutput> {
    let ranks = cfg.require_ranks()?;
    let start = Instant::now();
    let mut best: Option<(LayerChain, Vec<LayerChain>)> = None;
    for r in 0..cfg.restarts {
        let seed = job.seed.wrapping_add((r as u64).wrapping_mul(RESTART_STRIDE));
        let spec = HierarchySpec::new(ranks.to_vec(), cfg.options.fit_options(seed))?;
        let fit = fit_once(ws, job, &spec)?;
        let better = best
            .as_ref()
            .is_none_or(|(b, _)| fit.0.final_layer().relative_loss < b.final_layer().relative_loss);
        if better {
            best = Some(fit);
        }
    }
    let (chain, mode_chains) = best.expect("restarts ≥ 1");
    let accuracy = match &ws.labels {
        Some(l) => Some(
            chain_accuracy(&chain, &l.matrix, ws.sample_mode).context("scoring accuracy")?,
        ),
        None => None,
    };
    Ok(JobOutput {
        chain,
        mode_chains,
        accuracy,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Runs all jobs on `jobs` worker threads (0 = rayon's default), returning
/// results in job order.
pub fn run_all(
    cfg: &RunConfig,
    ws: &Workspace,
    jobs: &[Job],
    threads: usize,
) -> anyhow::Result<Vec<anyhow::Result<JobOutput>>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("starting worker pool")?;
    Ok(pool.install(|| jobs.par_iter().map(|j| run_job(cfg, ws, j)).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems_are_distinct() {
        let j = |method, lead_mode, seed, supervised| Job {
            method,
            lead_mode,
            seed,
            supervised,
        };
        assert_eq!(j(Method::HntfI, Some(1), 3, false).stem(), "hntf-2-seed3");
        assert_eq!(j(Method::MultiHntf, None, 0, true).stem(), "multi-hntf-supervised-seed0");
        assert_eq!(j(Method::Hncpd, None, 7, false).label(), "Standard HNCPD");
    }
}
