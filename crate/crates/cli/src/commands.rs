//! The `synth`, `fit`, `compare` and `export` commands.

use std::path::{Component, Path, PathBuf};

use anyhow::{bail, Context};
use multihntf::data::{gen_synthetic, load_tensor, load_vocab, SyntheticSpec};
use multihntf::eval::{heatmaps, report_rows, top_keywords, ReportRow};
use multihntf::tensor::text::write_dtf;
use multihntf::{LayerChain, Method};
use ndarray::Array2;
use serde_json::json;

use crate::config::RunConfig;
use crate::report::{loss_table, rows_csv, summarize, summary_csv, supervision_table};
use crate::runner::{run_all, Job, Workspace};

/// Command-line overrides applied on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
    pub chain: Option<PathBuf>,
}

#[derive(Debug, Default)]
pub struct Outcome {
    /// Files written, in order.
    pub written: Vec<PathBuf>,
    /// One line per failed fit, naming its method and seed.
    pub failures: Vec<String>,
    /// Human-readable summary for standard output.
    pub summary: String,
}

/// Output directory; every file of a run is written below it.
struct OutDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    fn new(cfg: &RunConfig, ov: &Overrides) -> anyhow::Result<OutDir> {
        let Some(root) = ov.out.clone().or_else(|| cfg.output.clone()) else {
            bail!("output: no output directory (set `output` or pass --out)");
        };
        std::fs::create_dir_all(&root)
            .with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(OutDir {
            root,
            written: Vec::new(),
        })
    }

    fn write(&mut self, rel: &str, bytes: &[u8]) -> anyhow::Result<()> {
        let rel = Path::new(rel);
        if !rel.components().all(|c| matches!(c, Component::Normal(_))) {
            bail!("refusing to write outside the output directory: {}", rel.display());
        }
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: serde::Serialize>(&mut self, rel: &str, value: &T) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }
}

fn rows_of(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// Writes the synthetic tensor, its noiseless part, and the ground truth.
pub fn cmd_synth(cfg: &RunConfig, ov: &Overrides) -> anyhow::Result<Outcome> {
    let mut spec = match &cfg.input {
        None => SyntheticSpec::default(),
        Some(input) => match &input.synthetic {
            Some(s) => s.clone(),
            None => bail!("input.synthetic: synth needs a synthetic spec, not an input path"),
        },
    };
    if let Some(seed) = ov.seed {
        spec.seed = seed;
    }
    let data = gen_synthetic(&spec)?;
    let mut out = OutDir::new(cfg, ov)?;
    out.write("tensor.dtf", write_dtf(&data.tensor).as_bytes())?;
    out.write("noiseless.dtf", write_dtf(&data.noiseless).as_bytes())?;
    let levels: Vec<_> = data
        .truth
        .iter()
        .map(|f| {
            json!({
                "rank": f.rank(),
                "factors": f.factors().iter().map(rows_of).collect::<Vec<_>>(),
            })
        })
        .collect();
    let membership: Vec<_> = data.membership.iter().map(rows_of).collect();
    out.json(
        "truth.json",
        &json!({
            "format": "multihntf-truth",
            "version": 1,
            "levels": levels,
            "membership": membership,
        }),
    )?;
    out.json("synthetic_spec.json", &spec)?;
    Ok(Outcome {
        summary: format!(
            "synthetic tensor {:?}, ranks {:?}, noise variance {}, seed {}\n",
            spec.shape,
            spec.ranks(),
            spec.noise_sigma2,
            spec.seed
        ),
        written: out.written,
        failures: Vec::new(),
    })
}

fn seeds(cfg: &RunConfig, ov: &Overrides) -> Vec<u64> {
    match ov.seed {
        Some(s) => vec![s],
        None => cfg.seeds.clone(),
    }
}

fn jobs_for(
    cfg: &RunConfig,
    methods: &[Method],
    seeds: &[u64],
    order: usize,
    single_lead: bool,
    supervised: bool,
) -> Vec<Job> {
    let mut jobs = Vec::new();
    for &method in methods {
        let leads: Vec<Option<usize>> = if method == Method::HntfI {
            cfg.lead_modes_for(order, single_lead).into_iter().map(Some).collect()
        } else {
            vec![None]
        };
        for lead_mode in leads {
            for &seed in seeds {
                jobs.push(Job {
                    method,
                    lead_mode,
                    seed,
                    supervised,
                });
            }
        }
    }
    jobs
}

fn has_supervised_variant(m: Method) -> bool {
    matches!(m, Method::MultiHntf | Method::Hnmf)
}

/// Runs `jobs`, writes every chain, and returns report rows plus failures.
fn execute(
    cfg: &RunConfig,
    ws: &Workspace,
    jobs: &[Job],
    ov: &Overrides,
    out: &mut OutDir,
) -> anyhow::Result<(Vec<ReportRow>, Vec<String>)> {
    let results = run_all(cfg, ws, jobs, ov.jobs)?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (job, res) in jobs.iter().zip(results) {
        match res {
            Ok(o) => {
                let stem = job.stem();
                out.write(&format!("chains/{stem}.json"), o.chain.to_json()?.as_bytes())?;
                for (i, mc) in o.mode_chains.iter().enumerate() {
                    out.write(
                        &format!("chains/{stem}-mode{}.json", i + 1),
                        mc.to_json()?.as_bytes(),
                    )?;
                }
                let acc: Option<Vec<Option<f64>>> =
                    o.accuracy.map(|a| a.into_iter().map(Some).collect());
                let mut r = report_rows(&o.chain, acc.as_deref());
                for row in &mut r {
                    row.seed = job.seed;
                    if cfg.wall_time {
                        row.wall_time_s = Some(o.wall_time_s);
                    }
                }
                rows.extend(r);
            }
            Err(e) => failures.push(format!(
                "{}{} seed {}: {e:#}",
                job.label(),
                if job.supervised { " (supervised)" } else { "" },
                job.seed
            )),
        }
    }
    Ok((rows, failures))
}

/// Fits one method for every configured seed.
pub fn cmd_fit(cfg: &RunConfig, ov: &Overrides) -> anyhow::Result<Outcome> {
    let method = cfg.fit_method()?;
    cfg.require_ranks()?;
    let ws = Workspace::load(cfg)?;
    cfg.check_against_order(&[method], ws.order())?;
    let supervised = ws.lambda.is_some();
    if supervised && !has_supervised_variant(method) {
        bail!("supervision.lambda: {method} has no supervised variant");
    }
    let jobs = jobs_for(cfg, &[method], &seeds(cfg, ov), ws.order(), true, supervised);
    let mut out = OutDir::new(cfg, ov)?;
    let (rows, failures) = execute(cfg, &ws, &jobs, ov, &mut out)?;
    out.write("report.csv", &rows_csv(&rows)?)?;
    out.json("report.json", &rows)?;
    let summary = loss_table(&summarize(&rows));
    Ok(Outcome {
        written: out.written,
        failures,
        summary,
    })
}

/// Runs every configured method over every seed and tabulates medians.
pub fn cmd_compare(cfg: &RunConfig, ov: &Overrides) -> anyhow::Result<Outcome> {
    let methods = cfg.compare_methods()?;
    cfg.require_ranks()?;
    let ws = Workspace::load(cfg)?;
    cfg.check_against_order(&methods, ws.order())?;
    let seeds = seeds(cfg, ov);
    let mut jobs = jobs_for(cfg, &methods, &seeds, ws.order(), false, false);
    if ws.lambda.is_some() {
        let sup: Vec<Method> = methods.iter().copied().filter(|&m| has_supervised_variant(m)).collect();
        if sup.is_empty() {
            bail!("supervision.lambda: none of the methods has a supervised variant");
        }
        jobs.extend(jobs_for(cfg, &sup, &seeds, ws.order(), false, true));
    }
    let mut out = OutDir::new(cfg, ov)?;
    let (rows, failures) = execute(cfg, &ws, &jobs, ov, &mut out)?;
    let sums = summarize(&rows);
    let mut summary = loss_table(&sums);
    out.write("runs.csv", &rows_csv(&rows)?)?;
    out.json("runs.json", &rows)?;
    out.write("summary.csv", &summary_csv(&sums)?)?;
    out.json("summary.json", &sums)?;
    out.write("table.md", summary.as_bytes())?;
    if ws.labels.is_some() {
        let t = supervision_table(&sums);
        out.write("supervision_table.md", t.as_bytes())?;
        summary.push('\n');
        summary.push_str(&t);
    }
    Ok(Outcome {
        written: out.written,
        failures,
        summary,
    })
}

/// Heatmaps and keyword lists of a saved chain.
pub fn cmd_export(cfg: &RunConfig, ov: &Overrides) -> anyhow::Result<Outcome> {
    let Some(chain_path) = ov.chain.clone().or_else(|| cfg.export.chain.clone()) else {
        bail!("export.chain: no chain file (set `export.chain` or pass --chain)");
    };
    let text = std::fs::read_to_string(&chain_path)
        .with_context(|| format!("reading {}", chain_path.display()))?;
    let chain = LayerChain::from_json(&text).with_context(|| format!("{}", chain_path.display()))?;
    let shape = chain.layers[0].factors.shape();
    let order = shape.len();
    let modes: Vec<usize> = if cfg.export.heatmap_modes.is_empty() {
        (0..order).collect()
    } else {
        cfg.export.heatmap_modes.iter().map(|m| m - 1).collect()
    };
    if let Some(&m) = modes.iter().find(|&&m| m >= order) {
        bail!("export.heatmap_modes: mode {} out of range for order {order}", m + 1);
    }
    let mut out = OutDir::new(cfg, ov)?;
    let mut summary = String::new();
    for h in heatmaps(&chain, &modes)? {
        let mut buf = Vec::new();
        h.write_csv(&mut buf)?;
        out.write(&format!("heatmaps/{}", h.file_name()), &buf)?;
    }

    if let Some(vocab_path) = &cfg.export.vocab {
        let vocab = load_vocab(vocab_path)?;
        let mode = match cfg.export.vocab_mode {
            Some(m) if m - 1 < order => m - 1,
            Some(m) => bail!("export.vocab_mode: mode {m} out of range for order {order}"),
            None => {
                let matching: Vec<usize> = (0..order).filter(|&i| shape[i] == vocab.len()).collect();
                match matching.as_slice() {
                    [m] => *m,
                    _ => bail!(
                        "export.vocab_mode: {} modes have {} entries; name one",
                        matching.len(),
                        vocab.len()
                    ),
                }
            }
        };
        for (l, layer) in chain.layers.iter().enumerate() {
            let kw = top_keywords(layer.factors.factor(mode), &vocab, cfg.export.keywords)
                .with_context(|| format!("keywords for layer {l}"))?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["topic", "position", "word_id", "token", "weight"])?;
            for (t, topic) in kw.iter().enumerate() {
                let _ = std::fmt::Write::write_fmt(
                    &mut summary,
                    format_args!(
                        "layer {l} topic {}: {}\n",
                        t + 1,
                        topic.iter().map(|k| k.token.as_str()).collect::<Vec<_>>().join(" ")
                    ),
                );
                for (p, k) in topic.iter().enumerate() {
                    w.write_record([
                        (t + 1).to_string(),
                        (p + 1).to_string(),
                        k.index.to_string(),
                        k.token.clone(),
                        k.weight.to_string(),
                    ])?;
                }
            }
            out.write(&format!("keywords/layer{l}.csv"), &w.into_inner()?)?;
        }
    }

    if let Some(path) = cfg.input.as_ref().and_then(|i| i.path.as_ref()) {
        let t = load_tensor(path)?;
        let recomputed = chain.recompute_relative_losses(&t)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["layer", "rank", "stored_relative_loss", "recomputed_relative_loss"])?;
        for (l, (layer, r)) in chain.layers.iter().zip(&recomputed).enumerate() {
            if (layer.relative_loss - r).abs() > 1e-10 {
                log::warn!(
                    "layer {l}: stored loss {} differs from recomputed {r}",
                    layer.relative_loss
                );
            }
            w.write_record([
                l.to_string(),
                layer.rank.to_string(),
                layer.relative_loss.to_string(),
                r.to_string(),
            ])?;
        }
        out.write("losses.csv", &w.into_inner()?)?;
    }
    Ok(Outcome {
        written: out.written,
        failures: Vec::new(),
        summary,
    })
}
