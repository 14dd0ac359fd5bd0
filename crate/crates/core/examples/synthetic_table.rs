//! Median relative losses of every method on the default synthetic tensor.
//!
//! `cargo run --release --example synthetic_table -- [sigma2] [trials]`

use multihntf::data::{gen_synthetic, SyntheticSpec};
use multihntf::hierarchy::{hntf_i, multi_hntf, standard_hncpd};
use multihntf::{FitOptions, HierarchySpec, LayerChain};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn main() -> multihntf::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let sigma2 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.1);
    let trials: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(10);
    let mut rows: Vec<(String, Vec<Vec<f64>>)> = Vec::new();
    let mut push = |chain: &LayerChain| {
        let label = chain.label();
        let losses = chain.relative_losses();
        match rows.iter_mut().find(|(l, _)| *l == label) {
            Some((_, v)) => v.push(losses),
            None => rows.push((label, vec![losses])),
        }
    };
    for seed in 0..trials {
        let data = gen_synthetic(&SyntheticSpec::default().with_noise(sigma2).with_seed(seed))?;
        let spec = HierarchySpec::new(vec![7, 4, 2], FitOptions::default().with_seed(seed))?;
        push(&multi_hntf(&data.tensor, &spec)?);
        push(&standard_hncpd(&data.tensor, &spec)?.chain);
        for mode in 0..3 {
            push(&hntf_i(&data.tensor, &spec, mode)?);
        }
    }
    for (label, runs) in rows {
        let cols: Vec<String> = (0..3)
            .map(|l| format!("{:.3}", median(runs.iter().map(|r| r[l]).collect())))
            .collect();
        println!("{label:<16} {}", cols.join("  "));
    }
    Ok(())
}
