use multihntf::data::{gen_synthetic, parse_labels, SyntheticSpec};
use multihntf::eval::{chain_accuracy, heatmaps, report_rows, write_heatmaps};
use multihntf::hierarchy::{multi_hntf, multi_hntf_supervised};
use multihntf::tensor::text::{parse_tensor, write_dtf};
use multihntf::{DenseTensor, FitOptions, HierarchySpec, LayerChain};

/// Two disjoint all-ones blocks on the diagonal of a 6×6×6 tensor.
fn two_blocks() -> DenseTensor {
    let mut v = vec![0.0; 216];
    for i in 0..6 {
        for j in 0..6 {
            for k in 0..6 {
                if i / 3 == j / 3 && j / 3 == k / 3 {
                    v[(i * 6 + j) * 6 + k] = 1.0;
                }
            }
        }
    }
    DenseTensor::new(vec![6, 6, 6], v).unwrap()
}

#[test]
fn block_topics_localize_in_heatmaps() {
    let t = two_blocks();
    let spec = HierarchySpec::new(vec![2, 1], FitOptions::default().with_seed(4)).unwrap();
    let chain = multi_hntf(&t, &spec).unwrap();
    assert!(chain.layers[0].relative_loss < 1e-3, "{:?}", chain.relative_losses());
    let maps = heatmaps(&chain, &[0, 1, 2]).unwrap();
    assert_eq!(maps.len(), 6);
    for h in maps.iter().filter(|h| h.layer == 0) {
        let mut owners = Vec::new();
        for col in h.values.columns() {
            let top: f64 = col.iter().take(3).sum();
            assert!(top > 0.99 || top < 0.01, "mode {} column {col}", h.mode);
            owners.push(top > 0.5);
        }
        assert_ne!(owners[0], owners[1], "both topics on one block");
    }
    for h in &maps {
        for col in h.values.columns() {
            assert!((col.sum() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn heatmap_csv_keeps_twelve_digits() {
    let data = gen_synthetic(&SyntheticSpec::default().with_seed(3)).unwrap();
    let opts = FitOptions {
        max_iters: 30,
        ..FitOptions::default()
    };
    let chain = multi_hntf(&data.tensor, &HierarchySpec::new(vec![7, 4, 2], opts).unwrap()).unwrap();
    let maps = heatmaps(&chain, &[1]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = write_heatmaps(&maps, dir.path()).unwrap();
    assert_eq!(paths[2].file_name().unwrap(), "heatmap_layer2_mode2.csv");
    for (h, p) in maps.iter().zip(&paths) {
        let mut rd = csv::Reader::from_path(p).unwrap();
        assert_eq!(rd.headers().unwrap().len(), h.values.ncols());
        let mut rows = 0;
        for (rec, want) in rd.records().zip(h.values.rows()) {
            let rec = rec.unwrap();
            for (s, w) in rec.iter().zip(want) {
                let got: f64 = s.parse().unwrap();
                assert!((got - w).abs() <= 1e-12 * w.abs().max(f64::MIN_POSITIVE));
            }
            rows += 1;
        }
        assert_eq!(rows, h.values.nrows());
    }
}

#[test]
fn synthetic_fit_survives_files() {
    let spec = SyntheticSpec {
        shape: vec![20, 20, 20],
        ..SyntheticSpec::default()
    };
    // the default layout does not fit a 20³ tensor
    assert!(spec.validate().is_err());

    let data = gen_synthetic(&SyntheticSpec::default().with_seed(9)).unwrap();
    let t = parse_tensor(&write_dtf(&data.tensor)).unwrap();
    assert_eq!(t, data.tensor);
    let opts = FitOptions {
        max_iters: 50,
        ..FitOptions::default()
    }
    .with_seed(2);
    let chain = multi_hntf(&t, &HierarchySpec::new(vec![7, 4, 2], opts).unwrap()).unwrap();
    let back = LayerChain::from_json(&chain.to_json().unwrap()).unwrap();
    assert_eq!(back, chain);
    for (a, b) in back.relative_losses().iter().zip(back.recompute_relative_losses(&t).unwrap()) {
        assert!((a - b).abs() < 1e-10);
    }
    let rows = report_rows(&back, None);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1].rank, 4);
    assert!(rows.iter().all(|r| r.method == "Multi-HNTF" && r.seed == 2));
}

#[test]
fn supervised_accuracy_from_label_file() {
    // words × documents, two topics
    let mut v = vec![0.0; 8 * 10];
    for w in 0..8 {
        for d in 0..10 {
            if w / 4 == d / 5 {
                v[w * 10 + d] = 1.0 + ((w + d) % 3) as f64 * 0.1;
            }
        }
    }
    let t = DenseTensor::new(vec![8, 10], v).unwrap();
    let mut text = String::from("sample_id,class_name\n");
    for d in 0..10 {
        text.push_str(&format!("doc{d},{}\n", if d < 5 { "left" } else { "right" }));
    }
    let labels = parse_labels(&text).unwrap();
    assert_eq!(labels.matrix.class_names(), ["left", "right"]);
    let spec = HierarchySpec::new(vec![4, 2], FitOptions::default().with_seed(1)).unwrap();
    let chain = multi_hntf_supervised(&t, &labels.matrix, 1.0, &spec).unwrap();
    let acc = chain_accuracy(&chain, &labels.matrix, 1).unwrap();
    assert_eq!(acc.len(), 2);
    assert_eq!(*acc.last().unwrap(), 1.0);
}
