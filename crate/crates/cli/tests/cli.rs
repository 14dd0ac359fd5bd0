use std::path::Path;
use std::process::{Command, Output};

fn multihntf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multihntf"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = multihntf(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn synth_fit_export() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let synth = write(d, "synth.toml", "version = 1\n[input.synthetic]\nnoise_sigma2 = 0.1\n");
    ok(&["synth", "--config", &synth, "--seed", "5", "--out", d.join("data").to_str().unwrap()]);
    for f in ["tensor.dtf", "noiseless.dtf", "truth.json", "synthetic_spec.json"] {
        assert!(d.join("data").join(f).is_file(), "{f}");
    }

    let vocab: String = (0..40).map(|i| format!("w{i}\n")).collect();
    write(d, "vocab.txt", &vocab);
    let fit = write(
        d,
        "fit.toml",
        "version = 1\nmethod = \"multi-hntf\"\nranks = [7, 4, 2]\nseeds = [0]\n\
         [input]\npath = \"data/tensor.dtf\"\n[options]\nmax_iters = 40\n\
         [export]\nchain = \"out/chains/multi-hntf-seed0.json\"\nheatmap_modes = [1, 3]\n\
         vocab = \"vocab.txt\"\nvocab_mode = 2\nkeywords = 3\n",
    );
    ok(&["fit", "--config", &fit, "--out", d.join("out").to_str().unwrap()]);
    let chain = d.join("out/chains/multi-hntf-seed0.json");
    assert!(chain.is_file());
    let report = std::fs::read_to_string(d.join("out/report.csv")).unwrap();
    assert_eq!(report.lines().count(), 4);

    ok(&["export", "--config", &fit, "--out", d.join("exp").to_str().unwrap()]);
    let heat = std::fs::read_dir(d.join("exp/heatmaps")).unwrap().count();
    assert_eq!(heat, 6);
    let kw = std::fs::read_to_string(d.join("exp/keywords/layer2.csv")).unwrap();
    assert_eq!(kw.lines().next().unwrap(), "topic,position,word_id,token,weight");
    assert_eq!(kw.lines().count(), 1 + 2 * 3);
    let losses = std::fs::read_to_string(d.join("exp/losses.csv")).unwrap();
    for line in losses.lines().skip(1) {
        let f: Vec<f64> = line.split(',').skip(2).map(|s| s.parse().unwrap()).collect();
        assert!((f[0] - f[1]).abs() < 1e-10, "{line}");
    }
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cases = [
        ("version = 2\nmethod = \"multi-hntf\"\nranks = [3, 2]\n[input.synthetic]\n", "version"),
        ("version = 1\nmethod = \"multi-hntf\"\nranks = [3, 4]\n[input.synthetic]\n", "ranks[1]"),
        ("version = 1\nmethod = \"multi-hntf\"\nranks = [3, 2]\nbogus = 1\n", "bogus"),
        ("version = 1\nmethod = \"nope\"\nranks = [3, 2]\n[input.synthetic]\n", "method"),
    ];
    for (i, (text, needle)) in cases.iter().enumerate() {
        let cfg = write(d, &format!("bad{i}.toml"), text);
        let out = multihntf(&["fit", "--config", &cfg, "--out", d.join("o").to_str().unwrap()]);
        assert!(!out.status.success());
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "case {i}: {err}");
    }
}

#[test]
fn missing_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "version = 1\nmethod = \"ncpd\"\nranks = [3, 2]\n[input]\npath = \"absent.dtf\"\n",
    );
    let out = multihntf(&["fit", "--config", &cfg]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.dtf"));
}
