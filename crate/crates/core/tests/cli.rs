mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::{epe_ref, fl_ref, Rng};
use compactflow::bench::zero_prediction_weights;
use compactflow::flow::FlowField;
use compactflow::io::{read_flo, write_flo, write_kitti_png, write_png};
use compactflow::model::{build_model, ModelOverrides, Variant};
use compactflow::weights::{init_deterministic, save_weights, DType};
use compactflow::Tensor;
use serde_json::Value;

fn cfnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfnet")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let o = cfnet(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap()
}

fn zero_weights(dir: &Path, v: Variant) -> PathBuf {
    let m = build_model(v, &ModelOverrides::default()).unwrap();
    let mut store = init_deterministic(&m, 0);
    zero_prediction_weights(&m, &mut store);
    let p = dir.join(format!("{v}_zero.cfw"));
    std::fs::write(&p, save_weights(&store, DType::F32)).unwrap();
    p
}

fn noise_png(path: &Path, rng: &mut Rng, h: usize, w: usize) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    let t = Tensor::new(3, h, w, rng.vec(3 * h * w, 0.0, 1.0)).unwrap();
    write_png(path, &t).unwrap();
}

#[test]
fn infer_with_zeroed_heads_writes_zero_flow_at_input_size() {
    let dir = tempfile::tempdir().unwrap();
    let w = zero_weights(dir.path(), Variant::Compactflownet);
    let (a, b) = (dir.path().join("a.png"), dir.path().join("b.png"));
    write_png(&a, &Tensor::filled(3, 436, 1024, 0.5)).unwrap();
    write_png(&b, &Tensor::filled(3, 436, 1024, 0.5)).unwrap();
    let out = dir.path().join("out.flo");
    ok(&["infer", "--model", "compactflownet", "--weights", s(&w), "--out", s(&out), s(&a), s(&b)]);
    let flow = read_flo(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!((flow.height(), flow.width()), (436, 1024));
    assert!(flow.tensor().data().iter().all(|&v| v == 0.0));
    let report = json(&dir.path().join("out.json"));
    assert_eq!(report["compute_resolution"], "448x1024");
    assert!(dir.path().join("out.png").is_file());
}

#[test]
fn infer_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = Rng::new(12);
    let (a, b) = (dir.path().join("a.png"), dir.path().join("b.png"));
    noise_png(&a, &mut rng, 50, 70);
    noise_png(&b, &mut rng, 50, 70);
    let run = |name: &str| {
        let out = dir.path().join(name).join("flow.flo");
        std::fs::create_dir_all(out.parent().unwrap()).unwrap();
        ok(&["infer", "--model", "pwcnet_small", "--seed", "7", "--out", s(&out), s(&a), s(&b)]);
        ["flow.flo", "flow.png", "flow.json"].map(|f| std::fs::read(out.with_file_name(f)).unwrap())
    };
    let first = run("one");
    assert_eq!(first, run("two"));
    let flow = read_flo(&first[0]).unwrap();
    assert!(flow.tensor().data().iter().any(|&v| v != 0.0));
}

fn sintel_dataset(root: &Path, rng: &mut Rng, flows: &[FlowField]) {
    for (i, f) in flows.iter().enumerate() {
        let scene = format!("scene_{}", i % 3);
        let idx = 1 + 2 * i;
        let gt = root.join("flow").join(&scene).join(format!("frame_{idx:04}.flo"));
        std::fs::create_dir_all(gt.parent().unwrap()).unwrap();
        std::fs::write(&gt, write_flo(f).unwrap()).unwrap();
        for k in [idx, idx + 1] {
            let p = root.join("clean").join(&scene).join(format!("frame_{k:04}.png"));
            noise_png(&p, rng, f.height(), f.width());
        }
    }
}

#[test]
fn eval_constant_error_gives_exact_aepe() {
    let dir = tempfile::tempdir().unwrap();
    let w = zero_weights(dir.path(), Variant::Compactflownet);
    let data = dir.path().join("sintel");
    let flows = vec![FlowField::constant(64, 64, 1.5, 2.0); 2];
    sintel_dataset(&data, &mut Rng::new(1), &flows);
    let out = dir.path().join("eval.json");
    ok(&["eval", "--model", "compactflownet", "--weights", s(&w), "--layout", "sintel", "--out", s(&out), s(&data)]);
    let r = json(&out);
    assert_eq!(r["aepe"].as_f64().unwrap(), 2.5);
    assert_eq!(r["frames"].as_array().unwrap().len(), 2);
    assert!(r.get("fl_all").is_none());
}

#[test]
fn eval_matches_scalar_reference_on_random_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let w = zero_weights(dir.path(), Variant::Compactflownet);
    let data = dir.path().join("sintel");
    let mut rng = Rng::new(77);
    let flows: Vec<FlowField> = (0..10).map(|_| rng.flow(32, 48, 8.0)).collect();
    sintel_dataset(&data, &mut rng, &flows);
    let out = dir.path().join("eval.json");
    ok(&["eval", "--model", "compactflownet", "--weights", s(&w), "--layout", "sintel", "--out", s(&out), s(&data)]);
    let zero = FlowField::zeros(32, 48);
    let want: f64 = flows.iter().map(|f| epe_ref(&zero, f, None).unwrap()).sum::<f64>() / 10.0;
    let got = json(&out)["aepe"].as_f64().unwrap();
    assert!((got - want).abs() <= 1e-6 * want, "{got} vs {want}");
}

#[test]
fn eval_kitti_reports_pooled_outlier_rate() {
    let dir = tempfile::tempdir().unwrap();
    let w = zero_weights(dir.path(), Variant::Compactflownet);
    let data = dir.path().join("kitti");
    let mut rng = Rng::new(5);
    let mut gts = Vec::new();
    for id in 0..3 {
        let mut g = rng.flow(40, 64, 12.0);
        g.set_mask(Some((0..40 * 64).map(|_| rng.coin(0.8)).collect())).unwrap();
        let gt = data.join("flow_occ").join(format!("{id:06}_10.png"));
        std::fs::create_dir_all(gt.parent().unwrap()).unwrap();
        std::fs::write(&gt, write_kitti_png(&g).unwrap()).unwrap();
        for f in ["10", "11"] {
            noise_png(&data.join("image_2").join(format!("{id:06}_{f}.png")), &mut rng, 40, 64);
        }
        // what the file decodes to, quantised
        gts.push(compactflow::io::read_kitti_png(&std::fs::read(&gt).unwrap()).unwrap().flow);
    }
    let out = dir.path().join("eval.json");
    ok(&["eval", "--model", "compactflownet", "--weights", s(&w), "--layout", "kitti", "--out", s(&out), s(&data)]);
    let r = json(&out);
    let zero = FlowField::zeros(40, 64);
    let (mut outl, mut n) = (0.0, 0.0);
    for g in &gts {
        let valid = g.mask().unwrap().iter().filter(|&&v| v).count() as f64;
        outl += fl_ref(&zero, g, None).unwrap() * valid;
        n += valid;
    }
    let got = r["fl_all"].as_f64().unwrap();
    assert!((got - outl / n).abs() < 1e-12, "{got} vs {}", outl / n);
}

#[test]
fn failures_exit_nonzero_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.png");
    let cases: Vec<Vec<&str>> = vec![
        vec!["infer", s(&missing), s(&missing)],
        vec!["profile", "--model", "resnet"],
        vec!["profile", "--resolution", "10"],
        vec!["eval", "--layout", "sintel", s(dir.path())],
        vec!["convert-weights-check"],
        vec!["profile", "--config", s(&missing)],
    ];
    for args in cases {
        let o = cfnet(&args);
        assert!(!o.status.success(), "{args:?}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
    }
}

#[test]
fn oversized_resolution_is_rejected_by_the_planner() {
    let o = cfnet(&["profile", "--model", "pwcnet_plus", "--resolution", "4096x8192", "--runs", "1", "--warmup", "0"]);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("planned peak memory"), "{err}");
}

#[test]
fn convert_weights_check_validates_binding() {
    let dir = tempfile::tempdir().unwrap();
    let compact = zero_weights(dir.path(), Variant::Compactflownet);
    let out = dir.path().join("check.json");
    ok(&["convert-weights-check", "--model", "compactflownet", "--weights", s(&compact), "--out", s(&out)]);
    let r = json(&out);
    assert_eq!(r["scalars"].as_u64().unwrap(), 3_241_110);
    assert_eq!(r["fingerprint"].as_str().unwrap().len(), 16);

    let o = cfnet(&["convert-weights-check", "--model", "pwcnet_small", "--weights", s(&compact)]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("incompatible"));
}

#[test]
fn report_writes_table_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("table.json");
    let o = ok(&[
        "report", "--models", "compactflownet,pwcnet_plus", "--resolution", "64x64,128x128", "--out", s(&out),
    ]);
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.contains("compactflownet") && table.contains("pwcnet_plus"));
    let r = json(&out);
    assert_eq!(r["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn profile_accepts_config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.toml");
    std::fs::write(&cfg, "model = \"pwcnet_small\"\nresolution = \"64x64\"\nwarmup = 1\nruns = 2\n").unwrap();
    let out = dir.path().join("p.json");
    ok(&["profile", "--config", s(&cfg), "--model", "compactflownet", "--out", s(&out)]);
    let r = json(&out);
    assert_eq!(r["model"], "compactflownet");
    assert_eq!(r["latency"]["runs"], 2);
    assert_eq!(r["latency"]["warmup"], 1);
}
