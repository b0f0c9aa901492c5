use std::path::Path;
use std::process::{Command, Output};

use automn::io;
use automn_core::acd::{diagnose, AcdConfig};
use automn_core::dmh::{run_dmh, BlockSpec, DmhConfig, ProposalSpec};
use automn_core::{build_regular_grid, Arrangement, Connectivity, DesignMatrix, GridSpec, ModelSpec, Params, PriorSpec};

fn automn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_automn"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

const RUN_3X3: &str = r#"{"model":{"k":2,"grid":{"rows":3,"cols":3,"connectivity":"rook"}},
    "data":"y.csv",
    "proposal":{"source":"isotropic","sd":0.5},
    "init":[0.1,0.2],
    "dmh":{"outer_iterations":300,"burn_in":50,"thin":2,"inner_sweeps":4},
    "acd":{"aux_samples":50,"thin":5},
    "seed":17,"output_dir":"out"}"#;

const Y_3X3: &str = "row,col,label\n1,1,1\n1,2,1\n1,3,2\n2,1,1\n2,2,2\n2,3,2\n3,1,1\n3,2,2\n3,3,2\n";

#[test]
fn render_matches_golden_bytes() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.csv", "row,col,label\n1,1,1\n1,2,2\n2,1,2\n2,2,3\n");
    assert!(automn(dir.path(), &["render", "--arrangement", "a.csv", "--out", "a.ppm", "--cell-px", "1"]).status.success());
    let mut want = b"P6\n2 2\n255\n".to_vec();
    for c in [[34u8, 139, 34], [218, 165, 32], [218, 165, 32], [70, 130, 180]] {
        want.extend_from_slice(&c);
    }
    assert_eq!(std::fs::read(dir.path().join("a.ppm")).unwrap(), want);

    assert!(automn(dir.path(), &["render", "--arrangement", "a.csv", "--out", "b.ppm", "--cell-px", "2"]).status.success());
    let big = std::fs::read(dir.path().join("b.ppm")).unwrap();
    let header = b"P6\n4 4\n255\n".len();
    assert_eq!(&big[..header], b"P6\n4 4\n255\n");
    // second pixel row repeats the first; first cell spans two pixels
    assert_eq!(&big[header..header + 12], &big[header + 12..header + 24]);
    assert_eq!(&big[header..header + 3], &big[header + 3..header + 6]);
}

#[test]
fn site_label_files_need_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "s.csv", "site,label\n2,1\n1,2\n");
    assert_eq!(automn(dir.path(), &["render", "--arrangement", "s.csv", "--out", "s.ppm"]).status.code(), Some(2));
    let ok = automn(dir.path(), &["render", "--arrangement", "s.csv", "--out", "s.ppm", "--rows", "1", "--cols", "2", "--cell-px", "1"]);
    assert!(ok.status.success());
    let bytes = std::fs::read(dir.path().join("s.ppm")).unwrap();
    assert_eq!(&bytes[bytes.len() - 6..], &[218, 165, 32, 34, 139, 34]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "y.csv", Y_3X3);
    write(d, "run.json", RUN_3X3);
    assert_eq!(automn(d, &["fit-mple", "--config", "missing.json"]).status.code(), Some(2));
    write(d, "broken.json", "{\"model\":");
    assert_eq!(automn(d, &["fit-mple", "--config", "broken.json"]).status.code(), Some(2));
    assert_eq!(automn(d, &["no-such-command"]).status.code(), Some(2));

    write(d, "bad.csv", &Y_3X3.replace("3,3,2", "3,3,5"));
    write(d, "bad.json", &RUN_3X3.replace("y.csv", "bad.csv"));
    let out = automn(d, &["fit-mple", "--config", "bad.json"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    write(d, "nodmh.json", &RUN_3X3.replace(r#""dmh":{"outer_iterations":300,"burn_in":50,"thin":2,"inner_sweeps":4},"#, ""));
    assert_eq!(automn(d, &["fit-dmh", "--config", "nodmh.json"]).status.code(), Some(2));

    // separated data: a numerical failure, not an input error
    let same: String = std::iter::once("row,col,label\n".to_owned())
        .chain((0..9).map(|s| format!("{},{},2\n", s / 3 + 1, s % 3 + 1)))
        .collect();
    write(d, "same.csv", &same);
    write(d, "same.json", &RUN_3X3.replace("y.csv", "same.csv"));
    assert_eq!(automn(d, &["fit-mple", "--config", "same.json"]).status.code(), Some(1));

    assert_eq!(automn(d, &["fit-mple", "--config", "run.json"]).status.code(), Some(0));
}

#[test]
fn oracle_matches_brute_force() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "y.csv", "row,col,label\n1,1,1\n1,2,2\n2,1,2\n2,2,2\n");
    write(
        d,
        "tiny.json",
        r#"{"model":{"k":2,"grid":{"rows":2,"cols":2,"connectivity":"rook"}},"data":"y.csv","seed":1,"output_dir":"o"}"#,
    );
    assert!(automn(d, &["oracle", "--config", "tiny.json", "--theta=-0.5,0.3"]).status.success());
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("o/oracle.json")).unwrap()).unwrap();

    // 2×2 rook pairs: (0,1), (2,3), (0,2), (1,3)
    let pairs = [(0, 1), (2, 3), (0, 2), (1, 3)];
    let (beta, gamma) = (-0.5, 0.3);
    let energy = |y: &[u32; 4]| {
        beta * y.iter().filter(|&&l| l == 1).count() as f64
            + gamma * pairs.iter().filter(|(a, b)| y[*a] == y[*b]).count() as f64
    };
    let configs: Vec<[u32; 4]> = (0..16u32).map(|i| [i & 1, (i >> 1) & 1, (i >> 2) & 1, (i >> 3) & 1]).collect();
    let z: f64 = configs.iter().map(|y| energy(y).exp()).sum();
    let mean_s: f64 = configs
        .iter()
        .map(|y| pairs.iter().filter(|(a, b)| y[*a] == y[*b]).count() as f64 * energy(y).exp() / z)
        .sum();
    let log_z = report["log_z"].as_f64().unwrap();
    assert!((log_z - z.ln()).abs() < 1e-12);
    assert!((report["mean"][1].as_f64().unwrap() - mean_s).abs() < 1e-12);
    let ll = report["log_likelihood"].as_f64().unwrap();
    assert!((ll - (energy(&[0, 1, 1, 1]) - z.ln())).abs() < 1e-12);
}

fn core_setup() -> (ModelSpec, Arrangement, DmhConfig) {
    let grid = GridSpec::new(3, 3, Connectivity::Rook).unwrap();
    let spec = ModelSpec::new(2, build_regular_grid(&grid), DesignMatrix::intercept_only(9)).unwrap();
    let y = Arrangement::from_zero_based(vec![0, 0, 1, 0, 1, 1, 0, 1, 1]);
    let blocks = BlockSpec::by_class(1, 2);
    let config = DmhConfig {
        outer_iterations: 300,
        burn_in: 50,
        thin: 2,
        inner_sweeps: 4,
        seed: 17,
        chain: 0,
        blocks: blocks.clone(),
        proposals: ProposalSpec::isotropic(&blocks, 0.5),
        prior: PriorSpec::default_for(2),
    };
    (spec, y, config)
}

#[test]
fn cli_chain_and_diagnostic_equal_library_results() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "y.csv", Y_3X3);
    write(d, "run.json", RUN_3X3);
    let out = automn(d, &["fit-dmh", "--config", "run.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let (spec, y, config) = core_setup();
    let init = Params::from_flat(1, 2, vec![0.1, 0.2]).unwrap();
    let want = run_dmh(&spec, &y, &config, &init, None).unwrap();
    let got = io::read_chain(&d.join("out/chain_m4_c0.csv")).unwrap();
    assert_eq!(got, want);

    let out = automn(d, &["diagnose", "--chain", "out/chain_m4_c0.csv", "--config", "run.json", "--out", "acd.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("acd.json")).unwrap()).unwrap();
    let acd = AcdConfig { aux_samples: 50, thin: 5, ..AcdConfig::default() };
    let res = diagnose(&want, &spec, &y, &PriorSpec::default_for(2), &acd, 17).unwrap();
    assert_eq!(report["result"]["statistic"].as_f64().unwrap(), res.statistic);
    assert_eq!(report["result"]["dof"].as_u64().unwrap() as usize, res.dof);
    assert_eq!(report["result"]["pass"].as_bool().unwrap(), res.pass);
}

#[test]
fn overrides_select_chains_and_inner_sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "y.csv", Y_3X3);
    write(d, "run.json", RUN_3X3);
    assert!(automn(d, &["fit-dmh", "--config", "run.json", "--chains", "2", "--m-list", "1,3"]).status.success());
    for name in ["chain_m1_c0", "chain_m1_c1", "chain_m3_c0", "chain_m3_c1"] {
        let chain = io::read_chain(&d.join(format!("out/{name}.csv"))).unwrap();
        assert_eq!(chain.n_draws(), 125);
        assert_eq!(chain.attempted, vec![300, 300]);
    }
    let a = std::fs::read(d.join("out/chain_m1_c0.csv")).unwrap();
    let b = std::fs::read(d.join("out/chain_m1_c1.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn summary_feeds_prediction() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "y.csv", Y_3X3);
    write(d, "run.json", RUN_3X3);
    assert!(automn(d, &["fit-dmh", "--config", "run.json"]).status.success());
    assert!(automn(d, &["summarize", "--chain", "out/chain_m4_c0.csv", "--out", "s.json"]).status.success());
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("s.json")).unwrap()).unwrap();
    let gamma = &s["summary"]["params"][1];
    assert_eq!(gamma["name"], "gamma");
    assert!(gamma["lower"].as_f64().unwrap() <= gamma["mean"].as_f64().unwrap());
    assert!(gamma["mean"].as_f64().unwrap() <= gamma["upper"].as_f64().unwrap());

    let out = automn(d, &["predict", "--posterior", "s.json", "--config", "run.json", "--sweeps", "20"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let pred = io::read_arrangement(&d.join("out/prediction.csv"), 2).unwrap();
    assert_eq!(pred.dims, Some((3, 3)));
    // a chain CSV is accepted as the posterior too
    assert!(automn(d, &["predict", "--posterior", "out/chain_m4_c0.csv", "--config", "run.json"]).status.success());
}

#[test]
fn aggregate_bins_points() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "p.csv", "x,y,class,elev\n0.5,1.5,a,1\n0.2,1.9,b,3\n0.4,1.1,b,5\n1.5,1.5,a,2\n0.5,0.5,a,4\n1.5,0.5,b,6\n");
    write(
        d,
        "agg.json",
        r#"{"input":"p.csv","output_dir":"o",
            "spec":{"bounds":{"xmin":0,"xmax":2,"ymin":0,"ymax":2},"rows":2,"cols":2,"class_mapping":{"a":1,"b":2}}}"#,
    );
    let out = automn(d, &["aggregate", "--config", "agg.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let y = io::read_arrangement(&d.join("o/arrangement.csv"), 2).unwrap();
    // row 1 is the northern band
    assert_eq!(y.arrangement.to_one_based(), vec![2, 1, 1, 2]);
    let x = io::read_design(&d.join("o/design.csv")).unwrap();
    assert_eq!(x.values(), &[3.0, 2.0, 4.0, 6.0]);
    assert_eq!(
        std::fs::read_to_string(d.join("o/counts.csv")).unwrap(),
        "row,col,count\n1,1,3\n1,2,1\n2,1,1\n2,2,1\n"
    );

    write(d, "q.csv", "x,y,class,elev\n0.5,1.5,zzz,1\n");
    write(d, "agg2.json", &std::fs::read_to_string(d.join("agg.json")).unwrap().replace("p.csv", "q.csv"));
    assert_eq!(automn(d, &["aggregate", "--config", "agg2.json"]).status.code(), Some(2));
}

#[test]
fn simulate_writes_manifest_with_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(
        d,
        "sim.json",
        r#"{"grid":{"rows":4,"cols":5,"connectivity":"queen"},"k":3,
            "generator":{"type":"gibbs","theta":[0.1,-0.1,0.5],"sweeps":10},
            "seed":99,"output_dir":"s"}"#,
    );
    assert!(automn(d, &["simulate", "--config", "sim.json"]).status.success());
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("s/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 99);
    assert_eq!(m["config"]["generator"]["type"], "gibbs");
    let counts: u64 = m["details"]["class_counts"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(counts, 20);
    let y = io::read_arrangement(&d.join("s/arrangement.csv"), 3).unwrap();
    assert_eq!(y.dims, Some((4, 5)));
    assert!(!d.join("s/design.csv").exists());
}
