use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tsp-tta"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn oracle_on_unit_square() {
    let out = ok(&["oracle", "--instance-inline", "0,0;1,0;1,1;0,1", "--method", "held-karp"]);
    assert!(out.trim().ends_with("len=4.000000"), "{out}");
    assert!(out.starts_with("tour=0,"));
}

#[test]
fn brute_and_held_karp_agree_inline() {
    let inst = "0.1,0.2;0.8,0.3;0.5,0.9;0.3,0.4;0.9,0.9;0.2,0.7;0.6,0.1;0.4,0.6";
    let len = |m: &str| {
        let out = ok(&["oracle", "--instance-inline", inst, "--method", m]);
        out.trim().rsplit("len=").next().unwrap().to_string()
    };
    assert_eq!(len("brute"), len("held-karp"));
    let nn = ok(&["oracle", "--instance-inline", inst, "--method", "nn", "--start", "0"]);
    assert_eq!(nn, ok(&["oracle", "--instance-inline", inst, "--method", "nn", "--start", "0"]));
    assert!(nn.starts_with("tour=0,"));
}

#[test]
fn errors_are_one_line_and_nonzero() {
    for args in [
        vec!["oracle", "--instance-inline", "0,0;1,x", "--method", "brute"],
        vec!["oracle", "--instance-inline", "0,0;1,1", "--method", "simplex"],
        vec!["gen-data", "--n", "1", "--count", "3", "--out", "/tmp/never.bin"],
        vec!["eval", "--data", "/nonexistent/d.bin", "--ckpt", "/nonexistent/m.ckpt"],
    ] {
        let out = run(&args);
        assert!(!out.status.success(), "{args:?}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
    }
}

#[test]
fn gen_data_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.bin"), dir.path().join("b.bin"));
    ok(&["gen-data", "--n", "10", "--count", "100", "--seed", "7", "--out", p(&a)]);
    ok(&["gen-data", "--n", "10", "--count", "100", "--seed", "7", "--out", p(&b)]);
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    assert_eq!(bytes.len(), 29 + 100 * 10 * 2 * 8);
}

#[test]
fn train_eval_sweep_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = |f: &str| dir.path().join(f);
    let cfg = d("toy.cfg");
    std::fs::write(
        &cfg,
        "# tiny run\nd_model=16\nn_heads=2\nd_ff=32\nn_enc_layers=1\nepochs=5\ninstances_per_epoch=64\nbatch_size=16\nval_size=16\n",
    )
    .unwrap();
    ok(&["gen-data", "--n", "6", "--count", "12", "--seed", "3", "--out", p(&d("test.bin"))]);
    let train = ok(&[
        "--jobs", "1", "train", "--config", p(&cfg), "--n", "6", "--epochs", "3", "--seed", "5",
        "--out-ckpt", p(&d("m.ckpt")), "--log", p(&d("log.csv")),
    ]);
    assert!(train.starts_with("epochs=3"), "{train}");
    let log = std::fs::read_to_string(d("log.csv")).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines[0], "epoch,train_len,val_len,baseline_len");
    assert_eq!(lines.len(), 4);

    let eval = |dec: &str, out: &Path| {
        ok(&[
            "eval", "--data", p(&d("test.bin")), "--ckpt", p(&d("m.ckpt")), "--decoder", dec, "--out", p(out),
        ])
    };
    eval("greedy", &d("g.csv"));
    eval("tta:1", &d("t1.csv"));
    eval("beam:4", &d("b.csv"));
    let summary = eval("tta:8", &d("t8.csv"));
    assert!(summary.contains("decoder=tta:8"));
    let greedy = std::fs::read_to_string(d("g.csv")).unwrap();
    assert_eq!(greedy, std::fs::read_to_string(d("t1.csv")).unwrap());
    let rows: Vec<&str> = greedy.lines().collect();
    assert_eq!(rows[0], "id,pred_len,opt_len,gap");
    assert_eq!(rows.len(), 1 + 12 + 1);
    for r in &rows[1..13] {
        let gap: f64 = r.rsplit(',').next().unwrap().parse().unwrap();
        assert!(gap >= -1e-9);
    }

    ok(&[
        "tta-sweep", "--data", p(&d("test.bin")), "--ckpt", p(&d("m.ckpt")), "--m", "1,2,4,8", "--out",
        p(&d("sweep.csv")),
    ]);
    let sweep = std::fs::read_to_string(d("sweep.csv")).unwrap();
    let lines: Vec<&str> = sweep.lines().collect();
    assert!(lines[0].contains("m_values=1,2,4,8"));
    assert_eq!(lines[1], "M,mean_gap,std_gap,mean_len,wall_time_ms");
    let gaps: Vec<f64> = lines[2..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(gaps.len(), 4);
    assert!(gaps.windows(2).all(|w| w[1] <= w[0]));

    let solved = ok(&[
        "solve", "--instance-inline", "0.1,0.1;0.9,0.1;0.9,0.9;0.1,0.9;0.5,0.2;0.3,0.7", "--ckpt", p(&d("m.ckpt")),
    ]);
    assert!(solved.starts_with("tour=") && solved.contains(" len="));

    // A checkpoint for 6 cities cannot evaluate 7-city data.
    ok(&["gen-data", "--n", "7", "--count", "2", "--out", p(&d("seven.bin"))]);
    let out = run(&["eval", "--data", p(&d("seven.bin")), "--ckpt", p(&d("m.ckpt"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("incompatible"));
}
