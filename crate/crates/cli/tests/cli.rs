use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn capscale(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    Command::new(env!("CARGO_BIN_EXE_capscale"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join("out").join(name)).unwrap()
}

#[test]
fn generate_writes_network_csv() {
    let dir = TempDir::new().unwrap();
    let o = capscale(
        dir.path(),
        &["generate", "--check"],
        "n = 50 # nodes\nseed = 4\n",
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(dir.path(), "network.csv");
    assert!(!csv.contains('\r'));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "node_id,x,y");
    assert_eq!(lines.len(), 51);
    for line in &lines[1..] {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 3);
        let x: f64 = f[1].parse().unwrap();
        assert!((0.0..=1.0).contains(&x));
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = TempDir::new().unwrap();
    capscale(dir.path(), &["generate"], "n = 20\nseed = 1\n");
    let a = read(dir.path(), "network.csv");
    capscale(dir.path(), &["generate"], "n = 20\nseed = 1\n");
    assert_eq!(a, read(dir.path(), "network.csv"));
    capscale(
        dir.path(),
        &["generate", "--seed", "2"],
        "n = 20\nseed = 1\n",
    );
    assert_ne!(a, read(dir.path(), "network.csv"));
}

#[test]
fn invalid_configs_exit_2() {
    let dir = TempDir::new().unwrap();
    for cfg in [
        "n = 20\nbogus = 1\n",
        "n = twenty\n",
        "n 20\n",
        "n =\n",
        "n = 10, 20\n",
        "t = 0.1\n",
    ] {
        let o = capscale(dir.path(), &["generate"], cfg);
        assert_eq!(code(&o), 2, "{cfg:?}");
        assert!(!o.stderr.is_empty());
    }
    let o = capscale(dir.path(), &["schedule"], "t = -0.1\n");
    assert_eq!(code(&o), 2);
    let o = capscale(dir.path(), &["scaling"], "kind = emst\nm = 4, 16\n");
    assert_eq!(code(&o), 2);
    let o = capscale(dir.path(), &["emst"], "kind = cut\nm = 4, 16, 64\n");
    assert_eq!(code(&o), 2);
    let o = capscale(
        dir.path(),
        &["emst", "--check"],
        "m = 4, 16, 64\ntrials = 2\n",
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn missing_config_file_exits_2() {
    let o = Command::new(env!("CARGO_BIN_EXE_capscale"))
        .args(["generate", "--config", "/nonexistent/run.cfg"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn emst_check_passes_and_fails() {
    let dir = TempDir::new().unwrap();
    let base = "m = 16, 64, 256\ntrials = 40\nexpected_slope = 0.5\n";
    let o = capscale(
        dir.path(),
        &["emst", "--check"],
        &format!("{base}tolerance = 0.1\n"),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS emst"));
    assert!(read(dir.path(), "summary.csv").starts_with("label,slope,intercept,r2\n"));
    assert_eq!(read(dir.path(), "emst.csv").lines().count(), 1 + 3 * 40);

    let o = capscale(
        dir.path(),
        &["emst", "--check"],
        "m = 16, 64, 256\ntrials = 40\nexpected_slope = 2\ntolerance = 0.1\n",
    );
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL emst"));
}

#[test]
fn schedule_check_and_links() {
    let dir = TempDir::new().unwrap();
    let o = capscale(dir.path(), &["schedule", "--check"], "t = 0.2\nn = 400\n");
    assert_eq!(code(&o), 0);
    let sched = read(dir.path(), "schedule.csv");
    assert_eq!(sched.lines().next(), Some("cell_i,cell_j,slot"));
    assert_eq!(sched.lines().count(), 65);
    let links = read(dir.path(), "links.csv");
    assert_eq!(links.lines().next(), Some("n,t,delta,slot,links"));
    assert_eq!(links.lines().count(), 17);
}

#[test]
fn simulate_small_point() {
    let dir = TempDir::new().unwrap();
    let cfg = "n = 300\nt = 0.2\nm = 2\nmode = PTP, MPT_MPR\ntrials = 1\nslots = 32\nwarmup = 32\n";
    let o = capscale(dir.path(), &["simulate", "--check"], cfg);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let agg = read(dir.path(), "aggregate.csv");
    let rows: Vec<&str> = agg.lines().collect();
    assert_eq!(rows[0], "mode,n,t,m,mean_rate,stderr");
    assert!(rows[1].starts_with("PTP,300,0.2,2,"));
    assert!(rows[2].starts_with("MPT_MPR,300,0.2,2,"));
    let per_session = read(dir.path(), "throughput.csv");
    assert_eq!(per_session.lines().count(), 1 + 2 * 300);
}

#[test]
fn cut_with_slopes() {
    let dir = TempDir::new().unwrap();
    let cfg =
        "n = 2000\nt = 0.08, 0.1, 0.15\nm = 3\nexpected_slope = -1, 1, 1, 3\ntolerance = 0.6\n";
    let o = capscale(dir.path(), &["cut", "--check"], cfg);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let csv = read(dir.path(), "cut.csv");
    assert_eq!(csv.lines().next(), Some("mode,n,t,cut_axis,cut_pos,links"));
    assert_eq!(csv.lines().count(), 13);
    assert!(read(dir.path(), "property_p.csv").starts_with("n,m,seed,fraction\n2000,3,"));
}

#[test]
fn scaling_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = "kind = links\nn = 3000\nt = 0.06, 0.08, 0.12\ntrials = 2\n";
    assert_eq!(code(&capscale(dir.path(), &["scaling"], cfg)), 0);
    let a = read(dir.path(), "links.csv");
    let s = read(dir.path(), "summary.csv");
    assert_eq!(code(&capscale(dir.path(), &["scaling"], cfg)), 0);
    assert_eq!(a, read(dir.path(), "links.csv"));
    assert_eq!(s, read(dir.path(), "summary.csv"));
}
