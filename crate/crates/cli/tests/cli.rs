use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_liouville"))
}

fn run_config(dir: &Path, text: &str) -> Output {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    bin().arg("run").arg(&path).output().unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn spectrum_of_decaying_qubit() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cfg = format!(
        "kind = \"spectrum\"\noutput = {:?}\n\n[model]\ndims = [2]\nhamiltonian = \"0\"\njumps = [{{ rate = 1.0, op = \"sm\" }}]\n",
        out.to_str().unwrap()
    );
    let o = run_config(tmp.path(), &cfg);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&out.join("spectrum.csv"));
    let mut re: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    re.sort_by(f64::total_cmp);
    for (a, b) in re.iter().zip([-1.0, -0.5, -0.5, 0.0]) {
        assert!((a - b).abs() < 1e-10, "{re:?}");
    }
    let header = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    assert!(header.starts_with("index,re_lambda,im_lambda\n"));
    assert!(out.join("metadata.toml").exists());
}

#[test]
fn empty_model_gives_constant_columns() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cfg = format!(
        r#"kind = "evolve"
output = {:?}
observables = ["sz", "sx"]

[model]
dims = [2]
hamiltonian = "0"
initial = [0]

[grid]
t1 = 1.0
dt = 0.01
sample_every = 10
"#,
        out.to_str().unwrap()
    );
    let o = run_config(tmp.path(), &cfg);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("evolve.csv")).unwrap();
    assert!(text.starts_with("time,sz_re,sz_im,sx_re,sx_im\n"));
    let rows = csv_rows(&out.join("evolve.csv"));
    assert_eq!(rows.len(), 11);
    for r in &rows {
        assert_eq!(&r[1..], &["1.0", "0.0", "0.0", "0.0"]);
    }
}

#[test]
fn schema_errors_point_at_lines() {
    let tmp = TempDir::new().unwrap();
    let o = run_config(tmp.path(), "kind = \"spectrum\"\noutput = \"x\"\nbogus = 3\n");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let cfg = "kind = \"spectrum\"\noutput = \"x\"\n\n[model]\ndims = [2]\nhamiltonian = \"sq\"\n";
    let o = run_config(tmp.path(), cfg);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 6"), "{}", stderr(&o));

    let o = run_config(tmp.path(), "kind = \"evolve\"\noutput = \"x\"\n");
    assert_eq!(o.status.code(), Some(2));

    let o = bin().arg("validate").arg(tmp.path().join("config.toml")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn capability_and_numeric_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let big = format!(
        "kind = \"spectrum\"\noutput = {:?}\n\n[model]\ndims = [40]\nhamiltonian = \"n\"\n",
        out.to_str().unwrap()
    );
    assert_eq!(run_config(tmp.path(), &big).status.code(), Some(4));

    let steep = format!(
        r#"kind = "trajectories"
output = {:?}
observables = ["n"]

[model]
dims = [11]
hamiltonian = "n"
jumps = [{{ rate = 1.0, op = "a" }}]
initial = [10]

[grid]
t1 = 1.0
dt = 0.1

[trajectories]
schemes = ["counting"]
n = 2
seed = 1
"#,
        out.to_str().unwrap()
    );
    assert_eq!(run_config(tmp.path(), &steep).status.code(), Some(3));
}

fn trajectory_config(out: &Path) -> String {
    format!(
        r#"kind = "trajectories"
output = {:?}
observables = ["n", "a"]

[model]
dims = [5]
hamiltonian = "n"
jumps = [{{ rate = 1.0, op = "a" }}]
initial = [4]

[grid]
t1 = 1.0
dt = 0.005
sample_every = 20

[trajectories]
schemes = ["counting", "homodyne", "offset", "no_jump"]
n = 12
seed = 17
beta = 1.5
master_reference = true
"#,
        out.to_str().unwrap()
    )
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn metadata_round_trip_and_thread_independence() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = run_config(tmp.path(), &trajectory_config(&out));
    assert!(o.status.success(), "{}", stderr(&o));
    let first = snapshot(&out);
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    for f in [
        "trajectories_counting.csv",
        "avg_counting.csv",
        "trajectories_homodyne.csv",
        "avg_homodyne.csv",
        "trajectories_offset.csv",
        "avg_no_jump.csv",
        "master.csv",
    ] {
        assert!(names.contains(&f), "{names:?}");
    }
    let meta = fs::read_to_string(out.join("metadata.toml")).unwrap();
    assert!(meta.contains("tool_version") && meta.contains("wall_time_s") && meta.contains("seed = 17"));

    let side = tmp.path().join("sidecar.toml");
    fs::copy(out.join("metadata.toml"), &side).unwrap();
    let o = bin().arg("run").arg(&side).env("LIOUVILLE_THREADS", "1").output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(first, snapshot(&out));

    let o = bin().arg("run").arg(&side).env("LIOUVILLE_THREADS", "3").output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(first, snapshot(&out));

    let header = fs::read_to_string(out.join("avg_counting.csv")).unwrap();
    assert!(header.starts_with("time,n_mean_re,n_mean_im,n_stderr_re,n_stderr_im,a_mean_re"));
    let rows = csv_rows(&out.join("trajectories_counting.csv"));
    assert_eq!(rows.len(), 12 * 11);
}

#[test]
fn presets_are_listed_and_run() {
    let o = bin().arg("list-presets").output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let names: Vec<&str> = text.lines().filter(|l| !l.starts_with(' ')).collect();
    assert_eq!(names.len(), 5, "{text}");
    for n in ["fig2_envbench", "fig5_cavity_unravelings", "fig6_state_transfer", "fig3_qec_ratio", "zeno_appendixA2"] {
        assert!(names.iter().any(|l| l.starts_with(n)));
    }
    assert!(text.contains("model.initial = [0, 1]"));
    assert!(text.contains("envbench.gbar1 = 0.001"));
    assert!(text.contains("envbench.rel_sigma = 0.05"));

    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("q");
    let o = bin()
        .args(["preset", "fig3_qec_ratio", "--set", "qec.taus=[0.01, 0.1]", "--set"])
        .arg(format!("output={}", out.to_str().unwrap()))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&out.join("qec.csv"));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[3].parse::<f64>().unwrap() < 1.0));

    let out = tmp.path().join("z");
    let o = bin()
        .args(["preset", "zeno_appendixA2", "--set"])
        .arg(format!("output={}", out.to_str().unwrap()))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    for r in csv_rows(&out.join("zeno.csv")) {
        let (g, expected): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert!((g / expected - 1.0).abs() < 0.05);
    }

    let o = bin().args(["preset", "nope"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_accepts_good_config() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("c.toml");
    fs::write(&path, trajectory_config(&tmp.path().join("o"))).unwrap();
    let o = bin().arg("validate").arg(&path).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!tmp.path().join("o").exists());
}
