use std::fs;
use std::process::Command;

fn bomi() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bomi"))
}

#[test]
fn list_functions() {
    let out = bomi().arg("list-functions").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["eggholder2", "schubert4", "alpine5", "schwefel5"] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn bad_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "function = \"alpine5\"\nrho = 2.0\n").unwrap();
    let out = bomi().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    fs::write(&cfg, "function = \"alpine5\"\nunknown_key = 1\n").unwrap();
    let out = bomi().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_then_chart() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(
        &cfg,
        "function = \"eggholder2\"\nstrategies = [\"bomi\", \"dropbo\"]\niterations = 3\nrepeats = 2\nn_init = 10\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = bomi().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("summary.csv").exists());
    assert!(out_dir.join("traces/bomi_seed0.csv").exists());
    assert!(out_dir.join("traces/dropbo_seed1.csv").exists());

    let svg = dir.path().join("chart.svg");
    let out = bomi()
        .arg("chart")
        .arg("--summary")
        .arg(out_dir.join("summary.csv"))
        .arg("--out")
        .arg(&svg)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn out_dir_from_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "function = \"alpine5\"\nstrategies = [\"dropbo\"]\niterations = 1\nrepeats = 1\nn_init = 8\n").unwrap();
    let env_dir = dir.path().join("env-out");
    let out = bomi()
        .args(["run", "--config"])
        .arg(&cfg)
        .env("BOMI_OUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(env_dir.join("summary.csv").exists());
}

#[test]
fn sweep_writes_subdirs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "function = \"alpine5\"\nstrategies = [\"dropbo\"]\niterations = 2\nrepeats = 1\nn_init = 8\n").unwrap();
    let out_dir = dir.path().join("sweep");
    let out = bomi()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .args(["--axis", "rho", "--values", "0.1,0.5", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("rho=0.1/summary.csv").exists());
    assert!(out_dir.join("rho=0.5/summary.csv").exists());
    let sweep = fs::read_to_string(out_dir.join("sweep_summary.csv")).unwrap();
    assert!(sweep.starts_with("axis,value,strategy,mean_final,std_err,n"));
}

#[test]
fn output_independent_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(
        &cfg,
        "function = \"eggholder2\"\nstrategies = [\"bomi\", \"imputation-knn\", \"suggestbo\"]\niterations = 3\nrepeats = 3\nn_init = 10\n",
    )
    .unwrap();
    let mut outputs = Vec::new();
    for jobs in ["1", "3"] {
        let out_dir = dir.path().join(jobs);
        let out = bomi()
            .args(["run", "--config"])
            .arg(&cfg)
            .args(["--jobs", jobs, "--out"])
            .arg(&out_dir)
            .output()
            .unwrap();
        assert!(out.status.success());
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(out_dir.join("traces"))
            .unwrap()
            .map(|e| {
                let p = e.unwrap().path();
                (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
            })
            .collect();
        files.sort();
        files.push(("summary.csv".into(), fs::read(out_dir.join("summary.csv")).unwrap()));
        outputs.push(files);
    }
    assert_eq!(outputs[0].len(), 10);
    assert_eq!(outputs[0], outputs[1]);
}
