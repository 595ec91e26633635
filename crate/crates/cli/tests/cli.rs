use std::fs;
use std::process::Command;

fn awbem(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_awbem")).args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn missing_surface_is_a_usage_error() {
    let (code, _, err) = awbem(&["solve", "--rhs", "constant", "--mode", "uniform"]);
    assert_eq!(code, 64, "{err}");
    let (code, _, _) = awbem(&["solve", "--surface", "torus", "--rhs", "constant", "--mode", "uniform"]);
    assert_eq!(code, 64);
    let (code, _, _) = awbem(&["frobnicate"]);
    assert_eq!(code, 64);
    let (code, out, _) = awbem(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("solve"));
}

#[test]
fn uniform_cube_history() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("h.csv");
    let (code, out, err) = awbem(&[
        "solve", "--surface", "cube", "--rhs", "cartoon", "--mode", "uniform", "--max-level", "1", "--eps", "1e-6",
        "--no-timing", "--csv", csv.to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "{out}{err}");
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step,dofs,residual,delta,wall_time_s"));
    let dofs: Vec<&str> = lines.map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(dofs, ["24", "96"]);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",0.000")));
}

#[test]
fn repeated_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for (i, threads) in ["1", "3"].iter().enumerate() {
        let csv = dir.path().join(format!("{i}.csv"));
        let sol = dir.path().join(format!("{i}.sol"));
        let (code, _, err) = awbem(&[
            "solve", "--surface", "fichera", "--rhs", "point", "--alpha", "0.5", "--mode", "adaptive", "--max-dofs",
            "600", "--threads", threads, "--no-timing", "--csv", csv.to_str().unwrap(), "--dump-solution",
            sol.to_str().unwrap(),
        ]);
        assert_eq!(code, 2, "{err}");
        texts.push((fs::read(&csv).unwrap(), fs::read(&sol).unwrap()));
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# cube run\nsurface = cube\nrhs = constant\nmode = uniform\nmax-level = 2\neps = 1e-9\n").unwrap();
    let csv = dir.path().join("h.csv");
    let (code, _, err) = awbem(&[
        "solve", "--config", cfg.to_str().unwrap(), "--max-level", "0", "--no-timing", "--csv", csv.to_str().unwrap(),
    ]);
    assert!(code == 0 || code == 2, "{err}");
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 2, "{text}");
    fs::write(&cfg, "surface = cube\nbogus = 1\n").unwrap();
    let (code, _, _) = awbem(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 64);
}

#[test]
fn study_writes_tables_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("study.csv");
    let svg = dir.path().join("study.svg");
    let (code, out, err) = awbem(&[
        "study", "--surface", "cube", "--rhs", "cartoon", "--max-level", "2", "--max-dofs", "2000", "--no-timing",
        "--csv", csv.to_str().unwrap(), "--svg", svg.to_str().unwrap(),
    ]);
    assert!(code == 0 || code == 2, "{out}{err}");
    assert!(out.contains("uniform rate") && out.contains("adaptive rate"), "{out}");
    let combined = fs::read_to_string(&csv).unwrap();
    assert!(combined.starts_with("mode,step,dofs,residual,delta,wall_time_s\n"));
    for mode in ["uniform", "adaptive"] {
        let part = fs::read_to_string(dir.path().join(format!("study.{mode}.csv"))).unwrap();
        assert!(part.starts_with("step,dofs,residual,delta,wall_time_s\n"));
        assert_eq!(part.lines().count() - 1, combined.lines().filter(|l| l.starts_with(mode)).count());
    }
    let plot = fs::read_to_string(&svg).unwrap();
    assert!(plot.starts_with("<svg") && plot.trim_end().ends_with("</svg>"));
}

#[test]
fn verify_suites_exit_codes() {
    let (code, out, _) = awbem(&["verify", "basis"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.lines().any(|l| l.starts_with("PASS")) && !out.contains("FAIL"), "{out}");
    let (code, _, _) = awbem(&["verify", "nonsense"]);
    assert_eq!(code, 64);
}
