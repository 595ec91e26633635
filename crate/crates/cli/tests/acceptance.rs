//! Acceptance run: one PASS/FAIL line per criterion.

use std::path::{Path, PathBuf};
use std::time::Instant;

use awbem::analysis::{best_nterm_reference, fit_rate};
use awbem::basis::{CoeffVector, Tree};
use awbem::discretize::{QuadConfig, RightHandSide};
use awbem::solver::GmresConfig;
use awbem::surface::{make_cube, make_fichera, Point, Surface};
use awbem_cli::commands::with_threads;
use awbem_cli::verify::{apply_dense_ratio, constant_density_error, galerkin_lu_difference, Suite};

struct Line {
    id: usize,
    title: &'static str,
    passed: bool,
    detail: String,
}

fn print_line(l: &Line) {
    let mark = if l.passed { "PASS" } else { "FAIL" };
    println!("{mark}  criterion {:>2}  {}  {}", l.id, l.title, l.detail);
}

fn suite_line(id: usize, title: &'static str, suite: Suite, limit_s: f64) -> Line {
    let t = Instant::now();
    let checks = suite.run();
    let secs = t.elapsed().as_secs_f64();
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let detail = if failed.is_empty() {
        format!("{} checks, {secs:.1}s (limit {limit_s}s)", checks.len())
    } else {
        format!("failed: {}, {secs:.1}s", failed.join(", "))
    };
    Line {
        id,
        title,
        passed: failed.is_empty() && secs < limit_s,
        detail,
    }
}

/// One CLI solve; returns the history CSV text.
struct Run {
    csv: String,
    solution: Option<CoeffVector>,
    secs: f64,
}

fn solve(dir: &Path, tag: &str, problem: &[&str], mode: &str, max_dofs: &str, eps: &str, threads: usize) -> Run {
    let csv = dir.join(format!("{tag}.{mode}.t{threads}.csv"));
    let sol = dir.join(format!("{tag}.{mode}.t{threads}.sol"));
    let mut args: Vec<String> = vec!["awbem".into(), "solve".into()];
    args.extend(problem.iter().map(|s| s.to_string()));
    for (k, v) in [
        ("--mode", mode),
        ("--max-dofs", max_dofs),
        ("--eps", eps),
        ("--threads", &threads.to_string()),
        ("--csv", csv.to_str().unwrap()),
        ("--dump-solution", sol.to_str().unwrap()),
    ] {
        args.push(k.into());
        args.push(v.into());
    }
    args.push("--no-timing".into());
    let t = Instant::now();
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = awbem_cli::run(&args, &mut out, &mut err);
    let secs = t.elapsed().as_secs_f64();
    if code != 0 && code != 2 {
        eprintln!("{} exited with {code}: {}", args.join(" "), String::from_utf8_lossy(&err));
    }
    Run {
        csv: std::fs::read_to_string(&csv).unwrap_or_default(),
        solution: std::fs::read_to_string(&sol).ok().and_then(|s| CoeffVector::from_text(&s).ok()),
        secs,
    }
}

/// `(dofs, residual)` rows of a history CSV.
fn rows(csv: &str) -> Vec<(f64, f64)> {
    let mut lines = csv.lines();
    let Some(header) = lines.next() else {
        return Vec::new();
    };
    let cols: Vec<&str> = header.split(',').collect();
    let d = cols.iter().position(|c| *c == "dofs").unwrap();
    let r = cols.iter().position(|c| *c == "residual").unwrap();
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[d].parse().unwrap(), f[r].parse().unwrap())
        })
        .collect()
}

fn rate(points: &[(f64, f64)], all: bool) -> Option<f64> {
    let window = all.then_some(0..points.len());
    fit_rate(points, window).ok().map(|f| f.slope)
}

fn show(r: Option<f64>) -> String {
    r.map_or("n/a".into(), |v| format!("{v:.3}"))
}

fn within(r: Option<f64>, lo: f64, hi: f64) -> bool {
    r.is_some_and(|v| (lo..=hi).contains(&v))
}

struct Problem {
    tag: &'static str,
    args: &'static [&'static str],
    uniform: (f64, f64),
    adaptive: (f64, f64),
}

const PROBLEMS: [Problem; 3] = [
    Problem {
        tag: "fichera-a05",
        args: &["--surface", "fichera", "--rhs", "point", "--alpha", "0.5"],
        uniform: (0.15, 0.35),
        adaptive: (0.40, 0.60),
    },
    Problem {
        tag: "fichera-a075",
        args: &["--surface", "fichera", "--rhs", "point", "--alpha", "0.75"],
        uniform: (0.08, 0.18),
        adaptive: (0.20, 0.35),
    },
    Problem {
        tag: "cube-cartoon",
        args: &["--surface", "cube", "--rhs", "cartoon"],
        uniform: (0.17, 0.33),
        adaptive: (0.40, 0.60),
    },
];

const UNIFORM_DOFS: &str = "60000";
const ADAPTIVE_DOFS: &str = "150000";

fn run_problem(dir: &Path, p: &Problem, threads: usize) -> (Run, Run) {
    let u = solve(dir, p.tag, p.args, "uniform", UNIFORM_DOFS, "1e-4", threads);
    let a = solve(dir, p.tag, p.args, "adaptive", ADAPTIVE_DOFS, "1e-3", threads);
    (u, a)
}

fn cell_centre(surface: &Surface, idx: &awbem::basis::WaveletIndex) -> Point {
    let r = idx.cell().rect();
    surface.patches()[idx.patch as usize].lift(0.5 * (r.s0 + r.s1), 0.5 * (r.t0 + r.t1))
}

fn nterm_slope(surface: &Surface, g: RightHandSide) -> awbem::Result<(f64, usize)> {
    const J_REF: u8 = 5;
    let dofs = Tree::uniform_size(surface.num_patches(), J_REF);
    // Mid range: past the first few terms and at most a quarter of the reference.
    let n_list: Vec<usize> = (5..).map(|k| 1usize << k).take_while(|n| *n <= dofs / 4).collect();
    let gm = GmresConfig { tol: 1e-10, ..GmresConfig::default() };
    let best = best_nterm_reference(surface, g, J_REF, &n_list, QuadConfig::default(), &gm, 1500)?;
    let pts: Vec<(f64, f64)> = best.curve.iter().map(|(n, s)| (*n as f64, *s)).collect();
    Ok((fit_rate(&pts, Some(0..pts.len()))?.slope, best.dofs))
}

/// Share of level 3 and deeper indices within 0.25 of the reentrant corner.
fn corner_share(surface: &Surface, u: Option<&CoeffVector>) -> (usize, usize) {
    let corner = Point::new(0.5, 0.5, 0.5);
    u.map_or((0, 0), |u| {
        let deep: Vec<Point> = u.support().filter(|i| i.level >= 3).map(|i| cell_centre(surface, i)).collect();
        (deep.iter().filter(|x| (*x - corner).norm() <= 0.25).count(), deep.len())
    })
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let dir: PathBuf = dir.path().to_path_buf();
    let mut lines = Vec::new();
    let mut emit = |l: Line| {
        print_line(&l);
        lines.push(l.passed);
    };

    emit(suite_line(1, "quadrature identities", Suite::Quadrature, 10.0));
    emit(suite_line(2, "basis suite", Suite::Basis, 10.0));

    let t = Instant::now();
    let c3 = with_threads(Some(1), || constant_density_error(2)).unwrap();
    let secs = t.elapsed().as_secs_f64();
    emit(Line {
        id: 3,
        title: "constant density oracle",
        passed: matches!(c3, Ok(e) if e <= 5e-3) && secs < 60.0,
        detail: format!("|u - 1| = {} (bound 5e-3), {secs:.1}s", c3.as_ref().map_or_else(|e| e.to_string(), |e| format!("{e:.3e}"))),
    });

    let t = Instant::now();
    let ratio = with_threads(Some(1), apply_dense_ratio).unwrap();
    let lu = with_threads(Some(1), galerkin_lu_difference).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let c4_pass = matches!(ratio, Ok((r, _)) if r <= 1.0) && matches!(lu, Ok((d, n)) if d <= 1e-8 && n <= 500) && secs < 120.0;
    emit(Line {
        id: 4,
        title: "dense oracle equivalence",
        passed: c4_pass,
        detail: format!(
            "apply err/delta {}, GMRES vs LU {}, {secs:.1}s",
            ratio.as_ref().map_or_else(|e| e.to_string(), |(r, n)| format!("{r:.3} over {n} cases")),
            lu.as_ref().map_or_else(|e| e.to_string(), |(d, n)| format!("{d:.2e} on {n} indices")),
        ),
    });

    let first: Vec<(Run, Run)> = PROBLEMS.iter().map(|p| run_problem(&dir, p, 1)).collect();
    for (i, (p, (u, a))) in PROBLEMS.iter().zip(&first).enumerate() {
        let (ur, ar) = (rows(&u.csv), rows(&a.csv));
        let (us, as_) = (rate(&ur, true), rate(&ar, false));
        let mut passed = within(us, p.uniform.0, p.uniform.1) && within(as_, p.adaptive.0, p.adaptive.1);
        let mut extra = String::new();
        if i == 0 {
            let span = ur.first().is_some_and(|r| r.0 == 48.0) && ur.last().is_some_and(|r| r.0 >= 4.0e4);
            passed &= span && ar.len() >= 6;
            extra = format!(", uniform dofs {}..{}, adaptive rows {}", ur.first().map_or(0.0, |r| r.0), ur.last().map_or(0.0, |r| r.0), ar.len());
        }
        let titles = ["rate separation, Fichera alpha=0.5", "rate separation, Fichera alpha=0.75", "rate separation, cube cartoon"];
        emit(Line {
            id: 5 + i,
            title: titles[i],
            passed,
            detail: format!(
                "uniform {} in [{}, {}], adaptive {} in [{}, {}]{extra}, {:.0}s",
                show(us),
                p.uniform.0,
                p.uniform.1,
                show(as_),
                p.adaptive.0,
                p.adaptive.1,
                u.secs + a.secs
            ),
        });
    }

    let (u05, a05) = &first[0];
    let (ur, ar) = (rows(&u05.csv), rows(&a05.csv));
    let target = ur.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let uniform_dofs = ur.iter().find(|r| r.1 == target).map_or(f64::NAN, |r| r.0);
    let adaptive_dofs = ar.iter().find(|r| r.1 <= target).map(|r| r.0);
    emit(Line {
        id: 8,
        title: "adaptive dof advantage",
        passed: adaptive_dofs.is_some_and(|d| d <= uniform_dofs / 5.0),
        detail: format!(
            "residual {target:.4e}: uniform {uniform_dofs} dofs, adaptive {}",
            adaptive_dofs.map_or("never reached".into(), |d| format!("{d} dofs"))
        ),
    });

    let fichera = make_fichera();
    let localized = solve(&dir, "fichera-a05-eps008", PROBLEMS[0].args, "adaptive", ADAPTIVE_DOFS, "0.08", 1);
    let (near, deep) = corner_share(&fichera, localized.solution.as_ref());
    let share = if deep > 0 { near as f64 / deep as f64 } else { 0.0 };
    let (near5, deep5) = corner_share(&fichera, a05.solution.as_ref());
    emit(Line {
        id: 9,
        title: "singularity localization",
        passed: share >= 0.6,
        detail: format!(
            "eps 0.08 run: {near} of {deep} indices at level >= 3 near the corner ({:.1}%, bound 60%); longest run {:.1}%",
            100.0 * share,
            100.0 * near5 as f64 / deep5.max(1) as f64
        ),
    });

    let cube = make_cube();
    let t = Instant::now();
    let n05 = nterm_slope(&fichera, RightHandSide::fichera_corner(0.5));
    let ncart = nterm_slope(&cube, RightHandSide::cube_cartoon());
    let secs = t.elapsed().as_secs_f64();
    let ok = |r: &awbem::Result<(f64, usize)>| matches!(r, Ok((s, _)) if *s >= 0.45);
    let fmt = |r: &awbem::Result<(f64, usize)>| r.as_ref().map_or_else(|e| e.to_string(), |(s, d)| format!("{s:.3} ({d} dofs)"));
    emit(Line {
        id: 10,
        title: "best n-term reference slopes",
        passed: ok(&n05) && ok(&ncart),
        detail: format!("alpha=0.5 {}, cartoon {} (bound 0.45), {secs:.0}s", fmt(&n05), fmt(&ncart)),
    });

    emit(suite_line(11, "appendix suites", Suite::Appendix, 60.0));

    let c3_again = with_threads(Some(4), || constant_density_error(2)).unwrap();
    let ratio_again = with_threads(Some(4), apply_dense_ratio).unwrap();
    let lu_again = with_threads(Some(4), galerkin_lu_difference).unwrap();
    let oracles_same = matches!((&c3, &c3_again), (Ok(a), Ok(b)) if a.to_bits() == b.to_bits())
        && matches!((&ratio, &ratio_again), (Ok(a), Ok(b)) if a.0.to_bits() == b.0.to_bits())
        && matches!((&lu, &lu_again), (Ok(a), Ok(b)) if a.0.to_bits() == b.0.to_bits());
    let mut differing = Vec::new();
    for (p, (u, a)) in PROBLEMS.iter().zip(&first) {
        let (u2, a2) = run_problem(&dir, p, 4);
        if u.csv.is_empty() || u.csv != u2.csv {
            differing.push(format!("{} uniform", p.tag));
        }
        if a.csv.is_empty() || a.csv != a2.csv {
            differing.push(format!("{} adaptive", p.tag));
        }
    }
    emit(Line {
        id: 12,
        title: "determinism",
        passed: oracles_same && differing.is_empty(),
        detail: format!(
            "oracles {}, histories {} (threads 1 and 4)",
            if oracles_same { "identical" } else { "differ" },
            if differing.is_empty() { "identical".to_string() } else { format!("differ: {}", differing.join(", ")) }
        ),
    });

    let failed = lines.iter().filter(|p| !**p).count();
    println!("{} of {} criteria passed", lines.len() - failed, lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
