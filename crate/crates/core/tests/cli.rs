use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn chain(j: f64) -> String {
    format!(
        "dimension = 1\nspins = [\"0\", \"1\"]\nvacuum = \"0\"\nrange = 1\n\n\
         [[coupling]]\noffset = [1]\nspins = [\"1\", \"1\"]\nvalue = {j:?}\n"
    )
}

const ZERO: &str = "dimension = 1\nspins = [\"0\", \"1\"]\nvacuum = \"0\"\n";

const CORRUPTED: &str =
    "dimension = 1\nspins = [\"0\", \"1\"]\nvacuum = \"0\"\nsymmetric = false\n\n\
                         [[coupling]]\noffset = [1]\nspins = [\"1\", \"1\"]\nvalue = 0.3\n";

struct Sandbox {
    dir: TempDir,
}

impl Sandbox {
    fn new() -> Self {
        Sandbox {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn tefcorr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tefcorr"))
        .args(args)
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn values(path: &Path) -> Vec<(String, f64)> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            (f[0].to_string(), f[f.len() - 1].parse().unwrap())
        })
        .collect()
}

#[test]
fn verify_exit_codes() {
    let sb = Sandbox::new();
    let zero = sb.file("zero.toml", ZERO);
    let o = tefcorr(&["verify", "--model", s(&zero), "--instances", "2000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(
        stdout(&o)
            .lines()
            .all(|l| l.contains("max residual 0.000e0") && l.ends_with("pass")),
        "{}",
        stdout(&o)
    );

    let pair = sb.file("pair.toml", &chain(0.3));
    let o = tefcorr(&["verify", "--model", s(&pair), "--instances", "2000"]);
    assert_eq!(o.status.code(), Some(0));

    let bad = sb.file("bad.toml", CORRUPTED);
    let report = sb.path("verify.tsv");
    let o = tefcorr(&[
        "verify",
        "--model",
        s(&bad),
        "--instances",
        "2000",
        "--out",
        s(&report),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL (witness: t="));
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.contains("# seed = 0") && text.contains("# model_digest = "));

    let o = tefcorr(&[
        "verify",
        "--model",
        s(&zero),
        "--window=0:3",
        "--exhaustive",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = tefcorr(&[
        "verify",
        "--model",
        s(&zero),
        "--window=0:5",
        "--exhaustive",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn parse_errors_report_positions() {
    let sb = Sandbox::new();
    let bad = sb.file(
        "bad.toml",
        "dimension = 1\nspins = [\"0\", \"1\"]\nvacuum = 0\n",
    );
    let o = tefcorr(&["bounds", "--model", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3, column 10"), "{}", stderr(&o));
}

#[test]
fn exact_tables() {
    let sb = Sandbox::new();
    let zero = sb.file("zero.toml", ZERO);
    let out = sb.path("zero.tsv");
    let o = tefcorr(&[
        "exact",
        "--model",
        s(&zero),
        "--window=0:3",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rows = values(&out);
    assert_eq!(rows.len(), 16);
    for (x, v) in &rows {
        let size = if x == "∅" {
            0
        } else {
            x.split_whitespace().count()
        };
        assert_eq!(*v, 0.5f64.powi(size as i32), "{x}");
    }

    let two = sb.file("two.toml", &chain(2f64.ln()));
    let out = sb.path("two.tsv");
    let o = tefcorr(&[
        "exact",
        "--model",
        s(&two),
        "--window=0:1",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rho = values(&out)
        .into_iter()
        .find(|(x, _)| x == "(0)=1")
        .unwrap()
        .1;
    assert!((rho - 3.0 / 7.0).abs() < 1e-12);

    let o = tefcorr(&["exact", "--model", s(&zero), "--window=0:29"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn solve_outcomes() {
    let sb = Sandbox::new();
    let gated = sb.file("gated.toml", &chain(0.04));
    let out = sb.path("solve.tsv");
    let o = tefcorr(&[
        "solve",
        "--model",
        s(&gated),
        "--window=0:7",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let line = stdout(&o)
        .lines()
        .find(|l| l.starts_with("max deviation"))
        .unwrap()
        .to_string();
    let dev: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!(dev <= 1e-8);
    let mut report = out.clone().into_os_string();
    report.push(".report");
    let report = std::fs::read_to_string(report).unwrap();
    assert!(report.contains("gate_passed\ttrue"));

    let direct = tefcorr(&["solve", "--model", s(&gated), "--window=0:7", "--direct"]);
    assert_eq!(direct.status.code(), Some(0));

    let strong = sb.file("strong.toml", &chain(0.2));
    let o = tefcorr(&["solve", "--model", s(&strong), "--window=0:5"]);
    assert_eq!(o.status.code(), Some(4));

    let divergent = sb.file("divergent.toml", &chain(-3.0));
    let o = tefcorr(&[
        "solve",
        "--model",
        s(&divergent),
        "--window=0:5",
        "--override-gate",
    ]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stderr(&o).contains("rate estimate"));

    let o = tefcorr(&["solve", "--model", s(&gated), "--window=-6:6", "--infinite"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("trusted depth"));
}

#[test]
fn convergence_series() {
    let sb = Sandbox::new();
    let zero = sb.file("zero.toml", ZERO);
    let out = sb.path("zero.tsv");
    let o = tefcorr(&[
        "converge",
        "--model",
        s(&zero),
        "--window=-1:1",
        "--window=-3:3",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("d\tmax_abs_deviation\tepsilon_bound\titerations\tresidual"));
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.split('\t').nth(1) == Some("0e0")));

    let chain = sb.file("chain.toml", &chain(0.2));
    let out = sb.path("chain.tsv");
    let o = tefcorr(&[
        "converge",
        "--model",
        s(&chain),
        "--window=-2:2",
        "--window=-4:4",
        "--window=-6:6",
        "--ref-window=-9:9",
        "--override-gate",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let devs: Vec<f64> = std::fs::read_to_string(&out)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split('\t').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(devs.windows(2).all(|w| w[1] < w[0]), "{devs:?}");

    let o = tefcorr(&["converge", "--model", s(&zero), "--window=-1:1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bounds_report() {
    let sb = Sandbox::new();
    let field = |name: &str, text: &str| {
        let o = tefcorr(&["bounds", "--model", s(&sb.file(name, text))]);
        assert_eq!(o.status.code(), Some(0));
        stdout(&o)
    };
    let zero = field("zero.toml", ZERO);
    assert!(zero.contains("C1\t0.5000000000\n") && zero.contains("C1_prime\t0.5000000000\n"));
    assert!(
        zero.contains("C2\t0.0000000000\n") && zero.contains("contraction_lhs\t0.5000000000\tpass")
    );
    // ‖Φ‖ of the nearest-neighbour chain is 2J
    let weak = field("weak.toml", &chain(0.025));
    assert!(weak.contains("pair_sufficiency_lhs\t0.7761692957\tpass"), "{weak}");
    let strong = field("strong.toml", &chain(0.5));
    assert!(
        strong.contains("pair_sufficiency_lhs\t946.0918251703\tfail"),
        "{strong}"
    );
    assert!(strong.contains("\tfail"));
}

#[test]
fn outputs_are_reproducible() {
    let sb = Sandbox::new();
    let pair = sb.file("pair.toml", &chain(0.03));
    let run = |threads: &str, name: &str| {
        let out = sb.path(name);
        let o = tefcorr(&[
            "--threads",
            threads,
            "solve",
            "--model",
            s(&pair),
            "--window=0:8",
            "--out",
            s(&out),
        ]);
        assert_eq!(o.status.code(), Some(0));
        let v = tefcorr(&[
            "--threads",
            threads,
            "verify",
            "--model",
            s(&pair),
            "--instances",
            "500",
            "--seed",
            "7",
        ]);
        (std::fs::read(out).unwrap(), v.stdout)
    };
    let a = run("1", "a.tsv");
    let b = run("4", "b.tsv");
    let c = run("8", "c.tsv");
    assert_eq!(a, b);
    assert_eq!(a, c);
}
