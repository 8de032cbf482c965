use std::path::Path;
use std::process::{Command, Output};

fn dlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dlab"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .env_remove("DLAB_TOLERANCES")
        .output()
        .expect("dlab runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn generate_lattices() {
    let d = tempfile::tempdir().unwrap();
    assert!(dlab(d.path(), &["generate", "--family", "z1", "--radius", "10"])
        .status
        .success());
    let z1 = read(d.path().join("z1.10.model"));
    assert!(z1.starts_with("dirichlet-model v1 n=21 base=10"));
    assert!(dlab(d.path(), &["generate", "--family", "z2", "--radius", "3"])
        .status
        .success());
    let z2 = read(d.path().join("z2.3.model"));
    assert_eq!(z2.lines().filter(|l| l.starts_with("P ")).count(), 49);
    assert_eq!(z2.lines().filter(|l| l.starts_with("J ")).count(), 84);
    assert!(z2
        .lines()
        .filter(|l| l.starts_with("J "))
        .all(|l| l.ends_with(" 5.0000000000000000e-1")));
}

#[test]
fn generate_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = dlab(
            d.path(),
            &[
                "--seed",
                "3",
                "generate",
                "--family",
                "random-weighted:40:3",
                "--radius",
                "4",
            ],
        );
        assert!(o.status.success());
    }
    for k in 0..=4 {
        let name = format!("random-weighted-40-3.{k}.model");
        assert_eq!(read(a.path().join(&name)), read(b.path().join(&name)));
    }
}

#[test]
fn unknown_family_is_an_error() {
    let d = tempfile::tempdir().unwrap();
    let o = dlab(d.path(), &["generate", "--family", "hexagonal", "--radius", "2"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown family 'hexagonal'"));
}

#[test]
fn caccioppoli_sweep_passes() {
    let d = tempfile::tempdir().unwrap();
    let o = dlab(
        d.path(),
        &[
            "liouville",
            "--family",
            "z1",
            "--radius",
            "10",
            "--p",
            "1.5,2,3",
            "--mode",
            "caccioppoli",
        ],
    );
    assert!(o.status.success(), "{}", stdout(&o));
    let tsv = read(d.path().join("liouville.tsv"));
    let rows: Vec<&str> = tsv.lines().skip(1).collect();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r.ends_with("\ttrue")));
    assert!(read(d.path().join("liouville-summary.txt")).contains("failed: 0"));
}

#[test]
fn p_one_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let o = dlab(d.path(), &["liouville", "--family", "z1", "--radius", "10", "--p", "1"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("p must lie in (1, inf)"));
}

#[test]
fn karp_on_file_model() {
    let d = tempfile::tempdir().unwrap();
    assert!(dlab(d.path(), &["generate", "--family", "z1", "--radius", "200"])
        .status
        .success());
    let f: String = (0..401)
        .map(|x| format!("{x} {}\n", 1.0 + (x as f64 - 200.0).abs()))
        .collect();
    std::fs::write(d.path().join("f.txt"), f).unwrap();
    let model = d.path().join("z1.200.model");
    let fpath = d.path().join("f.txt");
    let args = [
        "liouville",
        "--model",
        model.to_str().unwrap(),
        "--f",
        fpath.to_str().unwrap(),
        "--mode",
        "karp",
    ];
    let o = dlab(d.path(), &args);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(d.path().join("karp-q-p2.dat").exists());
}

#[test]
fn semigroup_and_harmonic_reports() {
    let d = tempfile::tempdir().unwrap();
    assert!(dlab(d.path(), &["generate", "--family", "z1", "--radius", "5"])
        .status
        .success());
    let model = d.path().join("z1.5.model");
    let f: String = (0..11).map(|x| format!("{x} {}\n", x % 3)).collect();
    std::fs::write(d.path().join("f.txt"), f).unwrap();
    std::fs::write(d.path().join("b.txt"), "0 0\n10 1\n").unwrap();
    let (m, fp, bp) = (model.to_str().unwrap(), d.path().join("f.txt"), d.path().join("b.txt"));
    let o = dlab(
        d.path(),
        &[
            "semigroup",
            "--model",
            m,
            "--f",
            fp.to_str().unwrap(),
            "--p",
            "2",
            "--times",
            "0.1,1,10",
        ],
    );
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(read(d.path().join("semigroup.tsv")).lines().count(), 4);
    assert_eq!(read(d.path().join("semigroup-curve.dat")).lines().count(), 3);
    let o = dlab(
        d.path(),
        &["harmonic", "--model", m, "--boundary", bp.to_str().unwrap()],
    );
    assert!(o.status.success(), "{}", stdout(&o));
    let sol = read(d.path().join("harmonic-solution.txt"));
    let mid: f64 = sol
        .lines()
        .nth(5)
        .unwrap()
        .split_whitespace()
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((mid - 0.5).abs() < 1e-10);
}

#[test]
fn recurrence_on_z3() {
    let d = tempfile::tempdir().unwrap();
    let o = dlab(d.path(), &["recurrence", "--family", "z3", "--max-radius", "20"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("volume: converges; resistance: bounded"));
    assert!(d.path().join("resistance.dat").exists());
}

#[test]
fn verify_all_is_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let oa = dlab(a.path(), &["verify-all", "--seed", "7"]);
    let ob = dlab(b.path(), &["verify-all", "--seed", "7"]);
    assert!(oa.status.success(), "{}", stdout(&oa));
    assert_eq!(oa.stdout, ob.stdout);
    assert_eq!(stdout(&oa).lines().filter(|l| l.starts_with("PASS")).count(), 10);
    for e in std::fs::read_dir(a.path()).unwrap() {
        let name = e.unwrap().file_name();
        assert_eq!(
            std::fs::read(a.path().join(&name)).unwrap(),
            std::fs::read(b.path().join(&name)).unwrap()
        );
    }
}
