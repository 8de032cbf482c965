//! One PASS/FAIL line per acceptance criterion; exits nonzero on any FAIL.

use std::process::ExitCode;

use dirichlet_lab::verify::{criterion, verify_all, CRITERIA};
use dirichlet_lab::Tolerances;

const SEED: u64 = 7;

/// Two `verify_all` runs must leave byte-identical report directories.
fn reports_identical(tol: &Tolerances) -> Result<(), String> {
    let (a, b) = (
        tempfile::tempdir().map_err(|e| e.to_string())?,
        tempfile::tempdir().map_err(|e| e.to_string())?,
    );
    verify_all(SEED, a.path(), tol).map_err(|e| e.to_string())?;
    verify_all(SEED, b.path(), tol).map_err(|e| e.to_string())?;
    let mut names: Vec<_> = std::fs::read_dir(a.path())
        .map_err(|e| e.to_string())?
        .flatten()
        .map(|e| e.file_name())
        .collect();
    names.sort();
    if names.len() != CRITERIA.len() + 1 {
        return Err(format!(
            "expected {} report files, found {}",
            CRITERIA.len() + 1,
            names.len()
        ));
    }
    for name in names {
        let x = std::fs::read(a.path().join(&name)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.path().join(&name)).map_err(|e| e.to_string())?;
        if x != y {
            return Err(format!("{name:?} differs between runs"));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let tol = Tolerances::default();
    let mut failed = Vec::new();
    for id in 1..=CRITERIA.len() {
        let mut line = match criterion(id, SEED, &tol) {
            Ok(r) => {
                if !r.pass {
                    failed.push(id);
                }
                r.line()
            }
            Err(e) => {
                failed.push(id);
                format!("FAIL criterion {id:>2} ({}): error: {e}", CRITERIA[id - 1])
            }
        };
        if id == 10 {
            match reports_identical(&tol) {
                Ok(()) => line.push_str("; verify-all reports byte-identical across runs"),
                Err(e) => {
                    if !failed.contains(&10) {
                        failed.push(10);
                    }
                    line = format!("FAIL criterion 10 ({}): {e}", CRITERIA[9]);
                }
            }
        }
        println!("{line}");
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", CRITERIA.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
