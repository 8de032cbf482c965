//! Sparse symmetric positive-definite solves.

use nalgebra_sparse::CsrMatrix;

use crate::error::{LabError, Result};

#[derive(Clone, Copy, Debug)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

pub(crate) fn spmv(a: &CsrMatrix<f64>, x: &[f64], out: &mut [f64]) {
    for (i, row) in a.row_iter().enumerate() {
        out[i] = row
            .col_indices()
            .iter()
            .zip(row.values())
            .map(|(&j, &v)| v * x[j])
            .sum();
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Jacobi-preconditioned conjugate gradients.
fn pcg(a: &CsrMatrix<f64>, b: &[f64], x: &mut [f64], rel_tol: f64, max_iter: usize) -> SolveReport {
    let n = b.len();
    let mut diag = vec![1.0; n];
    for (i, row) in a.row_iter().enumerate() {
        for (&j, &v) in row.col_indices().iter().zip(row.values()) {
            if i == j && v > 0.0 {
                diag[i] = v;
            }
        }
    }
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return SolveReport {
            iterations: 0,
            relative_residual: 0.0,
        };
    }
    let mut ax = vec![0.0; n];
    spmv(a, x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    while iterations < max_iter {
        if norm(&r) <= rel_tol * bnorm {
            break;
        }
        spmv(a, &p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        iterations += 1;
    }
    spmv(a, x, &mut ax);
    let res: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    SolveReport {
        iterations,
        relative_residual: norm(&res) / bnorm,
    }
}

/// Solves `A x = b` for symmetric positive-definite `A` to relative residual
/// `rel_tol`, with up to four rounds of iterative refinement.
pub fn solve_spd(a: &CsrMatrix<f64>, b: &[f64], rel_tol: f64) -> Result<(Vec<f64>, SolveReport)> {
    let n = b.len();
    let max_iter = 20 * n + 100;
    let mut x = vec![0.0; n];
    let mut report = pcg(a, b, &mut x, rel_tol, max_iter);
    let mut total = report.iterations;
    let bnorm = norm(b);
    for _ in 0..4 {
        if report.relative_residual <= rel_tol {
            break;
        }
        let mut ax = vec![0.0; n];
        spmv(a, &x, &mut ax);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let mut dx = vec![0.0; n];
        let inner = pcg(a, &r, &mut dx, rel_tol.max(1e-15), max_iter);
        total += inner.iterations;
        for i in 0..n {
            x[i] += dx[i];
        }
        spmv(a, &x, &mut ax);
        let res: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        report = SolveReport {
            iterations: total,
            relative_residual: norm(&res) / bnorm.max(f64::MIN_POSITIVE),
        };
    }
    // Roundoff floor: accept a residual within a small multiple of the target.
    if report.relative_residual > rel_tol * 100.0 {
        return Err(LabError::Solver(format!(
            "conjugate gradients stalled at relative residual {:.3e}",
            report.relative_residual
        )));
    }
    Ok((
        x,
        SolveReport {
            iterations: total,
            ..report
        },
    ))
}
