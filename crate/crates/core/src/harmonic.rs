//! Dirichlet problems, pointwise harmonicity classification and the
//! "vanishing energy measure forces constancy" check.

use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::config::Tolerances;
use crate::error::{LabError, Result};
use crate::form::DirichletFormModel;
use crate::linalg::{solve_spd, SolveReport};

/// Solves `(Lf)(x) = 0` off the boundary with `f = boundary value` on it.
/// Returns the solution and the solver report of the reduced system.
pub fn solve_dirichlet(
    model: &DirichletFormModel,
    boundary: &[(usize, f64)],
    tol: &Tolerances,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = model.len();
    if boundary.is_empty() {
        return Err(LabError::pre("boundary set is empty"));
    }
    let mut f = vec![0.0; n];
    let mut on_boundary = vec![false; n];
    for &(x, v) in boundary {
        if x >= n {
            return Err(LabError::pre(format!("boundary point {x} out of range")));
        }
        if on_boundary[x] && f[x] != v {
            return Err(LabError::pre(format!("conflicting boundary values at {x}")));
        }
        if !v.is_finite() {
            return Err(LabError::pre(format!("non-finite boundary value at {x}")));
        }
        on_boundary[x] = true;
        f[x] = v;
    }
    let interior: Vec<usize> = (0..n).filter(|&x| !on_boundary[x]).collect();
    if interior.is_empty() {
        return Ok((
            f,
            SolveReport {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    check_reaches_boundary(model, &on_boundary)?;
    let mut index = vec![usize::MAX; n];
    for (k, &x) in interior.iter().enumerate() {
        index[x] = k;
    }
    let mut coo = CooMatrix::new(interior.len(), interior.len());
    let mut rhs = vec![0.0; interior.len()];
    for (k, &x) in interior.iter().enumerate() {
        let mut diag = 0.0;
        for l in model.links(x) {
            diag += l.weight;
            if on_boundary[l.to] {
                rhs[k] += l.weight * f[l.to];
            } else {
                coo.push(k, index[l.to], -l.weight);
            }
        }
        coo.push(k, k, diag);
    }
    let a = CsrMatrix::from(&coo);
    let (u, report) = solve_spd(&a, &rhs, tol.solver_residual)?;
    for (k, &x) in interior.iter().enumerate() {
        f[x] = u[k];
    }
    Ok((f, report))
}

/// Every interior component of the support graph must touch the boundary.
fn check_reaches_boundary(model: &DirichletFormModel, on_boundary: &[bool]) -> Result<()> {
    let n = model.len();
    let mut reached = on_boundary.to_vec();
    let mut stack: Vec<usize> = (0..n).filter(|&x| on_boundary[x]).collect();
    while let Some(x) = stack.pop() {
        for l in model.links(x) {
            if !reached[l.to] {
                reached[l.to] = true;
                stack.push(l.to);
            }
        }
    }
    match reached.iter().position(|r| !r) {
        Some(x) => Err(LabError::Disconnected(format!(
            "interior point {x} is not connected to the boundary"
        ))),
        None => Ok(()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Harmonicity {
    Harmonic,
    Subharmonic,
    Superharmonic,
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicityReport {
    /// `(Lf)(x)` at every point.
    pub generator_values: Vec<f64>,
    pub class: Harmonicity,
    /// `max |Lf|` over the interior.
    pub worst_violation: f64,
    /// `max (Lf)_+` over the interior (failure of subharmonicity).
    pub max_positive: f64,
    /// `max (Lf)_-` over the interior (failure of superharmonicity).
    pub max_negative: f64,
    pub tolerance: f64,
}

/// Tolerance `harmonic * max(1, |f|_inf * max_x (2/m(x)) sum_y w(x,y))`.
pub fn harmonic_tolerance(model: &DirichletFormModel, f: &[f64], tol: &Tolerances) -> f64 {
    let sup = f.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let max_deg = (0..model.len())
        .map(|x| 2.0 * model.weighted_degree(x) / model.measure().weight(x))
        .fold(0.0, f64::max);
    tol.harmonic * (sup * max_deg).max(1.0)
}

/// Sign convention: `L >= 0`, so subharmonic means `Lf <= 0`.
pub fn classify_harmonicity(
    model: &DirichletFormModel,
    f: &[f64],
    interior: &[usize],
    tol: &Tolerances,
) -> HarmonicityReport {
    let lf = model.apply_generator(f);
    let t = harmonic_tolerance(model, f, tol);
    let (mut pos, mut neg) = (0.0_f64, 0.0_f64);
    for &x in interior {
        pos = pos.max(lf[x]);
        neg = neg.max(-lf[x]);
    }
    let class = match (pos <= t, neg <= t) {
        (true, true) => Harmonicity::Harmonic,
        (true, false) => Harmonicity::Subharmonic,
        (false, true) => Harmonicity::Superharmonic,
        (false, false) => Harmonicity::None,
    };
    HarmonicityReport {
        generator_values: lf,
        class,
        worst_violation: pos.max(neg),
        max_positive: pos,
        max_negative: neg,
        tolerance: t,
    }
}

impl HarmonicityReport {
    pub fn is_subharmonic(&self) -> bool {
        matches!(self.class, Harmonicity::Harmonic | Harmonicity::Subharmonic)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaVanishing {
    /// `int_X dGamma(f) = E(f)`.
    pub gamma_total: f64,
    /// `m`-weighted variance of `f`.
    pub variance: f64,
    pub spread: f64,
    /// `Some(Gamma-total <= tol)`; withheld on reducible models.
    pub constant: Option<bool>,
    /// The verdict agrees with the variance in both directions.
    pub consistent: bool,
}

pub fn gamma_vanishing_liouville(model: &DirichletFormModel, f: &[f64], tol: &Tolerances) -> GammaVanishing {
    let gamma_total = model.energy(f);
    let mean = model.mean(f);
    let dev: Vec<f64> = f.iter().map(|v| v - mean).collect();
    let variance = model.inner(&dev, &dev) / model.total_mass();
    let (lo, hi) = f
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let spread = hi - lo;
    let scale = f.iter().fold(1.0_f64, |a, v| a.max(v * v));
    let thr = tol.harmonic * scale;
    let constant = model.is_connected().then_some(gamma_total <= thr);
    let consistent = match constant {
        Some(true) => variance <= thr,
        Some(false) => spread > 0.0,
        None => true,
    };
    GammaVanishing {
        gamma_total,
        variance,
        spread,
        constant,
        consistent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn path(n: usize) -> DirichletFormModel {
        DirichletFormModel::pure_jump(vec![1.0; n], (0..n - 1).map(|i| (i, i + 1, 0.5)).collect(), 0).unwrap()
    }

    #[test]
    fn linear_interpolation() {
        let tol = Tolerances::default();
        let (f, _) = solve_dirichlet(&path(5), &[(0, 0.0), (4, 4.0)], &tol).unwrap();
        for (i, v) in f.iter().enumerate() {
            assert_relative_eq!(*v, i as f64, epsilon = 1e-11);
        }
        let (c, _) = solve_dirichlet(&path(5), &[(0, 2.5), (4, 2.5)], &tol).unwrap();
        assert!(c.iter().all(|v| (v - 2.5).abs() < 1e-11));
    }

    #[test]
    fn unreachable_interior() {
        let tol = Tolerances::default();
        let m = DirichletFormModel::pure_jump(vec![1.0; 4], vec![(0, 1, 0.5), (2, 3, 0.5)], 0).unwrap();
        assert!(matches!(
            solve_dirichlet(&m, &[(0, 1.0)], &tol),
            Err(LabError::Disconnected(_))
        ));
        assert!(solve_dirichlet(&m, &[], &tol).is_err());
    }

    #[test]
    fn abs_on_segment() {
        let tol = Tolerances::default();
        // Z-segment -5..5, origin at index 5
        let model =
            DirichletFormModel::pure_jump(vec![1.0; 11], (0..10).map(|i| (i, i + 1, 0.5)).collect(), 5).unwrap();
        let f: Vec<f64> = (0..11).map(|i| (i as f64 - 5.0).abs()).collect();
        let interior: Vec<usize> = (1..10).collect();
        let rep = classify_harmonicity(&model, &f, &interior, &tol);
        assert_eq!(rep.class, Harmonicity::Subharmonic);
        assert_relative_eq!(rep.generator_values[5], -2.0);
        assert!(interior
            .iter()
            .filter(|&&x| x != 5)
            .all(|&x| rep.generator_values[x].abs() < 1e-14));
    }

    #[test]
    fn min_profile_superharmonic() {
        let tol = Tolerances::default();
        let h: Vec<f64> = (0..11).map(|n| (n as f64).min(5.0)).collect();
        let rep = classify_harmonicity(&path(11), &h, &[5], &tol);
        assert_relative_eq!(rep.generator_values[5], 1.0);
        assert_eq!(rep.class, Harmonicity::Superharmonic);
        let c = classify_harmonicity(&path(11), &[3.0; 11], &(0..11).collect::<Vec<_>>(), &tol);
        assert_eq!(c.class, Harmonicity::Harmonic);
    }

    #[test]
    fn gamma_vanishing_examples() {
        let tol = Tolerances::default();
        let g = gamma_vanishing_liouville(&path(3), &[0.0, 1.0, 3.0], &tol);
        assert_relative_eq!(g.gamma_total, 5.0);
        assert_eq!(g.constant, Some(false));
        assert!(g.consistent);
        let c = gamma_vanishing_liouville(&path(3), &[2.0; 3], &tol);
        assert_eq!(c.constant, Some(true));
        assert_eq!(c.spread, 0.0);
        let split = DirichletFormModel::pure_jump(vec![1.0; 4], vec![(0, 1, 0.5), (2, 3, 0.5)], 0).unwrap();
        assert_eq!(
            gamma_vanishing_liouville(&split, &[0.0, 0.0, 1.0, 1.0], &tol).constant,
            None
        );
    }
}
