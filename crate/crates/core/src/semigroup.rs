//! The Markov semigroup `T_t = exp(-tL)`, structure flags and the ergodic limit.
//!
//! Small models are factorized once through the symmetrization
//! `S = M^{1/2} L M^{-1/2}`; larger ones apply the exponential to vectors by
//! a truncated Taylor series on `t/s`-steps of the sparse generator.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::config::Tolerances;
use crate::error::{LabError, Result};
use crate::form::{lp_norm, DirichletFormModel};
use crate::linalg::spmv;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructureFlags {
    pub irreducible: bool,
    pub conservative: bool,
    pub mass: f64,
}

#[derive(Clone, Debug)]
enum Backend {
    Spectral {
        eigenvalues: DVector<f64>,
        /// Orthonormal eigenvectors of `S` (columns).
        vectors: DMatrix<f64>,
    },
    Taylor {
        generator: CsrMatrix<f64>,
        norm: f64,
    },
}

#[derive(Clone, Debug)]
pub struct SemigroupOperator {
    weights: Vec<f64>,
    backend: Backend,
    kernel_tol: f64,
    absorbing: bool,
}

impl SemigroupOperator {
    pub fn new(model: &DirichletFormModel, tol: &Tolerances) -> Self {
        let g = model.assemble_generator();
        Self::from_generator(g.matrix().clone(), model.measure().as_slice().to_vec(), tol, false)
    }

    /// Semigroup killed on leaving `interior` (functions vanish off it).
    /// Acts on vectors indexed by the interior points in increasing order.
    /// Used to emulate the infinite-mass regime of the ergodic theorem.
    pub fn absorbing(model: &DirichletFormModel, interior: &[usize], tol: &Tolerances) -> Result<Self> {
        if interior.is_empty() {
            return Err(LabError::pre("absorbing semigroup needs a nonempty interior"));
        }
        let mut index = vec![usize::MAX; model.len()];
        for (k, &x) in interior.iter().enumerate() {
            if x >= model.len() || index[x] != usize::MAX {
                return Err(LabError::pre(format!("bad interior point {x}")));
            }
            index[x] = k;
        }
        let full = model.assemble_generator();
        let mut coo = CooMatrix::new(interior.len(), interior.len());
        for (&x, row) in interior.iter().zip(0..) {
            let r = full.matrix().row(x);
            for (&y, &v) in r.col_indices().iter().zip(r.values()) {
                if index[y] != usize::MAX {
                    coo.push(row, index[y], v);
                }
            }
        }
        let weights = interior.iter().map(|&x| model.measure().weight(x)).collect();
        Ok(Self::from_generator(CsrMatrix::from(&coo), weights, tol, true))
    }

    fn from_generator(generator: CsrMatrix<f64>, weights: Vec<f64>, tol: &Tolerances, absorbing: bool) -> Self {
        let n = weights.len();
        let backend = if n <= tol.dense_limit {
            let mut s = DMatrix::zeros(n, n);
            for (i, row) in generator.row_iter().enumerate() {
                for (&j, &v) in row.col_indices().iter().zip(row.values()) {
                    s[(i, j)] = v * (weights[i] / weights[j]).sqrt();
                }
            }
            // symmetrize away rounding
            let s = (&s + s.transpose()) * 0.5;
            let eig = SymmetricEigen::new(s);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k].max(0.0)));
            let vectors = DMatrix::from_columns(&order.iter().map(|&k| eig.eigenvectors.column(k)).collect::<Vec<_>>());
            Backend::Spectral { eigenvalues, vectors }
        } else {
            let norm = generator
                .row_iter()
                .map(|r| r.values().iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max);
            Backend::Taylor { generator, norm }
        };
        SemigroupOperator {
            weights,
            backend,
            kernel_tol: tol.kernel,
            absorbing,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn is_spectral(&self) -> bool {
        matches!(self.backend, Backend::Spectral { .. })
    }

    /// True for the killed (Dirichlet-restricted) emulation.
    pub fn is_absorbing(&self) -> bool {
        self.absorbing
    }

    /// Ascending eigenvalues of `L`, when factorized.
    pub fn eigenvalues(&self) -> Option<&[f64]> {
        match &self.backend {
            Backend::Spectral { eigenvalues, .. } => Some(eigenvalues.as_slice()),
            Backend::Taylor { .. } => None,
        }
    }

    fn zero_threshold(&self) -> f64 {
        match &self.backend {
            Backend::Spectral { eigenvalues, .. } => self.kernel_tol * eigenvalues.iter().copied().fold(1.0, f64::max),
            Backend::Taylor { norm, .. } => self.kernel_tol * norm.max(1.0),
        }
    }

    /// `k`-th eigenvector of `L`, normalized in `L^2(m)`.
    pub fn eigenvector(&self, k: usize) -> Option<Vec<f64>> {
        match &self.backend {
            Backend::Spectral { vectors, .. } if k < self.dim() => Some(
                vectors
                    .column(k)
                    .iter()
                    .zip(&self.weights)
                    .map(|(q, m)| q / m.sqrt())
                    .collect(),
            ),
            _ => None,
        }
    }

    /// Smallest nonzero eigenvalue.
    pub fn spectral_gap(&self) -> Option<f64> {
        let thr = self.zero_threshold();
        self.eigenvalues()?.iter().copied().find(|&l| l > thr)
    }

    /// `T_t f`.
    pub fn evolve(&self, t: f64, f: &[f64]) -> Result<Vec<f64>> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(LabError::pre(format!("time must be finite and >= 0, got {t}")));
        }
        if f.len() != self.dim() {
            return Err(LabError::pre(format!(
                "vector of length {} for {} points",
                f.len(),
                self.dim()
            )));
        }
        if t == 0.0 {
            return Ok(f.to_vec());
        }
        Ok(match &self.backend {
            Backend::Spectral { eigenvalues, vectors } => {
                let g = DVector::from_iterator(f.len(), f.iter().zip(&self.weights).map(|(v, m)| v * m.sqrt()));
                let mut c = vectors.tr_mul(&g);
                for (ck, lk) in c.iter_mut().zip(eigenvalues.iter()) {
                    *ck *= (-t * lk).exp();
                }
                let h = vectors * c;
                h.iter().zip(&self.weights).map(|(v, m)| v / m.sqrt()).collect()
            }
            Backend::Taylor { generator, norm } => taylor_action(generator, *norm, t, f),
        })
    }
}

/// `exp(-tA) v` by `s` steps of a Taylor series, `s = ceil(t |A|_inf)`.
fn taylor_action(a: &CsrMatrix<f64>, norm: f64, t: f64, v: &[f64]) -> Vec<f64> {
    let steps = (t * norm).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let mut x = v.to_vec();
    let mut term = vec![0.0; v.len()];
    let mut next = vec![0.0; v.len()];
    for _ in 0..steps {
        term.copy_from_slice(&x);
        let mut acc = x.clone();
        for k in 1..60 {
            spmv(a, &term, &mut next);
            let c = -h / k as f64;
            let mut size: f64 = 0.0;
            for (tm, nx) in term.iter_mut().zip(&next) {
                *tm = c * nx;
                size = size.max(tm.abs());
            }
            for (ac, tm) in acc.iter_mut().zip(&term) {
                *ac += tm;
            }
            let scale = acc.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
            if size <= 1e-17 * scale {
                break;
            }
        }
        x = acc;
    }
    x
}

pub fn structure_flags(model: &DirichletFormModel, tol: &Tolerances) -> Result<StructureFlags> {
    let op = SemigroupOperator::new(model, tol);
    let ones = vec![1.0; model.len()];
    let mut conservative = true;
    for t in [1.0, 10.0] {
        let tt = op.evolve(t, &ones)?;
        if tt.iter().any(|v| (v - 1.0).abs() > 1e-10) {
            conservative = false;
        }
    }
    Ok(StructureFlags {
        irreducible: model.is_connected(),
        conservative,
        mass: model.total_mass(),
    })
}

/// Basis of `ker L`. Dense models use the spectral kernel (orthonormal in
/// `L^2(m)`); larger ones the normalized component indicators.
pub fn harmonic_kernel(model: &DirichletFormModel, tol: &Tolerances) -> Vec<Vec<f64>> {
    if model.len() <= tol.dense_limit {
        let op = SemigroupOperator::new(model, tol);
        let thr = op.zero_threshold();
        let ev = op.eigenvalues().expect("dense backend");
        (0..model.len())
            .take_while(|&k| ev[k] <= thr)
            .filter_map(|k| op.eigenvector(k))
            .collect()
    } else {
        let comp = model.components();
        let count = comp.iter().copied().max().map_or(0, |c| c + 1);
        (0..count)
            .map(|c| {
                let v: Vec<f64> = comp.iter().map(|&k| if k == c { 1.0 } else { 0.0 }).collect();
                let norm = model.inner(&v, &v).sqrt();
                v.into_iter().map(|x| x / norm).collect()
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErgodicLimit {
    pub p: f64,
    /// The limit function `(Phi, f) Phi` (constant mean, or zero when killed).
    pub limit: Vec<f64>,
    /// Constant value of the ground state `1/sqrt(m(X))`, or 0 when killed.
    pub phi: f64,
    /// `(t, |T_t f - limit|_p)`.
    pub curve: Vec<(f64, f64)>,
    pub spectral_gap: Option<f64>,
    /// Set for the absorbing-boundary emulation of the infinite-mass case.
    pub emulated: bool,
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0 && p < f64::INFINITY) {
        return Err(LabError::pre(format!("p must lie in (1, inf), got {p}")));
    }
    Ok(())
}

pub fn ergodic_limit(
    model: &DirichletFormModel,
    f: &[f64],
    p: f64,
    times: &[f64],
    tol: &Tolerances,
) -> Result<ErgodicLimit> {
    check_p(p)?;
    if !model.is_connected() {
        return Err(LabError::Disconnected(
            "the ground state is undefined on reducible models".into(),
        ));
    }
    let op = SemigroupOperator::new(model, tol);
    let mass = model.total_mass();
    let phi = 1.0 / mass.sqrt();
    let coef: f64 = model.inner(&vec![phi; model.len()], f);
    let limit = vec![coef * phi; model.len()];
    let curve = curve(&op, f, &limit, model.measure().as_slice(), p, times)?;
    Ok(ErgodicLimit {
        p,
        limit,
        phi,
        curve,
        spectral_gap: op.spectral_gap(),
        emulated: false,
    })
}

/// Ergodic limit of the semigroup killed outside `interior`: the limit is 0.
pub fn absorbing_ergodic_limit(
    model: &DirichletFormModel,
    interior: &[usize],
    f: &[f64],
    p: f64,
    times: &[f64],
    tol: &Tolerances,
) -> Result<ErgodicLimit> {
    check_p(p)?;
    let op = SemigroupOperator::absorbing(model, interior, tol)?;
    let limit = vec![0.0; interior.len()];
    let w: Vec<f64> = interior.iter().map(|&x| model.measure().weight(x)).collect();
    let curve = curve(&op, f, &limit, &w, p, times)?;
    Ok(ErgodicLimit {
        p,
        limit,
        phi: 0.0,
        curve,
        spectral_gap: op.spectral_gap(),
        emulated: true,
    })
}

fn curve(
    op: &SemigroupOperator,
    f: &[f64],
    limit: &[f64],
    w: &[f64],
    p: f64,
    times: &[f64],
) -> Result<Vec<(f64, f64)>> {
    times
        .iter()
        .map(|&t| {
            let ft = op.evolve(t, f)?;
            let d: Vec<f64> = ft.iter().zip(limit).map(|(a, b)| a - b).collect();
            Ok((t, lp_norm(&d, w, p)))
        })
        .collect()
}

/// Exponents `(r, theta)` of the interpolation step in the convergence proof:
/// `r = inf, theta = 2/p` for `p >= 2`, `r = 1, theta = 2(p-1)/p` otherwise.
pub fn littlewood_exponents(p: f64) -> (f64, f64) {
    if p >= 2.0 {
        (f64::INFINITY, 2.0 / p)
    } else {
        (1.0, 2.0 * (p - 1.0) / p)
    }
}

/// `(|g|_p, |g|_r^{1-theta} |g|_2^theta)`.
pub fn littlewood_sides(g: &[f64], m: &[f64], p: f64) -> (f64, f64) {
    let (r, theta) = littlewood_exponents(p);
    (
        lp_norm(g, m, p),
        lp_norm(g, m, r).powf(1.0 - theta) * lp_norm(g, m, 2.0).powf(theta),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_point() -> DirichletFormModel {
        DirichletFormModel::pure_jump(vec![1.0, 1.0], vec![(0, 1, 0.5)], 0).unwrap()
    }

    #[test]
    fn two_point_closed_form() {
        let tol = Tolerances::default();
        let op = SemigroupOperator::new(&two_point(), &tol);
        let f1 = op.evolve(1.0, &[1.0, 0.0]).unwrap();
        let e = (-2.0f64).exp();
        assert_relative_eq!(f1[0], 0.5 + e / 2.0, max_relative = 1e-13);
        assert_relative_eq!(f1[1], 0.5 - e / 2.0, max_relative = 1e-13);
        assert_relative_eq!(op.spectral_gap().unwrap(), 2.0, max_relative = 1e-13);
        assert_eq!(op.evolve(0.0, &[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);
        assert!(op.evolve(-1.0, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn taylor_matches_spectral() {
        let n = 12;
        let edges = (0..n - 1).map(|i| (i, i + 1, 0.5 + 0.1 * i as f64)).collect();
        let m: Vec<f64> = (0..n).map(|i| 1.0 + 0.2 * (i % 3) as f64).collect();
        let model = DirichletFormModel::pure_jump(m, edges, 0).unwrap();
        let dense = SemigroupOperator::new(&model, &Tolerances::default());
        let sparse = SemigroupOperator::new(
            &model,
            &Tolerances {
                dense_limit: 0,
                ..Default::default()
            },
        );
        assert!(!sparse.is_spectral());
        let f: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        for t in [0.3, 2.0, 7.5] {
            let a = dense.evolve(t, &f).unwrap();
            let b = sparse.evolve(t, &f).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12, "t = {t}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn flags_and_kernel() {
        let tol = Tolerances::default();
        let path = DirichletFormModel::pure_jump(vec![1.0; 5], (0..4).map(|i| (i, i + 1, 0.5)).collect(), 0).unwrap();
        let flags = structure_flags(&path, &tol).unwrap();
        assert!(flags.irreducible && flags.conservative);
        assert_eq!(flags.mass, 5.0);
        let k = harmonic_kernel(&path, &tol);
        assert_eq!(k.len(), 1);
        assert!(k[0].iter().all(|v| (v.abs() - 1.0 / 5f64.sqrt()).abs() < 1e-10));
        let split = DirichletFormModel::pure_jump(vec![1.0; 4], vec![(0, 1, 0.5), (2, 3, 0.5)], 0).unwrap();
        assert!(!structure_flags(&split, &tol).unwrap().irreducible);
        assert_eq!(harmonic_kernel(&split, &tol).len(), 2);
        let big = Tolerances {
            dense_limit: 0,
            ..Default::default()
        };
        assert_eq!(harmonic_kernel(&split, &big).len(), 2);
    }

    #[test]
    fn ergodic_two_point() {
        let tol = Tolerances::default();
        let lim = ergodic_limit(&two_point(), &[1.0, 0.0], 2.0, &[0.0, 1.0, 5.0], &tol).unwrap();
        assert_relative_eq!(lim.phi, 1.0 / 2f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(lim.limit[0], 0.5, max_relative = 1e-14);
        // |T_t f - 1/2|_2 = e^{-2t} / sqrt(2)
        for &(t, d) in &lim.curve {
            assert_relative_eq!(d, (-2.0 * t).exp() / 2f64.sqrt(), max_relative = 1e-10);
        }
        assert!(ergodic_limit(&two_point(), &[1.0, 0.0], 1.0, &[1.0], &tol).is_err());
    }

    #[test]
    fn absorbing_limit_is_zero() {
        let tol = Tolerances::default();
        let path = DirichletFormModel::pure_jump(vec![1.0; 7], (0..6).map(|i| (i, i + 1, 0.5)).collect(), 3).unwrap();
        let lim = absorbing_ergodic_limit(&path, &[1, 2, 3, 4, 5], &[1.0; 5], 2.0, &[1.0, 50.0], &tol).unwrap();
        assert!(lim.emulated);
        assert!(lim.curve[1].1 < 1e-3 * lim.curve[0].1);
    }

    #[test]
    fn littlewood_exponent_choices() {
        assert_eq!(littlewood_exponents(4.0), (f64::INFINITY, 0.5));
        assert_eq!(littlewood_exponents(1.5), (1.0, 2.0 / 3.0));
        let m = [1.0, 2.0, 0.5];
        for p in [1.2, 2.0, 3.0, 7.0] {
            let (l, r) = littlewood_sides(&[1.0, -3.0, 0.25], &m, p);
            assert!(l <= r * (1.0 + 1e-12));
        }
    }
}
