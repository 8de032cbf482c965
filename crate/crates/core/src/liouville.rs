//! Certificates for the key estimate, the Caccioppoli-type inequality and the
//! squared estimate, and the Yau / Karp Liouville arguments on truncations.
//!
//! Mesh intervals enter every pair sum as a nearest-neighbour kernel
//! `a / (2 dx)`: on a discrete mesh the local energy obeys no chain rule, and
//! folding it into the kernel keeps all estimates exact. The cut-off widths
//! then use `MetricField::effective_jump_size`.
//!
//! Constants (with `C~ = 2 / ((p-1) ∧ 1)`):
//!
//! * key estimate: `C~`;
//! * Caccioppoli: `2 C~^2`. Young's inequality with `eps = 1/(2 C~)` turns
//!   the right side of the key estimate into `K/2 + (C~^2/2) sum (f∨f)^p
//!   (∇eta)^2 J`, so `K <= C~^2 sum (f∨f)^p (∇eta)^2 J`; then
//!   `(f∨f)^p <= f(x)^p + f(y)^p`, symmetry and the cut-off bound
//!   `Gamma(eta) <= (R-r)^-2 1_ring m` give `K <= 2 C~^2 / (R-r)^2 |f 1_ring|_p^p`;
//! * squared estimate: `2 C~^2` by Cauchy-Schwarz on the same sum;
//! * Karp step: `16` times the squared-estimate constant.

use std::fmt;

use crate::config::Tolerances;
use crate::error::{LabError, Result};
use crate::form::DirichletFormModel;
use crate::harmonic::harmonic_tolerance;
use crate::metric::{cutoff_profile, in_ball, MetricField};
use crate::recurrence::{default_radii, divergence_verdict, GrowthCurve, Outcome, Verdict};

pub fn key_constant(p: f64) -> f64 {
    2.0 / (p - 1.0).min(1.0)
}

pub fn caccioppoli_constant(p: f64) -> f64 {
    2.0 * key_constant(p).powi(2)
}

pub fn squared_constant(p: f64) -> f64 {
    2.0 * key_constant(p).powi(2)
}

pub fn karp_constant(p: f64) -> f64 {
    16.0 * squared_constant(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertificateKind {
    KeyEstimate,
    Caccioppoli,
    Squared,
}

impl fmt::Display for CertificateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CertificateKind::KeyEstimate => "key",
            CertificateKind::Caccioppoli => "caccioppoli",
            CertificateKind::Squared => "squared",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertificateContext {
    pub p: f64,
    pub r: Option<f64>,
    pub big_r: Option<f64>,
    pub s: f64,
    /// Truncation level `n` of `f_n = f ∧ n`.
    pub n: Option<f64>,
    /// Integrability exponent recorded for the squared estimate.
    pub q: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InequalityCertificate {
    pub kind: CertificateKind,
    pub lhs: f64,
    pub rhs: f64,
    pub constant_used: f64,
    pub slack: f64,
    pub pass: bool,
    pub context: CertificateContext,
}

impl InequalityCertificate {
    fn new(
        kind: CertificateKind,
        lhs: f64,
        rhs: f64,
        constant_used: f64,
        context: CertificateContext,
        tol: &Tolerances,
    ) -> Self {
        InequalityCertificate {
            kind,
            lhs,
            rhs,
            constant_used,
            slack: rhs - lhs,
            pass: tol.leq(lhs, rhs),
            context,
        }
    }

    /// Smallest constant for which this instance would still pass.
    pub fn empirical_constant(&self) -> f64 {
        if self.rhs > 0.0 {
            self.lhs * self.constant_used / self.rhs
        } else if self.lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

/// `base^e * factor`, with `0^e` for `e < 0` allowed only against a zero
/// factor (where the pair contributes nothing).
fn weighted_pow(base: f64, e: f64, factor: f64) -> Result<f64> {
    if base == 0.0 && e < 0.0 {
        if factor == 0.0 {
            return Ok(0.0);
        }
        return Err(LabError::DegeneratePower(format!(
            "0^{e} against nonzero factor {factor}"
        )));
    }
    Ok(base.powf(e) * factor)
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0 && p < f64::INFINITY) {
        return Err(LabError::pre(format!("p must lie in (1, inf), got {p}")));
    }
    Ok(())
}

fn check_f(model: &DirichletFormModel, f: &[f64]) -> Result<()> {
    if f.len() != model.len() {
        return Err(LabError::pre(format!(
            "f has {} values for {} points",
            f.len(),
            model.len()
        )));
    }
    if let Some(x) = f.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(LabError::pre(format!(
            "f must be nonnegative and finite, f({x}) = {}",
            f[x]
        )));
    }
    Ok(())
}

/// Requires `Lf <= tol` on `supp phi` and every point linked to it.
pub fn subharmonic_gate(model: &DirichletFormModel, f: &[f64], phi: &[f64], tol: &Tolerances) -> Result<()> {
    let lf = model.apply_generator(f);
    let t = harmonic_tolerance(model, f, tol);
    let mut region = vec![false; model.len()];
    for x in (0..model.len()).filter(|&x| phi[x] != 0.0) {
        region[x] = true;
        for l in model.links(x) {
            region[l.to] = true;
        }
    }
    match (0..model.len()).find(|&x| region[x] && lf[x] > t) {
        Some(x) => Err(LabError::pre(format!(
            "f is not subharmonic at {x} near the test-function support: (Lf)({x}) = {:e}",
            lf[x]
        ))),
        None => Ok(()),
    }
}

/// `sum_x sum_y w(x,y) (f(x)∨f(y))^{p-2} g(y)^2 (f(x)-f(y))^2` over ordered
/// pairs accepted by `keep`.
fn weighted_gradient_sum(
    model: &DirichletFormModel,
    f: &[f64],
    g: &[f64],
    p: f64,
    keep: impl Fn(usize, usize) -> bool,
) -> Result<f64> {
    let mut s = 0.0;
    for x in 0..model.len() {
        for l in model.links(x) {
            let y = l.to;
            if !keep(x, y) {
                continue;
            }
            let d = f[x] - f[y];
            s += l.weight * weighted_pow(f[x].max(f[y]), p - 2.0, g[y] * g[y] * d * d)?;
        }
    }
    Ok(s)
}

/// Global left side `sum (f∨f)^{p-2} (∇f)^2 J` (test function `1`). On a
/// connected model it vanishes exactly when `f` is constant.
pub fn constancy_lhs(model: &DirichletFormModel, f: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    check_f(model, f)?;
    weighted_gradient_sum(model, f, &vec![1.0; model.len()], p, |_, _| true)
}

/// `|f 1_{B_outer \ B_inner}|_p^p`.
fn ring_norm(model: &DirichletFormModel, metric: &MetricField, f: &[f64], p: f64, inner: f64, outer: f64) -> f64 {
    let d = metric.dist();
    (0..model.len())
        .filter(|&x| in_ball(d[x], outer) && !in_ball(d[x], inner))
        .map(|x| model.measure().weight(x) * f[x].powf(p))
        .sum()
}

/// Default truncation level `ceil(max f) + 1`, so that `f_n = f`.
pub fn default_level(f: &[f64]) -> f64 {
    f.iter().fold(0.0_f64, |a, v| a.max(*v)).ceil() + 1.0
}

pub fn key_estimate_sides(
    model: &DirichletFormModel,
    metric: &MetricField,
    f: &[f64],
    phi: &[f64],
    p: f64,
    n: Option<f64>,
    tol: &Tolerances,
) -> Result<InequalityCertificate> {
    check_p(p)?;
    check_f(model, f)?;
    if phi.len() != model.len() {
        return Err(LabError::pre("test function has the wrong length"));
    }
    let n = n.unwrap_or_else(|| default_level(f));
    if !(n > 0.0) {
        return Err(LabError::pre(format!("truncation level must be positive, got {n}")));
    }
    subharmonic_gate(model, f, phi, tol)?;
    let fnn: Vec<f64> = f.iter().map(|v| v.min(n)).collect();
    let lhs = weighted_gradient_sum(model, &fnn, phi, p, |_, _| true)?;
    let c = key_constant(p);
    let mut cross = 0.0;
    for x in 0..model.len() {
        for l in model.links(x) {
            let y = l.to;
            cross += l.weight * fnn[x].powf(p - 1.0) * phi[y] * (f[x] - f[y]) * (phi[x] - phi[y]);
        }
    }
    let ctx = CertificateContext {
        p,
        r: None,
        big_r: None,
        s: metric.effective_jump_size(),
        n: Some(n),
        q: None,
    };
    Ok(InequalityCertificate::new(
        CertificateKind::KeyEstimate,
        lhs,
        -c * cross,
        c,
        ctx,
        tol,
    ))
}

fn check_radii(r: f64, big_r: f64) -> Result<()> {
    if !(r > 0.0) || !(big_r > r) || !big_r.is_finite() {
        return Err(LabError::pre(format!("radii need 0 < r < R, got r = {r}, R = {big_r}")));
    }
    Ok(())
}

pub fn caccioppoli_sides(
    model: &DirichletFormModel,
    metric: &MetricField,
    f: &[f64],
    p: f64,
    r: f64,
    big_r: f64,
    constant: f64,
    tol: &Tolerances,
) -> Result<InequalityCertificate> {
    check_p(p)?;
    check_radii(r, big_r)?;
    check_f(model, f)?;
    let eta = cutoff_profile(metric, r, big_r)?;
    subharmonic_gate(model, f, &eta.values, tol)?;
    let ones = vec![1.0; model.len()];
    let d = metric.dist();
    let lhs = weighted_gradient_sum(model, f, &ones, p, |_, y| in_ball(d[y], r))?;
    let s = metric.effective_jump_size();
    let rhs = constant / (big_r - r).powi(2) * ring_norm(model, metric, f, p, r - s, big_r + s);
    let ctx = CertificateContext {
        p,
        r: Some(r),
        big_r: Some(big_r),
        s,
        n: None,
        q: Some(f64::INFINITY),
    };
    Ok(InequalityCertificate::new(
        CertificateKind::Caccioppoli,
        lhs,
        rhs,
        constant,
        ctx,
        tol,
    ))
}

pub fn squared_estimate_sides(
    model: &DirichletFormModel,
    metric: &MetricField,
    f: &[f64],
    p: f64,
    r: f64,
    big_r: f64,
    tol: &Tolerances,
) -> Result<InequalityCertificate> {
    check_p(p)?;
    check_radii(r, big_r)?;
    check_f(model, f)?;
    let eta = cutoff_profile(metric, r, big_r)?;
    subharmonic_gate(model, f, &eta.values, tol)?;
    let s = metric.effective_jump_size();
    let d = metric.dist();
    let k = weighted_gradient_sum(model, f, &eta.values, p, |_, _| true)?;
    let annulus = weighted_gradient_sum(model, f, &eta.values, p, |x, y| {
        let outer = in_ball(d[x], big_r + s) && in_ball(d[y], big_r + s);
        let inner = in_ball(d[x], r - s) && in_ball(d[y], r - s);
        outer && !inner
    })?;
    let c = squared_constant(p);
    let rhs = c / (big_r - r).powi(2) * ring_norm(model, metric, f, p, r - s, big_r + s) * annulus;
    let ctx = CertificateContext {
        p,
        r: Some(r),
        big_r: Some(big_r),
        s,
        n: None,
        q: Some(p.max(2.0 * p - 2.0)),
    };
    Ok(InequalityCertificate::new(
        CertificateKind::Squared,
        k * k,
        rhs,
        c,
        ctx,
        tol,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KarpStep {
    pub n: usize,
    pub radius: f64,
    pub v: f64,
    pub q_prev: f64,
    pub q: f64,
    /// `R_n^2 / v_n` (infinite when `v_n = 0`).
    pub lhs: f64,
    /// `16 C (1/Q_{n-1} - 1/Q_n)`.
    pub rhs: f64,
    /// Whether the division form applies (`Q_{n-1} > 0`, `v_n > 0`).
    pub active: bool,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KarpVerdict {
    Constant,
    Inconclusive,
    Contradiction,
}

impl fmt::Display for KarpVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KarpVerdict::Constant => "constant",
            KarpVerdict::Inconclusive => "inconclusive",
            KarpVerdict::Contradiction => "contradiction",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KarpSequence {
    pub p: f64,
    pub base_radius: f64,
    pub s: f64,
    pub constant: f64,
    /// `R_n` for `n = 0..=N`.
    pub radii: Vec<f64>,
    /// `v_n`, `Q_n` for `n = 1..=N` (index 0 holds `n = 1`).
    pub v: Vec<f64>,
    pub q: Vec<f64>,
    pub steps: Vec<KarpStep>,
    pub proxy: Verdict,
    pub verdict: KarpVerdict,
    pub reason: String,
}

/// Runs the doubling argument on `R_n = 2^n R` while `R_n <= max_radius`.
pub fn karp_run(
    model: &DirichletFormModel,
    metric: &MetricField,
    f: &[f64],
    p: f64,
    base_radius: f64,
    max_radius: f64,
    tol: &Tolerances,
) -> Result<KarpSequence> {
    check_p(p)?;
    check_f(model, f)?;
    let s = metric.effective_jump_size();
    if !(base_radius > 0.0) || base_radius < 4.0 * s {
        return Err(LabError::pre(format!(
            "Karp needs R >= 4s > 0, got R = {base_radius}, s = {s}"
        )));
    }
    let mut radii = vec![base_radius];
    while radii.last().unwrap() * 2.0 <= max_radius {
        radii.push(radii.last().unwrap() * 2.0);
    }
    let levels = radii.len() - 1;
    if levels < 2 {
        return Err(LabError::pre(format!(
            "radius {max_radius} leaves fewer than two doublings of R = {base_radius}"
        )));
    }
    let d = metric.dist();
    let c = squared_constant(p);
    let (mut v, mut q) = (Vec::new(), Vec::new());
    for n in 1..=levels {
        let (lo, hi) = (radii[n - 1], radii[n]);
        let eta = cutoff_profile(metric, lo + s, hi - s)?;
        subharmonic_gate(model, f, &eta.values, tol)?;
        v.push(ring_norm(model, metric, f, p, lo, hi));
        q.push(weighted_gradient_sum(model, f, &eta.values, p, |x, y| {
            in_ball(d[x], hi) && in_ball(d[y], hi)
        })?);
    }
    let mut steps = Vec::new();
    for n in 2..=levels {
        let (qp, qn, vn, rn) = (q[n - 2], q[n - 1], v[n - 1], radii[n]);
        let active = qp > 0.0 && vn > 0.0;
        let lhs = if vn > 0.0 { rn * rn / vn } else { f64::INFINITY };
        let rhs = if qp > 0.0 {
            16.0 * c * (1.0 / qp - 1.0 / qn)
        } else {
            f64::INFINITY
        };
        // product form Q_{n-1} Q_n <= 16 C v_n / R_n^2 (Q_n - Q_{n-1}) covers v_n = 0
        let pass = if active {
            tol.leq(lhs, rhs)
        } else {
            tol.leq(qp * qn, 16.0 * c * vn / (rn * rn) * (qn - qp))
        };
        steps.push(KarpStep {
            n,
            radius: rn,
            v: vn,
            q_prev: qp,
            q: qn,
            lhs,
            rhs,
            active,
            pass,
        });
    }
    // divergence proxy for int^inf r / |f 1_{B_r}|_p^p dr
    let top = *radii.last().unwrap();
    let sample: Vec<f64> = default_radii(model, metric, top * (1.0 + 1e-12)).into_iter().collect();
    let norms: Vec<(f64, f64)> = sample
        .iter()
        .map(|&r| (r, ring_norm(model, metric, f, p, -1.0, r)))
        .filter(|(_, g)| *g > 0.0)
        .collect();
    let proxy = match GrowthCurve::new(norms.iter().map(|x| x.0).collect(), norms.iter().map(|x| x.1).collect()) {
        Ok(curve) => divergence_verdict(&curve, 0.0, tol),
        Err(e) => Verdict {
            outcome: Outcome::Inconclusive,
            exponent: None,
            residual: None,
            r0: 0.0,
            logarithmic: false,
            partial_integrals: Vec::new(),
            reason: e.to_string(),
        },
    };
    let scale = f.iter().fold(1.0_f64, |a, v| a.max(v.powf(p)));
    let inside: Vec<usize> = (0..model.len()).filter(|&x| in_ball(d[x], top)).collect();
    let variance = local_variance(model, f, &inside);
    let all_pass = steps.iter().all(|s| s.pass);
    let (verdict, reason) = if !all_pass {
        (KarpVerdict::Contradiction, "a telescoping step failed".to_string())
    } else if q.iter().all(|&x| x <= tol.inequality_abs * scale) {
        if variance <= tol.harmonic * scale {
            (KarpVerdict::Constant, "all Q_n vanish".to_string())
        } else {
            (
                KarpVerdict::Contradiction,
                format!("Q_n vanish but variance is {variance:e}"),
            )
        }
    } else if proxy.outcome == Outcome::Diverges {
        if variance <= tol.harmonic * scale {
            (KarpVerdict::Constant, "divergence proxy holds".to_string())
        } else {
            (
                KarpVerdict::Contradiction,
                format!("divergence proxy holds on the finite window but f varies (variance {variance:e})"),
            )
        }
    } else {
        (KarpVerdict::Inconclusive, format!("divergence proxy: {}", proxy.reason))
    };
    Ok(KarpSequence {
        p,
        base_radius,
        s,
        constant: 16.0 * c,
        radii,
        v,
        q,
        steps,
        proxy,
        verdict,
        reason,
    })
}

/// `m`-weighted variance of `f` over `points`.
fn local_variance(model: &DirichletFormModel, f: &[f64], points: &[usize]) -> f64 {
    let mass: f64 = points.iter().map(|&x| model.measure().weight(x)).sum();
    if mass == 0.0 {
        return 0.0;
    }
    let mean = points.iter().map(|&x| model.measure().weight(x) * f[x]).sum::<f64>() / mass;
    points
        .iter()
        .map(|&x| model.measure().weight(x) * (f[x] - mean).powi(2))
        .sum::<f64>()
        / mass
}

/// One truncation of a Yau run: `f` is assumed subharmonic on `B_radius`.
#[derive(Clone, Copy, Debug)]
pub struct YauInstance<'a> {
    pub model: &'a DirichletFormModel,
    pub metric: &'a MetricField,
    pub f: &'a [f64],
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum YauVerdict {
    Constant,
    /// A hypothesis of the theorem fails on the data (e.g. `f ∉ L^p`).
    HypothesisViolated(String),
    /// The subharmonicity gate rejected the input.
    Rejected(String),
    Contradiction,
    Inconclusive,
}

impl fmt::Display for YauVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            YauVerdict::Constant => f.write_str("constant"),
            YauVerdict::HypothesisViolated(m) => write!(f, "hypothesis violated: {m}"),
            YauVerdict::Rejected(m) => write!(f, "rejected: {m}"),
            YauVerdict::Contradiction => f.write_str("contradiction"),
            YauVerdict::Inconclusive => f.write_str("inconclusive"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct YauRow {
    pub r: f64,
    pub big_r: f64,
    pub certificate: InequalityCertificate,
    /// `|f 1_{B_{R+s}}|_p^p`.
    pub norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct YauReport {
    pub rows: Vec<YauRow>,
    pub verdict: YauVerdict,
}

/// Monitors the Caccioppoli certificate with `R = radius - s` growing over
/// the family and `r = R/2`.
pub fn yau_run(instances: &[YauInstance<'_>], p: f64, tol: &Tolerances) -> Result<YauReport> {
    check_p(p)?;
    if instances.is_empty() {
        return Err(LabError::pre("Yau run needs at least one truncation"));
    }
    for w in instances.windows(2) {
        let next = crate::family::label_index(w[1].model);
        for (x, l) in w[0].model.space().labels().iter().enumerate() {
            match next.get(l.as_slice()) {
                Some(&y) if (w[0].f[x] - w[1].f[y]).abs() <= 1e-12 * w[0].f[x].abs().max(1.0) => {}
                _ => {
                    return Err(LabError::InvalidModel(
                        "Yau run needs nested truncations with consistent f".into(),
                    ))
                }
            }
        }
    }
    let c = caccioppoli_constant(p);
    let mut rows = Vec::new();
    for inst in instances {
        let s = inst.metric.effective_jump_size();
        let big_r = inst.radius - s;
        let r = big_r / 2.0;
        let cert = match caccioppoli_sides(inst.model, inst.metric, inst.f, p, r, big_r, c, tol) {
            Ok(cert) => cert,
            Err(LabError::Precondition(m)) => {
                return Ok(YauReport {
                    rows,
                    verdict: YauVerdict::Rejected(m),
                })
            }
            Err(e) => return Err(e),
        };
        let norm = ring_norm(inst.model, inst.metric, inst.f, p, -1.0, big_r + s);
        rows.push(YauRow {
            r,
            big_r,
            certificate: cert,
            norm,
        });
    }
    let scale = instances
        .iter()
        .flat_map(|i| i.f.iter())
        .fold(1.0_f64, |a, v| a.max(v.powf(p)));
    let verdict = if rows.iter().any(|r| !r.certificate.pass) {
        YauVerdict::Contradiction
    } else if rows.iter().all(|r| r.certificate.lhs <= tol.inequality_abs * scale) {
        YauVerdict::Constant
    } else {
        let growth = match rows.as_slice() {
            [.., a, b] if b.norm > 0.0 => (b.norm - a.norm) / b.norm,
            _ => f64::INFINITY,
        };
        if growth >= tol.bounded_increase {
            YauVerdict::HypothesisViolated(format!(
                "|f 1_B_r|_p^p still grows by {:.2}% at the last truncation",
                100.0 * growth
            ))
        } else {
            YauVerdict::Inconclusive
        }
    };
    Ok(YauReport { rows, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn zseg(k: i64) -> DirichletFormModel {
        let n = (2 * k + 1) as usize;
        DirichletFormModel::pure_jump(vec![1.0; n], (0..n - 1).map(|i| (i, i + 1, 0.5)).collect(), k as usize).unwrap()
    }

    fn abs_k(k: i64) -> Vec<f64> {
        (-k..=k).map(|x| x.abs() as f64).collect()
    }

    #[test]
    fn constants() {
        assert_eq!(key_constant(2.0), 2.0);
        assert_eq!(key_constant(1.5), 4.0);
        assert_eq!(key_constant(4.0), 2.0);
        assert_eq!(caccioppoli_constant(1.5), 32.0);
    }

    #[test]
    fn constant_f_zero_sides() {
        let tol = Tolerances::default();
        let model = zseg(10);
        let metric = MetricField::adapted(&model).unwrap();
        let eta = cutoff_profile(&metric, 1.0, 3.0).unwrap();
        let cert = key_estimate_sides(&model, &metric, &[2.0; 21], &eta.values, 1.5, None, &tol).unwrap();
        assert_eq!((cert.lhs, cert.rhs), (0.0, 0.0));
        assert!(cert.pass);
    }

    #[test]
    fn p2_pairing_identity() {
        // lhs - rhs + (1/2) sum (∇f)^2 (∇phi)^2 J = <Lf, phi^2 f>_m for p = 2
        let tol = Tolerances::default();
        let model = zseg(10);
        let metric = MetricField::adapted(&model).unwrap();
        let f = abs_k(10);
        let eta = cutoff_profile(&metric, 2f64.sqrt(), 2.0 * 2f64.sqrt()).unwrap();
        let cert = key_estimate_sides(&model, &metric, &f, &eta.values, 2.0, None, &tol).unwrap();
        let phi = &eta.values;
        let defect = 0.5 * model.pair_sum(|x, y| ((f[x] - f[y]) * (phi[x] - phi[y])).powi(2));
        let g: Vec<f64> = f.iter().zip(phi).map(|(a, b)| a * b * b).collect();
        let pairing = model.inner(&model.apply_generator(&f), &g);
        assert_relative_eq!(cert.lhs - cert.rhs + defect, pairing, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_power_convention() {
        assert_eq!(weighted_pow(0.0, -0.5, 0.0).unwrap(), 0.0);
        assert!(matches!(
            weighted_pow(0.0, -0.5, 1.0),
            Err(LabError::DegeneratePower(_))
        ));
    }

    #[test]
    fn rejects_bad_inputs() {
        let tol = Tolerances::default();
        let model = zseg(5);
        let metric = MetricField::adapted(&model).unwrap();
        let f = abs_k(5);
        assert!(caccioppoli_sides(&model, &metric, &f, 1.0, 1.0, 2.0, 8.0, &tol).is_err());
        assert!(caccioppoli_sides(&model, &metric, &f, 2.0, 2.0, 2.0, 8.0, &tol).is_err());
        let mut neg = f.clone();
        neg[0] = -1.0;
        assert!(squared_estimate_sides(&model, &metric, &neg, 2.0, 1.0, 2.0, &tol).is_err());
        // not subharmonic near the support
        let bump: Vec<f64> = (-5i64..=5).map(|k| 0.5f64.powi(k.abs() as i32)).collect();
        assert!(matches!(
            caccioppoli_sides(&model, &metric, &bump, 2.0, 1.0, 2.0, 8.0, &tol),
            Err(LabError::Precondition(_))
        ));
    }

    #[test]
    fn karp_constant_function() {
        let tol = Tolerances::default();
        let model = zseg(200);
        let metric = MetricField::adapted(&model).unwrap();
        let f = vec![1.0; model.len()];
        let s = metric.effective_jump_size();
        let run = karp_run(&model, &metric, &f, 2.0, 4.0 * s, 120.0, &tol).unwrap();
        assert!(run.q.iter().all(|q| *q == 0.0));
        assert_eq!(run.verdict, KarpVerdict::Constant);
        assert!(karp_run(&model, &metric, &f, 2.0, s, 120.0, &tol).is_err());
    }
}
