//! Volume-growth recurrence test, effective-resistance oracle and the
//! excessive-function check.

use std::fmt;

use rayon::prelude::*;

use crate::config::Tolerances;
use crate::error::{LabError, Result};
use crate::family::ModelFamily;
use crate::fit::{line_fit, power_fit, LineFit};
use crate::form::DirichletFormModel;
use crate::harmonic::{harmonic_tolerance, solve_dirichlet};
use crate::metric::MetricField;

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthCurve {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

impl GrowthCurve {
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() {
            return Err(LabError::pre("radii and values differ in length"));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(LabError::pre("radii must be strictly increasing"));
        }
        if values.iter().any(|v| !(*v > 0.0)) {
            return Err(LabError::pre("growth values must be positive"));
        }
        Ok(GrowthCurve { radii, values })
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Trapezoid partial integrals of `r / g(r)` from the first radius `>= r0`.
    pub fn partial_integrals(&self, r0: f64) -> Vec<(f64, f64)> {
        let pts: Vec<(f64, f64)> = self
            .radii
            .iter()
            .zip(&self.values)
            .filter(|(r, _)| **r >= r0)
            .map(|(r, g)| (*r, r / g))
            .collect();
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(pts.len());
        for (k, &(r, v)) in pts.iter().enumerate() {
            if k > 0 {
                let (rp, vp) = pts[k - 1];
                acc += 0.5 * (r - rp) * (v + vp);
            }
            out.push((r, acc));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Diverges,
    Converges,
    Inconclusive,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Diverges => "diverges",
            Outcome::Converges => "converges",
            Outcome::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub outcome: Outcome,
    /// Fitted growth exponent `alpha` of `g ~ r^alpha`.
    pub exponent: Option<f64>,
    /// RMS residual of the log-log fit.
    pub residual: Option<f64>,
    pub r0: f64,
    /// Set when the divergence is only logarithmic.
    pub logarithmic: bool,
    pub partial_integrals: Vec<(f64, f64)>,
    pub reason: String,
}

/// Decides whether `int^inf r / g(r) dr` diverges from the growth exponent
/// of `g` over the largest decade `[r_max/10, r_max]` above `r0`.
pub fn divergence_verdict(curve: &GrowthCurve, r0: f64, tol: &Tolerances) -> Verdict {
    let partial_integrals = curve.partial_integrals(r0);
    let mut v = Verdict {
        outcome: Outcome::Inconclusive,
        exponent: None,
        residual: None,
        r0,
        logarithmic: false,
        partial_integrals,
        reason: String::new(),
    };
    let usable: Vec<(f64, f64)> = curve
        .radii
        .iter()
        .zip(&curve.values)
        .filter(|(r, _)| **r >= r0 && **r > 0.0)
        .map(|(r, g)| (*r, *g))
        .collect();
    let (Some(first), Some(last)) = (usable.first(), usable.last()) else {
        v.reason = "no radii above r0".into();
        return v;
    };
    let r_max = last.0;
    if r_max < 10.0 * first.0 * (1.0 - 1e-12) {
        v.reason = format!("radii span {:.3} decades, need one", (r_max / first.0).log10());
        return v;
    }
    let window: Vec<(f64, f64)> = usable
        .iter()
        .copied()
        .filter(|(r, _)| *r >= r_max / 10.0 * (1.0 - 1e-12))
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = window.iter().copied().unzip();
    let Some(fit) = power_fit(&xs, &ys) else {
        v.reason = "degenerate fit window".into();
        return v;
    };
    v.exponent = Some(fit.slope);
    v.residual = Some(fit.rms_residual);
    let alpha = fit.slope;
    if alpha < 2.0 - tol.exponent_band {
        v.outcome = Outcome::Diverges;
        v.reason = format!("alpha = {alpha:.4} < 2");
    } else if alpha > 2.0 + tol.exponent_band {
        v.outcome = Outcome::Converges;
        v.reason = format!("alpha = {alpha:.4} > 2");
    } else if alpha <= 2.0 + tol.log_slack {
        // critical band: accept a logarithmic divergence if the partial
        // integrals grow linearly in ln r over the window
        let pts: Vec<(f64, f64)> = v
            .partial_integrals
            .iter()
            .copied()
            .filter(|(r, _)| *r >= r_max / 10.0 * (1.0 - 1e-12))
            .collect();
        let lx: Vec<f64> = pts.iter().map(|(r, _)| r.ln()).collect();
        let iy: Vec<f64> = pts.iter().map(|(_, i)| *i).collect();
        match line_fit(&lx, &iy) {
            Some(lf) if lf.slope > 0.0 && relative_residual(&lf, &iy) < tol.fit_residual => {
                v.outcome = Outcome::Diverges;
                v.logarithmic = true;
                v.reason = format!("alpha = {alpha:.4}, partial integrals ~ {:.4} ln r", lf.slope);
            }
            _ => v.reason = format!("alpha = {alpha:.4} in the critical band without log growth"),
        }
    } else {
        v.reason = format!("alpha = {alpha:.4} in the critical band");
    }
    v
}

/// RMS residual relative to the range of the data.
fn relative_residual(fit: &LineFit, ys: &[f64]) -> f64 {
    let (lo, hi) = ys
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
    if hi > lo {
        fit.rms_residual / (hi - lo)
    } else {
        f64::INFINITY
    }
}

/// Sample radii `j * l0` strictly below the safe radius of the truncation,
/// `l0` the shortest link at the base point.
pub fn default_radii(model: &DirichletFormModel, metric: &MetricField, safe: f64) -> Vec<f64> {
    let l0 = metric.link_lengths(model.base()).fold(f64::INFINITY, f64::min);
    if !l0.is_finite() {
        return Vec::new();
    }
    (1..)
        .map(|j| j as f64 * l0)
        .take_while(|r| *r < safe * (1.0 - 1e-12))
        .collect()
}

/// Ball masses `m(B_r)` in truncation `level`; every radius must lie below
/// the truncation's safe radius. Returns the curve and the safe radius.
pub fn volume_curve(family: &ModelFamily, level: usize, radii: Option<&[f64]>) -> Result<(GrowthCurve, f64)> {
    let t = family.truncation(level)?;
    let metric = MetricField::adapted(&t.model)?;
    let safe = t.safe_radius(&metric);
    let radii = match radii {
        Some(r) => r.to_vec(),
        None => default_radii(&t.model, &metric, safe),
    };
    if let Some(r) = radii.iter().find(|r| !(**r < safe)) {
        return Err(LabError::pre(format!(
            "radius {r} is beyond the coverage of truncation {level} (safe radius {safe})"
        )));
    }
    let values = radii.iter().map(|&r| metric.ball_mass(&t.model, r)).collect();
    Ok((GrowthCurve::new(radii, values)?, safe))
}

/// `R_eff(o, shell of level n)` for every requested level: `f(o) = 1`,
/// `f = 0` on the shell, `R = 1 / E(f)`.
pub fn resistance_curve(family: &ModelFamily, levels: &[usize], tol: &Tolerances) -> Result<Vec<(usize, f64)>> {
    levels
        .par_iter()
        .map(|&n| {
            if n == 0 {
                return Err(LabError::pre("level 0 has no shell separate from the base point"));
            }
            let t = family.truncation(n)?;
            let o = t.model.base();
            let mut boundary: Vec<(usize, f64)> = t.shell.iter().map(|&x| (x, 0.0)).collect();
            boundary.push((o, 1.0));
            let (f, _) = solve_dirichlet(&t.model, &boundary, tol)?;
            Ok((n, 1.0 / t.model.energy(&f)))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResistanceOutcome {
    Bounded,
    DivergentPower,
    DivergentLog,
    Inconclusive,
}

impl ResistanceOutcome {
    pub fn is_divergent(self) -> bool {
        matches!(
            self,
            ResistanceOutcome::DivergentPower | ResistanceOutcome::DivergentLog
        )
    }
}

impl fmt::Display for ResistanceOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ResistanceOutcome::Bounded => "bounded",
            ResistanceOutcome::DivergentPower => "divergent (power)",
            ResistanceOutcome::DivergentLog => "divergent (log)",
            ResistanceOutcome::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResistanceVerdict {
    pub outcome: ResistanceOutcome,
    /// Relative increase over the final tenth of the levels.
    pub tail_increase: f64,
    pub power: Option<LineFit>,
    pub log: Option<LineFit>,
    /// Log-fit RMS residual relative to the data range.
    pub log_relative_residual: Option<f64>,
}

pub fn resistance_verdict(curve: &[(usize, f64)], tol: &Tolerances) -> ResistanceVerdict {
    let mut v = ResistanceVerdict {
        outcome: ResistanceOutcome::Inconclusive,
        tail_increase: f64::NAN,
        power: None,
        log: None,
        log_relative_residual: None,
    };
    let Some(&(n_max, r_last)) = curve.last() else {
        return v;
    };
    let tail: Vec<f64> = curve
        .iter()
        .filter(|(n, _)| *n as f64 >= 0.9 * n_max as f64)
        .map(|(_, r)| *r)
        .collect();
    if tail.len() >= 2 {
        v.tail_increase = (r_last - tail[0]) / r_last;
    }
    let ns: Vec<f64> = curve.iter().map(|(n, _)| *n as f64).collect();
    let rs: Vec<f64> = curve.iter().map(|(_, r)| *r).collect();
    v.power = power_fit(&ns, &rs);
    let ln: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    v.log = line_fit(&ln, &rs);
    v.log_relative_residual = v.log.as_ref().map(|f| relative_residual(f, &rs));
    v.outcome = if v.tail_increase < tol.bounded_increase {
        ResistanceOutcome::Bounded
    } else if v
        .power
        .is_some_and(|f| f.slope >= 0.5 && f.rms_residual < tol.fit_residual)
    {
        ResistanceOutcome::DivergentPower
    } else if v.log.is_some_and(|f| f.slope > 0.0) && v.log_relative_residual.is_some_and(|r| r < tol.fit_residual) {
        ResistanceOutcome::DivergentLog
    } else {
        ResistanceOutcome::Inconclusive
    };
    v
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExcessiveReport {
    pub excessive: bool,
    /// `min (Lh)(x)` over the checked points.
    pub min_generator: f64,
    /// Whether `1 - h` is subharmonic there (only for `|h|_inf <= 1`).
    pub complement_subharmonic: Option<bool>,
    pub reason: Option<String>,
}

/// `h >= 0` bounded is excessive on `points` iff `(Lh)(x) >= -tol` there.
pub fn excessive_check(model: &DirichletFormModel, h: &[f64], points: &[usize], tol: &Tolerances) -> ExcessiveReport {
    if let Some(x) = h.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
        return ExcessiveReport {
            excessive: false,
            min_generator: f64::NAN,
            complement_subharmonic: None,
            reason: Some(format!("h({x}) = {} is not a nonnegative finite value", h[x])),
        };
    }
    let lh = model.apply_generator(h);
    let t = harmonic_tolerance(model, h, tol);
    let min_generator = points.iter().map(|&x| lh[x]).fold(f64::INFINITY, f64::min);
    let excessive = min_generator >= -t;
    let sup = h.iter().fold(0.0_f64, |a, v| a.max(*v));
    let complement_subharmonic = (sup <= 1.0).then(|| {
        let f: Vec<f64> = h.iter().map(|v| 1.0 - v).collect();
        let lf = model.apply_generator(&f);
        points.iter().all(|&x| lf[x] <= t)
    });
    ExcessiveReport {
        excessive,
        min_generator,
        complement_subharmonic,
        reason: None,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecurrenceReport {
    pub family: String,
    pub level: usize,
    pub volume: GrowthCurve,
    pub safe_radius: f64,
    pub volume_verdict: Verdict,
    pub resistance: Vec<(usize, f64)>,
    pub resistance_verdict: ResistanceVerdict,
    /// "volume diverges => resistance diverges".
    pub implication_holds: bool,
}

impl RecurrenceReport {
    pub fn summary_line(&self) -> String {
        let vol = match (self.volume_verdict.outcome, self.volume_verdict.logarithmic) {
            (Outcome::Diverges, true) => "diverges (log)".to_string(),
            (o, _) => o.to_string(),
        };
        format!("volume: {vol}; resistance: {}", self.resistance_verdict.outcome)
    }
}

pub fn recurrence_test(family: &ModelFamily, level: usize, tol: &Tolerances) -> Result<RecurrenceReport> {
    let (volume, safe_radius) = volume_curve(family, level, None)?;
    let volume_verdict = divergence_verdict(&volume, 0.0, tol);
    let levels: Vec<usize> = (1..=level).collect();
    let resistance = resistance_curve(family, &levels, tol)?;
    let resistance_verdict = resistance_verdict(&resistance, tol);
    let implication_holds = volume_verdict.outcome != Outcome::Diverges || resistance_verdict.outcome.is_divergent();
    Ok(RecurrenceReport {
        family: family.spec().to_string(),
        level,
        volume,
        safe_radius,
        volume_verdict,
        resistance,
        resistance_verdict,
        implication_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::FamilySpec;

    fn power_curve(alpha: f64) -> GrowthCurve {
        let radii: Vec<f64> = (1..=400).map(|k| k as f64 * 0.25).collect();
        let values = radii.iter().map(|r| 3.0 * r.powf(alpha)).collect();
        GrowthCurve::new(radii, values).unwrap()
    }

    #[test]
    fn synthetic_verdicts() {
        let tol = Tolerances::default();
        assert_eq!(
            divergence_verdict(&power_curve(1.0), 0.0, &tol).outcome,
            Outcome::Diverges
        );
        assert_eq!(
            divergence_verdict(&power_curve(3.0), 0.0, &tol).outcome,
            Outcome::Converges
        );
        let v2 = divergence_verdict(&power_curve(2.0), 0.0, &tol);
        assert_eq!(v2.outcome, Outcome::Diverges);
        assert!(v2.logarithmic);
        assert_eq!(
            divergence_verdict(&power_curve(2.05), 0.0, &tol).outcome,
            Outcome::Inconclusive
        );
        let short = GrowthCurve::new(vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(divergence_verdict(&short, 0.0, &tol).outcome, Outcome::Inconclusive);
    }

    #[test]
    fn partial_integral_trapezoid() {
        let c = GrowthCurve::new(vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]).unwrap();
        let p = c.partial_integrals(0.0);
        assert_eq!(p, vec![(1.0, 0.0), (2.0, 1.0), (3.0, 2.0)]);
        assert!(GrowthCurve::new(vec![1.0, 1.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn z1_resistance_and_volume() {
        let tol = Tolerances::default();
        let fam = ModelFamily::new(FamilySpec::Lattice(1), 0).unwrap();
        let res = resistance_curve(&fam, &[1, 2, 7], &tol).unwrap();
        for (n, r) in res {
            assert!((r - n as f64 / 2.0).abs() < 1e-10);
        }
        let (curve, _) = volume_curve(&fam, 12, None).unwrap();
        for (r, m) in curve.radii.iter().zip(&curve.values) {
            assert_eq!(*m, 2.0 * (2f64.sqrt() * r + 1e-9).floor() + 1.0);
        }
        assert!(volume_curve(&fam, 12, Some(&[20.0])).is_err());
    }

    #[test]
    fn excessive_examples() {
        let tol = Tolerances::default();
        let path = DirichletFormModel::pure_jump(vec![1.0; 11], (0..10).map(|i| (i, i + 1, 0.5)).collect(), 0).unwrap();
        let interior: Vec<usize> = (1..10).collect();
        assert!(excessive_check(&path, &[1.0; 11], &(0..11).collect::<Vec<_>>(), &tol).excessive);
        let kink: Vec<f64> = (0..11).map(|n| (n as f64).min(5.0) / 5.0).collect();
        let rep = excessive_check(&path, &kink, &interior, &tol);
        assert!(rep.excessive);
        assert_eq!(rep.complement_subharmonic, Some(true));
        let z = DirichletFormModel::pure_jump(vec![1.0; 11], (0..10).map(|i| (i, i + 1, 0.5)).collect(), 5).unwrap();
        let abs: Vec<f64> = (0..11).map(|i| (i as f64 - 5.0).abs() / 5.0).collect();
        assert!(!excessive_check(&z, &abs, &interior, &tol).excessive);
    }
}
