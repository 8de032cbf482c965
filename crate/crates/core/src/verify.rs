//! The ten acceptance criteria as deterministic, seeded checks. Reports
//! carry no timings so that repeated runs are byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::Tolerances;
use crate::error::{LabError, Result};
use crate::experiment::subharmonic_radius;
use crate::family::{random_graph, random_mixed, FamilySpec, ModelFamily};
use crate::form::{lp_norm, DirichletFormModel};
use crate::harmonic::{gamma_vanishing_liouville, solve_dirichlet};
use crate::io::{model_to_string, parse_model};
use crate::liouville::{
    caccioppoli_constant, caccioppoli_sides, constancy_lhs, default_level, karp_run, key_estimate_sides,
    squared_estimate_sides, InequalityCertificate,
};
use crate::metric::{cutoff_profile, verify_cutoff, verify_intrinsic, verify_localization, MetricField};
use crate::recurrence::{recurrence_test, Outcome, ResistanceOutcome};
use crate::semigroup::{ergodic_limit, harmonic_kernel, SemigroupOperator};

pub const CRITERIA: [&str; 10] = [
    "key estimate",
    "caccioppoli",
    "squared estimate",
    "ergodic decay",
    "basic liouville",
    "gamma-vanishing liouville",
    "karp telescoping",
    "recurrence cross-validation",
    "cut-off and intrinsic certificates",
    "round-trip and determinism",
];

#[derive(Clone, Debug, PartialEq)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    /// Per-instance TSV table.
    pub table: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "{} criterion {:>2} ({}): {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

fn result(id: usize, pass: bool, detail: String, table: String) -> CriterionResult {
    CriterionResult {
        id,
        name: CRITERIA[id - 1],
        pass,
        detail,
        table,
    }
}

pub const BATTERY_SIZE: usize = 500;
pub const BATTERY_P: [f64; 5] = [1.2, 1.5, 2.0, 3.0, 4.0];

/// A base model of the inequality battery with its metric.
pub struct BatteryModel {
    pub name: &'static str,
    pub model: DirichletFormModel,
    pub metric: MetricField,
    /// Points new at the top level (where boundary data is placed).
    pub shell: Vec<usize>,
}

pub fn battery_models() -> Result<Vec<BatteryModel>> {
    [
        ("z1", FamilySpec::Lattice(1), 30),
        ("z2", FamilySpec::Lattice(2), 8),
        ("tree:2", FamilySpec::Tree(2), 7),
    ]
    .into_iter()
    .map(|(name, spec, level)| {
        let t = ModelFamily::new(spec, 0)?.truncation(level)?;
        let metric = MetricField::adapted(&t.model)?;
        Ok(BatteryModel {
            name,
            model: t.model,
            metric,
            shell: t.shell,
        })
    })
    .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatteryInstance {
    pub index: usize,
    pub model: usize,
    pub f_kind: &'static str,
    pub f: Vec<f64>,
    pub p: f64,
    pub r: f64,
    pub big_r: f64,
    /// Truncation level for the key estimate (`None`: default).
    pub n: Option<f64>,
}

/// Nonnegative `f` subharmonic on a ball around the base point, with radii
/// `0 < r < R` such that `B_{R+s}` stays inside that ball.
pub fn battery(models: &[BatteryModel], seed: u64, count: usize, tol: &Tolerances) -> Result<Vec<BatteryInstance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let index = out.len();
        let mi = index % models.len();
        let bm = &models[mi];
        let (f_kind, f) = match (index / models.len()) % 3 {
            0 => (
                "abs-coordinate",
                (0..bm.model.len())
                    .map(|x| bm.model.space().label(x)[0].abs() as f64)
                    .collect(),
            ),
            1 => {
                let mut bnd = vec![(bm.model.base(), 0.0)];
                bnd.extend(bm.shell.iter().map(|&x| (x, rng.gen_range(0.0..=3.0))));
                ("dirichlet", solve_dirichlet(&bm.model, &bnd, tol)?.0)
            }
            _ => {
                let c = rng.gen_range(0.0..=0.3) * bm.metric.diameter_from_base();
                (
                    "clipped-cone",
                    bm.metric.dist().iter().map(|d| (d - c).max(0.0)).collect(),
                )
            }
        };
        let s = bm.metric.effective_jump_size();
        let top = subharmonic_radius(&bm.model, &bm.metric, &f, tol) - s;
        let top = top.min(bm.metric.diameter_from_base()) * (1.0 - 1e-9);
        if !(top > 0.0) {
            return Err(LabError::Solver(format!(
                "battery model {} leaves no admissible radius",
                bm.name
            )));
        }
        let big_r = rng.gen_range(0.2..=1.0) * top;
        let r = rng.gen_range(0.05..=0.9) * big_r;
        let p = BATTERY_P[rng.gen_range(0..BATTERY_P.len())];
        let n = if rng.gen_bool(0.5) {
            None
        } else {
            Some(rng.gen_range(1..=default_level(&f) as u32) as f64)
        };
        out.push(BatteryInstance {
            index,
            model: mi,
            f_kind,
            f,
            p,
            r,
            big_r,
            n,
        });
    }
    Ok(out)
}

const BATTERY_HEADER: &str = "instance\tfamily\tf\tp\tr\tR\tn\tlhs\trhs\tconstant\tempirical_constant\tpass\n";

fn battery_row(t: &mut String, models: &[BatteryModel], inst: &BatteryInstance, c: &InequalityCertificate) {
    let n = inst.n.map_or("-".to_string(), |v| v.to_string());
    let _ = writeln!(
        t,
        "{}\t{}\t{}\t{}\t{:.16e}\t{:.16e}\t{n}\t{:.16e}\t{:.16e}\t{:.16e}\t{:.16e}\t{}",
        inst.index,
        models[inst.model].name,
        inst.f_kind,
        inst.p,
        inst.r,
        inst.big_r,
        c.lhs,
        c.rhs,
        c.constant_used,
        c.empirical_constant(),
        c.pass
    );
}

fn run_battery(
    id: usize,
    seed: u64,
    tol: &Tolerances,
    cert: impl Fn(&BatteryModel, &BatteryInstance) -> Result<InequalityCertificate> + Sync,
) -> Result<CriterionResult> {
    let models = battery_models()?;
    let inst = battery(&models, seed, BATTERY_SIZE, tol)?;
    let certs: Vec<InequalityCertificate> = inst
        .par_iter()
        .map(|i| cert(&models[i.model], i))
        .collect::<Result<_>>()?;
    let mut table = String::from(BATTERY_HEADER);
    let mut worst = [0.0_f64; BATTERY_P.len()];
    for (i, c) in inst.iter().zip(&certs) {
        battery_row(&mut table, &models, i, c);
        let k = BATTERY_P.iter().position(|q| *q == i.p).unwrap_or(0);
        worst[k] = worst[k].max(c.empirical_constant());
    }
    let failed = certs.iter().filter(|c| !c.pass).count();
    let mut detail = format!("{}/{} instances pass", certs.len() - failed, certs.len());
    if id == 2 {
        detail.push_str("; min empirical constant per p:");
        for (p, w) in BATTERY_P.iter().zip(worst) {
            let _ = write!(detail, " p={p}: {w:.4} (certified {:.4})", caccioppoli_constant(*p));
        }
    }
    Ok(result(id, failed == 0, detail, table))
}

pub fn criterion_1(seed: u64, tol: &Tolerances) -> Result<CriterionResult> {
    run_battery(1, seed, tol, |bm, i| {
        let eta = cutoff_profile(&bm.metric, i.r, i.big_r)?;
        key_estimate_sides(&bm.model, &bm.metric, &i.f, &eta.values, i.p, i.n, tol)
    })
}

pub fn criterion_2(seed: u64, tol: &Tolerances) -> Result<CriterionResult> {
    run_battery(2, seed, tol, |bm, i| {
        caccioppoli_sides(
            &bm.model,
            &bm.metric,
            &i.f,
            i.p,
            i.r,
            i.big_r,
            caccioppoli_constant(i.p),
            tol,
        )
    })
}

pub fn criterion_3(seed: u64, tol: &Tolerances) -> Result<CriterionResult> {
    run_battery(3, seed, tol, |bm, i| {
        squared_estimate_sides(&bm.model, &bm.metric, &i.f, i.p, i.r, i.big_r, tol)
    })
}

/// Irreducible random models used by criteria 4 and 5.
pub fn random_irreducible_models(seed: u64, count: usize) -> Result<Vec<DirichletFormModel>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| random_graph(rng.gen_range(5..=40), rng.gen_range(2..=4), rng.gen()))
        .collect()
}

pub fn criterion_4(seed: u64, tol: &Tolerances) -> Result<CriterionResult> {
    let models = random_irreducible_models(seed, 50)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4);
    let fs: Vec<Vec<f64>> = models
        .iter()
        .map(|m| (0..m.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .collect();
    let rows: Vec<Vec<(f64, f64, f64, f64, f64, bool)>> = models
        .par_iter()
        .zip(&fs)
        .map(|(m, f)| {
            let gap = SemigroupOperator::new(m, tol)
                .spectral_gap()
                .ok_or_else(|| LabError::Solver("no spectral gap".into()))?;
            let times = [1.0 / gap, 10.0 / gap];
            let mut rows = Vec::new();
            for p in [1.5, 2.0, 4.0] {
                let lim = ergodic_limit(m, f, p, &times, tol)?;
                let nf = lp_norm(f, m.measure().as_slice(), p);
                for (k, &(t, d)) in lim.curve.iter().enumerate() {
                    let bound = 2.0 * nf * (-gap * t).exp();
                    let ok = tol.leq(d, bound) && (k == 0 || d <= 1e-3 * nf);
                    rows.push((p, gap, t, d, bound, ok));
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let mut table = String::from("model\tp\tgap\tt\tdistance\tbound\tpass\n");
    let (mut total, mut failed) = (0, 0);
    for (i, rs) in rows.iter().enumerate() {
        for &(p, gap, t, d, b, ok) in rs {
            total += 1;
            failed += !ok as usize;
            let _ = writeln!(table, "{i}\t{p}\t{gap:.16e}\t{t:.16e}\t{d:.16e}\t{b:.16e}\t{ok}");
        }
    }
    Ok(result(
        4,
        failed == 0,
        format!("{}/{total} (model, p, t) checks pass", total - failed),
        table,
    ))
}

/// Coefficient of variation of `v` under `m`.
pub fn coefficient_of_variation(v: &[f64], m: &[f64]) -> f64 {
    let mass: f64 = m.iter().sum();
    let mean = v.iter().zip(m).map(|(a, w)| a * w).sum::<f64>() / mass;
    let var = v.iter().zip(m).map(|(a, w)| w * (a - mean).powi(2)).sum::<f64>() / mass;
    var.sqrt() / mean.abs()
}

pub fn criterion_5(seed: u64, tol: &Tolerances) -> Result<CriterionResult> {
    let mut models: Vec<(String, DirichletFormModel)> = random_irreducible_models(seed, 50)?
        .into_iter()
        .enumerate()
        .map(|(i, m)| (format!("random-{i}"), m))
        .collect();
    for bm in battery_models()? {
        models.push((bm.name.to_string(), bm.model));
    }
    models.push(("z3".into(), ModelFamily::new(FamilySpec::Lattice(3), 0)?.model(3)?));
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5);
    for i in 0..10 {
        models.push((
            format!("mixed-{i}"),
            random_mixed(rng.gen_range(4..=30), rng.gen_range(1..=3), rng.gen())?,
        ));
    }
    let rows: Vec<(usize, f64)> = models
        .par_iter()
        .map(|(_, m)| {
            let k = harmonic_kernel(m, tol);
            let cv = k
                .first()
                .map_or(f64::INFINITY, |v| coefficient_of_variation(v, m.measure().as_slice()));
            (k.len(), cv)
        })
        .collect();
    let mut table = String::from("model\tpoints\tkernel_dimension\tcoefficient_of_variation\tpass\n");
    let mut failed = 0;
    for ((name, m), (dim, cv)) in models.iter().zip(&rows) {
        let ok = *dim == 1 && *cv <= 1e-10;
        failed += !ok as usize;
        let _ = writeln!(table, "{name}\t{}\t{dim}\t{cv:.3e}\t{ok}", m.len());
    }
    let worst = rows.iter().map(|r| r.1).fold(0.0_f64, f64::max);
    let detail = format!(
        "{}/{} models with a one-dimensional constant kernel (worst cv {worst:.1e})",
        models.len() - failed,
        models.len()
    );
    Ok(result(5, failed == 0, detail, table))
}

pub fn criterion_6(seed: u64, tol: &Tolerances) -> Result<CriterionResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6);
    let mut table = String::from("model\tkind\tp\tdelta\tlhs\tvariance\tsup_sq\tpass\n");
    let (mut constructed, mut small, mut failed) = (0, 0, 0);
    for i in 0..100 {
        let m = if i % 4 == 3 {
            random_mixed(rng.gen_range(4..=30), rng.gen_range(1..=3), rng.gen())?
        } else {
            random_graph(rng.gen_range(3..=60), rng.gen_range(2..=4), rng.gen())?
        };
        let p = BATTERY_P[rng.gen_range(0..BATTERY_P.len())];
        let c = rng.gen_range(0.5..=2.0);
        let delta = [0.0, 1e-12, 1e-9][rng.gen_range(0..3)];
        let f: Vec<f64> = (0..m.len())
            .map(|_| c * (1.0 + delta * rng.gen_range(0.0..=1.0)))
            .collect();
        let lhs = constancy_lhs(&m, &f, p)?;
        let gv = gamma_vanishing_liouville(&m, &f, tol);
        let sup_sq = f.iter().fold(0.0_f64, |a, v| a.max(v * v));
        constructed += 1;
        let ok = if lhs <= 1e-12 {
            small += 1;
            gv.variance <= 1e-10 * sup_sq
        } else {
            false
        };
        failed += !ok as usize;
        let _ = writeln!(
            table,
            "{i}\tnear-constant\t{p}\t{delta:e}\t{lhs:.3e}\t{:.3e}\t{sup_sq:.6e}\t{ok}",
            gv.variance
        );
        let g: Vec<f64> = (0..m.len())
            .map(|x| if x == 0 { 0.0 } else { rng.gen_range(0.0..=2.0) })
            .collect();
        let lhs = constancy_lhs(&m, &g, p)?;
        let gv = gamma_vanishing_liouville(&m, &g, tol);
        let ok = lhs > 0.0 && gv.spread > 0.0;
        failed += !ok as usize;
        let _ = writeln!(
            table,
            "{i}\tnonconstant\t{p}\t-\t{lhs:.3e}\t{:.3e}\t-\t{ok}",
            gv.variance
        );
    }
    let detail = format!(
        "{small}/{constructed} constructed f reach lhs <= 1e-12 with variance <= 1e-10 |f|^2; 100 nonconstant f; {failed} failures"
    );
    Ok(result(6, failed == 0, detail, table))
}

/// `1 +` the piecewise-linear Dirichlet interpolant on `z1` of a random
/// convex quadratic sampled at random knots; returns the function and the
/// largest radius on which it is subharmonic.
pub fn karp_bump(
    model: &DirichletFormModel,
    metric: &MetricField,
    rng: &mut ChaCha8Rng,
    tol: &Tolerances,
) -> Result<(Vec<f64>, f64)> {
    let index = crate::family::label_index(model);
    let half = (model.len() as i64 - 1) / 2;
    let span = (0.8 * half as f64) as i64;
    let (a, x0) = (rng.gen_range(1e-4..=1e-2), rng.gen_range(-0.5..=0.5) * span as f64);
    let mut knots = Vec::new();
    let mut k = -span + rng.gen_range(0..4);
    while k <= span {
        knots.push(k);
        k += rng.gen_range(2..=12);
    }
    let conv = |k: i64| a * (k as f64 - x0).powi(2);
    let lo = knots.iter().map(|&k| conv(k)).fold(f64::INFINITY, f64::min);
    let bnd: Vec<(usize, f64)> = knots.iter().map(|&k| (index[&[k][..]], 1.0 + conv(k) - lo)).collect();
    let (f, _) = solve_dirichlet(model, &bnd, tol)?;
    let good = subharmonic_radius(model, metric, &f, tol).min(metric.diameter_from_base());
    Ok((f, good))
}

pub fn criterion_7(seed: u64, tol: &Tolerances) -> Result<CriterionResult> {
    let model = ModelFamily::new(FamilySpec::Lattice(1), 0)?.model(300)?;
    let metric = MetricField::adapted(&model)?;
    let s = metric.effective_jump_size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7);
    let mut table = String::from("instance\tp\tn\tR_n\tv_n\tQ_prev\tQ_n\tlhs\trhs\tactive\tpass\n");
    let (mut used, mut steps, mut failed) = (0, 0, 0);
    for i in 0..20 {
        let (f, good) = karp_bump(&model, &metric, &mut rng, tol)?;
        let p = BATTERY_P[i % BATTERY_P.len()];
        let run = karp_run(&model, &metric, &f, p, 4.0 * s, good * (1.0 - 1e-12), tol)?;
        if !(run.q.first().copied().unwrap_or(0.0) > 0.0) {
            continue;
        }
        used += 1;
        for st in &run.steps {
            steps += 1;
            failed += !st.pass as usize;
            let _ = writeln!(
                table,
                "{i}\t{p}\t{}\t{:.16e}\t{:.16e}\t{:.16e}\t{:.16e}\t{:.16e}\t{:.16e}\t{}\t{}",
                st.n, st.radius, st.v, st.q_prev, st.q, st.lhs, st.rhs, st.active, st.pass
            );
        }
    }
    let pass = failed == 0 && used > 0;
    Ok(result(
        7,
        pass,
        format!("{used} instances with Q_1 > 0; {}/{steps} steps pass", steps - failed),
        table,
    ))
}

pub fn criterion_8(tol: &Tolerances) -> Result<CriterionResult> {
    let cases = [
        (FamilySpec::Lattice(1), 40),
        (FamilySpec::Lattice(2), 60),
        (FamilySpec::Lattice(3), 20),
    ];
    let reports = cases
        .iter()
        .map(|(spec, level)| recurrence_test(&ModelFamily::new(spec.clone(), 0)?, *level, tol))
        .collect::<Result<Vec<_>>>()?;
    let mut table = String::from("family\tlevel\tvolume\tlog\texponent\tresistance\tlast_resistance\timplication\n");
    for r in &reports {
        let _ = writeln!(
            table,
            "{}\t{}\t{}\t{}\t{}\t{}\t{:.16e}\t{}",
            r.family,
            r.level,
            r.volume_verdict.outcome,
            r.volume_verdict.logarithmic,
            r.volume_verdict.exponent.map_or("-".into(), |a| format!("{a:.6}")),
            r.resistance_verdict.outcome,
            r.resistance.last().map_or(f64::NAN, |v| v.1),
            r.implication_holds
        );
    }
    let (z1, z2, z3) = (&reports[0], &reports[1], &reports[2]);
    let exact = z1.resistance.iter().all(|&(n, v)| (v - n as f64 / 2.0).abs() <= 1e-10);
    let z1_ok = z1.volume_verdict.outcome == Outcome::Diverges && exact && z1.resistance_verdict.outcome.is_divergent();
    let z2_ok = z2.volume_verdict.outcome == Outcome::Diverges
        && z2.volume_verdict.logarithmic
        && z2.resistance_verdict.outcome == ResistanceOutcome::DivergentLog
        && z2.resistance_verdict.log_relative_residual.is_some_and(|e| e < 0.05);
    let z3_ok =
        z3.volume_verdict.outcome == Outcome::Converges && z3.resistance_verdict.outcome == ResistanceOutcome::Bounded;
    let implication = reports.iter().all(|r| r.implication_holds);
    let detail = format!(
        "z1 {} (R_n = n/2 exact: {exact}); z2 {}; z3 {}; implication holds: {implication}",
        z1.summary_line(),
        z2.summary_line(),
        z3.summary_line()
    );
    Ok(result(8, z1_ok && z2_ok && z3_ok && implication, detail, table))
}

/// Models on which the metric certificates are checked.
pub fn certificate_models(seed: u64) -> Result<Vec<(String, DirichletFormModel)>> {
    let mut out = Vec::new();
    for (spec, level) in [
        (FamilySpec::Lattice(1), 20),
        (FamilySpec::Lattice(2), 6),
        (FamilySpec::Lattice(3), 3),
        (FamilySpec::Tree(2), 5),
        (FamilySpec::Tree(3), 4),
        (FamilySpec::RandomWeighted { n: 200, degree: 4 }, 4),
    ] {
        out.push((format!("{spec}@{level}"), ModelFamily::new(spec, seed)?.model(level)?));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9);
    for i in 0..6 {
        out.push((
            format!("mixed-{i}"),
            random_mixed(rng.gen_range(5..=40), rng.gen_range(1..=4), rng.gen())?,
        ));
    }
    Ok(out)
}

/// `|rho_A(x) - rho_A(y)| <= length(x, y)` on every link.
pub fn lipschitz_on_links(model: &DirichletFormModel, metric: &MetricField, rho: &[f64], slack: f64) -> bool {
    (0..model.len()).all(|x| {
        model
            .links(x)
            .iter()
            .zip(metric.link_lengths(x))
            .all(|(l, len)| (rho[x] - rho[l.to]).abs() <= len * (1.0 + slack) + 1e-15)
    })
}

pub fn criterion_9(seed: u64, tol: &Tolerances) -> Result<CriterionResult> {
    let slack = tol.inequality_rel;
    let models = certificate_models(seed)?;
    let rows: Vec<(usize, f64, f64, usize, usize, usize, usize)> = models
        .iter()
        .enumerate()
        .map(|(i, (_, m))| {
            let metric = MetricField::adapted(m)?;
            let intr = verify_intrinsic(m, &metric, 32, seed.wrapping_add(i as u64), slack);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x90 + i as u64));
            let diam = metric.diameter_from_base();
            let (mut cut_fail, mut loc_fail, mut lip_fail) = (0, 0, 0);
            for _ in 0..4 {
                let big_r = rng.gen_range(0.1..=1.0) * diam;
                let r = rng.gen_range(0.0..0.9) * big_r;
                let eta = cutoff_profile(&metric, r, big_r)?;
                cut_fail += !verify_cutoff(m, &metric, &eta, slack).pass as usize;
                let f: Vec<f64> = (0..m.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                loc_fail += !verify_localization(m, &metric, &f, &eta, tol.equality_rel * 1e3).pass as usize;
                let k = rng.gen_range(1..=m.len());
                let set = rand::seq::index::sample(&mut rng, m.len(), k).into_vec();
                lip_fail += !lipschitz_on_links(m, &metric, &metric.distances_from(&set), slack) as usize;
            }
            Ok((
                intr.sets_checked,
                intr.worst_local_ratio,
                intr.worst_jump_ratio,
                intr.violations,
                cut_fail,
                loc_fail,
                lip_fail,
            ))
        })
        .collect::<Result<_>>()?;
    let mut table = String::from(
        "model\tsets\tworst_local_ratio\tworst_jump_ratio\tintrinsic_violations\tcutoff_failures\tlocalization_failures\tlipschitz_failures\n",
    );
    let mut bad = 0;
    for ((name, _), r) in models.iter().zip(&rows) {
        bad += r.3 + r.4 + r.5 + r.6;
        let _ = writeln!(
            table,
            "{name}\t{}\t{:.12}\t{:.12}\t{}\t{}\t{}\t{}",
            r.0, r.1, r.2, r.3, r.4, r.5, r.6
        );
    }
    Ok(result(
        9,
        bad == 0,
        format!("{} models, {bad} certificate failures", models.len()),
        table,
    ))
}

pub fn criterion_10(seed: u64, tol: &Tolerances) -> Result<CriterionResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa);
    let mut table = String::from("model\tpoints\tbytes\tidentical\n");
    let mut failed = 0;
    for i in 0..100 {
        let m = if i % 2 == 0 {
            random_mixed(rng.gen_range(4..=50), rng.gen_range(0..=3), rng.gen())?
        } else {
            random_graph(rng.gen_range(2..=80), rng.gen_range(1..=5), rng.gen())?
        };
        let text = model_to_string(&m);
        let back = parse_model(&text)?;
        let ok = back == m && model_to_string(&back) == text && bitwise_equal(&m, &back);
        failed += !ok as usize;
        let _ = writeln!(table, "{i}\t{}\t{}\t{ok}", m.len(), text.len());
    }
    let again = criterion_1(seed, tol)?.table == criterion_1(seed, tol)?.table;
    let detail = format!(
        "{}/100 models round-trip bit-exactly; repeated battery report identical: {again}",
        100 - failed
    );
    Ok(result(10, failed == 0 && again, detail, table))
}

/// Compares every stored float by bit pattern.
pub fn bitwise_equal(a: &DirichletFormModel, b: &DirichletFormModel) -> bool {
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    let jumps = |m: &DirichletFormModel| {
        m.jump()
            .edges()
            .iter()
            .map(|e| (e.i, e.j, e.value.to_bits()))
            .collect::<Vec<_>>()
    };
    let local = |m: &DirichletFormModel| {
        m.local()
            .map(|lp| (bits(lp.nodes()), bits(lp.conductances()), bits(lp.densities())))
    };
    let ovr = |m: &DirichletFormModel| {
        m.length_overrides()
            .iter()
            .map(|&(i, j, l)| (i, j, l.to_bits()))
            .collect::<Vec<_>>()
    };
    bits(a.measure().as_slice()) == bits(b.measure().as_slice())
        && jumps(a) == jumps(b)
        && local(a) == local(b)
        && ovr(a) == ovr(b)
        && a.space().labels() == b.space().labels()
        && a.base() == b.base()
}

pub fn criterion(id: usize, seed: u64, tol: &Tolerances) -> Result<CriterionResult> {
    match id {
        1 => criterion_1(seed, tol),
        2 => criterion_2(seed, tol),
        3 => criterion_3(seed, tol),
        4 => criterion_4(seed, tol),
        5 => criterion_5(seed, tol),
        6 => criterion_6(seed, tol),
        7 => criterion_7(seed, tol),
        8 => criterion_8(tol),
        9 => criterion_9(seed, tol),
        10 => criterion_10(seed, tol),
        _ => Err(LabError::pre(format!("no criterion {id}"))),
    }
}

/// Runs every criterion, writing `verify-all.tsv` and one table per
/// criterion into `out_dir`. A criterion that errors is reported as FAIL.
pub fn verify_all(seed: u64, out_dir: &Path, tol: &Tolerances) -> Result<Vec<CriterionResult>> {
    std::fs::create_dir_all(out_dir)?;
    let mut summary = String::from("criterion\tname\tpass\tdetail\n");
    let mut results = Vec::new();
    for id in 1..=CRITERIA.len() {
        let r = criterion(id, seed, tol).unwrap_or_else(|e| result(id, false, format!("error: {e}"), String::new()));
        std::fs::write(out_dir.join(format!("criterion-{id:02}.tsv")), &r.table)?;
        let _ = writeln!(summary, "{id}\t{}\t{}\t{}", r.name, r.pass, r.detail);
        results.push(r);
    }
    std::fs::write(out_dir.join("verify-all.tsv"), summary)?;
    Ok(results)
}
