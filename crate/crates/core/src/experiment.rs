//! Experiment orchestration: validated configurations, dispatch to the
//! numerical modules and report emission (TSV tables, a summary and
//! two-column `.dat` curves).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::Tolerances;
use crate::error::{LabError, Result};
use crate::family::{FamilySpec, ModelFamily};
use crate::form::DirichletFormModel;
use crate::harmonic::{classify_harmonicity, harmonic_tolerance, solve_dirichlet};
use crate::io::{load_entries, load_model, load_vector};
use crate::liouville::{
    caccioppoli_constant, caccioppoli_sides, karp_run, key_estimate_sides, squared_estimate_sides, yau_run,
    InequalityCertificate, YauInstance, YauVerdict,
};
use crate::metric::{cutoff_profile, MetricField};
use crate::recurrence::recurrence_test;
use crate::semigroup::{ergodic_limit, SemigroupOperator};

#[derive(Clone, Debug, PartialEq)]
pub enum ModelSource {
    File(PathBuf),
    Family { spec: FamilySpec, level: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum FunctionSource {
    File(PathBuf),
    /// `|first label coordinate|` (depth for trees).
    AbsCoordinate,
    Constant(f64),
    /// `(rho(o, .) - c)_+`.
    Cone(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LiouvilleMode {
    Key,
    Caccioppoli,
    Squared,
    Karp,
    Yau,
}

impl std::str::FromStr for LiouvilleMode {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "key" => LiouvilleMode::Key,
            "caccioppoli" => LiouvilleMode::Caccioppoli,
            "squared" => LiouvilleMode::Squared,
            "karp" => LiouvilleMode::Karp,
            "yau" => LiouvilleMode::Yau,
            _ => return Err(LabError::Config(format!("unknown liouville mode '{s}'"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Operation {
    Semigroup {
        model: PathBuf,
        f: PathBuf,
        p: f64,
        times: Vec<f64>,
    },
    Harmonic {
        model: PathBuf,
        boundary: PathBuf,
    },
    Liouville {
        model: ModelSource,
        f: FunctionSource,
        p: Vec<f64>,
        mode: LiouvilleMode,
        radii: Vec<(f64, f64)>,
    },
    Recurrence {
        family: FamilySpec,
        level: usize,
        seed: u64,
    },
}

impl Operation {
    pub fn name(&self) -> &'static str {
        match self {
            Operation::Semigroup { .. } => "semigroup",
            Operation::Harmonic { .. } => "harmonic",
            Operation::Liouville { .. } => "liouville",
            Operation::Recurrence { .. } => "recurrence",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub operation: Operation,
    pub tolerances: Tolerances,
    pub out_dir: PathBuf,
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0 && p < f64::INFINITY) {
        return Err(LabError::pre(format!("p must lie in (1, inf), got {p}")));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Checks the target operation's preconditions before anything runs.
    pub fn validate(&self) -> Result<()> {
        match &self.operation {
            Operation::Semigroup { p, times, .. } => {
                check_p(*p)?;
                if let Some(t) = times.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
                    return Err(LabError::pre(format!("times must be finite and >= 0, got {t}")));
                }
            }
            Operation::Harmonic { .. } => {}
            Operation::Liouville { p, radii, .. } => {
                if p.is_empty() {
                    return Err(LabError::pre("no exponent p given"));
                }
                for &q in p {
                    check_p(q)?;
                }
                if let Some((r, big_r)) = radii.iter().find(|(r, big_r)| !(*r > 0.0 && big_r > r)) {
                    return Err(LabError::pre(format!("radii need 0 < r < R, got r = {r}, R = {big_r}")));
                }
            }
            Operation::Recurrence { level, .. } => {
                if *level < 2 {
                    return Err(LabError::pre("recurrence needs a truncation level of at least 2"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutcome {
    pub rows: usize,
    pub passed: usize,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

impl ExperimentOutcome {
    pub fn all_pass(&self) -> bool {
        self.passed == self.rows
    }
}

/// Collects report files and flushes each as soon as it is complete.
struct Reporter {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Reporter {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Reporter {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, body)?;
        self.files.push(path);
        Ok(())
    }

    fn dat(&mut self, name: &str, pts: impl IntoIterator<Item = (f64, f64)>) -> Result<()> {
        let mut s = String::new();
        for (x, y) in pts {
            let _ = writeln!(s, "{x:.16e} {y:.16e}");
        }
        self.write(name, &s)
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let mut rep = Reporter::new(&config.out_dir)?;
    let tol = &config.tolerances;
    let name = config.operation.name();
    let (rows, passed, mut summary) = match &config.operation {
        Operation::Semigroup { model, f, p, times } => run_semigroup(&mut rep, model, f, *p, times, tol)?,
        Operation::Harmonic { model, boundary } => run_harmonic(&mut rep, model, boundary, tol)?,
        Operation::Liouville {
            model,
            f,
            p,
            mode,
            radii,
        } => run_liouville(&mut rep, model, f, p, *mode, radii, tol)?,
        Operation::Recurrence { family, level, seed } => run_recurrence(&mut rep, family, *level, *seed, tol)?,
    };
    let _ = writeln!(summary, "rows: {rows}; passed: {passed}; failed: {}", rows - passed);
    rep.write(&format!("{name}-summary.txt"), &summary)?;
    Ok(ExperimentOutcome {
        rows,
        passed,
        files: rep.files,
        summary,
    })
}

fn run_semigroup(
    rep: &mut Reporter,
    model: &Path,
    f: &Path,
    p: f64,
    times: &[f64],
    tol: &Tolerances,
) -> Result<(usize, usize, String)> {
    let model = load_model(model)?;
    let f = load_vector(f, model.len())?;
    let op = SemigroupOperator::new(&model, tol);
    let lim = ergodic_limit(&model, &f, p, times, tol)?;
    let m = model.measure().as_slice();
    let norm_f = crate::form::lp_norm(&f, m, p);
    let mut tsv = String::from("t\tdistance_to_limit\tnorm_Ttf\tnorm_f\tcontraction\n");
    let mut passed = 0;
    for &(t, dist) in &lim.curve {
        let ft = op.evolve(t, &f)?;
        let nt = crate::form::lp_norm(&ft, m, p);
        let ok = tol.leq(nt, norm_f);
        passed += ok as usize;
        let _ = writeln!(tsv, "{t:.16e}\t{dist:.16e}\t{nt:.16e}\t{norm_f:.16e}\t{ok}");
    }
    rep.write("semigroup.tsv", &tsv)?;
    rep.dat("semigroup-curve.dat", lim.curve.iter().copied())?;
    let mut s = String::new();
    let _ = writeln!(s, "limit: {:.16e} (ground state {:.16e})", lim.limit[0], lim.phi);
    if let Some(g) = lim.spectral_gap {
        let _ = writeln!(s, "spectral gap: {g:.16e}");
    }
    Ok((lim.curve.len(), passed, s))
}

fn run_harmonic(rep: &mut Reporter, model: &Path, boundary: &Path, tol: &Tolerances) -> Result<(usize, usize, String)> {
    let model = load_model(model)?;
    let bnd = load_entries(boundary)?;
    let (f, solve) = solve_dirichlet(&model, &bnd, tol)?;
    let mut on_b = vec![false; model.len()];
    for &(x, _) in &bnd {
        on_b[x] = true;
    }
    let interior: Vec<usize> = (0..model.len()).filter(|&x| !on_b[x]).collect();
    let report = classify_harmonicity(&model, &f, &interior, tol);
    let t = harmonic_tolerance(&model, &f, tol);
    let (lo, hi) = bnd.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(_, v)| {
        (a.min(v), b.max(v))
    });
    let mut tsv = String::from("point\tvalue\tgenerator\tboundary\tpass\n");
    let mut passed = 0;
    for x in 0..model.len() {
        let lf = report.generator_values[x];
        let ok = if on_b[x] {
            true
        } else {
            lf.abs() <= t && f[x] >= lo - t && f[x] <= hi + t
        };
        passed += ok as usize;
        let _ = writeln!(tsv, "{x}\t{:.16e}\t{lf:.16e}\t{}\t{ok}", f[x], on_b[x]);
    }
    rep.write("harmonic.tsv", &tsv)?;
    rep.write("harmonic-solution.txt", &crate::io::vector_to_string(&f))?;
    let s = format!(
        "classification on interior: {:?}; worst |Lf| = {:.3e}; solver residual {:.3e} after {} iterations\n",
        report.class, report.worst_violation, solve.relative_residual, solve.iterations
    );
    Ok((model.len(), passed, s))
}

fn load_source(src: &ModelSource) -> Result<DirichletFormModel> {
    match src {
        ModelSource::File(p) => load_model(p),
        ModelSource::Family { spec, level, seed } => ModelFamily::new(spec.clone(), *seed)?.model(*level),
    }
}

pub fn build_function(model: &DirichletFormModel, metric: &MetricField, src: &FunctionSource) -> Result<Vec<f64>> {
    Ok(match src {
        FunctionSource::File(p) => load_vector(p, model.len())?,
        FunctionSource::AbsCoordinate => (0..model.len())
            .map(|x| model.space().label(x).first().map_or(0.0, |c| c.abs() as f64))
            .collect(),
        FunctionSource::Constant(c) => vec![*c; model.len()],
        FunctionSource::Cone(c) => metric.dist().iter().map(|d| (d - c).max(0.0)).collect(),
    })
}

/// Largest radius `D` such that every point within `D` of the base point
/// is subharmonic for `f` (infinite if all are).
pub fn subharmonic_radius(model: &DirichletFormModel, metric: &MetricField, f: &[f64], tol: &Tolerances) -> f64 {
    let lf = model.apply_generator(f);
    let t = harmonic_tolerance(model, f, tol);
    (0..model.len())
        .filter(|&x| lf[x] > t)
        .map(|x| metric.dist()[x])
        .fold(f64::INFINITY, f64::min)
}

fn cert_row(tsv: &mut String, c: &InequalityCertificate) {
    let ctx = &c.context;
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.16e}"));
    let _ = writeln!(
        tsv,
        "{}\t{}\t{}\t{}\t{:.16e}\t{}\t{:.16e}\t{:.16e}\t{:.16e}\t{:.16e}\t{:.16e}\t{}",
        c.kind,
        ctx.p,
        opt(ctx.r),
        opt(ctx.big_r),
        ctx.s,
        opt(ctx.n),
        c.lhs,
        c.rhs,
        c.constant_used,
        c.slack,
        c.empirical_constant(),
        c.pass
    );
}

const CERT_HEADER: &str = "kind\tp\tr\tR\ts\tn\tlhs\trhs\tconstant\tslack\tempirical_constant\tpass\n";

fn run_liouville(
    rep: &mut Reporter,
    src: &ModelSource,
    fsrc: &FunctionSource,
    ps: &[f64],
    mode: LiouvilleMode,
    radii: &[(f64, f64)],
    tol: &Tolerances,
) -> Result<(usize, usize, String)> {
    let model = load_source(src)?;
    let metric = MetricField::adapted(&model)?;
    let f = build_function(&model, &metric, fsrc)?;
    let s = metric.effective_jump_size();
    let good = subharmonic_radius(&model, &metric, &f, tol).min(metric.diameter_from_base() + 1.0);
    let mut summary = String::new();
    match mode {
        LiouvilleMode::Key | LiouvilleMode::Caccioppoli | LiouvilleMode::Squared => {
            let grid: Vec<(f64, f64)> = if radii.is_empty() {
                let top = good - 2.0 * s - 1e-9;
                if !(top > 0.0) {
                    return Err(LabError::pre("f is not subharmonic on any ball around the base point"));
                }
                [0.5, 1.0]
                    .iter()
                    .flat_map(|a| [0.25, 0.5].map(|b| (a * top * b, a * top)))
                    .collect()
            } else {
                radii.to_vec()
            };
            let mut tsv = String::from(CERT_HEADER);
            let (mut rows, mut passed) = (0, 0);
            let mut worst = Vec::new();
            for &p in ps {
                let mut emp = 0.0_f64;
                for &(r, big_r) in &grid {
                    let cert = match mode {
                        LiouvilleMode::Key => {
                            let eta = cutoff_profile(&metric, r, big_r)?;
                            key_estimate_sides(&model, &metric, &f, &eta.values, p, None, tol)?
                        }
                        LiouvilleMode::Caccioppoli => {
                            caccioppoli_sides(&model, &metric, &f, p, r, big_r, caccioppoli_constant(p), tol)?
                        }
                        _ => squared_estimate_sides(&model, &metric, &f, p, r, big_r, tol)?,
                    };
                    emp = emp.max(cert.empirical_constant());
                    rows += 1;
                    passed += cert.pass as usize;
                    cert_row(&mut tsv, &cert);
                }
                worst.push((p, emp));
                let _ = writeln!(summary, "p = {p}: smallest constant passing every row = {emp:.6e}");
            }
            rep.write("liouville.tsv", &tsv)?;
            rep.dat("liouville-empirical-constant.dat", worst)?;
            Ok((rows, passed, summary))
        }
        LiouvilleMode::Karp => {
            let mut tsv = String::from("p\tn\tR_n\tv_n\tQ_prev\tQ_n\tlhs\trhs\tactive\tpass\n");
            let (mut rows, mut passed) = (0, 0);
            for &p in ps {
                let run = karp_run(&model, &metric, &f, p, (4.0 * s).max(1e-9), good * (1.0 - 1e-12), tol)?;
                for st in &run.steps {
                    rows += 1;
                    passed += st.pass as usize;
                    let _ = writeln!(
                        tsv,
                        "{p}\t{}\t{:.16e}\t{:.16e}\t{:.16e}\t{:.16e}\t{:.16e}\t{:.16e}\t{}\t{}",
                        st.n, st.radius, st.v, st.q_prev, st.q, st.lhs, st.rhs, st.active, st.pass
                    );
                }
                rep.dat(
                    &format!("karp-q-p{p}.dat"),
                    run.q.iter().enumerate().map(|(k, q)| ((k + 1) as f64, *q)),
                )?;
                rep.dat(
                    &format!("karp-v-p{p}.dat"),
                    run.v.iter().enumerate().map(|(k, v)| ((k + 1) as f64, *v)),
                )?;
                let _ = writeln!(summary, "p = {p}: verdict {} ({})", run.verdict, run.reason);
            }
            rep.write("liouville.tsv", &tsv)?;
            Ok((rows, passed, summary))
        }
        LiouvilleMode::Yau => {
            let (models, fs, metrics) = match src {
                ModelSource::Family { spec, level, seed } => {
                    let fam = ModelFamily::new(spec.clone(), *seed)?;
                    let levels: Vec<usize> = (1..=4).map(|j| (level * j / 4).max(2)).collect();
                    let models = levels.iter().map(|&k| fam.model(k)).collect::<Result<Vec<_>>>()?;
                    let metrics = models.iter().map(MetricField::adapted).collect::<Result<Vec<_>>>()?;
                    let fs = models
                        .iter()
                        .zip(&metrics)
                        .map(|(m, g)| build_function(m, g, fsrc))
                        .collect::<Result<Vec<_>>>()?;
                    (models, fs, metrics)
                }
                ModelSource::File(_) => (vec![model.clone()], vec![f.clone()], vec![metric.clone()]),
            };
            let radii: Vec<f64> = models
                .iter()
                .zip(&metrics)
                .zip(&fs)
                .map(|((m, g), f)| subharmonic_radius(m, g, f, tol).min(g.diameter_from_base()) * (1.0 - 1e-9))
                .collect();
            let inst: Vec<YauInstance<'_>> = (0..models.len())
                .map(|k| YauInstance {
                    model: &models[k],
                    metric: &metrics[k],
                    f: &fs[k],
                    radius: radii[k],
                })
                .collect();
            let mut tsv = String::from(CERT_HEADER);
            let (mut rows, mut passed) = (0, 0);
            for &p in ps {
                let report = yau_run(&inst, p, tol)?;
                for row in &report.rows {
                    rows += 1;
                    passed += row.certificate.pass as usize;
                    cert_row(&mut tsv, &row.certificate);
                }
                rep.dat(
                    &format!("yau-lhs-p{p}.dat"),
                    report.rows.iter().map(|r| (r.big_r, r.certificate.lhs)),
                )?;
                if matches!(report.verdict, YauVerdict::Rejected(_)) {
                    rows += 1;
                }
                let _ = writeln!(summary, "p = {p}: verdict {}", report.verdict);
            }
            rep.write("liouville.tsv", &tsv)?;
            Ok((rows, passed, summary))
        }
    }
}

fn run_recurrence(
    rep: &mut Reporter,
    family: &FamilySpec,
    level: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<(usize, usize, String)> {
    let fam = ModelFamily::new(family.clone(), seed)?;
    let r = recurrence_test(&fam, level, tol)?;
    let mut tsv = String::from("radius\tvolume\tpartial_integral\n");
    for ((rad, vol), (_, pi)) in r
        .volume
        .radii
        .iter()
        .zip(&r.volume.values)
        .zip(&r.volume_verdict.partial_integrals)
    {
        let _ = writeln!(tsv, "{rad:.16e}\t{vol:.16e}\t{pi:.16e}");
    }
    rep.write("recurrence-volume.tsv", &tsv)?;
    let mut rt = String::from("level\tresistance\n");
    for (n, res) in &r.resistance {
        let _ = writeln!(rt, "{n}\t{res:.16e}");
    }
    rep.write("recurrence-resistance.tsv", &rt)?;
    rep.dat(
        "volume.dat",
        r.volume.radii.iter().copied().zip(r.volume.values.iter().copied()),
    )?;
    rep.dat(
        "partial-integral.dat",
        r.volume_verdict.partial_integrals.iter().copied(),
    )?;
    rep.dat("resistance.dat", r.resistance.iter().map(|(n, v)| (*n as f64, *v)))?;
    let mut s = String::new();
    let _ = writeln!(s, "{}", r.summary_line());
    let _ = writeln!(
        s,
        "volume exponent: {}; {}",
        r.volume_verdict.exponent.map_or("-".into(), |a| format!("{a:.6}")),
        r.volume_verdict.reason
    );
    let _ = writeln!(
        s,
        "implication volume diverges => resistance diverges: {}",
        r.implication_holds
    );
    Ok((1, r.implication_holds as usize, s))
}
