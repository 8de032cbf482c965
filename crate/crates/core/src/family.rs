//! Nested truncation families: lattices, regular trees, random weighted
//! graphs and on-disk sequences.
//!
//! Truncation `k` of a family is a finite model whose labels contain those of
//! truncation `k - 1`; the shell of level `k` consists of the points whose
//! label is new at level `k`.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, Result};
use crate::form::{DirichletFormModel, JumpKernel, LocalPart, ReferenceMeasure, StateSpace};
use crate::io::load_model;
use crate::metric::MetricField;

#[derive(Clone, Debug, PartialEq)]
pub enum FamilySpec {
    /// `Z^d` boxes `[-k, k]^d`, `J = 1/2` per ordered neighbour pair, `m = 1`.
    Lattice(usize),
    /// Rooted tree with `b` children per vertex, depth `k`.
    Tree(usize),
    /// Random connected graph on `n` points with mean degree about `degree`,
    /// `J, m` uniform in `[1/2, 2]`; truncations are hop balls around 0.
    RandomWeighted { n: usize, degree: usize },
    /// Truncation `k` read from `<prefix>.<k>.model`.
    Files(PathBuf),
}

impl FromStr for FamilySpec {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || LabError::Config(format!("unknown family '{s}'"));
        let parse = |t: &str| t.parse::<usize>().map_err(|_| bad());
        Ok(match s {
            "z1" => FamilySpec::Lattice(1),
            "z2" => FamilySpec::Lattice(2),
            "z3" => FamilySpec::Lattice(3),
            "random-weighted" => FamilySpec::RandomWeighted { n: 200, degree: 4 },
            _ => {
                if let Some(b) = s.strip_prefix("tree:") {
                    let b = parse(b)?;
                    if b == 0 {
                        return Err(bad());
                    }
                    FamilySpec::Tree(b)
                } else if let Some(rest) = s.strip_prefix("random-weighted:") {
                    let (n, d) = rest.split_once(':').ok_or_else(bad)?;
                    let (n, degree) = (parse(n)?, parse(d)?);
                    if n < 2 || degree < 2 {
                        return Err(bad());
                    }
                    FamilySpec::RandomWeighted { n, degree }
                } else if let Some(p) = s.strip_prefix("file:") {
                    FamilySpec::Files(PathBuf::from(p))
                } else {
                    return Err(bad());
                }
            }
        })
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilySpec::Lattice(d) => write!(f, "z{d}"),
            FamilySpec::Tree(b) => write!(f, "tree:{b}"),
            FamilySpec::RandomWeighted { n, degree } => write!(f, "random-weighted:{n}:{degree}"),
            FamilySpec::Files(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// One member of a family together with its level bookkeeping.
#[derive(Clone, Debug)]
pub struct Truncation {
    pub level: usize,
    pub model: DirichletFormModel,
    /// Points new at this level.
    pub shell: Vec<usize>,
    /// Points new at the previous level (for level 0: the base point).
    pub inner_shell: Vec<usize>,
}

impl Truncation {
    /// Radius below which balls of the truncation coincide with those of
    /// every larger truncation: the distance to the previous shell. Every
    /// edge met before reaching it joins points that are not on the outer
    /// shell, so its adapted length does not depend on the level.
    pub fn safe_radius(&self, metric: &MetricField) -> f64 {
        if self.level == 0 {
            return 0.0;
        }
        self.inner_shell
            .iter()
            .map(|&x| metric.dist()[x])
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug)]
pub struct ModelFamily {
    spec: FamilySpec,
    seed: u64,
    /// Full random graph (labels are point indices), built once.
    random: Option<DirichletFormModel>,
}

impl ModelFamily {
    pub fn new(spec: FamilySpec, seed: u64) -> Result<Self> {
        let random = match &spec {
            FamilySpec::RandomWeighted { n, degree } => Some(random_graph(*n, *degree, seed)?),
            FamilySpec::Lattice(d) if !(1..=3).contains(d) => {
                return Err(LabError::Config(format!("lattice dimension {d} not supported")))
            }
            _ => None,
        };
        Ok(ModelFamily { spec, seed, random })
    }

    pub fn spec(&self) -> &FamilySpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Largest level, if the family is finite.
    pub fn max_level(&self) -> Option<usize> {
        match &self.spec {
            FamilySpec::RandomWeighted { .. } => {
                let m = self.random.as_ref().expect("built in new");
                Some(hop_distances(m).into_iter().max().unwrap_or(0))
            }
            FamilySpec::Files(prefix) => {
                let mut k = 0;
                while file_path(prefix, k + 1).exists() {
                    k += 1;
                }
                Some(k)
            }
            _ => None,
        }
    }

    /// Model of level `k` alone.
    pub fn model(&self, k: usize) -> Result<DirichletFormModel> {
        match &self.spec {
            FamilySpec::Lattice(d) => Ok(lattice_box(*d, k)),
            FamilySpec::Tree(b) => Ok(tree(*b, k)),
            FamilySpec::RandomWeighted { .. } => {
                let full = self.random.as_ref().expect("built in new");
                let hops = hop_distances(full);
                if k > hops.iter().copied().max().unwrap_or(0) {
                    return Err(LabError::pre(format!("level {k} exceeds the random graph's depth")));
                }
                let keep: Vec<usize> = (0..full.len()).filter(|&x| hops[x] <= k).collect();
                full.restrict(&keep, 0)
            }
            FamilySpec::Files(prefix) => load_model(file_path(prefix, k)),
        }
    }

    pub fn truncation(&self, k: usize) -> Result<Truncation> {
        let model = self.model(k)?;
        let (shell, inner_shell) = match k {
            0 => (vec![model.base()], vec![model.base()]),
            _ => {
                let prev = self.model(k - 1)?;
                let prev_labels = label_index(&prev);
                let here = label_index(&model);
                if prev.space().labels().iter().any(|l| !here.contains_key(l.as_slice())) {
                    return Err(LabError::InvalidModel(format!(
                        "truncation {k} is not nested in {}",
                        k - 1
                    )));
                }
                let shell: Vec<usize> = (0..model.len())
                    .filter(|&x| !prev_labels.contains_key(model.space().label(x)))
                    .collect();
                let inner = if k == 1 {
                    vec![model.base()]
                } else {
                    let prev2_model = self.model(k - 2)?;
                    let prev2 = label_index(&prev2_model);
                    (0..model.len())
                        .filter(|&x| {
                            let l = model.space().label(x);
                            prev_labels.contains_key(l) && !prev2.contains_key(l)
                        })
                        .collect()
                };
                (shell, inner)
            }
        };
        Ok(Truncation {
            level: k,
            model,
            shell,
            inner_shell,
        })
    }

    /// Truncations `1..=k`.
    pub fn generate(&self, k: usize) -> Result<Vec<DirichletFormModel>> {
        (1..=k).map(|j| self.model(j)).collect()
    }
}

fn file_path(prefix: &std::path::Path, k: usize) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(format!(".{k}.model"));
    PathBuf::from(s)
}

pub fn label_index(model: &DirichletFormModel) -> HashMap<&[i64], usize> {
    model
        .space()
        .labels()
        .iter()
        .enumerate()
        .map(|(x, l)| (l.as_slice(), x))
        .collect()
}

/// Box `[-k, k]^d` in lexicographic order; the origin is the base point.
pub fn lattice_box(d: usize, k: usize) -> DirichletFormModel {
    let side = 2 * k + 1;
    let n = side.pow(d as u32);
    let k = k as i64;
    let coords = |mut x: usize| -> Vec<i64> {
        let mut c = vec![0; d];
        for slot in c.iter_mut().rev() {
            *slot = (x % side) as i64 - k;
            x /= side;
        }
        c
    };
    let labels: Vec<Vec<i64>> = (0..n).collect::<Vec<_>>().iter().map(|&x| coords(x)).collect();
    let mut edges = Vec::with_capacity(d * n);
    for x in 0..n {
        let c = &labels[x];
        let mut stride = 1;
        for axis in (0..d).rev() {
            if c[axis] < k {
                edges.push((x, x + stride, 0.5));
            }
            stride *= side;
        }
    }
    let base = (n - 1) / 2;
    DirichletFormModel::new(
        StateSpace::with_labels(labels, base).expect("nonempty"),
        ReferenceMeasure::uniform(n, 1.0).expect("positive"),
        JumpKernel::from_edges(edges).expect("symmetric"),
        None,
    )
    .expect("valid lattice")
}

/// `b`-ary tree of depth `k`, labels `[depth, index within depth]`.
pub fn tree(b: usize, k: usize) -> DirichletFormModel {
    let mut labels = vec![vec![0, 0]];
    let mut edges = Vec::new();
    let mut level_start = 0;
    let mut level_len = 1;
    for depth in 1..=k {
        let start = labels.len();
        for parent in 0..level_len {
            for c in 0..b {
                let idx = parent * b + c;
                edges.push((level_start + parent, labels.len(), 0.5));
                labels.push(vec![depth as i64, idx as i64]);
            }
        }
        level_start = start;
        level_len *= b;
    }
    let n = labels.len();
    DirichletFormModel::new(
        StateSpace::with_labels(labels, 0).expect("nonempty"),
        ReferenceMeasure::uniform(n, 1.0).expect("positive"),
        JumpKernel::from_edges(edges).expect("symmetric"),
        None,
    )
    .expect("valid tree")
}

/// Random attachment tree plus extra random edges, random weights.
pub fn random_graph(n: usize, degree: usize, seed: u64) -> Result<DirichletFormModel> {
    if n < 2 {
        return Err(LabError::pre("random graph needs at least two points"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = std::collections::BTreeSet::new();
    for x in 1..n {
        let y = rng.gen_range(0..x);
        pairs.insert((y, x));
    }
    let target = (n * degree / 2).min(n * (n - 1) / 2);
    while pairs.len() < target {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    let edges: Vec<(usize, usize, f64)> = pairs
        .into_iter()
        .map(|(a, b)| (a, b, rng.gen_range(0.5..=2.0)))
        .collect();
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..=2.0)).collect();
    let labels = (0..n as i64).map(|x| vec![x]).collect();
    DirichletFormModel::new(
        StateSpace::with_labels(labels, 0)?,
        ReferenceMeasure::new(weights)?,
        JumpKernel::from_edges(edges)?,
        None,
    )
}

/// Connected random model mixing a mesh on points `0..=mesh`, a random
/// jump kernel on all `n` points and a few metric length overrides.
pub fn random_mixed(n: usize, mesh: usize, seed: u64) -> Result<DirichletFormModel> {
    if mesh + 1 > n {
        return Err(LabError::pre("mesh needs at most n nodes"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jump = random_graph(n, 3, rng.gen())?;
    let local = (mesh > 0)
        .then(|| {
            let mut nodes = vec![0.0];
            for _ in 0..mesh {
                let last = *nodes.last().unwrap_or(&0.0);
                nodes.push(last + rng.gen_range(0.2..=1.0));
            }
            let cond = (0..mesh).map(|_| rng.gen_range(0.5..=2.0)).collect();
            let dens = (0..mesh).map(|_| rng.gen_range(0.5..=2.0)).collect();
            LocalPart::new(nodes, cond, Some(dens))
        })
        .transpose()?;
    let lumped = local.as_ref().map_or(vec![0.0; n], |lp| lp.lumped_mass(n));
    let weights = (0..n).map(|x| lumped[x] + jump.measure().weight(x)).collect();
    let mut overrides = Vec::new();
    for e in jump.jump().edges() {
        if rng.gen_bool(0.1) {
            overrides.push((e.i, e.j, rng.gen_range(0.1..=2.0)));
        }
    }
    DirichletFormModel::new(
        StateSpace::with_labels((0..n as i64).map(|x| vec![x]).collect(), 0)?,
        ReferenceMeasure::new(weights)?,
        jump.jump().clone(),
        local,
    )?
    .with_length_overrides(overrides)
}

/// Graph (hop) distance from the base point.
pub fn hop_distances(model: &DirichletFormModel) -> Vec<usize> {
    let mut d = vec![usize::MAX; model.len()];
    let mut queue = std::collections::VecDeque::from([model.base()]);
    d[model.base()] = 0;
    while let Some(x) = queue.pop_front() {
        for l in model.links(x) {
            if d[l.to] == usize::MAX {
                d[l.to] = d[x] + 1;
                queue.push_back(l.to);
            }
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::model_to_string;

    #[test]
    fn lattice_counts() {
        let z1 = lattice_box(1, 10);
        assert_eq!(z1.len(), 21);
        assert_eq!(z1.space().label(z1.base()), &[0]);
        let z2 = lattice_box(2, 3);
        assert_eq!(z2.len(), 49);
        assert_eq!(z2.jump().len(), 84);
        assert_eq!(z2.space().label(z2.base()), &[0, 0]);
        let z3 = lattice_box(3, 2);
        assert_eq!(z3.jump().len(), 3 * 5 * 5 * 4);
    }

    #[test]
    fn spec_parsing() {
        assert_eq!("tree:3".parse::<FamilySpec>().unwrap(), FamilySpec::Tree(3));
        assert_eq!(
            "random-weighted:50:3".parse::<FamilySpec>().unwrap(),
            FamilySpec::RandomWeighted { n: 50, degree: 3 }
        );
        assert!("z9".parse::<FamilySpec>().is_err());
        assert!("hexagon".parse::<FamilySpec>().is_err());
        for s in ["z1", "z2", "tree:2", "random-weighted:10:3"] {
            assert_eq!(s.parse::<FamilySpec>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn shells_and_nesting() {
        let fam = ModelFamily::new(FamilySpec::Lattice(2), 0).unwrap();
        let t = fam.truncation(3).unwrap();
        assert_eq!(t.shell.len(), 49 - 25);
        assert_eq!(t.inner_shell.len(), 25 - 9);
        let tr = ModelFamily::new(FamilySpec::Tree(2), 0).unwrap().truncation(3).unwrap();
        assert_eq!(tr.model.len(), 15);
        assert_eq!(tr.shell.len(), 8);
        let rw = ModelFamily::new(FamilySpec::RandomWeighted { n: 60, degree: 4 }, 5).unwrap();
        let top = rw.max_level().unwrap();
        assert_eq!(rw.model(top).unwrap().len(), 60);
        assert!(rw.model(1).unwrap().is_connected());
    }

    #[test]
    fn deterministic() {
        let a = ModelFamily::new(FamilySpec::RandomWeighted { n: 40, degree: 4 }, 9).unwrap();
        let b = ModelFamily::new(FamilySpec::RandomWeighted { n: 40, degree: 4 }, 9).unwrap();
        assert_eq!(
            model_to_string(&a.model(2).unwrap()),
            model_to_string(&b.model(2).unwrap())
        );
    }

    #[test]
    fn safe_radius_z1() {
        let fam = ModelFamily::new(FamilySpec::Lattice(1), 0).unwrap();
        let t = fam.truncation(10).unwrap();
        let metric = MetricField::adapted(&t.model).unwrap();
        assert!((t.safe_radius(&metric) - 9.0 / 2f64.sqrt()).abs() < 1e-12);
    }
}
