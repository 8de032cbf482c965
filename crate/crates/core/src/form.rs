//! Finite Dirichlet forms without killing.
//!
//! A [`DirichletFormModel`] carries a finite state space, a strictly positive
//! reference measure, a symmetric jump kernel and an optional one-dimensional
//! strongly local part discretized by piecewise-linear elements.
//!
//! Conventions:
//!
//! * The jump energy sums over *ordered* pairs, `sum J(x,y) (f(x)-f(y))^2`,
//!   with no global factor 1/2. Unit-weight graph energy is `J = 1/2`.
//! * The local part on mesh nodes `x_0 < ... < x_N` (node `i` is point `i`)
//!   has energy `sum a_i (f_{i+1}-f_i)^2 / dx_i`; its energy measure puts half
//!   of every interval's energy on each endpoint. Equivalently every mesh
//!   interval carries the ordered-pair weight `a_i / (2 dx_i)`.
//! * The generator is `(Lf)(x) = (2/m(x)) sum_y w(x,y) (f(x) - f(y))` where
//!   `w` is the ordered-pair weight of either kind.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::DMatrix;
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::error::{LabError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace {
    labels: Vec<Vec<i64>>,
    base: usize,
}

impl StateSpace {
    pub fn new(n: usize, base: usize) -> Result<Self> {
        Self::with_labels(vec![Vec::new(); n], base)
    }

    pub fn with_labels(labels: Vec<Vec<i64>>, base: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(LabError::InvalidModel("state space must be nonempty".into()));
        }
        if base >= labels.len() {
            return Err(LabError::InvalidModel(format!(
                "base point {base} out of range for {} points",
                labels.len()
            )));
        }
        Ok(StateSpace { labels, base })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn label(&self, x: usize) -> &[i64] {
        &self.labels[x]
    }

    pub fn labels(&self) -> &[Vec<i64>] {
        &self.labels
    }

    /// Index of the point carrying `label`, if any.
    pub fn find(&self, label: &[i64]) -> Option<usize> {
        self.labels.iter().position(|l| l.as_slice() == label)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceMeasure {
    weights: Vec<f64>,
}

impl ReferenceMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        for (k, &w) in weights.iter().enumerate() {
            if !(w > 0.0) || !w.is_finite() {
                return Err(LabError::NonpositiveMeasure(k));
            }
        }
        Ok(ReferenceMeasure { weights })
    }

    pub fn uniform(n: usize, weight: f64) -> Result<Self> {
        Self::new(vec![weight; n])
    }

    pub fn weight(&self, x: usize) -> f64 {
        self.weights[x]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// One undirected jump edge; `value` is the weight of each ordered pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpEdge {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// Symmetric jump kernel stored as a sorted list of undirected edges `i < j`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct JumpKernel {
    edges: Vec<JumpEdge>,
}

impl JumpKernel {
    pub fn empty() -> Self {
        JumpKernel { edges: Vec::new() }
    }

    /// Builds the kernel from undirected edges. Zero-valued edges are dropped.
    pub fn from_edges<I>(edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, v) in edges {
            if i == j {
                return Err(LabError::InvalidModel(format!("diagonal jump entry at ({i},{i})")));
            }
            if !(v >= 0.0) || !v.is_finite() {
                return Err(LabError::InvalidModel(format!(
                    "jump value at ({i},{j}) must be finite and nonnegative, got {v}"
                )));
            }
            let key = (i.min(j), i.max(j));
            match map.get(&key) {
                Some(&old) if old.to_bits() != v.to_bits() => {
                    return Err(LabError::AsymmetricKernel(key.0, key.1));
                }
                _ => {
                    map.insert(key, v);
                }
            }
        }
        let edges = map
            .into_iter()
            .filter(|&(_, v)| v > 0.0)
            .map(|((i, j), value)| JumpEdge { i, j, value })
            .collect();
        Ok(JumpKernel { edges })
    }

    /// Builds the kernel from ordered-pair entries `J(x,y)`; both directions
    /// of every pair must be present with identical values.
    pub fn from_ordered_entries(entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(i, j, v) in entries {
            if i == j {
                return Err(LabError::InvalidModel(format!("diagonal jump entry at ({i},{i})")));
            }
            if map.insert((i, j), v).is_some() {
                return Err(LabError::InvalidModel(format!("duplicate jump entry ({i},{j})")));
            }
        }
        for (&(i, j), &v) in &map {
            match map.get(&(j, i)) {
                Some(&w) if w.to_bits() == v.to_bits() => {}
                _ => return Err(LabError::AsymmetricKernel(i.min(j), i.max(j))),
            }
        }
        Self::from_edges(map.into_iter().filter(|((i, j), _)| i < j).map(|((i, j), v)| (i, j, v)))
    }

    pub fn edges(&self) -> &[JumpEdge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// `J(x,y)` for an ordered pair.
    pub fn value(&self, x: usize, y: usize) -> f64 {
        let key = (x.min(y), x.max(y));
        self.edges
            .binary_search_by(|e| (e.i, e.j).cmp(&key))
            .map(|k| self.edges[k].value)
            .unwrap_or(0.0)
    }
}

/// Piecewise-linear strongly local part on mesh nodes `0..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalPart {
    nodes: Vec<f64>,
    conductances: Vec<f64>,
    densities: Vec<f64>,
}

/// One mesh interval `[x_i, x_{i+1}]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshInterval {
    pub left: usize,
    pub right: usize,
    pub width: f64,
    pub conductance: f64,
    pub density: f64,
}

impl LocalPart {
    /// `densities` defaults to 1 on every interval.
    pub fn new(nodes: Vec<f64>, conductances: Vec<f64>, densities: Option<Vec<f64>>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(LabError::InvalidModel("mesh needs at least two nodes".into()));
        }
        let intervals = nodes.len() - 1;
        if conductances.len() != intervals {
            return Err(LabError::InvalidModel(format!(
                "mesh has {intervals} intervals but {} conductances",
                conductances.len()
            )));
        }
        let densities = densities.unwrap_or_else(|| vec![1.0; intervals]);
        if densities.len() != intervals {
            return Err(LabError::InvalidModel(format!(
                "mesh has {intervals} intervals but {} densities",
                densities.len()
            )));
        }
        for w in nodes.windows(2) {
            if !(w[1] > w[0]) || !w[1].is_finite() || !w[0].is_finite() {
                return Err(LabError::InvalidModel("mesh nodes must be strictly increasing".into()));
            }
        }
        if conductances.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return Err(LabError::InvalidModel("mesh conductances must be positive".into()));
        }
        if densities.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
            return Err(LabError::InvalidModel("mesh densities must be positive".into()));
        }
        Ok(LocalPart {
            nodes,
            conductances,
            densities,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn conductances(&self) -> &[f64] {
        &self.conductances
    }

    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn intervals(&self) -> impl Iterator<Item = MeshInterval> + '_ {
        (0..self.conductances.len()).map(move |i| MeshInterval {
            left: i,
            right: i + 1,
            width: self.nodes[i + 1] - self.nodes[i],
            conductance: self.conductances[i],
            density: self.densities[i],
        })
    }

    /// Lumped mass `sum density * dx / 2` per point of an `n`-point space.
    pub fn lumped_mass(&self, n: usize) -> Vec<f64> {
        let mut mass = vec![0.0; n];
        for iv in self.intervals() {
            let half = 0.5 * iv.density * iv.width;
            mass[iv.left] += half;
            mass[iv.right] += half;
        }
        mass
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinkKind {
    Jump,
    Local,
}

/// Adjacency entry. `weight` is the ordered-pair weight: `J(x,y)` for jumps,
/// `a / (2 dx)` for mesh intervals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Link {
    pub to: usize,
    pub kind: LinkKind,
    pub weight: f64,
}

/// Nonnegative measure on the points (an energy measure `Gamma(f)`).
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyMeasure {
    values: Vec<f64>,
}

impl EnergyMeasure {
    pub fn new(values: Vec<f64>) -> Self {
        EnergyMeasure { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, x: usize) -> f64 {
        self.values[x]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `sum_x w(x) Gamma({x})`.
    pub fn integrate(&self, w: impl Fn(usize) -> f64) -> f64 {
        self.values.iter().enumerate().map(|(x, v)| w(x) * v).sum()
    }
}

/// Regular Dirichlet form without killing on a finite space.
#[derive(Clone, Debug)]
pub struct DirichletFormModel {
    space: StateSpace,
    measure: ReferenceMeasure,
    jump: JumpKernel,
    local: Option<LocalPart>,
    length_overrides: Vec<(usize, usize, f64)>,
    links: Vec<Vec<Link>>,
}

impl PartialEq for DirichletFormModel {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space
            && self.measure == other.measure
            && self.jump == other.jump
            && self.local == other.local
            && self.length_overrides == other.length_overrides
    }
}

impl DirichletFormModel {
    pub fn new(
        space: StateSpace,
        measure: ReferenceMeasure,
        jump: JumpKernel,
        local: Option<LocalPart>,
    ) -> Result<Self> {
        let n = space.len();
        if measure.len() != n {
            return Err(LabError::InvalidModel(format!(
                "measure has {} weights for {n} points",
                measure.len()
            )));
        }
        for e in jump.edges() {
            if e.j >= n {
                return Err(LabError::InvalidModel(format!(
                    "jump edge ({},{}) references a point outside 0..{n}",
                    e.i, e.j
                )));
            }
        }
        let mut links = vec![Vec::new(); n];
        for e in jump.edges() {
            links[e.i].push(Link {
                to: e.j,
                kind: LinkKind::Jump,
                weight: e.value,
            });
            links[e.j].push(Link {
                to: e.i,
                kind: LinkKind::Jump,
                weight: e.value,
            });
        }
        if let Some(lp) = &local {
            if lp.node_count() > n {
                return Err(LabError::InvalidModel(format!(
                    "mesh has {} nodes but the space only {n} points",
                    lp.node_count()
                )));
            }
            let lumped = lp.lumped_mass(n);
            for x in 0..n {
                if lumped[x] > measure.weight(x) * (1.0 + 1e-12) {
                    return Err(LabError::InvalidModel(format!(
                        "lumped mesh mass {} exceeds m({x}) = {}",
                        lumped[x],
                        measure.weight(x)
                    )));
                }
            }
            for iv in lp.intervals() {
                let w = iv.conductance / (2.0 * iv.width);
                links[iv.left].push(Link {
                    to: iv.right,
                    kind: LinkKind::Local,
                    weight: w,
                });
                links[iv.right].push(Link {
                    to: iv.left,
                    kind: LinkKind::Local,
                    weight: w,
                });
            }
        }
        Ok(DirichletFormModel {
            space,
            measure,
            jump,
            local,
            length_overrides: Vec::new(),
            links,
        })
    }

    /// Pure-jump model with unit labels-free space.
    pub fn pure_jump(weights: Vec<f64>, edges: Vec<(usize, usize, f64)>, base: usize) -> Result<Self> {
        let n = weights.len();
        Self::new(
            StateSpace::new(n, base)?,
            ReferenceMeasure::new(weights)?,
            JumpKernel::from_edges(edges)?,
            None,
        )
    }

    /// Attaches metric length overrides (`L i j length` lines).
    pub fn with_length_overrides(mut self, overrides: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(i, j, l) in &overrides {
            if i >= self.len() || j >= self.len() || i == j {
                return Err(LabError::InvalidModel(format!("bad length override ({i},{j})")));
            }
            if !(l > 0.0) || !l.is_finite() {
                return Err(LabError::InvalidModel(format!(
                    "length override at ({i},{j}) must be positive"
                )));
            }
        }
        self.length_overrides = overrides;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn base(&self) -> usize {
        self.space.base()
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn measure(&self) -> &ReferenceMeasure {
        &self.measure
    }

    pub fn jump(&self) -> &JumpKernel {
        &self.jump
    }

    pub fn local(&self) -> Option<&LocalPart> {
        self.local.as_ref()
    }

    pub fn length_overrides(&self) -> &[(usize, usize, f64)] {
        &self.length_overrides
    }

    pub fn links(&self, x: usize) -> &[Link] {
        &self.links[x]
    }

    pub fn total_mass(&self) -> f64 {
        self.measure.total()
    }

    /// `sum_y w(x,y)` over links of either kind.
    pub fn weighted_degree(&self, x: usize) -> f64 {
        self.links[x].iter().map(|l| l.weight).sum()
    }

    /// Connected-component id of every point with respect to the support graph.
    pub fn components(&self) -> Vec<usize> {
        let n = self.len();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            let mut queue = VecDeque::from([start]);
            while let Some(x) = queue.pop_front() {
                for l in &self.links[x] {
                    if comp[l.to] == usize::MAX {
                        comp[l.to] = next;
                        queue.push_back(l.to);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn component_count(&self) -> usize {
        self.components().iter().copied().max().map_or(0, |c| c + 1)
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    /// `(Lf)(x) = (2/m(x)) sum_y w(x,y)(f(x)-f(y))`.
    pub fn apply_generator(&self, f: &[f64]) -> Vec<f64> {
        assert_eq!(f.len(), self.len());
        (0..self.len())
            .map(|x| {
                let s: f64 = self.links[x].iter().map(|l| l.weight * (f[x] - f[l.to])).sum();
                2.0 * s / self.measure.weight(x)
            })
            .collect()
    }

    pub fn assemble_generator(&self) -> GeneratorMatrix {
        let n = self.len();
        let mut coo = CooMatrix::new(n, n);
        for x in 0..n {
            let scale = 2.0 / self.measure.weight(x);
            let mut diag = 0.0;
            for l in &self.links[x] {
                coo.push(x, l.to, -scale * l.weight);
                diag += scale * l.weight;
            }
            coo.push(x, x, diag);
        }
        GeneratorMatrix {
            matrix: CsrMatrix::from(&coo),
            weights: self.measure.as_slice().to_vec(),
        }
    }

    /// `E(f,g)`: ordered-pair jump sum plus the mesh energy.
    pub fn energy_bilinear(&self, f: &[f64], g: &[f64]) -> f64 {
        self.pair_sum(|x, y| (f[x] - f[y]) * (g[x] - g[y]))
    }

    pub fn energy(&self, f: &[f64]) -> f64 {
        self.energy_bilinear(f, f)
    }

    /// `(Gamma^(c)(f), Gamma^(j)(f))` as point measures.
    pub fn gamma_measures(&self, f: &[f64]) -> (EnergyMeasure, EnergyMeasure) {
        let (c, j) = self.gamma_pairing_measures(f, f);
        (EnergyMeasure::new(c), EnergyMeasure::new(j))
    }

    /// Signed point measures of the bilinear pairing `Gamma^(c)(f,phi)`,
    /// `Gamma^(j)(f,phi)`.
    pub fn gamma_pairing_measures(&self, f: &[f64], phi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let mut local = vec![0.0; n];
        let mut jump = vec![0.0; n];
        for x in 0..n {
            for l in &self.links[x] {
                let v = l.weight * (f[x] - f[l.to]) * (phi[x] - phi[l.to]);
                match l.kind {
                    LinkKind::Jump => jump[x] += v,
                    LinkKind::Local => local[x] += v,
                }
            }
        }
        (local, jump)
    }

    /// `int_X dGamma(f, phi)`.
    pub fn gamma_pairing(&self, f: &[f64], phi: &[f64]) -> f64 {
        self.energy_bilinear(f, phi)
    }

    /// `sum_{x} sum_{y} w(x,y) term(x,y)` over ordered pairs of both kinds.
    pub fn pair_sum(&self, term: impl Fn(usize, usize) -> f64) -> f64 {
        let mut s = 0.0;
        for x in 0..self.len() {
            for l in &self.links[x] {
                s += l.weight * term(x, l.to);
            }
        }
        s
    }

    /// `m^(c)`: the lumped mass of the mesh densities (zero without local part).
    pub fn local_mass(&self) -> Vec<f64> {
        match &self.local {
            Some(lp) => lp.lumped_mass(self.len()),
            None => vec![0.0; self.len()],
        }
    }

    /// `m^(j) = m - m^(c)`.
    pub fn jump_mass(&self) -> Vec<f64> {
        self.local_mass()
            .iter()
            .zip(self.measure.as_slice())
            .map(|(c, m)| (m - c).max(0.0))
            .collect()
    }

    /// `<f, g>_m`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter()
            .zip(g)
            .zip(self.measure.as_slice())
            .map(|((a, b), m)| a * b * m)
            .sum()
    }

    /// Mean `(1/m(X)) int f dm`.
    pub fn mean(&self, f: &[f64]) -> f64 {
        let ones = vec![1.0; self.len()];
        self.inner(f, &ones) / self.total_mass()
    }

    /// `||f||_p` in `L^p(m)`; `p = inf` gives the sup norm.
    pub fn lp_norm(&self, f: &[f64], p: f64) -> f64 {
        lp_norm(f, self.measure.as_slice(), p)
    }

    /// Neumann truncation: the submodel on `keep` (in the given order) with
    /// the jump kernel restricted to `keep x keep`. Mesh parts are dropped
    /// unless all nodes are kept in place.
    pub fn restrict(&self, keep: &[usize], base: usize) -> Result<Self> {
        let mut index = vec![usize::MAX; self.len()];
        for (k, &x) in keep.iter().enumerate() {
            index[x] = k;
        }
        let labels = keep.iter().map(|&x| self.space.label(x).to_vec()).collect();
        let weights = keep.iter().map(|&x| self.measure.weight(x)).collect();
        let edges = self
            .jump
            .edges()
            .iter()
            .filter(|e| index[e.i] != usize::MAX && index[e.j] != usize::MAX)
            .map(|e| (index[e.i], index[e.j], e.value));
        let local = self
            .local
            .as_ref()
            .filter(|lp| (0..lp.node_count()).all(|x| index[x] == x))
            .cloned();
        DirichletFormModel::new(
            StateSpace::with_labels(labels, base)?,
            ReferenceMeasure::new(weights)?,
            JumpKernel::from_edges(edges)?,
            local,
        )
    }
}

pub fn lp_norm(f: &[f64], m: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return f.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    }
    let s: f64 = f.iter().zip(m).map(|(v, w)| w * v.abs().powf(p)).sum();
    s.powf(1.0 / p)
}

/// Sparse generator `L` acting on functions over the points.
#[derive(Clone, Debug)]
pub struct GeneratorMatrix {
    matrix: CsrMatrix<f64>,
    weights: Vec<f64>,
}

impl GeneratorMatrix {
    pub fn matrix(&self) -> &CsrMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (x, row) in self.matrix.row_iter().enumerate() {
            out[x] = row
                .col_indices()
                .iter()
                .zip(row.values())
                .map(|(&y, &v)| v * f[y])
                .sum();
        }
        out
    }

    pub fn entry(&self, x: usize, y: usize) -> f64 {
        self.matrix.get_entry(x, y).map_or(0.0, |e| e.into_value())
    }

    /// `max_x |L_xx| + sum_{y != x} |L_xy|`, the induced sup-norm.
    pub fn sup_norm(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|r| r.values().iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `M^{1/2} L M^{-1/2}`, symmetric because `L` is `m`-self-adjoint.
    pub fn symmetrized_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let sqrt_m: Vec<f64> = self.weights.iter().map(|w| w.sqrt()).collect();
        let mut s = DMatrix::zeros(n, n);
        for (x, row) in self.matrix.row_iter().enumerate() {
            for (&y, &v) in row.col_indices().iter().zip(row.values()) {
                s[(x, y)] += v * sqrt_m[x] / sqrt_m[y];
            }
        }
        // symmetrize away rounding
        let t = s.transpose();
        (s + t) * 0.5
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn path3() -> DirichletFormModel {
        DirichletFormModel::pure_jump(vec![1.0; 3], vec![(0, 1, 0.5), (1, 2, 0.5)], 0).unwrap()
    }

    #[test]
    fn generator_on_path() {
        let m = path3();
        let lf = m.apply_generator(&[0.0, 1.0, 3.0]);
        assert_relative_eq!(lf[1], -1.0);
        let g = m.assemble_generator();
        assert_eq!(g.apply(&[0.0, 1.0, 3.0]), lf);
        assert!(m.apply_generator(&[2.5; 3]).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn two_point_spectrum() {
        let m = DirichletFormModel::pure_jump(vec![1.0; 2], vec![(0, 1, 0.5)], 0).unwrap();
        let s = m.assemble_generator().symmetrized_dense();
        let mut ev: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert_relative_eq!(ev[0], 0.0, epsilon = 1e-14);
        assert_relative_eq!(ev[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn energy_examples() {
        let m = path3();
        assert_relative_eq!(m.energy(&[0.0, 1.0, 3.0]), 5.0);
        assert_eq!(m.energy(&[4.0; 3]), 0.0);
        assert_eq!(m.energy_bilinear(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0]), 0.0);
    }

    #[test]
    fn gamma_examples() {
        let m = path3();
        let (c, j) = m.gamma_measures(&[0.0, 1.0, 3.0]);
        assert_relative_eq!(j.at(1), 2.5);
        assert!(c.values().iter().all(|v| *v == 0.0));
        assert_relative_eq!(j.total() + c.total(), 5.0);
        let (c, j) = m.gamma_measures(&[1.0; 3]);
        assert_eq!(c.total() + j.total(), 0.0);
    }

    #[test]
    fn pairing_examples() {
        let m = path3();
        assert_eq!(m.gamma_pairing(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0]), 0.0);
        assert_relative_eq!(m.gamma_pairing(&[0.0, 1.0, 3.0], &[0.0, 1.0, 3.0]), 5.0);
        assert_eq!(m.gamma_pairing(&[0.0, 1.0, 3.0], &[0.0; 3]), 0.0);
    }

    #[test]
    fn local_part_energy_and_measure() {
        // mesh 0, 0.5, 1.5 with conductances 2, 1; density 1
        let lp = LocalPart::new(vec![0.0, 0.5, 1.5], vec![2.0, 1.0], None).unwrap();
        let m = DirichletFormModel::new(
            StateSpace::new(3, 0).unwrap(),
            ReferenceMeasure::new(vec![1.0; 3]).unwrap(),
            JumpKernel::empty(),
            Some(lp),
        )
        .unwrap();
        let f = [0.0, 1.0, 3.0];
        // 2 * 1 / 0.5 + 1 * 4 / 1
        assert_relative_eq!(m.energy(&f), 8.0);
        let (c, j) = m.gamma_measures(&f);
        assert_eq!(j.total(), 0.0);
        assert_relative_eq!(c.at(0), 2.0);
        assert_relative_eq!(c.at(1), 4.0);
        assert_relative_eq!(c.at(2), 2.0);
        // strong locality: constant near node 0 and 1 kills the measure there
        let (c, _) = m.gamma_measures(&[1.0, 1.0, 3.0]);
        assert_eq!(c.at(0), 0.0);
        assert_relative_eq!(m.inner(&m.apply_generator(&f), &f), 8.0, max_relative = 1e-14);
    }

    #[test]
    fn lumped_mass_must_fit_measure() {
        let lp = LocalPart::new(vec![0.0, 4.0], vec![1.0], None).unwrap();
        let err = DirichletFormModel::new(
            StateSpace::new(2, 0).unwrap(),
            ReferenceMeasure::new(vec![1.0; 2]).unwrap(),
            JumpKernel::empty(),
            Some(lp),
        );
        assert!(err.is_err());
    }

    #[test]
    fn ordered_entries_require_symmetry() {
        let err = JumpKernel::from_ordered_entries(&[(0, 1, 0.5)]).unwrap_err();
        assert_eq!(err.to_string(), "asymmetric kernel at (0,1)");
        let err = JumpKernel::from_ordered_entries(&[(0, 1, 0.5), (1, 0, 0.25)]).unwrap_err();
        assert!(matches!(err, LabError::AsymmetricKernel(0, 1)));
        let k = JumpKernel::from_ordered_entries(&[(0, 1, 0.5), (1, 0, 0.5)]).unwrap();
        assert_eq!(k.value(1, 0), 0.5);
    }

    #[test]
    fn nonpositive_measure() {
        let err = ReferenceMeasure::new(vec![1.0, -2.0]).unwrap_err();
        assert_eq!(err.to_string(), "nonpositive measure at point 1");
    }

    #[test]
    fn components() {
        let m = DirichletFormModel::pure_jump(vec![1.0; 4], vec![(0, 1, 0.5), (2, 3, 0.5)], 0).unwrap();
        assert_eq!(m.component_count(), 2);
        assert!(!m.is_connected());
        assert!(path3().is_connected());
    }
}
