//! Adapted path metrics, intrinsic-metric certificates and cut-off functions.
//!
//! Edge lengths follow the adapted rule
//!
//! * jump edge: `l(x,y) = min(Deg(x), Deg(y))^{-1/2}` with
//!   `Deg(x) = (2 / m^(j)(x)) sum_y J(x,y)`,
//! * mesh interval: `l_i = dx_i * sqrt(density_i / a_i)`,
//!
//! and `rho` is the induced shortest-path metric. With the default split
//! `m^(c)` = lumped mesh mass and `m^(j) = m - m^(c)` every point satisfies
//! `sum_y J(x,y) l(x,y)^2 <= m^(j)(x)` and the mesh analogue, which bounds
//! `Gamma(rho_A)` for every set `A` at once because `rho_A` is 1-Lipschitz.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::form::{DirichletFormModel, LinkKind};

/// Relative widening of closed balls that absorbs summation rounding in `rho`.
const BALL_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Edge {
    to: usize,
    length: f64,
    kind: LinkKind,
}

#[derive(Clone, Debug)]
pub struct MetricField {
    base: usize,
    adj: Vec<Vec<Edge>>,
    dist: Vec<f64>,
    local_mass: Vec<f64>,
    jump_mass: Vec<f64>,
    jump_size: f64,
    local_step: f64,
    shrink_halvings: u32,
}

/// `x` lies in the closed ball of radius `r` given its distance `d`.
pub fn in_ball(d: f64, r: f64) -> bool {
    r >= 0.0 && d <= r * (1.0 + BALL_EPS) + 1e-15
}

impl MetricField {
    /// Adapted lengths (with `L` overrides applied), certified intrinsic;
    /// lengths are halved until the certificate passes.
    pub fn adapted(model: &DirichletFormModel) -> Result<Self> {
        if !model.is_connected() {
            return Err(LabError::Disconnected(format!(
                "{} components; the path metric would be infinite",
                model.component_count()
            )));
        }
        let n = model.len();
        let local_mass = model.local_mass();
        let jump_mass = model.jump_mass();
        let mut deg = vec![0.0; n];
        for x in 0..n {
            let s: f64 = model
                .links(x)
                .iter()
                .filter(|l| l.kind == LinkKind::Jump)
                .map(|l| l.weight)
                .sum();
            if s > 0.0 {
                if !(jump_mass[x] > 0.0) {
                    return Err(LabError::InvalidModel(format!(
                        "point {x} carries jumps but has no jump mass left after the mesh share"
                    )));
                }
                deg[x] = 2.0 * s / jump_mass[x];
            }
        }
        let mesh = model.local();
        let lengths = |x: usize, y: usize, kind: LinkKind| -> f64 {
            match kind {
                LinkKind::Jump => deg[x].min(deg[y]).powf(-0.5),
                LinkKind::Local => {
                    let lp = mesh.expect("local link without mesh");
                    let i = x.min(y);
                    let dx = lp.nodes()[i + 1] - lp.nodes()[i];
                    dx * (lp.densities()[i] / lp.conductances()[i]).sqrt()
                }
            }
        };
        Self::build(model, lengths, local_mass, jump_mass)
    }

    /// Metric from explicit lengths per link, `L` overrides still applied.
    /// No certificate is enforced.
    pub fn from_lengths(model: &DirichletFormModel, lengths: impl Fn(usize, usize, LinkKind) -> f64) -> Result<Self> {
        let mut field = Self::build_raw(model, lengths, model.local_mass(), model.jump_mass())?;
        field.recompute();
        Ok(field)
    }

    fn build(
        model: &DirichletFormModel,
        lengths: impl Fn(usize, usize, LinkKind) -> f64,
        local_mass: Vec<f64>,
        jump_mass: Vec<f64>,
    ) -> Result<Self> {
        let mut field = Self::build_raw(model, lengths, local_mass, jump_mass)?;
        let mut halvings = 0;
        while !field.edge_certificate(model) {
            if halvings >= 64 {
                return Err(LabError::InvalidModel(
                    "no dyadic shrink makes the metric intrinsic".into(),
                ));
            }
            for row in &mut field.adj {
                for e in row {
                    e.length *= 0.5;
                }
            }
            halvings += 1;
        }
        field.shrink_halvings = halvings;
        field.recompute();
        Ok(field)
    }

    fn build_raw(
        model: &DirichletFormModel,
        lengths: impl Fn(usize, usize, LinkKind) -> f64,
        local_mass: Vec<f64>,
        jump_mass: Vec<f64>,
    ) -> Result<Self> {
        let n = model.len();
        let mut adj: Vec<Vec<Edge>> = (0..n)
            .map(|x| {
                model
                    .links(x)
                    .iter()
                    .map(|l| Edge {
                        to: l.to,
                        length: lengths(x, l.to, l.kind),
                        kind: l.kind,
                    })
                    .collect()
            })
            .collect();
        for &(i, j, len) in model.length_overrides() {
            for (a, b) in [(i, j), (j, i)] {
                for e in adj[a].iter_mut().filter(|e| e.to == b) {
                    e.length = len;
                }
            }
        }
        for (x, row) in adj.iter().enumerate() {
            for e in row {
                if !(e.length > 0.0) || !e.length.is_finite() {
                    return Err(LabError::InvalidModel(format!(
                        "nonpositive length {} on link ({x},{})",
                        e.length, e.to
                    )));
                }
            }
        }
        Ok(MetricField {
            base: model.base(),
            adj,
            dist: Vec::new(),
            local_mass,
            jump_mass,
            jump_size: 0.0,
            local_step: 0.0,
            shrink_halvings: 0,
        })
    }

    fn recompute(&mut self) {
        self.dist = self.distances_from(&[self.base]);
        let mut s = 0.0_f64;
        let mut sc = 0.0_f64;
        for x in 0..self.adj.len() {
            for e in &self.adj[x] {
                if x < e.to {
                    let d = self.bounded_distance(x, e.to, e.length);
                    match e.kind {
                        LinkKind::Jump => s = s.max(d),
                        LinkKind::Local => sc = sc.max(d),
                    }
                }
            }
        }
        self.jump_size = s;
        self.local_step = sc;
    }

    /// Sufficient per-point certificate `sum_y w(x,y) l(x,y)^2 <= m^(.)(x)`.
    fn edge_certificate(&self, model: &DirichletFormModel) -> bool {
        (0..self.adj.len()).all(|x| {
            let (mut c, mut j) = (0.0, 0.0);
            for (e, l) in self.adj[x].iter().zip(model.links(x)) {
                let v = l.weight * e.length * e.length;
                match l.kind {
                    LinkKind::Jump => j += v,
                    LinkKind::Local => c += v,
                }
            }
            j <= self.jump_mass[x] * (1.0 + 1e-9) + 1e-12 && c <= self.local_mass[x] * (1.0 + 1e-9) + 1e-12
        })
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn base(&self) -> usize {
        self.base
    }

    /// `rho(o, .)`.
    pub fn dist(&self) -> &[f64] {
        &self.dist
    }

    /// Length of every link of `x`, aligned with `model.links(x)`.
    pub fn link_lengths(&self, x: usize) -> impl Iterator<Item = f64> + '_ {
        self.adj[x].iter().map(|e| e.length)
    }

    pub fn local_mass(&self) -> &[f64] {
        &self.local_mass
    }

    pub fn jump_mass(&self) -> &[f64] {
        &self.jump_mass
    }

    /// `s = max rho(x,y)` over pairs charged by `J`; zero for pure-local models.
    pub fn jump_size(&self) -> f64 {
        self.jump_size
    }

    /// Largest `rho`-length of a mesh interval, the discrete neighbourhood
    /// width of the local energy measure.
    pub fn local_step(&self) -> f64 {
        self.local_step
    }

    /// Support width of the combined discrete kernel, `max(s, local_step)`.
    pub fn effective_jump_size(&self) -> f64 {
        self.jump_size.max(self.local_step)
    }

    pub fn shrink_halvings(&self) -> u32 {
        self.shrink_halvings
    }

    /// Multi-source Dijkstra: `rho_A = min_{a in A} rho(a, .)`.
    pub fn distances_from(&self, sources: &[usize]) -> Vec<f64> {
        let n = self.adj.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            dist[s] = 0.0;
            heap.push(HeapEntry { dist: 0.0, node: s });
        }
        while let Some(HeapEntry { dist: d, node }) = heap.pop() {
            if d > dist[node] {
                continue;
            }
            for e in &self.adj[node] {
                let nd = d + e.length;
                if nd < dist[e.to] {
                    dist[e.to] = nd;
                    heap.push(HeapEntry { dist: nd, node: e.to });
                }
            }
        }
        dist
    }

    /// `rho(x, y)`, searching no farther than `cutoff` (returns `cutoff` if
    /// `y` is not reached earlier).
    pub fn bounded_distance(&self, x: usize, y: usize, cutoff: f64) -> f64 {
        let mut best = std::collections::HashMap::new();
        let mut heap = BinaryHeap::new();
        best.insert(x, 0.0);
        heap.push(HeapEntry { dist: 0.0, node: x });
        while let Some(HeapEntry { dist: d, node }) = heap.pop() {
            if node == y {
                return d;
            }
            if d > cutoff {
                break;
            }
            if d > *best.get(&node).unwrap_or(&f64::INFINITY) {
                continue;
            }
            for e in &self.adj[node] {
                let nd = d + e.length;
                if nd <= cutoff && nd < *best.get(&e.to).unwrap_or(&f64::INFINITY) {
                    best.insert(e.to, nd);
                    heap.push(HeapEntry { dist: nd, node: e.to });
                }
            }
        }
        cutoff
    }

    pub fn pairwise(&self, x: usize, y: usize) -> f64 {
        self.distances_from(&[x])[y]
    }

    /// Indicator of the closed ball `B_r = {rho(., o) <= r}`; empty for `r < 0`.
    pub fn ball(&self, r: f64) -> Vec<bool> {
        self.dist.iter().map(|&d| in_ball(d, r)).collect()
    }

    /// Points of `B_outer \ B_inner`.
    pub fn annulus(&self, inner: f64, outer: f64) -> Vec<bool> {
        self.dist
            .iter()
            .map(|&d| in_ball(d, outer) && !in_ball(d, inner))
            .collect()
    }

    pub fn ball_mass(&self, model: &DirichletFormModel, r: f64) -> f64 {
        self.dist
            .iter()
            .enumerate()
            .filter(|(_, &d)| in_ball(d, r))
            .map(|(x, _)| model.measure().weight(x))
            .sum()
    }

    pub fn diameter_from_base(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }
}

/// `eta_{r,R}(x) = 1 ∧ ((R - rho(x,o)) / (R - r))_+`.
#[derive(Clone, Debug, PartialEq)]
pub struct CutoffProfile {
    pub inner: f64,
    pub outer: f64,
    pub values: Vec<f64>,
}

pub fn cutoff_profile(metric: &MetricField, inner: f64, outer: f64) -> Result<CutoffProfile> {
    if !(inner >= 0.0) || !(outer > inner) || !outer.is_finite() {
        return Err(LabError::pre(format!(
            "cut-off radii need 0 <= r < R, got r = {inner}, R = {outer}"
        )));
    }
    let values = metric
        .dist()
        .iter()
        .map(|&d| {
            if in_ball(d, inner) {
                1.0
            } else {
                ((outer - d) / (outer - inner)).clamp(0.0, 1.0)
            }
        })
        .collect();
    Ok(CutoffProfile { inner, outer, values })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IntrinsicReport {
    pub sets_checked: usize,
    /// Largest `Gamma^(c)(rho_A)({x}) / m^(c)({x})` seen (0 if never charged).
    pub worst_local_ratio: f64,
    pub worst_jump_ratio: f64,
    pub violations: usize,
    pub pass: bool,
}

/// Checks `Gamma^(c)(rho_A) <= m^(c)` and `Gamma^(j)(rho_A) <= m^(j)`
/// pointwise for every singleton and `random_sets` random nonempty subsets.
pub fn verify_intrinsic(
    model: &DirichletFormModel,
    metric: &MetricField,
    random_sets: usize,
    seed: u64,
    slack: f64,
) -> IntrinsicReport {
    let n = model.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sets: Vec<Vec<usize>> = (0..n).map(|x| vec![x]).collect();
    for _ in 0..random_sets {
        let k = rng.gen_range(1..=n);
        sets.push(sample(&mut rng, n, k).into_vec());
    }
    let per_set: Vec<(f64, f64, usize)> = sets
        .par_iter()
        .map(|set| {
            let rho = metric.distances_from(set);
            let (c, j) = model.gamma_measures(&rho);
            let mut worst = (0.0_f64, 0.0_f64, 0usize);
            for x in 0..n {
                let (gc, gj) = (c.at(x), j.at(x));
                let (mc, mj) = (metric.local_mass()[x], metric.jump_mass()[x]);
                if gc > mc * (1.0 + slack) + 1e-12 || gj > mj * (1.0 + slack) + 1e-12 {
                    worst.2 += 1;
                }
                if mc > 0.0 {
                    worst.0 = worst.0.max(gc / mc);
                } else if gc > 0.0 {
                    worst.0 = f64::INFINITY;
                }
                if mj > 0.0 {
                    worst.1 = worst.1.max(gj / mj);
                } else if gj > 0.0 {
                    worst.1 = f64::INFINITY;
                }
            }
            worst
        })
        .collect();
    let mut report = IntrinsicReport {
        sets_checked: sets.len(),
        ..Default::default()
    };
    for (c, j, v) in per_set {
        report.worst_local_ratio = report.worst_local_ratio.max(c);
        report.worst_jump_ratio = report.worst_jump_ratio.max(j);
        report.violations += v;
    }
    report.pass = report.violations == 0;
    report
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CutoffReport {
    pub values_in_unit_interval: bool,
    pub one_on_inner_ball: bool,
    pub zero_off_outer_ball: bool,
    pub lipschitz: bool,
    pub local_estimate: bool,
    pub jump_estimate: bool,
    pub pass: bool,
}

/// Verifies the cut-off profile invariants and the energy-measure estimates
/// `Gamma^(c)(eta) <= (R-r)^{-2} 1_{ring_c} m^(c)` and
/// `Gamma^(j)(eta) <= (R-r)^{-2} 1_{B_{R+s} \ B_{r-s}} m^(j)`, where `ring_c`
/// widens `B_R \ B_r` by the mesh step.
pub fn verify_cutoff(
    model: &DirichletFormModel,
    metric: &MetricField,
    eta: &CutoffProfile,
    slack: f64,
) -> CutoffReport {
    let (r, big_r) = (eta.inner, eta.outer);
    let w = (big_r - r).powi(-2);
    let s = metric.jump_size();
    let sc = metric.local_step();
    let d = metric.dist();
    let mut rep = CutoffReport {
        values_in_unit_interval: eta.values.iter().all(|v| (0.0..=1.0).contains(v)),
        one_on_inner_ball: d.iter().zip(&eta.values).all(|(&dx, &v)| !in_ball(dx, r) || v == 1.0),
        zero_off_outer_ball: d
            .iter()
            .zip(&eta.values)
            .all(|(&dx, &v)| in_ball(dx, big_r) || v == 0.0),
        lipschitz: true,
        local_estimate: true,
        jump_estimate: true,
        pass: false,
    };
    for x in 0..model.len() {
        for (l, len) in model.links(x).iter().zip(metric.link_lengths(x)) {
            let diff = (eta.values[x] - eta.values[l.to]).abs();
            if diff > len / (big_r - r) * (1.0 + slack) + 1e-12 {
                rep.lipschitz = false;
            }
        }
    }
    let (gc, gj) = model.gamma_measures(&eta.values);
    let ring_c = metric.annulus(r - sc, big_r + sc);
    let ring_j = metric.annulus(r - s, big_r + s);
    for x in 0..model.len() {
        let bc = if ring_c[x] { w * metric.local_mass()[x] } else { 0.0 };
        let bj = if ring_j[x] { w * metric.jump_mass()[x] } else { 0.0 };
        if gc.at(x) > bc * (1.0 + slack) + 1e-12 {
            rep.local_estimate = false;
        }
        if gj.at(x) > bj * (1.0 + slack) + 1e-12 {
            rep.jump_estimate = false;
        }
    }
    rep.pass = rep.values_in_unit_interval
        && rep.one_on_inner_ball
        && rep.zero_off_outer_ball
        && rep.lipschitz
        && rep.local_estimate
        && rep.jump_estimate;
    rep
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalizationReport {
    pub local_total: f64,
    pub local_on_ring: f64,
    pub jump_total: f64,
    pub jump_on_ring_pairs: f64,
    pub pass: bool,
}

/// `int_X dGamma^(c)(f,eta) = int_{ring} dGamma^(c)(f,eta)` and the jump
/// pairing restricted to `U_{r,R} = (B_{R+s} \ B_{r-s})^2 \ d`.
pub fn verify_localization(
    model: &DirichletFormModel,
    metric: &MetricField,
    f: &[f64],
    eta: &CutoffProfile,
    rel: f64,
) -> LocalizationReport {
    let (r, big_r) = (eta.inner, eta.outer);
    let s = metric.jump_size();
    let sc = metric.local_step();
    let (pc, _) = model.gamma_pairing_measures(f, &eta.values);
    let ring_c = metric.annulus(r - sc, big_r + sc);
    let local_total: f64 = pc.iter().sum();
    let local_on_ring: f64 = pc.iter().zip(&ring_c).filter(|(_, &b)| b).map(|(v, _)| v).sum();
    let ring_j = metric.annulus(r - s, big_r + s);
    let mut jump_total = 0.0;
    let mut jump_on_ring_pairs = 0.0;
    for x in 0..model.len() {
        for l in model.links(x).iter().filter(|l| l.kind == LinkKind::Jump) {
            let v = l.weight * (f[x] - f[l.to]) * (eta.values[x] - eta.values[l.to]);
            jump_total += v;
            if ring_j[x] && ring_j[l.to] {
                jump_on_ring_pairs += v;
            }
        }
    }
    let scale_c: f64 = pc.iter().map(|v| v.abs()).sum::<f64>().max(1e-300);
    let pass = (local_total - local_on_ring).abs() <= rel * scale_c + 1e-14
        && (jump_total - jump_on_ring_pairs).abs() <= rel * jump_total.abs().max(1.0) + 1e-14;
    LocalizationReport {
        local_total,
        local_on_ring,
        jump_total,
        jump_on_ring_pairs,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::{JumpKernel, LocalPart, ReferenceMeasure, StateSpace};
    use approx::assert_relative_eq;

    /// Z-segment {-k..k} with J = 1/2, base at 0 (index k).
    fn zseg(k: i64, m: f64) -> DirichletFormModel {
        let n = (2 * k + 1) as usize;
        let edges = (0..n - 1).map(|i| (i, i + 1, 0.5)).collect();
        DirichletFormModel::pure_jump(vec![m; n], edges, k as usize).unwrap()
    }

    #[test]
    fn z_segment_lengths() {
        let model = zseg(5, 1.0);
        let metric = MetricField::adapted(&model).unwrap();
        // interior edges: Deg = 2; the end edges touch a Deg = 1 point
        let l: Vec<f64> = metric.link_lengths(5).collect();
        assert!(l.iter().all(|v| (v - 0.5f64.sqrt()).abs() < 1e-15));
        assert_eq!(metric.shrink_halvings(), 0);
        assert_relative_eq!(metric.dist()[5 + 3], 3.0 / 2f64.sqrt(), max_relative = 1e-14);
        // scaling m by 4 doubles interior lengths
        let metric4 = MetricField::adapted(&zseg(5, 4.0)).unwrap();
        let l4: Vec<f64> = metric4.link_lengths(5).collect();
        assert_relative_eq!(l4[0], 2.0 * l[0], max_relative = 1e-14);
    }

    #[test]
    fn single_edge_length_one() {
        let model = DirichletFormModel::pure_jump(vec![1.0; 2], vec![(0, 1, 0.5)], 0).unwrap();
        let metric = MetricField::adapted(&model).unwrap();
        assert_relative_eq!(metric.dist()[1], 1.0);
        assert_relative_eq!(metric.jump_size(), 1.0);
    }

    #[test]
    fn disconnected_is_error() {
        let model = DirichletFormModel::pure_jump(vec![1.0; 4], vec![(0, 1, 0.5), (2, 3, 0.5)], 0).unwrap();
        assert!(matches!(MetricField::adapted(&model), Err(LabError::Disconnected(_))));
    }

    #[test]
    fn balls_on_z_segment() {
        let model = zseg(20, 1.0);
        let metric = MetricField::adapted(&model).unwrap();
        for &r in &[0.0, 0.3, 1.0, 2.5, 7.1] {
            let count = metric.ball(r).iter().filter(|b| **b).count();
            assert_eq!(count, 2 * (2f64.sqrt() * r).floor() as usize + 1, "r = {r}");
        }
        assert!(metric.ball(0.0)[20]);
        assert!(metric.ball(1e9).iter().all(|b| *b));
    }

    #[test]
    fn jump_size_examples() {
        let model = zseg(6, 1.0);
        let metric = MetricField::adapted(&model).unwrap();
        // the outermost edges are longer (degree-1 endpoints)
        let interior = MetricField::from_lengths(&model, |_, _, _| 0.5f64.sqrt()).unwrap();
        assert_relative_eq!(interior.jump_size(), 0.5f64.sqrt());
        assert!(metric.jump_size() >= interior.jump_size());
        // add a long-range edge whose shortest path is 3
        let mut edges: Vec<(usize, usize, f64)> = (0..12).map(|i| (i, i + 1, 0.5)).collect();
        edges.push((0, 12, 0.01));
        let m2 = DirichletFormModel::pure_jump(vec![1.0; 13], edges, 6).unwrap();
        let metric2 = MetricField::from_lengths(&m2, |x, y, _| if x.abs_diff(y) == 12 { 3.0 } else { 0.5 }).unwrap();
        assert_relative_eq!(metric2.jump_size(), 3.0);
    }

    #[test]
    fn pure_local_has_zero_jump_size() {
        let lp = LocalPart::new(vec![0.0, 0.5, 1.0, 1.5], vec![1.0; 3], None).unwrap();
        let model = DirichletFormModel::new(
            StateSpace::new(4, 0).unwrap(),
            ReferenceMeasure::new(vec![1.0; 4]).unwrap(),
            JumpKernel::empty(),
            Some(lp),
        )
        .unwrap();
        let metric = MetricField::adapted(&model).unwrap();
        assert_eq!(metric.jump_size(), 0.0);
        assert_relative_eq!(metric.local_step(), 0.5);
        let rep = verify_intrinsic(&model, &metric, 32, 1, 1e-9);
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn cutoff_example() {
        let model = zseg(6, 1.0);
        let metric = MetricField::adapted(&model).unwrap();
        let r = 2f64.sqrt();
        let eta = cutoff_profile(&metric, r, 2.0 * r).unwrap();
        for sgn in [-1i64, 1] {
            let at = |k: i64| eta.values[(6 + sgn * k) as usize];
            assert_relative_eq!(at(3), 0.5, epsilon = 1e-12);
            assert_eq!(at(2), 1.0);
            assert!(at(4).abs() < 1e-12);
        }
        assert_eq!(cutoff_profile(&metric, 0.0, 1.0).unwrap().values[6], 1.0);
        assert!(cutoff_profile(&metric, 2.0, 2.0).is_err());
        assert!(cutoff_profile(&metric, 3.0, 2.0).is_err());
        let rep = verify_cutoff(&model, &metric, &eta, 1e-9);
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn intrinsic_with_override_shrinks() {
        let model = zseg(3, 1.0).with_length_overrides(vec![(2, 3, 5.0)]).unwrap();
        let metric = MetricField::adapted(&model).unwrap();
        assert!(metric.shrink_halvings() > 0);
        let rep = verify_intrinsic(&model, &metric, 32, 3, 1e-9);
        assert!(rep.pass);
    }
}
