//! Model invariants as property tests over random finite models.

use dirichlet_lab::family::{lattice_box, random_graph, random_mixed};
use dirichlet_lab::harmonic::solve_dirichlet;
use dirichlet_lab::io::{model_to_string, parse_model};
use dirichlet_lab::liouville::{caccioppoli_constant, caccioppoli_sides, karp_run};
use dirichlet_lab::metric::{cutoff_profile, verify_localization};
use dirichlet_lab::semigroup::SemigroupOperator;
use dirichlet_lab::verify::{bitwise_equal, karp_bump, lipschitz_on_links};
use dirichlet_lab::{DirichletFormModel, MetricField, Tolerances};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn model() -> impl Strategy<Value = DirichletFormModel> {
    prop_oneof![
        (3usize..25, 2usize..5, any::<u64>()).prop_map(|(n, d, s)| random_graph(n, d, s).unwrap()),
        (4usize..25, 1usize..4, any::<u64>()).prop_map(|(n, k, s)| random_mixed(n, k, s).unwrap()),
    ]
}

fn values(n: usize, seed: u64, lo: f64, hi: f64) -> Vec<f64> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(lo..=hi)).collect()
}

/// Effective resistance between `a` and `b`.
fn resistance(m: &DirichletFormModel, a: usize, b: usize) -> f64 {
    let (h, _) = solve_dirichlet(m, &[(a, 1.0), (b, 0.0)], &Tolerances::default()).unwrap();
    1.0 / m.energy(&h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn markov_contraction_and_positivity(m in model(), seed in any::<u64>(), t in 0.0f64..5.0, p in 1.1f64..6.0) {
        let tol = Tolerances::default();
        let op = SemigroupOperator::new(&m, &tol);
        let f = values(m.len(), seed, 0.0, 1.0);
        let g = op.evolve(t, &f).unwrap();
        let w = m.measure().as_slice();
        prop_assert!(g.iter().all(|v| *v >= -1e-12));
        prop_assert!(g.iter().all(|v| *v <= 1.0 + 1e-12));
        let (nf, ng) = (dirichlet_lab::form::lp_norm(&f, w, p), dirichlet_lab::form::lp_norm(&g, w, p));
        prop_assert!(ng <= nf * (1.0 + 1e-10) + 1e-14);
        prop_assert!((m.mean(&g) - m.mean(&f)).abs() <= 1e-10);
    }

    #[test]
    fn semigroup_law(m in model(), seed in any::<u64>(), s in 0.0f64..2.0, t in 0.0f64..2.0) {
        let tol = Tolerances::default();
        let op = SemigroupOperator::new(&m, &tol);
        let f = values(m.len(), seed, -1.0, 1.0);
        let a = op.evolve(s + t, &f).unwrap();
        let b = op.evolve(s, &op.evolve(t, &f).unwrap()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn energy_duality(m in model(), seed in any::<u64>()) {
        let f = values(m.len(), seed, -2.0, 2.0);
        let phi = values(m.len(), seed ^ 1, -1.0, 1.0);
        let lhs = m.gamma_pairing(&f, &phi);
        let rhs = m.inner(&m.apply_generator(&f), &phi);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        let (c, j) = m.gamma_pairing_measures(&f, &phi);
        let total: f64 = c.iter().chain(&j).sum();
        prop_assert!((total - lhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn maximum_principle_and_energy_minimality(m in model(), seed in any::<u64>()) {
        let n = m.len();
        let vals = values(n, seed, -3.0, 3.0);
        let boundary: Vec<(usize, f64)> = (0..n).filter(|x| x % 3 == 0).map(|x| (x, vals[x])).collect();
        let (h, _) = solve_dirichlet(&m, &boundary, &Tolerances::default()).unwrap();
        let lo = boundary.iter().map(|b| b.1).fold(f64::INFINITY, f64::min);
        let hi = boundary.iter().map(|b| b.1).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(h.iter().all(|v| *v >= lo - 1e-9 && *v <= hi + 1e-9));
        let bump = values(n, seed ^ 2, -0.1, 0.1);
        let g: Vec<f64> = (0..n).map(|x| if x % 3 == 0 { h[x] } else { h[x] + bump[x] }).collect();
        prop_assert!(m.energy(&h) <= m.energy(&g) * (1.0 + 1e-10) + 1e-12);
    }

    #[test]
    fn rayleigh_monotonicity(n in 3usize..20, d in 2usize..4, seed in any::<u64>(), scale in 1.0f64..3.0) {
        let m = random_graph(n, d, seed).unwrap();
        let edges: Vec<(usize, usize, f64)> = m.jump().edges().iter().enumerate()
            .map(|(k, e)| (e.i, e.j, if k % 2 == 0 { e.value * scale } else { e.value }))
            .collect();
        let stronger = DirichletFormModel::pure_jump(m.measure().as_slice().to_vec(), edges, 0).unwrap();
        let b = n - 1;
        prop_assert!(resistance(&stronger, 0, b) <= resistance(&m, 0, b) * (1.0 + 1e-10));
    }

    #[test]
    fn distance_functions_are_lipschitz(m in model(), seed in any::<u64>(), k in 1usize..4) {
        let metric = MetricField::adapted(&m).unwrap();
        let set: Vec<usize> = (0..m.len()).filter(|x| (x + seed as usize) % (k + 1) == 0).collect();
        prop_assume!(!set.is_empty());
        let rho = metric.distances_from(&set);
        prop_assert!(lipschitz_on_links(&m, &metric, &rho, 1e-12));
        for x in 0..m.len() {
            for y in 0..m.len() {
                prop_assert!((rho[x] - rho[y]).abs() <= metric.pairwise(x, y) * (1.0 + 1e-12) + 1e-15);
            }
        }
    }

    #[test]
    fn localization(m in model(), seed in any::<u64>(), a in 0.0f64..1.0, b in 0.05f64..1.0) {
        let metric = MetricField::adapted(&m).unwrap();
        let big_r = b * metric.diameter_from_base().max(1e-3);
        let eta = cutoff_profile(&metric, a * big_r, big_r).unwrap();
        let f = values(m.len(), seed, -1.0, 1.0);
        prop_assert!(verify_localization(&m, &metric, &f, &eta, 1e-9).pass);
    }

    #[test]
    fn roundtrip(m in model()) {
        let text = model_to_string(&m);
        let back = parse_model(&text).unwrap();
        prop_assert!(bitwise_equal(&m, &back));
        prop_assert_eq!(model_to_string(&back), text);
    }

    #[test]
    fn caccioppoli_lhs_monotone_in_r(p in 1.1f64..5.0, r1 in 0.5f64..6.0, dr in 0.0f64..6.0) {
        let tol = Tolerances::default();
        let m = lattice_box(1, 20);
        let metric = MetricField::adapted(&m).unwrap();
        let f: Vec<f64> = (0..m.len()).map(|x| m.space().label(x)[0].abs() as f64).collect();
        let big_r = 12.5;
        let r2 = (r1 + dr).min(12.0);
        let c = caccioppoli_constant(p);
        let a = caccioppoli_sides(&m, &metric, &f, p, r1.min(r2), big_r, c, &tol).unwrap();
        let b = caccioppoli_sides(&m, &metric, &f, p, r2, big_r, c, &tol).unwrap();
        prop_assert!(a.lhs <= b.lhs);
        prop_assert!(a.pass && b.pass);
    }

    #[test]
    fn karp_q_nondecreasing(seed in any::<u64>(), p in 1.1f64..5.0) {
        let tol = Tolerances::default();
        let m = lattice_box(1, 150);
        let metric = MetricField::adapted(&m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, good) = karp_bump(&m, &metric, &mut rng, &tol).unwrap();
        let s = metric.effective_jump_size();
        let run = karp_run(&m, &metric, &f, p, 4.0 * s, good * (1.0 - 1e-12), &tol).unwrap();
        prop_assert!(run.q.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(run.steps.iter().all(|st| st.pass));
    }
}
