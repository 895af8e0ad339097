use std::collections::BTreeMap;

use proptest::prelude::*;
use rittsq::fractional::{frac_coeff, frac_tail, trajectory};
use rittsq::functionals::{
    dyadic_blocks, oscillation_norm, variation_norm, Functional, GapSequence,
};
use rittsq::{convolution_power, convolve, truncate, SignedMeasure, SpatialSequence};

fn naive_conv(a: &[(i64, f64)], b: &[(i64, f64)]) -> BTreeMap<i64, f64> {
    let mut out = BTreeMap::new();
    for &(i, x) in a {
        for &(j, y) in b {
            *out.entry(i + j).or_insert(0.0) += x * y;
        }
    }
    out
}

fn brute_variation(v: &[f64], s: f64) -> f64 {
    let n = v.len();
    let mut best = 0.0f64;
    for mask in 0u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        best = best.max(
            idx.windows(2)
                .map(|w| (v[w[1]] - v[w[0]]).abs().powf(s))
                .sum(),
        );
    }
    best.powf(1.0 / s)
}

fn entries() -> impl Strategy<Value = Vec<(i64, f64)>> {
    (-20i64..20, prop::collection::vec(-1.0f64..1.0, 1..24)).prop_map(|(lo, w)| {
        w.into_iter()
            .enumerate()
            .map(|(i, x)| (lo + i as i64, x))
            .collect()
    })
}

fn measure(e: &[(i64, f64)]) -> SignedMeasure {
    SignedMeasure::from_entries(e).unwrap()
}

fn probability() -> impl Strategy<Value = SignedMeasure> {
    (-3i64..1, prop::collection::vec(0.01f64..1.0, 1..6)).prop_map(|(lo, w)| {
        let total: f64 = w.iter().sum();
        let e: Vec<(i64, f64)> = w
            .iter()
            .enumerate()
            .map(|(i, x)| (lo + i as i64, x / total))
            .collect();
        measure(&e)
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn convolution_matches_direct_sum(a in entries(), b in entries()) {
        let c = convolve(&measure(&a), &measure(&b));
        let direct = naive_conv(&a, &b);
        for (k, v) in &direct {
            prop_assert!((c.weight(*k) - v).abs() <= 1e-12 * (1.0 + v.abs()));
        }
        let total: f64 = direct.values().map(|v| v.abs()).sum();
        prop_assert!((c.total_variation() - total).abs() <= 1e-10);
    }

    #[test]
    fn convolution_commutes_and_multiplies_mass(a in entries(), b in entries()) {
        let (p, q) = (measure(&a), measure(&b));
        let (pq, qp) = (convolve(&p, &q), convolve(&q, &p));
        for (k, v) in pq.atoms() {
            prop_assert!((qp.weight(k) - v).abs() <= 1e-12);
        }
        prop_assert!((pq.total_mass() - p.total_mass() * q.total_mass()).abs() <= 1e-10);
        prop_assert!(pq.total_variation() <= p.total_variation() * q.total_variation() + 1e-10);
    }

    #[test]
    fn powers_match_repeated_products(mu in probability(), n in 1u64..12) {
        let fast = convolution_power(&mu, n, 0.0).unwrap();
        let mut slow = mu.clone();
        for _ in 1..n {
            slow = convolve(&slow, &mu);
        }
        for (k, v) in slow.atoms() {
            prop_assert!((fast.weight(k) - v).abs() <= 1e-13);
        }
        prop_assert!((fast.total_mass() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn truncated_powers_stay_within_budget(mu in probability(), n in 2u64..40, eps in 1e-10f64..1e-3) {
        let exact = convolution_power(&mu, n, 0.0).unwrap();
        let cut = convolution_power(&mu, n, eps).unwrap();
        let lost = exact.add_scaled(&cut, -1.0).total_variation();
        prop_assert!(cut.tail_bound() <= eps * (1.0 + 1e-12));
        prop_assert!(lost <= cut.tail_bound() + 1e-13);
    }

    #[test]
    fn truncate_accounts_for_dropped_mass(a in entries(), eps in 0.0f64..2.0) {
        let mu = measure(&a);
        let cut = truncate(&mu, eps).unwrap();
        let dropped = mu.add_scaled(&cut, -1.0).total_variation();
        prop_assert!(dropped <= eps + 1e-12);
        prop_assert!((cut.tail_bound() - dropped).abs() <= 1e-12);
        for (k, w) in cut.atoms() {
            prop_assert!(w == 0.0 || w == mu.weight(k));
        }
    }

    #[test]
    fn text_format_round_trips(a in entries(), tail in 0.0f64..1.0) {
        let mu = measure(&a).with_tail_bound(tail);
        let back = SignedMeasure::parse(&mu.to_text()).unwrap();
        prop_assert_eq!(back.tail_bound(), tail);
        for (k, w) in mu.atoms() {
            prop_assert_eq!(back.weight(k), w);
        }
        prop_assert_eq!(back.atom_count(), mu.atom_count());
    }

    #[test]
    fn tail_identity(alpha in 0.01f64..0.99, k in 1usize..3000) {
        let c = frac_coeff(alpha, k).unwrap();
        let partial: f64 = c.values.iter().sum();
        prop_assert!((1.0 - partial - frac_tail(alpha, k)).abs() <= 1e-12);
        prop_assert!((c.tail - frac_tail(alpha, k)).abs() <= 1e-15);
        prop_assert!(c.values.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0));
    }

    #[test]
    fn recursion_matches_product(alpha in 0.01f64..0.99) {
        let c = frac_coeff(alpha, 50).unwrap();
        let mut prod = 1.0;
        for k in 1..=50usize {
            let g = alpha / k as f64 * prod;
            prop_assert!((c.get(k) - g).abs() <= 1e-12 * g);
            prod *= 1.0 - alpha / k as f64;
        }
    }

    #[test]
    fn variation_matches_brute_force(v in prop::collection::vec(-2.0f64..2.0, 1..10), s in 1.0f64..4.0) {
        prop_assert!((variation_norm(&v, s).unwrap() - brute_variation(&v, s)).abs() <= 1e-12);
    }

    #[test]
    fn variation_orderings(v in prop::collection::vec(-2.0f64..2.0, 2..60), s in 1.0f64..4.0, ds in 0.0f64..2.0) {
        let vs = variation_norm(&v, s).unwrap();
        prop_assert!(variation_norm(&v, s + ds).unwrap() <= vs + 1e-12);
        let mut spread = 0.0f64;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                spread = spread.max((v[j] - v[i]).abs());
            }
        }
        prop_assert!(vs >= spread - 1e-12);
        let total: f64 = v.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        prop_assert!((variation_norm(&v, 1.0).unwrap() - total).abs() <= 1e-12);
        let o = oscillation_norm(&v, &dyadic_blocks(v.len()), s).unwrap();
        prop_assert!(o <= vs + 1e-12);
    }

    #[test]
    fn square_norm_decreases_in_s(v in prop::collection::vec(-1.0f64..1.0, 2..80), s in 1.0f64..4.0, ds in 0.0f64..3.0) {
        let n = v.len() - 1;
        let q = |s| Functional::Square { alpha: 0.0, s }.eval(&v, n);
        prop_assert!(q(s + ds) <= q(s) + 1e-12);
    }

    #[test]
    fn square_levels_are_nondecreasing(v in prop::collection::vec(-1.0f64..1.0, 8..80), alpha in -1.0f64..2.0) {
        let levels: Vec<usize> = (1..v.len()).step_by(3).collect();
        let f = Functional::Square { alpha, s: 2.0 };
        let r = f.eval_levels(&v, &levels);
        prop_assert!(r.windows(2).all(|w| w[1] >= w[0]));
        for (l, x) in levels.iter().zip(&r) {
            prop_assert!((f.eval(&v, *l) - x).abs() <= 1e-12 * (1.0 + x));
        }
    }

    #[test]
    fn gap_steps(alpha in 0.05f64..0.95, start in 1usize..50) {
        let g = GapSequence::with_start(alpha, start, 5000).unwrap();
        prop_assert_eq!(g.indices[0], start);
        for w in g.indices.windows(2) {
            prop_assert_eq!(w[1] - w[0], GapSequence::step(alpha, w[0]));
        }
        prop_assert!(*g.indices.last().unwrap() <= 5000);
    }

    #[test]
    fn trajectory_matches_direct_iteration(mu in probability(), f in prop::collection::vec(-1.0f64..1.0, 1..5), n in 1usize..12) {
        let entries: Vec<(i64, f64)> = f.iter().enumerate().map(|(i, x)| (i as i64, *x)).collect();
        let seq = SpatialSequence::from_entries(&entries, 80).unwrap();
        let tr = trajectory(&mu, 1.0, &seq, n, 0.0).unwrap();
        // T_μ f(x) = Σ_k μ(k) f(x + k) is a convolution with the reflection
        let mu_e: Vec<(i64, f64)> = mu.atoms().map(|(k, w)| (-k, w)).collect();
        let mut cur: BTreeMap<i64, f64> = entries.iter().copied().collect();
        for (k, v) in naive_conv(&mu_e, &entries) {
            *cur.entry(k).or_insert(0.0) -= v;
        }
        for i in 0..=n {
            for (k, v) in &cur {
                prop_assert!((tr.term(i).get(*k) - v).abs() <= 1e-12);
            }
            let e: Vec<(i64, f64)> = cur.iter().map(|(k, v)| (*k, *v)).collect();
            cur = naive_conv(&mu_e, &e);
        }
        prop_assert!(tr.error_budget().iter().all(|&b| b <= 1e-12));
    }
}
