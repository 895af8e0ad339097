use rittsq::certificates::{
    angular_ratio, check_m1, check_m2, family_sums, lemma2_quantities, lemma_quantities,
    small_t_bounds, CertificateOptions, Lemma2Mode, PowerFamily, Quantity, Verdict,
};
use rittsq::functionals::GapSequence;
use rittsq::symbol::{closed_form_nu_alpha, lazy_walk_symbol, power_majorant, symbol_from_measure};
use rittsq::SignedMeasure;

fn quick(a: f64) -> CertificateOptions {
    CertificateOptions {
        a,
        stability_check: false,
        ..CertificateOptions::default()
    }
}

#[test]
fn trivial_family_has_zero_quantities() {
    let base = symbol_from_measure(&SignedMeasure::dirac(0));
    let fam = PowerFamily {
        alpha: 1.0,
        s: 2.0,
        m: 1.0,
    };
    let r = lemma_quantities(&base, &fam, &quick(2.0)).unwrap();
    for q in [&r.a, &r.b, &r.b_tilde, &r.c, &r.d, &r.e] {
        assert_eq!(q, &Quantity::Finite { value: 0.0 });
    }
    assert_eq!(r.scale_tilde, Some(0.0));
}

#[test]
fn small_t_bounds_dominate_the_sums() {
    let cases = [
        (closed_form_nu_alpha(0.5).unwrap(), 0.5, 2f64.powi(-14)),
        (lazy_walk_symbol(), 2.0, 2f64.powi(-8)),
    ];
    for (base, a, t_min) in cases {
        let opts = CertificateOptions {
            n_cap: 1 << 20,
            ..quick(a)
        };
        for s in [1.5, 3.0] {
            let fam = PowerFamily {
                alpha: 1.0,
                s,
                m: 1.0,
            };
            let (_, bounds) = small_t_bounds(&base, &fam, t_min, &opts).unwrap();
            for i in 0..64 {
                let t = t_min * 2f64.powf(-6.0 * i as f64 / 63.0);
                let b = bounds.at(t);
                // S0 in closed form: |1 - μ̂| (Σ n ρⁿ)^{1/s}, Σ n ρⁿ = ρ/(1-ρ)²
                let j = base.eval(t).unwrap();
                let d = (2.0 * j.gap.re - j.gap.norm_sqr()) / (1.0 + j.value.norm());
                let rho = j.value.norm().powf(s);
                let one_minus_rho = -(s * (-d).ln_1p()).exp_m1();
                let s0 = j.gap.norm() * (rho / (one_minus_rho * one_minus_rho)).powf(1.0 / s);
                assert!(
                    s0 <= b[0] * (1.0 + 1e-9),
                    "{} s={s} t={t:e}: S0 {s0} > {}",
                    base.label(),
                    b[0]
                );
                // the capped sums are tight once the cap covers ~200/(s d) terms
                if s * d * opts.n_cap as f64 > 200.0 {
                    let sums = family_sums(&base, &fam, t, &opts).unwrap();
                    assert!(
                        (sums[0] - s0).abs() <= 1e-6 * s0,
                        "{} s={s} t={t:e}: sum {} vs {s0}",
                        base.label(),
                        sums[0]
                    );
                    for k in 1..3 {
                        assert!(
                            sums[k] <= b[k] * (1.0 + 1e-9),
                            "{} s={s} t={t:e} S{k}: {} > {}",
                            base.label(),
                            sums[k],
                            b[k]
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn inner_sums_grow_with_s_decreasing() {
    let base = lazy_walk_symbol();
    let opts = quick(2.0);
    for t in [0.3, 0.05, 0.004] {
        let s3 = family_sums(
            &base,
            &PowerFamily {
                alpha: 1.0,
                s: 3.0,
                m: 1.0,
            },
            t,
            &opts,
        )
        .unwrap();
        let s2 = family_sums(
            &base,
            &PowerFamily {
                alpha: 1.0,
                s: 2.0,
                m: 1.0,
            },
            t,
            &opts,
        )
        .unwrap();
        // n^{α/s} grows as s decreases, and so does the ℓ^s norm
        assert!(s2[0] >= s3[0]);
    }
}

#[test]
fn lazy_walk_regimes() {
    let base = lazy_walk_symbol();
    let fam = PowerFamily {
        alpha: 1.0,
        s: 3.0,
        m: 1.0,
    };
    let r = lemma_quantities(&base, &fam, &CertificateOptions::default()).unwrap();
    assert!(r.a.is_finite() && r.b_tilde.is_finite() && r.c.is_finite() && r.e.is_finite());
    assert!(r.bounded());
    let json = serde_json::to_value(&r).unwrap();
    for key in [
        "A",
        "B",
        "B_tilde",
        "C",
        "D",
        "E",
        "quadrature_tol",
        "series_cutoff",
        "t_min",
    ] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn gap_blocks_split_at_beta() {
    let base = closed_form_nu_alpha(0.5).unwrap();
    let gaps = GapSequence::with_start(0.5, 1, 64).unwrap();
    let opts = quick(0.5);
    let ok = lemma2_quantities(&base, &gaps, 0.0, 2.0, Lemma2Mode::EndpointDiff, &opts).unwrap();
    assert!(ok.a.is_finite());
    let bad = lemma2_quantities(&base, &gaps, 0.6, 2.0, Lemma2Mode::EndpointDiff, &opts).unwrap();
    assert!(bad.a.is_diverged());
}

#[test]
fn conditions() {
    let lazy = lazy_walk_symbol();
    assert_eq!(
        angular_ratio(&lazy, 512).unwrap().verdict,
        Verdict::HoldsEmpirically
    );
    let m1 = check_m1(&lazy, 2.0).unwrap();
    assert!(m1.holds());
    let c1 = m1.best_constants.iter().find(|c| c.0 == "c1").unwrap().1;
    assert!((c1 - 4.0).abs() < 1e-9);

    let half = closed_form_nu_alpha(0.5).unwrap();
    let ar = angular_ratio(&half, 1024).unwrap();
    assert!(ar.holds() && (ar.sup_estimate - (1.0 + 2f64.sqrt())).abs() < 1e-3);
    let m2 = check_m2(&half, &power_majorant(0.5, 1.0).unwrap()).unwrap();
    assert_eq!(m2.verdict, Verdict::HoldsEmpirically);

    let shift = symbol_from_measure(&SignedMeasure::dirac(1));
    let ar = angular_ratio(&shift, 256).unwrap();
    assert_eq!(ar.verdict, Verdict::Fails);
    assert!(ar.witness.is_some());
    assert!(!check_m1(&shift, 2.0).unwrap().holds());
}
