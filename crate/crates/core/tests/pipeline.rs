use std::collections::HashSet;

use proptest::prelude::*;

use polyjac::format::{format_system, parse_system};
use polyjac::kernels::{stage1_common_factor, stage1_powers, stage2_term, ThreadWorkspace};
use polyjac::oracle::relative_error;
use polyjac::packing::zero_mask_len;
use polyjac::{
    build_layout, compare, mons_slot, random_system, validate_system, zero_mask, ComplexValue,
    EvaluationContext, EvaluationPoint, GridConfig, TermKind,
};

/// (n, m, k, d, seed) with 1 <= k <= n.
fn shape() -> impl Strategy<Value = (usize, usize, usize, u32, u64)> {
    (1usize..12, 1usize..8, 1u32..=12, any::<u64>())
        .prop_flat_map(|(n, m, d, seed)| (Just(n), Just(m), 1..=n, Just(d), Just(seed)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_systems_validate((n, m, k, d, seed) in shape()) {
        let sys = random_system(n, m, k, d, seed).unwrap();
        prop_assert!(validate_system(&sys).is_ok());
    }

    #[test]
    fn generated_systems_validate_at_max_degree(n in 1usize..40, seed in any::<u64>()) {
        let sys = random_system(n, 3, n.div_ceil(2), 255, seed).unwrap();
        prop_assert!(validate_system(&sys).is_ok());
    }

    #[test]
    fn text_round_trip_is_exact((n, m, k, d, seed) in shape()) {
        let sys = random_system(n, m, k, d, seed).unwrap();
        let back = parse_system(&format_system(&sys)).unwrap();
        for (a, b) in sys.terms().iter().zip(back.terms()) {
            prop_assert_eq!(a.coefficient.re.to_bits(), b.coefficient.re.to_bits());
            prop_assert_eq!(a.coefficient.im.to_bits(), b.coefficient.im.to_bits());
            prop_assert_eq!(&a.support, &b.support);
        }
        prop_assert_eq!(back, sys);
    }

    #[test]
    fn byte_arrays_decode_to_supports((n, m, k, d, seed) in shape()) {
        let sys = random_system(n, m, k, d, seed).unwrap();
        let layout = build_layout(&sys).unwrap();
        for (s, term) in sys.terms().iter().enumerate() {
            prop_assert_eq!(&layout.support(s), &term.support);
        }
    }

    #[test]
    fn derivative_coefficients_are_prescaled((n, m, k, d, seed) in shape()) {
        let sys = random_system(n, m, k, d, seed).unwrap();
        let layout = build_layout(&sys).unwrap();
        for (s, term) in sys.terms().iter().enumerate() {
            for (j, &a) in term.support.exponents().iter().enumerate() {
                let expected = ComplexValue::new(term.coefficient.re * a as f64, term.coefficient.im * a as f64);
                prop_assert_eq!(layout.coeff(j, s), expected);
            }
            prop_assert_eq!(layout.coeff(k, s), term.coefficient);
        }
    }

    #[test]
    fn mons_slots_partition_complement_of_mask((n, m, k, d, seed) in shape()) {
        let sys = random_system(n, m, k, d, seed).unwrap();
        let layout = build_layout(&sys).unwrap();
        let mut images = HashSet::new();
        for (s, term) in sys.terms().iter().enumerate() {
            prop_assert!(images.insert(mons_slot(s, TermKind::Value, n, m).unwrap()));
            for &i in term.support.positions() {
                prop_assert!(images.insert(mons_slot(s, TermKind::Derivative(i), n, m).unwrap()));
            }
        }
        let mask: HashSet<usize> = zero_mask(&layout).into_iter().collect();
        prop_assert_eq!(mask.len(), zero_mask_len(n, m, k));
        prop_assert!(images.is_disjoint(&mask));
        prop_assert_eq!(images.len() + mask.len(), (n * n + n) * m);
    }

    #[test]
    fn stage_two_writes_partition_unmasked_slots((n, m, k, d, seed) in shape()) {
        let sys = random_system(n, m, k, d, seed).unwrap();
        let layout = build_layout(&sys).unwrap();
        let point = EvaluationPoint::random(n, seed ^ 1);
        let powers = stage1_powers(&point, d, &mut ());
        let mut ws = ThreadWorkspace::new(k);
        let mut written = vec![0u32; (n * n + n) * m];
        for s in 0..n * m {
            let f = stage1_common_factor(&layout, s, &powers, &mut ());
            stage2_term(s, &layout, point.coords(), f, &mut ws, &mut (), |slot, _| written[slot] += 1);
        }
        let mask: HashSet<usize> = zero_mask(&layout).into_iter().collect();
        for (slot, &count) in written.iter().enumerate() {
            prop_assert_eq!(count, u32::from(!mask.contains(&slot)), "slot {}", slot);
        }
    }

    #[test]
    fn pipeline_matches_reference((n, m, k, d, seed) in shape(), workers in 1usize..4, block in 1usize..40) {
        let sys = random_system(n, m, k, d, seed).unwrap();
        let mut ctx = EvaluationContext::new(&sys, GridConfig::new(block, workers).unwrap()).unwrap();
        let point = EvaluationPoint::random(n, seed.wrapping_add(17));
        let result = ctx.evaluate(&point).unwrap();
        let report = compare(&result, &sys, &point, 1e-10).unwrap();
        prop_assert!(report.pass, "{}", report);
        prop_assert!(ctx.mons().masked_slots_hold_zero());
    }
}

#[test]
fn jacobian_sparsity_is_exact() {
    for seed in 0..10 {
        let sys = random_system(12, 3, 2, 4, seed).unwrap();
        let mut ctx = EvaluationContext::new(&sys, GridConfig::new(32, 2).unwrap()).unwrap();
        let r = ctx.evaluate(&EvaluationPoint::random(12, seed)).unwrap();
        for p in 0..12 {
            for i in 0..12 {
                let present = sys.polynomial(p).iter().any(|t| t.support.exponent_of(i) > 0);
                let e = r.jacobian_entry(p, i);
                if present {
                    assert!(e.norm() > 0.0);
                } else {
                    assert_eq!((e.re.to_bits(), e.im.to_bits()), (0, 0), "({p}, {i})");
                }
            }
        }
    }
}

#[test]
fn table_one_row_matches_reference() {
    let sys = random_system(32, 32, 9, 2, 7).unwrap();
    let mut ctx = EvaluationContext::new(&sys, GridConfig::new(32, 2).unwrap()).unwrap();
    for seed in 0..5 {
        let point = EvaluationPoint::random(32, seed);
        let r = ctx.evaluate(&point).unwrap();
        let report = compare(&r, &sys, &point, 1e-10).unwrap();
        assert!(report.pass, "{report}");
    }
}

#[test]
fn plain_product_through_pipeline() {
    // f_p = x_1 x_2 x_3 for all p, at (2, 3, 5)
    let text = "3 1 3 1\n1 0 1 1 2 1 3 1\n1 0 1 1 2 1 3 1\n1 0 1 1 2 1 3 1\n";
    let sys = parse_system(text).unwrap();
    let mut ctx = EvaluationContext::new(&sys, GridConfig::new(2, 1).unwrap()).unwrap();
    let pt = EvaluationPoint::new(vec![
        ComplexValue::new(2.0, 0.0),
        ComplexValue::new(3.0, 0.0),
        ComplexValue::new(5.0, 0.0),
    ])
    .unwrap();
    let r = ctx.evaluate(&pt).unwrap();
    for p in 0..3 {
        assert_eq!(r.values()[p], ComplexValue::new(30.0, 0.0));
        assert_eq!(
            r.jacobian_row(p),
            &[
                ComplexValue::new(15.0, 0.0),
                ComplexValue::new(10.0, 0.0),
                ComplexValue::new(6.0, 0.0)
            ]
        );
    }
}

#[test]
fn reference_linearity() {
    use polyjac::{naive_evaluate, PolynomialSystem, Term};
    let a = random_system(6, 5, 3, 4, 1).unwrap();
    let b_terms: Vec<Term> = a
        .terms()
        .iter()
        .enumerate()
        .map(|(i, t)| Term {
            coefficient: ComplexValue::new(0.5 - i as f64 * 0.01, 0.25),
            support: t.support.clone(),
        })
        .collect();
    let sum_terms: Vec<Term> = a
        .terms()
        .iter()
        .zip(&b_terms)
        .map(|(x, y)| Term {
            coefficient: x.coefficient + y.coefficient,
            support: x.support.clone(),
        })
        .collect();
    let b = PolynomialSystem::new_validated(6, 5, 3, 4, b_terms).unwrap();
    let s = PolynomialSystem::new_validated(6, 5, 3, 4, sum_terms).unwrap();
    let x = EvaluationPoint::random(6, 3);
    let (va, vb, vs) = (naive_evaluate(&a, &x), naive_evaluate(&b, &x), naive_evaluate(&s, &x));
    for p in 0..6 {
        assert!(relative_error(va[p] + vb[p], vs[p]) <= 1e-12);
    }
}

#[test]
fn reference_homogeneity() {
    use polyjac::{naive_evaluate, MonomialSupport, PolynomialSystem, Term};
    // 1 * x_1^3 x_2^2 x_4^5 in every row
    let term = Term {
        coefficient: ComplexValue::new(1.0, 0.0),
        support: MonomialSupport::new(vec![0, 1, 3], vec![3, 2, 5]),
    };
    let sys = PolynomialSystem::new_validated(4, 1, 3, 5, vec![term; 4]).unwrap();
    let base = [2.0, 3.0, 7.0, 1.0];
    let value = |coords: [f64; 4]| {
        let pt = EvaluationPoint::new(coords.iter().map(|&v| ComplexValue::new(v, 0.0)).collect()).unwrap();
        naive_evaluate(&sys, &pt)[0]
    };
    let f0 = value(base);
    for (i, a) in [(0usize, 3i32), (1, 2), (2, 0), (3, 5)] {
        let mut scaled = base;
        scaled[i] *= 2.0;
        assert_eq!(value(scaled), f0 * 2f64.powi(a), "variable {}", i + 1);
    }
}
