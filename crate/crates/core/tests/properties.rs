use std::sync::Arc;

use proptest::prelude::*;
use trajexp::engine::{compute_expansion, evaluate_expansion};
use trajexp::field::{FieldExpansion, FieldKind, Monomial, PolyField, SpatialField};
use trajexp::scalar::{fraction_string, parse_rational};
use trajexp::{build_semigroup, resolvent_solve, PolyVec, Rational};

fn q(p: i64, d: i64) -> Rational {
    Rational::new(p.into(), d.into())
}

fn rational() -> impl Strategy<Value = Rational> {
    (-60i64..=60, 1i64..=12).prop_map(|(p, d)| q(p, d))
}

fn positive() -> impl Strategy<Value = Rational> {
    (1i64..=30, 1i64..=8).prop_map(|(p, d)| q(p, d))
}

fn polyvec(dim: usize) -> impl Strategy<Value = PolyVec<Rational>> {
    prop::collection::vec(prop::collection::vec(rational(), dim), 1..6)
        .prop_map(move |rows| PolyVec::new(dim, rows).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn resolvent_residual_vanishes(gamma in positive(), p in (1usize..=3).prop_flat_map(polyvec)) {
        let sol = resolvent_solve(&gamma, &p).unwrap();
        let residual = sol.derivative().sub(&sol.scale(&gamma)).unwrap().sub(&p).unwrap();
        prop_assert!(residual.is_zero());
        prop_assert!(sol.degree() <= p.degree());
    }

    #[test]
    fn decompositions_sum_to_mu(gens in prop::collection::vec(positive(), 1..=3), n in 1usize..=9) {
        let sg = build_semigroup(&gens, q(1, 1), 10).unwrap();
        let target = sg.mu_rational(n).unwrap();
        let ordered = sg.decompositions(n).unwrap();
        for d in &ordered {
            let sum = d.js.iter().fold(sg.mu_rational(d.k).unwrap(), |acc, &j| acc + sg.mu_rational(j).unwrap());
            prop_assert_eq!(&sum, &target);
        }
        let grouped: u64 = sg.grouped_decompositions(n).unwrap().iter().map(|g| g.multiplicity).sum();
        prop_assert_eq!(grouped as usize, ordered.len());
    }

    #[test]
    fn rational_text_round_trips(r in rational()) {
        prop_assert_eq!(parse_rational(&fraction_string(&r)).unwrap(), r);
    }
}

/// `u = (a + b x) e^{-t}` integrates in closed form:
/// `x(t) = (x0 + a/b) exp(b (1 - e^{-t})) - a/b`.
#[test]
fn affine_field_expansion_sums_to_the_trajectory() {
    let (a, b) = (q(1, 2), q(-3, 4));
    let sg = build_semigroup(&[q(1, 1)], q(1, 1), 16).unwrap();
    let mut fe = FieldExpansion::new(1, FieldKind::Poly, None, sg, vec![q(0, 1)]).unwrap();
    let f: Arc<dyn SpatialField<Rational>> = Arc::new(
        PolyField::new(
            1,
            vec![
                Monomial { exps: vec![0], coeffs: vec![a.clone()] },
                Monomial { exps: vec![1], coeffs: vec![b.clone()] },
            ],
        )
        .unwrap(),
    );
    fe.add_term(1, vec![f]).unwrap();
    let x0 = 0.2f64;
    let (af, bf) = (0.5, -0.75);
    let x_star = (x0 + af / bf) * bf.exp() - af / bf;
    let xs = [trajexp::scalar::rational_from_f64(x_star).unwrap()];
    let te = compute_expansion(&fe, &xs, 14).unwrap();
    for t in [0.5, 1.0, 3.0] {
        let exact = (x0 + af / bf) * (bf * (1.0 - (-t as f64).exp())).exp() - af / bf;
        let approx = evaluate_expansion(&te, t, 14).unwrap()[0];
        assert!((approx - exact).abs() < 1e-9, "t = {t}: {approx} vs {exact}");
    }
}

#[test]
fn expansion_json_is_exact_text() {
    let fe = trajexp::fixtures::closed_form_1d::<Rational>(4).unwrap();
    let te = compute_expansion(&fe, &[q(0, 1)], 3).unwrap();
    let v = te.to_json();
    assert_eq!(v["terms"][2]["zeta"]["coeffs"][0][0], "-1/6");
    assert_eq!(v["terms"][2]["exponent"], "3/1");
    assert_eq!(v["provenance"]["mode"], "exact");
    assert_eq!(v["provenance"]["field_hash"], fe.hash());
}
