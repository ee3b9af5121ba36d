use fifthflow_core::calculus::{dt_along, euler, frechet, Flow};
use fifthflow_core::exactness::{constraints_of, is_exact, Verdict};
use fifthflow_core::groebner;
use fifthflow_core::hamiltonian::{equivalent, Hamiltonian};
use fifthflow_core::integrability::commutator;
use fifthflow_core::var::{self, Var};
use fifthflow_core::{parse, parse_with, Expr, Q};
use proptest::prelude::*;

mod common;
use common::*;

proptest! {
    #![proptest_config(config(1000))]

    #[test]
    fn normal_form_is_unique(a in rational(3), b in rational(3), c in any_expr(3)) {
        prop_assert_eq!(a.add(&b).mul(&c), a.mul(&c).add(&b.mul(&c)));
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(parse(&c.to_string()).unwrap(), c.clone());
        if !b.is_zero() {
            prop_assert_eq!(c.try_mul(&b).unwrap().try_div(&b).unwrap(), c);
        }
    }

    #[test]
    fn zero_test_is_sound(a in any_expr(3), b in rational(3)) {
        prop_assert!(a.sub(&a).is_zero());
        let s = a.add(&b);
        prop_assert_eq!(s.is_zero(), s.probably_zero(11));
        prop_assert_eq!(a.is_zero(), a.probably_zero(5));
    }

    #[test]
    fn radical_closure(e1 in rational(2), e2 in rational(2), r in 0..RADS.len(), j in 1i32..4, k in 1i32..4) {
        let base = p(RADS[r]);
        let m = base.radical().unwrap().m as i32;
        prop_assert!(base.pow(m).unwrap().radical().is_none());
        let a = e1.mul(&base.pow(j).unwrap());
        let b = e2.mul(&base.pow(k).unwrap());
        let prod = a.mul(&b);
        prop_assert_eq!(prod.clone(), e1.mul(&e2).mul(&base.pow(j + k).unwrap()));
        if let Some(rp) = prod.radical() {
            prop_assert_eq!(rp, base.radical().unwrap());
        }
        if !b.is_zero() {
            prop_assert_eq!(a.try_div(&b).unwrap().try_mul(&b).unwrap(), a);
        }
    }

    #[test]
    fn euler_annihilates_total_derivatives(g in any_expr(3)) {
        prop_assert!(euler(&g.total_x().unwrap()).unwrap().is_zero());
    }

    #[test]
    fn frechet_is_linear(f in poly(3, 3), g in rational(2), h in rational(2), a in small_q(), b in small_q()) {
        let f = p(&f);
        let lhs = frechet(&f, &g.scale(&a).add(&h.scale(&b))).unwrap();
        let rhs = frechet(&f, &g).unwrap().scale(&a).add(&frechet(&f, &h).unwrap().scale(&b));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn dt_along_matches_chain_rule(f in flow(), e in any_expr(3)) {
        // Σ ∂e/∂u_i D_x^i F, built term by term
        let mut expect = Expr::zero();
        let mut df = f.clone();
        for i in 0..=3 {
            expect = expect.add(&e.partial(Var::jet(i)).unwrap().mul(&df));
            df = df.total_x().unwrap();
        }
        prop_assert_eq!(dt_along(&f, &e).unwrap(), expect.clone());
        prop_assert_eq!(Flow::new(f).unwrap().dt(&e).unwrap(), expect);
    }

    #[test]
    fn commutator_is_antisymmetric_and_bilinear(f in flow(), g in poly(3, 3), h in poly(3, 3), a in small_q()) {
        let (g, h) = (p(&g), p(&h));
        let fg = commutator(&f, &g).unwrap();
        prop_assert_eq!(commutator(&g, &f).unwrap(), fg.neg());
        let lhs = commutator(&f, &g.scale(&a).add(&h)).unwrap();
        prop_assert_eq!(lhs, fg.scale(&a).add(&commutator(&f, &h).unwrap()));
        prop_assert!(commutator(&f, &f).unwrap().is_zero());
    }

    #[test]
    fn hamiltonian_equivalence_is_an_equivalence(h in poly(2, 3), f in poly(1, 2), k in poly(1, 2), a in small_q(), b in small_q()) {
        let h1 = Hamiltonian::new(p(&h)).unwrap();
        let h2 = Hamiltonian::new(h1.h.add(&p(&f).total_x().unwrap()).add(&Expr::u(0).scale(&a))).unwrap();
        let h3 = Hamiltonian::new(h2.h.add(&p(&k).total_x().unwrap()).add(&Expr::u(0).scale(&b))).unwrap();
        prop_assert_eq!(equivalent(&h1, &h1).unwrap(), Some(Q::zero()));
        prop_assert_eq!(equivalent(&h1, &h2).unwrap(), Some(a.clone()));
        prop_assert_eq!(equivalent(&h2, &h1).unwrap(), Some(-a.clone()));
        prop_assert_eq!(equivalent(&h1, &h3).unwrap(), Some(&a + &b));
    }
}

proptest! {
    #![proptest_config(config(500))]

    #[test]
    fn exactness_round_trips(g in lowerable_expr(5)) {
        let dg = g.total_x().unwrap();
        let r = is_exact(&dg).unwrap();
        prop_assert_eq!(r.verdict, Verdict::Exact);
        prop_assert!(r.flux.sub(&g).constant_value().is_some());
        // adding a constant to the antiderivative changes nothing
        let r7 = is_exact(&g.add(&Expr::int(7)).total_x().unwrap()).unwrap();
        prop_assert_eq!(r7.flux, r.flux);
    }

    #[test]
    fn inexact_verdicts_are_sound(e in rational(3)) {
        let exact_by_euler = euler(&e).unwrap().is_zero();
        match is_exact(&e) {
            Ok(r) => {
                prop_assert_eq!(r.is_exact(), exact_by_euler);
                if r.is_exact() {
                    prop_assert_eq!(r.flux.total_x().unwrap(), e);
                } else {
                    prop_assert!(!euler(&r.residue).unwrap().is_zero());
                }
            }
            // a logarithmic antiderivative is never a total derivative
            Err(fifthflow_core::Error::Unsupported(_)) => prop_assert!(!exact_by_euler),
            Err(err) => prop_assert!(false, "{err}"),
        }
    }
}

fn param_poly() -> impl Strategy<Value = String> {
    prop::collection::vec(
        (
            (-4i64..=4).prop_filter("nonzero", |c| *c != 0),
            0u32..3,
            0u32..3,
        ),
        1..=3,
    )
    .prop_map(|ts| {
        let parts: Vec<String> = ts
            .iter()
            .map(|(c, i, j)| format!("{c}*a^{i}*b^{j}"))
            .collect();
        format!("({})", parts.join(" + "))
    })
}

proptest! {
    #![proptest_config(config(1000))]

    #[test]
    fn constraints_vanish_on_common_zeros(
        coeffs in prop::collection::vec(param_poly(), 1..=3),
        monos in prop::collection::vec(term(3), 3),
    ) {
        // every coefficient carries the factor (a - 1)
        let ps = vec!["a".to_string(), "b".to_string()];
        let mut e = Expr::zero();
        for (c, m) in coeffs.iter().zip(&monos) {
            e = e.add(&parse_with(&format!("(a - 1)*{c}*{m}"), &ps).unwrap());
        }
        let params = [var::param("a").unwrap(), var::param("b").unwrap()];
        let cs = constraints_of(&e, &params).unwrap();
        let g = groebner::basis(&cs);
        let at_one = [(params[0], Q::one())];
        prop_assert!(e.bind(&at_one).unwrap().is_zero());
        for c in &cs {
            prop_assert!(Expr::from_poly(c.clone()).bind(&at_one).unwrap().is_zero());
        }
        if !e.is_zero() {
            prop_assert!(!groebner::is_unit(&g));
            for c in &cs {
                prop_assert!(groebner::contains(&g, c));
            }
        }
    }
}
