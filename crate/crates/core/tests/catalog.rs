use fifthflow_core::calculus::euler;
use fifthflow_core::catalog::{self, Expected, ThirdOrderKind};
use fifthflow_core::hamiltonian::flow_of;
use fifthflow_core::integrability::{check_conditions, commutator, CheckOptions};
use fifthflow_core::{parse, parse_with, Error, Expr, Q};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn p(s: &str) -> Expr {
    parse(s).unwrap()
}

fn pw(s: &str, params: &[&str]) -> Expr {
    let ps: Vec<String> = params.iter().map(|s| s.to_string()).collect();
    parse_with(s, &ps).unwrap()
}

fn nonzero(rng: &mut ChaCha8Rng) -> Q {
    let n = rng.gen_range(1..=5) * if rng.gen_bool(0.5) { 1 } else { -1 };
    Q::new(n, rng.gen_range(1..=3))
}

fn draw(rng: &mut ChaCha8Rng, slots: &[String]) -> Vec<(String, Q)> {
    slots.iter().map(|s| (s.clone(), nonzero(rng))).collect()
}

#[test]
fn every_entry_parses() {
    let specs = catalog::specs();
    assert!(specs.len() >= 30);
    for s in &specs {
        let t = catalog::template(&s.id).unwrap();
        assert_eq!(t.free, s.slots, "{}", s.id);
        let names: Vec<String> = match &t.body {
            catalog::Body::Hamiltonian(h) => h.h.params(),
            catalog::Body::Flow(f) => f.params(),
        }
        .into_iter()
        .map(|v| v.to_string())
        .collect();
        for n in &names {
            assert!(s.slots.contains(n), "{}: undeclared {n}", s.id);
        }
        if let Some(pair) = &s.pairs_with {
            assert!(catalog::spec(pair).is_ok(), "{}", s.id);
        }
    }
}

#[test]
fn lookup_errors() {
    assert!(matches!(
        catalog::get("nope", &[]),
        Err(Error::UnknownEntry(_))
    ));
    assert!(matches!(catalog::get("eq7", &[]), Err(Error::UnboundSlot(s)) if s == "k"));
    let b = vec![
        ("c3".to_string(), Q::from_int(1)),
        ("c".to_string(), Q::from_int(1)),
    ];
    let e = catalog::get("neg-ninth", &b).unwrap();
    assert_eq!(e.flow().unwrap().rhs, p("D1(u4 + 4*u^3 + u2)"));
    assert_eq!(
        e.expected(),
        Expected::FailBy {
            n: 7,
            unless_zero: Some("c3".into())
        }
    );
    assert!(catalog::get("kdv", &[("k".into(), Q::from_int(1))]).is_err());
}

#[test]
fn printed_entries() {
    let e = catalog::get("eq7", &[("k".into(), Q::from_int(0))]).unwrap();
    assert_eq!(
        e.hamiltonian().unwrap().h,
        p("(u2 + 5*u^2*u1 + 2*u^5)^(1/3)")
    );
    let e = catalog::get("kdv5", &[]).unwrap();
    assert_eq!(
        e.hamiltonian().unwrap().h,
        p("1/2*u2^2 - 5*u*u1^2 + 5/2*u^4")
    );
    let t = catalog::template("mkdv5").unwrap();
    let f = t.flow().unwrap();
    assert_eq!(
        f.rhs,
        pw(
            "D1(u4 - 10*u*(u*u2 + u1^2) + 6*u^5 + c*(2*u^3 - u2))",
            &["c"]
        )
    );
}

#[test]
fn b2a_family() {
    let zero = Expr::zero();
    let h = catalog::family_b2a(&zero, &Expr::frac(3, 10)).unwrap();
    assert_eq!(h.h, p("1/2*u2^2*u1^(-5/2) + u1^(1/2)"));

    let c0 = Expr::param("c0").unwrap();
    let h = catalog::family_b2a(&p("u"), &c0).unwrap();
    let by_hand = pw(
        "1/2*u2^2*(u1 + u)^(-5/2) + 10/3*c0*(u1 + u)^(1/2) - 1/2*u^2*(u1 + u)^(-5/2)
         + 5/3*u*(u1 + u)^(-3/2) + 5/6*(u1 + u)^(-1/2)",
        &["c0"],
    );
    assert_eq!(h.h, by_hand);

    let h = catalog::family_b2a(&p("u^4"), &c0).unwrap();
    let by_hand = pw(
        "1/2*u2^2*(u1 + u^4)^(-5/2) + 10/3*(12*u^2 + c0)*(u1 + u^4)^(1/2) - 8*u^14*(u1 + u^4)^(-5/2)
         + 104/3*u^10*(u1 + u^4)^(-3/2) - 200/3*u^6*(u1 + u^4)^(-1/2)",
        &["c0"],
    );
    assert_eq!(h.h, by_hand);

    assert!(matches!(
        catalog::family_b2a(&p("u^5"), &c0),
        Err(Error::Precondition(_))
    ));
    assert!(catalog::family_b2a(&p("x*u"), &c0).is_err());
}

#[test]
fn b2a_pair_at_q_equals_u() {
    let q = p("u");
    let h = catalog::family_b2a(&q, &Expr::frac(7, 3)).unwrap();
    let f = flow_of(&h).unwrap();
    let g = catalog::b2a_symmetry(&q).unwrap();
    assert_eq!(
        g,
        p("D1(u2*(u1 + u)^(-3/2) + 3*(u1 + u)^(-1/2) - u*(u1 + u)^(-3/2))")
    );
    assert!(commutator(&f.rhs, &g).unwrap().is_zero());
}

#[test]
fn b12_family() {
    let h = catalog::family_b12(&Expr::int(3)).unwrap();
    let t = catalog::get(
        "b12_h2",
        &[0, 1, 2, 3, 4].map(|i| (format!("p{i}"), Q::from_int(if i == 0 { 3 } else { 0 }))),
    )
    .unwrap();
    assert_eq!(&h, t.hamiltonian().unwrap());
    assert!(!h.h.depends_on(fifthflow_core::var::Var::X));

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..3 {
        let c: Vec<Q> = (0..5).map(|_| nonzero(&mut rng)).collect();
        let mut s2 = Expr::zero();
        for (i, ci) in c.iter().enumerate() {
            s2 = s2.add(&Expr::x().pow(i as i32).unwrap().scale(ci));
        }
        let h = catalog::family_b12(&s2).unwrap();
        let b: Vec<(String, Q)> = c
            .iter()
            .enumerate()
            .map(|(i, v)| (format!("p{i}"), v.clone()))
            .collect();
        assert_eq!(
            &h,
            catalog::get("b12_h2", &b).unwrap().hamiltonian().unwrap()
        );
        let g = catalog::get("b12_h2_sym", &b).unwrap().flow().unwrap();
        assert!(commutator(&flow_of(&h).unwrap().rhs, &g.rhs)
            .unwrap()
            .is_zero());
    }
    assert!(catalog::family_b12(&p("x^5")).is_err());
    assert!(catalog::family_b12(&p("u")).is_err());
}

#[test]
fn b13_family() {
    let z = Q::from_int(0);
    let one = Q::from_int(1);
    let h = catalog::family_b13(&z, &z, &z, &one).unwrap();
    assert_eq!(
        h.h,
        p("u2^2/(2*(u^2 + 1)^5) - 5/6*u1^4*(8*u^2 - 1)/(u^2 + 1)^7")
    );
    assert!(matches!(
        catalog::family_b13(&one, &one, &one, &z),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn third_order_flows() {
    let kdv = catalog::third_order_flow(ThirdOrderKind::Rational {
        p: p("u^3"),
        q: p("1"),
    })
    .unwrap();
    assert_eq!(kdv.rhs, p("D1(u2 + 3*u^2)"));
    let flows = catalog::third_order_flows().unwrap();
    assert_eq!(flows[0].1.rhs, kdv.rhs);
    assert_eq!(flows[1].1.rhs, p("D1(u2 - 2*u^3)"));
    for (id, f) in &flows {
        assert_eq!(f.order, 3, "{id}");
    }
    let sq = &flows.iter().find(|(id, _)| id == "square-root").unwrap().1;
    assert_eq!(
        sq.rhs,
        euler(&p("(u1 + u^3 + u)^(1/2)"))
            .unwrap()
            .total_x()
            .unwrap()
    );
}

#[test]
fn symmetry_pairings_commute() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for s in catalog::specs() {
        let Some(pair) = &s.pairs_with else { continue };
        let b = draw(&mut rng, &s.slots);
        let f = catalog::get(&s.id, &b).unwrap().flow().unwrap();
        let ps = catalog::spec(pair).unwrap();
        let pb: Vec<(String, Q)> = b
            .iter()
            .filter(|(k, _)| ps.slots.contains(k))
            .cloned()
            .collect();
        let g = catalog::get(pair, &pb).unwrap().flow().unwrap();
        assert!(
            commutator(&f.rhs, &g.rhs).unwrap().is_zero(),
            "{} / {pair}",
            s.id
        );
    }
    // the mKdV5 c-term alone is the mKdV flow
    let t = catalog::template("mkdv5").unwrap().flow().unwrap();
    let g = catalog::get("mkdv", &[]).unwrap().flow().unwrap();
    assert!(commutator(&t.rhs, &g.rhs).unwrap().is_zero());
}

#[test]
fn non_commuting_pair_is_detected() {
    let f = catalog::get("eq9", &[]).unwrap().flow().unwrap();
    let g = catalog::get("kdv", &[]).unwrap().flow().unwrap();
    assert!(!commutator(&f.rhs, &g.rhs).unwrap().is_zero());
}

#[test]
fn catalog_audit_at_random_bindings() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let opts = CheckOptions::default();
    let mut found = Vec::new();
    for s in catalog::specs() {
        if s.expected == Expected::Family {
            continue;
        }
        let draws = if s.slots.is_empty() { 1 } else { 3 };
        for _ in 0..draws {
            let b = draw(&mut rng, &s.slots);
            let e = catalog::get(&s.id, &b).unwrap();
            if let Some(d) = catalog::audit(&e, 1, &opts).unwrap() {
                found.push(d);
            }
        }
    }
    assert_eq!(catalog::quarantine_report(&found), "quarantine: empty\n");
}

#[test]
fn conditional_negatives() {
    let opts = CheckOptions::default();
    let zero = |c: &str, other: &[&str]| {
        let mut b = vec![(c.to_string(), Q::from_int(0))];
        b.extend(other.iter().map(|k| (k.to_string(), Q::from_int(2))));
        b
    };
    let e = catalog::get("b13a_h3", &zero("c2", &["c1"])).unwrap();
    assert_eq!(e.expected(), Expected::Integrable);
    let rep = check_conditions("b13a_h3", &e.flow().unwrap(), 1, &opts).unwrap();
    assert!(rep.all_pass());

    let b = vec![
        ("c1".to_string(), Q::from_int(2)),
        ("c2".to_string(), Q::new(-1, 3)),
    ];
    let e = catalog::get("b13a_h3", &b).unwrap();
    assert!(catalog::audit(&e, 9, &opts).unwrap().is_none());
    let rep = check_conditions("b13a_h3", &e.flow().unwrap(), 9, &opts).unwrap();
    assert!(rep.first_failure.is_some_and(|n| n <= 9));
}
