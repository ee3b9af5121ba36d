use fifthflow_core::calculus::{dt_along, euler, Flow};
use fifthflow_core::catalog;
use fifthflow_core::densities::{DensityChain, Status};
use fifthflow_core::expr::Point;
use fifthflow_core::hamiltonian::{flow_of, Hamiltonian};
use fifthflow_core::integrability::{
    check_conditions, check_conditions_parametric, commutator, flux_of_density, is_symmetry,
    CheckOptions,
};
use fifthflow_core::var::{self, Var, NVARS};
use fifthflow_core::{parse, parse_with, Expr, Q};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn p(s: &str) -> Expr {
    parse(s).unwrap()
}

fn ham_flow(h: &str) -> Flow {
    flow_of(&Hamiltonian::new(p(h)).unwrap()).unwrap()
}

fn entry_flow(id: &str, b: &[(&str, i64)]) -> Flow {
    let b: Vec<(String, Q)> = b
        .iter()
        .map(|(k, v)| (k.to_string(), Q::from_int(*v)))
        .collect();
    catalog::get(id, &b).unwrap().flow().unwrap()
}

fn random_jet_point(rng: &mut ChaCha8Rng) -> Point {
    let mut pt: Point = std::array::from_fn(|_| None);
    for (i, slot) in pt.iter_mut().enumerate().take(NVARS) {
        if i != Var::R.idx() {
            *slot = Some(Q::new(rng.gen_range(-20..=20), rng.gen_range(1..=7)));
        }
    }
    pt
}

#[test]
fn commutator_examples() {
    let kdv = p("D1(u2 + 3*u^2)");
    assert!(is_symmetry(&kdv, &kdv).unwrap().0);
    let kdv5 = entry_flow("kdv5", &[]);
    assert!(commutator(&kdv, &kdv5.rhs).unwrap().is_zero());
    let mkdv = p("D1(u2 - 2*u^3)");
    let mkdv5 = entry_flow("mkdv5", &[("c", 3)]);
    let (ok, res) = is_symmetry(&mkdv, &mkdv5.rhs).unwrap();
    assert!(ok, "{res}");
    let (ok, res) = is_symmetry(&kdv, &mkdv5.rhs).unwrap();
    assert!(!ok && !res.is_zero());
}

#[test]
fn flux_examples() {
    let f = ham_flow("1/2*u2^2 - 5*u*u1^2 + 5/2*u^4");
    assert!(flux_of_density(&f, &Expr::one())
        .unwrap()
        .constant_value()
        .is_some());
    let g = p("u4 + 10*u*u2 + 5*u1^2 + 10*u^3");
    let f = Flow::new(g.total_x().unwrap()).unwrap();
    let theta = flux_of_density(&f, &p("u")).unwrap();
    assert!(theta.sub(&g).constant_value().is_some());

    // the reciprocal-step flux of the rational entry
    let f = entry_flow("eq10", &[("k", 1)]);
    let chain = DensityChain::new(&f).unwrap();
    let rho = chain.rho(-1).unwrap().clone();
    let theta = flux_of_density(&chain.flow, &rho).unwrap();
    assert_eq!(
        theta.total_x().unwrap(),
        dt_along(&chain.flow.rhs, &rho).unwrap()
    );
    let f = Flow::new(p("u5 + u^2")).unwrap();
    assert!(flux_of_density(&f, &p("u")).is_err());
}

#[test]
fn linear_flow_passes_trivially() {
    let f = Flow::new(p("u5")).unwrap();
    let rep = check_conditions("u5", &f, 5, &CheckOptions::default()).unwrap();
    assert!(rep.all_pass());
}

#[test]
fn stored_fluxes_satisfy_conservation() {
    for (id, f) in [
        ("kdv5", entry_flow("kdv5", &[])),
        ("eq9", entry_flow("eq9", &[])),
        ("eq7", entry_flow("eq7", &[("k", 0)])),
        ("h2", entry_flow("h2", &[])),
    ] {
        let mut chain = DensityChain::new(&f).unwrap();
        for n in -1..=1 {
            chain.ensure(n).unwrap();
            assert_eq!(chain.check(n).unwrap(), Status::Pass, "{id} n={n}");
            let e = chain.entry(n).unwrap();
            let lhs = e.theta.as_ref().unwrap().total_x().unwrap();
            let rhs = dt_along(&chain.flow.rhs, &e.rho).unwrap();
            assert!(lhs.sub(&rhs).is_zero(), "{id} n={n}");
        }
    }
}

#[test]
fn gauge_shift_keeps_verdicts() {
    for (id, f) in [
        ("kdv5", entry_flow("kdv5", &[])),
        ("mkdv5", entry_flow("mkdv5", &[("c", 1)])),
        ("neg_ninth", entry_flow("neg_ninth", &[("c3", 1), ("c", 1)])),
    ] {
        let mut plain = DensityChain::new(&f).unwrap();
        let mut shifted = DensityChain::new(&f).unwrap();
        plain.check(-1).unwrap();
        shifted.check(-1).unwrap();
        let theta = shifted.entry(-1).unwrap().theta.clone().unwrap();
        shifted.set_theta(-1, theta.add(&Expr::int(7))).unwrap();
        for n in 0..=3 {
            for c in [&mut plain, &mut shifted] {
                c.ensure(n).unwrap();
                c.check(n).unwrap();
            }
        }
        let (a, b) = (plain.entry(3).unwrap(), shifted.entry(3).unwrap());
        assert_eq!(a.status, b.status, "{id}");
        let diff = a.rho.sub(&b.rho);
        assert!(!diff.is_zero(), "{id}: shift had no effect");
        assert!(
            fifthflow_core::exactness::is_exact(&diff)
                .unwrap()
                .is_exact(),
            "{id}"
        );
    }
}

#[test]
fn constraint_roots_annihilate_residues() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let opts = CheckOptions::default();
    // (id, parameters, roots: parameter -> Some(value) or None for free)
    let cases: [(&str, &[&str], &[Option<i64>]); 2] = [
        (
            "b11",
            &["c0", "c1", "a2", "a3"],
            &[Some(0), Some(0), None, None],
        ),
        ("b13", &["c1", "z"], &[Some(0), Some(0)]),
    ];
    for (id, names, roots) in cases {
        let t = catalog::template(id).unwrap();
        let params: Vec<Var> = names.iter().map(|n| var::param(n).unwrap()).collect();
        let rep = check_conditions_parametric(id, &t.flow().unwrap(), &params, 3, &opts).unwrap();
        assert!(!rep.constraints.is_empty(), "{id}");
        for _ in 0..3 {
            let vals: Vec<(Var, Q)> = params
                .iter()
                .zip(roots)
                .map(|(v, r)| {
                    let q = match r {
                        Some(k) => Q::from_int(*k),
                        None => Q::new(rng.gen_range(-9..=9), rng.gen_range(1..=4)),
                    };
                    (*v, q)
                })
                .collect();
            for (n, ob) in &rep.constraints {
                for c in &ob.constraint_set {
                    let at = Expr::from_poly(c.clone()).bind(&vals).unwrap();
                    assert!(at.is_zero(), "{id} n={n}: {c}");
                }
                let r = ob.residue.bind(&vals).unwrap();
                for _ in 0..4 {
                    let pt = random_jet_point(&mut rng);
                    match r.eval(&pt) {
                        Ok(v) => assert!(v.is_zero(), "{id} n={n}"),
                        Err(fifthflow_core::Error::EvalDenominatorZero) => {}
                        Err(e) => panic!("{id}: {e}"),
                    }
                }
            }
        }
    }
}

#[test]
fn parametric_mkdv5_has_no_constraints() {
    let opts = CheckOptions::default();
    let ps = vec!["c".to_string()];
    let h = parse_with("1/2*u2^2 + 5*u^2*u1^2 + u^6 + 1/2*c*(u1^2 + u^4)", &ps).unwrap();
    let f = flow_of(&Hamiltonian::new(h).unwrap()).unwrap();
    let rep =
        check_conditions_parametric("mkdv5", &f, &[var::param("c").unwrap()], 3, &opts).unwrap();
    assert!(rep.all_pass());
    assert!(rep.constraints.is_empty());
}

#[test]
fn seventh_order_symmetry_of_the_cube_root_entry() {
    let h5 = entry_flow(
        "eq8",
        &[("c0", 0), ("c1", 0), ("c2", 0), ("c3", 0), ("c4", 0)],
    );
    let g = catalog::seventh_order_symmetry().unwrap();
    assert_eq!(g, euler(&p("u3^2*u2^(-7/3)")).unwrap().total_x().unwrap());
    assert!(commutator(&h5.rhs, &g).unwrap().is_zero());
}
