use fifthflow_core::calculus::{euler, Flow};
use fifthflow_core::densities::{rho0_rho1_closed, rho_minus1, DensityChain, Kind, Status};
use fifthflow_core::exactness::is_exact;
use fifthflow_core::{parse, Expr};

fn p(s: &str) -> Expr {
    parse(s).unwrap()
}

fn ham_flow(h: &str) -> Flow {
    Flow::new(euler(&p(h)).unwrap().total_x().unwrap()).unwrap()
}

#[test]
fn linear_flow_closed_forms() {
    let f = Flow::new(p("u5")).unwrap();
    assert_eq!(rho_minus1(&f).unwrap(), Expr::one());
    let (r0, r1) = rho0_rho1_closed(&f).unwrap();
    assert!(r0.is_zero() && r1.is_zero());
    let f = Flow::new(p("u5 + u4")).unwrap();
    assert_eq!(rho0_rho1_closed(&f).unwrap().0, p("-1/5"));
}

#[test]
fn kdv5_rho1() {
    let f = ham_flow("1/2*u2^2 - 5*u*u1^2 + 5/2*u^4");
    let (_, r1) = rho0_rho1_closed(&f).unwrap();
    assert_eq!(r1, p("-2*u"));
}

#[test]
fn rho_minus1_of_rational_hamiltonian() {
    let f = ham_flow("1/2*u2^2/u^5");
    assert_eq!(rho_minus1(&f).unwrap(), p("u"));
}

#[test]
fn restricted_sums_small_totals() {
    let f = ham_flow("1/2*u2^2/u^5");
    let mut c = DensityChain::new(&f).unwrap();
    c.ensure(0).unwrap();
    let r = |n: i32| c.rho(n).unwrap().clone();
    let (a, r0) = (r(-1), r(0));
    assert_eq!(
        c.restricted_sum(&[Kind::Rho, Kind::Rho], -2).unwrap(),
        a.mul(&a)
    );
    assert_eq!(
        c.restricted_sum(&[Kind::Rho, Kind::Rho], -1).unwrap(),
        a.mul(&r0).scale(&2.into())
    );
    assert!(c.restricted_sum(&[Kind::Rho; 3], -4).unwrap().is_zero());
}

#[test]
fn recurrence_matches_closed_forms() {
    for h in [
        "1/2*u2^2 - 5*u*u1^2 + 5/2*u^4",
        "1/2*u2^2/u^5",
        "(u2 + 5*u^2*u1 + 2*u^5)^(1/3)",
    ] {
        let f = ham_flow(h);
        let mut c = DensityChain::new(&f).unwrap();
        c.ensure(1).unwrap();
        let (r0, r1) = c.closed_forms().unwrap();
        assert_eq!(c.rho(0).unwrap(), &r0, "{h}");
        let diff = c.rho(1).unwrap().sub(&r1);
        assert!(is_exact(&diff).unwrap().is_exact(), "{h}");
    }
}

#[test]
fn kdv5_passes_through_three() {
    let f = ham_flow("1/2*u2^2 - 5*u*u1^2 + 5/2*u^4");
    let mut c = DensityChain::new(&f).unwrap();
    for n in -1..=3 {
        c.ensure(n).unwrap();
        assert_eq!(c.check(n).unwrap(), Status::Pass, "n = {n}");
        let e = c.entry(n).unwrap();
        let lhs = e.theta.as_ref().unwrap().total_x().unwrap();
        assert_eq!(lhs, c.flow.dt(&e.rho).unwrap());
    }
}
