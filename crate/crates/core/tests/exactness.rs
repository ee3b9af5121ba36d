use fifthflow_core::calculus::euler;
use fifthflow_core::exactness::{extract_constraints, integrate, is_exact, reduce, Verdict};
use fifthflow_core::var::{self, Var};
use fifthflow_core::{parse, parse_with, Expr};

fn p(s: &str) -> Expr {
    parse(s).unwrap()
}

#[test]
fn u1_u2_is_exact() {
    let r = is_exact(&p("u1*u2")).unwrap();
    assert_eq!(r.verdict, Verdict::Exact);
    assert_eq!(r.flux, p("u1^2/2"));
}

#[test]
fn u1_squared_is_not_exact() {
    let r = is_exact(&p("u1^2")).unwrap();
    assert_eq!(r.verdict, Verdict::NotExact);
    assert_eq!(r.failing_order, 1);
    assert!(!euler(&r.residue).unwrap().is_zero());
}

#[test]
fn parametric_obstruction() {
    let params = vec!["c".to_string()];
    let s = parse_with("c*u1^2 + u1*u2", &params).unwrap();
    let ob = extract_constraints(&s, &[var::param("c").unwrap()]).unwrap();
    assert_eq!(ob.constraint_set.len(), 1);
    assert_eq!(ob.constraint_set[0].to_string(), "c");
}

#[test]
fn rational_and_radical_derivatives_round_trip() {
    for g in [
        "u2/u1",
        "u3*u^2/(1 + u1^2)",
        "(u2)^(1/5)",
        "u1*(u^2 + u2)^(-2/5)",
        "x*u1^3/u^2",
        "(u2 + u)^(1/3)*u1",
        "u2^2/(u1 + u)^3",
    ] {
        let g = p(g);
        let s = g.total_x().unwrap();
        let r = is_exact(&s).unwrap();
        assert!(r.is_exact(), "{g}");
        assert_eq!(r.flux.total_x().unwrap(), s, "{g}");
        let gauge = r.flux.sub(&g);
        assert!(gauge.constant_value().is_some(), "{g}: {gauge}");
    }
}

#[test]
fn jet_free_remainders() {
    assert!(is_exact(&p("x^3 + 2")).unwrap().is_exact());
    let r = is_exact(&p("u3 + x")).unwrap();
    assert!(r.is_exact());
    assert_eq!(r.flux, p("u2 + x^2/2"));
}

#[test]
fn logarithmic_top_is_unsupported() {
    assert!(is_exact(&p("u2/u1")).is_err());
}

#[test]
fn reduce_lowers_order() {
    let (red, flux) = reduce(&p("u1^2 + u*u4")).unwrap();
    assert!(red.max_jet().unwrap() <= 2);
    assert_eq!(red.add(&flux.total_x().unwrap()), p("u1^2 + u*u4"));
}

#[test]
fn hermite_handles_repeated_factors() {
    let a = p("(2*u + 1)/(u^2 + u + 1)^2");
    let q = integrate(&a, Var::jet(0)).unwrap().unwrap();
    assert_eq!(q.partial(Var::jet(0)).unwrap(), a);
    let a = p("1/(u^2 + 1)");
    assert!(integrate(&a, Var::jet(0)).unwrap().is_none());
}
