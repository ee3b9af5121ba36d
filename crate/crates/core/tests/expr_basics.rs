use fifthflow_core::expr::{random_point, Expr};
use fifthflow_core::var::Var;
use fifthflow_core::{parse, parse_with, Error, Q};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn p(s: &str) -> Expr {
    parse(s).unwrap()
}

#[test]
fn collects_like_terms() {
    assert_eq!(p("u1+u1").to_string(), "2*u1");
    assert_eq!(p("ux + ux"), p("2*u1"));
}

#[test]
fn defining_relation_reduces() {
    let e = p("((u2 + u)^(1/3))^3");
    assert_eq!(e, p("u2 + u"));
    assert!(e.radical().is_none());
}

#[test]
fn cancels_common_factors() {
    assert_eq!(p("(u^2 - 1)/(u - 1)"), p("u + 1"));
    assert_eq!(p("(u1*u2 + u*u2)/(u1 + u)"), p("u2"));
}

#[test]
fn evaluates() {
    let mut pt: fifthflow_core::expr::Point = std::array::from_fn(|_| None);
    pt[Var::jet(1).idx()] = Some(Q::from_int(3));
    assert_eq!(p("u1^2").eval(&pt).unwrap(), Q::from_int(9));
    pt[Var::jet(0).idx()] = Some(Q::from_int(2));
    pt[Var::jet(2).idx()] = Some(Q::from_int(4));
    assert_eq!(p("(u2 + u)/u").eval(&pt).unwrap(), Q::from_int(3));
    assert_eq!(Expr::zero().eval(&pt).unwrap(), Q::zero());
    pt[Var::jet(0).idx()] = Some(Q::zero());
    assert_eq!(p("1/u").eval(&pt), Err(Error::EvalDenominatorZero));
}

#[test]
fn kdv5_hamiltonian_prints_in_order() {
    let h = p("1/2*u2^2 - 5*u*u1^2 + 5/2*u^4");
    assert_eq!(h.to_string(), "1/2*u2^2 - 5*u*u1^2 + 5/2*u^4");
}

#[test]
fn radical_roundtrip() {
    let e = p("(u2 + 5*u^2*u1 + 2*u^5)^(1/3)");
    assert_eq!(e.radical().unwrap().m, 3);
    let printed = e.to_string();
    assert_eq!(parse(&printed).unwrap(), e);
    let q = p("u1/(u2 + 5*u^2*u1 + 2*u^5)^(2/3) + u^3");
    assert_eq!(parse(&q.to_string()).unwrap(), q);
}

#[test]
fn radical_division_rationalizes() {
    let r = p("(u2 + u)^(1/3)");
    let one = r.try_div(&r).unwrap();
    assert!(one.is_one());
    let s = p("(u2 + u)^(1/3) + u1");
    let back = Expr::one().try_div(&s).unwrap().mul(&s);
    assert!(back.is_one());
}

#[test]
fn radical_canonical_form_pulls_powers() {
    assert_eq!(p("(8*u^3*u2)^(1/3)"), p("2*u*u2^(1/3)"));
    assert_eq!(p("(u^2)^(1/2)"), p("u"));
    assert_eq!(p("(1/4*u1)^(1/2)"), p("1/2*u1^(1/2)"));
}

#[test]
fn second_radical_is_rejected() {
    assert!(matches!(
        parse("u1^(1/2) + u2^(1/3)"),
        Err(Error::SecondRadical(_))
    ));
}

#[test]
fn syntax_errors_carry_positions() {
    match parse("u1 + * u") {
        Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 5),
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        parse("u + k"),
        Err(Error::UnknownIdentifier { pos: 4, .. })
    ));
    assert_eq!(parse("1/(u-u)"), Err(Error::DivisionByZero));
}

#[test]
fn params_roundtrip() {
    let names = vec!["k".to_string(), "c0".to_string()];
    let e = parse_with("(u2 + (5*u^2 + 9*k)*u1 + c0)/(u^2 + k)", &names).unwrap();
    assert_eq!(parse_with(&e.to_string(), &names).unwrap(), e);
}

#[test]
fn total_x_of_radical() {
    let r = p("(u2 + u)^(1/3)");
    let d = r.total_x().unwrap();
    assert_eq!(d, p("(u3 + u1)*(u2 + u)^(1/3)/(3*(u2 + u))"));
}

#[test]
fn partial_of_radical_product() {
    // d/du of u^(1/2) * u1 = u1 / (2 u^(1/2))
    let e = p("u^(1/2)*u1");
    assert_eq!(e.jet_partial(0).unwrap(), p("u1/(2*u^(1/2))"));
}

#[test]
fn eval_respects_radical_relation() {
    let e = p("(u2 + u)^(1/2) * u1");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pt = random_point(&mut rng, e.radical().map(|r| r.as_ref())).unwrap();
    let r = pt[Var::R.idx()].clone().unwrap();
    let u1 = pt[Var::jet(1).idx()].clone().unwrap();
    assert_eq!(e.eval(&pt).unwrap(), &r * &u1);
    let mut bad = pt.clone();
    bad[Var::R.idx()] = Some(&r + &Q::one());
    assert_eq!(e.eval(&bad), Err(Error::InconsistentRadical));
}
