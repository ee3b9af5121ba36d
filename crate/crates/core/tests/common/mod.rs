//! Generators shared by the property suite and the acceptance run.
#![allow(dead_code)]

use fifthflow_core::{parse, Expr, Q};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

pub fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(0x5eed_f1f7),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

pub fn p(s: &str) -> Expr {
    parse(s).unwrap()
}

pub const VARS: [&str; 5] = ["x", "u", "u1", "u2", "u3"];

/// `c*x^a*u^b*...` with small exponents.
pub fn term(max_jet: usize) -> impl Strategy<Value = String> {
    let n = max_jet + 2;
    (
        (-6i64..=6).prop_filter("nonzero", |c| *c != 0),
        prop::collection::vec(0u32..3, n),
    )
        .prop_map(move |(c, es)| {
            let mut s = c.to_string();
            for (v, e) in VARS.iter().zip(es) {
                if e > 0 {
                    s.push_str(&format!("*{v}^{e}"));
                }
            }
            s
        })
}

pub fn poly(max_jet: usize, len: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(term(max_jet), 1..=len).prop_map(|ts| format!("({})", ts.join(" + ")))
}

pub const DENS: [&str; 6] = ["1", "u", "u^2 + 1", "u1 + u", "x + u", "u1^2 + 2"];
pub const RADS: [&str; 4] = [
    "(u1 + u^2)^(1/3)",
    "(u2 + u)^(1/2)",
    "(u1 + x)^(1/5)",
    "(u^2 + 3)^(2/3)",
];

/// Rational differential function of jet order at most `max_jet`.
pub fn rational(max_jet: usize) -> impl Strategy<Value = Expr> {
    (poly(max_jet, 4), 0..DENS.len(), 1i32..3)
        .prop_map(|(n, d, k)| p(&format!("{n}/({})^{k}", DENS[d])))
}

/// Rational function times a power of a fixed radical.
pub fn radical(max_jet: usize, rads: usize) -> impl Strategy<Value = Expr> {
    (rational(max_jet), 0..rads, 1i32..3).prop_map(|(e, r, j)| e.mul(&p(RADS[r]).pow(j).unwrap()))
}

pub fn any_expr(max_jet: usize) -> impl Strategy<Value = Expr> {
    prop_oneof![rational(max_jet), radical(max_jet, RADS.len())]
}

/// Like [`any_expr`], restricted to radicands linear in their top slot.
pub fn lowerable_expr(max_jet: usize) -> impl Strategy<Value = Expr> {
    prop_oneof![rational(max_jet), radical(max_jet, 3)]
}

/// Fifth-order flows `u5 + lower terms`.
pub fn flow() -> impl Strategy<Value = Expr> {
    poly(3, 3).prop_map(|q| p(&format!("u5 + {q}")))
}

pub fn small_q() -> impl Strategy<Value = Q> {
    (-9i64..=9, 1i64..=4).prop_map(|(n, d)| Q::new(n, d))
}
