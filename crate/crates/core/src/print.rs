//! Deterministic text rendering in the input grammar.

use std::cmp::Ordering;

use crate::expr::Expr;
use crate::poly::{Mono, Poly};
use crate::rational::Q;
use crate::var::{Var, VarOrder, FIRST_PARAM_SLOT, MAX_JET, NVARS, X_SLOT};

fn factor_slots() -> Vec<usize> {
    let mut params: Vec<(String, usize)> = (FIRST_PARAM_SLOT..NVARS)
        .map(|i| (Var(i as u8).name(), i))
        .collect();
    params.sort();
    let mut out: Vec<usize> = params.into_iter().map(|(_, i)| i).collect();
    out.push(X_SLOT);
    out.extend(1..=1 + MAX_JET);
    out
}

fn mono_str(m: &Mono, slots: &[usize], radical: Option<(&str, u32)>) -> String {
    let mut parts = Vec::new();
    for &i in slots {
        let k = m.e[i];
        if k == 0 {
            continue;
        }
        let name = Var(i as u8).name();
        parts.push(if k == 1 { name } else { format!("{name}^{k}") });
    }
    let k = m.get(Var::R);
    if k > 0 {
        match radical {
            Some((rtext, idx)) => parts.push(format!("({rtext})^({k}/{idx})")),
            None if k == 1 => parts.push("r".into()),
            None => parts.push(format!("r^{k}")),
        }
    }
    parts.join("*")
}

/// Orders terms by ascending total degree, most significant first within a
/// degree.
pub fn sorted_terms<'a>(p: &'a Poly, order: &VarOrder) -> Vec<&'a (Mono, Q)> {
    let mut terms: Vec<&(Mono, Q)> = p.terms().iter().collect();
    terms.sort_by(|a, b| match a.0.deg.cmp(&b.0.deg) {
        Ordering::Equal => order.cmp(&b.0, &a.0),
        o => o,
    });
    terms
}

fn poly_str(p: &Poly, order: &VarOrder, slots: &[usize], radical: Option<(&str, u32)>) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (i, (m, c)) in sorted_terms(p, order).into_iter().enumerate() {
        let neg = c.is_negative();
        let a = c.abs();
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let ms = mono_str(m, slots, radical);
        if ms.is_empty() {
            out.push_str(&a.to_string());
        } else if a.is_one() {
            out.push_str(&ms);
        } else {
            out.push_str(&format!("{a}*{ms}"));
        }
    }
    out
}

fn is_single_factor(p: &Poly) -> bool {
    p.len() == 1 && {
        let (m, c) = &p.terms()[0];
        c.is_one() && m.e.iter().filter(|&&k| k > 0).count() == 1 && m.deg == 1
    }
}

/// Renders an expression; `parse(print(e)) == e`.
pub fn print(e: &Expr) -> String {
    let order = VarOrder::current();
    let slots = factor_slots();
    let rtext = e
        .radical()
        .map(|r| poly_str(&r.radicand, &order, &slots, None));
    let radical = e.radical().map(|r| (rtext.as_deref().unwrap(), r.m));
    let num = poly_str(e.num(), &order, &slots, radical);
    if e.den().is_empty() {
        return num;
    }
    let mut factors: Vec<String> = e
        .den()
        .iter()
        .map(|(a, k)| {
            let s = poly_str(&a.poly, &order, &slots, None);
            let s = if is_single_factor(&a.poly) {
                s
            } else {
                format!("({s})")
            };
            if *k == 1 {
                s
            } else {
                format!("{s}^{k}")
            }
        })
        .collect();
    factors.sort();
    let den = factors.join("*");
    let num = if e.num().len() == 1 {
        num
    } else {
        format!("({num})")
    };
    if e.den().len() == 1 {
        format!("{num}/{den}")
    } else {
        format!("{num}/({den})")
    }
}

impl std::fmt::Display for Poly {
    /// Plain rendering; the radical slot shows as `r^k`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let order = VarOrder::current();
        f.write_str(&poly_str(self, &order, &factor_slots(), None))
    }
}
