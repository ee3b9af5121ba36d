//! Ideal membership over ℚ by Buchberger's algorithm (graded lex order).

use crate::poly::{Mono, Poly};
use crate::rational::Q;

fn lead(p: &Poly) -> &(Mono, Q) {
    &p.terms()[0]
}

fn monic(p: &Poly) -> Poly {
    p.scale(&lead(p).1.recip())
}

/// Full reduction of `f` by `g`.
pub fn normal_form(f: &Poly, g: &[Poly]) -> Poly {
    let mut p = f.clone();
    let mut rem: Vec<(Mono, Q)> = Vec::new();
    'outer: while !p.is_zero() {
        let (m, c) = lead(&p).clone();
        for gi in g {
            let (lm, lc) = lead(gi);
            if let Some(q) = m.div(lm) {
                p = p.sub(&gi.mul_term(&q, &(&c / lc)));
                continue 'outer;
            }
        }
        rem.push((m, c.clone()));
        p = p.sub(&Poly::term(m, c));
    }
    Poly::from_terms(rem)
}

fn s_poly(a: &Poly, b: &Poly) -> Poly {
    let (ma, ca) = lead(a);
    let (mb, cb) = lead(b);
    let l = lcm(ma, mb);
    let qa = l.div(ma).unwrap();
    let qb = l.div(mb).unwrap();
    a.mul_term(&qa, &ca.recip())
        .sub(&b.mul_term(&qb, &cb.recip()))
}

fn lcm(a: &Mono, b: &Mono) -> Mono {
    let mut m = Mono::ONE;
    let mut deg = 0u16;
    for i in 0..a.e.len() {
        m.e[i] = a.e[i].max(b.e[i]);
        deg += m.e[i] as u16;
    }
    m.deg = deg;
    m
}

/// Reduced Gröbner basis of the ideal generated by `gens`.
pub fn basis(gens: &[Poly]) -> Vec<Poly> {
    let mut g: Vec<Poly> = gens.iter().filter(|p| !p.is_zero()).map(monic).collect();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for j in 0..g.len() {
        for i in 0..j {
            pairs.push((i, j));
        }
    }
    while let Some((i, j)) = pairs.pop() {
        let (mi, mj) = (lead(&g[i]).0, lead(&g[j]).0);
        // coprime leading monomials reduce to zero
        if mi.gcd(&mj).is_one() {
            continue;
        }
        let r = normal_form(&s_poly(&g[i], &g[j]), &g);
        if r.is_zero() {
            continue;
        }
        let r = monic(&r);
        if r.is_constant() {
            return vec![Poly::one()];
        }
        let k = g.len();
        g.push(r);
        for i in 0..k {
            pairs.push((i, k));
        }
    }
    // minimize and reduce
    let mut min: Vec<Poly> = Vec::new();
    for (i, p) in g.iter().enumerate() {
        let m = lead(p).0;
        let redundant = g.iter().enumerate().any(|(j, q)| {
            let mq = lead(q).0;
            j != i && mq.divides(&m) && (mq != m || j < i)
        });
        if !redundant {
            min.push(p.clone());
        }
    }
    let mut out = Vec::with_capacity(min.len());
    for i in 0..min.len() {
        let others: Vec<Poly> = min
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, p)| p.clone())
            .collect();
        out.push(monic(&normal_form(&min[i], &others)));
    }
    out.sort_by(|a, b| lead(b).0.cmp(&lead(a).0));
    out
}

/// Whether `f` lies in the ideal with Gröbner basis `g`.
pub fn contains(g: &[Poly], f: &Poly) -> bool {
    normal_form(f, g).is_zero()
}

/// Whether the ideal is the whole ring.
pub fn is_unit(g: &[Poly]) -> bool {
    g.iter().any(|p| p.is_constant() && !p.is_zero())
}
