//! Denominator atoms: primitive integer polynomials, split into irreducible
//! factors where that can be certified cheaply.

use std::cmp::Ordering;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::poly::{gcd, modp, Mono, Poly};
use crate::rational::Q;
use crate::var::{Var, VarOrder, NVARS};

/// A denominator factor.
///
/// `certified` atoms are known to be irreducible; the others are only known
/// to be squarefree and are refined with gcds when they meet other
/// polynomials.
#[derive(Debug)]
pub struct Atom {
    pub poly: Poly,
    pub certified: bool,
    /// A slot in which the atom is linear with a numeric coefficient, used
    /// to place a point on its zero set.
    solve: Option<(Var, u64)>,
}

impl PartialEq for Atom {
    fn eq(&self, other: &Atom) -> bool {
        self.poly == other.poly
    }
}

impl Eq for Atom {}

impl std::hash::Hash for Atom {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.poly.hash(state)
    }
}

pub type AtomRef = Arc<Atom>;

/// Internal total order on polynomials (storage order of terms).
pub fn cmp_poly(a: &Poly, b: &Poly) -> Ordering {
    let (ta, tb) = (a.terms(), b.terms());
    for (x, y) in ta.iter().zip(tb.iter()) {
        match x.0.cmp(&y.0).then_with(|| x.1.cmp(&y.1)) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    ta.len().cmp(&tb.len())
}

impl Atom {
    pub fn new(poly: Poly, certified: bool) -> AtomRef {
        let mut solve = None;
        if !poly.is_monomial() {
            let mask = poly.mask();
            for i in 0..NVARS {
                if mask & (1 << i) == 0 {
                    continue;
                }
                let v = Var(i as u8);
                if poly.deg(v) == 1 {
                    if let Some(c) = poly.coeff_of(v, 1).constant_value() {
                        if let Some(cm) = modp::of_q(&c) {
                            if cm != 0 {
                                solve = Some((v, cm));
                                break;
                            }
                        }
                    }
                }
            }
        }
        Arc::new(Atom {
            poly,
            certified,
            solve,
        })
    }

    /// The single variable this atom equals, if it is one.
    pub fn as_var(&self) -> Option<Var> {
        if self.poly.is_monomial() {
            let (m, _) = &self.poly.terms()[0];
            if m.deg == 1 {
                return (0..NVARS).find(|&i| m.e[i] == 1).map(|i| Var(i as u8));
            }
        }
        None
    }

    /// Cheap necessary test for `self | p`: `false` means it certainly
    /// does not divide.
    pub fn might_divide(&self, p: &Poly) -> bool {
        if let Some(v) = self.as_var() {
            return p.min_deg(v) > 0;
        }
        if let Some((v, c)) = self.solve {
            let mut pt = modp::default_point();
            pt[v.idx()] = 0;
            let Some(rest) = self.poly.eval_mod(&pt) else {
                return true;
            };
            let Some(ci) = modp::inv(c) else { return true };
            pt[v.idx()] = modp::mul(modp::sub(0, rest), ci);
            return match p.eval_mod(&pt) {
                Some(val) => val == 0,
                None => true,
            };
        }
        true
    }
}

/// Splits a nonzero polynomial as `c * prod(atom_i^e_i)`.
pub fn factor(p: &Poly) -> (Q, Vec<(Poly, u32, bool)>) {
    let order = VarOrder::current();
    let (c, p) = p.primitive(&order);
    let mut out = Vec::new();
    let mut scale = c;
    split_any(&p, &order, &mut scale, &mut out);
    // merge duplicates
    let mut merged: Vec<(Poly, u32, bool)> = Vec::new();
    for (f, e, cert) in out {
        if let Some(slot) = merged.iter_mut().find(|(g, _, _)| *g == f) {
            slot.1 += e;
        } else {
            merged.push((f, e, cert));
        }
    }
    (scale, merged)
}

/// Normalizes and splits `p`, multiplying `scale` by any numeric factor
/// removed.
fn split_any(p: &Poly, order: &VarOrder, scale: &mut Q, out: &mut Vec<(Poly, u32, bool)>) {
    let (c, p) = p.primitive(order);
    *scale = &*scale * &c;
    if p.is_constant() {
        return;
    }
    let mc = p.monomial_content();
    let p = if mc.is_one() {
        p
    } else {
        for i in 0..NVARS {
            if mc.e[i] > 0 {
                out.push((Poly::var(Var(i as u8)), mc.e[i] as u32, true));
            }
        }
        p.div_mono(&mc).unwrap()
    };
    if p.is_constant() {
        // p is 1 after removing the monomial content of a primitive poly
        return;
    }
    split(&p, order, scale, out);
}

fn vars_of(p: &Poly) -> Vec<Var> {
    let m = p.mask();
    (0..NVARS)
        .filter(|&i| m & (1 << i) != 0)
        .map(|i| Var(i as u8))
        .collect()
}

fn split(p: &Poly, order: &VarOrder, scale: &mut Q, out: &mut Vec<(Poly, u32, bool)>) {
    let vars = vars_of(p);
    for &v in &vars {
        if p.deg(v) == 1 {
            let a = p.coeff_of(v, 1);
            let b = p.coeff_of(v, 0);
            let g = if a.is_constant() || b.is_constant() {
                Poly::one()
            } else {
                gcd(&a, &b)
            };
            if g.is_constant() {
                out.push((p.clone(), 1, true));
            } else {
                let rest = p.div_exact(&g).expect("gcd divides");
                split_any(&g, order, scale, out);
                split_any(&rest, order, scale, out);
            }
            return;
        }
    }
    for &v in &vars {
        let d = p.diff(v);
        let g = gcd(p, &d);
        if !g.is_constant() {
            let rest = p.div_exact(&g).expect("gcd divides");
            split_any(&g, order, scale, out);
            // factors of rest that also occur in g
            let h = gcd(&g, &rest);
            if h.is_constant() {
                split_any(&rest, order, scale, out);
            } else {
                split_any(&h, order, scale, out);
                split_any(&rest.div_exact(&h).expect("gcd divides"), order, scale, out);
            }
            return;
        }
    }
    if vars.len() == 1 {
        let v = vars[0];
        if let Some(root) = rational_root(p, v) {
            // (den*v - num) is a primitive factor
            let lin = Poly::var(v)
                .scale(&Q::from_bigint(root.denom()))
                .sub(&Poly::constant(Q::from_bigint(root.numer())));
            let rest = p.div_exact(&lin).expect("root factor divides");
            split_any(&lin, order, scale, out);
            split_any(&rest, order, scale, out);
            return;
        }
        out.push((p.clone(), 1, p.deg(v) <= 3));
        return;
    }
    out.push((p.clone(), 1, false));
}

fn divisors(n: &BigInt) -> Option<Vec<BigInt>> {
    let n = n.abs().to_u64()?;
    if n > 1_000_000_000_000 {
        return None;
    }
    let mut ds = Vec::new();
    let mut i = 1u64;
    while i * i <= n {
        if n % i == 0 {
            ds.push(BigInt::from(i));
            if i * i != n {
                ds.push(BigInt::from(n / i));
            }
        }
        i += 1;
    }
    Some(ds)
}

/// A rational root of an integer univariate polynomial, if one exists and
/// the coefficient sizes allow the search.
fn rational_root(p: &Poly, v: Var) -> Option<Q> {
    let coeffs: Vec<Q> = p
        .univariate(v)
        .iter()
        .map(|c| c.constant_value().unwrap())
        .collect();
    let lc = coeffs.last()?.numer();
    let tc = coeffs[0].numer();
    if tc.is_zero() {
        return Some(Q::zero());
    }
    let nums = divisors(&tc)?;
    let dens = divisors(&lc)?;
    for d in &dens {
        for n in &nums {
            if n.gcd(d) != BigInt::from(1) {
                continue;
            }
            for s in [1i32, -1] {
                let cand = Q::from_big(num_rational::BigRational::new(n * s, d.clone()));
                let mut acc = Q::zero();
                for c in coeffs.iter().rev() {
                    acc = &(&acc * &cand) + c;
                }
                if acc.is_zero() {
                    return Some(cand);
                }
            }
        }
    }
    None
}

/// Product of atom powers as one polynomial.
pub fn expand(atoms: &[(AtomRef, u32)]) -> Poly {
    let mut acc = Poly::one();
    for (a, e) in atoms {
        acc = acc.mul(&a.poly.pow(*e));
    }
    acc
}

/// Splits `atom` against `p` when they share a nontrivial factor that is
/// not the whole atom. Returns the refined pieces.
pub fn refine(atom: &AtomRef, p: &Poly) -> Option<Vec<(AtomRef, u32)>> {
    if atom.certified {
        return None;
    }
    let g = gcd(&atom.poly, p);
    if g.is_constant() || g == atom.poly {
        return None;
    }
    let rest = atom.poly.div_exact(&g)?;
    let mut out = Vec::new();
    for piece in [g, rest] {
        let (_, fs) = factor(&piece);
        for (f, e, c) in fs {
            out.push((Atom::new(f, c), e));
        }
    }
    Some(out)
}

pub fn mono_poly(m: &Mono) -> Poly {
    Poly::term(*m, Q::one())
}
