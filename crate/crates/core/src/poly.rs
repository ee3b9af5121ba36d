//! Sparse multivariate polynomials over [`Q`] on the fixed generator layout.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::rational::Q;
use crate::var::{Var, VarOrder, MAX_JET, NVARS, X_SLOT};

/// Exponent vector with cached total degree.
///
/// The derived order (degree first, then slot-wise lexicographic) is the
/// internal storage order. It is a monomial order, so multiplying all terms
/// of a sorted polynomial by one monomial keeps them sorted.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Mono {
    pub deg: u16,
    pub e: [u8; NVARS],
}

impl Hash for Mono {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write(&self.e);
    }
}

impl Mono {
    pub const ONE: Mono = Mono {
        deg: 0,
        e: [0; NVARS],
    };

    pub fn var(v: Var, k: u8) -> Mono {
        let mut m = Mono::ONE;
        m.e[v.idx()] = k;
        m.deg = k as u16;
        m
    }

    #[inline]
    pub fn get(&self, v: Var) -> u8 {
        self.e[v.idx()]
    }

    #[inline]
    pub fn set(&mut self, v: Var, k: u8) {
        let old = self.e[v.idx()];
        self.e[v.idx()] = k;
        self.deg = self.deg + k as u16 - old as u16;
    }

    #[inline]
    pub fn mul(&self, o: &Mono) -> Mono {
        let mut r = *self;
        for i in 0..NVARS {
            if o.e[i] != 0 {
                r.e[i] = r.e[i].checked_add(o.e[i]).expect("exponent overflow");
            }
        }
        r.deg += o.deg;
        r
    }

    #[inline]
    pub fn divides(&self, o: &Mono) -> bool {
        self.e.iter().zip(o.e.iter()).all(|(a, b)| a <= b)
    }

    pub fn div(&self, o: &Mono) -> Option<Mono> {
        if !o.divides(self) {
            return None;
        }
        let mut r = *self;
        for i in 0..NVARS {
            r.e[i] -= o.e[i];
        }
        r.deg -= o.deg;
        Some(r)
    }

    pub fn gcd(&self, o: &Mono) -> Mono {
        let mut r = Mono::ONE;
        for i in 0..NVARS {
            r.e[i] = self.e[i].min(o.e[i]);
        }
        r.deg = r.e.iter().map(|&x| x as u16).sum();
        r
    }

    pub fn is_one(&self) -> bool {
        self.deg == 0
    }

    /// Bitmask of slots with nonzero exponent.
    pub fn mask(&self) -> u64 {
        let mut m = 0u64;
        for (i, &k) in self.e.iter().enumerate() {
            if k != 0 {
                m |= 1 << i;
            }
        }
        m
    }
}

impl fmt::Debug for Mono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for i in 0..NVARS {
            if self.e[i] > 0 {
                if !first {
                    write!(f, "*")?;
                }
                first = false;
                write!(f, "{}", Var(i as u8))?;
                if self.e[i] > 1 {
                    write!(f, "^{}", self.e[i])?;
                }
            }
        }
        if first {
            write!(f, "1")?;
        }
        Ok(())
    }
}

/// Sorted (descending) list of nonzero terms.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: Vec<(Mono, Q)>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}*{m:?}")?;
        }
        Ok(())
    }
}

fn accumulate(map: &mut FxHashMap<Mono, Q>, m: Mono, c: Q) {
    match map.entry(m) {
        std::collections::hash_map::Entry::Occupied(mut o) => {
            let s = o.get() + &c;
            *o.get_mut() = s;
        }
        std::collections::hash_map::Entry::Vacant(v) => {
            v.insert(c);
        }
    }
}

fn from_map(map: FxHashMap<Mono, Q>) -> Poly {
    let mut terms: Vec<(Mono, Q)> = map.into_iter().filter(|(_, c)| !c.is_zero()).collect();
    terms.sort_unstable_by(|a, b| b.0.cmp(&a.0));
    Poly { terms }
}

impl Poly {
    pub fn zero() -> Poly {
        Poly { terms: Vec::new() }
    }

    pub fn one() -> Poly {
        Poly::constant(Q::one())
    }

    pub fn constant(c: Q) -> Poly {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly {
                terms: vec![(Mono::ONE, c)],
            }
        }
    }

    pub fn var(v: Var) -> Poly {
        Poly {
            terms: vec![(Mono::var(v, 1), Q::one())],
        }
    }

    pub fn term(m: Mono, c: Q) -> Poly {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly {
                terms: vec![(m, c)],
            }
        }
    }

    /// Builds from arbitrary (possibly repeated, unsorted) terms.
    pub fn from_terms(terms: impl IntoIterator<Item = (Mono, Q)>) -> Poly {
        let mut map = FxHashMap::default();
        for (m, c) in terms {
            accumulate(&mut map, m, c);
        }
        from_map(map)
    }

    /// Builds from terms already sorted descending with distinct monomials.
    pub fn from_sorted(terms: Vec<(Mono, Q)>) -> Poly {
        debug_assert!(terms.windows(2).all(|w| w[0].0 > w[1].0));
        Poly {
            terms: terms.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }

    pub fn terms(&self) -> &[(Mono, Q)] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<(Mono, Q)> {
        self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms[0].0.is_one())
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_one() && self.terms[0].1.is_one()
    }

    pub fn constant_value(&self) -> Option<Q> {
        if self.terms.is_empty() {
            Some(Q::zero())
        } else if self.is_constant() {
            Some(self.terms[0].1.clone())
        } else {
            None
        }
    }

    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    /// Coefficient of the constant term.
    pub fn constant_term(&self) -> Q {
        match self.terms.last() {
            Some((m, c)) if m.is_one() => c.clone(),
            _ => Q::zero(),
        }
    }

    pub fn mask(&self) -> u64 {
        self.terms.iter().fold(0, |acc, (m, _)| acc | m.mask())
    }

    pub fn has_var(&self, v: Var) -> bool {
        self.terms.iter().any(|(m, _)| m.get(v) > 0)
    }

    pub fn deg(&self, v: Var) -> u32 {
        self.terms
            .iter()
            .map(|(m, _)| m.get(v) as u32)
            .max()
            .unwrap_or(0)
    }

    pub fn min_deg(&self, v: Var) -> u32 {
        self.terms
            .iter()
            .map(|(m, _)| m.get(v) as u32)
            .min()
            .unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.first().map(|(m, _)| m.deg as u32).unwrap_or(0)
    }

    /// Highest jet order present, if any jet occurs.
    pub fn max_jet(&self) -> Option<usize> {
        let mask = self.mask();
        (0..=MAX_JET)
            .rev()
            .find(|&o| mask & (1 << Var::jet(o).idx()) != 0)
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (*m, -c)).collect(),
        }
    }

    pub fn scale(&self, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        if c.is_one() {
            return self.clone();
        }
        Poly {
            terms: self.terms.iter().map(|(m, d)| (*m, d * c)).collect(),
        }
    }

    pub fn mul_term(&self, m: &Mono, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(n, d)| (n.mul(m), d * c)).collect(),
        }
    }

    fn merge(&self, other: &Poly, negate: bool) -> Poly {
        let (a, b) = (&self.terms, &other.terms);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Greater => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push((b[j].0, if negate { -&b[j].1 } else { b[j].1.clone() }));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = if negate {
                        &a[i].1 - &b[j].1
                    } else {
                        &a[i].1 + &b[j].1
                    };
                    if !c.is_zero() {
                        out.push((a[i].0, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        for t in &b[j..] {
            out.push((t.0, if negate { -&t.1 } else { t.1.clone() }));
        }
        Poly { terms: out }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        self.merge(other, false)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        if other.is_zero() {
            return self.clone();
        }
        self.merge(other, true)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if other.terms.len() == 1 {
            return self.mul_term(&other.terms[0].0, &other.terms[0].1);
        }
        if self.terms.len() == 1 {
            return other.mul_term(&self.terms[0].0, &self.terms[0].1);
        }
        let (small, big) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut map: FxHashMap<Mono, Q> = FxHashMap::default();
        map.reserve(big.len() * 2);
        for (m1, c1) in &small.terms {
            for (m2, c2) in &big.terms {
                accumulate(&mut map, m1.mul(m2), c1 * c2);
            }
        }
        from_map(map)
    }

    pub fn pow(&self, mut e: u32) -> Poly {
        let mut acc = Poly::one();
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Partial derivative with respect to one slot.
    pub fn diff(&self, v: Var) -> Poly {
        let mut out = Vec::new();
        for (m, c) in &self.terms {
            let k = m.get(v);
            if k > 0 {
                let mut n = *m;
                n.set(v, k - 1);
                out.push((n, c * &Q::from_int(k as i64)));
            }
        }
        // Dividing every term by the same variable preserves the order.
        Poly { terms: out }
    }

    /// `x * d/dv` style Euler weight: multiplies each term by its `v`-exponent.
    pub fn weight_by(&self, v: Var) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.get(v) > 0)
                .map(|(m, c)| (*m, c * &Q::from_int(m.get(v) as i64)))
                .collect(),
        }
    }

    /// Total x-derivative of a polynomial in `x, u, u1, ...` with every other
    /// slot treated as constant.
    pub fn total_x(&self) -> Result<Poly> {
        let mut map: FxHashMap<Mono, Q> = FxHashMap::default();
        map.reserve(self.len() * 3);
        let top = Var::jet(MAX_JET);
        for (m, c) in &self.terms {
            if m.get(top) > 0 {
                return Err(Error::OrderOverflow(MAX_JET + 1));
            }
            let kx = m.e[X_SLOT];
            if kx > 0 {
                let mut n = *m;
                n.e[X_SLOT] -= 1;
                n.deg -= 1;
                accumulate(&mut map, n, c * &Q::from_int(kx as i64));
            }
            for o in 0..MAX_JET {
                let s = 1 + o;
                let k = m.e[s];
                if k > 0 {
                    let mut n = *m;
                    n.e[s] -= 1;
                    n.e[s + 1] = n.e[s + 1].checked_add(1).expect("exponent overflow");
                    accumulate(
                        &mut map,
                        n,
                        if k == 1 {
                            c.clone()
                        } else {
                            c * &Q::from_int(k as i64)
                        },
                    );
                }
            }
        }
        Ok(from_map(map))
    }

    /// Coefficients with respect to `v`: entry `k` multiplies `v^k`.
    pub fn univariate(&self, v: Var) -> Vec<Poly> {
        let d = self.deg(v) as usize;
        let mut out: Vec<Vec<(Mono, Q)>> = vec![Vec::new(); d + 1];
        for (m, c) in &self.terms {
            let k = m.get(v);
            let mut n = *m;
            n.set(v, 0);
            out[k as usize].push((n, c.clone()));
        }
        out.into_iter().map(|terms| Poly { terms }).collect()
    }

    pub fn from_univariate(v: Var, coeffs: &[Poly]) -> Poly {
        let mut all = Vec::new();
        for (k, p) in coeffs.iter().enumerate() {
            let vm = Mono::var(v, k as u8);
            for (m, c) in &p.terms {
                all.push((m.mul(&vm), c.clone()));
            }
        }
        all.sort_unstable_by(|a, b| b.0.cmp(&a.0));
        Poly { terms: all }
    }

    /// Coefficient of `v^k`.
    pub fn coeff_of(&self, v: Var, k: u8) -> Poly {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.get(v) == k)
            .map(|(m, c)| {
                let mut n = *m;
                n.set(v, 0);
                (n, c.clone())
            })
            .collect();
        Poly { terms }
    }

    /// Simultaneous substitution of slots by polynomials.
    pub fn subst(&self, subs: &[(Var, Poly)]) -> Poly {
        if subs.is_empty() {
            return self.clone();
        }
        let mut pow_cache: FxHashMap<(u8, u8), Poly> = FxHashMap::default();
        let mut acc: FxHashMap<Mono, Q> = FxHashMap::default();
        for (m, c) in &self.terms {
            let mut rest = *m;
            let mut factor = Poly::constant(c.clone());
            for (v, p) in subs {
                let k = m.get(*v);
                if k > 0 {
                    rest.set(*v, 0);
                    let pk = pow_cache
                        .entry((v.0, k))
                        .or_insert_with(|| p.pow(k as u32))
                        .clone();
                    factor = factor.mul(&pk);
                }
            }
            for (n, d) in factor.terms {
                accumulate(&mut acc, n.mul(&rest), d);
            }
        }
        from_map(acc)
    }

    /// Evaluates with the given slot values; slots absent from `point` must
    /// not occur.
    pub fn eval(&self, point: &[Option<Q>; NVARS]) -> Result<Q> {
        let mut total = Q::zero();
        let mut powers: FxHashMap<(usize, u8), Q> = FxHashMap::default();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for i in 0..NVARS {
                let k = m.e[i];
                if k > 0 {
                    let val = point[i]
                        .as_ref()
                        .ok_or_else(|| Error::EvalMissing(Var(i as u8).name()))?;
                    let p = powers.entry((i, k)).or_insert_with(|| val.pow(k as i32));
                    t = &t * p;
                }
            }
            total = &total + &t;
        }
        Ok(total)
    }

    /// Partial evaluation: substitutes rational values for some slots.
    pub fn eval_partial(&self, vals: &[(Var, Q)]) -> Poly {
        let mut acc: FxHashMap<Mono, Q> = FxHashMap::default();
        for (m, c) in &self.terms {
            let mut n = *m;
            let mut t = c.clone();
            for (v, q) in vals {
                let k = m.get(*v);
                if k > 0 {
                    t = &t * &q.pow(k as i32);
                    n.set(*v, 0);
                }
            }
            accumulate(&mut acc, n, t);
        }
        from_map(acc)
    }

    /// Rational content: the positive gcd of all coefficients.
    pub fn content(&self) -> Q {
        let mut g = Q::zero();
        for (_, c) in &self.terms {
            g = Q::gcd(&g, c);
        }
        g
    }

    /// Leading term under the canonical (name-aware) order.
    pub fn canonical_lead<'a>(&'a self, order: &VarOrder) -> Option<&'a (Mono, Q)> {
        self.terms.iter().max_by(|a, b| order.cmp(&a.0, &b.0))
    }

    /// Scales to integer coefficients without common factor and a positive
    /// canonical leading coefficient; returns the factor removed
    /// (`self = factor * result`).
    pub fn primitive(&self, order: &VarOrder) -> (Q, Poly) {
        if self.is_zero() {
            return (Q::one(), Poly::zero());
        }
        let mut c = self.content();
        if self.canonical_lead(order).unwrap().1.is_negative() {
            c = -c;
        }
        (c.clone(), self.scale(&c.recip()))
    }

    /// Greatest common monomial dividing every term.
    pub fn monomial_content(&self) -> Mono {
        let mut it = self.terms.iter();
        let Some((first, _)) = it.next() else {
            return Mono::ONE;
        };
        let mut g = *first;
        for (m, _) in it {
            g = g.gcd(m);
            if g.is_one() {
                break;
            }
        }
        g
    }

    pub fn div_mono(&self, m: &Mono) -> Option<Poly> {
        let mut out = Vec::with_capacity(self.len());
        for (n, c) in &self.terms {
            out.push((n.div(m)?, c.clone()));
        }
        Some(Poly { terms: out })
    }

    /// Exact quotient `self / d`, or `None` when `d` does not divide.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        if d.is_monomial() {
            let (m, c) = &d.terms[0];
            return self.div_mono(m).map(|p| p.scale(&c.recip()));
        }
        // Pick the slot of smallest degree whose leading coefficient is a
        // number, falling back to any slot of `d`.
        let dmask = d.mask();
        let mut best: Option<(Var, u32, bool)> = None;
        for i in 0..NVARS {
            if dmask & (1 << i) == 0 {
                continue;
            }
            let v = Var(i as u8);
            let dv = d.deg(v);
            let lc_const = d.coeff_of(v, dv as u8).is_constant();
            let better = match best {
                None => true,
                Some((_, bd, bc)) => (lc_const && !bc) || (lc_const == bc && dv < bd),
            };
            if better {
                best = Some((v, dv, lc_const));
            }
        }
        let (v, n, _) = best.unwrap();
        let n = n as usize;
        let ud = d.univariate(v);
        let mut rem = self.univariate(v);
        if rem.len() < n + 1 {
            return None;
        }
        let lc = &ud[n];
        let lc_inv = lc.constant_value().map(|c| c.recip());
        let qlen = rem.len() - n;
        let mut quot = vec![Poly::zero(); qlen];
        for k in (0..qlen).rev() {
            let top = std::mem::take(&mut rem[k + n]);
            if top.is_zero() {
                continue;
            }
            let qk = match &lc_inv {
                Some(inv) => top.scale(inv),
                None => top.div_exact(lc)?,
            };
            for (j, dj) in ud.iter().enumerate().take(n) {
                if !dj.is_zero() {
                    rem[k + j] = rem[k + j].sub(&qk.mul(dj));
                }
            }
            quot[k] = qk;
        }
        if rem[..n].iter().any(|p| !p.is_zero()) {
            return None;
        }
        Some(Poly::from_univariate(v, &quot))
    }

    /// Pseudo-remainder of `self` by `d` with respect to `v`.
    fn prem(&self, d: &Poly, v: Var) -> Poly {
        let dn = d.deg(v);
        let ud = d.univariate(v);
        let lc = ud[dn as usize].clone();
        let mut a = self.clone();
        loop {
            let da = a.deg(v);
            if a.is_zero() || da < dn {
                return a;
            }
            let top = a.coeff_of(v, da as u8);
            let shift = Mono::var(v, (da - dn) as u8);
            let sub = d.mul(&top).mul_term(&shift, &Q::one());
            a = a.mul(&lc).sub(&sub);
        }
    }

    /// Content with respect to `v`: gcd of the coefficients of powers of `v`.
    fn content_in(&self, v: Var) -> Poly {
        let mut g = Poly::zero();
        for c in self.univariate(v) {
            if c.is_zero() {
                continue;
            }
            g = gcd(&g, &c);
            if g.is_constant() {
                return Poly::one();
            }
        }
        g
    }

    pub fn max_var(&self) -> Option<Var> {
        let m = self.mask();
        (0..NVARS)
            .rev()
            .find(|&i| m & (1 << i) != 0)
            .map(|i| Var(i as u8))
    }
}

/// Greatest common divisor, normalized to a primitive integer polynomial with
/// positive canonical leading coefficient (`1` when coprime).
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    let order = VarOrder::current();
    gcd_with(a, b, &order)
}

fn gcd_with(a: &Poly, b: &Poly, order: &VarOrder) -> Poly {
    if a.is_zero() {
        return b.primitive(order).1;
    }
    if b.is_zero() {
        return a.primitive(order).1;
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    let mg = a.monomial_content().gcd(&b.monomial_content());
    let (a, b) = if mg.is_one() {
        (a.clone(), b.clone())
    } else {
        (a.div_mono(&mg).unwrap(), b.div_mono(&mg).unwrap())
    };
    let mono_part = Poly::term(mg, Q::one());
    let am = a.mask();
    let bm = b.mask();
    let common = am & bm;
    let core = if common == 0 {
        if am == 0 || bm == 0 {
            Poly::one()
        } else {
            // Disjoint variables: only the contents can be shared.
            let v = Var(am.trailing_zeros() as u8);
            gcd_with(&a.content_in(v), &b, order)
        }
    } else {
        let v = Var(common.trailing_zeros() as u8);
        // Variables present in only one operand must be eliminated via content.
        let only_a = am & !bm;
        let only_b = bm & !am;
        if only_a != 0 {
            let w = Var(only_a.trailing_zeros() as u8);
            gcd_with(&a.content_in(w), &b, order)
        } else if only_b != 0 {
            let w = Var(only_b.trailing_zeros() as u8);
            gcd_with(&a, &b.content_in(w), order)
        } else {
            let ca = a.content_in(v);
            let cb = b.content_in(v);
            let pa = a.div_exact(&ca).expect("content divides");
            let pb = b.div_exact(&cb).expect("content divides");
            let gc = gcd_with(&ca, &cb, order);
            let (mut p, mut q) = if pa.deg(v) >= pb.deg(v) {
                (pa, pb)
            } else {
                (pb, pa)
            };
            let g = if modp::coprime_image(&p, &q, v) {
                Poly::one()
            } else {
                loop {
                    let r = p.prem(&q, v);
                    if r.is_zero() {
                        break q;
                    }
                    if r.deg(v) == 0 {
                        break Poly::one();
                    }
                    let cr = r.content_in(v);
                    let rp = r.div_exact(&cr).expect("content divides");
                    let rp = rp.primitive(order).1;
                    p = q;
                    q = rp;
                }
            };
            let g = if g.is_constant() {
                g
            } else {
                g.div_exact(&g.content_in(v)).unwrap()
            };
            gc.mul(&g)
        }
    };
    mono_part.mul(&core).primitive(order).1
}


/// Arithmetic modulo the Mersenne prime `2^61 - 1`, used for cheap
/// divisibility pre-checks.
pub mod modp {
    use super::*;

    pub const P: u64 = (1 << 61) - 1;

    #[inline]
    pub fn mul(a: u64, b: u64) -> u64 {
        let r = (a as u128) * (b as u128);
        let lo = (r as u64) & P;
        let hi = (r >> 61) as u64;
        let s = lo + hi;
        if s >= P {
            s - P
        } else {
            s
        }
    }

    #[inline]
    pub fn add(a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= P {
            s - P
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + P - b
        }
    }

    pub fn pow(mut a: u64, mut e: u64) -> u64 {
        let mut r = 1;
        while e > 0 {
            if e & 1 == 1 {
                r = mul(r, a);
            }
            a = mul(a, a);
            e >>= 1;
        }
        r
    }

    pub fn inv(a: u64) -> Option<u64> {
        if a == 0 {
            None
        } else {
            Some(pow(a, P - 2))
        }
    }

    fn reduce_i64(n: i64) -> u64 {
        let r = (n as i128).rem_euclid(P as i128);
        r as u64
    }

    pub fn of_q(q: &Q) -> Option<u64> {
        match q {
            Q::Small(n, 1) => Some(reduce_i64(*n)),
            Q::Small(n, d) => Some(mul(reduce_i64(*n), inv(reduce_i64(*d))?)),
            Q::Big(b) => {
                let pm = num_bigint::BigInt::from(P);
                let n = (b.numer() % &pm + &pm) % &pm;
                let d = (b.denom() % &pm + &pm) % &pm;
                let n: u64 = n.try_into().ok()?;
                let d: u64 = d.try_into().ok()?;
                Some(mul(n, inv(d)?))
            }
        }
    }

    fn point(seed: u64) -> [u64; NVARS] {
        let mut s = seed;
        let mut pt = [0u64; NVARS];
        for v in pt.iter_mut() {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            *v = s % P;
        }
        pt
    }

    fn trim(a: &mut Vec<u64>) {
        while a.last() == Some(&0) {
            a.pop();
        }
    }

    /// Degree of the gcd of two dense univariate polynomials over `Z/P`.
    fn gcd_degree(mut a: Vec<u64>, mut b: Vec<u64>) -> usize {
        trim(&mut a);
        trim(&mut b);
        while !b.is_empty() {
            let lb = inv(*b.last().unwrap()).unwrap();
            while a.len() >= b.len() {
                let k = a.len() - b.len();
                let c = mul(*a.last().unwrap(), lb);
                for (i, bi) in b.iter().enumerate() {
                    a[i + k] = sub(a[i + k], mul(c, *bi));
                }
                trim(&mut a);
                if a.is_empty() {
                    break;
                }
            }
            std::mem::swap(&mut a, &mut b);
        }
        a.len().saturating_sub(1)
    }

    /// Sufficient test that two polynomials, primitive in `v`, are coprime:
    /// their images at a point where neither leading coefficient vanishes
    /// have a constant gcd.
    pub fn coprime_image(a: &Poly, b: &Poly, v: Var) -> bool {
        let (ua, ub) = (a.univariate(v), b.univariate(v));
        for seed in [0x2545_F491_4F6C_DD1D_u64, 0x9E37_79B9_7F4A_7C15] {
            let pt = point(seed);
            let image = |u: &[Poly]| {
                u.iter()
                    .map(|c| c.eval_mod(&pt))
                    .collect::<Option<Vec<u64>>>()
            };
            let (Some(ia), Some(ib)) = (image(&ua), image(&ub)) else {
                continue;
            };
            if ia.last() == Some(&0) || ib.last() == Some(&0) {
                continue;
            }
            if gcd_degree(ia, ib) == 0 {
                return true;
            }
        }
        false
    }

    /// A fixed pseudo-random point, one residue per slot.
    pub fn default_point() -> [u64; NVARS] {
        let mut s: u64 = 0x9E37_79B9_7F4A_7C15;
        let mut pt = [0u64; NVARS];
        for v in pt.iter_mut() {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            *v = s % P;
        }
        pt
    }

    impl Poly {
        /// Value modulo `P`, or `None` when a coefficient denominator is not
        /// invertible.
        pub fn eval_mod(&self, point: &[u64; NVARS]) -> Option<u64> {
            let mut pows: Vec<Vec<u64>> = vec![Vec::new(); NVARS];
            let mut inv_cache: FxHashMap<i64, u64> = FxHashMap::default();
            let mut total = 0u64;
            for (m, c) in self.terms() {
                let cm = match c {
                    Q::Small(n, 1) => reduce_i64(*n),
                    Q::Small(n, d) => {
                        let id = match inv_cache.get(d) {
                            Some(x) => *x,
                            None => {
                                let x = inv(reduce_i64(*d))?;
                                inv_cache.insert(*d, x);
                                x
                            }
                        };
                        mul(reduce_i64(*n), id)
                    }
                    big => of_q(big)?,
                };
                let mut t = cm;
                for i in 0..NVARS {
                    let k = m.e[i] as usize;
                    if k > 0 {
                        let tbl = &mut pows[i];
                        if tbl.is_empty() {
                            tbl.push(1);
                        }
                        while tbl.len() <= k {
                            let last = *tbl.last().unwrap();
                            tbl.push(mul(last, point[i]));
                        }
                        t = mul(t, tbl[k]);
                    }
                }
                total = add(total, t);
            }
            Some(total)
        }
    }
}
