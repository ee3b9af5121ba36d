//! Normal-form rational expressions with at most one radical generator.
//!
//! An [`Expr`] is `num / prod(atom_i^e_i)`. The numerator may contain the
//! radical generator `r` (slot [`Var::R`]) with exponents below the index
//! `m`; the denominator is radical-free and stored factored into primitive
//! integer atoms with positive canonical leading coefficient. Numerator and
//! atoms share no factor, so equal values have identical representations.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::factor::{cmp_poly, expand, factor, refine, Atom, AtomRef};
use crate::poly::{gcd, modp, Mono, Poly};
use crate::rational::Q;
use crate::var::{self, Var, VarOrder, NVARS};

/// Values for every slot; `None` marks an unassigned slot.
pub type Point = [Option<Q>; NVARS];

/// The defining relation `r^m = radicand`.
#[derive(Debug)]
pub struct Radical {
    pub m: u32,
    pub radicand: Poly,
    /// Integer content of the radicand.
    content: Q,
    /// Primitive factors of the radicand with multiplicities below `m`.
    factors: Vec<(AtomRef, u32)>,
}

impl PartialEq for Radical {
    fn eq(&self, other: &Radical) -> bool {
        self.m == other.m && self.radicand == other.radicand
    }
}

impl Eq for Radical {}

impl Radical {
    pub fn max_jet(&self) -> Option<usize> {
        self.radicand.max_jet()
    }

    /// Primitive factors of the radicand with multiplicities.
    pub fn factors(&self) -> &[(AtomRef, u32)] {
        &self.factors
    }

    /// Assigns `r` and then solves the radicand relation for one slot in
    /// which it is linear, so that the point satisfies `r^m = R`.
    pub fn solve_point(&self, point: &mut Point, r: Q) -> Result<()> {
        let rm = r.pow(self.m as i32);
        let mask = self.radicand.mask();
        for i in (0..NVARS).rev() {
            if mask & (1 << i) == 0 {
                continue;
            }
            let v = Var(i as u8);
            if self.radicand.deg(v) != 1 {
                continue;
            }
            let c1 = self.radicand.coeff_of(v, 1).eval(point)?;
            if c1.is_zero() {
                continue;
            }
            let c0 = self.radicand.coeff_of(v, 0).eval(point)?;
            point[i] = Some(&(&rm - &c0) / &c1);
            point[Var::R.idx()] = Some(r);
            return Ok(());
        }
        Err(Error::InconsistentRadical)
    }
}

/// Result of taking an `m`-th root of a radical-free expression.
enum Root {
    Rational(Expr),
    Radical { rad: Arc<Radical>, multiplier: Expr },
}

fn small_prime_power_part(
    n: &num_bigint::BigInt,
    m: u32,
) -> (num_bigint::BigInt, num_bigint::BigInt) {
    // n = s^m * t with t free of m-th powers of small primes
    use num_bigint::BigInt;
    let mut t = n.clone();
    let mut s = BigInt::from(1);
    let mut p = 2u64;
    while p < 10_000 {
        let pm = num_traits::pow(BigInt::from(p), m as usize);
        if pm > t.abs() {
            break;
        }
        while (&t % &pm).is_zero_big() {
            t /= &pm;
            s *= p;
        }
        p += 1;
    }
    (s, t)
}

trait ZeroBig {
    fn is_zero_big(&self) -> bool;
}

impl ZeroBig for num_bigint::BigInt {
    fn is_zero_big(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }
}

fn root_of(base: &Expr, m: u32) -> Result<Root> {
    if !matches!(m, 2 | 3 | 5) {
        return Err(Error::Unsupported(format!("radical index {m}")));
    }
    if base.rad.is_some() {
        return Err(Error::Unsupported("nested radical".into()));
    }
    if base.is_zero() {
        return Ok(Root::Rational(Expr::zero()));
    }
    // (N/D)^(1/m) = (N*D^(m-1))^(1/m) / D
    let d = expand(&base.den);
    let p = base.num.mul(&d.pow(m - 1));
    let mut multiplier = Expr::one().try_div(&Expr::from_poly(d))?;
    let (c, fs) = factor(&p);
    let (n, dd) = (c.numer(), c.denom());
    // c = n/dd = n*dd^(m-1) / dd^m
    multiplier = multiplier.scale(&Q::from_bigint(dd.clone()).recip());
    let whole = n * num_traits::pow(dd, (m - 1) as usize);
    let (s, mut t) = small_prime_power_part(&whole, m);
    multiplier = multiplier.scale(&Q::from_bigint(s));
    if m % 2 == 1 && t.is_negative() {
        t = -t;
        multiplier = multiplier.neg();
    }
    let mut radicand = Poly::constant(Q::from_bigint(t.clone()));
    let mut factors: Vec<(AtomRef, u32)> = Vec::new();
    let mut outside = Poly::one();
    for (f, e, cert) in fs {
        let (q, rem) = (e / m, e % m);
        if q > 0 {
            outside = outside.mul(&f.pow(q));
        }
        if rem > 0 {
            radicand = radicand.mul(&f.pow(rem));
            factors.push((Atom::new(f, cert), rem));
        }
    }
    multiplier = multiplier.mul(&Expr::from_poly(outside));
    if radicand.is_constant() {
        let tq = Q::from_bigint(t);
        if tq.is_one() {
            return Ok(Root::Rational(multiplier));
        }
        return Err(Error::Unsupported(format!(
            "irrational constant radicand {tq}"
        )));
    }
    if radicand.max_jet().unwrap_or(0) > 2 {
        return Err(Error::Unsupported("radicand of jet order above 2".into()));
    }
    factors.sort_by(|a, b| cmp_poly(&a.0.poly, &b.0.poly));
    let rad = Arc::new(Radical {
        m,
        radicand,
        content: Q::from_bigint(t),
        factors,
    });
    Ok(Root::Radical { rad, multiplier })
}

/// Exact expression in normal form.
#[derive(Clone)]
pub struct Expr {
    num: Poly,
    den: Vec<(AtomRef, u32)>,
    rad: Option<Arc<Radical>>,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Expr) -> bool {
        self.num == other.num
            && self.den.len() == other.den.len()
            && self
                .den
                .iter()
                .zip(other.den.iter())
                .all(|(a, b)| a.1 == b.1 && a.0.poly == b.0.poly)
            && match (&self.rad, &other.rad) {
                (None, None) => true,
                (Some(a), Some(b)) => a == b,
                _ => false,
            }
    }
}

impl Eq for Expr {}

fn insert_atom(den: &mut Vec<(AtomRef, u32)>, a: AtomRef, e: u32) {
    if e == 0 {
        return;
    }
    match den.binary_search_by(|(b, _)| cmp_poly(&b.poly, &a.poly)) {
        Ok(i) => den[i].1 += e,
        Err(i) => den.insert(i, (a, e)),
    }
}

fn merge_dens(
    a: &[(AtomRef, u32)],
    b: &[(AtomRef, u32)],
    op: impl Fn(u32, u32) -> u32,
) -> Vec<(AtomRef, u32)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ord = if i == a.len() {
            Ordering::Greater
        } else if j == b.len() {
            Ordering::Less
        } else {
            cmp_poly(&a[i].0.poly, &b[j].0.poly)
        };
        match ord {
            Ordering::Less => {
                out.push((a[i].0.clone(), op(a[i].1, 0)));
                i += 1;
            }
            Ordering::Greater => {
                out.push((b[j].0.clone(), op(0, b[j].1)));
                j += 1;
            }
            Ordering::Equal => {
                out.push((a[i].0.clone(), op(a[i].1, b[j].1)));
                i += 1;
                j += 1;
            }
        }
    }
    out.retain(|(_, e)| *e > 0);
    out
}

/// Removes every atom power dividing `num`.
fn cancel(num: &mut Poly, den: &mut Vec<(AtomRef, u32)>) {
    if num.is_zero() {
        den.clear();
        return;
    }
    // a division can expose a partial factor of an uncertified atom
    while cancel_once(num, den) && den.iter().any(|(a, _)| !a.certified) {}
}

/// One refine-then-divide pass; returns whether any atom was divided out.
fn cancel_once(num: &mut Poly, den: &mut Vec<(AtomRef, u32)>) -> bool {
    if den.iter().any(|(a, _)| !a.certified) && !num.is_constant() {
        let mut i = 0;
        while i < den.len() {
            if let Some(pieces) = refine(&den[i].0, num) {
                let (_, e) = den.remove(i);
                for (a, k) in pieces {
                    insert_atom(den, a, k * e);
                }
                i = 0;
                continue;
            }
            i += 1;
        }
    }
    let mut divided = false;
    for (a, e) in den.iter_mut() {
        while *e > 0 && a.might_divide(num) {
            match num.div_exact(&a.poly) {
                Some(q) => {
                    *num = q;
                    *e -= 1;
                    divided = true;
                }
                None => break,
            }
        }
    }
    den.retain(|(_, e)| *e > 0);
    divided
}

/// Replaces `r^k` (k >= m) using the defining relation.
fn reduce_radical(num: &Poly, rad: &Radical) -> Option<Poly> {
    let m = rad.m as u8;
    if !num.terms().iter().any(|(mo, _)| mo.get(Var::R) >= m) {
        return None;
    }
    let mut keep = Vec::new();
    let mut extra: Vec<Poly> = Vec::new();
    let mut rpow: Vec<Poly> = vec![Poly::one()];
    for (mo, c) in num.terms() {
        let k = mo.get(Var::R);
        if k < m {
            keep.push((*mo, c.clone()));
            continue;
        }
        let (q, rem) = ((k / m) as usize, k % m);
        while rpow.len() <= q {
            let next = rpow.last().unwrap().mul(&rad.radicand);
            rpow.push(next);
        }
        let mut n = *mo;
        n.set(Var::R, rem);
        extra.push(rpow[q].mul_term(&n, c));
    }
    let mut acc = Poly::from_sorted(keep);
    for e in extra {
        acc = acc.add(&e);
    }
    // products of R with r-terms can again not exceed m-1 since R is r-free
    Some(acc)
}

fn join(a: &Option<Arc<Radical>>, b: &Option<Arc<Radical>>) -> Result<Option<Arc<Radical>>> {
    match (a, b) {
        (None, None) => Ok(None),
        (Some(x), None) | (None, Some(x)) => Ok(Some(x.clone())),
        (Some(x), Some(y)) => {
            if Arc::ptr_eq(x, y) || x == y {
                Ok(Some(x.clone()))
            } else {
                Err(Error::RadicalMismatch)
            }
        }
    }
}

/// Determinant of a square matrix of polynomials by cofactor expansion over
/// column subsets.
fn det_rows(
    mat: &[Vec<Poly>],
    row: usize,
    cols: u32,
    memo: &mut rustc_hash::FxHashMap<(usize, u32), Poly>,
) -> Poly {
    let n = mat.len();
    if row == n {
        return Poly::one();
    }
    if let Some(p) = memo.get(&(row, cols)) {
        return p.clone();
    }
    let mut acc = Poly::zero();
    let mut sign = true;
    for j in 0..n {
        if cols & (1 << j) == 0 {
            continue;
        }
        if !mat[row][j].is_zero() {
            let minor = det_rows(mat, row + 1, cols & !(1 << j), memo);
            let t = mat[row][j].mul(&minor);
            acc = if sign { acc.add(&t) } else { acc.sub(&t) };
        }
        sign = !sign;
    }
    memo.insert((row, cols), acc.clone());
    acc
}

impl Expr {
    fn build(num: Poly, den: Vec<(AtomRef, u32)>, rad: Option<Arc<Radical>>) -> Expr {
        let mut num = num;
        let mut den = den;
        if let Some(r) = &rad {
            if let Some(n) = reduce_radical(&num, r) {
                num = n;
            }
        }
        cancel(&mut num, &mut den);
        Expr::settle(num, den, rad)
    }

    fn settle(num: Poly, den: Vec<(AtomRef, u32)>, rad: Option<Arc<Radical>>) -> Expr {
        let rad = if num.has_var(Var::R) { rad } else { None };
        if num.is_zero() {
            return Expr {
                num,
                den: Vec::new(),
                rad: None,
            };
        }
        Expr { num, den, rad }
    }

    pub fn zero() -> Expr {
        Expr {
            num: Poly::zero(),
            den: Vec::new(),
            rad: None,
        }
    }

    pub fn one() -> Expr {
        Expr::constant(Q::one())
    }

    pub fn constant(q: Q) -> Expr {
        Expr {
            num: Poly::constant(q),
            den: Vec::new(),
            rad: None,
        }
    }

    pub fn int(n: i64) -> Expr {
        Expr::constant(Q::from_int(n))
    }

    pub fn frac(n: i64, d: i64) -> Expr {
        Expr::constant(Q::new(n, d))
    }

    /// A radical-free polynomial.
    pub fn from_poly(p: Poly) -> Expr {
        assert!(!p.has_var(Var::R), "radical slot in a bare polynomial");
        Expr {
            num: p,
            den: Vec::new(),
            rad: None,
        }
    }

    pub fn var(v: Var) -> Expr {
        assert!(v != Var::R, "use Expr::root for radicals");
        Expr::from_poly(Poly::var(v))
    }

    pub fn x() -> Expr {
        Expr::var(Var::X)
    }

    pub fn u(order: usize) -> Expr {
        Expr::var(Var::jet(order))
    }

    pub fn param(name: &str) -> Result<Expr> {
        Ok(Expr::var(var::param(name)?))
    }

    /// `base^(1/m)` for radical-free `base`.
    pub fn root(base: &Expr, m: u32) -> Result<Expr> {
        match root_of(base, m)? {
            Root::Rational(e) => Ok(e),
            Root::Radical { rad, multiplier } => {
                let r = Expr {
                    num: Poly::var(Var::R),
                    den: Vec::new(),
                    rad: Some(rad),
                };
                Ok(multiplier.mul(&r))
            }
        }
    }

    /// `base^(p/q)` with `q` in {1, 2, 3, 5}.
    pub fn pow_rational(base: &Expr, p: i64, q: i64) -> Result<Expr> {
        let g = num_integer::gcd(p, q);
        let (p, q) = if q < 0 {
            (-p / g, -q / g)
        } else {
            (p / g, q / g)
        };
        let p32 = i32::try_from(p).map_err(|_| Error::ExponentOverflow)?;
        if q == 1 {
            return base.pow(p32);
        }
        let q32 = u32::try_from(q).map_err(|_| Error::ExponentOverflow)?;
        let b = if base.rad.is_some() {
            return Err(Error::Unsupported(
                "rational power of a radical expression".into(),
            ));
        } else {
            base
        };
        Expr::root(b, q32)?.pow(p32)
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &[(AtomRef, u32)] {
        &self.den
    }

    pub fn den_poly(&self) -> Poly {
        expand(&self.den)
    }

    pub fn radical(&self) -> Option<&Arc<Radical>> {
        self.rad.as_ref()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_empty() && self.num.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_empty()
    }

    pub fn constant_value(&self) -> Option<Q> {
        if self.den.is_empty() {
            self.num.constant_value()
        } else {
            None
        }
    }

    /// The numerator as a polynomial in jets (denominator empty, no radical).
    pub fn as_poly(&self) -> Option<&Poly> {
        if self.den.is_empty() && self.rad.is_none() {
            Some(&self.num)
        } else {
            None
        }
    }

    /// Bitmask of slots the value depends on (radicand slots included).
    pub fn mask(&self) -> u64 {
        let mut m = self.num.mask() & !(1u64 << Var::R.idx());
        for (a, _) in &self.den {
            m |= a.poly.mask();
        }
        if let Some(r) = &self.rad {
            m |= r.radicand.mask();
        }
        m
    }

    pub fn depends_on(&self, v: Var) -> bool {
        self.mask() & (1 << v.idx()) != 0
    }

    pub fn max_jet(&self) -> Option<usize> {
        let m = self.mask();
        (0..=var::MAX_JET)
            .rev()
            .find(|&o| m & (1 << Var::jet(o).idx()) != 0)
    }

    /// Parameters occurring in the expression.
    pub fn params(&self) -> Vec<Var> {
        let m = self.mask();
        (var::FIRST_PARAM_SLOT..NVARS)
            .filter(|&i| m & (1 << i) != 0)
            .map(|i| Var(i as u8))
            .collect()
    }

    pub fn neg(&self) -> Expr {
        Expr {
            num: self.num.neg(),
            den: self.den.clone(),
            rad: self.rad.clone(),
        }
    }

    pub fn scale(&self, c: &Q) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        Expr {
            num: self.num.scale(c),
            den: self.den.clone(),
            rad: self.rad.clone(),
        }
    }

    pub fn try_add(&self, o: &Expr) -> Result<Expr> {
        if self.is_zero() {
            return Ok(o.clone());
        }
        if o.is_zero() {
            return Ok(self.clone());
        }
        let rad = join(&self.rad, &o.rad)?;
        if self.den.len() == o.den.len()
            && self
                .den
                .iter()
                .zip(o.den.iter())
                .all(|(a, b)| a.1 == b.1 && a.0.poly == b.0.poly)
        {
            let num = self.num.add(&o.num);
            let mut den = self.den.clone();
            let mut num = num;
            cancel(&mut num, &mut den);
            return Ok(Expr::settle(num, den, rad));
        }
        let l = merge_dens(&self.den, &o.den, |a, b| a.max(b));
        let fa = merge_dens(&l, &self.den, |a, b| a - b);
        let fb = merge_dens(&l, &o.den, |a, b| a - b);
        let num = self.num.mul(&expand(&fa)).add(&o.num.mul(&expand(&fb)));
        let mut den = l;
        let mut num = num;
        cancel(&mut num, &mut den);
        Ok(Expr::settle(num, den, rad))
    }

    pub fn try_sub(&self, o: &Expr) -> Result<Expr> {
        self.try_add(&o.neg())
    }

    pub fn try_mul(&self, o: &Expr) -> Result<Expr> {
        if self.is_zero() || o.is_zero() {
            return Ok(Expr::zero());
        }
        let rad = join(&self.rad, &o.rad)?;
        if let Some(c) = o.constant_value() {
            return Ok(self.scale(&c));
        }
        if let Some(c) = self.constant_value() {
            return Ok(o.scale(&c));
        }
        let mut den = merge_dens(&self.den, &o.den, |a, b| a + b);
        let mut na = self.num.clone();
        let mut nb = o.num.clone();
        cancel(&mut na, &mut den);
        cancel(&mut nb, &mut den);
        let num = na.mul(&nb);
        if let Some(r) = &rad {
            if let Some(red) = reduce_radical(&num, r) {
                return Ok(Expr::build(red, den, rad));
            }
        }
        Ok(Expr::settle(num, den, rad))
    }

    /// Multiplicative inverse.
    pub fn inv(&self) -> Result<Expr> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let d = expand(&self.den);
        match &self.rad {
            None => {
                let (c, fs) = factor(&self.num);
                let mut den = Vec::new();
                for (f, e, cert) in fs {
                    insert_atom(&mut den, Atom::new(f, cert), e);
                }
                Ok(Expr {
                    num: d.scale(&c.recip()),
                    den,
                    rad: None,
                })
            }
            Some(rad) => {
                let m = rad.m as usize;
                let parts = self.num.univariate(Var::R);
                let nz: Vec<usize> = (0..parts.len()).filter(|&k| !parts[k].is_zero()).collect();
                let d = Expr::from_poly(d);
                if let [k] = nz[..] {
                    // c r^k: 1/r^k = r^(m-k)/R
                    let c = Expr::from_poly(parts[k].clone()).inv()?.try_mul(&d)?;
                    if k == 0 {
                        return Ok(c);
                    }
                    let rk = Expr::radical_gen(rad).pow((m - k) as i32)?;
                    return c
                        .try_mul(&rk)?
                        .try_div(&Expr::from_poly(rad.radicand.clone()));
                }
                let g = nz[1..]
                    .iter()
                    .fold(parts[nz[0]].clone(), |g, &k| gcd(&g, &parts[k]));
                if !g.is_constant() {
                    let rest = Expr::build(
                        self.num.div_exact(&g).expect("content divides"),
                        Vec::new(),
                        Some(rad.clone()),
                    );
                    return Expr::from_poly(g).inv()?.try_mul(&rest.inv()?)?.try_mul(&d);
                }
                let d = expand(&self.den);
                let coef = |k: usize| parts.get(k).cloned().unwrap_or_default();
                let mut mat = vec![vec![Poly::zero(); m]; m];
                for (i, row) in mat.iter_mut().enumerate() {
                    for (j, cell) in row.iter_mut().enumerate() {
                        *cell = if i >= j {
                            coef(i - j)
                        } else {
                            coef(i + m - j).mul(&rad.radicand)
                        };
                    }
                }
                let mut memo = rustc_hash::FxHashMap::default();
                let all = (1u32 << m) - 1;
                let norm = det_rows(&mat, 0, all, &mut memo);
                // first column of the adjugate: cofactors along row 0
                let mut adj = Poly::zero();
                for i in 0..m {
                    let minor = det_rows(&mat, 1, all & !(1 << i), &mut memo);
                    let term = minor.mul_term(&Mono::var(Var::R, i as u8), &Q::one());
                    adj = if i % 2 == 0 {
                        adj.add(&term)
                    } else {
                        adj.sub(&term)
                    };
                }
                if norm.is_zero() {
                    return Err(Error::DivisionByZero);
                }
                let (c, fs) = factor(&norm);
                let mut den = Vec::new();
                for (f, e, cert) in fs {
                    insert_atom(&mut den, Atom::new(f, cert), e);
                }
                Ok(Expr::build(
                    d.mul(&adj).scale(&c.recip()),
                    den,
                    Some(rad.clone()),
                ))
            }
        }
    }

    pub fn try_div(&self, o: &Expr) -> Result<Expr> {
        self.try_mul(&o.inv()?)
    }

    pub fn pow(&self, e: i32) -> Result<Expr> {
        if e < 0 {
            return self.inv()?.pow(-e);
        }
        let mut acc = Expr::one();
        let mut base = self.clone();
        let mut e = e as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.try_mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.try_mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// Applies a derivation given by its action `dp` on radical-free
    /// polynomials (the radical slot held fixed) and extended to `r` through
    /// `r^m = R`.
    pub fn derive(&self, dp: &dyn Fn(&Poly) -> Result<Poly>) -> Result<Expr> {
        if self.is_zero() {
            return Ok(Expr::zero());
        }
        let dn = dp(&self.num)?;
        let main = if self.den.is_empty() {
            Expr::settle(dn, Vec::new(), self.rad.clone())
        } else {
            // (dN * P - N * sum e_i dA_i P/A_i) / (D * P), P = prod A_i
            let mut pexp = Poly::one();
            for (a, _) in &self.den {
                pexp = pexp.mul(&a.poly);
            }
            let mut t = Poly::zero();
            for (i, (a, e)) in self.den.iter().enumerate() {
                let da = dp(&a.poly)?;
                if da.is_zero() {
                    continue;
                }
                let mut rest = Poly::constant(Q::from_int(*e as i64));
                for (j, (b, _)) in self.den.iter().enumerate() {
                    if j != i {
                        rest = rest.mul(&b.poly);
                    }
                }
                t = t.add(&da.mul(&rest));
            }
            let num = dn.mul(&pexp).sub(&self.num.mul(&t));
            let den: Vec<(AtomRef, u32)> =
                self.den.iter().map(|(a, e)| (a.clone(), e + 1)).collect();
            Expr::build(num, den, self.rad.clone())
        };
        let Some(rad) = &self.rad else {
            return Ok(main);
        };
        let dr = dp(&rad.radicand)?;
        if dr.is_zero() {
            return Ok(main);
        }
        // (r dN/dr) dR / (m R D)
        let rdr = self.num.weight_by(Var::R);
        let num = rdr
            .mul(&dr)
            .scale(&(&rad.content * &Q::from_int(rad.m as i64)).recip());
        let den = merge_dens(&self.den, &rad.factors, |a, b| a + b);
        let extra = Expr::build(num, den, self.rad.clone());
        main.try_add(&extra)
    }

    /// Total x-derivative.
    pub fn total_x(&self) -> Result<Expr> {
        self.derive(&|p: &Poly| p.total_x())
    }

    /// Partial derivative with respect to a slot other than the radical.
    pub fn partial(&self, v: Var) -> Result<Expr> {
        if !self.depends_on(v) {
            return Ok(Expr::zero());
        }
        self.derive(&|p: &Poly| Ok(p.diff(v)))
    }

    /// `∂/∂u_i`.
    pub fn jet_partial(&self, i: usize) -> Result<Expr> {
        self.partial(Var::try_jet(i)?)
    }

    /// Exact value at a point that assigns every slot the expression uses.
    pub fn eval(&self, point: &Point) -> Result<Q> {
        let mut d = Q::one();
        for (a, e) in &self.den {
            d = &d * &a.poly.eval(point)?.pow(*e as i32);
        }
        if d.is_zero() {
            return Err(Error::EvalDenominatorZero);
        }
        if let Some(rad) = &self.rad {
            let r = point[Var::R.idx()]
                .as_ref()
                .ok_or_else(|| Error::EvalMissing("r".into()))?;
            if r.pow(rad.m as i32) != rad.radicand.eval(point)? {
                return Err(Error::InconsistentRadical);
            }
        }
        Ok(&self.num.eval(point)? / &d)
    }

    /// Value modulo the prime of [`modp`]; `None` if undefined there.
    pub fn eval_mod(&self, point: &[u64; NVARS]) -> Option<u64> {
        let mut d = 1u64;
        for (a, e) in &self.den {
            d = modp::mul(d, modp::pow(a.poly.eval_mod(point)?, *e as u64));
        }
        let n = self.num.eval_mod(point)?;
        Some(modp::mul(n, modp::inv(d)?))
    }

    /// Schwartz–Zippel style test: evaluates at a few seeded random points
    /// modulo a large prime. `false` is certain; `true` is probable. With a
    /// radical, each coefficient of `r^j` (`j < m`) is tested on its own.
    pub fn probably_zero(&self, seed: u64) -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let parts = if self.rad.is_some() {
            self.num.univariate(Var::R)
        } else {
            vec![self.num.clone()]
        };
        for _ in 0..3 {
            let mut pt = [0u64; NVARS];
            for v in pt.iter_mut() {
                *v = rng.gen_range(1..modp::P);
            }
            if self
                .den
                .iter()
                .any(|(a, _)| a.poly.eval_mod(&pt) == Some(0))
            {
                continue;
            }
            if parts
                .iter()
                .any(|c| c.eval_mod(&pt).is_some_and(|v| v != 0))
            {
                return false;
            }
        }
        true
    }

    /// Simultaneous substitution of slots by expressions. A radical in
    /// `self` is re-rooted over the substituted radicand.
    pub fn subst(&self, subs: &[(Var, Expr)]) -> Result<Expr> {
        let rsub = match &self.rad {
            Some(rad) => {
                let rr = Expr::from_poly(rad.radicand.clone()).subst_poly(subs)?;
                Some(Expr::root(&rr, rad.m)?)
            }
            None => None,
        };
        let mut all: Vec<(Var, Expr)> = subs.to_vec();
        if let Some(r) = rsub {
            all.push((Var::R, r));
        }
        let n = subst_in_poly(&self.num, &all)?;
        let mut d = Expr::one();
        for (a, e) in &self.den {
            d = d.try_mul(&subst_in_poly(&a.poly, &all)?.pow(*e as i32)?)?;
        }
        n.try_div(&d)
    }

    fn subst_poly(&self, subs: &[(Var, Expr)]) -> Result<Expr> {
        debug_assert!(self.den.is_empty());
        subst_in_poly(&self.num, subs)
    }

    /// Sets parameters to rational values.
    pub fn bind(&self, vals: &[(Var, Q)]) -> Result<Expr> {
        let subs: Vec<(Var, Expr)> = vals
            .iter()
            .map(|(v, q)| (*v, Expr::constant(q.clone())))
            .collect();
        self.subst(&subs)
    }

    /// Numerator and expanded denominator with `self = n / d`, `d` radical
    /// free.
    pub fn to_fraction(&self) -> (Poly, Poly) {
        (self.num.clone(), expand(&self.den))
    }

    /// Rebuilds from a numerator that may contain `r` and a radical-free
    /// denominator.
    pub fn from_fraction(num: Poly, den: &Poly, rad: Option<Arc<Radical>>) -> Result<Expr> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let n = Expr::build(num, Vec::new(), rad);
        n.try_div(&Expr::from_poly(den.clone()))
    }

    /// Normalizing constructor from a numerator (may contain `r`) and
    /// denominator atoms.
    pub fn with_parts(num: Poly, den: Vec<(AtomRef, u32)>, rad: Option<Arc<Radical>>) -> Expr {
        let mut den = den;
        den.sort_by(|a, b| cmp_poly(&a.0.poly, &b.0.poly));
        Expr::build(num, den, rad)
    }

    /// The radical generator `r` of `rad` as an expression.
    pub fn radical_gen(rad: &Arc<Radical>) -> Expr {
        Expr {
            num: Poly::var(Var::R),
            den: Vec::new(),
            rad: Some(rad.clone()),
        }
    }

    /// Content hash of the printed form.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let text = crate::print::print(self);
        let h = Sha256::digest(text.as_bytes());
        h.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

fn subst_in_poly(p: &Poly, subs: &[(Var, Expr)]) -> Result<Expr> {
    let mut acc_rest: rustc_hash::FxHashMap<Vec<u8>, Vec<(Mono, Q)>> =
        rustc_hash::FxHashMap::default();
    // group terms by the exponents of substituted slots
    for (m, c) in p.terms() {
        let key: Vec<u8> = subs.iter().map(|(v, _)| m.get(*v)).collect();
        let mut rest = *m;
        for (v, _) in subs {
            rest.set(*v, 0);
        }
        acc_rest.entry(key).or_default().push((rest, c.clone()));
    }
    let mut keys: Vec<Vec<u8>> = acc_rest.keys().cloned().collect();
    keys.sort();
    let mut pow_cache: rustc_hash::FxHashMap<(usize, u8), Expr> = rustc_hash::FxHashMap::default();
    let mut total = Expr::zero();
    for key in keys {
        let terms = acc_rest.remove(&key).unwrap();
        let rest = Poly::from_terms(terms);
        let mut t = Expr::from_poly(rest);
        for (i, &k) in key.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let pk = match pow_cache.get(&(i, k)) {
                Some(e) => e.clone(),
                None => {
                    let e = subs[i].1.pow(k as i32)?;
                    pow_cache.insert((i, k), e.clone());
                    e
                }
            };
            t = t.try_mul(&pk)?;
        }
        total = total.try_add(&t)?;
    }
    Ok(total)
}

macro_rules! binop {
    ($tr:ident, $m:ident, $f:ident) => {
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, o: &Expr) -> Expr {
                self.$f(o)
                    .expect("expressions from different radical contexts")
            }
        }
        impl std::ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, o: Expr) -> Expr {
                (&self)
                    .$f(&o)
                    .expect("expressions from different radical contexts")
            }
        }
    };
}

binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);

impl Expr {
    pub fn add(&self, o: &Expr) -> Expr {
        self + o
    }

    pub fn sub(&self, o: &Expr) -> Expr {
        self - o
    }

    pub fn mul(&self, o: &Expr) -> Expr {
        self * o
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl From<Q> for Expr {
    fn from(q: Q) -> Expr {
        Expr::constant(q)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::print::print(self))
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::print::print(self))
    }
}

/// Canonical slot order snapshot, re-exported for printing.
pub fn canonical_order() -> VarOrder {
    VarOrder::current()
}

/// Random rational point (small numerators and denominators) with the
/// radical relation of `rad` satisfied when given.
pub fn random_point(rng: &mut impl Rng, rad: Option<&Radical>) -> Result<Point> {
    let mut pt: Point = std::array::from_fn(|_| None);
    for (i, slot) in pt.iter_mut().enumerate() {
        if i == Var::R.idx() {
            continue;
        }
        let n: i64 = rng.gen_range(-40..=40);
        let d: i64 = rng.gen_range(1..=9);
        *slot = Some(Q::new(if n == 0 { 1 } else { n }, d));
    }
    if let Some(rad) = rad {
        let n: i64 = rng.gen_range(1..=12);
        let d: i64 = rng.gen_range(1..=5);
        rad.solve_point(&mut pt, Q::new(n, d))?;
    }
    Ok(pt)
}
