//! Membership in the image of `D_x` by order lowering.
//!
//! If `S` is linear in its top jet `u_k`, `S = A u_k + B`, then
//! `Q = ∫ A du_{k-1}` satisfies `S - D_x Q` of lower order. Repeating
//! either reaches zero or a residue that is nonlinear in its top jet.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{Expr, Radical};
use crate::factor::AtomRef;
use crate::poly::{Mono, Poly};
use crate::rational::Q;
use crate::var::{Var, VarOrder, FIRST_PARAM_SLOT, NVARS};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Exact,
    NotExact,
}

#[derive(Clone, Debug)]
pub struct ExactnessResult {
    pub verdict: Verdict,
    /// Antiderivative accumulated so far; on `Exact`, `D_x flux = input`.
    pub flux: Expr,
    /// What is left: zero on `Exact`.
    pub residue: Expr,
    /// Top jet order of the residue (`-1` when jet-free).
    pub failing_order: i32,
}

impl ExactnessResult {
    pub fn is_exact(&self) -> bool {
        self.verdict == Verdict::Exact
    }
}

/// Why lowering stopped.
#[derive(Debug, PartialEq, Eq)]
enum Stop {
    Zero,
    /// Jet-free remainder depending on `x` or constants only.
    JetFree,
    Nonlinear,
    /// Linear top with a logarithmic antiderivative.
    Logarithmic,
}

fn order_of(e: &Expr) -> i32 {
    e.max_jet().map(|k| k as i32).unwrap_or(-1)
}

/// Lowers `s` as far as possible: returns `(residue, flux, why)` with
/// `s = residue + D_x flux`.
fn lower(s: &Expr) -> Result<(Expr, Expr, Stop)> {
    let mut s = s.clone();
    let mut flux = Expr::zero();
    loop {
        if s.is_zero() {
            return Ok((s, flux, Stop::Zero));
        }
        let Some(k) = s.max_jet() else {
            return Ok((s, flux, Stop::JetFree));
        };
        if k == 0 {
            return Ok((s, flux, Stop::Nonlinear));
        }
        let uk = Var::jet(k);
        if let Some(rad) = s.radical() {
            if rad.radicand.has_var(uk) {
                return Ok((s, flux, Stop::Nonlinear));
            }
        }
        if s.den().iter().any(|(a, _)| a.poly.has_var(uk)) {
            return Ok((s, flux, Stop::Nonlinear));
        }
        let c1 = s.num().coeff_of(uk, 1);
        if c1.is_zero() {
            return Ok((s, flux, Stop::Nonlinear));
        }
        let a = Expr::with_parts(c1, s.den().to_vec(), s.radical().cloned());
        let Some(q) = integrate(&a, Var::jet(k - 1))? else {
            return Ok((s, flux, Stop::Logarithmic));
        };
        let dq = q.total_x()?;
        s = s.try_sub(&dq)?;
        flux = flux.try_add(&q)?;
    }
}

/// Decides `s ∈ Im D_x`.
///
/// A jet-free remainder counts as exact when it integrates in `x` within
/// the expression ring (polynomials in `x` always do).
pub fn is_exact(s: &Expr) -> Result<ExactnessResult> {
    let (res, flux, why) = lower(s)?;
    match why {
        Stop::Zero => Ok(ExactnessResult {
            verdict: Verdict::Exact,
            flux,
            residue: res,
            failing_order: -1,
        }),
        Stop::JetFree => {
            if !res.depends_on(Var::X) {
                return Ok(ExactnessResult {
                    verdict: Verdict::Exact,
                    flux: flux.try_add(&res.try_mul(&Expr::x())?)?,
                    residue: Expr::zero(),
                    failing_order: -1,
                });
            }
            match integrate(&res, Var::X) {
                Ok(Some(q)) => Ok(ExactnessResult {
                    verdict: Verdict::Exact,
                    flux: flux.try_add(&q)?,
                    residue: Expr::zero(),
                    failing_order: -1,
                }),
                Ok(None) | Err(Error::Unsupported(_)) => Ok(ExactnessResult {
                    verdict: Verdict::NotExact,
                    flux,
                    residue: res,
                    failing_order: -1,
                }),
                Err(e) => Err(e),
            }
        }
        Stop::Nonlinear => {
            let k = order_of(&res);
            Ok(ExactnessResult {
                verdict: Verdict::NotExact,
                flux,
                residue: res,
                failing_order: k,
            })
        }
        Stop::Logarithmic => Err(Error::Unsupported(format!(
            "antiderivative needs a logarithm at order {}",
            order_of(&res)
        ))),
    }
}

/// Splits `s = reduced + D_x flux` with `reduced` of the lowest order the
/// lowering reaches; never fails on non-exact input.
pub fn reduce(s: &Expr) -> Result<(Expr, Expr)> {
    let (res, flux, _) = lower(s)?;
    Ok((res, flux))
}

/// Non-exact residue with the parameter conditions that annihilate it.
#[derive(Clone, Debug)]
pub struct Obstruction {
    pub residue: Expr,
    /// Content-free, sign-normalized, deduplicated parameter polynomials.
    pub constraint_set: Vec<Poly>,
}

/// Runs [`is_exact`] and turns the residue into parameter constraints: the
/// coefficients of its jet monomials after clearing denominators.
pub fn extract_constraints(s: &Expr, params: &[Var]) -> Result<Obstruction> {
    let r = is_exact(s)?;
    if r.is_exact() {
        return Ok(Obstruction {
            residue: Expr::zero(),
            constraint_set: Vec::new(),
        });
    }
    let constraint_set = constraints_of(&r.residue, params)?;
    Ok(Obstruction {
        residue: r.residue,
        constraint_set,
    })
}

/// Coefficients (in `params`) of the jet monomials of a residue's numerator.
pub fn constraints_of(residue: &Expr, params: &[Var]) -> Result<Vec<Poly>> {
    let mut pmask = 0u64;
    for p in params {
        pmask |= 1 << p.idx();
    }
    let mut groups: BTreeMap<Vec<u8>, Vec<(Mono, Q)>> = BTreeMap::new();
    for (m, c) in residue.num().terms() {
        let mut key = m.e.to_vec();
        let mut pm = Mono::ONE;
        for i in 0..NVARS {
            if pmask & (1 << i) != 0 {
                key[i] = 0;
                pm.set(Var(i as u8), m.e[i]);
            } else if i >= FIRST_PARAM_SLOT && m.e[i] != 0 {
                return Err(Error::Precondition(format!(
                    "undeclared parameter {}",
                    Var(i as u8)
                )));
            }
        }
        groups.entry(key).or_default().push((pm, c.clone()));
    }
    let order = VarOrder::current();
    let mut out: Vec<Poly> = Vec::new();
    for (_, terms) in groups {
        let p = Poly::from_terms(terms);
        if p.is_zero() {
            continue;
        }
        let (_, prim) = p.primitive(&order);
        if prim.is_constant() {
            return Ok(vec![Poly::one()]);
        }
        if !out.contains(&prim) {
            out.push(prim);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Integration with respect to one slot.

/// `∫ a dv` inside the expression ring, or `None` when the antiderivative
/// needs a logarithm.
pub fn integrate(a: &Expr, v: Var) -> Result<Option<Expr>> {
    if !a.depends_on(v) {
        return Ok(Some(a.try_mul(&Expr::var(v))?));
    }
    if let Some(rad) = a.radical() {
        if rad.radicand.has_var(v) {
            return integrate_radical(a, v, rad);
        }
    }
    let vdep: Vec<&(AtomRef, u32)> = a
        .den()
        .iter()
        .filter(|(at, _)| at.poly.has_var(v))
        .collect();
    if vdep.is_empty() {
        let mut terms = Vec::with_capacity(a.num().len());
        for (m, c) in a.num().terms() {
            let e = m.get(v);
            let mut n = *m;
            n.set(v, e + 1);
            terms.push((n, c * &Q::new(1, e as i64 + 1)));
        }
        return Ok(Some(Expr::with_parts(
            Poly::from_terms(terms),
            a.den().to_vec(),
            a.radical().cloned(),
        )));
    }
    if vdep.len() == 1 && vdep[0].0.as_var() == Some(v) {
        let e = vdep[0].1 as i64;
        let mut terms = Vec::with_capacity(a.num().len());
        for (m, c) in a.num().terms() {
            let j = m.get(v) as i64 - e;
            if j == -1 {
                return Ok(None);
            }
            terms.push((*m, c * &Q::new(1, j + 1)));
        }
        let den: Vec<(AtomRef, u32)> = a
            .den()
            .iter()
            .map(|(at, k)| {
                if at.poly.has_var(v) {
                    (at.clone(), k - 1)
                } else {
                    (at.clone(), *k)
                }
            })
            .filter(|(_, k)| *k > 0)
            .collect();
        return Ok(Some(Expr::with_parts(
            Poly::from_terms(terms),
            den,
            a.radical().cloned(),
        )));
    }
    hermite(a, v)
}

fn binom(n: u32, k: u32) -> Q {
    let mut r = Q::one();
    for i in 0..k {
        r = &r * &Q::new((n - i) as i64, (i + 1) as i64);
    }
    r
}

/// Integration when the radicand is linear in `v`: with `t = r`,
/// `v = (t^m - q)/c`, the integrand becomes a Laurent polynomial in `t`.
fn integrate_radical(a: &Expr, v: Var, rad: &Arc<Radical>) -> Result<Option<Expr>> {
    let big_r = &rad.radicand;
    if big_r.deg(v) != 1 {
        return Err(Error::Unsupported(
            "radicand nonlinear in the integration variable".into(),
        ));
    }
    let m = rad.m as i64;
    let c = Expr::from_poly(big_r.coeff_of(v, 1));
    let q = Expr::from_poly(big_r.coeff_of(v, 0));
    let b = rad
        .factors()
        .iter()
        .find(|(f, _)| f.poly.has_var(v))
        .map(|(f, _)| f.clone())
        .ok_or_else(|| Error::Unsupported("radicand factor".into()))?;
    let kappa = Expr::from_poly(
        big_r
            .div_exact(&b.poly)
            .ok_or_else(|| Error::Other("radicand factor".into()))?,
    );
    let mut e = 0u32;
    let mut rest = Vec::new();
    for (at, k) in a.den() {
        if at.poly == b.poly {
            e = *k;
        } else if at.poly.has_var(v) {
            return integrate_in_root(a, v, rad);
        } else {
            rest.push((at.clone(), *k));
        }
    }
    // group numerator terms by (v-exponent, r-exponent)
    let mut groups: BTreeMap<(u8, u8), Vec<(Mono, Q)>> = BTreeMap::new();
    for (mo, co) in a.num().terms() {
        let (i, j) = (mo.get(v), mo.get(Var::R));
        let mut n = *mo;
        n.set(v, 0);
        n.set(Var::R, 0);
        groups.entry((i, j)).or_default().push((n, co.clone()));
    }
    let cinv = c.inv()?;
    let common = kappa.pow(e as i32)?.try_mul(&cinv)?.scale(&Q::from_int(m));
    let mut qpows = vec![Expr::one()];
    let mut cpows = vec![Expr::one()];
    let neg_q = q.neg();
    let mut laurent: BTreeMap<i64, Expr> = BTreeMap::new();
    for ((i, j), terms) in groups {
        let base =
            Expr::with_parts(Poly::from_terms(terms), rest.clone(), None).try_mul(&common)?;
        while qpows.len() <= i as usize {
            let n = qpows.last().unwrap().try_mul(&neg_q)?;
            qpows.push(n);
            let n = cpows.last().unwrap().try_mul(&cinv)?;
            cpows.push(n);
        }
        for l in 0..=i as u32 {
            let coef = base
                .try_mul(&qpows[(i as u32 - l) as usize])?
                .try_mul(&cpows[i as usize])?
                .scale(&binom(i as u32, l));
            let p = m * l as i64 + j as i64 - m * e as i64 + m - 1;
            let slot = laurent.entry(p).or_insert_with(Expr::zero);
            *slot = slot.try_add(&coef)?;
        }
    }
    let r = Expr::radical_gen(rad);
    let mut out = Expr::zero();
    for (p, coef) in laurent {
        if coef.is_zero() {
            continue;
        }
        if p == -1 {
            return Ok(None);
        }
        let term = coef
            .scale(&Q::new(1, p + 1))
            .try_mul(&r.pow((p + 1) as i32)?)?;
        out = out.try_add(&term)?;
    }
    Ok(Some(out))
}

/// General case of [`integrate_radical`]: with `t = r` the integrand is
/// rational in `t`, and the antiderivative is mapped back through `t ↦ r`.
/// `v` itself is reused as the name of `t` since it is eliminated.
fn integrate_in_root(a: &Expr, v: Var, rad: &Arc<Radical>) -> Result<Option<Expr>> {
    let big_r = &rad.radicand;
    let m = rad.m as i32;
    let c = Expr::from_poly(big_r.coeff_of(v, 1));
    let q = Expr::from_poly(big_r.coeff_of(v, 0));
    let t = Expr::var(v);
    let vt = [(v, t.pow(m)?.try_sub(&q)?.try_div(&c)?)];
    let (num, den) = a.to_fraction();
    let mut n = Expr::zero();
    for (k, ck) in num.univariate(Var::R).into_iter().enumerate() {
        if ck.is_zero() {
            continue;
        }
        let term = Expr::from_poly(ck).subst(&vt)?.try_mul(&t.pow(k as i32)?)?;
        n = n.try_add(&term)?;
    }
    let d = Expr::from_poly(den).subst(&vt)?;
    let b = n
        .try_div(&d)?
        .try_mul(&t.pow(m - 1)?.scale(&Q::from_int(m as i64)))?
        .try_div(&c)?;
    match integrate(&b, v)? {
        Some(ib) => Ok(Some(ib.subst(&[(v, Expr::radical_gen(rad))])?)),
        None => Ok(None),
    }
}

/// Univariate polynomial with expression coefficients (index = power).
type Up = Vec<Expr>;

fn trim(mut p: Up) -> Up {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

fn up_deg(p: &Up) -> i64 {
    p.len() as i64 - 1
}

fn up_add(a: &Up, b: &Up) -> Result<Up> {
    let n = a.len().max(b.len());
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let x = a.get(i).cloned().unwrap_or_else(Expr::zero);
        let y = b.get(i).cloned().unwrap_or_else(Expr::zero);
        out.push(x.try_add(&y)?);
    }
    Ok(trim(out))
}

fn up_neg(a: &Up) -> Up {
    a.iter().map(|c| c.neg()).collect()
}

fn up_sub(a: &Up, b: &Up) -> Result<Up> {
    up_add(a, &up_neg(b))
}

fn up_mul(a: &Up, b: &Up) -> Result<Up> {
    if a.is_empty() || b.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = vec![Expr::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if y.is_zero() {
                continue;
            }
            out[i + j] = out[i + j].try_add(&x.try_mul(y)?)?;
        }
    }
    Ok(trim(out))
}

fn up_scale(a: &Up, c: &Expr) -> Result<Up> {
    Ok(trim(
        a.iter().map(|x| x.try_mul(c)).collect::<Result<Vec<_>>>()?,
    ))
}

fn up_deriv(a: &Up) -> Up {
    trim(
        a.iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c.scale(&Q::from_int(i as i64)))
            .collect(),
    )
}

fn up_divrem(a: &Up, b: &Up) -> Result<(Up, Up)> {
    let b = trim(b.clone());
    if b.is_empty() {
        return Err(Error::DivisionByZero);
    }
    let lc_inv = b.last().unwrap().inv()?;
    let mut r = trim(a.clone());
    let db = b.len() - 1;
    if r.len() <= db {
        return Ok((Vec::new(), r));
    }
    let mut q = vec![Expr::zero(); r.len() - db];
    while r.len() > db && !r.is_empty() {
        let k = r.len() - 1 - db;
        let coef = r.last().unwrap().try_mul(&lc_inv)?;
        for (j, bj) in b.iter().enumerate() {
            r[k + j] = r[k + j].try_sub(&coef.try_mul(bj)?)?;
        }
        q[k] = coef;
        r = trim(r);
    }
    Ok((trim(q), r))
}

/// Solves `s a + t b = c` with `deg s < deg b`, assuming `gcd(a, b) = 1`.
fn diophantine(a: &Up, b: &Up, c: &Up) -> Result<(Up, Up)> {
    // extended Euclid: s0 a + t0 b = g
    let (mut r0, mut r1) = (trim(a.clone()), trim(b.clone()));
    let (mut s0, mut s1): (Up, Up) = (vec![Expr::one()], Vec::new());
    while !r1.is_empty() {
        let (q, r) = up_divrem(&r0, &r1)?;
        let s2 = up_sub(&s0, &up_mul(&q, &s1)?)?;
        r0 = r1;
        r1 = r;
        s0 = s1;
        s1 = s2;
    }
    if up_deg(&r0) != 0 {
        return Err(Error::Unsupported(
            "non-coprime factors in partial fractions".into(),
        ));
    }
    let ginv = r0[0].inv()?;
    let s = up_scale(&s0, &ginv)?;
    let (_, sc) = up_divrem(&up_mul(&s, c)?, b)?;
    let rest = up_sub(c, &up_mul(&sc, a)?)?;
    let (tq, tr) = up_divrem(&rest, b)?;
    if !tr.is_empty() {
        return Err(Error::Other("diophantine remainder".into()));
    }
    Ok((sc, tq))
}

fn up_from_poly(
    p: &Poly,
    v: Var,
    scale: Option<&(Vec<(AtomRef, u32)>, Option<Arc<Radical>>)>,
) -> Up {
    let coeffs = p.univariate(v);
    trim(
        coeffs
            .into_iter()
            .map(|c| match scale {
                Some((den, rad)) => Expr::with_parts(c, den.clone(), rad.clone()),
                None => Expr::from_poly(c),
            })
            .collect(),
    )
}

fn up_eval(p: &Up, v: &Expr) -> Result<Expr> {
    let mut acc = Expr::zero();
    for c in p.iter().rev() {
        acc = acc.try_mul(v)?.try_add(c)?;
    }
    Ok(acc)
}

/// Hermite reduction over the coefficient field; `None` if a logarithmic
/// part remains.
fn hermite(a: &Expr, v: Var) -> Result<Option<Expr>> {
    let mut rest = Vec::new();
    let mut by_exp: BTreeMap<u32, Up> = BTreeMap::new();
    for (at, k) in a.den() {
        if at.poly.has_var(v) {
            let f = up_from_poly(&at.poly, v, None);
            let slot = by_exp.entry(*k).or_insert_with(|| vec![Expr::one()]);
            *slot = up_mul(slot, &f)?;
        } else {
            rest.push((at.clone(), *k));
        }
    }
    let ctx = (rest, a.radical().cloned());
    let n = up_from_poly(a.num(), v, Some(&ctx));
    let mut d: Up = vec![Expr::one()];
    for (k, f) in &by_exp {
        for _ in 0..*k {
            d = up_mul(&d, f)?;
        }
    }
    let (poly_part, mut num) = up_divrem(&n, &d)?;
    let vx = Expr::var(v);
    let mut g = Expr::zero();
    for (i, c) in poly_part.iter().enumerate() {
        if !c.is_zero() {
            g = g.try_add(
                &c.scale(&Q::new(1, i as i64 + 1))
                    .try_mul(&vx.pow(i as i32 + 1)?)?,
            )?;
        }
    }
    for (&i, vfac) in by_exp.iter() {
        if i < 2 {
            continue;
        }
        let mut vi: Up = vec![Expr::one()];
        for _ in 0..i {
            vi = up_mul(&vi, vfac)?;
        }
        let (u, rem) = up_divrem(&d, &vi)?;
        if !rem.is_empty() {
            return Err(Error::Other("squarefree split".into()));
        }
        let uv = up_mul(&u, &up_deriv(vfac))?;
        for j in (1..i).rev() {
            let rhs = up_scale(&num, &Expr::frac(-1, j as i64))?;
            let (b, c) = diophantine(&uv, vfac, &rhs)?;
            let vval = up_eval(vfac, &vx)?;
            let term = up_eval(&b, &vx)?.try_div(&vval.pow(j as i32)?)?;
            g = g.try_add(&term)?;
            num = up_sub(
                &up_scale(&c, &Expr::int(-(j as i64)))?,
                &up_mul(&u, &up_deriv(&b))?,
            )?;
        }
        d = up_mul(&u, vfac)?;
    }
    let (pp, rem) = up_divrem(&num, &d)?;
    if !rem.is_empty() {
        return Ok(None);
    }
    for (i, c) in pp.iter().enumerate() {
        if !c.is_zero() {
            g = g.try_add(
                &c.scale(&Q::new(1, i as i64 + 1))
                    .try_mul(&vx.pow(i as i32 + 1)?)?,
            )?;
        }
    }
    Ok(Some(g))
}
