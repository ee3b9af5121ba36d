//! Canonical densities of fifth-order equations `u_t = F(x, u, ..., u_5)`.

use std::collections::HashMap;
use std::time::Instant;

use crate::calculus::Flow;
use crate::error::{Error, Result};
use crate::exactness::{is_exact, reduce, ExactnessResult};
use crate::expr::Expr;
use crate::rational::Q;
use crate::var::VarOrder;

/// Splits a constant factor off a radical-free expression.
fn split_constant(g: &Expr) -> Result<(Q, Expr)> {
    let (c, _) = g.num().primitive(&VarOrder::current());
    if c.is_zero() {
        return Err(Error::DivisionByZero);
    }
    Ok((c.clone(), g.scale(&c.recip())))
}

/// `a` with `a^5 = κ / f5` for the returned rational `κ`; `κ = 1` whenever
/// the constant part of `f5` is a rational fifth power.
pub fn fifth_root_inv(f5: &Expr) -> Result<(Q, Expr)> {
    if f5.is_zero() {
        return Err(Error::RootExtraction("F_5 vanishes".into()));
    }
    let candidates: Vec<(Expr, Expr)> = match f5.radical() {
        None => vec![(Expr::one(), f5.clone())],
        Some(rad) => {
            let r = Expr::radical_gen(rad);
            let mut out = Vec::new();
            for j in 0..rad.m as i32 {
                let g = f5.try_mul(&r.pow(5 * j)?)?;
                if g.radical().is_none() {
                    out.push((r.pow(j)?, g));
                }
            }
            out
        }
    };
    let mut last = Error::RootExtraction(format!("F_5 = {f5} is not a fifth power"));
    for (rpart, g) in candidates {
        let (kappa, g1) = split_constant(&g)?;
        let (kappa, fix) = match kappa.exact_root(5) {
            Some(k) => (Q::one(), Expr::constant(k.recip())),
            None => (kappa, Expr::one()),
        };
        let b = match Expr::pow_rational(&g1, -1, 5) {
            Ok(b) => b,
            Err(e) => {
                last = e;
                continue;
            }
        };
        if f5.radical().is_some() && b.radical().is_some() {
            continue;
        }
        return Ok((kappa, rpart.try_mul(&b)?.try_mul(&fix)?));
    }
    Err(match last {
        Error::RootExtraction(m) => Error::RootExtraction(m),
        e => Error::RootExtraction(e.to_string()),
    })
}

/// `ρ_{-1} = F_5^{-1/5}`; fails unless the constant part of `F_5` is a
/// rational fifth power.
pub fn rho_minus1(f: &Flow) -> Result<Expr> {
    check_order(f)?;
    let (kappa, a) = fifth_root_inv(&f.partial(5)?)?;
    if !kappa.is_one() {
        return Err(Error::RootExtraction(format!(
            "constant {kappa} of F_5 is not a fifth power; rescale time first"
        )));
    }
    Ok(a)
}

fn check_order(f: &Flow) -> Result<()> {
    if f.order != 5 {
        return Err(Error::Precondition(format!(
            "flow has order {}, expected 5",
            f.order
        )));
    }
    Ok(())
}

/// `ρ_0` and `ρ_1` from their closed forms.
pub fn rho0_rho1_closed(f: &Flow) -> Result<(Expr, Expr)> {
    let a = rho_minus1(f)?;
    closed_forms(f, &a)
}

fn closed_forms(f: &Flow, a: &Expr) -> Result<(Expr, Expr)> {
    let f3 = f.partial(3)?;
    let f4 = f.partial(4)?;
    let da = a.total_x()?;
    let a4 = a.pow(4)?;
    let a5 = a.pow(5)?;
    let rho0 = f4
        .try_mul(&a5)?
        .scale(&Q::new(-1, 5))
        .try_sub(&da.try_div(a)?.scale(&Q::from_int(2)))?;
    let terms = [
        f4.try_mul(&a4.total_x()?)?.scale(&Q::new(1, 2)),
        a4.try_mul(&f4.total_x()?)?.scale(&Q::new(2, 5)),
        a.pow(9)?.try_mul(&f4.pow(2)?)?.scale(&Q::new(2, 25)),
        a4.try_mul(&f3)?.scale(&Q::new(-1, 5)),
        da.pow(2)?.try_div(&a.pow(3)?)?.scale(&Q::from_int(-3)),
        da.total_x()?.try_div(&a.pow(2)?)?.scale(&Q::from_int(2)),
    ];
    let mut rho1 = Expr::zero();
    for t in &terms {
        rho1 = rho1.try_add(t)?;
    }
    Ok((rho0, rho1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    NotChecked,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::NotChecked => "not-checked",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Entry {
    pub n: i32,
    pub rho: Expr,
    pub theta: Option<Expr>,
    pub status: Status,
    /// Residue of `D_t ρ_n` after order lowering, on failure.
    pub residue: Option<Expr>,
    pub elapsed_ms: u128,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Rho,
    DRho,
}

/// Canonical densities of one flow, built by the recurrence.
///
/// The flow is rescaled in time by `1/time_scale` when the constant of
/// `F_5` is not a rational fifth power; condition verdicts do not depend on
/// that scaling.
pub struct DensityChain {
    pub flow: Flow,
    pub time_scale: Q,
    pub entries: Vec<Entry>,
    partials: Vec<Expr>,
    dx: HashMap<(i32, usize), Expr>,
    sums: HashMap<(Vec<Kind>, i32, i32), Expr>,
    /// Index bound in force for restricted sums (densities above it count as 0).
    limit: i32,
}

impl DensityChain {
    pub fn new(flow: &Flow) -> Result<DensityChain> {
        check_order(flow)?;
        let (kappa, a) = fifth_root_inv(&flow.partial(5)?)?;
        let flow = if kappa.is_one() {
            flow.clone()
        } else {
            Flow::new(flow.rhs.scale(&kappa.recip()))?
        };
        let partials = (0..=5)
            .map(|i| flow.partial(i))
            .collect::<Result<Vec<_>>>()?;
        let mut chain = DensityChain {
            flow,
            time_scale: kappa,
            entries: Vec::new(),
            partials,
            dx: HashMap::new(),
            sums: HashMap::new(),
            limit: -1,
        };
        chain.push(-1, a);
        Ok(chain)
    }

    fn push(&mut self, n: i32, rho: Expr) {
        self.entries.push(Entry {
            n,
            rho,
            theta: None,
            status: Status::NotChecked,
            residue: None,
            elapsed_ms: 0,
        });
        self.limit = n;
    }

    /// Largest `n` with `ρ_n` available.
    pub fn top(&self) -> i32 {
        self.entries.last().map(|e| e.n).unwrap_or(-2)
    }

    pub fn rho(&self, n: i32) -> Option<&Expr> {
        if n < -1 {
            return None;
        }
        self.entries.get((n + 1) as usize).map(|e| &e.rho)
    }

    pub fn entry(&self, n: i32) -> Option<&Entry> {
        if n < -1 {
            return None;
        }
        self.entries.get((n + 1) as usize)
    }

    fn theta(&self, n: i32) -> Result<Expr> {
        if n < -1 {
            return Ok(Expr::zero());
        }
        self.entry(n)
            .and_then(|e| e.theta.clone())
            .ok_or_else(|| Error::Precondition(format!("flux for density {n} is not available")))
    }

    /// `D_x^k ρ_n`, zero for `n ≤ -2`.
    fn d(&mut self, n: i32, k: usize) -> Result<Expr> {
        if n < -1 || n > self.limit {
            return Ok(Expr::zero());
        }
        if k == 0 {
            return Ok(self.rho(n).unwrap().clone());
        }
        if let Some(e) = self.dx.get(&(n, k)) {
            return Ok(e.clone());
        }
        let e = self.d(n, k - 1)?.total_x()?;
        self.dx.insert((n, k), e.clone());
        Ok(e)
    }

    /// `Σ_{-1}^{b} g_1(ρ_{I_1}) ⋯ g_k(ρ_{I_k})` with `g = ρ` or `D_x ρ` per
    /// `kinds`, over ordered tuples with indices `≥ -1` summing to `b`.
    pub fn restricted_sum(&mut self, kinds: &[Kind], b: i32) -> Result<Expr> {
        let k = kinds.len() as i32;
        if k == 0 {
            return Ok(if b == 0 { Expr::one() } else { Expr::zero() });
        }
        if b < -k {
            return Ok(Expr::zero());
        }
        let hi = (b + k - 1).min(self.limit);
        if b + k - 1 > self.limit + 1 {
            return Err(Error::Precondition(format!(
                "restricted sum at {b} needs densities beyond {}",
                self.limit
            )));
        }
        let key = (kinds.to_vec(), b, hi);
        if let Some(e) = self.sums.get(&key) {
            return Ok(e.clone());
        }
        let mut acc = Expr::zero();
        for i in -1..=hi {
            let rest = self.restricted_sum(&kinds[1..], b - i)?;
            if rest.is_zero() {
                continue;
            }
            let head = self.d(i, if kinds[0] == Kind::DRho { 1 } else { 0 })?;
            if head.is_zero() {
                continue;
            }
            acc = acc.try_add(&head.try_mul(&rest)?)?;
        }
        self.sums.insert(key, acc.clone());
        Ok(acc)
    }

    fn s(&mut self, k: usize, b: i32) -> Result<Expr> {
        self.restricted_sum(&vec![Kind::Rho; k], b)
    }

    /// `ρ_{n+4}` from the recurrence; needs `ρ_{-1..n+3}` and `θ_n`.
    pub fn recurrence_step(&mut self, n: i32) -> Result<Expr> {
        if n < -4 {
            return Err(Error::Precondition("recurrence starts at n = -4".into()));
        }
        if self.top() < n + 3 {
            return Err(Error::Precondition(format!("density {} is missing", n + 3)));
        }
        let saved = self.limit;
        self.limit = n + 3;
        let r = self.step_inner(n);
        self.limit = saved;
        r
    }

    fn step_inner(&mut self, n: i32) -> Result<Expr> {
        use Kind::{DRho, Rho};
        let q = |a: i64, b: i64| Q::new(a, b);
        let a = self.rho(-1).unwrap().clone();
        let f = self.partials.clone();
        let theta = self.theta(n)?;
        let s2 = self.s(2, n)?;
        let s3 = self.s(3, n)?;
        let s4 = self.s(4, n)?;
        let s5 = self.s(5, n)?;
        let dd = self.restricted_sum(&[DRho, DRho], n)?;
        let rdd = self.restricted_sum(&[Rho, DRho, DRho], n)?;
        let mut rho = |k| self.d(n, k);
        let (r0, r1, r2, r3, r4) = (rho(0)?, rho(1)?, rho(2)?, rho(3)?, rho(4)?);
        let ds2 = s2.total_x()?;
        let dds2 = ds2.total_x()?;
        let ddds2 = dds2.total_x()?;
        let ds3 = s3.total_x()?;
        let dds3 = ds3.total_x()?;
        let ds4 = s4.total_x()?;
        let ddd = dd.total_x()?;

        // group 1: F_0 δ + F_1 ρ + F_2 D_x ρ + F_2 Σρρ + F_3 D_x² ρ
        let mut g1 = f[1].try_mul(&r0)?;
        if n == 0 {
            g1 = g1.try_add(&f[0])?;
        }
        g1 = g1.try_add(&f[2].try_mul(&r1.try_add(&s2)?)?)?;
        g1 = g1.try_add(&f[3].try_mul(&r2)?)?;
        // F_3 (3/2 D_x Σρρ + Σρρρ)
        let g2 = f[3].try_mul(&ds2.scale(&q(3, 2)).try_add(&s3)?)?;
        // F_4 (D_x³ ρ + 2 D_x² Σρρ - ΣDρDρ + 2 D_x Σρρρ + Σρρρρ)
        let g3 = f[4].try_mul(
            &r3.try_add(&dds2.scale(&q(2, 1)))?
                .try_sub(&dd)?
                .try_add(&ds3.scale(&q(2, 1)))?
                .try_add(&s4)?,
        )?;
        let lin = g1.try_add(&g2)?.try_add(&g3)?;
        let head = theta.try_sub(&lin)?.try_mul(&a)?.scale(&q(1, 5));

        let tail = [
            r4.scale(&q(1, 5)),
            ddds2.scale(&q(1, 2)),
            ddd.scale(&q(-1, 2)),
            dds3.scale(&q(2, 3)),
            rdd.neg(),
            ds4.scale(&q(1, 2)),
            s5.scale(&q(1, 5)),
        ];
        let mut t = Expr::zero();
        for x in &tail {
            t = t.try_add(x)?;
        }
        head.try_sub(&t.try_div(&a.pow(4)?)?)
    }

    /// Builds `ρ_{n+4}` and appends it.
    pub fn extend(&mut self, n: i32) -> Result<()> {
        if self.top() != n + 3 {
            return Err(Error::Precondition(format!(
                "chain top is {}, expected {}",
                self.top(),
                n + 3
            )));
        }
        let r = self.recurrence_step(n)?;
        self.push(n + 4, r);
        Ok(())
    }

    /// Checks `D_t ρ_n ∼ 0`, storing `θ_n` on success.
    ///
    /// `ρ_n` is first reduced modulo `Im D_x` to keep orders low;
    /// `θ_n = θ̃ + D_t Q` for `ρ_n = ρ̃ + D_x Q`.
    pub fn check(&mut self, n: i32) -> Result<Status> {
        let start = Instant::now();
        let rho = self
            .rho(n)
            .ok_or_else(|| Error::Precondition(format!("density {n} is missing")))?
            .clone();
        let (red, q) = reduce(&rho)?;
        let s = self.flow.dt(&red)?;
        let res: ExactnessResult = is_exact(&s)?;
        let idx = (n + 1) as usize;
        if res.is_exact() {
            let mut theta = res.flux;
            if !q.is_zero() {
                theta = theta.try_add(&self.flow.dt(&q)?)?;
            }
            self.entries[idx].theta = Some(theta);
            self.entries[idx].status = Status::Pass;
        } else {
            self.entries[idx].residue = Some(res.residue);
            self.entries[idx].status = Status::Fail;
        }
        self.entries[idx].elapsed_ms = start.elapsed().as_millis();
        Ok(self.entries[idx].status)
    }

    /// Makes `ρ_n` available, extending by the recurrence as needed.
    pub fn ensure(&mut self, n: i32) -> Result<()> {
        while self.top() < n {
            let m = self.top() - 3;
            if m >= -1 && self.entry(m).map(|e| e.status) != Some(Status::Pass) {
                return Err(Error::Precondition(format!("condition {m} has not passed")));
            }
            self.extend(m)?;
        }
        Ok(())
    }

    /// Replaces the stored flux `θ_n` (e.g. to shift its constant).
    pub fn set_theta(&mut self, n: i32, theta: Expr) -> Result<()> {
        let idx = (n + 1) as usize;
        let e = self
            .entries
            .get_mut(idx)
            .ok_or_else(|| Error::Precondition(format!("density {n} is missing")))?;
        e.theta = Some(theta);
        Ok(())
    }

    /// Closed-form `(ρ_0, ρ_1)` for the (rescaled) flow of this chain.
    pub fn closed_forms(&self) -> Result<(Expr, Expr)> {
        closed_forms(&self.flow, self.rho(-1).unwrap())
    }
}
