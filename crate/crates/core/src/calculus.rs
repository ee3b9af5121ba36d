//! Differential operators on the jet ring.

use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::var::{Var, MAX_JET};

/// Total x-derivative `D_x`.
pub fn total_x(e: &Expr) -> Result<Expr> {
    e.total_x()
}

/// `D_x^k e`.
pub fn total_x_pow(e: &Expr, k: usize) -> Result<Expr> {
    let mut acc = e.clone();
    for _ in 0..k {
        acc = acc.total_x()?;
    }
    Ok(acc)
}

/// `∂e/∂u_i`, jets treated as independent coordinates.
pub fn jet_partial(e: &Expr, i: usize) -> Result<Expr> {
    e.jet_partial(i)
}

/// Highest jet order `e` depends on (`None` when jet-free).
pub fn order(e: &Expr) -> Option<usize> {
    e.max_jet()
}

/// Variational derivative `Σ (-D_x)^i ∂H/∂u_i`.
pub fn euler(h: &Expr) -> Result<Expr> {
    let Some(n) = h.max_jet() else {
        return Ok(Expr::zero());
    };
    if n > 6 {
        return Err(Error::OrderOverflow(n));
    }
    let mut acc = h.jet_partial(n)?;
    for i in (0..n).rev() {
        acc = h.jet_partial(i)?.sub(&acc.total_x()?);
    }
    Ok(acc)
}

/// Linearization of `f` applied to `g`: `Σ ∂f/∂u_i D_x^i g`.
pub fn frechet(f: &Expr, g: &Expr) -> Result<Expr> {
    let Some(n) = f.max_jet() else {
        return Ok(Expr::zero());
    };
    let mut acc = Expr::zero();
    let mut dg = g.clone();
    for i in 0..=n {
        if i > 0 {
            dg = dg.total_x()?;
        }
        let fi = f.jet_partial(i)?;
        if !fi.is_zero() {
            acc = acc.try_add(&fi.try_mul(&dg)?)?;
        }
    }
    Ok(acc)
}

/// `D_t e` along `u_t = f`: `Σ D_x^i(f) ∂e/∂u_i`.
pub fn dt_along(f: &Expr, e: &Expr) -> Result<Expr> {
    frechet(e, f)
}

/// Right-hand side of `u_t = F` with cached total derivatives.
#[derive(Clone)]
pub struct Flow {
    pub rhs: Expr,
    pub order: usize,
    cache: Arc<Mutex<Vec<Expr>>>,
}

impl std::fmt::Debug for Flow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Flow(order {}, {})", self.order, self.rhs)
    }
}

impl Flow {
    pub fn new(rhs: Expr) -> Result<Flow> {
        let order = rhs
            .max_jet()
            .ok_or_else(|| Error::Precondition("flow does not depend on any jet".into()))?;
        Ok(Flow {
            cache: Arc::new(Mutex::new(vec![rhs.clone()])),
            rhs,
            order,
        })
    }

    /// `D_x^k F`, computed once.
    pub fn dx(&self, k: usize) -> Result<Expr> {
        if self.order + k > MAX_JET {
            return Err(Error::OrderOverflow(self.order + k));
        }
        let mut c = self.cache.lock().unwrap();
        while c.len() <= k {
            let next = c.last().unwrap().total_x()?;
            c.push(next);
        }
        Ok(c[k].clone())
    }

    /// `F_i = ∂F/∂u_i`.
    pub fn partial(&self, i: usize) -> Result<Expr> {
        self.rhs.jet_partial(i)
    }

    /// `D_t e` using the cached derivatives of `F`.
    pub fn dt(&self, e: &Expr) -> Result<Expr> {
        let Some(n) = e.max_jet() else {
            return Ok(Expr::zero());
        };
        let mut acc = Expr::zero();
        for i in 0..=n {
            let ei = e.jet_partial(i)?;
            if ei.is_zero() {
                continue;
            }
            acc = acc.try_add(&ei.try_mul(&self.dx(i)?)?)?;
        }
        Ok(acc)
    }
}

/// Whether `e` depends on `x` explicitly.
pub fn depends_on_x(e: &Expr) -> bool {
    e.depends_on(Var::X)
}
