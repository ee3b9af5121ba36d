//! Hamiltonian flows `u_t = D_x(δH/δu)` and canonical transformations.

use crate::calculus::{euler, Flow};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::rational::Q;
use crate::var::Var;

/// A Hamiltonian of jet order at most 2.
///
/// `conformal` is set by non-canonical point transformations: the flow is
/// then `v_t = f D_y(f δH/δv)` with `f` the stored factor.
#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    pub h: Expr,
    pub conformal: Option<Expr>,
}

impl Hamiltonian {
    pub fn new(h: Expr) -> Result<Hamiltonian> {
        if h.max_jet().is_some_and(|k| k > 2) {
            return Err(Error::Precondition(
                "Hamiltonian depends on jets above u2".into(),
            ));
        }
        Ok(Hamiltonian { h, conformal: None })
    }

    pub fn is_tagged(&self) -> bool {
        self.conformal.is_some()
    }
}

/// `F = D_x(δH/δu)`.
pub fn flow_of(h: &Hamiltonian) -> Result<Flow> {
    if h.is_tagged() {
        return Err(Error::Precondition(
            "non-canonical Hamiltonian; use conformal_flow".into(),
        ));
    }
    let e = euler(&h.h)?;
    if e.is_zero() {
        return Err(Error::Precondition("Hamiltonian is trivial".into()));
    }
    Flow::new(e.total_x()?)
}

/// `f D_x(f δH/δu)` for a tagged Hamiltonian (plain flow when untagged).
pub fn conformal_flow(h: &Hamiltonian) -> Result<Flow> {
    let Some(f) = &h.conformal else {
        return flow_of(h);
    };
    let e = euler(&h.h)?;
    Flow::new(f.try_mul(&f.try_mul(&e)?.total_x()?)?)
}

/// Point transformation `x = φ(y, v)`, `u = ψ(y, v)`, written with `x`
/// standing for `y` and `u` for `v`.
#[derive(Clone, Debug)]
pub struct PointTransformation {
    pub phi: Expr,
    pub psi: Expr,
}

impl PointTransformation {
    pub fn new(phi: Expr, psi: Expr) -> Result<PointTransformation> {
        for e in [&phi, &psi] {
            if e.max_jet().is_some_and(|k| k > 0) || e.radical().is_some() || !e.den().is_empty() {
                return Err(Error::Precondition(
                    "transformation must be polynomial in x and u".into(),
                ));
            }
            if e.num().total_degree() > 4 {
                return Err(Error::Precondition("transformation degree above 4".into()));
            }
        }
        Ok(PointTransformation { phi, psi })
    }

    /// `Δ = φ_y ψ_v − φ_v ψ_y`.
    pub fn delta(&self) -> Result<Expr> {
        let (x, u) = (Var::X, Var::jet(0));
        self.phi
            .partial(x)?
            .try_mul(&self.psi.partial(u)?)?
            .try_sub(&self.phi.partial(u)?.try_mul(&self.psi.partial(x)?)?)
    }

    pub fn is_canonical(&self) -> Result<bool> {
        Ok(self.delta()?.is_one())
    }

    /// Images of `x, u, u_1, ..., u_k` in the new variables.
    pub fn jet_images(&self, k: usize) -> Result<Vec<(Var, Expr)>> {
        let dphi = self.phi.total_x()?;
        let mut out = vec![(Var::X, self.phi.clone()), (Var::jet(0), self.psi.clone())];
        let mut cur = self.psi.clone();
        for i in 1..=k {
            cur = cur.total_x()?.try_div(&dphi)?;
            out.push((Var::jet(i), cur.clone()));
        }
        Ok(out)
    }

    /// Transported flow `v_t = F / (ψ_v − u_x φ_v)` for `u_t = F`.
    pub fn pushforward(&self, f: &Flow) -> Result<Flow> {
        let subs = self.jet_images(f.order)?;
        let g = f.rhs.subst(&subs)?;
        let u1 = &subs[2].1;
        let factor = self
            .psi
            .partial(Var::jet(0))?
            .try_sub(&u1.try_mul(&self.phi.partial(Var::jet(0))?)?)?;
        Flow::new(g.try_div(&factor)?)
    }
}

/// `H̃ = H(φ, ψ, D_yψ/D_yφ, ...) D_yφ`; tagged with `f = Δ^{-1}` unless
/// `Δ = 1`.
pub fn transform_point(h: &Hamiltonian, t: &PointTransformation) -> Result<Hamiltonian> {
    let delta = t.delta()?;
    if delta.is_zero() {
        return Err(Error::Precondition(
            "transformation is not invertible".into(),
        ));
    }
    let subs = t.jet_images(2)?;
    let ht = h.h.subst(&subs)?.try_mul(&t.phi.total_x()?)?;
    if ht.max_jet().is_some_and(|k| k > 2) {
        return Err(Error::Precondition(
            "transformed Hamiltonian exceeds order 2".into(),
        ));
    }
    let conformal = if delta.is_one() {
        h.conformal.clone()
    } else {
        let f = delta.inv()?;
        Some(match &h.conformal {
            Some(g) => g.subst(&subs)?.try_mul(&f)?,
            None => f,
        })
    };
    Ok(Hamiltonian { h: ht, conformal })
}

/// `H̃ = α/(βγ²) H(βy, γv, (γ/β)v_y, (γ/β²)v_yy)`.
pub fn transform_dilate(h: &Hamiltonian, alpha: &Q, beta: &Q, gamma: &Q) -> Result<Hamiltonian> {
    if alpha.is_zero() || beta.is_zero() || gamma.is_zero() {
        return Err(Error::Precondition("zero scale".into()));
    }
    let subs = vec![
        (Var::X, Expr::x().scale(beta)),
        (Var::jet(0), Expr::u(0).scale(gamma)),
        (Var::jet(1), Expr::u(1).scale(&(gamma / beta))),
        (Var::jet(2), Expr::u(2).scale(&(gamma / &(beta * beta)))),
    ];
    let k = alpha / &(beta * &(gamma * gamma));
    Ok(Hamiltonian {
        h: h.h.subst(&subs)?.scale(&k),
        conformal: h.conformal.clone(),
    })
}

/// `H̃ = H − ½ c v²`, for `x`-independent `H`.
pub fn transform_galilean(h: &Hamiltonian, c: &Q) -> Result<Hamiltonian> {
    if h.h.depends_on(Var::X) {
        return Err(Error::Precondition(
            "Galilean transformation needs an x-independent Hamiltonian".into(),
        ));
    }
    let du = Expr::u(0).pow(2)?.scale(&(c * &Q::new(1, 2)));
    Ok(Hamiltonian {
        h: h.h.try_sub(&du)?,
        conformal: h.conformal.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ShiftKind {
    /// `H = h(u_x, u_xx) + c x u`, removed by `u → u + c t`.
    Linear(Q),
    /// `H = h(u_xx) + (c_1 x² + c_2 x) u`, removed by `u → u + (2c_1 x + c_2) t`.
    Quadratic(Q, Q),
}

pub fn transform_shift(h: &Hamiltonian, kind: &ShiftKind) -> Result<Hamiltonian> {
    let x = Expr::x();
    let (term, forbidden): (Expr, &[Var]) = match kind {
        ShiftKind::Linear(c) => (x.mul(&Expr::u(0)).scale(c), &[Var::X, Var::jet(0)]),
        ShiftKind::Quadratic(c1, c2) => {
            let p = x.pow(2)?.scale(c1).try_add(&x.scale(c2))?;
            (p.try_mul(&Expr::u(0))?, &[Var::X, Var::jet(0), Var::jet(1)])
        }
    };
    let rest = h.h.try_sub(&term)?;
    if forbidden.iter().any(|&v| rest.depends_on(v)) {
        return Err(Error::Precondition(
            "Hamiltonian does not have the shape required by the shift".into(),
        ));
    }
    Ok(Hamiltonian {
        h: rest,
        conformal: h.conformal.clone(),
    })
}

/// `Some(λ)` when `H_2 = H_1 + D_x f + λu`, detected by `δ(H_2 − H_1)/δu = λ`.
pub fn equivalent(h1: &Hamiltonian, h2: &Hamiltonian) -> Result<Option<Q>> {
    if h1.conformal != h2.conformal {
        return Ok(None);
    }
    Ok(euler(&h2.h.try_sub(&h1.h)?)?.constant_value())
}
