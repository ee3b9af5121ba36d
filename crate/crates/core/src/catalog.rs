//! The shipped corpus of Hamiltonians, flows and families.
//!
//! Entries live in `catalog/` as text in the expression grammar; the
//! manifest lists id, source, parameter slots, expected status, symmetry
//! partner and a short note.

use crate::calculus::{euler, Flow};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::hamiltonian::{flow_of, Hamiltonian};
use crate::integrability::{check_conditions, commutator, CheckOptions};
use crate::parse::{parse_document, parse_with};
use crate::rational::Q;
use crate::var::{self, Var};

const MANIFEST: &str = include_str!("../catalog/manifest.txt");

const FILES: &[(&str, &str)] = &[
    ("b11.ham", include_str!("../catalog/b11.ham")),
    ("b11a.ham", include_str!("../catalog/b11a.ham")),
    ("b12_h1.ham", include_str!("../catalog/b12_h1.ham")),
    (
        "b12_h1_sym.flow",
        include_str!("../catalog/b12_h1_sym.flow"),
    ),
    ("b12_h2.ham", include_str!("../catalog/b12_h2.ham")),
    (
        "b12_h2_sym.flow",
        include_str!("../catalog/b12_h2_sym.flow"),
    ),
    ("b13.ham", include_str!("../catalog/b13.ham")),
    ("b13a_h1.ham", include_str!("../catalog/b13a_h1.ham")),
    (
        "b13a_h1_sym.flow",
        include_str!("../catalog/b13a_h1_sym.flow"),
    ),
    ("b13a_h2.ham", include_str!("../catalog/b13a_h2.ham")),
    (
        "b13a_h2_sym.flow",
        include_str!("../catalog/b13a_h2_sym.flow"),
    ),
    ("b13a_h3.ham", include_str!("../catalog/b13a_h3.ham")),
    ("b13b.ham", include_str!("../catalog/b13b.ham")),
    ("b13b_sym.flow", include_str!("../catalog/b13b_sym.flow")),
    ("eq10.ham", include_str!("../catalog/eq10.ham")),
    ("eq7.ham", include_str!("../catalog/eq7.ham")),
    ("eq8.ham", include_str!("../catalog/eq8.ham")),
    ("eq9.ham", include_str!("../catalog/eq9.ham")),
    ("h1.ham", include_str!("../catalog/h1.ham")),
    ("h2.ham", include_str!("../catalog/h2.ham")),
    ("h3.ham", include_str!("../catalog/h3.ham")),
    ("h4.ham", include_str!("../catalog/h4.ham")),
    ("h5.ham", include_str!("../catalog/h5.ham")),
    ("kdv.flow", include_str!("../catalog/kdv.flow")),
    ("kdv5.flow", include_str!("../catalog/kdv5.flow")),
    ("kdv5.ham", include_str!("../catalog/kdv5.ham")),
    ("mkdv.flow", include_str!("../catalog/mkdv.flow")),
    ("mkdv5.ham", include_str!("../catalog/mkdv5.ham")),
    (
        "neg_eleventh.flow",
        include_str!("../catalog/neg_eleventh.flow"),
    ),
    ("neg_ninth.flow", include_str!("../catalog/neg_ninth.flow")),
    ("sym7.density", include_str!("../catalog/sym7.density")),
];

/// Raw text of a shipped catalog file.
pub fn file(name: &str) -> Option<&'static str> {
    FILES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expected {
    Integrable,
    /// Parametric family whose integrability depends on constraints.
    Family,
    /// Fails some condition with index `≤ n`; when `unless_zero` names a
    /// slot, only for nonzero values of it.
    FailBy {
        n: i32,
        unless_zero: Option<String>,
    },
    /// Lower- or higher-order flow used as a symmetry partner.
    Partner {
        order: usize,
    },
}

impl Expected {
    fn parse(s: &str) -> Result<Expected> {
        let s = s.trim();
        Ok(match s {
            "integrable" => Expected::Integrable,
            "family" => Expected::Family,
            "third-order" => Expected::Partner { order: 3 },
            "seventh-order" => Expected::Partner { order: 7 },
            _ => {
                let rest = s
                    .strip_prefix("fail-by:")
                    .ok_or_else(|| Error::Other(format!("bad status `{s}`")))?;
                let (n, cond) = match rest.split_once(" if ") {
                    Some((n, c)) => (n, Some(c.trim().to_string())),
                    None => (rest, None),
                };
                let n = n
                    .trim()
                    .parse()
                    .map_err(|_| Error::Other(format!("bad status `{s}`")))?;
                Expected::FailBy {
                    n,
                    unless_zero: cond,
                }
            }
        })
    }

    pub fn describe(&self) -> String {
        match self {
            Expected::Integrable => "integrable".into(),
            Expected::Family => "family".into(),
            Expected::FailBy {
                n,
                unless_zero: None,
            } => format!("non-integrable (fails by n={n})"),
            Expected::FailBy {
                n,
                unless_zero: Some(c),
            } => format!("non-integrable for {c} != 0 (fails by n={n})"),
            Expected::Partner { order } => format!("order-{order} partner"),
        }
    }
}

/// One manifest row.
#[derive(Clone, Debug)]
pub struct Spec {
    pub id: String,
    pub source: String,
    pub slots: Vec<String>,
    pub expected: Expected,
    pub pairs_with: Option<String>,
    pub note: String,
}

#[derive(Clone, Debug)]
pub enum Body {
    Hamiltonian(Hamiltonian),
    Flow(Expr),
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub spec: Spec,
    pub body: Body,
    /// Slots still symbolic.
    pub free: Vec<String>,
    pub bindings: Vec<(String, Q)>,
}

impl CatalogEntry {
    pub fn id(&self) -> &str {
        &self.spec.id
    }

    pub fn flow(&self) -> Result<Flow> {
        match &self.body {
            Body::Hamiltonian(h) => flow_of(h),
            Body::Flow(f) => Flow::new(f.clone()),
        }
    }

    pub fn hamiltonian(&self) -> Option<&Hamiltonian> {
        match &self.body {
            Body::Hamiltonian(h) => Some(h),
            Body::Flow(_) => None,
        }
    }

    pub fn free_vars(&self) -> Result<Vec<Var>> {
        self.free.iter().map(|p| var::param(p)).collect()
    }

    /// Expected status under the entry's bindings.
    pub fn expected(&self) -> Expected {
        match &self.spec.expected {
            Expected::FailBy {
                n,
                unless_zero: Some(c),
            } => {
                let zero = self.bindings.iter().any(|(k, v)| k == c && v.is_zero());
                if zero {
                    Expected::Integrable
                } else {
                    Expected::FailBy {
                        n: *n,
                        unless_zero: Some(c.clone()),
                    }
                }
            }
            e => e.clone(),
        }
    }
}

/// All manifest rows in order.
pub fn specs() -> Vec<Spec> {
    let mut out = Vec::new();
    for line in MANIFEST.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('|').map(str::trim).collect();
        if f.len() != 6 {
            panic!("malformed catalog manifest line: {line}");
        }
        out.push(Spec {
            id: f[0].to_string(),
            source: f[1].to_string(),
            slots: f[2].split_whitespace().map(String::from).collect(),
            expected: Expected::parse(f[3]).expect("catalog status"),
            pairs_with: (!f[4].is_empty()).then(|| f[4].to_string()),
            note: f[5].to_string(),
        });
    }
    out
}

pub fn ids() -> Vec<String> {
    specs().into_iter().map(|s| s.id).collect()
}

/// Looks up a manifest row; `-` and `_` are interchangeable in ids.
pub fn spec(id: &str) -> Result<Spec> {
    let key = id.replace('-', "_");
    specs()
        .into_iter()
        .find(|s| s.id == key)
        .ok_or_else(|| Error::UnknownEntry(id.to_string()))
}

fn q_poly(prefix: &str, n: usize) -> Result<Expr> {
    let mut acc = Expr::zero();
    for i in 0..n {
        let c = Expr::param(&format!("{prefix}{i}"))?;
        acc = acc.try_add(&c.try_mul(&Expr::u(0).pow(i as i32)?)?)?;
    }
    Ok(acc)
}

fn builtin(name: &str) -> Result<Body> {
    match name {
        "b2a" => Ok(Body::Hamiltonian(family_b2a(
            &q_poly("q", 5)?,
            &Expr::param("c0")?,
        )?)),
        "b2a_sym" => Ok(Body::Flow(b2a_symmetry(&q_poly("q", 5)?)?)),
        "sym7" => Ok(Body::Flow(seventh_order_symmetry()?)),
        _ => Err(Error::UnknownEntry(name.to_string())),
    }
}

/// The entry with every slot left symbolic.
pub fn template(id: &str) -> Result<CatalogEntry> {
    let spec = spec(id)?;
    let body = if let Some(b) = spec.source.strip_prefix("builtin:") {
        builtin(b)?
    } else {
        let text = file(&spec.source).ok_or_else(|| Error::UnknownEntry(spec.source.clone()))?;
        let doc = parse_document(text)?;
        if spec.source.ends_with(".flow") {
            Body::Flow(doc.expr)
        } else {
            Body::Hamiltonian(Hamiltonian::new(doc.expr)?)
        }
    };
    Ok(CatalogEntry {
        free: spec.slots.clone(),
        spec,
        body,
        bindings: Vec::new(),
    })
}

/// Instantiates an entry; every slot must be bound.
pub fn get(id: &str, bindings: &[(String, Q)]) -> Result<CatalogEntry> {
    let t = template(id)?;
    for (k, _) in bindings {
        if !t.spec.slots.contains(k) {
            return Err(Error::Precondition(format!("entry {id} has no slot {k}")));
        }
    }
    for s in &t.spec.slots {
        if !bindings.iter().any(|(k, _)| k == s) {
            return Err(Error::UnboundSlot(s.clone()));
        }
    }
    bind(t, bindings)
}

/// Binds some slots, leaving the rest symbolic.
pub fn bind(mut t: CatalogEntry, bindings: &[(String, Q)]) -> Result<CatalogEntry> {
    let vals: Vec<(Var, Q)> = bindings
        .iter()
        .map(|(k, v)| Ok((var::param(k)?, v.clone())))
        .collect::<Result<Vec<_>>>()?;
    t.body = match t.body {
        Body::Hamiltonian(h) => Body::Hamiltonian(Hamiltonian {
            h: h.h.bind(&vals)?,
            conformal: h.conformal,
        }),
        Body::Flow(f) => Body::Flow(f.bind(&vals)?),
    };
    t.free.retain(|s| !bindings.iter().any(|(k, _)| k == s));
    t.bindings.extend(bindings.iter().cloned());
    Ok(t)
}

/// An entry whose engine verdict disagrees with its expected status.
#[derive(Clone, Debug)]
pub struct Discrepancy {
    pub id: String,
    pub expected: String,
    pub observed: String,
}

/// Checks an instantiated entry against its expected status up to `max_n`,
/// and against its symmetry partner when one is listed.
pub fn audit(e: &CatalogEntry, max_n: i32, opts: &CheckOptions) -> Result<Option<Discrepancy>> {
    let flag = |observed: String| {
        Some(Discrepancy {
            id: e.spec.id.clone(),
            expected: e.expected().describe(),
            observed,
        })
    };
    let f = e.flow()?;
    if let Some(p) = &e.spec.pairs_with {
        let ps = spec(p)?;
        let b: Vec<(String, Q)> = e
            .bindings
            .iter()
            .filter(|(k, _)| ps.slots.contains(k))
            .cloned()
            .collect();
        let g = get(p, &b)?.flow()?;
        let c = commutator(&f.rhs, &g.rhs)?;
        if !c.is_zero() {
            return Ok(flag(format!("does not commute with {p}")));
        }
    }
    match e.expected() {
        Expected::Partner { order } => Ok((f.order != order)
            .then(|| flag(format!("flow has order {}", f.order)))
            .flatten()),
        Expected::Integrable | Expected::Family => {
            let rep = check_conditions(&e.spec.id, &f, max_n, opts)?;
            Ok(rep
                .first_failure
                .and_then(|n| flag(format!("fails condition n={n}"))))
        }
        Expected::FailBy { n, .. } => {
            let rep = check_conditions(&e.spec.id, &f, n.min(max_n), opts)?;
            match rep.first_failure {
                Some(_) => Ok(None),
                None if max_n < n => Ok(None),
                None => Ok(flag(format!("passes through n={n}"))),
            }
        }
    }
}

/// Plain-text listing of discrepancies, one per line.
pub fn quarantine_report(found: &[Discrepancy]) -> String {
    if found.is_empty() {
        return "quarantine: empty\n".to_string();
    }
    let mut s = String::new();
    for d in found {
        s.push_str(&format!(
            "quarantine {}: expected {}, {}\n",
            d.id, d.expected, d.observed
        ));
    }
    s
}

fn check_q(q: &Expr) -> Result<()> {
    let ok = q.is_polynomial()
        && !q.depends_on(Var::X)
        && (1..=var::MAX_JET).all(|i| !q.depends_on(Var::jet(i)))
        && q.num().deg(Var::jet(0)) <= 4;
    if ok {
        Ok(())
    } else {
        Err(Error::Precondition(
            "q must be a polynomial in u of degree at most 4".into(),
        ))
    }
}

/// `H = ½u_xx²a⁻⁵ + (10/3)a(q″ + c0) − ½(qq′)²a⁻⁵ + (1/3)(2q²q″ + 5qq′²)a⁻³
/// + (5/6)a⁻¹(q′² − 8qq″)` with `a² = u_x + q(u)`.
pub fn family_b2a(q: &Expr, c0: &Expr) -> Result<Hamiltonian> {
    check_q(q)?;
    let u = Var::jet(0);
    let q1 = q.partial(u)?;
    let q2 = q1.partial(u)?;
    let a = Expr::pow_rational(&Expr::u(1).try_add(q)?, 1, 2)?;
    let ai = |k: i32| a.pow(-k);
    let fr = |n: i64, d: i64| Q::new(n, d);
    let t1 = Expr::u(2).pow(2)?.scale(&fr(1, 2)).try_mul(&ai(5)?)?;
    let t2 = a.try_mul(&q2.try_add(c0)?)?.scale(&fr(10, 3));
    let t3 = q.try_mul(&q1)?.pow(2)?.scale(&fr(-1, 2)).try_mul(&ai(5)?)?;
    let t4 = q
        .pow(2)?
        .try_mul(&q2)?
        .scale(&fr(2, 1))
        .try_add(&q.try_mul(&q1.pow(2)?)?.scale(&fr(5, 1)))?;
    let t4 = t4.scale(&fr(1, 3)).try_mul(&ai(3)?)?;
    let t5 = q1
        .pow(2)?
        .try_sub(&q.try_mul(&q2)?.scale(&fr(8, 1)))?
        .scale(&fr(5, 6))
        .try_mul(&ai(1)?)?;
    let h = t1.try_add(&t2)?.try_add(&t3)?.try_add(&t4)?.try_add(&t5)?;
    Hamiltonian::new(h)
}

/// Third-order partner `D_x(u_xx a⁻³ + q′(3a⁻¹ − q a⁻³))`.
pub fn b2a_symmetry(q: &Expr) -> Result<Expr> {
    check_q(q)?;
    let q1 = q.partial(Var::jet(0))?;
    let a = Expr::pow_rational(&Expr::u(1).try_add(q)?, 1, 2)?;
    let a1 = a.pow(-1)?;
    let a3 = a.pow(-3)?;
    let inner = Expr::u(2)
        .try_mul(&a3)?
        .try_add(&q1.try_mul(&a1.scale(&Q::from_int(3)).try_sub(&q.try_mul(&a3)?)?)?)?;
    inner.total_x()
}

/// `D_x δ/δu (u_3² u_2^{-7/3})`.
pub fn seventh_order_symmetry() -> Result<Expr> {
    let doc = parse_document(file("sym7.density").unwrap())?;
    euler(&doc.expr)?.total_x()
}

/// `H₂ = u_xx²/(2u⁵) − (15/8)u_x⁴/u⁷ + ½s u_x²/u + (1/50)s²u⁵ − (u/3)s″` for
/// `s(x)` of degree at most 4.
pub fn family_b12(s2: &Expr) -> Result<Hamiltonian> {
    let ok = s2.is_polynomial()
        && (0..=var::MAX_JET).all(|i| !s2.depends_on(Var::jet(i)))
        && s2.params().is_empty()
        && s2.num().deg(Var::X) <= 4;
    if !ok {
        return Err(Error::Precondition(
            "s2 must be a polynomial in x of degree at most 4".into(),
        ));
    }
    let u = Expr::u(0);
    let (u1, u2) = (Expr::u(1), Expr::u(2));
    let s_xx = s2.partial(Var::X)?.partial(Var::X)?;
    let h = u2
        .pow(2)?
        .try_div(&u.pow(5)?.scale(&Q::from_int(2)))?
        .try_sub(&u1.pow(4)?.try_div(&u.pow(7)?)?.scale(&Q::new(15, 8)))?
        .try_add(&s2.try_mul(&u1.pow(2)?)?.try_div(&u)?.scale(&Q::new(1, 2)))?
        .try_add(&s2.pow(2)?.try_mul(&u.pow(5)?)?.scale(&Q::new(1, 50)))?
        .try_sub(&u.try_mul(&s_xx)?.scale(&Q::new(1, 3)))?;
    Hamiltonian::new(h)
}

/// The `μ = u² + z` Hamiltonian with parameters `k₁, k₂, k₃`; needs `z ≠ 0`.
pub fn family_b13(k1: &Q, k2: &Q, k3: &Q, z: &Q) -> Result<Hamiltonian> {
    if z.is_zero() {
        return Err(Error::Precondition("family needs z != 0".into()));
    }
    let b = [("k1", k1), ("k2", k2), ("k3", k3), ("z", z)].map(|(k, v)| (k.to_string(), v.clone()));
    match get("b13b", &b)?.body {
        Body::Hamiltonian(h) => Ok(h),
        Body::Flow(_) => unreachable!(),
    }
}

/// Third-order Hamiltonians of the three integrable types, instantiated with
/// the given polynomials, as flows `D_x(δH/δu)`.
pub fn third_order_flow(kind: ThirdOrderKind) -> Result<Flow> {
    let h = match kind {
        ThirdOrderKind::Rational { p, q } => {
            let u1 = Expr::u(1);
            u1.pow(2)?
                .scale(&Q::new(-1, 2))
                .try_div(&q.pow(3)?)?
                .try_add(&p.try_div(&q)?)?
        }
        ThirdOrderKind::InverseCube { p } => Expr::u(1)
            .pow(2)?
            .scale(&Q::new(-1, 2))
            .try_div(&Expr::u(0).pow(3)?)?
            .try_add(&p.try_mul(&Expr::u(0).pow(3)?)?.scale(&Q::new(1, 3)))?,
        ThirdOrderKind::SquareRoot { p } => Expr::pow_rational(&Expr::u(1).try_add(&p)?, 1, 2)?,
    };
    Flow::new(euler(&h)?.total_x()?)
}

#[derive(Clone, Debug)]
pub enum ThirdOrderKind {
    /// `−u_x²/(2Q³) + P/Q`, `P(u)` of degree ≤ 4, `Q(u)` of degree ≤ 2.
    Rational { p: Expr, q: Expr },
    /// `−u_x²/(2u³) + (1/3)P(x)u³`.
    InverseCube { p: Expr },
    /// `√(u_x + P(u))`.
    SquareRoot { p: Expr },
}

/// Third-order flows of the catalog: KdV, mKdV and one instance of each
/// integrable type.
pub fn third_order_flows() -> Result<Vec<(String, Flow)>> {
    let p = |s: &str| parse_with(s, &[]);
    Ok(vec![
        ("kdv".into(), template("kdv")?.flow()?),
        ("mkdv".into(), template("mkdv")?.flow()?),
        (
            "rational".into(),
            third_order_flow(ThirdOrderKind::Rational {
                p: p("u^4 - 2*u + 1")?,
                q: p("u^2 + 1")?,
            })?,
        ),
        (
            "inverse-cube".into(),
            third_order_flow(ThirdOrderKind::InverseCube { p: p("x^2 + 3")? })?,
        ),
        (
            "square-root".into(),
            third_order_flow(ThirdOrderKind::SquareRoot { p: p("u^3 + u")? })?,
        ),
    ])
}
