//! Integrability conditions `D_t ρ_n ∼ 0`, commutators and reports.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::calculus::{frechet, Flow};
use crate::densities::{DensityChain, Status};
use crate::error::{Error, Result};
use crate::exactness::{constraints_of, is_exact, reduce, Obstruction};
use crate::expr::Expr;
use crate::groebner;
use crate::poly::Poly;
use crate::var::Var;

#[derive(Clone, Debug)]
pub struct Record {
    pub n: i32,
    pub verdict: Status,
    pub elapsed_ms: u128,
    /// Content hash of the flux (pass) or residue (fail).
    pub digest: Option<String>,
}

#[derive(Clone, Debug)]
pub struct ConditionReport {
    pub flow_id: String,
    pub records: Vec<Record>,
    pub first_failure: Option<i32>,
    /// Per failing condition, in parametric runs.
    pub constraints: Vec<(i32, Obstruction)>,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.verdict == Status::Pass)
    }

    pub fn verdict(&self, n: i32) -> Option<Status> {
        self.records.iter().find(|r| r.n == n).map(|r| r.verdict)
    }

    /// Every collected constraint polynomial.
    pub fn constraint_polys(&self) -> Vec<Poly> {
        let mut out: Vec<Poly> = Vec::new();
        for (_, ob) in &self.constraints {
            for p in &ob.constraint_set {
                if !out.contains(p) {
                    out.push(p.clone());
                }
            }
        }
        out
    }

    /// Gröbner basis of the ideal generated by all collected constraints.
    pub fn constraint_ideal(&self) -> Vec<Poly> {
        groebner::basis(&self.constraint_polys())
    }

    /// Human-readable rendering; `timing` adds elapsed milliseconds.
    pub fn render_text(&self, timing: bool) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "flow {}", self.flow_id);
        for r in &self.records {
            let _ = write!(s, "  condition n={:<3} {}", r.n, r.verdict.as_str());
            if let Some(d) = &r.digest {
                let _ = write!(s, "  [{d}]");
            }
            if timing {
                let _ = write!(s, "  {} ms", r.elapsed_ms);
            }
            s.push('\n');
        }
        for (n, ob) in &self.constraints {
            let list: Vec<String> = ob.constraint_set.iter().map(|p| p.to_string()).collect();
            let _ = writeln!(s, "  constraints n={n}: {{{}}}", list.join(", "));
        }
        match self.first_failure {
            Some(n) => {
                let _ = writeln!(s, "first failure: n={n} (condition {})", n + 2);
            }
            None if self.all_pass() => {
                let _ = writeln!(s, "all conditions pass");
            }
            None => {
                let _ = writeln!(s, "no failure found");
            }
        }
        s
    }

    /// Line-oriented `key=value` records, one per condition.
    pub fn render_machine(&self, timing: bool) -> String {
        let mut s = String::new();
        for r in &self.records {
            let _ = write!(
                s,
                "flow={} index={} verdict={} digest={}",
                self.flow_id,
                r.n,
                r.verdict.as_str(),
                r.digest.as_deref().unwrap_or("-")
            );
            if timing {
                let _ = write!(s, " ms={}", r.elapsed_ms);
            }
            s.push('\n');
        }
        for (n, ob) in &self.constraints {
            for p in &ob.constraint_set {
                let _ = writeln!(s, "flow={} index={} constraint={}", self.flow_id, n, p);
            }
        }
        s
    }
}

#[derive(Clone, Debug, Default)]
pub struct CheckOptions {
    /// Conditions not started within the budget are reported `not-checked`.
    pub time_budget: Option<Duration>,
}

fn digest(e: Option<&Expr>) -> Option<String> {
    e.map(|e| e.digest())
}

/// Runs conditions `n = -1, 0, ..., max_n` in order, halting at the first
/// failure.
pub fn check_conditions(
    id: &str,
    f: &Flow,
    max_n: i32,
    opts: &CheckOptions,
) -> Result<ConditionReport> {
    let start = Instant::now();
    let mut chain = DensityChain::new(f)?;
    let mut rep = ConditionReport {
        flow_id: id.to_string(),
        records: Vec::new(),
        first_failure: None,
        constraints: Vec::new(),
    };
    for n in -1..=max_n {
        if rep.first_failure.is_some() || opts.time_budget.is_some_and(|b| start.elapsed() > b) {
            rep.records.push(Record {
                n,
                verdict: Status::NotChecked,
                elapsed_ms: 0,
                digest: None,
            });
            continue;
        }
        let t = Instant::now();
        chain.ensure(n)?;
        let st = chain.check(n)?;
        let e = chain.entry(n).unwrap();
        let d = match st {
            Status::Pass => digest(e.theta.as_ref()),
            _ => digest(e.residue.as_ref()),
        };
        rep.records.push(Record {
            n,
            verdict: st,
            elapsed_ms: t.elapsed().as_millis(),
            digest: d,
        });
        if st == Status::Fail {
            rep.first_failure = Some(n);
        }
    }
    Ok(rep)
}

/// Like [`check_conditions`] for flows with parameters: failing conditions
/// are recorded with their constraint sets and the run continues with every
/// condition whose densities are still available (constraints are not
/// assumed).
pub fn check_conditions_parametric(
    id: &str,
    f: &Flow,
    params: &[Var],
    max_n: i32,
    opts: &CheckOptions,
) -> Result<ConditionReport> {
    let start = Instant::now();
    let mut chain = DensityChain::new(f)?;
    let mut rep = ConditionReport {
        flow_id: id.to_string(),
        records: Vec::new(),
        first_failure: None,
        constraints: Vec::new(),
    };
    for n in -1..=max_n {
        let available = chain.top() >= n || chain.ensure(n).is_ok();
        if !available || opts.time_budget.is_some_and(|b| start.elapsed() > b) {
            rep.records.push(Record {
                n,
                verdict: Status::NotChecked,
                elapsed_ms: 0,
                digest: None,
            });
            continue;
        }
        let t = Instant::now();
        let st = match chain.check(n) {
            Ok(st) => st,
            Err(Error::Unsupported(_)) => {
                rep.records.push(Record {
                    n,
                    verdict: Status::NotChecked,
                    elapsed_ms: 0,
                    digest: None,
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let e = chain.entry(n).unwrap();
        let d = match st {
            Status::Pass => digest(e.theta.as_ref()),
            _ => digest(e.residue.as_ref()),
        };
        if st == Status::Fail {
            let residue = e.residue.clone().unwrap();
            rep.first_failure.get_or_insert(n);
            let constraint_set = constraints_of(&residue, params)?;
            rep.constraints.push((
                n,
                Obstruction {
                    residue,
                    constraint_set,
                },
            ));
        }
        rep.records.push(Record {
            n,
            verdict: st,
            elapsed_ms: t.elapsed().as_millis(),
            digest: d,
        });
    }
    Ok(rep)
}

/// `[F, G] = F_*[G] − G_*[F]`; zero iff the flows commute.
pub fn commutator(f: &Expr, g: &Expr) -> Result<Expr> {
    frechet(f, g)?.try_sub(&frechet(g, f)?)
}

/// Whether `u_τ = G` is a symmetry of `u_t = F`, with the commutator.
pub fn is_symmetry(f: &Expr, g: &Expr) -> Result<(bool, Expr)> {
    let c = commutator(f, g)?;
    Ok((c.is_zero(), c))
}

/// The flux `θ` with `D_x θ = D_t ρ`.
pub fn flux_of_density(f: &Flow, rho: &Expr) -> Result<Expr> {
    let (red, q) = reduce(rho)?;
    let r = is_exact(&f.dt(&red)?)?;
    if !r.is_exact() {
        return Err(Error::NotExact);
    }
    if q.is_zero() {
        Ok(r.flux)
    } else {
        r.flux.try_add(&f.dt(&q)?)
    }
}
