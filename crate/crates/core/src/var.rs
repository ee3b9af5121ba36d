//! Generators of the jet ring and their fixed slot layout.
//!
//! Every polynomial shares one global layout: slot 0 is `x`, slots 1..=13 are
//! the jets `u, u1, ..., u12`, slot 14 is the radical generator and the
//! remaining slots hold named parameters. Parameter names are interned on
//! first use; ordering decisions that reach the user never depend on the
//! interning order (see [`VarOrder`]).

use std::cmp::Ordering;
use std::fmt;
use std::sync::RwLock;

use crate::error::{Error, Result};

/// Highest jet order the ring can represent.
pub const MAX_JET: usize = 12;
/// Total number of generator slots.
pub const NVARS: usize = 48;
pub const X_SLOT: usize = 0;
pub const RADICAL_SLOT: usize = 1 + MAX_JET + 1;
pub const FIRST_PARAM_SLOT: usize = RADICAL_SLOT + 1;
pub const MAX_PARAMS: usize = NVARS - FIRST_PARAM_SLOT;

/// A generator slot index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub u8);

impl Var {
    pub const X: Var = Var(X_SLOT as u8);
    pub const R: Var = Var(RADICAL_SLOT as u8);

    pub fn jet(order: usize) -> Var {
        assert!(order <= MAX_JET, "jet order {order} beyond {MAX_JET}");
        Var(1 + order as u8)
    }

    pub fn try_jet(order: usize) -> Result<Var> {
        if order > MAX_JET {
            Err(Error::OrderOverflow(order))
        } else {
            Ok(Var(1 + order as u8))
        }
    }

    pub fn idx(self) -> usize {
        self.0 as usize
    }

    /// Jet order if this is `u_i`.
    pub fn jet_order(self) -> Option<usize> {
        let i = self.0 as usize;
        if (1..=1 + MAX_JET).contains(&i) {
            Some(i - 1)
        } else {
            None
        }
    }

    pub fn is_param(self) -> bool {
        self.0 as usize >= FIRST_PARAM_SLOT
    }

    pub fn generator(self) -> Generator {
        let i = self.0 as usize;
        if i == X_SLOT {
            Generator::X
        } else if let Some(o) = self.jet_order() {
            Generator::Jet(o)
        } else if i == RADICAL_SLOT {
            Generator::Radical
        } else {
            Generator::Param(param_name(self))
        }
    }

    pub fn name(self) -> String {
        match self.generator() {
            Generator::X => "x".into(),
            Generator::Jet(0) => "u".into(),
            Generator::Jet(o) => format!("u{o}"),
            Generator::Radical => "r".into(),
            Generator::Param(p) => p,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// The user-facing view of a slot.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Generator {
    X,
    Jet(usize),
    Param(String),
    Radical,
}

impl Generator {
    pub fn var(&self) -> Result<Var> {
        match self {
            Generator::X => Ok(Var::X),
            Generator::Jet(o) => Var::try_jet(*o),
            Generator::Radical => Ok(Var::R),
            Generator::Param(p) => param(p),
        }
    }
}

static PARAMS: RwLock<Vec<String>> = RwLock::new(Vec::new());

fn valid_param_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !is_reserved(name)
}

/// Names that denote built-in generators and cannot be parameters.
pub fn is_reserved(name: &str) -> bool {
    matches!(name, "x" | "u" | "ux" | "uxx" | "D1" | "r")
        || (name.len() >= 2
            && name.starts_with('u')
            && name[1..].bytes().all(|b| b.is_ascii_digit()))
}

/// Slot of parameter `name`, interning it if new.
pub fn param(name: &str) -> Result<Var> {
    if !valid_param_name(name) {
        return Err(Error::InvalidParameter(name.to_string()));
    }
    if let Some(i) = PARAMS.read().unwrap().iter().position(|p| p == name) {
        return Ok(Var((FIRST_PARAM_SLOT + i) as u8));
    }
    let mut w = PARAMS.write().unwrap();
    if let Some(i) = w.iter().position(|p| p == name) {
        return Ok(Var((FIRST_PARAM_SLOT + i) as u8));
    }
    if w.len() >= MAX_PARAMS {
        return Err(Error::TooManyParameters(MAX_PARAMS));
    }
    w.push(name.to_string());
    Ok(Var((FIRST_PARAM_SLOT + w.len() - 1) as u8))
}

/// Slot of an already interned parameter.
pub fn lookup_param(name: &str) -> Option<Var> {
    PARAMS
        .read()
        .unwrap()
        .iter()
        .position(|p| p == name)
        .map(|i| Var((FIRST_PARAM_SLOT + i) as u8))
}

pub fn param_name(v: Var) -> String {
    let i = v.idx() - FIRST_PARAM_SLOT;
    PARAMS
        .read()
        .unwrap()
        .get(i)
        .cloned()
        .unwrap_or_else(|| format!("p{i}"))
}

/// Significance order of slots for the canonical graded-lex order:
/// `x < u < u1 < ... < u12 < r < parameters (by name)`.
///
/// Captured as a snapshot; parameters interned later never reorder the ones
/// already present, so comparisons stay consistent.
#[derive(Clone, Debug)]
pub struct VarOrder {
    /// Slots from most to least significant.
    pub significance: Vec<usize>,
}

impl VarOrder {
    pub fn current() -> VarOrder {
        let params = PARAMS.read().unwrap();
        let mut named: Vec<(String, usize)> = params
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), FIRST_PARAM_SLOT + i))
            .collect();
        named.sort();
        let mut significance: Vec<usize> = named.into_iter().rev().map(|(_, s)| s).collect();
        significance.push(RADICAL_SLOT);
        for o in (0..=MAX_JET).rev() {
            significance.push(1 + o);
        }
        significance.push(X_SLOT);
        VarOrder { significance }
    }

    pub fn cmp(&self, a: &crate::poly::Mono, b: &crate::poly::Mono) -> Ordering {
        a.deg.cmp(&b.deg).then_with(|| {
            for &s in &self.significance {
                match a.e[s].cmp(&b.e[s]) {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
            Ordering::Equal
        })
    }
}
