//! Finite graded-commutative algebra over a declared set of generators.
//!
//! Odd generators (ghosts, antighosts, their time derivatives, `θ`, `θ̄`)
//! anticommute and square to zero. Even nilpotent parameters (`ε`, `ε̇`)
//! commute with everything and every product of two of them vanishes, which
//! makes first-order variations exact algebraic statements.
//!
//! A blade is stored as a bitmask over the odd generators in registry order
//! plus a bitmask over the even parameters holding at most one bit.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GeneratorKind {
    /// `c^a` (and its time derivatives, via `order`)
    Ghost,
    /// `c̄_a`
    Antighost,
    Theta,
    ThetaBar,
    /// Even first-order nilpotent parameter.
    Epsilon,
    /// Time derivative of an `Epsilon` parameter.
    EpsilonDot,
}

impl GeneratorKind {
    pub fn is_odd(self) -> bool {
        matches!(
            self,
            GeneratorKind::Ghost
                | GeneratorKind::Antighost
                | GeneratorKind::Theta
                | GeneratorKind::ThetaBar
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Generator {
    pub label: String,
    pub kind: GeneratorKind,
    /// Phase-space index `a` (0-based) for ghosts and antighosts.
    pub index: Option<usize>,
    /// Number of time derivatives (ghost jets only).
    pub order: u8,
}

/// Ordered, immutable list of generators. Blade keys index into it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorRegistry {
    dim: usize,
    entries: Vec<Generator>,
    /// Entry position -> bit among odd (or even) generators.
    bit_of: Vec<u32>,
    odd_entries: Vec<usize>,
    even_entries: Vec<usize>,
    by_label: HashMap<String, usize>,
}

impl GeneratorRegistry {
    /// Build a registry for a phase space of dimension `dim` (= 2n).
    pub fn new(dim: usize, entries: Vec<Generator>) -> Result<Self> {
        let mut by_label = HashMap::new();
        let mut bit_of = Vec::with_capacity(entries.len());
        let mut odd_entries = Vec::new();
        let mut even_entries = Vec::new();
        for (pos, g) in entries.iter().enumerate() {
            if by_label.insert(g.label.clone(), pos).is_some() {
                return Err(Error::Config(format!(
                    "duplicate generator label {}",
                    g.label
                )));
            }
            match (g.kind, g.index) {
                (GeneratorKind::Ghost | GeneratorKind::Antighost, Some(a)) if a < dim => {}
                (GeneratorKind::Ghost | GeneratorKind::Antighost, _) => {
                    return Err(Error::Config(format!(
                        "generator {} needs a phase-space index below {dim}",
                        g.label
                    )))
                }
                (_, None) => {}
                (_, Some(_)) => {
                    return Err(Error::Config(format!(
                        "generator {} does not take an index",
                        g.label
                    )))
                }
            }
            if g.kind.is_odd() {
                bit_of.push(odd_entries.len() as u32);
                odd_entries.push(pos);
            } else {
                bit_of.push(even_entries.len() as u32);
                even_entries.push(pos);
            }
        }
        if odd_entries.len() > 64 || even_entries.len() > 32 {
            return Err(Error::Config(
                "too many generators for blade encoding".into(),
            ));
        }
        Ok(GeneratorRegistry {
            dim,
            entries,
            bit_of,
            odd_entries,
            even_entries,
            by_label,
        })
    }

    /// The superspace registry: `θ, θ̄`, ghosts and antighosts with time
    /// derivatives up to `jet_order`, and one `ε, ε̇` pair.
    pub fn superspace(dim: usize, jet_order: u8) -> Result<Self> {
        let mut entries = vec![
            Generator {
                label: "theta".into(),
                kind: GeneratorKind::Theta,
                index: None,
                order: 0,
            },
            Generator {
                label: "thetabar".into(),
                kind: GeneratorKind::ThetaBar,
                index: None,
                order: 0,
            },
        ];
        for order in 0..=jet_order {
            for kind in [GeneratorKind::Ghost, GeneratorKind::Antighost] {
                for a in 0..dim {
                    entries.push(Generator {
                        label: ghost_label(kind, a, order),
                        kind,
                        index: Some(a),
                        order,
                    });
                }
            }
        }
        entries.push(Generator {
            label: "eps".into(),
            kind: GeneratorKind::Epsilon,
            index: None,
            order: 0,
        });
        entries.push(Generator {
            label: "epsdot".into(),
            kind: GeneratorKind::EpsilonDot,
            index: None,
            order: 0,
        });
        GeneratorRegistry::new(dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Generator] {
        &self.entries
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.by_label
            .get(label)
            .copied()
            .ok_or_else(|| Error::Config(format!("generator {label} not in registry")))
    }

    pub fn find(&self, kind: GeneratorKind, index: Option<usize>, order: u8) -> Option<usize> {
        self.entries
            .iter()
            .position(|g| g.kind == kind && g.index == index && g.order == order)
    }

    pub fn generator(&self, pos: usize) -> &Generator {
        &self.entries[pos]
    }

    fn odd_bit(&self, pos: usize) -> Result<u32> {
        if !self.entries[pos].kind.is_odd() {
            return Err(Error::Config(format!(
                "{} is not an odd generator",
                self.entries[pos].label
            )));
        }
        Ok(self.bit_of[pos])
    }

    /// Registry position of the time derivative of the entry at `pos`, if any.
    pub fn successor(&self, pos: usize) -> Option<usize> {
        let g = &self.entries[pos];
        match g.kind {
            GeneratorKind::Ghost | GeneratorKind::Antighost => {
                self.find(g.kind, g.index, g.order + 1)
            }
            GeneratorKind::Epsilon => self
                .entries
                .iter()
                .position(|e| e.kind == GeneratorKind::EpsilonDot),
            _ => None,
        }
    }
}

pub fn ghost_label(kind: GeneratorKind, a: usize, order: u8) -> String {
    let base = match kind {
        GeneratorKind::Ghost => "c",
        GeneratorKind::Antighost => "cbar",
        _ => unreachable!("only ghosts carry jet labels"),
    };
    let dots = match order {
        0 => "",
        1 => "dot",
        _ => "ddot",
    };
    let coord = if a % 2 == 0 { "q" } else { "p" };
    format!("{base}{dots}_{coord}_{}", a / 2 + 1)
}

/// Basis element: product of odd generators in registry order, times at most
/// one even nilpotent parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Blade {
    pub odd: u64,
    pub even: u32,
}

impl Blade {
    pub const ONE: Blade = Blade { odd: 0, even: 0 };

    pub fn parity(self) -> u32 {
        self.odd.count_ones() & 1
    }

    /// Product of two blades: `None` if it vanishes, else the sign and blade.
    pub fn mul(self, other: Blade) -> Option<(bool, Blade)> {
        if self.odd & other.odd != 0 || (self.even != 0 && other.even != 0) {
            return None;
        }
        Some((
            reorder_negates(self.odd, other.odd),
            Blade {
                odd: self.odd | other.odd,
                even: self.even | other.even,
            },
        ))
    }
}

/// Whether concatenating blade `a` then blade `b` and sorting takes an odd
/// number of transpositions.
fn reorder_negates(a: u64, b: u64) -> bool {
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        rest &= rest - 1;
        swaps += if j == 63 {
            0
        } else {
            (a >> (j + 1)).count_ones()
        };
    }
    swaps & 1 == 1
}

fn bits_below(mask: u64, bit: u32) -> u32 {
    (mask & ((1u64 << bit) - 1)).count_ones()
}

/// Element of the Grassmann algebra over a registry.
#[derive(Clone, PartialEq, Eq)]
pub struct Multivector {
    reg: Arc<GeneratorRegistry>,
    terms: BTreeMap<Blade, Scalar>,
}

impl Multivector {
    pub fn zero(reg: &Arc<GeneratorRegistry>) -> Self {
        Multivector {
            reg: reg.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(reg: &Arc<GeneratorRegistry>, c: Scalar) -> Self {
        Multivector::from_blade(reg, Blade::ONE, c)
    }

    pub fn one(reg: &Arc<GeneratorRegistry>) -> Self {
        Multivector::scalar(reg, Scalar::one())
    }

    pub fn from_blade(reg: &Arc<GeneratorRegistry>, blade: Blade, c: Scalar) -> Self {
        let mut m = Multivector::zero(reg);
        m.add_term(blade, c);
        m
    }

    /// The generator at registry position `pos`.
    pub fn generator_at(reg: &Arc<GeneratorRegistry>, pos: usize) -> Self {
        let g = &reg.entries[pos];
        let bit = reg.bit_of[pos];
        let blade = if g.kind.is_odd() {
            Blade {
                odd: 1 << bit,
                even: 0,
            }
        } else {
            Blade {
                odd: 0,
                even: 1 << bit,
            }
        };
        Multivector::from_blade(reg, blade, Scalar::one())
    }

    pub fn generator(reg: &Arc<GeneratorRegistry>, label: &str) -> Result<Self> {
        Ok(Multivector::generator_at(reg, reg.position(label)?))
    }

    pub fn registry(&self) -> &Arc<GeneratorRegistry> {
        &self.reg
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Blade, &Scalar)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, blade: Blade) -> Scalar {
        self.terms.get(&blade).cloned().unwrap_or_default()
    }

    pub fn add_term(&mut self, blade: Blade, c: Scalar) {
        if c.is_zero() {
            return;
        }
        debug_assert!(blade.even.count_ones() <= 1);
        match self.terms.entry(blade) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += &c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    fn same_registry(&self, other: &Multivector) -> Result<()> {
        if Arc::ptr_eq(&self.reg, &other.reg) || *self.reg == *other.reg {
            Ok(())
        } else {
            Err(Error::Config(
                "multivectors over different registries".into(),
            ))
        }
    }

    pub fn add(&self, other: &Multivector) -> Result<Multivector> {
        self.same_registry(other)?;
        let mut out = self.clone();
        for (b, c) in &other.terms {
            out.add_term(*b, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Multivector) -> Result<Multivector> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Multivector {
        self.scale(&Scalar::int(-1))
    }

    pub fn scale(&self, k: &Scalar) -> Multivector {
        let mut out = Multivector::zero(&self.reg);
        for (b, c) in &self.terms {
            out.add_term(*b, c * k);
        }
        out
    }

    /// Graded product.
    pub fn gmul(&self, other: &Multivector) -> Result<Multivector> {
        self.same_registry(other)?;
        let mut out = Multivector::zero(&self.reg);
        for (ba, ca) in &self.terms {
            for (bb, cb) in &other.terms {
                if let Some((neg, blade)) = ba.mul(*bb) {
                    let c = ca * cb;
                    out.add_term(blade, if neg { -c } else { c });
                }
            }
        }
        Ok(out)
    }

    /// Parity if every term has the same parity; `None` for mixed or zero.
    pub fn parity(&self) -> Option<u32> {
        let mut it = self.terms.keys().map(|b| b.parity());
        let first = it.next()?;
        it.all(|p| p == first).then_some(first)
    }

    /// Split into (even, odd) parts.
    pub fn split_parity(&self) -> (Multivector, Multivector) {
        let mut even = Multivector::zero(&self.reg);
        let mut odd = Multivector::zero(&self.reg);
        for (b, c) in &self.terms {
            if b.parity() == 0 {
                even.add_term(*b, c.clone());
            } else {
                odd.add_term(*b, c.clone());
            }
        }
        (even, odd)
    }

    /// Left derivative with respect to the odd generator `label`.
    pub fn gderiv(&self, label: &str) -> Result<Multivector> {
        let pos = self.reg.position(label)?;
        self.gderiv_at(pos)
    }

    pub fn gderiv_at(&self, pos: usize) -> Result<Multivector> {
        let bit = self.reg.odd_bit(pos)?;
        let mask = 1u64 << bit;
        let mut out = Multivector::zero(&self.reg);
        for (b, c) in &self.terms {
            if b.odd & mask == 0 {
                continue;
            }
            let neg = bits_below(b.odd, bit) & 1 == 1;
            let blade = Blade {
                odd: b.odd & !mask,
                even: b.even,
            };
            out.add_term(blade, if neg { -c } else { c.clone() });
        }
        Ok(out)
    }

    /// Iterated Berezin integral `∫ dg_1 … dg_k x`: the rightmost measure
    /// factor acts first, and each integration is the left derivative.
    pub fn berezin(&self, measure: &[&str]) -> Result<Multivector> {
        let mut seen = Vec::with_capacity(measure.len());
        for label in measure {
            let pos = self.reg.position(label)?;
            self.reg.odd_bit(pos)?;
            if seen.contains(&pos) {
                return Err(Error::Config(format!(
                    "generator {label} repeated in measure"
                )));
            }
            seen.push(pos);
        }
        let mut out = self.clone();
        for &pos in seen.iter().rev() {
            out = out.gderiv_at(pos)?;
        }
        Ok(out)
    }

    /// Set the listed generators to zero.
    pub fn drop_generators(&self, positions: &[usize]) -> Multivector {
        let (mut odd_mask, mut even_mask) = (0u64, 0u32);
        for &p in positions {
            if self.reg.entries[p].kind.is_odd() {
                odd_mask |= 1 << self.reg.bit_of[p];
            } else {
                even_mask |= 1 << self.reg.bit_of[p];
            }
        }
        let mut out = Multivector::zero(&self.reg);
        for (b, c) in &self.terms {
            if b.odd & odd_mask == 0 && b.even & even_mask == 0 {
                out.add_term(*b, c.clone());
            }
        }
        out
    }

    /// Whether any term contains the generator at `pos`.
    pub fn contains_generator(&self, pos: usize) -> bool {
        let bit = self.reg.bit_of[pos];
        let odd = self.reg.entries[pos].kind.is_odd();
        self.terms.keys().any(|b| {
            if odd {
                b.odd >> bit & 1 == 1
            } else {
                b.even >> bit & 1 == 1
            }
        })
    }

    /// Registry positions of the odd generators in `blade`, in order.
    pub fn odd_positions(&self, blade: Blade) -> Vec<usize> {
        let mut out = Vec::new();
        let mut rest = blade.odd;
        while rest != 0 {
            let bit = rest.trailing_zeros();
            rest &= rest - 1;
            out.push(self.reg.odd_entries[bit as usize]);
        }
        out
    }

    /// Registry position of the even parameter in `blade`, if any.
    pub fn even_position(&self, blade: Blade) -> Option<usize> {
        (blade.even != 0).then(|| self.reg.even_entries[blade.even.trailing_zeros() as usize])
    }

    /// Total time derivative, treating odd generators and `ε` as functions of
    /// time and `θ, θ̄` as constants. Fails if a jet beyond the registry's
    /// order (or `ε̈`) would be needed.
    pub fn time_derivative(&self) -> Result<Multivector> {
        let mut out = Multivector::zero(&self.reg);
        for (b, c) in &self.terms {
            let mut rest = b.odd;
            while rest != 0 {
                let bit = rest.trailing_zeros();
                rest &= rest - 1;
                let pos = self.reg.odd_entries[bit as usize];
                let g = &self.reg.entries[pos];
                if matches!(g.kind, GeneratorKind::Theta | GeneratorKind::ThetaBar) {
                    continue;
                }
                let succ = self.reg.successor(pos).ok_or_else(|| {
                    Error::UnsupportedInput(format!(
                        "time derivative of {} not representable",
                        g.label
                    ))
                })?;
                let sbit = self.reg.bit_of[succ];
                let without = b.odd & !(1u64 << bit);
                if without >> sbit & 1 == 1 {
                    continue;
                }
                // move g to the front, swap it for its derivative, move back in place
                let neg = (bits_below(b.odd, bit) + bits_below(without, sbit)) & 1 == 1;
                let blade = Blade {
                    odd: without | 1u64 << sbit,
                    even: b.even,
                };
                out.add_term(blade, if neg { -c } else { c.clone() });
            }
            if b.even != 0 {
                let pos = self.reg.even_entries[b.even.trailing_zeros() as usize];
                let succ = self.reg.successor(pos).ok_or_else(|| {
                    Error::UnsupportedInput(format!(
                        "time derivative of {} not representable",
                        self.reg.entries[pos].label
                    ))
                })?;
                let blade = Blade {
                    odd: b.odd,
                    even: 1 << self.reg.bit_of[succ],
                };
                out.add_term(blade, c.clone());
            }
        }
        Ok(out)
    }

    pub fn blade_label(&self, blade: Blade) -> String {
        let mut parts: Vec<String> = self
            .odd_positions(blade)
            .into_iter()
            .map(|p| self.reg.entries[p].label.clone())
            .collect();
        if let Some(p) = self.even_position(blade) {
            parts.insert(0, self.reg.entries[p].label.clone());
        }
        parts.join("*")
    }
}

impl fmt::Display for Multivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rendered: Vec<(&Scalar, String)> = self
            .terms
            .iter()
            .map(|(b, c)| (c, self.blade_label(*b)))
            .collect();
        crate::poly::fmt_terms(f, rendered)
    }
}

impl fmt::Debug for Multivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg() -> Arc<GeneratorRegistry> {
        Arc::new(GeneratorRegistry::superspace(2, 1).unwrap())
    }

    fn g(r: &Arc<GeneratorRegistry>, l: &str) -> Multivector {
        Multivector::generator(r, l).unwrap()
    }

    #[test]
    fn theta_is_nilpotent() {
        let r = reg();
        let t = g(&r, "theta");
        assert!(t.gmul(&t).unwrap().is_zero());
    }

    #[test]
    fn ghost_antighost_anticommute() {
        let r = reg();
        let (c, cb) = (g(&r, "c_q_1"), g(&r, "cbar_q_1"));
        let s = c.gmul(&cb).unwrap().add(&cb.gmul(&c).unwrap()).unwrap();
        assert!(s.is_zero());
    }

    #[test]
    fn one_plus_theta_times_one_plus_thetabar() {
        let r = reg();
        let one = Multivector::one(&r);
        let (t, tb) = (g(&r, "theta"), g(&r, "thetabar"));
        let lhs = one.add(&t).unwrap().gmul(&one.add(&tb).unwrap()).unwrap();
        let rhs = one
            .add(&t)
            .unwrap()
            .add(&tb)
            .unwrap()
            .add(&t.gmul(&tb).unwrap())
            .unwrap();
        assert_eq!(lhs, rhs);
        assert_eq!(lhs.len(), 4);
    }

    #[test]
    fn left_derivative_signs() {
        let r = reg();
        let (t, c) = (g(&r, "theta"), g(&r, "c_q_1"));
        assert_eq!(t.gmul(&c).unwrap().gderiv("theta").unwrap(), c);
        assert_eq!(c.gmul(&t).unwrap().gderiv("theta").unwrap(), c.neg());
        assert!(Multivector::one(&r).gderiv("theta").unwrap().is_zero());
    }

    #[test]
    fn berezin_conventions() {
        let r = reg();
        let (t, tb) = (g(&r, "theta"), g(&r, "thetabar"));
        assert_eq!(t.berezin(&["theta"]).unwrap(), Multivector::one(&r));
        assert!(Multivector::one(&r).berezin(&["theta"]).unwrap().is_zero());
        let top = tb.gmul(&t).unwrap();
        assert_eq!(
            top.berezin(&["theta", "thetabar"]).unwrap(),
            Multivector::one(&r)
        );
        assert!(top.berezin(&["theta", "theta"]).is_err());
    }

    #[test]
    fn epsilon_products_vanish() {
        let r = reg();
        let (e, ed) = (g(&r, "eps"), g(&r, "epsdot"));
        assert!(e.gmul(&e).unwrap().is_zero());
        assert!(e.gmul(&ed).unwrap().is_zero());
        let x = e.gmul(&g(&r, "theta")).unwrap();
        assert!(x.gmul(&ed).unwrap().is_zero());
    }

    #[test]
    fn registry_mismatch_rejected() {
        let a = reg();
        let b = Arc::new(GeneratorRegistry::superspace(4, 0).unwrap());
        assert!(g(&a, "theta").gmul(&g(&b, "theta")).is_err());
        assert!(g(&a, "theta").gderiv("nope").is_err());
        assert!(g(&a, "theta").gderiv("eps").is_err());
    }

    #[test]
    fn registry_validation() {
        let dup = vec![
            Generator {
                label: "x".into(),
                kind: GeneratorKind::Theta,
                index: None,
                order: 0,
            },
            Generator {
                label: "x".into(),
                kind: GeneratorKind::ThetaBar,
                index: None,
                order: 0,
            },
        ];
        assert!(GeneratorRegistry::new(2, dup).is_err());
        let bad_index = vec![Generator {
            label: "c".into(),
            kind: GeneratorKind::Ghost,
            index: Some(2),
            order: 0,
        }];
        assert!(GeneratorRegistry::new(2, bad_index).is_err());
    }

    #[test]
    fn time_derivative_is_even_derivation() {
        let r = reg();
        let (c, cb) = (g(&r, "c_q_1"), g(&r, "cbar_p_1"));
        let (cd, cbd) = (g(&r, "cdot_q_1"), g(&r, "cbardot_p_1"));
        let prod = c.gmul(&cb).unwrap();
        let expected = cd.gmul(&cb).unwrap().add(&c.gmul(&cbd).unwrap()).unwrap();
        assert_eq!(prod.time_derivative().unwrap(), expected);
        // second derivatives are outside a first-order registry
        assert!(cd.time_derivative().is_err());
        assert_eq!(g(&r, "eps").time_derivative().unwrap(), g(&r, "epsdot"));
    }
}
