//! Normal-ordered operator algebra on the extended KvN space.
//!
//! Operators are polynomials in `φ̂^a`, `ĉ^a`, `c̄̂_a`, `λ̂_a` subject to
//!
//! ```text
//! [φ̂^a, λ̂_b] = i δ^a_b      [ĉ^a, c̄̂_b]₊ = δ^a_b
//! ```
//!
//! with every other pair commuting (bosonic) or anticommuting (fermionic).
//! The normal order is the block sequence `φ̂, ĉ, c̄̂, λ̂` with ascending
//! indices inside each block, so two sums are equal iff their term maps are.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::model::PhaseSpaceModel;
use crate::poly::Poly;
use crate::scalar::Scalar;

/// Key of a normal-ordered monomial.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonoKey {
    pub phi: Vec<u32>,
    /// Occupation bitmask of `ĉ^a`.
    pub c: u32,
    /// Occupation bitmask of `c̄̂_a`.
    pub cbar: u32,
    pub lambda: Vec<u32>,
}

impl MonoKey {
    pub fn identity(dim: usize) -> Self {
        MonoKey {
            phi: vec![0; dim],
            c: 0,
            cbar: 0,
            lambda: vec![0; dim],
        }
    }

    pub fn parity(&self) -> u32 {
        (self.c.count_ones() + self.cbar.count_ones()) & 1
    }

    pub fn ghost_free(&self) -> bool {
        self.c == 0 && self.cbar == 0
    }
}

/// A single normal-ordered term, as handed out by [`OperatorSum::monomials`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorMonomial {
    pub phi_exp: Vec<u32>,
    pub c_occ: u32,
    pub cbar_occ: u32,
    pub lambda_exp: Vec<u32>,
    pub coeff: Scalar,
}

/// Elementary operator generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpGen {
    Phi(usize),
    C(usize),
    CBar(usize),
    Lambda(usize),
}

impl OpGen {
    pub fn name(self) -> String {
        let coord = |a: usize| format!("{}_{}", if a % 2 == 0 { "q" } else { "p" }, a / 2 + 1);
        match self {
            OpGen::Phi(a) => coord(a),
            OpGen::C(a) => format!("c_{}", coord(a)),
            OpGen::CBar(a) => format!("cbar_{}", coord(a)),
            OpGen::Lambda(a) => format!("lam_{}", coord(a)),
        }
    }

    fn index(self) -> usize {
        match self {
            OpGen::Phi(a) | OpGen::C(a) | OpGen::CBar(a) | OpGen::Lambda(a) => a,
        }
    }
}

/// Normal-ordered sum of operator monomials over a `dim`-dimensional phase space.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct OperatorSum {
    dim: usize,
    terms: BTreeMap<MonoKey, Scalar>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BracketKind {
    Commutator,
    Anticommutator,
    /// Anticommutator between odd parts, commutator otherwise.
    Graded,
}

impl OperatorSum {
    pub fn zero(dim: usize) -> Self {
        OperatorSum {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        OperatorSum::scalar(dim, Scalar::one())
    }

    pub fn scalar(dim: usize, c: Scalar) -> Self {
        let mut s = OperatorSum::zero(dim);
        s.add_term(MonoKey::identity(dim), c);
        s
    }

    pub fn generator(dim: usize, g: OpGen) -> Self {
        assert!(g.index() < dim, "generator index out of range");
        let mut key = MonoKey::identity(dim);
        match g {
            OpGen::Phi(a) => key.phi[a] = 1,
            OpGen::C(a) => key.c = 1 << a,
            OpGen::CBar(a) => key.cbar = 1 << a,
            OpGen::Lambda(a) => key.lambda[a] = 1,
        }
        let mut s = OperatorSum::zero(dim);
        s.add_term(key, Scalar::one());
        s
    }

    pub fn phi(dim: usize, a: usize) -> Self {
        OperatorSum::generator(dim, OpGen::Phi(a))
    }

    pub fn lambda(dim: usize, a: usize) -> Self {
        OperatorSum::generator(dim, OpGen::Lambda(a))
    }

    pub fn c(dim: usize, a: usize) -> Self {
        OperatorSum::generator(dim, OpGen::C(a))
    }

    pub fn cbar(dim: usize, a: usize) -> Self {
        OperatorSum::generator(dim, OpGen::CBar(a))
    }

    /// Multiplication operator `O(φ̂)`.
    pub fn from_poly(p: &Poly) -> Self {
        let dim = p.nvars();
        let mut s = OperatorSum::zero(dim);
        for (e, c) in p.terms() {
            s.add_term(
                MonoKey {
                    phi: e.clone(),
                    ..MonoKey::identity(dim)
                },
                c.clone(),
            );
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.dim
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

    pub fn terms(&self) -> impl Iterator<Item = (&MonoKey, &Scalar)> {
        self.terms.iter()
    }

    pub fn monomials(&self) -> impl Iterator<Item = OperatorMonomial> + '_ {
        self.terms.iter().map(|(k, c)| OperatorMonomial {
            phi_exp: k.phi.clone(),
            c_occ: k.c,
            cbar_occ: k.cbar,
            lambda_exp: k.lambda.clone(),
            coeff: c.clone(),
        })
    }

    pub fn coeff(&self, key: &MonoKey) -> Scalar {
        self.terms.get(key).cloned().unwrap_or_default()
    }

    pub fn add_term(&mut self, key: MonoKey, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(key) {
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

    fn check_dim(&self, other: &OperatorSum) -> Result<()> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "operators over phase spaces of dimension {} and {}",
                self.dim, other.dim
            )))
        }
    }

    pub fn add(&self, other: &OperatorSum) -> Result<OperatorSum> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &OperatorSum) -> Result<OperatorSum> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> OperatorSum {
        self.scale(&Scalar::int(-1))
    }

    pub fn scale(&self, k: &Scalar) -> OperatorSum {
        let mut out = OperatorSum::zero(self.dim);
        for (key, c) in &self.terms {
            out.add_term(key.clone(), c * k);
        }
        out
    }

    /// Parity if homogeneous; `None` for mixed parity or zero.
    pub fn parity(&self) -> Option<u32> {
        let mut it = self.terms.keys().map(MonoKey::parity);
        let first = it.next()?;
        it.all(|p| p == first).then_some(first)
    }

    pub fn split_parity(&self) -> (OperatorSum, OperatorSum) {
        let mut even = OperatorSum::zero(self.dim);
        let mut odd = OperatorSum::zero(self.dim);
        for (k, c) in &self.terms {
            if k.parity() == 0 {
                even.add_term(k.clone(), c.clone());
            } else {
                odd.add_term(k.clone(), c.clone());
            }
        }
        (even, odd)
    }

    /// Terms with no ghost or antighost factor.
    pub fn ghost_free_part(&self) -> OperatorSum {
        let mut out = OperatorSum::zero(self.dim);
        for (k, c) in &self.terms {
            if k.ghost_free() {
                out.add_term(k.clone(), c.clone());
            }
        }
        out
    }

    /// Operator product, re-normal-ordered.
    pub fn compose(&self, other: &OperatorSum) -> Result<OperatorSum> {
        self.check_dim(other)?;
        let mut out = OperatorSum::zero(self.dim);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let c = ca * cb;
                for (key, k) in compose_monomials(ka, kb) {
                    out.add_term(key, &c * &k);
                }
            }
        }
        Ok(out)
    }

    pub fn bracket(&self, other: &OperatorSum, kind: BracketKind) -> Result<OperatorSum> {
        match kind {
            BracketKind::Commutator => self.compose(other)?.sub(&other.compose(self)?),
            BracketKind::Anticommutator => self.compose(other)?.add(&other.compose(self)?),
            BracketKind::Graded => {
                let (ae, ao) = self.split_parity();
                let (be, bo) = other.split_parity();
                ae.bracket(other, BracketKind::Commutator)?
                    .add(&ao.bracket(&be, BracketKind::Commutator)?)?
                    .add(&ao.bracket(&bo, BracketKind::Anticommutator)?)
            }
        }
    }

    pub fn commutator(&self, other: &OperatorSum) -> Result<OperatorSum> {
        self.bracket(other, BracketKind::Commutator)
    }

    pub fn anticommutator(&self, other: &OperatorSum) -> Result<OperatorSum> {
        self.bracket(other, BracketKind::Anticommutator)
    }

    /// Factors of a normal-ordered monomial, left to right.
    fn word(key: &MonoKey) -> Vec<OpGen> {
        let mut w = Vec::new();
        for (a, &k) in key.phi.iter().enumerate() {
            w.extend(std::iter::repeat_n(OpGen::Phi(a), k as usize));
        }
        w.extend(bits(key.c).map(OpGen::C));
        w.extend(bits(key.cbar).map(OpGen::CBar));
        for (a, &k) in key.lambda.iter().enumerate() {
            w.extend(std::iter::repeat_n(OpGen::Lambda(a), k as usize));
        }
        w
    }

    /// Antilinear anti-automorphism `(zAB)† = z̄ B†A†` under `rules`.
    pub fn adjoint(&self, rules: &AdjointRules) -> Result<OperatorSum> {
        rules.validate(self.dim)?;
        let mut out = OperatorSum::zero(self.dim);
        for (key, c) in &self.terms {
            let mut term = OperatorSum::scalar(self.dim, c.conj());
            for g in OperatorSum::word(key).into_iter().rev() {
                term = term.compose(&OperatorSum::generator(self.dim, rules.image(g)))?;
            }
            out = out.add(&term)?;
        }
        Ok(out)
    }

    pub fn is_hermitian(&self, rules: &AdjointRules) -> Result<bool> {
        Ok(self.adjoint(rules)?.sub(self)?.is_zero())
    }
}

fn bits(mask: u32) -> impl Iterator<Item = usize> {
    (0..32).filter(move |i| mask >> i & 1 == 1)
}

fn binomial(n: u32, k: u32) -> i64 {
    (0..k).fold(1i64, |acc, j| acc * (n - j) as i64 / (j + 1) as i64)
}

fn factorial(n: u32) -> i64 {
    (1..=n as i64).product()
}

/// `λ_a^m φ^a^k = Σ_j C(m,j) C(k,j) j! (−i)^j φ^{k−j} λ^{m−j}` per index,
/// multiplied out over all indices. Returns (phi shift, lambda shift, coeff).
fn reorder_bosons(lam: &[u32], phi: &[u32]) -> Vec<(Vec<u32>, Scalar)> {
    // each entry: contraction counts per index, accumulated coefficient
    let mut acc: Vec<(Vec<u32>, Scalar)> = vec![(Vec::new(), Scalar::one())];
    for (&m, &k) in lam.iter().zip(phi) {
        let mut next = Vec::with_capacity(acc.len() * (m.min(k) as usize + 1));
        for (js, c) in &acc {
            for j in 0..=m.min(k) {
                let w = binomial(m, j) * binomial(k, j) * factorial(j);
                let mut js2 = js.clone();
                js2.push(j);
                // (−i)^j = i^{3j}
                next.push((js2, c.scale_int(w).mul_i_pow(3 * j)));
            }
        }
        acc = next;
    }
    acc
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum Fermion {
    // declaration order is the normal order
    C(usize),
    CBar(usize),
}

/// Normal-orders a fermionic word using `c̄_b c^a = −c^a c̄_b + δ_ab`.
/// Returns (sign, c mask, cbar mask) terms.
fn normal_order_fermions(word: &[Fermion]) -> Vec<(i64, u32, u32)> {
    let Some(i) = (0..word.len().saturating_sub(1)).find(|&i| word[i] >= word[i + 1]) else {
        let (mut c, mut cb) = (0u32, 0u32);
        for f in word {
            match *f {
                Fermion::C(a) => c |= 1 << a,
                Fermion::CBar(a) => cb |= 1 << a,
            }
        }
        return vec![(1, c, cb)];
    };
    if word[i] == word[i + 1] {
        return Vec::new();
    }
    let mut swapped = word.to_vec();
    swapped.swap(i, i + 1);
    let mut out: Vec<(i64, u32, u32)> = normal_order_fermions(&swapped)
        .into_iter()
        .map(|(s, c, cb)| (-s, c, cb))
        .collect();
    if let (Fermion::CBar(b), Fermion::C(a)) = (word[i], word[i + 1]) {
        if a == b {
            let mut contracted = word[..i].to_vec();
            contracted.extend_from_slice(&word[i + 2..]);
            out.extend(normal_order_fermions(&contracted));
        }
    }
    out
}

fn fermion_word(c: u32, cbar: u32) -> impl Iterator<Item = Fermion> {
    bits(c).map(Fermion::C).chain(bits(cbar).map(Fermion::CBar))
}

fn compose_monomials(a: &MonoKey, b: &MonoKey) -> Vec<(MonoKey, Scalar)> {
    // φ1 F1 λ1 · φ2 F2 λ2 = φ1 (λ1 φ2) (F1 F2) λ2; bosons commute with fermions
    let fermions = if a.ghost_free() {
        vec![(1, b.c, b.cbar)]
    } else if b.ghost_free() {
        vec![(1, a.c, a.cbar)]
    } else {
        let word: Vec<Fermion> = fermion_word(a.c, a.cbar)
            .chain(fermion_word(b.c, b.cbar))
            .collect();
        merge_fermion_terms(normal_order_fermions(&word))
    };
    if fermions.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (js, coeff) in reorder_bosons(&a.lambda, &b.phi) {
        let phi: Vec<u32> = a
            .phi
            .iter()
            .zip(&b.phi)
            .zip(&js)
            .map(|((x, y), j)| x + y - j)
            .collect();
        let lambda: Vec<u32> = a
            .lambda
            .iter()
            .zip(&b.lambda)
            .zip(&js)
            .map(|((x, y), j)| x + y - j)
            .collect();
        for &(sign, c, cbar) in &fermions {
            out.push((
                MonoKey {
                    phi: phi.clone(),
                    c,
                    cbar,
                    lambda: lambda.clone(),
                },
                coeff.scale_int(sign),
            ));
        }
    }
    out
}

fn merge_fermion_terms(terms: Vec<(i64, u32, u32)>) -> Vec<(i64, u32, u32)> {
    let mut merged: BTreeMap<(u32, u32), i64> = BTreeMap::new();
    for (s, c, cb) in terms {
        *merged.entry((c, cb)).or_default() += s;
    }
    merged
        .into_iter()
        .filter(|&(_, s)| s != 0)
        .map(|((c, cb), s)| (s, c, cb))
        .collect()
}

impl fmt::Display for OperatorSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rendered: Vec<(&Scalar, String)> = self
            .terms
            .iter()
            .map(|(k, c)| {
                let mut parts = Vec::new();
                for (a, &e) in k.phi.iter().enumerate() {
                    push_power(&mut parts, OpGen::Phi(a).name(), e);
                }
                parts.extend(bits(k.c).map(|a| OpGen::C(a).name()));
                parts.extend(bits(k.cbar).map(|a| OpGen::CBar(a).name()));
                for (a, &e) in k.lambda.iter().enumerate() {
                    push_power(&mut parts, OpGen::Lambda(a).name(), e);
                }
                (c, parts.join("*"))
            })
            .collect();
        crate::poly::fmt_terms(f, rendered)
    }
}

fn push_power(parts: &mut Vec<String>, name: String, e: u32) {
    match e {
        0 => {}
        1 => parts.push(name),
        _ => parts.push(format!("{name}^{e}")),
    }
}

impl fmt::Debug for OperatorSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Adjoint assignment for every generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdjointRules {
    map: HashMap<OpGen, OpGen>,
}

impl AdjointRules {
    /// `φ̂† = φ̂`, `λ̂† = λ̂`, `(ĉ^a)† = c̄̂_a`, `(c̄̂_a)† = ĉ^a`.
    pub fn standard(dim: usize) -> Self {
        let mut map = HashMap::new();
        for a in 0..dim {
            map.insert(OpGen::Phi(a), OpGen::Phi(a));
            map.insert(OpGen::Lambda(a), OpGen::Lambda(a));
            map.insert(OpGen::C(a), OpGen::CBar(a));
            map.insert(OpGen::CBar(a), OpGen::C(a));
        }
        AdjointRules { map }
    }

    pub fn from_map(map: HashMap<OpGen, OpGen>) -> Self {
        AdjointRules { map }
    }

    pub fn set(&mut self, g: OpGen, image: OpGen) {
        self.map.insert(g, image);
    }

    pub fn remove(&mut self, g: OpGen) {
        self.map.remove(&g);
    }

    fn validate(&self, dim: usize) -> Result<()> {
        for a in 0..dim {
            for g in [OpGen::Phi(a), OpGen::C(a), OpGen::CBar(a), OpGen::Lambda(a)] {
                match self.map.get(&g) {
                    Some(img) if img.index() < dim => {}
                    Some(img) => {
                        return Err(Error::Config(format!(
                            "adjoint of {} maps outside the phase space ({})",
                            g.name(),
                            img.name()
                        )))
                    }
                    None => {
                        return Err(Error::Config(format!(
                            "adjoint rule table has no entry for {}",
                            g.name()
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    fn image(&self, g: OpGen) -> OpGen {
        self.map[&g]
    }
}

fn sum_over<F>(dim: usize, mut f: F) -> Result<OperatorSum>
where
    F: FnMut(&mut OperatorSum) -> Result<()>,
{
    let mut acc = OperatorSum::zero(dim);
    f(&mut acc)?;
    Ok(acc)
}

/// `λ̂_a ω^{ab} ∂_b H`: the ghost-free sector of the Lie-derivative Hamiltonian.
pub fn liouvillian(model: &PhaseSpaceModel) -> Result<OperatorSum> {
    let dim = model.dim();
    let h = model.hamiltonian();
    sum_over(dim, |acc| {
        for a in 0..dim {
            for b in 0..dim {
                let w = model.omega_upper(a, b);
                if w == 0 {
                    continue;
                }
                let term = OperatorSum::lambda(dim, a)
                    .compose(&OperatorSum::from_poly(&h.deriv(b)))?
                    .scale(&Scalar::int(w));
                *acc = acc.add(&term)?;
            }
        }
        Ok(())
    })
}

/// `H̃ = λ̂_a ω^{ab} ∂_b H + i c̄̂_a ω^{ab} ∂_b∂_d H ĉ^d`.
pub fn lie_derivative(model: &PhaseSpaceModel) -> Result<OperatorSum> {
    let dim = model.dim();
    let h = model.hamiltonian();
    let ghost = sum_over(dim, |acc| {
        for a in 0..dim {
            for b in 0..dim {
                let w = model.omega_upper(a, b);
                if w == 0 {
                    continue;
                }
                for d in 0..dim {
                    let hess = h.deriv(b).deriv(d);
                    if hess.is_zero() {
                        continue;
                    }
                    let term = OperatorSum::cbar(dim, a)
                        .compose(&OperatorSum::from_poly(&hess))?
                        .compose(&OperatorSum::c(dim, d))?
                        .scale(&Scalar::int(w).mul_i_pow(1));
                    *acc = acc.add(&term)?;
                }
            }
        }
        Ok(())
    })?;
    liouvillian(model)?.add(&ghost)
}

/// The BRS, antiBRS and supersymmetry charges of a model.
#[derive(Clone, Debug, PartialEq)]
pub struct Charges {
    pub q_brs: OperatorSum,
    pub qbar_brs: OperatorSum,
    pub q_h: OperatorSum,
    pub qbar_h: OperatorSum,
}

impl Charges {
    pub fn named(&self) -> [(&'static str, &OperatorSum); 4] {
        [
            ("Q_BRS", &self.q_brs),
            ("Qbar_BRS", &self.qbar_brs),
            ("Q_H", &self.q_h),
            ("Qbar_H", &self.qbar_h),
        ]
    }
}

pub fn charges(model: &PhaseSpaceModel) -> Result<Charges> {
    let dim = model.dim();
    let h = model.hamiltonian();
    let i = Scalar::i();
    let q_brs = sum_over(dim, |acc| {
        for a in 0..dim {
            let t = OperatorSum::c(dim, a).compose(&OperatorSum::lambda(dim, a))?;
            *acc = acc.add(&t.scale(&i))?;
        }
        Ok(())
    })?;
    let qbar_brs = sum_over(dim, |acc| {
        for a in 0..dim {
            for b in 0..dim {
                let w = model.omega_upper(a, b);
                if w == 0 {
                    continue;
                }
                let t = OperatorSum::cbar(dim, a).compose(&OperatorSum::lambda(dim, b))?;
                *acc = acc.add(&t.scale(&Scalar::int(w).mul_i_pow(1)))?;
            }
        }
        Ok(())
    })?;
    let c_dh = sum_over(dim, |acc| {
        for a in 0..dim {
            let t = OperatorSum::c(dim, a).compose(&OperatorSum::from_poly(&h.deriv(a)))?;
            *acc = acc.add(&t)?;
        }
        Ok(())
    })?;
    let cbar_w_dh = sum_over(dim, |acc| {
        for a in 0..dim {
            for b in 0..dim {
                let w = model.omega_upper(a, b);
                if w == 0 {
                    continue;
                }
                let t = OperatorSum::cbar(dim, a).compose(&OperatorSum::from_poly(&h.deriv(b)))?;
                *acc = acc.add(&t.scale(&Scalar::int(w)))?;
            }
        }
        Ok(())
    })?;
    Ok(Charges {
        q_h: q_brs.sub(&c_dh)?,
        qbar_h: qbar_brs.add(&cbar_w_dh)?,
        q_brs,
        qbar_brs,
    })
}

/// One exact identity and its residual (zero iff it holds).
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityCheck {
    pub name: String,
    pub residual: OperatorSum,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.residual.is_zero()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChargeAlgebraReport {
    pub lie_derivative: OperatorSum,
    pub checks: Vec<IdentityCheck>,
}

impl ChargeAlgebraReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(IdentityCheck::passed)
    }

    /// Fails with the first identity whose residual is nonzero.
    pub fn into_result(self) -> Result<Self> {
        if let Some(bad) = self.checks.iter().find(|c| !c.passed()) {
            return Err(Error::Verification {
                identity: bad.name.clone(),
                residual: bad.residual.to_string(),
            });
        }
        Ok(self)
    }
}

/// Exact residuals of the charge algebra: susy closure on `2iH̃`, nilpotency of
/// all four charges, BRS/antiBRS anticommutation, conservation of every charge,
/// and agreement of the ghost-free sector of `H̃` with the Liouvillian.
pub fn verify_charge_algebra(model: &PhaseSpaceModel) -> Result<ChargeAlgebraReport> {
    let ht = lie_derivative(model)?;
    let q = charges(model)?;
    let mut checks = Vec::new();
    let mut push =
        |name: String, residual: OperatorSum| checks.push(IdentityCheck { name, residual });

    let closure = q
        .q_h
        .anticommutator(&q.qbar_h)?
        .sub(&ht.scale(&Scalar::int(2).mul_i_pow(1)))?;
    push("[Q_H, Qbar_H]_+ - 2i Htilde".into(), closure);
    for (name, x) in q.named() {
        push(format!("({name})^2"), x.compose(x)?);
    }
    push(
        "[Q_BRS, Qbar_BRS]_+".into(),
        q.q_brs.anticommutator(&q.qbar_brs)?,
    );
    for (name, x) in q.named() {
        push(format!("[{name}, Htilde]"), x.commutator(&ht)?);
    }
    push(
        "ghost-free(Htilde) - Liouvillian".into(),
        ht.ghost_free_part().sub(&liouvillian(model)?)?,
    );
    Ok(ChargeAlgebraReport {
        lie_derivative: ht,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const D: usize = 2;
    const Q: usize = 0;
    const P: usize = 1;

    fn model(h: Poly) -> PhaseSpaceModel {
        PhaseSpaceModel::new(1, h).unwrap()
    }

    fn q() -> Poly {
        Poly::var(D, Q)
    }

    fn p() -> Poly {
        Poly::var(D, P)
    }

    fn ho() -> Poly {
        q().pow(2).add(&p().pow(2)).scale(&Scalar::ratio(1, 2))
    }

    fn i() -> Scalar {
        Scalar::i()
    }

    #[test]
    fn lambda_q_times_q() {
        let lhs = OperatorSum::lambda(D, Q)
            .compose(&OperatorSum::phi(D, Q))
            .unwrap();
        let rhs = OperatorSum::phi(D, Q)
            .compose(&OperatorSum::lambda(D, Q))
            .unwrap()
            .sub(&OperatorSum::scalar(D, i()))
            .unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn cbar_times_c() {
        let lhs = OperatorSum::cbar(D, Q)
            .compose(&OperatorSum::c(D, Q))
            .unwrap();
        let rhs = OperatorSum::identity(D)
            .sub(
                &OperatorSum::c(D, Q)
                    .compose(&OperatorSum::cbar(D, Q))
                    .unwrap(),
            )
            .unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn identity_is_neutral() {
        let a = liouvillian(&model(ho())).unwrap();
        assert_eq!(a.compose(&OperatorSum::identity(D)).unwrap(), a);
        assert_eq!(OperatorSum::identity(D).compose(&a).unwrap(), a);
    }

    #[test]
    fn canonical_commutators() {
        let br = |x: OperatorSum, y: OperatorSum| x.commutator(&y).unwrap();
        assert!(br(OperatorSum::phi(D, Q), OperatorSum::phi(D, P)).is_zero());
        assert!(br(OperatorSum::lambda(D, Q), OperatorSum::lambda(D, P)).is_zero());
        for a in 0..D {
            for b in 0..D {
                let expected = if a == b {
                    OperatorSum::scalar(D, i())
                } else {
                    OperatorSum::zero(D)
                };
                assert_eq!(
                    br(OperatorSum::phi(D, a), OperatorSum::lambda(D, b)),
                    expected
                );
            }
        }
    }

    #[test]
    fn ghost_anticommutators() {
        let ac = |x: OperatorSum, y: OperatorSum| x.anticommutator(&y).unwrap();
        for a in 0..D {
            for b in 0..D {
                let expected = if a == b {
                    OperatorSum::identity(D)
                } else {
                    OperatorSum::zero(D)
                };
                assert_eq!(ac(OperatorSum::c(D, a), OperatorSum::cbar(D, b)), expected);
                assert!(ac(OperatorSum::c(D, a), OperatorSum::c(D, b)).is_zero());
                assert!(ac(OperatorSum::cbar(D, a), OperatorSum::cbar(D, b)).is_zero());
            }
        }
    }

    #[test]
    fn liouvillian_examples() {
        // p λ_q − q λ_p
        let expected = OperatorSum::phi(D, P)
            .compose(&OperatorSum::lambda(D, Q))
            .unwrap()
            .sub(
                &OperatorSum::phi(D, Q)
                    .compose(&OperatorSum::lambda(D, P))
                    .unwrap(),
            )
            .unwrap();
        assert_eq!(liouvillian(&model(ho())).unwrap(), expected);
        assert!(liouvillian(&model(Poly::zero(D))).unwrap().is_zero());
        assert_eq!(
            liouvillian(&model(q())).unwrap(),
            OperatorSum::lambda(D, P).neg()
        );
    }

    #[test]
    fn lie_derivative_examples() {
        assert!(lie_derivative(&model(Poly::zero(D))).unwrap().is_zero());
        assert_eq!(
            lie_derivative(&model(q())).unwrap(),
            OperatorSum::lambda(D, P).neg()
        );
        // ghost part i(c̄_q c^p − c̄_p c^q) = i(−c^p c̄_q + c^q c̄_p)
        let ghost = OperatorSum::c(D, Q)
            .compose(&OperatorSum::cbar(D, P))
            .unwrap()
            .sub(
                &OperatorSum::c(D, P)
                    .compose(&OperatorSum::cbar(D, Q))
                    .unwrap(),
            )
            .unwrap()
            .scale(&i());
        let expected = liouvillian(&model(ho())).unwrap().add(&ghost).unwrap();
        assert_eq!(lie_derivative(&model(ho())).unwrap(), expected);
    }

    #[test]
    fn charge_examples() {
        let ch = charges(&model(Poly::zero(D))).unwrap();
        let brs = OperatorSum::c(D, Q)
            .compose(&OperatorSum::lambda(D, Q))
            .unwrap()
            .add(
                &OperatorSum::c(D, P)
                    .compose(&OperatorSum::lambda(D, P))
                    .unwrap(),
            )
            .unwrap()
            .scale(&i());
        assert_eq!(ch.q_brs, brs);
        assert_eq!(ch.q_h, ch.q_brs);

        let ch = charges(&model(q())).unwrap();
        let expected = OperatorSum::cbar(D, Q)
            .compose(&OperatorSum::lambda(D, P))
            .unwrap()
            .sub(
                &OperatorSum::cbar(D, P)
                    .compose(&OperatorSum::lambda(D, Q))
                    .unwrap(),
            )
            .unwrap()
            .scale(&i())
            .sub(&OperatorSum::cbar(D, P))
            .unwrap();
        assert_eq!(ch.qbar_h, expected);
    }

    #[test]
    fn charge_algebra_holds() {
        for h in [ho(), Poly::zero(D), q().pow(3)] {
            let report = verify_charge_algebra(&model(h.clone())).unwrap();
            assert_eq!(report.checks.len(), 11);
            for c in &report.checks {
                assert!(c.passed(), "{} failed for H = {h}: {}", c.name, c.residual);
            }
        }
        let zero = verify_charge_algebra(&model(Poly::zero(D))).unwrap();
        assert!(zero.lie_derivative.is_zero());
    }

    /// Brute-force [Q_H, Qbar_H]_+ for H = q³ by expanding every monomial
    /// product through explicit generator words.
    #[test]
    fn cubic_closure_by_word_expansion() {
        let m = model(q().pow(3));
        let ch = charges(&m).unwrap();
        let expand = |a: &OperatorSum, b: &OperatorSum| {
            let mut acc = OperatorSum::zero(D);
            for (ka, ca) in a.terms() {
                for (kb, cb) in b.terms() {
                    let mut t = OperatorSum::scalar(D, ca * cb);
                    for g in OperatorSum::word(ka)
                        .into_iter()
                        .chain(OperatorSum::word(kb))
                    {
                        t = t.compose(&OperatorSum::generator(D, g)).unwrap();
                    }
                    acc = acc.add(&t).unwrap();
                }
            }
            acc
        };
        let brute = expand(&ch.q_h, &ch.qbar_h)
            .add(&expand(&ch.qbar_h, &ch.q_h))
            .unwrap();
        let ht = lie_derivative(&m).unwrap();
        assert_eq!(brute, ht.scale(&Scalar::int(2).mul_i_pow(1)));
    }

    #[test]
    fn broken_identity_is_reported() {
        let m = model(ho());
        let mut report = verify_charge_algebra(&m).unwrap();
        report.checks[0].residual = OperatorSum::identity(D);
        let err = report.into_result().unwrap_err();
        assert!(
            matches!(err, Error::Verification { ref identity, .. } if identity.starts_with("[Q_H"))
        );
    }

    #[test]
    fn adjoint_examples() {
        let rules = AdjointRules::standard(D);
        let qhat = OperatorSum::phi(D, Q);
        assert_eq!(qhat.adjoint(&rules).unwrap(), qhat);
        let il = OperatorSum::lambda(D, Q).scale(&i());
        assert_eq!(il.adjoint(&rules).unwrap(), il.neg());
        let ql = qhat.compose(&OperatorSum::lambda(D, Q)).unwrap();
        let expected = ql.sub(&OperatorSum::scalar(D, i())).unwrap();
        assert_eq!(ql.adjoint(&rules).unwrap(), expected);
    }

    #[test]
    fn hermiticity() {
        let rules = AdjointRules::standard(D);
        assert!(OperatorSum::phi(D, Q).is_hermitian(&rules).unwrap());
        assert!(OperatorSum::lambda(D, Q).is_hermitian(&rules).unwrap());
        let ql = OperatorSum::phi(D, Q)
            .compose(&OperatorSum::lambda(D, Q))
            .unwrap();
        assert!(!ql.is_hermitian(&rules).unwrap());
        assert!(liouvillian(&model(ho()))
            .unwrap()
            .is_hermitian(&rules)
            .unwrap());
    }

    #[test]
    fn incomplete_adjoint_rules_rejected() {
        let mut rules = AdjointRules::standard(D);
        rules.remove(OpGen::C(P));
        assert!(matches!(
            OperatorSum::phi(D, Q).adjoint(&rules),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn adjoint_is_involutive() {
        let rules = AdjointRules::standard(D);
        let ch = charges(&model(ho())).unwrap();
        for (_, x) in ch.named() {
            assert_eq!(&x.adjoint(&rules).unwrap().adjoint(&rules).unwrap(), x);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(OperatorSum::phi(2, 0)
            .compose(&OperatorSum::phi(4, 0))
            .is_err());
    }

    #[test]
    fn fermion_ordering_three_factors() {
        // c̄_q c^q c̄_q = c̄_q − c^q c̄_q c̄_q = c̄_q
        let x = OperatorSum::cbar(D, Q)
            .compose(&OperatorSum::c(D, Q))
            .unwrap()
            .compose(&OperatorSum::cbar(D, Q))
            .unwrap();
        assert_eq!(x, OperatorSum::cbar(D, Q));
    }
}
