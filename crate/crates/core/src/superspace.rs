//! Polynomials in commuting jet fields with Grassmann-valued coefficients.
//!
//! The commuting symbols are `φ^a`, `λ_a` and their time derivatives up to
//! second order (second derivatives only appear inside the Euler operator).
//! Coefficients live in the superspace Grassmann algebra: `θ, θ̄`, ghosts and
//! antighosts with their jets, and the nilpotent pair `ε, ε̇`.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grassmann::{Blade, GeneratorKind, GeneratorRegistry, Multivector};
use crate::model::PhaseSpaceModel;
use crate::poly::Poly;
use crate::scalar::Scalar;
use crate::superops::OperatorSum;

/// Highest time-derivative order representable.
pub const MAX_JET: u8 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Field {
    Phi,
    Lambda,
}

/// Shared symbol table for one phase-space dimension.
#[derive(Debug, PartialEq, Eq)]
pub struct Superspace {
    dim: usize,
    registry: Arc<GeneratorRegistry>,
    theta: usize,
    thetabar: usize,
    eps: usize,
    epsdot: usize,
}

impl Superspace {
    pub fn new(dim: usize) -> Result<Arc<Self>> {
        let registry = Arc::new(GeneratorRegistry::superspace(dim, MAX_JET)?);
        Ok(Arc::new(Superspace {
            dim,
            theta: registry.position("theta")?,
            thetabar: registry.position("thetabar")?,
            eps: registry.position("eps")?,
            epsdot: registry.position("epsdot")?,
            registry,
        }))
    }

    pub fn for_model(model: &PhaseSpaceModel) -> Result<Arc<Self>> {
        Superspace::new(model.dim())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn registry(&self) -> &Arc<GeneratorRegistry> {
        &self.registry
    }

    pub fn nvars(&self) -> usize {
        2 * self.dim * (MAX_JET as usize + 1)
    }

    pub fn var_index(&self, field: Field, a: usize, order: u8) -> usize {
        let f = match field {
            Field::Phi => 0,
            Field::Lambda => 1,
        };
        (order as usize * 2 + f) * self.dim + a
    }

    pub fn var_info(&self, index: usize) -> (Field, usize, u8) {
        let a = index % self.dim;
        let rest = index / self.dim;
        let field = if rest % 2 == 0 {
            Field::Phi
        } else {
            Field::Lambda
        };
        (field, a, (rest / 2) as u8)
    }

    pub fn var_name(&self, index: usize) -> String {
        let (field, a, order) = self.var_info(index);
        let coord = format!("{}_{}", if a % 2 == 0 { "q" } else { "p" }, a / 2 + 1);
        let dots = ["", "dot", "ddot"][order as usize];
        match field {
            Field::Phi => {
                if order == 0 {
                    coord
                } else {
                    format!("{dots}{coord}")
                }
            }
            Field::Lambda => format!("lam{dots}_{coord}"),
        }
    }

    pub fn ghost(&self, a: usize, order: u8) -> usize {
        self.registry
            .find(GeneratorKind::Ghost, Some(a), order)
            .expect("ghost jets are registered up to MAX_JET")
    }

    pub fn antighost(&self, a: usize, order: u8) -> usize {
        self.registry
            .find(GeneratorKind::Antighost, Some(a), order)
            .expect("antighost jets are registered up to MAX_JET")
    }

    pub fn theta(&self) -> usize {
        self.theta
    }

    pub fn thetabar(&self) -> usize {
        self.thetabar
    }

    pub fn eps(&self) -> usize {
        self.eps
    }

    pub fn epsdot(&self) -> usize {
        self.epsdot
    }
}

type Key = (Vec<u32>, Blade);

/// `Σ c · (jet monomial) · (blade)`, jet monomials commuting with everything.
#[derive(Clone, PartialEq, Eq)]
pub struct SuperspaceExpression {
    space: Arc<Superspace>,
    terms: BTreeMap<Key, Scalar>,
}

pub type Sse = SuperspaceExpression;

impl SuperspaceExpression {
    pub fn zero(space: &Arc<Superspace>) -> Self {
        SuperspaceExpression {
            space: space.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(space: &Arc<Superspace>, c: Scalar) -> Self {
        let mut s = Sse::zero(space);
        s.add_term(vec![0; space.nvars()], Blade::ONE, c);
        s
    }

    pub fn one(space: &Arc<Superspace>) -> Self {
        Sse::constant(space, Scalar::one())
    }

    pub fn field(space: &Arc<Superspace>, field: Field, a: usize, order: u8) -> Self {
        let mut e = vec![0; space.nvars()];
        e[space.var_index(field, a, order)] = 1;
        let mut s = Sse::zero(space);
        s.add_term(e, Blade::ONE, Scalar::one());
        s
    }

    pub fn phi(space: &Arc<Superspace>, a: usize) -> Self {
        Sse::field(space, Field::Phi, a, 0)
    }

    pub fn lambda(space: &Arc<Superspace>, a: usize) -> Self {
        Sse::field(space, Field::Lambda, a, 0)
    }

    /// The Grassmann generator at registry position `pos`.
    pub fn generator(space: &Arc<Superspace>, pos: usize) -> Self {
        Sse::from_multivector(space, &Multivector::generator_at(space.registry(), pos))
    }

    pub fn ghost(space: &Arc<Superspace>, a: usize) -> Self {
        Sse::generator(space, space.ghost(a, 0))
    }

    pub fn antighost(space: &Arc<Superspace>, a: usize) -> Self {
        Sse::generator(space, space.antighost(a, 0))
    }

    pub fn theta(space: &Arc<Superspace>) -> Self {
        Sse::generator(space, space.theta())
    }

    pub fn thetabar(space: &Arc<Superspace>) -> Self {
        Sse::generator(space, space.thetabar())
    }

    pub fn from_multivector(space: &Arc<Superspace>, m: &Multivector) -> Self {
        let mut s = Sse::zero(space);
        for (b, c) in m.terms() {
            s.add_term(vec![0; space.nvars()], *b, c.clone());
        }
        s
    }

    /// Embed a polynomial in the undifferentiated `φ^a`.
    pub fn from_poly(space: &Arc<Superspace>, p: &Poly) -> Self {
        assert_eq!(p.nvars(), space.dim());
        let mut s = Sse::zero(space);
        for (e, c) in p.terms() {
            let mut full = vec![0; space.nvars()];
            for (a, &k) in e.iter().enumerate() {
                full[space.var_index(Field::Phi, a, 0)] = k;
            }
            s.add_term(full, Blade::ONE, c.clone());
        }
        s
    }

    /// Symbol map of a normal-ordered operator: `φ̂ → φ`, `λ̂ → λ`,
    /// `ĉ → c`, `c̄̂ → c̄`, factors kept in normal order.
    pub fn classical_image(space: &Arc<Superspace>, op: &OperatorSum) -> Result<Self> {
        if op.dim() != space.dim() {
            return Err(Error::Config(
                "operator and superspace dimensions differ".into(),
            ));
        }
        let mut out = Sse::zero(space);
        for (k, c) in op.terms() {
            let mut e = vec![0; space.nvars()];
            for a in 0..space.dim() {
                e[space.var_index(Field::Phi, a, 0)] = k.phi[a];
                e[space.var_index(Field::Lambda, a, 0)] = k.lambda[a];
            }
            let mut term = Sse::zero(space);
            term.add_term(e, Blade::ONE, c.clone());
            for a in 0..space.dim() {
                if k.c >> a & 1 == 1 {
                    term = term.mul(&Sse::ghost(space, a));
                }
            }
            for a in 0..space.dim() {
                if k.cbar >> a & 1 == 1 {
                    term = term.mul(&Sse::antighost(space, a));
                }
            }
            out = out.add(&term);
        }
        Ok(out)
    }

    pub fn space(&self) -> &Arc<Superspace> {
        &self.space
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

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Blade, &Scalar)> {
        self.terms.iter().map(|((e, b), c)| (e, b, c))
    }

    pub fn add_term(&mut self, exps: Vec<u32>, blade: Blade, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry((exps, blade)) {
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

    fn assert_same_space(&self, other: &Sse) {
        assert!(
            Arc::ptr_eq(&self.space, &other.space) || *self.space == *other.space,
            "superspace expressions over different spaces"
        );
    }

    pub fn add(&self, other: &Sse) -> Sse {
        self.assert_same_space(other);
        let mut out = self.clone();
        for ((e, b), c) in &other.terms {
            out.add_term(e.clone(), *b, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Sse) -> Sse {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Sse {
        self.scale(&Scalar::int(-1))
    }

    pub fn scale(&self, k: &Scalar) -> Sse {
        let mut out = Sse::zero(&self.space);
        for ((e, b), c) in &self.terms {
            out.add_term(e.clone(), *b, c * k);
        }
        out
    }

    pub fn mul(&self, other: &Sse) -> Sse {
        self.assert_same_space(other);
        let mut out = Sse::zero(&self.space);
        for ((ea, ba), ca) in &self.terms {
            for ((eb, bb), cb) in &other.terms {
                if let Some((neg, blade)) = ba.mul(*bb) {
                    let e = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                    let c = ca * cb;
                    out.add_term(e, blade, if neg { -c } else { c });
                }
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Sse {
        (0..k).fold(Sse::one(&self.space), |acc, _| acc.mul(self))
    }

    /// Partial derivative with respect to a commuting jet variable.
    pub fn partial(&self, var: usize) -> Sse {
        let mut out = Sse::zero(&self.space);
        for ((e, b), c) in &self.terms {
            let k = e[var];
            if k == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[var] -= 1;
            out.add_term(e2, *b, c.scale_int(k as i64));
        }
        out
    }

    /// The Grassmann part of the terms sharing one jet monomial.
    fn blade_multivector(&self, blade: Blade, c: &Scalar) -> Multivector {
        Multivector::from_blade(self.space.registry(), blade, c.clone())
    }

    /// Apply a Grassmann-linear map to the coefficient of every jet monomial.
    fn map_grassmann<F>(&self, mut f: F) -> Result<Sse>
    where
        F: FnMut(&Multivector) -> Result<Multivector>,
    {
        let mut out = Sse::zero(&self.space);
        for ((e, b), c) in &self.terms {
            let image = f(&self.blade_multivector(*b, c))?;
            for (b2, c2) in image.terms() {
                out.add_term(e.clone(), *b2, c2.clone());
            }
        }
        Ok(out)
    }

    /// Left derivative with respect to the odd generator at `pos`.
    pub fn gderiv(&self, pos: usize) -> Result<Sse> {
        self.map_grassmann(|m| m.gderiv_at(pos))
    }

    /// `∫ dθ dθ̄ (·)`
    pub fn berezin_theta(&self) -> Result<Sse> {
        self.map_grassmann(|m| m.berezin(&["theta", "thetabar"]))
    }

    /// Set the listed generators to zero.
    pub fn drop_generators(&self, positions: &[usize]) -> Sse {
        self.map_grassmann(|m| Ok(m.drop_generators(positions)))
            .expect("dropping generators cannot fail")
    }

    pub fn contains_generator(&self, pos: usize) -> bool {
        let reg = self.space.registry();
        self.terms
            .keys()
            .any(|(_, b)| Multivector::from_blade(reg, *b, Scalar::one()).contains_generator(pos))
    }

    /// Highest time-derivative order among commuting and ghost jets present.
    pub fn max_jet_order(&self) -> u8 {
        let reg = self.space.registry();
        let probe = Multivector::zero(reg);
        let mut max = 0;
        for ((e, b), _) in &self.terms {
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    max = max.max(self.space.var_info(i).2);
                }
            }
            for pos in probe.odd_positions(*b) {
                max = max.max(reg.generator(pos).order);
            }
            if probe.even_position(*b) == Some(self.space.epsdot()) {
                max = max.max(1);
            }
        }
        max
    }

    /// Total time derivative: commuting jets and ghosts advance one order,
    /// `ε → ε̇`, `θ, θ̄` are constant.
    pub fn time_derivative(&self) -> Result<Sse> {
        let mut out = Sse::zero(&self.space);
        for ((e, b), c) in &self.terms {
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let (field, a, order) = self.space.var_info(i);
                if order >= MAX_JET {
                    return Err(Error::UnsupportedInput(format!(
                        "time derivative of {} exceeds the jet order",
                        self.space.var_name(i)
                    )));
                }
                let mut e2 = e.clone();
                e2[i] -= 1;
                e2[self.space.var_index(field, a, order + 1)] += 1;
                out.add_term(e2, *b, c.scale_int(k as i64));
            }
            let dm = self.blade_multivector(*b, c).time_derivative()?;
            for (b2, c2) in dm.terms() {
                out.add_term(e.clone(), *b2, c2.clone());
            }
        }
        Ok(out)
    }

    /// Split by dependence on `θ, θ̄`: returns the components `(A, B, C, D)`
    /// of `A + θB + θ̄C + θ̄θD`, each free of `θ` and `θ̄`.
    pub fn theta_components(&self) -> Result<[Sse; 4]> {
        let (t, tb) = (self.space.theta(), self.space.thetabar());
        let a = self.drop_generators(&[t, tb]);
        let b = self.gderiv(t)?.drop_generators(&[tb]);
        let c = self.gderiv(tb)?.drop_generators(&[t]);
        let d = self.gderiv(tb)?.gderiv(t)?;
        Ok([a, b, c, d])
    }

    /// First-order variation under the substitutions `x_i → x_i + δ_i` for
    /// commuting jet variables and `g → g + δ_g` for odd generators, with all
    /// shifts evaluated at the unshifted fields. Exact when every shift is
    /// first order in a nilpotent parameter.
    pub fn first_order_variation(
        &self,
        var_shifts: &[(usize, Sse)],
        gen_shifts: &[(usize, Sse)],
    ) -> Sse {
        let mut out = Sse::zero(&self.space);
        for (var, shift) in var_shifts {
            out = out.add(&self.partial(*var).mul(shift));
        }
        if gen_shifts.is_empty() {
            return out;
        }
        let reg = self.space.registry().clone();
        let probe = Multivector::zero(&reg);
        for ((e, b), c) in &self.terms {
            let positions = probe.odd_positions(*b);
            for (i, pos) in positions.iter().enumerate() {
                let Some((_, shift)) = gen_shifts.iter().find(|(g, _)| g == pos) else {
                    continue;
                };
                let mut prefix = Sse::zero(&self.space);
                prefix.add_term(e.clone(), Blade::ONE, c.clone());
                if let Some(even) = probe.even_position(*b) {
                    prefix = prefix.mul(&Sse::generator(&self.space, even));
                }
                for &p in &positions[..i] {
                    prefix = prefix.mul(&Sse::generator(&self.space, p));
                }
                let mut term = prefix.mul(shift);
                for &p in &positions[i + 1..] {
                    term = term.mul(&Sse::generator(&self.space, p));
                }
                out = out.add(&term);
            }
        }
        out
    }

    /// `f(x + N)` for shifts `N_i` independent of the shifted variables, by
    /// Taylor expansion up to `max_order`. Returns the expansion and the first
    /// omitted Taylor term (zero when the truncation is exact).
    pub fn taylor_shift(&self, shifts: &[(usize, Sse)], max_order: u32) -> (Sse, Sse) {
        let mut total = self.clone();
        let mut term = self.clone();
        for k in 1..=max_order + 1 {
            let mut next = Sse::zero(&self.space);
            for (var, n) in shifts {
                next = next.add(&term.partial(*var).mul(n));
            }
            term = next.scale(&Scalar::ratio(1, k as i64));
            if k <= max_order {
                total = total.add(&term);
            }
        }
        (total, term)
    }

    /// Coefficient multivector of the jet monomial `exps`.
    pub fn coefficient(&self, exps: &[u32]) -> Multivector {
        let mut m = Multivector::zero(self.space.registry());
        for ((e, b), c) in &self.terms {
            if e.as_slice() == exps {
                m.add_term(*b, c.clone());
            }
        }
        m
    }
}

impl fmt::Display for SuperspaceExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let probe = Multivector::zero(self.space.registry());
        let rendered: Vec<(&Scalar, String)> = self
            .terms
            .iter()
            .map(|((e, b), c)| {
                let mut parts: Vec<String> = e
                    .iter()
                    .enumerate()
                    .filter(|(_, &k)| k > 0)
                    .map(|(i, &k)| {
                        let n = self.space.var_name(i);
                        if k == 1 {
                            n
                        } else {
                            format!("{n}^{k}")
                        }
                    })
                    .collect();
                let bl = probe.blade_label(*b);
                if !bl.is_empty() {
                    parts.push(bl);
                }
                (c, parts.join("*"))
            })
            .collect();
        crate::poly::fmt_terms(f, rendered)
    }
}

impl fmt::Debug for SuperspaceExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space() -> Arc<Superspace> {
        Superspace::new(2).unwrap()
    }

    #[test]
    fn time_derivative_of_product() {
        let s = space();
        let (q, p) = (Sse::phi(&s, 0), Sse::phi(&s, 1));
        let qp = q.mul(&p);
        let expected = Sse::field(&s, Field::Phi, 0, 1)
            .mul(&p)
            .add(&q.mul(&Sse::field(&s, Field::Phi, 1, 1)));
        assert_eq!(qp.time_derivative().unwrap(), expected);
        let qdd = Sse::field(&s, Field::Phi, 0, 2);
        assert!(qdd.time_derivative().is_err());
    }

    #[test]
    fn theta_components_roundtrip() {
        let s = space();
        let (t, tb) = (Sse::theta(&s), Sse::thetabar(&s));
        let (a, b, c, d) = (
            Sse::phi(&s, 0),
            Sse::ghost(&s, 0),
            Sse::antighost(&s, 1),
            Sse::lambda(&s, 1),
        );
        let x = a.add(&t.mul(&b)).add(&tb.mul(&c)).add(&tb.mul(&t).mul(&d));
        let [a2, b2, c2, d2] = x.theta_components().unwrap();
        assert_eq!((a2, b2, c2, d2), (a, b, c, d));
    }

    #[test]
    fn taylor_matches_direct_substitution() {
        let s = space();
        let n = Sse::theta(&s).mul(&Sse::ghost(&s, 0));
        let q = Sse::phi(&s, 0);
        let f = q.pow(3);
        let (shifted, rest) = f.taylor_shift(&[(s.var_index(Field::Phi, 0, 0), n.clone())], 1);
        assert!(rest.is_zero());
        assert_eq!(shifted, q.add(&n).pow(3));
    }

    #[test]
    fn classical_image_keeps_normal_order() {
        let s = space();
        let op = OperatorSum::c(2, 1)
            .compose(&OperatorSum::cbar(2, 0))
            .unwrap();
        let img = Sse::classical_image(&s, &op).unwrap();
        assert_eq!(img, Sse::ghost(&s, 1).mul(&Sse::antighost(&s, 0)));
    }
}
