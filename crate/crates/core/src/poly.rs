//! Commuting polynomials over phase-space coordinates.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use crate::scalar::Scalar;

/// Exponent vector, one entry per variable.
pub type Exponents = Vec<u32>;

/// Polynomial in `nvars` commuting variables with exact coefficients.
///
/// Variables are the phase-space coordinates `φ^1..φ^{2n}` stored 0-based and
/// interleaved per degree of freedom: index `2k` is `q_{k+1}`, `2k + 1` is
/// `p_{k+1}`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Exponents, Scalar>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Scalar) -> Self {
        let mut p = Poly::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Poly::constant(nvars, Scalar::one())
    }

    pub fn var(nvars: usize, index: usize) -> Self {
        assert!(index < nvars, "variable index out of range");
        let mut e = vec![0; nvars];
        e[index] = 1;
        let mut p = Poly::zero(nvars);
        p.add_term(e, Scalar::one());
        p
    }

    pub fn monomial(exps: Exponents, c: Scalar) -> Self {
        let mut p = Poly::zero(exps.len());
        p.add_term(exps, c);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &Scalar)> {
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

    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn add_term(&mut self, exps: Exponents, c: Scalar) {
        assert_eq!(exps.len(), self.nvars);
        if c.is_zero() {
            return;
        }
        match self.terms.entry(exps) {
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

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(&Scalar::int(-1)))
    }

    pub fn scale(&self, k: &Scalar) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * k);
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Poly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut out = Poly::one(self.nvars);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Partial derivative with respect to variable `index`.
    pub fn deriv(&self, index: usize) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            let k = e[index];
            if k == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[index] -= 1;
            out.add_term(e2, c.scale_int(k as i64));
        }
        out
    }

    /// Canonical Poisson bracket `Σ_k (∂_q A ∂_p B − ∂_p A ∂_q B)`.
    pub fn poisson(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for k in 0..self.nvars / 2 {
            let (q, p) = (2 * k, 2 * k + 1);
            out = out
                .add(&self.deriv(q).mul(&other.deriv(p)))
                .sub(&self.deriv(p).mul(&other.deriv(q)));
        }
        out
    }

    /// Evaluate the real part at a point (numeric boundary of the exact pipeline).
    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let (re, _) = c.to_f64_pair();
                e.iter()
                    .zip(x)
                    .fold(re, |acc, (&k, &v)| acc * v.powi(k as i32))
            })
            .sum()
    }

    pub fn is_real(&self) -> bool {
        self.terms.values().all(Scalar::is_real)
    }

    /// Splits a one-dof polynomial into `T(p) + V(q)` if it has no mixed terms.
    /// The constant term goes to `V`.
    pub fn split_separable(&self) -> Option<(Poly, Poly)> {
        if self.nvars != 2 {
            return None;
        }
        let mut t = Poly::zero(2);
        let mut v = Poly::zero(2);
        for (e, c) in &self.terms {
            match (e[0], e[1]) {
                (_, 0) => v.add_term(e.clone(), c.clone()),
                (0, _) => t.add_term(e.clone(), c.clone()),
                _ => return None,
            }
        }
        Some((t, v))
    }

    /// Coefficient of the given monomial (zero if absent).
    pub fn coeff(&self, exps: &[u32]) -> Scalar {
        self.terms.get(exps).cloned().unwrap_or_default()
    }

    /// Name of variable `index` in the interleaved convention (`q_1`, `p_1`, ...).
    pub fn var_name(index: usize) -> String {
        let k = index / 2 + 1;
        if index % 2 == 0 {
            format!("q_{k}")
        } else {
            format!("p_{k}")
        }
    }
}

pub(crate) fn fmt_terms<'a, I>(f: &mut fmt::Formatter<'_>, terms: I) -> fmt::Result
where
    I: IntoIterator<Item = (&'a Scalar, String)>,
{
    let mut first = true;
    for (c, body) in terms {
        if !first {
            write!(f, " + ")?;
        }
        first = false;
        match (body.is_empty(), c.is_one()) {
            (true, _) => write!(f, "{c}")?,
            (false, true) => write!(f, "{body}")?,
            (false, false) => write!(f, "{c}*{body}")?,
        }
    }
    if first {
        write!(f, "0")?;
    }
    Ok(())
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rendered = self.terms.iter().map(|(e, c)| {
            let body = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| {
                    if k == 1 {
                        Poly::var_name(i)
                    } else {
                        format!("{}^{}", Poly::var_name(i), k)
                    }
                })
                .collect::<Vec<_>>()
                .join("*");
            (c, body)
        });
        fmt_terms(f, rendered)
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
