//! Local superspace transformations, observable classification and the
//! Heisenberg-to-Schrödinger change of picture in `θ, θ̄`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grassmann::GeneratorKind;
use crate::model::PhaseSpaceModel;
use crate::poly::Poly;
use crate::scalar::Scalar;
use crate::superops::{charges, IdentityCheck, OperatorSum};
use crate::superspace::{Field, Sse, Superspace, MAX_JET};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TransformKind {
    /// `φ^a → φ^a + εθc^a`, `c^a → (1−ε)c^a`
    T1,
    /// `φ^a → φ^a + εθ̄ω^{ab}c̄_b`, `c̄_b → (1−ε)c̄_b`
    T2,
    /// `φ^a → φ^a + iεθ̄θφ^a`, `λ_b → λ_b − εω_{bc}φ^c`
    T3,
}

impl TransformKind {
    pub const ALL: [TransformKind; 3] = [TransformKind::T1, TransformKind::T2, TransformKind::T3];
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalTransformation {
    pub kind: TransformKind,
    /// Registry label of the even nilpotent parameter.
    pub epsilon: String,
}

impl LocalTransformation {
    pub fn new(kind: TransformKind) -> Self {
        LocalTransformation {
            kind,
            epsilon: "eps".into(),
        }
    }
}

/// Shifts of the undifferentiated fields, as (commuting var, shift) and
/// (odd generator, shift) lists.
type Shifts = (Vec<(usize, Sse)>, Vec<(usize, Sse)>);

fn base_shifts(
    space: &Arc<Superspace>,
    model: &PhaseSpaceModel,
    t: &LocalTransformation,
) -> Result<Shifts> {
    let reg = space.registry();
    let eps_pos = reg.position(&t.epsilon)?;
    if reg.generator(eps_pos).kind != GeneratorKind::Epsilon || reg.successor(eps_pos).is_none() {
        return Err(Error::Config(format!(
            "{} is not a nilpotent parameter with a registered time derivative",
            t.epsilon
        )));
    }
    let eps = Sse::generator(space, eps_pos);
    let dim = space.dim();
    let (th, tb) = (Sse::theta(space), Sse::thetabar(space));
    let mut vars = Vec::new();
    let mut gens = Vec::new();
    match t.kind {
        TransformKind::T1 => {
            for a in 0..dim {
                let c = Sse::ghost(space, a);
                vars.push((space.var_index(Field::Phi, a, 0), eps.mul(&th).mul(&c)));
                gens.push((space.ghost(a, 0), eps.mul(&c).neg()));
            }
        }
        TransformKind::T2 => {
            for a in 0..dim {
                let mut wc = Sse::zero(space);
                for b in 0..dim {
                    let w = model.omega_upper(a, b);
                    if w != 0 {
                        wc = wc.add(&Sse::antighost(space, b).scale(&Scalar::int(w)));
                    }
                }
                vars.push((space.var_index(Field::Phi, a, 0), eps.mul(&tb).mul(&wc)));
                let cb = Sse::antighost(space, a);
                gens.push((space.antighost(a, 0), eps.mul(&cb).neg()));
            }
        }
        TransformKind::T3 => {
            let tbt = tb.mul(&th).scale(&Scalar::i());
            for a in 0..dim {
                vars.push((
                    space.var_index(Field::Phi, a, 0),
                    eps.mul(&tbt).mul(&Sse::phi(space, a)),
                ));
            }
            for b in 0..dim {
                let mut wphi = Sse::zero(space);
                for c in 0..dim {
                    let w = model.omega_lower(b, c);
                    if w != 0 {
                        wphi = wphi.add(&Sse::phi(space, c).scale(&Scalar::int(w)));
                    }
                }
                vars.push((space.var_index(Field::Lambda, b, 0), eps.mul(&wphi).neg()));
            }
        }
    }
    Ok((vars, gens))
}

/// Apply a local transformation exactly (first order in the nilpotent `ε`).
/// Dotted fields move by the time derivative of their undotted shift.
pub fn local_transform(
    expr: &Sse,
    model: &PhaseSpaceModel,
    t: &LocalTransformation,
) -> Result<Sse> {
    let space = expr.space().clone();
    if space.dim() != model.dim() {
        return Err(Error::Config(
            "expression and model dimensions differ".into(),
        ));
    }
    if expr.max_jet_order() >= MAX_JET {
        return Err(Error::UnsupportedInput(
            "prolongation beyond first time derivatives needs a second derivative of the parameter"
                .into(),
        ));
    }
    let (mut vars, mut gens) = base_shifts(&space, model, t)?;
    let dotted_vars: Vec<(usize, Sse)> = vars
        .iter()
        .map(|(v, s)| {
            let (field, a, _) = space.var_info(*v);
            Ok((space.var_index(field, a, 1), s.time_derivative()?))
        })
        .collect::<Result<_>>()?;
    let reg = space.registry().clone();
    let dotted_gens: Vec<(usize, Sse)> = gens
        .iter()
        .map(|(g, s)| {
            let succ = reg.successor(*g).expect("ghost jets are registered");
            Ok((succ, s.time_derivative()?))
        })
        .collect::<Result<_>>()?;
    vars.extend(dotted_vars);
    gens.extend(dotted_gens);
    Ok(expr.add(&expr.first_order_variation(&vars, &gens)))
}

/// `local_transform(expr) − expr`
pub fn variation(expr: &Sse, model: &PhaseSpaceModel, kind: TransformKind) -> Result<Sse> {
    Ok(local_transform(expr, model, &LocalTransformation::new(kind))?.sub(expr))
}

pub fn is_invariant(
    expr: &Sse,
    model: &PhaseSpaceModel,
    kinds: &[TransformKind],
    include_dot: bool,
) -> Result<bool> {
    Ok(first_violation(expr, model, kinds, include_dot)?.is_none())
}

fn first_violation(
    expr: &Sse,
    model: &PhaseSpaceModel,
    kinds: &[TransformKind],
    include_dot: bool,
) -> Result<Option<(TransformKind, Sse)>> {
    let dotted = if include_dot {
        Some(expr.time_derivative()?)
    } else {
        None
    };
    for &k in kinds {
        for e in std::iter::once(expr).chain(dotted.as_ref()) {
            let r = variation(e, model, k)?;
            if !r.is_zero() {
                return Ok(Some((k, r)));
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Accepted {
        /// The `θ = θ̄ = 0`, ghost-free part, offered as a diagnostic.
        reconstruction: Sse,
    },
    Rejected {
        failing: TransformKind,
        residual: Sse,
    },
}

impl Verdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Verdict::Accepted { .. })
    }
}

/// Accept iff invariant (with its time derivative) under all three transformations.
pub fn classify_observable(expr: &Sse, model: &PhaseSpaceModel) -> Result<Verdict> {
    Ok(
        match first_violation(expr, model, &TransformKind::ALL, true)? {
            Some((failing, residual)) => Verdict::Rejected { failing, residual },
            None => {
                let space = expr.space();
                let reg = space.registry();
                let odd: Vec<usize> = (0..reg.entries().len())
                    .filter(|&p| reg.generator(p).kind.is_odd())
                    .collect();
                Verdict::Accepted {
                    reconstruction: expr.drop_generators(&odd),
                }
            }
        },
    )
}

/// Operator-valued function of `θ, θ̄`: `Σ_B B · O_B` over the blades
/// `1, θ, θ̄, θ̄θ` (in that index order), `θ`-blades written to the left.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperOperatorExpression {
    blades: [OperatorSum; 4],
}

pub const BLADE_NAMES: [&str; 4] = ["1", "theta", "thetabar", "thetabar*theta"];

/// `B_i B_j = sign · B_k`
fn blade_product(i: usize, j: usize) -> Option<(i64, usize)> {
    match (i, j) {
        (0, k) | (k, 0) => Some((1, k)),
        (1, 2) => Some((-1, 3)),
        (2, 1) => Some((1, 3)),
        _ => None,
    }
}

fn blade_is_odd(i: usize) -> bool {
    i == 1 || i == 2
}

impl SuperOperatorExpression {
    pub fn zero(dim: usize) -> Self {
        SuperOperatorExpression {
            blades: std::array::from_fn(|_| OperatorSum::zero(dim)),
        }
    }

    pub fn from_blades(blades: [OperatorSum; 4]) -> Result<Self> {
        let dim = blades[0].dim();
        if blades.iter().any(|b| b.dim() != dim) {
            return Err(Error::Config(
                "blade coefficients over different dimensions".into(),
            ));
        }
        Ok(SuperOperatorExpression { blades })
    }

    pub fn from_operator(op: OperatorSum) -> Self {
        let dim = op.dim();
        let mut s = SuperOperatorExpression::zero(dim);
        s.blades[0] = op;
        s
    }

    pub fn identity(dim: usize) -> Self {
        SuperOperatorExpression::from_operator(OperatorSum::identity(dim))
    }

    /// `Φ̂^a = φ̂^a + θĉ^a + θ̄ω^{ab}c̄̂_b + iθ̄θω^{ab}λ̂_b`
    pub fn superfield(model: &PhaseSpaceModel, a: usize) -> Result<Self> {
        let dim = model.dim();
        let mut cbar = OperatorSum::zero(dim);
        let mut lam = OperatorSum::zero(dim);
        for b in 0..dim {
            let w = Scalar::int(model.omega_upper(a, b));
            cbar = cbar.add(&OperatorSum::cbar(dim, b).scale(&w))?;
            lam = lam.add(&OperatorSum::lambda(dim, b).scale(&w.mul_i_pow(1)))?;
        }
        SuperOperatorExpression::from_blades([
            OperatorSum::phi(dim, a),
            OperatorSum::c(dim, a),
            cbar,
            lam,
        ])
    }

    /// `G(Φ̂)` by direct expansion (the `Φ̂^a` commute with one another).
    pub fn of_superfield(g: &Poly, model: &PhaseSpaceModel) -> Result<Self> {
        let dim = model.dim();
        if g.nvars() != dim {
            return Err(Error::Config(
                "observable and model dimensions differ".into(),
            ));
        }
        let fields: Vec<Self> = (0..dim)
            .map(|a| SuperOperatorExpression::superfield(model, a))
            .collect::<Result<_>>()?;
        let mut out = SuperOperatorExpression::zero(dim);
        for (e, c) in g.terms() {
            let mut term =
                SuperOperatorExpression::from_operator(OperatorSum::scalar(dim, c.clone()));
            for (a, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    term = term.mul(&fields[a])?;
                }
            }
            out = out.add(&term)?;
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.blades[0].dim()
    }

    pub fn blade(&self, i: usize) -> &OperatorSum {
        &self.blades[i]
    }

    pub fn blades(&self) -> &[OperatorSum; 4] {
        &self.blades
    }

    pub fn is_theta_free(&self) -> bool {
        self.blades[1..].iter().all(OperatorSum::is_zero)
    }

    pub fn is_zero(&self) -> bool {
        self.blades.iter().all(OperatorSum::is_zero)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        for i in 0..4 {
            out.blades[i] = out.blades[i].add(&other.blades[i])?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&Scalar::int(-1)))
    }

    pub fn scale(&self, k: &Scalar) -> Self {
        SuperOperatorExpression {
            blades: std::array::from_fn(|i| self.blades[i].scale(k)),
        }
    }

    /// `(B_i O_i)(B_j O_j) = (−1)^{|O_i||B_j|} B_i B_j O_i O_j`
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let mut out = SuperOperatorExpression::zero(self.dim());
        for i in 0..4 {
            if self.blades[i].is_zero() {
                continue;
            }
            let (even, odd) = self.blades[i].split_parity();
            for j in 0..4 {
                let Some((sign, k)) = blade_product(i, j) else {
                    continue;
                };
                if other.blades[j].is_zero() {
                    continue;
                }
                let left = if blade_is_odd(j) {
                    even.sub(&odd)?
                } else {
                    self.blades[i].clone()
                };
                let prod = left.compose(&other.blades[j])?.scale(&Scalar::int(sign));
                out.blades[k] = out.blades[k].add(&prod)?;
            }
        }
        Ok(out)
    }

    /// `1 + X + X²/2`, exact for `X` built from `θQ` and `θ̄Q̄` with odd `Q`.
    pub fn exp_nilpotent(&self) -> Result<Self> {
        let x2 = self.mul(self)?;
        if !x2.mul(self)?.is_zero() {
            return Err(Error::Verification {
                identity: "X^3 = 0".into(),
                residual: "nonzero cube".into(),
            });
        }
        SuperOperatorExpression::identity(self.dim())
            .add(self)?
            .add(&x2.scale(&Scalar::ratio(1, 2)))
    }
}

impl fmt::Display for SuperOperatorExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, op) in self.blades.iter().enumerate() {
            if op.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if i == 0 {
                write!(f, "[{op}]")?;
            } else {
                write!(f, "{}*[{op}]", BLADE_NAMES[i])?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// `X = θ Q^BRS + Q̄^BRS θ̄`
pub fn picture_generator(model: &PhaseSpaceModel) -> Result<SuperOperatorExpression> {
    let q = charges(model)?;
    let dim = model.dim();
    // Q̄θ̄ = −θ̄Q̄ for odd Q̄
    SuperOperatorExpression::from_blades([
        OperatorSum::zero(dim),
        q.q_brs,
        q.qbar_brs.neg(),
        OperatorSum::zero(dim),
    ])
}

/// `e^{−X} O e^{X}`
pub fn picture_change(
    o: &SuperOperatorExpression,
    model: &PhaseSpaceModel,
) -> Result<SuperOperatorExpression> {
    let x = picture_generator(model)?;
    let fwd = x.exp_nilpotent()?;
    let back = x.scale(&Scalar::int(-1)).exp_nilpotent()?;
    back.mul(o)?.mul(&fwd)
}

/// Picture change of `G(Φ̂)`, verified to equal `G(φ̂)`.
pub fn picture_change_observable(g: &Poly, model: &PhaseSpaceModel) -> Result<OperatorSum> {
    let o = SuperOperatorExpression::of_superfield(g, model)?;
    let out = picture_change(&o, model)?;
    if !out.is_theta_free() {
        return Err(Error::Verification {
            identity: format!("picture change of G(Phi) is theta-free for G = {g}"),
            residual: out.to_string(),
        });
    }
    let expected = OperatorSum::from_poly(g);
    let residual = out.blade(0).sub(&expected)?;
    if !residual.is_zero() {
        return Err(Error::Verification {
            identity: format!("picture change of G(Phi) equals G(phi) for G = {g}"),
            residual: residual.to_string(),
        });
    }
    Ok(out.blades[0].clone())
}

/// `[Q^BRS, φ̂^a] = ĉ^a` and `[φ̂^a, Q̄^BRS] = ω^{ab}c̄̂_b`: the charges translate
/// `φ̂` along the `θ`- and `θ̄`-linear components of the superfield.
pub fn generator_property(model: &PhaseSpaceModel) -> Result<Vec<IdentityCheck>> {
    let dim = model.dim();
    let q = charges(model)?;
    let mut out = Vec::new();
    for a in 0..dim {
        let phi = OperatorSum::phi(dim, a);
        let comps = SuperOperatorExpression::superfield(model, a)?;
        out.push(IdentityCheck {
            name: format!("[Q_BRS, {}] - theta component", phi),
            residual: q.q_brs.commutator(&phi)?.sub(comps.blade(1))?,
        });
        out.push(IdentityCheck {
            name: format!("[{}, Qbar_BRS] - thetabar component", phi),
            residual: phi.commutator(&q.qbar_brs)?.sub(comps.blade(2))?,
        });
    }
    Ok(out)
}

/// `ψ(φ^a + θc^a + θ̄ω^{ab}c̄_b, c)`
pub fn schrodinger_state(psi: &Sse, model: &PhaseSpaceModel) -> Result<Sse> {
    let space = psi.space().clone();
    if space.dim() != model.dim() {
        return Err(Error::Config("state and model dimensions differ".into()));
    }
    let (th, tb) = (Sse::theta(&space), Sse::thetabar(&space));
    let shifts: Vec<(usize, Sse)> = (0..space.dim())
        .map(|a| {
            let mut n = th.mul(&Sse::ghost(&space, a));
            for b in 0..space.dim() {
                let w = model.omega_upper(a, b);
                if w != 0 {
                    n = n.add(&tb.mul(&Sse::antighost(&space, b)).scale(&Scalar::int(w)));
                }
            }
            (space.var_index(Field::Phi, a, 0), n)
        })
        .collect();
    Ok(psi.taylor_shift(&shifts, 2).0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroForm {
    pub zero_form: Poly,
    pub is_pure: bool,
}

/// Restrict a state `ψ(φ, c)` to its ghost-free part.
pub fn zero_form_project(state: &Sse) -> Result<ZeroForm> {
    let space = state.space().clone();
    let ghosts: Vec<usize> = (0..space.dim()).map(|a| space.ghost(a, 0)).collect();
    let zero = state.drop_generators(&ghosts);
    let mut poly = Poly::zero(space.dim());
    for (e, b, c) in zero.terms() {
        let mut exps = vec![0; space.dim()];
        for (i, &k) in e.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let (field, a, order) = space.var_info(i);
            if field != Field::Phi || order != 0 {
                return Err(Error::UnsupportedInput(format!(
                    "state depends on {}",
                    space.var_name(i)
                )));
            }
            exps[a] = k;
        }
        if *b != Default::default() {
            return Err(Error::UnsupportedInput(
                "state depends on Grassmann variables other than c".into(),
            ));
        }
        poly.add_term(exps, c.clone());
    }
    Ok(ZeroForm {
        is_pure: zero == *state,
        zero_form: poly,
    })
}
