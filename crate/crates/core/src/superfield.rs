//! Superfields over `(t, θ, θ̄)`, Berezin reduction and the action identity.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::PhaseSpaceModel;
use crate::poly::Poly;
use crate::scalar::Scalar;
use crate::superops::lie_derivative;
use crate::superspace::{Field, Sse, Superspace, SuperspaceExpression};

/// `Φ^a = φ^a + θ c^a + θ̄ ω^{ab} c̄_b + i θ̄θ ω^{ab} λ_b`, one per index `a`.
#[derive(Clone, Debug, PartialEq)]
pub struct Superfield {
    space: Arc<Superspace>,
    components: Vec<Sse>,
}

impl Superfield {
    pub fn space(&self) -> &Arc<Superspace> {
        &self.space
    }

    pub fn component(&self, a: usize) -> &Sse {
        &self.components[a]
    }

    pub fn components(&self) -> &[Sse] {
        &self.components
    }

    /// The nilpotent part `N^a = Φ^a − φ^a`.
    pub fn nilpotent_part(&self, a: usize) -> Sse {
        self.components[a].sub(&Sse::phi(&self.space, a))
    }

    pub fn time_derivative(&self) -> Result<Vec<Sse>> {
        self.components.iter().map(Sse::time_derivative).collect()
    }
}

pub fn build_superfield(model: &PhaseSpaceModel) -> Result<Superfield> {
    let space = Superspace::for_model(model)?;
    Ok(build_superfield_in(&space, model))
}

pub fn build_superfield_in(space: &Arc<Superspace>, model: &PhaseSpaceModel) -> Superfield {
    let dim = model.dim();
    let (t, tb) = (Sse::theta(space), Sse::thetabar(space));
    let tbt = tb.mul(&t);
    let components = (0..dim)
        .map(|a| {
            let mut x = Sse::phi(space, a).add(&t.mul(&Sse::ghost(space, a)));
            for b in 0..dim {
                let w = model.omega_upper(a, b);
                if w == 0 {
                    continue;
                }
                let w = Scalar::int(w);
                x = x
                    .add(&tb.mul(&Sse::antighost(space, b)).scale(&w))
                    .add(&tbt.mul(&Sse::lambda(space, b)).scale(&w.mul_i_pow(1)));
            }
            x
        })
        .collect();
    Superfield {
        space: space.clone(),
        components,
    }
}

/// `F(Φ)` together with the first omitted (third-order) Taylor term.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperfieldExpansion {
    pub value: Sse,
    pub remainder: Sse,
}

/// `F(Φ)` by second-order Taylor expansion in the nilpotent part of `Φ`.
pub fn evaluate_on_superfield(f: &Poly, phi: &Superfield) -> Result<SuperfieldExpansion> {
    let space = phi.space();
    if f.nvars() != space.dim() {
        return Err(Error::Config(format!(
            "polynomial has {} variables, superfield has {} components",
            f.nvars(),
            space.dim()
        )));
    }
    let shifts: Vec<(usize, Sse)> = (0..space.dim())
        .map(|a| (space.var_index(Field::Phi, a, 0), phi.nilpotent_part(a)))
        .collect();
    let (value, remainder) = Sse::from_poly(space, f).taylor_shift(&shifts, 2);
    Ok(SuperfieldExpansion { value, remainder })
}

/// `i ∫ dθ dθ̄ (·)`
pub fn berezin_i(expr: &Sse) -> Result<Sse> {
    Ok(expr.berezin_theta()?.scale(&Scalar::i()))
}

/// `i ∫ dθ dθ̄ F(Φ)`
pub fn berezin_reduce(f: &Poly, model: &PhaseSpaceModel) -> Result<Sse> {
    let phi = build_superfield(model)?;
    berezin_i(&evaluate_on_superfield(f, &phi)?.value)
}

/// The classical (c-number) counterpart of the Lie-derivative operator.
pub fn classical_lie_derivative(space: &Arc<Superspace>, model: &PhaseSpaceModel) -> Result<Sse> {
    Sse::classical_image(space, &lie_derivative(model)?)
}

/// An exact identity over superspace expressions; passes iff the residual is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicCheck {
    pub name: String,
    pub residual: Sse,
}

impl SymbolicCheck {
    pub fn passed(&self) -> bool {
        self.residual.is_zero()
    }
}

pub fn first_failure(checks: &[SymbolicCheck]) -> Result<()> {
    match checks.iter().find(|c| !c.passed()) {
        None => Ok(()),
        Some(bad) => Err(Error::Verification {
            identity: bad.name.clone(),
            residual: bad.residual.to_string(),
        }),
    }
}

/// `i∫dθdθ̄ H(Φ)` against the classical Lie derivative.
pub fn check_berezin_lie(model: &PhaseSpaceModel) -> Result<SymbolicCheck> {
    let phi = build_superfield(model)?;
    let lhs = berezin_i(&evaluate_on_superfield(model.hamiltonian(), &phi)?.value)?;
    let rhs = classical_lie_derivative(phi.space(), model)?;
    Ok(SymbolicCheck {
        name: "i*Berezin(H(Phi)) - Htilde".into(),
        residual: lhs.sub(&rhs),
    })
}

/// Variational derivatives of `expr` with respect to every field, in the order
/// `φ^a, λ_a, c^a, c̄_a`. Expressions may contain first time derivatives only.
pub fn euler_operator(expr: &Sse) -> Result<Vec<(String, Sse)>> {
    if expr.max_jet_order() > 1 {
        return Err(Error::UnsupportedInput(
            "the Euler-operator test handles first time derivatives only".into(),
        ));
    }
    let space = expr.space().clone();
    let mut out = Vec::new();
    for field in [Field::Phi, Field::Lambda] {
        for a in 0..space.dim() {
            let u = space.var_index(field, a, 0);
            let udot = space.var_index(field, a, 1);
            let e = expr.partial(u).sub(&expr.partial(udot).time_derivative()?);
            out.push((space.var_name(u), e));
        }
    }
    let reg = space.registry().clone();
    for odd in [true, false] {
        for a in 0..space.dim() {
            let (g, gdot) = if odd {
                (space.ghost(a, 0), space.ghost(a, 1))
            } else {
                (space.antighost(a, 0), space.antighost(a, 1))
            };
            let e = expr.gderiv(g)?.sub(&expr.gderiv(gdot)?.time_derivative()?);
            out.push((reg.generator(g).label.clone(), e));
        }
    }
    Ok(out)
}

/// Whether `expr` is a total time derivative: every variational derivative
/// vanishes identically.
pub fn total_derivative_test(expr: &Sse) -> Result<bool> {
    Ok(euler_operator(expr)?.iter().all(|(_, e)| e.is_zero()))
}

/// `½ φ^a ω_{ab} φ̇^b − H(φ)` evaluated on arbitrary fields and velocities.
fn phase_space_lagrangian(
    model: &PhaseSpaceModel,
    fields: &[Sse],
    velocities: &[Sse],
    hamiltonian: &Sse,
) -> Sse {
    let space = hamiltonian.space().clone();
    let mut l = Sse::zero(&space);
    for a in 0..model.dim() {
        for b in 0..model.dim() {
            let w = model.omega_lower(a, b);
            if w != 0 {
                l = l.add(&fields[a].mul(&velocities[b]).scale(&Scalar::ratio(w, 2)));
            }
        }
    }
    l.sub(hamiltonian)
}

/// `L̃ = λ_a φ̇^a + i c̄_a ċ^a − H̃`
pub fn extended_lagrangian(space: &Arc<Superspace>, model: &PhaseSpaceModel) -> Result<Sse> {
    let mut l = Sse::zero(space);
    for a in 0..model.dim() {
        l = l
            .add(&Sse::lambda(space, a).mul(&Sse::field(space, Field::Phi, a, 1)))
            .add(
                &Sse::antighost(space, a)
                    .mul(&Sse::generator(space, space.ghost(a, 1)))
                    .scale(&Scalar::i()),
            );
    }
    Ok(l.sub(&classical_lie_derivative(space, model)?))
}

/// The superspace Lagrangian `L_ps[Φ, Φ̇]` before Berezin integration.
pub fn superspace_lagrangian(phi: &Superfield, model: &PhaseSpaceModel) -> Result<Sse> {
    let dphi = phi.time_derivative()?;
    let h = evaluate_on_superfield(model.hamiltonian(), phi)?.value;
    Ok(phase_space_lagrangian(model, phi.components(), &dphi, &h))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionIdentityReport {
    /// `i∫dθdθ̄ L_ps[Φ,Φ̇] − L̃`
    pub difference: Sse,
    pub variational: Vec<(String, Sse)>,
}

impl ActionIdentityReport {
    pub fn passed(&self) -> bool {
        self.variational.iter().all(|(_, e)| e.is_zero())
    }

    pub fn into_result(self) -> Result<Self> {
        if let Some((name, e)) = self.variational.iter().find(|(_, e)| !e.is_zero()) {
            return Err(Error::Verification {
                identity: format!("variational derivative wrt {name}"),
                residual: e.to_string(),
            });
        }
        Ok(self)
    }
}

/// The superspace action reproduces `L̃` up to a surface term.
pub fn check_action_identity(model: &PhaseSpaceModel) -> Result<ActionIdentityReport> {
    let phi = build_superfield(model)?;
    let lhs = berezin_i(&superspace_lagrangian(&phi, model)?)?;
    let difference = lhs.sub(&extended_lagrangian(phi.space(), model)?);
    let variational = euler_operator(&difference)?;
    Ok(ActionIdentityReport {
        difference,
        variational,
    })
}

pub const SECTORS: [&str; 4] = ["theta^0", "theta", "thetabar", "thetabar*theta"];

/// One component of `Φ̇^a − ω^{ab} ∂_b H(Φ)` on the θ-blade basis.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentEquation {
    pub sector: &'static str,
    pub index: usize,
    /// `lhs − rhs`, zero on shell.
    pub residual: Sse,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EomReport {
    pub equations: Vec<ComponentEquation>,
    pub checks: Vec<SymbolicCheck>,
}

impl EomReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(SymbolicCheck::passed)
    }
}

/// Component equations of motion of the superfield and their consistency with
/// the Euler–Lagrange equations of `L̃`.
///
/// With `E_u` the variational derivative of `L̃`, the sectors satisfy
/// `R_0^a = E_{λ_a}`, `R_θ^a = −i E_{c̄_a}`, `R_θ̄^a = −i ω^{ab} E_{c^b}` and
/// `R_θ̄θ^a = −i ω^{ab} E_{φ^b}`.
pub fn superfield_eom(model: &PhaseSpaceModel) -> Result<EomReport> {
    let phi = build_superfield(model)?;
    let space = phi.space().clone();
    let dim = model.dim();
    let h = model.hamiltonian();
    let dphi = phi.time_derivative()?;
    let grad: Vec<Sse> = (0..dim)
        .map(|b| evaluate_on_superfield(&h.deriv(b), &phi).map(|e| e.value))
        .collect::<Result<_>>()?;

    let el = euler_operator(&extended_lagrangian(&space, model)?)?;
    let e_phi = |b: usize| &el[b].1;
    let e_lam = |b: usize| &el[dim + b].1;
    let e_c = |b: usize| &el[2 * dim + b].1;
    let e_cbar = |b: usize| &el[3 * dim + b].1;
    let minus_i = -Scalar::i();
    let omega_sum = |a: usize, f: &dyn Fn(usize) -> Sse| {
        (0..dim).fold(Sse::zero(&space), |acc, b| {
            let w = model.omega_upper(a, b);
            if w == 0 {
                acc
            } else {
                acc.add(&f(b).scale(&Scalar::int(w)))
            }
        })
    };

    let mut equations = Vec::new();
    let mut checks = Vec::new();
    for a in 0..dim {
        let rhs = omega_sum(a, &|b| grad[b].clone());
        let comps = dphi[a].sub(&rhs).theta_components()?;

        // Hamilton's equations and the tangent flow, written out directly.
        let hamilton = Sse::field(&space, Field::Phi, a, 1)
            .sub(&omega_sum(a, &|b| Sse::from_poly(&space, &h.deriv(b))));
        let jacobi = Sse::generator(&space, space.ghost(a, 1)).sub(&omega_sum(a, &|b| {
            (0..dim).fold(Sse::zero(&space), |acc, d| {
                acc.add(&Sse::from_poly(&space, &h.deriv(b).deriv(d)).mul(&Sse::ghost(&space, d)))
            })
        }));
        let name = space.var_name(space.var_index(Field::Phi, a, 0));
        checks.push(SymbolicCheck {
            name: format!("{} sector of {name}: Hamilton equation", SECTORS[0]),
            residual: comps[0].sub(&hamilton),
        });
        checks.push(SymbolicCheck {
            name: format!("{} sector of {name}: tangent flow", SECTORS[1]),
            residual: comps[1].sub(&jacobi),
        });

        let el_images = [
            e_lam(a).clone(),
            e_cbar(a).scale(&minus_i),
            omega_sum(a, &|b| e_c(b).clone()).scale(&minus_i),
            omega_sum(a, &|b| e_phi(b).clone()).scale(&minus_i),
        ];
        for (k, comp) in comps.iter().enumerate() {
            checks.push(SymbolicCheck {
                name: format!("{} sector of {name}: Euler-Lagrange", SECTORS[k]),
                residual: comp.sub(&el_images[k]),
            });
        }
        for (k, comp) in comps.into_iter().enumerate() {
            equations.push(ComponentEquation {
                sector: SECTORS[k],
                index: a,
                residual: comp,
            });
        }
    }
    Ok(EomReport { equations, checks })
}

/// `F(Φ)` over a fresh superspace for the model.
pub fn superfield_value(f: &Poly, model: &PhaseSpaceModel) -> Result<SuperspaceExpression> {
    Ok(evaluate_on_superfield(f, &build_superfield(model)?)?.value)
}
