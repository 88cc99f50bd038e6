//! Characteristic maps and their decomposition into shears.

use serde::{Deserialize, Serialize};

use super::PhaseSpaceGrid;
use crate::error::{Error, Result};
use crate::model::PhaseSpaceModel;
use crate::poly::Poly;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    /// Leapfrog for any separable `H`.
    #[default]
    Auto,
    /// Drift–kick–drift for `H = T(p) + V(q)`.
    Leapfrog,
    /// Exact flow of `H = (q² + p²)/2` as three shears.
    ExactRotation,
    /// Exact flow of `H = T(p)`.
    ExactShear,
}

/// One-step map of a Hamiltonian flow.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowMap {
    pub integrator: Integrator,
    pub dt: f64,
    /// `T'(p)` and `V'(q)` as one-dof polynomials.
    t_prime: Poly,
    v_prime: Poly,
}

/// Shear sequence `D₀ (K D)^{kicks}` where the last drift is `half_drift` and
/// the others are `full_drift`. Shifts are in grid spacings, per line.
pub(crate) struct Schedule {
    pub half_drift: Vec<f64>,
    pub full_drift: Vec<f64>,
    pub kick: Vec<f64>,
    pub kicks: usize,
}

impl FlowMap {
    pub fn new(model: &PhaseSpaceModel, dt: f64, integrator: Integrator) -> Result<Self> {
        let h = model.hamiltonian();
        if model.dof() != 1 {
            return Err(Error::UnsupportedHamiltonian(
                "grid propagation is implemented for one degree of freedom".into(),
            ));
        }
        if !h.is_real() {
            return Err(Error::UnsupportedHamiltonian(format!("{h} is not real")));
        }
        let (t, v) = h.split_separable().ok_or_else(|| {
            Error::UnsupportedHamiltonian(format!(
                "{h} is not separable and has no special-case integrator"
            ))
        })?;
        let (t_prime, v_prime) = (t.deriv(1), v.deriv(0));
        let resolved = match integrator {
            Integrator::Auto => Integrator::Leapfrog,
            Integrator::ExactRotation => {
                let half = Scalar::ratio(1, 2);
                let ho = Poly::var(2, 0)
                    .pow(2)
                    .add(&Poly::var(2, 1).pow(2))
                    .scale(&half);
                if t_prime.add(&v_prime) != ho.deriv(0).add(&ho.deriv(1)) {
                    return Err(Error::UnsupportedHamiltonian(format!(
                        "exact rotation needs H = (q^2 + p^2)/2, got {h}"
                    )));
                }
                integrator
            }
            Integrator::ExactShear => {
                if !v_prime.is_zero() {
                    return Err(Error::UnsupportedHamiltonian(format!(
                        "exact shear needs H = T(p), got {h}"
                    )));
                }
                integrator
            }
            Integrator::Leapfrog => integrator,
        };
        Ok(FlowMap {
            integrator: resolved,
            dt,
            t_prime,
            v_prime,
        })
    }

    fn tp(&self, p: f64) -> f64 {
        self.t_prime.eval_f64(&[0.0, p])
    }

    fn vp(&self, q: f64) -> f64 {
        self.v_prime.eval_f64(&[q, 0.0])
    }

    /// Image of a phase-space point after one step.
    pub fn apply(&self, (q, p): (f64, f64)) -> (f64, f64) {
        let h = self.dt;
        match self.integrator {
            Integrator::ExactRotation => {
                let (s, c) = h.sin_cos();
                (q * c + p * s, -q * s + p * c)
            }
            Integrator::ExactShear => (q + self.tp(p) * h, p),
            _ => {
                let q1 = q + self.tp(p) * h / 2.0;
                let p1 = p - self.vp(q1) * h;
                (q1 + self.tp(p1) * h / 2.0, p1)
            }
        }
    }

    /// Central-difference Jacobian of [`FlowMap::apply`].
    pub fn jacobian(&self, x: (f64, f64), eps: f64) -> [[f64; 2]; 2] {
        let d = |dx: (f64, f64)| {
            let a = self.apply((x.0 + dx.0, x.1 + dx.1));
            let b = self.apply((x.0 - dx.0, x.1 - dx.1));
            ((a.0 - b.0) / (2.0 * eps), (a.1 - b.1) / (2.0 * eps))
        };
        let (dq_dq, dp_dq) = d((eps, 0.0));
        let (dq_dp, dp_dp) = d((0.0, eps));
        [[dq_dq, dq_dp], [dp_dq, dp_dp]]
    }

    pub(crate) fn schedule(&self, grid: &PhaseSpaceGrid, h: f64, steps: usize) -> Schedule {
        let (dq, dp) = (grid.dq(), grid.dp());
        let ps: Vec<f64> = (0..grid.n_p).map(|j| grid.p(j)).collect();
        let qs: Vec<f64> = (0..grid.n_q).map(|i| grid.q(i)).collect();
        match self.integrator {
            Integrator::ExactShear => Schedule {
                half_drift: ps
                    .iter()
                    .map(|&p| self.tp(p) * h * steps as f64 / dq)
                    .collect(),
                full_drift: vec![0.0; grid.n_p],
                kick: vec![0.0; grid.n_q],
                kicks: 0,
            },
            Integrator::ExactRotation => {
                // R(h) = A(a) K(b) A(a), a = tan(h/2), b = −sin h
                let a = (h / 2.0).tan();
                let b = -h.sin();
                Schedule {
                    half_drift: ps.iter().map(|&p| a * p / dq).collect(),
                    full_drift: ps.iter().map(|&p| 2.0 * a * p / dq).collect(),
                    kick: qs.iter().map(|&q| b * q / dp).collect(),
                    kicks: steps,
                }
            }
            _ => Schedule {
                half_drift: ps.iter().map(|&p| self.tp(p) * h / 2.0 / dq).collect(),
                full_drift: ps.iter().map(|&p| self.tp(p) * h / dq).collect(),
                kick: qs.iter().map(|&q| -self.vp(q) * h / dp).collect(),
                kicks: steps,
            },
        }
    }
}
