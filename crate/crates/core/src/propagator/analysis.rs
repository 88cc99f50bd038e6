//! Quadratures, kernel checks and the superposition demonstration.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use super::shear::{transpose, LineShear};
use super::{
    gaussian_state, propagate_with, KvNState, Parallelism, PhaseSpaceGrid, PropagateOptions,
};
use crate::error::{Error, Result};
use crate::model::PhaseSpaceModel;
use crate::poly::Poly;

/// Cross terms of allowed observables must stay below this.
pub const CROSS_TERM_TOL: f64 = 1e-10;
/// Interference in `⟨ψ̃|O|ψ̃⟩` must stay below this.
pub const ADDITIVITY_TOL: f64 = 1e-9;
/// The translation operator must couple the two states by more than this.
pub const TRANSLATION_MIN: f64 = 0.1;
/// Separation, in widths, at which the superposition demo is judged.
pub const MIN_SEPARATION_SIGMAS: f64 = 8.0;

/// `Σ_ij w_ij f(i, j, ψ_ij)`, summed per row and then over rows in order, so
/// the result does not depend on how rows are scheduled.
pub(crate) fn weighted_sum<T, F>(state: &KvNState, f: F) -> T
where
    T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Send,
    F: Fn(usize, usize, Complex64) -> T + Sync,
{
    let g = state.grid();
    let row = |i: usize| {
        (0..g.n_p).fold(T::default(), |acc, j| {
            acc + f(i, j, state.at(i, j)) * g.weight(i, j)
        })
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<T> = {
        use rayon::prelude::*;
        (0..g.n_q).into_par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<T> = (0..g.n_q).map(row).collect();
    rows.into_iter().fold(T::default(), |a, b| a + b)
}

/// `|ψ|²` at every grid point, in the state's layout.
pub fn density(state: &KvNState) -> Vec<f64> {
    state.amplitudes().iter().map(|z| z.norm_sqr()).collect()
}

/// A real multiplication operator `O(q, p)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    Poly {
        name: String,
        poly: Poly,
    },
    Sampled {
        name: String,
        grid: PhaseSpaceGrid,
        values: Vec<f64>,
    },
}

impl Observable {
    pub fn poly(p: &Poly) -> Result<Self> {
        if p.nvars() != 2 || !p.is_real() {
            return Err(Error::Config(format!(
                "{p} is not a real one-dof multiplication operator"
            )));
        }
        Ok(Observable::Poly {
            name: p.to_string(),
            poly: p.clone(),
        })
    }

    pub fn sampled(name: &str, grid: &PhaseSpaceGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Config(
                "sampled observable does not match the grid".into(),
            ));
        }
        Ok(Observable::Sampled {
            name: name.into(),
            grid: grid.clone(),
            values,
        })
    }

    pub fn name(&self) -> &str {
        match self {
            Observable::Poly { name, .. } | Observable::Sampled { name, .. } => name,
        }
    }

    fn value(&self, g: &PhaseSpaceGrid, i: usize, j: usize) -> f64 {
        match self {
            Observable::Poly { poly, .. } => poly.eval_f64(&[g.q(i), g.p(j)]),
            Observable::Sampled { values, .. } => values[i * g.n_p + j],
        }
    }

    fn check_grid(&self, g: &PhaseSpaceGrid) -> Result<()> {
        match self {
            Observable::Sampled { grid, .. } if grid != g => Err(Error::Config(
                "observable sampled on a different grid".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// `⟨a|O|b⟩` by the trapezoid rule.
pub fn matrix_element(a: &KvNState, o: &Observable, b: &KvNState) -> Result<Complex64> {
    if a.grid() != b.grid() {
        return Err(Error::Config("states live on different grids".into()));
    }
    o.check_grid(a.grid())?;
    let g = a.grid();
    Ok(weighted_sum(a, |i, j, za| {
        za.conj() * b.at(i, j) * o.value(g, i, j)
    }))
}

/// `⟨ψ|O|ψ⟩ / ⟨ψ|ψ⟩`. Panics if `O` is sampled on another grid.
pub fn expectation(state: &KvNState, o: &Observable) -> Complex64 {
    let num = matrix_element(state, o, state).expect("observable on the state's grid");
    num / state.norm_squared()
}

/// `(e^{iaλ̂_q} ψ)(q, p) = ψ(q + a, p)`, interpolated along `q`; values from
/// beyond the grid read as zero.
pub fn translate_q(state: &KvNState, a: f64, par: Parallelism) -> Result<KvNState> {
    let g = state.grid().clone();
    let shift = vec![-a / g.dq(); g.n_p];
    let mut planner = FftPlanner::new();
    let s = LineShear::new(&mut planner, g.n_q, &shift);
    let mut t = vec![Complex64::default(); g.len()];
    transpose(state.amplitudes(), g.n_q, g.n_p, &mut t);
    s.apply(&mut t, par);
    let mut out = vec![Complex64::default(); g.len()];
    transpose(&t, g.n_p, g.n_q, &mut out);
    KvNState::new(g, out, state.time())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelReport {
    pub initial: (f64, f64),
    pub time: f64,
    pub centroid: (f64, f64),
    pub classical: (f64, f64),
    pub distance: f64,
    /// Largest grid spacing; the centroid must land within two of them.
    pub spacing: f64,
    pub mass_fraction: f64,
    pub passed: bool,
}

/// Classical trajectory by RK4 with `n` steps; fails if it leaves the grid.
fn classical_point(
    model: &PhaseSpaceModel,
    grid: &PhaseSpaceGrid,
    x0: (f64, f64),
    t: f64,
    n: usize,
) -> Result<(f64, f64)> {
    let h = model.hamiltonian();
    let (hq, hp) = (h.deriv(0), h.deriv(1));
    let f = |(q, p): (f64, f64)| (hp.eval_f64(&[q, p]), -hq.eval_f64(&[q, p]));
    let dt = t / n as f64;
    let mut x = x0;
    for _ in 0..n {
        if !grid.contains(x.0, x.1) {
            return Err(Error::Domain(format!(
                "classical trajectory leaves the grid at {x:?}"
            )));
        }
        let k1 = f(x);
        let k2 = f((x.0 + dt / 2.0 * k1.0, x.1 + dt / 2.0 * k1.1));
        let k3 = f((x.0 + dt / 2.0 * k2.0, x.1 + dt / 2.0 * k2.1));
        let k4 = f((x.0 + dt * k3.0, x.1 + dt * k3.1));
        x = (
            x.0 + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            x.1 + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        );
    }
    if !grid.contains(x.0, x.1) {
        return Err(Error::Domain(format!(
            "classical trajectory leaves the grid at {x:?}"
        )));
    }
    Ok(x)
}

/// Propagate a width-`σ` stand-in for the Dirac state at `x0` and compare the
/// density with the classical trajectory point.
pub fn kernel_delta_check(
    model: &PhaseSpaceModel,
    grid: &PhaseSpaceGrid,
    x0: (f64, f64),
    sigma: f64,
    t: f64,
    dt: f64,
    opts: PropagateOptions,
) -> Result<KernelReport> {
    let steps = ((t / dt).ceil() as usize).max(1) * 8;
    let classical = classical_point(model, grid, x0, t, steps)?;
    let psi0 = gaussian_state(grid, x0, sigma, None)?;
    let psi = propagate_with(&psi0, model, t, dt, opts)?;
    let total = psi.norm_squared();
    let (cq, cp) = weighted_sum(&psi, |i, j, z| {
        Pair(grid.q(i) * z.norm_sqr(), grid.p(j) * z.norm_sqr())
    })
    .into();
    let centroid = (cq / total, cp / total);
    let r = 5.0 * sigma;
    let near = weighted_sum(&psi, |i, j, z| {
        let d2 = (grid.q(i) - classical.0).powi(2) + (grid.p(j) - classical.1).powi(2);
        if d2 <= r * r {
            z.norm_sqr()
        } else {
            0.0
        }
    });
    let distance = ((centroid.0 - classical.0).powi(2) + (centroid.1 - classical.1).powi(2)).sqrt();
    let spacing = grid.dq().max(grid.dp());
    let mass_fraction = near / total;
    Ok(KernelReport {
        initial: x0,
        time: t,
        centroid,
        classical,
        distance,
        spacing,
        mass_fraction,
        passed: distance < 2.0 * spacing && mass_fraction > 0.99,
    })
}

#[derive(Clone, Copy, Default)]
struct Pair(f64, f64);

impl std::ops::Add for Pair {
    type Output = Pair;
    fn add(self, o: Pair) -> Pair {
        Pair(self.0 + o.0, self.1 + o.1)
    }
}

impl std::ops::Mul<f64> for Pair {
    type Output = Pair;
    fn mul(self, k: f64) -> Pair {
        Pair(self.0 * k, self.1 * k)
    }
}

impl From<Pair> for (f64, f64) {
    fn from(p: Pair) -> Self {
        (p.0, p.1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossTerm {
    pub observable: String,
    /// `|⟨ψ₀|O|ψ₁⟩| / (‖ψ₀‖‖ψ₁‖)`
    pub cross: f64,
    /// `|⟨ψ̃|O|ψ̃⟩ − (⟨ψ₀|O|ψ₀⟩ + ⟨ψ₁|O|ψ₁⟩)/‖ψ₀ + ψ₁‖²|`
    pub additivity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuperpositionReport {
    pub separation: f64,
    pub sigma: f64,
    pub multiplication: Vec<CrossTerm>,
    /// Cross term of `e^{iaλ̂_q}` with `a = q₁ − q₀`.
    pub translation: f64,
    /// `φ₀ = φ₁`: reported, not judged.
    pub degenerate: bool,
    pub passed: bool,
}

pub fn superposition_demo(
    grid: &PhaseSpaceGrid,
    x0: (f64, f64),
    x1: (f64, f64),
    sigma: f64,
    observables: &[Observable],
    par: Parallelism,
) -> Result<SuperpositionReport> {
    let psi0 = gaussian_state(grid, x0, sigma, None)?;
    let psi1 = gaussian_state(grid, x1, sigma, None)?;
    let separation = ((x1.0 - x0.0).powi(2) + (x1.1 - x0.1).powi(2)).sqrt();
    let norms = psi0.norm() * psi1.norm();
    let sum = psi0.add(&psi1)?;
    let sum_n2 = sum.norm_squared();
    let tilde = sum.normalized()?;
    let mut multiplication = Vec::new();
    for o in observables {
        let cross = matrix_element(&psi0, o, &psi1)?.norm() / norms;
        let mixed = matrix_element(&tilde, o, &tilde)?;
        let separate =
            (matrix_element(&psi0, o, &psi0)? + matrix_element(&psi1, o, &psi1)?) / sum_n2;
        multiplication.push(CrossTerm {
            observable: o.name().to_string(),
            cross,
            additivity: (mixed - separate).norm(),
        });
    }
    let one = Observable::poly(&Poly::one(2))?;
    let shifted = translate_q(&psi1, x1.0 - x0.0, par)?;
    let translation = matrix_element(&psi0, &one, &shifted)?.norm() / norms;
    let degenerate = separation == 0.0;
    let passed = !degenerate
        && separation >= MIN_SEPARATION_SIGMAS * sigma * (1.0 - 1e-12)
        && multiplication
            .iter()
            .all(|c| c.cross < CROSS_TERM_TOL && c.additivity < ADDITIVITY_TOL)
        && translation > TRANSLATION_MIN;
    Ok(SuperpositionReport {
        separation,
        sigma,
        multiplication,
        translation,
        degenerate,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Scalar;

    fn grid() -> PhaseSpaceGrid {
        PhaseSpaceGrid::square(4.0, 129).unwrap()
    }

    #[test]
    fn unit_observable_has_unit_expectation() {
        let s = gaussian_state(&grid(), (0.3, 0.2), 0.4, Some((2.0, -1.0))).unwrap();
        let one = Observable::poly(&Poly::one(2)).unwrap();
        assert!((expectation(&s, &one) - 1.0).norm() < 1e-14);
    }

    #[test]
    fn density_ignores_global_phase() {
        let s = gaussian_state(&grid(), (0.3, 0.2), 0.4, None).unwrap();
        let r = s.scale(Complex64::from_polar(1.0, 0.9));
        let (a, b) = (density(&s), density(&r));
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-15));
        let real = s.amplitudes().iter().map(|z| z.re * z.re);
        assert!(real.zip(&a).all(|(x, y)| (x - y).abs() < 1e-15));
    }

    #[test]
    fn translation_moves_state() {
        let g = grid();
        let s = gaussian_state(&g, (1.0, 0.0), 0.4, None).unwrap();
        let moved = translate_q(&s, 1.5, Parallelism::Sequential).unwrap();
        let want = gaussian_state(&g, (-0.5, 0.0), 0.4, None).unwrap();
        assert!(moved.relative_l2_error(&want) < 1e-9);
    }

    #[test]
    fn kernel_follows_characteristics() {
        let g = grid();
        let m = |h: Poly| PhaseSpaceModel::new(1, h).unwrap();
        let opts = PropagateOptions::default();
        let r =
            kernel_delta_check(&m(Poly::zero(2)), &g, (0.5, -0.5), 0.25, 1.0, 0.1, opts).unwrap();
        assert!(r.passed && r.distance < 1e-10);
        let ho = Poly::var(2, 0)
            .pow(2)
            .add(&Poly::var(2, 1).pow(2))
            .scale(&Scalar::ratio(1, 2));
        let t = std::f64::consts::FRAC_PI_2;
        let r = kernel_delta_check(&m(ho), &g, (1.0, 0.5), 0.25, t, t / 64.0, opts).unwrap();
        assert!(r.passed, "{r:?}");
        assert!((r.centroid.0 - 0.5).abs() < 1e-3 && (r.centroid.1 + 1.0).abs() < 1e-3);
        let free = Poly::var(2, 1).pow(2).scale(&Scalar::ratio(1, 2));
        let r = kernel_delta_check(&m(free), &g, (-1.0, 1.0), 0.25, 1.0, 0.05, opts).unwrap();
        assert!(r.passed && (r.centroid.0 - 0.0).abs() < 1e-3, "{r:?}");
        let far = kernel_delta_check(&m(Poly::var(2, 1)), &g, (3.5, 0.0), 0.25, 2.0, 0.1, opts);
        assert!(matches!(far, Err(Error::Domain(_))));
    }

    #[test]
    fn well_separated_superposition() {
        let g = grid();
        let obs: Vec<Observable> = [Poly::one(2), Poly::var(2, 0), Poly::var(2, 1).pow(2)]
            .iter()
            .map(|p| Observable::poly(p).unwrap())
            .collect();
        let r = superposition_demo(
            &g,
            (-1.5, 0.0),
            (1.5, 0.0),
            0.25,
            &obs,
            Parallelism::Sequential,
        )
        .unwrap();
        assert!(r.passed, "{r:?}");
        assert!((r.translation - 1.0).abs() < 1e-6);
        let d = superposition_demo(
            &g,
            (0.0, 0.0),
            (0.0, 0.0),
            0.25,
            &obs,
            Parallelism::Sequential,
        )
        .unwrap();
        assert!(d.degenerate && !d.passed);
        assert!((d.multiplication[0].cross - 1.0).abs() < 1e-12);
    }
}
