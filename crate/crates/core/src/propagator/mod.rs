//! Liouville transport of KvN wavefunctions on a one-dof phase-space grid.
//!
//! Propagation is semi-Lagrangian: each step composes one-dimensional shears
//! along the characteristics of a splitting integrator (drift in `q`, kick in
//! `p`), and every shear evaluates the state at the backtracked foot by
//! band-limited interpolation along its line. The scheme is linear and
//! unitary up to interpolation and domain-truncation error; the norm is
//! reported, never renormalized.

mod analysis;
mod export;
mod flow;
mod shear;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PhaseSpaceModel;

pub use analysis::{
    density, expectation, kernel_delta_check, matrix_element, superposition_demo, translate_q,
    CrossTerm, KernelReport, Observable, SuperpositionReport, ADDITIVITY_TOL, CROSS_TERM_TOL,
    MIN_SEPARATION_SIGMAS, TRANSLATION_MIN,
};
pub use export::{write_csv, StateHeader};
pub use flow::{FlowMap, Integrator};

use shear::{transpose, LineShear};

/// Degree of parallelism for grid sweeps. Results are bitwise identical
/// either way; without the `parallel` feature `Parallel` runs sequentially.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parallelism {
    Sequential,
    #[default]
    Parallel,
}

/// Uniform grid with inclusive endpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub n_q: usize,
    pub n_p: usize,
}

impl PhaseSpaceGrid {
    pub fn new(q: (f64, f64), p: (f64, f64), n_q: usize, n_p: usize) -> Result<Self> {
        let g = PhaseSpaceGrid {
            q_min: q.0,
            q_max: q.1,
            p_min: p.0,
            p_max: p.1,
            n_q,
            n_p,
        };
        g.validate()?;
        Ok(g)
    }

    /// Square grid `[−half, half]²` with `n` points per side.
    pub fn square(half: f64, n: usize) -> Result<Self> {
        PhaseSpaceGrid::new((-half, half), (-half, half), n, n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_q < 8 || self.n_p < 8 {
            return Err(Error::Config(
                "grids need at least 8 points per axis".into(),
            ));
        }
        let ordered = |a: f64, b: f64| a.is_finite() && b.is_finite() && a < b;
        if !ordered(self.q_min, self.q_max) || !ordered(self.p_min, self.p_max) {
            return Err(Error::Config(
                "grid extents must be finite and strictly ordered".into(),
            ));
        }
        Ok(())
    }

    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / (self.n_q - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.n_p - 1) as f64
    }

    pub fn q(&self, i: usize) -> f64 {
        self.q_min + i as f64 * self.dq()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.dp()
    }

    pub fn len(&self) -> usize {
        self.n_q * self.n_p
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, q: f64, p: f64) -> bool {
        (self.q_min..=self.q_max).contains(&q) && (self.p_min..=self.p_max).contains(&p)
    }

    /// Trapezoid weight of point `(i, j)`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let wq = if i == 0 || i == self.n_q - 1 {
            0.5
        } else {
            1.0
        };
        let wp = if j == 0 || j == self.n_p - 1 {
            0.5
        } else {
            1.0
        };
        wq * wp * self.dq() * self.dp()
    }

    /// Halve both spacings (same extents).
    pub fn refined(&self) -> Self {
        PhaseSpaceGrid {
            n_q: 2 * self.n_q - 1,
            n_p: 2 * self.n_p - 1,
            ..self.clone()
        }
    }
}

/// `ψ(q, p)` sampled on a grid, stored row-major with `p` fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct KvNState {
    grid: PhaseSpaceGrid,
    amplitudes: Vec<Complex64>,
    time: f64,
}

impl KvNState {
    pub fn new(grid: PhaseSpaceGrid, amplitudes: Vec<Complex64>, time: f64) -> Result<Self> {
        grid.validate()?;
        if amplitudes.len() != grid.len() {
            return Err(Error::Config(format!(
                "expected {} amplitudes, got {}",
                grid.len(),
                amplitudes.len()
            )));
        }
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::Config("amplitudes must be finite".into()));
        }
        Ok(KvNState {
            grid,
            amplitudes,
            time,
        })
    }

    pub fn from_fn<F: Fn(f64, f64) -> Complex64>(grid: &PhaseSpaceGrid, f: F) -> Result<Self> {
        let mut amps = Vec::with_capacity(grid.len());
        for i in 0..grid.n_q {
            for j in 0..grid.n_p {
                amps.push(f(grid.q(i), grid.p(j)));
            }
        }
        KvNState::new(grid.clone(), amps, 0.0)
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.amplitudes[i * self.grid.n_p + j]
    }

    /// `‖ψ‖²` by the trapezoid rule, summed row by row in a fixed order.
    pub fn norm_squared(&self) -> f64 {
        analysis::weighted_sum(self, |_, _, z| z.norm_sqr())
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn scale(&self, k: Complex64) -> KvNState {
        KvNState {
            amplitudes: self.amplitudes.iter().map(|z| z * k).collect(),
            ..self.clone()
        }
    }

    pub fn add(&self, other: &KvNState) -> Result<KvNState> {
        if self.grid != other.grid {
            return Err(Error::Config("states live on different grids".into()));
        }
        Ok(KvNState {
            amplitudes: self
                .amplitudes
                .iter()
                .zip(&other.amplitudes)
                .map(|(a, b)| a + b)
                .collect(),
            ..self.clone()
        })
    }

    pub fn normalized(&self) -> Result<KvNState> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::Config("cannot normalize the zero state".into()));
        }
        Ok(self.scale(Complex64::new(1.0 / n, 0.0)))
    }

    /// `‖ψ − χ‖ / ‖χ‖`
    pub fn relative_l2_error(&self, reference: &KvNState) -> f64 {
        let diff = KvNState {
            amplitudes: self
                .amplitudes
                .iter()
                .zip(&reference.amplitudes)
                .map(|(a, b)| a - b)
                .collect(),
            ..self.clone()
        };
        diff.norm() / reference.norm()
    }
}

/// Normalized `exp(−|φ−φ₀|²/(2σ²) + i(k_q q + k_p p))`.
pub fn gaussian_state(
    grid: &PhaseSpaceGrid,
    center: (f64, f64),
    sigma: f64,
    phase: Option<(f64, f64)>,
) -> Result<KvNState> {
    grid.validate()?;
    let h = grid.dq().max(grid.dp());
    if !(sigma >= 2.0 * h) {
        return Err(Error::Resolution(format!(
            "width {sigma} is below two grid spacings ({})",
            2.0 * h
        )));
    }
    if !grid.contains(center.0, center.1) {
        return Err(Error::Domain(format!(
            "center {center:?} lies outside the grid"
        )));
    }
    let (kq, kp) = phase.unwrap_or((0.0, 0.0));
    let (q0, p0) = center;
    KvNState::from_fn(grid, |q, p| {
        let r2 = (q - q0).powi(2) + (p - p0).powi(2);
        Complex64::from_polar((-r2 / (2.0 * sigma * sigma)).exp(), kq * q + kp * p)
    })?
    .normalized()
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PropagateOptions {
    pub integrator: Integrator,
    pub parallelism: Parallelism,
}

/// Evolve `state` to `state.time + t_final` with steps no longer than `dt`.
pub fn propagate(
    state: &KvNState,
    model: &PhaseSpaceModel,
    t_final: f64,
    dt: f64,
) -> Result<KvNState> {
    propagate_with(state, model, t_final, dt, PropagateOptions::default())
}

pub fn propagate_with(
    state: &KvNState,
    model: &PhaseSpaceModel,
    t_final: f64,
    dt: f64,
    opts: PropagateOptions,
) -> Result<KvNState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config("timestep must be positive".into()));
    }
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::Config("final time must be nonnegative".into()));
    }
    let flow = FlowMap::new(model, dt, opts.integrator)?;
    let steps = (t_final / dt - 1e-9).ceil().max(0.0) as usize;
    let grid = state.grid().clone();
    let (nq, np) = (grid.n_q, grid.n_p);
    let mut amps = state.amplitudes.clone();
    if steps > 0 {
        let h = t_final / steps as f64;
        let plan = flow.schedule(&grid, h, steps);
        let mut planner = FftPlanner::new();
        // Drift shears run on the transposed layout (q fastest).
        let half_drift = LineShear::new(&mut planner, nq, &plan.half_drift);
        let full_drift = LineShear::new(&mut planner, nq, &plan.full_drift);
        let kick = LineShear::new(&mut planner, np, &plan.kick);
        let mut t = vec![Complex64::default(); amps.len()];
        let par = opts.parallelism;

        let drift = |amps: &mut Vec<Complex64>, t: &mut Vec<Complex64>, s: &LineShear| {
            transpose(amps, nq, np, t);
            s.apply(t, par);
            transpose(t, np, nq, amps);
        };
        drift(&mut amps, &mut t, &half_drift);
        for step in 0..plan.kicks {
            kick.apply(&mut amps, par);
            let last = if step + 1 == plan.kicks {
                &half_drift
            } else {
                &full_drift
            };
            drift(&mut amps, &mut t, last);
        }
    }
    KvNState::new(grid, amps, state.time + t_final)
}
