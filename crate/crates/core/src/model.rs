//! Phase-space model: Hamiltonian plus symplectic structure.

use crate::error::{Error, Result};
use crate::poly::Poly;

/// `n` degrees of freedom, a polynomial Hamiltonian over `2n` interleaved
/// coordinates, and the symplectic matrices in both index positions.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpaceModel {
    dof: usize,
    hamiltonian: Poly,
    omega_upper: Vec<Vec<i64>>,
    omega_lower: Vec<Vec<i64>>,
}

impl PhaseSpaceModel {
    pub fn new(dof: usize, hamiltonian: Poly) -> Result<Self> {
        if dof == 0 {
            return Err(Error::Config("degrees of freedom must be positive".into()));
        }
        if hamiltonian.nvars() != 2 * dof {
            return Err(Error::Config(format!(
                "Hamiltonian has {} variables, model expects {}",
                hamiltonian.nvars(),
                2 * dof
            )));
        }
        let dim = 2 * dof;
        let mut upper = vec![vec![0; dim]; dim];
        let mut lower = vec![vec![0; dim]; dim];
        for k in 0..dof {
            let (q, p) = (2 * k, 2 * k + 1);
            upper[q][p] = 1;
            upper[p][q] = -1;
            // inverse of the upper block
            lower[q][p] = -1;
            lower[p][q] = 1;
        }
        Ok(PhaseSpaceModel {
            dof,
            hamiltonian,
            omega_upper: upper,
            omega_lower: lower,
        })
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    /// Number of phase-space coordinates, `2n`.
    pub fn dim(&self) -> usize {
        2 * self.dof
    }

    pub fn hamiltonian(&self) -> &Poly {
        &self.hamiltonian
    }

    /// `ω^{ab}`
    pub fn omega_upper(&self, a: usize, b: usize) -> i64 {
        self.omega_upper[a][b]
    }

    /// `ω_{ab}`
    pub fn omega_lower(&self, a: usize, b: usize) -> i64 {
        self.omega_lower[a][b]
    }

    /// A model sharing this symplectic structure with a different Hamiltonian.
    pub fn with_hamiltonian(&self, hamiltonian: Poly) -> Result<Self> {
        PhaseSpaceModel::new(self.dof, hamiltonian)
    }
}
