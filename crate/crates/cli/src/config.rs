//! Run configuration: JSON file plus flag overrides, validated up front.

use std::path::PathBuf;

use clap::ValueEnum;
use kvn_core::propagator::{
    FlowMap, Integrator, Observable, Parallelism, PhaseSpaceGrid, PropagateOptions,
};
use kvn_core::PhaseSpaceModel;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parse::{parse, Expr, ParseError};
use crate::report::ModelInfo;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    VerifyAlgebra,
    SuperfieldExpand,
    ActionCheck,
    CheckSymmetries,
    PictureChange,
    Propagate,
    KernelCheck,
    Interference,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyAlgebra => "verify-algebra",
            Command::SuperfieldExpand => "superfield-expand",
            Command::ActionCheck => "action-check",
            Command::CheckSymmetries => "check-symmetries",
            Command::PictureChange => "picture-change",
            Command::Propagate => "propagate",
            Command::KernelCheck => "kernel-check",
            Command::Interference => "interference",
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(
            self,
            Command::Propagate | Command::KernelCheck | Command::Interference
        )
    }

    fn takes_observables(self) -> bool {
        matches!(
            self,
            Command::CheckSymmetries | Command::PictureChange | Command::Interference
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// The grid covers `[−half, half]²`.
    pub half: f64,
    /// Points per axis, endpoints included.
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { half: 4.0, n: 256 }
    }
}

/// Everything a run can be told. All fields are optional in the file; flags
/// override file values.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dof: Option<usize>,
    pub hamiltonian: Option<String>,
    pub grid: Option<GridConfig>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub integrator: Option<Integrator>,
    pub parallelism: Option<Parallelism>,
    pub center: Option<[f64; 2]>,
    pub center1: Option<[f64; 2]>,
    pub sigma: Option<f64>,
    #[serde(default)]
    pub observables: Vec<String>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{field}: {source}")]
    Parse { field: String, source: ParseError },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] kvn_core::Error),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

impl RunConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| ConfigError::Json {
            path: path.to_owned(),
            source,
        })
    }

    /// `other`'s set fields win; a nonempty observable list replaces ours.
    pub fn overridden_by(mut self, other: RunConfig) -> RunConfig {
        macro_rules! take {
            ($($f:ident),*) => { $(if other.$f.is_some() { self.$f = other.$f; })* };
        }
        take!(
            dof,
            hamiltonian,
            grid,
            dt,
            t_final,
            integrator,
            parallelism,
            center,
            center1,
            sigma,
            out_dir
        );
        if !other.observables.is_empty() {
            self.observables = other.observables;
        }
        self
    }

    /// Check everything the command will need before it starts.
    pub fn validate(&self, command: Command) -> Result<Settings, ConfigError> {
        let dof = self.dof.unwrap_or(1);
        if dof == 0 {
            return invalid("dof must be at least 1");
        }
        let Some(source) = &self.hamiltonian else {
            return invalid("no Hamiltonian given (use --hamiltonian or the config key)");
        };
        let h = parse(source, dof).map_err(|source| ConfigError::Parse {
            field: "hamiltonian".into(),
            source,
        })?;
        let h = h
            .to_poly(dof)
            .map_err(|e| ConfigError::Invalid(format!("hamiltonian: {e}")))?;
        let model = PhaseSpaceModel::new(dof, h)?;
        let info = ModelInfo {
            dof,
            hamiltonian: source.clone(),
            canonical: model.hamiltonian().to_string(),
        };

        if !command.takes_observables() && !self.observables.is_empty() {
            return invalid(format!("{} takes no observables", command.name()));
        }
        let mut observables = Vec::new();
        for (k, text) in self.observables.iter().enumerate() {
            let expr = parse(text, dof).map_err(|source| ConfigError::Parse {
                field: format!("observables[{k}]"),
                source,
            })?;
            if command != Command::CheckSymmetries {
                expr.to_poly(dof)
                    .map_err(|e| ConfigError::Invalid(format!("observables[{k}]: {e}")))?;
            }
            observables.push((text.clone(), expr));
        }

        let numeric = if command.is_numeric() {
            Some(self.numeric(command, &model, &observables)?)
        } else {
            None
        };
        Ok(Settings {
            command,
            model,
            info,
            observables,
            numeric,
            out_dir: self.out_dir.clone(),
        })
    }

    fn numeric(
        &self,
        command: Command,
        model: &PhaseSpaceModel,
        observables: &[(String, Expr)],
    ) -> Result<Numeric, ConfigError> {
        if model.dof() != 1 {
            return invalid(format!("{} runs on one degree of freedom", command.name()));
        }
        let g = self.grid.clone().unwrap_or_default();
        if !(g.half > 0.0 && g.half.is_finite()) {
            return invalid("grid.half must be positive");
        }
        let grid = PhaseSpaceGrid::square(g.half, g.n)?;
        let spacing = grid.dq().max(grid.dp());
        let sigma = self.sigma.unwrap_or(8.0 * spacing);
        if !(sigma >= 2.0 * spacing && sigma.is_finite()) {
            return invalid(format!(
                "sigma = {sigma} must be at least two grid spacings ({})",
                2.0 * spacing
            ));
        }
        let dt = self.dt.unwrap_or(0.01);
        if !(dt > 0.0 && dt.is_finite()) {
            return invalid("dt must be positive");
        }
        let t_final = self.t_final.unwrap_or(1.0);
        if !(t_final >= 0.0 && t_final.is_finite()) {
            return invalid("t_final must be nonnegative");
        }
        let (c0, c1) = match command {
            Command::Interference => (
                self.center.unwrap_or([-2.0, 0.0]),
                self.center1.unwrap_or([2.0, 0.0]),
            ),
            _ => {
                if self.center1.is_some() {
                    return invalid(format!("{} takes one center", command.name()));
                }
                let c = self.center.unwrap_or([1.0, 0.0]);
                (c, c)
            }
        };
        for c in [c0, c1] {
            if !grid.contains(c[0], c[1]) {
                return invalid(format!("center {c:?} lies outside the grid"));
            }
        }
        let opts = PropagateOptions {
            integrator: self.integrator.unwrap_or_default(),
            parallelism: self.parallelism.unwrap_or_default(),
        };
        if command != Command::Interference {
            FlowMap::new(model, dt, opts.integrator)?;
        }
        let mut mult = Vec::new();
        if command == Command::Interference {
            let defaults = ["1", "q_1", "p_1", "q_1^2 + p_1^2"];
            let owned: Vec<(String, Expr)>;
            let list = if observables.is_empty() {
                owned = defaults
                    .iter()
                    .map(|s| {
                        (
                            s.to_string(),
                            parse(s, 1).expect("default observables parse"),
                        )
                    })
                    .collect();
                &owned[..]
            } else {
                observables
            };
            for (text, e) in list {
                let p = e.to_poly(1).map_err(ConfigError::Invalid)?;
                mult.push((text.clone(), Observable::poly(&p)?));
            }
        }
        Ok(Numeric {
            grid,
            sigma,
            dt,
            t_final,
            center: (c0[0], c0[1]),
            center1: (c1[0], c1[1]),
            opts,
            observables: mult,
        })
    }
}

/// A validated run.
#[derive(Clone, Debug)]
pub struct Settings {
    pub command: Command,
    pub model: PhaseSpaceModel,
    pub info: ModelInfo,
    pub observables: Vec<(String, Expr)>,
    pub numeric: Option<Numeric>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct Numeric {
    pub grid: PhaseSpaceGrid,
    pub sigma: f64,
    pub dt: f64,
    pub t_final: f64,
    pub center: (f64, f64),
    pub center1: (f64, f64),
    pub opts: PropagateOptions,
    pub observables: Vec<(String, Observable)>,
}
