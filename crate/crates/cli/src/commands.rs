//! The eight commands. Each turns validated settings into checks and artifacts.

use std::time::Instant;

use kvn_core::propagator::{
    gaussian_state, kernel_delta_check, propagate_with, superposition_demo, write_csv, KvNState,
    PhaseSpaceGrid, StateHeader, ADDITIVITY_TOL, CROSS_TERM_TOL, MIN_SEPARATION_SIGMAS,
    TRANSLATION_MIN,
};
use kvn_core::superfield::{
    build_superfield, check_action_identity, check_berezin_lie, evaluate_on_superfield,
    superfield_eom, superspace_lagrangian, SECTORS,
};
use kvn_core::superops::verify_charge_algebra;
use kvn_core::superspace::{Sse, Superspace};
use kvn_core::symmetries::{
    classify_observable, generator_property, picture_change_observable, variation, TransformKind,
    Verdict,
};
use kvn_core::{Error, PhaseSpaceModel, Poly, Scalar};
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::config::{Command, Numeric, Settings};
use crate::report::{Check, Report, SCHEMA_VERSION};

/// Largest tolerated `|‖ψ(t)‖ − 1|`.
pub const NORM_DRIFT_TOL: f64 = 1e-6;
/// Largest tolerated relative L² error against a closed-form reference.
pub const REFERENCE_TOL: f64 = 1e-3;

/// A finished run: the report plus files to write next to it.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub artifacts: Vec<(String, Vec<u8>)>,
}

pub fn execute(s: &Settings) -> Result<Outcome, Error> {
    let start = Instant::now();
    let mut artifacts = Vec::new();
    let checks = match s.command {
        Command::VerifyAlgebra => verify_algebra(&s.model)?,
        Command::SuperfieldExpand => superfield_expand(&s.model)?,
        Command::ActionCheck => action_check(&s.model)?,
        Command::CheckSymmetries => check_symmetries(s)?,
        Command::PictureChange => picture_change(s)?,
        Command::Propagate => propagate(s, numeric(s), &mut artifacts)?,
        Command::KernelCheck => kernel_check(s, numeric(s), &mut artifacts)?,
        Command::Interference => interference(numeric(s), &mut artifacts)?,
    };
    let report = Report {
        schema_version: SCHEMA_VERSION,
        command: s.command.name().to_string(),
        model: s.info.clone(),
        checks,
        elapsed_ms: start.elapsed().as_millis() as u64,
    };
    Ok(Outcome { report, artifacts })
}

fn numeric(s: &Settings) -> &Numeric {
    s.numeric
        .as_ref()
        .expect("numeric commands are validated with grid settings")
}

fn verify_algebra(model: &PhaseSpaceModel) -> Result<Vec<Check>, Error> {
    let r = verify_charge_algebra(model)?;
    let mut out: Vec<Check> = r
        .checks
        .iter()
        .map(|c| Check::exact(&c.name, &c.residual, c.passed()))
        .collect();
    if let Some(first) = out.first_mut() {
        first
            .details
            .insert("Htilde".into(), r.lie_derivative.to_string().into());
    }
    Ok(out)
}

fn sectors(e: &Sse) -> Result<Map<String, Value>, Error> {
    Ok(SECTORS
        .iter()
        .zip(e.theta_components()?)
        .map(|(name, c)| (name.to_string(), c.to_string().into()))
        .collect())
}

fn superfield_expand(model: &PhaseSpaceModel) -> Result<Vec<Check>, Error> {
    let phi = build_superfield(model)?;
    let mut components = Map::new();
    for a in 0..model.dim() {
        components.insert(
            format!("Phi^{}", Poly::var_name(a)),
            phi.component(a).to_string().into(),
        );
    }
    let h = evaluate_on_superfield(model.hamiltonian(), &phi)?;
    let taylor = Check::exact(
        "H(Phi) Taylor remainder",
        &h.remainder,
        h.remainder.is_zero(),
    )
    .with("superfield", components)
    .with("H(Phi)", sectors(&h.value)?);
    let b = check_berezin_lie(model)?;
    Ok(vec![taylor, Check::exact(&b.name, &b.residual, b.passed())])
}

fn action_check(model: &PhaseSpaceModel) -> Result<Vec<Check>, Error> {
    let r = check_action_identity(model)?;
    let bad = r.variational.iter().find(|(_, e)| !e.is_zero());
    let variational: Map<String, Value> = r
        .variational
        .iter()
        .map(|(name, e)| (name.clone(), e.to_string().into()))
        .collect();
    let residual = bad.map_or("0".to_string(), |(_, e)| e.to_string());
    let mut out = vec![Check::exact(
        "i int dtheta dthetabar L_ps[Phi] - Ltilde is a total derivative",
        residual,
        bad.is_none(),
    )
    .with("difference", r.difference.to_string())
    .with("variational_derivatives", variational)];
    let eom = superfield_eom(model)?;
    out.extend(
        eom.checks
            .iter()
            .map(|c| Check::exact(&c.name, &c.residual, c.passed())),
    );
    Ok(out)
}

fn check_symmetries(s: &Settings) -> Result<Vec<Check>, Error> {
    let model = &s.model;
    let mut out = Vec::new();
    if s.observables.is_empty() {
        // with nothing to classify, check the invariant building blocks
        let phi = build_superfield(model)?;
        for a in 0..model.dim() {
            let name = format!("Phi^{}", Poly::var_name(a));
            out.push(classify(&name, phi.component(a), model)?);
        }
        let l = superspace_lagrangian(&phi, model)?;
        for kind in TransformKind::ALL {
            let delta = variation(&l, model, kind)?;
            out.push(
                Check::exact(
                    format!("L_ps[Phi] invariant under {kind}"),
                    &delta,
                    delta.is_zero(),
                )
                .with("transformation", kind.to_string()),
            );
        }
        return Ok(out);
    }
    let space = Superspace::for_model(model)?;
    for (text, expr) in &s.observables {
        out.push(classify(text, &expr.to_superspace(&space), model)?);
    }
    Ok(out)
}

fn classify(name: &str, expr: &Sse, model: &PhaseSpaceModel) -> Result<Check, Error> {
    Ok(match classify_observable(expr, model)? {
        Verdict::Accepted { reconstruction } => Check::exact(format!("classify {name}"), "0", true)
            .with("verdict", "accepted")
            .with("reconstruction", reconstruction.to_string()),
        Verdict::Rejected { failing, residual } => {
            Check::exact(format!("classify {name}"), &residual, false)
                .with("verdict", "rejected")
                .with("failing", failing.to_string())
        }
    })
}

fn picture_change(s: &Settings) -> Result<Vec<Check>, Error> {
    let model = &s.model;
    let dim = model.dim();
    let observables: Vec<(String, Poly)> = if s.observables.is_empty() {
        (0..dim)
            .map(|a| (Poly::var_name(a), Poly::var(dim, a)))
            .chain(std::iter::once((
                "H".to_string(),
                model.hamiltonian().clone(),
            )))
            .collect()
    } else {
        s.observables
            .iter()
            .map(|(t, e)| (t.clone(), e.to_poly(model.dof()).expect("validated")))
            .collect()
    };
    let mut out = Vec::new();
    for (text, g) in observables {
        let name = format!("picture change of G(Phi) for G = {text}");
        out.push(match picture_change_observable(&g, model) {
            Ok(image) => Check::exact(name, "0", true).with("image", image.to_string()),
            Err(Error::Verification { identity, residual }) => {
                Check::exact(name, residual, false).with("identity", identity)
            }
            Err(e) => return Err(e),
        });
    }
    for c in generator_property(model)? {
        out.push(Check::exact(&c.name, &c.residual, c.passed()));
    }
    Ok(out)
}

/// Closed-form transport of the initial Gaussian where one is known.
fn reference(
    model: &PhaseSpaceModel,
    n: &Numeric,
    psi0: &KvNState,
) -> Result<Option<(&'static str, KvNState)>, Error> {
    let (q, p) = (Poly::var(2, 0), Poly::var(2, 1));
    let half = Scalar::ratio(1, 2);
    let h = model.hamiltonian();
    let (q0, p0) = n.center;
    let t = n.t_final;
    let sigma = n.sigma;
    let gauss = |g: &PhaseSpaceGrid, f: &dyn Fn(f64, f64) -> (f64, f64)| {
        KvNState::from_fn(g, |x, y| {
            let (dq, dp) = f(x, y);
            Complex64::new((-(dq * dq + dp * dp) / (2.0 * sigma * sigma)).exp(), 0.0)
        })?
        .normalized()
    };
    if h.is_zero() {
        return Ok(Some(("identity", psi0.clone())));
    }
    if *h == p.pow(2).scale(&half) {
        let s = gauss(&n.grid, &|x, y| (x - y * t - q0, y - p0))?;
        return Ok(Some(("free particle", s)));
    }
    if *h == q.pow(2).add(&p.pow(2)).scale(&half) {
        let (c, sn) = (t.cos(), t.sin());
        let (qt, pt) = (q0 * c + p0 * sn, -q0 * sn + p0 * c);
        let s = gauss(&n.grid, &|x, y| (x - qt, y - pt))?;
        return Ok(Some(("harmonic oscillator", s)));
    }
    Ok(None)
}

fn state_artifacts(name: &str, state: &KvNState, out: &mut Vec<(String, Vec<u8>)>) {
    let mut csv = Vec::new();
    write_csv(state, &mut csv).expect("writing to memory");
    let header = serde_json::to_vec_pretty(&StateHeader::of(state)).expect("headers serialize");
    out.push((format!("{name}.csv"), csv));
    out.push((format!("{name}.header.json"), header));
}

fn run_details(n: &Numeric) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("grid".into(), json!(n.grid));
    m.insert("sigma".into(), json!(n.sigma));
    m.insert("dt".into(), json!(n.dt));
    m.insert("t_final".into(), json!(n.t_final));
    m.insert("center".into(), json!([n.center.0, n.center.1]));
    m.insert("integrator".into(), json!(n.opts.integrator));
    m
}

fn propagate(
    s: &Settings,
    n: &Numeric,
    artifacts: &mut Vec<(String, Vec<u8>)>,
) -> Result<Vec<Check>, Error> {
    let psi0 = gaussian_state(&n.grid, n.center, n.sigma, None)?;
    let psi = propagate_with(&psi0, &s.model, n.t_final, n.dt, n.opts)?;
    let drift = (psi.norm() - 1.0).abs();
    let mut out = vec![Check::numeric("norm drift", drift, drift < NORM_DRIFT_TOL)
        .with("tolerance", NORM_DRIFT_TOL)
        .with("norm", psi.norm())];
    out[0].details.extend(run_details(n));
    if let Some((kind, exact)) = reference(&s.model, n, &psi0)? {
        let err = psi.relative_l2_error(&exact);
        let check = if kind == "identity" {
            // H = 0 moves nothing: demand the same bits back
            let same = psi.amplitudes() == psi0.amplitudes();
            Check::numeric("state unchanged under H = 0", err, same)
        } else {
            Check::numeric(
                format!("relative L2 error vs {kind}"),
                err,
                err < REFERENCE_TOL,
            )
            .with("tolerance", REFERENCE_TOL)
        };
        out.push(check.with("reference", kind));
    }
    state_artifacts("propagate", &psi, artifacts);
    Ok(out)
}

fn kernel_check(
    s: &Settings,
    n: &Numeric,
    artifacts: &mut Vec<(String, Vec<u8>)>,
) -> Result<Vec<Check>, Error> {
    let r = kernel_delta_check(
        &s.model, &n.grid, n.center, n.sigma, n.t_final, n.dt, n.opts,
    )?;
    let mut detail = run_details(n);
    detail.insert("report".into(), json!(r));
    let mut distance = Check::numeric(
        "centroid distance to classical point",
        r.distance,
        r.distance < 2.0 * r.spacing,
    )
    .with("tolerance", 2.0 * r.spacing);
    distance.details.extend(detail);
    let mass = Check::numeric(
        "mass fraction within 5 sigma",
        r.mass_fraction,
        r.mass_fraction > 0.99,
    )
    .with("minimum", 0.99);
    let psi0 = gaussian_state(&n.grid, n.center, n.sigma, None)?;
    let psi = propagate_with(&psi0, &s.model, n.t_final, n.dt, n.opts)?;
    state_artifacts("kernel-check", &psi, artifacts);
    Ok(vec![distance, mass])
}

fn interference(n: &Numeric, artifacts: &mut Vec<(String, Vec<u8>)>) -> Result<Vec<Check>, Error> {
    let obs: Vec<_> = n.observables.iter().map(|(_, o)| o.clone()).collect();
    let r = superposition_demo(
        &n.grid,
        n.center,
        n.center1,
        n.sigma,
        &obs,
        n.opts.parallelism,
    )?;
    // the coincident case is reported, never judged
    let judge = |ok: bool| ok || r.degenerate;
    let ratio = r.separation / r.sigma;
    let mut out = vec![Check::numeric(
        "separation in widths",
        ratio,
        judge(ratio >= MIN_SEPARATION_SIGMAS),
    )
    .with("minimum", MIN_SEPARATION_SIGMAS)
    .with("degenerate", r.degenerate)
    .with(
        "centers",
        json!([[n.center.0, n.center.1], [n.center1.0, n.center1.1]]),
    )];
    for ((text, _), c) in n.observables.iter().zip(&r.multiplication) {
        out.push(
            Check::numeric(
                format!("cross term of {text}"),
                c.cross,
                judge(c.cross < CROSS_TERM_TOL),
            )
            .with("tolerance", CROSS_TERM_TOL),
        );
        out.push(
            Check::numeric(
                format!("additivity of {text}"),
                c.additivity,
                judge(c.additivity < ADDITIVITY_TOL),
            )
            .with("tolerance", ADDITIVITY_TOL),
        );
    }
    out.push(
        Check::numeric(
            "translation cross term",
            r.translation,
            judge(r.translation > TRANSLATION_MIN),
        )
        .with("minimum", TRANSLATION_MIN)
        .with("shift", n.center1.0 - n.center.0),
    );
    let psi = gaussian_state(&n.grid, n.center, n.sigma, None)?
        .add(&gaussian_state(&n.grid, n.center1, n.sigma, None)?)?
        .normalized()?;
    state_artifacts("interference", &psi, artifacts);
    Ok(out)
}
