//! One function per subcommand.

use std::path::{Path, PathBuf};

use orlicz_finsler::epsgeodesic::{chi_length, laplacian_bound_probe, solve_eps_geodesic, EpsOptions};
use orlicz_finsler::flow::{run_flow, FlowConfig};
use orlicz_finsler::metrics::{
    am_dual, am_energy, d_chi_report, ding_and_j, e_chi_energy, i_chi_terms, renormalize, RicciPotential,
};
use orlicz_finsler::orlicz::gauge_norm_report;
use orlicz_finsler::random::{random_potential, trial_rng, Roughness};
use orlicz_finsler::toric::{rooftop, weak_geodesic, ReferenceModel};
use orlicz_finsler::weights::WeightSpec;
use orlicz_finsler::{Potential, Weight};
use serde_json::json;

use crate::config::{self, parse_weight, CommandKind, ExperimentConfig, FlowSettings, InitialSpec, Suite};
use crate::io::{self, fmt};
use crate::{verify as suites, CliError, DistArgs, EnergyArgs, EnvelopeArgs, EpsgeoArgs, GeodesicArgs, NormArgs};
use crate::{Outcome, VerifyArgs};

fn weight(arg: &str) -> Result<(WeightSpec, Weight), CliError> {
    let spec = parse_weight(arg)?;
    let w = spec.build()?;
    Ok((spec, w))
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

/// Prints `v`, and also writes it to `<out>.json` when a prefix is given.
fn json_outcome(v: serde_json::Value, out: Option<&Path>, passed: bool) -> Result<Outcome, CliError> {
    let text = pretty(&v);
    if let Some(p) = out {
        io::write(&io::with_ext(p, "json"), &text)?;
    }
    Ok(Outcome { stdout: text, passed })
}

fn csv_outcome(text: String, out: Option<&Path>) -> Result<Outcome, CliError> {
    match out {
        Some(p) => {
            io::write(&io::with_ext(p, "csv"), &text)?;
            Ok(Outcome::ok(String::new()))
        }
        None => Ok(Outcome::ok(text)),
    }
}

fn pair(u0: &Path, u1: &Path) -> Result<(Potential, Potential), CliError> {
    let mut v = io::read_potentials(&[u0, u1])?;
    let b = v.pop().unwrap();
    Ok((v.pop().unwrap(), b))
}

pub fn norm(a: &NormArgs) -> Result<Outcome, CliError> {
    let (spec, w) = weight(&a.weight)?;
    let f = io::read_function(&a.function)?;
    let mu = io::read_measure(&a.measure)?;
    let (_, rep) = gauge_norm_report(&f, &w, &mu)?;
    let passed = rep.sandwich_ok != Some(false);
    json_outcome(
        json!({ "weight": spec, "norm": rep.norm, "sandwich": rep }),
        a.out.as_deref(),
        passed,
    )
}

pub fn dist(a: &DistArgs) -> Result<Outcome, CliError> {
    let (spec, w) = weight(&a.weight)?;
    let (u0, u1) = pair(&a.u0, &a.u1)?;
    let rep = d_chi_report(&u0, &u1, &w)?;
    let terms = i_chi_terms(&u0, &u1, &w)?;
    let passed = rep.sandwich_ok != Some(false);
    json_outcome(
        json!({
            "weight": spec,
            "grid": u0.model().n(),
            "d_chi": rep.norm,
            "i_chi": terms[0] + terms[1],
            "i_chi_terms": terms,
            "sandwich": rep,
        }),
        a.out.as_deref(),
        passed,
    )
}

fn is_fano(u: &Potential) -> bool {
    u.model().len() == 2.0
}

pub fn energy(a: &EnergyArgs) -> Result<Outcome, CliError> {
    let u = io::read_potentials(&[&a.u])?.remove(0);
    let e_chi = match &a.weight {
        Some(s) => {
            let (spec, w) = weight(s)?;
            Some(json!({ "weight": spec, "value": e_chi_energy(&u, &w) }))
        }
        None => None,
    };
    let (ding, j) = if is_fano(&u) {
        let h = RicciPotential::reference(u.model());
        let (f, j) = ding_and_j(&u, &h.values)?;
        (Some(f), Some(j))
    } else {
        (None, None)
    };
    json_outcome(
        json!({
            "grid": u.model().n(),
            "polytope_length": u.model().len(),
            "am": am_energy(&u),
            "am_dual": am_dual(&u),
            "e_chi": e_chi,
            "ding_f": ding,
            "j": j,
        }),
        a.out.as_deref(),
        true,
    )
}

fn sample_rows(label: f64, u: &Potential) -> impl Iterator<Item = Vec<String>> + '_ {
    let m = u.model();
    let primal = u.primal_at_reference();
    (0..m.n()).map(move |i| {
        vec![
            fmt(label),
            fmt(m.nodes()[i]),
            fmt(u.values()[i]),
            fmt(m.g1()[i]),
            fmt(primal[i]),
        ]
    })
}

pub fn envelope(a: &EnvelopeArgs) -> Result<Outcome, CliError> {
    let (u0, u1) = pair(&a.u0, &a.u1)?;
    let mut rows = Vec::new();
    for &tau in &a.tau {
        if !tau.is_finite() {
            return Err(CliError::Usage(format!("tau must be finite, got {tau}")));
        }
        let p = rooftop(&u0, &u1.shifted(-tau))?;
        rows.extend(sample_rows(tau, &p));
    }
    let text = io::csv_text(&["tau", "y", "dual_value", "s", "primal"], rows);
    csv_outcome(text, a.out.as_deref())
}

pub fn geodesic(a: &GeodesicArgs) -> Result<Outcome, CliError> {
    if a.steps < 2 {
        return Err(CliError::Usage("steps must be at least 2".into()));
    }
    let (u0, u1) = pair(&a.u0, &a.u1)?;
    let seg = weak_geodesic(&u0, &u1)?;
    let mut rows = Vec::new();
    for k in 0..a.steps {
        let t = k as f64 / (a.steps - 1) as f64;
        rows.extend(sample_rows(t, &seg.at(t)).collect::<Vec<_>>());
    }
    let text = io::csv_text(&["t", "y", "dual_value", "s", "primal"], rows);
    csv_outcome(text, a.out.as_deref())
}

pub fn epsgeo(a: &EpsgeoArgs) -> Result<Outcome, CliError> {
    let (u0, u1) = pair(&a.u0, &a.u1)?;
    let (spec, w) = weight(a.weight.as_deref().unwrap_or(r#"{"kind":"power","p":1.0}"#))?;
    let opts = EpsOptions {
        time_nodes: a.time_nodes,
        tol: a.tol,
        ..Default::default()
    };
    let field = solve_eps_geodesic(&u0, &u1, a.eps, &opts)?;
    let seg = weak_geodesic(&u0, &u1)?;
    let d = orlicz_finsler::metrics::d_chi(&u0, &u1, &w)?;
    let report = json!({
        "epsilon": a.eps,
        "grid": u0.model().n(),
        "time_nodes": a.time_nodes,
        "newton_iterations": field.residual_history().len(),
        "residual": field.residual(),
        "residual_history": field.residual_history(),
        "t_convexity_defect": field.t_convexity_defect(),
        "sup_distance_to_geodesic": field.sup_distance(&seg),
        "laplacian_probe": laplacian_bound_probe(&field),
        "weight": spec,
        "chi_length": chi_length(&field, &w)?,
        "d_chi": d,
        "warnings": field.warnings(),
    });
    io::write(&io::with_ext(&a.out, "csv"), &field.to_csv())?;
    json_outcome(report, Some(&a.out), true)
}

pub fn flow(s: &FlowSettings, out: &Path) -> Result<Outcome, CliError> {
    let m = ReferenceModel::fano(s.grid)?;
    let initial = match &s.initial {
        InitialSpec::Reference => Potential::zero(&m),
        InitialSpec::Random { seed, roughness } => {
            let r = roughness.unwrap_or(Roughness {
                amplitude: 0.2,
                symmetric: true,
                ..Default::default()
            });
            random_potential(&m, &mut trial_rng(*seed, 0), &r)
        }
        InitialSpec::File { path } => {
            let u = io::read_potentials(&[path])?.remove(0);
            if u.model().n() != s.grid || !is_fano(&u) {
                return Err(CliError::Usage(format!(
                    "{}: expected {} nodes on [0,2]",
                    path.display(),
                    s.grid
                )));
            }
            Potential::new(&m, u.into_values())?
        }
    };
    let cfg = FlowConfig {
        initial: renormalize(&initial),
        dt: s.dt,
        t_end: s.t_end,
        normalization: s.normalization,
        ricci_potential: RicciPotential::reference(&m),
        reference_ke: Some(Potential::zero(&m)),
    };
    let tr = run_flow(&cfg)?;
    let rows = tr.states.iter().map(|st| {
        let d = &st.diagnostics;
        vec![
            fmt(st.time),
            fmt(d.sup_rdot),
            fmt(d.am),
            fmt(d.ding_f),
            fmt(d.j),
            d.d1_to_ref.map(fmt).unwrap_or_default(),
        ]
    });
    let text = io::csv_text(&["t", "sup_rdot", "am", "ding_f", "j", "d1_to_ref"], rows);
    io::write(&io::with_ext(out, "csv"), &text)?;
    json_outcome(json!({ "settings": s, "summary": tr.summary }), Some(out), true)
}

pub fn verify(a: &VerifyArgs) -> Result<Outcome, CliError> {
    if a.grid < config::MIN_GRID {
        return Err(CliError::Usage(format!("grid must be at least {}", config::MIN_GRID)));
    }
    if a.trials < 1 {
        return Err(CliError::Usage("trials must be at least 1".into()));
    }
    let opts = suites::Options {
        grid: a.grid,
        trials: a.trials,
        seed: a.seed,
    };
    let rows = suites::run(a.suite, &opts)?;
    let text = suites::to_csv(&rows);
    if let Some(p) = &a.out {
        io::write(&io::with_ext(p, "csv"), &text)?;
    }
    Ok(Outcome {
        stdout: text,
        passed: rows.iter().all(|r| r.pass),
    })
}

fn need(p: &Option<PathBuf>, what: &str) -> Result<PathBuf, CliError> {
    p.clone()
        .ok_or_else(|| CliError::Usage(format!("config is missing io.{what}")))
}

fn weight_arg(c: &ExperimentConfig) -> Result<String, CliError> {
    let spec = c
        .weight
        .as_ref()
        .ok_or_else(|| CliError::Usage("config is missing weight".into()))?;
    Ok(serde_json::to_string(spec).expect("weight specs serialize"))
}

/// Dispatches a validated experiment config.
pub fn run(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    let out = c.io.out.clone();
    match c.command {
        CommandKind::Norm => norm(&NormArgs {
            weight: weight_arg(c)?,
            function: need(&c.io.function, "function")?,
            measure: need(&c.io.measure, "measure")?,
            out,
        }),
        CommandKind::Dist => dist(&DistArgs {
            weight: weight_arg(c)?,
            u0: need(&c.io.u0, "u0")?,
            u1: need(&c.io.u1, "u1")?,
            out,
        }),
        CommandKind::Energy => energy(&EnergyArgs {
            u: need(&c.io.u, "u")?,
            weight: c.weight.as_ref().map(|_| weight_arg(c)).transpose()?,
            out,
        }),
        CommandKind::Envelope => envelope(&EnvelopeArgs {
            u0: need(&c.io.u0, "u0")?,
            u1: need(&c.io.u1, "u1")?,
            tau: c.taus.clone().unwrap_or_else(|| vec![0.0]),
            out,
        }),
        CommandKind::Geodesic => geodesic(&GeodesicArgs {
            u0: need(&c.io.u0, "u0")?,
            u1: need(&c.io.u1, "u1")?,
            steps: c.steps.unwrap_or(11),
            out,
        }),
        CommandKind::Epsgeo => epsgeo(&EpsgeoArgs {
            u0: need(&c.io.u0, "u0")?,
            u1: need(&c.io.u1, "u1")?,
            eps: c.eps.ok_or_else(|| CliError::Usage("config is missing eps".into()))?,
            out: need(&out, "out")?,
            time_nodes: c.steps.unwrap_or(64),
            tol: 1e-10,
            weight: c.weight.as_ref().map(|_| weight_arg(c)).transpose()?,
        }),
        CommandKind::Flow => {
            let s = c
                .flow
                .as_ref()
                .ok_or_else(|| CliError::Usage("config is missing flow".into()))?;
            flow(s, &need(&out, "out")?)
        }
        CommandKind::Verify => verify(&VerifyArgs {
            suite: c.suite.unwrap_or(Suite::All),
            trials: c.trials,
            seed: c.seed,
            grid: c.grid,
            out,
        }),
    }
}
