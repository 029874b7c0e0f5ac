//! Subcommands. Each one reads the scenario, writes its tables into the
//! output directory and returns the manifest describing the run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use elastoray_core::amplitude::{propagate_packet, transport_a_minus1, transport_b0, RayBundle};
use elastoray_core::interface_ops::{energy_flux_residual, rt_matrices, solve_interface_system, CMat3, InterfaceSetting};
use elastoray_core::raytrace::{trace_broken_ray, BrokenRay, PhasePoint, TraceLimits};
use elastoray_core::tomography::{
    gauge_boundary_term, lens_match_check, lens_reversal_defect, pde_residual, ray_transform_2tensor, TensorField2,
};
use elastoray_core::{AnalyticField, ElasticMedium, Mode, Side};
use elastoray_weinstein as wein;
use nalgebra::Vector3;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::manifest::{Outputs, RunManifest, Status, Verdict};
use crate::scenario::{Launch, ProbeDef, Scenario, ScenarioError, Tolerances};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Compute(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) | RunError::Scenario(_) => 2,
            RunError::Io(_) | RunError::Compute(_) => 1,
        }
    }
}

impl From<elastoray_core::Error> for RunError {
    fn from(e: elastoray_core::Error) -> Self {
        RunError::Compute(e.to_string())
    }
}

impl From<wein::Error> for RunError {
    fn from(e: wein::Error) -> Self {
        RunError::Compute(e.to_string())
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;

/// Everything a subcommand needs besides its own arguments.
pub struct Context {
    pub scenario: Scenario,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub out_dir: PathBuf,
}

/// What a subcommand produced before the manifest is assembled.
pub struct Report {
    pub outputs: Outputs,
    pub verdicts: Vec<Verdict>,
    pub parameters: BTreeMap<String, Value>,
}

impl Report {
    pub fn new(ctx: &Context) -> RunResult<Self> {
        Ok(Report {
            outputs: Outputs::new(&ctx.out_dir)?,
            verdicts: Vec::new(),
            parameters: BTreeMap::new(),
        })
    }
}

/// Builds and writes the manifest for a finished run.
pub fn finish(ctx: &Context, subcommand: &str, report: Report, started: Instant) -> RunResult<RunManifest> {
    let mut parameters = report.parameters;
    parameters.insert("tolerances".into(), json!(ctx.tolerances.as_map()));
    let m = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        subcommand: subcommand.into(),
        scenario_hash: ctx.scenario.hash(),
        seed: ctx.seed,
        parameters,
        wall_clock_s: started.elapsed().as_secs_f64(),
        outputs: report.outputs.into_names(),
        verdicts: report.verdicts,
        cached: false,
    };
    m.write(&ctx.out_dir)?;
    Ok(m)
}

fn select<'a, T>(map: &'a BTreeMap<String, T>, name: Option<&str>, what: &str) -> RunResult<Vec<(&'a String, &'a T)>> {
    if map.is_empty() {
        return Err(RunError::Usage(format!("scenario defines no {what}")));
    }
    match name {
        None => Ok(map.iter().collect()),
        Some(n) => map
            .get_key_value(n)
            .map(|kv| vec![kv])
            .ok_or_else(|| RunError::Usage(format!("no {what} named {n:?}"))),
    }
}

// ---------------------------------------------------------------------------
// Rays

pub fn trace_launch(m: &ElasticMedium, l: &Launch) -> RunResult<BrokenRay> {
    let start = PhasePoint::launch(m, l.x, l.direction, l.mode, l.hint)?;
    let limits = TraceLimits {
        max_s: l.max_s,
        ..TraceLimits::default()
    };
    Ok(trace_broken_ray(m, &start, l.hint, &l.policy, &limits)?)
}

/// Largest `|c|ξ| - τ|/τ` over all samples.
pub fn max_drift(m: &ElasticMedium, ray: &BrokenRay) -> f64 {
    let mut worst = 0.0f64;
    for seg in &ray.segments {
        let region = &m.regions[seg.region];
        for s in &seg.samples {
            worst = worst.max(s.point.characteristic_drift(region.speed(&s.point.x, seg.mode)));
        }
    }
    worst
}

/// Largest tangential slowness jump `|(ξ_out - ξ_in) × ν| / |ξ_in|` over events.
pub fn max_snell_defect(ray: &BrokenRay) -> Option<f64> {
    ray.events
        .iter()
        .map(|e| (e.xi_out - e.xi_in).cross(&e.normal).norm() / e.xi_in.norm())
        .reduce(f64::max)
}

pub fn ray_verdicts(suite: &str, name: &str, m: &ElasticMedium, ray: &BrokenRay, tol: &Tolerances) -> Vec<Verdict> {
    let mut v = vec![Verdict::bound(suite, format!("{name}:characteristic"), max_drift(m, ray), tol.get("characteristic"))];
    match max_snell_defect(ray) {
        Some(d) => v.push(Verdict::bound(suite, format!("{name}:snell"), d, tol.get("snell"))),
        None => v.push(Verdict::skip(suite, format!("{name}:snell"), "no interface events")),
    }
    v
}

fn vec3(v: &Vector3<f64>) -> String {
    format!("{},{},{}", v.x, v.y, v.z)
}

pub fn trace(ctx: &Context, launch: Option<&str>) -> RunResult<RunManifest> {
    let started = Instant::now();
    let m = &ctx.scenario.medium;
    let mut rep = Report::new(ctx)?;
    let chosen = select(&ctx.scenario.launches, launch, "launches")?;
    let rays: Vec<RunResult<BrokenRay>> = chosen.par_iter().map(|(_, l)| trace_launch(m, l)).collect();
    for ((name, _), ray) in chosen.iter().zip(rays) {
        let ray = match ray {
            Ok(r) => r,
            Err(e) => {
                rep.verdicts.push(Verdict::new("trace", format!("{name}:trace"), Status::Fail, e.to_string()));
                continue;
            }
        };
        let mut csv = String::from("segment,region,mode,s,t,x,y,z,xi_x,xi_y,xi_z\n");
        for (k, seg) in ray.segments.iter().enumerate() {
            for s in &seg.samples {
                let p = &s.point;
                writeln!(csv, "{k},{},{:?},{},{},{},{}", seg.region, seg.mode, s.s, p.t, vec3(&p.x), vec3(&p.xi)).unwrap();
            }
        }
        rep.outputs.write(&format!("trace_{name}.csv"), &csv)?;
        rep.outputs.write_json(
            &format!("trace_{name}_events.json"),
            &json!({ "launch": name, "events": ray.events, "termination": ray.termination() }),
        )?;
        rep.verdicts.extend(ray_verdicts("trace", name, m, &ray, &ctx.tolerances));
    }
    rep.parameters.insert("launch".into(), json!(launch));
    finish(ctx, "trace", rep, started)
}

pub fn lens(ctx: &Context) -> RunResult<RunManifest> {
    let started = Instant::now();
    let m = &ctx.scenario.medium;
    let sweep = ctx.scenario.lens.as_ref().ok_or_else(|| RunError::Usage("scenario defines no lens sweep".into()))?;
    let mut rep = Report::new(ctx)?;
    let limits = TraceLimits::default();
    let rows: Vec<_> = sweep
        .covectors
        .par_iter()
        .map(|(x, xi)| {
            let fwd = elastoray_core::raytrace::travel_time_and_lens(m, x, xi, sweep.mode, sweep.q, &limits);
            let rev = lens_reversal_defect(m, x, xi, sweep.mode, sweep.q, &limits);
            (fwd, rev)
        })
        .collect();
    let mut csv = String::from("index,x,y,z,xi_x,xi_y,xi_z,travel_time,exit_x,exit_y,exit_z,exit_xi_x,exit_xi_y,exit_xi_z,arclength,error\n");
    let mut worst = 0.0f64;
    for (i, ((x, xi), (fwd, rev))) in sweep.covectors.iter().zip(rows).enumerate() {
        match fwd {
            Ok(r) => writeln!(
                csv,
                "{i},{},{},{},{},{},{},",
                vec3(x),
                vec3(xi),
                r.travel_time,
                vec3(&r.exit_x),
                vec3(&r.exit_xi),
                r.ray_arclength
            )
            .unwrap(),
            Err(e) => {
                writeln!(csv, "{i},{},{},,,,,,,,,{}", vec3(x), vec3(xi), csv_text(&e.to_string())).unwrap();
                rep.verdicts.push(Verdict::new("lens", format!("covector {i}"), Status::Fail, e.to_string()));
            }
        }
        if let Ok((dl, dx)) = rev {
            worst = worst.max(dl).max(dx);
        }
    }
    rep.outputs.write("lens.csv", &csv)?;
    rep.verdicts.push(Verdict::bound("lens", "reversal", worst, ctx.tolerances.get("lens")));
    rep.parameters.insert("q".into(), json!(sweep.q));
    finish(ctx, "lens", rep, started)
}

fn csv_text(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "'"))
}

pub fn lenscheck(ctx: &Context, other: &Scenario) -> RunResult<RunManifest> {
    let started = Instant::now();
    let sweep = ctx.scenario.lens.as_ref().ok_or_else(|| RunError::Usage("scenario defines no lens sweep".into()))?;
    let mut rep = Report::new(ctx)?;
    let rows = lens_match_check(
        &ctx.scenario.medium,
        &other.medium,
        &sweep.covectors,
        sweep.q,
        sweep.mode,
        &TraceLimits::default(),
    );
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut csv = String::from("index,travel_time_a,travel_time_b,travel_time_diff,exit_mismatch,error\n");
    let mut worst = 0.0f64;
    let mut errors = 0;
    for r in &rows {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.index,
            opt(r.travel_time_a),
            opt(r.travel_time_b),
            opt(r.travel_time_diff),
            opt(r.exit_mismatch),
            r.error.as_deref().map(csv_text).unwrap_or_default()
        )
        .unwrap();
        worst = worst.max(r.travel_time_diff.map_or(0.0, f64::abs)).max(r.exit_mismatch.unwrap_or(0.0));
        errors += r.error.is_some() as usize;
    }
    rep.outputs.write("lenscheck.csv", &csv)?;
    rep.verdicts.push(Verdict::bound("lenscheck", "lens_match", worst, ctx.tolerances.get("lens")));
    if errors > 0 {
        rep.verdicts.push(Verdict::new("lenscheck", "traced", Status::Fail, format!("{errors} covectors failed")));
    }
    rep.parameters.insert("other_hash".into(), json!(other.hash()));
    finish(ctx, "lenscheck", rep, started)
}

// ---------------------------------------------------------------------------
// Interfaces

fn cmat(m: &CMat3) -> [[[f64; 2]; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| [m[(i, j)].re, m[(i, j)].im]))
}

#[derive(Debug, Clone, Serialize)]
pub struct RtRow {
    pub angle: f64,
    pub wave: usize,
    pub incident_evanescent: bool,
    pub reflected_evanescent: [bool; 2],
    pub transmitted_evanescent: [bool; 2],
    pub modal_r: [[[f64; 2]; 3]; 3],
    pub modal_t: [[[f64; 2]; 3]; 3],
    pub m_r: [[[f64; 2]; 3]; 3],
    pub m_t: [[[f64; 2]; 3]; 3],
    pub flux_residual: Option<f64>,
    pub continuity_residual: Option<f64>,
}

/// Reflection and transmission over the scenario's angle sweep.
pub fn rt_rows(ctx: &Context) -> RunResult<Vec<RtRow>> {
    let sw = ctx.scenario.rt_sweep.as_ref().ok_or_else(|| RunError::Usage("scenario defines no rt_sweep".into()))?;
    if sw.wave > 2 {
        return Err(RunError::Usage(format!("rt_sweep wave {} not in 0..=2", sw.wave)));
    }
    let mode = if sw.wave == 0 { Mode::P } else { Mode::S };
    let c = sw.incident.speed(mode);
    sw.angles
        .par_iter()
        .map(|&angle| {
            let xi_t = Vector3::new(angle.sin() / c, 0.0, 0.0);
            let s = InterfaceSetting::from_params(Vector3::z(), xi_t, Side::Minus, sw.incident, sw.transmitted);
            let rt = rt_matrices(&s)?;
            let inc_ev = rt.incident_evanescent[sw.wave];
            let (flux, cont) = if inc_ev {
                (None, None)
            } else {
                let sol = solve_interface_system(&s, sw.wave)?;
                (Some(energy_flux_residual(&s, sw.wave, &sol)), Some(sol.continuity_residual))
            };
            Ok(RtRow {
                angle,
                wave: sw.wave,
                incident_evanescent: inc_ev,
                reflected_evanescent: rt.reflected_waves.map(|w| w.evanescent),
                transmitted_evanescent: rt.transmitted_waves.map(|w| w.evanescent),
                modal_r: cmat(&rt.modal_r),
                modal_t: cmat(&rt.modal_t),
                m_r: cmat(&rt.m_r),
                m_t: cmat(&rt.m_t),
                flux_residual: flux,
                continuity_residual: cont,
            })
        })
        .collect()
}

pub fn rt_verdicts(suite: &str, rows: &[RtRow], tol: &Tolerances) -> Vec<Verdict> {
    let flux = rows.iter().filter_map(|r| r.flux_residual).fold(0.0, f64::max);
    let cont = rows.iter().filter_map(|r| r.continuity_residual).fold(0.0, f64::max);
    vec![
        Verdict::bound(suite, "energy_flux", flux, tol.get("energy_flux")),
        Verdict::bound(suite, "continuity", cont, tol.get("energy_flux")),
    ]
}

pub fn rt(ctx: &Context) -> RunResult<RunManifest> {
    let started = Instant::now();
    let mut rep = Report::new(ctx)?;
    let rows = rt_rows(ctx)?;
    rep.outputs.write_json("rt.json", &rows)?;
    rep.verdicts = rt_verdicts("rt", &rows, &ctx.tolerances);
    finish(ctx, "rt", rep, started)
}

// ---------------------------------------------------------------------------
// Amplitudes

pub fn amp_bundle(ctx: &Context, name: &str, rep: &mut Report, suite: &str, write: bool) -> RunResult<()> {
    let m = &ctx.scenario.medium;
    let def = &ctx.scenario.bundles[name];
    let tol = &ctx.tolerances;
    let bundle = RayBundle::trace(m, def.spec)?;
    let b0 = transport_b0(m, &bundle, def.b0_init)?;
    if write {
        let mut csv = String::from("t,s,x,y,z,div_n,b0_abs,b0_arg\n");
        for s in &b0.samples {
            writeln!(csv, "{},{},{},{},{},{}", s.t, s.s, vec3(&s.x), s.div_n, s.b0.norm(), s.b0.arg()).unwrap();
        }
        rep.outputs.write(&format!("amp_{name}.csv"), &csv)?;
    }
    if b0.compat_residual.is_empty() {
        rep.verdicts.push(Verdict::skip(suite, format!("{name}:b0_compat"), "half_width < 2"));
    } else {
        rep.verdicts.push(Verdict::bound(suite, format!("{name}:b0_compat"), b0.max_compat_residual(), tol.get("b0_compat")));
    }
    let Some(a_init) = def.a_minus1_init else {
        return Ok(());
    };
    let a = transport_a_minus1(m, &bundle, def.b0_init, a_init)?;
    if write {
        let mut csv = String::from("t,s,a_minus1_re,a_minus1_im,a_minus1_abs,direct_re,direct_im,forcing_re,forcing_im\n");
        for s in &a.samples {
            let (dr, di) = s.a_minus1_direct.map(|d| (d.re.to_string(), d.im.to_string())).unwrap_or_default();
            writeln!(
                csv,
                "{},{},{},{},{},{dr},{di},{},{}",
                s.t,
                s.s,
                s.a_minus1.re,
                s.a_minus1.im,
                s.a_minus1.norm(),
                s.forcing.re,
                s.forcing.im
            )
            .unwrap();
        }
        rep.outputs.write(&format!("amp_{name}_a_minus1.csv"), &csv)?;
    }
    let d = tol.get("a_minus1_defect");
    rep.verdicts.push(Verdict::bound(suite, format!("{name}:a_minus1_ode"), a.max_ode_defect(), d));
    rep.verdicts.push(Verdict::bound(suite, format!("{name}:a_minus1_compat"), a.max_compat_defect(), d));
    rep.verdicts.push(Verdict::bound(suite, format!("{name}:route_agreement"), a.route_difference, tol.get("route_agreement")));
    Ok(())
}

pub fn amp(ctx: &Context, bundle: Option<&str>) -> RunResult<RunManifest> {
    let started = Instant::now();
    let mut rep = Report::new(ctx)?;
    let names: Vec<String> = select(&ctx.scenario.bundles, bundle, "bundles")?.into_iter().map(|(k, _)| k.clone()).collect();
    for name in &names {
        if let Err(e) = amp_bundle(ctx, name, &mut rep, "amp", true) {
            rep.verdicts.push(Verdict::new("amp", format!("{name}:transport"), Status::Fail, e.to_string()));
        }
    }
    rep.parameters.insert("bundle".into(), json!(bundle));
    finish(ctx, "amp", rep, started)
}

pub fn packet(ctx: &Context, name: Option<&str>) -> RunResult<RunManifest> {
    let started = Instant::now();
    let m = &ctx.scenario.medium;
    let mut rep = Report::new(ctx)?;
    for (n, def) in select(&ctx.scenario.packets, name, "packets")? {
        let fields = match propagate_packet(m, &def.spec, &def.samples) {
            Ok(f) => f,
            Err(e) => {
                rep.verdicts.push(Verdict::new("packet", n.as_str(), Status::Fail, e.to_string()));
                continue;
            }
        };
        let mut csv = String::from("time,x,y,z,u_x_re,u_x_im,u_y_re,u_y_im,u_z_re,u_z_im\n");
        for f in &fields {
            for (x, u) in &f.samples {
                writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{}",
                    f.time,
                    vec3(x),
                    u[0].re,
                    u[0].im,
                    u[1].re,
                    u[1].im,
                    u[2].re,
                    u[2].im
                )
                .unwrap();
            }
        }
        rep.outputs.write(&format!("packet_{n}.csv"), &csv)?;
        let centers: Vec<_> = fields
            .iter()
            .map(|f| json!({"time": f.time, "center": f.center, "direction": f.direction, "b0": f.b0, "a_minus1": f.a_minus1}))
            .collect();
        rep.outputs.write_json(&format!("packet_{n}_centers.json"), &centers)?;
        rep.verdicts.push(Verdict::new("packet", n.as_str(), Status::Pass, format!("{} times", fields.len())));
    }
    rep.parameters.insert("packet".into(), json!(name));
    finish(ctx, "packet", rep, started)
}

// ---------------------------------------------------------------------------
// Tomography

fn is_constant(f: &AnalyticField) -> bool {
    matches!(f, AnalyticField::Constant(_))
}

/// Gauge check value for a potential tensor, if the identity applies on `ray`.
pub fn gauge_reference(m: &ElasticMedium, ray: &BrokenRay, a: &TensorField2) -> Option<f64> {
    // the transform is weighted by c_P, so the identity holds along P rays only
    if ray.segments.iter().any(|s| s.mode != Mode::P) {
        return None;
    }
    match a {
        TensorField2::GaugePotential(v) => Some(gauge_boundary_term(ray, v)),
        TensorField2::SymmetricGradient(v) => {
            let homogeneous = ray.segments.iter().all(|s| {
                let r = &m.regions[s.region];
                is_constant(&r.lambda) && is_constant(&r.mu) && is_constant(&r.rho)
            });
            homogeneous.then(|| gauge_boundary_term(ray, v))
        }
        _ => None,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TransformRow {
    pub tensor: String,
    pub launch: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_term: Option<f64>,
}

pub fn transform_rows(ctx: &Context, suite: &str, verdicts: &mut Vec<Verdict>) -> RunResult<Vec<TransformRow>> {
    let m = &ctx.scenario.medium;
    let tensors = select(&ctx.scenario.tensors, None, "tensors")?;
    let launches = select(&ctx.scenario.launches, None, "launches")?;
    let mut rows = Vec::new();
    for (lname, l) in launches {
        let ray = match trace_launch(m, l) {
            Ok(r) => r,
            Err(e) => {
                verdicts.push(Verdict::new(suite, format!("{lname}:trace"), Status::Fail, e.to_string()));
                continue;
            }
        };
        for (tname, a) in &tensors {
            let value = ray_transform_2tensor(m, &ray, a, 1e-10);
            let boundary_term = gauge_reference(m, &ray, a);
            if let Some(b) = boundary_term {
                verdicts.push(Verdict::bound(suite, format!("{tname}@{lname}:gauge"), (value - b).abs(), ctx.tolerances.get("gauge")));
            }
            rows.push(TransformRow {
                tensor: tname.to_string(),
                launch: lname.clone(),
                value,
                boundary_term,
            });
        }
    }
    Ok(rows)
}

pub fn rtransform(ctx: &Context) -> RunResult<RunManifest> {
    let started = Instant::now();
    let mut rep = Report::new(ctx)?;
    let rows = transform_rows(ctx, "rtransform", &mut rep.verdicts)?;
    rep.outputs.write_json("rtransform.json", &rows)?;
    finish(ctx, "rtransform", rep, started)
}

pub fn pde_grid(ctx: &Context, grid_name: &str, rep: &mut Report, suite: &str, write: bool) -> RunResult<()> {
    let sc = &ctx.scenario;
    let rho_tilde = sc.rho_tilde.as_ref().ok_or_else(|| RunError::Usage("scenario defines no rho_tilde".into()))?;
    match pde_residual(&sc.medium, rho_tilde, &sc.grids[grid_name]) {
        Ok(r) => {
            if write {
                let mut csv = String::from("x,y,z,residual,factor,distance_to_d\n");
                for (i, p) in r.points.iter().enumerate() {
                    writeln!(csv, "{},{},{},{},{},{}", p[0], p[1], p[2], r.residual[i], r.factor[i], r.distance_to_d[i]).unwrap();
                }
                rep.outputs.write(&format!("pde_{grid_name}.csv"), &csv)?;
            }
            rep.verdicts.push(Verdict::bound(suite, format!("{grid_name}:pde_residual"), r.sup_norm, ctx.tolerances.get("pde")));
        }
        Err(e) => rep.verdicts.push(Verdict::new(suite, format!("{grid_name}:pde_residual"), Status::Fail, e.to_string())),
    }
    Ok(())
}

pub fn pde(ctx: &Context) -> RunResult<RunManifest> {
    let started = Instant::now();
    let mut rep = Report::new(ctx)?;
    let names: Vec<String> = select(&ctx.scenario.grids, None, "grids")?.into_iter().map(|(k, _)| k.clone()).collect();
    for g in &names {
        pde_grid(ctx, g, &mut rep, "pde", true)?;
    }
    finish(ctx, "pde", rep, started)
}

// ---------------------------------------------------------------------------
// Symbol probes

#[derive(Debug, Clone, Serialize)]
pub struct ProbeOutput {
    pub order: wein::OrderEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbol_law: Option<wein::SymbolLawReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pullback: Option<wein::PullbackReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fio: Option<wein::FioReport>,
}

pub fn run_probe(ctx: &Context, name: &str, def: &ProbeDef, suite: &str, verdicts: &mut Vec<Verdict>) -> RunResult<ProbeOutput> {
    let grid = &ctx.scenario.packet_grids[&def.grid];
    let ladder = def.ladder();
    let tol = &ctx.tolerances;
    let g = &def.distribution;
    let p = &def.packet;
    let order = wein::estimate_order(g, p, &ladder, grid)?;
    match def.expected_order {
        Some(e) => verdicts.push(Verdict::bound(suite, format!("{name}:order"), (order.order - e).abs(), tol.get("order"))),
        None => verdicts.push(Verdict::new(suite, format!("{name}:order"), Status::Pass, format!("order {:.4}", order.order))),
    }
    let symbol_law = match &def.operator {
        Some(op) => {
            let r = wein::verify_psido_symbol_law(g, p, op, &ladder, grid)?;
            let bound = tol.get("symbol_slope");
            let slope = r.slope.unwrap_or(f64::NEG_INFINITY);
            let ok = r.exact || slope <= bound;
            let detail = if r.exact { "exact".to_string() } else { format!("slope {slope:.3} (bound {bound})") };
            verdicts.push(Verdict {
                value: r.slope,
                tolerance: Some(bound),
                ..Verdict::new(suite, format!("{name}:symbol_law"), if ok { Status::Pass } else { Status::Fail }, detail)
            });
            Some(r)
        }
        None => None,
    };
    let pullback = match &def.pullback {
        Some(theta) => {
            let r = wein::verify_pullback_law(g, theta, p.dim, p.x0, p.xi0, &p.envelope, &ladder, grid)?;
            let detail = match r.difference_slope {
                Some(s) => format!("difference slope {s:.3} vs leading {:.3}", r.leading_order),
                None => "exact".into(),
            };
            verdicts.push(Verdict::new(suite, format!("{name}:pullback"), if r.passed { Status::Pass } else { Status::Fail }, detail));
            Some(r)
        }
        None => None,
    };
    let fio = match &def.fio {
        Some(a) => {
            let r = wein::verify_fio_symbol_extraction(g, a, p.x0, p.xi0, &p.envelope, &ladder, grid, tol.get("fio_phase"))?;
            verdicts.push(Verdict::new(
                suite,
                format!("{name}:fio_converged"),
                if r.converged { Status::Pass } else { Status::Fail },
                format!("J = {:.6}", r.j_lambda),
            ));
            let worst = r.phase_errors.iter().copied().fold(0.0, f64::max);
            verdicts.push(Verdict::bound(suite, format!("{name}:fio_phase"), worst, tol.get("fio_phase")));
            Some(r)
        }
        None => None,
    };
    Ok(ProbeOutput {
        order,
        symbol_law,
        pullback,
        fio,
    })
}

pub fn probe(ctx: &Context, name: Option<&str>) -> RunResult<RunManifest> {
    let started = Instant::now();
    let mut rep = Report::new(ctx)?;
    for (n, def) in select(&ctx.scenario.probes, name, "probes")? {
        match run_probe(ctx, n, def, "probe", &mut rep.verdicts) {
            Ok(out) => rep.outputs.write_json(&format!("probe_{n}.json"), &out)?,
            Err(e) => rep.verdicts.push(Verdict::new("probe", n.as_str(), Status::Fail, e.to_string())),
        }
    }
    rep.parameters.insert("probe".into(), json!(name));
    finish(ctx, "probe", rep, started)
}
