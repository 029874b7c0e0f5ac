//! The `verify` subcommand: module invariant suites over one scenario.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::time::Instant;

use elastoray_core::tomography::ellipticity_map;
use serde_json::json;

use crate::acceptance;
use crate::commands::{self, Context, Report, RunError, RunResult};
use crate::manifest::{RunManifest, Status, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Suite {
    Medium,
    Raytrace,
    Interface,
    Amplitude,
    Tomography,
    Weinstein,
    Acceptance,
}

impl Suite {
    /// Suites covered by the `all` selector; acceptance is scenario independent
    /// and must be asked for by name.
    pub const MODULES: [Suite; 6] =
        [Suite::Medium, Suite::Raytrace, Suite::Interface, Suite::Amplitude, Suite::Tomography, Suite::Weinstein];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Medium => "medium",
            Suite::Raytrace => "raytrace",
            Suite::Interface => "interface",
            Suite::Amplitude => "amplitude",
            Suite::Tomography => "tomography",
            Suite::Weinstein => "weinstein",
            Suite::Acceptance => "acceptance",
        }
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Suite::MODULES
            .into_iter()
            .chain([Suite::Acceptance])
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite {s:?}"))
    }
}

/// Parses `all` or a comma-separated list of suite names.
pub fn parse_selector(s: &str) -> Result<Vec<Suite>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        if part == "all" {
            out.extend(Suite::MODULES);
        } else {
            out.push(part.parse()?);
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn medium_suite(ctx: &Context, rep: &mut Report) {
    let sc = &ctx.scenario;
    let violations = sc.medium.validate(4096, ctx.seed);
    if violations.is_empty() {
        rep.verdicts.push(Verdict::new("medium", "invariants", Status::Pass, "4096 samples"));
    }
    for v in violations {
        let at = v.point.map(|p| format!(" at sample x = {p:?}")).unwrap_or_default();
        rep.verdicts.push(Verdict::new("medium", "invariants", Status::Fail, format!("{}{at}", v.message)));
    }
    match (&sc.medium.foliation, &sc.lens) {
        (Some(_), Some(l)) => match sc.medium.foliation_convexity_probe(l.q, 64, ctx.seed) {
            Ok(r) => rep.verdicts.push(Verdict::new(
                "medium",
                "leaf_convexity",
                if r.convex { Status::Pass } else { Status::Fail },
                format!("max drift {:.2e} on leaf {}", r.max_drift, l.q),
            )),
            Err(e) => rep.verdicts.push(Verdict::new("medium", "leaf_convexity", Status::Fail, e.to_string())),
        },
        _ => rep.verdicts.push(Verdict::skip("medium", "leaf_convexity", "no foliation with a lens leaf")),
    }
}

fn raytrace_suite(ctx: &Context, rep: &mut Report) {
    let m = &ctx.scenario.medium;
    if ctx.scenario.launches.is_empty() {
        rep.verdicts.push(Verdict::skip("raytrace", "launches", "scenario defines no launches"));
    }
    for (name, l) in &ctx.scenario.launches {
        match commands::trace_launch(m, l) {
            Ok(ray) => rep.verdicts.extend(commands::ray_verdicts("raytrace", name, m, &ray, &ctx.tolerances)),
            Err(e) => rep.verdicts.push(Verdict::new("raytrace", format!("{name}:trace"), Status::Fail, e.to_string())),
        }
    }
}

fn interface_suite(ctx: &Context, rep: &mut Report) {
    if ctx.scenario.rt_sweep.is_none() {
        rep.verdicts.push(Verdict::skip("interface", "rt_sweep", "scenario defines no rt_sweep"));
        return;
    }
    match commands::rt_rows(ctx) {
        Ok(rows) => rep.verdicts.extend(commands::rt_verdicts("interface", &rows, &ctx.tolerances)),
        Err(e) => rep.verdicts.push(Verdict::new("interface", "rt_sweep", Status::Fail, e.to_string())),
    }
}

fn amplitude_suite(ctx: &Context, rep: &mut Report) {
    if ctx.scenario.bundles.is_empty() {
        rep.verdicts.push(Verdict::skip("amplitude", "bundles", "scenario defines no bundles"));
    }
    for name in ctx.scenario.bundles.keys() {
        if let Err(e) = commands::amp_bundle(ctx, name, rep, "amplitude", false) {
            rep.verdicts.push(Verdict::new("amplitude", format!("{name}:transport"), Status::Fail, e.to_string()));
        }
    }
}

fn tomography_suite(ctx: &Context, rep: &mut Report) -> RunResult<()> {
    let sc = &ctx.scenario;
    if sc.tensors.is_empty() || sc.launches.is_empty() {
        rep.verdicts.push(Verdict::skip("tomography", "gauge", "needs tensors and launches"));
    } else {
        commands::transform_rows(ctx, "tomography", &mut rep.verdicts)?;
    }
    if sc.grids.is_empty() {
        rep.verdicts.push(Verdict::skip("tomography", "density", "scenario defines no grids"));
        return Ok(());
    }
    for (name, grid) in &sc.grids {
        match ellipticity_map(&sc.medium, grid) {
            Ok(map) => rep.verdicts.push(Verdict::new(
                "tomography",
                format!("{name}:denominator"),
                Status::Pass,
                format!("positive at {} points", map.len()),
            )),
            Err(e) => rep.verdicts.push(Verdict::new("tomography", format!("{name}:denominator"), Status::Fail, e.to_string())),
        }
        if sc.rho_tilde.is_some() {
            commands::pde_grid(ctx, name, rep, "tomography", false)?;
        } else {
            rep.verdicts.push(Verdict::skip("tomography", format!("{name}:pde_residual"), "scenario defines no rho_tilde"));
        }
    }
    Ok(())
}

fn weinstein_suite(ctx: &Context, rep: &mut Report) {
    let sc = &ctx.scenario;
    if sc.packet_grids.is_empty() {
        if sc.probes.is_empty() {
            rep.verdicts.push(Verdict::skip("weinstein", "probes", "scenario defines no packet grids"));
        }
        for name in sc.probes.keys() {
            rep.verdicts.push(Verdict::skip("weinstein", name.as_str(), "scenario defines no packet grids"));
        }
        return;
    }
    if sc.probes.is_empty() {
        rep.verdicts.push(Verdict::skip("weinstein", "probes", "scenario defines no probes"));
    }
    for (name, def) in &sc.probes {
        if let Err(e) = commands::run_probe(ctx, name, def, "weinstein", &mut rep.verdicts) {
            rep.verdicts.push(Verdict::new("weinstein", name.as_str(), Status::Fail, e.to_string()));
        }
    }
}

fn acceptance_suite(ctx: &Context, rep: &mut Report, timings: &mut BTreeMap<String, f64>) {
    for r in acceptance::run_all(ctx.seed) {
        timings.insert(r.id.to_string(), r.seconds);
        let status = if r.passed { Status::Pass } else { Status::Fail };
        rep.verdicts.push(Verdict::new("acceptance", r.id, status, format!("{}: {}", r.title, r.detail)));
    }
}

fn run_suite(ctx: &Context, suite: Suite, rep: &mut Report, timings: &mut BTreeMap<String, f64>) -> RunResult<()> {
    match suite {
        Suite::Medium => medium_suite(ctx, rep),
        Suite::Raytrace => raytrace_suite(ctx, rep),
        Suite::Interface => interface_suite(ctx, rep),
        Suite::Amplitude => amplitude_suite(ctx, rep),
        Suite::Tomography => tomography_suite(ctx, rep)?,
        Suite::Weinstein => weinstein_suite(ctx, rep),
        Suite::Acceptance => acceptance_suite(ctx, rep, timings),
    }
    Ok(())
}

/// Runs the selected suites. Rows of a suite are reused from the previous
/// verify manifest when scenario hash, seed and tolerances all match, unless
/// `fresh` is set.
pub fn run_verify(ctx: &Context, suites: &[Suite], fresh: bool) -> RunResult<RunManifest> {
    let started = Instant::now();
    let tolerances = json!(ctx.tolerances.as_map());
    let previous = RunManifest::read(&ctx.out_dir.join(RunManifest::file_name("verify"))).filter(|m| {
        !fresh && m.scenario_hash == ctx.scenario.hash() && m.seed == ctx.seed && m.parameters.get("tolerances") == Some(&tolerances)
    });
    let mut rep = Report::new(ctx)?;
    let mut timings = BTreeMap::new();
    let mut reused = 0;
    for &suite in suites {
        let cached: Vec<Verdict> = previous
            .iter()
            .flat_map(|m| m.verdicts.iter().filter(|v| v.suite == suite.name()).cloned())
            .collect();
        if !cached.is_empty() {
            rep.verdicts.extend(cached);
            reused += 1;
        } else {
            run_suite(ctx, suite, &mut rep, &mut timings)?;
        }
    }
    rep.outputs.write_json("verify.json", &rep.verdicts)?;
    rep.parameters.insert("suites".into(), json!(suites.iter().map(|s| s.name()).collect::<Vec<_>>()));
    if !timings.is_empty() {
        rep.parameters.insert("acceptance_seconds".into(), json!(timings));
    }
    let all_cached = reused == suites.len() && !suites.is_empty();
    let mut m = commands::finish(ctx, "verify", rep, started)?;
    if all_cached {
        m.cached = true;
        m.write(&ctx.out_dir)?;
    }
    Ok(m)
}

impl From<String> for RunError {
    fn from(s: String) -> Self {
        RunError::Usage(s)
    }
}
