//! Bicharacteristic tracing for the P and S Hamiltonians, with reflection
//! and refraction at interfaces.
//!
//! Rays are parametrized by Euclidean arclength `s`:
//! `dt/ds = 1/c`, `dx/ds = ±ξ/|ξ|`, `dξ/ds = ∓|ξ| ∇log c`, `dτ/ds = 0`,
//! with the upper sign for [`Direction::Forward`]. The frequency variable is
//! normalized to `τ = 1`, so `|ξ|` is the slowness `1/c`.

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{arr, Error, Result};
use crate::medium::{ElasticMedium, Mode, Side, SideHint};
use crate::ode::{self, Control, DenseStep, Tolerances};

/// Incidence cosines below this are treated as glancing.
pub const GLANCING_COS: f64 = 1e-3;
/// Relative radicand below which an outgoing branch is evanescent.
pub const EVANESCENT_TOL: f64 = 1e-12;
/// Relative tolerance of the characteristic condition `τ = c|ξ|`.
pub const CHARACTERISTIC_TOL: f64 = 1e-8;
/// Localization tolerance for events, in arclength.
pub const EVENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

/// A point of the cotangent bundle carrying its branch labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub t: f64,
    pub x: Vector3<f64>,
    pub xi: Vector3<f64>,
    pub tau: f64,
    pub mode: Mode,
    pub direction: Direction,
}

impl PhasePoint {
    /// Launch state with `|ξ| = 1/c(x)` along `dir`.
    pub fn launch(medium: &ElasticMedium, x: Vector3<f64>, dir: Vector3<f64>, mode: Mode, hint: Option<SideHint>) -> Result<Self> {
        let c = medium.eval_params(&x, hint)?.speed(mode);
        Ok(PhasePoint { t: 0.0, x, xi: dir.normalize() / c, tau: 1.0, mode, direction: Direction::Forward })
    }

    /// Relative violation of `τ = c|ξ|`.
    pub fn characteristic_drift(&self, c: f64) -> f64 {
        (c * self.xi.norm() - self.tau).abs() / self.tau
    }

    /// Geometric velocity `dx/dt`.
    pub fn velocity(&self, c: f64) -> Vector3<f64> {
        self.xi.normalize() * (c * self.direction.sign())
    }

    fn to_state(self) -> [f64; 7] {
        [self.t, self.x.x, self.x.y, self.x.z, self.xi.x, self.xi.y, self.xi.z]
    }

    fn from_state(y: &[f64; 7], like: &PhasePoint) -> Self {
        PhasePoint {
            t: y[0],
            x: Vector3::new(y[1], y[2], y[3]),
            xi: Vector3::new(y[4], y[5], y[6]),
            ..*like
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaySample {
    pub s: f64,
    pub point: PhasePoint,
}

/// Why a segment ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    InterfaceHit { interface: usize },
    DomainExit,
    MaxArclength,
    /// A caller-supplied stop function changed sign.
    Stopped,
}

/// A ray piece inside one smooth region.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RaySegment {
    pub region: usize,
    pub mode: Mode,
    pub direction: Direction,
    pub samples: Vec<RaySample>,
    pub termination: Termination,
    #[serde(skip)]
    steps: Vec<DenseStep<7>>,
}

impl RaySegment {
    pub fn start(&self) -> &RaySample {
        &self.samples[0]
    }

    pub fn end(&self) -> &RaySample {
        self.samples.last().expect("segment has samples")
    }

    /// Continuous state at arclength `s` (clamped to the segment).
    pub fn state_at(&self, s: f64) -> PhasePoint {
        let like = self.start().point;
        if self.steps.is_empty() {
            return like;
        }
        let i = self.steps.partition_point(|st| st.s1() < s).min(self.steps.len() - 1);
        PhasePoint::from_state(&self.steps[i].eval(s), &like)
    }

    /// Arclength range covered.
    pub fn s_range(&self) -> (f64, f64) {
        (self.start().s, self.end().s)
    }

    /// Step boundaries, useful as quadrature breakpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.steps.iter().map(|s| s.s0).collect();
        v.push(self.end().s);
        v
    }
}

/// Optional extras for [`integrate_segment`].
#[derive(Default)]
pub struct SegmentOptions<'a> {
    pub tolerances: Tolerances,
    /// Stop when this function, once positive, becomes non-positive.
    pub stop: Option<&'a dyn Fn(&Vector3<f64>) -> f64>,
    /// Arclength at the start of the segment.
    pub s0: f64,
}

/// Integrates one segment until an interface, the domain boundary, the stop
/// function or `max_s` is reached.
pub fn integrate_segment(
    medium: &ElasticMedium,
    start: &PhasePoint,
    hint: Option<SideHint>,
    max_s: f64,
    opts: &SegmentOptions,
) -> Result<RaySegment> {
    let sides = medium.sides_at(&start.x, hint)?;
    segment_with_sides(medium, start, &sides, max_s, opts)
}

fn segment_with_sides(
    medium: &ElasticMedium,
    start: &PhasePoint,
    sides: &[Side],
    max_s: f64,
    opts: &SegmentOptions,
) -> Result<RaySegment> {
    let region_id = medium.region_for_sides(sides).ok_or(Error::OutsideAllRegions(arr(&start.x)))?;
    let region = &medium.regions[region_id];
    let mode = start.mode;
    let params = region.params(&start.x);
    params.check(&start.x)?;
    let drift = start.characteristic_drift(params.speed(mode));
    if drift > CHARACTERISTIC_TOL {
        return Err(Error::CharacteristicViolation { drift });
    }
    let sigma = start.direction.sign();
    let rhs = move |_s: f64, y: &[f64; 7]| -> [f64; 7] {
        let x = Vector3::new(y[1], y[2], y[3]);
        let xi = Vector3::new(y[4], y[5], y[6]);
        let jets = region.jets(&x);
        let c = jets.params().speed(mode);
        let g = jets.grad_log_speed(mode);
        let n = xi.norm();
        let dx = xi * (sigma / n);
        let dxi = -g * (sigma * n);
        [1.0 / c, dx.x, dx.y, dx.z, dxi.x, dxi.y, dxi.z]
    };

    // event functions, positive while the ray is admissible
    let iface_fn = |k: usize, x: &Vector3<f64>| medium.interfaces[k].implicit(x) * sides[k].sign();
    let bounds_fn = |x: &Vector3<f64>| medium.bounds.map_or(1.0, |b| b.margin(x));
    let mut stop_armed = opts.stop.map_or(false, |f| f(&start.x) > 0.0);

    let mut samples = vec![RaySample { s: opts.s0, point: *start }];
    let mut steps: Vec<DenseStep<7>> = Vec::new();
    let mut termination = Termination::MaxArclength;
    let mut failure: Option<Error> = None;

    let result = ode::integrate(&rhs, opts.s0, start.to_state(), max_s, &opts.tolerances, &mut |step| {
        let x_at = |th: f64| {
            let y = step.eval(step.s0 + th * step.h);
            Vector3::new(y[1], y[2], y[3])
        };
        // earliest event among interfaces, bounds and the stop function
        let mut best: Option<(f64, Termination)> = None;
        let probes = [0.25, 0.5, 0.75, 1.0];
        let mut consider = |g: &dyn Fn(&Vector3<f64>) -> f64, kind: Termination, armed: bool| {
            let mut lo = 0.0;
            for &th in &probes {
                if g(&x_at(th)) <= 0.0 && armed {
                    let ev = |d: f64| {
                        let (y1, _, _) = ode::rk_step(&rhs, step.s0, &step.y0, d);
                        g(&Vector3::new(y1[1], y1[2], y1[3]))
                    };
                    let d = crate::medium::bisect(&ev, lo * step.h, th * step.h, EVENT_TOL);
                    if best.map_or(true, |(b, _)| d < b) {
                        best = Some((d, kind));
                    }
                    return;
                }
                lo = th;
            }
        };
        for k in 0..medium.interfaces.len() {
            consider(&|x| iface_fn(k, x), Termination::InterfaceHit { interface: k }, true);
        }
        consider(&bounds_fn, Termination::DomainExit, true);
        if let Some(stop) = opts.stop {
            if !stop_armed {
                // arm once the stop function is positive somewhere in this step
                if probes.iter().any(|&th| stop(&x_at(th)) > 0.0) {
                    stop_armed = true;
                    let mut first_pos = 1.0;
                    for &th in &probes {
                        if stop(&x_at(th)) > 0.0 {
                            first_pos = th;
                            break;
                        }
                    }
                    // only events after the arming point count
                    let tail = probes.iter().filter(|&&th| th > first_pos).any(|&th| stop(&x_at(th)) <= 0.0);
                    if tail {
                        let ev = |d: f64| {
                            let (y1, _, _) = ode::rk_step(&rhs, step.s0, &step.y0, d);
                            stop(&Vector3::new(y1[1], y1[2], y1[3]))
                        };
                        let mut lo = first_pos;
                        for &th in probes.iter().filter(|&&th| th > first_pos) {
                            if stop(&x_at(th)) <= 0.0 {
                                let d = crate::medium::bisect(&ev, lo * step.h, th * step.h, EVENT_TOL);
                                if best.map_or(true, |(b, _)| d < b) {
                                    best = Some((d, Termination::Stopped));
                                }
                                break;
                            }
                            lo = th;
                        }
                    }
                }
            } else {
                consider(stop, Termination::Stopped, true);
            }
        }

        let (step, stop_here) = match best {
            Some((d, kind)) => {
                let (y1, _, k) = ode::rk_step(&rhs, step.s0, &step.y0, d);
                termination = kind;
                (ode::dense(step.s0, d, &step.y0, &y1, &k), true)
            }
            None => (step.clone(), false),
        };
        let point = PhasePoint::from_state(&step.y1, start);
        if let Some(reason) = region.params(&point.x).violation() {
            failure = Some(Error::NonPhysical { point: arr(&point.x), reason });
            return Control::Stop;
        }
        samples.push(RaySample { s: step.s1(), point });
        steps.push(step);
        if stop_here {
            Control::Stop
        } else {
            Control::Continue
        }
    });
    if let Err((s, h)) = result {
        return Err(Error::StepFailure { s, h });
    }
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(RaySegment { region: region_id, mode, direction: start.direction, samples, termination, steps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BranchKind {
    R,
    T,
}

/// One outgoing branch choice at an interface event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BranchChoice {
    pub kind: BranchKind,
    pub mode: Mode,
}

impl std::fmt::Display for BranchChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({:?},{:?})", self.kind, self.mode)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchPolicy {
    /// Transmit at every interface, keeping the mode.
    PurelyTransmitted,
    /// Follow the listed branches, one per event, then stop at the next hit.
    Sequence(Vec<BranchChoice>),
}

/// An outgoing branch produced by Snell's law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub choice: BranchChoice,
    pub side: Side,
    pub region: usize,
    pub speed: f64,
    /// Normal component of the outgoing covector; imaginary when evanescent,
    /// with the sign that decays into the outgoing side.
    pub normal_slowness: Complex64,
    pub evanescent: bool,
    /// Outgoing phase point; for evanescent branches only the tangential part is meaningful.
    pub point: PhasePoint,
}

/// Data recorded at one interface event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayEvent {
    pub interface: usize,
    pub s: f64,
    pub x: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub choice: BranchChoice,
    pub mode_in: Mode,
    pub side_in: Side,
    pub side_out: Side,
    pub xi_in: Vector3<f64>,
    pub xi_out: Vector3<f64>,
}

/// Sequence of segments joined at interface events.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BrokenRay {
    pub segments: Vec<RaySegment>,
    pub events: Vec<RayEvent>,
}

impl BrokenRay {
    pub fn end(&self) -> &RaySample {
        self.segments.last().expect("ray has segments").end()
    }

    pub fn termination(&self) -> Termination {
        self.segments.last().expect("ray has segments").termination
    }

    pub fn choices(&self) -> Vec<BranchChoice> {
        self.events.iter().map(|e| e.choice).collect()
    }
}

/// Outgoing branches at an interface hit, in the order
/// `(R,P), (R,S), (T,P), (T,S)`; branches with no medium on their side are omitted.
pub fn snell_branches(
    medium: &ElasticMedium,
    incident: &PhasePoint,
    interface: usize,
    side_in: Side,
) -> Result<Vec<Branch>> {
    let iface = &medium.interfaces[interface];
    let x = incident.x;
    let nu = iface.normal(&x)?;
    let c_in = medium.eval_params(&x, Some(SideHint { interface, side: side_in }))?.speed(incident.mode);
    let drift = incident.characteristic_drift(c_in);
    if drift > CHARACTERISTIC_TOL {
        return Err(Error::CharacteristicViolation { drift });
    }
    let xi = incident.xi;
    let xn = xi.dot(&nu);
    let cosine = xn.abs() / xi.norm();
    if cosine < GLANCING_COS {
        return Err(Error::GlancingRay { interface, cosine });
    }
    let xt = xi - nu * xn;
    let sgn = xn.signum();
    let mut out = Vec::new();
    for kind in [BranchKind::R, BranchKind::T] {
        let side = if kind == BranchKind::T { side_in.opposite() } else { side_in };
        let hint = SideHint { interface, side };
        let Ok(region) = medium.region_at(&x, Some(hint)) else { continue };
        let params = medium.regions[region].params(&x);
        params.check(&x)?;
        for mode in [Mode::P, Mode::S] {
            let c = params.speed(mode);
            let rad = 1.0 / (c * c) - xt.norm_squared();
            let evanescent = rad * c * c <= EVANESCENT_TOL;
            let dir = if kind == BranchKind::T { sgn } else { -sgn };
            let (q, real_q) = if evanescent {
                (Complex64::new(0.0, side.sign() * (-rad).max(0.0).sqrt()), 0.0)
            } else {
                (Complex64::new(dir * rad.sqrt(), 0.0), dir * rad.sqrt())
            };
            out.push(Branch {
                choice: BranchChoice { kind, mode },
                side,
                region,
                speed: c,
                normal_slowness: q,
                evanescent,
                point: PhasePoint { xi: xt + nu * real_q, mode, ..*incident },
            });
        }
    }
    Ok(out)
}

/// Tracing limits shared by the broken-ray routines.
#[derive(Debug, Clone, Copy)]
pub struct TraceLimits {
    pub max_events: usize,
    pub max_s: f64,
    pub tolerances: Tolerances,
}

impl Default for TraceLimits {
    fn default() -> Self {
        TraceLimits { max_events: 16, max_s: 100.0, tolerances: Tolerances::default() }
    }
}

/// Traces a broken ray following `policy`.
pub fn trace_broken_ray(
    medium: &ElasticMedium,
    start: &PhasePoint,
    hint: Option<SideHint>,
    policy: &BranchPolicy,
    limits: &TraceLimits,
) -> Result<BrokenRay> {
    trace_with_stop(medium, start, hint, policy, limits, None)
}

fn trace_with_stop(
    medium: &ElasticMedium,
    start: &PhasePoint,
    hint: Option<SideHint>,
    policy: &BranchPolicy,
    limits: &TraceLimits,
    stop: Option<&dyn Fn(&Vector3<f64>) -> f64>,
) -> Result<BrokenRay> {
    let mut sides = medium.sides_at(&start.x, hint)?;
    let mut ray = BrokenRay { segments: Vec::new(), events: Vec::new() };
    let mut point = *start;
    let mut s0 = 0.0;
    loop {
        let opts = SegmentOptions { tolerances: limits.tolerances, stop, s0 };
        let seg = segment_with_sides(medium, &point, &sides, limits.max_s, &opts)?;
        let end = *seg.end();
        let term = seg.termination;
        ray.segments.push(seg);
        let Termination::InterfaceHit { interface } = term else { return Ok(ray) };
        if ray.events.len() >= limits.max_events {
            return Ok(ray);
        }
        let choice = match policy {
            BranchPolicy::PurelyTransmitted => BranchChoice { kind: BranchKind::T, mode: point.mode },
            BranchPolicy::Sequence(seq) => match seq.get(ray.events.len()) {
                Some(c) => *c,
                None => return Ok(ray),
            },
        };
        let side_in = sides[interface];
        let branches = snell_branches(medium, &end.point, interface, side_in)?;
        let event_no = ray.events.len();
        let b = branches.iter().find(|b| b.choice == choice).ok_or_else(|| Error::PolicyExhausted {
            event: event_no,
            reason: format!("branch {choice} has no medium"),
        })?;
        if b.evanescent {
            return Err(Error::PolicyExhausted { event: event_no, reason: format!("branch {choice} is evanescent") });
        }
        ray.events.push(RayEvent {
            interface,
            s: end.s,
            x: end.point.x,
            normal: medium.interfaces[interface].normal(&end.point.x)?,
            choice,
            mode_in: end.point.mode,
            side_in,
            side_out: b.side,
            xi_in: end.point.xi,
            xi_out: b.point.xi,
        });
        sides[interface] = b.side;
        point = b.point;
        s0 = end.s;
    }
}

/// Reason a branch sequence was dropped from a branch tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pruned {
    pub sequence: Vec<BranchChoice>,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeEntry {
    pub sequence: Vec<BranchChoice>,
    pub ray: BrokenRay,
}

/// All geometric branch sequences up to a depth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchTree {
    pub entries: Vec<TreeEntry>,
    pub pruned: Vec<Pruned>,
}

/// Enumerates all non-evanescent, non-glancing branch sequences with at most
/// `depth` interface events.
pub fn enumerate_branch_tree(
    medium: &ElasticMedium,
    start: &PhasePoint,
    hint: Option<SideHint>,
    depth: usize,
    limits: &TraceLimits,
) -> Result<BranchTree> {
    let sides = medium.sides_at(&start.x, hint)?;
    let mut tree = BranchTree { entries: Vec::new(), pruned: Vec::new() };
    let root = BrokenRay { segments: Vec::new(), events: Vec::new() };
    grow(medium, *start, sides, 0.0, root, depth, limits, &mut tree)?;
    Ok(tree)
}

#[allow(clippy::too_many_arguments)]
fn grow(
    medium: &ElasticMedium,
    point: PhasePoint,
    sides: Vec<Side>,
    s0: f64,
    mut ray: BrokenRay,
    depth: usize,
    limits: &TraceLimits,
    tree: &mut BranchTree,
) -> Result<()> {
    let opts = SegmentOptions { tolerances: limits.tolerances, stop: None, s0 };
    let seg = segment_with_sides(medium, &point, &sides, limits.max_s, &opts)?;
    let end = *seg.end();
    let term = seg.termination;
    ray.segments.push(seg);
    let Termination::InterfaceHit { interface } = term else {
        let sequence = ray.choices();
        tree.entries.push(TreeEntry { sequence, ray });
        return Ok(());
    };
    if ray.events.len() >= depth {
        let sequence = ray.choices();
        tree.entries.push(TreeEntry { sequence, ray });
        return Ok(());
    }
    let side_in = sides[interface];
    let prefix = ray.choices();
    let with = |c: BranchChoice| {
        let mut v = prefix.clone();
        v.push(c);
        v
    };
    let branches = match snell_branches(medium, &end.point, interface, side_in) {
        Ok(b) => b,
        Err(Error::GlancingRay { cosine, .. }) => {
            for kind in [BranchKind::R, BranchKind::T] {
                for mode in [Mode::P, Mode::S] {
                    tree.pruned.push(Pruned {
                        sequence: with(BranchChoice { kind, mode }),
                        reason: format!("glancing (|cos| = {cosine:.2e})"),
                    });
                }
            }
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    for kind in [BranchKind::R, BranchKind::T] {
        for mode in [Mode::P, Mode::S] {
            let choice = BranchChoice { kind, mode };
            let Some(b) = branches.iter().find(|b| b.choice == choice) else {
                tree.pruned.push(Pruned { sequence: with(choice), reason: "no medium on outgoing side".into() });
                continue;
            };
            if b.evanescent {
                tree.pruned.push(Pruned { sequence: with(choice), reason: "evanescent".into() });
                continue;
            }
            let mut next = ray.clone();
            next.events.push(RayEvent {
                interface,
                s: end.s,
                x: end.point.x,
                normal: medium.interfaces[interface].normal(&end.point.x)?,
                choice,
                mode_in: end.point.mode,
                side_in,
                side_out: b.side,
                xi_in: end.point.xi,
                xi_out: b.point.xi,
            });
            let mut next_sides = sides.clone();
            next_sides[interface] = b.side;
            grow(medium, b.point, next_sides, end.s, next, depth, limits, tree)?;
        }
    }
    Ok(())
}

/// Travel time and exit covector of a purely transmitted ray leaving the
/// leaf `kappa = q` inward and returning to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LensResult {
    pub travel_time: f64,
    pub exit_x: Vector3<f64>,
    pub exit_xi: Vector3<f64>,
    /// Unit-speed velocity at exit in the metric `c^{-2} dx^2`.
    pub exit_velocity: Vector3<f64>,
    pub ray_arclength: f64,
}

/// Traces from a boundary covector on `kappa = q` until the ray returns.
/// `xi` only supplies a direction; it is rescaled to satisfy `c|ξ| = 1`.
pub fn travel_time_and_lens(
    medium: &ElasticMedium,
    x: &Vector3<f64>,
    xi: &Vector3<f64>,
    mode: Mode,
    q: f64,
    limits: &TraceLimits,
) -> Result<LensResult> {
    let kappa = medium.foliation.as_ref().ok_or(Error::NoFoliation)?;
    if xi.dot(&kappa.gradient(x)) <= 0.0 {
        return Err(Error::InvalidInput("covector is not inward-pointing".into()));
    }
    let hint = interface_hint_at(medium, x, xi);
    let start = PhasePoint::launch(medium, *x, *xi, mode, hint)?;
    let stop = |p: &Vector3<f64>| kappa.value(p) - q;
    let ray = trace_with_stop(medium, &start, hint, &BranchPolicy::PurelyTransmitted, limits, Some(&stop))?;
    let end = ray.end();
    if ray.termination() != Termination::Stopped {
        return Err(Error::NoReturn { reason: format!("{:?} at s = {}", ray.termination(), end.s) });
    }
    let seg = ray.segments.last().expect("ray has segments");
    let c = medium.regions[seg.region].speed(&end.point.x, mode);
    Ok(LensResult {
        travel_time: end.point.t - start.t,
        exit_x: end.point.x,
        exit_xi: end.point.xi,
        exit_velocity: end.point.velocity(c),
        ray_arclength: end.s,
    })
}

// side hint for a point lying on an interface: the side the ray enters
fn interface_hint_at(medium: &ElasticMedium, x: &Vector3<f64>, dir: &Vector3<f64>) -> Option<SideHint> {
    medium.interfaces.iter().enumerate().find(|(_, i)| i.contains(x)).and_then(|(k, iface)| {
        let n = iface.normal(x).ok()?;
        let side = if dir.dot(&n) > 0.0 { Side::Plus } else { Side::Minus };
        Some(SideHint { interface: k, side })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::AnalyticField;
    use crate::medium::{Interface, Region};

    fn two_layer(cp_ratio: f64) -> ElasticMedium {
        // lower: λ = μ = ρ = 1, upper: speeds scaled by cp_ratio
        let r2 = cp_ratio * cp_ratio;
        ElasticMedium {
            interfaces: vec![Interface::plane(Vector3::zeros(), Vector3::z())],
            regions: vec![
                Region::homogeneous(1.0, 1.0, 1.0).with_sides(vec![(0, Side::Minus)]),
                Region::homogeneous(r2, r2, 1.0).with_sides(vec![(0, Side::Plus)]),
            ],
            foliation: None,
            bounds: Some(crate::medium::Bounds::cube(5.0)),
        }
    }

    #[test]
    fn straight_line_in_homogeneous_medium() {
        let m = ElasticMedium::homogeneous(1.0, 1.0, 1.0);
        let p = PhasePoint::launch(&m, Vector3::zeros(), Vector3::new(1.0, 2.0, 2.0), Mode::P, None).unwrap();
        let seg = integrate_segment(&m, &p, None, 3.0, &SegmentOptions::default()).unwrap();
        let end = seg.end();
        assert_eq!(seg.termination, Termination::MaxArclength);
        assert!((end.point.x - Vector3::new(1.0, 2.0, 2.0)).norm() < 1e-12);
        assert!((end.point.t - 3.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn snell_on_flat_interface() {
        let m = two_layer(1.5);
        let theta: f64 = 0.3;
        let x0 = Vector3::new(0.0, 0.0, -1.0);
        let dir = Vector3::new(theta.sin(), 0.0, theta.cos());
        let p = PhasePoint::launch(&m, x0, dir, Mode::P, None).unwrap();
        let seg = integrate_segment(&m, &p, None, 10.0, &SegmentOptions::default()).unwrap();
        assert_eq!(seg.termination, Termination::InterfaceHit { interface: 0 });
        let hit = seg.end().point;
        assert!(hit.x.z.abs() < 1e-11);
        let br = snell_branches(&m, &hit, 0, Side::Minus).unwrap();
        assert_eq!(br.len(), 4);
        let cp1 = 3f64.sqrt();
        let cp2 = 1.5 * cp1;
        let tp = br.iter().find(|b| b.choice == BranchChoice { kind: BranchKind::T, mode: Mode::P }).unwrap();
        let sin_t = tp.point.xi.x / tp.point.xi.norm();
        assert!((sin_t / cp2 - theta.sin() / cp1).abs() < 1e-10);
        for b in &br {
            let tang = (b.point.xi - hit.xi).cross(&Vector3::z());
            if !b.evanescent {
                assert!(tang.norm() < 1e-10 * hit.xi.norm());
                assert!((b.speed * b.point.xi.norm() - 1.0).abs() < 1e-12);
            }
        }
        let rp = br.iter().find(|b| b.choice == BranchChoice { kind: BranchKind::R, mode: Mode::P }).unwrap();
        assert!(rp.point.xi.z < 0.0 && tp.point.xi.z > 0.0);
    }

    #[test]
    fn transmitted_p_evanescent_beyond_critical() {
        let m = two_layer(1.5);
        let crit = (1.0 / 1.5f64).asin();
        let theta = crit + 0.05;
        let p = PhasePoint::launch(&m, Vector3::new(0.0, 0.0, -1.0), Vector3::new(theta.sin(), 0.0, theta.cos()), Mode::P, None).unwrap();
        let seg = integrate_segment(&m, &p, None, 10.0, &SegmentOptions::default()).unwrap();
        let br = snell_branches(&m, &seg.end().point, 0, Side::Minus).unwrap();
        let tp = br.iter().find(|b| b.choice == BranchChoice { kind: BranchKind::T, mode: Mode::P }).unwrap();
        assert!(tp.evanescent);
        assert!(tp.normal_slowness.re == 0.0 && tp.normal_slowness.im > 0.0);
    }

    #[test]
    fn glancing_is_rejected() {
        let m = two_layer(1.5);
        let p = PhasePoint { t: 0.0, x: Vector3::zeros(), xi: Vector3::new(1.0, 0.0, 1e-5).normalize() / 3f64.sqrt(), tau: 1.0, mode: Mode::P, direction: Direction::Forward };
        assert!(matches!(snell_branches(&m, &p, 0, Side::Minus), Err(Error::GlancingRay { .. })));
    }

    #[test]
    fn branch_tree_depth_one() {
        let m = two_layer(1.5);
        let below: f64 = 0.3;
        let p = PhasePoint::launch(&m, Vector3::new(0.0, 0.0, -1.0), Vector3::new(below.sin(), 0.0, below.cos()), Mode::P, None).unwrap();
        let tree = enumerate_branch_tree(&m, &p, None, 1, &TraceLimits::default()).unwrap();
        assert_eq!(tree.entries.len(), 4);
        let above: f64 = 0.8;
        let p = PhasePoint::launch(&m, Vector3::new(0.0, 0.0, -1.0), Vector3::new(above.sin(), 0.0, above.cos()), Mode::P, None).unwrap();
        let tree = enumerate_branch_tree(&m, &p, None, 1, &TraceLimits::default()).unwrap();
        assert_eq!(tree.entries.len(), 3);
        assert_eq!(tree.pruned.len(), 1);
        assert_eq!(tree.pruned[0].sequence, vec![BranchChoice { kind: BranchKind::T, mode: Mode::P }]);
        assert_eq!(tree.pruned[0].reason, "evanescent");
    }

    #[test]
    fn branch_tree_depth_zero_without_interfaces() {
        let m = ElasticMedium::homogeneous(1.0, 1.0, 1.0);
        let p = PhasePoint::launch(&m, Vector3::zeros(), Vector3::x(), Mode::S, None).unwrap();
        let tree = enumerate_branch_tree(&m, &p, None, 0, &TraceLimits { max_s: 2.0, ..Default::default() }).unwrap();
        assert_eq!(tree.entries.len(), 1);
        assert!(tree.entries[0].sequence.is_empty());
    }

    #[test]
    fn ball_lens_chord() {
        // c_P = 1
        let mut m = ElasticMedium::homogeneous(0.5, 0.25, 1.0);
        m.foliation = Some(AnalyticField::radial(Vector3::zeros(), vec![1.0, -1.0]));
        for b in [0.0, 0.3, 0.7, 0.95] {
            let y: f64 = b;
            let x = Vector3::new(-(1.0 - y * y).sqrt(), y, 0.0);
            let res = travel_time_and_lens(&m, &x, &Vector3::x(), Mode::P, 0.0, &TraceLimits::default()).unwrap();
            let l = 2.0 * (1.0 - b * b).sqrt();
            assert!((res.travel_time - l).abs() < 1e-8, "b = {b}: {} vs {l}", res.travel_time);
            assert!((res.exit_x - Vector3::new((1.0 - y * y).sqrt(), y, 0.0)).norm() < 1e-8);
        }
    }

    #[test]
    fn reversal_returns_to_start() {
        let mut m = ElasticMedium::homogeneous(1.0, 1.0, 1.0);
        m.regions[0].mu = AnalyticField::Sum(vec![
            AnalyticField::constant(1.0),
            AnalyticField::gaussian_bump(Vector3::new(0.5, 0.2, 0.0), 0.4, 0.6),
        ]);
        let p = PhasePoint::launch(&m, Vector3::new(-1.0, 0.0, 0.1), Vector3::new(1.0, 0.1, 0.05), Mode::S, None).unwrap();
        let seg = integrate_segment(&m, &p, None, 3.0, &SegmentOptions::default()).unwrap();
        let mut back = seg.end().point;
        back.direction = Direction::Backward;
        let rev = integrate_segment(&m, &back, None, 3.0, &SegmentOptions::default()).unwrap();
        let e = rev.end().point;
        assert!((e.x - p.x).norm() < 1e-7);
        assert!((e.xi.normalize() - p.xi.normalize()).norm() < 1e-7);
    }

    #[test]
    fn dense_state_matches_samples() {
        let mut m = ElasticMedium::homogeneous(1.0, 1.0, 1.0);
        m.regions[0].mu = AnalyticField::affine(1.0, Vector3::new(0.0, 0.0, 0.2));
        let p = PhasePoint::launch(&m, Vector3::zeros(), Vector3::new(1.0, 0.0, 0.3), Mode::P, None).unwrap();
        let seg = integrate_segment(&m, &p, None, 2.0, &SegmentOptions::default()).unwrap();
        for s in &seg.samples {
            assert!((seg.state_at(s.s).x - s.point.x).norm() < 1e-12);
        }
    }
}
