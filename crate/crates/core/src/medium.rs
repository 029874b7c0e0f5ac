//! Piecewise-smooth isotropic elastic media.
//!
//! A medium is a list of interfaces (closed or planar surfaces given by an
//! implicit function) and a list of regions. Each region is selected by the
//! side of some interfaces and carries its own smooth Lamé parameters and
//! density, defined analytically on all of R^3.
//!
//! Sign convention: an interface normal `nu` is the normalized gradient of
//! its implicit function, so it points from `Side::Minus` to `Side::Plus`.
//! Jumps are always `(plus value) - (minus value)`.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{arr, Error, Result};
use crate::field::{AnalyticField, Jet};

/// Relative distance below which a point counts as lying on an interface.
pub const ON_INTERFACE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Minus => Side::Plus,
            Side::Plus => Side::Minus,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Side::Minus => -1.0,
            Side::Plus => 1.0,
        }
    }

    fn of(value: f64) -> Side {
        if value > 0.0 {
            Side::Plus
        } else {
            Side::Minus
        }
    }
}

/// Wave mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    P,
    S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interface {
    /// `(x - point) . normal = 0`; the plus side is where the normal points.
    Plane { point: Vector3<f64>, normal: Vector3<f64> },
    /// `|x - center| = radius`; the plus side is the outside.
    Sphere { center: Vector3<f64>, radius: f64 },
    /// `field(x) = iso`; the plus side is where the field exceeds `iso`.
    LevelSet { field: AnalyticField, iso: f64 },
}

impl Interface {
    pub fn plane(point: Vector3<f64>, normal: Vector3<f64>) -> Self {
        Interface::Plane { point, normal: normal.normalize() }
    }

    pub fn sphere(center: Vector3<f64>, radius: f64) -> Self {
        Interface::Sphere { center, radius }
    }

    pub fn level_set(field: AnalyticField, iso: f64) -> Self {
        Interface::LevelSet { field, iso }
    }

    /// Implicit function, positive on the plus side.
    pub fn implicit(&self, x: &Vector3<f64>) -> f64 {
        match self {
            Interface::Plane { point, normal } => (x - point).dot(normal) / normal.norm(),
            Interface::Sphere { center, radius } => (x - center).norm() - radius,
            Interface::LevelSet { field, iso } => field.value(x) - iso,
        }
    }

    pub fn implicit_gradient(&self, x: &Vector3<f64>) -> Vector3<f64> {
        match self {
            Interface::Plane { normal, .. } => normal / normal.norm(),
            Interface::Sphere { center, .. } => {
                let d = x - center;
                let r = d.norm();
                if r > 0.0 {
                    d / r
                } else {
                    Vector3::zeros()
                }
            }
            Interface::LevelSet { field, .. } => field.gradient(x),
        }
    }

    /// Unit normal pointing from the minus side to the plus side.
    pub fn normal(&self, x: &Vector3<f64>) -> Result<Vector3<f64>> {
        let g = self.implicit_gradient(x);
        let n = g.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidInput(format!("interface normal undefined at {:?}", arr(x))));
        }
        Ok(g / n)
    }

    /// First-order distance estimate to the surface.
    pub fn distance(&self, x: &Vector3<f64>) -> f64 {
        let f = self.implicit(x);
        match self {
            Interface::LevelSet { .. } => {
                let g = self.implicit_gradient(x).norm();
                if g > 0.0 {
                    f.abs() / g
                } else {
                    f64::INFINITY
                }
            }
            _ => f.abs(),
        }
    }

    /// Length scale used for relative tolerances.
    pub fn scale(&self) -> f64 {
        match self {
            Interface::Sphere { radius, .. } => radius.max(1.0),
            _ => 1.0,
        }
    }

    pub fn side(&self, x: &Vector3<f64>) -> Side {
        Side::of(self.implicit(x))
    }

    pub fn contains(&self, x: &Vector3<f64>) -> bool {
        self.distance(x) <= ON_INTERFACE_TOL * self.scale()
    }
}

/// Axis-aligned box bounding the computational domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Bounds {
    pub fn cube(half: f64) -> Self {
        Bounds { min: Vector3::repeat(-half), max: Vector3::repeat(half) }
    }

    pub fn contains(&self, x: &Vector3<f64>) -> bool {
        (0..3).all(|i| x[i] >= self.min[i] && x[i] <= self.max[i])
    }

    /// Signed distance to the nearest face, positive inside.
    pub fn margin(&self, x: &Vector3<f64>) -> f64 {
        (0..3)
            .map(|i| (x[i] - self.min[i]).min(self.max[i] - x[i]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// A smooth piece of the medium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Required side of each listed interface; unlisted interfaces are ignored.
    #[serde(default)]
    pub sides: Vec<(usize, Side)>,
    pub lambda: AnalyticField,
    pub mu: AnalyticField,
    pub rho: AnalyticField,
}

impl Region {
    pub fn homogeneous(lambda: f64, mu: f64, rho: f64) -> Self {
        Region {
            name: None,
            sides: Vec::new(),
            lambda: AnalyticField::constant(lambda),
            mu: AnalyticField::constant(mu),
            rho: AnalyticField::constant(rho),
        }
    }

    pub fn with_sides(mut self, sides: Vec<(usize, Side)>) -> Self {
        self.sides = sides;
        self
    }

    pub fn params(&self, x: &Vector3<f64>) -> Params {
        Params { lambda: self.lambda.value(x), mu: self.mu.value(x), rho: self.rho.value(x) }
    }

    pub fn jets(&self, x: &Vector3<f64>) -> ParamJets {
        ParamJets { lambda: self.lambda.jet(x), mu: self.mu.jet(x), rho: self.rho.jet(x) }
    }

    pub fn speed(&self, x: &Vector3<f64>, mode: Mode) -> f64 {
        self.params(x).speed(mode)
    }

    /// Gradient of `log c` for the given mode.
    pub fn grad_log_speed(&self, x: &Vector3<f64>, mode: Mode) -> Vector3<f64> {
        self.jets(x).grad_log_speed(mode)
    }
}

/// Lamé parameters and density at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub lambda: f64,
    pub mu: f64,
    pub rho: f64,
}

impl Params {
    pub fn cp(&self) -> f64 {
        ((self.lambda + 2.0 * self.mu) / self.rho).sqrt()
    }

    pub fn cs(&self) -> f64 {
        (self.mu / self.rho).sqrt()
    }

    pub fn speed(&self, mode: Mode) -> f64 {
        match mode {
            Mode::P => self.cp(),
            Mode::S => self.cs(),
        }
    }

    /// Why the parameters are not strongly convex, if they are not.
    pub fn violation(&self) -> Option<String> {
        if !(self.rho > 0.0) {
            return Some(format!("density must be positive (rho = {})", self.rho));
        }
        if !(self.mu > 0.0 && 3.0 * self.lambda + 2.0 * self.mu > 0.0) {
            return Some(format!(
                "strong convexity requires μ>0 and 3λ+2μ>0 (λ = {}, μ = {})",
                self.lambda, self.mu
            ));
        }
        None
    }

    pub fn check(&self, x: &Vector3<f64>) -> Result<()> {
        match self.violation() {
            Some(reason) => Err(Error::NonPhysical { point: arr(x), reason }),
            None => Ok(()),
        }
    }
}

/// Jets of the three material fields.
#[derive(Debug, Clone, Copy)]
pub struct ParamJets {
    pub lambda: Jet,
    pub mu: Jet,
    pub rho: Jet,
}

impl ParamJets {
    pub fn params(&self) -> Params {
        Params { lambda: self.lambda.value, mu: self.mu.value, rho: self.rho.value }
    }

    /// Gradient of `log c` for the given mode.
    pub fn grad_log_speed(&self, mode: Mode) -> Vector3<f64> {
        let rho = &self.rho;
        match mode {
            Mode::P => {
                let m = self.lambda.value + 2.0 * self.mu.value;
                let gm = self.lambda.gradient + 2.0 * self.mu.gradient;
                0.5 * (gm / m - rho.gradient / rho.value)
            }
            Mode::S => 0.5 * (self.mu.gradient / self.mu.value - rho.gradient / rho.value),
        }
    }
}

/// Which side of which interface a point on that interface belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideHint {
    pub interface: usize,
    pub side: Side,
}

/// An isotropic elastic medium with smooth pieces separated by interfaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticMedium {
    #[serde(default)]
    pub interfaces: Vec<Interface>,
    pub regions: Vec<Region>,
    /// Foliation function kappa; the leaves are its level sets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub foliation: Option<AnalyticField>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
}

/// Result of a segment-interface intersection query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub interface: usize,
    pub point: Vector3<f64>,
    /// Parameter along the segment in `[0, 1]`.
    pub fraction: f64,
}

impl ElasticMedium {
    pub fn homogeneous(lambda: f64, mu: f64, rho: f64) -> Self {
        ElasticMedium {
            interfaces: Vec::new(),
            regions: vec![Region::homogeneous(lambda, mu, rho)],
            foliation: None,
            bounds: None,
        }
    }

    /// Side of every interface at `x`, honouring the hint.
    pub fn sides_at(&self, x: &Vector3<f64>, hint: Option<SideHint>) -> Result<Vec<Side>> {
        self.interfaces
            .iter()
            .enumerate()
            .map(|(k, iface)| {
                if let Some(h) = hint.filter(|h| h.interface == k) {
                    return Ok(h.side);
                }
                if iface.contains(x) {
                    return Err(Error::OnInterfaceWithoutHint { interface: k, point: arr(x) });
                }
                Ok(iface.side(x))
            })
            .collect()
    }

    /// Index of the first region whose side constraints match.
    pub fn region_for_sides(&self, sides: &[Side]) -> Option<usize> {
        self.regions
            .iter()
            .position(|r| r.sides.iter().all(|(k, s)| sides.get(*k) == Some(s)))
    }

    pub fn region_at(&self, x: &Vector3<f64>, hint: Option<SideHint>) -> Result<usize> {
        let sides = self.sides_at(x, hint)?;
        self.region_for_sides(&sides).ok_or(Error::OutsideAllRegions(arr(x)))
    }

    /// Lamé parameters and density at `x`.
    pub fn eval_params(&self, x: &Vector3<f64>, hint: Option<SideHint>) -> Result<Params> {
        let r = self.region_at(x, hint)?;
        let p = self.regions[r].params(x);
        p.check(x)?;
        Ok(p)
    }

    /// `(c_P, c_S)` at `x`.
    pub fn wave_speeds(&self, x: &Vector3<f64>, hint: Option<SideHint>) -> Result<(f64, f64)> {
        let p = self.eval_params(x, hint)?;
        Ok((p.cp(), p.cs()))
    }

    pub fn grad_log_speed(&self, x: &Vector3<f64>, mode: Mode, hint: Option<SideHint>) -> Result<Vector3<f64>> {
        let r = self.region_at(x, hint)?;
        let jets = self.regions[r].jets(x);
        jets.params().check(x)?;
        Ok(jets.grad_log_speed(mode))
    }

    /// Earliest crossing of the straight segment `a -> b` with any interface.
    pub fn interface_crossing(&self, a: &Vector3<f64>, b: &Vector3<f64>) -> Option<Crossing> {
        const SAMPLES: usize = 64;
        let at = |t: f64| a + (b - a) * t;
        let mut best: Option<Crossing> = None;
        for (k, iface) in self.interfaces.iter().enumerate() {
            let f = |t: f64| iface.implicit(&at(t));
            let mut t0 = 0.0;
            let mut f0 = f(0.0);
            for i in 1..=SAMPLES {
                let t1 = i as f64 / SAMPLES as f64;
                let f1 = f(t1);
                if f0 == 0.0 || f0.signum() != f1.signum() {
                    let t = if f0 == 0.0 { t0 } else { bisect(&f, t0, t1, 1e-12) };
                    if best.map_or(true, |c| t < c.fraction) {
                        best = Some(Crossing { interface: k, point: at(t), fraction: t });
                    }
                    break;
                }
                t0 = t1;
                f0 = f1;
            }
        }
        best
    }

    /// Foliation value kappa(x).
    pub fn foliation_value(&self, x: &Vector3<f64>) -> Result<f64> {
        self.foliation.as_ref().map(|k| k.value(x)).ok_or(Error::NoFoliation)
    }

    /// Samples each region for strong convexity, positivity of density,
    /// `c_P > c_S`, and (coarsely) for intersecting interfaces.
    pub fn validate(&self, samples: usize, seed: u64) -> Vec<Violation> {
        let mut out = Vec::new();
        for (k, r) in self.regions.iter().enumerate() {
            for (iface, _) in &r.sides {
                if *iface >= self.interfaces.len() {
                    out.push(Violation {
                        region: Some(k),
                        point: None,
                        message: format!("region {k} refers to missing interface {iface}"),
                    });
                }
            }
        }
        if !out.is_empty() {
            return out;
        }
        let bounds = self.bounds.unwrap_or(Bounds::cube(2.0));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        out.extend(self.intersecting_interfaces(&bounds, samples, &mut rng));
        let mut reported = vec![false; self.regions.len()];
        for _ in 0..samples {
            let x = Vector3::from_fn(|i, _| rng.gen_range(bounds.min[i]..=bounds.max[i]));
            let Ok(sides) = self.sides_at(&x, None) else { continue };
            let Some(r) = self.region_for_sides(&sides) else { continue };
            if reported[r] {
                continue;
            }
            let p = self.regions[r].params(&x);
            let message = p.violation().or_else(|| {
                (p.cp() <= p.cs()).then(|| format!("c_P = {} must exceed c_S = {}", p.cp(), p.cs()))
            });
            if let Some(message) = message {
                reported[r] = true;
                out.push(Violation { region: Some(r), point: Some(arr(&x)), message });
            }
        }
        out
    }
}

impl ElasticMedium {
    // Projects random points onto each interface and looks for sign changes
    // (or zeros) of the other implicit functions there.
    fn intersecting_interfaces(&self, bounds: &Bounds, samples: usize, rng: &mut ChaCha8Rng) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.interfaces.len();
        let per = (samples / n.max(1)).clamp(64, 4096);
        for i in 0..n {
            let iface = &self.interfaces[i];
            let mut on_surface = Vec::new();
            for _ in 0..per {
                let mut x = Vector3::from_fn(|k, _| rng.gen_range(bounds.min[k]..=bounds.max[k]));
                for _ in 0..30 {
                    let g = iface.implicit_gradient(&x);
                    let g2 = g.norm_squared();
                    if g2 == 0.0 {
                        break;
                    }
                    x -= g * (iface.implicit(&x) / g2);
                }
                if iface.contains(&x) && bounds.contains(&x) {
                    on_surface.push(x);
                }
            }
            for j in (i + 1)..n {
                let other = &self.interfaces[j];
                let mut pos = false;
                let mut neg = false;
                let mut hit = None;
                for x in &on_surface {
                    if other.contains(x) {
                        hit = Some(*x);
                    }
                    let f = other.implicit(x);
                    pos |= f > 0.0;
                    neg |= f < 0.0;
                    if pos && neg {
                        hit = hit.or(Some(*x));
                    }
                }
                if let Some(x) = hit {
                    out.push(Violation {
                        region: None,
                        point: Some(arr(&x)),
                        message: format!("interfaces {i} and {j} intersect or touch"),
                    });
                }
            }
        }
        out
    }
}

/// One tangent geodesic launched from a leaf of the foliation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeafProbe {
    pub point: [f64; 3],
    pub direction: [f64; 3],
    pub mode: Mode,
    /// `κ(γ(±ℓ)) - q`, the larger of the two directions.
    pub drift: f64,
    /// `d²κ(γ(s))/ds²` at `s = 0` from the geodesic equation.
    pub curvature: f64,
    /// For leaves on an interface: whether the speed just above the leaf
    /// (larger κ) is at most the speed just below.
    pub speed_jump_ok: Option<bool>,
}

/// Empirical convexity report for the leaf `κ = q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub q: f64,
    pub probe_length: f64,
    pub probes: Vec<LeafProbe>,
    /// No tangent geodesic drifted into `κ > q` by more than `tolerance`.
    pub convex: bool,
    pub max_drift: f64,
    pub tolerance: f64,
}

impl ElasticMedium {
    /// Traces short geodesics of `c_P` and `c_S` tangent to `κ = q` and
    /// records how far they drift into `κ > q`. Non-positive drift at
    /// every probe is consistent with the leaf being convex as seen from
    /// `κ > q`; this is a sampled check, not a proof.
    pub fn foliation_convexity_probe(&self, q: f64, samples: usize, seed: u64) -> Result<ConvexityReport> {
        let kappa = self.foliation.as_ref().ok_or(Error::NoFoliation)?;
        let bounds = self.bounds.unwrap_or(Bounds::cube(2.0));
        let size = (bounds.max - bounds.min).norm();
        let ell = 0.02 * size;
        let tolerance = 1e-9 * size;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut probes = Vec::new();
        let mut attempts = 0;
        while probes.len() < 2 * samples && attempts < 50 * samples.max(1) {
            attempts += 1;
            let mut x = Vector3::from_fn(|k, _| rng.gen_range(bounds.min[k]..=bounds.max[k]));
            let mut ok = false;
            for _ in 0..50 {
                let j = kappa.jet(&x);
                let g2 = j.gradient.norm_squared();
                if g2 == 0.0 {
                    break;
                }
                x -= j.gradient * ((j.value - q) / g2);
                if (kappa.value(&x) - q).abs() < 1e-13 * (1.0 + q.abs()) {
                    ok = true;
                    break;
                }
            }
            if !ok || !bounds.contains(&x) {
                continue;
            }
            let grad = kappa.gradient(&x);
            let nu = grad.normalize();
            // the region seen from κ > q
            let probe_pt = x + nu * (1e-7 * size);
            let Ok(r) = self.region_at(&probe_pt, None) else { continue };
            let region = &self.regions[r];
            let w = Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            let v = w - nu * nu.dot(&w);
            if v.norm() < 1e-3 {
                continue;
            }
            let v = v.normalize();
            let speed_jump_ok = self.interfaces.iter().position(|f| f.contains(&x)).map(|_| {
                let below = self.region_at(&(x - nu * (1e-7 * size)), None);
                match below {
                    Ok(rb) => {
                        let (a, b) = (region.params(&x), self.regions[rb].params(&x));
                        a.cp() <= b.cp() && a.cs() <= b.cs()
                    }
                    Err(_) => true,
                }
            });
            for mode in [Mode::P, Mode::S] {
                let rhs = |_s: f64, y: &[f64; 6]| -> [f64; 6] {
                    let p = Vector3::new(y[0], y[1], y[2]);
                    let d = Vector3::new(y[3], y[4], y[5]);
                    let g = region.grad_log_speed(&p, mode);
                    let a = -g + d * g.dot(&d);
                    [d.x, d.y, d.z, a.x, a.y, a.z]
                };
                let mut drift = f64::NEG_INFINITY;
                for sgn in [1.0, -1.0] {
                    let y0 = [x.x, x.y, x.z, sgn * v.x, sgn * v.y, sgn * v.z];
                    let y = crate::ode::fixed_step(&rhs, 0.0, y0, ell / 32.0, 32);
                    drift = drift.max(kappa.value(&Vector3::new(y[0], y[1], y[2])) - q);
                }
                let g = region.grad_log_speed(&x, mode);
                let accel = -g + v * g.dot(&v);
                let curvature = v.dot(&(kappa.hessian(&x) * v)) + grad.dot(&accel);
                probes.push(LeafProbe { point: arr(&x), direction: arr(&v), mode, drift, curvature, speed_jump_ok });
            }
        }
        let max_drift = probes.iter().map(|p| p.drift).fold(f64::NEG_INFINITY, f64::max);
        Ok(ConvexityReport {
            q,
            probe_length: ell,
            convex: !probes.is_empty() && max_drift <= tolerance,
            max_drift,
            probes,
            tolerance,
        })
    }
}

/// A failed medium sanity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub region: Option<usize>,
    pub point: Option<[f64; 3]>,
    pub message: String,
}

pub(crate) fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_layer() -> ElasticMedium {
        ElasticMedium {
            interfaces: vec![Interface::plane(Vector3::zeros(), Vector3::z())],
            regions: vec![
                Region::homogeneous(2.0, 1.0, 1.0).with_sides(vec![(0, Side::Minus)]),
                Region::homogeneous(4.0, 2.0, 1.5).with_sides(vec![(0, Side::Plus)]),
            ],
            foliation: None,
            bounds: None,
        }
    }

    #[test]
    fn homogeneous_speeds() {
        let m = ElasticMedium::homogeneous(1.0, 1.0, 1.0);
        let (cp, cs) = m.wave_speeds(&Vector3::zeros(), None).unwrap();
        assert!((cp - 3f64.sqrt()).abs() < 1e-15);
        assert!((cs - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bump_density() {
        let mut m = ElasticMedium::homogeneous(1.0, 1.0, 1.0);
        m.regions[0].rho = AnalyticField::Sum(vec![
            AnalyticField::constant(1.0),
            AnalyticField::gaussian_bump(Vector3::zeros(), 0.5, 1.0),
        ]);
        let p = m.eval_params(&Vector3::zeros(), None).unwrap();
        assert!((p.rho - 1.5).abs() < 1e-15);
    }

    #[test]
    fn hint_required_on_interface() {
        let m = two_layer();
        let x = Vector3::new(0.3, 0.2, 0.0);
        assert!(matches!(m.eval_params(&x, None), Err(Error::OnInterfaceWithoutHint { interface: 0, .. })));
        let lo = m.eval_params(&x, Some(SideHint { interface: 0, side: Side::Minus })).unwrap();
        let hi = m.eval_params(&x, Some(SideHint { interface: 0, side: Side::Plus })).unwrap();
        assert_eq!(lo.lambda, 2.0);
        assert_eq!(hi.lambda, 4.0);
    }

    #[test]
    fn sphere_crossing_and_reverse() {
        let m = ElasticMedium {
            interfaces: vec![Interface::sphere(Vector3::zeros(), 1.0)],
            regions: vec![Region::homogeneous(1.0, 1.0, 1.0)],
            foliation: None,
            bounds: None,
        };
        let a = Vector3::new(2.0, 0.0, 0.0);
        let b = Vector3::zeros();
        let c = m.interface_crossing(&a, &b).unwrap();
        assert!((c.point - Vector3::x()).norm() < 1e-11);
        assert!((c.fraction - 0.5).abs() < 1e-11);
        let r = m.interface_crossing(&b, &a).unwrap();
        assert!((r.point - c.point).norm() < 1e-10);
    }

    #[test]
    fn level_set_crossing_residual() {
        let f = AnalyticField::Sum(vec![
            AnalyticField::affine(0.0, Vector3::z()),
            AnalyticField::gaussian_bump(Vector3::zeros(), 0.3, 0.5),
        ]);
        let m = ElasticMedium {
            interfaces: vec![Interface::level_set(f.clone(), 0.1)],
            regions: vec![Region::homogeneous(1.0, 1.0, 1.0)],
            foliation: None,
            bounds: None,
        };
        let c = m
            .interface_crossing(&Vector3::new(0.1, 0.0, -1.0), &Vector3::new(0.2, 0.1, 1.0))
            .unwrap();
        assert!((f.value(&c.point) - 0.1).abs() < 1e-10);
    }

    #[test]
    fn validation_reports_non_convex_region() {
        let mut m = two_layer();
        m.regions[1].lambda = AnalyticField::constant(-2.0);
        let v = m.validate(2000, 7);
        assert!(v.iter().any(|v| v.region == Some(1) && v.message.contains("μ>0 and 3λ+2μ>0")));
        assert!(two_layer().validate(2000, 7).is_empty());
    }

    #[test]
    fn validation_detects_touching_interfaces() {
        let mut m = two_layer();
        m.interfaces.push(Interface::sphere(Vector3::zeros(), 0.5));
        let v = m.validate(20000, 3);
        assert!(v.iter().any(|v| v.message.contains("intersect")));
    }

    #[test]
    fn grad_log_speed_matches_fd() {
        let mut r = Region::homogeneous(1.0, 1.0, 1.0);
        r.mu = AnalyticField::affine(1.0, Vector3::new(0.1, 0.2, 0.3));
        r.rho = AnalyticField::gaussian_bump(Vector3::zeros(), 1.0, 2.0);
        let x = Vector3::new(0.2, -0.1, 0.4);
        for mode in [Mode::P, Mode::S] {
            let g = r.grad_log_speed(&x, mode);
            let h = 1e-6;
            for i in 0..3 {
                let mut e = Vector3::zeros();
                e[i] = h;
                let fd = (r.speed(&(x + e), mode).ln() - r.speed(&(x - e), mode).ln()) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn no_foliation() {
        let m = ElasticMedium::homogeneous(1.0, 1.0, 1.0);
        assert_eq!(m.foliation_value(&Vector3::zeros()), Err(Error::NoFoliation));
    }

    #[test]
    fn foliation_needs_field() {
        assert!(matches!(ElasticMedium::homogeneous(1.0, 1.0, 1.0).foliation_convexity_probe(0.5, 4, 1), Err(Error::NoFoliation)));
    }

    #[test]
    fn depth_foliation_is_flat_in_constant_medium() {
        let mut m = ElasticMedium::homogeneous(1.0, 1.0, 1.0);
        m.foliation = Some(AnalyticField::affine(0.0, Vector3::z()));
        assert_eq!(m.foliation_value(&Vector3::new(1.0, 2.0, 3.0)).unwrap(), 3.0);
        let r = m.foliation_convexity_probe(0.3, 16, 7).unwrap();
        assert_eq!(r.probes.len(), 32);
        assert!(r.probes.iter().all(|p| p.drift.abs() < r.tolerance && p.curvature.abs() < 1e-12));
    }

    #[test]
    fn ball_with_speed_increasing_inward_is_convex() {
        let mut m = ElasticMedium::homogeneous(1.0, 1.0, 1.0);
        // speeds grow toward the center
        m.regions[0].mu = AnalyticField::radial(Vector3::zeros(), vec![2.0, 0.0, -0.5]);
        m.regions[0].lambda = AnalyticField::radial(Vector3::zeros(), vec![2.0, 0.0, -0.5]);
        m.foliation = Some(AnalyticField::radial(Vector3::zeros(), vec![1.0, 0.0, -1.0]));
        m.bounds = Some(Bounds::cube(1.0));
        let r = m.foliation_convexity_probe(0.5, 16, 3).unwrap();
        assert!(r.convex, "max drift {}", r.max_drift);
        assert!(r.probes.iter().all(|p| p.curvature < 0.0));
    }
}
