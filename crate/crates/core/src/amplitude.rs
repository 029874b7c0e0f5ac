//! Amplitude transport along P rays.
//!
//! The phase is stationary: `φ(t, x) = T(x) - t` with `|∇T| = 1/c_P`, so
//! `τ = ∂_tφ = -1`, `ξ = ∇T` and all amplitudes are functions of `x` only.
//! Spatial derivatives of `ξ`, `N = ξ/|ξ|` and the amplitudes are taken on a
//! lattice of companion rays indexed by `(i, j)` launch offsets and a common
//! time grid. With lattice coordinates `u = (α, β, t)` and `J = ∂X/∂u`,
//! gradients follow from `∇F = J⁻¹ ∂_u F`. Transverse derivatives use
//! second-order central differences with spacing `h`, time derivatives use
//! fourth-order central differences.
//!
//! Transport laws implemented here:
//!
//! * `b₀(s) = b₀(0) √(ρc_P(0)/ρc_P(s)) exp(-½∫₀ˢ ∇·N)`
//! * `h₋₁ = -Π_⊥ B(N b₀) / (ρ(c_P² - c_S²)|ξ|²)`
//! * `a₋₁' + ½[(log ρc_P)' + ∇·N] a₋₁ = G`,
//!   `G = -(N·B h₋₁ + N·C a₀) / (2iρc_P²|ξ|)`
//!
//! where `B V = i∂_{τ,ξ}p·∂_{t,x}V + (i/2)Σ ∂²p ∂²φ V - p₁V` and
//! `C V = i∂_ξ p₁·∂_x V + ½Σ ∂²p ∂²V`.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{arr, Error, Result};
use crate::interface_ops::{self, complexify, symbol_derivatives, CMat3, CVec3, RTMatrices};
use crate::medium::{ElasticMedium, Mode, Params, Region};
use crate::ode;
use crate::quad;
use crate::raytrace::{BranchChoice, BranchKind};

type C = Complex64;

fn re(v: f64) -> C {
    C::new(v, 0.0)
}

const I: C = C::new(0.0, 1.0);

// ---------------------------------------------------------------------------
// B and C operators

/// Local data needed to apply `B` and `C` at one point.
#[derive(Debug, Clone, Copy)]
pub struct BcContext {
    pub params: Params,
    pub grad_lambda: Vector3<f64>,
    pub grad_mu: Vector3<f64>,
    /// `∂_tφ`.
    pub tau: f64,
    /// `∇_xφ`.
    pub xi: Vector3<f64>,
    /// `∂²_xφ`.
    pub phase_hessian: Matrix3<f64>,
    /// `∂²_tφ`.
    pub phase_tt: f64,
}

/// A vector field with its first and second derivatives at one point.
#[derive(Debug, Clone, Copy)]
pub struct VField {
    pub value: CVec3,
    /// `grad[(c, d)] = ∂_c V_d`.
    pub grad: CMat3,
    /// `hess[d][(c, e)] = ∂_c ∂_e V_d`.
    pub hess: [CMat3; 3],
    pub dt: CVec3,
    pub dtt: CVec3,
}

impl VField {
    /// Time-independent field.
    pub fn stationary(value: CVec3, grad: CMat3, hess: [CMat3; 3]) -> Self {
        VField { value, grad, hess, dt: CVec3::zeros(), dtt: CVec3::zeros() }
    }

    fn partial(&self, j: usize) -> CVec3 {
        self.grad.row(j).transpose()
    }

    fn second(&self, j: usize, k: usize) -> CVec3 {
        CVec3::new(self.hess[0][(j, k)], self.hess[1][(j, k)], self.hess[2][(j, k)])
    }
}

fn cm(m: &Matrix3<f64>) -> CMat3 {
    m.map(re)
}

/// `B V`.
pub fn apply_b(ctx: &BcContext, v: &VField) -> CVec3 {
    let d = symbol_derivatives(&ctx.params, &ctx.grad_lambda, &ctx.grad_mu, ctx.tau, &ctx.xi);
    let mut first = cm(&d.d_tau) * v.dt;
    for j in 0..3 {
        first += cm(&d.d_xi[j]) * v.partial(j);
    }
    let mut curv = d.d_tau_tau * ctx.phase_tt;
    for j in 0..3 {
        for k in 0..3 {
            curv += d.d_xi_xi[j][k] * ctx.phase_hessian[(j, k)];
        }
    }
    let p1 = interface_ops::subprincipal_symbol(&ctx.grad_lambda, &ctx.grad_mu, &ctx.xi);
    first * I + cm(&curv) * v.value * (I * 0.5) - p1 * v.value
}

/// `C V`.
pub fn apply_c(ctx: &BcContext, v: &VField) -> CVec3 {
    let d = symbol_derivatives(&ctx.params, &ctx.grad_lambda, &ctx.grad_mu, ctx.tau, &ctx.xi);
    let mut first = CVec3::zeros();
    for j in 0..3 {
        first += d.d_xi_p1[j] * v.partial(j);
    }
    let mut second = cm(&d.d_tau_tau) * v.dtt;
    for j in 0..3 {
        for k in 0..3 {
            second += cm(&d.d_xi_xi[j][k]) * v.second(j, k);
        }
    }
    first * I + second * re(0.5)
}

/// `(B V, C V)`.
pub fn assemble_b_c(ctx: &BcContext, v: &VField) -> (CVec3, CVec3) {
    (apply_b(ctx, v), apply_c(ctx, v))
}

/// Splits `N·B V` into its three terms (first-order, curvature, `p₁`) so
/// that cancellation can be measured relative to their size.
pub fn normal_b_terms(ctx: &BcContext, v: &VField) -> [C; 3] {
    let n = complexify(&ctx.xi.normalize());
    let d = symbol_derivatives(&ctx.params, &ctx.grad_lambda, &ctx.grad_mu, ctx.tau, &ctx.xi);
    let mut first = cm(&d.d_tau) * v.dt;
    for j in 0..3 {
        first += cm(&d.d_xi[j]) * v.partial(j);
    }
    let mut curv = d.d_tau_tau * ctx.phase_tt;
    for j in 0..3 {
        for k in 0..3 {
            curv += d.d_xi_xi[j][k] * ctx.phase_hessian[(j, k)];
        }
    }
    let p1 = interface_ops::subprincipal_symbol(&ctx.grad_lambda, &ctx.grad_mu, &ctx.xi);
    [
        n.dot(&(first * I)),
        n.dot(&(cm(&curv) * v.value * (I * 0.5))),
        n.dot(&(-(p1 * v.value))),
    ]
}

// ---------------------------------------------------------------------------
// Ray bundles

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BundleKind {
    /// Rays start on the plane through `x0` normal to `direction`.
    PlaneWave,
    /// Rays start at `x0` with directions `normalize(d + α e₁ + β e₂)`.
    PointSource,
}

/// Launch data for a ray bundle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BundleSpec {
    pub kind: BundleKind,
    pub x0: Vector3<f64>,
    pub direction: Vector3<f64>,
    /// Launch offset between neighbouring rays (length or angle).
    pub spacing: f64,
    /// Rays per side: the lattice is `(2m+1)²`.
    pub half_width: usize,
    /// First recorded time; must be positive for point sources.
    pub t_start: f64,
    pub t_end: f64,
    /// Sample spacing in time.
    pub dt: f64,
    /// Integrator steps per sample.
    pub substeps: usize,
}

impl BundleSpec {
    pub fn new(kind: BundleKind, x0: Vector3<f64>, direction: Vector3<f64>) -> Self {
        BundleSpec {
            kind,
            x0,
            direction: direction.normalize(),
            spacing: 1e-3,
            half_width: 1,
            t_start: if kind == BundleKind::PointSource { 0.5 } else { 0.0 },
            t_end: 5.0,
            dt: 1e-2,
            substeps: 1,
        }
    }
}

/// A lattice of P rays traced with a fixed step in time, so that the
/// discrete flow is a smooth function of the launch offsets.
#[derive(Debug, Clone)]
pub struct RayBundle {
    pub spec: BundleSpec,
    pub region: usize,
    pub times: Vec<f64>,
    x: Vec<Vec<Vector3<f64>>>,
    xi: Vec<Vec<Vector3<f64>>>,
    arclength: Vec<Vec<f64>>,
}

fn frame(d: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let i = d.iamin();
    let mut a = Vector3::zeros();
    a[i] = 1.0;
    let e1 = (a - d * d.dot(&a)).normalize();
    (e1, d.cross(&e1))
}

fn ray_rhs(region: &Region) -> impl Fn(f64, &[f64; 7]) -> [f64; 7] + '_ {
    move |_t, y| {
        let x = Vector3::new(y[0], y[1], y[2]);
        let xi = Vector3::new(y[3], y[4], y[5]);
        let jets = region.jets(&x);
        let c = jets.params().cp();
        let g = jets.grad_log_speed(Mode::P) * c;
        let n = xi.norm();
        let dx = xi * (c / n);
        let dxi = -g * n;
        [dx.x, dx.y, dx.z, dxi.x, dxi.y, dxi.z, c]
    }
}

impl RayBundle {
    pub fn m(&self) -> i64 {
        self.spec.half_width as i64
    }

    fn ray(&self, i: i64, j: i64) -> usize {
        let m = self.m();
        ((i + m) * (2 * m + 1) + (j + m)) as usize
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn position(&self, i: i64, j: i64, k: usize) -> Vector3<f64> {
        self.x[self.ray(i, j)][k]
    }

    pub fn covector(&self, i: i64, j: i64, k: usize) -> Vector3<f64> {
        self.xi[self.ray(i, j)][k]
    }

    /// Euclidean arclength of ray `(i, j)` at sample `k`, measured from the launch.
    pub fn arclength(&self, i: i64, j: i64, k: usize) -> f64 {
        self.arclength[self.ray(i, j)][k]
    }

    /// Traces all rays of the bundle inside the region containing `x0`.
    pub fn trace(medium: &ElasticMedium, spec: BundleSpec) -> Result<RayBundle> {
        if spec.kind == BundleKind::PointSource && spec.t_start <= 0.0 {
            return Err(Error::InvalidInput("point-source bundles need t_start > 0".into()));
        }
        if !(spec.dt > 0.0 && spec.t_end > spec.t_start && spec.substeps >= 1) {
            return Err(Error::InvalidInput("bad bundle time grid".into()));
        }
        let region_id = medium.region_at(&spec.x0, None)?;
        let region = &medium.regions[region_id];
        let d = spec.direction.normalize();
        let (e1, e2) = frame(&d);
        let m = spec.half_width as i64;
        let n_skip = (spec.t_start / spec.dt).round() as usize;
        let n_rec = ((spec.t_end - spec.t_start) / spec.dt).round() as usize + 1;
        let t0 = n_skip as f64 * spec.dt;
        let times: Vec<f64> = (0..n_rec).map(|k| t0 + k as f64 * spec.dt).collect();
        let rhs = ray_rhs(region);
        let h_int = spec.dt / spec.substeps as f64;
        let mut xs = Vec::new();
        let mut xis = Vec::new();
        let mut ss = Vec::new();
        for i in -m..=m {
            for j in -m..=m {
                let (a, b) = (i as f64 * spec.spacing, j as f64 * spec.spacing);
                let (x0, dir) = match spec.kind {
                    BundleKind::PlaneWave => (spec.x0 + e1 * a + e2 * b, d),
                    BundleKind::PointSource => (spec.x0, (d + e1 * a + e2 * b).normalize()),
                };
                let p = region.params(&x0);
                p.check(&x0)?;
                let xi0 = dir / p.cp();
                let mut y = [x0.x, x0.y, x0.z, xi0.x, xi0.y, xi0.z, 0.0];
                y = ode::fixed_step(&rhs, 0.0, y, h_int, n_skip * spec.substeps);
                let mut rx = Vec::with_capacity(n_rec);
                let mut rxi = Vec::with_capacity(n_rec);
                let mut rs = Vec::with_capacity(n_rec);
                for k in 0..n_rec {
                    if k > 0 {
                        y = ode::fixed_step(&rhs, times[k - 1], y, h_int, spec.substeps);
                    }
                    let x = Vector3::new(y[0], y[1], y[2]);
                    match medium.region_at(&x, None) {
                        Ok(r) if r == region_id => {}
                        _ => {
                            return Err(Error::BundleBroken {
                                reason: format!("ray ({i},{j}) leaves region {region_id} at {:?}", arr(&x)),
                            })
                        }
                    }
                    if let Some(reason) = region.params(&x).violation() {
                        return Err(Error::NonPhysical { point: arr(&x), reason });
                    }
                    rx.push(x);
                    rxi.push(Vector3::new(y[3], y[4], y[5]));
                    rs.push(y[6]);
                }
                xs.push(rx);
                xis.push(rxi);
                ss.push(rs);
            }
        }
        Ok(RayBundle { spec, region: region_id, times, x: xs, xi: xis, arclength: ss })
    }
}

// ---------------------------------------------------------------------------
// Lattice fields

/// Complex multi-component field on the lattice, half-width `m`, samples `[klo, khi)`.
#[derive(Debug, Clone)]
struct Field {
    m: i64,
    klo: usize,
    khi: usize,
    nc: usize,
    data: Vec<C>,
}

impl Field {
    fn new(m: i64, klo: usize, khi: usize, nc: usize) -> Self {
        let n = ((2 * m + 1) * (2 * m + 1)) as usize * (khi - klo) * nc;
        Field { m, klo, khi, nc, data: vec![C::new(0.0, 0.0); n] }
    }

    fn off(&self, i: i64, j: i64, k: usize) -> usize {
        debug_assert!(i.abs() <= self.m && j.abs() <= self.m && k >= self.klo && k < self.khi);
        let r = ((i + self.m) * (2 * self.m + 1) + (j + self.m)) as usize;
        (r * (self.khi - self.klo) + (k - self.klo)) * self.nc
    }

    fn at(&self, i: i64, j: i64, k: usize) -> &[C] {
        let o = self.off(i, j, k);
        &self.data[o..o + self.nc]
    }

    fn at_mut(&mut self, i: i64, j: i64, k: usize) -> &mut [C] {
        let o = self.off(i, j, k);
        let nc = self.nc;
        &mut self.data[o..o + nc]
    }

    fn vec3(&self, i: i64, j: i64, k: usize, c0: usize) -> CVec3 {
        let s = self.at(i, j, k);
        CVec3::new(s[c0], s[c0 + 1], s[c0 + 2])
    }
}

/// Geometric and material data at a lattice point.
#[derive(Debug, Clone, Copy)]
struct Point {
    x: Vector3<f64>,
    xi: Vector3<f64>,
    n: Vector3<f64>,
    params: Params,
    grad_lambda: Vector3<f64>,
    grad_mu: Vector3<f64>,
    grad_log_rhoc: Vector3<f64>,
    jinv: Matrix3<f64>,
    phase_hessian: Matrix3<f64>,
    div_n: f64,
}

impl Point {
    fn ctx(&self) -> BcContext {
        BcContext {
            params: self.params,
            grad_lambda: self.grad_lambda,
            grad_mu: self.grad_mu,
            tau: -1.0,
            xi: self.xi,
            phase_hessian: self.phase_hessian,
            phase_tt: 0.0,
        }
    }

    fn rho_c(&self) -> f64 {
        self.params.rho * self.params.cp()
    }
}

/// Everything derived from the bundle at level one (half-width `m - 1`).
struct Lattice<'a> {
    bundle: &'a RayBundle,
    m1: i64,
    nt: usize,
    points: Vec<Point>,
}

impl<'a> Lattice<'a> {
    fn point(&self, i: i64, j: i64, k: usize) -> &Point {
        let r = ((i + self.m1) * (2 * self.m1 + 1) + (j + self.m1)) as usize;
        &self.points[r * self.nt + k]
    }

    fn build(medium: &ElasticMedium, bundle: &'a RayBundle, tol_caustic: f64) -> Result<Self> {
        let m = bundle.m();
        if m < 1 {
            return Err(Error::InvalidInput("bundle needs at least one companion ray per side".into()));
        }
        let region = &medium.regions[bundle.region];
        let h = bundle.spec.spacing;
        let nt = bundle.len();
        let m1 = m - 1;
        let mut points = Vec::with_capacity(((2 * m1 + 1) * (2 * m1 + 1)) as usize * nt);
        let xdot = |x: &Vector3<f64>, xi: &Vector3<f64>| -> (Vector3<f64>, Vector3<f64>) {
            let jets = region.jets(x);
            let c = jets.params().cp();
            (xi.normalize() * c, -jets.grad_log_speed(Mode::P) * (c * xi.norm()))
        };
        for i in -m1..=m1 {
            for j in -m1..=m1 {
                for k in 0..nt {
                    let x = bundle.position(i, j, k);
                    let xi = bundle.covector(i, j, k);
                    let jets = region.jets(&x);
                    let params = jets.params();
                    let (xt, xit) = xdot(&x, &xi);
                    let da = |f: &dyn Fn(i64, i64) -> Vector3<f64>| (f(i + 1, j) - f(i - 1, j)) / (2.0 * h);
                    let db = |f: &dyn Fn(i64, i64) -> Vector3<f64>| (f(i, j + 1) - f(i, j - 1)) / (2.0 * h);
                    let pos = |a: i64, b: i64| bundle.position(a, b, k);
                    let cov = |a: i64, b: i64| bundle.covector(a, b, k);
                    let dir = |a: i64, b: i64| bundle.covector(a, b, k).normalize();
                    let jac = Matrix3::from_rows(&[da(&pos).transpose(), db(&pos).transpose(), xt.transpose()]);
                    let scale = jac.row(0).norm() * jac.row(1).norm() * jac.row(2).norm();
                    let det = jac.determinant();
                    if !(det.abs() > tol_caustic * scale) {
                        return Err(Error::CausticEncountered { t: bundle.times[k] });
                    }
                    let jinv = jac.try_inverse().ok_or(Error::CausticEncountered { t: bundle.times[k] })?;
                    let dxi = Matrix3::from_rows(&[da(&cov).transpose(), db(&cov).transpose(), xit.transpose()]);
                    let hess = jinv * dxi;
                    let n = xi.normalize();
                    let nt_dot = (Matrix3::identity() - n * n.transpose()) * xit / xi.norm();
                    let dn = Matrix3::from_rows(&[da(&dir).transpose(), db(&dir).transpose(), nt_dot.transpose()]);
                    let grad_n = jinv * dn;
                    let grad_log_rhoc = jets.rho.log_gradient() + jets.grad_log_speed(Mode::P);
                    points.push(Point {
                        x,
                        xi,
                        n,
                        params,
                        grad_lambda: jets.lambda.gradient,
                        grad_mu: jets.mu.gradient,
                        grad_log_rhoc,
                        jinv,
                        phase_hessian: 0.5 * (hess + hess.transpose()),
                        div_n: grad_n.trace(),
                    });
                }
            }
        }
        Ok(Lattice { bundle, m1, nt, points })
    }

    /// `∂_c F_d` at component `d*3 + c`; shrinks by one ray and two samples per side.
    fn gradient(&self, f: &Field) -> Field {
        let h = self.bundle.spec.spacing;
        let dt = self.bundle.spec.dt;
        let m = f.m - 1;
        let (klo, khi) = (f.klo + 2, f.khi - 2);
        let mut out = Field::new(m, klo, khi, f.nc * 3);
        for i in -m..=m {
            for j in -m..=m {
                for k in klo..khi {
                    let jinv = cm(&self.point(i, j, k).jinv);
                    for d in 0..f.nc {
                        let ua = (f.at(i + 1, j, k)[d] - f.at(i - 1, j, k)[d]) / (2.0 * h);
                        let ub = (f.at(i, j + 1, k)[d] - f.at(i, j - 1, k)[d]) / (2.0 * h);
                        let ut = (f.at(i, j, k - 2)[d] - f.at(i, j, k - 1)[d] * 8.0 + f.at(i, j, k + 1)[d] * 8.0
                            - f.at(i, j, k + 2)[d])
                            / (12.0 * dt);
                        let g = jinv * CVec3::new(ua, ub, ut);
                        let o = out.at_mut(i, j, k);
                        o[d * 3] = g[0];
                        o[d * 3 + 1] = g[1];
                        o[d * 3 + 2] = g[2];
                    }
                }
            }
        }
        out
    }

    /// `b₀` on every level-one ray, all samples.
    fn b0(&self, b0_init: C) -> Field {
        let mut f = Field::new(self.m1, 0, self.nt, 1);
        let dt = self.bundle.spec.dt;
        for i in -self.m1..=self.m1 {
            for j in -self.m1..=self.m1 {
                let integrand: Vec<f64> = (0..self.nt)
                    .map(|k| {
                        let p = self.point(i, j, k);
                        p.div_n * p.params.cp()
                    })
                    .collect();
                let int = quad::cumulative(&integrand, dt);
                let rc0 = self.point(i, j, 0).rho_c();
                for k in 0..self.nt {
                    let rc = self.point(i, j, k).rho_c();
                    f.at_mut(i, j, k)[0] = b0_init * ((rc0 / rc).sqrt() * (-0.5 * int[k]).exp());
                }
            }
        }
        f
    }
}

fn grad_matrix(g: &[C]) -> CMat3 {
    // g[d*3 + c] = ∂_c V_d  ->  grad[(c, d)]
    CMat3::from_fn(|c, d| g[d * 3 + c])
}

fn hess_matrices(g: &[C]) -> [CMat3; 3] {
    // g[(d*3 + c)*3 + e] = ∂_e ∂_c V_d, symmetrized
    std::array::from_fn(|d| {
        let m = CMat3::from_fn(|c, e| g[(d * 3 + c) * 3 + e]);
        (m + m.transpose()) * re(0.5)
    })
}

fn relative(sum: C, terms: &[C], floor: f64) -> f64 {
    let den: f64 = terms.iter().map(|t| t.norm()).sum();
    sum.norm() / den.max(floor)
}

// ---------------------------------------------------------------------------
// Transport results

/// Leading-order transport state on the central ray.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportSample {
    pub t: f64,
    pub s: f64,
    pub x: Vector3<f64>,
    pub n: Vector3<f64>,
    pub div_n: f64,
    pub rho_c: f64,
    pub b0: C,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct B0Transport {
    pub samples: Vec<TransportSample>,
    /// `(s, relative |N·B(b₀N)|)` where available (needs half-width ≥ 2).
    pub compat_residual: Vec<(f64, f64)>,
}

impl B0Transport {
    pub fn max_compat_residual(&self) -> f64 {
        self.compat_residual.iter().map(|r| r.1).fold(0.0, f64::max)
    }
}

/// Caustic threshold on the normalized Jacobian determinant.
pub const CAUSTIC_TOL: f64 = 1e-8;

/// `∇·N` along the central ray.
pub fn div_n_central(medium: &ElasticMedium, bundle: &RayBundle) -> Result<Vec<f64>> {
    let lat = Lattice::build(medium, bundle, CAUSTIC_TOL)?;
    Ok((0..lat.nt).map(|k| lat.point(0, 0, k).div_n).collect())
}

/// Transports `b₀` along the central ray by the closed form.
pub fn transport_b0(medium: &ElasticMedium, bundle: &RayBundle, b0_init: C) -> Result<B0Transport> {
    if b0_init.norm() < 1e-14 {
        return Err(Error::ZeroLeadingAmplitude);
    }
    let lat = Lattice::build(medium, bundle, CAUSTIC_TOL)?;
    let b0 = lat.b0(b0_init);
    let samples = (0..lat.nt)
        .map(|k| {
            let p = lat.point(0, 0, k);
            TransportSample {
                t: bundle.times[k],
                s: bundle.arclength(0, 0, k),
                x: p.x,
                n: p.n,
                div_n: p.div_n,
                rho_c: p.rho_c(),
                b0: b0.at(0, 0, k)[0],
            }
        })
        .collect();
    let mut compat_residual = Vec::new();
    if lat.m1 >= 1 {
        let a0 = a0_field(&lat, &b0);
        let ga0 = lat.gradient(&a0);
        for k in ga0.klo..ga0.khi {
            let p = lat.point(0, 0, k);
            let v = VField::stationary(a0.vec3(0, 0, k, 0), grad_matrix(ga0.at(0, 0, k)), [CMat3::zeros(); 3]);
            let t = normal_b_terms(&p.ctx(), &v);
            let floor = 1e-14 * p.params.rho * p.params.cp().powi(2) * p.xi.norm() * v.value.norm();
            compat_residual.push((bundle.arclength(0, 0, k), relative(t[0] + t[1] + t[2], &t, floor)));
        }
    }
    Ok(B0Transport { samples, compat_residual })
}

fn a0_field(lat: &Lattice, b0: &Field) -> Field {
    let mut a0 = Field::new(lat.m1, 0, lat.nt, 3);
    for i in -lat.m1..=lat.m1 {
        for j in -lat.m1..=lat.m1 {
            for k in 0..lat.nt {
                let n = lat.point(i, j, k).n;
                let b = b0.at(i, j, k)[0];
                a0.at_mut(i, j, k).copy_from_slice(&[b * n.x, b * n.y, b * n.z]);
            }
        }
    }
    a0
}

/// Sub-leading transport state on the central ray.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AMinus1Sample {
    pub t: f64,
    pub s: f64,
    pub b0: C,
    /// Normal component `a₋₁` from the integrating-factor formula.
    pub a_minus1: C,
    /// Same quantity from direct integration of the transport ODE
    /// (only at even offsets from the start).
    pub a_minus1_direct: Option<C>,
    /// Forcing `G`.
    pub forcing: C,
    /// Integrating factor `g = 1/b₀`.
    pub g: C,
    pub h_minus1: CVec3,
    /// Relative residual of `|N·B(a₀)|` at this point.
    pub projection_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AMinus1Transport {
    pub samples: Vec<AMinus1Sample>,
    /// `(s, relative defect)` of the transport ODE evaluated on the computed `a₋₁`.
    pub ode_defect: Vec<(f64, f64)>,
    /// `(s, relative |N·[B a₋₁ + C a₀]|)` from the lattice (needs half-width ≥ 4).
    pub compat_defect: Vec<(f64, f64)>,
    /// Max relative difference between integrating-factor and direct routes.
    pub route_difference: f64,
}

impl AMinus1Transport {
    pub fn max_compat_defect(&self) -> f64 {
        self.compat_defect.iter().map(|r| r.1).fold(0.0, f64::max)
    }

    pub fn max_ode_defect(&self) -> f64 {
        self.ode_defect.iter().map(|r| r.1).fold(0.0, f64::max)
    }
}

/// Transports `a₋₁`, starting from `a_init` at the first sample where the
/// forcing is available (the fourth recorded sample).
pub fn transport_a_minus1(medium: &ElasticMedium, bundle: &RayBundle, b0_init: C, a_init: C) -> Result<AMinus1Transport> {
    if b0_init.norm() < 1e-14 {
        return Err(Error::ZeroLeadingAmplitude);
    }
    if bundle.m() < 3 {
        return Err(Error::InvalidInput("a₋₁ transport needs a bundle half-width of at least 3".into()));
    }
    let lat = Lattice::build(medium, bundle, CAUSTIC_TOL)?;
    let dt = bundle.spec.dt;
    let b0 = lat.b0(b0_init);
    let a0 = a0_field(&lat, &b0);
    let ga0 = lat.gradient(&a0);
    let hga0 = lat.gradient(&ga0);

    // h₋₁ on level two
    let mut hm1 = Field::new(ga0.m, ga0.klo, ga0.khi, 3);
    let mut proj = Field::new(ga0.m, ga0.klo, ga0.khi, 1);
    for i in -ga0.m..=ga0.m {
        for j in -ga0.m..=ga0.m {
            for k in ga0.klo..ga0.khi {
                let p = lat.point(i, j, k);
                let v = VField::stationary(a0.vec3(i, j, k, 0), grad_matrix(ga0.at(i, j, k)), [CMat3::zeros(); 3]);
                let b = apply_b(&p.ctx(), &v);
                let n = complexify(&p.n);
                let nb = n.dot(&b);
                let perp = b - n * nb;
                let denom = p.params.rho * (p.params.cp().powi(2) - p.params.cs().powi(2)) * p.xi.norm_squared();
                let h = perp * re(-1.0 / denom);
                hm1.at_mut(i, j, k).copy_from_slice(&[h.x, h.y, h.z]);
                let t = normal_b_terms(&p.ctx(), &v);
                let floor = 1e-14 * p.params.rho * p.params.cp().powi(2) * p.xi.norm() * v.value.norm();
                proj.at_mut(i, j, k)[0] = re(relative(nb, &t, floor));
            }
        }
    }
    let ghm1 = lat.gradient(&hm1);

    // forcing G and C(a₀) on level three
    let m3 = ghm1.m;
    let (klo, khi) = (ghm1.klo, ghm1.khi);
    let mut forcing = Field::new(m3, klo, khi, 1);
    let mut c_a0 = Field::new(m3, klo, khi, 3);
    for i in -m3..=m3 {
        for j in -m3..=m3 {
            for k in klo..khi {
                let p = lat.point(i, j, k);
                let ctx = p.ctx();
                let va0 = VField::stationary(a0.vec3(i, j, k, 0), grad_matrix(ga0.at(i, j, k)), hess_matrices(hga0.at(i, j, k)));
                let vh = VField::stationary(hm1.vec3(i, j, k, 0), grad_matrix(ghm1.at(i, j, k)), [CMat3::zeros(); 3]);
                let ca0 = apply_c(&ctx, &va0);
                let bh = apply_b(&ctx, &vh);
                let n = complexify(&p.n);
                let g = -(n.dot(&bh) + n.dot(&ca0)) / (I * (2.0 * p.params.rho * p.params.cp().powi(2) * p.xi.norm()));
                forcing.at_mut(i, j, k)[0] = g;
                c_a0.at_mut(i, j, k).copy_from_slice(&[ca0.x, ca0.y, ca0.z]);
            }
        }
    }

    // a₋₁ by the integrating factor on every level-three ray
    let mut am1 = Field::new(m3, klo, khi, 3);
    let mut am1_scalar = Field::new(m3, klo, khi, 1);
    for i in -m3..=m3 {
        for j in -m3..=m3 {
            let ks: Vec<usize> = (klo..khi).collect();
            let cvals: Vec<f64> = ks.iter().map(|&k| lat.point(i, j, k).params.cp()).collect();
            let divn: Vec<f64> = ks.iter().zip(&cvals).map(|(&k, c)| lat.point(i, j, k).div_n * c).collect();
            let int_d = quad::cumulative(&divn, dt);
            let rc0 = lat.point(i, j, klo).rho_c();
            let b_start = b0.at(i, j, klo)[0];
            let g: Vec<C> = ks
                .iter()
                .zip(&int_d)
                .map(|(&k, idv)| re((lat.point(i, j, k).rho_c() / rc0).sqrt() * (0.5 * idv).exp()) / b_start)
                .collect();
            let gg: Vec<C> = ks.iter().zip(&g).zip(&cvals).map(|((&k, gv), c)| gv * forcing.at(i, j, k)[0] * *c).collect();
            let int_gg = quad::cumulative(&gg, dt);
            for (idx, &k) in ks.iter().enumerate() {
                let a = (g[0] * a_init + int_gg[idx]) / g[idx];
                am1_scalar.at_mut(i, j, k)[0] = a;
                let v = hm1.vec3(i, j, k, 0) + complexify(&lat.point(i, j, k).n) * a;
                am1.at_mut(i, j, k).copy_from_slice(&[v.x, v.y, v.z]);
            }
        }
    }

    // direct route on the central ray: RK4 with step 2dt in t
    let ks: Vec<usize> = (klo..khi).collect();
    let coef = |k: usize| -> (C, C) {
        let p = lat.point(0, 0, k);
        let c = p.params.cp();
        let pcoef = 0.5 * (p.grad_log_rhoc.dot(&p.n) + p.div_n);
        (re(-pcoef * c), forcing.at(0, 0, k)[0] * c)
    };
    let mut direct = vec![None; ks.len()];
    let mut y = a_init;
    direct[0] = Some(y);
    let mut idx = 0;
    while idx + 2 < ks.len() {
        let f = |k: usize, y: C| {
            let (a, b) = coef(k);
            a * y + b
        };
        let h2 = 2.0 * dt;
        let (k0, k1, k2) = (ks[idx], ks[idx + 1], ks[idx + 2]);
        let s1 = f(k0, y);
        let s2 = f(k1, y + s1 * (h2 / 2.0));
        let s3 = f(k1, y + s2 * (h2 / 2.0));
        let s4 = f(k2, y + s3 * h2);
        y += (s1 + s2 * 2.0 + s3 * 2.0 + s4) * (h2 / 6.0);
        idx += 2;
        direct[idx] = Some(y);
    }

    // ODE defect on the central ray
    let a_c: Vec<C> = ks.iter().map(|&k| am1_scalar.at(0, 0, k)[0]).collect();
    let da = quad::derivative(&a_c, dt);
    let mut ode_defect = Vec::new();
    let mut samples = Vec::new();
    let scale = a_c.iter().map(|a| a.norm()).fold(0.0, f64::max).max(1e-300);
    let mut route_difference: f64 = 0.0;
    for (idx, &k) in ks.iter().enumerate() {
        let p = lat.point(0, 0, k);
        let c = p.params.cp();
        let pcoef = 0.5 * (p.grad_log_rhoc.dot(&p.n) + p.div_n);
        let g = forcing.at(0, 0, k)[0];
        let terms = [da[idx] / c, a_c[idx] * pcoef, -g];
        let floor = 1e-14 * scale;
        ode_defect.push((bundle.arclength(0, 0, k), relative(terms[0] + terms[1] + terms[2], &terms, floor)));
        if let Some(d) = direct[idx] {
            route_difference = route_difference.max((d - a_c[idx]).norm() / scale);
        }
        samples.push(AMinus1Sample {
            t: bundle.times[k],
            s: bundle.arclength(0, 0, k),
            b0: b0.at(0, 0, k)[0],
            a_minus1: a_c[idx],
            a_minus1_direct: direct[idx],
            forcing: g,
            g: C::new(1.0, 0.0) / b0.at(0, 0, k)[0],
            h_minus1: hm1.vec3(0, 0, k, 0),
            projection_residual: proj.at(0, 0, k)[0].re,
        });
    }

    // compatibility defect N·[B a₋₁ + C a₀] on level four
    let mut compat_defect = Vec::new();
    if m3 >= 1 {
        let gam1 = lat.gradient(&am1);
        for k in gam1.klo..gam1.khi {
            let p = lat.point(0, 0, k);
            let ctx = p.ctx();
            let v = VField::stationary(am1.vec3(0, 0, k, 0), grad_matrix(gam1.at(0, 0, k)), [CMat3::zeros(); 3]);
            let tb = normal_b_terms(&ctx, &v);
            let n = complexify(&p.n);
            let nc = n.dot(&c_a0.vec3(0, 0, k, 0));
            let terms = [tb[0], tb[1], tb[2], nc];
            let floor = 1e-14 * p.params.rho * p.params.cp().powi(2) * p.xi.norm() * scale;
            compat_defect.push((bundle.arclength(0, 0, k), relative(terms.iter().sum(), &terms, floor)));
        }
    }
    Ok(AMinus1Transport { samples, ode_defect, compat_defect, route_difference })
}

// ---------------------------------------------------------------------------
// Paraxial reference

/// `∇·N` along the central ray from the variational (paraxial) equations,
/// integrated with the same fixed step as the bundle. Independent of the
/// lattice finite differences.
pub fn paraxial_div_n(medium: &ElasticMedium, spec: &BundleSpec) -> Result<Vec<f64>> {
    let region_id = medium.region_at(&spec.x0, None)?;
    let region = &medium.regions[region_id];
    let d = spec.direction.normalize();
    let (e1, e2) = frame(&d);
    let p0 = region.params(&spec.x0);
    p0.check(&spec.x0)?;
    let c0 = p0.cp();
    let xi0 = d / c0;
    let grad_c0 = region.grad_log_speed(&spec.x0, Mode::P) * c0;
    // state: x, ξ, δx_α, δξ_α, δx_β, δξ_β
    let mut y = [0.0; 18];
    let set = |y: &mut [f64; 18], o: usize, v: &Vector3<f64>| {
        y[o] = v.x;
        y[o + 1] = v.y;
        y[o + 2] = v.z;
    };
    set(&mut y, 0, &spec.x0);
    set(&mut y, 3, &xi0);
    for (o, e) in [(6, e1), (12, e2)] {
        match spec.kind {
            BundleKind::PlaneWave => {
                set(&mut y, o, &e);
                set(&mut y, o + 3, &(-d * (grad_c0.dot(&e) / (c0 * c0))));
            }
            BundleKind::PointSource => {
                set(&mut y, o, &Vector3::zeros());
                set(&mut y, o + 3, &(e / c0));
            }
        }
    }
    let rhs = |_t: f64, y: &[f64; 18]| -> [f64; 18] {
        let v = |o: usize| Vector3::new(y[o], y[o + 1], y[o + 2]);
        let x = v(0);
        let xi = v(3);
        let (c, gc, hc) = speed_jet(region, &x);
        let k = xi.norm();
        let n = xi / k;
        let pn = (Matrix3::identity() - n * n.transpose()) / k;
        let mut out = [0.0; 18];
        let put = |out: &mut [f64; 18], o: usize, w: &Vector3<f64>| {
            out[o] = w.x;
            out[o + 1] = w.y;
            out[o + 2] = w.z;
        };
        put(&mut out, 0, &(n * c));
        put(&mut out, 3, &(-gc * k));
        for o in [6, 12] {
            let dx = v(o);
            let dxi = v(o + 3);
            let ddx = n * gc.dot(&dx) + pn * dxi * c;
            let ddxi = -(hc * dx) * k - gc * n.dot(&dxi);
            put(&mut out, o, &ddx);
            put(&mut out, o + 3, &ddxi);
        }
        out
    };
    let h_int = spec.dt / spec.substeps as f64;
    let n_skip = (spec.t_start / spec.dt).round() as usize;
    let n_rec = ((spec.t_end - spec.t_start) / spec.dt).round() as usize + 1;
    y = ode::fixed_step(&rhs, 0.0, y, h_int, n_skip * spec.substeps);
    let mut out = Vec::with_capacity(n_rec);
    for k in 0..n_rec {
        if k > 0 {
            y = ode::fixed_step(&rhs, 0.0, y, h_int, spec.substeps);
        }
        let v = |o: usize| Vector3::new(y[o], y[o + 1], y[o + 2]);
        let x = v(0);
        let xi = v(3);
        let (c, gc, _) = speed_jet(region, &x);
        let kk = xi.norm();
        let n = xi / kk;
        let pn = (Matrix3::identity() - n * n.transpose()) / kk;
        let xit = -gc * kk;
        let jac = Matrix3::from_rows(&[v(6).transpose(), v(12).transpose(), (n * c).transpose()]);
        let dn = Matrix3::from_rows(&[(pn * v(9)).transpose(), (pn * v(15)).transpose(), (pn * xit).transpose()]);
        let jinv = jac.try_inverse().ok_or(Error::CausticEncountered { t: spec.t_start + k as f64 * spec.dt })?;
        out.push((jinv * dn).trace());
    }
    Ok(out)
}

/// `c_P`, `∇c_P` and `∇∇c_P` from the analytic material jets.
fn speed_jet(region: &Region, x: &Vector3<f64>) -> (f64, Vector3<f64>, Matrix3<f64>) {
    let j = region.jets(x);
    let m = j.lambda.value + 2.0 * j.mu.value;
    let gm = j.lambda.gradient + 2.0 * j.mu.gradient;
    let hm = j.lambda.hessian + 2.0 * j.mu.hessian;
    let rho = &j.rho;
    let c = (m / rho.value).sqrt();
    let gl = 0.5 * (gm / m - rho.log_gradient());
    let hl = 0.5 * (hm / m - gm * gm.transpose() / (m * m) - rho.log_hessian());
    (c, gl * c, (hl + gl * gl.transpose()) * c)
}

// ---------------------------------------------------------------------------
// Packets and interfaces

/// Sampled parametrix field near the central ray at one time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PacketField {
    pub time: f64,
    pub center: Vector3<f64>,
    pub direction: Vector3<f64>,
    pub b0: C,
    pub a_minus1: Option<C>,
    /// `(position, displacement)` samples on a square slice through the center.
    pub samples: Vec<(Vector3<f64>, CVec3)>,
}

/// Packet launch parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PacketSpec {
    pub bundle: BundleSpec,
    /// Frequency scale `ω` multiplying the phase.
    pub frequency: f64,
    pub amplitude: C,
    /// Gaussian envelope width.
    pub width: f64,
    /// Include the `a₋₁/ω` correction.
    pub two_term: bool,
    /// Initial `a₋₁` for the two-term field.
    pub a_minus1_init: C,
    /// Slice samples per side.
    pub slice_points: usize,
}

/// Evaluates the one- or two-term parametrix on a slice around the central
/// ray at each recorded time in `times` (indices into the bundle samples).
pub fn propagate_packet(medium: &ElasticMedium, spec: &PacketSpec, sample_indices: &[usize]) -> Result<Vec<PacketField>> {
    let bundle = RayBundle::trace(medium, spec.bundle)?;
    let lat = Lattice::build(medium, &bundle, CAUSTIC_TOL)?;
    let b0 = lat.b0(spec.amplitude);
    let am1 = if spec.two_term {
        let t = transport_a_minus1(medium, &bundle, spec.amplitude, spec.a_minus1_init)?;
        Some(t.samples)
    } else {
        None
    };
    let mut out = Vec::new();
    for &k in sample_indices {
        if k >= bundle.len() {
            return Err(Error::InvalidInput(format!("sample {k} beyond bundle length {}", bundle.len())));
        }
        let p = lat.point(0, 0, k);
        let a = match &am1 {
            Some(s) => Some(
                s.iter()
                    .find(|q| (q.t - bundle.times[k]).abs() < 1e-12)
                    .map(|q| q.a_minus1)
                    .ok_or_else(|| Error::InvalidInput(format!("no a₋₁ at sample {k}")))?,
            ),
            None => None,
        };
        let amp = b0.at(0, 0, k)[0] + a.unwrap_or(C::new(0.0, 0.0)) / spec.frequency;
        let (e1, _) = frame(&p.n);
        let npts = spec.slice_points.max(1);
        let mut samples = Vec::new();
        for a_i in 0..=2 * npts {
            for b_i in 0..=2 * npts {
                let u = (a_i as f64 - npts as f64) / npts as f64 * 3.0 * spec.width;
                let v = (b_i as f64 - npts as f64) / npts as f64 * 3.0 * spec.width;
                let dx = p.n * u + e1 * v;
                let phase = spec.frequency * (p.xi.dot(&dx) + 0.5 * dx.dot(&(p.phase_hessian * dx)));
                let env = (-dx.norm_squared() / (2.0 * spec.width * spec.width)).exp();
                let val = complexify(&p.n) * (amp * C::from_polar(env, phase));
                samples.push((p.x + dx, val));
            }
        }
        out.push(PacketField { time: bundle.times[k], center: p.x, direction: p.n, b0: b0.at(0, 0, k)[0], a_minus1: a, samples });
    }
    Ok(out)
}

/// Amplitude carried onto one outgoing branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutgoingAmplitude {
    pub choice: BranchChoice,
    /// Outgoing displacement polarization (complex for evanescent branches).
    pub polarization: CVec3,
    pub b0: C,
    pub a_minus1: C,
    /// Only the principal-level reflection/transmission matrices were used
    /// for `a₋₁`.
    pub principal_only: bool,
}

/// Maps the incident P amplitudes `(b₀, a₋₁)` through the interface: the
/// trace map acts on the incident displacement `N b`, and the result is
/// projected onto the outgoing mode's polarization.
pub fn apply_interface_amplitudes(rt: &RTMatrices, incident_n: &Vector3<f64>, b0: C, a_minus1: C, choice: BranchChoice) -> OutgoingAmplitude {
    let m = match choice.kind {
        BranchKind::R => &rt.m_r,
        BranchKind::T => &rt.m_t,
    };
    let wave = rt.outgoing_wave(choice);
    let u = m * complexify(incident_n);
    let (pol, coef) = match choice.mode {
        Mode::P => (wave.basis.p, wave.basis.p.dot(&u)),
        Mode::S => {
            let sv = wave.basis.sv.dot(&u);
            let sh = wave.basis.sh.dot(&u);
            let v = wave.basis.sv * sv + wave.basis.sh * sh;
            let norm = (sv * sv + sh * sh).sqrt();
            if norm.norm() > 0.0 {
                (v / norm, norm)
            } else {
                (wave.basis.sv, C::new(0.0, 0.0))
            }
        }
    };
    OutgoingAmplitude { choice, polarization: pol, b0: coef * b0, a_minus1: coef * a_minus1, principal_only: true }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::AnalyticField;

    fn homogeneous() -> ElasticMedium {
        ElasticMedium::homogeneous(1.0, 1.0, 1.0)
    }

    fn graded() -> ElasticMedium {
        let mut m = homogeneous();
        m.regions[0].mu = AnalyticField::Sum(vec![
            AnalyticField::affine(1.0, Vector3::new(0.05, 0.0, 0.1)),
            AnalyticField::gaussian_bump(Vector3::new(0.5, 0.3, 1.0), 0.2, 0.8),
        ]);
        m.regions[0].rho = AnalyticField::affine(1.0, Vector3::new(0.0, 0.05, -0.03));
        m
    }

    #[test]
    fn b_and_c_vanish_on_constant_fields() {
        let ctx = BcContext {
            params: Params { lambda: 1.0, mu: 1.0, rho: 1.0 },
            grad_lambda: Vector3::zeros(),
            grad_mu: Vector3::zeros(),
            tau: -1.0,
            xi: Vector3::new(0.0, 0.0, 1.0 / 3f64.sqrt()),
            phase_hessian: Matrix3::zeros(),
            phase_tt: 0.0,
        };
        let v = VField::stationary(CVec3::new(re(0.0), re(0.0), re(1.0)), CMat3::zeros(), [CMat3::zeros(); 3]);
        let (b, c) = assemble_b_c(&ctx, &v);
        assert!(b.norm() < 1e-15 && c.norm() < 1e-15);
    }

    #[test]
    fn point_source_b0_is_inverse_distance() {
        let m = homogeneous();
        let mut spec = BundleSpec::new(BundleKind::PointSource, Vector3::zeros(), Vector3::new(0.2, 0.1, 1.0));
        spec.half_width = 2;
        spec.t_start = 0.5;
        spec.t_end = 4.0;
        let b = RayBundle::trace(&m, spec).unwrap();
        let tr = transport_b0(&m, &b, re(1.0)).unwrap();
        let s0 = tr.samples[0].s;
        for smp in &tr.samples {
            assert!((smp.b0.re * smp.s / s0 - 1.0).abs() < 1e-8);
            assert!((smp.div_n - 2.0 / smp.s).abs() < 1e-8);
        }
        assert!(tr.max_compat_residual() < 1e-6, "{}", tr.max_compat_residual());
    }

    #[test]
    fn point_source_a_minus1_matches_exact_green_function() {
        // u = ∇(e^{ikr}/r) has a₋₁/b₀ = i c_P / s
        let m = homogeneous();
        let cp = 3f64.sqrt();
        let mut spec = BundleSpec::new(BundleKind::PointSource, Vector3::zeros(), Vector3::z());
        spec.half_width = 4;
        spec.spacing = 2.5e-3;
        spec.t_start = 0.5;
        spec.t_end = 3.0;
        let b = RayBundle::trace(&m, spec).unwrap();
        let s_first = b.arclength(0, 0, 4);
        let b0_first = b.arclength(0, 0, 0) / s_first;
        let a_init = I * (cp * b0_first / s_first);
        let tr = transport_a_minus1(&m, &b, re(1.0), a_init).unwrap();
        for smp in &tr.samples {
            let exact = I * cp * smp.b0 / smp.s;
            assert!((smp.a_minus1 - exact).norm() < 2e-4 * exact.norm(), "{} vs {}", smp.a_minus1, exact);
            assert!(smp.h_minus1.norm() < 1e-6);
        }
        assert!(tr.route_difference < 1e-6);
        assert!(tr.max_compat_defect() < 1e-3, "{}", tr.max_compat_defect());
    }

    #[test]
    fn plane_wave_divergence_matches_paraxial_reference() {
        let m = graded();
        let mut spec = BundleSpec::new(BundleKind::PlaneWave, Vector3::new(0.0, 0.0, -1.0), Vector3::new(0.1, 0.0, 1.0));
        spec.t_end = 2.0;
        let b = RayBundle::trace(&m, spec).unwrap();
        let fd = div_n_central(&m, &b).unwrap();
        let px = paraxial_div_n(&m, &spec).unwrap();
        for (a, b) in fd.iter().zip(&px) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn graded_compatibility_and_routes() {
        let m = graded();
        let mut spec = BundleSpec::new(BundleKind::PlaneWave, Vector3::new(0.0, 0.0, -1.0), Vector3::new(0.1, 0.0, 1.0));
        spec.half_width = 4;
        spec.spacing = 1e-2;
        spec.t_end = 2.0;
        let b = RayBundle::trace(&m, spec).unwrap();
        let tr = transport_a_minus1(&m, &b, re(1.0), re(0.0)).unwrap();
        assert!(tr.route_difference < 1e-6, "{}", tr.route_difference);
        assert!(tr.max_ode_defect() < 1e-5, "{}", tr.max_ode_defect());
        assert!(tr.max_compat_defect() < 1e-3, "{}", tr.max_compat_defect());
    }

    #[test]
    fn normal_incidence_amplitude_transfer() {
        use crate::interface_ops::{rt_matrices, InterfaceSetting};
        use crate::medium::Side;
        let (p1, p2) = (Params { lambda: 1.0, mu: 1.0, rho: 1.0 }, Params { lambda: 2.0, mu: 1.5, rho: 2.0 });
        let s = InterfaceSetting::from_params(Vector3::z(), Vector3::zeros(), Side::Minus, p1, p2);
        let rt = rt_matrices(&s).unwrap();
        let out = apply_interface_amplitudes(&rt, &Vector3::z(), re(2.0), re(0.5), BranchChoice { kind: BranchKind::T, mode: Mode::P });
        let (z1, z2) = (p1.rho * p1.cp(), p2.rho * p2.cp());
        assert!((out.b0 - re(2.0 * 2.0 * z1 / (z1 + z2))).norm() < 1e-12);
        assert!(out.principal_only);
    }
}
