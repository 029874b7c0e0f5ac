//! Ray transform of symmetric 2-tensors along P rays, its gauge kernel, and
//! the fourth-order density equation with its degeneracy set `c_P = 2c_S`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{arr, Error, Result};
use crate::field::AnalyticField;
use crate::medium::{ElasticMedium, Mode, Params, Region};
use crate::quad;
use crate::raytrace::{travel_time_and_lens, BrokenRay, TraceLimits};

/// A symmetric 3×3 tensor field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorField2 {
    /// Upper triangle `xx, xy, xz, yy, yz, zz`.
    Entries(Box<[AnalyticField; 6]>),
    /// `dˢv = (∇v + ∇vᵀ)/2`.
    SymmetricGradient(Box<[AnalyticField; 3]>),
    /// `dˢv - (v·∇log c_P) I`: the symmetric covariant derivative of the
    /// one-form `c_P⁻² v` in the metric `c_P⁻² dx²`, rescaled by `c_P²`.
    /// Its transform is a pure boundary term in any smooth region.
    GaugePotential(Box<[AnalyticField; 3]>),
    Scaled(f64, Box<TensorField2>),
    Sum(Vec<TensorField2>),
}

const UPPER: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

fn sym_grad(v: &[AnalyticField; 3], x: &Vector3<f64>) -> Matrix3<f64> {
    // grad[(i, j)] = ∂_i v_j
    let g = Matrix3::from_columns(&[v[0].gradient(x), v[1].gradient(x), v[2].gradient(x)]);
    0.5 * (g + g.transpose())
}

impl TensorField2 {
    pub fn zero() -> Self {
        TensorField2::Sum(Vec::new())
    }

    pub fn entries(e: [AnalyticField; 6]) -> Self {
        TensorField2::Entries(Box::new(e))
    }

    /// Evaluates the tensor at `x`; `region` supplies `c_P` for gauge terms.
    pub fn eval(&self, x: &Vector3<f64>, region: &Region) -> Matrix3<f64> {
        match self {
            TensorField2::Entries(e) => {
                let mut m = Matrix3::zeros();
                for (k, &(i, j)) in UPPER.iter().enumerate() {
                    let v = e[k].value(x);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
                m
            }
            TensorField2::SymmetricGradient(v) => sym_grad(v, x),
            TensorField2::GaugePotential(v) => {
                let l = region.grad_log_speed(x, Mode::P);
                let vv = Vector3::new(v[0].value(x), v[1].value(x), v[2].value(x));
                sym_grad(v, x) - Matrix3::identity() * vv.dot(&l)
            }
            TensorField2::Scaled(a, t) => t.eval(x, region) * *a,
            TensorField2::Sum(ts) => ts.iter().map(|t| t.eval(x, region)).fold(Matrix3::zeros(), |a, b| a + b),
        }
    }
}

/// `dˢv` for a vector field given by three scalar fields.
pub fn symmetrized_gradient_tensor(v: [AnalyticField; 3]) -> TensorField2 {
    TensorField2::SymmetricGradient(Box::new(v))
}

/// `∫_γ N·(A/c_P)N ds` over every segment of `ray`.
pub fn ray_transform_2tensor(medium: &ElasticMedium, ray: &BrokenRay, a: &TensorField2, tol: f64) -> f64 {
    let nseg: usize = ray.segments.iter().map(|s| s.breakpoints().len().saturating_sub(1)).sum();
    let tol_each = tol / nseg.max(1) as f64;
    let mut total = 0.0;
    for seg in &ray.segments {
        let region = &medium.regions[seg.region];
        let f = |s: f64| {
            let p = seg.state_at(s);
            let n = p.xi.normalize();
            n.dot(&(a.eval(&p.x, region) * n)) / region.params(&p.x).cp()
        };
        for w in seg.breakpoints().windows(2) {
            if w[1] > w[0] {
                total += quad::adaptive_simpson(&f, w[0], w[1], tol_each);
            }
        }
    }
    total
}

/// Boundary term `Σ_segments [v·ξ]` matching the transform of
/// [`TensorField2::GaugePotential`]; equals that of `dˢv` in constant-speed regions.
pub fn gauge_boundary_term(ray: &BrokenRay, v: &[AnalyticField; 3]) -> f64 {
    let val = |x: &Vector3<f64>| Vector3::new(v[0].value(x), v[1].value(x), v[2].value(x));
    ray.segments
        .iter()
        .map(|seg| {
            let (a, b) = (&seg.start().point, &seg.end().point);
            let sign = seg.direction.sign();
            sign * (val(&b.x).dot(&b.xi) - val(&a.x).dot(&a.xi))
        })
        .sum()
}

// ---------------------------------------------------------------------------
// Density equation

/// `Ϝ = (c_P² - c_S²)(c_P² - 4c_S²)/(c_P⁴ - 5c_P²c_S² + 8c_S⁴)`, evaluated in
/// Lamé form `(λ+μ)(λ-2μ)/(λ² - λμ + 2μ²)` so that it vanishes exactly at `λ = 2μ`.
pub fn ellipticity_factor(p: &Params) -> f64 {
    let (l, m) = (p.lambda, p.mu);
    (l + m) * (l - 2.0 * m) / (l * l - l * m + 2.0 * m * m)
}

/// `c_P⁴ - 5c_P²c_S² + 8c_S⁴`.
pub fn ellipticity_denominator(cp: f64, cs: f64) -> f64 {
    let (a, b) = (cp * cp, cs * cs);
    a * a - 5.0 * a * b + 8.0 * b * b
}

/// `|c_P - 2c_S|/c_S` below which a point counts as lying on `𝒟`.
pub const NEAR_D_TOL: f64 = 1e-6;

/// Uniform 3-D sample grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    pub origin: Vector3<f64>,
    pub spacing: f64,
    pub counts: [usize; 3],
}

impl Grid3 {
    pub fn points(&self) -> Vec<Vector3<f64>> {
        let mut out = Vec::with_capacity(self.counts.iter().product());
        for i in 0..self.counts[0] {
            for j in 0..self.counts[1] {
                for k in 0..self.counts[2] {
                    out.push(self.origin + Vector3::new(i as f64, j as f64, k as f64) * self.spacing);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticitySample {
    pub x: [f64; 3],
    pub factor: f64,
    pub denominator: f64,
    pub in_d: bool,
}

/// `Ϝ` and the `𝒟` flag at every grid point inside the medium.
pub fn ellipticity_map(medium: &ElasticMedium, grid: &Grid3) -> Result<Vec<EllipticitySample>> {
    let mut out = Vec::new();
    for x in grid.points() {
        let Ok(p) = medium.eval_params(&x, None) else { continue };
        let (cp, cs) = (p.cp(), p.cs());
        let denominator = ellipticity_denominator(cp, cs);
        if !(denominator > 0.0) {
            return Err(Error::NonPhysical { point: arr(&x), reason: format!("ellipticity denominator {denominator}") });
        }
        out.push(EllipticitySample {
            x: arr(&x),
            factor: ellipticity_factor(&p),
            denominator,
            in_d: (cp - 2.0 * cs).abs() / cs < NEAR_D_TOL,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeResidualReport {
    pub grid: Grid3,
    pub points: Vec<[f64; 3]>,
    pub residual: Vec<f64>,
    pub factor: Vec<f64>,
    /// `|c_P - 2c_S|/c_S` per point.
    pub distance_to_d: Vec<f64>,
    pub sup_norm: f64,
    /// Grid points whose stencil leaves the region of the point.
    pub dropped: usize,
    /// True when `ρ̃` equals `ρ` and no stencil was evaluated.
    pub short_circuit: bool,
}

/// `Ϝ Δ²L - Δ(∇log(ρρ̃)·∇L)` with `L = log(ρ/ρ̃)`. `ΔL` and the inner
/// product are analytic; the outer Laplacians use the fourth-order stencil
/// `(-f₋₂ + 16f₋₁ - 30f₀ + 16f₁ - f₂)/(12h²)` per axis, `h` = grid spacing.
pub fn pde_residual(medium: &ElasticMedium, rho_tilde: &AnalyticField, grid: &Grid3) -> Result<PdeResidualReport> {
    let mut rep = PdeResidualReport {
        grid: *grid,
        points: Vec::new(),
        residual: Vec::new(),
        factor: Vec::new(),
        distance_to_d: Vec::new(),
        sup_norm: 0.0,
        dropped: 0,
        short_circuit: false,
    };
    let mut near = Vec::new();
    let h = grid.spacing;
    for x in grid.points() {
        let r = medium.region_at(&x, None)?;
        let region = &medium.regions[r];
        let p = region.params(&x);
        let dist = (p.cp() - 2.0 * p.cs()).abs() / p.cs();
        if dist < NEAR_D_TOL {
            near.push(x);
            continue;
        }
        let rt = rho_tilde.value(&x);
        if !(rt > 0.0) {
            return Err(Error::NonPhysical { point: arr(&x), reason: format!("ρ̃ = {rt} must be positive") });
        }
        let factor = ellipticity_factor(&p);
        let residual = if region.rho == *rho_tilde {
            rep.short_circuit = true;
            0.0
        } else {
            let stencil_ok = (0..3).all(|axis| {
                [-2.0, -1.0, 1.0, 2.0].iter().all(|&k| {
                    let mut y = x;
                    y[axis] += k * h;
                    medium.region_at(&y, None).map_or(false, |ry| ry == r)
                })
            });
            if !stencil_ok {
                rep.dropped += 1;
                continue;
            }
            let lap_l = |y: &Vector3<f64>| {
                let a = region.rho.jet(y).log_hessian().trace();
                let b = rho_tilde.jet(y).log_hessian().trace();
                a - b
            };
            let inner = |y: &Vector3<f64>| {
                let ga = region.rho.jet(y).log_gradient();
                let gb = rho_tilde.jet(y).log_gradient();
                (ga + gb).dot(&(ga - gb))
            };
            factor * laplacian4(&lap_l, &x, h) - laplacian4(&inner, &x, h)
        };
        rep.points.push(arr(&x));
        rep.residual.push(residual);
        rep.factor.push(factor);
        rep.distance_to_d.push(dist);
        rep.sup_norm = rep.sup_norm.max(residual.abs());
    }
    if let Some(first) = near.first() {
        return Err(Error::NearD { point: arr(first), count: near.len() });
    }
    Ok(rep)
}

fn laplacian4(f: &dyn Fn(&Vector3<f64>) -> f64, x: &Vector3<f64>, h: f64) -> f64 {
    let f0 = f(x);
    let mut sum = 0.0;
    for axis in 0..3 {
        let at = |k: f64| {
            let mut y = *x;
            y[axis] += k * h;
            f(&y)
        };
        sum += -at(-2.0) + 16.0 * at(-1.0) - 30.0 * f0 + 16.0 * at(1.0) - at(2.0);
    }
    sum / (12.0 * h * h)
}

// ---------------------------------------------------------------------------
// Lens comparison

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LensMismatch {
    pub index: usize,
    pub travel_time_a: Option<f64>,
    pub travel_time_b: Option<f64>,
    /// `l_A - l_B`.
    pub travel_time_diff: Option<f64>,
    /// `|x_A - x_B| + |ξ_A - ξ_B|` at exit.
    pub exit_mismatch: Option<f64>,
    pub error: Option<String>,
}

/// Compares the lens data of two media on a sweep of inward covectors on `κ = q`.
pub fn lens_match_check(
    a: &ElasticMedium,
    b: &ElasticMedium,
    sweep: &[(Vector3<f64>, Vector3<f64>)],
    q: f64,
    mode: Mode,
    limits: &TraceLimits,
) -> Vec<LensMismatch> {
    sweep
        .iter()
        .enumerate()
        .map(|(index, (x, xi))| {
            let ra = travel_time_and_lens(a, x, xi, mode, q, limits);
            let rb = travel_time_and_lens(b, x, xi, mode, q, limits);
            let error = match (&ra, &rb) {
                (Err(e), _) => Some(format!("A: {e}")),
                (_, Err(e)) => Some(format!("B: {e}")),
                _ => None,
            };
            let (ta, tb) = (ra.as_ref().ok().map(|r| r.travel_time), rb.as_ref().ok().map(|r| r.travel_time));
            let (diff, exit) = match (&ra, &rb) {
                (Ok(p), Ok(r)) => (
                    Some(p.travel_time - r.travel_time),
                    Some((p.exit_x - r.exit_x).norm() + (p.exit_xi - r.exit_xi).norm()),
                ),
                _ => (None, None),
            };
            LensMismatch { index, travel_time_a: ta, travel_time_b: tb, travel_time_diff: diff, exit_mismatch: exit, error }
        })
        .collect()
}

/// Retraces from the exit point with reversed covector and returns
/// `(|l - l_rev|, |x_start - x_rev_exit|)`.
pub fn lens_reversal_defect(
    medium: &ElasticMedium,
    x: &Vector3<f64>,
    xi: &Vector3<f64>,
    mode: Mode,
    q: f64,
    limits: &TraceLimits,
) -> Result<(f64, f64)> {
    let fwd = travel_time_and_lens(medium, x, xi, mode, q, limits)?;
    let back = travel_time_and_lens(medium, &fwd.exit_x, &(-fwd.exit_xi), mode, q, limits)?;
    Ok(((fwd.travel_time - back.travel_time).abs(), (back.exit_x - x).norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::Bounds;
    use crate::raytrace::{trace_broken_ray, BranchPolicy, PhasePoint};

    fn straight_ray(m: &ElasticMedium, x: Vector3<f64>, d: Vector3<f64>, len: f64) -> BrokenRay {
        let start = PhasePoint::launch(m, x, d, Mode::P, None).unwrap();
        let limits = TraceLimits { max_s: len, ..TraceLimits::default() };
        trace_broken_ray(m, &start, None, &BranchPolicy::PurelyTransmitted, &limits).unwrap()
    }

    #[test]
    fn constant_tensor_gives_length() {
        let m = ElasticMedium::homogeneous(1.0, 1.0, 1.0);
        let ray = straight_ray(&m, Vector3::zeros(), Vector3::new(1.0, 1.0, 0.0), 2.5);
        let c = AnalyticField::constant(3f64.sqrt());
        let z = AnalyticField::constant(0.0);
        let a = TensorField2::entries([c.clone(), z.clone(), z.clone(), c.clone(), z, c]);
        assert!((ray_transform_2tensor(&m, &ray, &a, 1e-9) - 2.5).abs() < 1e-9);
        assert_eq!(ray_transform_2tensor(&m, &ray, &TensorField2::zero(), 1e-9), 0.0);
    }

    #[test]
    fn identity_field_has_identity_strain() {
        let v = [
            AnalyticField::affine(0.0, Vector3::x()),
            AnalyticField::affine(0.0, Vector3::y()),
            AnalyticField::affine(0.0, Vector3::z()),
        ];
        let r = Region::homogeneous(1.0, 1.0, 1.0);
        let e = symmetrized_gradient_tensor(v).eval(&Vector3::new(0.3, -1.0, 2.0), &r);
        assert_eq!(e, Matrix3::identity());
    }

    #[test]
    fn gauge_identity_in_graded_medium() {
        let mut m = ElasticMedium::homogeneous(1.0, 1.0, 1.0);
        m.regions[0].mu = AnalyticField::affine(1.0, Vector3::new(0.1, -0.05, 0.2));
        let ray = straight_ray(&m, Vector3::new(-0.5, 0.0, -1.0), Vector3::new(0.3, 0.2, 1.0), 2.0);
        let v = [
            AnalyticField::gaussian_bump(Vector3::new(0.0, 0.1, 0.0), 1.0, 0.5),
            AnalyticField::affine(0.2, Vector3::new(0.0, 0.0, 1.0)),
            AnalyticField::gaussian_bump(Vector3::new(-0.3, 0.0, 0.2), -0.7, 0.4),
        ];
        let lhs = ray_transform_2tensor(&m, &ray, &TensorField2::GaugePotential(Box::new(v.clone())), 1e-10);
        let rhs = gauge_boundary_term(&ray, &v);
        assert!((lhs - rhs).abs() < 1e-7, "{lhs} vs {rhs}");
        // the Euclidean strain alone is not a potential here
        let plain = ray_transform_2tensor(&m, &ray, &symmetrized_gradient_tensor(v), 1e-10);
        assert!((plain - rhs).abs() > 1e-4);
    }

    #[test]
    fn poisson_solid_factor_is_minus_one() {
        let f = ellipticity_factor(&Params { lambda: 1.3, mu: 1.3, rho: 2.0 });
        assert!((f + 1.0).abs() < 1e-15);
        let f = ellipticity_factor(&Params { lambda: 2.0, mu: 1.0, rho: 1.0 });
        assert_eq!(f, 0.0);
        let f = ellipticity_factor(&Params { lambda: 1e8, mu: 1.0, rho: 1.0 });
        assert!((f - 1.0).abs() < 1e-7);
    }

    #[test]
    fn residual_vanishes_for_linear_log_ratio() {
        let mut m = ElasticMedium::homogeneous(1.0, 1.0, 1.0);
        // ρ = exp(0.2 z²), log(ρ̃/ρ) = 0.1 + 0.4 x: gradients are orthogonal
        m.regions[0].rho = AnalyticField::Exp(Box::new(AnalyticField::Product(vec![
            AnalyticField::affine(0.0, Vector3::z()),
            AnalyticField::affine(0.0, Vector3::z() * 0.2),
        ])));
        let rho_t = AnalyticField::Product(vec![
            m.regions[0].rho.clone(),
            AnalyticField::Exp(Box::new(AnalyticField::affine(0.1, Vector3::new(0.4, 0.0, 0.0)))),
        ]);
        let grid = Grid3 { origin: Vector3::new(-0.5, -0.5, -0.5), spacing: 0.1, counts: [6, 6, 6] };
        let rep = pde_residual(&m, &rho_t, &grid).unwrap();
        assert!(rep.sup_norm < 1e-8, "{}", rep.sup_norm);
        let same = pde_residual(&m, &m.regions[0].rho.clone(), &grid).unwrap();
        assert!(same.short_circuit && same.sup_norm == 0.0);
    }

    #[test]
    fn near_d_is_reported() {
        let m = ElasticMedium::homogeneous(2.0, 1.0, 1.0);
        let grid = Grid3 { origin: Vector3::zeros(), spacing: 0.1, counts: [2, 2, 2] };
        let err = pde_residual(&m, &AnalyticField::constant(2.0), &grid).unwrap_err();
        assert!(matches!(err, Error::NearD { count: 8, .. }));
        let map = ellipticity_map(&m, &grid).unwrap();
        assert!(map.iter().all(|s| s.in_d && s.factor == 0.0));
    }

    #[test]
    fn identical_media_have_identical_lens_data() {
        let mut m = ElasticMedium::homogeneous(1.0, 1.0, 1.0);
        m.foliation = Some(AnalyticField::radial(Vector3::zeros(), vec![1.0, 0.0, -1.0]));
        m.bounds = Some(Bounds::cube(2.0));
        let sweep: Vec<_> = (0..5)
            .map(|k| {
                let a = 0.2 + 0.2 * k as f64;
                (Vector3::new(0.0, 0.0, -1.0), Vector3::new(a.sin(), 0.0, a.cos()))
            })
            .collect();
        let rows = lens_match_check(&m, &m.clone(), &sweep, 0.0, Mode::P, &TraceLimits::default());
        assert!(rows.iter().all(|r| r.travel_time_diff.unwrap().abs() < 1e-12));
        let (dt, dx) = lens_reversal_defect(&m, &sweep[2].0, &sweep[2].1, Mode::P, 0.0, &TraceLimits::default()).unwrap();
        assert!(dt < 1e-8 && dx < 1e-8);
    }
}
