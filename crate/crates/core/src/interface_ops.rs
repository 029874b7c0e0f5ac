//! Symbols of the elastic operator, mode projectors, traction, and the
//! reflection/transmission solve at an interface.
//!
//! Plane waves are `a e^{i(ξ·x - τt)}` with `τ = 1`. Polarizations use the
//! complex bilinear form `a·b = Σ a_i b_i`, so evanescent waves keep unit
//! "length" `e·e = 1`.
//!
//! Mode basis at an interface point with normal `ν` and tangential covector
//! `ξ_t`: `SH = ν × t̂` with `t̂ = ξ_t/|ξ_t|`, `P = c ξ`, `SV = SH × P`. The
//! triad `(P, SV, SH)` is right-handed and the P polarization points along
//! the propagation direction. At normal incidence `t̂` is taken from `ν`
//! and the coordinate axis least aligned with it.

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::medium::{ElasticMedium, Mode, Params, Side, SideHint};
use crate::raytrace::{BranchChoice, BranchKind};

pub type C = Complex64;
pub type CVec3 = Vector3<C>;
pub type CMat3 = Matrix3<C>;

/// Condition estimates above this reject the interface solve.
pub const MAX_CONDITION: f64 = 1e12;

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

pub fn complexify(v: &Vector3<f64>) -> CVec3 {
    v.map(c)
}

fn cmat(m: &Matrix3<f64>) -> CMat3 {
    m.map(c)
}

/// Bilinear (non-Hermitian) dot product.
pub fn bdot(a: &CVec3, b: &CVec3) -> C {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn bcross(a: &CVec3, b: &CVec3) -> CVec3 {
    CVec3::new(a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])
}

/// `(e_j ⊛ v)` acting as `w ↦ ½(e_j (v·w) + v w_j)`.
fn sym_outer(a: &Vector3<f64>, b: &Vector3<f64>) -> Matrix3<f64> {
    0.5 * (a * b.transpose() + b * a.transpose())
}

/// `p(x, τ, ξ) = -ρ[(τ² - c_S²|ξ|²) I - (c_P² - c_S²) ξ⊗ξ]`.
pub fn principal_symbol(p: &Params, tau: f64, xi: &Vector3<f64>) -> Matrix3<f64> {
    let (cp2, cs2) = (p.cp().powi(2), p.cs().powi(2));
    -p.rho * (Matrix3::identity() * (tau * tau - cs2 * xi.norm_squared()) - xi * xi.transpose() * (cp2 - cs2))
}

/// `p_1(x, ξ) = -i[∇λ⊗ξ + (∇μ·ξ) I + ξ⊗∇μ]`.
pub fn subprincipal_symbol(gl: &Vector3<f64>, gm: &Vector3<f64>, xi: &Vector3<f64>) -> CMat3 {
    let m = gl * xi.transpose() + Matrix3::identity() * gm.dot(xi) + xi * gm.transpose();
    cmat(&m) * C::new(0.0, -1.0)
}

/// Derivatives of the full symbol with respect to `(τ, ξ)`.
#[derive(Debug, Clone)]
pub struct SymbolDerivatives {
    pub d_tau: Matrix3<f64>,
    pub d_xi: [Matrix3<f64>; 3],
    pub d_tau_tau: Matrix3<f64>,
    /// `∂²p/∂ξ_j∂ξ_k`; the mixed `τ, ξ` derivatives vanish.
    pub d_xi_xi: [[Matrix3<f64>; 3]; 3],
    /// `∂p_1/∂ξ_j`; `p_1` does not depend on `τ`.
    pub d_xi_p1: [CMat3; 3],
}

pub fn symbol_derivatives(p: &Params, gl: &Vector3<f64>, gm: &Vector3<f64>, tau: f64, xi: &Vector3<f64>) -> SymbolDerivatives {
    let (cp2, cs2) = (p.cp().powi(2), p.cs().powi(2));
    let e = [Vector3::x(), Vector3::y(), Vector3::z()];
    let rho = p.rho;
    let d_xi = std::array::from_fn(|j| 2.0 * rho * (Matrix3::identity() * (cs2 * xi[j]) + sym_outer(&e[j], xi) * (cp2 - cs2)));
    let d_xi_xi = std::array::from_fn(|j| {
        std::array::from_fn(|k| {
            let delta = if j == k { cs2 } else { 0.0 };
            2.0 * rho * (Matrix3::identity() * delta + sym_outer(&e[j], &e[k]) * (cp2 - cs2))
        })
    });
    let d_xi_p1 = std::array::from_fn(|j| {
        let m = gl * e[j].transpose() + Matrix3::identity() * gm[j] + e[j] * gm.transpose();
        cmat(&m) * C::new(0.0, -1.0)
    });
    SymbolDerivatives {
        d_tau: Matrix3::identity() * (-2.0 * rho * tau),
        d_xi,
        d_tau_tau: Matrix3::identity() * (-2.0 * rho),
        d_xi_xi,
        d_xi_p1,
    }
}

/// `(Π_P, Π_S)` with `Π_P = ξ̂⊗ξ̂` and `Π_S = I - Π_P`.
pub fn mode_projectors(xi: &Vector3<f64>) -> (Matrix3<f64>, Matrix3<f64>) {
    let n = xi.normalize();
    let pp = n * n.transpose();
    (pp, Matrix3::identity() - pp)
}

/// Orthogonal `V` (rows `ξ̂, e_1, e_2`) and the diagonal of `V p Vᵀ`.
pub fn diagonalize(p: &Params, tau: f64, xi: &Vector3<f64>) -> (Matrix3<f64>, Vector3<f64>) {
    let n = xi.normalize();
    let t = fallback_tangent(&n);
    let b = n.cross(&t);
    let v = Matrix3::from_rows(&[n.transpose(), t.transpose(), b.transpose()]);
    let k2 = xi.norm_squared();
    let pp = -p.rho * (tau * tau - p.cp().powi(2) * k2);
    let ps = -p.rho * (tau * tau - p.cs().powi(2) * k2);
    (v, Vector3::new(pp, ps, ps))
}

// unit vector orthogonal to n built from the axis least aligned with it
fn fallback_tangent(n: &Vector3<f64>) -> Vector3<f64> {
    let i = n.iamin();
    let mut a = Vector3::zeros();
    a[i] = 1.0;
    (a - n * n.dot(&a)).normalize()
}

/// Traction symbol `i[λ(ξ·a)ν + μ((ν·ξ)a + (ν·a)ξ)]`.
pub fn traction_symbol(p: &Params, xi: &CVec3, a: &CVec3, nu: &Vector3<f64>) -> CVec3 {
    let nu = complexify(nu);
    let v = nu * (c(p.lambda) * bdot(xi, a)) + (a * bdot(&nu, xi) + xi * bdot(&nu, a)) * c(p.mu);
    v * C::new(0.0, 1.0)
}

/// Neumann operator `(λ div ⊗ I + 2μ ∇̂) u · ν` for a displacement gradient
/// `du[(i, j)] = ∂_j u_i`.
pub fn neumann_operator(p: &Params, du: &CMat3, nu: &Vector3<f64>) -> CVec3 {
    let nu = complexify(nu);
    let div = du.trace();
    let sym = (du + du.transpose()) * c(0.5);
    nu * (div * c(p.lambda)) + sym * nu * c(2.0 * p.mu)
}

/// Mode basis `(P, SV, SH)` for a covector with unit bilinear length after scaling by `speed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationBasis {
    pub p: CVec3,
    pub sv: CVec3,
    pub sh: CVec3,
}

impl PolarizationBasis {
    pub fn get(&self, k: usize) -> CVec3 {
        [self.p, self.sv, self.sh][k]
    }
}

/// Tangent direction `t̂` used for the SH polarization.
pub fn interface_tangent(nu: &Vector3<f64>, xi_t: &Vector3<f64>) -> Vector3<f64> {
    if xi_t.norm() > 1e-12 * (1.0 + xi_t.norm()) {
        xi_t.normalize()
    } else {
        fallback_tangent(nu)
    }
}

pub fn polarization_basis(xi: &CVec3, speed: f64, nu: &Vector3<f64>, tangent: &Vector3<f64>) -> PolarizationBasis {
    let sh = complexify(&nu.cross(tangent));
    let p = xi * c(speed);
    let sv = bcross(&sh, &p);
    PolarizationBasis { p, sv, sh }
}

/// One plane wave taking part in the interface problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneWave {
    pub mode: Mode,
    pub side: Side,
    pub speed: f64,
    pub xi: CVec3,
    pub evanescent: bool,
    pub basis: PolarizationBasis,
}

/// Geometry of the interface problem at one point.
#[derive(Debug, Clone)]
pub struct InterfaceSetting {
    pub x: Vector3<f64>,
    pub nu: Vector3<f64>,
    pub tangent: Vector3<f64>,
    pub xi_t: Vector3<f64>,
    pub side_in: Side,
    pub params_in: Params,
    pub params_out: Params,
}

impl InterfaceSetting {
    pub fn new(medium: &ElasticMedium, x: &Vector3<f64>, interface: usize, xi_t: &Vector3<f64>, side_in: Side) -> Result<Self> {
        let nu = medium.interfaces[interface].normal(x)?;
        let xi_t = xi_t - nu * nu.dot(xi_t);
        let params_in = medium.eval_params(x, Some(SideHint { interface, side: side_in }))?;
        let params_out = medium.eval_params(x, Some(SideHint { interface, side: side_in.opposite() }))?;
        Ok(InterfaceSetting { x: *x, nu, tangent: interface_tangent(&nu, &xi_t), xi_t, side_in, params_in, params_out })
    }

    /// Setting built directly from the two parameter sets.
    pub fn from_params(nu: Vector3<f64>, xi_t: Vector3<f64>, side_in: Side, params_in: Params, params_out: Params) -> Self {
        let nu = nu.normalize();
        let xi_t = xi_t - nu * nu.dot(&xi_t);
        InterfaceSetting { x: Vector3::zeros(), nu, tangent: interface_tangent(&nu, &xi_t), xi_t, side_in, params_in, params_out }
    }

    fn params(&self, side: Side) -> &Params {
        if side == self.side_in {
            &self.params_in
        } else {
            &self.params_out
        }
    }

    /// Plane wave of `mode` on `side`, moving towards the interface when
    /// `incoming`, away from it otherwise.
    pub fn wave(&self, mode: Mode, side: Side, incoming: bool) -> PlaneWave {
        let speed = self.params(side).speed(mode);
        let rad = 1.0 / (speed * speed) - self.xi_t.norm_squared();
        let evanescent = rad * speed * speed <= crate::raytrace::EVANESCENT_TOL;
        // outgoing waves travel (or decay) into their own side
        let dir = if incoming { -side.sign() } else { side.sign() };
        let q = if evanescent { C::new(0.0, dir * (-rad).max(0.0).sqrt()) } else { c(dir * rad.sqrt()) };
        let xi = complexify(&self.xi_t) + complexify(&self.nu) * q;
        PlaneWave { mode, side, speed, xi, evanescent, basis: polarization_basis(&xi, speed, &self.nu, &self.tangent) }
    }

    pub fn traction(&self, w: &PlaneWave, a: &CVec3) -> CVec3 {
        traction_symbol(self.params(w.side), &w.xi, a, &self.nu)
    }

    /// The three outgoing waves on one side: `[P, S, S]` (SV then SH).
    fn outgoing(&self, side: Side) -> [(PlaneWave, usize); 3] {
        let p = self.wave(Mode::P, side, false);
        let s = self.wave(Mode::S, side, false);
        [(p, 0), (s, 1), (s, 2)]
    }

    /// The 6×6 transmission matrix; unknowns are `[R_P, R_SV, R_SH, T_P, T_SV, T_SH]`.
    pub fn system_matrix(&self) -> Matrix6<C> {
        let mut m = Matrix6::zeros();
        let refl = self.outgoing(self.side_in);
        let trans = self.outgoing(self.side_in.opposite());
        for (col, (w, k)) in refl.iter().chain(trans.iter()).enumerate() {
            let sign = if col < 3 { 1.0 } else { -1.0 };
            let e = w.basis.get(*k);
            let t = self.traction(w, &e);
            for r in 0..3 {
                m[(r, col)] = e[r] * sign;
                m[(r + 3, col)] = t[r] * sign;
            }
        }
        m
    }

    // traction rows are scaled to order one for the condition estimate
    fn row_scale(&self) -> f64 {
        let m = (self.params_in.lambda + 2.0 * self.params_in.mu).max(self.params_out.lambda + 2.0 * self.params_out.mu);
        let k = 1.0 / self.params_in.cs().min(self.params_out.cs());
        1.0 / (m * k)
    }
}

/// Amplitudes of the six outgoing waves for one incident wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfaceSolution {
    pub reflected: [C; 3],
    pub transmitted: [C; 3],
    pub condition: f64,
    /// Relative residual of displacement and traction continuity.
    pub continuity_residual: f64,
}

/// Solves the transmission conditions for a unit incident wave with
/// polarization index `k` (0 = P, 1 = SV, 2 = SH).
pub fn solve_interface_system(setting: &InterfaceSetting, k: usize) -> Result<InterfaceSolution> {
    let m = setting.system_matrix();
    let inc_mode = if k == 0 { Mode::P } else { Mode::S };
    let inc = setting.wave(inc_mode, setting.side_in, true);
    let e = inc.basis.get(k);
    let t = setting.traction(&inc, &e);
    let mut rhs = Vector6::zeros();
    for r in 0..3 {
        rhs[r] = -e[r];
        rhs[r + 3] = -t[r];
    }
    let mut scaled = m;
    let mut srhs = rhs;
    let sc = setting.row_scale();
    for r in 3..6 {
        for col in 0..6 {
            scaled[(r, col)] *= sc;
        }
        srhs[r] *= sc;
    }
    let sv = scaled.svd(false, false).singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularSystem { condition });
    }
    let sol = scaled.lu().solve(&srhs).ok_or(Error::SingularSystem { condition })?;
    let res = (m * sol - rhs).norm() / rhs.norm();
    Ok(InterfaceSolution {
        reflected: [sol[0], sol[1], sol[2]],
        transmitted: [sol[3], sol[4], sol[5]],
        condition,
        continuity_residual: res,
    })
}

/// Reflection and transmission operators at one interface point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RTMatrices {
    /// Column `k`: outgoing `(P, SV, SH)` amplitudes for unit incident wave `k`.
    pub modal_r: CMat3,
    pub modal_t: CMat3,
    /// Trace maps on displacement vectors: `u_R = M_R u_I`, `u_T = M_T u_I`.
    pub m_r: CMat3,
    pub m_t: CMat3,
    pub condition: f64,
    /// Incident columns whose incident wave is itself evanescent.
    pub incident_evanescent: [bool; 3],
    pub reflected_waves: [PlaneWave; 2],
    pub transmitted_waves: [PlaneWave; 2],
}

impl RTMatrices {
    /// Modal amplitude for an outgoing branch given an incident index.
    pub fn coefficient(&self, kind: BranchKind, out: usize, incident: usize) -> C {
        match kind {
            BranchKind::R => self.modal_r[(out, incident)],
            BranchKind::T => self.modal_t[(out, incident)],
        }
    }

    pub fn outgoing_wave(&self, choice: BranchChoice) -> &PlaneWave {
        let w = match choice.kind {
            BranchKind::R => &self.reflected_waves,
            BranchKind::T => &self.transmitted_waves,
        };
        &w[if choice.mode == Mode::P { 0 } else { 1 }]
    }
}

pub fn rt_matrices(setting: &InterfaceSetting) -> Result<RTMatrices> {
    let mut modal_r = CMat3::zeros();
    let mut modal_t = CMat3::zeros();
    let mut condition: f64 = 0.0;
    let mut incident_evanescent = [false; 3];
    for k in 0..3 {
        let sol = solve_interface_system(setting, k)?;
        condition = condition.max(sol.condition);
        for r in 0..3 {
            modal_r[(r, k)] = sol.reflected[r];
            modal_t[(r, k)] = sol.transmitted[r];
        }
        let mode = if k == 0 { Mode::P } else { Mode::S };
        incident_evanescent[k] = setting.wave(mode, setting.side_in, true).evanescent;
    }
    let basis_matrix = |p: &PlaneWave, s: &PlaneWave| CMat3::from_columns(&[p.basis.p, s.basis.sv, s.basis.sh]);
    let ip = setting.wave(Mode::P, setting.side_in, true);
    let is = setting.wave(Mode::S, setting.side_in, true);
    let rp = setting.wave(Mode::P, setting.side_in, false);
    let rs = setting.wave(Mode::S, setting.side_in, false);
    let tp = setting.wave(Mode::P, setting.side_in.opposite(), false);
    let ts = setting.wave(Mode::S, setting.side_in.opposite(), false);
    let e_inv = basis_matrix(&ip, &is)
        .try_inverse()
        .ok_or(Error::SingularSystem { condition: f64::INFINITY })?;
    Ok(RTMatrices {
        m_r: basis_matrix(&rp, &rs) * modal_r * e_inv,
        m_t: basis_matrix(&tp, &ts) * modal_t * e_inv,
        modal_r,
        modal_t,
        condition,
        incident_evanescent,
        reflected_waves: [rp, rs],
        transmitted_waves: [tp, ts],
    })
}

/// Relative imbalance of the normal energy flux for incident wave `k`;
/// evanescent waves carry no normal flux.
pub fn energy_flux_residual(setting: &InterfaceSetting, k: usize, sol: &InterfaceSolution) -> f64 {
    let flux = |w: &PlaneWave, amp: C| -> f64 {
        if w.evanescent {
            return 0.0;
        }
        let p = setting.params(w.side);
        let cos = w.xi.dot(&complexify(&setting.nu)).re.abs() * w.speed;
        p.rho * w.speed * amp.norm_sqr() * cos
    };
    let inc_mode = if k == 0 { Mode::P } else { Mode::S };
    let inc = setting.wave(inc_mode, setting.side_in, true);
    let f_in = flux(&inc, c(1.0));
    let refl = setting.outgoing(setting.side_in);
    let trans = setting.outgoing(setting.side_in.opposite());
    let f_out: f64 = refl.iter().zip(sol.reflected.iter()).map(|((w, _), a)| flux(w, *a)).sum::<f64>()
        + trans.iter().zip(sol.transmitted.iter()).map(|((w, _), a)| flux(w, *a)).sum::<f64>();
    (f_out - f_in).abs() / f_in
}

/// Independent plug-back check: rebuilds the total displacement and traction
/// on each side from the amplitudes and returns the relative jump.
pub fn continuity_residual(setting: &InterfaceSetting, k: usize, sol: &InterfaceSolution) -> f64 {
    let inc_mode = if k == 0 { Mode::P } else { Mode::S };
    let inc = setting.wave(inc_mode, setting.side_in, true);
    let e_inc = inc.basis.get(k);
    let mut u_in = e_inc;
    let mut t_in = setting.traction(&inc, &e_inc);
    let scale = u_in.norm() + t_in.norm();
    for ((w, idx), a) in setting.outgoing(setting.side_in).iter().zip(sol.reflected.iter()) {
        let e = w.basis.get(*idx) * *a;
        u_in += e;
        t_in += setting.traction(w, &e);
    }
    let mut u_out = CVec3::zeros();
    let mut t_out = CVec3::zeros();
    for ((w, idx), a) in setting.outgoing(setting.side_in.opposite()).iter().zip(sol.transmitted.iter()) {
        let e = w.basis.get(*idx) * *a;
        u_out += e;
        t_out += setting.traction(w, &e);
    }
    ((u_in - u_out).norm() + (t_in - t_out).norm()) / scale
}

/// Residual of `u_I + u_R = u_T`, `N_I u_I + N_R u_R = N_T u_T` when the
/// trace maps act on an arbitrary incident displacement vector `u`.
pub fn trace_map_residual(setting: &InterfaceSetting, rt: &RTMatrices, u: &CVec3) -> f64 {
    let ip = setting.wave(Mode::P, setting.side_in, true);
    let is = setting.wave(Mode::S, setting.side_in, true);
    let e = CMat3::from_columns(&[ip.basis.p, is.basis.sv, is.basis.sh]);
    let a = e.try_inverse().map(|ei| ei * u).unwrap_or_else(CVec3::zeros);
    let mut total = 0.0;
    let mut scale = 0.0;
    for k in 0..3 {
        if a[k].norm() == 0.0 {
            continue;
        }
        let col_r = rt.modal_r.column(k) * a[k];
        let col_t = rt.modal_t.column(k) * a[k];
        let sol = InterfaceSolution {
            reflected: [col_r[0], col_r[1], col_r[2]],
            transmitted: [col_t[0], col_t[1], col_t[2]],
            condition: rt.condition,
            continuity_residual: 0.0,
        };
        total += continuity_residual(setting, k, &sol) * a[k].norm();
        scale += a[k].norm();
    }
    let u_r = rt.m_r * u;
    let u_t = rt.m_t * u;
    let direct = (u + u_r - u_t).norm() / u.norm();
    total / scale.max(f64::MIN_POSITIVE) + direct
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lambda: f64, mu: f64, rho: f64) -> Params {
        Params { lambda, mu, rho }
    }

    #[test]
    fn symbol_derivatives_match_finite_differences() {
        let p = params(2.0, 1.3, 1.7);
        let xi = Vector3::new(0.3, -0.4, 0.5);
        let tau = 0.9;
        let d = symbol_derivatives(&p, &Vector3::zeros(), &Vector3::zeros(), tau, &xi);
        let h = 1e-6;
        let fd_tau = (principal_symbol(&p, tau + h, &xi) - principal_symbol(&p, tau - h, &xi)) / (2.0 * h);
        assert!((fd_tau - d.d_tau).norm() < 1e-6);
        for j in 0..3 {
            let mut e = Vector3::zeros();
            e[j] = h;
            let fd = (principal_symbol(&p, tau, &(xi + e)) - principal_symbol(&p, tau, &(xi - e))) / (2.0 * h);
            assert!((fd - d.d_xi[j]).norm() < 1e-6);
            for k in 0..3 {
                let mut f = Vector3::zeros();
                f[k] = 1e-4;
                let d1 = symbol_derivatives(&p, &Vector3::zeros(), &Vector3::zeros(), tau, &(xi + f)).d_xi[j];
                let d0 = symbol_derivatives(&p, &Vector3::zeros(), &Vector3::zeros(), tau, &(xi - f)).d_xi[j];
                assert!(((d1 - d0) / 2e-4 - d.d_xi_xi[j][k]).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn diagonalization() {
        let p = params(2.0, 1.0, 1.0);
        let xi = Vector3::new(1.0, 2.0, -0.5);
        let (v, d) = diagonalize(&p, 1.3, &xi);
        let diag = v * principal_symbol(&p, 1.3, &xi) * v.transpose();
        assert!((diag - Matrix3::from_diagonal(&d)).norm() < 1e-12);
        assert!((v * v.transpose() - Matrix3::identity()).norm() < 1e-14);
        let (pp, ps) = mode_projectors(&xi);
        assert!((pp * pp - pp).norm() < 1e-14 && (pp * ps).norm() < 1e-14);
    }

    #[test]
    fn traction_matches_neumann_on_plane_wave() {
        let p = params(1.5, 0.7, 1.0);
        let xi = CVec3::new(c(0.3), c(0.1), C::new(0.2, 0.4));
        let a = CVec3::new(C::new(1.0, 0.5), c(-0.2), c(0.3));
        let nu = Vector3::new(0.0, 0.6, 0.8);
        // gradient of a e^{iξ·x} at x = 0: ∂_j u_i = i a_i ξ_j
        let du = a * xi.transpose() * C::new(0.0, 1.0);
        let n = neumann_operator(&p, &du, &nu);
        assert!((n - traction_symbol(&p, &xi, &a, &nu)).norm() < 1e-14);
    }

    #[test]
    fn normal_incidence_impedance() {
        let (p1, p2) = (params(1.0, 1.0, 1.0), params(3.0, 2.0, 2.5));
        let s = InterfaceSetting::from_params(Vector3::z(), Vector3::zeros(), Side::Minus, p1, p2);
        let rt = rt_matrices(&s).unwrap();
        let (z1, z2) = (p1.rho * p1.cp(), p2.rho * p2.cp());
        let nu = complexify(&Vector3::z());
        let ur = rt.m_r * nu;
        let ut = rt.m_t * nu;
        assert!((ur[2] - c((z1 - z2) / (z1 + z2))).norm() < 1e-12);
        assert!((ut[2] - c(2.0 * z1 / (z1 + z2))).norm() < 1e-12);
    }

    #[test]
    fn identical_media_transmit_everything() {
        let p = params(1.2, 0.8, 1.1);
        let s = InterfaceSetting::from_params(Vector3::new(0.1, 0.2, 1.0), Vector3::new(0.2, -0.1, 0.0), Side::Plus, p, p);
        let rt = rt_matrices(&s).unwrap();
        assert!(rt.m_r.norm() < 1e-12);
        assert!((rt.m_t - CMat3::identity()).norm() < 1e-12);
    }
}
