use std::f64::consts::PI;

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::distribution::{fio_propagate_constant_speed, pair_packet, pair_with, Distribution};
use crate::grid::{Grid, Point};
use crate::operator::Multiplier;
use crate::packet::{Envelope, WavePacket};
use crate::{Error, Result};

const EXACT_TOL: f64 = 1e-11;

/// Least-squares line through (log tau, log |value|).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogFit {
    pub slope: f64,
    pub intercept: f64,
    /// Two standard errors of the slope.
    pub half_width: f64,
    pub residuals: Vec<f64>,
}

pub fn fit_log_log(taus: &[f64], mags: &[f64]) -> LogFit {
    let xs: Vec<f64> = taus.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = mags.iter().map(|m| m.max(1e-300).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - intercept - slope * x).collect();
    let ssr: f64 = residuals.iter().map(|r| r * r).sum();
    let half_width = if xs.len() > 2 {
        2.0 * (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    LogFit {
        slope,
        intercept,
        half_width,
        residuals,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimate {
    pub taus: Vec<f64>,
    pub pairings: Vec<C>,
    pub order: f64,
    pub half_width: f64,
    pub residuals: Vec<f64>,
}

fn check_ladder(ladder: &[f64]) -> Result<()> {
    if ladder.len() < 4 {
        return Err(Error::Invalid("ladder needs at least 4 rungs".into()));
    }
    if ladder.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::Invalid("ladder entries must be positive".into()));
    }
    Ok(())
}

fn order_from(taus: &[f64], pairings: Vec<C>) -> Result<OrderEstimate> {
    let mags: Vec<f64> = pairings.iter().map(|p| p.norm()).collect();
    if mags.iter().all(|m| *m < 1e-300) {
        return Err(Error::ZeroPairing);
    }
    let fit = fit_log_log(taus, &mags);
    Ok(OrderEstimate {
        taus: taus.to_vec(),
        pairings,
        order: fit.slope,
        half_width: fit.half_width,
        residuals: fit.residuals,
    })
}

pub fn estimate_order(g: &Distribution, p: &WavePacket, ladder: &[f64], grid: &Grid) -> Result<OrderEstimate> {
    check_ladder(ladder)?;
    let pairings = ladder
        .iter()
        .map(|&t| pair_packet(g, p, t, grid))
        .collect::<Result<Vec<_>>>()?;
    order_from(ladder, pairings)
}

/// Smallest power-of-two grid centered on the packet that resolves every rung
/// and keeps the quarter-window margin, allowing for a transport of the
/// support by `displacement`.
pub fn fit_grid(p: &WavePacket, ladder: &[f64], displacement: Point) -> Result<Grid> {
    p.validate()?;
    let tmin = ladder.iter().cloned().fold(f64::INFINITY, f64::min);
    let tmax = ladder.iter().cloned().fold(0.0, f64::max);
    let c = p.support_center(tmin);
    let center = [c[0] + 0.5 * displacement[0], c[1] + 0.5 * displacement[1]];
    let reach = p.support_radius(tmin) + 0.5 * displacement[0].hypot(displacement[1]);
    let length = 4.2 * reach;
    let kmax = p.xi0[..p.dim].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sigma = match p.envelope {
        Envelope::Gaussian { sigma, .. } | Envelope::Hermite { sigma, .. } => sigma,
    };
    let h = (2.0 * PI / (8.5 * tmax * kmax)).min(sigma / (2.5 * tmax.sqrt()));
    let size = ((length / h).ceil() as usize).next_power_of_two().max(64);
    if size.pow(p.dim as u32) > 1 << 24 {
        return Err(Error::Invalid(format!(
            "resolving tau = {tmax} needs {size} points per axis"
        )));
    }
    Grid::new(p.dim, center, length, size)
}

fn fitted_slope(taus: &[f64], devs: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = taus
        .iter()
        .zip(devs)
        .filter(|(_, d)| **d > 0.0)
        .map(|(t, d)| (*t, *d))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let (t, d): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Some(fit_log_log(&t, &d).slope)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolLawReport {
    pub taus: Vec<f64>,
    pub ratios: Vec<C>,
    pub deviations: Vec<f64>,
    pub slope: Option<f64>,
    pub exact: bool,
    pub passed: bool,
}

/// ratio = <(Pg)^tau, u> / (p_m(tau xi0) <g^tau, u>) for a multiplier P.
pub fn verify_psido_symbol_law(
    g: &Distribution,
    p: &WavePacket,
    op: &Multiplier,
    ladder: &[f64],
    grid: &Grid,
) -> Result<SymbolLawReport> {
    check_ladder(ladder)?;
    let pg = g.clone().applied(op.clone());
    let mut ratios = Vec::with_capacity(ladder.len());
    for &tau in ladder {
        let num = pair_packet(&pg, p, tau, grid)?;
        let den = pair_packet(g, p, tau, grid)?;
        let sym = op.principal([tau * p.xi0[0], tau * p.xi0[1]]);
        if den.norm() < 1e-300 || sym.norm() == 0.0 {
            return Err(Error::ZeroPairing);
        }
        ratios.push(num / (sym * den));
    }
    let deviations: Vec<f64> = ratios.iter().map(|r| (r - 1.0).norm()).collect();
    let exact = deviations.iter().all(|d| *d < EXACT_TOL);
    let slope = if exact { None } else { fitted_slope(ladder, &deviations) };
    let passed = exact || slope.is_some_and(|s| s <= -0.4);
    Ok(SymbolLawReport {
        taus: ladder.to_vec(),
        ratios,
        deviations,
        slope,
        exact,
        passed,
    })
}

/// Diffeomorphisms of the plane (or line) used for the pullback law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diffeo {
    Affine { matrix: [[f64; 2]; 2], shift: Point },
    /// x + eps x^2 on the line; (x + eps x^2, y + eps x y) on the plane.
    Quadratic { eps: f64 },
}

impl Diffeo {
    pub fn identity() -> Self {
        Diffeo::Affine {
            matrix: [[1.0, 0.0], [0.0, 1.0]],
            shift: [0.0, 0.0],
        }
    }

    pub fn apply(&self, x: Point, dim: usize) -> Point {
        match *self {
            Diffeo::Affine { matrix: a, shift } => {
                if dim == 1 {
                    [a[0][0] * x[0] + shift[0], 0.0]
                } else {
                    [
                        a[0][0] * x[0] + a[0][1] * x[1] + shift[0],
                        a[1][0] * x[0] + a[1][1] * x[1] + shift[1],
                    ]
                }
            }
            Diffeo::Quadratic { eps } => {
                if dim == 1 {
                    [x[0] + eps * x[0] * x[0], 0.0]
                } else {
                    [x[0] + eps * x[0] * x[0], x[1] + eps * x[0] * x[1]]
                }
            }
        }
    }

    pub fn jacobian(&self, x: Point, dim: usize) -> [[f64; 2]; 2] {
        let j = match *self {
            Diffeo::Affine { matrix, .. } => matrix,
            Diffeo::Quadratic { eps } => [
                [1.0 + 2.0 * eps * x[0], 0.0],
                [eps * x[1], 1.0 + eps * x[0]],
            ],
        };
        if dim == 1 {
            [[j[0][0], 0.0], [0.0, 1.0]]
        } else {
            j
        }
    }

    /// Inverse by Newton iteration from y; None where it does not converge
    /// or the Jacobian degenerates.
    pub fn inverse(&self, y: Point, dim: usize) -> Option<Point> {
        let mut x = y;
        for _ in 0..60 {
            let f = self.apply(x, dim);
            let r = [f[0] - y[0], f[1] - y[1]];
            let (inv, det) = inverse2(self.jacobian(x, dim));
            if det <= 1e-12 {
                return None;
            }
            let dx = [
                inv[0][0] * r[0] + inv[0][1] * r[1],
                inv[1][0] * r[0] + inv[1][1] * r[1],
            ];
            x = [x[0] - dx[0], x[1] - dx[1]];
            if dx[0].abs() + dx[1].abs() < 1e-15 * (1.0 + x[0].abs() + x[1].abs()) {
                let f = self.apply(x, dim);
                return ((f[0] - y[0]).abs() + (f[1] - y[1]).abs() < 1e-12).then_some(x);
            }
        }
        None
    }
}

fn inverse2(m: [[f64; 2]; 2]) -> ([[f64; 2]; 2], f64) {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    (
        [
            [m[1][1] / det, -m[0][1] / det],
            [-m[1][0] / det, m[0][0] / det],
        ],
        det,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullbackReport {
    pub taus: Vec<f64>,
    /// pairing of g o theta with the packet at (x0, d theta^T eta0)
    pub lhs: Vec<C>,
    /// pairing of g with the packet linearized at y0
    pub rhs: Vec<C>,
    pub differences: Vec<f64>,
    pub leading_order: f64,
    pub difference_slope: Option<f64>,
    pub exact: bool,
    pub passed: bool,
}

/// Compares the exact change of variables against its linearization at x0.
/// Both sides are written as test functions in the y = theta(x) variables so
/// that g is only ever paired, never composed.
#[allow(clippy::too_many_arguments)]
pub fn verify_pullback_law(
    g: &Distribution,
    theta: &Diffeo,
    dim: usize,
    x0: Point,
    eta0: Point,
    envelope: &Envelope,
    ladder: &[f64],
    grid: &Grid,
) -> Result<PullbackReport> {
    check_ladder(ladder)?;
    let y0 = theta.apply(x0, dim);
    let (minv, det0) = inverse2(theta.jacobian(x0, dim));
    if det0.abs() < 1e-12 {
        return Err(Error::Invalid("d theta is singular at x0".into()));
    }
    let probe = WavePacket::new(dim, y0, eta0).with_envelope(envelope.clone());
    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    for &tau in ladder {
        probe.check(grid, tau, [0.0, 0.0])?;
        let s = tau.sqrt();
        let amp = tau.powf(0.5 * dim as f64);
        let carrier = |y: Point| {
            let d: f64 = (0..dim).map(|k| (y[k] - y0[k]) * eta0[k]).sum();
            C::from_polar(amp, -tau * d)
        };
        let exact = grid.sample(|y| match theta.inverse(y, dim) {
            Some(x) => {
                let (_, det) = inverse2(theta.jacobian(x, dim));
                let z = [s * (x[0] - x0[0]), s * (x[1] - x0[1])];
                carrier(y) * envelope.value(z, dim) / det.abs()
            }
            None => C::new(0.0, 0.0),
        });
        let linear = grid.sample(|y| {
            let d = [y[0] - y0[0], y[1] - y0[1]];
            let z = [
                s * (minv[0][0] * d[0] + minv[0][1] * d[1]),
                s * (minv[1][0] * d[0] + minv[1][1] * d[1]),
            ];
            carrier(y) * envelope.value(z, dim) / det0.abs()
        });
        lhs.push(pair_with(g, grid, &exact)?);
        rhs.push(pair_with(g, grid, &linear)?);
    }
    let leading = order_from(ladder, rhs.clone())?;
    let differences: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).norm()).collect();
    let exact = differences
        .iter()
        .zip(&rhs)
        .all(|(d, r)| *d <= 1e-10 * r.norm().max(1e-300));
    let difference_slope = if exact { None } else { fitted_slope(ladder, &differences) };
    let passed = exact || difference_slope.is_some_and(|s| s <= leading.order - 0.4);
    Ok(PullbackReport {
        taus: ladder.to_vec(),
        lhs,
        rhs,
        differences,
        leading_order: leading.order,
        difference_slope,
        exact,
        passed,
    })
}

/// Constant-speed half-wave propagator and the geometry of its canonical
/// graph: a covector xi0 at y0 is carried to y0 + sign t c xi0/|xi0|.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfWave {
    pub dim: usize,
    pub t: f64,
    pub c: f64,
    pub sign: f64,
}

impl HalfWave {
    pub fn displacement(&self, xi0: Point) -> Point {
        let r = xi0[0].hypot(if self.dim == 2 { xi0[1] } else { 0.0 });
        let s = self.sign * self.t * self.c / r;
        if self.dim == 1 {
            [s * xi0[0], 0.0]
        } else {
            [s * xi0[0], s * xi0[1]]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FioReport {
    pub taus: Vec<f64>,
    /// <Ag, u_tau> with the packet phase referred to y0
    pub pairings: Vec<C>,
    /// <g, u_tau> at (y0, xi0): the pairing of g o T^{-1} at the image point
    pub approximants: Vec<C>,
    /// pairings / (e^{-i sign t c tau |xi0|} approximants)
    pub constants: Vec<C>,
    pub limit: C,
    /// fitted modulus of the limit constant
    pub j_lambda: f64,
    pub phase_errors: Vec<f64>,
    pub deviation_slope: Option<f64>,
    pub exact: bool,
    pub converged: bool,
    pub phase_law_passed: bool,
    pub passed: bool,
}

fn propagator_packet(a: &HalfWave, y0: Point, xi0: Point, envelope: &Envelope) -> WavePacket {
    let d = a.displacement(xi0);
    WavePacket::new(a.dim, [y0[0] + d[0], y0[1] + d[1]], xi0)
        .with_envelope(envelope.clone())
        .with_phase_origin(y0)
}

#[allow(clippy::too_many_arguments)]
pub fn verify_fio_symbol_extraction(
    g: &Distribution,
    a: &HalfWave,
    y0: Point,
    xi0: Point,
    envelope: &Envelope,
    ladder: &[f64],
    grid: &Grid,
    phase_tol: f64,
) -> Result<FioReport> {
    check_ladder(ladder)?;
    let ag = fio_propagate_constant_speed(g, a.t, a.c, a.sign)?;
    let image = propagator_packet(a, y0, xi0, envelope);
    let source = WavePacket::new(a.dim, y0, xi0).with_envelope(envelope.clone());
    let speed = xi0[0].hypot(if a.dim == 2 { xi0[1] } else { 0.0 });
    let mut pairings = Vec::new();
    let mut approximants = Vec::new();
    let mut constants = Vec::new();
    for &tau in ladder {
        let num = pair_packet(&ag, &image, tau, grid)?;
        let den = pair_packet(g, &source, tau, grid)?;
        if den.norm() < 1e-300 {
            return Err(Error::ZeroPairing);
        }
        let phase = C::from_polar(1.0, -a.sign * a.t * a.c * tau * speed);
        pairings.push(num);
        approximants.push(den);
        constants.push(num / (phase * den));
    }
    let steps: Vec<f64> = constants.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let n = constants.len();
    let last = constants[n - 1];
    let exact = steps.iter().all(|s| *s <= EXACT_TOL * last.norm());
    let (limit, deviation_slope) = if exact {
        (last, None)
    } else {
        // Richardson step with the observed decay rate of successive changes
        let slope = fitted_slope(&ladder[1..], &steps);
        let rate = slope.map_or(0.5, |s| (-s).max(0.1));
        let q = (ladder[n - 1] / ladder[n - 2]).powf(rate);
        ((q * last - constants[n - 2]) / (q - 1.0), slope)
    };
    let phase_errors: Vec<f64> = constants.iter().map(|c| (c - limit).norm() / limit.norm()).collect();
    let converged = exact || deviation_slope.is_some_and(|s| s <= -0.4);
    let phase_law_passed = phase_errors.iter().all(|e| *e <= phase_tol);
    Ok(FioReport {
        taus: ladder.to_vec(),
        pairings,
        approximants,
        constants,
        limit,
        j_lambda: limit.norm(),
        phase_errors,
        deviation_slope,
        exact,
        converged,
        phase_law_passed,
        passed: converged && phase_law_passed,
    })
}

/// Pairings of Ag with packets displaced by `offset` from the canonical
/// graph image; no wavefront lies there.
#[allow(clippy::too_many_arguments)]
pub fn off_graph_order(
    g: &Distribution,
    a: &HalfWave,
    y0: Point,
    xi0: Point,
    offset: Point,
    envelope: &Envelope,
    ladder: &[f64],
    grid: &Grid,
) -> Result<OrderEstimate> {
    check_ladder(ladder)?;
    let ag = fio_propagate_constant_speed(g, a.t, a.c, a.sign)?;
    let mut p = propagator_packet(a, y0, xi0, envelope);
    p.x0 = [p.x0[0] + offset[0], p.x0[1] + offset[1]];
    let pairings = ladder
        .iter()
        .map(|&t| pair_packet(&ag, &p, t, grid))
        .collect::<Result<Vec<_>>>()?;
    order_from(ladder, pairings)
}
