use std::f64::consts::PI;

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::grid::{Grid, Point};
use crate::operator::Multiplier;
use crate::packet::{Envelope, WavePacket};
use crate::{Error, Result};

/// Grid samples of a distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledDistribution {
    pub grid: Grid,
    pub values: Vec<C>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpProfile {
    pub center: Point,
    pub width: f64,
}

/// Distributions known either by an analytic descriptor or by samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    PointMass {
        at: Point,
        weight: C,
    },
    /// weight * d/dx_axis of the point mass
    PointMassDerivative {
        at: Point,
        axis: usize,
        weight: C,
    },
    Gaussian {
        center: Point,
        width: f64,
        amplitude: C,
    },
    PlaneWave {
        k: Point,
        amplitude: C,
    },
    /// amplitude * H(x_axis - at) * e^{i k.x} * profile(x): conormal to the
    /// hyperplane x_axis = at.
    Jump {
        axis: usize,
        at: f64,
        amplitude: C,
        #[serde(default)]
        modulation: Point,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        profile: Option<JumpProfile>,
    },
    Sampled(SampledDistribution),
    Scaled {
        factor: C,
        inner: Box<Distribution>,
    },
    Applied {
        op: Multiplier,
        inner: Box<Distribution>,
    },
}

fn dot(a: Point, b: Point, dim: usize) -> f64 {
    (0..dim).map(|k| a[k] * b[k]).sum()
}

fn gaussian(x: Point, c: Point, w: f64, dim: usize) -> f64 {
    let d = [x[0] - c[0], x[1] - c[1]];
    (-dot(d, d, dim) / (2.0 * w * w)).exp()
}

impl Distribution {
    pub fn scaled(self, factor: C) -> Distribution {
        Distribution::Scaled {
            factor,
            inner: Box::new(self),
        }
    }

    pub fn applied(self, op: Multiplier) -> Distribution {
        Distribution::Applied {
            op,
            inner: Box::new(self),
        }
    }

    /// Samples on `grid`. Point masses have no sampled form.
    pub fn sample(&self, grid: &Grid) -> Result<SampledDistribution> {
        let dim = grid.dim;
        let values = match self {
            Distribution::PointMass { .. } | Distribution::PointMassDerivative { .. } => {
                return Err(Error::Invalid("point masses cannot be sampled".into()))
            }
            Distribution::Gaussian {
                center,
                width,
                amplitude,
            } => grid.sample(|x| amplitude * gaussian(x, *center, *width, dim)),
            Distribution::PlaneWave { k, amplitude } => {
                grid.sample(|x| amplitude * C::from_polar(1.0, dot(*k, x, dim)))
            }
            Distribution::Jump { axis, at, .. } => grid.sample(|x| {
                if x[*axis] >= *at {
                    self.jump_smooth_part(x, dim)
                } else {
                    C::new(0.0, 0.0)
                }
            }),
            Distribution::Sampled(s) => {
                if &s.grid != grid {
                    return Err(Error::Invalid("sampled distribution lives on another grid".into()));
                }
                s.values.clone()
            }
            Distribution::Scaled { factor, inner } => {
                let mut v = inner.sample(grid)?.values;
                v.iter_mut().for_each(|a| *a *= factor);
                v
            }
            Distribution::Applied { op, inner } => {
                let v = inner.sample(grid)?.values;
                grid.apply_multiplier(&v, |xi| op.symbol(xi))
            }
        };
        Ok(SampledDistribution {
            grid: grid.clone(),
            values,
        })
    }

    fn jump_smooth_part(&self, x: Point, dim: usize) -> C {
        if let Distribution::Jump {
            amplitude,
            modulation,
            profile,
            ..
        } = self
        {
            let p = profile
                .as_ref()
                .map_or(1.0, |p| gaussian(x, p.center, p.width, dim));
            amplitude * C::from_polar(p, dot(*modulation, x, dim))
        } else {
            C::new(0.0, 0.0)
        }
    }

    /// Total translation that transposed operators impose on a test function.
    fn test_displacement(&self, xi0: Point, dim: usize) -> Point {
        match self {
            Distribution::Scaled { inner, .. } => inner.test_displacement(xi0, dim),
            Distribution::Applied { op, inner } => {
                let mut d = inner.test_displacement(xi0, dim);
                if let Multiplier::HalfWave { t, c, sign } = op {
                    let r = dot(xi0, xi0, dim).sqrt();
                    for k in 0..dim {
                        d[k] -= sign * t * c * xi0[k] / r;
                    }
                }
                d
            }
            _ => [0.0, 0.0],
        }
    }
}

/// Bilinear pairing of `g` with a sampled test function psi on `grid`.
pub fn pair_with(g: &Distribution, grid: &Grid, psi: &[C]) -> Result<C> {
    let dim = grid.dim;
    Ok(match g {
        Distribution::PointMass { at, weight } => weight * grid.interpolate(&grid.spectrum(psi), *at),
        Distribution::PointMassDerivative { at, axis, weight } => {
            let d = grid.apply_multiplier(psi, |xi| C::new(0.0, xi[*axis]));
            -weight * grid.interpolate(&grid.spectrum(&d), *at)
        }
        Distribution::Gaussian { .. } | Distribution::PlaneWave { .. } | Distribution::Sampled(_) => {
            let s = g.sample(grid)?;
            let prod: Vec<C> = s.values.iter().zip(psi).map(|(a, b)| a * b).collect();
            grid.integrate(&prod)
        }
        Distribution::Jump { axis, at, .. } => {
            let prod: Vec<C> = (0..grid.len())
                .map(|i| g.jump_smooth_part(grid.point(i), dim) * psi[i])
                .collect();
            grid.integrate_half_space(&prod, *axis, *at)
        }
        Distribution::Scaled { factor, inner } => factor * pair_with(inner, grid, psi)?,
        Distribution::Applied { op, inner } => {
            let t = grid.apply_multiplier(psi, |xi| op.transpose_symbol(xi));
            pair_with(inner, grid, &t)?
        }
    })
}

/// Closed-form pairing with the packet when the descriptor admits one.
pub fn pair_packet_exact(g: &Distribution, p: &WavePacket, tau: f64) -> Option<C> {
    let dim = p.dim;
    match g {
        Distribution::PointMass { at, weight } => Some(weight * p.eval(*at, tau)),
        Distribution::PointMassDerivative { at, axis, weight } => {
            Some(-weight * p.gradient(*at, tau)[*axis])
        }
        Distribution::PlaneWave { k, amplitude } => {
            let s = tau.sqrt();
            let mut w = [0.0; 2];
            for i in 0..dim {
                w[i] = (k[i] - tau * p.xi0[i]) / s;
            }
            let origin = p.phase_origin.unwrap_or(p.x0);
            let mut off = [0.0; 2];
            for i in 0..dim {
                off[i] = p.x0[i] - origin[i];
            }
            let pre = amplitude
                * C::from_polar(1.0, dot(*k, p.x0, dim) - tau * dot(off, p.xi0, dim));
            let ft = match p.envelope {
                Envelope::Gaussian { sigma, shift } => {
                    C::from_polar(1.0, dot(w, shift, dim))
                        * (2.0 * PI * sigma * sigma).powf(0.5 * dim as f64)
                        * (-0.5 * sigma * sigma * dot(w, w, dim)).exp()
                }
                Envelope::Hermite { sigma, axis } => {
                    C::new(0.0, sigma * w[axis])
                        * (2.0 * PI * sigma * sigma).powf(0.5 * dim as f64)
                        * (-0.5 * sigma * sigma * dot(w, w, dim)).exp()
                }
            };
            Some(pre * ft)
        }
        Distribution::Gaussian {
            center,
            width,
            amplitude,
        } => {
            let Envelope::Gaussian { sigma, shift } = p.envelope else {
                return None;
            };
            let s = tau.sqrt();
            let origin = p.phase_origin.unwrap_or(p.x0);
            let mut acc = C::new(0.0, 0.0);
            let mut pre = C::new(1.0, 0.0);
            for i in 0..dim {
                let b = s * (center[i] - p.x0[i]);
                let ts2 = tau * width * width;
                let alpha = 0.5 / ts2 + 0.5 / (sigma * sigma);
                let beta = C::new(b / ts2 + shift[i] / (sigma * sigma), -s * p.xi0[i]);
                acc += beta * beta / (4.0 * alpha) - b * b / (2.0 * ts2)
                    - shift[i] * shift[i] / (2.0 * sigma * sigma)
                    - C::new(0.0, tau * (p.x0[i] - origin[i]) * p.xi0[i]);
                pre *= (PI / alpha).sqrt();
            }
            Some(amplitude * pre * acc.exp())
        }
        Distribution::Scaled { factor, inner } => pair_packet_exact(inner, p, tau).map(|v| factor * v),
        _ => None,
    }
}

/// Pairing by quadrature on `grid`, after checking resolution and margin.
pub fn pair_packet_quadrature(g: &Distribution, p: &WavePacket, tau: f64, grid: &Grid) -> Result<C> {
    p.check(grid, tau, g.test_displacement(p.xi0, p.dim))?;
    pair_with(g, grid, &p.sample(grid, tau))
}

/// <g, u_tau>. Uses the closed form when available; otherwise quadrature.
pub fn pair_packet(g: &Distribution, p: &WavePacket, tau: f64, grid: &Grid) -> Result<C> {
    p.check(grid, tau, g.test_displacement(p.xi0, p.dim))?;
    match pair_packet_exact(g, p, tau) {
        Some(v) => Ok(v),
        None => pair_with(g, grid, &p.sample(grid, tau)),
    }
}

/// Applies a multiplier. Sampled input is transformed spectrally; analytic
/// descriptors are wrapped and handled by duality at pairing time.
pub fn psido_apply(g: &Distribution, m: &Multiplier) -> Result<Distribution> {
    match g {
        Distribution::Sampled(s) => {
            check_sampled_margin(s)?;
            let values = s.grid.apply_multiplier(&s.values, |xi| m.symbol(xi));
            Ok(Distribution::Sampled(SampledDistribution {
                grid: s.grid.clone(),
                values,
            }))
        }
        other => Ok(other.clone().applied(m.clone())),
    }
}

/// Half-wave propagator e^{-i sign t c |D|} at constant speed c.
pub fn fio_propagate_constant_speed(g: &Distribution, t: f64, c: f64, sign: f64) -> Result<Distribution> {
    psido_apply(g, &Multiplier::HalfWave { t, c, sign })
}

fn check_sampled_margin(s: &SampledDistribution) -> Result<()> {
    let grid = &s.grid;
    let peak = s.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    if peak == 0.0 {
        return Ok(());
    }
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for (i, v) in s.values.iter().enumerate() {
        if v.norm() > 1e-8 * peak {
            let x = grid.point(i);
            for k in 0..grid.dim {
                lo[k] = lo[k].min(x[k]);
                hi[k] = hi[k].max(x[k]);
            }
        }
    }
    let len = grid.length();
    let mut margin = f64::INFINITY;
    for k in 0..grid.dim {
        margin = margin
            .min((lo[k] - grid.origin[k]) / len)
            .min((grid.origin[k] + len - hi[k]) / len);
    }
    if margin < 0.25 {
        Err(Error::WraparoundRisk { margin })
    } else {
        Ok(())
    }
}
