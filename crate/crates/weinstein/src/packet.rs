use std::f64::consts::PI;

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::grid::{Grid, Point};
use crate::{Error, Result};

/// Default geometric ladder 64, 128, ..., 1024.
pub fn default_ladder() -> Vec<f64> {
    (0..5).map(|k| 64.0 * 2f64.powi(k)).collect()
}

/// Envelope profile u of a packet, in scaled coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope {
    /// exp(-|y - shift|^2 / 2 sigma^2)
    Gaussian { sigma: f64, shift: Point },
    /// (y_axis / sigma) exp(-|y|^2 / 2 sigma^2), which vanishes at the origin
    /// with nonzero slope.
    Hermite { sigma: f64, axis: usize },
}

impl Default for Envelope {
    fn default() -> Self {
        Envelope::Gaussian {
            sigma: 1.0,
            shift: [0.0, 0.0],
        }
    }
}

fn norm2(v: Point, dim: usize) -> f64 {
    v[..dim].iter().map(|a| a * a).sum()
}

impl Envelope {
    pub fn value(&self, y: Point, dim: usize) -> f64 {
        match *self {
            Envelope::Gaussian { sigma, shift } => {
                let d = [y[0] - shift[0], y[1] - shift[1]];
                (-norm2(d, dim) / (2.0 * sigma * sigma)).exp()
            }
            Envelope::Hermite { sigma, axis } => {
                y[axis] / sigma * (-norm2(y, dim) / (2.0 * sigma * sigma)).exp()
            }
        }
    }

    pub fn gradient(&self, y: Point, dim: usize) -> Point {
        let mut g = [0.0; 2];
        match *self {
            Envelope::Gaussian { sigma, shift } => {
                let v = self.value(y, dim);
                for k in 0..dim {
                    g[k] = -(y[k] - shift[k]) / (sigma * sigma) * v;
                }
            }
            Envelope::Hermite { sigma, axis } => {
                let e = (-norm2(y, dim) / (2.0 * sigma * sigma)).exp();
                for k in 0..dim {
                    g[k] = -y[k] / (sigma * sigma) * y[axis] / sigma * e;
                    if k == axis {
                        g[k] += e / sigma;
                    }
                }
            }
        }
        g
    }

    /// Radius beyond which the profile is below about 1.5e-8 of its peak.
    pub fn radius(&self) -> f64 {
        match *self {
            Envelope::Gaussian { sigma, shift } => 6.0 * sigma + shift[0].hypot(shift[1]),
            Envelope::Hermite { sigma, .. } => 6.5 * sigma,
        }
    }

    pub fn center(&self) -> Point {
        match *self {
            Envelope::Gaussian { shift, .. } => shift,
            Envelope::Hermite { .. } => [0.0, 0.0],
        }
    }

    fn sigma(&self) -> f64 {
        match *self {
            Envelope::Gaussian { sigma, .. } | Envelope::Hermite { sigma, .. } => sigma,
        }
    }
}

/// Test packet u_tau(x) = tau^{n/2} e^{-i tau (x - p) . xi0} u(sqrt(tau) (x - x0)).
/// The phase origin p defaults to x0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavePacket {
    pub dim: usize,
    pub x0: Point,
    pub xi0: Point,
    #[serde(default)]
    pub envelope: Envelope,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_origin: Option<Point>,
}

impl WavePacket {
    pub fn new(dim: usize, x0: Point, xi0: Point) -> Self {
        WavePacket {
            dim,
            x0,
            xi0,
            envelope: Envelope::default(),
            phase_origin: None,
        }
    }

    pub fn with_envelope(mut self, envelope: Envelope) -> Self {
        self.envelope = envelope;
        self
    }

    pub fn with_phase_origin(mut self, p: Point) -> Self {
        self.phase_origin = Some(p);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dim == 1 || self.dim == 2) {
            return Err(Error::Invalid(format!("dimension {} not in {{1, 2}}", self.dim)));
        }
        if norm2(self.xi0, self.dim) == 0.0 {
            return Err(Error::Invalid("packet covector must be nonzero".into()));
        }
        if let Envelope::Hermite { axis, .. } = self.envelope {
            if axis >= self.dim {
                return Err(Error::Invalid("Hermite axis out of range".into()));
            }
        }
        Ok(())
    }

    fn phase_origin(&self) -> Point {
        self.phase_origin.unwrap_or(self.x0)
    }

    fn carrier(&self, x: Point, tau: f64) -> C {
        let p = self.phase_origin();
        let mut dot = 0.0;
        for k in 0..self.dim {
            dot += (x[k] - p[k]) * self.xi0[k];
        }
        C::from_polar(tau.powf(0.5 * self.dim as f64), -tau * dot)
    }

    fn scaled(&self, x: Point, tau: f64) -> Point {
        let s = tau.sqrt();
        let mut y = [0.0; 2];
        for k in 0..self.dim {
            y[k] = s * (x[k] - self.x0[k]);
        }
        y
    }

    pub fn eval(&self, x: Point, tau: f64) -> C {
        self.carrier(x, tau) * self.envelope.value(self.scaled(x, tau), self.dim)
    }

    pub fn gradient(&self, x: Point, tau: f64) -> [C; 2] {
        let y = self.scaled(x, tau);
        let e = self.carrier(x, tau);
        let u = self.envelope.value(y, self.dim);
        let du = self.envelope.gradient(y, self.dim);
        let mut g = [C::new(0.0, 0.0); 2];
        for k in 0..self.dim {
            g[k] = e * (C::new(0.0, -tau * self.xi0[k]) * u + tau.sqrt() * du[k]);
        }
        g
    }

    pub fn sample(&self, grid: &Grid, tau: f64) -> Vec<C> {
        grid.sample(|x| self.eval(x, tau))
    }

    /// Spatial center of the envelope mass at this tau.
    pub fn support_center(&self, tau: f64) -> Point {
        let c = self.envelope.center();
        let s = tau.sqrt();
        [self.x0[0] + c[0] / s, self.x0[1] + c[1] / s]
    }

    pub fn support_radius(&self, tau: f64) -> f64 {
        self.envelope.radius() / tau.sqrt()
    }

    /// Checks sampling density and window margin for this tau. `displacement`
    /// shifts the support, for operators that transport the packet.
    pub fn check(&self, grid: &Grid, tau: f64, displacement: Point) -> Result<()> {
        self.validate()?;
        if grid.dim != self.dim {
            return Err(Error::Invalid("packet and grid dimensions differ".into()));
        }
        let h = grid.spacing;
        let kmax = self.xi0[..self.dim].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let per_osc = 2.0 * PI / (h * tau * kmax);
        let per_width = self.envelope.sigma() / (tau.sqrt() * h);
        if per_osc < 8.0 || per_width < 2.0 {
            return Err(Error::UnderResolved {
                tau,
                samples_per_oscillation: per_osc.min(4.0 * per_width),
            });
        }
        let c = self.support_center(tau);
        let r = self.support_radius(tau);
        check_margin(grid, &[[c[0], c[1]], [c[0] + displacement[0], c[1] + displacement[1]]], r)
    }
}

fn check_margin(grid: &Grid, centers: &[Point], r: f64) -> Result<()> {
    let len = grid.length();
    let mut margin = f64::INFINITY;
    for c in centers {
        for k in 0..grid.dim {
            let lo = c[k] - r - grid.origin[k];
            let hi = grid.origin[k] + len - (c[k] + r);
            margin = margin.min(lo.min(hi) / len);
        }
    }
    if margin < 0.25 {
        Err(Error::WraparoundRisk { margin })
    } else {
        Ok(())
    }
}
