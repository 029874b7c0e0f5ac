use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64 as C;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Point = [f64; 2];

/// Uniform periodic grid in one or two dimensions. Samples are stored with
/// the first coordinate varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub origin: Point,
    pub spacing: f64,
    pub size: usize,
}

type PlanCache = RwLock<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>;

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(p) = cache.read().expect("plan cache poisoned").get(&(len, inverse)) {
        return p.clone();
    }
    let mut planner = FftPlanner::new();
    let p = if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    };
    cache
        .write()
        .expect("plan cache poisoned")
        .entry((len, inverse))
        .or_insert(p)
        .clone()
}

impl Grid {
    pub fn new(dim: usize, center: Point, length: f64, size: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::Invalid(format!("dimension {dim} not in {{1, 2}}")));
        }
        if size < 8 || !length.is_finite() || length <= 0.0 {
            return Err(Error::Invalid("grid needs at least 8 points and positive length".into()));
        }
        let half = 0.5 * length;
        let mut origin = [center[0] - half, 0.0];
        if dim == 2 {
            origin[1] = center[1] - half;
        }
        Ok(Grid {
            dim,
            origin,
            spacing: length / size as f64,
            size,
        })
    }

    pub fn len(&self) -> usize {
        self.size.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn length(&self) -> f64 {
        self.spacing * self.size as f64
    }

    /// Same window at twice the resolution.
    pub fn refined(&self) -> Grid {
        Grid {
            spacing: 0.5 * self.spacing,
            size: 2 * self.size,
            ..self.clone()
        }
    }

    pub fn point(&self, idx: usize) -> Point {
        let i = idx % self.size;
        let j = idx / self.size;
        let mut p = [self.origin[0] + i as f64 * self.spacing, 0.0];
        if self.dim == 2 {
            p[1] = self.origin[1] + j as f64 * self.spacing;
        }
        p
    }

    /// Angular frequency of FFT index `k` along one axis.
    pub fn frequency(&self, k: usize) -> f64 {
        let n = self.size as isize;
        let k = k as isize;
        let s = if k < n / 2 { k } else { k - n };
        2.0 * PI * s as f64 / self.length()
    }

    pub fn wavevector(&self, idx: usize) -> Point {
        let mut w = [self.frequency(idx % self.size), 0.0];
        if self.dim == 2 {
            w[1] = self.frequency(idx / self.size);
        }
        w
    }

    pub fn sample(&self, f: impl Fn(Point) -> C) -> Vec<C> {
        (0..self.len()).map(|i| f(self.point(i))).collect()
    }

    /// Trapezoid rule, which is spectrally accurate for smooth data that
    /// vanishes near the window edges.
    pub fn integrate(&self, values: &[C]) -> C {
        values.iter().sum::<C>() * self.spacing.powi(self.dim as i32)
    }

    /// Unnormalized forward or inverse DFT over all axes, in place.
    pub fn fft(&self, data: &mut [C], inverse: bool) {
        let n = self.size;
        let p = plan(n, inverse);
        if self.dim == 1 {
            p.process(data);
            return;
        }
        for row in data.chunks_exact_mut(n) {
            p.process(row);
        }
        let mut col = vec![C::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..n {
                col[j] = data[i + n * j];
            }
            p.process(&mut col);
            for j in 0..n {
                data[i + n * j] = col[j];
            }
        }
    }

    pub fn spectrum(&self, values: &[C]) -> Vec<C> {
        let mut s = values.to_vec();
        self.fft(&mut s, false);
        s
    }

    pub fn apply_multiplier(&self, values: &[C], symbol: impl Fn(Point) -> C) -> Vec<C> {
        let mut s = self.spectrum(values);
        let norm = 1.0 / self.len() as f64;
        for (idx, v) in s.iter_mut().enumerate() {
            *v *= symbol(self.wavevector(idx)) * norm;
        }
        self.fft(&mut s, true);
        s
    }

    fn axis_phases(&self, x: f64, o: f64) -> Vec<C> {
        (0..self.size)
            .map(|k| {
                if k == self.size / 2 {
                    C::new(0.0, 0.0)
                } else {
                    C::from_polar(1.0, self.frequency(k) * (x - o))
                }
            })
            .collect()
    }

    /// Trigonometric interpolation at an arbitrary point from a forward
    /// spectrum. The Nyquist mode is dropped.
    pub fn interpolate(&self, spectrum: &[C], x: Point) -> C {
        let n = self.size;
        let e0 = self.axis_phases(x[0], self.origin[0]);
        let sum = if self.dim == 1 {
            spectrum.iter().zip(&e0).map(|(s, e)| s * e).sum::<C>()
        } else {
            let e1 = self.axis_phases(x[1], self.origin[1]);
            let mut acc = C::new(0.0, 0.0);
            for (j, ej) in e1.iter().enumerate() {
                let row: C = spectrum[n * j..n * (j + 1)]
                    .iter()
                    .zip(&e0)
                    .map(|(s, e)| s * e)
                    .sum();
                acc += row * ej;
            }
            acc
        };
        sum / self.len() as f64
    }

    /// Integral of `values` over the half window where coordinate `axis`
    /// exceeds `cut`, using a spectral antiderivative along that axis.
    pub fn integrate_half_space(&self, values: &[C], axis: usize, cut: f64) -> C {
        let n = self.size;
        let h = self.spacing;
        let o = self.origin[axis];
        let end = o + self.length();
        if cut <= o {
            return self.integrate(values);
        }
        if cut >= end {
            return C::new(0.0, 0.0);
        }
        let p = plan(n, false);
        let lines = self.len() / n;
        let mut line = vec![C::new(0.0, 0.0); n];
        let mut total = C::new(0.0, 0.0);
        for l in 0..lines {
            for (k, v) in line.iter_mut().enumerate() {
                *v = if axis == 0 { values[k + n * l] } else { values[l + n * k] };
            }
            p.process(&mut line);
            let mean = line[0] / n as f64;
            // antiderivative S(x) = sum_k F_k e^{i w_k (x - o)} / (i w_k n)
            let anti = |x: f64| -> C {
                let mut acc = C::new(0.0, 0.0);
                for (k, fk) in line.iter().enumerate().skip(1) {
                    if k == n / 2 {
                        continue;
                    }
                    let w = self.frequency(k);
                    acc += fk * C::from_polar(1.0, w * (x - o)) / C::new(0.0, w);
                }
                acc / n as f64
            };
            let seg = mean * (end - cut) + anti(o) - anti(cut);
            total += seg;
        }
        if self.dim == 2 {
            total * h
        } else {
            total
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(x: Point) -> C {
        C::new((-0.5 * x[0] * x[0]).exp(), 0.0)
    }

    #[test]
    fn interpolation_is_spectral_between_nodes() {
        let g = Grid::new(1, [0.0, 0.0], 20.0, 256).unwrap();
        let s = g.spectrum(&g.sample(gauss));
        for x in [0.0123, -1.7, 2.345] {
            let v = g.interpolate(&s, [x, 0.0]);
            assert!((v - gauss([x, 0.0])).norm() < 1e-13);
        }
    }

    #[test]
    fn half_line_integral_of_gaussian() {
        let g = Grid::new(1, [0.0, 0.0], 24.0, 512).unwrap();
        let v = g.sample(gauss);
        let half = g.integrate_half_space(&v, 0, 0.0);
        assert!((half.re - (PI / 2.0).sqrt()).abs() < 1e-13);
        // off-node cut: ∫_1^∞ e^{-x^2/2} = 0.39768974...
        let cut = g.integrate_half_space(&v, 0, 1.0);
        assert!((cut.re - 0.397_689_745_423_351_45).abs() < 1e-13);
    }

    #[test]
    fn two_dimensional_transform_round_trips() {
        let g = Grid::new(2, [0.3, -0.2], 6.0, 32).unwrap();
        let v = g.sample(|x| C::new(x[0], x[1] * x[1]));
        let mut w = g.spectrum(&v);
        g.fft(&mut w, true);
        for (a, b) in v.iter().zip(&w) {
            assert!((a - b / g.len() as f64).norm() < 1e-12);
        }
    }
}
