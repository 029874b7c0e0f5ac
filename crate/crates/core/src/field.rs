//! Closed-form scalar fields on R^3 with exact first and second derivatives.
//!
//! Every field is smooth on all of space except `Radial`, which has a cone
//! point at its center when the linear coefficient is nonzero.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

/// Value, gradient and Hessian of a scalar field at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub gradient: Vector3<f64>,
    pub hessian: Matrix3<f64>,
}

impl Jet {
    pub fn constant(value: f64) -> Self {
        Jet { value, gradient: Vector3::zeros(), hessian: Matrix3::zeros() }
    }

    fn add(&self, o: &Jet) -> Jet {
        Jet {
            value: self.value + o.value,
            gradient: self.gradient + o.gradient,
            hessian: self.hessian + o.hessian,
        }
    }

    fn mul(&self, o: &Jet) -> Jet {
        Jet {
            value: self.value * o.value,
            gradient: self.gradient * o.value + o.gradient * self.value,
            hessian: self.hessian * o.value
                + o.hessian * self.value
                + self.gradient * o.gradient.transpose()
                + o.gradient * self.gradient.transpose(),
        }
    }

    fn exp(&self) -> Jet {
        let e = self.value.exp();
        Jet {
            value: e,
            gradient: self.gradient * e,
            hessian: (self.hessian + self.gradient * self.gradient.transpose()) * e,
        }
    }

    /// Gradient of `log f`; requires a positive value.
    pub fn log_gradient(&self) -> Vector3<f64> {
        self.gradient / self.value
    }

    /// Hessian of `log f`; requires a positive value.
    pub fn log_hessian(&self) -> Matrix3<f64> {
        self.hessian / self.value
            - self.gradient * self.gradient.transpose() / (self.value * self.value)
    }
}

/// A scalar field with analytic derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticField {
    /// `value` everywhere.
    Constant(f64),
    /// `c0 + gradient . x`.
    Affine { c0: f64, gradient: Vector3<f64> },
    /// `amplitude * exp(-|x - center|^2 / (2 width^2))`.
    GaussianBump { center: Vector3<f64>, amplitude: f64, width: f64 },
    /// `sum_k coeffs[k] * r^k` with `r = |x - center|`.
    Radial { center: Vector3<f64>, coeffs: Vec<f64> },
    Sum(Vec<AnalyticField>),
    Product(Vec<AnalyticField>),
    Exp(Box<AnalyticField>),
}

impl AnalyticField {
    pub fn constant(v: f64) -> Self {
        AnalyticField::Constant(v)
    }

    pub fn affine(c0: f64, gradient: Vector3<f64>) -> Self {
        AnalyticField::Affine { c0, gradient }
    }

    pub fn gaussian_bump(center: Vector3<f64>, amplitude: f64, width: f64) -> Self {
        AnalyticField::GaussianBump { center, amplitude, width }
    }

    pub fn radial(center: Vector3<f64>, coeffs: Vec<f64>) -> Self {
        AnalyticField::Radial { center, coeffs }
    }

    pub fn jet(&self, x: &Vector3<f64>) -> Jet {
        match self {
            AnalyticField::Constant(v) => Jet::constant(*v),
            AnalyticField::Affine { c0, gradient } => Jet {
                value: c0 + gradient.dot(x),
                gradient: *gradient,
                hessian: Matrix3::zeros(),
            },
            AnalyticField::GaussianBump { center, amplitude, width } => {
                let d = x - center;
                let w2 = width * width;
                let g = amplitude * (-d.norm_squared() / (2.0 * w2)).exp();
                Jet {
                    value: g,
                    gradient: -d * (g / w2),
                    hessian: (d * d.transpose() / w2 - Matrix3::identity()) * (g / w2),
                }
            }
            AnalyticField::Radial { center, coeffs } => radial_jet(x - center, coeffs),
            AnalyticField::Sum(parts) => parts
                .iter()
                .fold(Jet::constant(0.0), |acc, f| acc.add(&f.jet(x))),
            AnalyticField::Product(parts) => parts
                .iter()
                .fold(Jet::constant(1.0), |acc, f| acc.mul(&f.jet(x))),
            AnalyticField::Exp(inner) => inner.jet(x).exp(),
        }
    }

    pub fn value(&self, x: &Vector3<f64>) -> f64 {
        self.jet(x).value
    }

    pub fn gradient(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.jet(x).gradient
    }

    pub fn hessian(&self, x: &Vector3<f64>) -> Matrix3<f64> {
        self.jet(x).hessian
    }

    /// True when the field is constant by construction.
    pub fn is_constant(&self) -> bool {
        match self {
            AnalyticField::Constant(_) => true,
            AnalyticField::Affine { gradient, .. } => gradient.norm() == 0.0,
            AnalyticField::GaussianBump { amplitude, .. } => *amplitude == 0.0,
            AnalyticField::Radial { coeffs, .. } => coeffs.iter().skip(1).all(|c| *c == 0.0),
            AnalyticField::Sum(p) | AnalyticField::Product(p) => p.iter().all(|f| f.is_constant()),
            AnalyticField::Exp(inner) => inner.is_constant(),
        }
    }
}

fn radial_jet(d: Vector3<f64>, coeffs: &[f64]) -> Jet {
    let r = d.norm();
    let (mut p, mut dp, mut d2p) = (0.0, 0.0, 0.0);
    // Horner for p, p', p''
    for &c in coeffs.iter().rev() {
        d2p = d2p * r + 2.0 * dp;
        dp = dp * r + p;
        p = p * r + c;
    }
    if r < 1e-300 {
        // at the center the gradient is taken as zero; the Hessian limit is 2 c_2 I
        let c2 = coeffs.get(2).copied().unwrap_or(0.0);
        return Jet { value: p, gradient: Vector3::zeros(), hessian: Matrix3::identity() * (2.0 * c2) };
    }
    let u = d / r;
    let uu = u * u.transpose();
    Jet {
        value: p,
        gradient: u * dp,
        hessian: uu * d2p + (Matrix3::identity() - uu) * (dp / r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_gradient(f: &AnalyticField, x: &Vector3<f64>) -> Vector3<f64> {
        let h = 1e-5;
        Vector3::from_fn(|i, _| {
            let mut e = Vector3::zeros();
            e[i] = h;
            (f.value(&(x + e)) - f.value(&(x - e))) / (2.0 * h)
        })
    }

    fn fd_hessian(f: &AnalyticField, x: &Vector3<f64>) -> Matrix3<f64> {
        let h = 1e-5;
        let mut m = Matrix3::zeros();
        for i in 0..3 {
            let mut e = Vector3::zeros();
            e[i] = h;
            let g = (f.gradient(&(x + e)) - f.gradient(&(x - e))) / (2.0 * h);
            m.set_column(i, &g);
        }
        m
    }

    fn sample_fields() -> Vec<AnalyticField> {
        let c = Vector3::new(0.1, -0.2, 0.3);
        vec![
            AnalyticField::constant(2.0),
            AnalyticField::affine(1.0, Vector3::new(0.3, -0.1, 0.2)),
            AnalyticField::gaussian_bump(c, 0.5, 0.7),
            AnalyticField::radial(c, vec![1.0, 0.0, -0.3, 0.05]),
            AnalyticField::Sum(vec![AnalyticField::constant(1.0), AnalyticField::gaussian_bump(c, 0.5, 0.7)]),
            AnalyticField::Product(vec![
                AnalyticField::affine(1.0, Vector3::new(0.0, 0.0, 0.1)),
                AnalyticField::affine(1.0, Vector3::new(0.0, 0.0, 0.1)),
            ]),
            AnalyticField::Exp(Box::new(AnalyticField::affine(0.0, Vector3::new(0.2, 0.1, 0.0)))),
        ]
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let x = Vector3::new(0.4, 0.5, -0.6);
        for f in sample_fields() {
            let g = f.gradient(&x);
            let h = f.hessian(&x);
            assert!((g - fd_gradient(&f, &x)).norm() < 1e-8, "{f:?}");
            assert!((h - fd_hessian(&f, &x)).norm() < 1e-7, "{f:?}");
            assert!((h - h.transpose()).norm() < 1e-14);
        }
    }

    #[test]
    fn bump_on_unit_background() {
        let f = AnalyticField::Sum(vec![
            AnalyticField::constant(1.0),
            AnalyticField::gaussian_bump(Vector3::zeros(), 0.5, 1.0),
        ]);
        assert!((f.value(&Vector3::zeros()) - 1.5).abs() < 1e-15);
        assert_eq!(f.gradient(&Vector3::zeros()), Vector3::zeros());
    }

    #[test]
    fn radial_center_limit() {
        let f = AnalyticField::radial(Vector3::zeros(), vec![1.0, 0.0, 2.0]);
        let j = f.jet(&Vector3::zeros());
        assert_eq!(j.value, 1.0);
        assert_eq!(j.hessian, Matrix3::identity() * 4.0);
    }
}
