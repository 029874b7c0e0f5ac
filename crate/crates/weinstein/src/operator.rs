use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::grid::Point;

/// Fourier multiplier m(D) with D = -i d/dx, so iD is the plain derivative
/// and the Laplacian has symbol -|xi|^2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Multiplier {
    Identity,
    /// |xi|^a
    AbsPower { exponent: f64 },
    Laplacian,
    /// i xi_axis
    Derivative { axis: usize },
    /// sum of c * xi^alpha
    Polynomial { terms: Vec<Monomial> },
    /// 1 - exp(-|xi|^2 / r^2), order zero with principal symbol 1
    HighPass { radius: f64 },
    /// e^{-i sign t c |xi|}; sign +1 moves packets along xi0
    HalfWave { t: f64, c: f64, sign: f64 },
    Product { factors: Vec<Multiplier> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coefficient: [f64; 2],
    pub powers: [u32; 2],
}

impl Monomial {
    fn eval(&self, xi: Point) -> C {
        C::new(self.coefficient[0], self.coefficient[1])
            * xi[0].powi(self.powers[0] as i32)
            * xi[1].powi(self.powers[1] as i32)
    }

    fn degree(&self) -> u32 {
        self.powers[0] + self.powers[1]
    }
}

fn abs(xi: Point) -> f64 {
    xi[0].hypot(xi[1])
}

impl Multiplier {
    pub fn symbol(&self, xi: Point) -> C {
        match self {
            Multiplier::Identity => C::new(1.0, 0.0),
            Multiplier::AbsPower { exponent } => {
                let r = abs(xi);
                if r == 0.0 {
                    C::new(if *exponent == 0.0 { 1.0 } else { 0.0 }, 0.0)
                } else {
                    C::new(r.powf(*exponent), 0.0)
                }
            }
            Multiplier::Laplacian => C::new(-(xi[0] * xi[0] + xi[1] * xi[1]), 0.0),
            Multiplier::Derivative { axis } => C::new(0.0, xi[*axis]),
            Multiplier::Polynomial { terms } => terms.iter().map(|m| m.eval(xi)).sum(),
            Multiplier::HighPass { radius } => {
                let r = abs(xi) / radius;
                C::new(-(-r * r).exp_m1(), 0.0)
            }
            Multiplier::HalfWave { t, c, sign } => C::from_polar(1.0, -sign * t * c * abs(xi)),
            Multiplier::Product { factors } => factors.iter().map(|f| f.symbol(xi)).product(),
        }
    }

    /// Symbol of the transpose, m(-xi).
    pub fn transpose_symbol(&self, xi: Point) -> C {
        self.symbol([-xi[0], -xi[1]])
    }

    pub fn order(&self) -> f64 {
        match self {
            Multiplier::Identity | Multiplier::HighPass { .. } | Multiplier::HalfWave { .. } => 0.0,
            Multiplier::AbsPower { exponent } => *exponent,
            Multiplier::Laplacian => 2.0,
            Multiplier::Derivative { .. } => 1.0,
            Multiplier::Polynomial { terms } => {
                terms.iter().map(|m| m.degree()).max().unwrap_or(0) as f64
            }
            Multiplier::Product { factors } => factors.iter().map(|f| f.order()).sum(),
        }
    }

    /// Homogeneous leading part, evaluated at large xi.
    pub fn principal(&self, xi: Point) -> C {
        match self {
            Multiplier::HighPass { .. } => C::new(1.0, 0.0),
            Multiplier::Polynomial { terms } => {
                let top = self.order() as u32;
                terms
                    .iter()
                    .filter(|m| m.degree() == top)
                    .map(|m| m.eval(xi))
                    .sum()
            }
            Multiplier::Product { factors } => factors.iter().map(|f| f.principal(xi)).product(),
            other => other.symbol(xi),
        }
    }
}
