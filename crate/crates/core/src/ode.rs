//! Dormand-Prince 5(4) integration with the standard 4th-order dense output.

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One accepted step with its continuous extension.
#[derive(Debug, Clone)]
pub struct DenseStep<const N: usize> {
    pub s0: f64,
    pub h: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    r: [[f64; N]; 3],
}

impl<const N: usize> DenseStep<N> {
    pub fn s1(&self) -> f64 {
        self.s0 + self.h
    }

    /// State at `s` in `[s0, s0 + h]`.
    pub fn eval(&self, s: f64) -> [f64; N] {
        let th = ((s - self.s0) / self.h).clamp(0.0, 1.0);
        let th1 = 1.0 - th;
        let mut out = [0.0; N];
        for i in 0..N {
            let dy = self.y1[i] - self.y0[i];
            out[i] = self.y0[i] + th * (dy + th1 * (self.r[0][i] + th * (self.r[1][i] + th1 * self.r[2][i])));
        }
        out
    }
}

/// Raw stages of one explicit step; used for event landing.
pub fn rk_step<const N: usize>(
    f: &dyn Fn(f64, &[f64; N]) -> [f64; N],
    s: f64,
    y: &[f64; N],
    h: f64,
) -> ([f64; N], [f64; N], [[f64; N]; 7]) {
    let mut k = [[0.0; N]; 7];
    k[0] = f(s, y);
    for st in 1..7 {
        let mut yt = *y;
        for j in 0..st {
            let a = A[st][j];
            if a != 0.0 {
                for i in 0..N {
                    yt[i] += h * a * k[j][i];
                }
            }
        }
        k[st] = f(s + C[st] * h, &yt);
    }
    // FSAL: stage 7 is evaluated at the 5th-order solution
    let mut y1 = *y;
    for j in 0..6 {
        for i in 0..N {
            y1[i] += h * A[6][j] * k[j][i];
        }
    }
    let mut err = [0.0; N];
    for j in 0..7 {
        for i in 0..N {
            err[i] += h * E[j] * k[j][i];
        }
    }
    (y1, err, k)
}

/// Dense step built from the stages returned by [`rk_step`].
pub fn dense<const N: usize>(s0: f64, h: f64, y0: &[f64; N], y1: &[f64; N], k: &[[f64; N]; 7]) -> DenseStep<N> {
    let mut r = [[0.0; N]; 3];
    for i in 0..N {
        let dy = y1[i] - y0[i];
        let bspl = h * k[0][i] - dy;
        r[0][i] = bspl;
        r[1][i] = dy - h * k[6][i] - bspl;
        r[2][i] = h * (0..7).map(|j| D[j] * k[j][i]).sum::<f64>();
    }
    DenseStep { s0, h, y0: *y0, y1: *y1, r }
}

/// Adaptive integrator settings.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub h_min: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1e-10, atol: 1e-10, h_init: 1e-2, h_max: 0.25, h_min: 1e-14 }
    }
}

/// What the step observer wants the integrator to do next.
pub enum Control {
    Continue,
    Stop,
}

/// Integrates from `s0` up to `s_end`, calling `observe` after every
/// accepted step. Returns the number of accepted steps or the failing `(s, h)`.
pub fn integrate<const N: usize>(
    f: &dyn Fn(f64, &[f64; N]) -> [f64; N],
    s0: f64,
    y0: [f64; N],
    s_end: f64,
    tol: &Tolerances,
    observe: &mut dyn FnMut(&DenseStep<N>) -> Control,
) -> Result<usize, (f64, f64)> {
    let mut s = s0;
    let mut y = y0;
    let mut h = tol.h_init.min(tol.h_max);
    let mut accepted = 0;
    while s < s_end {
        let last = s + h >= s_end;
        let hh = if last { s_end - s } else { h };
        let (y1, err, k) = rk_step(f, s, &y, hh);
        let mut e2 = 0.0;
        for i in 0..N {
            let sc = tol.atol + tol.rtol * y[i].abs().max(y1[i].abs());
            e2 += (err[i] / sc).powi(2);
        }
        let en = (e2 / N as f64).sqrt();
        if !en.is_finite() || y1.iter().any(|v| !v.is_finite()) {
            h *= 0.2;
            if h < tol.h_min {
                return Err((s, h));
            }
            continue;
        }
        if en <= 1.0 {
            let step = dense(s, hh, &y, &y1, &k);
            accepted += 1;
            s = if last { s_end } else { s + hh };
            y = y1;
            if let Control::Stop = observe(&step) {
                return Ok(accepted);
            }
        }
        let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
        h = (hh * fac).min(tol.h_max);
        if h < tol.h_min {
            return Err((s, h));
        }
    }
    Ok(accepted)
}

/// Fixed-step integration; returns the state after `n` steps of size `h`.
pub fn fixed_step<const N: usize>(
    f: &dyn Fn(f64, &[f64; N]) -> [f64; N],
    s0: f64,
    y0: [f64; N],
    h: f64,
    n: usize,
) -> [f64; N] {
    let mut y = y0;
    for i in 0..n {
        y = rk_step(f, s0 + i as f64 * h, &y, h).0;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_accuracy_and_dense_output() {
        let f = |_s: f64, y: &[f64; 2]| [y[1], -y[0]];
        let mut steps = Vec::new();
        let tol = Tolerances::default();
        integrate(&f, 0.0, [1.0, 0.0], 10.0, &tol, &mut |st| {
            steps.push(st.clone());
            Control::Continue
        })
        .unwrap();
        let last = steps.last().unwrap();
        assert!((last.y1[0] - 10f64.cos()).abs() < 1e-8);
        for st in &steps {
            let m = st.s0 + 0.37 * st.h;
            let v = st.eval(m);
            assert!((v[0] - m.cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn fixed_step_order_five() {
        let f = |_s: f64, y: &[f64; 1]| [y[0]];
        let e1 = (fixed_step(&f, 0.0, [1.0], 0.1, 10)[0] - 1f64.exp()).abs();
        let e2 = (fixed_step(&f, 0.0, [1.0], 0.05, 20)[0] - 1f64.exp()).abs();
        let order = (e1 / e2).log2();
        assert!(order > 4.7 && order < 5.3, "order {order}");
    }
}
