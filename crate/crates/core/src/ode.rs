//! Embedded Dormand-Prince 5(4) integrator for scalar autonomous ODEs.

use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct Tolerance<T> {
    pub rel: T,
    pub abs: T,
}

impl<T: Real> Default for Tolerance<T> {
    fn default() -> Self {
        Self { rel: T::lit(1e-10), abs: T::lit(1e-12) }
    }
}

const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 5th order weights are the last row of A; E = b5 - b4.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `x' = f(x)` from `x0` over a (signed) duration `t`.
pub fn solve<T: Real, F: Fn(T) -> T>(f: F, x0: T, t: T, tol: Tolerance<T>) -> T {
    solve_until(f, x0, t, tol, |_| false).0
}

/// Like [`solve`], but stops after the first accepted step whose end point
/// satisfies `stop`. Returns the state and the (signed) time integrated.
pub fn solve_until<T: Real, F: Fn(T) -> T, S: Fn(T) -> bool>(
    f: F,
    x0: T,
    t: T,
    tol: Tolerance<T>,
    stop: S,
) -> (T, T) {
    if t == T::zero() {
        return (x0, T::zero());
    }
    let dir = t.signum();
    let span = t.abs();
    let g = |x: T| f(x) * dir;

    let mut x = x0;
    let mut elapsed = T::zero();
    let mut k1 = g(x);
    let mut h = initial_step(&g, x, k1, span, tol);
    let safety = T::lit(0.9);
    let min_factor = T::lit(0.2);
    let max_factor = T::lit(5.0);
    while elapsed < span {
        if elapsed + h > span {
            h = span - elapsed;
        }
        let mut k = [T::zero(); 7];
        k[0] = k1;
        for s in 1..7 {
            let mut acc = T::zero();
            for (j, kj) in k.iter().enumerate().take(s) {
                acc = acc + T::lit(A[s][j]) * *kj;
            }
            k[s] = g(x + h * acc);
        }
        // FSAL: k[6] is f at the 5th order solution.
        let mut incr = T::zero();
        for (j, kj) in k.iter().enumerate().take(6) {
            incr = incr + T::lit(A[6][j]) * *kj;
        }
        let x_new = x + h * incr;
        let mut err = T::zero();
        for (j, kj) in k.iter().enumerate() {
            err = err + T::lit(E[j]) * *kj;
        }
        let scale = tol.abs + tol.rel * x.abs().max(x_new.abs());
        let ratio = (h * err).abs() / scale;
        if ratio <= T::one() || h <= T::epsilon() * span {
            x = x_new;
            elapsed = elapsed + h;
            k1 = k[6];
            if stop(x) {
                break;
            }
            let factor = if ratio == T::zero() {
                max_factor
            } else {
                (safety * ratio.powf(T::lit(-0.2))).min(max_factor).max(min_factor)
            };
            h = h * factor;
        } else {
            let factor = (safety * ratio.powf(T::lit(-0.2))).max(min_factor);
            h = h * factor;
        }
    }
    (x, elapsed * dir)
}

fn initial_step<T: Real, G: Fn(T) -> T>(g: &G, x: T, fx: T, span: T, tol: Tolerance<T>) -> T {
    let scale = tol.abs + tol.rel * x.abs();
    let d0 = x.abs() / scale;
    let d1 = fx.abs() / scale;
    let h0 = if d0 < T::lit(1e-5) || d1 < T::lit(1e-5) { T::lit(1e-6) } else { T::lit(0.01) * d0 / d1 };
    let h0 = h0.min(span);
    let f1 = g(x + h0 * fx);
    let d2 = (f1 - fx).abs() / scale / h0;
    let dmax = d1.max(d2);
    let h1 = if dmax <= T::lit(1e-15) {
        (h0 * T::lit(1e-3)).max(T::lit(1e-6))
    } else {
        (T::lit(0.01) / dmax).powf(T::lit(0.2))
    };
    (T::lit(100.0) * h0).min(h1).min(span)
}
