//! Adaptive Dormand–Prince 5(4) integrator for small complex systems.

use crate::error::{Error, Result};
use num_complex::Complex64;

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

/// Accepted step of an integration: position, state and derivative.
#[derive(Debug, Clone, Copy)]
pub struct Node<const N: usize> {
    pub x: f64,
    pub y: [Complex64; N],
    pub dy: [Complex64; N],
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { rtol: 1e-10, atol: 1e-13 }
    }
}

/// Integrates `y′ = f(x, y)` from `x0` to `x1` (either direction), returning every accepted node.
pub fn integrate<const N: usize, F>(f: F, x0: f64, y0: [Complex64; N], x1: f64, tol: Tolerance) -> Result<Vec<Node<N>>>
where
    F: Fn(f64, &[Complex64; N]) -> [Complex64; N],
{
    let span = x1 - x0;
    let dir = span.signum();
    let mut x = x0;
    let mut y = y0;
    let mut k0 = f(x, &y);
    let mut nodes = vec![Node { x, y, dy: k0 }];
    if span == 0.0 {
        return Ok(nodes);
    }
    let mut h = dir * span.abs().min(1e-3 * span.abs().max(1e-3));
    let hmin = 1e-14 * span.abs().max(1.0);
    let mut steps = 0usize;
    while (x1 - x) * dir > 0.0 {
        steps += 1;
        if steps > 2_000_000 {
            return Err(Error::Numerical(format!("integrator exceeded step budget at x={x:.6e}")));
        }
        if (x + h - x1) * dir > 0.0 {
            h = x1 - x;
        }
        let mut k = [[Complex64::new(0.0, 0.0); N]; 7];
        k[0] = k0;
        for s in 1..7 {
            let mut ys = y;
            for (i, v) in ys.iter_mut().enumerate() {
                for (j, kj) in k.iter().enumerate().take(s) {
                    if A[s][j] != 0.0 {
                        *v += h * A[s][j] * kj[i];
                    }
                }
            }
            k[s] = f(x + C[s] * h, &ys);
        }
        let mut ynew = y;
        let mut err = 0.0f64;
        for i in 0..N {
            let mut inc = Complex64::new(0.0, 0.0);
            let mut e = Complex64::new(0.0, 0.0);
            for s in 0..7 {
                inc += B[s] * k[s][i];
                e += E[s] * k[s][i];
            }
            ynew[i] = y[i] + h * inc;
            let scale = tol.atol + tol.rtol * y[i].norm().max(ynew[i].norm());
            err = err.max((h * e).norm() / scale);
        }
        if !err.is_finite() {
            return Err(Error::Numerical(format!("non-finite state at x={x:.6e}")));
        }
        if err <= 1.0 {
            x += h;
            if (x - x1) * dir > -hmin {
                x = x1;
            }
            y = ynew;
            k0 = k[6];
            nodes.push(Node { x, y, dy: k0 });
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
        if h.abs() < hmin {
            return Err(Error::Numerical(format!(
                "step size underflow at x={x:.6e} (h={h:.3e}, error ratio {err:.3e})"
            )));
        }
    }
    Ok(nodes)
}

/// Cubic Hermite evaluation of the tabulated solution at `x`; nodes may be in either order.
pub fn dense<const N: usize>(nodes: &[Node<N>], x: f64) -> ([Complex64; N], [Complex64; N]) {
    let n = nodes.len();
    if n == 1 {
        return (nodes[0].y, nodes[0].dy);
    }
    let increasing = nodes[n - 1].x > nodes[0].x;
    let pos = if increasing { nodes.partition_point(|nd| nd.x < x) } else { nodes.partition_point(|nd| nd.x > x) };
    let k = pos.clamp(1, n - 1);
    let (a, b) = (&nodes[k - 1], &nodes[k]);
    let h = b.x - a.x;
    let t = (x - a.x) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let (h00, h10, h01, h11) = (2.0 * t3 - 3.0 * t2 + 1.0, t3 - 2.0 * t2 + t, -2.0 * t3 + 3.0 * t2, t3 - t2);
    let (d00, d10, d01, d11) =
        ((6.0 * t2 - 6.0 * t) / h, 3.0 * t2 - 4.0 * t + 1.0, (-6.0 * t2 + 6.0 * t) / h, 3.0 * t2 - 2.0 * t);
    let mut y = [Complex64::new(0.0, 0.0); N];
    let mut dy = y;
    for i in 0..N {
        y[i] = h00 * a.y[i] + h10 * h * a.dy[i] + h01 * b.y[i] + h11 * h * b.dy[i];
        dy[i] = d00 * a.y[i] + d10 * a.dy[i] + d01 * b.y[i] + d11 * b.dy[i];
    }
    (y, dy)
}
