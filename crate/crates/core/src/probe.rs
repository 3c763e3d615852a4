//! Probe solutions `Ψ` of `(γΨ′)′ − z²Ψ = 0`, stored relative to a complex phase.

use crate::error::{Error, Result};
use crate::medium::{KnownLayers, LayeredMedium, SmoothMedium};
use crate::ode::{self, Node, Tolerance};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Largest condition number accepted for the transmission system.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeMode {
    /// `z = −cτ(1 + i√(1 − 1/(c²τ)))`.
    Oscillatory,
    /// `z = −τ`.
    RealRay,
}

impl std::fmt::Display for ProbeMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProbeMode::Oscillatory => "oscillatory",
            ProbeMode::RealRay => "real-ray",
        })
    }
}

/// Complex frequency of the probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeFrequency {
    pub c: f64,
    pub tau: f64,
    pub z: Complex64,
    /// `z²`, computed so that `Re z² = τ` exactly in oscillatory mode.
    pub z2: Complex64,
    pub mode: ProbeMode,
}

pub fn make_probe(c: f64, tau: f64, mode: ProbeMode) -> Result<ProbeFrequency> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::Domain(format!("τ={tau} must be positive")));
    }
    match mode {
        ProbeMode::Oscillatory => {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::Domain(format!("speed scale c={c} must be positive")));
            }
            if tau * c * c <= 1.0 {
                return Err(Error::Domain(format!("oscillatory probe needs τ > 1/c² = {}", 1.0 / (c * c))));
            }
            let r = (1.0 - 1.0 / (c * c * tau)).sqrt();
            let z = Complex64::new(-c * tau, -c * tau * r);
            let z2 = Complex64::new(tau, 2.0 * c * c * tau * tau * r);
            Ok(ProbeFrequency { c, tau, z, z2, mode })
        }
        ProbeMode::RealRay => {
            Ok(ProbeFrequency { c: 1.0, tau, z: Complex64::new(-tau, 0.0), z2: Complex64::new(tau * tau, 0.0), mode })
        }
    }
}

impl ProbeFrequency {
    /// `z_j = z/√γ_j`.
    pub fn scaled(&self, gamma: f64) -> Complex64 {
        self.z / gamma.sqrt()
    }

    /// Speed scale entering the travel time (`1` in real-ray mode).
    pub fn speed(&self) -> f64 {
        match self.mode {
            ProbeMode::Oscillatory => self.c,
            ProbeMode::RealRay => 1.0,
        }
    }
}

/// Transmission and reflection coefficients `(T_kl, R_kl)`.
pub fn trans_refl(gamma_k: f64, gamma_l: f64) -> (f64, f64) {
    let (sk, sl) = (gamma_k.sqrt(), gamma_l.sqrt());
    (2.0 * sk / (sk + sl), (sk - sl) / (sk + sl))
}

/// `Ψ(x) = e^{x z/√γ_1}`.
pub fn psi_single(x: f64, probe: &ProbeFrequency, gamma1: f64) -> Complex64 {
    (x * probe.scaled(gamma1)).exp()
}

/// Layered probe in scaled form: on layer `j`,
/// `Ψ(x) = e^{φ(x)} (Â_j + B̂_j e^{2(b_j − x) z_j})` with `φ(x) = x z_j + φ_j`.
#[derive(Debug, Clone)]
pub struct LayeredProbe {
    pub known: KnownLayers,
    pub z: Complex64,
    pub a_hat: Vec<Complex64>,
    pub b_hat: Vec<Complex64>,
    pub phase_offsets: Vec<Complex64>,
    pub condition: f64,
}

fn layer_z(known: &KnownLayers, z: Complex64) -> Vec<Complex64> {
    known.conductivities().iter().map(|g| z / g.sqrt()).collect()
}

fn phase_offsets(known: &KnownLayers, zj: &[Complex64]) -> Vec<Complex64> {
    let b = known.interfaces();
    let mut phi = vec![Complex64::new(0.0, 0.0); zj.len()];
    for j in 1..zj.len() {
        phi[j] = phi[j - 1] + b[j] * (zj[j - 1] - zj[j]);
    }
    phi
}

/// `E_{j+1} = e^{2(b_{j+1} − b_j) z_{j+1}}` for 0-based layer `j+1 ≤ m−2`.
fn decay(known: &KnownLayers, zj: &[Complex64], j: usize) -> Complex64 {
    let b = known.interfaces();
    (2.0 * (b[j + 1] - b[j]) * zj[j]).exp()
}

fn matrix_norm1(m: &DMatrix<Complex64>) -> f64 {
    (0..m.ncols()).map(|c| m.column(c).iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Solves the transmission conditions at every interior interface for the scaled coefficients.
pub fn psi_layered(known: &KnownLayers, probe: &ProbeFrequency) -> Result<LayeredProbe> {
    let m = known.layers();
    let zj = layer_z(known, probe.z);
    let phi = phase_offsets(known, &zj);
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    if m == 1 {
        return Ok(LayeredProbe {
            known: known.clone(),
            z: probe.z,
            a_hat: vec![one],
            b_hat: vec![zero],
            phase_offsets: phi,
            condition: 1.0,
        });
    }
    let sg: Vec<f64> = known.conductivities().iter().map(|g| g.sqrt()).collect();
    let n = 2 * (m - 1);
    // Unknowns: B̂_1, Â_2, B̂_2, …, Â_{m-1}, B̂_{m-1}, Â_m (0-based layers below).
    let a_idx = |j: usize| 2 * j - 1;
    let b_idx = |j: usize| 2 * j;
    let mut mat = DMatrix::<Complex64>::zeros(n, n);
    let mut rhs = nalgebra::DVector::<Complex64>::zeros(n);
    for j in 0..m - 1 {
        let (rc, rf) = (2 * j, 2 * j + 1);
        let ratio = sg[j + 1] / sg[j];
        if j == 0 {
            rhs[rc] = -one;
            rhs[rf] = -one;
        } else {
            mat[(rc, a_idx(j))] = one;
            mat[(rf, a_idx(j))] = one;
        }
        mat[(rc, b_idx(j))] = one;
        mat[(rf, b_idx(j))] = -one;
        mat[(rc, a_idx(j + 1))] = -one;
        mat[(rf, a_idx(j + 1))] = Complex64::new(-ratio, 0.0);
        if j + 1 < m - 1 {
            let e = decay(known, &zj, j + 1);
            mat[(rc, b_idx(j + 1))] = -e;
            mat[(rf, b_idx(j + 1))] = ratio * e;
        }
    }
    let lu = mat.clone().lu();
    let inv = lu.try_inverse().ok_or(Error::Solvability { cond: f64::INFINITY })?;
    let cond = matrix_norm1(&mat) * matrix_norm1(&inv);
    if !(cond.is_finite() && cond < MAX_CONDITION) {
        return Err(Error::Solvability { cond });
    }
    let sol = &inv * &rhs;
    let mut a_hat = vec![one; m];
    let mut b_hat = vec![zero; m];
    for j in 0..m - 1 {
        b_hat[j] = sol[b_idx(j)];
        a_hat[j + 1] = sol[a_idx(j + 1)];
    }
    Ok(LayeredProbe { known: known.clone(), z: probe.z, a_hat, b_hat, phase_offsets: phi, condition: cond })
}

impl LayeredProbe {
    fn layer_of(&self, x: f64) -> usize {
        let b = self.known.interfaces();
        b[1..].partition_point(|v| *v < x)
    }

    fn zj(&self, j: usize) -> Complex64 {
        self.z / self.known.conductivities()[j].sqrt()
    }

    /// Phase `φ(x)`.
    pub fn phase(&self, x: f64) -> Complex64 {
        let j = self.layer_of(x);
        x * self.zj(j) + self.phase_offsets[j]
    }

    /// `(Ψ e^{−φ}, Ψ′ e^{−φ})` at `x`, using the layer on the left at breakpoints.
    pub fn eval_scaled(&self, x: f64) -> (Complex64, Complex64) {
        self.eval_scaled_in(self.layer_of(x), x)
    }

    /// Scaled value and derivative using the representation of layer `j` (0-based).
    pub fn eval_scaled_in(&self, j: usize, x: f64) -> (Complex64, Complex64) {
        let zj = self.zj(j);
        let refl = if j + 1 < self.a_hat.len() {
            self.b_hat[j] * (2.0 * (self.known.interfaces()[j + 1] - x) * zj).exp()
        } else {
            Complex64::new(0.0, 0.0)
        };
        (self.a_hat[j] + refl, zj * (self.a_hat[j] - refl))
    }

    /// Unscaled `(Ψ(x), Ψ′(x))`.
    pub fn eval(&self, x: f64) -> (Complex64, Complex64) {
        let (p, d) = self.eval_scaled(x);
        let e = self.phase(x).exp();
        (p * e, d * e)
    }

    /// `Ψ(0) = 1 + B_1`.
    pub fn psi0(&self) -> Complex64 {
        self.eval_scaled_in(0, 0.0).0
    }

    /// `Ψ′(0) = z_1(1 − B_1)`.
    pub fn dpsi0(&self) -> Complex64 {
        self.eval_scaled_in(0, 0.0).1
    }

    /// Unscaled coefficients `(A_j, B_j)` of `Ψ = A_j e^{x z_j} + B_j e^{−x z_j}`.
    pub fn unscaled(&self) -> Vec<(Complex64, Complex64)> {
        let b = self.known.interfaces();
        (0..self.a_hat.len())
            .map(|j| {
                let a = self.a_hat[j] * self.phase_offsets[j].exp();
                let bb = if j + 1 < self.a_hat.len() {
                    self.b_hat[j] * (2.0 * b[j + 1] * self.zj(j) + self.phase_offsets[j]).exp()
                } else {
                    Complex64::new(0.0, 0.0)
                };
                (a, bb)
            })
            .collect()
    }

    /// Residuals of the scaled transmission equations.
    pub fn residual(&self) -> f64 {
        let sg: Vec<f64> = self.known.conductivities().iter().map(|g| g.sqrt()).collect();
        let b = self.known.interfaces();
        let mut r = 0.0f64;
        for j in 0..self.a_hat.len() - 1 {
            let (l, dl) = self.eval_scaled_in(j, b[j + 1]);
            let (rr, dr) = self.eval_scaled_in(j + 1, b[j + 1]);
            r = r.max((l - rr).norm());
            r = r.max((sg[j] * sg[j] * dl - sg[j + 1] * sg[j + 1] * dr).norm() / (sg[j] * self.z.norm()));
        }
        r
    }

    /// Diagnostic CSV `j,re_A,im_A,re_B,im_B` of the scaled coefficients.
    pub fn coefficients_csv(&self) -> String {
        let mut s = String::from("j,re_A,im_A,re_B,im_B\n");
        for j in 0..self.a_hat.len() {
            let _ = writeln!(
                s,
                "{},{:.16e},{:.16e},{:.16e},{:.16e}",
                j + 1,
                self.a_hat[j].re,
                self.a_hat[j].im,
                self.b_hat[j].re,
                self.b_hat[j].im
            );
        }
        s
    }
}

/// Scaled backward recurrence from `Â_m = 1, B̂_m = 0`, normalised by `Â_1`.
pub fn scaled_recurrence(known: &KnownLayers, probe: &ProbeFrequency) -> (Vec<Complex64>, Vec<Complex64>) {
    let m = known.layers();
    let zj = layer_z(known, probe.z);
    let sg: Vec<f64> = known.conductivities().iter().map(|g| g.sqrt()).collect();
    let mut a = vec![Complex64::new(0.0, 0.0); m];
    let mut b = a.clone();
    a[m - 1] = Complex64::new(1.0, 0.0);
    for j in (0..m - 1).rev() {
        let e = if j + 1 < m - 1 { decay(known, &zj, j + 1) } else { Complex64::new(0.0, 0.0) };
        let p = a[j + 1] + b[j + 1] * e;
        let q = sg[j + 1] / sg[j] * (a[j + 1] - b[j + 1] * e);
        a[j] = 0.5 * (p + q);
        b[j] = 0.5 * (p - q);
    }
    let n = a[0];
    (a.iter().map(|v| v / n).collect(), b.iter().map(|v| v / n).collect())
}

/// Unscaled coefficient recurrence
/// `A_j = (1/T)A_{j+1}e^{b_j(z_{j+1}−z_j)} + (R/T)B_{j+1}e^{−b_j(z_{j+1}+z_j)}`,
/// `B_j = (R/T)A_{j+1}e^{b_j(z_{j+1}+z_j)} + (1/T)B_{j+1}e^{−b_j(z_{j+1}−z_j)}`,
/// started from `A_m = 1, B_m = 0` and normalised by `A_1`.
pub fn coefficient_recurrence(known: &KnownLayers, probe: &ProbeFrequency) -> Vec<(Complex64, Complex64)> {
    let m = known.layers();
    let zj = layer_z(known, probe.z);
    let g = known.conductivities();
    let b = known.interfaces();
    let mut out = vec![(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)); m];
    out[m - 1].0 = Complex64::new(1.0, 0.0);
    for j in (0..m - 1).rev() {
        let (t, r) = trans_refl(g[j], g[j + 1]);
        let bj = b[j + 1];
        let (an, bn) = out[j + 1];
        let a = an * (bj * (zj[j + 1] - zj[j])).exp() / t + r / t * bn * (-bj * (zj[j + 1] + zj[j])).exp();
        let bb = r / t * an * (bj * (zj[j + 1] + zj[j])).exp() + bn * (-bj * (zj[j + 1] - zj[j])).exp() / t;
        out[j] = (a, bb);
    }
    let n = out[0].0;
    out.iter().map(|(a, b)| (a / n, b / n)).collect()
}

pub type Mat2 = [[Complex64; 2]; 2];

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// `K_j = [[1, 1], [√γ_j, −√γ_j]]`.
pub fn k_matrix(gamma: f64) -> Mat2 {
    let s = Complex64::new(gamma.sqrt(), 0.0);
    let one = Complex64::new(1.0, 0.0);
    [[one, one], [s, -s]]
}

/// `K_j⁻¹ = (1/(2√γ_j)) [[√γ_j, 1], [√γ_j, −1]]`.
pub fn k_inverse(gamma: f64) -> Mat2 {
    let s = gamma.sqrt();
    let f = 1.0 / (2.0 * s);
    [[Complex64::new(f * s, 0.0), Complex64::new(f, 0.0)], [Complex64::new(f * s, 0.0), Complex64::new(-f, 0.0)]]
}

/// Transfer matrix `L(z) = Π_{j=2}^m K_{j−1}⁻¹ K_j α_j` with `α_j = diag(1, e^{2(b_j−b_{j−1}) z_j})`.
pub fn l_matrix(med: &LayeredMedium, probe: &ProbeFrequency) -> Result<Mat2> {
    let m = med.layers();
    if m < 2 {
        return Err(Error::Validation("transfer matrix needs at least two layers".into()));
    }
    let b = med.breakpoints();
    let g = med.conductivities();
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut l = [[one, zero], [zero, one]];
    for j in 1..m {
        let step = mat_mul(&k_inverse(g[j - 1]), &k_matrix(g[j]));
        let e = (2.0 * (b[j + 1] - b[j]) * probe.scaled(g[j])).exp();
        let alpha = [[one, zero], [zero, e]];
        l = mat_mul(&l, &mat_mul(&step, &alpha));
    }
    Ok(l)
}

/// Rank-one large-τ limit `(1/(T_12⋯T_{m−1,m})) [[1, 0], [R_12, 0]]`.
pub fn l_matrix_limit(med: &LayeredMedium) -> Mat2 {
    let g = med.conductivities();
    let prod_t: f64 = g.windows(2).map(|w| trans_refl(w[0], w[1]).0).product();
    let r12 = if g.len() > 1 { trans_refl(g[0], g[1]).1 } else { 0.0 };
    let zero = Complex64::new(0.0, 0.0);
    [[Complex64::new(1.0 / prod_t, 0.0), zero], [Complex64::new(r12 / prod_t, 0.0), zero]]
}

/// WKB-type probe `Ψ = e^{zS(x)} p(x)` with `S = ∫_0^x dt/√γ`, tabulated on the integrator's nodes.
#[derive(Debug, Clone)]
pub struct WkbProbe {
    medium: SmoothMedium,
    pub z: Complex64,
    pub end: f64,
    /// Nodes carry `(p, q = γ p′)`.
    nodes: Vec<Node<2>>,
}

/// Right-hand side of `p′ = q/γ`, `q′ = −(2ζ/√γ) q − ζ (√γ)′ p`.
fn wkb_rhs(med: &SmoothMedium, zeta: Complex64, x: f64, y: &[Complex64; 2]) -> [Complex64; 2] {
    let j = med.jet(x);
    let sg = j.v.sqrt();
    let dsg = j.d1 / (2.0 * sg);
    [y[1] / j.v, -(2.0 * zeta / sg) * y[1] - zeta * dsg * y[0]]
}

/// Integrates the amplitude equation for `Ψ = e^{ζS}p` from `x0` to `x1` starting at the leading WKB term.
pub fn wkb_track(med: &SmoothMedium, zeta: Complex64, x0: f64, x1: f64) -> Result<Vec<Node<2>>> {
    let j = med.jet(x0);
    let p0 = j.v.powf(-0.25);
    let q0 = -0.25 * j.d1 * p0;
    amplitude_track(med, zeta, x0, Complex64::new(p0, 0.0), Complex64::new(q0, 0.0), x1)
}

/// Integrates the amplitude equation for `Ψ = e^{ζS}p` from `(p, γp′) = (p0, q0)` at `x0` to `x1`.
pub fn amplitude_track(
    med: &SmoothMedium,
    zeta: Complex64,
    x0: f64,
    p0: Complex64,
    q0: Complex64,
    x1: f64,
) -> Result<Vec<Node<2>>> {
    ode::integrate(|x, y| wkb_rhs(med, zeta, x, y), x0, [p0, q0], x1, Tolerance { rtol: 1e-11, atol: 1e-14 })
}

/// Decaying probe on `[0, M]`, integrated backward from `M`.
pub fn psi_wkb(med: &SmoothMedium, probe: &ProbeFrequency, end: f64) -> Result<WkbProbe> {
    if probe.z.re > 0.0 {
        return Err(Error::Domain("WKB probe needs Re z ≤ 0".into()));
    }
    if !(end > 0.0 && end <= med.domain_end() * (1.0 + 1e-14)) {
        return Err(Error::Domain(format!("probe end {end} outside (0, {}]", med.domain_end())));
    }
    let mut nodes = wkb_track(med, probe.z, end, 0.0)?;
    nodes.reverse();
    Ok(WkbProbe { medium: med.clone(), z: probe.z, end, nodes })
}

impl WkbProbe {
    /// Phase `z S(x)`.
    pub fn phase(&self, x: f64) -> Complex64 {
        self.z * self.medium.slowness_between(0.0, x)
    }

    /// `(Ψ e^{−zS}, Ψ′ e^{−zS})` at `x`.
    pub fn eval_scaled(&self, x: f64) -> (Complex64, Complex64) {
        let (y, _) = ode::dense(&self.nodes, x);
        let g = self.medium.gamma(x);
        (y[0], y[1] / g + self.z * y[0] / g.sqrt())
    }

    pub fn eval(&self, x: f64) -> (Complex64, Complex64) {
        let (p, d) = self.eval_scaled(x);
        let e = self.phase(x).exp();
        (p * e, d * e)
    }

    pub fn psi0(&self) -> Complex64 {
        self.eval_scaled(0.0).0
    }

    pub fn dpsi0(&self) -> Complex64 {
        self.eval_scaled(0.0).1
    }

    /// Tabulated `(x, p, γp′)`.
    pub fn samples(&self) -> impl Iterator<Item = (f64, Complex64, Complex64)> + '_ {
        self.nodes.iter().map(|n| (n.x, n.y[0], n.y[1]))
    }

    pub fn medium(&self) -> &SmoothMedium {
        &self.medium
    }
}

/// Probe solution of any kind.
#[derive(Debug, Clone)]
pub enum ProbeSolution {
    Single { z1: Complex64 },
    Layered(LayeredProbe),
    Wkb(WkbProbe),
}

impl ProbeSolution {
    pub fn psi0(&self) -> Complex64 {
        match self {
            ProbeSolution::Single { .. } => Complex64::new(1.0, 0.0),
            ProbeSolution::Layered(p) => p.psi0(),
            ProbeSolution::Wkb(p) => p.psi0(),
        }
    }

    pub fn dpsi0(&self) -> Complex64 {
        match self {
            ProbeSolution::Single { z1 } => *z1,
            ProbeSolution::Layered(p) => p.dpsi0(),
            ProbeSolution::Wkb(p) => p.dpsi0(),
        }
    }

    pub fn phase(&self, x: f64) -> Complex64 {
        match self {
            ProbeSolution::Single { z1 } => x * z1,
            ProbeSolution::Layered(p) => p.phase(x),
            ProbeSolution::Wkb(p) => p.phase(x),
        }
    }

    pub fn eval_scaled(&self, x: f64) -> (Complex64, Complex64) {
        match self {
            ProbeSolution::Single { z1 } => (Complex64::new(1.0, 0.0), *z1),
            ProbeSolution::Layered(p) => p.eval_scaled(x),
            ProbeSolution::Wkb(p) => p.eval_scaled(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn probe_examples() {
        let p = make_probe(1.0, 2.0, ProbeMode::Oscillatory).unwrap();
        assert!((p.z - c(-2.0, -2f64.sqrt())).norm() < 1e-15);
        assert!(((p.z * p.z) - p.z2).norm() < 1e-13);
        assert_eq!(p.z2.re, 2.0);
        let near = make_probe(1.0, 1.0 + 1e-12, ProbeMode::Oscillatory).unwrap();
        assert!((near.z - c(-1.0, 0.0)).norm() < 1e-5);
        assert!(make_probe(1.0, 1.0, ProbeMode::Oscillatory).is_err());
        assert!(make_probe(0.5, 3.9, ProbeMode::Oscillatory).is_err());
        let r = make_probe(0.5, 3.0, ProbeMode::RealRay).unwrap();
        assert_eq!(r.z, c(-3.0, 0.0));
        assert_eq!(r.z2, c(9.0, 0.0));
        assert!(make_probe(1.0, 0.0, ProbeMode::RealRay).is_err());
    }

    #[test]
    fn trans_refl_examples() {
        assert_eq!(trans_refl(2.5, 2.5), (1.0, 0.0));
        let (t, r) = trans_refl(1.0, 4.0);
        assert!((t - 2.0 / 3.0).abs() < 1e-15 && (r + 1.0 / 3.0).abs() < 1e-15);
        let (t, r) = trans_refl(0.3, 7.0);
        assert!((t - 1.0 - r).abs() < 1e-15);
    }

    #[test]
    fn psi_single_examples() {
        let p = make_probe(1.0, 2.0, ProbeMode::Oscillatory).unwrap();
        assert_eq!(psi_single(0.0, &p, 3.0), c(1.0, 0.0));
        assert!((psi_single(1.0, &p, 1.0) - c(-2.0, -2f64.sqrt()).exp()).norm() < 1e-15);
    }

    #[test]
    fn single_layer_probe_has_no_coefficients() {
        let p = make_probe(1.0, 5.0, ProbeMode::Oscillatory).unwrap();
        let lp = psi_layered(&KnownLayers::single(2.0).unwrap(), &p).unwrap();
        assert_eq!(lp.psi0(), c(1.0, 0.0));
        assert!((lp.dpsi0() - p.z / 2f64.sqrt()).norm() < 1e-15);
        let (v, _) = lp.eval(0.7);
        assert!((v - psi_single(0.7, &p, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn invisible_interface() {
        let p = make_probe(1.0, 30.0, ProbeMode::Oscillatory).unwrap();
        let k = KnownLayers::new(vec![0.0, 0.5], vec![3.0, 3.0]).unwrap();
        let lp = psi_layered(&k, &p).unwrap();
        assert!(lp.b_hat[0].norm() < 1e-15);
        assert!((lp.a_hat[1] - 1.0).norm() < 1e-15);
    }

    #[test]
    fn two_layer_against_direct_solve() {
        let p = make_probe(1.0, 50.0, ProbeMode::Oscillatory).unwrap();
        let k = KnownLayers::new(vec![0.0, 0.5], vec![1.0, 4.0]).unwrap();
        let lp = psi_layered(&k, &p).unwrap();
        // Unscaled 2×2 system for (B_1, A_2): e^{bz1} + B_1e^{-bz1} = A_2e^{bz2}, z1(e^{bz1} − B_1e^{-bz1}) = 4 z2 A_2 e^{bz2}
        let (z1, z2, b) = (p.z, p.z / 2.0, 0.5);
        let (e1, em1, e2) = ((b * z1).exp(), (-b * z1).exp(), (b * z2).exp());
        let m = [[em1, -e2], [-z1 * em1, -4.0 * z2 * e2]];
        let r = [-e1, -z1 * e1];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let b1 = (r[0] * m[1][1] - m[0][1] * r[1]) / det;
        let a2 = (m[0][0] * r[1] - r[0] * m[1][0]) / det;
        let un = lp.unscaled();
        assert!((un[0].1 - b1).norm() < 1e-10 * b1.norm().max(1.0));
        assert!((un[1].0 - a2).norm() < 1e-10 * a2.norm().max(1e-300));
        assert!(lp.residual() < 1e-12);
    }

    #[test]
    fn continuity_at_breakpoints() {
        let p = make_probe(0.5, 40.0, ProbeMode::Oscillatory).unwrap();
        let k = KnownLayers::new(vec![0.0, 0.3, 0.8, 1.1], vec![1.0, 5.0, 0.5, 2.0]).unwrap();
        let lp = psi_layered(&k, &p).unwrap();
        let g = k.conductivities();
        for j in 0..3 {
            let x = k.interfaces()[j + 1];
            let (l, dl) = lp.eval_scaled_in(j, x);
            let (r, dr) = lp.eval_scaled_in(j + 1, x);
            assert!((l - r).norm() <= 1e-10 * l.norm());
            assert!((g[j] * dl - g[j + 1] * dr).norm() <= 1e-10 * (g[j] * dl).norm());
        }
    }

    #[test]
    fn recurrences_agree_with_solver() {
        let p = make_probe(1.0, 8.0, ProbeMode::Oscillatory).unwrap();
        let k = KnownLayers::new(vec![0.0, 0.2, 0.5, 0.6], vec![1.0, 2.0, 0.7, 3.0]).unwrap();
        let lp = psi_layered(&k, &p).unwrap();
        let (a, b) = scaled_recurrence(&k, &p);
        for j in 0..4 {
            assert!((a[j] - lp.a_hat[j]).norm() < 1e-12);
            assert!((b[j] - lp.b_hat[j]).norm() < 1e-12);
        }
        let rec = coefficient_recurrence(&k, &p);
        for (u, r) in lp.unscaled().iter().zip(&rec) {
            assert!((u.0 - r.0).norm() < 1e-10 * u.0.norm().max(1.0));
            assert!((u.1 - r.1).norm() < 1e-10 * u.1.norm().max(1.0));
        }
    }

    #[test]
    fn k_inverse_identity() {
        for g in [0.3, 1.0, 7.5] {
            let p = mat_mul(&k_inverse(g), &k_matrix(g));
            assert!((p[0][0] - 1.0).norm() < 1e-14 && p[0][1].norm() < 1e-14);
            assert!(p[1][0].norm() < 1e-14 && (p[1][1] - 1.0).norm() < 1e-14);
        }
    }

    #[test]
    fn l_matrix_without_contrast() {
        let med = LayeredMedium::new(vec![0.0, 0.5, 1.0], vec![2.0, 2.0]).unwrap();
        let p = make_probe(1.0, 200.0, ProbeMode::Oscillatory).unwrap();
        let l = l_matrix(&med, &p).unwrap();
        let lim = l_matrix_limit(&med);
        assert!((lim[0][0] - 1.0).norm() < 1e-15 && lim[1][0].norm() < 1e-15);
        for i in 0..2 {
            for j in 0..2 {
                assert!((l[i][j] - lim[i][j]).norm() < 1e-40);
            }
        }
    }

    #[test]
    fn wkb_constant_medium() {
        let med = SmoothMedium::from_expr(1.0, "1").unwrap();
        let p = make_probe(0.5, 30.0, ProbeMode::Oscillatory).unwrap();
        let w = psi_wkb(&med, &p, 1.0).unwrap();
        for x in [0.0, 0.4, 1.0] {
            let (ps, _) = w.eval_scaled(x);
            assert!((ps - 1.0).norm() < 1e-12);
        }
        assert!((w.dpsi0() - p.z).norm() < 1e-11 * p.z.norm());
        let med = SmoothMedium::from_expr(1.0, "4").unwrap();
        let w = psi_wkb(&med, &p, 1.0).unwrap();
        let (v, _) = w.eval(0.6);
        let want = 4f64.powf(-0.25) * (0.6 * p.z / 2.0).exp();
        assert!((v - want).norm() < 1e-11 * want.norm());
    }
}
