//! Closed-form and asymptotic reference indicators, kept in log-scaled form.

use crate::error::{Error, Result};
use crate::indicator::{IndicatorEntry, IndicatorSamples, ProbeGrid, ProblemKind, SampleMetadata};
use crate::medium::{LayeredMedium, LiouvilleFrame, SmoothMedium};
use crate::ode::{self, Tolerance};
use crate::probe::{amplitude_track, make_probe, psi_layered, psi_wkb, trans_refl, ProbeFrequency};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// `mantissa · e^{log}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogScaled {
    pub mantissa: Complex64,
    pub log: Complex64,
}

impl LogScaled {
    pub fn new(mantissa: Complex64, log: Complex64) -> Self {
        LogScaled { mantissa, log }
    }

    pub fn ln_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.log.re
    }

    /// Principal complex logarithm of the represented value.
    pub fn ln(&self) -> Complex64 {
        let l = self.mantissa.ln() + self.log;
        Complex64::new(l.re, l.im.sin().atan2(l.im.cos()))
    }

    /// The plain value; underflows to zero below the floating-point range.
    pub fn value(&self) -> Complex64 {
        self.mantissa * self.log.exp()
    }

    pub fn mul(&self, o: &LogScaled) -> LogScaled {
        LogScaled { mantissa: self.mantissa * o.mantissa, log: self.log + o.log }
    }

    /// `self / o` as a plain number (for ratios of comparable quantities).
    pub fn ratio(&self, o: &LogScaled) -> Complex64 {
        self.mantissa / o.mantissa * (self.log - o.log).exp()
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `(det R) T_12 e^{(a−b)z_2}` from the scaled matrix rows.
pub fn det_r_scaled(a: f64, b: f64, gamma: (f64, f64), probe: &ProbeFrequency) -> Complex64 {
    let (z1, z2) = (probe.scaled(gamma.0), probe.scaled(gamma.1));
    let (_, r12) = trans_refl(gamma.0, gamma.1);
    let e1 = (2.0 * b * z1).exp();
    let e2 = (2.0 * (a - b) * z2).exp();
    // first row times e^{(a−b)z_2}, second row times T_12
    let m = [[e2, c(-1.0)], [1.0 - r12 * e1, r12 - e1]];
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// `1 + R_12(e^{2(a−b)z_2} − e^{2bz_1}) − e^{2bz_1+2(a−b)z_2}`.
pub fn det_r_closed(a: f64, b: f64, gamma: (f64, f64), probe: &ProbeFrequency) -> Complex64 {
    let (z1, z2) = (probe.scaled(gamma.0), probe.scaled(gamma.1));
    let (_, r12) = trans_refl(gamma.0, gamma.1);
    let e1 = (2.0 * b * z1).exp();
    let e2 = (2.0 * (a - b) * z2).exp();
    1.0 + r12 * (e2 - e1) - e1 * e2
}

/// Principal part `I⁰` of the two-layer indicator with Neumann data `w′(0)`, `w′(a)`.
pub fn principal_indicator_two_layer(
    a: f64,
    b: f64,
    gamma: (f64, f64),
    w0: Complex64,
    wa: Complex64,
    probe: &ProbeFrequency,
) -> Result<LogScaled> {
    if !(0.0 < b && b < a) {
        return Err(Error::Validation(format!("need 0 < b < a (got b={b}, a={a})")));
    }
    let (g1, g2) = (gamma.0.sqrt(), gamma.1.sqrt());
    let (z1, z2) = (probe.z / g1, probe.z / g2);
    let (t12, _) = trans_refl(gamma.0, gamma.1);
    let d = det_r_scaled(a, b, gamma, probe);
    if d.norm() < 1e-12 {
        return Err(Error::Solvability { cond: 1.0 / d.norm() });
    }
    let e2 = (2.0 * (a - b) * z2).exp();
    let right = -2.0 * g1 * g2 * wa * (-b * z1 + (a - b) * z2).exp();
    let left = -((g1 - g2) + (g1 + g2) * e2) * t12 * g1 * w0;
    Ok(LogScaled::new((right + left) / d, 2.0 * b * z1))
}

/// Values of the solution of `(γy′)′ − z²y = 0`, `y′(0) = w′(0)`, `γy′(a) + ρy(a) = 0` at both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvpEndpoints {
    pub y0: LogScaled,
    pub ya: LogScaled,
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::Validation(format!("Robin constant {rho} must be non-negative")));
    }
    Ok(())
}

/// Layered two-point problem, solved for `y = e^{φ(x)}(Ĉ_j + D̂_j e^{2(r_j−x)z_j})` on each layer.
pub fn bvp_solve_layered(med: &LayeredMedium, probe: &ProbeFrequency, w0: Complex64, rho: f64) -> Result<BvpEndpoints> {
    check_rho(rho)?;
    let m = med.layers();
    let bp = med.breakpoints();
    let g = med.conductivities();
    let sg: Vec<f64> = g.iter().map(|v| v.sqrt()).collect();
    let zj: Vec<Complex64> = sg.iter().map(|s| probe.z / s).collect();
    let mut phi = vec![c(0.0); m];
    for j in 1..m {
        phi[j] = phi[j - 1] + bp[j] * (zj[j - 1] - zj[j]);
    }
    let decay = |j: usize| (2.0 * (bp[j + 1] - bp[j]) * zj[j]).exp();
    let n = 2 * m;
    let mut mat = DMatrix::<Complex64>::zeros(n, n);
    let mut rhs = DVector::<Complex64>::zeros(n);
    mat[(0, 0)] = c(1.0);
    mat[(0, 1)] = -decay(0);
    rhs[0] = w0 / zj[0];
    for j in 0..m - 1 {
        let ratio = sg[j + 1] / sg[j];
        let e = decay(j + 1);
        let (rc, rf) = (1 + 2 * j, 2 + 2 * j);
        mat[(rc, 2 * j)] = c(1.0);
        mat[(rc, 2 * j + 1)] = c(1.0);
        mat[(rc, 2 * j + 2)] = c(-1.0);
        mat[(rc, 2 * j + 3)] = -e;
        mat[(rf, 2 * j)] = c(1.0);
        mat[(rf, 2 * j + 1)] = c(-1.0);
        mat[(rf, 2 * j + 2)] = c(-ratio);
        mat[(rf, 2 * j + 3)] = ratio * e;
    }
    let gz = g[m - 1] * zj[m - 1];
    let scale = gz.norm() + rho;
    mat[(n - 1, n - 2)] = (gz + rho) / scale;
    mat[(n - 1, n - 1)] = (rho - gz) / scale;
    let sol = mat.lu().solve(&rhs).ok_or(Error::Solvability { cond: f64::INFINITY })?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite boundary-value solution".into()));
    }
    let a = med.depth();
    Ok(BvpEndpoints {
        y0: LogScaled::new(sol[0] + sol[1] * decay(0), c(0.0)),
        ya: LogScaled::new(sol[n - 2] + sol[n - 1], a * zj[m - 1] + phi[m - 1]),
    })
}

/// Smooth two-point problem on `[0, a]`, integrated backward from `a` for `y = K e^{zS(x)} p(x)`.
pub fn bvp_solve_smooth(
    med: &SmoothMedium,
    a: f64,
    probe: &ProbeFrequency,
    w0: Complex64,
    rho: f64,
) -> Result<BvpEndpoints> {
    check_rho(rho)?;
    if !(a > 0.0 && a <= med.domain_end() * (1.0 + 1e-14)) {
        return Err(Error::Domain(format!("endpoint a={a} outside (0, {}]", med.domain_end())));
    }
    let ga = med.gamma(a);
    let q_a = -rho - probe.z * ga.sqrt();
    let nodes = amplitude_track(med, probe.z, a, c(1.0), q_a, 0.0)?;
    let end = nodes.last().expect("integrator returns the start node");
    let g0 = med.gamma(0.0);
    let (p0, q0) = (end.y[0], end.y[1]);
    let denom = q0 / g0 + probe.z * p0 / g0.sqrt();
    let k = w0 / denom;
    Ok(BvpEndpoints {
        y0: LogScaled::new(k * p0, c(0.0)),
        ya: LogScaled::new(k, probe.z * med.slowness_between(0.0, a)),
    })
}

/// `−(ρ + γ_m z_m) Ψ(a) y(a)`, the indicator of exact Laplace data up to the `e^{−τT}` remainder.
pub fn exact_indicator_layered(
    med: &LayeredMedium,
    rho: f64,
    w0: Complex64,
    probe: &ProbeFrequency,
) -> Result<LogScaled> {
    let known = med.known_layers();
    let psi = psi_layered(&known, probe)?;
    let m = med.layers();
    let a = med.depth();
    let (psi_hat, _) = psi.eval_scaled_in(m - 1, a);
    let gm = med.conductivities()[m - 1];
    let y = bvp_solve_layered(med, probe, w0, rho)?.ya;
    let factor = -(rho + gm * probe.scaled(gm)) * psi_hat;
    Ok(LogScaled::new(factor, psi.phase(a)).mul(&y))
}

/// `−(ρΨ(a) + γ(a)Ψ′(a)) y(a)` with the probe decaying from `end ≥ a`.
pub fn exact_indicator_smooth(
    med: &SmoothMedium,
    a: f64,
    end: f64,
    rho: f64,
    w0: Complex64,
    probe: &ProbeFrequency,
) -> Result<LogScaled> {
    if a > end * (1.0 + 1e-14) {
        return Err(Error::Domain(format!("endpoint a={a} beyond probe end {end}")));
    }
    let psi = psi_wkb(med, probe, end)?;
    let (p, dp) = psi.eval_scaled(a);
    let y = bvp_solve_smooth(med, a, probe, w0, rho)?.ya;
    Ok(LogScaled::new(-(rho * p + med.gamma(a) * dp), psi.phase(a)).mul(&y))
}

/// Product of transmission coefficients `T_12⋯T_{m−1,m}`.
pub fn transmission_product(med: &LayeredMedium) -> f64 {
    med.conductivities().windows(2).map(|w| trans_refl(w[0], w[1]).0).product()
}

/// Leading large-τ form `−2√(γ_1γ_m) w′(0)(T_12⋯T_{m−1,m})²(1 + 2ρ/(z√γ_m)) e^{2φ(a)}`.
pub fn asymptotic_indicator_layered(med: &LayeredMedium, rho: f64, w0: Complex64, probe: &ProbeFrequency) -> LogScaled {
    let g = med.conductivities();
    let (g1, gm) = (g[0], g[g.len() - 1]);
    let t = transmission_product(med);
    let bracket = 1.0 + 2.0 * rho / (probe.z * gm.sqrt());
    LogScaled::new(-2.0 * (g1 * gm).sqrt() * w0 * t * t * bracket, 2.0 * probe.z * med.slowness(med.depth()))
}

/// Leading large-|z| form `−2γ(0)^{3/4} w′(0) e^{2zS(a)}`.
pub fn asymptotic_indicator_smooth(med: &SmoothMedium, a: f64, probe: &ProbeFrequency, w0: Complex64) -> LogScaled {
    let g0 = med.gamma(0.0);
    LogScaled::new(-2.0 * g0.powf(0.75) * w0, 2.0 * probe.z * med.slowness_between(0.0, a))
}

/// Solves `ỹ″ − (K²z² + g(s))ỹ = 0`, `ỹ′(0) − hỹ(0) = 1`, `ỹ′(π) + Hỹ(π) = 0` and returns
/// `ỹ(π)·Kz·e^{−Kzπ}/2`.
pub fn wkb_endpoint_check(frame: &LiouvilleFrame, z: Complex64) -> Result<Complex64> {
    if z.re > 0.0 {
        return Err(Error::Domain("endpoint check needs Re z ≤ 0".into()));
    }
    let k = frame.k();
    let kz = k * z;
    let med = frame.medium();
    // ỹ = e^{Kz(s−π)} p, with x(s) carried along as a third component.
    let rhs = |_s: f64, y: &[Complex64; 3]| {
        let x = y[2].re.clamp(0.0, frame.endpoint());
        let g = frame.g_at_x(x);
        [y[1], g * y[0] - 2.0 * kz * y[1], c(k * med.gamma(x).sqrt())]
    };
    let start = [c(1.0), -frame.big_h() - kz, c(frame.endpoint())];
    let nodes = ode::integrate(rhs, PI, start, 0.0, Tolerance { rtol: 1e-11, atol: 1e-14 })
        .map_err(|e| Error::Numerical(format!("endpoint check at z={z}: {e}")))?;
    let end = nodes.last().expect("integrator returns the start node");
    let drift = end.y[2].re.abs();
    if drift > 1e-6 * frame.endpoint() {
        return Err(Error::Numerical(format!("Liouville coordinate drifted to x={drift:.3e} at s=0")));
    }
    let (p0, dp0) = (end.y[0], end.y[1]);
    Ok(kz / (2.0 * (dp0 + (kz - frame.h()) * p0)))
}

/// Reference indicator generators.
#[derive(Debug, Clone)]
pub enum OracleModel {
    /// Two-layer principal part with Neumann data at `a` (`w′(a) = 0`).
    TwoLayerPrincipal {
        a: f64,
        b: f64,
        gamma: (f64, f64),
    },
    LayeredAsymptotic {
        medium: LayeredMedium,
        rho: f64,
    },
    LayeredExact {
        medium: LayeredMedium,
        rho: f64,
    },
    SmoothAsymptotic {
        medium: SmoothMedium,
        a: f64,
    },
    SmoothExact {
        medium: SmoothMedium,
        a: f64,
        end: f64,
        rho: f64,
    },
}

impl OracleModel {
    pub fn provenance(&self) -> &'static str {
        match self {
            OracleModel::TwoLayerPrincipal { .. } => "two-layer-principal",
            OracleModel::LayeredAsymptotic { .. } => "layered-asymptotic",
            OracleModel::LayeredExact { .. } => "layered-exact",
            OracleModel::SmoothAsymptotic { .. } => "smooth-asymptotic",
            OracleModel::SmoothExact { .. } => "smooth-exact",
        }
    }

    pub fn problem(&self) -> ProblemKind {
        match self {
            OracleModel::TwoLayerPrincipal { .. } => ProblemKind::A,
            OracleModel::LayeredAsymptotic { .. } | OracleModel::LayeredExact { .. } => ProblemKind::B,
            OracleModel::SmoothAsymptotic { .. } | OracleModel::SmoothExact { .. } => ProblemKind::C,
        }
    }

    pub fn evaluate(&self, probe: &ProbeFrequency, w0: Complex64) -> Result<LogScaled> {
        match self {
            OracleModel::TwoLayerPrincipal { a, b, gamma } => {
                principal_indicator_two_layer(*a, *b, *gamma, w0, c(0.0), probe)
            }
            OracleModel::LayeredAsymptotic { medium, rho } => Ok(asymptotic_indicator_layered(medium, *rho, w0, probe)),
            OracleModel::LayeredExact { medium, rho } => exact_indicator_layered(medium, *rho, w0, probe),
            OracleModel::SmoothAsymptotic { medium, a } => Ok(asymptotic_indicator_smooth(medium, *a, probe, w0)),
            OracleModel::SmoothExact { medium, a, end, rho } => {
                exact_indicator_smooth(medium, *a, *end, *rho, w0, probe)
            }
        }
    }
}

/// Oracle indicators over a τ grid in the sample-file layout, tagged with the model's provenance.
pub fn oracle_samples(
    model: &OracleModel,
    grid: &ProbeGrid,
    w0: &(dyn Fn(&ProbeFrequency) -> Complex64 + Sync),
    medium_hash: &str,
) -> Result<IndicatorSamples> {
    let entries: Result<Vec<IndicatorEntry>> = grid
        .taus
        .par_iter()
        .map(|&tau| {
            let probe = make_probe(grid.c, tau, grid.mode)?;
            let w = w0(&probe);
            let v = model.evaluate(&probe, w)?;
            Ok(IndicatorEntry::from_log(tau, probe.z, v.mantissa, v.log, Some(w)))
        })
        .collect();
    let metadata = SampleMetadata {
        problem: model.problem(),
        mode: grid.mode,
        c: grid.c,
        medium_hash: medium_hash.to_string(),
        provenance: model.provenance().to_string(),
    };
    IndicatorSamples::new(metadata, entries?)
}

/// `w′(0)` for the constant flux `u_x(0,t) = 1` on `[0, T]`.
pub fn unit_flux_transform(probe: &ProbeFrequency, horizon: f64) -> Complex64 {
    (1.0 - (-probe.z2 * horizon).exp()) / probe.z2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::liouville_frame;
    use crate::probe::ProbeMode;

    #[test]
    fn det_r_forms_agree() {
        for tau in [20.0, 60.0, 200.0] {
            let p = make_probe(0.25, tau, ProbeMode::Oscillatory).unwrap();
            let d1 = det_r_scaled(2.0, 0.5, (1.0, 4.0), &p);
            let d2 = det_r_closed(2.0, 0.5, (1.0, 4.0), &p);
            assert!((d1 - d2).norm() < 1e-14);
        }
    }

    #[test]
    fn single_layer_bvp_closed_form() {
        let p = make_probe(1.0, 7.0, ProbeMode::Oscillatory).unwrap();
        let med = LayeredMedium::homogeneous(1.0, 1.0).unwrap();
        let w0 = Complex64::new(0.3, -0.1);
        let e = bvp_solve_layered(&med, &p, w0, 0.0).unwrap();
        let z = p.z;
        let y = |x: f64| w0 * ((x - 1.0) * z).cosh() / (z * (-z).sinh());
        assert!((e.ya.value() - y(1.0)).norm() < 1e-10 * y(1.0).norm());
        assert!((e.y0.value() - y(0.0)).norm() < 1e-10 * y(0.0).norm());
    }

    #[test]
    fn smooth_bvp_matches_layered_for_constant_medium() {
        let p = make_probe(0.5, 30.0, ProbeMode::Oscillatory).unwrap();
        let lay = LayeredMedium::homogeneous(1.0, 2.0).unwrap();
        let smo = SmoothMedium::constant(1.5, 2.0).unwrap();
        let w0 = Complex64::new(1e-2, 3e-3);
        for rho in [0.0, 1.3] {
            let l = bvp_solve_layered(&lay, &p, w0, rho).unwrap();
            let s = bvp_solve_smooth(&smo, 1.0, &p, w0, rho).unwrap();
            assert!((l.ya.ratio(&s.ya) - 1.0).norm() < 1e-9);
            assert!((l.y0.ratio(&s.y0) - 1.0).norm() < 1e-9);
        }
    }

    #[test]
    fn single_layer_asymptotics() {
        let med = LayeredMedium::homogeneous(1.0, 1.0).unwrap();
        let p = make_probe(0.25, 200.0, ProbeMode::Oscillatory).unwrap();
        let w0 = unit_flux_transform(&p, 1.2);
        let asy = asymptotic_indicator_layered(&med, 0.0, w0, &p);
        let want = LogScaled::new(-2.0 * w0, 2.0 * p.z);
        assert!((asy.ratio(&want) - 1.0).norm() < 1e-14);
        let exact = exact_indicator_layered(&med, 0.0, w0, &p).unwrap();
        assert!((exact.ratio(&asy) - 1.0).norm() < 1e-12);
    }

    #[test]
    fn endpoint_check_closed_form() {
        // γ = 1 gives g = h = 0; ρ = 0 gives H = 0.
        let med = SmoothMedium::constant(1.0, 1.0).unwrap();
        let frame = liouville_frame(&med, 1.0, 0.0).unwrap();
        let p = make_probe(1.0, 3.0, ProbeMode::Oscillatory).unwrap();
        let k = frame.k() * p.z;
        let want = 1.0 / (1.0 - (2.0 * k * PI).exp());
        let got = wkb_endpoint_check(&frame, p.z).unwrap();
        assert!((got - want).norm() < 1e-9);
    }

    #[test]
    fn oracle_csv_is_tagged() {
        let model = OracleModel::TwoLayerPrincipal { a: 2.0, b: 0.5, gamma: (1.0, 4.0) };
        let grid = ProbeGrid { c: 0.25, mode: ProbeMode::Oscillatory, taus: vec![20.0, 40.0, 80.0] };
        let s = oracle_samples(&model, &grid, &|p| unit_flux_transform(p, 1.2), "h").unwrap();
        assert_eq!(s.metadata.provenance, "two-layer-principal");
        let back = IndicatorSamples::from_csv(&s.to_csv()).unwrap();
        assert_eq!(back, s);
    }
}
