//! Log-slope fits of indicator samples and their inversion to geometry.

use crate::error::{Error, Result};
use crate::indicator::{FluxAdmissibility, IndicatorSamples, ProblemKind, SampleFlag};
use crate::medium::{KnownLayers, LayeredMedium, SmoothMedium};
use crate::oracle::transmission_product;
use crate::probe::{ProbeFrequency, ProbeMode};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModel {
    /// [`FitModel::Linear`] for normalised fits, [`FitModel::ThreeTerm`] otherwise.
    Auto,
    /// `ln|I| = sτ + p lnτ + q`.
    ThreeTerm,
    /// `ln|I| = sτ + q`.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    pub model: FitModel,
    pub min_samples: usize,
    /// Fit `ln|I| − ln|w′(0)|` when `w′(0)` is recorded.
    pub normalise: bool,
    pub bootstrap: usize,
    pub seed: u64,
    /// Optional restriction of the window.
    pub tau_min: Option<f64>,
    pub tau_max: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            model: FitModel::Auto,
            min_samples: 8,
            normalise: true,
            bootstrap: 200,
            seed: 0x5eed,
            tau_min: None,
            tau_max: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Census {
    pub ok: usize,
    pub underflow: usize,
    pub noisy: usize,
    pub error: usize,
}

impl Census {
    pub fn of(samples: &IndicatorSamples) -> Self {
        let c = samples.census();
        Census { ok: c[0].1, underflow: c[1].1, noisy: c[2].1, error: c[3].1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub s: f64,
    pub p: f64,
    pub q: f64,
    /// 95% bootstrap half-width of `s`.
    #[serde(with = "crate::nonfinite")]
    pub half_width: f64,
    /// RMS residual of the fit.
    pub residual: f64,
    pub window: (f64, f64),
    pub samples_used: usize,
    pub model: FitModel,
    pub normalised: bool,
    pub census: Census,
}

impl SlopeFit {
    /// Fitted `ln|I|/τ` (normalised if the fit was) at `τ`.
    pub fn asymptote(&self, tau: f64) -> f64 {
        self.s + (self.p * tau.ln() + self.q) / tau
    }
}

fn least_squares(x: &[f64], y: &[f64], model: FitModel) -> Result<(f64, f64, f64)> {
    let n = x.len();
    let cols = match model {
        FitModel::Linear => 2,
        _ => 3,
    };
    let tmean = x.iter().sum::<f64>() / n as f64;
    let tscale = x.iter().map(|t| (t - tmean).abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let lmean = x.iter().map(|t| t.ln()).sum::<f64>() / n as f64;
    let lscale = x.iter().map(|t| (t.ln() - lmean).abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut m = DMatrix::<f64>::zeros(n, cols);
    for (i, t) in x.iter().enumerate() {
        m[(i, 0)] = (t - tmean) / tscale;
        m[(i, 1)] = 1.0;
        if cols == 3 {
            m[(i, 2)] = (t.ln() - lmean) / lscale;
        }
    }
    let svd = m.svd(true, true);
    let sol = svd
        .solve(&DVector::from_column_slice(y), 1e-14)
        .map_err(|e| Error::Numerical(format!("slope least squares failed: {e}")))?;
    let s = sol[0] / tscale;
    let p = if cols == 3 { sol[2] / lscale } else { 0.0 };
    let q = sol[1] - s * tmean - p * lmean;
    Ok((s, p, q))
}

/// Fits the log-decay model on the longest run of consecutive unflagged samples.
pub fn fit_log_slope(samples: &IndicatorSamples, opts: &FitOptions) -> Result<SlopeFit> {
    let census = Census::of(samples);
    let lo = opts.tau_min.unwrap_or(f64::NEG_INFINITY);
    let hi = opts.tau_max.unwrap_or(f64::INFINITY);
    let entries: Vec<_> = samples.entries.iter().filter(|e| e.tau >= lo && e.tau <= hi).collect();
    let normalised = opts.normalise && entries.iter().all(|e| e.w0.is_some());
    let usable = |e: &&&crate::indicator::IndicatorEntry| {
        e.flag == SampleFlag::Ok
            && e.log_abs.is_finite()
            && (!normalised || e.w0.map(|w| w.norm() > 0.0).unwrap_or(false))
    };
    let (mut best, mut start) = ((0usize, 0usize), None);
    for (i, e) in entries.iter().enumerate() {
        if usable(&e) {
            let s0 = *start.get_or_insert(i);
            if i + 1 - s0 > best.1 - best.0 {
                best = (s0, i + 1);
            }
        } else {
            start = None;
        }
    }
    let run = &entries[best.0..best.1];
    if run.len() < opts.min_samples.max(3) {
        return Err(Error::Extraction(format!(
            "fit window has {} usable samples, need {} (ok {}, underflow {}, noisy {}, error {})",
            run.len(),
            opts.min_samples.max(3),
            census.ok,
            census.underflow,
            census.noisy,
            census.error
        )));
    }
    let x: Vec<f64> = run.iter().map(|e| e.tau).collect();
    let y: Vec<f64> = run
        .iter()
        .map(|e| if normalised { e.log_abs - e.w0.expect("checked").norm().ln() } else { e.log_abs })
        .collect();
    let model = match opts.model {
        FitModel::Auto if normalised => FitModel::Linear,
        FitModel::Auto => FitModel::ThreeTerm,
        m => m,
    };
    let (s, p, q) = least_squares(&x, &y, model)?;
    let fitted: Vec<f64> = x.iter().map(|t| s * t + p * t.ln() + q).collect();
    let resid: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let residual = (resid.iter().map(|r| r * r).sum::<f64>() / resid.len() as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut draws = Vec::with_capacity(opts.bootstrap);
    for _ in 0..opts.bootstrap {
        let yb: Vec<f64> = fitted.iter().map(|f| f + resid.choose(&mut rng).expect("nonempty")).collect();
        if let Ok((sb, _, _)) = least_squares(&x, &yb, model) {
            draws.push(sb);
        }
    }
    let half_width = if draws.len() > 1 {
        let m = draws.iter().sum::<f64>() / draws.len() as f64;
        1.96 * (draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (draws.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(SlopeFit {
        s,
        p,
        q,
        half_width,
        residual,
        window: (x[0], x[x.len() - 1]),
        samples_used: x.len(),
        model,
        normalised,
        census,
    })
}

fn check_slope(s_star: f64, c: f64) -> Result<()> {
    if !(s_star < 0.0 && s_star.is_finite()) {
        return Err(Error::Extraction(format!("slope {s_star} is not negative; no travel time can be inferred")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Validation(format!("speed scale c={c} must be positive")));
    }
    Ok(())
}

/// `b = −s*√γ_1/(2c)`.
pub fn recover_interface(s_star: f64, c: f64, gamma1: f64) -> Result<f64> {
    check_slope(s_star, c)?;
    Ok(-s_star * gamma1.sqrt() / (2.0 * c))
}

/// `a = b_{m−1} + √γ_m(−s*/(2c) − one-way slowness of the known layers)`.
pub fn recover_boundary_layered(s_star: f64, c: f64, known: &KnownLayers) -> Result<f64> {
    check_slope(s_star, c)?;
    let last = known.last_interface();
    let gm = *known.conductivities().last().expect("validated");
    let rest = -s_star / (2.0 * c) - known.slowness(last);
    if rest <= 0.0 {
        return Err(Error::Extraction(format!(
            "travel time {:.6} does not reach past the known interfaces (needs more than {:.6})",
            -s_star,
            2.0 * c * known.slowness(last)
        )));
    }
    Ok(last + gm.sqrt() * rest)
}

/// Solves `2c∫_0^a dx/√γ = −s*` for `a ∈ (0, M]` by bisection.
pub fn recover_boundary_smooth(s_star: f64, c: f64, med: &SmoothMedium, bound: f64) -> Result<f64> {
    check_slope(s_star, c)?;
    if !(bound > 0.0 && bound <= med.domain_end() * (1.0 + 1e-14)) {
        return Err(Error::Domain(format!("depth bound {bound} outside (0, {}]", med.domain_end())));
    }
    let target = -s_star / (2.0 * c);
    let full = med.slowness_between(0.0, bound);
    if target > full {
        return Err(Error::Extraction(format!(
            "travel time {:.6} exceeds the travel time {:.6} to the depth bound",
            -s_star,
            2.0 * c * full
        )));
    }
    let (mut lo, mut hi) = (0.0, bound);
    while hi - lo > 1e-11 {
        let mid = 0.5 * (lo + hi);
        if med.slowness_between(0.0, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Robin coefficient estimate from the subleading term of the indicator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoEstimate {
    pub rho: f64,
    /// Imaginary part of the extrapolated limit divided by −2 (should be near zero).
    #[serde(with = "crate::nonfinite")]
    pub imaginary: f64,
    pub extrapolants: Vec<f64>,
    pub taus: Vec<f64>,
}

/// `(I e^{−2φ(a)}/(2√(γ_1γ_m) w′(0)(T_12⋯T_{m−1,m})²) + 1) z√γ_m`, which tends to `−2ρ`.
pub fn rho_sequence_term(i_ln: Complex64, probe: &ProbeFrequency, med: &LayeredMedium, w0: Complex64) -> Complex64 {
    let g = med.conductivities();
    let (g1, gm) = (g[0], g[g.len() - 1]);
    let t = transmission_product(med);
    let phase2 = 2.0 * probe.z * med.slowness(med.depth());
    let norm = (2.0 * (g1 * gm).sqrt() * t * t * w0).ln();
    ((i_ln - phase2 - norm).exp() + 1.0) * probe.z * gm.sqrt()
}

fn richardson3(h: [f64; 3], v: [Complex64; 3]) -> Complex64 {
    let mut out = Complex64::new(0.0, 0.0);
    for i in 0..3 {
        let mut w = 1.0;
        for j in 0..3 {
            if i != j {
                w *= h[j] / (h[j] - h[i]);
            }
        }
        out += w * v[i];
    }
    out
}

/// Extrapolates the ρ sequence to `τ → ∞` over the unflagged samples with representable values.
pub fn recover_rho(samples: &IndicatorSamples, med: &LayeredMedium) -> Result<RhoEstimate> {
    let mode = samples.metadata.mode;
    let c = samples.metadata.c;
    let mut pts = Vec::new();
    for e in &samples.entries {
        let Some(w0) = e.w0 else { continue };
        if e.flag != SampleFlag::Ok || e.value.norm() == 0.0 || !e.value.is_finite() {
            continue;
        }
        let probe = crate::probe::make_probe(c, e.tau, mode)?;
        let ln_i = Complex64::new(e.log_abs, e.value.arg());
        pts.push((e.tau, rho_sequence_term(ln_i, &probe, med, w0)));
    }
    if pts.len() < 5 {
        return Err(Error::Extraction(format!("ρ extraction needs at least 5 usable samples, found {}", pts.len())));
    }
    let tail = &pts[pts.len().saturating_sub(12)..];
    let mut ext = Vec::new();
    for w in tail.windows(3) {
        ext.push(richardson3([1.0 / w[0].0, 1.0 / w[1].0, 1.0 / w[2].0], [w[0].1, w[1].1, w[2].1]));
    }
    let last: Vec<f64> = ext[ext.len() - 3..].iter().map(|v| -v.re / 2.0).collect();
    let mean = last.iter().sum::<f64>() / 3.0;
    let spread =
        last.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v)) - last.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    if !(spread <= (0.1 * mean.abs()).max(0.05)) {
        return Err(Error::Extraction(format!(
            "ρ extrapolants do not settle: last three {:.4}, {:.4}, {:.4}",
            last[0], last[1], last[2]
        )));
    }
    let limit = ext[ext.len() - 1];
    Ok(RhoEstimate {
        rho: -limit.re / 2.0,
        imaginary: -limit.im / 2.0,
        extrapolants: ext.iter().map(|v| -v.re / 2.0).collect(),
        taus: tail.iter().map(|p| p.0).collect(),
    })
}

/// Least-squares correction `δS` to the one-way slowness of `med`.
///
/// With `L = ln(−I e^{−2φ(a)}/(2√(γ_1γ_m) w′(0)(T_12⋯T_{m−1,m})²))` unwrapped along τ, fits
/// `zL = 2z²δS + k + β_1/z + β_2/z²` with complex `k, β_1, β_2` over the last `tail` usable samples.
pub fn refine_slowness(samples: &IndicatorSamples, med: &LayeredMedium, tail: usize) -> Result<f64> {
    let mode = samples.metadata.mode;
    let c = samples.metadata.c;
    let g = med.conductivities();
    let (g1, gm) = (g[0], g[g.len() - 1]);
    let t = transmission_product(med);
    let mut rows = Vec::new();
    let mut prev: Option<f64> = None;
    for e in &samples.entries {
        let Some(w0) = e.w0 else { continue };
        if e.flag != SampleFlag::Ok || e.value.norm() == 0.0 || !e.value.is_finite() {
            continue;
        }
        let probe = crate::probe::make_probe(c, e.tau, mode)?;
        let norm = (-2.0 * (g1 * gm).sqrt() * t * t * w0).ln();
        let mut l = Complex64::new(e.log_abs, e.value.arg()) - 2.0 * probe.z * med.slowness(med.depth()) - norm;
        if let Some(p) = prev {
            l.im -= 2.0 * PI * ((l.im - p) / (2.0 * PI)).round();
        }
        prev = Some(l.im);
        rows.push((probe.z, l));
    }
    let rows = &rows[rows.len().saturating_sub(tail)..];
    if rows.len() < 5 {
        return Err(Error::Extraction(format!(
            "slowness refinement needs at least 5 usable samples, found {}",
            rows.len()
        )));
    }
    let n = rows.len();
    let mut a = DMatrix::<f64>::zeros(2 * n, 7);
    let mut b = DVector::<f64>::zeros(2 * n);
    for (i, (z, l)) in rows.iter().enumerate() {
        let cols = [2.0 * z * z, Complex64::new(1.0, 0.0), 1.0 / z, 1.0 / (z * z)];
        let rhs = z * l;
        a[(2 * i, 0)] = cols[0].re;
        a[(2 * i + 1, 0)] = cols[0].im;
        for (k, col) in cols[1..].iter().enumerate() {
            // complex unknown u = x + iy contributes col·u
            a[(2 * i, 1 + 2 * k)] = col.re;
            a[(2 * i, 2 + 2 * k)] = -col.im;
            a[(2 * i + 1, 1 + 2 * k)] = col.im;
            a[(2 * i + 1, 2 + 2 * k)] = col.re;
        }
        b[2 * i] = rhs.re;
        b[2 * i + 1] = rhs.im;
    }
    let scale: Vec<f64> = (0..7).map(|j| a.column(j).amax().max(f64::MIN_POSITIVE)).collect();
    for (j, s) in scale.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / s);
    }
    let x = a.svd(true, true).solve(&b, 1e-13).map_err(|e| Error::Extraction(format!("slowness refinement: {e}")))?;
    let ds = x[0] / scale[0];
    if !ds.is_finite() {
        return Err(Error::Extraction("slowness refinement is not finite".into()));
    }
    Ok(ds)
}

/// What the slope is inverted to.
#[derive(Debug, Clone)]
pub enum Target {
    Interface { gamma1: f64 },
    LayeredBoundary { known: KnownLayers },
    SmoothBoundary { medium: SmoothMedium, bound: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecoveredKind {
    Interface,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recovered {
    pub kind: RecoveredKind,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub problem: ProblemKind,
    pub mode: ProbeMode,
    pub c: f64,
    pub provenance: String,
    pub slope: f64,
    #[serde(with = "crate::nonfinite")]
    pub slope_half_width: f64,
    pub travel_time: f64,
    pub recovered: Recovered,
    pub rho: Option<RhoEstimate>,
    pub fit_window: (f64, f64),
    pub residual: f64,
    pub model_terms: (f64, f64, f64),
    pub fit: SlopeFit,
    pub admissibility: Option<FluxAdmissibility>,
    pub notes: Vec<String>,
}

/// Fits the slope and inverts it for the requested geometry.
pub fn extract(samples: &IndicatorSamples, target: &Target, opts: &FitOptions) -> Result<ReconstructionReport> {
    let fit = fit_log_slope(samples, opts)?;
    let c = match samples.metadata.mode {
        ProbeMode::Oscillatory => samples.metadata.c,
        ProbeMode::RealRay => 1.0,
    };
    let recovered = match target {
        Target::Interface { gamma1 } => {
            Recovered { kind: RecoveredKind::Interface, value: recover_interface(fit.s, c, *gamma1)? }
        }
        Target::LayeredBoundary { known } => {
            Recovered { kind: RecoveredKind::Boundary, value: recover_boundary_layered(fit.s, c, known)? }
        }
        Target::SmoothBoundary { medium, bound } => {
            Recovered { kind: RecoveredKind::Boundary, value: recover_boundary_smooth(fit.s, c, medium, *bound)? }
        }
    };
    Ok(ReconstructionReport {
        problem: samples.metadata.problem,
        mode: samples.metadata.mode,
        c: samples.metadata.c,
        provenance: samples.metadata.provenance.clone(),
        slope: fit.s,
        slope_half_width: fit.half_width,
        travel_time: -fit.s,
        recovered,
        rho: None,
        fit_window: fit.window,
        residual: fit.residual,
        model_terms: (fit.s, fit.p, fit.q),
        fit,
        admissibility: None,
        notes: Vec::new(),
    })
}

impl ReconstructionReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Numerical(format!("report serialisation: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("report: {e}")))
    }

    /// Human-readable summary table.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let kind = match self.recovered.kind {
            RecoveredKind::Interface => "interface b",
            RecoveredKind::Boundary => "boundary a",
        };
        let _ = writeln!(s, "problem          {} ({}, c = {}, {})", self.problem, self.mode, self.c, self.provenance);
        let _ = writeln!(s, "slope s*         {:.6} ± {:.2e}", self.slope, self.slope_half_width);
        let _ = writeln!(s, "travel time      {:.6}", self.travel_time);
        let _ = writeln!(s, "{kind:<16} {:.6}", self.recovered.value);
        if let Some(r) = &self.rho {
            let _ = writeln!(s, "robin rho        {:.6}", r.rho);
        }
        let _ = writeln!(
            s,
            "fit window       [{:.4}, {:.4}] ({} samples)",
            self.fit_window.0, self.fit_window.1, self.fit.samples_used
        );
        let _ = writeln!(
            s,
            "model (s, p, q)  ({:.6}, {:.4}, {:.4})",
            self.model_terms.0, self.model_terms.1, self.model_terms.2
        );
        let _ = writeln!(s, "rms residual     {:.3e}", self.residual);
        let cz = &self.fit.census;
        let _ = writeln!(
            s,
            "samples          ok {}, underflow {}, noisy {}, error {}",
            cz.ok, cz.underflow, cz.noisy, cz.error
        );
        if let Some(a) = &self.admissibility {
            let _ = writeln!(s, "flux admissible  {} (mu = {:.3}, C = {:.3e})", a.pass, a.mu_hat, a.c_hat);
        }
        for n in &self.notes {
            let _ = writeln!(s, "note             {n}");
        }
        s
    }
}

/// Plot data `tau,slope_sample,fitted` where `fitted` is the fitted `ln|I|/τ`.
pub fn slope_curve_csv(samples: &IndicatorSamples, fit: &SlopeFit) -> String {
    let mut s = String::from("tau,slope_sample,fitted\n");
    for e in &samples.entries {
        let shift = match (fit.normalised, e.w0) {
            (true, Some(w)) => w.norm().ln() / e.tau,
            _ => 0.0,
        };
        let _ = writeln!(s, "{:.16e},{:.16e},{:.16e}", e.tau, e.slope_sample, fit.asymptote(e.tau) + shift);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indicator::{IndicatorEntry, SampleMetadata};

    fn synthetic(f: impl Fn(f64) -> f64, taus: &[f64]) -> IndicatorSamples {
        let meta = SampleMetadata {
            problem: ProblemKind::A,
            mode: ProbeMode::RealRay,
            c: 1.0,
            medium_hash: String::new(),
            provenance: "synthetic".into(),
        };
        let entries = taus
            .iter()
            .map(|&t| {
                IndicatorEntry::from_log(
                    t,
                    Complex64::new(-t, 0.0),
                    Complex64::new(1.0, 0.0),
                    Complex64::new(f(t), 0.0),
                    None,
                )
            })
            .collect();
        IndicatorSamples::new(meta, entries).unwrap()
    }

    #[test]
    fn exact_model_recovery() {
        let taus: Vec<f64> = (0..40).map(|i| 10.0 * 1.06f64.powi(i)).collect();
        let s = synthetic(|t| -0.5 * t - 2.0 * t.ln() + 1.0, &taus);
        let f = fit_log_slope(&s, &FitOptions::default()).unwrap();
        assert!((f.s + 0.5).abs() < 1e-10 && (f.p + 2.0).abs() < 1e-10 && (f.q - 1.0).abs() < 1e-10, "{f:?}");
        assert!(f.half_width < 1e-10);
    }

    #[test]
    fn window_too_small() {
        let s = synthetic(|t| -t, &[1.0, 2.0, 3.0, 4.0]);
        assert!(matches!(fit_log_slope(&s, &FitOptions::default()), Err(Error::Extraction(_))));
    }

    #[test]
    fn longest_clean_run_is_used() {
        let taus: Vec<f64> = (1..=30).map(|i| i as f64).collect();
        let mut s = synthetic(|t| -0.3 * t, &taus);
        s.entries[3].flag = SampleFlag::Noisy;
        s.entries[25].flag = SampleFlag::Noisy;
        let f = fit_log_slope(&s, &FitOptions::default()).unwrap();
        assert_eq!(f.window, (5.0, 25.0));
    }

    #[test]
    fn interface_inversions() {
        assert!((recover_interface(-2.0, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((recover_interface(-0.25, 0.25, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((recover_interface(-1.0, 1.0, 4.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(recover_interface(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn layered_boundary_inversions() {
        let one = KnownLayers::single(1.0).unwrap();
        assert!((recover_boundary_layered(-0.5, 0.25, &one).unwrap() - 1.0).abs() < 1e-15);
        let two = KnownLayers::new(vec![0.0, 0.5], vec![1.0, 4.0]).unwrap();
        assert!((recover_boundary_layered(-0.625, 0.25, &two).unwrap() - 2.0).abs() < 1e-14);
        assert!(recover_boundary_layered(-0.2, 0.25, &two).is_err());
    }

    #[test]
    fn smooth_boundary_inversions() {
        let unit = SmoothMedium::constant(2.0, 1.0).unwrap();
        assert!((recover_boundary_smooth(-2.0, 1.0, &unit, 2.0).unwrap() - 1.0).abs() < 1e-10);
        let sq = SmoothMedium::from_expr(1.5, "(1+x)^2").unwrap();
        let a = recover_boundary_smooth(-2.0 * 2f64.ln(), 1.0, &sq, 1.5).unwrap();
        assert!((a - 1.0).abs() < 1e-10);
        assert!(recover_boundary_smooth(-2.0 * 2.6f64.ln(), 1.0, &sq, 1.5).is_err());
    }

    #[test]
    fn richardson_is_exact_for_quadratics() {
        let f = |h: f64| Complex64::new(3.0 + 2.0 * h - 5.0 * h * h, -h);
        let h = [0.1, 0.05, 0.02];
        let r = richardson3(h, [f(h[0]), f(h[1]), f(h[2])]);
        assert!((r - Complex64::new(3.0, 0.0)).norm() < 1e-12);
    }
}
