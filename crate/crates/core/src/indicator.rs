//! Transforms of boundary traces and the indicator functions built from them.

use crate::cmath::{lower_gamma, phi0, phi1, sqrt_moment};
use crate::error::{Error, Result};
use crate::forward::BoundaryRecord;
use crate::medium::{KnownLayers, SmoothMedium};
use crate::probe::{make_probe, psi_layered, psi_wkb, ProbeFrequency, ProbeMode, ProbeSolution};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::str::FromStr;

/// Entries with `|I|` below this are flagged as underflow.
pub const UNDERFLOW: f64 = 1e-290;

/// `∫_0^T e^{−st} f(t) dt` for the piecewise-linear interpolant of `values` on a uniform grid.
pub fn filon(times: &[f64], values: &[f64], s: Complex64) -> Complex64 {
    let n = times.len();
    if n < 2 {
        return Complex64::new(0.0, 0.0);
    }
    let h = (times[n - 1] - times[0]) / (n - 1) as f64;
    let x = s * h;
    let e1 = phi1(x);
    let e0 = phi0(x) - e1;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..n - 1 {
        let (a, b) = (values[k], values[k + 1]);
        if a == 0.0 && b == 0.0 {
            continue;
        }
        let w = (-s * times[k]).exp();
        if w.re == 0.0 && w.im == 0.0 {
            break;
        }
        sum += w * (a * e0 + b * e1);
    }
    sum * h
}

/// `w′(0) γ(0) = ∫_0^T e^{−z²t} γ(0)u_x(0,t) dt` with `s = z²`.
pub fn laplace_flux(rec: &BoundaryRecord, s: Complex64) -> Complex64 {
    filon(&rec.times, &rec.flux_left, s)
}

/// `w(0) = ∫_0^T e^{−z²t} u(0,t) dt`. The half-space onset `α√t` implied by the
/// initial flux is removed before interpolation and added back in closed form.
pub fn laplace_temperature(rec: &BoundaryRecord, s: Complex64, gamma0: f64) -> Complex64 {
    let alpha = -2.0 * rec.flux_left[0] / (std::f64::consts::PI * gamma0).sqrt();
    if alpha == 0.0 {
        return filon(&rec.times, &rec.temp_left, s);
    }
    let rem: Vec<f64> = rec.times.iter().zip(&rec.temp_left).map(|(t, u)| u - alpha * t.sqrt()).collect();
    filon(&rec.times, &rem, s) + alpha * sqrt_moment(s, rec.horizon)
}

/// `∫_0^T e^{−Re(s) t} |f(t)| dt`.
fn modulus_transform(times: &[f64], values: &[f64], s: Complex64) -> f64 {
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    filon(times, &abs, Complex64::new(s.re, 0.0)).re
}

/// `τ^{2(m+1)} ∫_0^δ e^{−z²t} t^m dt`.
pub fn moment_transform(m: u32, delta: f64, probe: &ProbeFrequency) -> Result<Complex64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Domain(format!("cutoff δ={delta} must be positive")));
    }
    let k = m as f64 + 1.0;
    let s = probe.z2;
    let tau_pow = Complex64::new(probe.tau.powf(2.0 * k), 0.0);
    Ok(lower_gamma(k, s * delta) * (tau_pow / s.powf(k)))
}

/// Limit `m!(−i/(2c²))^{m+1}` of [`moment_transform`].
pub fn moment_limit(m: u32, c: f64) -> Complex64 {
    let fact: f64 = (1..=m).map(|v| v as f64).product();
    fact * Complex64::new(0.0, -1.0 / (2.0 * c * c)).powu(m + 1)
}

/// Indicator value at one frequency together with the pieces it was built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorValue {
    pub value: Complex64,
    /// `w′(0)`.
    pub w0: Complex64,
    /// `|Ψ(0)| ∫e^{−τt}|γu_x| + γ(0)|Ψ′(0)| ∫e^{−τt}|u|`, the size of the cancelling terms.
    pub magnitude: f64,
}

/// `I = Ψ(0)·L[γ(0)u_x(0,·)] − γ(0)Ψ′(0)·L[u(0,·)]`.
pub fn pair(rec: &BoundaryRecord, s: Complex64, psi0: Complex64, dpsi0: Complex64, gamma0: f64) -> IndicatorValue {
    let lf = laplace_flux(rec, s);
    let lu = laplace_temperature(rec, s, gamma0);
    let magnitude = psi0.norm() * modulus_transform(&rec.times, &rec.flux_left, s)
        + gamma0 * dpsi0.norm() * modulus_transform(&rec.times, &rec.temp_left, s);
    IndicatorValue { value: psi0 * lf - gamma0 * dpsi0 * lu, w0: lf / gamma0, magnitude }
}

pub fn indicator_a(rec: &BoundaryRecord, probe: &ProbeFrequency, gamma1: f64) -> Complex64 {
    pair(rec, probe.z2, Complex64::new(1.0, 0.0), probe.scaled(gamma1), gamma1).value
}

pub fn indicator_b(rec: &BoundaryRecord, probe: &ProbeFrequency, known: &KnownLayers) -> Result<Complex64> {
    let p = psi_layered(known, probe)?;
    Ok(pair(rec, probe.z2, p.psi0(), p.dpsi0(), known.conductivities()[0]).value)
}

pub fn indicator_c(rec: &BoundaryRecord, probe: &ProbeFrequency, med: &SmoothMedium, end: f64) -> Result<Complex64> {
    let p = psi_wkb(med, probe, end)?;
    Ok(pair(rec, probe.z2, p.psi0(), p.dpsi0(), med.gamma(0.0)).value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProblemKind {
    A,
    B,
    C,
}

impl std::fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProblemKind::A => "A",
            ProblemKind::B => "B",
            ProblemKind::C => "C",
        })
    }
}

/// What the probe is built from.
#[derive(Debug, Clone)]
pub enum ProbeSpec {
    Single { gamma1: f64 },
    Layered(KnownLayers),
    Smooth { medium: SmoothMedium, end: f64 },
}

impl ProbeSpec {
    pub fn kind(&self) -> ProblemKind {
        match self {
            ProbeSpec::Single { .. } => ProblemKind::A,
            ProbeSpec::Layered(_) => ProblemKind::B,
            ProbeSpec::Smooth { .. } => ProblemKind::C,
        }
    }

    pub fn gamma0(&self) -> f64 {
        match self {
            ProbeSpec::Single { gamma1 } => *gamma1,
            ProbeSpec::Layered(k) => k.conductivities()[0],
            ProbeSpec::Smooth { medium, .. } => medium.gamma(0.0),
        }
    }

    pub fn build(&self, probe: &ProbeFrequency) -> Result<ProbeSolution> {
        Ok(match self {
            ProbeSpec::Single { gamma1 } => ProbeSolution::Single { z1: probe.scaled(*gamma1) },
            ProbeSpec::Layered(k) => ProbeSolution::Layered(psi_layered(k, probe)?),
            ProbeSpec::Smooth { medium, end } => ProbeSolution::Wkb(psi_wkb(medium, probe, *end)?),
        })
    }

    pub fn evaluate(&self, rec: &BoundaryRecord, probe: &ProbeFrequency) -> Result<IndicatorValue> {
        let sol = self.build(probe)?;
        Ok(pair(rec, probe.z2, sol.psi0(), sol.dpsi0(), self.gamma0()))
    }
}

/// Geometric grid with `per_decade` points per decade from `lo` to `hi` inclusive.
pub fn tau_grid(lo: f64, hi: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && per_decade > 0) {
        return Err(Error::Config(format!(
            "τ grid needs 0 < lo < hi and points per decade > 0 (got {lo}, {hi}, {per_decade})"
        )));
    }
    let n = ((hi / lo).log10() * per_decade as f64).ceil() as usize;
    let ratio = (hi / lo).ln() / n as f64;
    Ok((0..=n).map(|i| if i == n { hi } else { lo * (ratio * i as f64).exp() }).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleFlag {
    Ok,
    Underflow,
    Noisy,
    Error,
}

impl SampleFlag {
    fn as_str(&self) -> &'static str {
        match self {
            SampleFlag::Ok => "ok",
            SampleFlag::Underflow => "underflow",
            SampleFlag::Noisy => "noisy",
            SampleFlag::Error => "error",
        }
    }
}

impl FromStr for SampleFlag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ok" => Ok(SampleFlag::Ok),
            "underflow" => Ok(SampleFlag::Underflow),
            "noisy" => Ok(SampleFlag::Noisy),
            "error" => Ok(SampleFlag::Error),
            other => Err(Error::Parse(format!("unknown sample flag {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorEntry {
    pub tau: f64,
    pub z: Complex64,
    pub value: Complex64,
    /// `ln|I|`, kept separately so that values below the floating-point range still carry a slope.
    pub log_abs: f64,
    pub slope_sample: f64,
    pub flag: SampleFlag,
    pub w0: Option<Complex64>,
}

impl IndicatorEntry {
    /// Entry from a value held as `mantissa·e^{log}`.
    pub fn from_log(tau: f64, z: Complex64, mantissa: Complex64, log: Complex64, w0: Option<Complex64>) -> Self {
        let log_abs = mantissa.norm().ln() + log.re;
        let value =
            if log_abs.is_finite() && log_abs > -745.0 { mantissa * log.exp() } else { Complex64::new(0.0, 0.0) };
        let flag =
            if !log_abs.is_finite() || log_abs < UNDERFLOW.ln() { SampleFlag::Underflow } else { SampleFlag::Ok };
        IndicatorEntry { tau, z, value, log_abs, slope_sample: log_abs / tau, flag, w0 }
    }

    pub fn from_value(tau: f64, z: Complex64, value: Complex64, w0: Option<Complex64>) -> Self {
        Self::from_log(tau, z, value, Complex64::new(0.0, 0.0), w0)
    }

    fn failed(tau: f64, z: Complex64) -> Self {
        IndicatorEntry {
            tau,
            z,
            value: Complex64::new(f64::NAN, f64::NAN),
            log_abs: f64::NAN,
            slope_sample: f64::NAN,
            flag: SampleFlag::Error,
            w0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleMetadata {
    pub problem: ProblemKind,
    pub mode: ProbeMode,
    pub c: f64,
    pub medium_hash: String,
    /// `pde`, or the oracle that generated the values.
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSamples {
    pub metadata: SampleMetadata,
    pub entries: Vec<IndicatorEntry>,
}

const CSV_HEADER: &str = "tau,re_I,im_I,log_abs,slope_sample,flag,re_w0,im_w0";

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

impl IndicatorSamples {
    pub fn new(metadata: SampleMetadata, entries: Vec<IndicatorEntry>) -> Result<Self> {
        if entries.windows(2).any(|w| !(w[1].tau > w[0].tau)) {
            return Err(Error::Validation("indicator samples must be sorted by strictly increasing τ".into()));
        }
        Ok(IndicatorSamples { metadata, entries })
    }

    pub fn census(&self) -> [(SampleFlag, usize); 4] {
        let count = |f| self.entries.iter().filter(|e| e.flag == f).count();
        [
            (SampleFlag::Ok, count(SampleFlag::Ok)),
            (SampleFlag::Underflow, count(SampleFlag::Underflow)),
            (SampleFlag::Noisy, count(SampleFlag::Noisy)),
            (SampleFlag::Error, count(SampleFlag::Error)),
        ]
    }

    pub fn to_csv(&self) -> String {
        let m = &self.metadata;
        let mut s = String::new();
        let _ = writeln!(s, "# problem={}", m.problem);
        let _ = writeln!(s, "# mode={}", m.mode);
        let _ = writeln!(s, "# c={}", fmt_f(m.c));
        let _ = writeln!(s, "# medium_hash={}", m.medium_hash);
        let _ = writeln!(s, "# provenance={}", m.provenance);
        s.push_str(CSV_HEADER);
        s.push('\n');
        for e in &self.entries {
            let (rw, iw) = match e.w0 {
                Some(w) => (fmt_f(w.re), fmt_f(w.im)),
                None => (String::new(), String::new()),
            };
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                fmt_f(e.tau),
                fmt_f(e.value.re),
                fmt_f(e.value.im),
                fmt_f(e.log_abs),
                fmt_f(e.slope_sample),
                e.flag.as_str(),
                rw,
                iw
            );
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut problem = None;
        let mut mode = None;
        let mut c = None;
        let mut hash = String::new();
        let mut provenance = String::from("pde");
        let mut header_seen = false;
        let mut entries = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let Some((k, v)) = meta.trim().split_once('=') else { continue };
                let v = v.trim();
                match k.trim() {
                    "problem" => {
                        problem = Some(match v {
                            "A" => ProblemKind::A,
                            "B" => ProblemKind::B,
                            "C" => ProblemKind::C,
                            _ => return Err(Error::Parse(format!("line {}: unknown problem {v:?}", ln + 1))),
                        })
                    }
                    "mode" => {
                        mode = Some(match v {
                            "oscillatory" => ProbeMode::Oscillatory,
                            "real-ray" => ProbeMode::RealRay,
                            _ => return Err(Error::Parse(format!("line {}: unknown probe mode {v:?}", ln + 1))),
                        })
                    }
                    "c" => c = Some(parse_f(v, ln)?),
                    "medium_hash" => hash = v.to_string(),
                    "provenance" => provenance = v.to_string(),
                    _ => {}
                }
                continue;
            }
            if !header_seen {
                if line != CSV_HEADER {
                    return Err(Error::Parse(format!("line {}: expected header {CSV_HEADER:?}", ln + 1)));
                }
                header_seen = true;
                continue;
            }
            let mode = mode.ok_or_else(|| Error::Parse("missing '# mode=' metadata".into()))?;
            let c = c.ok_or_else(|| Error::Parse("missing '# c=' metadata".into()))?;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(Error::Parse(format!("line {}: expected 8 fields, found {}", ln + 1, f.len())));
            }
            let tau = parse_f(f[0], ln)?;
            let z = make_probe(c, tau, mode).map(|p| p.z).map_err(|e| Error::Parse(format!("line {}: {e}", ln + 1)))?;
            let w0 = match (f[6].trim(), f[7].trim()) {
                ("", "") => None,
                (r, i) => Some(Complex64::new(parse_f(r, ln)?, parse_f(i, ln)?)),
            };
            entries.push(IndicatorEntry {
                tau,
                z,
                value: Complex64::new(parse_f(f[1], ln)?, parse_f(f[2], ln)?),
                log_abs: parse_f(f[3], ln)?,
                slope_sample: parse_f(f[4], ln)?,
                flag: f[5].trim().parse()?,
                w0,
            });
        }
        if !header_seen {
            return Err(Error::Parse("missing CSV header".into()));
        }
        let metadata = SampleMetadata {
            problem: problem.ok_or_else(|| Error::Parse("missing '# problem=' metadata".into()))?,
            mode: mode.ok_or_else(|| Error::Parse("missing '# mode=' metadata".into()))?,
            c: c.ok_or_else(|| Error::Parse("missing '# c=' metadata".into()))?,
            medium_hash: hash,
            provenance,
        };
        IndicatorSamples::new(metadata, entries).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn parse_f(s: &str, ln: usize) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("line {}: invalid number {s:?}", ln + 1)))
}

/// How the usable τ range is capped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum NoiseModel {
    /// No cap beyond underflow.
    None,
    /// Error estimated as `|I − I_companion|/3` from a run at half resolution.
    Companion { kappa: f64 },
    /// Error estimated as `data_error ×` the size of the cancelling terms.
    Relative { kappa: f64, data_error: f64 },
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::Companion { kappa: 0.05 }
    }
}

/// Probe frequencies sampled by an indicator run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeGrid {
    pub c: f64,
    pub mode: ProbeMode,
    pub taus: Vec<f64>,
}

/// Evaluates the indicator over the grid in parallel and flags untrustworthy samples.
pub fn evaluate_grid(
    rec: &BoundaryRecord,
    companion: Option<&BoundaryRecord>,
    spec: &ProbeSpec,
    grid: &ProbeGrid,
    noise: NoiseModel,
    metadata: SampleMetadata,
) -> Result<IndicatorSamples> {
    rec.validate()?;
    if let NoiseModel::Companion { .. } = noise {
        let comp =
            companion.ok_or_else(|| Error::Config("companion noise model needs a half-resolution record".into()))?;
        comp.validate()?;
    }
    let entries: Vec<IndicatorEntry> = grid
        .taus
        .par_iter()
        .map(|&tau| {
            let probe = match make_probe(grid.c, tau, grid.mode) {
                Ok(p) => p,
                Err(_) => return IndicatorEntry::failed(tau, Complex64::new(f64::NAN, f64::NAN)),
            };
            let sol = match spec.build(&probe) {
                Ok(s) => s,
                Err(_) => return IndicatorEntry::failed(tau, probe.z),
            };
            let g0 = spec.gamma0();
            let v = pair(rec, probe.z2, sol.psi0(), sol.dpsi0(), g0);
            let mut e = IndicatorEntry::from_value(tau, probe.z, v.value, Some(v.w0));
            if e.flag == SampleFlag::Ok {
                let (kappa, err) = match noise {
                    NoiseModel::None => (f64::INFINITY, 0.0),
                    NoiseModel::Companion { kappa } => {
                        let comp = companion.expect("checked above");
                        let vc = pair(comp, probe.z2, sol.psi0(), sol.dpsi0(), g0);
                        (kappa, (v.value - vc.value).norm() / 3.0)
                    }
                    NoiseModel::Relative { kappa, data_error } => (kappa, data_error * v.magnitude),
                };
                if !(err <= kappa * v.value.norm()) {
                    e.flag = SampleFlag::Noisy;
                }
            }
            e
        })
        .collect();
    IndicatorSamples::new(metadata, entries)
}

/// Power-law lower bound `Cτ^μ ≤ |w′(0)|` fitted on a τ window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxAdmissibility {
    #[serde(with = "crate::nonfinite")]
    pub mu_hat: f64,
    /// Largest `C` with `Cτ^μ̂ ≤ |w′(0)|` on the window.
    #[serde(with = "crate::nonfinite")]
    pub c_hat: f64,
    #[serde(with = "crate::nonfinite")]
    pub tau0: f64,
    pub pass: bool,
    pub window: (f64, f64),
    /// Largest relative deviation of `|w′(0)|` from the least-squares power law.
    #[serde(with = "crate::nonfinite")]
    pub residual: f64,
}

/// Fits `ln|w′(0,τ)| = μ ln τ + ln C` over the grid.
pub fn flux_admissibility(
    rec: &BoundaryRecord,
    gamma0: f64,
    c: f64,
    mode: ProbeMode,
    taus: &[f64],
) -> Result<FluxAdmissibility> {
    if taus.len() < 8 {
        return Err(Error::Validation(format!("flux admissibility needs at least 8 τ samples, got {}", taus.len())));
    }
    let mut pts = Vec::new();
    for &tau in taus {
        let p = make_probe(c, tau, mode)?;
        let w = (laplace_flux(rec, p.z2) / gamma0).norm();
        pts.push((tau, w));
    }
    let window = (pts[0].0, pts[pts.len() - 1].0);
    if pts.iter().all(|(_, w)| *w == 0.0) && rec.flux_left.iter().all(|v| *v == 0.0) {
        return Ok(FluxAdmissibility {
            mu_hat: f64::NAN,
            c_hat: 0.0,
            tau0: f64::NAN,
            pass: false,
            window,
            residual: f64::NAN,
        });
    }
    let good: Vec<(f64, f64)> = pts.iter().filter(|(_, w)| *w > UNDERFLOW).map(|(t, w)| (t.ln(), w.ln())).collect();
    if good.len() < 2 {
        return Err(Error::Numerical(format!(
            "flux transform underflows at {} of {} τ samples",
            pts.len() - good.len(),
            pts.len()
        )));
    }
    let n = good.len() as f64;
    let mx = good.iter().map(|p| p.0).sum::<f64>() / n;
    let my = good.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = good.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = good.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let mu = sxy / sxx;
    let lnc = my - mu * mx;
    let residual = good.iter().map(|p| ((p.1 - mu * p.0 - lnc).exp() - 1.0).abs()).fold(0.0, f64::max);
    let c_hat = good.iter().map(|p| (p.1 - mu * p.0).exp()).fold(f64::INFINITY, f64::min);
    let pass = good.len() == pts.len() && residual <= 0.2;
    Ok(FluxAdmissibility { mu_hat: mu, c_hat, tau0: window.0, pass, window, residual })
}

/// `|w′(a)/w′(0)|·e^{cτ(b/√γ_1 − (a−b)/√γ_2)}` from the right flux trace; small values mean the
/// right-end flux does not mask the interface.
pub fn right_flux_ratio(
    rec: &BoundaryRecord,
    probe: &ProbeFrequency,
    gamma: (f64, f64),
    b: f64,
    a: f64,
) -> Option<f64> {
    let fr = rec.flux_right.as_ref()?;
    let wa = filon(&rec.times, fr, probe.z2) / gamma.1;
    let w0 = laplace_flux(rec, probe.z2) / gamma.0;
    let c = probe.speed();
    Some((wa / w0).norm() * (c * probe.tau * (b / gamma.0.sqrt() - (a - b) / gamma.1.sqrt())).exp())
}
