//! Conductivity profiles, travel-time functionals and the Liouville frame.

use crate::error::{Error, Result};
use crate::expr::{Expr, Jet};
use crate::quad;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

const QUAD_ABS: f64 = 1e-13;
const QUAD_REL: f64 = 1e-13;

/// Piecewise-constant conductivity on `[0, a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LayeredJson", into = "LayeredJson")]
pub struct LayeredMedium {
    breakpoints: Vec<f64>,
    conductivities: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayeredJson {
    breakpoints: Vec<f64>,
    conductivities: Vec<f64>,
}

impl TryFrom<LayeredJson> for LayeredMedium {
    type Error = Error;
    fn try_from(j: LayeredJson) -> Result<Self> {
        LayeredMedium::new(j.breakpoints, j.conductivities)
    }
}

impl From<LayeredMedium> for LayeredJson {
    fn from(m: LayeredMedium) -> Self {
        LayeredJson { breakpoints: m.breakpoints, conductivities: m.conductivities }
    }
}

fn check_conductivities(g: &[f64]) -> Result<()> {
    if g.is_empty() {
        return Err(Error::Validation("at least one layer is required".into()));
    }
    if let Some(bad) = g.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::Validation(format!("conductivity {bad} is not positive and finite")));
    }
    Ok(())
}

fn check_breakpoints(b: &[f64]) -> Result<()> {
    if b.first() != Some(&0.0) {
        return Err(Error::Validation("first breakpoint must be exactly 0".into()));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("breakpoints must be finite".into()));
    }
    if b.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Validation("breakpoints must be strictly increasing".into()));
    }
    Ok(())
}

/// Which prefix of a layered medium a travel time is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Upto {
    /// Breakpoint `b_j`, `0 ≤ j ≤ m`.
    Interface(usize),
    Endpoint,
}

impl LayeredMedium {
    pub fn new(breakpoints: Vec<f64>, conductivities: Vec<f64>) -> Result<Self> {
        check_conductivities(&conductivities)?;
        check_breakpoints(&breakpoints)?;
        if breakpoints.len() != conductivities.len() + 1 {
            return Err(Error::Validation(format!(
                "{} breakpoints given for {} layers (need m+1)",
                breakpoints.len(),
                conductivities.len()
            )));
        }
        Ok(LayeredMedium { breakpoints, conductivities })
    }

    pub fn homogeneous(a: f64, gamma: f64) -> Result<Self> {
        Self::new(vec![0.0, a], vec![gamma])
    }

    pub fn layers(&self) -> usize {
        self.conductivities.len()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn conductivities(&self) -> &[f64] {
        &self.conductivities
    }

    pub fn depth(&self) -> f64 {
        *self.breakpoints.last().expect("validated")
    }

    /// Conductivity at `x`; breakpoints belong to the layer on their left.
    pub fn conductivity_at(&self, x: f64) -> f64 {
        let j = self.breakpoints[1..].partition_point(|b| *b < x);
        self.conductivities[j.min(self.layers() - 1)]
    }

    /// One-way slowness `∫_0^x dt/√γ`.
    pub fn slowness(&self, x: f64) -> f64 {
        let mut s = 0.0;
        for j in 0..self.layers() {
            let (l, r) = (self.breakpoints[j], self.breakpoints[j + 1]);
            if x <= l {
                break;
            }
            s += (r.min(x) - l) / self.conductivities[j].sqrt();
        }
        s
    }

    /// Same medium with an extra breakpoint at `x` and equal conductivity on both sides.
    pub fn with_split(&self, x: f64) -> Result<Self> {
        if !(x > 0.0 && x < self.depth()) || self.breakpoints.contains(&x) {
            return Err(Error::Domain(format!("cannot split at {x}")));
        }
        let j = self.breakpoints.partition_point(|b| *b < x);
        let mut b = self.breakpoints.clone();
        let mut g = self.conductivities.clone();
        b.insert(j, x);
        g.insert(j - 1, g[j - 1]);
        Self::new(b, g)
    }

    /// The known part of the medium: layers up to `b_{m-1}`, last layer unbounded.
    pub fn known_layers(&self) -> KnownLayers {
        KnownLayers {
            interfaces: self.breakpoints[..self.layers()].to_vec(),
            conductivities: self.conductivities.clone(),
        }
    }
}

/// `2c(b_1/√γ_1 + Σ (b_{j+1}−b_j)/√γ_{j+1})`, truncated at `upto`.
pub fn travel_time_layered(med: &LayeredMedium, c: f64, upto: Upto) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Validation(format!("speed scale c={c} must be positive")));
    }
    let x = match upto {
        Upto::Endpoint => med.depth(),
        Upto::Interface(j) if j <= med.layers() => med.breakpoints[j],
        Upto::Interface(j) => return Err(Error::Validation(format!("no breakpoint with index {j}"))),
    };
    Ok(2.0 * c * med.slowness(x))
}

/// Layers seen by the probe: `b_0=0 < b_1 < … < b_{m-1}` and `γ_1..γ_m`,
/// with layer `m` extending to infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KnownJson", into = "KnownJson")]
pub struct KnownLayers {
    interfaces: Vec<f64>,
    conductivities: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KnownJson {
    breakpoints: Vec<f64>,
    conductivities: Vec<f64>,
}

impl TryFrom<KnownJson> for KnownLayers {
    type Error = Error;
    fn try_from(j: KnownJson) -> Result<Self> {
        KnownLayers::new(j.breakpoints, j.conductivities)
    }
}

impl From<KnownLayers> for KnownJson {
    fn from(k: KnownLayers) -> Self {
        KnownJson { breakpoints: k.interfaces, conductivities: k.conductivities }
    }
}

impl KnownLayers {
    /// `interfaces` holds `b_0=0, b_1, …, b_{m-1}` (one entry per layer).
    pub fn new(interfaces: Vec<f64>, conductivities: Vec<f64>) -> Result<Self> {
        check_conductivities(&conductivities)?;
        check_breakpoints(&interfaces)?;
        if interfaces.len() != conductivities.len() {
            return Err(Error::Validation(format!(
                "{} breakpoints given for {} known layers (need one per layer)",
                interfaces.len(),
                conductivities.len()
            )));
        }
        Ok(KnownLayers { interfaces, conductivities })
    }

    pub fn single(gamma: f64) -> Result<Self> {
        Self::new(vec![0.0], vec![gamma])
    }

    pub fn layers(&self) -> usize {
        self.conductivities.len()
    }

    /// `b_0, …, b_{m-1}`.
    pub fn interfaces(&self) -> &[f64] {
        &self.interfaces
    }

    pub fn conductivities(&self) -> &[f64] {
        &self.conductivities
    }

    pub fn last_interface(&self) -> f64 {
        *self.interfaces.last().expect("validated")
    }

    /// Closes the last layer at depth `a`.
    pub fn close_at(&self, a: f64) -> Result<LayeredMedium> {
        let mut b = self.interfaces.clone();
        b.push(a);
        LayeredMedium::new(b, self.conductivities.clone())
    }

    /// One-way slowness to depth `x` (the last layer continues past `b_{m-1}`).
    pub fn slowness(&self, x: f64) -> f64 {
        let m = self.layers();
        let mut s = 0.0;
        for j in 0..m {
            let l = self.interfaces[j];
            let r = if j + 1 < m { self.interfaces[j + 1] } else { f64::INFINITY };
            if x <= l {
                break;
            }
            s += (r.min(x) - l) / self.conductivities[j].sqrt();
        }
        s
    }
}

/// Uniformly sampled conductivity with optional derivative samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledGamma {
    end: f64,
    values: Vec<f64>,
    d1: Vec<f64>,
    d2: Option<Vec<f64>>,
    d1_given: bool,
}

fn hermite(y0: f64, y1: f64, m0: f64, m1: f64, h: f64, t: f64) -> (f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * m0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * m1;
    let d = ((6.0 * t2 - 6.0 * t) * y0
        + (3.0 * t2 - 4.0 * t + 1.0) * h * m0
        + (-6.0 * t2 + 6.0 * t) * y1
        + (3.0 * t2 - 2.0 * t) * h * m1)
        / h;
    (v, d)
}

impl SampledGamma {
    pub fn new(end: f64, values: Vec<f64>, d1: Option<Vec<f64>>, d2: Option<Vec<f64>>) -> Result<Self> {
        let n = values.len();
        if n < 3 {
            return Err(Error::Validation("sampled conductivity needs at least 3 samples".into()));
        }
        if !(end > 0.0 && end.is_finite()) {
            return Err(Error::Validation(format!("domain end M={end} must be positive")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("conductivity samples must be finite".into()));
        }
        for (name, d) in [("d1", &d1), ("d2", &d2)] {
            if let Some(d) = d {
                if d.len() != n || d.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Validation(format!(
                        "{name} samples must be finite and match the value grid ({n})"
                    )));
                }
            }
        }
        let h = end / (n - 1) as f64;
        let d1_given = d1.is_some();
        let d1 = d1.unwrap_or_else(|| {
            (0..n)
                .map(|i| {
                    if i == 0 {
                        (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h)
                    } else if i == n - 1 {
                        (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h)
                    } else {
                        (values[i + 1] - values[i - 1]) / (2.0 * h)
                    }
                })
                .collect()
        });
        let d2 = if d1_given { d2 } else { None };
        Ok(SampledGamma { end, values, d1, d2, d1_given })
    }

    pub fn has_second_derivative(&self) -> bool {
        self.d2.is_some()
    }

    fn eval(&self, x: f64) -> Jet {
        let n = self.values.len() - 1;
        let h = self.end / n as f64;
        let k = ((x / h).floor().max(0.0) as usize).min(n - 1);
        let t = (x - k as f64 * h) / h;
        let (v, d_from_v) = hermite(self.values[k], self.values[k + 1], self.d1[k], self.d1[k + 1], h, t);
        match &self.d2 {
            Some(d2) => {
                let (d1, dd) = hermite(self.d1[k], self.d1[k + 1], d2[k], d2[k + 1], h, t);
                Jet { v, d1, d2: dd }
            }
            None => Jet { v, d1: d_from_v, d2: f64::NAN },
        }
    }
}

/// Source of a smooth conductivity profile.
#[derive(Clone)]
pub enum GammaSource {
    Expr(Expr),
    Samples(SampledGamma),
    /// Callback returning `(γ, γ′, γ″)` at `x`.
    Function(Arc<dyn Fn(f64) -> Jet + Send + Sync>),
}

impl fmt::Debug for GammaSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaSource::Expr(e) => write!(f, "Expr({:?})", e.source()),
            GammaSource::Samples(s) => write!(f, "Samples({} points)", s.values.len()),
            GammaSource::Function(_) => write!(f, "Function(..)"),
        }
    }
}

/// Positive `C²` conductivity on `[0, M]`.
#[derive(Debug, Clone)]
pub struct SmoothMedium {
    domain_end: f64,
    source: GammaSource,
}

impl SmoothMedium {
    pub fn new(domain_end: f64, source: GammaSource) -> Result<Self> {
        if !(domain_end > 0.0 && domain_end.is_finite()) {
            return Err(Error::Validation(format!("domain end M={domain_end} must be positive")));
        }
        if let GammaSource::Samples(s) = &source {
            if (s.end - domain_end).abs() > 1e-12 * domain_end {
                return Err(Error::Validation("sample grid must cover exactly [0, M]".into()));
            }
        }
        let med = SmoothMedium { domain_end, source };
        let n = 4000;
        for i in 0..=n {
            let x = domain_end * i as f64 / n as f64;
            let j = med.jet(x);
            if !(j.v.is_finite() && j.v > 0.0) {
                return Err(Error::Validation(format!("conductivity {} at x={x} is not positive", j.v)));
            }
            if !j.d1.is_finite() {
                return Err(Error::Validation(format!("conductivity is not differentiable at x={x}")));
            }
        }
        Ok(med)
    }

    pub fn from_expr(domain_end: f64, expr: &str) -> Result<Self> {
        Self::new(domain_end, GammaSource::Expr(Expr::parse(expr, "x")?))
    }

    pub fn constant(domain_end: f64, gamma: f64) -> Result<Self> {
        Self::new(domain_end, GammaSource::Function(Arc::new(move |_| Jet::constant(gamma))))
    }

    pub fn domain_end(&self) -> f64 {
        self.domain_end
    }

    pub fn source(&self) -> &GammaSource {
        &self.source
    }

    /// `(γ, γ′, γ″)` at `x`.
    pub fn jet(&self, x: f64) -> Jet {
        match &self.source {
            GammaSource::Expr(e) => e.eval_jet(x),
            GammaSource::Samples(s) => s.eval(x),
            GammaSource::Function(f) => f(x),
        }
    }

    pub fn gamma(&self, x: f64) -> f64 {
        self.jet(x).v
    }

    pub fn has_second_derivative(&self) -> bool {
        match &self.source {
            GammaSource::Samples(s) => s.has_second_derivative(),
            _ => true,
        }
    }

    fn check_x(&self, x: f64) -> Result<()> {
        if !(x >= 0.0 && x <= self.domain_end * (1.0 + 1e-14)) {
            return Err(Error::Domain(format!("x={x} outside [0, {}]", self.domain_end)));
        }
        Ok(())
    }

    /// One-way slowness `S(x) = ∫_0^x dt/√γ`.
    pub fn slowness(&self, x: f64) -> Result<f64> {
        self.check_x(x)?;
        Ok(quad::integrate(|t| 1.0 / self.gamma(t).sqrt(), 0.0, x, QUAD_ABS, QUAD_REL))
    }

    /// `∫_{x0}^{x1} dt/√γ`.
    pub fn slowness_between(&self, x0: f64, x1: f64) -> f64 {
        quad::integrate(|t| 1.0 / self.gamma(t).sqrt(), x0, x1, QUAD_ABS, QUAD_REL)
    }

    /// `∫_{x0}^{x1} dt/γ`.
    pub fn resistance_between(&self, x0: f64, x1: f64) -> f64 {
        quad::integrate(|t| 1.0 / self.gamma(t), x0, x1, QUAD_ABS, QUAD_REL)
    }
}

/// `2c∫_0^x dt/√γ(t)`.
pub fn travel_time_smooth(med: &SmoothMedium, c: f64, x: f64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Validation(format!("speed scale c={c} must be positive")));
    }
    Ok(2.0 * c * med.slowness(x)?)
}

/// Liouville change of variables `s = (1/K)∫_0^x dt/√γ` on `[0, a]`.
#[derive(Debug, Clone)]
pub struct LiouvilleFrame {
    medium: SmoothMedium,
    a: f64,
    rho: f64,
    k: f64,
    h: f64,
    big_h: f64,
}

/// Builds the Liouville frame for the segment `[0, a]` with Robin constant `rho` at `a`.
pub fn liouville_frame(med: &SmoothMedium, a: f64, rho: f64) -> Result<LiouvilleFrame> {
    if !(a > 0.0 && a <= med.domain_end() * (1.0 + 1e-14)) {
        return Err(Error::Domain(format!("endpoint a={a} outside (0, {}]", med.domain_end())));
    }
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::Validation(format!("Robin constant {rho} must be non-negative")));
    }
    if !med.has_second_derivative() {
        return Err(Error::Capability("Liouville frame needs second-derivative samples of the conductivity".into()));
    }
    let k = med.slowness(a)? / PI;
    let j0 = med.jet(0.0);
    let ja = med.jet(a);
    let h = k * j0.d1 / (4.0 * j0.v.sqrt());
    let big_h = k * (4.0 * rho - ja.d1) / (4.0 * ja.v.sqrt());
    Ok(LiouvilleFrame { medium: med.clone(), a, rho, k, h, big_h })
}

impl LiouvilleFrame {
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn endpoint(&self) -> f64 {
        self.a
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn medium(&self) -> &SmoothMedium {
        &self.medium
    }

    /// Left Robin constant `h_a`.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Right Robin constant `H_a`.
    pub fn big_h(&self) -> f64 {
        self.big_h
    }

    pub fn s_of_x(&self, x: f64) -> f64 {
        self.medium.slowness_between(0.0, x) / self.k
    }

    /// Inverse of [`Self::s_of_x`] by bisection with Newton polish.
    pub fn x_of_s(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if s >= PI {
            return self.a;
        }
        let (mut lo, mut hi) = (0.0, self.a);
        let mut x = self.a * s / PI;
        for _ in 0..200 {
            let r = self.s_of_x(x) - s;
            if r.abs() < 1e-14 {
                break;
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let newton = x - r * self.k * self.medium.gamma(x).sqrt();
            x = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo < 1e-15 * self.a {
                break;
            }
        }
        x
    }

    /// Amplitude `f(s) = γ(x(s))^{1/4}`.
    pub fn f(&self, s: f64) -> f64 {
        self.medium.gamma(self.x_of_s(s)).powf(0.25)
    }

    /// Potential `g(s) = f″(s)/f(s)`.
    pub fn g(&self, s: f64) -> f64 {
        self.g_at_x(self.x_of_s(s))
    }

    /// Potential expressed at the physical point `x`.
    pub fn g_at_x(&self, x: f64) -> f64 {
        let j = self.medium.jet(x);
        0.25 * self.k * self.k * (j.d2 - j.d1 * j.d1 / (4.0 * j.v))
    }
}

/// Medium description as read from JSON.
#[derive(Debug, Clone)]
pub enum MediumSpec {
    Layered(LayeredMedium),
    Smooth(SmoothMedium),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GammaJson {
    Expr {
        expr: String,
    },
    Samples {
        values: Vec<f64>,
        #[serde(default)]
        d1: Option<Vec<f64>>,
        #[serde(default)]
        d2: Option<Vec<f64>>,
    },
}

/// JSON form of a smooth medium: `{"M": …, "gamma": {...}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothJson {
    #[serde(rename = "M")]
    pub m: f64,
    pub gamma: GammaJson,
}

impl SmoothJson {
    pub fn build(&self) -> Result<SmoothMedium> {
        let source = match &self.gamma {
            GammaJson::Expr { expr } => GammaSource::Expr(Expr::parse(expr, "x")?),
            GammaJson::Samples { values, d1, d2 } => {
                GammaSource::Samples(SampledGamma::new(self.m, values.clone(), d1.clone(), d2.clone())?)
            }
        };
        SmoothMedium::new(self.m, source)
    }
}

impl MediumSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse(format!("medium JSON: {e}")))?;
        Self::from_value(v)
    }

    pub fn from_value(v: serde_json::Value) -> Result<Self> {
        let is_layered = v.get("breakpoints").is_some();
        if is_layered {
            let m: LayeredMedium =
                serde_json::from_value(v).map_err(|e| Error::Parse(format!("layered medium: {e}")))?;
            Ok(MediumSpec::Layered(m))
        } else {
            let s: SmoothJson = serde_json::from_value(v).map_err(|e| Error::Parse(format!("smooth medium: {e}")))?;
            Ok(MediumSpec::Smooth(s.build()?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn layered_validation() {
        assert!(LayeredMedium::new(vec![0.0, 1.0], vec![1.0]).is_ok());
        assert!(LayeredMedium::new(vec![0.1, 1.0], vec![1.0]).is_err());
        assert!(LayeredMedium::new(vec![0.0, 1.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(LayeredMedium::new(vec![0.0, 1.0], vec![0.0]).is_err());
        assert!(LayeredMedium::new(vec![0.0, 1.0], vec![f64::INFINITY]).is_err());
        assert!(LayeredMedium::new(vec![0.0], vec![]).is_err());
        assert!(LayeredMedium::new(vec![0.0, 1.0, 2.0], vec![1.0]).is_err());
    }

    #[test]
    fn travel_time_layered_examples() {
        let m = LayeredMedium::homogeneous(1.0, 1.0).unwrap();
        assert_eq!(travel_time_layered(&m, 1.0, Upto::Endpoint).unwrap(), 2.0);
        let m = LayeredMedium::new(vec![0.0, 0.5, 2.0], vec![1.0, 4.0]).unwrap();
        assert!(close(travel_time_layered(&m, 0.25, Upto::Endpoint).unwrap(), 0.625, 1e-15));
        assert!(close(travel_time_layered(&m, 0.25, Upto::Interface(1)).unwrap(), 0.25, 1e-15));
        let m = LayeredMedium::new(vec![0.0, 0.3, 0.7, 1.1], vec![2.0, 2.0, 2.0]).unwrap();
        assert!(close(travel_time_layered(&m, 0.7, Upto::Endpoint).unwrap(), 1.4 * 1.1 / 2f64.sqrt(), 1e-15));
        assert!(travel_time_layered(&m, 0.0, Upto::Endpoint).is_err());
        assert!(travel_time_layered(&m, 1.0, Upto::Interface(4)).is_err());
    }

    #[test]
    fn conductivity_lookup() {
        let m = LayeredMedium::new(vec![0.0, 0.5, 2.0], vec![1.0, 4.0]).unwrap();
        assert_eq!(m.conductivity_at(0.2), 1.0);
        assert_eq!(m.conductivity_at(0.5), 1.0);
        assert_eq!(m.conductivity_at(0.6), 4.0);
        assert_eq!(m.conductivity_at(2.0), 4.0);
    }

    #[test]
    fn known_layers_round_trip() {
        let m = LayeredMedium::new(vec![0.0, 0.4, 0.9, 1.4], vec![1.0, 4.0, 2.25]).unwrap();
        let k = m.known_layers();
        assert_eq!(k.interfaces(), &[0.0, 0.4, 0.9]);
        assert_eq!(k.close_at(1.4).unwrap(), m);
        assert!(close(k.slowness(1.4), m.slowness(1.4), 1e-15));
        assert!(close(k.slowness(2.0), m.slowness(1.4) + 0.6 / 1.5, 1e-15));
    }

    #[test]
    fn travel_time_smooth_examples() {
        let one = SmoothMedium::from_expr(2.0, "1").unwrap();
        assert!(close(travel_time_smooth(&one, 0.3, 1.7).unwrap(), 2.0 * 0.3 * 1.7, 1e-13));
        let sq = SmoothMedium::from_expr(1.5, "(1+x)^2").unwrap();
        assert!(close(travel_time_smooth(&sq, 1.0, 1.0).unwrap(), 2.0 * 2f64.ln(), 1e-12));
        let c = SmoothMedium::constant(1.0, 9.0).unwrap();
        assert!(close(travel_time_smooth(&c, 0.5, 0.6).unwrap(), 0.6 / 3.0, 1e-13));
        assert!(travel_time_smooth(&sq, 1.0, 1.6).is_err());
        assert!(travel_time_smooth(&sq, 1.0, -0.1).is_err());
    }

    #[test]
    fn smooth_validation() {
        assert!(SmoothMedium::from_expr(1.0, "x - 0.5").is_err());
        assert!(SmoothMedium::from_expr(0.0, "1").is_err());
        assert!(SmoothMedium::from_expr(1.0, "1 + x").is_ok());
    }

    #[test]
    fn liouville_constant_medium() {
        let med = SmoothMedium::from_expr(1.0, "1").unwrap();
        let fr = liouville_frame(&med, 1.0, 0.0).unwrap();
        assert!(close(fr.k(), 1.0 / PI, 1e-14));
        assert!(close(fr.s_of_x(0.3), PI * 0.3, 1e-13));
        assert_eq!(fr.g(1.0), 0.0);
        assert_eq!(fr.h(), 0.0);
        assert_eq!(fr.big_h(), 0.0);
    }

    #[test]
    fn liouville_square_medium() {
        let med = SmoothMedium::from_expr(1.5, "(1+x)^2").unwrap();
        let fr = liouville_frame(&med, 1.0, 0.0).unwrap();
        let l2 = 2f64.ln();
        assert!(close(fr.k(), l2 / PI, 1e-13));
        for x in [0.0, 0.25, 0.5, 1.0] {
            assert!(close(fr.s_of_x(x), PI * (1.0 + x).ln() / l2, 1e-12));
            assert!((fr.x_of_s(fr.s_of_x(x)) - x).abs() < 1e-12);
        }
        assert!((fr.s_of_x(1.0) - PI).abs() < 1e-12);
    }

    #[test]
    fn liouville_quartic_potential_matches_second_differences() {
        let med = SmoothMedium::from_expr(1.0, "(1+x)^4").unwrap();
        let fr = liouville_frame(&med, 1.0, 0.0).unwrap();
        let k = fr.k();
        let d = 1e-3;
        for s in [0.5, 1.0, 2.0, 2.9] {
            let x = fr.x_of_s(s);
            assert!(close(fr.f(s), 1.0 + x, 1e-12));
            let g = fr.g(s);
            assert!(close(g, 2.0 * k * k * (1.0 + x).powi(2), 1e-12));
            let fd = (fr.f(s + d) - 2.0 * fr.f(s) + fr.f(s - d)) / (d * d) / fr.f(s);
            assert!((fd - g).abs() < 1e-5 * g.abs().max(1.0));
        }
    }

    #[test]
    fn liouville_needs_second_derivatives() {
        let vals: Vec<f64> = (0..11).map(|i| 1.0 + 0.1 * i as f64).collect();
        let s = SampledGamma::new(1.0, vals, None, None).unwrap();
        let med = SmoothMedium::new(1.0, GammaSource::Samples(s)).unwrap();
        assert!(matches!(liouville_frame(&med, 1.0, 0.0), Err(Error::Capability(_))));
    }

    #[test]
    fn sampled_medium_reproduces_expression() {
        let n = 201;
        let xs: Vec<f64> = (0..n).map(|i| 1.5 * i as f64 / (n - 1) as f64).collect();
        let v = xs.iter().map(|x| (1.0 + x).powi(2)).collect();
        let d1 = xs.iter().map(|x| 2.0 * (1.0 + x)).collect();
        let d2 = xs.iter().map(|_| 2.0).collect();
        let s = SampledGamma::new(1.5, v, Some(d1), Some(d2)).unwrap();
        let med = SmoothMedium::new(1.5, GammaSource::Samples(s)).unwrap();
        let j = med.jet(0.4321);
        assert!(close(j.v, 1.4321f64.powi(2), 1e-12));
        assert!(close(j.d1, 2.0 * 1.4321, 1e-12));
        assert!(close(j.d2, 2.0, 1e-12));
        assert!(close(travel_time_smooth(&med, 1.0, 1.0).unwrap(), 2.0 * 2f64.ln(), 1e-12));
    }

    #[test]
    fn medium_json() {
        let m = MediumSpec::from_json(r#"{"breakpoints":[0,0.5,2],"conductivities":[1,4]}"#).unwrap();
        assert!(matches!(m, MediumSpec::Layered(ref l) if l.layers() == 2));
        let s = MediumSpec::from_json(r#"{"M":1.5,"gamma":{"kind":"expr","expr":"(1+x)^2"}}"#).unwrap();
        assert!(matches!(s, MediumSpec::Smooth(ref s) if s.domain_end() == 1.5));
        let s = MediumSpec::from_json(r#"{"M":1,"gamma":{"kind":"samples","values":[1,1,1]}}"#).unwrap();
        assert!(matches!(s, MediumSpec::Smooth(_)));
        assert!(MediumSpec::from_json(r#"{"breakpoints":[0,1],"conductivities":[-1]}"#).is_err());
        assert!(MediumSpec::from_json(r#"{"M":1,"gamma":{"kind":"expr","expr":"x-1"}}"#).is_err());
        assert!(MediumSpec::from_json("[").is_err());
        let l = LayeredMedium::new(vec![0.0, 0.5, 2.0], vec![1.0, 4.0]).unwrap();
        let text = serde_json::to_string(&l).unwrap();
        assert_eq!(serde_json::from_str::<LayeredMedium>(&text).unwrap(), l);
    }
}
