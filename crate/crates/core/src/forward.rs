//! Forward heat-conduction solver and the constant-coefficient series oracle.

use crate::error::{Error, Result};
use crate::medium::{LayeredMedium, SmoothMedium};
use crate::quad;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Cells per unit length at the default resolution.
pub const DEFAULT_CELLS_PER_LENGTH: f64 = 4000.0;
/// Time steps per unit time at the default resolution.
pub const DEFAULT_STEPS_PER_TIME: f64 = 20000.0;

const GRADED_START_STEPS: usize = 128;

/// Boundary traces sampled on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryRecord {
    pub horizon: f64,
    pub times: Vec<f64>,
    /// `u(0, t)`.
    pub temp_left: Vec<f64>,
    /// `γ(0) u_x(0, t)`.
    pub flux_left: Vec<f64>,
    /// `γ(a) u_x(a, t)`.
    pub flux_right: Option<Vec<f64>>,
}

impl BoundaryRecord {
    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if n < 3 {
            return Err(Error::Validation("record needs at least 3 samples".into()));
        }
        if self.temp_left.len() != n
            || self.flux_left.len() != n
            || self.flux_right.as_ref().is_some_and(|f| f.len() != n)
        {
            return Err(Error::Validation("record columns have different lengths".into()));
        }
        if self.times[0] != 0.0 {
            return Err(Error::Validation("record must start at t=0".into()));
        }
        let dt = self.dt();
        if !(dt > 0.0) || (self.times[n - 1] - self.horizon).abs() > 1e-9 * self.horizon {
            return Err(Error::Validation("record must end at the horizon T > 0".into()));
        }
        for (i, t) in self.times.iter().enumerate() {
            if (t - i as f64 * dt).abs() > 1e-9 * self.horizon {
                return Err(Error::Validation(format!("time grid is not uniform at row {i}")));
            }
        }
        let all = self.temp_left.iter().chain(&self.flux_left).chain(self.flux_right.iter().flatten());
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::Validation("record contains non-finite samples".into()));
        }
        if self.temp_left[0].abs() > 1e-12 * self.temp_left.iter().fold(1.0f64, |m, v| m.max(v.abs())) {
            return Err(Error::Validation("u(0,0) must vanish (zero initial condition)".into()));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.horizon / (self.times.len() - 1) as f64
    }

    /// CSV `t,u_left,flux_left,flux_right` with a leading `# horizon=` line; `flux_right` may be empty.
    pub fn to_csv(&self) -> String {
        let mut s = format!("# horizon={:.16e}\nt,u_left,flux_left,flux_right\n", self.horizon);
        for i in 0..self.times.len() {
            let right = self.flux_right.as_ref().map(|f| format!("{:.16e}", f[i])).unwrap_or_default();
            s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{}\n",
                self.times[i], self.temp_left[i], self.flux_left[i], right
            ));
        }
        s
    }

    /// Parses [`Self::to_csv`] output and validates the result.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut horizon = None;
        let mut header = false;
        let (mut times, mut temp, mut flux, mut right) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let mut any_right = false;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                if let Some(v) = meta.trim().strip_prefix("horizon=") {
                    horizon = Some(parse_num(v, ln)?);
                }
                continue;
            }
            if !header {
                if line != "t,u_left,flux_left,flux_right" {
                    return Err(Error::Parse(format!(
                        "line {}: expected header t,u_left,flux_left,flux_right",
                        ln + 1
                    )));
                }
                header = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(Error::Parse(format!("line {}: expected 4 fields, found {}", ln + 1, f.len())));
            }
            times.push(parse_num(f[0], ln)?);
            temp.push(parse_num(f[1], ln)?);
            flux.push(parse_num(f[2], ln)?);
            if f[3].trim().is_empty() {
                right.push(None);
            } else {
                any_right = true;
                right.push(Some(parse_num(f[3], ln)?));
            }
        }
        let horizon = match horizon {
            Some(h) => h,
            None => *times.last().ok_or_else(|| Error::Parse("record has no rows".into()))?,
        };
        let flux_right = if any_right {
            Some(
                right
                    .into_iter()
                    .map(|v| v.ok_or_else(|| Error::Parse("flux_right column is only partly filled".into())))
                    .collect::<Result<Vec<f64>>>()?,
            )
        } else {
            None
        };
        let rec = BoundaryRecord { horizon, times, temp_left: temp, flux_left: flux, flux_right };
        rec.validate().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(rec)
    }

    /// Pointwise sum of two records on the same grid.
    pub fn add(&self, other: &BoundaryRecord) -> Result<BoundaryRecord> {
        if self.times != other.times {
            return Err(Error::Validation("records are on different time grids".into()));
        }
        let sum = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<_>>();
        Ok(BoundaryRecord {
            horizon: self.horizon,
            times: self.times.clone(),
            temp_left: sum(&self.temp_left, &other.temp_left),
            flux_left: sum(&self.flux_left, &other.flux_left),
            flux_right: match (&self.flux_right, &other.flux_right) {
                (Some(a), Some(b)) => Some(sum(a, b)),
                _ => None,
            },
        })
    }
}

fn parse_num(s: &str, ln: usize) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("line {}: invalid number {s:?}", ln + 1)))
}

/// Boundary condition at the hidden end `x = a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RightBc {
    NeumannZero,
    /// `γ(a) u_x(a,t) + ρ u(a,t) = 0`.
    Robin(f64),
}

impl RightBc {
    pub fn rho(&self) -> f64 {
        match self {
            RightBc::NeumannZero => 0.0,
            RightBc::Robin(r) => *r,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RightBc::Robin(r) if !(*r >= 0.0 && r.is_finite()) => {
                Err(Error::Validation(format!("Robin constant {r} must be non-negative")))
            }
            _ => Ok(()),
        }
    }
}

/// Medium handed to the forward solver.
#[derive(Debug, Clone, Copy)]
pub enum ForwardMedium<'a> {
    Layered(&'a LayeredMedium),
    /// Smooth medium cut at depth `a ≤ M`.
    Smooth {
        medium: &'a SmoothMedium,
        a: f64,
    },
}

impl ForwardMedium<'_> {
    pub fn depth(&self) -> f64 {
        match self {
            ForwardMedium::Layered(m) => m.depth(),
            ForwardMedium::Smooth { a, .. } => *a,
        }
    }

    fn gamma0(&self) -> f64 {
        match self {
            ForwardMedium::Layered(m) => m.conductivities()[0],
            ForwardMedium::Smooth { medium, .. } => medium.gamma(0.0),
        }
    }
}

/// Space cells and output time steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resolution {
    pub nx: usize,
    pub nt: usize,
}

impl Resolution {
    pub fn default_for(depth: f64, horizon: f64) -> Self {
        Resolution {
            nx: (DEFAULT_CELLS_PER_LENGTH * depth).ceil() as usize,
            nt: (DEFAULT_STEPS_PER_TIME * horizon.max(1.0)).ceil() as usize,
        }
    }

    pub fn halved(&self) -> Self {
        Resolution { nx: self.nx / 2, nt: self.nt / 2 }
    }
}

/// Field `u(x, T)` on the solver grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

impl FieldSnapshot {
    /// `∫_0^a u(x,T) dx` by the trapezoidal rule.
    pub fn integral(&self) -> f64 {
        self.x.windows(2).zip(self.u.windows(2)).map(|(x, u)| 0.5 * (x[1] - x[0]) * (u[0] + u[1])).sum()
    }

    /// One-sided second-order fluxes `(γ_j u_x(b−), γ_{j+1} u_x(b+))` at each interior breakpoint.
    pub fn interface_fluxes(&self, med: &LayeredMedium) -> Vec<(f64, f64)> {
        let b = med.breakpoints();
        let g = med.conductivities();
        (1..med.layers())
            .filter_map(|j| {
                let i = self.x.iter().position(|x| (x - b[j]).abs() < 1e-9 * med.depth())?;
                if i < 2 || i + 2 >= self.x.len() {
                    return None;
                }
                let hl = self.x[i] - self.x[i - 1];
                let hr = self.x[i + 1] - self.x[i];
                let left = g[j - 1] * (3.0 * self.u[i] - 4.0 * self.u[i - 1] + self.u[i - 2]) / (2.0 * hl);
                let right = g[j] * (-3.0 * self.u[i] + 4.0 * self.u[i + 1] - self.u[i + 2]) / (2.0 * hr);
                Some((left, right))
            })
            .collect()
    }
}

/// Forward solve output.
#[derive(Debug, Clone)]
pub struct ForwardSolution {
    pub record: BoundaryRecord,
    pub snapshot: FieldSnapshot,
    /// `−∫_0^T γ(0) g(t) dt`, the heat that entered through `x = 0`.
    pub injected: f64,
    pub warnings: Vec<String>,
}

impl ForwardSolution {
    /// `(∫u(x,T)dx, −∫γ(0)u_x(0,t)dt)`; equal for Neumann-zero data.
    pub fn energy_balance(&self) -> (f64, f64) {
        (self.snapshot.integral(), self.injected)
    }
}

struct Tridiag {
    cp: Vec<f64>,
    inv: Vec<f64>,
    lower: Vec<f64>,
}

impl Tridiag {
    /// Factors `V + c·A` with `A` given by face coefficients `kf` (and `robin` at the end).
    fn factor(vol: &[f64], kf: &[f64], robin: f64, c: f64) -> Self {
        let n = vol.len();
        let mut cp = vec![0.0; n];
        let mut inv = vec![0.0; n];
        let mut lower = vec![0.0; n];
        for i in 0..n {
            let kl = if i > 0 { kf[i - 1] } else { 0.0 };
            let kr = if i + 1 < n { kf[i] } else { 0.0 };
            let mut d = vol[i] + c * (kl + kr);
            if i + 1 == n {
                d += c * robin;
            }
            let l = -c * kl;
            let u = -c * kr;
            let denom = if i > 0 { d - l * cp[i - 1] } else { d };
            inv[i] = 1.0 / denom;
            cp[i] = u * inv[i];
            lower[i] = l;
        }
        Tridiag { cp, inv, lower }
    }

    fn solve(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        rhs[0] *= self.inv[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) * self.inv[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.cp[i] * rhs[i + 1];
        }
    }
}

fn apply_a(kf: &[f64], robin: f64, u: &[f64], out: &mut [f64]) {
    let n = u.len();
    for i in 0..n {
        let mut v = 0.0;
        if i > 0 {
            v += kf[i - 1] * (u[i] - u[i - 1]);
        }
        if i + 1 < n {
            v += kf[i] * (u[i] - u[i + 1]);
        }
        out[i] = v;
    }
    out[n - 1] += robin * u[n - 1];
}

fn build_grid(med: ForwardMedium<'_>, nx: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let a = med.depth();
    let h = a / nx as f64;
    let x: Vec<f64> = (0..=nx).map(|i| i as f64 * h).collect();
    let kf = match med {
        ForwardMedium::Layered(m) => {
            for &b in &m.breakpoints()[1..m.layers()] {
                let r = b / h;
                if (r - r.round()).abs() > 1e-8 {
                    return Err(Error::Config(format!(
                        "grid with nx={nx} does not place a node on breakpoint {b} (h={h})"
                    )));
                }
            }
            (0..nx).map(|i| m.conductivity_at((i as f64 + 0.5) * h) / h / h).collect()
        }
        ForwardMedium::Smooth { medium, a } => {
            if !(a > 0.0 && a <= medium.domain_end() * (1.0 + 1e-14)) {
                return Err(Error::Domain(format!("cut depth {a} outside (0, M]")));
            }
            let gl = [(-0.774_596_669_241_483_4, 5.0 / 9.0), (0.0, 8.0 / 9.0), (0.774_596_669_241_483_4, 5.0 / 9.0)];
            (0..nx)
                .map(|i| {
                    let c = (i as f64 + 0.5) * h;
                    let r: f64 = gl.iter().map(|(t, w)| w / medium.gamma(c + 0.5 * h * t)).sum::<f64>() * 0.5 * h;
                    1.0 / r / h
                })
                .collect()
        }
    };
    Ok((x, kf))
}

/// Sub-step boundaries (relative to the interval start) for output interval `n`.
fn substeps(n: usize, dt: f64, grading_time: f64) -> Vec<f64> {
    if n == 0 {
        let k = GRADED_START_STEPS as f64;
        return (1..=GRADED_START_STEPS).map(|i| dt * (i as f64 / k).powi(4)).collect();
    }
    let ratio = grading_time / (n as f64 * dt);
    let s = if ratio > 1.0 { ratio.powf(5.0 / 6.0).ceil() as usize } else { 1 };
    (1..=s).map(|i| dt * i as f64 / s as f64).collect()
}

/// Solves `u_t = (γ u_x)_x` on `(0, a) × (0, T)` with `u(x,0) = 0`,
/// `u_x(0,t) = g(t)` and `right` at `x = a`.
pub fn solve_forward(
    med: ForwardMedium<'_>,
    left_flux: &dyn Fn(f64) -> f64,
    right: RightBc,
    horizon: f64,
    res: Resolution,
) -> Result<ForwardSolution> {
    right.validate()?;
    if res.nx < 2 || res.nt < 2 {
        return Err(Error::Validation(format!("nx={} and nt={} must both be at least 2", res.nx, res.nt)));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Validation(format!("horizon T={horizon} must be positive")));
    }
    let (x, kf) = build_grid(med, res.nx)?;
    let n = x.len();
    let h = x[1] - x[0];
    let mut vol = vec![h; n];
    vol[0] = 0.5 * h;
    vol[n - 1] = 0.5 * h;
    // The system is scaled by 1/h so that V = 1 in the interior.
    let vol: Vec<f64> = vol.iter().map(|v| v / h).collect();
    let robin = right.rho() / h;
    let gamma0 = med.gamma0();
    let source = |t: f64| -gamma0 * left_flux(t) / h;

    let dt = horizon / res.nt as f64;
    let grading_time = horizon / 60.0;
    let g = 2.0 - std::f64::consts::SQRT_2;
    let w = (1.0 - g) / (2.0 - g);
    let c_mix = 1.0 / (g * (2.0 - g));
    let c_old = (1.0 - g) * (1.0 - g) / (g * (2.0 - g));

    let mut warnings = Vec::new();
    let gmax = (0..=res.nt).map(|i| left_flux(i as f64 * dt).abs()).fold(0.0, f64::max);
    let worst = (0..res.nt)
        .map(|i| {
            let t = i as f64 * dt;
            (left_flux(t + 0.5 * dt) - 0.5 * (left_flux(t) + left_flux(t + dt))).abs()
        })
        .fold(0.0, f64::max);
    if gmax > 0.0 && worst > 1e-3 * gmax {
        warnings.push(format!(
            "time step {dt:.3e} does not resolve the left flux (midpoint deviation {:.2e} of peak)",
            worst / gmax
        ));
    }

    let mut u = vec![0.0; n];
    let mut ug = vec![0.0; n];
    let mut au = vec![0.0; n];
    let mut temp_left = vec![0.0; res.nt + 1];
    let mut flux_left = vec![0.0; res.nt + 1];
    let mut flux_right = vec![0.0; res.nt + 1];
    flux_left[0] = gamma0 * left_flux(0.0);
    let mut cache: Option<(f64, Tridiag, Tridiag)> = None;

    for step in 0..res.nt {
        let t0 = step as f64 * dt;
        let mut prev = 0.0;
        for tau in substeps(step, dt, grading_time) {
            let hs = tau - prev;
            let ts = t0 + prev;
            prev = tau;
            if cache.as_ref().map(|c| (c.0 - hs).abs() > 1e-15 * hs).unwrap_or(true) {
                let f1 = Tridiag::factor(&vol, &kf, robin, 0.5 * g * hs);
                let f2 = Tridiag::factor(&vol, &kf, robin, w * hs);
                cache = Some((hs, f1, f2));
            }
            let (_, f1, f2) = cache.as_ref().expect("factored above");
            apply_a(&kf, robin, &u, &mut au);
            let s0 = source(ts);
            let sg = source(ts + g * hs);
            for i in 0..n {
                ug[i] = vol[i] * u[i] - 0.5 * g * hs * au[i];
            }
            ug[0] += 0.5 * g * hs * (s0 + sg);
            f1.solve(&mut ug);
            for i in 0..n {
                u[i] = vol[i] * (c_mix * ug[i] - c_old * u[i]);
            }
            u[0] += w * hs * source(ts + hs);
            f2.solve(&mut u);
        }
        let t = (step + 1) as f64 * dt;
        temp_left[step + 1] = u[0];
        flux_left[step + 1] = gamma0 * left_flux(t);
        flux_right[step + 1] = -right.rho() * u[n - 1];
    }

    let times: Vec<f64> = (0..=res.nt).map(|i| if i == res.nt { horizon } else { i as f64 * dt }).collect();
    let injected = -gamma0 * quad::integrate(left_flux, 0.0, horizon, 1e-14, 1e-13);
    Ok(ForwardSolution {
        record: BoundaryRecord { horizon, times, temp_left, flux_left, flux_right: Some(flux_right) },
        snapshot: FieldSnapshot { x, u },
        injected,
        warnings,
    })
}

/// Exact solution of `u_t = γ u_xx` on `(0, a)` with `u_x(0,t) = 1`, `u_x(a,t) = 0`, `u(x,0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantSeries {
    pub a: f64,
    pub gamma: f64,
    pub n_terms: usize,
}

fn ierfc(xi: f64) -> f64 {
    (-xi * xi).exp() / PI.sqrt() - xi * libm::erfc(xi)
}

impl ConstantSeries {
    pub fn new(a: f64, gamma: f64, n_terms: usize) -> Result<Self> {
        if !(a > 0.0 && gamma > 0.0 && a.is_finite() && gamma.is_finite()) {
            return Err(Error::Validation("series oracle needs a > 0 and γ > 0".into()));
        }
        // Cosine coefficients decay like 2a/(n²π²); the image sum covers early times.
        if n_terms < 1000 {
            return Err(Error::Validation(format!("n_terms={n_terms} too small for a 1e-12 tail")));
        }
        Ok(ConstantSeries { a, gamma, n_terms })
    }

    fn mode_rate(&self, n: usize) -> f64 {
        self.gamma * (n as f64 * PI / self.a).powi(2)
    }

    fn coefficient(&self, n: usize) -> f64 {
        2.0 * self.a / (n as f64 * PI).powi(2)
    }

    fn polynomial(&self, x: f64) -> f64 {
        x - x * x / (2.0 * self.a) - self.a / 3.0
    }

    /// `u(x, t)`.
    pub fn u(&self, x: f64, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let (a, g) = (self.a, self.gamma);
        if g * t / (a * a) < 0.1 {
            let r = 2.0 * (g * t).sqrt();
            let mut s = 0.0;
            for k in -6i32..=6 {
                s += ierfc((x - 2.0 * k as f64 * a).abs() / r);
            }
            return -r * s;
        }
        let mut s = -g * t / a + self.polynomial(x);
        for n in 1..=self.n_terms {
            let e = (-self.mode_rate(n) * t).exp();
            if e < 1e-18 {
                break;
            }
            s += self.coefficient(n) * (n as f64 * PI * x / a).cos() * e;
        }
        s
    }

    /// `∫_0^T e^{−st} u(x,t) dt`.
    pub fn laplace(&self, x: f64, s: Complex64, horizon: f64) -> Complex64 {
        use crate::cmath::{phi0, phi1};
        let (a, g) = (self.a, self.gamma);
        let mut acc = -g / a * horizon * horizon * phi1(s * horizon) + self.polynomial(x) * horizon * phi0(s * horizon);
        let mut tail = Complex64::new(0.0, 0.0);
        for n in (1..=self.n_terms).rev() {
            let q = s + self.mode_rate(n);
            tail += self.coefficient(n) * (n as f64 * PI * x / a).cos() * horizon * phi0(q * horizon);
        }
        acc += tail;
        acc
    }

    /// Value of `u_x(x,t)` for `0 < x < a`.
    pub fn u_x(&self, x: f64, t: f64) -> f64 {
        let a = self.a;
        let mut s = 1.0 - x / a;
        for n in 1..=self.n_terms {
            let e = (-self.mode_rate(n) * t).exp();
            if e < 1e-18 {
                break;
            }
            s -= self.coefficient(n) * (n as f64 * PI / a) * (n as f64 * PI * x / a).sin() * e;
        }
        s
    }
}

/// Boundary record of the constant-coefficient problem with unit left flux.
pub fn exact_series_constant(a: f64, gamma: f64, horizon: f64, nt: usize, n_terms: usize) -> Result<BoundaryRecord> {
    let series = ConstantSeries::new(a, gamma, n_terms)?;
    if nt < 2 || !(horizon > 0.0) {
        return Err(Error::Validation("series record needs nt ≥ 2 and T > 0".into()));
    }
    let dt = horizon / nt as f64;
    let times: Vec<f64> = (0..=nt).map(|i| if i == nt { horizon } else { i as f64 * dt }).collect();
    Ok(BoundaryRecord {
        horizon,
        temp_left: times.iter().map(|t| series.u(0.0, *t)).collect(),
        flux_left: vec![gamma; nt + 1],
        flux_right: Some(vec![0.0; nt + 1]),
        times,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_flux_gives_zero_traces() {
        let m = LayeredMedium::homogeneous(1.0, 1.0).unwrap();
        let sol = solve_forward(
            ForwardMedium::Layered(&m),
            &|_| 0.0,
            RightBc::Robin(1.0),
            0.5,
            Resolution { nx: 50, nt: 20 },
        )
        .unwrap();
        assert!(sol.record.temp_left.iter().all(|v| *v == 0.0));
        assert!(sol.snapshot.u.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn series_branches_agree() {
        let s = ConstantSeries::new(1.0, 1.0, 100_000).unwrap();
        // Either side of the switch between image sum and cosine series.
        for x in [0.0, 0.3, 1.0] {
            let t: f64 = 0.1;
            let img = {
                let r = 2.0 * t.sqrt();
                -r * (-6i32..=6).map(|k| ierfc((x - 2.0 * k as f64).abs() / r)).sum::<f64>()
            };
            let mut ser = -t + s.polynomial(x);
            for n in 1..100_000 {
                ser += s.coefficient(n) * (n as f64 * PI * x).cos() * (-s.mode_rate(n) * t).exp();
            }
            assert!((img - ser).abs() < 1e-12, "{x}: {img} vs {ser}");
        }
        assert_eq!(s.u(0.0, 0.0), 0.0);
    }

    #[test]
    fn series_conserves_injected_heat() {
        let s = ConstantSeries::new(1.0, 1.0, 100_000).unwrap();
        for t in [0.05, 0.4, 1.0] {
            let mean = quad::integrate(|x| s.u(x, t), 0.0, 1.0, 1e-13, 1e-13);
            assert!((mean + t).abs() < 1e-10, "{t}: {mean}");
        }
    }

    #[test]
    fn series_laplace_matches_quadrature() {
        let s = ConstantSeries::new(1.0, 1.0, 100_000).unwrap();
        let z2 = Complex64::new(3.0, 7.0);
        let num_re = quad::integrate(|t| (-(z2 * t)).exp().re * s.u(0.0, t), 0.0, 1.0, 1e-13, 1e-12);
        let num_im = quad::integrate(|t| (-(z2 * t)).exp().im * s.u(0.0, t), 0.0, 1.0, 1e-13, 1e-12);
        let l = s.laplace(0.0, z2, 1.0);
        assert!((l - Complex64::new(num_re, num_im)).norm() < 1e-10);
    }

    #[test]
    fn non_aligned_grid_is_rejected() {
        let m = LayeredMedium::new(vec![0.0, 0.33, 1.0], vec![1.0, 2.0]).unwrap();
        let r = solve_forward(
            ForwardMedium::Layered(&m),
            &|_| 1.0,
            RightBc::NeumannZero,
            0.1,
            Resolution { nx: 10, nt: 10 },
        );
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn coarse_time_grid_warns() {
        let m = LayeredMedium::homogeneous(1.0, 1.0).unwrap();
        let sol = solve_forward(
            ForwardMedium::Layered(&m),
            &|t| (40.0 * t).sin(),
            RightBc::NeumannZero,
            1.0,
            Resolution { nx: 20, nt: 10 },
        )
        .unwrap();
        assert_eq!(sol.warnings.len(), 1);
    }

    #[test]
    fn energy_balance_neumann() {
        let m = LayeredMedium::new(vec![0.0, 0.25, 1.0], vec![1.0, 3.0]).unwrap();
        let sol = solve_forward(
            ForwardMedium::Layered(&m),
            &|_| 1.0,
            RightBc::NeumannZero,
            0.5,
            Resolution { nx: 200, nt: 100 },
        )
        .unwrap();
        let (stored, injected) = sol.energy_balance();
        assert!((stored - injected).abs() < 1e-10, "{stored} vs {injected}");
        assert!((injected + 0.5).abs() < 1e-14);
    }
}
