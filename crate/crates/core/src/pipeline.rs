//! Experiment configuration and the simulate → indicate → extract stages.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::extract::{
    extract, recover_rho, refine_slowness, slope_curve_csv, FitOptions, ReconstructionReport, Target,
};
use crate::forward::{solve_forward, BoundaryRecord, ForwardMedium, Resolution, RightBc};
use crate::indicator::{
    evaluate_grid, filon, flux_admissibility, right_flux_ratio, tau_grid, IndicatorSamples, NoiseModel, ProbeGrid,
    ProbeSpec, ProblemKind, SampleFlag, SampleMetadata,
};
use crate::medium::{KnownLayers, LayeredMedium, SmoothJson, SmoothMedium};
use crate::oracle::{oracle_samples, OracleModel};
use crate::probe::{make_probe, ProbeFrequency, ProbeMode};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub c: f64,
    pub mode: ProbeMode,
    #[serde(default)]
    pub tau_min: Option<f64>,
    #[serde(default)]
    pub tau_max: Option<f64>,
    #[serde(default = "default_per_decade")]
    pub per_decade: usize,
    /// Upper end of the grid used for oracle indicators.
    #[serde(default = "default_oracle_tau_max")]
    pub oracle_tau_max: f64,
}

fn default_per_decade() -> usize {
    120
}

fn default_oracle_tau_max() -> f64 {
    1000.0
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub nx: Option<usize>,
    #[serde(default)]
    pub nt: Option<usize>,
    /// Also simulate at half resolution for the noise estimate.
    #[serde(default = "yes")]
    pub companion: bool,
}

fn yes() -> bool {
    true
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { nx: None, nt: None, companion: true }
    }
}

/// Hidden geometry used only to generate data.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truth {
    #[serde(default)]
    pub medium: Option<LayeredMedium>,
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleFlavor {
    /// Leading-order closed forms.
    #[default]
    Leading,
    /// Exact boundary-value solution paired with the probe.
    Exact,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub problem: ProblemKind,
    #[serde(default)]
    pub known: Option<KnownLayers>,
    #[serde(default)]
    pub smooth: Option<SmoothJson>,
    #[serde(default)]
    pub truth: Option<Truth>,
    /// Depth bound `M`; defaults to the smooth medium's domain end for problem C.
    #[serde(default)]
    pub depth_bound: Option<f64>,
    pub probe: ProbeConfig,
    pub horizon: f64,
    /// Left flux `u_x(0,t)` as an expression in `t`.
    #[serde(default = "default_flux")]
    pub left_flux: String,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub fit: FitOptions,
    #[serde(default)]
    pub extract_rho: bool,
    #[serde(default)]
    pub oracle: OracleFlavor,
}

fn default_flux() -> String {
    "1".into()
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(format!("config: {e}")))
    }

    fn known(&self) -> Result<&KnownLayers> {
        self.known.as_ref().ok_or_else(|| Error::Config(format!("problem {} needs \"known\" layers", self.problem)))
    }

    pub fn smooth_medium(&self) -> Result<SmoothMedium> {
        self.smooth.as_ref().ok_or_else(|| Error::Config("problem C needs a \"smooth\" medium".into()))?.build()
    }

    pub fn depth_bound(&self) -> Result<f64> {
        match (self.depth_bound, self.problem, &self.smooth) {
            (Some(m), _, _) => Ok(m),
            (None, ProblemKind::C, Some(s)) => Ok(s.m),
            _ => Err(Error::Config("\"depth_bound\" (M) is required".into())),
        }
    }

    pub fn flux(&self) -> Result<Expr> {
        Expr::parse(&self.left_flux, "t").map_err(|e| Error::Config(format!("left_flux: {e}")))
    }

    /// One-way slowness of the known medium from 0 to the depth bound.
    fn known_slowness(&self, m: f64) -> Result<f64> {
        Ok(match self.problem {
            ProblemKind::A => m / self.known()?.conductivities()[0].sqrt(),
            ProblemKind::B => self.known()?.slowness(m),
            ProblemKind::C => self.smooth_medium()?.slowness(m)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!("horizon T={} must be positive", self.horizon)));
        }
        if !(self.probe.c > 0.0 && self.probe.c.is_finite()) {
            return Err(Error::Config(format!("probe speed c={} must be positive", self.probe.c)));
        }
        let m = self.depth_bound()?;
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::Config(format!("depth bound M={m} must be positive")));
        }
        match self.problem {
            ProblemKind::A => {
                if self.known()?.layers() != 1 {
                    return Err(Error::Config("problem A takes exactly one known layer".into()));
                }
            }
            ProblemKind::B => {
                self.known()?;
            }
            ProblemKind::C => {
                let s = self.smooth_medium()?;
                if m > s.domain_end() * (1.0 + 1e-14) {
                    return Err(Error::Config(format!(
                        "depth bound M={m} exceeds the smooth medium's extent {}",
                        s.domain_end()
                    )));
                }
            }
        }
        self.flux()?;
        if self.probe.mode == ProbeMode::Oscillatory {
            let travel = 2.0 * self.probe.c * self.known_slowness(m)?;
            if travel >= self.horizon {
                return Err(Error::Config(format!(
                    "inadmissible speed: 2c∫_0^M dx/√γ = {travel:.4} must be below T = {} (lower c or raise T)",
                    self.horizon
                )));
            }
        }
        if let Some(t) = &self.truth {
            self.check_truth(t)?;
        }
        if let (Some(lo), Some(hi)) = (self.probe.tau_min, self.probe.tau_max) {
            if !(hi > lo) {
                return Err(Error::Config(format!("tau_max {hi} must exceed tau_min {lo}")));
            }
        }
        Ok(())
    }

    fn check_truth(&self, t: &Truth) -> Result<()> {
        if !(t.rho >= 0.0 && t.rho.is_finite()) {
            return Err(Error::Config(format!("truth rho={} must be non-negative", t.rho)));
        }
        match self.problem {
            ProblemKind::A | ProblemKind::B => {
                let med = t.medium.as_ref().ok_or_else(|| {
                    Error::Config(format!("problem {} truth needs a layered \"medium\"", self.problem))
                })?;
                let known = self.known()?;
                let k = known.layers();
                if med.layers() < k
                    || med.conductivities()[..k] != *known.conductivities()
                    || med.breakpoints()[..k] != *known.interfaces()
                {
                    return Err(Error::Config("truth medium does not extend the known layers".into()));
                }
            }
            ProblemKind::C => {
                let a = t.a.ok_or_else(|| Error::Config("problem C truth needs the endpoint \"a\"".into()))?;
                let m = self.depth_bound()?;
                if !(a > 0.0 && a <= m) {
                    return Err(Error::Config(format!("truth endpoint a={a} must lie in (0, M={m}]")));
                }
            }
        }
        Ok(())
    }

    fn truth(&self) -> Result<&Truth> {
        self.truth.as_ref().ok_or_else(|| Error::Config("this stage needs the \"truth\" geometry".into()))
    }

    pub fn probe_spec(&self) -> Result<ProbeSpec> {
        Ok(match self.problem {
            ProblemKind::A => ProbeSpec::Single { gamma1: self.known()?.conductivities()[0] },
            ProblemKind::B => ProbeSpec::Layered(self.known()?.clone()),
            ProblemKind::C => ProbeSpec::Smooth { medium: self.smooth_medium()?, end: self.depth_bound()? },
        })
    }

    pub fn target(&self) -> Result<Target> {
        Ok(match self.problem {
            ProblemKind::A => Target::Interface { gamma1: self.known()?.conductivities()[0] },
            ProblemKind::B => Target::LayeredBoundary { known: self.known()?.clone() },
            ProblemKind::C => Target::SmoothBoundary { medium: self.smooth_medium()?, bound: self.depth_bound()? },
        })
    }

    /// τ grid for PDE data; `oracle` extends it to the oracle upper end.
    pub fn grid(&self, oracle: bool) -> Result<ProbeGrid> {
        let c = self.probe.c;
        let (lo, hi) = match self.probe.mode {
            ProbeMode::Oscillatory => (1.03 / (c * c), 200.0),
            ProbeMode::RealRay => (3.0, 30.0),
        };
        let lo = self.probe.tau_min.unwrap_or(lo);
        let hi = if oracle { self.probe.oracle_tau_max.max(lo * 10.0) } else { self.probe.tau_max.unwrap_or(hi) };
        Ok(ProbeGrid { c, mode: self.probe.mode, taus: tau_grid(lo, hi, self.probe.per_decade)? })
    }

    /// Short hash of the problem description seen by the probe.
    pub fn medium_hash(&self) -> String {
        let desc = serde_json::json!({
            "problem": self.problem,
            "known": self.known,
            "smooth": self.smooth,
            "depth_bound": self.depth_bound,
        });
        let digest = Sha256::digest(desc.to_string().as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn resolution(&self, depth: f64) -> Resolution {
        let d = Resolution::default_for(depth, self.horizon);
        Resolution { nx: self.solver.nx.unwrap_or(d.nx), nt: self.solver.nt.unwrap_or(d.nt) }
    }

    fn metadata(&self, provenance: &str) -> SampleMetadata {
        SampleMetadata {
            problem: self.problem,
            mode: self.probe.mode,
            c: self.probe.c,
            medium_hash: self.medium_hash(),
            provenance: provenance.into(),
        }
    }
}

/// Samples used to refine the boundary before Robin extraction.
const RHO_TAIL: usize = 24;

/// Output of the simulate stage.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub record: BoundaryRecord,
    pub companion: Option<BoundaryRecord>,
    pub notes: Vec<String>,
}

/// Classifies a two-layer truth by the one-way times through each layer.
pub fn two_layer_case(med: &LayeredMedium) -> Option<String> {
    if med.layers() != 2 {
        return None;
    }
    let b = med.breakpoints();
    let g = med.conductivities();
    let t1 = b[1] / g[0].sqrt();
    let t2 = (b[2] - b[1]) / g[1].sqrt();
    Some(if t1 < t2 {
        format!("case (a): b/√γ1 = {t1:.4} < (a−b)/√γ2 = {t2:.4}; the interface is recoverable from Neumann data")
    } else {
        format!("case (b): b/√γ1 = {t1:.4} ≥ (a−b)/√γ2 = {t2:.4}; recovery needs an exponentially small right flux, which is not claimed here")
    })
}

pub fn simulate(cfg: &PipelineConfig) -> Result<Simulation> {
    let truth = cfg.truth()?;
    let flux = cfg.flux()?;
    let g = |t: f64| flux.eval(t);
    let right = if truth.rho == 0.0 { RightBc::NeumannZero } else { RightBc::Robin(truth.rho) };
    let smooth;
    let med = match cfg.problem {
        ProblemKind::A | ProblemKind::B => ForwardMedium::Layered(truth.medium.as_ref().expect("validated")),
        ProblemKind::C => {
            smooth = cfg.smooth_medium()?;
            ForwardMedium::Smooth { medium: &smooth, a: truth.a.expect("validated") }
        }
    };
    let res = cfg.resolution(med.depth());
    let sol = solve_forward(med, &g, right, cfg.horizon, res)?;
    let mut notes = sol.warnings.clone();
    let (stored, injected) = sol.energy_balance();
    let out =
        sol.record.flux_right.as_ref().map(|f| filon(&sol.record.times, f, Complex64::new(0.0, 0.0)).re).unwrap_or(0.0);
    notes.push(format!(
        "energy balance: stored {stored:.10e}, injected {injected:.10e}, right-end flux integral {out:.3e}, mismatch {:.3e}",
        (stored - injected - out).abs()
    ));
    if let Some(m) = &truth.medium {
        if let Some(case) = two_layer_case(m) {
            notes.push(case);
        }
    }
    let companion = if cfg.solver.companion {
        Some(solve_forward(med, &g, right, cfg.horizon, res.halved())?.record)
    } else {
        None
    };
    Ok(Simulation { record: sol.record, companion, notes })
}

/// Output of the indicate stage.
#[derive(Debug, Clone)]
pub struct Indication {
    pub samples: IndicatorSamples,
    pub admissibility: Option<crate::indicator::FluxAdmissibility>,
    pub notes: Vec<String>,
}

pub fn indicate(
    cfg: &PipelineConfig,
    record: &BoundaryRecord,
    companion: Option<&BoundaryRecord>,
) -> Result<Indication> {
    let grid = cfg.grid(false)?;
    let spec = cfg.probe_spec()?;
    let noise = match (cfg.noise, companion) {
        (NoiseModel::Companion { .. }, None) => {
            return Err(Error::Config("companion noise model needs the half-resolution record".into()))
        }
        (n, _) => n,
    };
    let samples = evaluate_grid(record, companion, &spec, &grid, noise, cfg.metadata("pde"))?;
    let mut notes = Vec::new();
    let admissibility = if grid.taus.len() >= 8 {
        match flux_admissibility(record, spec.gamma0(), grid.c, grid.mode, &grid.taus) {
            Ok(a) => Some(a),
            Err(e) => {
                notes.push(format!("flux admissibility: {e}"));
                None
            }
        }
    } else {
        None
    };
    if let (ProblemKind::A, Some(t)) = (cfg.problem, cfg.truth.as_ref()) {
        if let Some(m) = t.medium.as_ref().filter(|m| m.layers() == 2) {
            let last_ok = samples.entries.iter().rev().find(|e| e.flag == SampleFlag::Ok);
            if let Some(e) = last_ok {
                let p = make_probe(grid.c, e.tau, grid.mode)?;
                let g = m.conductivities();
                if let Some(r) = right_flux_ratio(record, &p, (g[0], g[1]), m.breakpoints()[1], m.depth()) {
                    notes.push(format!("right-flux masking ratio at τ = {:.3}: {r:.3e}", e.tau));
                }
            }
        }
    }
    Ok(Indication { samples, admissibility, notes })
}

/// `w′(0)` of the configured flux, by the same product rule as for simulated data.
pub fn flux_transform(cfg: &PipelineConfig, probe: &ProbeFrequency) -> Result<Complex64> {
    let flux = cfg.flux()?;
    let nt = cfg.solver.nt.unwrap_or(Resolution::default_for(1.0, cfg.horizon).nt);
    let times: Vec<f64> = (0..=nt).map(|i| cfg.horizon * i as f64 / nt as f64).collect();
    let values: Vec<f64> = times.iter().map(|&t| flux.eval(t)).collect();
    Ok(filon(&times, &values, probe.z2))
}

pub fn oracle_model(cfg: &PipelineConfig) -> Result<OracleModel> {
    let truth = cfg.truth()?;
    let exact = cfg.oracle == OracleFlavor::Exact;
    Ok(match cfg.problem {
        ProblemKind::A | ProblemKind::B => {
            let med = truth.medium.clone().expect("validated");
            match (cfg.problem, med.layers(), exact, truth.rho == 0.0) {
                (ProblemKind::A, 2, false, true) => {
                    let b = med.breakpoints();
                    let g = med.conductivities();
                    OracleModel::TwoLayerPrincipal { a: b[2], b: b[1], gamma: (g[0], g[1]) }
                }
                (_, _, true, _) => OracleModel::LayeredExact { medium: med, rho: truth.rho },
                _ => OracleModel::LayeredAsymptotic { medium: med, rho: truth.rho },
            }
        }
        ProblemKind::C => {
            let medium = cfg.smooth_medium()?;
            let a = truth.a.expect("validated");
            if exact {
                OracleModel::SmoothExact { medium, a, end: cfg.depth_bound()?, rho: truth.rho }
            } else {
                OracleModel::SmoothAsymptotic { medium, a }
            }
        }
    })
}

pub fn indicate_oracle(cfg: &PipelineConfig) -> Result<IndicatorSamples> {
    let model = oracle_model(cfg)?;
    let grid = cfg.grid(true)?;
    let flux = cfg.flux()?;
    let nt = cfg.solver.nt.unwrap_or(Resolution::default_for(1.0, cfg.horizon).nt);
    let times: Vec<f64> = (0..=nt).map(|i| cfg.horizon * i as f64 / nt as f64).collect();
    let values: Vec<f64> = times.iter().map(|&t| flux.eval(t)).collect();
    let w0 = |p: &ProbeFrequency| filon(&times, &values, p.z2);
    oracle_samples(&model, &grid, &w0, &cfg.medium_hash())
}

pub fn extract_report(cfg: &PipelineConfig, samples: &IndicatorSamples) -> Result<ReconstructionReport> {
    let mut report = extract(samples, &cfg.target()?, &cfg.fit)?;
    if cfg.extract_rho {
        let known = match cfg.problem {
            ProblemKind::B => cfg.known()?.clone(),
            _ => return Err(Error::Config("Robin extraction needs problem B (known layers, hidden boundary)".into())),
        };
        let gm = known.conductivities()[known.layers() - 1];
        let mut a = report.recovered.value;
        for _ in 0..3 {
            a += refine_slowness(samples, &known.close_at(a)?, RHO_TAIL)? * gm.sqrt();
        }
        report.notes.push(format!("boundary refined for Robin extraction: a = {a:.8}"));
        report.rho = Some(recover_rho(samples, &known.close_at(a)?)?);
    }
    Ok(report)
}

/// Everything produced by a full run.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub simulation: Option<Simulation>,
    pub samples: IndicatorSamples,
    pub report: ReconstructionReport,
    pub slope_curve: String,
}

pub fn run_pipeline(cfg: &PipelineConfig, oracle: bool) -> Result<PipelineOutput> {
    let (simulation, samples, admissibility, mut notes) = if oracle {
        (None, indicate_oracle(cfg)?, None, Vec::new())
    } else {
        let sim = simulate(cfg)?;
        let ind = indicate(cfg, &sim.record, sim.companion.as_ref())?;
        let mut notes = sim.notes.clone();
        notes.extend(ind.notes);
        (Some(sim), ind.samples, ind.admissibility, notes)
    };
    let mut report = extract_report(cfg, &samples)?;
    report.admissibility = admissibility;
    notes.append(&mut report.notes);
    report.notes = notes;
    let slope_curve = slope_curve_csv(&samples, &report.fit);
    Ok(PipelineOutput { simulation, samples, report, slope_curve })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SINGLE: &str = r#"{
        "problem": "B",
        "known": {"breakpoints": [0], "conductivities": [1]},
        "truth": {"medium": {"breakpoints": [0, 1], "conductivities": [1]}},
        "depth_bound": 1,
        "probe": {"c": 0.25, "mode": "oscillatory"},
        "horizon": 1.2
    }"#;

    #[test]
    fn config_round_trip_and_hash() {
        let cfg = PipelineConfig::from_json(SINGLE).unwrap();
        let again = PipelineConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(cfg.medium_hash(), again.medium_hash());
        assert_eq!(cfg.medium_hash().len(), 16);
    }

    #[test]
    fn speed_guard() {
        let bad = SINGLE.replace("\"c\": 0.25", "\"c\": 0.6");
        assert!(matches!(PipelineConfig::from_json(&bad), Err(Error::Config(_))));
        let ray = bad.replace("oscillatory", "real-ray");
        assert!(PipelineConfig::from_json(&ray).is_ok());
    }

    #[test]
    fn truth_must_extend_known_layers() {
        let bad = SINGLE.replace("\"conductivities\": [1]}}", "\"conductivities\": [2]}}");
        assert!(matches!(PipelineConfig::from_json(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = SINGLE.replace("\"horizon\": 1.2", "\"horizon\": 1.2, \"horizn\": 1");
        assert!(PipelineConfig::from_json(&bad).is_err());
    }

    #[test]
    fn case_classification() {
        let a = LayeredMedium::new(vec![0.0, 0.5, 2.0], vec![1.0, 4.0]).unwrap();
        assert!(two_layer_case(&a).unwrap().starts_with("case (a)"));
        let b = LayeredMedium::new(vec![0.0, 0.5, 0.6], vec![1.0, 4.0]).unwrap();
        assert!(two_layer_case(&b).unwrap().starts_with("case (b)"));
    }

    #[test]
    fn oracle_pipeline_single_layer() {
        let cfg = PipelineConfig::from_json(SINGLE).unwrap();
        let out = run_pipeline(&cfg, true).unwrap();
        assert!((out.report.recovered.value - 1.0).abs() < 0.01, "{}", out.report.summary());
        assert_eq!(out.samples.metadata.provenance, "layered-asymptotic");
    }
}
