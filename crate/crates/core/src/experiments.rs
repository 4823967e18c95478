//! Approximation tables and PDE runs driven from a configuration.
//!
//! Throughout this module `modes` counts basis functions: a run with
//! `modes = 8` uses members of degree 0..=7. For the opinion model it is the
//! parent Legendre degree, giving `modes - 1` composite functions.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisFamily, Domain, FamilyKind};
use crate::dirichlet_basis::composite_dirichlet;
use crate::error::{Error, Result};
use crate::moments::moments_of_values;
use crate::operators::{callcenter_operator, constrain, fp_hermite_operator, opinion_operator, GalerkinOperator, SteadyState};
use crate::projection::{ConstraintOperator, NodalBasis, SpectralCoeffs};
use crate::quadrature::{gauss_rule, QuadratureRule, DEFAULT_POINTS};
use crate::timestepper::{integrate, MonitorConfig, Observables, Trajectory, DEFAULT_DT, DEFAULT_STRIDE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunctionId {
    BoundedOsc,
    HermiteBimodal,
    LaguerrePoly,
    Lognormal,
    FpInitSym,
    FpInitAsym,
    OpinionInit,
    CallcenterInit,
}

const ALL_IDS: [(TestFunctionId, &str); 8] = [
    (TestFunctionId::BoundedOsc, "bounded_osc"),
    (TestFunctionId::HermiteBimodal, "hermite_bimodal"),
    (TestFunctionId::LaguerrePoly, "laguerre_poly"),
    (TestFunctionId::Lognormal, "lognormal"),
    (TestFunctionId::FpInitSym, "fp_init_sym"),
    (TestFunctionId::FpInitAsym, "fp_init_asym"),
    (TestFunctionId::OpinionInit, "opinion_init"),
    (TestFunctionId::CallcenterInit, "callcenter_init"),
];

/// Variance and log-mean of the lognormal test function.
pub const LOGNORMAL_SIGMA: f64 = 0.2;

impl TestFunctionId {
    pub fn name(&self) -> &'static str {
        ALL_IDS.iter().find(|(id, _)| id == self).map(|(_, n)| *n).unwrap_or("?")
    }

    /// The closed-form function. `OpinionInit` is returned without its
    /// normalization constant, which runs fix by quadrature.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFunctionId::BoundedOsc => (2.0 * PI * x).sin() + x * x * (2.0 * PI * x).cos(),
            TestFunctionId::HermiteBimodal => {
                3.0 / (2.0 * PI).sqrt() * (-(x + 3.0) * (x + 3.0) / 2.0).exp()
                    - 1.0 / PI.sqrt() * (-(x - 2.0) * (x - 2.0)).exp()
            }
            TestFunctionId::LaguerrePoly | TestFunctionId::CallcenterInit => {
                (x * x * x - 2.0 * x + x.sin()) * (-x).exp()
            }
            TestFunctionId::Lognormal => {
                if x <= 0.0 {
                    return 0.0;
                }
                let mu = 40f64.ln() - LOGNORMAL_SIGMA;
                let z = x.ln() - mu;
                1.0 / ((2.0 * PI * LOGNORMAL_SIGMA).sqrt() * x) * (-z * z / (2.0 * LOGNORMAL_SIGMA)).exp()
            }
            TestFunctionId::FpInitSym => ((-(x + 2.0) * (x + 2.0)).exp() + (-(x - 2.0) * (x - 2.0)).exp()) / PI.sqrt(),
            TestFunctionId::FpInitAsym => ((-(x + 3.0) * (x + 3.0)).exp() + (-x * x).exp()) / PI.sqrt(),
            TestFunctionId::OpinionInit => {
                (1.0 + x).powi(12) * (1.0 - x).powi(6) + (1.0 + x).powi(13) * (1.0 - x).powi(25)
            }
        }
    }

    fn is_approximation_target(&self) -> bool {
        matches!(
            self,
            TestFunctionId::BoundedOsc | TestFunctionId::HermiteBimodal | TestFunctionId::LaguerrePoly | TestFunctionId::Lognormal
        )
    }

    fn compatible_with(&self, family: &BasisFamily) -> bool {
        match self {
            TestFunctionId::BoundedOsc => family.domain().is_bounded() && !family.symmetric_weighting(),
            TestFunctionId::HermiteBimodal => family.kind() == FamilyKind::HermiteFn,
            TestFunctionId::LaguerrePoly | TestFunctionId::Lognormal => family.kind() == FamilyKind::LaguerreFn,
            _ => false,
        }
    }
}

impl fmt::Display for TestFunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestFunctionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ALL_IDS
            .iter()
            .find(|(_, n)| *n == s.trim())
            .map(|(id, _)| *id)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown test function {s}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxConfig {
    pub test: TestFunctionId,
    pub basis: FamilyKind,
    pub modes: Vec<usize>,
    pub constraints: usize,
    pub quad_points: usize,
}

impl ApproxConfig {
    pub fn new(test: TestFunctionId, basis: FamilyKind, modes: Vec<usize>, constraints: usize) -> Self {
        Self { test, basis, modes, constraints, quad_points: DEFAULT_POINTS }
    }

    fn validate(&self) -> Result<BasisFamily> {
        if !self.test.is_approximation_target() {
            return Err(Error::InvalidParameter(format!("{} is not an approximation test", self.test)));
        }
        validate_modes(&self.modes, 1, self.quad_points)?;
        let family = BasisFamily::from_kind(self.basis, 0)?;
        if !self.test.compatible_with(&family) {
            return Err(Error::InvalidParameter(format!("{} cannot be approximated in {}", self.test, self.basis)));
        }
        Ok(family)
    }
}

fn validate_modes(modes: &[usize], min: usize, quad_points: usize) -> Result<()> {
    if modes.is_empty() {
        return Err(Error::InvalidParameter("empty mode list".into()));
    }
    if quad_points == 0 {
        return Err(Error::InvalidParameter("quadrature needs at least one point".into()));
    }
    for &n in modes {
        if n < min || n > quad_points {
            return Err(Error::InvalidParameter(format!(
                "mode count {n} must lie in [{min}, {quad_points}] (the quadrature size)"
            )));
        }
    }
    Ok(())
}

/// One row of an error table; serialized with the CSV column names as keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "BTreeMap<String, serde_json::Value>", try_from = "BTreeMap<String, serde_json::Value>")]
pub struct ErrorRow {
    pub n: usize,
    pub err_l2_std: f64,
    pub err_m_std: Vec<f64>,
    pub err_l2_con: f64,
    pub err_m_con: Vec<f64>,
}

impl ErrorRow {
    pub fn values(&self) -> Vec<f64> {
        let mut v = vec![self.err_l2_std];
        v.extend(&self.err_m_std);
        v.push(self.err_l2_con);
        v.extend(&self.err_m_con);
        v
    }
}

/// Column names for moments 0..=q: `N,err_l2_std,err_m0_std,...,err_l2_con,...`.
pub fn error_columns(q: usize) -> Vec<String> {
    let mut cols = vec!["N".to_string(), "err_l2_std".to_string()];
    cols.extend((0..=q).map(|i| format!("err_m{i}_std")));
    cols.push("err_l2_con".to_string());
    cols.extend((0..=q).map(|i| format!("err_m{i}_con")));
    cols
}

impl From<ErrorRow> for BTreeMap<String, serde_json::Value> {
    fn from(row: ErrorRow) -> Self {
        let q = row.err_m_std.len().saturating_sub(1);
        let cols = error_columns(q);
        let mut map = BTreeMap::new();
        map.insert(cols[0].clone(), serde_json::Value::from(row.n));
        for (name, v) in cols[1..].iter().zip(row.values()) {
            map.insert(name.clone(), serde_json::Value::from(v));
        }
        map
    }
}

impl TryFrom<BTreeMap<String, serde_json::Value>> for ErrorRow {
    type Error = String;

    fn try_from(map: BTreeMap<String, serde_json::Value>) -> std::result::Result<Self, String> {
        let num = |k: &str| -> std::result::Result<f64, String> {
            map.get(k).and_then(|v| v.as_f64()).ok_or_else(|| format!("missing numeric field {k}"))
        };
        let n = map.get("N").and_then(|v| v.as_u64()).ok_or("missing field N")? as usize;
        let q = (0..).take_while(|i| map.contains_key(&format!("err_m{i}_std"))).count();
        Ok(ErrorRow {
            n,
            err_l2_std: num("err_l2_std")?,
            err_m_std: (0..q).map(|i| num(&format!("err_m{i}_std"))).collect::<std::result::Result<_, _>>()?,
            err_l2_con: num("err_l2_con")?,
            err_m_con: (0..q).map(|i| num(&format!("err_m{i}_con"))).collect::<std::result::Result<_, _>>()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditioningRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub cond_m: f64,
    pub spectral_radius_m_inv: f64,
}

/// Least-squares algebraic orders `-d ln(err) / d ln(N)` over the table rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub l2_std: Option<f64>,
    pub l2_con: Option<f64>,
    pub m0_std: Option<f64>,
    pub m0_con: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorTable {
    /// Highest moment power in the columns.
    pub q: usize,
    pub rows: Vec<ErrorRow>,
    pub conditioning: Vec<ConditioningRow>,
    pub order_fit: OrderFit,
}

impl ErrorTable {
    pub fn columns(&self) -> Vec<String> {
        error_columns(self.q)
    }

    pub fn row(&self, n: usize) -> Option<&ErrorRow> {
        self.rows.iter().find(|r| r.n == n)
    }

    fn fit(rows: &[ErrorRow]) -> OrderFit {
        let series = |f: &dyn Fn(&ErrorRow) -> f64| -> Vec<(f64, f64)> { rows.iter().map(|r| (r.n as f64, f(r))).collect() };
        OrderFit {
            l2_std: observed_order(&series(&|r| r.err_l2_std)),
            l2_con: observed_order(&series(&|r| r.err_l2_con)),
            m0_std: observed_order(&series(&|r| r.err_m_std.first().copied().unwrap_or(f64::NAN))),
            m0_con: observed_order(&series(&|r| r.err_m_con.first().copied().unwrap_or(f64::NAN))),
        }
    }
}

/// Negative least-squares slope of `ln(err)` against `ln(N)`. `None` with
/// fewer than two usable points.
pub fn observed_order(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|(n, e)| *n > 0.0 && *e > 0.0 && e.is_finite()).map(|(n, e)| (n.ln(), e.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(-sxy / sxx)
}

fn approximation_row(cfg: &ApproxConfig, family: &BasisFamily, rule: &QuadratureRule, modes: usize) -> Result<(ErrorRow, ConditioningRow)> {
    let fam = family.with_degree(modes - 1);
    let nodal = NodalBasis::from_family(&fam, rule)?;
    let f = nodal.sample(|x| cfg.test.eval(x))?;
    let powers: Vec<usize> = (0..=cfg.constraints).collect();
    let mm = nodal.moment_matrix(cfg.constraints);
    let co = ConstraintOperator::new(nodal.id(), &mm, nodal.norms(), &powers)?;

    let std = nodal.project_values(&f)?;
    let con = nodal.conservative_project_values(&f, &co)?;
    let targets = nodal.target_moments(&f, &powers)?;
    let moment_errors = |c: &SpectralCoeffs| -> Result<Vec<f64>> {
        let m = co.moments(&c.c)?;
        Ok(m.iter().zip(targets.as_slice()).map(|(a, b)| (a - b).abs()).collect())
    };
    let row = ErrorRow {
        n: modes,
        err_l2_std: nodal.l2_distance(&std.c, &f)?,
        err_m_std: moment_errors(&std)?,
        err_l2_con: nodal.l2_distance(&con.c, &f)?,
        err_m_con: moment_errors(&con)?,
    };
    let cd = co.conditioning();
    Ok((row, ConditioningRow { n: modes, cond_m: cd.cond, spectral_radius_m_inv: cd.spectral_radius_inv }))
}

/// Standard and conservative approximation errors for each mode count.
pub fn run_approximation(cfg: &ApproxConfig) -> Result<ErrorTable> {
    let family = cfg.validate()?;
    let rule = gauss_rule(&family, cfg.quad_points)?;
    let rows: Vec<(ErrorRow, ConditioningRow)> =
        cfg.modes.par_iter().map(|&n| approximation_row(cfg, &family, &rule, n)).collect::<Result<_>>()?;
    let (rows, conditioning): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let order_fit = ErrorTable::fit(&rows);
    Ok(ErrorTable { q: cfg.constraints, rows, conditioning, order_fit })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Fp,
    Opinion,
    Callcenter,
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fp" => Ok(Model::Fp),
            "opinion" => Ok(Model::Opinion),
            "callcenter" => Ok(Model::Callcenter),
            other => Err(Error::InvalidParameter(format!("unknown model {other}"))),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Fp => "fp",
            Model::Opinion => "opinion",
            Model::Callcenter => "callcenter",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeConfig {
    pub model: Model,
    pub modes: Vec<usize>,
    pub dt: f64,
    pub t_final: f64,
    pub tf_accuracy: f64,
    pub asymmetric: bool,
    pub quad_points: usize,
    pub stride: usize,
    /// Mode count of the reference run for the short-time accuracy table.
    pub n_ref: usize,
    pub opinion_m: f64,
    pub opinion_lambda: f64,
    pub cc_lambda: f64,
    pub cc_gamma: f64,
    pub cc_v_l: f64,
}

impl PdeConfig {
    /// Defaults: dt = 1e-4, accuracy at t = 0.1 against 32 modes (24 for the
    /// opinion model), long runs to t = 5 (20 for the asymmetric FP datum).
    pub fn new(model: Model, modes: Vec<usize>, asymmetric: bool) -> Self {
        Self {
            model,
            modes,
            dt: DEFAULT_DT,
            t_final: if asymmetric { 20.0 } else { 5.0 },
            tf_accuracy: 0.1,
            asymmetric,
            quad_points: DEFAULT_POINTS,
            stride: DEFAULT_STRIDE,
            n_ref: if model == Model::Opinion { 24 } else { 32 },
            opinion_m: 0.0,
            opinion_lambda: 0.1,
            cc_lambda: 0.5,
            cc_gamma: 0.9,
            cc_v_l: 40.0,
        }
    }

    fn min_modes(&self) -> usize {
        match self.model {
            // four moment constraints need at least four functions
            Model::Fp => 4,
            Model::Opinion => 3,
            Model::Callcenter => 2,
        }
    }

    fn validate(&self) -> Result<()> {
        validate_modes(&self.modes, self.min_modes(), self.quad_points)?;
        validate_modes(&[self.n_ref], self.min_modes(), self.quad_points)?;
        if !(self.dt > 0.0) || !(self.t_final >= 0.0) || !(self.tf_accuracy >= 0.0) || self.stride == 0 {
            return Err(Error::InvalidParameter("need dt > 0, t_final >= 0, tf_accuracy >= 0, stride > 0".into()));
        }
        if self.asymmetric && self.model != Model::Fp {
            return Err(Error::InvalidParameter("--asymmetric applies to the fp model only".into()));
        }
        Ok(())
    }
}

/// Everything needed to evolve one model at one mode count.
pub struct ModelSetup {
    pub rule: QuadratureRule,
    pub nodal: NodalBasis,
    pub op_std: GalerkinOperator,
    pub op_con: GalerkinOperator,
    pub c0_std: SpectralCoeffs,
    pub c0_con: SpectralCoeffs,
    pub monitor: MonitorConfig,
    pub constraint: ConstraintOperator,
    pub parameters: BTreeMap<String, f64>,
}

fn model_setup(cfg: &PdeConfig, modes: usize) -> Result<ModelSetup> {
    match cfg.model {
        Model::Fp => fp_setup(cfg, modes),
        Model::Opinion => opinion_setup(cfg, modes),
        Model::Callcenter => callcenter_setup(cfg, modes),
    }
}

fn fp_setup(cfg: &PdeConfig, modes: usize) -> Result<ModelSetup> {
    let family = BasisFamily::hermite_fn(modes - 1);
    let rule = gauss_rule(&family, cfg.quad_points)?;
    let nodal = NodalBasis::from_family(&family, &rule)?;
    let init = if cfg.asymmetric { TestFunctionId::FpInitAsym } else { TestFunctionId::FpInitSym };
    let f0 = nodal.sample(|v| init.eval(v))?;
    let m = moments_of_values(&f0, &rule, 3)?;
    let macro0 = Observables::Macroscopic.from_moments(&m.0);
    let (rho, u, t) = (macro0[0], macro0[1], macro0[2]);

    let powers = [0, 1, 2, 3];
    let co = ConstraintOperator::new(nodal.id(), &nodal.moment_matrix(3), nodal.norms(), &powers)?;
    let op_std = fp_hermite_operator(modes - 1, u, t)?;
    let op_con = constrain(&op_std, &co, &powers)?;
    let steady = nodal.sample(|v| SteadyState::Maxwellian { rho, mu: u, t }.eval(v).unwrap_or(f64::NAN))?;
    let monitor = MonitorConfig::new(&nodal, Observables::Macroscopic, macro0, Some(steady))?;
    let parameters = BTreeMap::from([("rho0".to_string(), rho), ("mu0".to_string(), u), ("T0".to_string(), t)]);
    Ok(ModelSetup {
        c0_std: nodal.project_values(&f0)?,
        c0_con: nodal.conservative_project_values(&f0, &co)?,
        rule,
        nodal,
        op_std,
        op_con,
        monitor,
        constraint: co,
        parameters,
    })
}

fn opinion_setup(cfg: &PdeConfig, modes: usize) -> Result<ModelSetup> {
    let parent = BasisFamily::legendre(modes);
    let rule = gauss_rule(&parent, cfg.quad_points)?;
    let cb = composite_dirichlet(&parent, modes)?;
    let nodal = cb.nodal(&rule)?;
    let raw = nodal.sample(|v| TestFunctionId::OpinionInit.eval(v))?;
    let c0 = 1.0 / moments_of_values(&raw, &rule, 0)?.0[0];
    let g0: Vec<f64> = raw.iter().map(|v| c0 * v).collect();
    let m = moments_of_values(&g0, &rule, 2)?;

    let co = ConstraintOperator::new(nodal.id(), &nodal.moment_matrix(0), nodal.norms(), &[0])?;
    let op_std = opinion_operator(&cb, &rule, cfg.opinion_m, cfg.opinion_lambda)?;
    let op_con = constrain(&op_std, &co, &[0])?;
    let ss = SteadyState::opinion(cfg.opinion_m, cfg.opinion_lambda, 1.0)?;
    let steady = nodal.sample(|v| ss.eval(v).unwrap_or(f64::NAN))?;
    let monitor = MonitorConfig::new(&nodal, Observables::RawMoments, m.0.clone(), Some(steady))?;
    let parameters = BTreeMap::from([
        ("m".to_string(), cfg.opinion_m),
        ("lambda".to_string(), cfg.opinion_lambda),
        ("c0".to_string(), c0),
        ("gram_residual".to_string(), cb.gram_residual()),
    ]);
    Ok(ModelSetup {
        c0_std: nodal.project_values(&g0)?,
        c0_con: nodal.conservative_project_values(&g0, &co)?,
        rule,
        nodal,
        op_std,
        op_con,
        monitor,
        constraint: co,
        parameters,
    })
}

fn callcenter_setup(cfg: &PdeConfig, modes: usize) -> Result<ModelSetup> {
    let family = BasisFamily::laguerre_fn(modes - 1);
    let rule = gauss_rule(&family, cfg.quad_points)?;
    let nodal = NodalBasis::from_family(&family, &rule)?;
    let h0 = nodal.sample(|v| TestFunctionId::CallcenterInit.eval(v))?;
    let rho0 = moments_of_values(&h0, &rule, 0)?.0[0];
    // scale the equilibrium so its discrete mass equals that of h0
    let unit = SteadyState::callcenter(cfg.cc_lambda, cfg.cc_gamma, cfg.cc_v_l, 1.0)?;
    let unit_vals = nodal.sample(|v| unit.eval(v).unwrap_or(f64::NAN))?;
    let scale = rho0 / moments_of_values(&unit_vals, &rule, 0)?.0[0];
    let perturbation: Vec<f64> = h0.iter().zip(&unit_vals).map(|(h, e)| h - scale * e).collect();
    let m = moments_of_values(&perturbation, &rule, 2)?;

    let co = ConstraintOperator::new(nodal.id(), &nodal.moment_matrix(0), nodal.norms(), &[0])?;
    let op_std = callcenter_operator(&family, &rule, cfg.cc_lambda, cfg.cc_gamma, cfg.cc_v_l)?;
    let op_con = constrain(&op_std, &co, &[0])?;
    let monitor = MonitorConfig::new(&nodal, Observables::RawMoments, m.0.clone(), Some(vec![0.0; rule.len()]))?;
    let parameters = BTreeMap::from([
        ("lambda".to_string(), cfg.cc_lambda),
        ("gamma".to_string(), cfg.cc_gamma),
        ("v_L".to_string(), cfg.cc_v_l),
        ("rho0".to_string(), rho0),
        ("equilibrium_scale".to_string(), scale),
    ]);
    Ok(ModelSetup {
        c0_std: nodal.project_values(&perturbation)?,
        c0_con: nodal.conservative_project_values(&perturbation, &co)?,
        rule,
        nodal,
        op_std,
        op_con,
        monitor,
        constraint: co,
        parameters,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub dist_steady_std: f64,
    pub dist_steady_con: f64,
    pub drift_m0_std: f64,
    pub drift_m0_con: f64,
    pub drift_m1_std: f64,
    pub drift_m1_con: f64,
    pub drift_m2_std: f64,
    pub drift_m2_con: f64,
}

pub const TRAJECTORY_COLUMNS: [&str; 9] = [
    "t",
    "dist_steady_std",
    "dist_steady_con",
    "drift_m0_std",
    "drift_m0_con",
    "drift_m1_std",
    "drift_m1_con",
    "drift_m2_std",
    "drift_m2_con",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub rows: Vec<TrajectoryRow>,
}

fn merge_trajectories(std: &Trajectory, con: &Trajectory) -> Vec<TrajectoryRow> {
    std.times
        .iter()
        .zip(std.records.iter().zip(&con.records))
        .map(|(&t, (s, c))| TrajectoryRow {
            t,
            dist_steady_std: s.distance.unwrap_or(f64::NAN),
            dist_steady_con: c.distance.unwrap_or(f64::NAN),
            drift_m0_std: s.drifts[0],
            drift_m0_con: c.drifts[0],
            drift_m1_std: s.drifts[1],
            drift_m1_con: c.drifts[1],
            drift_m2_std: s.drifts[2],
            drift_m2_con: c.drifts[2],
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeReport {
    pub model: Model,
    pub asymmetric: bool,
    pub n_ref: usize,
    pub tf_accuracy: f64,
    pub t_final: f64,
    pub dt: f64,
    /// Model parameters derived for the reference run.
    pub parameters: BTreeMap<String, f64>,
    /// Errors at `tf_accuracy` against the same method run with `n_ref` modes.
    pub accuracy: ErrorTable,
    pub trajectories: Vec<TrajectoryReport>,
}

/// Samples and moments (0..=3) of both solutions at `tf_accuracy`.
struct ShortRun {
    std: Vec<f64>,
    con: Vec<f64>,
    m_std: Vec<f64>,
    m_con: Vec<f64>,
    conditioning: ConditioningRow,
}

fn short_run(cfg: &PdeConfig, modes: usize) -> Result<ShortRun> {
    let s = model_setup(cfg, modes)?;
    let end = |op: &GalerkinOperator, c0: &SpectralCoeffs| -> Result<Vec<f64>> {
        let tr = integrate(op, c0, cfg.tf_accuracy, cfg.dt, usize::MAX, None)?;
        s.nodal.synthesize(&tr.last().c)
    };
    let std = end(&s.op_std, &s.c0_std)?;
    let con = end(&s.op_con, &s.c0_con)?;
    let cd = s.constraint.conditioning();
    Ok(ShortRun {
        m_std: moments_of_values(&std, &s.rule, 3)?.0,
        m_con: moments_of_values(&con, &s.rule, 3)?.0,
        std,
        con,
        conditioning: ConditioningRow { n: modes, cond_m: cd.cond, spectral_radius_m_inv: cd.spectral_radius_inv },
    })
}

/// Evolves both solutions to `t_final` with monitors.
pub fn long_run(cfg: &PdeConfig, modes: usize) -> Result<TrajectoryReport> {
    let s = model_setup(cfg, modes)?;
    let std = integrate(&s.op_std, &s.c0_std, cfg.t_final, cfg.dt, cfg.stride, Some(&s.monitor))?;
    let con = integrate(&s.op_con, &s.c0_con, cfg.t_final, cfg.dt, cfg.stride, Some(&s.monitor))?;
    Ok(TrajectoryReport { n: modes, rows: merge_trajectories(&std, &con) })
}

/// Builds the model at `modes` (exposed for diagnostics and tests).
pub fn setup(cfg: &PdeConfig, modes: usize) -> Result<ModelSetup> {
    cfg.validate()?;
    model_setup(cfg, modes)
}

/// Short-time accuracy table against the reference run, plus long-time
/// trajectories for every mode count.
pub fn run_pde(cfg: &PdeConfig) -> Result<PdeReport> {
    cfg.validate()?;
    let diff = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect() };
    let reference = short_run(cfg, cfg.n_ref)?;
    let runs: Vec<ShortRun> = cfg.modes.par_iter().map(|&n| short_run(cfg, n)).collect::<Result<_>>()?;
    let nodal_ref = model_setup(cfg, cfg.n_ref)?;
    let mut rows = Vec::with_capacity(runs.len());
    let mut conditioning = Vec::with_capacity(runs.len());
    for r in &runs {
        rows.push(ErrorRow {
            n: r.conditioning.n,
            err_l2_std: nodal_ref.nodal.l2_between(&r.std, &reference.std)?,
            err_m_std: diff(&r.m_std, &reference.m_std),
            err_l2_con: nodal_ref.nodal.l2_between(&r.con, &reference.con)?,
            err_m_con: diff(&r.m_con, &reference.m_con),
        });
        conditioning.push(r.conditioning);
    }
    let order_fit = ErrorTable::fit(&rows);
    let accuracy = ErrorTable { q: 3, rows, conditioning, order_fit };
    let trajectories: Vec<TrajectoryReport> = cfg.modes.par_iter().map(|&n| long_run(cfg, n)).collect::<Result<_>>()?;
    Ok(PdeReport {
        model: cfg.model,
        asymmetric: cfg.asymmetric,
        n_ref: cfg.n_ref,
        tf_accuracy: cfg.tf_accuracy,
        t_final: cfg.t_final,
        dt: cfg.dt,
        parameters: nodal_ref.parameters,
        accuracy,
        trajectories,
    })
}

/// Domain a test function lives on.
pub fn test_domain(id: TestFunctionId) -> Domain {
    match id {
        TestFunctionId::BoundedOsc | TestFunctionId::OpinionInit => Domain::Bounded { a: -1.0, b: 1.0 },
        TestFunctionId::HermiteBimodal | TestFunctionId::FpInitSym | TestFunctionId::FpInitAsym => Domain::RealLine,
        TestFunctionId::LaguerrePoly | TestFunctionId::Lognormal | TestFunctionId::CallcenterInit => Domain::HalfLine,
    }
}
