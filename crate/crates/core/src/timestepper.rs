//! Classical fixed-step RK4 for `dc/dt = A c`, with periodic monitors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::GalerkinOperator;
use crate::projection::{NodalBasis, SpectralCoeffs};

pub const DEFAULT_DT: f64 = 1e-4;
pub const DEFAULT_STRIDE: usize = 100;

struct Rk4 {
    k1: DVector<f64>,
    k2: DVector<f64>,
    k3: DVector<f64>,
    k4: DVector<f64>,
    tmp: DVector<f64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        let z = || DVector::zeros(n);
        Self { k1: z(), k2: z(), k3: z(), k4: z(), tmp: z() }
    }

    fn step(&mut self, a: &DMatrix<f64>, c: &mut DVector<f64>, dt: f64) {
        self.k1.gemv(1.0, a, c, 0.0);
        self.tmp.copy_from(c);
        self.tmp.axpy(0.5 * dt, &self.k1, 1.0);
        self.k2.gemv(1.0, a, &self.tmp, 0.0);
        self.tmp.copy_from(c);
        self.tmp.axpy(0.5 * dt, &self.k2, 1.0);
        self.k3.gemv(1.0, a, &self.tmp, 0.0);
        self.tmp.copy_from(c);
        self.tmp.axpy(dt, &self.k3, 1.0);
        self.k4.gemv(1.0, a, &self.tmp, 0.0);
        c.axpy(dt / 6.0, &self.k1, 1.0);
        c.axpy(dt / 3.0, &self.k2, 1.0);
        c.axpy(dt / 3.0, &self.k3, 1.0);
        c.axpy(dt / 6.0, &self.k4, 1.0);
    }
}

pub fn rk4_step(op: &GalerkinOperator, c: &SpectralCoeffs, dt: f64) -> Result<SpectralCoeffs> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    if c.len() != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), found: c.len() });
    }
    let mut v = DVector::from_column_slice(&c.c);
    Rk4::new(op.dim()).step(op.matrix(), &mut v, dt);
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::BlowUp { step: 1 });
    }
    Ok(SpectralCoeffs::new(v.iter().copied().collect(), c.basis))
}

/// Which quantities the drift monitors track, computed from the raw moments
/// `m_0, m_1, m_2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observables {
    /// `m_0, m_1, m_2` themselves.
    RawMoments,
    /// Mass, mean velocity and temperature: `rho = m_0`, `u = m_1/rho`,
    /// `T = m_2/rho - u^2`.
    Macroscopic,
}

impl Observables {
    pub fn from_moments(&self, m: &[f64]) -> Vec<f64> {
        match self {
            Observables::RawMoments => m.to_vec(),
            Observables::Macroscopic => {
                let rho = m[0];
                let u = m[1] / rho;
                vec![rho, u, m[2] / rho - u * u]
            }
        }
    }
}

/// What to measure at each monitored time.
#[derive(Debug, Clone)]
pub struct MonitorConfig {
    nodal: NodalBasis,
    moment_rows: DMatrix<f64>,
    observables: Observables,
    reference: Vec<f64>,
    steady: Option<Vec<f64>>,
}

impl MonitorConfig {
    /// `reference` holds the observables the drifts are measured against;
    /// `steady` holds samples of the steady state at the nodes of `nodal`.
    pub fn new(
        nodal: &NodalBasis,
        observables: Observables,
        reference: Vec<f64>,
        steady: Option<Vec<f64>>,
    ) -> Result<Self> {
        if reference.len() != 3 {
            return Err(Error::DimensionMismatch { expected: 3, found: reference.len() });
        }
        if let Some(s) = &steady {
            if s.len() != nodal.nodes().len() {
                return Err(Error::DimensionMismatch { expected: nodal.nodes().len(), found: s.len() });
            }
        }
        Ok(Self {
            moment_rows: nodal.moment_matrix(2).mu,
            nodal: nodal.clone(),
            observables,
            reference,
            steady,
        })
    }

    fn record(&self, c: &[f64]) -> Result<MonitorRecord> {
        let m: Vec<f64> = (&self.moment_rows * DVector::from_column_slice(c)).iter().copied().collect();
        let obs = self.observables.from_moments(&m);
        let drifts = obs.iter().zip(&self.reference).map(|(a, b)| (a - b).abs()).collect();
        let distance = match &self.steady {
            Some(s) => Some(self.nodal.l2_distance(c, s)?),
            None => None,
        };
        Ok(MonitorRecord { observables: obs, drifts, distance })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorRecord {
    pub observables: Vec<f64>,
    pub drifts: Vec<f64>,
    /// Plain L² distance to the steady state.
    pub distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<SpectralCoeffs>,
    pub records: Vec<MonitorRecord>,
}

impl Trajectory {
    pub fn last(&self) -> &SpectralCoeffs {
        self.snapshots.last().expect("trajectory always holds the initial state")
    }
}

/// Integrates to `t_final` with `round(t_final/dt)` RK4 steps, recording a
/// snapshot (and monitors, if configured) every `stride` steps and at the end.
pub fn integrate(
    op: &GalerkinOperator,
    c0: &SpectralCoeffs,
    t_final: f64,
    dt: f64,
    stride: usize,
    monitors: Option<&MonitorConfig>,
) -> Result<Trajectory> {
    if !(dt > 0.0) || !(t_final >= 0.0) || stride == 0 {
        return Err(Error::InvalidParameter(format!(
            "need dt > 0, t_final >= 0, stride > 0; got dt = {dt}, t_final = {t_final}, stride = {stride}"
        )));
    }
    if c0.len() != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), found: c0.len() });
    }
    if c0.basis != op.basis() {
        return Err(Error::BasisMismatch { expected: op.basis().to_string(), found: c0.basis.to_string() });
    }
    let steps = (t_final / dt).round() as usize;
    let mut traj = Trajectory { times: Vec::new(), snapshots: Vec::new(), records: Vec::new() };
    let push = |traj: &mut Trajectory, step: usize, c: &DVector<f64>| -> Result<()> {
        let cs: Vec<f64> = c.iter().copied().collect();
        if let Some(mc) = monitors {
            traj.records.push(mc.record(&cs)?);
        }
        traj.times.push(step as f64 * dt);
        traj.snapshots.push(SpectralCoeffs::new(cs, c0.basis));
        Ok(())
    };

    let mut c = DVector::from_column_slice(&c0.c);
    let mut rk = Rk4::new(op.dim());
    push(&mut traj, 0, &c)?;
    for step in 1..=steps {
        rk.step(op.matrix(), &mut c, dt);
        if c.iter().any(|x| !x.is_finite()) {
            return Err(Error::BlowUp { step });
        }
        if step % stride == 0 || step == steps {
            push(&mut traj, step, &c)?;
        }
    }
    Ok(traj)
}
