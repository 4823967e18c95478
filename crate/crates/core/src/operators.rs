//! Galerkin matrices for the three model operators, their moment-constrained
//! variants, and the models' steady states.
//!
//! * Fokker-Planck: `L f = d/dv((v - mu) f + T df/dv)` in Hermite functions.
//! * Opinion: `L g = (lambda/2) d²/dv²((1 - v²) g) + d/dv((v - m) g)` in the
//!   composite Dirichlet basis.
//! * Call center: `L h = (lambda/2) d²/dv²(v² h) + (gamma/2) d/dv(v ln(v/v_L) h)`
//!   in Laguerre functions.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use crate::basis::{BasisFamily, FamilyKind};
use crate::dirichlet_basis::CompositeBasis;
use crate::error::{Error, Result};
use crate::projection::{BasisId, ConstraintOperator};
use crate::quadrature::QuadratureRule;

#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinOperator {
    matrix: DMatrix<f64>,
    basis: BasisId,
    constrained: Option<Vec<usize>>,
}

impl GalerkinOperator {
    pub fn new(matrix: DMatrix<f64>, basis: BasisId) -> Self {
        Self { matrix, basis, constrained: None }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn basis(&self) -> BasisId {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Powers whose moments the operator annihilates, if constrained.
    pub fn constrained_powers(&self) -> Option<&[usize]> {
        self.constrained.as_deref()
    }

    pub fn apply(&self, c: &[f64]) -> Result<Vec<f64>> {
        if c.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: c.len() });
        }
        Ok((&self.matrix * DVector::from_column_slice(c)).iter().copied().collect())
    }
}

/// Closed-form pentadiagonal Hermite-function matrix for degrees 0..=n.
///
/// Image of one member:
/// `L psi_k = k(k-1)(1+T) psi_{k-2} - mu k psi_{k-1} + (-kT - (T-1)/2) psi_k
///           + (mu/2) psi_{k+1} + ((T-1)/4) psi_{k+2}`,
/// with the components beyond degree n dropped.
pub fn fp_hermite_operator(n: usize, mu: f64, t: f64) -> Result<GalerkinOperator> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("Fokker-Planck operator needs N >= 2, got {n}")));
    }
    if !(t > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!("Fokker-Planck needs T > 0 and finite mu, got T = {t}, mu = {mu}")));
    }
    let mut a = DMatrix::<f64>::zeros(n + 1, n + 1);
    for k in 0..=n {
        let kf = k as f64;
        if k >= 2 {
            a[(k - 2, k)] = kf * (kf - 1.0) * (1.0 + t);
        }
        if k >= 1 {
            a[(k - 1, k)] = -mu * kf;
        }
        a[(k, k)] = -kf * t - (t - 1.0) / 2.0;
        if k + 1 <= n {
            a[(k + 1, k)] = mu / 2.0;
        }
        if k + 2 <= n {
            a[(k + 2, k)] = (t - 1.0) / 4.0;
        }
    }
    Ok(GalerkinOperator::new(a, BasisId::Family(FamilyKind::HermiteFn)))
}

fn check_opinion_params(m: f64, lambda: f64) -> Result<()> {
    if !(m.abs() < 1.0) || !(lambda > 0.0 && lambda < 1.0 + m.abs()) {
        return Err(Error::InvalidParameter(format!(
            "opinion model needs |m| < 1 and 0 < lambda < 1 + |m|, got m = {m}, lambda = {lambda}"
        )));
    }
    Ok(())
}

/// Opinion operator in the orthonormal composite basis, assembled with the
/// parent's Gauss rule from the strong form
/// `(lambda/2)[(1-v²) g'' - 4v g' - 2g] + (v-m) g' + g`.
pub fn opinion_operator(cb: &CompositeBasis, rule: &QuadratureRule, m: f64, lambda: f64) -> Result<GalerkinOperator> {
    check_opinion_params(m, lambda)?;
    if rule.family().kind() != cb.parent().kind() {
        return Err(Error::InvalidParameter("opinion operator needs a rule for the composite parent".into()));
    }
    let dim = cb.dim();
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    for (&v, &w) in rule.nodes().iter().zip(rule.weights()) {
        let (z, z1, z2) = cb.eval_derivs(v)?;
        for k in 0..dim {
            let lz = 0.5 * lambda * ((1.0 - v * v) * z2[k] - 4.0 * v * z1[k] - 2.0 * z[k]) + (v - m) * z1[k] + z[k];
            let wl = w * lz;
            for j in 0..dim {
                a[(j, k)] += wl * z[j];
            }
        }
    }
    Ok(GalerkinOperator::new(a, cb.id()))
}

fn check_callcenter_params(lambda: f64, gamma: f64, v_l: f64) -> Result<()> {
    if !(lambda > 0.0) || !(gamma > 0.0 && gamma < 1.0) || !(v_l > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "call-center model needs lambda > 0, 0 < gamma < 1, v_L > 0, got {lambda}, {gamma}, {v_l}"
        )));
    }
    Ok(())
}

/// Call-center operator in Laguerre functions of degree 0..=max_degree,
/// assembled by plain quadrature from the strong form
/// `(lambda/2)[v² h'' + 4v h' + 2h] + (gamma/2)[(ln(v/v_L) + 1) h + v ln(v/v_L) h']`.
pub fn callcenter_operator(
    family: &BasisFamily,
    rule: &QuadratureRule,
    lambda: f64,
    gamma: f64,
    v_l: f64,
) -> Result<GalerkinOperator> {
    check_callcenter_params(lambda, gamma, v_l)?;
    if family.kind() != FamilyKind::LaguerreFn || rule.family().kind() != FamilyKind::LaguerreFn {
        return Err(Error::InvalidParameter("call-center operator is built on Laguerre functions".into()));
    }
    let n = family.max_degree();
    let norms = family.norms_sq_upto(n)?;
    let mut a = DMatrix::<f64>::zeros(n + 1, n + 1);
    for (&v, &pw) in rule.nodes().iter().zip(rule.plain_weights()) {
        let d = family.eval_derivs_upto(v, n)?;
        let ln = (v / v_l).ln();
        for k in 0..=n {
            let lh = 0.5 * lambda * (v * v * d.d2[k] + 4.0 * v * d.d1[k] + 2.0 * d.values[k])
                + 0.5 * gamma * ((ln + 1.0) * d.values[k] + v * ln * d.d1[k]);
            let wl = pw * lh;
            for j in 0..=n {
                a[(j, k)] += wl * d.values[j] / norms[j];
            }
        }
    }
    Ok(GalerkinOperator::new(a, BasisId::Family(FamilyKind::LaguerreFn)))
}

/// `A^c = (I - C_rows Phi) A` restricted to `q_list`, so every image has zero
/// moments for the listed powers.
pub fn constrain(op: &GalerkinOperator, co: &ConstraintOperator, q_list: &[usize]) -> Result<GalerkinOperator> {
    if op.basis() != co.basis() {
        return Err(Error::BasisMismatch { expected: op.basis().to_string(), found: co.basis().to_string() });
    }
    if op.dim() != co.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), found: co.dim() });
    }
    let co = co.restrict(q_list)?;
    let moments_of_image = co.moment_rows() * &op.matrix;
    let matrix = &op.matrix - co.c_rows() * moments_of_image;
    Ok(GalerkinOperator { matrix, basis: op.basis, constrained: Some(q_list.to_vec()) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SteadyState {
    /// `rho / sqrt(2 pi T) exp(-(v - mu)² / (2T))`.
    Maxwellian { rho: f64, mu: f64, t: f64 },
    /// `c (1+v)^((1+m)/lambda - 1) (1-v)^((1-m)/lambda - 1)` with total `mass`.
    Opinion { m: f64, lambda: f64, mass: f64 },
    /// `mass / (sqrt(2 pi sigma) v) exp(-(ln v - mu_ln)² / (2 sigma))`.
    Lognormal { sigma: f64, mu_ln: f64, mass: f64 },
}

impl SteadyState {
    pub fn maxwellian(rho: f64, mu: f64, t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!("Maxwellian needs T > 0, got {t}")));
        }
        Ok(SteadyState::Maxwellian { rho, mu, t })
    }

    pub fn opinion(m: f64, lambda: f64, mass: f64) -> Result<Self> {
        check_opinion_params(m, lambda)?;
        Ok(SteadyState::Opinion { m, lambda, mass })
    }

    /// Equilibrium of the call-center model: `sigma = lambda/gamma`,
    /// `mu_ln = ln(v_L) - sigma`.
    pub fn callcenter(lambda: f64, gamma: f64, v_l: f64, mass: f64) -> Result<Self> {
        check_callcenter_params(lambda, gamma, v_l)?;
        let sigma = lambda / gamma;
        Ok(SteadyState::Lognormal { sigma, mu_ln: v_l.ln() - sigma, mass })
    }

    pub fn with_mass(self, new_mass: f64) -> Self {
        match self {
            SteadyState::Maxwellian { mu, t, .. } => SteadyState::Maxwellian { rho: new_mass, mu, t },
            SteadyState::Opinion { m, lambda, .. } => SteadyState::Opinion { m, lambda, mass: new_mass },
            SteadyState::Lognormal { sigma, mu_ln, .. } => SteadyState::Lognormal { sigma, mu_ln, mass: new_mass },
        }
    }

    /// Opinion exponents `((1-m)/lambda - 1, (1+m)/lambda - 1)` on `(1-v, 1+v)`.
    pub fn opinion_exponents(m: f64, lambda: f64) -> (f64, f64) {
        ((1.0 - m) / lambda - 1.0, (1.0 + m) / lambda - 1.0)
    }

    pub fn eval(&self, v: f64) -> Result<f64> {
        match *self {
            SteadyState::Maxwellian { rho, mu, t } => {
                if !v.is_finite() {
                    return Err(Error::Domain { family: "maxwellian".into(), x: v });
                }
                Ok(rho / (2.0 * std::f64::consts::PI * t).sqrt() * (-(v - mu) * (v - mu) / (2.0 * t)).exp())
            }
            SteadyState::Opinion { m, lambda, mass } => {
                if !(-1.0..=1.0).contains(&v) {
                    return Err(Error::Domain { family: "opinion".into(), x: v });
                }
                let (a, b) = Self::opinion_exponents(m, lambda);
                // ∫ (1-v)^a (1+v)^b dv = 2^(a+b+1) B(a+1, b+1)
                let log_total = (a + b + 1.0) * std::f64::consts::LN_2 + ln_beta(a + 1.0, b + 1.0);
                Ok(mass * (-log_total).exp() * (1.0 - v).powf(a) * (1.0 + v).powf(b))
            }
            SteadyState::Lognormal { sigma, mu_ln, mass } => {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::Domain { family: "lognormal".into(), x: v });
                }
                if v == 0.0 {
                    return Ok(0.0);
                }
                let z = v.ln() - mu_ln;
                Ok(mass / ((2.0 * std::f64::consts::PI * sigma).sqrt() * v) * (-z * z / (2.0 * sigma)).exp())
            }
        }
    }
}

pub fn steady_state_eval(ss: &SteadyState, xs: &[f64]) -> Result<Vec<f64>> {
    xs.iter().map(|&x| ss.eval(x)).collect()
}
