//! Gauss rules from the Jacobi matrix of each family's recurrence.
//!
//! Nodes are eigenvalues of the symmetric tridiagonal matrix, polished by
//! Newton steps on the orthonormal recurrence. Weights use the Christoffel
//! form `1 / sum_k p_k(x_i)^2`, which keeps full relative accuracy in the
//! far tails of the Hermite and Laguerre rules where eigenvector weights do not.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::basis::BasisFamily;
use crate::error::{Error, Result};

pub const DEFAULT_POINTS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrationMode {
    /// `sum w_i f(x_i)`, approximating `∫ f w`.
    AgainstWeight,
    /// `sum w_i f(x_i) / w(x_i)`, approximating `∫ f`.
    Plain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    plain_weights: Vec<f64>,
    family: BasisFamily,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `w_i / w(x_i)`.
    pub fn plain_weights(&self) -> &[f64] {
        &self.plain_weights
    }

    pub fn family(&self) -> &BasisFamily {
        &self.family
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn mode_weights(&self, mode: IntegrationMode) -> &[f64] {
        match mode {
            IntegrationMode::AgainstWeight => &self.weights,
            IntegrationMode::Plain => &self.plain_weights,
        }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, mode: IntegrationMode) -> Result<f64> {
        let mut acc = 0.0;
        for (i, (&x, &w)) in self.nodes.iter().zip(self.mode_weights(mode)).enumerate() {
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::NonFinite { what: "integrand", index: i });
            }
            acc += w * v;
        }
        Ok(acc)
    }

    /// Same as `integrate` for integrand values already sampled at the nodes.
    pub fn sum_values(&self, values: &[f64], mode: IntegrationMode) -> Result<f64> {
        if values.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: values.len() });
        }
        let mut acc = 0.0;
        for (i, (&v, &w)) in values.iter().zip(self.mode_weights(mode)).enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { what: "integrand", index: i });
            }
            acc += w * v;
        }
        Ok(acc)
    }
}

/// Symmetric recurrence `x p_{k-1} = beta_k p_k + alpha_{k-1} p_{k-1} + beta_{k-1} p_{k-2}`
/// for the orthonormal polynomials, k = 1..=n.
fn jacobi_matrix_entries(family: &BasisFamily, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n + 1);
    beta.push(0.0);
    for k in 1..=n {
        let (a, b, _) = family.term(k)?;
        if a == 0.0 {
            return Err(Error::InvalidParameter(format!("recurrence coefficient a_{k} vanishes")));
        }
        alpha.push(-b / a);
        beta.push(family.norm_ratio(k)?.sqrt() / a.abs());
    }
    Ok((alpha, beta))
}

/// Orthonormal sweep at x: `(p_n, p_n')` up to a common scale and
/// `ln sum_{k<n} p_k^2`.
fn orthonormal_sweep(x: f64, h0: f64, alpha: &[f64], beta: &[f64]) -> (f64, f64, f64) {
    const BIG: f64 = 1e150;
    let n = alpha.len();
    let mut p_prev = 0.0;
    let mut d_prev = 0.0;
    let mut p = 1.0 / h0.sqrt();
    let mut d = 0.0;
    let mut sum = 0.0;
    let mut log_scale = 0.0;
    for k in 1..=n {
        sum += p * p;
        let p_next = ((x - alpha[k - 1]) * p - beta[k - 1] * p_prev) / beta[k];
        let d_next = (p + (x - alpha[k - 1]) * d - beta[k - 1] * d_prev) / beta[k];
        p_prev = p;
        d_prev = d;
        p = p_next;
        d = d_next;
        if p.abs() > BIG {
            p_prev /= BIG;
            d_prev /= BIG;
            p /= BIG;
            d /= BIG;
            sum /= BIG * BIG;
            log_scale += 2.0 * BIG.ln();
        }
    }
    (p, d, sum.ln() + log_scale)
}

pub fn gauss_rule(family: &BasisFamily, n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::InvalidParameter("quadrature needs at least one point".into()));
    }
    let h0 = family.norm_sq0()?;
    let (alpha, beta) = jacobi_matrix_entries(family, n)?;
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        jm[(i, i)] = alpha[i];
        if i + 1 < n {
            jm[(i, i + 1)] = beta[i + 1];
            jm[(i + 1, i)] = beta[i + 1];
        }
    }
    let eig = SymmetricEigen::try_new(jm, f64::EPSILON, 10_000).ok_or(Error::EigenNonConvergence { n })?;
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.total_cmp(b));

    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..4 {
            let (p, d, _) = orthonormal_sweep(*x, h0, &alpha, &beta);
            if d == 0.0 || !d.is_finite() {
                break;
            }
            let dx = p / d;
            *x -= dx;
            if dx.abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
                break;
            }
        }
        let (_, _, log_sum) = orthonormal_sweep(*x, h0, &alpha, &beta);
        weights.push((-log_sum).exp());
    }

    let domain = family.domain();
    if nodes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::EigenNonConvergence { n });
    }
    let mut plain_weights = Vec::with_capacity(n);
    for (&x, &w) in nodes.iter().zip(&weights) {
        if !domain.contains_interior(x) || !(w > 0.0) {
            return Err(Error::EigenNonConvergence { n });
        }
        plain_weights.push(w / family.weight(x)?);
    }
    Ok(QuadratureRule { nodes, weights, plain_weights, family: family.clone() })
}

pub fn integrate<F: Fn(f64) -> f64>(rule: &QuadratureRule, f: F, mode: IntegrationMode) -> Result<f64> {
    rule.integrate(f, mode)
}
