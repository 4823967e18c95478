//! Standard truncation and the moment-preserving (conservative) projection.
//!
//! The conservative coefficients are the closest element of the truncated
//! space, in the weighted norm, whose unweighted moments `∫ f x^q` match a set
//! of targets. With `Phi` the `(Q+1) x (N+1)` moment rows and `h` the norms,
//! `M = Phi diag(1/h) Phi^T` and the correction is
//! `c + diag(1/h) Phi^T M^{-1} (targets - Phi c)`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::basis::{BasisFamily, FamilyKind};
use crate::error::{Error, Result};
use crate::moments::{moments_of_values, MomentMatrix, MomentVector};
use crate::quadrature::{gauss_rule, QuadratureRule, DEFAULT_POINTS};

/// Identifies the basis a coefficient vector or operator is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BasisId {
    Family(FamilyKind),
    /// Orthonormalized Dirichlet combinations of the given parent family.
    Composite(FamilyKind),
}

impl std::fmt::Display for BasisId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BasisId::Family(k) => write!(f, "{k}"),
            BasisId::Composite(k) => write!(f, "dirichlet({k})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCoeffs {
    pub c: Vec<f64>,
    pub basis: BasisId,
}

impl SpectralCoeffs {
    pub fn new(c: Vec<f64>, basis: BasisId) -> Self {
        Self { c, basis }
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }
}

/// A basis sampled at the nodes of a quadrature rule: everything needed to
/// project, synthesize, take moments and measure plain L² distances.
#[derive(Debug, Clone)]
pub struct NodalBasis {
    id: BasisId,
    nodes: Vec<f64>,
    /// `values[(i, k)] = P_k(x_i)`
    values: DMatrix<f64>,
    /// Weights turning `sum_i f(x_i) P_k(x_i)` into `<f, phi_k>_w`.
    proj_weights: Vec<f64>,
    plain_weights: Vec<f64>,
    norms: Vec<f64>,
}

impl NodalBasis {
    /// Samples members 0..=max_degree of `family` at the nodes of `rule`.
    /// The rule must be a Gauss rule for the same family.
    pub fn from_family(family: &BasisFamily, rule: &QuadratureRule) -> Result<Self> {
        if rule.family().kind() != family.kind() {
            return Err(Error::InvalidParameter(format!(
                "projection onto {} needs its own Gauss rule, got one for {}",
                family.kind(),
                rule.family().kind()
            )));
        }
        let n = family.max_degree();
        let mut values = DMatrix::zeros(rule.len(), n + 1);
        let mut proj_weights = Vec::with_capacity(rule.len());
        for (i, (&x, &w)) in rule.nodes().iter().zip(rule.weights()).enumerate() {
            let v = family.eval_upto(x, n)?;
            for (k, vk) in v.into_iter().enumerate() {
                values[(i, k)] = vk;
            }
            // weighted members already carry sqrt(w): <f, P_k> = sum w_i f P_k / s^2
            let s = family.member_factor(x);
            proj_weights.push(w / (s * s));
        }
        Ok(Self {
            id: BasisId::Family(family.kind()),
            nodes: rule.nodes().to_vec(),
            values,
            proj_weights,
            plain_weights: rule.plain_weights().to_vec(),
            norms: family.norms_sq_upto(n)?,
        })
    }

    pub(crate) fn from_parts(
        id: BasisId,
        rule: &QuadratureRule,
        values: DMatrix<f64>,
        proj_weights: Vec<f64>,
        norms: Vec<f64>,
    ) -> Self {
        Self {
            id,
            nodes: rule.nodes().to_vec(),
            values,
            proj_weights,
            plain_weights: rule.plain_weights().to_vec(),
            norms,
        }
    }

    pub fn id(&self) -> BasisId {
        self.id
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Weights turning nodal sums into `<f, phi_k>_w`.
    pub fn proj_weights(&self) -> &[f64] {
        &self.proj_weights
    }

    pub fn plain_weights(&self) -> &[f64] {
        &self.plain_weights
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Result<Vec<f64>> {
        let v: Vec<f64> = self.nodes.iter().map(|&x| f(x)).collect();
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "function values", index: i });
        }
        Ok(v)
    }

    /// Standard projection of f given its samples at the nodes.
    pub fn project_values(&self, f: &[f64]) -> Result<SpectralCoeffs> {
        if f.len() != self.nodes.len() {
            return Err(Error::DimensionMismatch { expected: self.nodes.len(), found: f.len() });
        }
        if let Some(i) = f.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "function values", index: i });
        }
        let mut c = vec![0.0; self.dim()];
        for (i, (&fi, &w)) in f.iter().zip(&self.proj_weights).enumerate() {
            let wf = w * fi;
            for (k, ck) in c.iter_mut().enumerate() {
                *ck += wf * self.values[(i, k)];
            }
        }
        for (ck, h) in c.iter_mut().zip(&self.norms) {
            *ck /= h;
        }
        Ok(SpectralCoeffs::new(c, self.id))
    }

    pub fn project<F: Fn(f64) -> f64>(&self, f: F) -> Result<SpectralCoeffs> {
        self.project_values(&self.sample(f)?)
    }

    /// Conservative projection: standard coefficients corrected so the discrete
    /// moments listed in `co` match those of f under the same rule.
    pub fn conservative_project_values(&self, f: &[f64], co: &ConstraintOperator) -> Result<SpectralCoeffs> {
        let base = self.project_values(f)?;
        let targets = self.target_moments(f, co.powers())?;
        correct_given_targets(&base, &targets, co)
    }

    pub fn conservative_project<F: Fn(f64) -> f64>(&self, f: F, co: &ConstraintOperator) -> Result<SpectralCoeffs> {
        self.conservative_project_values(&self.sample(f)?, co)
    }

    /// `∫ f x^q` for each listed power, by plain quadrature on the nodes.
    pub fn target_moments(&self, f: &[f64], powers: &[usize]) -> Result<MomentVector> {
        let q_max = powers.iter().copied().max().unwrap_or(0);
        let all = self.plain_moments(f, q_max)?;
        Ok(MomentVector(powers.iter().map(|&q| all[q]).collect()))
    }

    fn plain_moments(&self, f: &[f64], q_max: usize) -> Result<Vec<f64>> {
        if f.len() != self.nodes.len() {
            return Err(Error::DimensionMismatch { expected: self.nodes.len(), found: f.len() });
        }
        let mut m = vec![0.0; q_max + 1];
        for (i, ((&x, &w), &v)) in self.nodes.iter().zip(&self.plain_weights).zip(f).enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { what: "function values", index: i });
            }
            let mut xq = w * v;
            for mq in m.iter_mut() {
                *mq += xq;
                xq *= x;
            }
        }
        Ok(m)
    }

    /// Moment matrix of the sampled members, `mu[q][k] = sum_i pw_i x_i^q P_k(x_i)`.
    pub fn moment_matrix(&self, q_max: usize) -> MomentMatrix {
        let mut mu = DMatrix::zeros(q_max + 1, self.dim());
        for (i, (&x, &w)) in self.nodes.iter().zip(&self.plain_weights).enumerate() {
            let mut xq = w;
            for q in 0..=q_max {
                for k in 0..self.dim() {
                    mu[(q, k)] += xq * self.values[(i, k)];
                }
                xq *= x;
            }
        }
        MomentMatrix { mu }
    }

    /// Values of `sum_k c_k P_k` at the nodes.
    pub fn synthesize(&self, c: &[f64]) -> Result<Vec<f64>> {
        if c.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: c.len() });
        }
        let v = &self.values * DVector::from_column_slice(c);
        Ok(v.iter().copied().collect())
    }

    /// Plain L² distance `(∫ (f_N - g)^2)^{1/2}` between an expansion and samples of g.
    pub fn l2_distance(&self, c: &[f64], g: &[f64]) -> Result<f64> {
        let fc = self.synthesize(c)?;
        plain_l2(&fc, g, &self.plain_weights)
    }

    /// Plain L² norm of the difference of two sample vectors.
    pub fn l2_between(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        plain_l2(f, g, &self.plain_weights)
    }
}

fn plain_l2(f: &[f64], g: &[f64], pw: &[f64]) -> Result<f64> {
    if f.len() != g.len() || f.len() != pw.len() {
        return Err(Error::DimensionMismatch { expected: pw.len(), found: f.len().min(g.len()) });
    }
    let s: f64 = f.iter().zip(g).zip(pw).map(|((a, b), w)| w * (a - b) * (a - b)).sum();
    Ok(s.max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conditioning {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `lambda_max / lambda_min`; infinite when M is not positive definite.
    pub cond: f64,
    /// `rho(M^{-1}) = 1 / lambda_min`; infinite when M is not positive definite.
    pub spectral_radius_inv: f64,
}

fn gram_matrix(phi: &DMatrix<f64>, norms: &[f64]) -> DMatrix<f64> {
    let scaled = DMatrix::from_fn(phi.nrows(), phi.ncols(), |r, k| phi[(r, k)] / norms[k]);
    let mut m = &scaled * phi.transpose();
    // exact symmetry so that the eigen and Cholesky paths agree
    for i in 0..m.nrows() {
        for j in 0..i {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    m
}

fn conditioning_of(m: &DMatrix<f64>) -> Conditioning {
    let eig = SymmetricEigen::new(m.clone());
    let lambda_min = eig.eigenvalues.min();
    let lambda_max = eig.eigenvalues.max();
    let (cond, rho) = if lambda_min > 0.0 {
        (lambda_max / lambda_min, 1.0 / lambda_min)
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Conditioning { lambda_min, lambda_max, cond, spectral_radius_inv: rho }
}

/// Conditioning of M for the given moment rows without factorizing it, so it
/// is defined even when M is singular.
pub fn conditioning(mm: &MomentMatrix, norms: &[f64], powers: &[usize]) -> Result<Conditioning> {
    if norms.len() != mm.mu.ncols() {
        return Err(Error::DimensionMismatch { expected: mm.mu.ncols(), found: norms.len() });
    }
    let phi = mm.rows(powers)?;
    Ok(conditioning_of(&gram_matrix(&phi, norms)))
}

#[derive(Debug, Clone)]
pub struct ConstraintOperator {
    basis: BasisId,
    powers: Vec<usize>,
    phi: DMatrix<f64>,
    norms: Vec<f64>,
    m: DMatrix<f64>,
    /// `(N+1) x |powers|`; row k is `phi_k^T M^{-1} / h_k`.
    c_rows: DMatrix<f64>,
    conditioning: Conditioning,
}

impl ConstraintOperator {
    /// Builds M from the moment rows for `powers` and factorizes it.
    pub fn new(basis: BasisId, mm: &MomentMatrix, norms: &[f64], powers: &[usize]) -> Result<Self> {
        if norms.len() != mm.mu.ncols() {
            return Err(Error::DimensionMismatch { expected: mm.mu.ncols(), found: norms.len() });
        }
        if powers.is_empty() {
            return Err(Error::InvalidParameter("no moments to constrain".into()));
        }
        let phi = mm.rows(powers)?;
        Self::from_rows(basis, phi, norms.to_vec(), powers.to_vec())
    }

    fn from_rows(basis: BasisId, phi: DMatrix<f64>, norms: Vec<f64>, powers: Vec<usize>) -> Result<Self> {
        let q = powers.iter().copied().max().unwrap_or(0);
        let n = phi.ncols() - 1;
        let m = gram_matrix(&phi, &norms);
        let conditioning = conditioning_of(&m);
        let rcond = if conditioning.lambda_max > 0.0 {
            conditioning.lambda_min / conditioning.lambda_max
        } else {
            0.0
        };
        let degenerate = Error::ConstraintDegeneracy { q, n, rcond };
        if !(rcond > 16.0 * powers.len() as f64 * f64::EPSILON) {
            return Err(degenerate);
        }
        let chol = Cholesky::new(m.clone()).ok_or(degenerate)?;
        let scaled = DMatrix::from_fn(phi.nrows(), phi.ncols(), |r, k| phi[(r, k)] / norms[k]);
        let c_rows = chol.solve(&scaled).transpose();
        Ok(Self { basis, powers, phi, norms, m, c_rows, conditioning })
    }

    /// Same basis, constraining only a subset of the current powers.
    pub fn restrict(&self, powers: &[usize]) -> Result<Self> {
        if powers == self.powers.as_slice() {
            return Ok(self.clone());
        }
        let mut rows = Vec::with_capacity(powers.len());
        for q in powers {
            let r = self.powers.iter().position(|p| p == q).ok_or_else(|| {
                Error::InvalidParameter(format!("moment {q} is not part of this constraint set"))
            })?;
            rows.push(r);
        }
        let phi = self.phi.select_rows(rows.iter());
        Self::from_rows(self.basis, phi, self.norms.clone(), powers.to_vec())
    }

    pub fn basis(&self) -> BasisId {
        self.basis
    }

    pub fn powers(&self) -> &[usize] {
        &self.powers
    }

    pub fn dim(&self) -> usize {
        self.phi.ncols()
    }

    pub fn moment_rows(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn m(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn c_rows(&self) -> &DMatrix<f64> {
        &self.c_rows
    }

    pub fn conditioning(&self) -> Conditioning {
        self.conditioning
    }

    /// Constrained moments of a coefficient vector.
    pub fn moments(&self, c: &[f64]) -> Result<Vec<f64>> {
        self.check_len(c.len())?;
        Ok((&self.phi * DVector::from_column_slice(c)).iter().copied().collect())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: len });
        }
        Ok(())
    }

    /// `c + C_rows (targets - Phi c)`.
    pub fn correct(&self, c: &[f64], targets: &[f64]) -> Result<Vec<f64>> {
        self.check_len(c.len())?;
        if targets.len() != self.powers.len() {
            return Err(Error::DimensionMismatch { expected: self.powers.len(), found: targets.len() });
        }
        let cv = DVector::from_column_slice(c);
        let defect = DVector::from_column_slice(targets) - &self.phi * &cv;
        Ok((cv + &self.c_rows * defect).iter().copied().collect())
    }
}

/// Constraint operator for moments 0..=q of the first n+1 members of `family`.
pub fn constraint_operator(family: &BasisFamily, mm: &MomentMatrix, n: usize, q: usize) -> Result<ConstraintOperator> {
    if n > mm.max_degree() || q > mm.max_power() {
        return Err(Error::InvalidParameter(format!(
            "moment table is {}x{}, need Q = {q}, N = {n}",
            mm.max_power() + 1,
            mm.max_degree() + 1
        )));
    }
    let sub = MomentMatrix { mu: mm.mu.view((0, 0), (q + 1, n + 1)).into_owned() };
    let norms = family.norms_sq_upto(n)?;
    let powers: Vec<usize> = (0..=q).collect();
    ConstraintOperator::new(BasisId::Family(family.kind()), &sub, &norms, &powers)
}

fn default_nodal(family: &BasisFamily, n: usize) -> Result<NodalBasis> {
    let rule = gauss_rule(family, DEFAULT_POINTS)?;
    NodalBasis::from_family(&family.with_degree(n), &rule)
}

/// Standard projection onto members 0..=n using the default 80-point rule.
pub fn project<F: Fn(f64) -> f64>(f: F, family: &BasisFamily, n: usize) -> Result<SpectralCoeffs> {
    default_nodal(family, n)?.project(f)
}

/// Conservative projection onto members 0..=n using the default 80-point rule.
pub fn conservative_project<F: Fn(f64) -> f64>(
    f: F,
    family: &BasisFamily,
    n: usize,
    co: &ConstraintOperator,
) -> Result<SpectralCoeffs> {
    let nodal = default_nodal(family, n)?;
    if co.basis() != nodal.id() {
        return Err(Error::BasisMismatch { expected: nodal.id().to_string(), found: co.basis().to_string() });
    }
    nodal.conservative_project(f, co)
}

pub fn correct_given_targets(base: &SpectralCoeffs, targets: &MomentVector, co: &ConstraintOperator) -> Result<SpectralCoeffs> {
    if base.basis != co.basis() {
        return Err(Error::BasisMismatch { expected: base.basis.to_string(), found: co.basis().to_string() });
    }
    Ok(SpectralCoeffs::new(co.correct(&base.c, targets.as_slice())?, base.basis))
}

/// `f_N(x) = sum_k c_k P_k(x)` at each x.
pub fn reconstruct(coeffs: &SpectralCoeffs, family: &BasisFamily, xs: &[f64]) -> Result<Vec<f64>> {
    if coeffs.basis != BasisId::Family(family.kind()) {
        return Err(Error::BasisMismatch {
            expected: BasisId::Family(family.kind()).to_string(),
            found: coeffs.basis.to_string(),
        });
    }
    let n = coeffs.len().checked_sub(1).ok_or(Error::DimensionMismatch { expected: 1, found: 0 })?;
    xs.iter()
        .map(|&x| {
            let v = family.eval_upto(x, n)?;
            Ok(v.iter().zip(&coeffs.c).map(|(a, b)| a * b).sum())
        })
        .collect()
}

/// Moments of f by plain quadrature on the rule, for q = 0..=q_max.
pub fn target_moments<F: Fn(f64) -> f64>(f: F, rule: &QuadratureRule, q_max: usize) -> Result<MomentVector> {
    let v: Vec<f64> = rule.nodes().iter().map(|&x| f(x)).collect();
    moments_of_values(&v, rule, q_max)
}
