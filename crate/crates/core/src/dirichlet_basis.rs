//! Composite basis vanishing at both endpoints of [-1, 1].
//!
//! `zeta_k = p_k + a_k p_{k+1} + b_k p_{k+2}` with `a_k, b_k` fixed by
//! `zeta_k(-1) = zeta_k(1) = 0`, then orthonormalized in the parent's weighted
//! inner product. Everything is held as coefficients in the parent basis, so
//! inner products are exact sums `sum_j u_j v_j h_j`.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use crate::basis::{BasisFamily, Domain};
use crate::error::{Error, Result};
use crate::moments::MomentMatrix;
use crate::projection::{BasisId, NodalBasis, SpectralCoeffs};
use crate::quadrature::{gauss_rule, QuadratureRule, DEFAULT_POINTS};

const ORTHOGONALITY_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct CompositeBasis {
    parent: BasisFamily,
    /// `(1, a_k, b_k)` for k = 0..=N-2.
    combo: Vec<[f64; 3]>,
    /// `(N-1) x (N+1)`: row j holds the parent coefficients of the j-th
    /// orthonormal function.
    ortho: DMatrix<f64>,
    gram_residual: f64,
}

impl CompositeBasis {
    pub fn parent(&self) -> &BasisFamily {
        &self.parent
    }

    pub fn combo(&self) -> &[[f64; 3]] {
        &self.combo
    }

    pub fn ortho_coeffs(&self) -> &DMatrix<f64> {
        &self.ortho
    }

    pub fn gram_residual(&self) -> f64 {
        self.gram_residual
    }

    pub fn dim(&self) -> usize {
        self.ortho.nrows()
    }

    pub fn id(&self) -> BasisId {
        BasisId::Composite(self.parent.kind())
    }

    /// Orthonormal functions at x.
    pub fn eval_all(&self, x: f64) -> Result<Vec<f64>> {
        let p = DVector::from_vec(self.parent.eval_all(x)?);
        Ok((&self.ortho * p).iter().copied().collect())
    }

    /// Orthonormal functions and their first two derivatives at x.
    pub fn eval_derivs(&self, x: f64) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let d = self.parent.eval_derivs_upto(x, self.parent.max_degree())?;
        let apply = |v: Vec<f64>| -> Vec<f64> { (&self.ortho * DVector::from_vec(v)).iter().copied().collect() };
        Ok((apply(d.values), apply(d.d1), apply(d.d2)))
    }

    /// Samples at the nodes of a Gauss rule for the parent family.
    pub fn nodal(&self, rule: &QuadratureRule) -> Result<NodalBasis> {
        if rule.family().kind() != self.parent.kind() {
            return Err(Error::InvalidParameter("composite basis needs a rule for its parent family".into()));
        }
        let mut values = DMatrix::zeros(rule.len(), self.dim());
        for (i, &x) in rule.nodes().iter().enumerate() {
            for (k, v) in self.eval_all(x)?.into_iter().enumerate() {
                values[(i, k)] = v;
            }
        }
        Ok(NodalBasis::from_parts(self.id(), rule, values, rule.weights().to_vec(), vec![1.0; self.dim()]))
    }

    /// `mu[q][j] = ∫ zeta~_j x^q`, from the parent's moment table.
    pub fn moment_matrix(&self, parent_mm: &MomentMatrix) -> Result<MomentMatrix> {
        if parent_mm.mu.ncols() != self.ortho.ncols() {
            return Err(Error::DimensionMismatch { expected: self.ortho.ncols(), found: parent_mm.mu.ncols() });
        }
        Ok(MomentMatrix { mu: &parent_mm.mu * self.ortho.transpose() })
    }

    /// `f_N(x) = sum_j c_j zeta~_j(x)`.
    pub fn reconstruct(&self, coeffs: &SpectralCoeffs, xs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.basis != self.id() {
            return Err(Error::BasisMismatch { expected: self.id().to_string(), found: coeffs.basis.to_string() });
        }
        if coeffs.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: coeffs.len() });
        }
        xs.iter()
            .map(|&x| Ok(self.eval_all(x)?.iter().zip(&coeffs.c).map(|(a, b)| a * b).sum()))
            .collect()
    }
}

/// Builds the orthonormalized composite basis from parent members 0..=n.
pub fn composite_dirichlet(parent: &BasisFamily, n: usize) -> Result<CompositeBasis> {
    if parent.domain() != (Domain::Bounded { a: -1.0, b: 1.0 }) || parent.symmetric_weighting() {
        return Err(Error::InvalidParameter("composite Dirichlet basis needs a parent on [-1, 1]".into()));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!("composite basis needs N >= 2, got {n}")));
    }
    let parent = parent.with_degree(n);
    let right = parent.eval_all(1.0)?;
    let left = parent.eval_all(-1.0)?;
    let norms = parent.norms_sq_upto(n)?;

    let mut combo = Vec::with_capacity(n - 1);
    let mut raw = DMatrix::<f64>::zeros(n - 1, n + 1);
    for k in 0..=(n - 2) {
        let sys = Matrix2::new(right[k + 1], right[k + 2], left[k + 1], left[k + 2]);
        let rhs = Vector2::new(-right[k], -left[k]);
        let scale = sys.abs().max();
        if sys.determinant().abs() <= 1e-14 * scale * scale {
            return Err(Error::SingularEndpointSystem { k });
        }
        let ab = sys.lu().solve(&rhs).ok_or(Error::SingularEndpointSystem { k })?;
        combo.push([1.0, ab[0], ab[1]]);
        raw[(k, k)] = 1.0;
        raw[(k, k + 1)] = ab[0];
        raw[(k, k + 2)] = ab[1];
    }

    let inner = |u: &[f64], v: &[f64]| -> f64 { u.iter().zip(v).zip(&norms).map(|((a, b), h)| a * b * h).sum() };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
    for k in 0..(n - 1) {
        let mut v: Vec<f64> = raw.row(k).iter().copied().collect();
        // modified Gram-Schmidt, then one reorthogonalization pass
        for _ in 0..2 {
            for q in &basis {
                let r = inner(&v, q);
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= r * b);
            }
        }
        let norm = inner(&v, &v).sqrt();
        if !(norm > 0.0) {
            return Err(Error::OrthogonalityLoss { residual: f64::INFINITY, n });
        }
        v.iter_mut().for_each(|a| *a /= norm);
        basis.push(v);
    }

    let mut residual: f64 = 0.0;
    for i in 0..basis.len() {
        for j in 0..=i {
            let target = if i == j { 1.0 } else { 0.0 };
            residual = residual.max((inner(&basis[i], &basis[j]) - target).abs());
        }
    }
    if residual > ORTHOGONALITY_LIMIT {
        return Err(Error::OrthogonalityLoss { residual, n });
    }
    let ortho = DMatrix::from_fn(n - 1, n + 1, |r, c| basis[r][c]);
    Ok(CompositeBasis { parent, combo, ortho, gram_residual: residual })
}

/// Coefficients of f in the orthonormal composite basis, using the default
/// 80-point rule of the parent.
pub fn project_composite<F: Fn(f64) -> f64>(f: F, cb: &CompositeBasis) -> Result<SpectralCoeffs> {
    let rule = gauss_rule(cb.parent(), DEFAULT_POINTS)?;
    cb.nodal(&rule)?.project(f)
}
