//! Unweighted moments `mu[q][k] = ∫ P_k x^q` of basis members, and moments of
//! spectral approximants.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisFamily, Domain, FamilyKind};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;

#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix {
    /// `(Q+1) x (N+1)`; row q, column k.
    pub mu: DMatrix<f64>,
}

impl MomentMatrix {
    pub fn max_power(&self) -> usize {
        self.mu.nrows() - 1
    }

    pub fn max_degree(&self) -> usize {
        self.mu.ncols() - 1
    }

    pub fn get(&self, q: usize, k: usize) -> f64 {
        self.mu[(q, k)]
    }

    /// Rows for the listed powers, as a `|powers| x (N+1)` matrix.
    pub fn rows(&self, powers: &[usize]) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(powers.len(), self.mu.ncols());
        for (r, &q) in powers.iter().enumerate() {
            if q > self.max_power() {
                return Err(Error::InvalidParameter(format!(
                    "moment power {q} exceeds table maximum {}",
                    self.max_power()
                )));
            }
            out.set_row(r, &self.mu.row(q));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector(pub Vec<f64>);

impl MomentVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
pub enum MomentMethod<'a> {
    /// Moment recurrence seeded with closed-form moments of `P_0`.
    Recursion,
    /// Plain-mode quadrature with the given rule, which must live on the
    /// family's domain.
    Quadrature(&'a QuadratureRule),
}

/// `∫ P_0 x^j` for j = 0..=jmax.
fn seed_moments(family: &BasisFamily, jmax: usize) -> Result<Vec<Dd>> {
    let mut m: Vec<Dd> = Vec::with_capacity(jmax + 1);
    match (family.kind(), family.domain()) {
        (FamilyKind::HermiteFn, _) => {
            // ∫ x^j exp(-x^2/2) = (j-1)!! sqrt(2 pi) for even j
            for j in 0..=jmax {
                let v = match j {
                    0 => Dd { hi: (2.0 * std::f64::consts::PI).sqrt(), lo: 0.0 },
                    1 => Dd::default(),
                    _ => m[j - 2].scale((j - 1) as f64),
                };
                m.push(v);
            }
        }
        (FamilyKind::LaguerreFn, _) => {
            // ∫_0^∞ x^j exp(-x/2) = j! 2^(j+1)
            for j in 0..=jmax {
                let v = if j == 0 { Dd { hi: 2.0, lo: 0.0 } } else { m[j - 1].scale(2.0 * j as f64) };
                m.push(v);
            }
        }
        (FamilyKind::Custom, _) => {
            return Err(Error::Unsupported("closed-form seed moments for a custom family".into()))
        }
        (_, Domain::Bounded { a, b }) => {
            for j in 0..=jmax {
                let p = (j + 1) as i32;
                m.push(Dd::from_ratio(b.powi(p) - a.powi(p), (j + 1) as f64));
            }
        }
        (_, _) => return Err(Error::Unsupported("seed moments on this domain".into())),
    }
    Ok(m)
}

/// Double-double value `hi + lo`. The moment recurrence amplifies rounding by
/// roughly `a_k` per degree (a factor 2 for the Chebyshev families), so it is
/// carried in compensated arithmetic and rounded once at the end.
#[derive(Debug, Clone, Copy, Default)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn from_ratio(num: f64, den: f64) -> Self {
        let hi = num / den;
        let lo = (-hi).mul_add(den, num) / den;
        Self { hi, lo }
    }

    fn add(self, o: Dd) -> Dd {
        let s = self.hi + o.hi;
        let bb = s - self.hi;
        let err = (self.hi - (s - bb)) + (o.hi - bb);
        let lo = err + self.lo + o.lo;
        let hi = s + lo;
        Dd { hi, lo: lo - (hi - s) }
    }

    fn scale(self, a: f64) -> Dd {
        let p = a * self.hi;
        let e = a.mul_add(self.hi, -p) + a * self.lo;
        let hi = p + e;
        Dd { hi, lo: e - (hi - p) }
    }
}

fn by_recursion(family: &BasisFamily, q_max: usize, n: usize) -> Result<DMatrix<f64>> {
    let rows = q_max + n + 1;
    let mut work = vec![vec![Dd::default(); n + 1]; rows];
    for (j, v) in seed_moments(family, rows - 1)?.into_iter().enumerate() {
        work[j][0] = v;
    }
    for k in 1..=n {
        let (a, b, c) = family.term(k)?;
        // column k is valid for powers up to q_max + n - k
        for q in 0..=(q_max + n - k) {
            let mut v = work[q + 1][k - 1].scale(a).add(work[q][k - 1].scale(b));
            if k >= 2 {
                v = v.add(work[q][k - 2].scale(c));
            }
            work[q][k] = v;
        }
    }
    Ok(DMatrix::from_fn(q_max + 1, n + 1, |q, k| work[q][k].hi + work[q][k].lo))
}

fn by_quadrature(family: &BasisFamily, rule: &QuadratureRule, q_max: usize, n: usize) -> Result<DMatrix<f64>> {
    if rule.family().domain() != family.domain() {
        return Err(Error::InvalidParameter("quadrature rule lives on a different domain".into()));
    }
    let mut mu = DMatrix::<f64>::zeros(q_max + 1, n + 1);
    for (&x, &w) in rule.nodes().iter().zip(rule.plain_weights()) {
        let vals = family.eval_upto(x, n)?;
        let mut xq = w;
        for q in 0..=q_max {
            for k in 0..=n {
                mu[(q, k)] += xq * vals[k];
            }
            xq *= x;
        }
    }
    Ok(mu)
}

pub fn moment_matrix(family: &BasisFamily, q_max: usize, n: usize, method: MomentMethod<'_>) -> Result<MomentMatrix> {
    let mu = match method {
        MomentMethod::Recursion => by_recursion(family, q_max, n)?,
        MomentMethod::Quadrature(rule) => by_quadrature(family, rule, q_max, n)?,
    };
    if let Some(i) = mu.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "moment matrix", index: i });
    }
    Ok(MomentMatrix { mu })
}

/// `m_{q,N} = sum_k c_k mu[q][k]`.
pub fn moments_of(coeffs: &[f64], mm: &MomentMatrix) -> Result<MomentVector> {
    if coeffs.len() > mm.mu.ncols() {
        return Err(Error::DimensionMismatch { expected: mm.mu.ncols(), found: coeffs.len() });
    }
    let out = (0..mm.mu.nrows())
        .map(|q| coeffs.iter().enumerate().map(|(k, c)| c * mm.mu[(q, k)]).sum())
        .collect();
    Ok(MomentVector(out))
}

/// `m_q = ∫ f x^q` for q = 0..=q_max, by plain quadrature.
pub fn moments_of_function<F: Fn(f64) -> f64>(f: F, rule: &QuadratureRule, q_max: usize) -> Result<MomentVector> {
    let values: Vec<f64> = rule.nodes().iter().map(|&x| f(x)).collect();
    moments_of_values(&values, rule, q_max)
}

/// Moments from samples of f at the nodes of `rule`.
pub fn moments_of_values(values: &[f64], rule: &QuadratureRule, q_max: usize) -> Result<MomentVector> {
    if values.len() != rule.len() {
        return Err(Error::DimensionMismatch { expected: rule.len(), found: values.len() });
    }
    let mut m = vec![0.0; q_max + 1];
    for (i, ((&x, &w), &v)) in rule.nodes().iter().zip(rule.plain_weights()).zip(values).enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { what: "function values", index: i });
        }
        let mut xq = w * v;
        for mq in m.iter_mut() {
            *mq += xq;
            xq *= x;
        }
    }
    Ok(MomentVector(m))
}
