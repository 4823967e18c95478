//! Orthogonal families in classical normalization.
//!
//! Every family is described by its three-term recurrence
//! `phi_k = (a_k x + b_k) phi_{k-1} + c_k phi_{k-2}` and an explicit table of
//! squared norms. HermiteFn and LaguerreFn are the symmetrically weighted
//! variants: their members are `phi_k * sqrt(w)`, orthogonal without weight.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Bounded { a: f64, b: f64 },
    HalfLine,
    RealLine,
}

impl Domain {
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Domain::Bounded { a, b } => x >= a && x <= b,
            Domain::HalfLine => x >= 0.0 && x.is_finite(),
            Domain::RealLine => x.is_finite(),
        }
    }

    pub fn contains_interior(&self, x: f64) -> bool {
        match *self {
            Domain::Bounded { a, b } => x > a && x < b,
            Domain::HalfLine => x > 0.0 && x.is_finite(),
            Domain::RealLine => x.is_finite(),
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, Domain::Bounded { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FamilyKind {
    Legendre,
    Chebyshev1,
    Chebyshev2,
    Jacobi { alpha: f64, beta: f64 },
    HermiteFn,
    LaguerreFn,
    Custom,
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyKind::Legendre => write!(f, "legendre"),
            FamilyKind::Chebyshev1 => write!(f, "chebyshev1"),
            FamilyKind::Chebyshev2 => write!(f, "chebyshev2"),
            FamilyKind::Jacobi { alpha, beta } => write!(f, "jacobi:{alpha}:{beta}"),
            FamilyKind::HermiteFn => write!(f, "hermite"),
            FamilyKind::LaguerreFn => write!(f, "laguerre"),
            FamilyKind::Custom => write!(f, "custom"),
        }
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;

    /// Accepts `legendre`, `chebyshev1`, `chebyshev2`, `jacobi:<alpha>:<beta>`,
    /// `hermite` and `laguerre` (plus a few short aliases).
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let kind = match lower.as_str() {
            "legendre" => FamilyKind::Legendre,
            "chebyshev1" | "cheb1" => FamilyKind::Chebyshev1,
            "chebyshev2" | "cheb2" => FamilyKind::Chebyshev2,
            "hermite" | "hermitefn" => FamilyKind::HermiteFn,
            "laguerre" | "laguerrefn" => FamilyKind::LaguerreFn,
            other if other.starts_with("jacobi") => {
                let parts: Vec<&str> = other.split(':').collect();
                if parts.len() != 3 || parts[0] != "jacobi" {
                    return Err(Error::InvalidParameter(format!(
                        "expected jacobi:<alpha>:<beta>, got {s}"
                    )));
                }
                let parse = |p: &str| {
                    p.parse::<f64>()
                        .map_err(|_| Error::InvalidParameter(format!("bad Jacobi parameter {p}")))
                };
                FamilyKind::Jacobi { alpha: parse(parts[1])?, beta: parse(parts[2])? }
            }
            _ => return Err(Error::InvalidParameter(format!("unknown basis {s}"))),
        };
        Ok(kind)
    }
}

/// User-supplied data for a family outside the built-in list.
#[derive(Debug, Clone)]
pub struct CustomFamily {
    pub domain: Domain,
    /// `(a_k, b_k, c_k)` for k = 1, 2, ...
    pub terms: Vec<(f64, f64, f64)>,
    pub norms_sq: Vec<f64>,
    pub weight: fn(f64) -> f64,
}

#[derive(Debug, Clone)]
pub struct BasisFamily {
    kind: FamilyKind,
    domain: Domain,
    max_degree: usize,
    custom: Option<Arc<CustomFamily>>,
}

impl PartialEq for BasisFamily {
    fn eq(&self, other: &Self) -> bool {
        let same_data = match (&self.custom, &other.custom) {
            (None, None) => true,
            (Some(a), Some(b)) => Arc::ptr_eq(a, b),
            _ => false,
        };
        self.kind == other.kind && self.domain == other.domain && self.max_degree == other.max_degree && same_data
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceCoeffs {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormTable {
    pub norms_sq: Vec<f64>,
}

/// Values and first two derivatives of every member up to some degree.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisValues {
    pub values: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

const UNIT: Domain = Domain::Bounded { a: -1.0, b: 1.0 };

impl BasisFamily {
    pub fn legendre(max_degree: usize) -> Self {
        Self::builtin(FamilyKind::Legendre, UNIT, max_degree)
    }

    pub fn chebyshev1(max_degree: usize) -> Self {
        Self::builtin(FamilyKind::Chebyshev1, UNIT, max_degree)
    }

    pub fn chebyshev2(max_degree: usize) -> Self {
        Self::builtin(FamilyKind::Chebyshev2, UNIT, max_degree)
    }

    pub fn jacobi(alpha: f64, beta: f64, max_degree: usize) -> Result<Self> {
        if !(alpha > -1.0 && beta > -1.0) {
            return Err(Error::InvalidParameter(format!(
                "Jacobi parameters must exceed -1, got ({alpha}, {beta})"
            )));
        }
        Ok(Self::builtin(FamilyKind::Jacobi { alpha, beta }, UNIT, max_degree))
    }

    pub fn hermite_fn(max_degree: usize) -> Self {
        Self::builtin(FamilyKind::HermiteFn, Domain::RealLine, max_degree)
    }

    pub fn laguerre_fn(max_degree: usize) -> Self {
        Self::builtin(FamilyKind::LaguerreFn, Domain::HalfLine, max_degree)
    }

    /// Generalized Hermite/Laguerre weights are not supported; `alpha` must be 0.
    pub fn hermite_fn_generalized(alpha: f64, max_degree: usize) -> Result<Self> {
        if alpha != 0.0 {
            return Err(Error::Unsupported(format!("Hermite weight with alpha = {alpha}")));
        }
        Ok(Self::hermite_fn(max_degree))
    }

    pub fn laguerre_fn_generalized(alpha: f64, max_degree: usize) -> Result<Self> {
        if alpha != 0.0 {
            return Err(Error::Unsupported(format!("Laguerre weight with alpha = {alpha}")));
        }
        Ok(Self::laguerre_fn(max_degree))
    }

    /// A custom family; without coefficient data every numerical query fails.
    pub fn custom(domain: Domain, data: Option<CustomFamily>, max_degree: usize) -> Self {
        Self { kind: FamilyKind::Custom, domain, max_degree, custom: data.map(Arc::new) }
    }

    pub fn from_kind(kind: FamilyKind, max_degree: usize) -> Result<Self> {
        match kind {
            FamilyKind::Legendre => Ok(Self::legendre(max_degree)),
            FamilyKind::Chebyshev1 => Ok(Self::chebyshev1(max_degree)),
            FamilyKind::Chebyshev2 => Ok(Self::chebyshev2(max_degree)),
            FamilyKind::Jacobi { alpha, beta } => Self::jacobi(alpha, beta, max_degree),
            FamilyKind::HermiteFn => Ok(Self::hermite_fn(max_degree)),
            FamilyKind::LaguerreFn => Ok(Self::laguerre_fn(max_degree)),
            FamilyKind::Custom => {
                Err(Error::Unsupported("custom family needs explicit coefficient data".into()))
            }
        }
    }

    fn builtin(kind: FamilyKind, domain: Domain, max_degree: usize) -> Self {
        Self { kind, domain, max_degree, custom: None }
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn with_degree(&self, max_degree: usize) -> Self {
        Self { max_degree, ..self.clone() }
    }

    /// True when members carry the factor `sqrt(w)`.
    pub fn symmetric_weighting(&self) -> bool {
        matches!(self.kind, FamilyKind::HermiteFn | FamilyKind::LaguerreFn)
    }

    fn custom_data(&self) -> Result<&CustomFamily> {
        self.custom
            .as_deref()
            .ok_or_else(|| Error::Unsupported("custom family without user-supplied coefficients".into()))
    }

    /// `(a_k, b_k, c_k)` for k ≥ 1.
    pub fn term(&self, k: usize) -> Result<(f64, f64, f64)> {
        assert!(k >= 1, "recurrence terms start at k = 1");
        let kf = k as f64;
        let t = match self.kind {
            FamilyKind::Legendre => ((2.0 * kf - 1.0) / kf, 0.0, -(kf - 1.0) / kf),
            FamilyKind::Chebyshev1 => {
                if k == 1 {
                    (1.0, 0.0, 0.0)
                } else {
                    (2.0, 0.0, -1.0)
                }
            }
            FamilyKind::Chebyshev2 => {
                if k == 1 {
                    (2.0, 0.0, 0.0)
                } else {
                    (2.0, 0.0, -1.0)
                }
            }
            FamilyKind::Jacobi { alpha, beta } => jacobi_term(alpha, beta, k),
            FamilyKind::HermiteFn => (2.0, 0.0, -2.0 * (kf - 1.0)),
            FamilyKind::LaguerreFn => (-1.0 / kf, (2.0 * kf - 1.0) / kf, -(kf - 1.0) / kf),
            FamilyKind::Custom => {
                let data = self.custom_data()?;
                *data.terms.get(k - 1).ok_or_else(|| {
                    Error::Unsupported(format!("custom recurrence has no term for k = {k}"))
                })?
            }
        };
        Ok(t)
    }

    /// `h_k / h_{k-1}` for k ≥ 1, without forming either norm.
    pub fn norm_ratio(&self, k: usize) -> Result<f64> {
        assert!(k >= 1);
        let kf = k as f64;
        let r = match self.kind {
            FamilyKind::Legendre => (2.0 * kf - 1.0) / (2.0 * kf + 1.0),
            FamilyKind::Chebyshev1 => {
                if k == 1 {
                    0.5
                } else {
                    1.0
                }
            }
            FamilyKind::Chebyshev2 | FamilyKind::LaguerreFn => 1.0,
            FamilyKind::HermiteFn => 2.0 * kf,
            FamilyKind::Jacobi { alpha, beta } => {
                if k == 1 {
                    jacobi_h1(alpha, beta) / jacobi_h0(alpha, beta)
                } else {
                    let s = 2.0 * kf + alpha + beta;
                    (s - 1.0) / (s + 1.0) * (kf + alpha) * (kf + beta) / (kf * (kf + alpha + beta))
                }
            }
            FamilyKind::Custom => {
                let data = self.custom_data()?;
                match (data.norms_sq.get(k), data.norms_sq.get(k - 1)) {
                    (Some(hk), Some(hk1)) => hk / hk1,
                    _ => {
                        return Err(Error::Unsupported(format!(
                            "custom norm table has no entry for k = {k}"
                        )))
                    }
                }
            }
        };
        Ok(r)
    }

    /// `h_0 = ∫ w`.
    pub fn norm_sq0(&self) -> Result<f64> {
        let h = match self.kind {
            FamilyKind::Legendre => 2.0,
            FamilyKind::Chebyshev1 => std::f64::consts::PI,
            FamilyKind::Chebyshev2 => std::f64::consts::FRAC_PI_2,
            FamilyKind::Jacobi { alpha, beta } => jacobi_h0(alpha, beta),
            FamilyKind::HermiteFn => std::f64::consts::PI.sqrt(),
            FamilyKind::LaguerreFn => 1.0,
            FamilyKind::Custom => *self
                .custom_data()?
                .norms_sq
                .first()
                .ok_or_else(|| Error::Unsupported("empty custom norm table".into()))?,
        };
        Ok(h)
    }

    /// Squared norms `h_0..h_n`.
    pub fn norms_sq_upto(&self, n: usize) -> Result<Vec<f64>> {
        if let FamilyKind::Custom = self.kind {
            let data = self.custom_data()?;
            if data.norms_sq.len() <= n {
                return Err(Error::Unsupported(format!("custom norm table shorter than {}", n + 1)));
            }
            return Ok(data.norms_sq[..=n].to_vec());
        }
        let mut out = Vec::with_capacity(n + 1);
        out.push(self.norm_sq0()?);
        for k in 1..=n {
            // Jacobi h_1 is taken directly; the ratio form is singular when alpha + beta = -1.
            let next = match (self.kind, k) {
                (FamilyKind::Jacobi { alpha, beta }, 1) => jacobi_h1(alpha, beta),
                _ => out[k - 1] * self.norm_ratio(k)?,
            };
            out.push(next);
        }
        Ok(out)
    }

    /// The weight `w(x)`. For HermiteFn/LaguerreFn this is the polynomial weight
    /// `exp(-x^2)` or `exp(-x)`.
    pub fn weight(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        let w = match self.kind {
            FamilyKind::Legendre => 1.0,
            FamilyKind::Chebyshev1 => {
                if x.abs() >= 1.0 {
                    return Err(self.singular(x));
                }
                1.0 / (1.0 - x * x).sqrt()
            }
            FamilyKind::Chebyshev2 => (1.0 - x * x).max(0.0).sqrt(),
            FamilyKind::Jacobi { alpha, beta } => {
                if (x >= 1.0 && alpha < 0.0) || (x <= -1.0 && beta < 0.0) {
                    return Err(self.singular(x));
                }
                (1.0 - x).powf(alpha) * (1.0 + x).powf(beta)
            }
            FamilyKind::HermiteFn => (-x * x).exp(),
            FamilyKind::LaguerreFn => (-x).exp(),
            FamilyKind::Custom => (self.custom_data()?.weight)(x),
        };
        Ok(w)
    }

    /// The factor `s(x)` multiplying each polynomial: `sqrt(w)` for weighted
    /// families, 1 otherwise.
    pub fn member_factor(&self, x: f64) -> f64 {
        match self.kind {
            FamilyKind::HermiteFn => (-0.5 * x * x).exp(),
            FamilyKind::LaguerreFn => (-0.5 * x).exp(),
            _ => 1.0,
        }
    }

    fn member_factor_derivs(&self, x: f64) -> (f64, f64, f64) {
        let s = self.member_factor(x);
        match self.kind {
            FamilyKind::HermiteFn => (s, -x * s, (x * x - 1.0) * s),
            FamilyKind::LaguerreFn => (s, -0.5 * s, 0.25 * s),
            _ => (1.0, 0.0, 0.0),
        }
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if self.domain.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain { family: self.kind.to_string(), x })
        }
    }

    fn singular(&self, x: f64) -> Error {
        Error::SingularWeight { family: self.kind.to_string(), x }
    }

    /// Members of degree 0..=n at x by forward recurrence.
    pub fn eval_upto(&self, x: f64, n: usize) -> Result<Vec<f64>> {
        self.check_domain(x)?;
        let mut p = Vec::with_capacity(n + 1);
        p.push(1.0);
        for k in 1..=n {
            let (a, b, c) = self.term(k)?;
            let prev2 = if k >= 2 { p[k - 2] } else { 0.0 };
            p.push((a * x + b) * p[k - 1] + c * prev2);
        }
        let s = self.member_factor(x);
        if s != 1.0 {
            p.iter_mut().for_each(|v| *v *= s);
        }
        Ok(p)
    }

    pub fn eval_all(&self, x: f64) -> Result<Vec<f64>> {
        self.eval_upto(x, self.max_degree)
    }

    /// Values and derivatives of members 0..=n, using differentiated recurrences
    /// and the product rule for the `sqrt(w)` factor.
    pub fn eval_derivs_upto(&self, x: f64, n: usize) -> Result<BasisValues> {
        self.check_domain(x)?;
        let mut p = vec![0.0; n + 1];
        let mut d1 = vec![0.0; n + 1];
        let mut d2 = vec![0.0; n + 1];
        p[0] = 1.0;
        for k in 1..=n {
            let (a, b, c) = self.term(k)?;
            let lin = a * x + b;
            let (p2, q2, r2) = if k >= 2 { (p[k - 2], d1[k - 2], d2[k - 2]) } else { (0.0, 0.0, 0.0) };
            p[k] = lin * p[k - 1] + c * p2;
            d1[k] = a * p[k - 1] + lin * d1[k - 1] + c * q2;
            d2[k] = 2.0 * a * d1[k - 1] + lin * d2[k - 1] + c * r2;
        }
        if self.symmetric_weighting() {
            let (s, s1, s2) = self.member_factor_derivs(x);
            for k in 0..=n {
                let (f, f1, f2) = (p[k], d1[k], d2[k]);
                p[k] = f * s;
                d1[k] = f1 * s + f * s1;
                d2[k] = f2 * s + 2.0 * f1 * s1 + f * s2;
            }
        }
        Ok(BasisValues { values: p, d1, d2 })
    }
}

fn jacobi_term(alpha: f64, beta: f64, k: usize) -> (f64, f64, f64) {
    if k == 1 {
        return ((alpha + beta + 2.0) / 2.0, (alpha - beta) / 2.0, 0.0);
    }
    let n = k as f64;
    let s = 2.0 * n + alpha + beta;
    let d = 2.0 * n * (n + alpha + beta) * (s - 2.0);
    let a = (s - 1.0) * s * (s - 2.0) / d;
    let b = (s - 1.0) * (alpha * alpha - beta * beta) / d;
    let c = -2.0 * (n + alpha - 1.0) * (n + beta - 1.0) * s / d;
    (a, b, c)
}

fn jacobi_h0(alpha: f64, beta: f64) -> f64 {
    2f64.powf(alpha + beta + 1.0) * gamma(alpha + 1.0) * gamma(beta + 1.0) / gamma(alpha + beta + 2.0)
}

fn jacobi_h1(alpha: f64, beta: f64) -> f64 {
    2f64.powf(alpha + beta + 1.0) / (alpha + beta + 3.0) * gamma(alpha + 2.0) * gamma(beta + 2.0)
        / gamma(alpha + beta + 2.0)
}

pub fn recurrence_coeffs(family: &BasisFamily) -> Result<RecurrenceCoeffs> {
    if family.kind() == FamilyKind::Custom {
        family.custom_data()?;
    }
    let n = family.max_degree();
    let mut rc = RecurrenceCoeffs { a: Vec::with_capacity(n), b: Vec::with_capacity(n), c: Vec::with_capacity(n) };
    for k in 1..=n {
        let (a, b, c) = family.term(k)?;
        rc.a.push(a);
        rc.b.push(b);
        rc.c.push(c);
    }
    Ok(rc)
}

pub fn eval_all(family: &BasisFamily, x: f64) -> Result<Vec<f64>> {
    family.eval_all(x)
}

pub fn norm_sq_table(family: &BasisFamily) -> Result<NormTable> {
    Ok(NormTable { norms_sq: family.norms_sq_upto(family.max_degree())? })
}

pub fn weight(family: &BasisFamily, x: f64) -> Result<f64> {
    family.weight(x)
}
