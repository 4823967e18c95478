//! Shared oracles and residual measurements for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use conspec::basis::{BasisFamily, FamilyKind};
use conspec::moments::{moment_matrix, MomentMethod, MomentMatrix};
use conspec::dirichlet_basis::composite_dirichlet;
use conspec::experiments::{setup, Model, PdeConfig};
use conspec::operators::GalerkinOperator;
use conspec::projection::{ConstraintOperator, NodalBasis, SpectralCoeffs};
use conspec::quadrature::gauss_rule;
use conspec::timestepper::integrate;
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use statrs::function::gamma::gamma;

pub fn classical_families(max_degree: usize) -> Vec<BasisFamily> {
    vec![
        BasisFamily::legendre(max_degree),
        BasisFamily::chebyshev1(max_degree),
        BasisFamily::chebyshev2(max_degree),
        BasisFamily::jacobi(1.0, -0.5, max_degree).unwrap(),
        BasisFamily::jacobi(2.0, 0.5, max_degree).unwrap(),
        BasisFamily::hermite_fn(max_degree),
        BasisFamily::laguerre_fn(max_degree),
    ]
}

/// `∫ x^d w(x) dx` in closed form, or for Jacobi weights through the
/// substitution `x = -1 + 2 s^2` integrated by a Legendre rule that is exact
/// for the resulting polynomial.
pub fn weighted_monomial(kind: FamilyKind, d: usize) -> f64 {
    let even = |d: usize, first: f64, step: &dyn Fn(f64) -> f64| -> f64 {
        if d % 2 == 1 {
            return 0.0;
        }
        (1..=d / 2).fold(first, |acc, j| acc * step((2 * j) as f64))
    };
    match kind {
        FamilyKind::Legendre => even(d, 2.0, &|_| 1.0) / (d as f64 + 1.0),
        FamilyKind::Chebyshev1 => even(d, PI, &|k| (k - 1.0) / k),
        FamilyKind::Chebyshev2 => even(d, PI / 2.0, &|k| (k - 1.0) / (k + 2.0)),
        FamilyKind::HermiteFn => even(d, PI.sqrt(), &|k| (k - 1.0) / 2.0),
        FamilyKind::LaguerreFn => (1..=d).map(|j| j as f64).product(),
        FamilyKind::Jacobi { alpha, beta } => jacobi_monomial(alpha, beta, d),
        FamilyKind::Custom => panic!("no closed form for custom weights"),
    }
}

fn jacobi_monomial(alpha: f64, beta: f64, d: usize) -> f64 {
    // ∫ (1-x)^a (1+x)^b x^d dx with x = -1 + 2 s^2 on s in [0, 1]:
    // 4 s (2 - 2 s^2)^a (2 s^2)^b (2 s^2 - 1)^d ds, a polynomial in s when a
    // and 2b are integers (b = -1/2 cancels the leading s).
    let rule = gauss_rule(&BasisFamily::legendre(0), 200).unwrap();
    rule.nodes()
        .iter()
        .zip(rule.weights())
        .map(|(&y, &w)| {
            let s = 0.5 * (y + 1.0);
            let g = 4.0 * s * (2.0 - 2.0 * s * s).powf(alpha) * (2.0 * s * s).powf(beta) * (2.0 * s * s - 1.0).powi(d as i32);
            0.5 * w * g
        })
        .sum()
}

/// A bound on `∫ |x|^d w` used to scale errors of vanishing moments.
fn abs_scale(kind: FamilyKind, d: usize) -> f64 {
    match kind {
        FamilyKind::HermiteFn => gamma((d as f64 + 1.0) / 2.0),
        FamilyKind::LaguerreFn => weighted_monomial(kind, d),
        _ => {
            // on [-1, 1], |x|^d <= x^(d-1) for odd d
            let e = if d % 2 == 1 { d - 1 } else { d };
            weighted_monomial(kind, e).abs()
        }
    }
}

/// Largest relative error of the n-point rule on `x^d`, `d < 2n`.
pub fn quadrature_exactness_error(family: &BasisFamily, n: usize) -> f64 {
    let rule = gauss_rule(family, n).unwrap();
    let kind = family.kind();
    (0..2 * n)
        .map(|d| {
            // w_i x_i^d in log form: x^159 overflows on the far Laguerre nodes
            let q: f64 = rule
                .nodes()
                .iter()
                .zip(rule.weights())
                .map(|(&x, &w)| {
                    let sign = if x < 0.0 && d % 2 == 1 { -1.0 } else { 1.0 };
                    if x == 0.0 {
                        return if d == 0 { w } else { 0.0 };
                    }
                    sign * (w.ln() + d as f64 * x.abs().ln()).exp()
                })
                .sum();
            let exact = weighted_monomial(kind, d);
            (q - exact).abs() / abs_scale(kind, d).max(exact.abs())
        })
        .fold(0.0, f64::max)
}

fn gram_residual(nodal: &NodalBasis) -> f64 {
    let v = nodal.values();
    let w = DMatrix::from_diagonal(&DVector::from_column_slice(nodal.proj_weights()));
    let g = v.transpose() * w * v;
    let h = nodal.norms();
    let mut worst: f64 = 0.0;
    for j in 0..g.nrows() {
        for k in 0..g.ncols() {
            let target = if j == k { 1.0 } else { 0.0 };
            worst = worst.max((g[(j, k)] / (h[j] * h[k]).sqrt() - target).abs());
        }
    }
    worst
}

/// Max entry of `G - I` for the normalized Gram matrix of members 0..=n.
pub fn orthonormality_residual(family: &BasisFamily, n: usize) -> f64 {
    let fam = family.with_degree(n);
    let rule = gauss_rule(&fam, n + 1).unwrap();
    gram_residual(&NodalBasis::from_family(&fam, &rule).unwrap())
}

/// Same, for the composite Dirichlet basis built on Legendre degree n.
pub fn composite_orthonormality_residual(n: usize) -> f64 {
    let parent = BasisFamily::legendre(n);
    let cb = composite_dirichlet(&parent, n).unwrap();
    let rule = gauss_rule(&parent, n + 2).unwrap();
    gram_residual(&cb.nodal(&rule).unwrap())
}

pub fn random_vec(rng: &mut StdRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

pub struct ProjectionCase {
    pub nodal: NodalBasis,
    pub co: ConstraintOperator,
}

pub fn projection_case(family: &BasisFamily, modes: usize, q: usize) -> ProjectionCase {
    let fam = family.with_degree(modes - 1);
    let rule = gauss_rule(&fam, 80).unwrap();
    let nodal = NodalBasis::from_family(&fam, &rule).unwrap();
    let powers: Vec<usize> = (0..=q).collect();
    let co = ConstraintOperator::new(nodal.id(), &nodal.moment_matrix(q), nodal.norms(), &powers).unwrap();
    ProjectionCase { nodal, co }
}

/// For `f = sum_k r_k P_k / ||P_k||` in the span: conservative projection
/// reproduces the coefficients, and applying it twice changes nothing.
/// Returns both residuals in orthonormal coordinates, relative to `max |r|`.
pub fn conservative_exactness(case: &ProjectionCase, r: &[f64]) -> (f64, f64) {
    let scale: Vec<f64> = case.nodal.norms().iter().map(|h| h.sqrt()).collect();
    let c: Vec<f64> = r.iter().zip(&scale).map(|(r, s)| r / s).collect();
    let f = case.nodal.synthesize(&c).unwrap();
    let p = case.nodal.conservative_project_values(&f, &case.co).unwrap();
    let f2 = case.nodal.synthesize(&p.c).unwrap();
    let p2 = case.nodal.conservative_project_values(&f2, &case.co).unwrap();
    let ortho = |v: &[f64]| -> Vec<f64> { v.iter().zip(&scale).map(|(v, s)| v * s).collect() };
    let denom = max_abs(r).max(1e-300);
    (max_abs_diff(&ortho(&p.c), r) / denom, max_abs_diff(&ortho(&p2.c), &ortho(&p.c)) / denom)
}

/// Moments of `A^c c` relative to the floating-point scale
/// `sum_k |Phi_qk| |(A c)_k|`.
pub fn annihilation_residual(op_std: &GalerkinOperator, op_con: &GalerkinOperator, co: &ConstraintOperator, c: &[f64]) -> f64 {
    let phi = co.moment_rows();
    let ac = op_con.apply(c).unwrap();
    let a = op_std.apply(c).unwrap();
    let m = phi * DVector::from_column_slice(&ac);
    let scale = phi.abs() * DVector::from_iterator(a.len(), a.iter().map(|x| x.abs()));
    m.iter().zip(scale.iter()).map(|(x, s)| x.abs() / s.max(1e-300)).fold(0.0, f64::max)
}

pub fn pde_config(model: Model) -> PdeConfig {
    PdeConfig::new(model, vec![8], false)
}

pub fn model_annihilation(model: Model, modes: usize, samples: usize, seed: u64) -> f64 {
    let s = setup(&pde_config(model), modes).unwrap();
    let mut rng = StdRng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let c = random_vec(&mut rng, s.op_std.dim());
            annihilation_residual(&s.op_std, &s.op_con, &s.constraint, &c)
        })
        .fold(0.0, f64::max)
}

/// Observed RK4 order from runs at dt and dt/2 against a dt/64 reference.
pub fn rk4_observed_order(op: &GalerkinOperator, c0: &SpectralCoeffs, t: f64, dt: f64) -> f64 {
    let run = |h: f64| integrate(op, c0, t, h, usize::MAX, None).unwrap().last().c.clone();
    let reference = run(dt / 64.0);
    let e1 = max_abs_diff(&run(dt), &reference);
    let e2 = max_abs_diff(&run(dt / 2.0), &reference);
    (e1 / e2).log2()
}

/// Samples feasible perturbations `delta` (zero moment change) around the
/// conservative projection. Returns the largest first-order term
/// `<h (c^c - c), delta>` relative to its floating-point scale
/// `|h (|c^c| + |c|)| |delta|`, and the most negative relative objective
/// change; both vanish at a constrained minimizer.
pub fn kkt_sampling(case: &ProjectionCase, f: &[f64], samples: usize, seed: u64) -> (f64, f64) {
    let std = case.nodal.project_values(f).unwrap();
    let con = case.nodal.conservative_project_values(f, &case.co).unwrap();
    let h = case.nodal.norms();
    let objective =
        |c: &[f64]| -> f64 { c.iter().zip(&std.c).zip(h).map(|((a, b), hk)| hk * (a - b) * (a - b)).sum() };
    let grad: Vec<f64> = con.c.iter().zip(&std.c).zip(h).map(|((a, b), hk)| hk * (a - b)).collect();
    let gnorm = con.c.iter().zip(&std.c).zip(h).map(|((a, b), hk)| (hk * (a.abs() + b.abs())).powi(2)).sum::<f64>().sqrt().max(1e-300);
    let base = objective(&con.c);
    let mut rng = StdRng::seed_from_u64(seed);
    let mut first_order: f64 = 0.0;
    let mut worst_change = f64::INFINITY;
    for _ in 0..samples {
        let z = random_vec(&mut rng, con.c.len());
        let m = case.co.moments(&z).unwrap();
        let delta = case.co.correct(&z, &vec![0.0; m.len()]).unwrap();
        let dnorm = delta.iter().map(|d| d * d).sum::<f64>().sqrt().max(1e-300);
        let dot: f64 = grad.iter().zip(&delta).map(|(g, d)| g * d).sum();
        first_order = first_order.max(dot.abs() / (gnorm * dnorm));
        let eps = 1e-3 * max_abs(&con.c).max(1e-3) / dnorm;
        let moved: Vec<f64> = con.c.iter().zip(&delta).map(|(c, d)| c + eps * d).collect();
        worst_change = worst_change.min((objective(&moved) - base) / base.max(1e-300));
    }
    (first_order, worst_change)
}

/// Plain moments `∫ x^q P_k` by a rule that is exact for each family: a
/// Legendre rule on bounded domains, and for the weighted families their own
/// rule after the substitution that turns `P_k x^q` into polynomial times weight.
/// The second matrix holds the sums of absolute terms, the rounding scale.
pub fn exact_moment_matrix(family: &BasisFamily, q_max: usize) -> (MomentMatrix, DMatrix<f64>) {
    let n = family.max_degree();
    let points = (n + q_max) / 2 + 2;
    match family.kind() {
        FamilyKind::HermiteFn | FamilyKind::LaguerreFn => {
            let rule = gauss_rule(family, points).unwrap();
            // Hermite: x = sqrt(2) y; Laguerre: x = 2 y
            let c = if family.kind() == FamilyKind::HermiteFn { 2f64.sqrt() } else { 2.0 };
            let mut mu = DMatrix::zeros(q_max + 1, n + 1);
            let mut size = DMatrix::zeros(q_max + 1, n + 1);
            for (&y, &w) in rule.nodes().iter().zip(rule.weights()) {
                let x = c * y;
                let p = family.eval_upto(x, n).unwrap();
                let wy = family.weight(y).unwrap();
                for q in 0..=q_max {
                    for k in 0..=n {
                        let t = w * c * x.powi(q as i32) * p[k] / wy;
                        mu[(q, k)] += t;
                        size[(q, k)] += t.abs();
                    }
                }
            }
            (MomentMatrix { mu }, size)
        }
        _ => {
            let rule = gauss_rule(&BasisFamily::legendre(0), points).unwrap();
            let mm = moment_matrix(family, q_max, n, MomentMethod::Quadrature(&rule)).unwrap();
            let size = DMatrix::from_element(q_max + 1, n + 1, 1.0);
            (mm, size)
        }
    }
}
