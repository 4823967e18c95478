//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Run with `cargo test -p conspec-cli --test acceptance`.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::process::ExitCode;

use common::*;
use conspec::basis::{BasisFamily, FamilyKind};
use conspec::experiments::{run_approximation, run_pde, setup, ApproxConfig, ErrorTable, Model, PdeConfig, PdeReport, TestFunctionId, TrajectoryRow};
use conspec::moments::{moment_matrix, MomentMethod};
use conspec::projection::conditioning;
use rand::rngs::StdRng;
use rand::SeedableRng;

/// Collects sub-checks for one criterion.
#[derive(Default)]
struct Checks {
    lines: Vec<(bool, String)>,
}

impl Checks {
    fn check(&mut self, ok: bool, msg: impl Into<String>) {
        self.lines.push((ok, msg.into()));
    }

    fn passed(&self) -> bool {
        self.lines.iter().all(|(ok, _)| *ok)
    }
}

/// Reference values: two-sided factor `tol` in the spectral regime; at the
/// roundoff floor (below 1e-11) only an upper bound of
/// `tol * max(reference, 1e-12)`.
fn matches_reference(ours: f64, reference: f64, tol: f64) -> bool {
    if reference < 1e-11 {
        ours <= tol * reference.max(1e-12)
    } else {
        ours <= tol * reference && ours >= reference / tol
    }
}

fn approx(test: TestFunctionId, basis: FamilyKind, modes: &[usize], q: usize) -> ErrorTable {
    run_approximation(&ApproxConfig::new(test, basis, modes.to_vec(), q)).expect("approximation run")
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, f64::max)
}

fn golden_l2(c: &mut Checks, table: &ErrorTable, reference: &[(usize, f64)], tol: f64) {
    for &(n, p) in reference {
        let ours = table.row(n).unwrap().err_l2_std;
        c.check(matches_reference(ours, p, tol), format!("N={n} std L2 {ours:.3e} vs reference {p:.3e} (factor {tol})"));
    }
}

fn criterion_1() -> Checks {
    let mut c = Checks::default();
    let t = approx(TestFunctionId::BoundedOsc, FamilyKind::Legendre, &[8, 16, 32], 3);
    golden_l2(&mut c, &t, &[(8, 9.004e-3), (16, 2.197e-5), (32, 1.050e-13)], 5.0);
    let worst = max_of(t.rows.iter().flat_map(|r| r.err_m_std.clone()));
    c.check(worst <= 1e-12, format!("unconstrained moment errors max {worst:.2e} <= 1e-12"));
    c
}

fn criterion_2() -> Checks {
    let mut c = Checks::default();
    let cases = [
        (FamilyKind::Chebyshev1, [1.034e-1, 2.477e-5, 2.094e-14]),
        (FamilyKind::Chebyshev2, [1.081e-1, 2.701e-5, 1.132e-14]),
        (FamilyKind::Jacobi { alpha: 1.0, beta: -0.5 }, [2.738e-1, 8.873e-5, 2.237e-12]),
    ];
    for (kind, reference) in cases {
        let t = approx(TestFunctionId::BoundedOsc, kind, &[8, 16, 32], 3);
        let labelled: Vec<(usize, f64)> = [8, 16, 32].into_iter().zip(reference).collect();
        let mut sub = Checks::default();
        golden_l2(&mut sub, &t, &labelled, 5.0);
        for (ok, msg) in sub.lines {
            c.check(ok, format!("{kind}: {msg}"));
        }
        let worst = max_of(t.rows.iter().flat_map(|r| r.err_m_con.clone()));
        c.check(worst <= 1e-12, format!("{kind}: constrained moment errors max {worst:.2e} <= 1e-12"));
        for r in &t.rows {
            let at_floor = r.err_l2_std <= 1e-12 && r.err_l2_con <= 1e-12;
            let ratio = r.err_l2_con / r.err_l2_std;
            c.check(
                at_floor || (0.5..=2.0).contains(&ratio),
                format!("{kind}: N={} con/std L2 ratio {ratio:.3}", r.n),
            );
        }
    }
    c
}

fn criterion_3() -> Checks {
    let mut c = Checks::default();
    let t = approx(TestFunctionId::HermiteBimodal, FamilyKind::HermiteFn, &[8, 16, 32], 3);
    let e32 = t.row(32).unwrap().err_l2_std;
    c.check(e32 <= 5e-8, format!("N=32 std L2 {e32:.3e} <= 5e-8"));
    let worst = max_of(t.rows.iter().flat_map(|r| r.err_m_con.clone()));
    c.check(worst <= 1e-12, format!("constrained moment errors max {worst:.2e} <= 1e-12"));
    let e8 = t.row(8).unwrap().err_l2_con;
    c.check(matches_reference(e8, 4.324e-1, 3.0), format!("N=8 con L2 {e8:.3e} vs 4.324e-1 (factor 3)"));
    c
}

fn criterion_4() -> Checks {
    let mut c = Checks::default();
    let t = approx(TestFunctionId::LaguerrePoly, FamilyKind::LaguerreFn, &[8, 16, 32], 3);
    let e32 = t.row(32).unwrap().err_l2_std;
    c.check(e32 <= 1e-9, format!("N=32 std L2 {e32:.3e} <= 1e-9"));
    let worst = max_of(t.rows.iter().flat_map(|r| r.err_m_con.clone()));
    c.check(worst <= 1e-11, format!("constrained moment errors max {worst:.2e} <= 1e-11"));
    c
}

fn criterion_5() -> Checks {
    let mut c = Checks::default();
    // mass constraint only: Q = 3 makes M numerically singular at 64 Laguerre modes
    let t = approx(TestFunctionId::Lognormal, FamilyKind::LaguerreFn, &[16, 32, 64], 0);
    let e: Vec<f64> = t.rows.iter().map(|r| r.err_l2_std).collect();
    let slope = |a: f64, b: f64| (a / b).log2();
    let (s1, s2) = (slope(e[0], e[1]), slope(e[1], e[2]));
    // exponential decay doubles the local log-log slope with each doubling of N
    c.check(s2 / s1 < 2.0, format!("std local slopes {s1:.2}, {s2:.2}: ratio {:.2} < 2 (algebraic)", s2 / s1));
    let m0 = max_of(t.rows.iter().map(|r| r.err_m_con[0]));
    c.check(m0 <= 1e-12, format!("constrained m0 error max {m0:.2e} <= 1e-12"));
    let order = t.order_fit.l2_con.unwrap_or(f64::NAN);
    c.check(order >= 4.0, format!("constrained L2 observed order {order:.2} >= 4"));
    c
}

fn fp_config(modes: Vec<usize>, asymmetric: bool, t_final: f64) -> PdeConfig {
    let mut cfg = PdeConfig::new(Model::Fp, modes, asymmetric);
    cfg.t_final = t_final;
    cfg
}

fn pde(cfg: &PdeConfig) -> PdeReport {
    run_pde(cfg).expect("pde run")
}

fn criterion_6() -> Checks {
    let mut c = Checks::default();
    let r = pde(&fp_config(vec![8, 12, 16, 24], false, 0.0));
    let t = &r.accuracy;
    for (a, b) in [(8, 16), (12, 24)] {
        let (ra, rb) = (t.row(a).unwrap(), t.row(b).unwrap());
        let gs = ra.err_l2_std / rb.err_l2_std;
        let gc = ra.err_l2_con / rb.err_l2_con;
        c.check(gs > 10.0, format!("std error reduction N={a}->{b}: {gs:.1}x > 10"));
        c.check(gc > 10.0, format!("con error reduction N={a}->{b}: {gc:.1}x > 10"));
    }
    let m1 = max_of(t.rows.iter().flat_map(|r| [r.err_m_std[1], r.err_m_con[1]]));
    c.check(m1 <= 1e-12, format!("mean-velocity error max {m1:.2e} <= 1e-12"));
    c
}

fn rows_for(r: &PdeReport, n: usize) -> &[TrajectoryRow] {
    &r.trajectories.iter().find(|t| t.n == n).unwrap().rows
}

fn criterion_7_8(sym: &PdeReport) -> (Checks, Checks) {
    let mut c7 = Checks::default();
    for tr in &sym.trajectories {
        let worst = max_of(tr.rows.iter().flat_map(|r| [r.drift_m0_con, r.drift_m1_con, r.drift_m2_con]));
        c7.check(worst <= 1e-10, format!("N={} constrained drift max {worst:.2e} <= 1e-10", tr.n));
    }
    let last = *rows_for(sym, 8).last().unwrap();
    for (name, s, k) in [("mass", last.drift_m0_std, last.drift_m0_con), ("temperature", last.drift_m2_std, last.drift_m2_con)] {
        let ratio = s / k.max(f64::MIN_POSITIVE);
        c7.check(ratio >= 1e3, format!("N=8 t=5 {name} drift std {s:.3e} / con {k:.3e} >= 1e3"));
    }
    // symmetric data keep the mean velocity at zero in both runs; use the shifted datum
    let asym = pde(&fp_config(vec![8], true, 5.0));
    let a = *rows_for(&asym, 8).last().unwrap();
    let ratio = a.drift_m1_std / a.drift_m1_con.max(f64::MIN_POSITIVE);
    c7.check(ratio >= 1e3, format!("N=8 t=5 asymmetric mean-velocity drift std {:.3e} / con {:.3e} >= 1e3", a.drift_m1_std, a.drift_m1_con));

    let mut c8 = Checks::default();
    let mut plateaus = Vec::new();
    for n in [8, 16, 32] {
        let rows = rows_for(sym, n);
        let d: Vec<f64> = rows.iter().map(|r| r.dist_steady_con).collect();
        let after = rows.iter().position(|r| r.t >= 1.0).unwrap();
        let rises = d[after..].windows(2).filter(|w| w[1] > w[0] * (1.0 + 1e-9)).count();
        c8.check(rises == 0, format!("N={n} constrained distance non-increasing on [1,5] ({rises} rises)"));
        let at4 = d[rows.iter().position(|r| r.t >= 4.0).unwrap()];
        let end = *d.last().unwrap();
        c8.check((at4 - end).abs() <= 1e-3 * end, format!("N={n} plateau {end:.4e} (change on [4,5] {:.1e})", (at4 - end).abs()));
        plateaus.push(end);
    }
    c8.check(plateaus.windows(2).all(|w| w[1] < w[0]), format!("plateaus decrease with N: {plateaus:?}"));
    let d8: Vec<f64> = rows_for(sym, 8).iter().map(|r| r.dist_steady_std).collect();
    let (imin, dmin) = d8.iter().copied().enumerate().fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let end = *d8.last().unwrap();
    c8.check(
        imin > 0 && imin < d8.len() - 1 && end > 1.1 * dmin,
        format!("N=8 std distance minimum {dmin:.4} at t={:.2}, then {end:.4} at t=5", rows_for(sym, 8)[imin].t),
    );
    (c7, c8)
}

fn criterion_9() -> Checks {
    let mut c = Checks::default();
    let r = pde(&PdeConfig::new(Model::Opinion, vec![12, 18, 24], false));
    let mut plateaus = Vec::new();
    let mut std_mass = Vec::new();
    for tr in &r.trajectories {
        let worst = max_of(tr.rows.iter().map(|r| r.drift_m0_con));
        c.check(worst <= 1e-12, format!("N={} constrained mass drift max {worst:.2e} <= 1e-12", tr.n));
        let last = tr.rows.last().unwrap();
        plateaus.push(last.dist_steady_con);
        std_mass.push(last.drift_m0_std);
    }
    c.check(plateaus.windows(2).all(|w| w[1] < w[0]), format!("distance at t=5 decreases with N: {plateaus:?}"));
    c.check(std_mass.iter().all(|&m| m > 1e-12), format!("std mass drift at t=5 nonzero: {std_mass:?}"));
    let spread = std_mass[0] / std_mass[std_mass.len() - 1];
    c.check(
        std_mass.windows(2).all(|w| w[1] < w[0]) && spread >= 100.0,
        format!("std mass drift decreasing in N, N=12/N=24 ratio {spread:.0} >= 100"),
    );
    c
}

fn criterion_10() -> Checks {
    let mut c = Checks::default();
    let mut cfg = PdeConfig::new(Model::Callcenter, vec![8, 16, 32], false);
    cfg.t_final = 20.0;
    let r = pde(&cfg);
    for tr in &r.trajectories {
        let n = tr.n;
        let first = tr.rows[0];
        let at5 = tr.rows.iter().find(|r| r.t >= 5.0).unwrap();
        let norm_con: Vec<f64> = tr.rows.iter().map(|r| r.dist_steady_con).collect();
        let monotone = norm_con.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
        c.check(
            monotone && at5.dist_steady_con < 0.1 * first.dist_steady_con,
            format!("N={n} |h~| constrained {:.3e} -> {:.3e} at t=5 (monotone: {monotone})", first.dist_steady_con, at5.dist_steady_con),
        );
        let worst = max_of(tr.rows.iter().map(|r| r.drift_m0_con));
        c.check(worst <= 1e-12, format!("N={n} constrained mass drift max {worst:.2e} <= 1e-12"));
        let d: Vec<f64> = tr.rows.iter().map(|r| r.drift_m0_std).collect();
        let (ipk, peak) = d.iter().copied().enumerate().fold((0, 0.0), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        let end = *d.last().unwrap();
        let decays = d[ipk..].windows(2).all(|w| w[1] <= w[0]);
        c.check(
            decays && end < 0.8 * peak,
            format!("N={n} std mass drift peaks {peak:.3e} at t={:.2}, decays to {end:.3e} at t=20", tr.rows[ipk].t),
        );
    }
    c
}

fn criterion_11() -> Checks {
    let mut c = Checks::default();
    let mut quad: f64 = 0.0;
    for fam in classical_families(0) {
        for n in (1..=12).chain([20, 40, 80]) {
            quad = quad.max(quadrature_exactness_error(&fam, n));
        }
    }
    c.check(quad <= 1e-11, format!("quadrature exactness, degree <= 2n-1: max rel error {quad:.2e} <= 1e-11"));

    let ortho = max_of(classical_families(0).iter().flat_map(|f| (0..=40).map(move |n| orthonormality_residual(f, n))));
    c.check(ortho <= 1e-10, format!("orthonormality residual N<=40: {ortho:.2e} <= 1e-10"));
    let comp = max_of((2..=24).map(composite_orthonormality_residual));
    c.check(comp <= 1e-9, format!("composite orthonormality residual N<=24: {comp:.2e} <= 1e-9"));

    let mut rng = StdRng::seed_from_u64(11);
    let (mut exact, mut idem): (f64, f64) = (0.0, 0.0);
    for fam in classical_families(0) {
        for modes in [6, 12, 24] {
            let case = projection_case(&fam, modes, 3);
            for _ in 0..5 {
                let (e, i) = conservative_exactness(&case, &random_vec(&mut rng, modes));
                exact = exact.max(e);
                idem = idem.max(i);
            }
        }
    }
    c.check(exact <= 1e-12 && idem <= 1e-12, format!("conservative projection exactness {exact:.2e}, idempotence {idem:.2e} <= 1e-12"));

    for (model, modes) in [(Model::Fp, 16), (Model::Opinion, 16), (Model::Callcenter, 16)] {
        let r = model_annihilation(model, modes, 100, 7);
        c.check(r <= 1e-12, format!("{model}: constrained operator moment annihilation, 100 vectors, {r:.2e} <= 1e-12"));
    }

    let s = setup(&pde_config(Model::Fp), 8).unwrap();
    let order = rk4_observed_order(&s.op_con, &s.c0_con, 0.5, 0.02);
    c.check(order >= 3.8, format!("RK4 observed order {order:.3} >= 3.8"));

    let mut kkt: (f64, f64) = (0.0, 0.0);
    for fam in [BasisFamily::legendre(0), BasisFamily::chebyshev1(0), BasisFamily::hermite_fn(0), BasisFamily::laguerre_fn(0)] {
        let case = projection_case(&fam, 12, 3);
        let test = match fam.kind() {
            FamilyKind::HermiteFn => TestFunctionId::HermiteBimodal,
            FamilyKind::LaguerreFn => TestFunctionId::LaguerrePoly,
            _ => TestFunctionId::BoundedOsc,
        };
        let f = case.nodal.sample(|x| test.eval(x)).unwrap();
        let (g, worst) = kkt_sampling(&case, &f, 200, 3);
        kkt.0 = kkt.0.max(g);
        kkt.1 = kkt.1.min(worst);
    }
    c.check(kkt.0 <= 1e-10 && kkt.1 >= -1e-12, format!("KKT sampling: first-order term {:.2e}, min objective change {:.2e}", kkt.0, kkt.1));
    c
}

fn criterion_12() -> Checks {
    let mut c = Checks::default();
    let t = approx(TestFunctionId::BoundedOsc, FamilyKind::Chebyshev2, &[16, 24, 32, 40, 48, 56, 64], 3);
    let rho: Vec<f64> = t.conditioning.iter().map(|r| r.spectral_radius_m_inv).collect();
    let spread = max_of(rho.iter().copied()) / rho.iter().copied().fold(f64::INFINITY, f64::min);
    c.check(
        rho.iter().all(|r| r.is_finite()) && spread < 10.0,
        format!("Chebyshev2 Q=3: rho(M^-1) over N=16..64 spread {spread:.3}x < 10"),
    );
    let powers: Vec<usize> = (0..=8).collect();
    let cond_at = |n: usize| {
        let fam = BasisFamily::chebyshev2(n);
        let mm = moment_matrix(&fam, 8, n, MomentMethod::Recursion).unwrap();
        conditioning(&mm, &fam.norms_sq_upto(n).unwrap(), &powers).unwrap().cond
    };
    let (c4, c32) = (cond_at(4), cond_at(32));
    c.check(c4 > c32, format!("Q=8: cond(M) at N=4 {c4:.3e} > at N=32 {c32:.3e}"));
    c
}

fn main() -> ExitCode {
    let sym = pde(&fp_config(vec![8, 16, 32], false, 5.0));
    let (c7, c8) = criterion_7_8(&sym);
    let results: Vec<(usize, &str, Checks)> = vec![
        (1, "Legendre table", criterion_1()),
        (2, "Chebyshev and Jacobi tables", criterion_2()),
        (3, "Hermite function table", criterion_3()),
        (4, "Laguerre function table", criterion_4()),
        (5, "lognormal algebraic convergence", criterion_5()),
        (6, "FP spectral convergence", criterion_6()),
        (7, "FP long-time conservation", c7),
        (8, "FP long-time behaviour", c8),
        (9, "opinion model", criterion_9()),
        (10, "call-center micro-macro", criterion_10()),
        (11, "property suites", criterion_11()),
        (12, "conditioning diagnostics", criterion_12()),
    ];
    let mut failed = 0;
    for (id, name, checks) in &results {
        let verdict = if checks.passed() { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {id:>2}: {name}");
        for (ok, msg) in &checks.lines {
            println!("     {} {msg}", if *ok { "ok  " } else { "FAIL" });
        }
        if !checks.passed() {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
