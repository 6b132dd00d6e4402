//! Inequality verification engine: weighted Hardy inequalities with their
//! explicit constants, the elliptic explicit-constant estimates for the
//! eta-problem, the localized v_r estimate, the estimate-chain monitors,
//! the geometric-iteration bound, exponential decay envelopes, and the
//! discrete Poincare constant.
//!
//! Inequalities whose constants are explicit are asserted (pass/fail with
//! a documented slack). Inequalities involving unspecified generic
//! constants or generic increasing functions are emitted with
//! `asserted = false`: every explicitly defined side term is tabulated
//! with its stated coefficient, and refinement stability — not pass/fail
//! against an invented constant — is what the tests check.

use crate::elliptic::{self, OpKind};
use crate::error::{Error, Result};
use crate::fields::{Ramp, ScalarField};
use crate::grid::Grid;
use crate::monitors::{self, ids, MonitorSeries};
use crate::quad::{simpson_doubling, ORACLE_TOL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::sync::Arc;

/// One checked (or measured) inequality.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    pub ratio: f64,
    pub pass: bool,
    pub slack: f64,
    /// false for measured-only inequalities (unspecified constants).
    pub asserted: bool,
    /// individually tabulated side terms (name, value).
    pub terms: Vec<(String, f64)>,
}

impl EstimateReport {
    pub fn new(id: &str, lhs: f64, rhs: f64, constant: f64, slack: f64, asserted: bool) -> Self {
        let (ratio, pass) = if rhs == 0.0 && lhs == 0.0 {
            (0.0, true)
        } else {
            (lhs / rhs, lhs <= rhs * (1.0 + slack))
        };
        EstimateReport {
            id: id.to_string(),
            lhs,
            rhs,
            constant,
            ratio,
            pass,
            slack,
            asserted,
            terms: Vec::new(),
        }
    }

    pub fn with_terms(mut self, terms: Vec<(String, f64)>) -> Self {
        self.terms = terms;
        self
    }
}

// ---------------------------------------------------------------------------
// Hardy inequalities
// ---------------------------------------------------------------------------

/// A smooth radial profile with its analytic derivative, plus the support
/// data the Hardy checks need: the derivative vanishes on (0, eps] and
/// beyond support_hi.
pub struct RadialProfile {
    pub f: Box<dyn Fn(f64) -> f64>,
    pub df: Box<dyn Fn(f64) -> f64>,
    pub eps: f64,
    pub support_hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HardyVariant {
    /// ||f||_{L_{p,-mu}} <= 1/|mu - 2/p| ||f_,r||_{L_{p,1-mu}} on (0, R);
    /// f(0) = 0 when mu > 2/p, f(R) = 0 when mu < 2/p.
    H2_11,
    /// mu > 2/p with f(0) != 0: the same bound for f - f(0).
    H2_12,
    /// 1-D (plain dx) on (eps, inf): ||x^{-beta} u|| <= 1/(beta - 1/p) ||x^{1-beta} u_,x||
    /// with u_,x = 0 on (0, eps], beta > 1/p.
    H2_16,
    /// (eps, inf) with dx = r dr: ||r^{-alpha} u|| <= 1/(alpha - 2/p) ||r^{1-alpha} u_,r||
    /// with u = 0 and u_,r = 0 on (0, eps], alpha > 2/p.
    H2_18,
}

impl HardyVariant {
    pub fn id(&self) -> &'static str {
        match self {
            HardyVariant::H2_11 => "hardy_2_11",
            HardyVariant::H2_12 => "hardy_2_12",
            HardyVariant::H2_16 => "hardy_2_16",
            HardyVariant::H2_18 => "hardy_2_18",
        }
    }
}

/// Quadrature slack on the Hardy ratio.
pub const HARDY_SLACK: f64 = 1e-6;

fn profile_scale(prof: &RadialProfile, lo: f64, hi: f64) -> f64 {
    let mut m = 0.0_f64;
    for k in 0..=64 {
        let r = lo + (hi - lo) * k as f64 / 64.0;
        m = m.max((prof.f)(r).abs());
    }
    m
}

/// Verify one Hardy inequality with the exact constant scaled by
/// `constant_scale` (1.0 for the real check; the verify CLI exposes the
/// scale as a mutation-test hook).
pub fn hardy_check_scaled(
    prof: &RadialProfile,
    p: f64,
    mu: f64,
    variant: HardyVariant,
    constant_scale: f64,
) -> Result<EstimateReport> {
    if p <= 1.0 {
        return Err(Error::Hypothesis(format!(
            "Hardy checks need p > 1, got {p}"
        )));
    }
    let two_over_p = 2.0 / p;
    let one_over_p = 1.0 / p;
    let scale = profile_scale(prof, prof.eps, prof.support_hi).max(1e-300);
    let vanish_tol = 1e-9 * scale;

    // (constant, lo, hi, lhs weight exponent, rhs weight exponent,
    //  measure exponent: 0 for dx, 1 for r dr, tail weight exponent)
    struct Setup {
        constant: f64,
        lo: f64,
        hi: f64,
        lhs_w: f64,
        rhs_w: f64,
        measure: f64,
        tail: bool,
    }
    let setup = match variant {
        HardyVariant::H2_11 | HardyVariant::H2_12 => {
            if (mu - two_over_p).abs() < 1e-9 {
                return Err(Error::Hypothesis(format!(
                    "hardy_2_11 requires mu != 2/p (mu = {mu}, 2/p = {two_over_p})"
                )));
            }
            if variant == HardyVariant::H2_12 && mu <= two_over_p {
                return Err(Error::Hypothesis("hardy_2_12 requires mu > 2/p".into()));
            }
            if variant == HardyVariant::H2_11 {
                if mu > two_over_p {
                    let v = (prof.f)(1e-7 * prof.support_hi).abs();
                    if v > (1e-6 * scale).max(vanish_tol) {
                        return Err(Error::Hypothesis(format!(
                            "hardy_2_11 with mu > 2/p requires f(0) = 0, got |f(0+)| = {v:.3e}"
                        )));
                    }
                } else {
                    let v = (prof.f)(prof.support_hi).abs();
                    if v > (1e-6 * scale).max(vanish_tol) {
                        return Err(Error::Hypothesis(format!(
                            "hardy_2_11 with mu < 2/p requires f(R) = 0, got |f(R)| = {v:.3e}"
                        )));
                    }
                }
            }
            Setup {
                constant: 1.0 / (mu - two_over_p).abs(),
                lo: 0.0,
                hi: prof.support_hi,
                lhs_w: -mu,
                rhs_w: 1.0 - mu,
                measure: 1.0,
                tail: false,
            }
        }
        HardyVariant::H2_16 => {
            if mu <= one_over_p {
                return Err(Error::Hypothesis(format!(
                    "hardy_2_16 requires beta > 1/p (beta = {mu}, 1/p = {one_over_p})"
                )));
            }
            for k in 1..=8 {
                let r = prof.eps * k as f64 / 8.0;
                if (prof.df)(r).abs() > vanish_tol {
                    return Err(Error::Hypothesis(
                        "hardy_2_16 requires f = 0 on (0, eps]".into(),
                    ));
                }
            }
            Setup {
                constant: 1.0 / (mu - one_over_p),
                lo: prof.eps,
                hi: prof.support_hi,
                lhs_w: -mu,
                rhs_w: 1.0 - mu,
                measure: 0.0,
                tail: true,
            }
        }
        HardyVariant::H2_18 => {
            if mu <= two_over_p {
                return Err(Error::Hypothesis(format!(
                    "hardy_2_18 requires alpha > 2/p (alpha = {mu}, 2/p = {two_over_p})"
                )));
            }
            for k in 1..=8 {
                let r = prof.eps * k as f64 / 8.0;
                if (prof.df)(r).abs() > vanish_tol || (prof.f)(r).abs() > vanish_tol {
                    return Err(Error::Hypothesis(
                        "hardy_2_18 requires u = 0 and u_,r = 0 on (0, eps]".into(),
                    ));
                }
            }
            Setup {
                constant: 1.0 / (mu - two_over_p),
                lo: prof.eps,
                hi: prof.support_hi,
                lhs_w: -mu,
                rhs_w: 1.0 - mu,
                measure: 1.0,
                tail: true,
            }
        }
    };

    let f = &prof.f;
    let df = &prof.df;
    let f0 = if variant == HardyVariant::H2_12 {
        (prof.f)(0.0)
    } else {
        0.0
    };
    let lhs_integrand =
        move |r: f64| (f(r) - f0).abs().powf(p) * r.powf(setup.lhs_w * p + setup.measure);
    let rhs_integrand = move |r: f64| df(r).abs().powf(p) * r.powf(setup.rhs_w * p + setup.measure);
    // Weighted power integrands are stiff in the original variable:
    // integrals reaching r = 0 get the substitution r = R s^4 (regularizes
    // the integrable endpoint powers), and integrals on (eps, R) use the
    // logarithmic substitution r = eps e^y (power laws become smooth
    // exponentials).
    let integrate = |phi: &dyn Fn(f64) -> f64| -> Result<f64> {
        if setup.lo > 0.0 {
            let lo = setup.lo;
            let y_max = (setup.hi / lo).ln();
            let sub = move |y: f64| {
                let r = lo * y.exp();
                phi(r) * r
            };
            simpson_doubling(&sub, 0.0, y_max, ORACLE_TOL)
        } else {
            let hi = setup.hi;
            let sub = move |s: f64| {
                if s <= 0.0 {
                    return 0.0;
                }
                let r = hi * s.powi(4);
                phi(r) * 4.0 * hi * s.powi(3)
            };
            simpson_doubling(&sub, 0.0, 1.0, ORACLE_TOL)
        }
    };
    let mut lhs_p = integrate(&lhs_integrand)?;
    let rhs_p = integrate(&rhs_integrand)?;

    // analytic tail beyond the derivative support (f constant there)
    if setup.tail {
        let f_end = (prof.f)(setup.hi) - f0;
        if f_end != 0.0 {
            let expo = setup.lhs_w * p + setup.measure;
            if expo >= -1.0 {
                return Err(Error::Hypothesis(
                    "profile tail not integrable for these exponents".into(),
                ));
            }
            lhs_p += f_end.abs().powf(p) * setup.hi.powf(expo + 1.0) / (-(expo + 1.0));
        }
    }

    let lhs = lhs_p.powf(1.0 / p);
    let rhs = constant_scale * setup.constant * rhs_p.powf(1.0 / p);
    Ok(EstimateReport::new(
        variant.id(),
        lhs,
        rhs,
        constant_scale * setup.constant,
        HARDY_SLACK,
        true,
    ))
}

/// Verify one Hardy inequality with the sharp constant.
pub fn hardy_check(
    prof: &RadialProfile,
    p: f64,
    mu: f64,
    variant: HardyVariant,
) -> Result<EstimateReport> {
    hardy_check_scaled(prof, p, mu, variant, 1.0)
}

/// Near-extremal profiles (every fifth seed): power-law behavior at the
/// critical exponent over a wide radial window, so the ratio approaches
/// the sharp constant from below. These keep the corpus honest — a
/// mutated (scaled-down) constant must fail on them.
fn extremal_hardy_case(variant: HardyVariant) -> (RadialProfile, f64, f64) {
    match variant {
        HardyVariant::H2_11 | HardyVariant::H2_12 => {
            // pure power f = r^s on (0, R): LHS/RHS powers match, so the
            // ratio is exactly delta/s regardless of R
            let p = 4.0;
            let delta = 1.5;
            let mu = 2.0 / p + delta;
            let s = delta + 0.15;
            let c0 = if variant == HardyVariant::H2_12 {
                0.8
            } else {
                0.0
            };
            let f = move |r: f64| c0 + r.powf(s);
            let df = move |r: f64| s * r.powf(s - 1.0);
            (
                RadialProfile {
                    f: Box::new(f),
                    df: Box::new(df),
                    eps: 0.0,
                    support_hi: 1.0,
                },
                p,
                mu,
            )
        }
        HardyVariant::H2_16 | HardyVariant::H2_18 => {
            // critical power x^delta ramped over a wide window
            let p = 2.0;
            let delta = 2.0;
            let mu = if variant == HardyVariant::H2_16 {
                1.0 / p + delta
            } else {
                2.0 / p + delta
            };
            let eps = 1e-9;
            let up = Ramp::new(eps, 10.0 * eps);
            let down = Ramp::new(0.1, 0.9);
            let f = move |x: f64| up.eval(x) * x.powf(delta) * (1.0 - down.eval(x));
            let df = move |x: f64| {
                up.d1(x) * x.powf(delta) * (1.0 - down.eval(x))
                    + up.eval(x) * delta * x.powf(delta - 1.0) * (1.0 - down.eval(x))
                    - up.eval(x) * x.powf(delta) * down.d1(x)
            };
            (
                RadialProfile {
                    f: Box::new(f),
                    df: Box::new(df),
                    eps,
                    support_hi: 1.0,
                },
                p,
                mu,
            )
        }
    }
}

/// A randomized smooth profile satisfying the hypotheses of `variant`,
/// together with the exponent pair (p, mu) it was built for.
pub fn random_hardy_case(variant: HardyVariant, seed: u64) -> (RadialProfile, f64, f64) {
    if seed % 5 == 4 {
        return extremal_hardy_case(variant);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let p: f64 = rng.gen_range(2.0..4.0);
    let r_max = 1.0;
    let a0 = rng.gen_range(0.5..1.5);
    let a1 = rng.gen_range(-0.5..0.5);
    let w1 = rng.gen_range(1.0..6.0);
    let ph1 = rng.gen_range(0.0..std::f64::consts::TAU);
    let a2 = rng.gen_range(-0.3..0.3);
    let w2 = rng.gen_range(1.0..8.0);
    let g = move |r: f64| a0 + a1 * (w1 * r + ph1).sin() + a2 * (w2 * r).cos();
    let dg = move |r: f64| a1 * w1 * (w1 * r + ph1).cos() - a2 * w2 * (w2 * r).sin();

    match variant {
        HardyVariant::H2_11 => {
            let above = rng.gen_bool(0.5);
            let delta = rng.gen_range(0.3..1.2);
            if above {
                let mu = 2.0 / p + delta;
                let m = (mu - 2.0 / p).ceil() as i32 + 1;
                let f = move |r: f64| r.powi(m) * g(r);
                let df = move |r: f64| m as f64 * r.powi(m - 1) * g(r) + r.powi(m) * dg(r);
                (
                    RadialProfile {
                        f: Box::new(f),
                        df: Box::new(df),
                        eps: 0.0,
                        support_hi: r_max,
                    },
                    p,
                    mu,
                )
            } else {
                let mu = 2.0 / p - delta;
                let down = Ramp::new(0.55 * r_max, 0.98 * r_max);
                let f = move |r: f64| (1.0 - down.eval(r)) * g(r);
                let df = move |r: f64| -down.d1(r) * g(r) + (1.0 - down.eval(r)) * dg(r);
                (
                    RadialProfile {
                        f: Box::new(f),
                        df: Box::new(df),
                        eps: 0.0,
                        support_hi: r_max,
                    },
                    p,
                    mu,
                )
            }
        }
        HardyVariant::H2_12 => {
            let delta = rng.gen_range(0.3..1.2);
            let mu = 2.0 / p + delta;
            let m = (mu - 2.0 / p).ceil() as i32 + 1;
            let c0 = rng.gen_range(0.5..2.0);
            let f = move |r: f64| c0 + r.powi(m) * g(r);
            let df = move |r: f64| m as f64 * r.powi(m - 1) * g(r) + r.powi(m) * dg(r);
            (
                RadialProfile {
                    f: Box::new(f),
                    df: Box::new(df),
                    eps: 0.0,
                    support_hi: r_max,
                },
                p,
                mu,
            )
        }
        HardyVariant::H2_16 | HardyVariant::H2_18 => {
            let eps = rng.gen_range(0.05..0.2);
            let delta = rng.gen_range(0.3..1.5);
            let mu = if variant == HardyVariant::H2_16 {
                1.0 / p + delta
            } else {
                2.0 / p + delta
            };
            let up = Ramp::new(eps, eps + rng.gen_range(0.1..0.25));
            let down = Ramp::new(0.6 * r_max, 0.9 * r_max);
            let f = move |r: f64| up.eval(r) * (1.0 - down.eval(r)) * g(r);
            let df = move |r: f64| {
                up.d1(r) * (1.0 - down.eval(r)) * g(r) - up.eval(r) * down.d1(r) * g(r)
                    + up.eval(r) * (1.0 - down.eval(r)) * dg(r)
            };
            (
                RadialProfile {
                    f: Box::new(f),
                    df: Box::new(df),
                    eps,
                    support_hi: r_max,
                },
                p,
                mu,
            )
        }
    }
}

// ---------------------------------------------------------------------------
// Elliptic explicit-constant checks
// ---------------------------------------------------------------------------

/// Slack for the elliptic explicit constants at Nr = Nz = 128
/// (covers discretization error; see the refinement study in tests).
pub const ELLIPTIC_SLACK: f64 = 0.05;

fn boundary_sq_at_inner(f: &ScalarField) -> f64 {
    let g = &f.grid;
    (0..g.nz).map(|j| f.values[(0, j)].powi(2)).sum::<f64>() * g.dz
}

/// Check the eta-problem estimates on a solved (eta, theta) pair living on
/// the [eps, r_hi] subgrid. The explicit constants 6/5, 1, 1 are asserted
/// with `slack`; the unspecified-constant aggregates are measured only.
/// Boundary terms written at r = 0 in the source are evaluated at the
/// inner edge r = eps.
pub fn elliptic_checks(
    eta: &ScalarField,
    theta: &ScalarField,
    slack: f64,
) -> Result<Vec<EstimateReport>> {
    if !eta.is_finite() || !theta.is_finite() {
        return Err(Error::Domain(
            "elliptic_checks requires finite fields".into(),
        ));
    }
    let g = &eta.grid;
    let eta_r = eta.ddr();
    let eta_z = eta.ddz();
    let eta_zr = eta_z.ddr();
    let theta_r = theta.ddr();
    let theta_sq = theta.l2_sq();
    let theta_r_sq = theta_r.l2_sq();

    let weighted_sq = |f: &ScalarField| -> f64 {
        let mut acc = 0.0;
        for i in 0..g.n_r() {
            let r = g.r[i];
            if r == 0.0 {
                continue;
            }
            let w = g.w_r(i) / r;
            for j in 0..g.nz {
                acc += w * f.values[(i, j)].powi(2);
            }
        }
        acc * g.dz
    };

    let mut reports = Vec::new();

    // elliptic_4_17: |grad eta_r|^2 + eta_r^2/r^2 + boundary <= (6/5) theta^2
    let grad_eta_r = monitors::grad_l2_sq(&eta_r);
    let w_eta_r = weighted_sq(&eta_r);
    let b_eta_r = boundary_sq_at_inner(&eta_r);
    let lhs_417 = grad_eta_r + w_eta_r + b_eta_r;
    reports.push(
        EstimateReport::new("elliptic_4_17", lhs_417, 1.2 * theta_sq, 1.2, slack, true).with_terms(
            vec![
                ("grad_eta_r_sq".into(), grad_eta_r),
                ("eta_r_over_r_sq".into(), w_eta_r),
                ("boundary_eta_r_sq".into(), b_eta_r),
                ("theta_sq".into(), theta_sq),
            ],
        ),
    );

    // elliptic_4_18: |grad eta_z|^2 + 2*boundary <= theta^2
    let grad_eta_z = monitors::grad_l2_sq(&eta_z);
    let b_eta_z = boundary_sq_at_inner(&eta_z);
    let lhs_418 = grad_eta_z + 2.0 * b_eta_z;
    reports.push(
        EstimateReport::new("elliptic_4_18", lhs_418, theta_sq, 1.0, slack, true).with_terms(vec![
            ("grad_eta_z_sq".into(), grad_eta_z),
            ("boundary_eta_z_sq".into(), b_eta_z),
        ]),
    );

    // elliptic_4_22: |grad eta_zr|^2 + 6 eta_zr^2/r^2 + 2*boundary <= theta_r^2
    let grad_eta_zr = monitors::grad_l2_sq(&eta_zr);
    let w_eta_zr = weighted_sq(&eta_zr);
    let b_eta_zr = boundary_sq_at_inner(&eta_zr);
    let lhs_422 = grad_eta_zr + 6.0 * w_eta_zr + 2.0 * b_eta_zr;
    reports.push(
        EstimateReport::new("elliptic_4_22", lhs_422, theta_r_sq, 1.0, slack, true).with_terms(
            vec![
                ("grad_eta_zr_sq".into(), grad_eta_zr),
                ("eta_zr_over_r_sq".into(), w_eta_zr),
                ("boundary_eta_zr_sq".into(), b_eta_zr),
                ("theta_r_sq".into(), theta_r_sq),
            ],
        ),
    );

    // elliptic_4_14: constant unspecified (increasing in r0), measured only
    let h1 = (eta.l2_sq() + monitors::grad_l2_sq(eta)).sqrt();
    let b_eta = boundary_sq_at_inner(eta).sqrt();
    reports.push(
        EstimateReport::new(
            "elliptic_4_14",
            h1 + b_eta,
            theta_sq.sqrt(),
            f64::NAN,
            slack,
            false,
        )
        .with_terms(vec![("eta_h1".into(), h1), ("boundary_eta".into(), b_eta)]),
    );

    // elliptic_4_12: aggregate of the four ingredients above, constant unspecified
    let lhs_412 = eta.l2_sq()
        + monitors::grad_l2_sq(eta)
        + grad_eta_r
        + grad_eta_z
        + grad_eta_zr
        + w_eta_r
        + w_eta_zr
        + boundary_sq_at_inner(eta)
        + b_eta_r
        + b_eta_z
        + b_eta_zr;
    reports.push(
        EstimateReport::new(
            "elliptic_4_12",
            lhs_412,
            theta_sq + theta_r_sq,
            f64::NAN,
            slack,
            false,
        )
        .with_terms(vec![
            ("theta_sq".into(), theta_sq),
            ("theta_r_sq".into(), theta_r_sq),
        ]),
    );

    Ok(reports)
}

/// Manufactured eta corpus on the [eps, r_hi] subgrid: polynomial radial
/// bumps with triple zeros at both edges, so eta, eta_,r and theta all
/// vanish there (the Dirichlet value, the derivative hypothesis and the
/// inner vanishing of the data hold exactly), and every derivative the
/// checks take is a bounded polynomial — refinement studies see clean
/// O(h^2) constants. Smoothstep or mollifier bumps stall them (missing
/// fourth derivative / non-analytic edges).
pub fn manufactured_eta(sub: &Arc<Grid>, case: usize) -> ScalarField {
    let eps = sub.eps;
    let r_hi = sub.r_out;
    let w_max = (r_hi - eps).powi(2) / 4.0;
    let a = sub.a;
    let pi = std::f64::consts::PI;
    ScalarField::from_fn(sub, move |r, z| {
        let bump = ((r - eps) * (r_hi - r) / w_max).powi(3);
        match case % 5 {
            0 => bump * (pi * z / a).cos(),
            1 => bump * (1.0 + 0.5 * (2.0 * pi * z / a).sin()),
            2 => bump * (r - eps) * (pi * z / a).sin(),
            3 => bump, // z-independent
            _ => bump * ((pi * z / a).cos() + 0.3 * (3.0 * pi * z / a).cos()),
        }
    })
}

/// Solve the eta-problem for a manufactured right-hand side (the discrete
/// forward image of `manufactured_eta`), returning the solved pair on the
/// subgrid. This is the corpus generator for the explicit-constant checks.
pub fn solved_eta_pair(
    grid: &Arc<Grid>,
    r_hi: f64,
    case: usize,
) -> Result<(ScalarField, ScalarField, Arc<Grid>)> {
    let i_hi = grid.nearest_r_index(r_hi);
    let sub = grid.subgrid_r(i_hi)?;
    let eta_star = manufactured_eta(&sub, case);
    let theta = elliptic::apply_op(OpKind::Eta, &eta_star);
    let mut theta_full = ScalarField::zeros(grid);
    for i in 0..sub.n_r() {
        for j in 0..grid.nz {
            theta_full.values[(i, j)] = theta.values[(i, j)];
        }
    }
    let eta_full = elliptic::solve_eta(&theta_full, grid, r_hi)?;
    let eta_sub = elliptic::restrict_to_subgrid(&eta_full, &sub);
    Ok((eta_sub, theta, sub))
}

// ---------------------------------------------------------------------------
// Localized v_r estimate (the 4.23-form inequality)
// ---------------------------------------------------------------------------

/// Separated terms of the localized v_r estimate.
#[derive(Debug, Clone, Serialize)]
pub struct VrEstimateTerms {
    pub lhs_grad: f64,
    pub lhs_weighted: f64,
    pub chi_term: f64,
    pub vz_terms: f64,
    pub measured_ratio: f64,
}

/// Evaluate ||grad (v~_r/r)_,r||^2 + 6 ||(1/r)(v~_r/r)_,r||^2 against
/// ||(chi~/r)_,r||^2 + c(1/r0)(||v_z||^2 + ||v_{z,r}||^2). The constant
/// c(1/r0) is unspecified, so the report is measured-only: the quantity
/// tests assert is stability of (lhs - chi_term)/vz_terms under
/// refinement.
pub fn vr_estimate_check(
    v_r: &ScalarField,
    v_z: &ScalarField,
    chi: &ScalarField,
    cutoff: &crate::fields::Cutoff,
) -> Result<(EstimateReport, VrEstimateTerms)> {
    let g = &v_r.grid;
    if g.axis_mode() {
        return Err(Error::Config(
            "the localized v_r estimate is native to the annulus (eps > 0)".into(),
        ));
    }
    let zeta2 = cutoff.profile.mul(&cutoff.profile);
    let vr_tilde = v_r.mul(&zeta2);
    let chi_tilde = chi.mul(&zeta2);
    let d = vr_tilde.div_r().ddr();
    let lhs_grad = monitors::grad_l2_sq(&d);
    let mut lhs_weighted = 0.0;
    for i in 0..g.n_r() {
        let r = g.r[i];
        let w = g.w_r(i) / r;
        for j in 0..g.nz {
            lhs_weighted += w * d.values[(i, j)].powi(2);
        }
    }
    lhs_weighted *= g.dz;
    let chi_term = chi_tilde.div_r().ddr().l2_sq();
    let vz_terms = v_z.l2_sq() + v_z.ddr().l2_sq();
    let lhs = lhs_grad + 6.0 * lhs_weighted;
    let measured_ratio = if vz_terms > 0.0 {
        (lhs - chi_term).max(0.0) / vz_terms
    } else {
        0.0
    };
    let report = EstimateReport::new(
        "vr_4_23",
        lhs,
        chi_term + vz_terms,
        f64::NAN,
        ELLIPTIC_SLACK,
        false,
    )
    .with_terms(vec![
        ("lhs_grad".into(), lhs_grad),
        ("lhs_weighted_x6".into(), 6.0 * lhs_weighted),
        ("chi_term".into(), chi_term),
        ("vz_terms".into(), vz_terms),
        ("measured_ratio".into(), measured_ratio),
    ]);
    Ok((
        report,
        VrEstimateTerms {
            lhs_grad,
            lhs_weighted,
            chi_term,
            vz_terms,
            measured_ratio,
        },
    ))
}

// ---------------------------------------------------------------------------
// Estimate-chain monitors over a run history
// ---------------------------------------------------------------------------

/// Assemble the estimate-chain inequalities from a recorded run history.
/// Every explicitly structured coefficient (1/nu, 3/2, 3/4, 1/4) enters
/// with its stated value; unspecified constants and generic increasing
/// functions are taken as 1 and the reports are measured-only.
pub fn chain_monitors(series: &MonitorSeries, nu: f64) -> Result<Vec<EstimateReport>> {
    let mut reports = Vec::new();
    let first = |id: &str| -> Result<f64> {
        let col = series.column(id)?;
        col.first()
            .copied()
            .ok_or_else(|| Error::MissingAccumulator(format!("{id}: empty")))
    };
    let last = |id: &str| -> Result<f64> {
        let col = series.column(id)?;
        col.last()
            .copied()
            .ok_or_else(|| Error::MissingAccumulator(format!("{id}: empty")))
    };

    let d1_sq = first(ids::V_H0_SQ)?;
    let d1 = d1_sq.sqrt();
    let d2 = first(ids::U_LINF)?;
    let chi0_sq = first(ids::CHI_TILDE_OVER_R_H0_SQ)?;
    let vphi0_sq = first(ids::VPHI_TILDE_SQ_OVER_R_H0_SQ)?;

    // chain_5_3: ||chi~/r||_{V_2^0}^2 vs (1/nu) iint v~_phi^4/r^4
    //   + c d1^2 + c d1 ||chi||^2_{L_{20/7}(strip)} + ||chi~(0)/r||^2
    let v2_sq = series.sup(ids::CHI_TILDE_OVER_R_H0_SQ)?
        + nu * series.time_integral(ids::CHI_TILDE_OVER_R_GRAD_H0_SQ)?;
    let quart = series.time_integral(ids::VPHI_TILDE_QUART_R4)?;
    let strip_norm_sq = series
        .time_integral(ids::CHI_STRIP_POW_20_7)?
        .powf(2.0 * 7.0 / 20.0);
    let rhs_53 = quart / nu + d1_sq + d1 * strip_norm_sq + chi0_sq;
    reports.push(
        EstimateReport::new("chain_5_3", v2_sq, rhs_53, f64::NAN, 0.0, false).with_terms(vec![
            ("vphi_quart_over_nu".into(), quart / nu),
            ("d1_sq".into(), d1_sq),
            ("d1_chi_strip_20_7_sq".into(), d1 * strip_norm_sq),
            ("chi0_over_r_sq".into(), chi0_sq),
        ]),
    );

    // chain_5_8: (1/4) int v~^4/r^2 |_T + (3/4) nu iint |grad v~^2/r|^2
    //   + (3/4) nu iint v~^4/r^4 vs (3/2) iint |v_r/r| v~^4/r^2
    //   + c d2^2 (1+d2) d1^2 + (1/4) ||v~^2(0)/r||^2
    let lhs_58 = 0.25 * last(ids::VPHI_TILDE_QUART_R2)?
        + 0.75 * nu * series.time_integral(ids::GRAD_VPHI_TILDE_SQ_OVER_R_SQ)?
        + 0.75 * nu * quart;
    let stretch = series.time_integral(ids::VR_STRETCH_VPHI_QUART)?;
    let rhs_58 = 1.5 * stretch + d2 * d2 * (1.0 + d2) * d1_sq + 0.25 * vphi0_sq;
    reports.push(
        EstimateReport::new("chain_5_8", lhs_58, rhs_58, f64::NAN, 0.0, false).with_terms(vec![
            ("stretch_term_x_3_2".into(), 1.5 * stretch),
            (
                "data_term_d2sq_1pd2_d1sq".into(),
                d2 * d2 * (1.0 + d2) * d1_sq,
            ),
            ("vphi0_sq_over_4".into(), 0.25 * vphi0_sq),
        ]),
    );

    // chain_5_28: L^2 vs A0 — the A0 power differs between the two
    // statements, so both A0 and A0^2 are tabulated and neither asserted
    let l_sq = monitors::functional_l_sq(series, nu)?;
    let a0 = 1.0 + vphi0_sq + chi0_sq;
    reports.push(
        EstimateReport::new("chain_5_28", l_sq, a0, f64::NAN, 0.0, false).with_terms(vec![
            ("l_sq".into(), l_sq),
            ("a0".into(), a0),
            ("a0_sq".into(), a0 * a0),
        ]),
    );

    // chain_6_1: sup X(t) vs data terms and X(0)
    let x_sup = series.sup(ids::X_DECAY)?;
    let x0 = first(ids::X_DECAY)?;
    let x_final = last(ids::X_DECAY)?;
    reports.push(
        EstimateReport::new("chain_6_1", x_sup, d1_sq + x0, f64::NAN, 0.0, false).with_terms(vec![
            ("x0".into(), x0),
            ("x_final".into(), x_final),
            ("d1_sq".into(), d1_sq),
        ]),
    );

    // chain_6_38: ||v~/r||_{V_2^1} vs ||chi~/r||_{V_2^0} + c ||v'||_{V_2^0}
    let vt_v21 = (series.sup(ids::VTILDE_OVER_R_H1_SQ)?
        + nu * series.time_integral(ids::VTILDE_OVER_R_GRAD_H1_SQ)?)
    .sqrt();
    let chi_v20 = v2_sq.sqrt();
    let vprime_v20 = (series.sup(ids::VPRIME_H0_SQ)?
        + nu * series.time_integral(ids::VPRIME_GRAD_H0_SQ)?)
    .sqrt();
    reports.push(
        EstimateReport::new(
            "chain_6_38",
            vt_v21,
            chi_v20 + vprime_v20,
            f64::NAN,
            0.0,
            false,
        )
        .with_terms(vec![
            ("chi_tilde_v20".into(), chi_v20),
            ("vprime_v20".into(), vprime_v20),
        ]),
    );

    Ok(reports)
}

// ---------------------------------------------------------------------------
// Iteration lemma and decay envelopes
// ---------------------------------------------------------------------------

/// Fixed point of f(lambda) <= mu f(lambda/2) + K: the geometric sum
/// K / (1 - mu).
pub fn iteration_bound(mu: f64, k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&mu) {
        return Err(Error::Hypothesis(format!(
            "iteration bound diverges unless 0 <= mu < 1 (mu = {mu})"
        )));
    }
    if k < 0.0 {
        return Err(Error::Hypothesis(format!(
            "iteration bound needs K >= 0 (K = {k})"
        )));
    }
    Ok(k / (1.0 - mu))
}

/// Decay envelope X(t) <= A + X(0) e^{-nu_* t} / (1 - eps).
pub fn decay_envelope(a: f64, x0: f64, eps_p: f64, nu_star: f64, t: f64) -> Result<f64> {
    if !(0.0 < eps_p && eps_p < 1.0) {
        return Err(Error::Hypothesis(format!(
            "decay envelope needs eps in (0,1), got {eps_p}"
        )));
    }
    if nu_star <= 0.0 {
        return Err(Error::Hypothesis(format!(
            "decay envelope needs nu_* > 0, got {nu_star}"
        )));
    }
    Ok(a + x0 * (-nu_star * t).exp() / (1.0 - eps_p))
}

/// Iterated envelope X((k+1)T) <= A / (1 - e^{-nu_* T}/(1-eps))
/// + X(0) e^{-nu_* k T} / (1 - eps), valid when e^{-nu_* T}/(1-eps) < 1.
pub fn decay_iterate(
    a: f64,
    x0: f64,
    eps_p: f64,
    nu_star: f64,
    t_period: f64,
    k: u32,
) -> Result<f64> {
    if !(0.0 < eps_p && eps_p < 1.0) {
        return Err(Error::Hypothesis(format!(
            "decay iterate needs eps in (0,1), got {eps_p}"
        )));
    }
    let q = (-nu_star * t_period).exp() / (1.0 - eps_p);
    if q >= 1.0 {
        return Err(Error::Hypothesis(format!(
            "iterated envelope requires e^(-nu_* T)/(1-eps) < 1, got {q}"
        )));
    }
    Ok(a / (1.0 - q) + x0 * (-nu_star * (k as f64) * t_period).exp() / (1.0 - eps_p))
}

/// nu_* = min(nu/(2 c_p), 3 nu / c_p).
pub fn nu_star(nu: f64, c_p: f64) -> f64 {
    (nu / (2.0 * c_p)).min(3.0 * nu / c_p)
}

// ---------------------------------------------------------------------------
// Discrete Poincare constant
// ---------------------------------------------------------------------------

/// Smallest eigenvalue of the discrete r-weighted gradient form over
/// fields vanishing at the grid's outer radius (natural at the inner
/// edge, periodic in z) by inverse power iteration; returns
/// c_p = 1 / lambda_min. Pass the cut-off subgrid [eps, 2 r0] to obtain
/// the constant used in the decay rate.
pub fn poincare_constant(grid: &Arc<Grid>) -> Result<f64> {
    let solver = elliptic::Helmholtz::new(grid);
    let mut x = ScalarField::from_fn(grid, |r, _| grid.r_out - r);
    let norm0 = x.l2_sq().sqrt();
    x = x.scaled(1.0 / norm0);
    let mut lambda_prev = f64::INFINITY;
    let cap = 500;
    for it in 0..cap {
        let mut rhs = x.clone();
        for j in 0..grid.nz {
            rhs.values[(grid.nr, j)] = 0.0;
        }
        let y = solver.poisson_solve(OpKind::NegLaplacian, &rhs)?;
        let norm = y.l2_sq().sqrt();
        if norm == 0.0 {
            return Err(Error::EigenNonConvergence(it));
        }
        let x_new = y.scaled(1.0 / norm);
        let ax = elliptic::apply_op(OpKind::NegLaplacian, &x_new);
        let lambda = ax.mul(&x_new).integrate() / x_new.l2_sq();
        if (lambda - lambda_prev).abs() <= 1e-12 * lambda.abs().max(1e-300) {
            return Ok(1.0 / lambda);
        }
        lambda_prev = lambda;
        x = x_new;
    }
    Err(Error::EigenNonConvergence(cap))
}

/// 1-D periodic zero-mean surrogate on [-a, a]: inverse power iteration on
/// the cyclic second-difference ring with the constant mode deflated. The
/// analytic smallest eigenvalue is (pi/a)^2, so the surrogate constant
/// tends to (a/pi)^2 under refinement.
pub fn poincare_constant_periodic_1d(a: f64, n: usize) -> Result<f64> {
    assert!(n >= 8);
    let dz = 2.0 * a / n as f64;
    let subtract_mean = |v: &mut Vec<f64>| {
        let m = v.iter().sum::<f64>() / n as f64;
        v.iter_mut().for_each(|x| *x -= m);
    };
    let apply = |v: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|j| {
                let jp = (j + 1) % n;
                let jm = (j + n - 1) % n;
                (2.0 * v[j] - v[jp] - v[jm]) / (dz * dz)
            })
            .collect()
    };
    // Sherman-Morrison cyclic solve of (-D2 + delta I) x = b; the small
    // shift keeps the ring matrix invertible, mean deflation removes the
    // near-null constant mode each sweep.
    let delta = 1e-10 / (dz * dz);
    let solve_shifted = |b: &[f64]| -> Vec<f64> {
        let diag = 2.0 / (dz * dz) + delta;
        let off = -1.0 / (dz * dz);
        let gamma = -diag;
        let mut d = vec![diag; n];
        d[0] = diag - gamma;
        d[n - 1] = diag - off * off / gamma;
        let tri_solve = |rhs: &[f64], d: &[f64]| -> Vec<f64> {
            let mut c = vec![0.0; n];
            let mut x: Vec<f64> = rhs.to_vec();
            c[0] = off / d[0];
            x[0] /= d[0];
            for i in 1..n {
                let piv = d[i] - off * c[i - 1];
                c[i] = off / piv;
                x[i] = (x[i] - off * x[i - 1]) / piv;
            }
            for i in (0..n - 1).rev() {
                let nxt = x[i + 1];
                x[i] -= c[i] * nxt;
            }
            x
        };
        let y = tri_solve(b, &d);
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = off;
        let q = tri_solve(&u, &d);
        let vy = y[0] + off / gamma * y[n - 1];
        let vq = q[0] + off / gamma * q[n - 1];
        let factor = vy / (1.0 + vq);
        (0..n).map(|i| y[i] - factor * q[i]).collect()
    };

    let mut x: Vec<f64> = (0..n)
        .map(|j| (2.0 * std::f64::consts::PI * j as f64 / n as f64).sin() + 0.3)
        .collect();
    subtract_mean(&mut x);
    let mut lambda_prev = f64::INFINITY;
    for it in 0..500 {
        let mut y = solve_shifted(&x);
        subtract_mean(&mut y);
        let norm = (y.iter().map(|v| v * v).sum::<f64>()).sqrt();
        if norm == 0.0 {
            return Err(Error::EigenNonConvergence(it));
        }
        y.iter_mut().for_each(|v| *v /= norm);
        let ay = apply(&y);
        let lambda = ay.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>()
            / y.iter().map(|v| v * v).sum::<f64>();
        if (lambda - lambda_prev).abs() <= 1e-12 * lambda.abs().max(1e-300) {
            return Ok(1.0 / lambda);
        }
        lambda_prev = lambda;
        x = y;
    }
    Err(Error::EigenNonConvergence(500))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hardy_exact_constants() {
        // hardy_2_18 with p = 2, alpha = 2: constant = 1/(alpha - 2/p) = 1
        let prof = RadialProfile {
            f: Box::new(|r: f64| (r - 0.1).max(0.0).powi(2)),
            df: Box::new(|r: f64| 2.0 * (r - 0.1).max(0.0)),
            eps: 0.1,
            support_hi: 1.0,
        };
        let rep = hardy_check(&prof, 2.0, 2.0, HardyVariant::H2_18).unwrap();
        assert_abs_diff_eq!(rep.constant, 1.0);
        assert!(rep.pass, "ratio {}", rep.ratio);
        assert!(rep.ratio <= 1.0 + HARDY_SLACK);
    }

    #[test]
    fn hardy_zero_profile_passes() {
        let prof = RadialProfile {
            f: Box::new(|_| 0.0),
            df: Box::new(|_| 0.0),
            eps: 0.1,
            support_hi: 1.0,
        };
        let rep = hardy_check(&prof, 2.0, 2.0, HardyVariant::H2_18).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.ratio, 0.0);
    }

    #[test]
    fn hardy_hypothesis_violations_named() {
        let prof = RadialProfile {
            f: Box::new(|_| 1.0),
            df: Box::new(|_| 0.0),
            eps: 0.1,
            support_hi: 1.0,
        };
        let err = hardy_check(&prof, 2.0, 1.0, HardyVariant::H2_11).unwrap_err();
        assert!(err.to_string().contains("mu != 2/p"), "{err}");
        let err = hardy_check(&prof, 2.0, 1.5, HardyVariant::H2_11).unwrap_err();
        assert!(err.to_string().contains("f(0)"), "{err}");
        let err = hardy_check(&prof, 2.0, 0.5, HardyVariant::H2_18).unwrap_err();
        assert!(err.to_string().contains("alpha > 2/p"), "{err}");
    }

    #[test]
    fn hardy_random_corpus_smoke() {
        for variant in [
            HardyVariant::H2_11,
            HardyVariant::H2_12,
            HardyVariant::H2_16,
            HardyVariant::H2_18,
        ] {
            for seed in 0..8 {
                let (prof, p, mu) = random_hardy_case(variant, seed);
                let rep = hardy_check(&prof, p, mu, variant)
                    .unwrap_or_else(|e| panic!("{variant:?} seed {seed}: {e}"));
                assert!(rep.pass, "{variant:?} seed {seed} ratio {}", rep.ratio);
            }
        }
    }

    #[test]
    fn hardy_mutation_detects_wrong_constant() {
        // scaling the constant by 0.9 must make some profile fail
        let mut failures = 0;
        for seed in 0..20 {
            let (prof, p, mu) = random_hardy_case(HardyVariant::H2_16, seed);
            let rep = hardy_check_scaled(&prof, p, mu, HardyVariant::H2_16, 0.9).unwrap();
            if !rep.pass {
                failures += 1;
            }
        }
        assert!(failures > 0, "0.9x constant never failed over 20 profiles");
    }

    #[test]
    fn iteration_bound_exact_fixed_point() {
        assert_eq!(iteration_bound(0.0, 3.0).unwrap(), 3.0);
        assert_eq!(iteration_bound(0.5, 1.0).unwrap(), 2.0);
        assert!(iteration_bound(1.0, 1.0).is_err());
        for &(mu, k) in &[(0.0, 3.0), (0.5, 1.0), (0.9, 1.0), (0.99, 7.0)] {
            let b = iteration_bound(mu, k).unwrap();
            assert!(
                (b - (mu * b + k)).abs() <= 1e-12,
                "fixed point violated at mu={mu}"
            );
        }
    }

    #[test]
    fn iteration_bound_matches_direct_recursion() {
        let (mu, k) = (0.9, 1.0);
        let limit = iteration_bound(mu, k).unwrap();
        let mut f = 100.0;
        for _ in 0..50 {
            f = mu * f + k;
        }
        // transient closed form: f_n = limit + mu^n (f0 - limit)
        let expected = limit + mu.powi(50) * (100.0 - limit);
        assert_abs_diff_eq!(f, expected, epsilon = 1e-9);
        for _ in 0..5000 {
            f = mu * f + k;
        }
        assert_abs_diff_eq!(f, limit, epsilon = 1e-12);
    }

    #[test]
    fn decay_envelope_values() {
        for &t in &[0.0, 0.5, 3.0] {
            assert_eq!(decay_envelope(1.0, 0.0, 0.5, 2.0, t).unwrap(), 1.0);
        }
        // t = 0, eps = 0.5: A + 2 X0
        assert_abs_diff_eq!(decay_envelope(0.3, 0.7, 0.5, 1.0, 0.0).unwrap(), 0.3 + 1.4);
        assert!(decay_envelope(1.0, 1.0, 1.5, 1.0, 0.0).is_err());
        // nu_* T = ln 4, eps = 0.5: q = 2 e^{-ln 4} = 0.5 < 1, leading term 2A
        let a = 0.9;
        let v = decay_iterate(a, 0.0, 0.5, 4.0_f64.ln(), 1.0, 3).unwrap();
        assert_abs_diff_eq!(v, 2.0 * a, epsilon = 1e-12);
        assert!(decay_iterate(1.0, 1.0, 0.5, 0.1, 0.1, 1).is_err());
    }

    #[test]
    fn decay_iterate_monotone_limit() {
        let (a, x0, eps_p, ns, t): (f64, f64, f64, f64, f64) = (0.4, 5.0, 0.5, 1.2, 2.0);
        let limit = a / (1.0 - (-ns * t).exp() / (1.0 - eps_p));
        let mut prev = f64::INFINITY;
        for k in 0..60 {
            let v = decay_iterate(a, x0, eps_p, ns, t, k).unwrap();
            assert!(v <= prev + 1e-15, "not monotone at k={k}");
            prev = v;
        }
        assert_abs_diff_eq!(prev, limit, epsilon = 1e-12 * limit);
    }

    #[test]
    fn poincare_1d_surrogate_matches_analytic() {
        let a = 0.5;
        let cp = poincare_constant_periodic_1d(a, 256).unwrap();
        let analytic = (a / std::f64::consts::PI).powi(2);
        assert!(
            (cp - analytic).abs() <= 1e-3 * analytic,
            "surrogate {cp} vs analytic {analytic}"
        );
    }

    #[test]
    fn poincare_2d_refinement_and_scaling() {
        let grid = |n: usize, s: f64| Grid::new(0.05 * s, 0.5 * s, 0.5 * s, n, n).unwrap();
        let c1 = poincare_constant(&grid(32, 1.0)).unwrap();
        let c2 = poincare_constant(&grid(64, 1.0)).unwrap();
        assert!(
            (c1 / c2 - 1.0).abs() < 0.01,
            "refinement drift {c1} vs {c2}"
        );
        // domain dilation by 2 scales c_p by 4 (Rayleigh quotient scaling)
        let c_scaled = poincare_constant(&grid(32, 2.0)).unwrap();
        assert_abs_diff_eq!(c_scaled / c1, 4.0, epsilon = 1e-6);
        assert_abs_diff_eq!(nu_star(2.0, c1), 1.0 / c1, epsilon = 1e-14);
    }

    #[test]
    fn elliptic_checks_zero_rhs() {
        let g = Grid::new(0.05, 1.0, 0.5, 32, 16).unwrap();
        let i_hi = g.nearest_r_index(0.5);
        let sub = g.subgrid_r(i_hi).unwrap();
        let zero = ScalarField::zeros(&sub);
        let reports = elliptic_checks(&zero, &zero, ELLIPTIC_SLACK).unwrap();
        assert!(reports.iter().all(|r| r.pass));
        assert!(reports.iter().all(|r| r.lhs == 0.0));
    }

    #[test]
    fn elliptic_explicit_constants_on_manufactured_pair() {
        let g = Grid::new(0.05, 1.0, 0.5, 128, 128).unwrap();
        for case in 0..3 {
            let (eta, theta, _) = solved_eta_pair(&g, 0.5, case).unwrap();
            let reports = elliptic_checks(&eta, &theta, ELLIPTIC_SLACK).unwrap();
            for rep in reports.iter().filter(|r| r.asserted) {
                assert!(rep.pass, "case {case}: {} ratio {}", rep.id, rep.ratio);
            }
        }
    }

    #[test]
    fn vr_estimate_separated_terms() {
        let g = Grid::new(0.05, 1.0, 0.5, 48, 32).unwrap();
        let cutoff = crate::fields::Cutoff::build(&g, 0.25, 0.5).unwrap();
        let zero = ScalarField::zeros(&g);
        let (rep, terms) = vr_estimate_check(&zero, &zero, &zero, &cutoff).unwrap();
        assert_eq!(rep.lhs, 0.0);
        assert_eq!(terms.chi_term, 0.0);
        // chi = 0, pure axial flow: lhs controlled by the v_z terms
        let vz = ScalarField::from_fn(&g, |r, _| (1.0 - r) * (r - 0.05));
        let (_, terms) = vr_estimate_check(&zero, &vz, &zero, &cutoff).unwrap();
        assert!(terms.vz_terms > 0.0);
        assert!(terms.measured_ratio.is_finite());
        // axis mode rejected
        let ga = Grid::new(0.0, 1.0, 0.5, 16, 16).unwrap();
        let za = ScalarField::zeros(&ga);
        let ca = crate::fields::Cutoff::build(&ga, 0.25, 0.5).unwrap();
        assert!(vr_estimate_check(&za, &za, &za, &ca).is_err());
    }

    #[test]
    fn vr_estimate_ratio_stable_under_refinement() {
        // manufactured meridional velocity with chi = 0 (the slice where
        // the whole lhs must be carried by the v_z terms): the measured
        // ratio (lhs - chi_term)/vz_terms drifts by less than 2x
        let ratio_at = |n: usize| {
            let spec = crate::evolve::GridSpec {
                eps: 0.1,
                r_out: 1.0,
                a: 0.5,
                nr: n,
                nz: n,
            };
            let g = spec.build().unwrap();
            let cutoff = crate::fields::Cutoff::build(&g, 0.25, 0.5).unwrap();
            let case = crate::mms::meridional_case_with_nu(&spec, 1.0);
            let vr = ScalarField::from_fn(&g, |r, z| (case.v_r)(r, z, 0.0));
            let vz = ScalarField::from_fn(&g, |r, z| (case.v_z)(r, z, 0.0));
            let zero = ScalarField::zeros(&g);
            let (_, terms) = vr_estimate_check(&vr, &vz, &zero, &cutoff).unwrap();
            terms.measured_ratio
        };
        let r1 = ratio_at(48);
        let r2 = ratio_at(96);
        assert!(r2 > 0.0);
        let drift = (r1 / r2).max(r2 / r1);
        assert!(
            drift < 2.0,
            "vr estimate ratio drift {drift} ({r1} vs {r2})"
        );
    }

    #[test]
    fn chain_monitors_zero_and_swirl_free() {
        use crate::monitors::{ids, monitor_row, MonitorSeries};
        let g = Grid::new(0.1, 1.0, 0.5, 16, 16).unwrap();
        let cutoff = crate::fields::Cutoff::build(&g, 0.25, 0.5).unwrap();
        let nu = 1.0;
        // zero run: every lhs vanishes and every report passes
        let zero = ScalarField::zeros(&g);
        let row = monitor_row(&zero, &zero, &zero, &zero, &cutoff, nu);
        let mut s = MonitorSeries::new(ids::ALL);
        s.push_sample(0.0, row.clone());
        s.push_sample(0.5, row);
        let reports = chain_monitors(&s, nu).unwrap();
        assert!(reports.iter().all(|r| r.lhs == 0.0 && r.pass));
        // swirl-free state: all v~_phi^4 terms vanish identically
        let chi = ScalarField::from_fn(&g, |r, z| {
            (r - 0.1) * (1.0 - r) * (2.0 * std::f64::consts::PI * z).sin()
        });
        let row = monitor_row(&zero, &chi, &zero, &zero, &cutoff, nu);
        let mut s = MonitorSeries::new(ids::ALL);
        s.push_sample(0.0, row.clone());
        s.push_sample(0.5, row);
        let reports = chain_monitors(&s, nu).unwrap();
        let r58 = reports.iter().find(|r| r.id == "chain_5_8").unwrap();
        assert_eq!(r58.lhs, 0.0, "v~_phi^4 terms must vanish without swirl");
    }

    #[test]
    fn chain_monitors_terms_converge_under_refinement() {
        // small-data run at two resolutions: every tabulated term changes
        // by less than 5% (terms at round-off level are skipped)
        use crate::evolve::{self, GridSpec, InitialField, RunConfig};
        let run_at = |n: usize| {
            // dt admissible at the finest grid so both runs share it
            let dt = 0.4 * (0.9 / 128.0_f64).powi(2);
            let cfg = RunConfig {
                grid: GridSpec {
                    eps: 0.1,
                    r_out: 1.0,
                    a: 0.5,
                    nr: n,
                    nz: n,
                },
                nu: 1.0,
                dt,
                t_final: 100.0 * dt,
                r0: 0.25,
                cfl_safety: 0.5,
                second_order: false,
                initial_u: InitialField::GaussianSwirl {
                    amplitude: 0.05,
                    center_r: 0.45,
                    sigma: 0.15,
                },
                initial_chi: InitialField::VortexRing {
                    amplitude: 0.05,
                    center_r: 0.45,
                    center_z: 0.0,
                    sigma: 0.15,
                },
                cadence: 10,
                psi_inner: 0.0,
                psi_outer: 0.0,
                collect_u_snapshots: false,
            };
            let out = evolve::run(cfg).unwrap();
            chain_monitors(&out.series, 1.0).unwrap()
        };
        let coarse = run_at(64);
        let fine = run_at(128);
        for (c, f) in coarse.iter().zip(fine.iter()) {
            for ((name, cv), (_, fv)) in c.terms.iter().zip(f.terms.iter()) {
                if fv.abs() < 1e-12 {
                    continue;
                }
                let change = (cv / fv - 1.0).abs();
                assert!(
                    change < 0.05,
                    "{}::{name} drifts {change:.3} ({cv} vs {fv})",
                    c.id
                );
            }
        }
    }
}
