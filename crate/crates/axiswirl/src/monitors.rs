//! The functional library: weighted norms, parabolic V_2 norms, Holder
//! seminorms, level-set (truncation) functionals, the localized estimate
//! functionals L and X, and the swirl smallness restrictions.
//!
//! Conventions shared with the rest of the crate:
//! * all integrals carry the measure r dr dz with the 2*pi factor dropped;
//! * Omega_zeta-restricted norms are full-domain integrals of
//!   cutoff-multiplied integrands (v~ = v*zeta, chi~ = chi*zeta^2,
//!   v~_r = v_r*zeta^2); the supp zeta_,r strip norms use the sharp
//!   indicator of [r_lo, r_hi] since that support is exact;
//! * L_infty in time is taken over samples at the recorded cadence, with
//!   no inter-sample interpolation;
//! * distances combine the axisymmetric embedding (same-meridian planar
//!   distance) with periodic wraparound in z.

use crate::error::{Error, Result};
use crate::fields::{Cutoff, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Time-ordered samples of named scalar functionals, plus trapezoid
/// time-integral and running-sup accessors.
#[derive(Debug, Clone)]
pub struct MonitorSeries {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}

impl MonitorSeries {
    pub fn new(names: &[&str]) -> Self {
        MonitorSeries {
            names: names.iter().map(|s| s.to_string()).collect(),
            times: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn push_sample(&mut self, t: f64, row: Vec<f64>) {
        assert_eq!(row.len(), self.names.len(), "monitor row width mismatch");
        if let Some(&last) = self.times.last() {
            assert!(t > last, "monitor times must be strictly increasing");
        }
        self.times.push(t);
        self.rows.push(row);
    }

    pub fn col_index(&self, id: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == id)
            .ok_or_else(|| Error::MissingAccumulator(id.to_string()))
    }

    pub fn column(&self, id: &str) -> Result<Vec<f64>> {
        let c = self.col_index(id)?;
        Ok(self.rows.iter().map(|r| r[c]).collect())
    }

    /// Trapezoid-in-time integral of a sampled column.
    pub fn time_integral(&self, id: &str) -> Result<f64> {
        let col = self.column(id)?;
        let mut acc = 0.0;
        for k in 1..col.len() {
            acc += 0.5 * (col[k] + col[k - 1]) * (self.times[k] - self.times[k - 1]);
        }
        Ok(acc)
    }

    /// Sup over samples of a column.
    pub fn sup(&self, id: &str) -> Result<f64> {
        let col = self.column(id)?;
        col.iter()
            .copied()
            .fold(None::<f64>, |m, v| Some(m.map_or(v, |m| m.max(v))))
            .ok_or_else(|| Error::MissingAccumulator(format!("{id}: no samples")))
    }
}

/// Column ids recorded by `evolve::run` (stable snake_case contract for
/// the monitor CSV).
pub mod ids {
    pub const U_LINF: &str = "u_linf";
    pub const SWIRL_SUP_ZETA: &str = "swirl_sup_zeta";
    pub const KINETIC_ENERGY: &str = "kinetic_energy";
    pub const CHI_TILDE_OVER_R_H0_SQ: &str = "chi_tilde_over_r_h0_sq";
    pub const CHI_TILDE_OVER_R_GRAD_H0_SQ: &str = "chi_tilde_over_r_grad_h0_sq";
    pub const VPHI_TILDE_SQ_OVER_R_H0_SQ: &str = "vphi_tilde_sq_over_r_h0_sq";
    pub const X_DECAY: &str = "x_decay";
    pub const VPHI_TILDE_QUART_R4: &str = "vphi_tilde_quart_r4";
    pub const VPHI_TILDE_QUART_R2: &str = "vphi_tilde_quart_r2";
    pub const GRAD_VPHI_TILDE_SQ_OVER_R_SQ: &str = "grad_vphi_tilde_sq_over_r_sq";
    pub const VR_STRETCH_VPHI_QUART: &str = "vr_stretch_vphi_quart";
    pub const DVR_TILDE_GRAD_SQ: &str = "dvr_tilde_grad_sq";
    pub const DVR_TILDE_WEIGHTED_SQ: &str = "dvr_tilde_weighted_sq";
    pub const CHI_STRIP_POW_20_7: &str = "chi_strip_pow_20_7";
    pub const V_H0_SQ: &str = "v_h0_sq";
    pub const VPRIME_H0_SQ: &str = "vprime_h0_sq";
    pub const VPRIME_GRAD_H0_SQ: &str = "vprime_grad_h0_sq";
    pub const VTILDE_OVER_R_H1_SQ: &str = "vtilde_over_r_h1_sq";
    pub const VTILDE_OVER_R_GRAD_H1_SQ: &str = "vtilde_over_r_grad_h1_sq";
    pub const CONTINUITY_RESIDUAL_LINF: &str = "continuity_residual_linf";
    pub const CHI_CONSISTENCY_LINF: &str = "chi_consistency_linf";

    pub const ALL: &[&str] = &[
        U_LINF,
        SWIRL_SUP_ZETA,
        KINETIC_ENERGY,
        CHI_TILDE_OVER_R_H0_SQ,
        CHI_TILDE_OVER_R_GRAD_H0_SQ,
        VPHI_TILDE_SQ_OVER_R_H0_SQ,
        X_DECAY,
        VPHI_TILDE_QUART_R4,
        VPHI_TILDE_QUART_R2,
        GRAD_VPHI_TILDE_SQ_OVER_R_SQ,
        VR_STRETCH_VPHI_QUART,
        DVR_TILDE_GRAD_SQ,
        DVR_TILDE_WEIGHTED_SQ,
        CHI_STRIP_POW_20_7,
        V_H0_SQ,
        VPRIME_H0_SQ,
        VPRIME_GRAD_H0_SQ,
        VTILDE_OVER_R_H1_SQ,
        VTILDE_OVER_R_GRAD_H1_SQ,
        CONTINUITY_RESIDUAL_LINF,
        CHI_CONSISTENCY_LINF,
    ];
}

/// Weighted Lebesgue norm (int |f|^p r^{pk} r dr dz)^{1/p}.
pub fn weighted_norm(f: &ScalarField, p: f64, k: f64) -> Result<f64> {
    if p < 1.0 {
        return Err(Error::Domain(format!(
            "weighted_norm needs p >= 1, got {p}"
        )));
    }
    let g = &f.grid;
    if k < 0.0 && g.axis_mode() {
        let axis_max = (0..g.nz).fold(0.0_f64, |m, j| m.max(f.values[(0, j)].abs()));
        if axis_max > 1e-13 {
            return Err(Error::Domain(format!(
                "negative radial weight r^{k} with f not vanishing on the axis (|f(0)| = {axis_max:.3e})"
            )));
        }
    }
    let mut acc = 0.0;
    for i in 0..g.n_r() {
        let r = g.r[i];
        if r == 0.0 {
            continue; // axis node: zero quadrature weight, f vanishes there
        }
        let w = g.w_r(i) * r * r.powf(p * k);
        for j in 0..g.nz {
            acc += w * f.values[(i, j)].abs().powf(p);
        }
    }
    Ok((acc * g.dz).powf(1.0 / p))
}

/// Squared L2 norm of the gradient: int (f_,r^2 + f_,z^2) r dr dz.
pub fn grad_l2_sq(f: &ScalarField) -> f64 {
    f.ddr().l2_sq() + f.ddz().l2_sq()
}

/// Squared H^k norm, k in {0, 1}.
pub fn h_norm_sq(f: &ScalarField, k: usize) -> f64 {
    match k {
        0 => f.l2_sq(),
        1 => f.l2_sq() + grad_l2_sq(f),
        _ => panic!("h_norm_sq supports k in {{0,1}}"),
    }
}

/// Parabolic V_2^k norm from recorded columns, squared-sum convention:
/// (sup_t ||f||_{H^k}^2 + nu * int_0^T ||grad f||_{H^k}^2 dt)^{1/2}.
/// Expects columns `{f_id}_h{k}_sq` and `{f_id}_grad_h{k}_sq`.
pub fn v2_norm(series: &MonitorSeries, f_id: &str, k: usize, nu: f64) -> Result<f64> {
    let sup = series.sup(&format!("{f_id}_h{k}_sq"))?;
    let grad_int = series.time_integral(&format!("{f_id}_grad_h{k}_sq"))?;
    Ok((sup + nu * grad_int).sqrt())
}

/// Time-ordered field snapshots (for functionals that need whole fields).
#[derive(Debug, Clone, Default)]
pub struct FieldSeries {
    pub times: Vec<f64>,
    pub fields: Vec<ScalarField>,
}

impl FieldSeries {
    pub fn new() -> Self {
        FieldSeries {
            times: Vec::new(),
            fields: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, f: ScalarField) {
        if let Some(&last) = self.times.last() {
            assert!(t > last);
        }
        self.times.push(t);
        self.fields.push(f);
    }
}

fn periodic_dz(z1: f64, z2: f64, period: f64) -> f64 {
    let d = (z1 - z2).abs() % period;
    d.min(period - d)
}

/// Discrete parabolic Holder seminorm over sampled space-time points:
/// sup |f(x,t) - f(x',t')| / (|x - x'|^alpha + |t - t'|^{alpha/2}), with
/// |x - x'| the same-meridian 3-D distance sqrt((r-r')^2 + dz_per^2).
/// All pairs are visited up to `pair_budget`; beyond that a seeded uniform
/// subsample of pairs is used (a lower-bound estimator).
pub fn holder_seminorm(
    series: &FieldSeries,
    alpha: f64,
    pair_budget: usize,
    seed: u64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!(
            "holder exponent must be in (0,1], got {alpha}"
        )));
    }
    if series.fields.is_empty() {
        return Err(Error::Domain(
            "holder_seminorm needs at least one snapshot".into(),
        ));
    }
    let g = series.fields[0].grid.clone();
    let period = 2.0 * g.a;
    let n_pts = series.fields.len() * g.n_r() * g.nz;
    let total_pairs = n_pts.saturating_mul(n_pts - 1) / 2;

    let point = |flat: usize| -> (usize, usize, usize) {
        let per_field = g.n_r() * g.nz;
        let s = flat / per_field;
        let rem = flat % per_field;
        (s, rem / g.nz, rem % g.nz)
    };
    let quotient = |p: usize, q: usize| -> f64 {
        let (s1, i1, j1) = point(p);
        let (s2, i2, j2) = point(q);
        let df = (series.fields[s1].values[(i1, j1)] - series.fields[s2].values[(i2, j2)]).abs();
        if df == 0.0 {
            return 0.0;
        }
        let dx =
            ((g.r[i1] - g.r[i2]).powi(2) + periodic_dz(g.z[j1], g.z[j2], period).powi(2)).sqrt();
        let dt = (series.times[s1] - series.times[s2]).abs();
        let denom = dx.powf(alpha) + dt.powf(alpha / 2.0);
        if denom == 0.0 {
            0.0
        } else {
            df / denom
        }
    };

    let mut best = 0.0_f64;
    if total_pairs <= pair_budget {
        for p in 0..n_pts {
            for q in (p + 1)..n_pts {
                best = best.max(quotient(p, q));
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..pair_budget {
            let p = rng.gen_range(0..n_pts);
            let q = rng.gen_range(0..n_pts);
            if p != q {
                best = best.max(quotient(p, q));
            }
        }
    }
    Ok(best)
}

/// Angular fraction of the circle at (r, z) lying inside the 3-D ball of
/// radius rho around the point at cylindrical (r0, z0) (meridian phi = 0).
/// The global 2*pi factor is dropped, so this weight is in [0, 1].
pub fn ball_fraction(r: f64, z: f64, r0: f64, z0: f64, rho: f64, period: f64) -> f64 {
    let dz = periodic_dz(z, z0, period);
    if r == 0.0 || r0 == 0.0 {
        return if (r - r0).powi(2) + dz * dz < rho * rho {
            1.0
        } else {
            0.0
        };
    }
    let q = (r * r + r0 * r0 + dz * dz - rho * rho) / (2.0 * r * r0);
    if q >= 1.0 {
        0.0
    } else if q <= -1.0 {
        1.0
    } else {
        q.acos() / std::f64::consts::PI
    }
}

/// Parameters of the DeGiorgi-class functionals: level k, parabolic
/// cylinder Q(rho, tau) around (x0, t0), shrink fractions sigma, and the
/// exponent pair (r, q) with 2/r + 3/q = 3/2 (default r = q = 10/3,
/// kappa = 1/6).
#[derive(Debug, Clone)]
pub struct TruncationParams {
    pub level: f64,
    pub center_r: f64,
    pub center_z: f64,
    pub t0: f64,
    pub rho: f64,
    pub tau: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub exp_r: f64,
    pub exp_q: f64,
    pub kappa: f64,
}

impl TruncationParams {
    pub fn new(level: f64, center_r: f64, center_z: f64, t0: f64, rho: f64, tau: f64) -> Self {
        TruncationParams {
            level,
            center_r,
            center_z,
            t0,
            rho,
            tau,
            sigma1: 0.5,
            sigma2: 0.5,
            exp_r: 10.0 / 3.0,
            exp_q: 10.0 / 3.0,
            kappa: 1.0 / 6.0,
        }
    }
}

/// All measured ingredients of the B_2-class inequalities for one level:
/// truncation energies over the shrunk ball/cylinder, level-set measures
/// A_{k,rho}(t), and mu(k, rho, tau). The class constants gamma are not
/// specified in the source, so everything is reported, nothing asserted.
#[derive(Debug, Clone, Serialize)]
pub struct B2Report {
    pub level: f64,
    pub initial_l2_sq_ball: f64,
    pub max_l2_sq_shrunk_ball: f64,
    pub v2_sq_shrunk_cylinder: f64,
    pub level_set_measures: Vec<(f64, f64)>,
    pub mu: f64,
    pub mu_power_term: f64,
}

/// Evaluate the truncation functionals of w over the parabolic cylinder.
pub fn truncation_functionals(
    series: &FieldSeries,
    params: &TruncationParams,
    nu: f64,
) -> Result<B2Report> {
    if params.rho <= 0.0 || params.tau <= 0.0 {
        return Err(Error::Domain(
            "truncation functionals need rho, tau > 0".into(),
        ));
    }
    let relation = 2.0 / params.exp_r + 3.0 / params.exp_q;
    if (relation - 1.5).abs() > 1e-9 {
        return Err(Error::Hypothesis(format!(
            "exponent pair must satisfy 2/r + 3/q = 3/2, got {relation}"
        )));
    }
    let g = series.fields[0].grid.clone();
    let period = 2.0 * g.a;
    let k = params.level;
    let rho_shrunk = params.rho * (1.0 - params.sigma1);
    let t_end = params.t0 + params.tau;
    let t_end_shrunk = params.t0 + params.tau * (1.0 - params.sigma2);

    let ball_l2_sq = |f: &ScalarField, rho: f64| -> f64 {
        let mut acc = 0.0;
        for i in 0..g.n_r() {
            let wr = g.w_r(i) * g.r[i];
            for j in 0..g.nz {
                let frac = ball_fraction(
                    g.r[i],
                    g.z[j],
                    params.center_r,
                    params.center_z,
                    rho,
                    period,
                );
                if frac > 0.0 {
                    let wk = (f.values[(i, j)] - k).max(0.0);
                    acc += wr * frac * wk * wk;
                }
            }
        }
        acc * g.dz
    };
    let ball_grad_sq = |f: &ScalarField, rho: f64| -> f64 {
        let trunc = ScalarField::from_values(&g, f.values.mapv(|v| (v - k).max(0.0)));
        let tr = trunc.ddr();
        let tz = trunc.ddz();
        let mut acc = 0.0;
        for i in 0..g.n_r() {
            let wr = g.w_r(i) * g.r[i];
            for j in 0..g.nz {
                let frac = ball_fraction(
                    g.r[i],
                    g.z[j],
                    params.center_r,
                    params.center_z,
                    rho,
                    period,
                );
                if frac > 0.0 {
                    acc += wr * frac * (tr.values[(i, j)].powi(2) + tz.values[(i, j)].powi(2));
                }
            }
        }
        acc * g.dz
    };
    let level_measure = |f: &ScalarField| -> f64 {
        let mut acc = 0.0;
        for i in 0..g.n_r() {
            let wr = g.w_r(i) * g.r[i];
            for j in 0..g.nz {
                if f.values[(i, j)] > k {
                    acc += wr
                        * ball_fraction(
                            g.r[i],
                            g.z[j],
                            params.center_r,
                            params.center_z,
                            params.rho,
                            period,
                        );
                }
            }
        }
        acc * g.dz
    };

    let mut initial: Option<f64> = None;
    let mut max_shrunk = 0.0_f64;
    let mut sup_shrunk_cyl = 0.0_f64;
    let mut measures: Vec<(f64, f64)> = Vec::new();
    let mut grad_series: Vec<(f64, f64)> = Vec::new();
    for (idx, &t) in series.times.iter().enumerate() {
        if t < params.t0 - 1e-14 || t > t_end + 1e-14 {
            continue;
        }
        let f = &series.fields[idx];
        if initial.is_none() {
            initial = Some(ball_l2_sq(f, params.rho));
        }
        max_shrunk = max_shrunk.max(ball_l2_sq(f, rho_shrunk));
        measures.push((t, level_measure(f)));
        if t <= t_end_shrunk + 1e-14 {
            sup_shrunk_cyl = sup_shrunk_cyl.max(ball_l2_sq(f, rho_shrunk));
            grad_series.push((t, ball_grad_sq(f, rho_shrunk)));
        }
    }
    let mut mu = 0.0;
    for w in measures.windows(2) {
        let m0 = w[0].1.powf(params.exp_r / params.exp_q);
        let m1 = w[1].1.powf(params.exp_r / params.exp_q);
        mu += 0.5 * (m0 + m1) * (w[1].0 - w[0].0);
    }
    let mut grad_int = 0.0;
    for w in grad_series.windows(2) {
        grad_int += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
    }
    Ok(B2Report {
        level: k,
        initial_l2_sq_ball: initial.unwrap_or(0.0),
        max_l2_sq_shrunk_ball: max_shrunk,
        v2_sq_shrunk_cylinder: sup_shrunk_cyl + nu * grad_int,
        level_set_measures: measures,
        mu,
        mu_power_term: mu.powf(2.0 / params.exp_r * (1.0 + params.kappa)),
    })
}

/// Instantaneous X(t) = (1/nu^2) ||v~_phi^2(t)/r||_L2^2 + ||chi~(t)/r||_L2^2
/// with v~_phi = (u/r) zeta and chi~ = chi zeta^2.
pub fn functional_x(u: &ScalarField, chi: &ScalarField, cutoff: &Cutoff, nu: f64) -> f64 {
    let vphi_tilde = u.div_r().mul(&cutoff.profile);
    let term1 = vphi_tilde.mul(&vphi_tilde).div_r().l2_sq();
    let chi_tilde_over_r = chi.mul(&cutoff.profile).mul(&cutoff.profile).div_r();
    let term2 = chi_tilde_over_r.l2_sq();
    term1 / (nu * nu) + term2
}

/// The localized functional L^2 of the main estimate: the accumulated sum
///   int int v~_phi^4/r^4 + ||chi~/r||_{V_2^0}^2
///   + int int |grad (v~_r/r)_,r|^2 + int int (1/r^2)((v~_r/r)_,r)^2,
/// assembled from the recorded monitor columns.
pub fn functional_l_sq(series: &MonitorSeries, nu: f64) -> Result<f64> {
    let quart = series.time_integral(ids::VPHI_TILDE_QUART_R4)?;
    let v2_sq = series.sup(ids::CHI_TILDE_OVER_R_H0_SQ)?
        + nu * series.time_integral(ids::CHI_TILDE_OVER_R_GRAD_H0_SQ)?;
    let grad = series.time_integral(ids::DVR_TILDE_GRAD_SQ)?;
    let weighted = series.time_integral(ids::DVR_TILDE_WEIGHTED_SQ)?;
    Ok(quart + v2_sq + grad + weighted)
}

/// One swirl smallness restriction.
#[derive(Debug, Clone, Serialize)]
pub struct RestrictionReport {
    pub id: String,
    pub lhs: f64,
    pub threshold: f64,
    pub satisfied: bool,
    pub first_violation_t: Option<f64>,
}

fn restriction(series: &MonitorSeries, id: &str, threshold: f64) -> Result<RestrictionReport> {
    let col = series.column(ids::SWIRL_SUP_ZETA)?;
    let mut lhs = 0.0_f64;
    let mut first: Option<f64> = None;
    for (k, &v) in col.iter().enumerate() {
        lhs = lhs.max(v);
        if v > threshold && first.is_none() {
            first = Some(series.times[k]);
        }
    }
    Ok(RestrictionReport {
        id: id.to_string(),
        lhs,
        threshold,
        satisfied: first.is_none(),
        first_violation_t: first,
    })
}

/// Evaluate the swirl restrictions over the recorded history:
/// * swirl_5_10 / swirl_1_10: ||r v_phi||_{L_inf(Omega_zeta^t)} <= (5/4)^{1/4} nu;
/// * swirl_6_9: 3 nu >= (4/nu^3) ||r v_phi||^4, i.e. threshold (3/4)^{1/4} nu.
pub fn check_restrictions(series: &MonitorSeries, nu: f64) -> Result<Vec<RestrictionReport>> {
    let thr_5_10 = (5.0_f64 / 4.0).powf(0.25) * nu;
    let thr_6_9 = (3.0_f64 / 4.0).powf(0.25) * nu;
    Ok(vec![
        restriction(series, "swirl_5_10", thr_5_10)?,
        restriction(series, "swirl_6_9", thr_6_9)?,
        restriction(series, "swirl_1_10", thr_5_10)?,
    ])
}

/// The full instantaneous monitor row for one flow snapshot; the column
/// order matches `ids::ALL`.
pub fn monitor_row(
    u: &ScalarField,
    chi: &ScalarField,
    v_r: &ScalarField,
    v_z: &ScalarField,
    cutoff: &Cutoff,
    nu: f64,
) -> Vec<f64> {
    let g = &u.grid;
    let zeta = &cutoff.profile;
    let zeta2 = zeta.mul(zeta);
    let vphi = u.div_r();
    let vphi_tilde = vphi.mul(zeta);
    let chi_tilde_over_r = chi.mul(&zeta2).div_r();
    let vphi_tilde_sq_over_r = vphi_tilde.mul(&vphi_tilde).div_r();
    let vr_tilde = v_r.mul(&zeta2);
    let dvr = vr_tilde.div_r().ddr();

    let u_linf = u.linf();
    let swirl_sup_zeta = u.mul(zeta).linf();
    let kinetic = v_r.l2_sq() + v_z.l2_sq() + vphi.l2_sq();
    let chi_h0 = chi_tilde_over_r.l2_sq();
    let chi_grad = grad_l2_sq(&chi_tilde_over_r);
    let vphi_sq_h0 = vphi_tilde_sq_over_r.l2_sq();
    let x_decay = vphi_sq_h0 / (nu * nu) + chi_h0;

    let mut quart_r4 = 0.0;
    let mut quart_r2 = 0.0;
    let mut stretch_quart = 0.0;
    let mut dvr_weighted = 0.0;
    for i in 0..g.n_r() {
        let r = g.r[i];
        if r == 0.0 {
            continue;
        }
        let wr = g.w_r(i) * r;
        for j in 0..g.nz {
            let v4 = vphi_tilde.values[(i, j)].powi(4);
            quart_r4 += wr * v4 / r.powi(4);
            quart_r2 += wr * v4 / (r * r);
            stretch_quart += wr * (v_r.values[(i, j)] / r).abs() * v4 / (r * r);
            dvr_weighted += wr * dvr.values[(i, j)].powi(2) / (r * r);
        }
    }
    quart_r4 *= g.dz;
    quart_r2 *= g.dz;
    stretch_quart *= g.dz;
    dvr_weighted *= g.dz;

    let grad_vphi_sq = grad_l2_sq(&vphi_tilde_sq_over_r);
    let dvr_grad = grad_l2_sq(&dvr);

    // strip norm integrand: int over r_lo <= r <= r_hi of |chi|^{20/7} dx
    let mut strip = 0.0;
    for i in 0..g.n_r() {
        let r = g.r[i];
        if r < cutoff.r_lo || r > cutoff.r_hi {
            continue;
        }
        let wr = g.w_r(i) * r;
        for j in 0..g.nz {
            strip += wr * chi.values[(i, j)].abs().powf(20.0 / 7.0);
        }
    }
    strip *= g.dz;

    let v_h0 = kinetic;

    // meridional velocity norms and the localized v~/r H^1 data for the
    // velocity-recovery chain
    let vprime_h0 = v_r.l2_sq() + v_z.l2_sq();
    let vprime_grad = grad_l2_sq(v_r) + grad_l2_sq(v_z);
    let vz_tilde_over_r = v_z.mul(&zeta2).div_r();
    let vr_tilde_over_r = vr_tilde.div_r();
    let grad_h1_sq = |f: &ScalarField| grad_l2_sq(f) + grad_l2_sq(&f.ddr()) + grad_l2_sq(&f.ddz());
    let vtilde_h1 = h_norm_sq(&vr_tilde_over_r, 1) + h_norm_sq(&vz_tilde_over_r, 1);
    let vtilde_grad_h1 = grad_h1_sq(&vr_tilde_over_r) + grad_h1_sq(&vz_tilde_over_r);

    // structure identities, monitored over interior nodes
    let div_res = v_r.ddr().add(&v_z.ddz()).add(&v_r.div_r());
    let continuity = interior_linf(&div_res);
    let chi_rec = v_r.ddz().sub(&v_z.ddr());
    let chi_err = interior_linf(&chi_rec.sub(chi));

    vec![
        u_linf,
        swirl_sup_zeta,
        kinetic,
        chi_h0,
        chi_grad,
        vphi_sq_h0,
        x_decay,
        quart_r4,
        quart_r2,
        grad_vphi_sq,
        stretch_quart,
        dvr_grad,
        dvr_weighted,
        strip,
        v_h0,
        vprime_h0,
        vprime_grad,
        vtilde_h1,
        vtilde_grad_h1,
        continuity,
        chi_err,
    ]
}

/// Max-abs over radially interior nodes (wall stencils are one-sided and
/// not part of the identities being monitored).
pub fn interior_linf(f: &ScalarField) -> f64 {
    let g = &f.grid;
    let mut m = 0.0_f64;
    for i in 1..g.nr {
        for j in 0..g.nz {
            m = m.max(f.values[(i, j)].abs());
        }
    }
    m
}
