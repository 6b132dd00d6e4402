//! Elliptic solvers: the stream-function equation
//!
//!   (psi_,z / r)_,z + (psi_,r / r)_,r = chi,
//!
//! the transformed eta-problem
//!
//!   eta_,zz + eta_,rr + 3 eta_,r / r = theta   (i.e. Lap eta + 2 eta_,r/r),
//!
//! velocity recovery v_r = psi_,z / r, v_z = -psi_,r / r, and the implicit
//! diffusion solves used by time stepping.
//!
//! All of them share one kernel: a discrete Fourier transform in the
//! periodic z direction (exact diagonalization of the periodic second
//! difference) followed by a direct tridiagonal elimination in r per mode.
//! Radial operators are conservative flux forms; boundary rows are closed
//! by ghost elimination consistent with each Dirichlet/Neumann/Robin
//! condition.

use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::grid::Grid;
use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Operators expressible as (radial tridiagonal rows) + zcoef * d2/dz2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    /// (psi_,z/r)_,z + (psi_,r/r)_,r with Dirichlet rows at both walls.
    Stream,
    /// eta_,rr + 3 eta_,r/r + eta_,zz = (r^3 eta_,r)_,r / r^3 + eta_,zz,
    /// natural (zero-flux) inner row, Dirichlet outer row.
    Eta,
    /// Swirl diffusion r*((1/r) u_,r)_,r + u_,zz; Neumann inner row
    /// (annulus) or Dirichlet axis row, Robin slip outer row.
    SwirlDiff,
    /// Vorticity diffusion ((r chi)_,r / r)_,r + chi_,zz; Dirichlet rows.
    ChiDiff,
    /// Negative axisymmetric Laplacian -[(1/r)(r f_,r)_,r + f_,zz] with
    /// natural inner row and Dirichlet outer row (Poincare quotient form).
    NegLaplacian,
}

/// Radial part of an operator: tridiagonal rows, per-row z-coefficient,
/// and which rows are Dirichlet identities.
pub struct RadialOp {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    pub zcoef: Vec<f64>,
    pub dirichlet: Vec<bool>,
}

pub fn build_radial_op(kind: OpKind, grid: &Grid) -> RadialOp {
    let n = grid.nr;
    let h = grid.dr;
    let m = grid.n_r();
    let mut op = RadialOp {
        lower: vec![0.0; m],
        diag: vec![0.0; m],
        upper: vec![0.0; m],
        zcoef: vec![1.0; m],
        dirichlet: vec![false; m],
    };
    let rp = |i: usize| grid.r[i] + 0.5 * h;
    let rm = |i: usize| grid.r[i] - 0.5 * h;
    match kind {
        OpKind::Stream => {
            for i in 1..n {
                op.lower[i] = 1.0 / (h * h * rm(i));
                op.upper[i] = 1.0 / (h * h * rp(i));
                op.diag[i] = -(op.lower[i] + op.upper[i]);
                op.zcoef[i] = 1.0 / grid.r[i];
            }
            op.dirichlet[0] = true;
            op.dirichlet[n] = true;
        }
        OpKind::Eta => {
            for i in 1..n {
                let r3 = grid.r[i].powi(3);
                op.lower[i] = rm(i).powi(3) / (h * h * r3);
                op.upper[i] = rp(i).powi(3) / (h * h * r3);
                op.diag[i] = -(op.lower[i] + op.upper[i]);
            }
            // natural inner row: eta_,r(eps) = 0, symmetric ghost
            op.diag[0] = -2.0 / (h * h);
            op.upper[0] = 2.0 / (h * h);
            op.dirichlet[n] = true;
        }
        OpKind::SwirlDiff => {
            for i in 1..n {
                op.lower[i] = grid.r[i] / (h * h * rm(i));
                op.upper[i] = grid.r[i] / (h * h * rp(i));
                op.diag[i] = -(op.lower[i] + op.upper[i]);
            }
            if grid.axis_mode() {
                op.dirichlet[0] = true;
            } else {
                op.diag[0] = -2.0 / (h * h);
                op.upper[0] = 2.0 / (h * h);
            }
            // Robin slip row: ghost u_{n+1} = u_{n-1} + (4h/R) u_n
            let r_out = grid.r[n];
            op.lower[n] = 2.0 / (h * h);
            op.diag[n] = -(2.0 - 4.0 * h / r_out) / (h * h) - 2.0 / (r_out * r_out);
        }
        OpKind::ChiDiff => {
            for i in 1..n {
                op.lower[i] = grid.r[i - 1] / (h * h * rm(i));
                op.upper[i] = grid.r[i + 1] / (h * h * rp(i));
                op.diag[i] = -grid.r[i] * (1.0 / rm(i) + 1.0 / rp(i)) / (h * h);
            }
            op.dirichlet[0] = true;
            op.dirichlet[n] = true;
        }
        OpKind::NegLaplacian => {
            for i in 1..n {
                op.lower[i] = -rm(i) / (h * h * grid.r[i]);
                op.upper[i] = -rp(i) / (h * h * grid.r[i]);
                op.diag[i] = -(op.lower[i] + op.upper[i]);
                op.zcoef[i] = -1.0;
            }
            if grid.axis_mode() {
                // even parity: f_,rr doubled at the axis
                op.diag[0] = 4.0 / (h * h);
                op.upper[0] = -4.0 / (h * h);
            } else {
                op.diag[0] = 2.0 / (h * h);
                op.upper[0] = -2.0 / (h * h);
            }
            op.zcoef[0] = -1.0;
            op.dirichlet[n] = true;
        }
    }
    op
}

/// FFT workspace for the periodic z direction.
pub struct ZSpectral {
    nz: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl ZSpectral {
    pub fn new(nz: usize) -> Self {
        let mut planner = FftPlanner::new();
        ZSpectral {
            nz,
            fwd: planner.plan_fft_forward(nz),
            inv: planner.plan_fft_inverse(nz),
        }
    }

    /// Symbol of -d2/dz2 for mode k: 4 sin^2(pi k / nz) / dz^2.
    pub fn lambda(&self, k: usize, dz: f64) -> f64 {
        let s = (std::f64::consts::PI * k as f64 / self.nz as f64).sin();
        4.0 * s * s / (dz * dz)
    }

    pub fn to_modes(&self, values: &Array2<f64>) -> Array2<Complex64> {
        let (m, nz) = values.dim();
        assert_eq!(nz, self.nz);
        let mut out = Array2::from_elem((m, nz), Complex64::new(0.0, 0.0));
        let mut buf = vec![Complex64::new(0.0, 0.0); nz];
        for i in 0..m {
            for j in 0..nz {
                buf[j] = Complex64::new(values[(i, j)], 0.0);
            }
            self.fwd.process(&mut buf);
            for j in 0..nz {
                out[(i, j)] = buf[j];
            }
        }
        out
    }

    pub fn to_values(&self, modes: &Array2<Complex64>) -> Array2<f64> {
        let (m, nz) = modes.dim();
        assert_eq!(nz, self.nz);
        let norm = 1.0 / nz as f64;
        let mut out = Array2::zeros((m, nz));
        let mut buf = vec![Complex64::new(0.0, 0.0); nz];
        for i in 0..m {
            for j in 0..nz {
                buf[j] = modes[(i, j)];
            }
            self.inv.process(&mut buf);
            for j in 0..nz {
                out[(i, j)] = buf[j].re * norm;
            }
        }
        out
    }
}

/// Thomas elimination for a tridiagonal system with real coefficients and
/// complex right-hand side. Fails on a vanishing pivot.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [Complex64]) -> Result<()> {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut scale = 0.0_f64;
    for i in 0..n {
        scale = scale.max(diag[i].abs());
    }
    let tiny = 1e-14 * scale.max(1e-300);
    let mut piv = diag[0];
    if piv.abs() < tiny {
        return Err(Error::Gauge(
            "singular leading pivot in banded solve".into(),
        ));
    }
    c[0] = upper[0] / piv;
    rhs[0] /= piv;
    for i in 1..n {
        piv = diag[i] - lower[i] * c[i - 1];
        if piv.abs() < tiny {
            return Err(Error::Solve(format!("vanishing pivot at row {i}")));
        }
        c[i] = upper[i] / piv;
        rhs[i] = (rhs[i] - rhs[i - 1] * lower[i]) / piv;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= next * c[i];
    }
    Ok(())
}

/// Shared FFT + tridiagonal kernel bound to one grid. Mode-by-mode solves
/// are independent; `threads > 1` chunks them over scoped threads
/// (results are bitwise identical regardless of the thread count).
pub struct Helmholtz {
    pub grid: Arc<Grid>,
    zs: ZSpectral,
    threads: usize,
}

impl Helmholtz {
    pub fn new(grid: &Arc<Grid>) -> Self {
        Self::with_threads(grid, 1)
    }

    pub fn with_threads(grid: &Arc<Grid>, threads: usize) -> Self {
        Helmholtz {
            grid: grid.clone(),
            zs: ZSpectral::new(grid.nz),
            threads: threads.max(1),
        }
    }

    fn for_each_mode<F>(&self, nz: usize, per_mode: F) -> Result<Vec<Vec<Complex64>>>
    where
        F: Fn(usize) -> Result<Vec<Complex64>> + Sync,
    {
        if self.threads <= 1 || nz < 2 * self.threads {
            return (0..nz).map(per_mode).collect();
        }
        let chunk = nz.div_ceil(self.threads);
        let results: Vec<Result<Vec<(usize, Vec<Complex64>)>>> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..nz)
                .step_by(chunk)
                .map(|start| {
                    let per_mode = &per_mode;
                    s.spawn(move || {
                        (start..(start + chunk).min(nz))
                            .map(|k| per_mode(k).map(|v| (k, v)))
                            .collect::<Result<Vec<_>>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("mode worker panicked"))
                .collect()
        });
        let mut out: Vec<Vec<Complex64>> = vec![Vec::new(); nz];
        for r in results {
            for (k, v) in r? {
                out[k] = v;
            }
        }
        Ok(out)
    }

    /// Solve L x = rhs where L is `kind`'s operator. Dirichlet rows take
    /// their values from the corresponding rows of `rhs`.
    pub fn poisson_solve(&self, kind: OpKind, rhs: &ScalarField) -> Result<ScalarField> {
        let g = &self.grid;
        let op = build_radial_op(kind, g);
        let m = g.n_r();
        let modes_in = self.zs.to_modes(&rhs.values);
        let cols = self.for_each_mode(g.nz, |k| {
            let lam = self.zs.lambda(k, g.dz);
            let mut lo = vec![0.0; m];
            let mut di = vec![0.0; m];
            let mut up = vec![0.0; m];
            let mut col = vec![Complex64::new(0.0, 0.0); m];
            for i in 0..m {
                if op.dirichlet[i] {
                    di[i] = 1.0;
                } else {
                    lo[i] = op.lower[i];
                    di[i] = op.diag[i] - op.zcoef[i] * lam;
                    up[i] = op.upper[i];
                }
                col[i] = modes_in[(i, k)];
            }
            thomas(&lo, &di, &up, &mut col)?;
            Ok(col)
        })?;
        let mut modes = modes_in;
        for (k, col) in cols.into_iter().enumerate() {
            for i in 0..m {
                modes[(i, k)] = col[i];
            }
        }
        Ok(ScalarField::from_values(g, self.zs.to_values(&modes)))
    }

    /// One implicit diffusion solve: (I - c_imp L) x = y + c_exp L y,
    /// with Dirichlet rows held at y's values. Backward Euler uses
    /// (c_imp, c_exp) = (nu dt, 0); a Crank-Nicolson half step uses
    /// (nu dt/4, nu dt/4).
    pub fn diffusion_step(
        &self,
        kind: OpKind,
        y: &ScalarField,
        c_imp: f64,
        c_exp: f64,
    ) -> Result<ScalarField> {
        let g = &self.grid;
        let op = build_radial_op(kind, g);
        let m = g.n_r();
        let modes_in = self.zs.to_modes(&y.values);
        let cols = self.for_each_mode(g.nz, |k| {
            let lam = self.zs.lambda(k, g.dz);
            let mut lo = vec![0.0; m];
            let mut di = vec![0.0; m];
            let mut up = vec![0.0; m];
            let mut col = vec![Complex64::new(0.0, 0.0); m];
            for i in 0..m {
                if op.dirichlet[i] {
                    col[i] = modes_in[(i, k)];
                } else {
                    let mut ly = (op.diag[i] - op.zcoef[i] * lam) * modes_in[(i, k)];
                    if i > 0 {
                        ly += op.lower[i] * modes_in[(i - 1, k)];
                    }
                    if i + 1 < m {
                        ly += op.upper[i] * modes_in[(i + 1, k)];
                    }
                    col[i] = modes_in[(i, k)] + c_exp * ly;
                }
            }
            for i in 0..m {
                if op.dirichlet[i] {
                    lo[i] = 0.0;
                    di[i] = 1.0;
                    up[i] = 0.0;
                } else {
                    lo[i] = -c_imp * op.lower[i];
                    di[i] = 1.0 - c_imp * (op.diag[i] - op.zcoef[i] * lam);
                    up[i] = -c_imp * op.upper[i];
                }
            }
            thomas(&lo, &di, &up, &mut col)?;
            Ok(col)
        })?;
        let mut modes = modes_in;
        for (k, col) in cols.into_iter().enumerate() {
            for i in 0..m {
                modes[(i, k)] = col[i];
            }
        }
        Ok(ScalarField::from_values(g, self.zs.to_values(&modes)))
    }
}

/// Apply `kind`'s discrete operator in physical space (radial rows plus
/// zcoef * periodic second difference). Dirichlet rows yield 0.
pub fn apply_op(kind: OpKind, f: &ScalarField) -> ScalarField {
    let g = &f.grid;
    let op = build_radial_op(kind, g);
    let m = g.n_r();
    let fzz = f.d2dz2();
    let mut out = Array2::zeros(f.values.dim());
    for i in 0..m {
        if op.dirichlet[i] {
            continue;
        }
        for j in 0..g.nz {
            let mut v = op.diag[i] * f.values[(i, j)] + op.zcoef[i] * fzz.values[(i, j)];
            if i > 0 {
                v += op.lower[i] * f.values[(i - 1, j)];
            }
            if i + 1 < m {
                v += op.upper[i] * f.values[(i + 1, j)];
            }
            out[(i, j)] = v;
        }
    }
    ScalarField::from_values(g, out)
}

/// Relative residual of L x = rhs over non-Dirichlet rows.
pub fn relative_residual(kind: OpKind, x: &ScalarField, rhs: &ScalarField) -> f64 {
    let g = &x.grid;
    let op = build_radial_op(kind, g);
    let lx = apply_op(kind, x);
    let mut num = 0.0_f64;
    let mut den = 0.0_f64;
    for i in 0..g.n_r() {
        if op.dirichlet[i] {
            continue;
        }
        for j in 0..g.nz {
            num += (lx.values[(i, j)] - rhs.values[(i, j)]).powi(2);
            den += rhs.values[(i, j)].powi(2);
        }
    }
    (num / den.max(1e-300)).sqrt()
}

/// Solve the stream-function equation with Dirichlet gauge
/// psi(eps) = psi_inner, psi(R) = psi_outer (both constant in z, which
/// realizes v_r = 0 on both walls). The net meridional flux through the
/// annulus is psi_inner - psi_outer; the zero-flux gauge is 0, 0.
pub fn solve_stream(
    chi: &ScalarField,
    grid: &Arc<Grid>,
    psi_inner: f64,
    psi_outer: f64,
) -> Result<ScalarField> {
    if !chi.is_finite() {
        return Err(Error::Domain(
            "stream rhs contains non-finite values".into(),
        ));
    }
    let mut rhs = chi.clone();
    for j in 0..grid.nz {
        rhs.values[(0, j)] = psi_inner;
        rhs.values[(grid.nr, j)] = psi_outer;
    }
    let solver = Helmholtz::new(grid);
    solver.poisson_solve(OpKind::Stream, &rhs)
}

/// Solve the eta-problem Lap eta + 2 eta_,r / r = theta on [eps, r_hi]
/// with eta(r_hi) = 0, the natural zero-flux condition at r = eps, and
/// periodicity in z. `r_hi` is snapped to the nearest radial node; the
/// returned field is zero-extended beyond it.
pub fn solve_eta(theta: &ScalarField, grid: &Arc<Grid>, r_hi: f64) -> Result<ScalarField> {
    if !theta.is_finite() {
        return Err(Error::Domain("eta rhs contains non-finite values".into()));
    }
    if grid.axis_mode() {
        return Err(Error::Config(
            "eta problem is native to the annulus (eps > 0)".into(),
        ));
    }
    if r_hi > grid.r_out + 1e-12 {
        return Err(Error::Config(format!(
            "eta outer radius {r_hi} exceeds grid radius {}",
            grid.r_out
        )));
    }
    let i_hi = grid.nearest_r_index(r_hi);
    let sub = grid.subgrid_r(i_hi)?;
    let mut rhs = ScalarField::zeros(&sub);
    for i in 0..=i_hi {
        for j in 0..grid.nz {
            rhs.values[(i, j)] = theta.values[(i, j)];
        }
    }
    for j in 0..grid.nz {
        rhs.values[(i_hi, j)] = 0.0;
    }
    let solver = Helmholtz::new(&sub);
    let eta_sub = solver.poisson_solve(OpKind::Eta, &rhs)?;
    let mut out = ScalarField::zeros(grid);
    for i in 0..=i_hi {
        for j in 0..grid.nz {
            out.values[(i, j)] = eta_sub.values[(i, j)];
        }
    }
    Ok(out)
}

/// Restriction of a full-grid field to the [eps, r_hi] subgrid (shared
/// spacings), used when evaluating eta-problem functionals.
pub fn restrict_to_subgrid(f: &ScalarField, sub: &Arc<Grid>) -> ScalarField {
    let mut out = ScalarField::zeros(sub);
    for i in 0..sub.n_r() {
        for j in 0..sub.nz {
            out.values[(i, j)] = f.values[(i, j)];
        }
    }
    out
}

/// Recover the meridional velocity from the stream function:
/// v_r = psi_,z / r, v_z = -psi_,r / r. On the axis (r = 0) parity gives
/// v_r = 0 and v_z = -psi_,rr(0) via the even-extension stencil.
pub fn recover_velocity(psi: &ScalarField) -> (ScalarField, ScalarField) {
    let g = &psi.grid;
    let psi_z = psi.ddz();
    let psi_r = psi.ddr();
    let mut vr = Array2::zeros(psi.values.dim());
    let mut vz = Array2::zeros(psi.values.dim());
    let h = g.dr;
    for i in 0..g.n_r() {
        let r = g.r[i];
        for j in 0..g.nz {
            if r > 0.0 {
                vr[(i, j)] = psi_z.values[(i, j)] / r;
                vz[(i, j)] = -psi_r.values[(i, j)] / r;
            } else {
                vr[(i, j)] = 0.0;
                vz[(i, j)] = -2.0 * (psi.values[(1, j)] - psi.values[(0, j)]) / (h * h);
            }
        }
    }
    (
        ScalarField::from_values(g, vr),
        ScalarField::from_values(g, vz),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{simpson_doubling, ORACLE_TOL};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn stream_zero_rhs_zero_gauge() {
        let g = Grid::new(0.1, 1.0, 0.5, 16, 16).unwrap();
        let chi = ScalarField::zeros(&g);
        let psi = solve_stream(&chi, &g, 0.0, 0.0).unwrap();
        assert!(psi.linf() < 1e-13);
    }

    #[test]
    fn stream_uniform_axial_flow_exact() {
        // chi = 0 with psi = -W r^2 / 2 wall values reproduces the
        // quadratic stream function exactly (flux form exact on r^2).
        let w = 0.8;
        for eps in [0.0, 0.1] {
            let g = Grid::new(eps, 1.0, 0.5, 16, 16).unwrap();
            let chi = ScalarField::zeros(&g);
            let psi = solve_stream(&chi, &g, -w * eps * eps / 2.0, -w * 0.5).unwrap();
            let exact = ScalarField::from_fn(&g, |r, _| -w * r * r / 2.0);
            assert!(psi.sub(&exact).linf() < 1e-11, "eps={eps}");
            let (vr, vz) = recover_velocity(&psi);
            assert!(vr.linf() < 1e-11);
            let w_err = vz.values.iter().fold(0.0_f64, |m, v| m.max((v - w).abs()));
            assert!(w_err < 1e-10, "vz error {w_err}");
        }
    }

    #[test]
    fn stream_forward_inverse_round_trip() {
        let g = Grid::new(0.05, 1.0, 0.5, 32, 32).unwrap();
        let psi_in = ScalarField::from_fn(&g, |r, z| {
            (r - 0.05).powi(2) * (1.0 - r).powi(2) * (PI * z / 0.5).sin() + 0.3
        });
        // boundary rows of psi_in are constant in z (sin factor vanishes
        // only through the polynomial), so use its wall values as gauge
        let chi = apply_op(OpKind::Stream, &psi_in);
        let mut rhs = chi.clone();
        for j in 0..g.nz {
            rhs.values[(0, j)] = psi_in.values[(0, j)];
            rhs.values[(g.nr, j)] = psi_in.values[(g.nr, j)];
        }
        let solver = Helmholtz::new(&g);
        let psi = solver.poisson_solve(OpKind::Stream, &rhs).unwrap();
        let rel = psi.sub(&psi_in).linf() / psi_in.linf();
        assert!(rel <= 1e-9, "round trip relative error {rel}");
        assert!(relative_residual(OpKind::Stream, &psi, &chi) <= 1e-10);
    }

    #[test]
    fn stream_manufactured_convergence() {
        // psi* = (r-eps)^2 (R-r)^2 sin(pi z/a); chi* by the closed form.
        let eps = 0.1;
        let big_r = 1.0;
        let a = 0.5;
        let p = |r: f64| (r - eps).powi(2) * (big_r - r).powi(2);
        let dp =
            |r: f64| 2.0 * (r - eps) * (big_r - r).powi(2) - 2.0 * (r - eps).powi(2) * (big_r - r);
        let d2p = |r: f64| {
            2.0 * (big_r - r).powi(2) - 8.0 * (r - eps) * (big_r - r) + 2.0 * (r - eps).powi(2)
        };
        let err = |n: usize| {
            let g = Grid::new(eps, big_r, a, n, n).unwrap();
            let chi = ScalarField::from_fn(&g, |r, z| {
                ((-(PI / a).powi(2) * p(r) + d2p(r)) / r - dp(r) / (r * r)) * (PI * z / a).sin()
            });
            let psi = solve_stream(&chi, &g, 0.0, 0.0).unwrap();
            let exact = ScalarField::from_fn(&g, |r, z| p(r) * (PI * z / a).sin());
            psi.sub(&exact).linf()
        };
        let order = (err(32) / err(64)).log2();
        assert!(order >= 1.8, "stream convergence order {order}");
    }

    #[test]
    fn recover_velocity_identity_on_polynomial() {
        // psi = r^2 z (interior in z; periodic stencils alias the seam):
        // v_r = r, v_z = -2z, and v_{r,r} + v_{z,z} + v_r/r = 1 - 2 + 1 = 0.
        let g = Grid::new(0.1, 1.0, 0.5, 16, 32).unwrap();
        let psi = ScalarField::from_fn(&g, |r, z| r * r * z);
        let (vr, vz) = recover_velocity(&psi);
        let div = vr.ddr().add(&vz.ddz()).add(&vr.div_r());
        for i in 1..g.nr {
            for j in 2..g.nz - 2 {
                assert_abs_diff_eq!(vr.values[(i, j)], g.r[i], epsilon = 1e-11);
                assert_abs_diff_eq!(vz.values[(i, j)], -2.0 * g.z[j], epsilon = 1e-11);
                assert_abs_diff_eq!(div.values[(i, j)], 0.0, epsilon = 1e-10);
            }
        }
        // psi = const gives v = 0
        let psi_c = ScalarField::from_fn(&g, |_, _| 4.2);
        let (vr, vz) = recover_velocity(&psi_c);
        assert!(vr.linf() < 1e-12 && vz.linf() < 1e-12);
    }

    #[test]
    fn eta_zero_rhs() {
        let g = Grid::new(0.05, 1.0, 0.5, 32, 16).unwrap();
        let theta = ScalarField::zeros(&g);
        let eta = solve_eta(&theta, &g, 0.5).unwrap();
        assert!(eta.linf() < 1e-13);
        assert!(solve_eta(&theta, &Grid::new(0.0, 1.0, 0.5, 16, 16).unwrap(), 0.5).is_err());
    }

    #[test]
    fn eta_forward_inverse_round_trip_and_residual() {
        let g = Grid::new(0.05, 1.0, 0.5, 64, 32).unwrap();
        let i_hi = g.nearest_r_index(0.5);
        let sub = g.subgrid_r(i_hi).unwrap();
        // manufactured eta with zero slope at the inner edge and compact
        // support before r_hi
        let ramp_in = crate::fields::Ramp::new(0.08, 0.15);
        let ramp_out = crate::fields::Ramp::new(0.35, 0.48);
        let eta_in = ScalarField::from_fn(&sub, |r, z| {
            ramp_in.eval(r) * (1.0 - ramp_out.eval(r)) * (1.2 + (2.0 * PI * z / 1.0).cos())
        });
        let theta = apply_op(OpKind::Eta, &eta_in);
        let solver = Helmholtz::new(&sub);
        let mut rhs = theta.clone();
        for j in 0..sub.nz {
            rhs.values[(sub.nr, j)] = 0.0;
        }
        let eta = solver.poisson_solve(OpKind::Eta, &rhs).unwrap();
        let rel = eta.sub(&eta_in).linf() / eta_in.linf();
        assert!(rel <= 1e-9, "eta round trip {rel}");
        assert!(relative_residual(OpKind::Eta, &eta, &theta) <= 1e-10);
    }

    #[test]
    fn eta_z_independent_matches_1d_quadrature_oracle() {
        // theta(r) = sin(3r): the radial ODE (r^3 eta_,r)_,r = r^3 theta
        // with zero flux at eps integrates to
        //   eta_,r(r) = r^-3 * int_eps^r s^3 sin(3s) ds,
        //   eta(r)    = -int_r^{r_hi} eta_,r(s) ds.
        let eps = 0.1;
        let r_hi = 0.6;
        let g = Grid::new(eps, 1.0, 0.5, 90, 8).unwrap();
        let theta = ScalarField::from_fn(&g, |r, _| (3.0 * r).sin());
        let eta = solve_eta(&theta, &g, r_hi).unwrap();

        let inner = |r: f64| {
            simpson_doubling(&|s| s * s * s * (3.0 * s).sin(), eps, r, ORACLE_TOL).unwrap_or(0.0)
        };
        let eta_r = move |r: f64| inner(r) / (r * r * r);
        let i_hi = g.nearest_r_index(r_hi);
        for i in (0..i_hi).step_by(9) {
            let r = g.r[i];
            let oracle = -simpson_doubling(&|s| eta_r(s), r, g.r[i_hi], 1e-9).unwrap();
            assert_abs_diff_eq!(eta.values[(i, 3)], oracle, epsilon = 5e-4);
        }
    }

    #[test]
    fn eta_coercivity_stable_under_refinement() {
        // ||eta||_{H^1} <= C ||theta|| with C stable in N
        let ratio_at = |n: usize| {
            let g = Grid::new(0.05, 1.0, 0.5, n, n).unwrap();
            let theta = ScalarField::from_fn(&g, |r, z| {
                let ramp = crate::fields::Ramp::new(0.08, 0.15);
                ramp.eval(r)
                    * (1.0 - crate::fields::Ramp::new(0.3, 0.45).eval(r))
                    * (1.0 + (2.0 * PI * z).sin())
            });
            let eta = solve_eta(&theta, &g, 0.5).unwrap();
            let h1 = (eta.l2_sq() + eta.ddr().l2_sq() + eta.ddz().l2_sq()).sqrt();
            h1 / theta.l2_sq().sqrt()
        };
        let c1 = ratio_at(48);
        let c2 = ratio_at(96);
        assert!((c1 / c2 - 1.0).abs() < 0.1, "coercivity drift {c1} vs {c2}");
    }
}
