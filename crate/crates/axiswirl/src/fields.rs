//! Scalar fields on the grid, axisymmetric differential operators, radial
//! cut-off functions, and the right-hand sides of the swirl and angular
//! vorticity evolution equations
//!
//!   u_t   = -v.grad u + nu*(Lap u - 2 u_,r / r),
//!   chi_t = -v.grad chi + (v_r/r) chi
//!           + nu*[(r (chi/r)_,r)_,r + chi_,zz + 2 (chi/r)_,r] + (u^2)_,z / r^3,
//!
//! with Lap f = (1/r)(r f_,r)_,r + f_,zz. The vorticity source is the
//! algebraic rewrite of 2 v_phi v_{phi,z} / r in the swirl variable u,
//! which keeps one unknown and avoids division by small v_phi.
//!
//! Stencils are second-order central with one-sided second-order closures
//! at the radial endpoints and periodic wraparound in z. Boundary ghosts
//! for the evolution operators are synthesized from the boundary
//! conditions: u_,r = 2u/r at r = R (slip), u_,r = 0 at r = eps,
//! chi = 0 on both walls, u = chi = 0 on the axis in axis mode.

use crate::error::{Error, Result};
use crate::grid::Grid;
use ndarray::Array2;
use std::sync::Arc;

/// One scalar unknown sampled on a grid; shape (nr+1, nz), r-index outer.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: Arc<Grid>,
    pub values: Array2<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: Array2::zeros((grid.n_r(), grid.nz)),
        }
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut v = Array2::zeros((grid.n_r(), grid.nz));
        for i in 0..grid.n_r() {
            for j in 0..grid.nz {
                v[(i, j)] = f(grid.r[i], grid.z[j]);
            }
        }
        ScalarField {
            grid: grid.clone(),
            values: v,
        }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Array2<f64>) -> Self {
        assert_eq!(values.dim(), (grid.n_r(), grid.nz));
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Integral of f r dr dz (2*pi-free).
    pub fn integrate(&self) -> f64 {
        self.grid.integrate_samples(&self.values.view())
    }

    /// Squared L2 norm: integral of f^2 r dr dz.
    pub fn l2_sq(&self) -> f64 {
        let sq = &self.values * &self.values;
        self.grid.integrate_samples(&sq.view())
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        ScalarField {
            grid: self.grid.clone(),
            values: &self.values * alpha,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        ScalarField {
            grid: self.grid.clone(),
            values: &self.values + &other.values,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        ScalarField {
            grid: self.grid.clone(),
            values: &self.values - &other.values,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        ScalarField {
            grid: self.grid.clone(),
            values: &self.values * &other.values,
        }
    }

    /// d/dr: central interior, one-sided second-order at the r endpoints.
    pub fn ddr(&self) -> Self {
        let g = &self.grid;
        let n = g.nr;
        let h = g.dr;
        let f = &self.values;
        let mut out = Array2::zeros(f.dim());
        for j in 0..g.nz {
            out[(0, j)] = (-3.0 * f[(0, j)] + 4.0 * f[(1, j)] - f[(2, j)]) / (2.0 * h);
            for i in 1..n {
                out[(i, j)] = (f[(i + 1, j)] - f[(i - 1, j)]) / (2.0 * h);
            }
            out[(n, j)] = (3.0 * f[(n, j)] - 4.0 * f[(n - 1, j)] + f[(n - 2, j)]) / (2.0 * h);
        }
        ScalarField {
            grid: g.clone(),
            values: out,
        }
    }

    /// d/dz: central with periodic wraparound.
    pub fn ddz(&self) -> Self {
        let g = &self.grid;
        let nz = g.nz;
        let h = g.dz;
        let f = &self.values;
        let mut out = Array2::zeros(f.dim());
        for i in 0..g.n_r() {
            for j in 0..nz {
                let jp = (j + 1) % nz;
                let jm = (j + nz - 1) % nz;
                out[(i, j)] = (f[(i, jp)] - f[(i, jm)]) / (2.0 * h);
            }
        }
        ScalarField {
            grid: g.clone(),
            values: out,
        }
    }

    /// d2/dz2, periodic.
    pub fn d2dz2(&self) -> Self {
        let g = &self.grid;
        let nz = g.nz;
        let h2 = g.dz * g.dz;
        let f = &self.values;
        let mut out = Array2::zeros(f.dim());
        for i in 0..g.n_r() {
            for j in 0..nz {
                let jp = (j + 1) % nz;
                let jm = (j + nz - 1) % nz;
                out[(i, j)] = (f[(i, jp)] - 2.0 * f[(i, j)] + f[(i, jm)]) / h2;
            }
        }
        ScalarField {
            grid: g.clone(),
            values: out,
        }
    }

    /// d2/dr2: central interior, one-sided second-order at the endpoints.
    pub fn d2dr2(&self) -> Self {
        let g = &self.grid;
        let n = g.nr;
        let h2 = g.dr * g.dr;
        let f = &self.values;
        let mut out = Array2::zeros(f.dim());
        for j in 0..g.nz {
            out[(0, j)] = (2.0 * f[(0, j)] - 5.0 * f[(1, j)] + 4.0 * f[(2, j)] - f[(3, j)]) / h2;
            for i in 1..n {
                out[(i, j)] = (f[(i + 1, j)] - 2.0 * f[(i, j)] + f[(i - 1, j)]) / h2;
            }
            out[(n, j)] =
                (2.0 * f[(n, j)] - 5.0 * f[(n - 1, j)] + 4.0 * f[(n - 2, j)] - f[(n - 3, j)]) / h2;
        }
        ScalarField {
            grid: g.clone(),
            values: out,
        }
    }

    /// f / r. At an axis node (r = 0) the value is the limit f_,r(0) for
    /// fields vanishing on the axis (odd or faster parity).
    pub fn div_r(&self) -> Self {
        let g = &self.grid;
        let f = &self.values;
        let mut out = Array2::zeros(f.dim());
        for i in 0..g.n_r() {
            let r = g.r[i];
            for j in 0..g.nz {
                if r > 0.0 {
                    out[(i, j)] = f[(i, j)] / r;
                } else {
                    out[(i, j)] = (-3.0 * f[(0, j)] + 4.0 * f[(1, j)] - f[(2, j)]) / (2.0 * g.dr);
                }
            }
        }
        ScalarField {
            grid: g.clone(),
            values: out,
        }
    }

    /// Axisymmetric Laplacian (1/r)(r f_,r)_,r + f_,zz.
    ///
    /// Interior nodes use the conservative flux form (exact on quadratics);
    /// radial endpoints use the expanded one-sided form. In axis mode the
    /// input must be even in r at r = 0, where the operator limits to
    /// 2 f_,rr(0) + f_,zz.
    pub fn laplacian_axisym(&self) -> Result<Self> {
        let g = &self.grid;
        if g.axis_mode() {
            self.check_even_parity_at_axis()?;
        }
        let n = g.nr;
        let h = g.dr;
        let f = &self.values;
        let fzz = self.d2dz2();
        let frr = self.d2dr2();
        let fr = self.ddr();
        let mut out = Array2::zeros(f.dim());
        for j in 0..g.nz {
            for i in 1..n {
                let rp = g.r[i] + 0.5 * h;
                let rm = g.r[i] - 0.5 * h;
                let flux = (rp * (f[(i + 1, j)] - f[(i, j)]) - rm * (f[(i, j)] - f[(i - 1, j)]))
                    / (h * h * g.r[i]);
                out[(i, j)] = flux + fzz.values[(i, j)];
            }
            if g.axis_mode() {
                out[(0, j)] = 2.0 * frr.values[(0, j)] + fzz.values[(0, j)];
            } else {
                out[(0, j)] = frr.values[(0, j)] + fr.values[(0, j)] / g.r[0] + fzz.values[(0, j)];
            }
            out[(n, j)] = frr.values[(n, j)] + fr.values[(n, j)] / g.r[n] + fzz.values[(n, j)];
        }
        Ok(ScalarField {
            grid: g.clone(),
            values: out,
        })
    }

    fn check_even_parity_at_axis(&self) -> Result<()> {
        let g = &self.grid;
        let mut slope = 0.0_f64;
        for j in 0..g.nz {
            let s = (-3.0 * self.values[(0, j)] + 4.0 * self.values[(1, j)] - self.values[(2, j)])
                / (2.0 * g.dr);
            slope = slope.max(s.abs());
        }
        let scale = self.linf() / (g.r_out - g.eps);
        if slope > 0.25 * scale.max(1e-300) && slope > 1e-12 {
            return Err(Error::Domain(format!(
                "axis mode requires even parity at r=0: |f_,r(0)| = {slope:.3e}"
            )));
        }
        Ok(())
    }
}

/// Polynomial C^3 smoothstep on [0,1]: s^4(35 - 84 s + 70 s^2 - 20 s^3),
/// rising 0 -> 1 with first three derivatives vanishing at both ends.
pub fn smootherstep(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        s * s * s * s * (35.0 - 84.0 * s + 70.0 * s * s - 20.0 * s * s * s)
    }
}

pub fn smootherstep_d1(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        let omx = 1.0 - s;
        140.0 * s * s * s * omx * omx * omx
    }
}

pub fn smootherstep_d2(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        let omx = 1.0 - s;
        420.0 * s * s * omx * omx * (1.0 - 2.0 * s)
    }
}

pub fn smootherstep_d3(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        840.0 * s * (1.0 - s) * (1.0 - 5.0 * s + 5.0 * s * s)
    }
}

/// Smooth radial ramp rising from 0 at `lo` to 1 at `hi` (C^3 joins).
/// Used for boundary-compatible initial data and manufactured solutions.
#[derive(Debug, Clone, Copy)]
pub struct Ramp {
    pub lo: f64,
    pub hi: f64,
}

impl Ramp {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo < hi, "ramp needs lo < hi");
        Ramp { lo, hi }
    }

    pub fn eval(&self, r: f64) -> f64 {
        smootherstep((r - self.lo) / (self.hi - self.lo))
    }

    pub fn d1(&self, r: f64) -> f64 {
        let w = self.hi - self.lo;
        smootherstep_d1((r - self.lo) / w) / w
    }

    pub fn d2(&self, r: f64) -> f64 {
        let w = self.hi - self.lo;
        smootherstep_d2((r - self.lo) / w) / (w * w)
    }

    pub fn d3(&self, r: f64) -> f64 {
        let w = self.hi - self.lo;
        smootherstep_d3((r - self.lo) / w) / (w * w * w)
    }
}

/// Smooth radial cut-off: zeta = 1 for r <= r_lo, 0 for r >= r_hi,
/// C^3 smoothstep in between, with the first three derivatives sampled
/// analytically. supp zeta_,r = [r_lo, r_hi].
#[derive(Debug, Clone)]
pub struct Cutoff {
    pub r_lo: f64,
    pub r_hi: f64,
    pub profile: ScalarField,
    pub d1: ScalarField,
    pub d2: ScalarField,
    pub d3: ScalarField,
}

impl Cutoff {
    pub fn build(grid: &Arc<Grid>, r_lo: f64, r_hi: f64) -> Result<Cutoff> {
        if r_lo >= r_hi {
            return Err(Error::Config(format!(
                "cutoff needs r_lo < r_hi, got r_lo={r_lo}, r_hi={r_hi}"
            )));
        }
        if r_lo < grid.eps || r_hi > grid.r_out {
            return Err(Error::Config(format!(
                "cutoff radii [{r_lo}, {r_hi}] outside grid [{}, {}]",
                grid.eps, grid.r_out
            )));
        }
        let ramp = Ramp::new(r_lo, r_hi);
        let profile = ScalarField::from_fn(grid, |r, _| 1.0 - ramp.eval(r));
        let d1 = ScalarField::from_fn(grid, |r, _| -ramp.d1(r));
        let d2 = ScalarField::from_fn(grid, |r, _| -ramp.d2(r));
        let d3 = ScalarField::from_fn(grid, |r, _| -ramp.d3(r));
        Ok(Cutoff {
            r_lo,
            r_hi,
            profile,
            d1,
            d2,
            d3,
        })
    }

    /// Pointwise zeta(r).
    pub fn zeta(&self, r: f64) -> f64 {
        1.0 - smootherstep((r - self.r_lo) / (self.r_hi - self.r_lo))
    }

    pub fn dzeta(&self, r: f64) -> f64 {
        let w = self.r_hi - self.r_lo;
        -smootherstep_d1((r - self.r_lo) / w) / w
    }
}

/// Swirl evolution right-hand side: -v.grad u + nu*(Lap u - 2 u_,r/r).
///
/// Diffusion uses the conservative form r*((1/r) u_,r)_,r + u_,zz with
/// boundary rows closed by the same ghosts as the implicit operator:
/// Neumann at r = eps (annulus) and the Robin slip condition at r = R.
/// In axis mode the axis row is Dirichlet u = 0 and the rhs there is 0.
pub fn swirl_rhs(u: &ScalarField, v_r: &ScalarField, v_z: &ScalarField, nu: f64) -> ScalarField {
    let g = &u.grid;
    let diff = swirl_diffusion(u);
    let ur = u.ddr();
    let uz = u.ddz();
    let mut out = Array2::zeros(u.values.dim());
    for i in 0..g.n_r() {
        for j in 0..g.nz {
            let adv =
                v_r.values[(i, j)] * ur.values[(i, j)] + v_z.values[(i, j)] * uz.values[(i, j)];
            out[(i, j)] = -adv + nu * diff.values[(i, j)];
        }
    }
    if g.axis_mode() {
        for j in 0..g.nz {
            out[(0, j)] = 0.0;
        }
    }
    ScalarField {
        grid: g.clone(),
        values: out,
    }
}

/// The swirl diffusion operator Lap u - 2 u_,r/r = r*((1/r) u_,r)_,r + u_,zz
/// with BC-consistent ghost rows (must stay in lockstep with the implicit
/// tridiagonal rows in `evolve`).
pub fn swirl_diffusion(u: &ScalarField) -> ScalarField {
    let g = &u.grid;
    let n = g.nr;
    let h = g.dr;
    let f = &u.values;
    let fzz = u.d2dz2();
    let mut out = Array2::zeros(f.dim());
    for j in 0..g.nz {
        for i in 1..n {
            let rp = g.r[i] + 0.5 * h;
            let rm = g.r[i] - 0.5 * h;
            let flux = g.r[i]
                * ((f[(i + 1, j)] - f[(i, j)]) / rp - (f[(i, j)] - f[(i - 1, j)]) / rm)
                / (h * h);
            out[(i, j)] = flux + fzz.values[(i, j)];
        }
        // inner row: Neumann ghost (annulus); axis row handled by caller
        if !g.axis_mode() {
            out[(0, j)] = 2.0 * (f[(1, j)] - f[(0, j)]) / (h * h) + fzz.values[(0, j)];
        }
        // outer row: Robin ghost u_{n+1} = u_{n-1} + (4h/R) u_n
        let r_out = g.r[n];
        let u_rr = (2.0 * f[(n - 1, j)] - (2.0 - 4.0 * h / r_out) * f[(n, j)]) / (h * h);
        let u_r_over_r = 2.0 * f[(n, j)] / (r_out * r_out);
        out[(n, j)] = u_rr - u_r_over_r + fzz.values[(n, j)];
    }
    ScalarField {
        grid: g.clone(),
        values: out,
    }
}

/// Angular vorticity diffusion (r (chi/r)_,r)_,r + chi_,zz + 2 (chi/r)_,r
/// = ((r chi)_,r / r)_,r + chi_,zz, conservative interior stencil with
/// Dirichlet walls (rows zeroed; chi vanishes there).
pub fn chi_diffusion(chi: &ScalarField) -> ScalarField {
    let g = &chi.grid;
    let n = g.nr;
    let h = g.dr;
    let f = &chi.values;
    let fzz = chi.d2dz2();
    let mut out = Array2::zeros(f.dim());
    for j in 0..g.nz {
        for i in 1..n {
            let rp = g.r[i] + 0.5 * h;
            let rm = g.r[i] - 0.5 * h;
            let flux = ((g.r[i + 1] * f[(i + 1, j)] - g.r[i] * f[(i, j)]) / rp
                - (g.r[i] * f[(i, j)] - g.r[i - 1] * f[(i - 1, j)]) / rm)
                / (h * h);
            out[(i, j)] = flux + fzz.values[(i, j)];
        }
        out[(0, j)] = 0.0;
        out[(n, j)] = 0.0;
    }
    ScalarField {
        grid: g.clone(),
        values: out,
    }
}

/// Angular vorticity right-hand side:
/// -v.grad chi + (v_r/r) chi + nu*B[chi] + (u^2)_,z / r^3.
pub fn chi_rhs(
    chi: &ScalarField,
    u: &ScalarField,
    v_r: &ScalarField,
    v_z: &ScalarField,
    nu: f64,
) -> ScalarField {
    let g = &chi.grid;
    let diff = chi_diffusion(chi);
    let cr = chi.ddr();
    let cz = chi.ddz();
    let u_sq = u.mul(u);
    let src_z = u_sq.ddz();
    let mut out = Array2::zeros(chi.values.dim());
    for i in 0..g.n_r() {
        let r = g.r[i];
        for j in 0..g.nz {
            let adv =
                v_r.values[(i, j)] * cr.values[(i, j)] + v_z.values[(i, j)] * cz.values[(i, j)];
            let stretch = if r > 0.0 {
                v_r.values[(i, j)] / r * chi.values[(i, j)]
            } else {
                0.0
            };
            let source = if r > 0.0 {
                src_z.values[(i, j)] / (r * r * r)
            } else {
                0.0
            };
            out[(i, j)] = -adv + stretch + nu * diff.values[(i, j)] + source;
        }
    }
    // Dirichlet walls: chi pinned to zero there
    for j in 0..g.nz {
        out[(0, j)] = 0.0;
        out[(g.nr, j)] = 0.0;
    }
    ScalarField {
        grid: g.clone(),
        values: out,
    }
}
