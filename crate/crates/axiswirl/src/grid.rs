//! Cylindrical annulus discretization and r-weighted quadrature.
//!
//! The domain is the meridional section of a periodic cylinder:
//! eps <= r <= R, z periodic on [-a, a]. All integrals carry the
//! cylindrical Jacobian r (dx = r dr dz); the angular factor 2*pi is
//! dropped uniformly, so every left/right-hand-side comparison in the
//! estimate suite is unaffected.
//!
//! Two domain modes exist:
//! * annulus mode (eps > 0): the regularized domain with artificial inner
//!   conditions v_r = 0, v_{z,r} = 0, u_{,r} = 0, chi = 0 at r = eps;
//! * axis mode (eps = 0): parity conditions at r = 0, used for
//!   exact-solution tests (rigid rotation is steady only here).

use crate::error::{Error, Result};
use ndarray::ArrayView2;
use std::sync::Arc;

/// Node-centered uniform grid on [eps, R] x [-a, a), z stored with `nz`
/// nodes and implicit wraparound (no duplicated seam node).
#[derive(Debug, Clone)]
pub struct Grid {
    /// Inner radius (0 in axis mode).
    pub eps: f64,
    /// Outer radius R.
    pub r_out: f64,
    /// Half-height a; z period is 2a.
    pub a: f64,
    /// Radial cell count; there are `nr + 1` radial nodes.
    pub nr: usize,
    /// Axial node count (even).
    pub nz: usize,
    pub dr: f64,
    pub dz: f64,
    /// Radial nodes r_i = eps + i*dr, endpoints exact.
    pub r: Vec<f64>,
    /// Axial nodes z_j = -a + j*dz.
    pub z: Vec<f64>,
}

impl Grid {
    pub fn new(eps: f64, r_out: f64, a: f64, nr: usize, nz: usize) -> Result<Arc<Grid>> {
        if !(eps >= 0.0 && eps < r_out) {
            return Err(Error::Config(format!(
                "degenerate annulus: require 0 <= eps < R, got eps={eps}, R={r_out}"
            )));
        }
        if a <= 0.0 {
            return Err(Error::Config(format!(
                "half-height must be positive, got a={a}"
            )));
        }
        if nr < 8 {
            return Err(Error::Config(format!("Nr >= 8 required, got {nr}")));
        }
        if nz < 8 {
            return Err(Error::Config(format!("Nz >= 8 required, got {nz}")));
        }
        if nz % 2 != 0 {
            return Err(Error::Config(format!("Nz must be even, got {nz}")));
        }
        let dr = (r_out - eps) / nr as f64;
        let dz = 2.0 * a / nz as f64;
        let mut r: Vec<f64> = (0..=nr).map(|i| eps + i as f64 * dr).collect();
        // Endpoint nodes must equal eps and R exactly.
        r[0] = eps;
        r[nr] = r_out;
        let z: Vec<f64> = (0..nz).map(|j| -a + j as f64 * dz).collect();
        Ok(Arc::new(Grid {
            eps,
            r_out,
            a,
            nr,
            nz,
            dr,
            dz,
            r,
            z,
        }))
    }

    /// True when the grid touches the symmetry axis (eps = 0).
    pub fn axis_mode(&self) -> bool {
        self.eps == 0.0
    }

    /// Number of radial nodes (nr + 1).
    pub fn n_r(&self) -> usize {
        self.nr + 1
    }

    /// 2*pi-free annulus volume: integral of r dr dz.
    pub fn volume(&self) -> f64 {
        (self.r_out * self.r_out - self.eps * self.eps) / 2.0 * 2.0 * self.a
    }

    /// Trapezoid weight in r for node i (without the r Jacobian).
    pub fn w_r(&self, i: usize) -> f64 {
        if i == 0 || i == self.nr {
            0.5 * self.dr
        } else {
            self.dr
        }
    }

    /// Integral of f(r,z) r dr dz: trapezoid in r, periodic rectangle in z.
    /// `values` has shape (nr+1, nz), r-index outer.
    pub fn integrate_samples(&self, values: &ArrayView2<f64>) -> f64 {
        assert_eq!(values.dim(), (self.n_r(), self.nz), "field shape mismatch");
        let mut total = 0.0;
        for i in 0..self.n_r() {
            let wr = self.w_r(i) * self.r[i];
            let mut row = 0.0;
            for j in 0..self.nz {
                row += values[(i, j)];
            }
            total += wr * row;
        }
        total * self.dz
    }

    /// Line integral over z at a fixed radial node (periodic rectangle rule).
    pub fn integrate_z_line(&self, values: &ArrayView2<f64>, i: usize) -> f64 {
        (0..self.nz).map(|j| values[(i, j)]).sum::<f64>() * self.dz
    }

    /// Index of the radial node nearest to radius `r_target`.
    pub fn nearest_r_index(&self, r_target: f64) -> usize {
        let i = ((r_target - self.eps) / self.dr).round() as isize;
        i.clamp(0, self.nr as isize) as usize
    }

    /// Sub-grid [eps, r[i_hi]] sharing spacings with `self`.
    pub fn subgrid_r(&self, i_hi: usize) -> Result<Arc<Grid>> {
        if i_hi < 8 || i_hi > self.nr {
            return Err(Error::Config(format!(
                "subgrid needs 8 <= i_hi <= nr, got i_hi={i_hi}, nr={}",
                self.nr
            )));
        }
        Grid::new(self.eps, self.r[i_hi], self.a, i_hi, self.nz)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;

    #[test]
    fn uniform_spacing_and_endpoints() {
        let g = Grid::new(0.0, 1.0, 1.0, 8, 8).unwrap();
        assert_abs_diff_eq!(g.dr, 0.125);
        assert_abs_diff_eq!(g.dz, 0.25);
        assert_eq!(g.r[0], 0.0);
        assert_eq!(g.r[8], 1.0);

        let g = Grid::new(0.1, 1.0, 0.5, 16, 16).unwrap();
        assert_eq!(g.r[0], 0.1);
        assert_eq!(g.r[16], 1.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Grid::new(0.5, 0.5, 1.0, 8, 8).is_err());
        assert!(Grid::new(0.6, 0.5, 1.0, 8, 8).is_err());
        assert!(Grid::new(0.0, 1.0, 1.0, 8, 9).is_err());
        assert!(Grid::new(0.0, 1.0, 1.0, 4, 8).is_err());
        assert!(Grid::new(0.0, 1.0, -1.0, 8, 8).is_err());
    }

    #[test]
    fn integrate_constants_exactly() {
        let g = Grid::new(0.0, 1.0, 1.0, 8, 8).unwrap();
        let ones = Array2::<f64>::ones((g.n_r(), g.nz));
        assert_abs_diff_eq!(g.integrate_samples(&ones.view()), 1.0, epsilon = 1e-14);

        let g = Grid::new(0.5, 1.0, 0.5, 8, 8).unwrap();
        let ones = Array2::<f64>::ones((g.n_r(), g.nz));
        assert_abs_diff_eq!(g.integrate_samples(&ones.view()), 0.375, epsilon = 1e-14);
    }

    #[test]
    fn integrate_r_converges_to_third() {
        // integral of r * r dr dz over [0,1]x[-0.5,0.5] is 1/3
        let g = Grid::new(0.0, 1.0, 0.5, 128, 8).unwrap();
        let mut f = Array2::<f64>::zeros((g.n_r(), g.nz));
        for i in 0..g.n_r() {
            for j in 0..g.nz {
                f[(i, j)] = g.r[i];
            }
        }
        assert_abs_diff_eq!(g.integrate_samples(&f.view()), 1.0 / 3.0, epsilon = 1e-4);
    }

    #[test]
    fn integrate_refinement_order() {
        // smooth integrand: measured order >= 1.8 under refinement
        let exact = {
            // integral of sin(pi r) * r dr over [0,1] = 1/pi  (times 2a=1)
            1.0 / std::f64::consts::PI
        };
        let err_at = |n: usize| {
            let g = Grid::new(0.0, 1.0, 0.5, n, 8).unwrap();
            let mut f = Array2::<f64>::zeros((g.n_r(), g.nz));
            for i in 0..g.n_r() {
                for j in 0..g.nz {
                    f[(i, j)] = (std::f64::consts::PI * g.r[i]).sin();
                }
            }
            (g.integrate_samples(&f.view()) - exact).abs()
        };
        let e1 = err_at(32);
        let e2 = err_at(64);
        let order = (e1 / e2).log2();
        assert!(order >= 1.8, "measured order {order} < 1.8");
    }

    #[test]
    fn integrate_linear_and_monotone() {
        let g = Grid::new(0.1, 1.0, 0.5, 16, 8).unwrap();
        let mut f = Array2::<f64>::zeros((g.n_r(), g.nz));
        let mut h = Array2::<f64>::zeros((g.n_r(), g.nz));
        for i in 0..g.n_r() {
            for j in 0..g.nz {
                f[(i, j)] = (3.0 * g.r[i]).cos() + g.z[j];
                h[(i, j)] = f[(i, j)].abs() + 0.5;
            }
        }
        let int_f = g.integrate_samples(&f.view());
        let int_h = g.integrate_samples(&h.view());
        let combo = &f * 2.0 + &h * (-3.0);
        assert_abs_diff_eq!(
            g.integrate_samples(&combo.view()),
            2.0 * int_f - 3.0 * int_h,
            epsilon = 1e-12
        );
        // h >= f pointwise (h = |f| + 0.5) implies monotonicity
        assert!(int_h >= int_f);
    }
}
