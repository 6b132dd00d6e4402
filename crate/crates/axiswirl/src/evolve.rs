//! Time integration of the coupled (u, chi, psi) system with velocity
//! recovery each step.
//!
//! The default scheme is first-order IMEX: diffusion (including the
//! singular 2 nu u_,r/r and (chi/r) terms) is implicit via the per-mode
//! tridiagonal solves, advection plus the vortex-stretch and swirl-source
//! terms are explicit. An optional Strang splitting (Crank-Nicolson half
//! steps around a midpoint advection step) gives second order in time.
//! The stream function is re-solved from the updated chi every step and
//! the meridional velocity recovered from it, so v_r = psi_,z/r and
//! v_z = -psi_,r/r hold discretely at every accepted state.

use crate::elliptic::{self, Helmholtz, OpKind};
use crate::error::{Error, Result};
use crate::fields::{Cutoff, Ramp, ScalarField};
use crate::grid::Grid;
use crate::monitors::{self, ids, FieldSeries, MonitorSeries};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Initial-data library. Gaussian/ring profiles are multiplied by ramp
/// cutoffs so the inner and outer wall conditions hold exactly.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialField {
    Zero,
    /// u0 = amplitude * exp(-((r-center_r)^2 + z^2)/sigma^2) * r^2/center_r^2,
    /// ramped to satisfy the wall conditions.
    GaussianSwirl {
        amplitude: f64,
        center_r: f64,
        sigma: f64,
    },
    /// chi0 = amplitude * exp(-((r-center_r)^2 + (z-center_z)^2)/sigma^2), ramped.
    VortexRing {
        amplitude: f64,
        center_r: f64,
        center_z: f64,
        sigma: f64,
    },
    /// chi0 = amplitude * sin(pi z / a) * radial bump.
    SineRing {
        amplitude: f64,
    },
    /// u0 = omega r^2 (exactly steady in axis mode; no ramps applied).
    RigidRotation {
        omega: f64,
    },
}

impl InitialField {
    pub fn build(&self, grid: &Arc<Grid>) -> ScalarField {
        let w = grid.r_out - grid.eps;
        let ramp_in = Ramp::new(grid.eps, grid.eps + 0.15 * w);
        let ramp_out = Ramp::new(grid.r_out - 0.2 * w, grid.r_out - 0.05 * w);
        let bump = move |r: f64| ramp_in.eval(r) * (1.0 - ramp_out.eval(r));
        match *self {
            InitialField::Zero => ScalarField::zeros(grid),
            InitialField::GaussianSwirl {
                amplitude,
                center_r,
                sigma,
            } => ScalarField::from_fn(grid, move |r, z| {
                amplitude
                    * (-((r - center_r).powi(2) + z * z) / (sigma * sigma)).exp()
                    * (r * r / (center_r * center_r))
                    * bump(r)
            }),
            InitialField::VortexRing {
                amplitude,
                center_r,
                center_z,
                sigma,
            } => ScalarField::from_fn(grid, move |r, z| {
                amplitude
                    * (-((r - center_r).powi(2) + (z - center_z).powi(2)) / (sigma * sigma)).exp()
                    * bump(r)
            }),
            InitialField::SineRing { amplitude } => {
                let a = grid.a;
                ScalarField::from_fn(grid, move |r, z| {
                    amplitude * (std::f64::consts::PI * z / a).sin() * bump(r)
                })
            }
            InitialField::RigidRotation { omega } => {
                ScalarField::from_fn(grid, move |r, _| omega * r * r)
            }
        }
    }
}

/// Grid parameters as plain data.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct GridSpec {
    pub eps: f64,
    pub r_out: f64,
    pub a: f64,
    pub nr: usize,
    pub nz: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<Arc<Grid>> {
        Grid::new(self.eps, self.r_out, self.a, self.nr, self.nz)
    }
}

/// Run parameters. The stability guard dt <= cfl_safety * min(dr,dz)^2/nu
/// bounds the explicit part (diffusion itself is implicit; the guard
/// limits splitting and advection error) and is enforced at construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub nu: f64,
    pub dt: f64,
    pub t_final: f64,
    /// Cut-off plateau radius r0 (support is 2 r0).
    pub r0: f64,
    pub cfl_safety: f64,
    pub second_order: bool,
    pub initial_u: InitialField,
    pub initial_chi: InitialField,
    /// Steps between monitor samples.
    pub cadence: usize,
    pub psi_inner: f64,
    pub psi_outer: f64,
    /// Record swirl snapshots for the Holder diagnostic.
    pub collect_u_snapshots: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let g = self.grid;
        if self.nu <= 0.0 {
            return Err(Error::Config(format!(
                "viscosity must be positive, got {}",
                self.nu
            )));
        }
        // T = 0 is allowed and produces only the initial sample
        if self.dt <= 0.0 || (self.t_final != 0.0 && self.t_final < self.dt) {
            return Err(Error::Config(format!(
                "need 0 < dt <= T (or T = 0), got dt={}, T={}",
                self.dt, self.t_final
            )));
        }
        if !(self.r0 > g.eps) {
            return Err(Error::Config(format!(
                "cut-off radius must satisfy eps < r0, got eps={}, r0={}",
                g.eps, self.r0
            )));
        }
        if !(2.0 * self.r0 < g.r_out) {
            return Err(Error::Config(format!(
                "cut-off radius must satisfy 2 r0 < R, got r0={}, R={}",
                self.r0, g.r_out
            )));
        }
        let dr = (g.r_out - g.eps) / g.nr as f64;
        let dz = 2.0 * g.a / g.nz as f64;
        let h = dr.min(dz);
        let bound = self.cfl_safety * h * h / self.nu;
        if self.dt > bound {
            return Err(Error::Config(format!(
                "stability bound violated: dt={} > cfl_safety*min(dr,dz)^2/nu = {bound:.3e}",
                self.dt
            )));
        }
        if self.cadence == 0 {
            return Err(Error::Config("monitor cadence must be >= 1".into()));
        }
        Ok(())
    }
}

/// Time-stamped flow snapshot. v_r and v_z are always recovered from psi,
/// never independently evolved.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub u: ScalarField,
    pub chi: ScalarField,
    pub psi: ScalarField,
    pub v_r: ScalarField,
    pub v_z: ScalarField,
}

/// Space-time forcing added to the right-hand sides (manufactured
/// solution support).
pub trait Forcing {
    fn f_u(&self, r: f64, z: f64, t: f64) -> f64;
    fn f_chi(&self, r: f64, z: f64, t: f64) -> f64;
}

/// Forcing-free marker.
pub struct NoForcing;

impl Forcing for NoForcing {
    fn f_u(&self, _: f64, _: f64, _: f64) -> f64 {
        0.0
    }
    fn f_chi(&self, _: f64, _: f64, _: f64) -> f64 {
        0.0
    }
}

pub struct Stepper {
    pub grid: Arc<Grid>,
    pub cfg: RunConfig,
    helm: Helmholtz,
}

impl Stepper {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        Self::with_threads(cfg, 1)
    }

    pub fn with_threads(cfg: RunConfig, threads: usize) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.grid.build()?;
        let helm = Helmholtz::with_threads(&grid, threads);
        Ok(Stepper { grid, cfg, helm })
    }

    /// Build the initial state: sample u0 and chi0, solve psi, recover v.
    pub fn initial_state(&self) -> Result<FlowState> {
        let u = self.cfg.initial_u.build(&self.grid);
        let mut chi = self.cfg.initial_chi.build(&self.grid);
        self.pin_chi_walls(&mut chi);
        self.assemble(0.0, u, chi)
    }

    fn pin_chi_walls(&self, chi: &mut ScalarField) {
        for j in 0..self.grid.nz {
            chi.values[(0, j)] = 0.0;
            chi.values[(self.grid.nr, j)] = 0.0;
        }
    }

    fn assemble(&self, t: f64, u: ScalarField, chi: ScalarField) -> Result<FlowState> {
        if !u.is_finite() || !chi.is_finite() {
            return Err(Error::BlowUp {
                t,
                what: "non-finite u or chi after step".into(),
            });
        }
        let psi = elliptic::solve_stream(&chi, &self.grid, self.cfg.psi_inner, self.cfg.psi_outer)?;
        if !psi.is_finite() {
            return Err(Error::BlowUp {
                t,
                what: "non-finite stream function".into(),
            });
        }
        let (v_r, v_z) = elliptic::recover_velocity(&psi);
        Ok(FlowState {
            t,
            u,
            chi,
            psi,
            v_r,
            v_z,
        })
    }

    /// Explicit right-hand sides (advection + stretch + source + forcing)
    /// at the given state and time.
    fn explicit_rhs(
        &self,
        u: &ScalarField,
        chi: &ScalarField,
        v_r: &ScalarField,
        v_z: &ScalarField,
        t: f64,
        forcing: &dyn Forcing,
    ) -> (ScalarField, ScalarField) {
        let g = &self.grid;
        let ur = u.ddr();
        let uz = u.ddz();
        let cr = chi.ddr();
        let cz = chi.ddz();
        let u_sq_z = u.mul(u).ddz();
        let mut eu = ScalarField::zeros(g);
        let mut ec = ScalarField::zeros(g);
        for i in 0..g.n_r() {
            let r = g.r[i];
            for j in 0..g.nz {
                let z = g.z[j];
                let adv_u =
                    v_r.values[(i, j)] * ur.values[(i, j)] + v_z.values[(i, j)] * uz.values[(i, j)];
                eu.values[(i, j)] = -adv_u + forcing.f_u(r, z, t);
                let adv_c =
                    v_r.values[(i, j)] * cr.values[(i, j)] + v_z.values[(i, j)] * cz.values[(i, j)];
                let stretch = if r > 0.0 {
                    v_r.values[(i, j)] / r * chi.values[(i, j)]
                } else {
                    0.0
                };
                let source = if r > 0.0 {
                    u_sq_z.values[(i, j)] / (r * r * r)
                } else {
                    0.0
                };
                ec.values[(i, j)] = -adv_c + stretch + source + forcing.f_chi(r, z, t);
            }
        }
        // pinned rows: u axis row (axis mode), chi walls
        if g.axis_mode() {
            for j in 0..g.nz {
                eu.values[(0, j)] = 0.0;
            }
        }
        for j in 0..g.nz {
            ec.values[(0, j)] = 0.0;
            ec.values[(g.nr, j)] = 0.0;
        }
        (eu, ec)
    }

    /// One time step. Default: backward-Euler diffusion over the full dt
    /// with a forward-Euler explicit part. Second order: Strang splitting
    /// D(dt/2) A(dt) D(dt/2) with Crank-Nicolson diffusion halves and a
    /// midpoint advection step (psi re-solved at the inner stage).
    pub fn step(&self, state: &FlowState, forcing: &dyn Forcing) -> Result<FlowState> {
        let dt = self.cfg.dt;
        let nu = self.cfg.nu;
        let t = state.t;
        if !self.cfg.second_order {
            let (eu, ec) =
                self.explicit_rhs(&state.u, &state.chi, &state.v_r, &state.v_z, t, forcing);
            let u_rhs = state.u.add(&eu.scaled(dt));
            let c_rhs = state.chi.add(&ec.scaled(dt));
            let u_new = self
                .helm
                .diffusion_step(OpKind::SwirlDiff, &u_rhs, nu * dt, 0.0)?;
            let mut c_new = self
                .helm
                .diffusion_step(OpKind::ChiDiff, &c_rhs, nu * dt, 0.0)?;
            self.pin_chi_walls(&mut c_new);
            return self.assemble(t + dt, u_new, c_new);
        }
        // Strang: CN diffusion half step
        let c = nu * dt / 4.0;
        let u1 = self
            .helm
            .diffusion_step(OpKind::SwirlDiff, &state.u, c, c)?;
        let mut c1 = self
            .helm
            .diffusion_step(OpKind::ChiDiff, &state.chi, c, c)?;
        self.pin_chi_walls(&mut c1);
        // midpoint advection over dt, velocities re-solved at the half stage
        let psi1 = elliptic::solve_stream(&c1, &self.grid, self.cfg.psi_inner, self.cfg.psi_outer)?;
        let (vr1, vz1) = elliptic::recover_velocity(&psi1);
        let (k1u, k1c) = self.explicit_rhs(&u1, &c1, &vr1, &vz1, t, forcing);
        let u_mid = u1.add(&k1u.scaled(dt / 2.0));
        let mut c_mid = c1.add(&k1c.scaled(dt / 2.0));
        self.pin_chi_walls(&mut c_mid);
        let psi_mid =
            elliptic::solve_stream(&c_mid, &self.grid, self.cfg.psi_inner, self.cfg.psi_outer)?;
        let (vr_mid, vz_mid) = elliptic::recover_velocity(&psi_mid);
        let (k2u, k2c) = self.explicit_rhs(&u_mid, &c_mid, &vr_mid, &vz_mid, t + dt / 2.0, forcing);
        let u2 = u1.add(&k2u.scaled(dt));
        let mut c2 = c1.add(&k2c.scaled(dt));
        self.pin_chi_walls(&mut c2);
        // CN diffusion half step
        let u_new = self.helm.diffusion_step(OpKind::SwirlDiff, &u2, c, c)?;
        let mut c_new = self.helm.diffusion_step(OpKind::ChiDiff, &c2, c, c)?;
        self.pin_chi_walls(&mut c_new);
        self.assemble(t + dt, u_new, c_new)
    }
}

/// Result of a full run: final state, monitor series, and (optionally)
/// swirl snapshots for the Holder diagnostic.
pub struct RunOutput {
    pub state: FlowState,
    pub series: MonitorSeries,
    pub u_snapshots: FieldSeries,
}

/// Integrate to t_final, sampling the monitor functionals at the
/// configured cadence (plus the initial and final states).
pub fn run(cfg: RunConfig) -> Result<RunOutput> {
    run_forced(cfg, &NoForcing)
}

/// Richardson self-convergence study in dt at a fixed grid: four runs at
/// dt0 / 2^k, k = 0..3, and the two successive measured orders of the
/// L2 differences in chi. The measured order approaches the scheme order
/// from one side as O(dt), so the asymptotic value is estimated by
/// extrapolating the order sequence (2*o2 - o1).
pub fn time_self_convergence(base: &RunConfig, dt0: f64) -> Result<([f64; 2], f64)> {
    let run_with_dt = |dt: f64| -> Result<FlowState> {
        let mut cfg = base.clone();
        cfg.dt = dt;
        Ok(run(cfg)?.state)
    };
    let s = [
        run_with_dt(dt0)?,
        run_with_dt(dt0 / 2.0)?,
        run_with_dt(dt0 / 4.0)?,
        run_with_dt(dt0 / 8.0)?,
    ];
    let e = [
        s[0].chi.sub(&s[1].chi).l2_sq().sqrt(),
        s[1].chi.sub(&s[2].chi).l2_sq().sqrt(),
        s[2].chi.sub(&s[3].chi).l2_sq().sqrt(),
    ];
    let orders = [(e[0] / e[1]).log2(), (e[1] / e[2]).log2()];
    Ok((orders, 2.0 * orders[1] - orders[0]))
}

pub fn run_forced(cfg: RunConfig, forcing: &dyn Forcing) -> Result<RunOutput> {
    run_forced_threads(cfg, forcing, 1)
}

pub fn run_forced_threads(
    cfg: RunConfig,
    forcing: &dyn Forcing,
    threads: usize,
) -> Result<RunOutput> {
    let stepper = Stepper::with_threads(cfg.clone(), threads)?;
    let cutoff = Cutoff::build(&stepper.grid, cfg.r0, 2.0 * cfg.r0)?;
    let mut series = MonitorSeries::new(ids::ALL);
    let mut snapshots = FieldSeries::new();
    let mut state = stepper.initial_state()?;
    let sample =
        |s: &FlowState| monitors::monitor_row(&s.u, &s.chi, &s.v_r, &s.v_z, &cutoff, cfg.nu);
    series.push_sample(0.0, sample(&state));
    if cfg.collect_u_snapshots {
        snapshots.push(0.0, state.u.clone());
    }
    let n_steps = if cfg.t_final == 0.0 {
        0
    } else {
        (cfg.t_final / cfg.dt).round().max(1.0) as usize
    };
    for k in 1..=n_steps {
        state = stepper.step(&state, forcing)?;
        if k % cfg.cadence == 0 || k == n_steps {
            series.push_sample(state.t, sample(&state));
            if cfg.collect_u_snapshots {
                snapshots.push(state.t, state.u.clone());
            }
        }
    }
    Ok(RunOutput {
        state,
        series,
        u_snapshots: snapshots,
    })
}
