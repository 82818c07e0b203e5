//! Backward-induction solver for the optimal information-provision problem.
//!
//! The value function `V(A, I, t)` is stepped backward from the horizon on a uniform
//! `(A, I)` grid with an explicit scheme. At every node both admissible controls
//! `u in {0, u_max}` are evaluated through the discretised generator and the larger
//! Hamiltonian wins, which yields the bang-bang control field directly.
//!
//! Discretisation:
//! * advection in `A` is upwinded by the sign of `mu(I) A`; advection in `I` (rate
//!   `alpha0 u >= 0`) uses forward differences;
//! * diffusion and the `A`-`I` cross term use central differences;
//! * at `A = a_max` and at both `I` edges, one-sided second-order stencils replace the
//!   missing neighbours;
//! * `V = 0` on the `A = B` row (disengaged, nothing more to earn) and at `t = T`.

mod io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;

pub use io::{read_solution, write_solution, write_value_csv, DUMP_MAGIC, DUMP_VERSION};

/// Fraction of the explicit stability bound used as the solver step.
pub const STABILITY_SAFETY: f64 = 0.9;

/// Points at which grid refinement is measured, as `(a, i, t)`.
pub const REFINEMENT_PROBES: [(f64, f64, f64); 3] = [(1.5, 1.0, 0.0), (1.0, 2.0, 5.0), (0.7, 3.0, 5.0)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Lower autonomy edge; always the disengagement boundary.
    pub a_min: f64,
    pub a_max: f64,
    pub n_a: usize,
    /// Upper information edge (the lower edge is 0).
    pub i_max: f64,
    pub n_i: usize,
    /// Number of stored time intervals over `[0, horizon]`.
    pub n_t: usize,
    /// Explicit solver step. `None` picks `STABILITY_SAFETY` times the stability bound.
    pub time_step: Option<f64>,
}

impl GridSpec {
    /// 200 x 100 nodes over `[B, 3] x [0, i_max]`, 200 stored time intervals.
    pub fn default_for(params: &ModelParams) -> Self {
        Self::with_resolution(params, 200, 100)
    }

    pub fn with_resolution(params: &ModelParams, n_a: usize, n_i: usize) -> Self {
        Self { a_min: params.boundary(), a_max: 3.0, n_a, i_max: params.i_max, n_i, n_t: 200, time_step: None }
    }

    /// The same domain with `n_a` and `n_i` doubled.
    pub fn refined(&self) -> Self {
        Self { n_a: 2 * self.n_a, n_i: 2 * self.n_i, ..*self }
    }

    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        if self.a_min != params.boundary() {
            return Err(Error::IncompatibleGrid(format!("a_min {} differs from boundary {}", self.a_min, params.boundary())));
        }
        if !(self.a_max >= 2.5) {
            return Err(Error::IncompatibleGrid(format!("a_max must be >= 2.5, got {}", self.a_max)));
        }
        if self.i_max != params.i_max {
            return Err(Error::IncompatibleGrid(format!("grid i_max {} differs from model i_max {}", self.i_max, params.i_max)));
        }
        if self.n_a < 50 || self.n_i < 50 {
            return Err(Error::IncompatibleGrid(format!("need n_a, n_i >= 50, got {} x {}", self.n_a, self.n_i)));
        }
        if self.n_t == 0 {
            return Err(Error::IncompatibleGrid("n_t must be >= 1".into()));
        }
        if let Some(dt) = self.time_step {
            if !(dt > 0.0) {
                return Err(Error::IncompatibleGrid(format!("time_step must be > 0, got {dt}")));
            }
        }
        Ok(())
    }

    pub fn da(&self) -> f64 {
        (self.a_max - self.a_min) / (self.n_a - 1) as f64
    }

    pub fn di(&self) -> f64 {
        self.i_max / (self.n_i - 1) as f64
    }

    pub fn a_at(&self, j: usize) -> f64 {
        if j + 1 == self.n_a {
            self.a_max
        } else {
            self.a_min + j as f64 * self.da()
        }
    }

    pub fn i_at(&self, k: usize) -> f64 {
        if k + 1 == self.n_i {
            self.i_max
        } else {
            k as f64 * self.di()
        }
    }

    /// Largest stable explicit step: the reciprocal of the largest total outflow rate of
    /// the scheme over all nodes and both controls.
    pub fn stability_bound(&self, p: &ModelParams) -> f64 {
        let (da, di) = (self.da(), self.di());
        let mut worst: f64 = 0.0;
        for j in 1..self.n_a {
            let a = self.a_at(j);
            for k in 0..self.n_i {
                let i = self.i_at(k);
                let rate = (p.sigma_a * a / da).powi(2)
                    + (p.sigma_i / di).powi(2)
                    + (p.drift_rate(i) * a).abs() / da
                    + p.alpha0 * p.u_max / di
                    + (p.rho * p.sigma_a * p.sigma_i * a).abs() / (da * di)
                    + p.delta;
                worst = worst.max(rate);
            }
        }
        if worst > 0.0 {
            1.0 / worst
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub stability_bound: f64,
    /// Explicit step actually used.
    pub substep: f64,
    pub substeps_per_interval: usize,
    pub total_steps: usize,
}

/// Value and control grids at the stored time levels.
#[derive(Debug, Clone, PartialEq)]
pub struct HjbSolution {
    pub params: ModelParams,
    pub grid: GridSpec,
    /// Stored time levels `0 = t_0 < ... < t_{n_t} = horizon`.
    pub times: Vec<f64>,
    /// `values[(s * n_a + j) * n_i + k]` is `V(a_j, i_k, t_s)`.
    pub values: Vec<f64>,
    /// 1 where `u* = u_max`, 0 where `u* = 0`; same layout as `values`.
    pub controls: Vec<u8>,
    pub diagnostics: SolveDiagnostics,
}

struct NodeCoefficients {
    adv: Vec<f64>,
    diff_a: Vec<f64>,
    cross: Vec<f64>,
    reward: Vec<f64>,
}

impl NodeCoefficients {
    fn new(p: &ModelParams, g: &GridSpec) -> Self {
        let n = g.n_a * g.n_i;
        let mut c = Self { adv: vec![0.0; n], diff_a: vec![0.0; n], cross: vec![0.0; n], reward: vec![0.0; n] };
        for j in 0..g.n_a {
            let a = g.a_at(j);
            for k in 0..g.n_i {
                let i = g.i_at(k);
                let idx = j * g.n_i + k;
                c.adv[idx] = p.drift_rate(i) * a;
                c.diff_a[idx] = 0.5 * p.sigma_a * p.sigma_a * a * a;
                c.cross[idx] = p.rho * p.sigma_a * p.sigma_i * a;
                c.reward[idx] = p.reward_value(a, i, 0.0);
            }
        }
        c
    }
}

struct Stepper<'a> {
    p: &'a ModelParams,
    g: &'a GridSpec,
    coef: NodeCoefficients,
    da: f64,
    di: f64,
}

impl Stepper<'_> {
    /// dV/dA at (j, k) from central differences, one-sided at the top row.
    #[inline]
    fn da_central(&self, v: &[f64], j: usize, k: usize) -> f64 {
        let n_i = self.g.n_i;
        let at = |jj: usize| v[jj * n_i + k];
        if j + 1 < self.g.n_a {
            (at(j + 1) - at(j - 1)) / (2.0 * self.da)
        } else {
            (3.0 * at(j) - 4.0 * at(j - 1) + at(j - 2)) / (2.0 * self.da)
        }
    }

    /// One explicit backward step of the row `j >= 1`. Writes new values and controls.
    fn step_row(&self, v: &[f64], j: usize, dt: f64, out: &mut [f64], ctrl: &mut [u8]) {
        let (n_a, n_i) = (self.g.n_a, self.g.n_i);
        let (da, di) = (self.da, self.di);
        let p = self.p;
        let row = &v[j * n_i..(j + 1) * n_i];
        let half_si2 = 0.5 * p.sigma_i * p.sigma_i;
        let top = j + 1 == n_a;
        for k in 0..n_i {
            let idx = j * n_i + k;
            let vc = row[k];
            let up = |jj: usize| v[jj * n_i + k];
            let adv = self.coef.adv[idx];

            let v_a = if adv >= 0.0 {
                if top {
                    (3.0 * vc - 4.0 * up(j - 1) + up(j - 2)) / (2.0 * da)
                } else {
                    (up(j + 1) - vc) / da
                }
            } else {
                (vc - up(j - 1)) / da
            };
            let v_aa = if top {
                (2.0 * vc - 5.0 * up(j - 1) + 4.0 * up(j - 2) - up(j - 3)) / (da * da)
            } else {
                (up(j + 1) - 2.0 * vc + up(j - 1)) / (da * da)
            };
            let v_ii = if k == 0 {
                (2.0 * row[0] - 5.0 * row[1] + 4.0 * row[2] - row[3]) / (di * di)
            } else if k + 1 == n_i {
                (2.0 * row[k] - 5.0 * row[k - 1] + 4.0 * row[k - 2] - row[k - 3]) / (di * di)
            } else {
                (row[k + 1] - 2.0 * vc + row[k - 1]) / (di * di)
            };
            let v_ai = if k == 0 {
                (-3.0 * self.da_central(v, j, 0) + 4.0 * self.da_central(v, j, 1) - self.da_central(v, j, 2)) / (2.0 * di)
            } else if k + 1 == n_i {
                (3.0 * self.da_central(v, j, k) - 4.0 * self.da_central(v, j, k - 1) + self.da_central(v, j, k - 2)) / (2.0 * di)
            } else {
                (self.da_central(v, j, k + 1) - self.da_central(v, j, k - 1)) / (2.0 * di)
            };
            let v_i_forward = if k + 1 < n_i { (row[k + 1] - vc) / di } else { (3.0 * vc - 4.0 * row[k - 1] + row[k - 2]) / (2.0 * di) };

            let base = adv * v_a + self.coef.diff_a[idx] * v_aa + half_si2 * v_ii + self.coef.cross[idx] * v_ai + self.coef.reward[idx]
                - p.delta * vc;
            let gain = (p.alpha0 * v_i_forward - p.c) * p.u_max;
            let (h, u) = if gain > 0.0 { (base + gain, 1) } else { (base, 0) };
            out[k] = vc + dt * h;
            ctrl[k] = u;
        }
    }

    fn step(&self, v: &[f64], dt: f64, next: &mut [f64], ctrl: &mut [u8]) {
        let n_i = self.g.n_i;
        next.par_chunks_mut(n_i).zip(ctrl.par_chunks_mut(n_i)).enumerate().for_each(|(j, (out, c))| {
            if j == 0 {
                out.fill(0.0);
                c.fill(0);
            } else {
                self.step_row(v, j, dt, out, c);
            }
        });
    }
}

/// Solves for the value function and the bang-bang control on `grid`.
pub fn solve_hjb(params: &ModelParams, grid: &GridSpec) -> Result<HjbSolution> {
    params.validate_structure()?;
    grid.validate(params)?;
    let bound = grid.stability_bound(params);
    let interval = params.horizon / grid.n_t as f64;
    let substeps = match grid.time_step {
        Some(dt) if dt > bound => return Err(Error::Stability { dt, bound }),
        Some(dt) => (interval / dt).ceil().max(1.0) as usize,
        None => (interval / (STABILITY_SAFETY * bound)).ceil().max(1.0) as usize,
    };
    let dt = interval / substeps as f64;
    if dt > bound {
        return Err(Error::Stability { dt, bound });
    }

    let nodes = grid.n_a * grid.n_i;
    let slices = grid.n_t + 1;
    let stepper = Stepper { p: params, g: grid, coef: NodeCoefficients::new(params, grid), da: grid.da(), di: grid.di() };
    let mut values = vec![0.0; slices * nodes];
    let mut controls = vec![0u8; slices * nodes];
    let mut v = vec![0.0; nodes];
    let mut next = vec![0.0; nodes];
    let mut ctrl = vec![0u8; nodes];

    // Terminal slice: V = 0; the control there is the decision taken against V = 0.
    let mut scratch = vec![0.0; nodes];
    stepper.step(&v, 0.0, &mut scratch, &mut ctrl);
    controls[grid.n_t * nodes..].copy_from_slice(&ctrl);

    for s in (0..grid.n_t).rev() {
        for _ in 0..substeps {
            stepper.step(&v, dt, &mut next, &mut ctrl);
            std::mem::swap(&mut v, &mut next);
        }
        if let Some(pos) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { t: s as f64 * interval, a: grid.a_at(pos / grid.n_i), i: grid.i_at(pos % grid.n_i) });
        }
        values[s * nodes..(s + 1) * nodes].copy_from_slice(&v);
        controls[s * nodes..(s + 1) * nodes].copy_from_slice(&ctrl);
    }

    let times = (0..slices).map(|s| if s == grid.n_t { params.horizon } else { s as f64 * interval }).collect();
    Ok(HjbSolution {
        params: *params,
        grid: *grid,
        times,
        values,
        controls,
        diagnostics: SolveDiagnostics {
            stability_bound: bound,
            substep: dt,
            substeps_per_interval: substeps,
            total_steps: substeps * grid.n_t,
        },
    })
}

impl HjbSolution {
    fn nodes(&self) -> usize {
        self.grid.n_a * self.grid.n_i
    }

    fn check(&self, a: f64, i: f64, t: f64) -> Result<()> {
        const EPS: f64 = 1e-9;
        let g = &self.grid;
        let inside =
            a >= g.a_min - EPS && a <= g.a_max + EPS && i >= -EPS && i <= g.i_max + EPS && t >= -EPS && t <= self.params.horizon + EPS;
        if inside {
            Ok(())
        } else {
            Err(Error::OutOfGrid { a, i, t })
        }
    }

    /// Value at node `(j, k)` of stored slice `s`.
    pub fn value_node(&self, s: usize, j: usize, k: usize) -> f64 {
        self.values[s * self.nodes() + j * self.grid.n_i + k]
    }

    pub fn control_node(&self, s: usize, j: usize, k: usize) -> f64 {
        f64::from(self.controls[s * self.nodes() + j * self.grid.n_i + k]) * self.params.u_max
    }

    /// Index of the stored slice closest to `t`.
    pub fn nearest_slice(&self, t: f64) -> usize {
        let interval = self.params.horizon / self.grid.n_t as f64;
        ((t / interval).round().max(0.0) as usize).min(self.grid.n_t)
    }

    fn locate(x: f64, lo: f64, step: f64, n: usize) -> (usize, f64) {
        let pos = ((x - lo) / step).clamp(0.0, (n - 1) as f64);
        let idx = (pos.floor() as usize).min(n - 2);
        (idx, pos - idx as f64)
    }

    /// Multilinear interpolation of the value grid.
    pub fn value_at(&self, a: f64, i: f64, t: f64) -> Result<f64> {
        self.check(a, i, t)?;
        let g = &self.grid;
        let (j, fa) = Self::locate(a, g.a_min, g.da(), g.n_a);
        let (k, fi) = Self::locate(i, 0.0, g.di(), g.n_i);
        let (s, ft) = Self::locate(t, 0.0, self.params.horizon / g.n_t as f64, g.n_t + 1);
        let mut acc = 0.0;
        for (ds, ws) in [(0, 1.0 - ft), (1, ft)] {
            for (dj, wa) in [(0, 1.0 - fa), (1, fa)] {
                for (dk, wi) in [(0, 1.0 - fi), (1, fi)] {
                    let w = ws * wa * wi;
                    if w != 0.0 {
                        acc += w * self.value_node(s + ds, j + dj, k + dk);
                    }
                }
            }
        }
        Ok(acc)
    }

    /// Control at the grid node nearest to `(a, i, t)`: exactly 0 or `u_max`.
    pub fn optimal_control_at(&self, a: f64, i: f64, t: f64) -> Result<f64> {
        self.check(a, i, t)?;
        Ok(self.control_clamped(a, i, t))
    }

    /// Nearest-node control with the state clamped into the grid.
    pub fn control_clamped(&self, a: f64, i: f64, t: f64) -> f64 {
        let g = &self.grid;
        let j = (((a - g.a_min) / g.da()).round().max(0.0) as usize).min(g.n_a - 1);
        let k = ((i / g.di()).round().max(0.0) as usize).min(g.n_i - 1);
        self.control_node(self.nearest_slice(t), j, k)
    }

    /// For every autonomy row, the smallest information level at which the control
    /// switches from `u_max` to 0 at the stored slice nearest `t`. Rows that never
    /// provide information report 0; rows that always do report `i_max`.
    pub fn threshold_curve(&self, t: f64) -> Vec<(f64, f64)> {
        let g = &self.grid;
        let s = self.nearest_slice(t);
        (0..g.n_a)
            .map(|j| {
                let on = |k: usize| self.controls[s * self.nodes() + j * g.n_i + k] == 1;
                let i_star = if !on(0) { 0.0 } else { (1..g.n_i).find(|&k| on(k - 1) && !on(k)).map_or(g.i_max, |k| g.i_at(k)) };
                (g.a_at(j), i_star)
            })
            .collect()
    }

    /// Fraction of nodes with `u* = u_max` at stored slice `s`.
    pub fn provision_area(&self, s: usize) -> f64 {
        let n = self.nodes();
        self.controls[s * n..(s + 1) * n].iter().filter(|&&u| u == 1).count() as f64 / n as f64
    }

    /// Information grid level maximising `V(a, ., t)`.
    pub fn value_argmax_in_information(&self, a: f64, t: f64) -> Result<f64> {
        let g = &self.grid;
        let mut best = (0.0, f64::NEG_INFINITY);
        for k in 0..g.n_i {
            let i = g.i_at(k);
            let v = self.value_at(a, i, t)?;
            if v > best.1 {
                best = (i, v);
            }
        }
        Ok(best.0)
    }

    /// True when every stored control is 0 or `u_max`.
    pub fn is_bang_bang(&self) -> bool {
        self.controls.iter().all(|&u| u <= 1)
    }
}

/// Relative change of `V` at one probe when the grid is refined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeDelta {
    pub a: f64,
    pub i: f64,
    pub t: f64,
    pub coarse: f64,
    pub fine: f64,
    pub relative_change: f64,
}

/// Solves on `coarse` and on its refinement and compares the values at
/// [`REFINEMENT_PROBES`]. Returns the fine solution with the deltas.
pub fn refinement_check(params: &ModelParams, coarse: &GridSpec) -> Result<(HjbSolution, Vec<ProbeDelta>)> {
    let a = solve_hjb(params, coarse)?;
    let b = solve_hjb(params, &coarse.refined())?;
    let deltas = REFINEMENT_PROBES
        .iter()
        .map(|&(pa, pi, pt)| {
            let coarse = a.value_at(pa, pi, pt)?;
            let fine = b.value_at(pa, pi, pt)?;
            Ok(ProbeDelta { a: pa, i: pi, t: pt, coarse, fine, relative_change: (fine - coarse).abs() / fine.abs() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((b, deltas))
}
