//! The convexified beamforming subproblem and its solver.
//!
//! For fixed IRS phases and an expansion point `(W^i, Z^i)` the subproblem is
//!
//! ```text
//! minimize  F1(W, Z) + F2(Z) - G1~(W, Z) - G2~(W, Z)
//! s.t.      W_k PSD, Z PSD, sum_k Tr(W_k) + Tr(Z) <= P_max
//! ```
//!
//! where `G1~ + G2~` is affine. The default backend is a spectral projected
//! gradient method: Barzilai-Borwein trial steps, exact Euclidean projection
//! onto the PSD/power set (joint eigenvalue water-filling), and a monotone
//! Armijo search along the feasible direction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, project_psd_budget, psd_clip, quad_form, real_inner, CMat, CVec, LN2};
use crate::metrics::{power_used, TransmitSolution};

/// Data of one SDR-relaxed SCA subproblem.
///
/// The user coefficient matrices are rank one, `A_k = h_k h_k^H` with
/// `h_k = G_k^H u`, and the eavesdropper's is `B = h_e h_e^H`; only the
/// vectors are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SubproblemSpec {
    pub user_channels: Vec<CVec>,
    pub eve_channel: CVec,
    pub noise_user: f64,
    pub noise_eve: f64,
    /// `grad_{W_k}(G1 + G2)` at the expansion point.
    pub lin_w: Vec<CMat>,
    /// `grad_Z(G1 + G2)` at the expansion point.
    pub lin_z: CMat,
    /// `G1~ + G2~ = lin_const + sum_k <lin_w[k], W_k> + <lin_z, Z>`.
    pub lin_const: f64,
    pub p_max: f64,
    /// When false, `Z` is pinned to zero.
    pub with_an: bool,
}

impl SubproblemSpec {
    pub fn num_users(&self) -> usize {
        self.user_channels.len()
    }

    pub fn num_antennas(&self) -> usize {
        self.eve_channel.len()
    }

    /// `A_k = h_k h_k^H`.
    pub fn user_coefficient(&self, k: usize) -> CMat {
        linalg::outer(&self.user_channels[k])
    }

    /// `B = h_e h_e^H`.
    pub fn eve_coefficient(&self) -> CMat {
        linalg::outer(&self.eve_channel)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_antennas();
        let k = self.num_users();
        if k == 0 || n == 0 {
            return Err(Error::invalid("subproblem needs at least one user and one antenna"));
        }
        if self.user_channels.iter().any(|h| h.len() != n) {
            return Err(Error::invalid("user effective channels must all have length N_T"));
        }
        if self.lin_w.len() != k || self.lin_w.iter().chain([&self.lin_z]).any(|a| a.shape() != (n, n)) {
            return Err(Error::invalid("linear-part matrices do not match (K, N_T)"));
        }
        if !(self.noise_user > 0.0 && self.noise_eve > 0.0) {
            return Err(Error::invalid("noise constants must be positive"));
        }
        if !(self.p_max >= 0.0) || !self.p_max.is_finite() {
            return Err(Error::invalid("p_max must be non-negative and finite"));
        }
        Ok(())
    }

    fn blocks_of(&self, sol: &TransmitSolution) -> Vec<CMat> {
        let mut blocks = sol.beam_cov.clone();
        blocks.push(sol.an_cov.clone());
        blocks
    }

    fn frozen(&self) -> Vec<bool> {
        let mut f = vec![false; self.num_users()];
        f.push(!self.with_an);
        f
    }

    /// Arguments of the convex log terms: per-user `h_k^H S h_k + sigma`
    /// (`S = sum W + Z`) and the eavesdropper's `h_e^H Z h_e + sigma_e`.
    fn log_args(&self, blocks: &[CMat]) -> (Vec<f64>, f64) {
        let total: CMat = blocks.iter().skip(1).fold(blocks[0].clone(), |acc, b| acc + b);
        let users = self.user_channels.iter().map(|h| quad_form(h, &total) + self.noise_user).collect();
        let eve = quad_form(&self.eve_channel, &blocks[self.num_users()]) + self.noise_eve;
        (users, eve)
    }

    fn linear_part(&self, blocks: &[CMat]) -> f64 {
        let k = self.num_users();
        self.lin_const
            + self.lin_w.iter().zip(blocks).map(|(a, w)| real_inner(a, w)).sum::<f64>()
            + real_inner(&self.lin_z, &blocks[k])
    }

    /// Objective, or `None` when a log argument falls below `1e-12 sigma`.
    fn value(&self, blocks: &[CMat]) -> Option<f64> {
        let (users, eve) = self.log_args(blocks);
        if users.iter().any(|&d| !(d > 1e-12 * self.noise_user)) || !(eve > 1e-12 * self.noise_eve) {
            return None;
        }
        let f1 = -users.iter().map(|d| d.log2()).sum::<f64>();
        let f2 = -(self.num_users() as f64) * eve.log2();
        Some(f1 + f2 - self.linear_part(blocks))
    }

    fn gradient(&self, blocks: &[CMat]) -> Vec<CMat> {
        let n = self.num_antennas();
        let k = self.num_users();
        let (users, eve) = self.log_args(blocks);
        let mut common = CMat::zeros(n, n);
        for (h, d) in self.user_channels.iter().zip(&users) {
            common -= linalg::outer(h).scale(1.0 / (LN2 * d));
        }
        let mut out: Vec<CMat> = self.lin_w.iter().map(|a| &common - a).collect();
        let eve_term = self.eve_coefficient().scale(k as f64 / (LN2 * eve));
        out.push(&common - &eve_term - &self.lin_z);
        if !self.with_an {
            out[k] = CMat::zeros(n, n);
        }
        out
    }

    /// Subproblem objective at a transmit design.
    pub fn objective(&self, sol: &TransmitSolution) -> Result<f64> {
        self.check_solution(sol)?;
        self.value(&self.blocks_of(sol)).ok_or_else(|| Error::invalid("non-positive log argument"))
    }

    /// Gradient blocks `(d/dW_1, ..., d/dW_K, d/dZ)` of the objective, w.r.t. the
    /// real inner product `Re Tr(A^H B)`.
    pub fn objective_gradient(&self, sol: &TransmitSolution) -> Result<Vec<CMat>> {
        self.check_solution(sol)?;
        Ok(self.gradient(&self.blocks_of(sol)))
    }

    fn check_solution(&self, sol: &TransmitSolution) -> Result<()> {
        let n = self.num_antennas();
        if sol.beam_cov.len() != self.num_users() || sol.beam_cov.iter().chain([&sol.an_cov]).any(|a| a.shape() != (n, n)) {
            return Err(Error::invalid("solution does not match the subproblem dimensions"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Converged,
    MaxIters,
    /// No sufficient decrease found at round-off level; the last iterate is kept.
    Stalled,
    NumericalFailure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub objective: f64,
    pub iterations: usize,
    /// Upper bound on the unit-step projected-gradient norm at the returned point.
    pub step_norm: f64,
    /// `P_max - power_used`.
    pub power_slack: f64,
    /// Smallest eigenvalue over all returned covariances.
    pub min_eigenvalue: f64,
    pub status: SolverStatus,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InnerOptions {
    /// Stop when the projected-gradient norm is at most `tol (1 + |objective|)`.
    pub tol: f64,
    pub max_iters: usize,
    pub max_backtracks: usize,
    pub armijo: f64,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 500,
            max_backtracks: 50,
            armijo: 1e-4,
        }
    }
}

/// Call contract for subproblem solvers: take a well-formed spec and a
/// feasible start, return a feasible design whose subproblem objective does
/// not exceed the start's, plus a report. External conic solvers plug in here.
pub trait ConvexBackend {
    fn solve(&self, spec: &SubproblemSpec, start: &TransmitSolution) -> Result<(TransmitSolution, SolverReport)>;
}

/// The built-in spectral projected-gradient backend.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ProjectedGradient {
    pub options: InnerOptions,
}

fn axpy_blocks(x: &[CMat], alpha: f64, d: &[CMat]) -> Vec<CMat> {
    x.iter().zip(d).map(|(a, b)| a + b.scale(alpha)).collect()
}

fn sub_blocks(a: &[CMat], b: &[CMat]) -> Vec<CMat> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn inner_blocks(a: &[CMat], b: &[CMat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| real_inner(x, y)).sum()
}

fn norm_blocks(a: &[CMat]) -> f64 {
    a.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt()
}

fn check_start(spec: &SubproblemSpec, start: &TransmitSolution) -> Result<()> {
    spec.check_solution(start)?;
    let feas = start.feasibility(spec.p_max);
    if !feas.power_ok() {
        return Err(Error::invalid(format!(
            "start uses {} W, above the {} W budget",
            feas.power, spec.p_max
        )));
    }
    if !feas.psd_ok() {
        return Err(Error::invalid("start covariances are not positive semidefinite"));
    }
    if !spec.with_an && start.an_cov.norm() != 0.0 {
        return Err(Error::invalid("start has artificial noise but the subproblem pins Z = 0"));
    }
    Ok(())
}

impl ConvexBackend for ProjectedGradient {
    fn solve(&self, spec: &SubproblemSpec, start: &TransmitSolution) -> Result<(TransmitSolution, SolverReport)> {
        spec.validate()?;
        let opts = &self.options;
        let k = spec.num_users();
        let n = spec.num_antennas();

        if spec.p_max == 0.0 {
            let sol = TransmitSolution::zeros(k, n, start.phases.clone());
            let objective = spec.objective(&sol)?;
            let report = SolverReport {
                objective,
                iterations: 0,
                step_norm: 0.0,
                power_slack: 0.0,
                min_eigenvalue: 0.0,
                status: SolverStatus::Converged,
            };
            return Ok((sol, report));
        }
        check_start(spec, start)?;

        let frozen = spec.frozen();
        let mut x = spec.blocks_of(start);
        let mut obj = spec.value(&x).ok_or_else(|| Error::invalid("non-positive log argument at the start"))?;
        let mut g = spec.gradient(&x);
        let mut t = 1.0 / norm_blocks(&g).max(1e-12);
        let mut status = SolverStatus::MaxIters;
        let mut stationarity = f64::INFINITY;
        let mut iterations = 0;

        while iterations < opts.max_iters {
            let trial = project_psd_budget(&axpy_blocks(&x, -t, &g), &frozen, spec.p_max);
            let d = sub_blocks(&trial, &x);
            let d_norm = norm_blocks(&d);
            // ||x - P(x - t g)|| / t is nonincreasing in t and ||x - P(x - t g)||
            // nondecreasing, so this bounds the unit-step residual.
            stationarity = if t <= 1.0 { d_norm / t } else { d_norm };
            if stationarity <= opts.tol * (1.0 + obj.abs()) {
                status = SolverStatus::Converged;
                break;
            }
            let slope = inner_blocks(&g, &d);
            if !slope.is_finite() {
                status = SolverStatus::NumericalFailure;
                break;
            }
            if slope >= 0.0 {
                status = SolverStatus::Stalled;
                break;
            }
            let mut lambda = 1.0;
            let mut accepted = None;
            for _ in 0..=opts.max_backtracks {
                let candidate = axpy_blocks(&x, lambda, &d);
                if let Some(value) = spec.value(&candidate) {
                    if value <= obj + opts.armijo * lambda * slope {
                        accepted = Some((candidate, value));
                        break;
                    }
                }
                lambda *= 0.5;
            }
            let Some((x_new, obj_new)) = accepted else {
                status = SolverStatus::Stalled;
                break;
            };
            iterations += 1;
            let g_new = spec.gradient(&x_new);
            let s = sub_blocks(&x_new, &x);
            let y = sub_blocks(&g_new, &g);
            let sy = inner_blocks(&s, &y);
            t = if sy > 0.0 { inner_blocks(&s, &s) / sy } else { 1e12 };
            t = t.clamp(1e-12, 1e12);
            x = x_new;
            obj = obj_new;
            g = g_new;
        }

        let z = x.pop().expect("Z block");
        let sol = TransmitSolution::new(x, z, start.phases.clone());
        let min_eigenvalue = sol
            .beam_cov
            .iter()
            .chain([&sol.an_cov])
            .map(linalg::min_eigenvalue)
            .fold(f64::INFINITY, f64::min);
        let report = SolverReport {
            objective: obj,
            iterations,
            step_norm: stationarity,
            power_slack: spec.p_max - power_used(&sol),
            min_eigenvalue,
            status,
        };
        Ok((sol, report))
    }
}

/// Solve with the default backend and options.
pub fn solve(spec: &SubproblemSpec, start: &TransmitSolution) -> Result<(TransmitSolution, SolverReport)> {
    ProjectedGradient::default().solve(spec, start)
}

/// Clip every covariance to the PSD cone, then scale all of them by
/// `min(1, P_max / power)`. Always feasible; a no-op (up to round-off) on
/// feasible input. Not the exact Euclidean projection.
pub fn feasibility_map(candidate: &TransmitSolution, p_max: f64) -> TransmitSolution {
    let mut out = TransmitSolution::new(
        candidate.beam_cov.iter().map(psd_clip).collect(),
        psd_clip(&candidate.an_cov),
        candidate.phases.clone(),
    );
    let power = power_used(&out);
    if power > p_max {
        let scale = if power > 0.0 { p_max.max(0.0) / power } else { 0.0 };
        for w in out.beam_cov.iter_mut() {
            *w = w.scale(scale);
        }
        out.an_cov = out.an_cov.scale(scale);
    }
    out.beams = None;
    out
}
