//! Successive convex approximation for the beamforming block.
//!
//! `G1` and `G2` are convex in `(W, Z)`; replacing them by their first-order
//! expansions gives a convex majorizer of `f` that is tight at the expansion
//! point. Minimizing it repeatedly yields a non-increasing objective.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::convex::{ConvexBackend, InnerOptions, ProjectedGradient, SolverStatus, SubproblemSpec};
use crate::error::{Error, Result};
use crate::history::{HistoryRecord, Phase, RunHistory};
use crate::linalg::{eigh, outer, quad_form, real_inner, real_trace, CMat, CVec, LN2};
use crate::metrics::{self, power_used, TransmitSolution};

/// Gradient blocks with respect to each `W_k` and to `Z`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockGradient {
    pub w: Vec<CMat>,
    pub z: CMat,
}

fn check_blocks(w: &[CMat], z: &CMat, u: &CVec, ch: &ChannelSet) -> Result<()> {
    let n = ch.num_antennas();
    if w.len() != ch.num_users() || w.iter().chain([z]).any(|a| a.shape() != (n, n)) || u.len() != ch.num_elements() {
        return Err(Error::invalid("(W, Z, u) do not match the channel dimensions"));
    }
    Ok(())
}

fn effective(u: &CVec, ch: &ChannelSet) -> (Vec<CVec>, CVec) {
    let users = (0..ch.num_users()).map(|k| ch.user_effective(k, u)).collect();
    (users, ch.eve_effective(u))
}

/// Log arguments of G1: `d_k = sum_{r != k} h_k^H W_r h_k + h_k^H Z h_k + sigma`.
fn g1_args(w: &[CMat], z: &CMat, users: &[CVec], noise: f64) -> Vec<f64> {
    users
        .iter()
        .enumerate()
        .map(|(k, h)| {
            w.iter().enumerate().filter(|(r, _)| *r != k).map(|(_, wr)| quad_form(h, wr)).sum::<f64>()
                + quad_form(h, z)
                + noise
        })
        .collect()
}

/// Log arguments of G2: `e_k = h_e^H (W_k + Z) h_e + sigma_e`.
fn g2_args(w: &[CMat], z: &CMat, eve: &CVec, noise: f64) -> Vec<f64> {
    let an = quad_form(eve, z);
    w.iter().map(|wk| quad_form(eve, wk) + an + noise).collect()
}

fn require_positive(args: &[f64]) -> Result<()> {
    if args.iter().all(|&a| a > 0.0 && a.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid("non-positive log argument"))
    }
}

pub fn g1_value(w: &[CMat], z: &CMat, u: &CVec, ch: &ChannelSet) -> Result<f64> {
    check_blocks(w, z, u, ch)?;
    let (users, _) = effective(u, ch);
    let args = g1_args(w, z, &users, ch.noise_user());
    require_positive(&args)?;
    Ok(-args.iter().map(|a| a.log2()).sum::<f64>())
}

pub fn g2_value(w: &[CMat], z: &CMat, u: &CVec, ch: &ChannelSet) -> Result<f64> {
    check_blocks(w, z, u, ch)?;
    let eve = ch.eve_effective(u);
    let args = g2_args(w, z, &eve, ch.noise_eve());
    require_positive(&args)?;
    Ok(-args.iter().map(|a| a.log2()).sum::<f64>())
}

/// `grad_{W_r} G1 = -sum_{k != r} A_k / (ln2 d_k)`, `grad_Z G1 = -sum_k A_k / (ln2 d_k)`
/// with `A_k = G_k^H u u^H G_k`.
pub fn grad_g1(w: &[CMat], z: &CMat, u: &CVec, ch: &ChannelSet) -> Result<BlockGradient> {
    check_blocks(w, z, u, ch)?;
    let n = ch.num_antennas();
    let (users, _) = effective(u, ch);
    let args = g1_args(w, z, &users, ch.noise_user());
    require_positive(&args)?;
    let terms: Vec<CMat> = users.iter().zip(&args).map(|(h, d)| outer(h).scale(-1.0 / (LN2 * d))).collect();
    let total = terms.iter().fold(CMat::zeros(n, n), |acc, t| acc + t);
    let grad_w = terms.iter().map(|own| &total - own).collect();
    Ok(BlockGradient { w: grad_w, z: total })
}

/// `grad_{W_k} G2 = -B / (ln2 e_k)`, `grad_Z G2 = -sum_k B / (ln2 e_k)` with
/// `B = L^H u u^H L`.
pub fn grad_g2(w: &[CMat], z: &CMat, u: &CVec, ch: &ChannelSet) -> Result<BlockGradient> {
    check_blocks(w, z, u, ch)?;
    let eve = ch.eve_effective(u);
    let args = g2_args(w, z, &eve, ch.noise_eve());
    require_positive(&args)?;
    let b = outer(&eve);
    let grad_w: Vec<CMat> = args.iter().map(|e| b.scale(-1.0 / (LN2 * e))).collect();
    let grad_z = b.scale(-args.iter().map(|e| 1.0 / (LN2 * e)).sum::<f64>());
    Ok(BlockGradient { w: grad_w, z: grad_z })
}

/// First-order expansions of G1 and G2 at `(W^i, Z^i)`; global underestimators
/// since both functions are convex.
#[derive(Clone, Debug, PartialEq)]
pub struct Linearization {
    pub expansion_w: Vec<CMat>,
    pub expansion_z: CMat,
    pub g1: f64,
    pub g2: f64,
    pub grad_g1: BlockGradient,
    pub grad_g2: BlockGradient,
}

fn affine(value: f64, grad: &BlockGradient, w0: &[CMat], z0: &CMat, w: &[CMat], z: &CMat) -> f64 {
    value
        + grad.w.iter().zip(w.iter().zip(w0)).map(|(g, (a, b))| real_inner(g, &(a - b))).sum::<f64>()
        + real_inner(&grad.z, &(z - z0))
}

impl Linearization {
    pub fn new(w: &[CMat], z: &CMat, u: &CVec, ch: &ChannelSet) -> Result<Self> {
        Ok(Self {
            expansion_w: w.to_vec(),
            expansion_z: z.clone(),
            g1: g1_value(w, z, u, ch)?,
            g2: g2_value(w, z, u, ch)?,
            grad_g1: grad_g1(w, z, u, ch)?,
            grad_g2: grad_g2(w, z, u, ch)?,
        })
    }

    pub fn g1_tilde(&self, w: &[CMat], z: &CMat) -> f64 {
        affine(self.g1, &self.grad_g1, &self.expansion_w, &self.expansion_z, w, z)
    }

    pub fn g2_tilde(&self, w: &[CMat], z: &CMat) -> f64 {
        affine(self.g2, &self.grad_g2, &self.expansion_w, &self.expansion_z, w, z)
    }
}

/// Package the convexified subproblem at the feasible expansion point `(W^i, Z^i)`.
pub fn build_subproblem(
    w: &[CMat],
    z: &CMat,
    u: &CVec,
    ch: &ChannelSet,
    p_max: f64,
    with_an: bool,
) -> Result<SubproblemSpec> {
    check_blocks(w, z, u, ch)?;
    let probe = TransmitSolution::new(w.to_vec(), z.clone(), u.clone());
    let feas = probe.feasibility(p_max);
    if !feas.power_ok() || !feas.psd_ok() {
        return Err(Error::invalid("expansion point is infeasible"));
    }
    if !with_an && z.norm() != 0.0 {
        return Err(Error::invalid("expansion point carries AN but Z is pinned to zero"));
    }
    let lin = Linearization::new(w, z, u, ch)?;
    let lin_w: Vec<CMat> = lin.grad_g1.w.iter().zip(&lin.grad_g2.w).map(|(a, b)| a + b).collect();
    let lin_z = &lin.grad_g1.z + &lin.grad_g2.z;
    let lin_const = lin.g1 + lin.g2
        - lin_w.iter().zip(w).map(|(a, b)| real_inner(a, b)).sum::<f64>()
        - real_inner(&lin_z, z);
    let (users, eve) = effective(u, ch);
    Ok(SubproblemSpec {
        user_channels: users,
        eve_channel: eve,
        noise_user: ch.noise_user(),
        noise_eve: ch.noise_eve(),
        lin_w,
        lin_z,
        lin_const,
        p_max,
        with_an,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScaOptions {
    /// Stop once `|f^{i+1} - f^i|` is at most this.
    pub tol: f64,
    pub max_iters: usize,
    pub inner: InnerOptions,
    /// When false, `Z` stays zero (no artificial noise).
    pub with_an: bool,
}

impl Default for ScaOptions {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            max_iters: 30,
            inner: InnerOptions::default(),
            with_an: true,
        }
    }
}

/// Feasible, nondegenerate starting point: half the budget as isotropic AN,
/// the other half split evenly over matched-filter beams `w_k ∝ G_k^H u`.
/// Without AN the users share the full budget.
pub fn default_start(u: &CVec, ch: &ChannelSet, p_max: f64, with_an: bool) -> TransmitSolution {
    start_with_an_fraction(u, ch, p_max, if with_an { 0.5 } else { 0.0 })
}

/// Matched-filter beams sharing `(1 - an_fraction) p_max` equally, plus
/// isotropic AN carrying `an_fraction p_max`.
pub fn start_with_an_fraction(u: &CVec, ch: &ChannelSet, p_max: f64, an_fraction: f64) -> TransmitSolution {
    let k = ch.num_users();
    let n = ch.num_antennas();
    let user_budget = (1.0 - an_fraction) * p_max / k as f64;
    let beams = (0..k)
        .map(|kk| {
            let h = ch.user_effective(kk, u);
            let norm = h.norm();
            let dir = if norm > 0.0 {
                h.unscale(norm)
            } else {
                let mut e = CVec::zeros(n);
                e[0] = 1.0.into();
                e
            };
            dir.scale(user_budget.sqrt())
        })
        .collect();
    let z = if an_fraction > 0.0 {
        CMat::identity(n, n).scale(an_fraction * p_max / n as f64)
    } else {
        CMat::zeros(n, n)
    };
    let mut sol = TransmitSolution::from_beams(beams, z, u.clone());
    sol.beams = None;
    sol
}

/// Algorithm: repeatedly linearize G1, G2 at the current point and solve the
/// convex subproblem, until the true objective changes by at most `tol`.
pub fn run_sca(
    u: &CVec,
    ch: &ChannelSet,
    p_max: f64,
    start: &TransmitSolution,
    opts: &ScaOptions,
) -> Result<(TransmitSolution, RunHistory)> {
    run_sca_with(&ProjectedGradient { options: opts.inner }, u, ch, p_max, start, opts)
}

pub fn run_sca_with(
    backend: &dyn ConvexBackend,
    u: &CVec,
    ch: &ChannelSet,
    p_max: f64,
    start: &TransmitSolution,
    opts: &ScaOptions,
) -> Result<(TransmitSolution, RunHistory)> {
    let clock = Instant::now();
    let mut sol = start.clone();
    sol.phases = u.clone();
    sol.beams = None;
    sol.check_dims(ch)?;
    let mut f = metrics::objective(&sol, ch)?;
    let mut history = RunHistory::default();
    let record = |iteration: usize, sol: &TransmitSolution, f: f64, elapsed_ms: f64| -> Result<HistoryRecord> {
        Ok(HistoryRecord {
            outer: 0,
            phase: Phase::Sca,
            iteration,
            f,
            sum_secrecy: metrics::secrecy_rates(sol, ch)?.sum_secrecy,
            power_used: power_used(sol),
            max_rank_residual: Some(max_rank_residual(sol)),
            elapsed_ms,
        })
    };
    history.push(record(0, &sol, f, 0.0)?);

    for iteration in 1..=opts.max_iters {
        let spec = build_subproblem(&sol.beam_cov, &sol.an_cov, u, ch, p_max, opts.with_an)
            .map_err(|e| e.context(format!("SCA iteration {iteration}: building subproblem")))?;
        let (next, report) = backend
            .solve(&spec, &sol)
            .map_err(|e| e.context(format!("SCA iteration {iteration}: inner solve")))?;
        if report.status == SolverStatus::NumericalFailure {
            return Err(Error::numerical(format!(
                "inner line search failed after {} iterations (residual {:.3e})",
                report.iterations, report.step_norm
            ))
            .context(format!("SCA iteration {iteration}")));
        }
        let f_next = metrics::objective(&next, ch)?;
        let delta = (f_next - f).abs();
        sol = next;
        f = f_next;
        history.push(record(iteration, &sol, f, clock.elapsed().as_secs_f64() * 1e3)?);
        if delta <= opts.tol {
            break;
        }
    }
    Ok((sol, history))
}

/// `w = sqrt(lambda_1) v_1` from the eigendecomposition of a PSD `W`, and the
/// residual `lambda_2 / lambda_1` (0 when `W = 0`).
pub fn extract_rank_one(w: &CMat) -> Result<(CVec, f64)> {
    let n = w.nrows();
    if w.ncols() != n {
        return Err(Error::invalid("beamforming matrix must be square"));
    }
    let (values, vectors) = eigh(w);
    let trace = real_trace(w);
    let lambda_min = values.last().copied().unwrap_or(0.0);
    if lambda_min < -1e-9 * trace.abs() || (trace <= 0.0 && lambda_min < 0.0) {
        return Err(Error::invalid(format!("matrix is not PSD (min eigenvalue {lambda_min:.3e})")));
    }
    let lambda_1 = values.first().copied().unwrap_or(0.0);
    if !(lambda_1 > 0.0) {
        return Ok((CVec::zeros(n), 0.0));
    }
    let lambda_2 = values.get(1).copied().unwrap_or(0.0).max(0.0);
    let beam = vectors.column(0).into_owned().scale(lambda_1.sqrt());
    Ok((beam, lambda_2 / lambda_1))
}

/// Largest rank-one residual over all beamforming matrices.
pub fn max_rank_residual(sol: &TransmitSolution) -> f64 {
    sol.beam_cov
        .iter()
        .filter_map(|w| extract_rank_one(w).ok().map(|(_, r)| r))
        .fold(0.0, f64::max)
}

/// Copy of `sol` with extracted beamformers `w_k` filled in (covariances kept).
pub fn with_extracted_beams(sol: &TransmitSolution) -> Result<TransmitSolution> {
    let beams = sol
        .beam_cov
        .iter()
        .map(|w| extract_rank_one(w).map(|(b, _)| b))
        .collect::<Result<Vec<_>>>()?;
    let mut out = sol.clone();
    out.beams = Some(beams);
    Ok(out)
}
