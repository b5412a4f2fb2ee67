//! Riemannian conjugate gradient over the complex oblique manifold
//! `{u in C^M : |u_m| = 1}` for fixed `(W, Z)`.
//!
//! Gradient convention: for a real function of complex `u`, the Euclidean
//! gradient is `∂f/∂Re(u) + j ∂f/∂Im(u)`, so the directional derivative along
//! `d` is `Re(grad^H d)`. For a term `log2(u^H A u + c)` with Hermitian `A`
//! this is `2 A u / (ln2 (u^H A u + c))`.

use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::history::{HistoryRecord, Phase, RunHistory};
use crate::linalg::{quad_form, CMat, CVec, LN2};
use crate::metrics::power_used;
use crate::metrics::TransmitSolution;

/// A point on the oblique manifold.
#[derive(Clone, Debug, PartialEq)]
pub struct ObliquePoint(CVec);

impl ObliquePoint {
    pub const MODULUS_TOL: f64 = 1e-12;

    pub fn new(u: CVec) -> Result<Self> {
        if u.is_empty() {
            return Err(Error::invalid("phase vector must be non-empty"));
        }
        let err = u.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
        if !(err <= Self::MODULUS_TOL) {
            return Err(Error::invalid(format!("phase vector is off the manifold by {err:.3e}")));
        }
        Ok(Self(u))
    }

    /// Element-wise `x_m / |x_m|`.
    pub fn normalized(x: &CVec) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::invalid("phase vector must be non-empty"));
        }
        let mut out = x.clone();
        for z in out.iter_mut() {
            let r = z.norm();
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::numerical("cannot normalize a zero or non-finite element"));
            }
            *z /= r;
        }
        Ok(Self(out))
    }

    pub fn ones(m: usize) -> Self {
        Self(CVec::from_element(m, Complex64::new(1.0, 0.0)))
    }

    /// `u_m = e^{-j phi_m}` for reflection phases `phi_m`.
    pub fn from_phases(phi: &[f64]) -> Self {
        Self(CVec::from_iterator(phi.len(), phi.iter().map(|p| Complex64::from_polar(1.0, -p))))
    }

    /// Reflection phases `phi_m = -arg(u_m)`.
    pub fn phases(&self) -> Vec<f64> {
        self.0.iter().map(|z| -z.arg()).collect()
    }

    pub fn as_vec(&self) -> &CVec {
        &self.0
    }

    pub fn into_inner(self) -> CVec {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_modulus_error(&self) -> f64 {
        self.0.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Tangent vector at `base`: `Re(v_m conj(u_m)) = 0` for every m.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    pub v: CVec,
    pub base: ObliquePoint,
}

impl TangentVector {
    pub fn zero(base: &ObliquePoint) -> Self {
        Self {
            v: CVec::zeros(base.len()),
            base: base.clone(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.v.norm()
    }

    pub fn tangency_residual(&self) -> f64 {
        self.v
            .iter()
            .zip(self.base.as_vec().iter())
            .map(|(v, u)| (v * u.conj()).re.abs())
            .fold(0.0, f64::max)
    }
}

/// Real inner product `Re(a^H b)`.
pub fn inner(a: &CVec, b: &CVec) -> f64 {
    a.dotc(b).re
}

/// `v - Re(v ∘ conj(u)) ∘ u`.
pub fn tangent_project(u: &ObliquePoint, v: &CVec) -> TangentVector {
    let out = CVec::from_iterator(
        v.len(),
        v.iter().zip(u.as_vec().iter()).map(|(vm, um)| vm - um * (vm * um.conj()).re),
    );
    TangentVector { v: out, base: u.clone() }
}

/// Carry `mu` into the tangent space at `u_to` by orthogonal projection.
pub fn vector_transport(_u_from: &ObliquePoint, u_to: &ObliquePoint, mu: &TangentVector) -> TangentVector {
    tangent_project(u_to, &mu.v)
}

/// `unt(u + step * mu)`.
pub fn retract(u: &ObliquePoint, step: f64, mu: &TangentVector) -> Result<ObliquePoint> {
    if step == 0.0 {
        return Ok(u.clone());
    }
    ObliquePoint::normalized(&(u.as_vec() + mu.v.scale(step)))
}

/// PR+ parameter `max(0, Re<g_new, g_new - T(g_old)> / <g_old, g_old>)`.
pub fn polak_ribiere(grad_new: &TangentVector, grad_old_transported: &TangentVector, grad_old: &TangentVector) -> Result<f64> {
    let denom = inner(&grad_old.v, &grad_old.v);
    if !(denom > 0.0) {
        return Err(Error::invalid("previous gradient is zero"));
    }
    let num = inner(&grad_new.v, &(&grad_new.v - &grad_old_transported.v));
    Ok((num / denom).max(0.0))
}

/// `f(u)` for fixed `(W, Z)`, with the quadratic forms precomputed as M×M
/// matrices: each log argument is `u^H A u + c`.
#[derive(Clone, Debug)]
pub struct PhaseObjective {
    /// `G_k (sum W + Z) G_k^H` (F1 terms).
    user_total: Vec<CMat>,
    /// `G_k (sum W - W_k + Z) G_k^H` (G1 terms).
    user_interf: Vec<CMat>,
    /// `L Z L^H` (F2 term, multiplicity K).
    eve_an: CMat,
    /// `L (W_k + Z) L^H` (G2 terms).
    eve_total: Vec<CMat>,
    noise_user: f64,
    noise_eve: f64,
}

impl PhaseObjective {
    pub fn new(w: &[CMat], z: &CMat, ch: &ChannelSet) -> Result<Self> {
        let n = ch.num_antennas();
        if w.len() != ch.num_users() || w.iter().chain([z]).any(|a| a.shape() != (n, n)) {
            return Err(Error::invalid("(W, Z) do not match the channel dimensions"));
        }
        let total = w.iter().fold(z.clone(), |acc, wk| acc + wk);
        let congruence = |g: &CMat, a: &CMat| -> CMat { g * a * g.adjoint() };
        let l = ch.eve_cascade();
        Ok(Self {
            user_total: (0..ch.num_users()).map(|k| congruence(ch.user_cascade(k), &total)).collect(),
            user_interf: (0..ch.num_users())
                .map(|k| congruence(ch.user_cascade(k), &(&total - &w[k])))
                .collect(),
            eve_an: congruence(l, z),
            eve_total: w.iter().map(|wk| congruence(l, &(wk + z))).collect(),
            noise_user: ch.noise_user(),
            noise_eve: ch.noise_eve(),
        })
    }

    fn num_elements(&self) -> usize {
        self.eve_an.nrows()
    }

    fn check(&self, u: &CVec) -> Result<()> {
        if u.len() != self.num_elements() {
            return Err(Error::invalid("phase vector length does not match M"));
        }
        Ok(())
    }

    /// `(sign, A, c)` for every log term of `f`.
    fn terms(&self) -> impl Iterator<Item = (f64, &CMat, f64)> + '_ {
        let k = self.user_total.len() as f64;
        let (nu, ne) = (self.noise_user, self.noise_eve);
        self.user_total
            .iter()
            .map(move |a| (-1.0, a, nu))
            .chain(std::iter::once((-k, &self.eve_an, ne)))
            .chain(self.user_interf.iter().map(move |a| (1.0, a, nu)))
            .chain(self.eve_total.iter().map(move |a| (1.0, a, ne)))
    }

    pub fn value(&self, u: &CVec) -> Result<f64> {
        self.check(u)?;
        let mut f = 0.0;
        for (sign, a, c) in self.terms() {
            let arg = quad_form(u, a) + c;
            if !(arg > 0.0) {
                return Err(Error::invalid("non-positive log argument"));
            }
            f += sign * arg.log2();
        }
        Ok(f)
    }

    pub fn gradient(&self, u: &CVec) -> Result<CVec> {
        self.check(u)?;
        let mut g = CVec::zeros(u.len());
        for (sign, a, c) in self.terms() {
            let au = a * u;
            let arg = u.dotc(&au).re + c;
            if !(arg > 0.0) {
                return Err(Error::invalid("non-positive log argument"));
            }
            g += au.scale(2.0 * sign / (LN2 * arg));
        }
        Ok(g)
    }

    /// Clipped sum secrecy rate at `u`, from the same quadratic forms.
    pub fn sum_secrecy(&self, u: &CVec) -> f64 {
        let eve_an = quad_form(u, &self.eve_an) + self.noise_eve;
        (0..self.user_total.len())
            .map(|k| {
                let rate = ((quad_form(u, &self.user_total[k]) + self.noise_user)
                    / (quad_form(u, &self.user_interf[k]) + self.noise_user))
                    .log2();
                let cap = ((quad_form(u, &self.eve_total[k]) + self.noise_eve) / eve_an).log2();
                (rate - cap).max(0.0)
            })
            .sum()
    }
}

pub fn euclidean_gradient(u: &ObliquePoint, w: &[CMat], z: &CMat, ch: &ChannelSet) -> Result<CVec> {
    PhaseObjective::new(w, z, ch)?.gradient(u.as_vec())
}

pub fn riemannian_gradient(u: &ObliquePoint, w: &[CMat], z: &CMat, ch: &ChannelSet) -> Result<TangentVector> {
    Ok(tangent_project(u, &euclidean_gradient(u, w, z, ch)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CgOptions {
    /// Stop once the Riemannian gradient norm is at most this.
    pub tol: f64,
    pub max_iters: usize,
    pub initial_step: f64,
    pub backtrack: f64,
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            max_iters: 300,
            initial_step: 1.0,
            backtrack: 0.5,
            armijo: 1e-4,
            max_backtracks: 50,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CgStatus {
    Converged,
    MaxIters,
    /// No Armijo step found; the best iterate is returned.
    Stagnated,
}

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub point: ObliquePoint,
    pub history: RunHistory,
    pub status: CgStatus,
    pub iterations: usize,
    pub grad_norm: f64,
}

/// Restart to steepest descent unless `-Re<grad, dir> >= SUFFICIENT_DESCENT ||grad||²`.
const SUFFICIENT_DESCENT: f64 = 1e-2;

/// Minimize `f(u)` for fixed `(W, Z)` with Polak-Ribière (PR+) conjugate
/// gradient, Armijo backtracking, projection-based transport and the
/// normalization retraction.
pub fn run_cg(u_start: &ObliquePoint, w: &[CMat], z: &CMat, ch: &ChannelSet, opts: &CgOptions) -> Result<CgOutcome> {
    let clock = Instant::now();
    let objective = PhaseObjective::new(w, z, ch)?;
    if u_start.len() != ch.num_elements() {
        return Err(Error::invalid("phase vector length does not match M"));
    }
    let power = power_used(&TransmitSolution::new(w.to_vec(), z.clone(), u_start.as_vec().clone()));
    let record = |iteration: usize, u: &ObliquePoint, f: f64| HistoryRecord {
        outer: 0,
        phase: Phase::Manifold,
        iteration,
        f,
        sum_secrecy: objective.sum_secrecy(u.as_vec()),
        power_used: power,
        max_rank_residual: None,
        elapsed_ms: clock.elapsed().as_secs_f64() * 1e3,
    };

    let mut u = u_start.clone();
    let mut f = objective.value(u.as_vec())?;
    let mut grad = tangent_project(&u, &objective.gradient(u.as_vec())?);
    let mut history = RunHistory::default();
    history.push(record(0, &u, f));

    let mut status = CgStatus::MaxIters;
    let mut iterations = 0;
    if grad.norm() <= opts.tol {
        status = CgStatus::Converged;
    } else {
        let mut dir = TangentVector { v: -&grad.v, base: u.clone() };
        while iterations < opts.max_iters {
            let g2 = inner(&grad.v, &grad.v);
            let mut slope = inner(&grad.v, &dir.v);
            if slope > -SUFFICIENT_DESCENT * g2 {
                dir.v = -&grad.v;
                slope = -g2;
            }
            let decrease_rate = g2.max(-slope);

            let mut step = opts.initial_step;
            let mut accepted = None;
            for _ in 0..=opts.max_backtracks {
                if let Ok(candidate) = retract(&u, step, &dir) {
                    if let Ok(fc) = objective.value(candidate.as_vec()) {
                        if fc <= f - opts.armijo * step * decrease_rate {
                            accepted = Some((candidate, fc));
                            break;
                        }
                    }
                }
                step *= opts.backtrack;
            }
            let Some((u_next, f_next)) = accepted else {
                status = CgStatus::Stagnated;
                break;
            };
            iterations += 1;

            let grad_next = tangent_project(&u_next, &objective.gradient(u_next.as_vec())?);
            let grad_moved = vector_transport(&u, &u_next, &grad);
            let dir_moved = vector_transport(&u, &u_next, &dir);
            let alpha = polak_ribiere(&grad_next, &grad_moved, &grad)?;
            dir = TangentVector {
                v: -&grad_next.v + dir_moved.v.scale(alpha),
                base: u_next.clone(),
            };
            u = u_next;
            f = f_next;
            grad = grad_next;
            history.push(record(iterations, &u, f));
            if grad.norm() <= opts.tol {
                status = CgStatus::Converged;
                break;
            }
        }
    }
    Ok(CgOutcome {
        grad_norm: grad.norm(),
        point: u,
        history,
        status,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{random_channel, random_feasible, random_point, random_vec};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_4, TAU};

    struct Fixed {
        ch: ChannelSet,
        w: Vec<CMat>,
        z: CMat,
    }

    fn fixed(rng: &mut ChaCha8Rng, k: usize, n: usize, m: usize) -> Fixed {
        let ch = random_channel(rng, k, n, m);
        let sol = random_feasible(rng, k, n, 5.0, true, &CVec::zeros(m));
        Fixed { ch, w: sol.beam_cov, z: sol.an_cov }
    }

    fn j() -> Complex64 {
        Complex64::new(0.0, 1.0)
    }

    #[test]
    fn points_reject_off_manifold_vectors() {
        assert!(ObliquePoint::new(CVec::from_element(2, Complex64::new(1.1, 0.0))).is_err());
        assert!(ObliquePoint::new(CVec::zeros(0)).is_err());
        assert!(ObliquePoint::normalized(&CVec::zeros(2)).is_err());
        let phi = [0.3, -1.2, 2.5];
        let u = ObliquePoint::from_phases(&phi);
        assert!(u.max_modulus_error() <= 1e-15);
        for (a, b) in u.phases().iter().zip(phi) {
            assert!((a - b).abs() <= 1e-12);
        }
        assert!((u.as_vec()[0] - Complex64::from_polar(1.0, -0.3)).norm() <= 1e-15);
    }

    #[test]
    fn projection_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let u = random_point(&mut rng, 5);
        assert!(tangent_project(&u, u.as_vec()).norm() <= 1e-15);
        let ju = u.as_vec() * j();
        assert!((tangent_project(&u, &ju).v - &ju).norm() <= 1e-15);
        let p = tangent_project(&u, &random_vec(&mut rng, 5));
        assert!((tangent_project(&u, &p.v).v - &p.v).norm() <= 1e-12);
    }

    #[test]
    fn transport_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let (a, b) = (random_point(&mut rng, 4), random_point(&mut rng, 4));
        assert_eq!(vector_transport(&a, &b, &TangentVector::zero(&a)).norm(), 0.0);
        let mu = tangent_project(&a, &random_vec(&mut rng, 4));
        assert!((vector_transport(&a, &a, &mu).v - &mu.v).norm() <= 1e-12);
        let moved = vector_transport(&a, &b, &mu);
        assert!(moved.tangency_residual() <= 1e-10);
        assert_eq!(moved.base, b);
    }

    #[test]
    fn retraction_examples() {
        let u = ObliquePoint::ones(1);
        let mu = TangentVector { v: CVec::from_element(1, j()), base: u.clone() };
        let r = retract(&u, 1.0, &mu).unwrap();
        assert!((r.as_vec()[0] - Complex64::from_polar(1.0, FRAC_PI_4)).norm() <= 1e-15);
        assert_eq!(retract(&u, 0.0, &mu).unwrap(), u);
        let back = TangentVector { v: CVec::from_element(1, Complex64::new(-1.0, 0.0)), base: u.clone() };
        assert!(matches!(retract(&u, 1.0, &back), Err(Error::NumericalFailure(_))));
    }

    #[test]
    fn polak_ribiere_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let u = random_point(&mut rng, 3);
        let g_new = tangent_project(&u, &random_vec(&mut rng, 3));
        let g_old = tangent_project(&u, &random_vec(&mut rng, 3));
        assert_eq!(polak_ribiere(&g_new, &g_new, &g_old).unwrap(), 0.0);
        let alpha = polak_ribiere(&g_new, &TangentVector::zero(&u), &g_old).unwrap();
        assert!((alpha - g_new.norm().powi(2) / g_old.norm().powi(2)).abs() <= 1e-12);
        assert!(polak_ribiere(&g_new, &g_old, &TangentVector::zero(&u)).is_err());
    }

    #[test]
    fn single_element_objective_is_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let Fixed { ch, w, z } = fixed(&mut rng, 2, 3, 1);
        let u = random_point(&mut rng, 1);
        assert!(riemannian_gradient(&u, &w, &z, &ch).unwrap().norm() <= 1e-12);
    }

    #[test]
    fn zero_design_has_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let ch = random_channel(&mut rng, 2, 3, 4);
        let u = random_point(&mut rng, 4);
        let zeros = vec![CMat::zeros(3, 3); 2];
        assert_eq!(euclidean_gradient(&u, &zeros, &CMat::zeros(3, 3), &ch).unwrap().norm(), 0.0);
    }

    #[test]
    fn euclidean_gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        for _ in 0..50 {
            let (k, n, m) = (rng.random_range(1..=3), rng.random_range(2..=4), rng.random_range(1..=5));
            let Fixed { ch, w, z } = fixed(&mut rng, k, n, m);
            let obj = PhaseObjective::new(&w, &z, &ch).unwrap();
            // Off-manifold point: the gradient formula holds on all of C^M.
            let u = random_vec(&mut rng, m);
            let g = obj.gradient(&u).unwrap();
            let h = 1e-6;
            for i in 0..m {
                for (dir, part) in [(Complex64::new(1.0, 0.0), g[i].re), (j(), g[i].im)] {
                    let mut plus = u.clone();
                    let mut minus = u.clone();
                    plus[i] += dir * h;
                    minus[i] -= dir * h;
                    let fd = (obj.value(&plus).unwrap() - obj.value(&minus).unwrap()) / (2.0 * h);
                    assert!((fd - part).abs() <= 1e-5 * g.norm().max(1.0), "fd {fd} vs {part}");
                }
            }
        }
    }

    #[test]
    fn negative_gradient_descends_through_retraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..20 {
            let Fixed { ch, w, z } = fixed(&mut rng, 2, 3, 4);
            let u = random_point(&mut rng, 4);
            let obj = PhaseObjective::new(&w, &z, &ch).unwrap();
            let g = riemannian_gradient(&u, &w, &z, &ch).unwrap();
            let dir = TangentVector { v: -&g.v, base: u.clone() };
            let f1 = obj.value(retract(&u, 1e-6, &dir).unwrap().as_vec()).unwrap();
            assert!(f1 < obj.value(u.as_vec()).unwrap());
        }
    }

    #[test]
    fn objective_and_gradient_norm_ignore_global_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(38);
        for _ in 0..20 {
            let Fixed { ch, w, z } = fixed(&mut rng, 3, 3, 4);
            let u = random_point(&mut rng, 4);
            let rotated = ObliquePoint::normalized(&(u.as_vec() * Complex64::from_polar(1.0, rng.random_range(0.0..TAU)))).unwrap();
            let obj = PhaseObjective::new(&w, &z, &ch).unwrap();
            assert!((obj.value(u.as_vec()).unwrap() - obj.value(rotated.as_vec()).unwrap()).abs() <= 1e-10);
            let a = riemannian_gradient(&u, &w, &z, &ch).unwrap().norm();
            let b = riemannian_gradient(&rotated, &w, &z, &ch).unwrap().norm();
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn cg_from_stationary_start_does_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(39);
        let Fixed { ch, w, z } = fixed(&mut rng, 2, 3, 1);
        let u = random_point(&mut rng, 1);
        let out = run_cg(&u, &w, &z, &ch, &CgOptions::default()).unwrap();
        assert_eq!((out.iterations, out.status), (0, CgStatus::Converged));
        assert_eq!(out.point, u);
    }

    #[test]
    fn cg_trace_is_monotone_and_on_manifold() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for _ in 0..20 {
            let Fixed { ch, w, z } = fixed(&mut rng, 3, 4, 6);
            let u = random_point(&mut rng, 6);
            let out = run_cg(&u, &w, &z, &ch, &CgOptions::default()).unwrap();
            assert!(out.history.is_monotone(1e-9));
            assert!(out.point.max_modulus_error() <= 1e-12);
            if out.status == CgStatus::Converged {
                assert!(out.grad_norm <= 1e-3);
            }
        }
    }

    #[test]
    fn cg_matches_phase_grid_for_two_elements() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..3 {
            let Fixed { ch, w, z } = fixed(&mut rng, 1, 2, 2);
            let obj = PhaseObjective::new(&w, &z, &ch).unwrap();
            let steps = 128;
            let mut best = f64::INFINITY;
            for a in 0..steps {
                for b in 0..steps {
                    let phi = [TAU * a as f64 / steps as f64, TAU * b as f64 / steps as f64];
                    best = best.min(obj.value(ObliquePoint::from_phases(&phi).as_vec()).unwrap());
                }
            }
            let out = run_cg(&ObliquePoint::ones(2), &w, &z, &ch, &CgOptions::default()).unwrap();
            let f = obj.value(out.point.as_vec()).unwrap();
            assert!(f <= best + 1e-3, "cg {f} vs grid {best}");
        }
    }

    proptest! {
        #[test]
        fn retraction_stays_on_manifold(seed in any::<u64>(), m in 1usize..8, step in 0.0f64..10.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_point(&mut rng, m);
            let mu = tangent_project(&u, &random_vec(&mut rng, m));
            let r = retract(&u, step, &mu).unwrap();
            prop_assert!(r.max_modulus_error() <= 1e-12);
        }

        #[test]
        fn projection_and_transport_are_tangent(seed in any::<u64>(), m in 1usize..8, scale in 1e-3f64..1e3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, b) = (random_point(&mut rng, m), random_point(&mut rng, m));
            let v = random_vec(&mut rng, m).scale(scale);
            let p = tangent_project(&a, &v);
            prop_assert!(p.tangency_residual() <= 1e-10 * scale.max(1.0));
            prop_assert!((tangent_project(&a, &p.v).v - &p.v).norm() <= 1e-12 * scale.max(1.0));
            prop_assert!(vector_transport(&a, &b, &p).tangency_residual() <= 1e-10 * scale.max(1.0));
        }

        #[test]
        fn polak_ribiere_is_nonnegative(seed in any::<u64>(), m in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_point(&mut rng, m);
            let g: Vec<TangentVector> = (0..3).map(|_| tangent_project(&u, &random_vec(&mut rng, m))).collect();
            if g[2].norm() > 0.0 {
                prop_assert!(polak_ribiere(&g[0], &g[1], &g[2]).unwrap() >= 0.0);
            }
        }
    }
}
