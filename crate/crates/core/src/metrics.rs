//! Rates, secrecy rates and the difference-of-convex objective
//! `f = F1 + F2 - G1 - G2` for a candidate transmit design.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{self, hermitian_part, min_eigenvalue, quad_form, real_trace, CMat, CVec};

/// Beamforming covariances `W_k`, optional extracted beamformers `w_k`,
/// AN covariance `Z` and the IRS phase vector `u` (`u_m = e^{-j phi_m}`,
/// so the reflection matrix is `diag(conj(u))`).
#[derive(Clone, Debug, PartialEq)]
pub struct TransmitSolution {
    pub beam_cov: Vec<CMat>,
    pub beams: Option<Vec<CVec>>,
    pub an_cov: CMat,
    pub phases: CVec,
}

impl TransmitSolution {
    /// Builds a solution, symmetrizing every covariance.
    pub fn new(beam_cov: Vec<CMat>, an_cov: CMat, phases: CVec) -> Self {
        Self {
            beam_cov: beam_cov.iter().map(hermitian_part).collect(),
            beams: None,
            an_cov: hermitian_part(&an_cov),
            phases,
        }
    }

    /// `W_k = w_k w_k^H`.
    pub fn from_beams(beams: Vec<CVec>, an_cov: CMat, phases: CVec) -> Self {
        let beam_cov = beams.iter().map(linalg::outer).collect();
        Self {
            beams: Some(beams),
            ..Self::new(beam_cov, an_cov, phases)
        }
    }

    pub fn zeros(num_users: usize, num_antennas: usize, phases: CVec) -> Self {
        Self::new(
            vec![CMat::zeros(num_antennas, num_antennas); num_users],
            CMat::zeros(num_antennas, num_antennas),
            phases,
        )
    }

    pub fn num_users(&self) -> usize {
        self.beam_cov.len()
    }

    pub fn check_dims(&self, ch: &ChannelSet) -> Result<()> {
        let (k, n, m) = (ch.num_users(), ch.num_antennas(), ch.num_elements());
        if self.beam_cov.len() != k {
            return Err(Error::invalid(format!("expected {k} beamforming matrices, found {}", self.beam_cov.len())));
        }
        if self.beam_cov.iter().any(|w| w.shape() != (n, n)) || self.an_cov.shape() != (n, n) {
            return Err(Error::invalid(format!("covariances must be {n}×{n}")));
        }
        if self.phases.len() != m {
            return Err(Error::invalid(format!("phase vector has length {}, expected {m}", self.phases.len())));
        }
        if let Some(beams) = &self.beams {
            if beams.len() != k || beams.iter().any(|w| w.len() != n) {
                return Err(Error::invalid("beamformer list does not match the channel dimensions"));
            }
        }
        Ok(())
    }

    pub fn max_modulus_error(&self) -> f64 {
        self.phases.iter().map(|u| (u.norm() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Constraint residuals (C1 power, C2 unit modulus, C3/C4 PSD).
    pub fn feasibility(&self, p_max: f64) -> Feasibility {
        let min_psd_ratio = self
            .beam_cov
            .iter()
            .chain(std::iter::once(&self.an_cov))
            .map(|a| {
                let tr = real_trace(a).abs();
                let lam = min_eigenvalue(a);
                if lam >= 0.0 {
                    0.0
                } else if tr > 0.0 {
                    lam / tr
                } else {
                    f64::NEG_INFINITY
                }
            })
            .fold(0.0, f64::min);
        Feasibility {
            power: power_used(self),
            p_max,
            min_psd_ratio,
            max_modulus_error: self.max_modulus_error(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Feasibility {
    pub power: f64,
    pub p_max: f64,
    /// Most negative `lambda_min / Tr` over all covariances, or 0.
    pub min_psd_ratio: f64,
    pub max_modulus_error: f64,
}

impl Feasibility {
    pub fn power_ok(&self) -> bool {
        self.power <= self.p_max * (1.0 + 1e-9) + f64::MIN_POSITIVE
    }

    pub fn psd_ok(&self) -> bool {
        self.min_psd_ratio >= -1e-9
    }

    pub fn modulus_ok(&self) -> bool {
        self.max_modulus_error <= 1e-12
    }

    pub fn is_feasible(&self) -> bool {
        self.power_ok() && self.psd_ok() && self.modulus_ok()
    }
}

/// Every rate quantity of one design. Rates in bits/s/Hz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub f1: f64,
    pub f2: f64,
    pub g1: f64,
    pub g2: f64,
    pub gamma: Vec<f64>,
    pub rate: Vec<f64>,
    pub eve_capacity: Vec<f64>,
    pub secrecy: Vec<f64>,
    pub sum_secrecy: f64,
    pub f: f64,
}

/// Received powers through the effective channels `h_k = G_k^H u`, `h_e = L^H u`.
pub(crate) struct Gains {
    /// `user[k][r] = h_k^H W_r h_k`.
    pub user: Vec<Vec<f64>>,
    pub user_an: Vec<f64>,
    /// `eve[r] = h_e^H W_r h_e`.
    pub eve: Vec<f64>,
    pub eve_an: f64,
    pub noise_user: f64,
    pub noise_eve: f64,
}

impl Gains {
    pub fn new(sol: &TransmitSolution, ch: &ChannelSet) -> Result<Self> {
        sol.check_dims(ch)?;
        let k = ch.num_users();
        let he = ch.eve_effective(&sol.phases);
        let mut user = Vec::with_capacity(k);
        let mut user_an = Vec::with_capacity(k);
        for kk in 0..k {
            let hk = ch.user_effective(kk, &sol.phases);
            user.push(sol.beam_cov.iter().map(|w| quad_form(&hk, w)).collect());
            user_an.push(quad_form(&hk, &sol.an_cov));
        }
        Ok(Self {
            user,
            user_an,
            eve: sol.beam_cov.iter().map(|w| quad_form(&he, w)).collect(),
            eve_an: quad_form(&he, &sol.an_cov),
            noise_user: ch.noise_user(),
            noise_eve: ch.noise_eve(),
        })
    }

    pub fn interference(&self, k: usize) -> f64 {
        self.user[k]
            .iter()
            .enumerate()
            .filter(|(r, _)| *r != k)
            .map(|(_, v)| v)
            .sum::<f64>()
            + self.user_an[k]
    }

    /// Arguments of the four families of log terms.
    pub fn log_args(&self) -> LogArgs {
        let k = self.user.len();
        let user_total: Vec<f64> = (0..k).map(|i| self.user[i].iter().sum::<f64>() + self.user_an[i]).collect();
        LogArgs {
            f1: user_total.iter().map(|t| t + self.noise_user).collect(),
            g1: (0..k).map(|i| self.interference(i) + self.noise_user).collect(),
            f2: self.eve_an + self.noise_eve,
            g2: self.eve.iter().map(|e| e + self.eve_an + self.noise_eve).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct LogArgs {
    pub f1: Vec<f64>,
    pub g1: Vec<f64>,
    pub f2: f64,
    pub g2: Vec<f64>,
}

impl LogArgs {
    pub fn check_positive(&self) -> Result<()> {
        let ok = self.f1.iter().chain(&self.g1).chain(&self.g2).chain([&self.f2]).all(|&v| v > 0.0 && v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("non-positive log argument"))
        }
    }

    /// `(F1, F2, G1, G2)`.
    pub fn terms(&self) -> (f64, f64, f64, f64) {
        let k = self.f1.len() as f64;
        let f1 = -self.f1.iter().map(|v| v.log2()).sum::<f64>();
        let f2 = -k * self.f2.log2();
        let g1 = -self.g1.iter().map(|v| v.log2()).sum::<f64>();
        let g2 = -self.g2.iter().map(|v| v.log2()).sum::<f64>();
        (f1, f2, g1, g2)
    }
}

fn check_user(k: usize, ch: &ChannelSet) -> Result<()> {
    if k >= ch.num_users() {
        return Err(Error::invalid(format!("user index {k} out of range for {} users", ch.num_users())));
    }
    Ok(())
}

/// SINR of user `k` in the covariance form.
pub fn sinr_user(k: usize, sol: &TransmitSolution, ch: &ChannelSet) -> Result<f64> {
    check_user(k, ch)?;
    let gains = Gains::new(sol, ch)?;
    Ok(gains.user[k][k] / (gains.interference(k) + gains.noise_user))
}

/// Eavesdropper capacity for the message of user `k`, bits/s/Hz.
pub fn eve_capacity(k: usize, sol: &TransmitSolution, ch: &ChannelSet) -> Result<f64> {
    check_user(k, ch)?;
    let gains = Gains::new(sol, ch)?;
    Ok((1.0 + gains.eve[k] / (gains.eve_an + gains.noise_eve)).log2())
}

/// `sum_k Tr(W_k) + Tr(Z)`.
pub fn power_used(sol: &TransmitSolution) -> f64 {
    sol.beam_cov.iter().map(real_trace).sum::<f64>() + real_trace(&sol.an_cov)
}

/// The unclipped objective `F1 + F2 - G1 - G2` (to be minimized).
pub fn objective(sol: &TransmitSolution, ch: &ChannelSet) -> Result<f64> {
    let args = Gains::new(sol, ch)?.log_args();
    args.check_positive()?;
    let (f1, f2, g1, g2) = args.terms();
    Ok(f1 + f2 - g1 - g2)
}

pub fn secrecy_rates(sol: &TransmitSolution, ch: &ChannelSet) -> Result<ObjectiveBreakdown> {
    let gains = Gains::new(sol, ch)?;
    let args = gains.log_args();
    args.check_positive()?;
    let (f1, f2, g1, g2) = args.terms();
    let k = ch.num_users();
    let gamma: Vec<f64> = (0..k).map(|i| gains.user[i][i] / (gains.interference(i) + gains.noise_user)).collect();
    let rate: Vec<f64> = gamma.iter().map(|g| (1.0 + g).log2()).collect();
    let eve_capacity: Vec<f64> = (0..k)
        .map(|i| (1.0 + gains.eve[i] / (gains.eve_an + gains.noise_eve)).log2())
        .collect();
    let secrecy: Vec<f64> = rate.iter().zip(&eve_capacity).map(|(r, c)| (r - c).max(0.0)).collect();
    Ok(ObjectiveBreakdown {
        f1,
        f2,
        g1,
        g2,
        sum_secrecy: secrecy.iter().sum(),
        gamma,
        rate,
        eve_capacity,
        secrecy,
        f: f1 + f2 - g1 - g2,
    })
}

/// `g_k^H Phi H w` with `Phi = diag(conj(u))`, written out as explicit loops.
pub fn received_amplitude(g: &CVec, h: &CMat, u: &CVec, w: &CVec) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 0..h.nrows() {
        let mut hw = Complex64::new(0.0, 0.0);
        for n in 0..h.ncols() {
            hw += h[(m, n)] * w[n];
        }
        acc += g[m].conj() * u[m].conj() * hw;
    }
    acc
}
