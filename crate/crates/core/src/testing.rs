//! Random instances for property tests and oracles. Channels have unit-variance
//! entries and unit noise, so `p_max` of order 1..10 gives moderate SNR.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::ChannelSet;
use crate::linalg::{CMat, CVec};
use crate::manifold::ObliquePoint;
use crate::metrics::{power_used, TransmitSolution};

pub fn complex_normal(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_vec(rng: &mut impl Rng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| complex_normal(rng))
}

pub fn random_mat(rng: &mut impl Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_normal(rng))
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> CMat {
    let a = random_mat(rng, n, n);
    (&a + a.adjoint()).scale(0.5)
}

/// `A A^H` with `A` of size `n × rank`, scaled to trace `trace`.
pub fn random_psd(rng: &mut impl Rng, n: usize, rank: usize, trace: f64) -> CMat {
    let a = random_mat(rng, n, rank);
    let p = &a * a.adjoint();
    let t = p.trace().re;
    if t > 0.0 {
        p.scale(trace / t)
    } else {
        p
    }
}

pub fn random_channel(rng: &mut impl Rng, k: usize, n: usize, m: usize) -> ChannelSet {
    ChannelSet::new(
        random_mat(rng, m, n),
        (0..k).map(|_| random_vec(rng, m)).collect(),
        random_vec(rng, m),
        1.0,
        1.0,
    )
    .expect("valid random channel")
}

pub fn random_point(rng: &mut impl Rng, m: usize) -> ObliquePoint {
    let phi: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect();
    ObliquePoint::from_phases(&phi)
}

/// Random PSD covariances using a random fraction of `p_max`; `Z = 0` when
/// `with_an` is false.
pub fn random_feasible(
    rng: &mut impl Rng,
    k: usize,
    n: usize,
    p_max: f64,
    with_an: bool,
    u: &CVec,
) -> TransmitSolution {
    let blocks = k + usize::from(with_an);
    let budget = p_max * rng.random_range(0.05..1.0);
    let shares: Vec<f64> = (0..blocks).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = shares.iter().sum();
    let mut next = |share: f64| {
        let rank = rng.random_range(1..=n);
        random_psd(rng, n, rank, budget * share / total)
    };
    let w: Vec<CMat> = shares[..k].iter().map(|&s| next(s)).collect();
    let z = if with_an { next(shares[k]) } else { CMat::zeros(n, n) };
    let sol = TransmitSolution::new(w, z, u.clone());
    debug_assert!(power_used(&sol) <= p_max * (1.0 + 1e-12));
    sol
}
