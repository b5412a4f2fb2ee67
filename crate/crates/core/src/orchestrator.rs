//! Alternating optimization over `(W, Z)` and `u`, plus the two reference
//! schemes (random IRS phases; no artificial noise).

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{normalize, ChannelSet, ScenarioConfig};
use crate::convex::InnerOptions;
use crate::error::{Error, Result};
use crate::history::{HistoryRecord, Phase, RunHistory};
use crate::manifold::{run_cg, CgOptions, ObliquePoint};
use crate::metrics::{self, power_used, TransmitSolution};
use crate::sca::{max_rank_residual, start_with_an_fraction, run_sca, with_extracted_beams, ScaOptions};

/// Stream of the seeded generator used for random IRS phases.
pub const PHASE_STREAM: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Joint optimization of W, Z and the IRS phases.
    Proposed,
    /// Random fixed IRS phases; W and Z optimized.
    Baseline1,
    /// No artificial noise; W and the IRS phases optimized.
    Baseline2,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Proposed, Scheme::Baseline1, Scheme::Baseline2];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Baseline1 => "baseline1",
            Scheme::Baseline2 => "baseline2",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "proposed" => Ok(Scheme::Proposed),
            "baseline1" | "random_phase" | "random-phase" => Ok(Scheme::Baseline1),
            "baseline2" | "no_an" | "no-an" => Ok(Scheme::Baseline2),
            other => Err(Error::invalid(format!("unknown scheme {other:?}"))),
        }
    }
}

/// Uniform phases in `[0, 2π)` drawn from `seed` on [`PHASE_STREAM`].
pub fn random_phases(m: usize, seed: u64) -> ObliquePoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(PHASE_STREAM);
    let phi: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect();
    ObliquePoint::from_phases(&phi)
}

fn sca_options(cfg: &ScenarioConfig, with_an: bool) -> ScaOptions {
    ScaOptions {
        tol: cfg.sca_tol,
        max_iters: cfg.sca_max_iters,
        inner: InnerOptions {
            tol: cfg.inner_tol,
            max_iters: cfg.inner_max_iters,
            ..InnerOptions::default()
        },
        with_an,
    }
}

fn cg_options(cfg: &ScenarioConfig) -> CgOptions {
    CgOptions {
        tol: cfg.manifold_tol,
        max_iters: cfg.cg_max_iters,
        ..CgOptions::default()
    }
}

fn check_inputs(ch: &ChannelSet, cfg: &ScenarioConfig) -> Result<()> {
    cfg.validate()?;
    if (ch.num_users(), ch.num_antennas(), ch.num_elements())
        != (cfg.num_users, cfg.num_bs_antennas, cfg.num_irs_elements)
    {
        return Err(Error::invalid("channel dimensions do not match the configuration"));
    }
    Ok(())
}

struct Tracker<'a> {
    ch: &'a ChannelSet,
    clock: Instant,
    history: RunHistory,
}

impl Tracker<'_> {
    fn push(&mut self, outer: usize, phase: Phase, iteration: usize, sol: &TransmitSolution) -> Result<f64> {
        let b = metrics::secrecy_rates(sol, self.ch)?;
        self.history.push(HistoryRecord {
            outer,
            phase,
            iteration,
            f: b.f,
            sum_secrecy: b.sum_secrecy,
            power_used: power_used(sol),
            max_rank_residual: Some(max_rank_residual(sol)),
            elapsed_ms: self.clock.elapsed().as_secs_f64() * 1e3,
        });
        Ok(b.f)
    }
}

/// Alternate SCA passes (fixed `u`) and manifold CG passes (fixed `W, Z`),
/// warm-starting each pass from the previous one, until the objective moves
/// by at most `outer_tol` or `max_outer_iters` is reached.
fn alternate(
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    u0: ObliquePoint,
    with_an: bool,
    optimize_phases: bool,
) -> Result<(TransmitSolution, RunHistory)> {
    check_inputs(ch, cfg)?;
    let work = if cfg.normalize_noise { normalize(ch).0 } else { ch.clone() };
    let sca_opts = sca_options(cfg, with_an);
    let cg_opts = cg_options(cfg);

    let mut tracker = Tracker {
        ch: &work,
        clock: Instant::now(),
        history: RunHistory::default(),
    };
    let mut u = u0;
    let an_fraction = if with_an { cfg.initial_an_fraction } else { 0.0 };
    let mut sol = start_with_an_fraction(u.as_vec(), &work, cfg.p_max, an_fraction);
    let mut f_prev = tracker.push(0, Phase::Initial, 0, &sol)?;
    let max_outer = if optimize_phases { cfg.max_outer_iters } else { 1 };

    for t in 1..=max_outer {
        let (next, sca_history) = run_sca(u.as_vec(), &work, cfg.p_max, &sol, &sca_opts)
            .map_err(|e| e.context(format!("outer iteration {t}, SCA pass")))?;
        sol = next;
        let mut f = tracker.push(t, Phase::Sca, sca_history.len().saturating_sub(1), &sol)?;

        if optimize_phases {
            let outcome = run_cg(&u, &sol.beam_cov, &sol.an_cov, &work, &cg_opts)
                .map_err(|e| e.context(format!("outer iteration {t}, manifold pass")))?;
            u = outcome.point;
            sol.phases = u.as_vec().clone();
            f = tracker.push(t, Phase::Manifold, outcome.iterations, &sol)?;
        }
        if (f - f_prev).abs() <= cfg.outer_tol {
            break;
        }
        f_prev = f;
    }
    Ok((with_extracted_beams(&sol)?, tracker.history))
}

/// Proposed scheme: joint `(W, Z, u)` design.
pub fn optimize(ch: &ChannelSet, cfg: &ScenarioConfig) -> Result<(TransmitSolution, RunHistory)> {
    let u0 = if cfg.random_initial_phases {
        random_phases(ch.num_elements(), cfg.rng_seed)
    } else {
        ObliquePoint::ones(ch.num_elements())
    };
    alternate(ch, cfg, u0, true, true)
}

/// Baseline 1: IRS phases drawn once at random (seeded by `cfg.rng_seed`),
/// then a single SCA pass over `(W, Z)`.
pub fn baseline_random_phase(ch: &ChannelSet, cfg: &ScenarioConfig) -> Result<(TransmitSolution, RunHistory)> {
    alternate(ch, cfg, random_phases(ch.num_elements(), cfg.rng_seed), true, false)
}

/// Baseline 2: alternating optimization of `W` and `u` with `Z = 0` throughout.
pub fn baseline_no_an(ch: &ChannelSet, cfg: &ScenarioConfig) -> Result<(TransmitSolution, RunHistory)> {
    alternate(ch, cfg, ObliquePoint::ones(ch.num_elements()), false, true)
}

pub fn run_scheme(scheme: Scheme, ch: &ChannelSet, cfg: &ScenarioConfig) -> Result<(TransmitSolution, RunHistory)> {
    match scheme {
        Scheme::Proposed => optimize(ch, cfg),
        Scheme::Baseline1 => baseline_random_phase(ch, cfg),
        Scheme::Baseline2 => baseline_no_an(ch, cfg),
    }
}

/// Number of outer iterations recorded in `history`.
pub fn outer_iterations(history: &RunHistory) -> usize {
    history.records.iter().map(|r| r.outer).max().unwrap_or(0)
}

/// Whether the last two outer objective values agree within `tol`.
pub fn converged(history: &RunHistory, tol: f64) -> bool {
    let mut per_outer: Vec<(usize, f64)> = Vec::new();
    for r in &history.records {
        match per_outer.last_mut() {
            Some((t, f)) if *t == r.outer => *f = r.f,
            _ => per_outer.push((r.outer, r.f)),
        }
    }
    per_outer.len() >= 2 && {
        let n = per_outer.len();
        (per_outer[n - 1].1 - per_outer[n - 2].1).abs() <= tol
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::generate_scenario;

    fn small(seed: u64) -> (ScenarioConfig, ChannelSet) {
        let cfg = ScenarioConfig {
            num_users: 2,
            num_bs_antennas: 3,
            num_irs_elements: 4,
            p_max: 1.0,
            rng_seed: seed,
            ..ScenarioConfig::default()
        };
        let ch = generate_scenario(&cfg).unwrap();
        (cfg, ch)
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert_eq!("no_an".parse::<Scheme>().unwrap(), Scheme::Baseline2);
        assert!("best".parse::<Scheme>().is_err());
    }

    #[test]
    fn single_outer_iteration_records_one_pass_each() {
        let (mut cfg, ch) = small(1);
        cfg.max_outer_iters = 1;
        let (_, history) = optimize(&ch, &cfg).unwrap();
        assert_eq!(history.count(Phase::Initial), 1);
        assert_eq!(history.count(Phase::Sca), 1);
        assert_eq!(history.count(Phase::Manifold), 1);
        assert_eq!(outer_iterations(&history), 1);
    }

    #[test]
    fn proposed_trace_is_monotone_and_solution_feasible() {
        for seed in 0..5 {
            let (cfg, ch) = small(seed);
            let (sol, history) = optimize(&ch, &cfg).unwrap();
            assert!(history.is_monotone(1e-6));
            assert!(sol.feasibility(cfg.p_max).is_feasible());
            assert!(sol.beams.is_some());
        }
    }

    #[test]
    fn baseline_no_an_keeps_z_zero() {
        let (cfg, ch) = small(2);
        let (sol, history) = baseline_no_an(&ch, &cfg).unwrap();
        assert_eq!(sol.an_cov.norm(), 0.0);
        assert!(power_used(&sol) <= cfg.p_max * (1.0 + 1e-12));
        assert!(history.is_monotone(1e-6));
    }

    #[test]
    fn baseline_random_phase_is_seeded_and_fixed() {
        let (cfg, ch) = small(3);
        let (a, history) = baseline_random_phase(&ch, &cfg).unwrap();
        let (b, _) = baseline_random_phase(&ch, &cfg).unwrap();
        assert_eq!(a.phases, b.phases);
        assert_eq!(a.phases, *random_phases(cfg.num_irs_elements, cfg.rng_seed).as_vec());
        assert!(a.max_modulus_error() <= 1e-12);
        assert_eq!(history.count(Phase::Manifold), 0);
    }

    #[test]
    fn mismatched_channel_is_rejected() {
        let (mut cfg, ch) = small(4);
        cfg.num_users = 3;
        assert!(matches!(optimize(&ch, &cfg), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn convergence_check_uses_last_two_outer_values() {
        let mut h = RunHistory::default();
        for (outer, f) in [(0, -1.0), (1, -1.5), (1, -1.6), (2, -1.6004)] {
            h.push(HistoryRecord {
                outer,
                phase: Phase::Sca,
                iteration: 0,
                f,
                sum_secrecy: -f,
                power_used: 0.0,
                max_rank_residual: None,
                elapsed_ms: 0.0,
            });
        }
        assert!(converged(&h, 1e-3));
        assert!(!converged(&h, 1e-4));
    }
}
