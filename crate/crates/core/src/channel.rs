//! Scenario geometry, path loss and Rayleigh-faded channel generation.
//!
//! The BS sits at the origin. The blocked sector is an annulus sector
//! centred on the +x axis; the IRS is on that axis at `bs_irs_distance`.
//! Only the cascaded BS→IRS→receiver links exist (no direct paths).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};

/// Stream of the ChaCha generator used for channel draws. Other consumers of
/// the same seed (e.g. random IRS phases) use different streams.
pub const CHANNEL_STREAM: u64 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkClass {
    BsIrs,
    IrsUser,
    IrsEve,
}

/// Log-distance path loss `PL(d) = PL0 + 10 alpha log10(d)` in dB.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathLossParams {
    /// Loss at the 1 m reference distance, dB.
    pub reference_loss_db: f64,
    pub exponent_bs_irs: f64,
    pub exponent_irs_user: f64,
    pub exponent_irs_eve: f64,
}

impl Default for PathLossParams {
    fn default() -> Self {
        Self {
            reference_loss_db: 30.0,
            exponent_bs_irs: 2.2,
            exponent_irs_user: 2.8,
            exponent_irs_eve: 2.8,
        }
    }
}

impl PathLossParams {
    pub fn exponent(&self, class: LinkClass) -> f64 {
        match class {
            LinkClass::BsIrs => self.exponent_bs_irs,
            LinkClass::IrsUser => self.exponent_irs_user,
            LinkClass::IrsEve => self.exponent_irs_eve,
        }
    }
}

/// Linear power gain of a link of length `distance` meters.
pub fn path_loss_gain(distance: f64, class: LinkClass, params: &PathLossParams) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::invalid(format!("distance must be positive, got {distance}")));
    }
    let loss_db = params.reference_loss_db + 10.0 * params.exponent(class) * distance.log10();
    Ok(10f64.powf(-loss_db / 10.0))
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Everything needed to draw one scenario and run the optimizer on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub num_users: usize,
    pub num_bs_antennas: usize,
    pub num_irs_elements: usize,
    /// Watts.
    pub p_max: f64,
    /// Watts.
    pub noise_user: f64,
    /// Watts.
    pub noise_eve: f64,
    pub cell_radius: f64,
    pub sector_inner_radius: f64,
    pub sector_aperture_deg: f64,
    pub r_be: f64,
    pub r_re: f64,
    pub bs_irs_distance: f64,
    pub path_loss: PathLossParams,
    pub rng_seed: u64,
    /// Riemannian gradient norm tolerance of the phase optimizer.
    pub manifold_tol: f64,
    /// Outer alternating-optimization tolerance on |Δf|.
    pub outer_tol: f64,
    pub max_outer_iters: usize,
    pub sca_tol: f64,
    pub sca_max_iters: usize,
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    pub cg_max_iters: usize,
    pub normalize_noise: bool,
    /// Start the proposed scheme from seeded random phases instead of all-ones.
    pub random_initial_phases: bool,
    /// Share of `p_max` given to isotropic artificial noise in the first SCA
    /// start of schemes that use it; the rest is split across matched-filter beams.
    pub initial_an_fraction: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            num_users: 3,
            num_bs_antennas: 6,
            num_irs_elements: 6,
            p_max: dbm_to_watts(40.0),
            noise_user: dbm_to_watts(-110.0),
            noise_eve: dbm_to_watts(-110.0),
            cell_radius: 500.0,
            sector_inner_radius: 20.0,
            sector_aperture_deg: 120.0,
            r_be: 200.0,
            r_re: 250.0,
            bs_irs_distance: 50.0,
            path_loss: PathLossParams::default(),
            rng_seed: 0,
            manifold_tol: 1e-3,
            outer_tol: 1e-3,
            max_outer_iters: 20,
            sca_tol: 1e-3,
            sca_max_iters: 30,
            inner_tol: 1e-6,
            inner_max_iters: 500,
            cg_max_iters: 300,
            normalize_noise: true,
            random_initial_phases: false,
            initial_an_fraction: 0.5,
        }
    }
}

impl ScenarioConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn path_loss_gain(&self, distance: f64, class: LinkClass) -> Result<f64> {
        path_loss_gain(distance, class, &self.path_loss)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_users < 1 {
            return Err(Error::invalid("num_users must be at least 1"));
        }
        if self.num_bs_antennas < 2 {
            return Err(Error::invalid("num_bs_antennas must be greater than 1"));
        }
        if self.num_irs_elements < 1 {
            return Err(Error::invalid("num_irs_elements must be at least 1"));
        }
        let positive = [
            ("p_max", self.p_max),
            ("noise_user", self.noise_user),
            ("noise_eve", self.noise_eve),
            ("cell_radius", self.cell_radius),
            ("sector_inner_radius", self.sector_inner_radius),
            ("sector_aperture_deg", self.sector_aperture_deg),
            ("r_be", self.r_be),
            ("r_re", self.r_re),
            ("bs_irs_distance", self.bs_irs_distance),
            ("manifold_tol", self.manifold_tol),
            ("outer_tol", self.outer_tol),
            ("sca_tol", self.sca_tol),
            ("inner_tol", self.inner_tol),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive and finite, got {value}")));
            }
        }
        if !(0.0..1.0).contains(&self.initial_an_fraction) {
            return Err(Error::invalid("initial_an_fraction must lie in [0, 1)"));
        }
        if self.sector_inner_radius >= self.cell_radius {
            return Err(Error::invalid("sector_inner_radius must be below cell_radius"));
        }
        if self.sector_aperture_deg > 360.0 {
            return Err(Error::invalid("sector_aperture_deg must not exceed 360"));
        }
        let pl = &self.path_loss;
        for v in [pl.reference_loss_db, pl.exponent_bs_irs, pl.exponent_irs_user, pl.exponent_irs_eve] {
            if !v.is_finite() {
                return Err(Error::invalid("path-loss parameters must be finite"));
            }
        }
        if self.max_outer_iters < 1 || self.sca_max_iters < 1 || self.inner_max_iters < 1 {
            return Err(Error::invalid("iteration caps must be at least 1"));
        }
        // BS, IRS and eavesdropper must form a (possibly degenerate) triangle.
        let d = self.bs_irs_distance;
        let slack = 1e-9 * (d + self.r_be + self.r_re);
        if (self.r_be - self.r_re).abs() > d + slack || d > self.r_be + self.r_re + slack {
            return Err(Error::invalid(format!(
                "no eavesdropper position has r_be = {} and r_re = {} with the IRS {} m from the BS",
                self.r_be, self.r_re, d
            )));
        }
        Ok(())
    }
}

/// Node positions of one drawn scenario (meters, BS at the origin).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub irs: [f64; 2],
    pub eavesdropper: [f64; 2],
    pub users: Vec<[f64; 2]>,
}

impl Geometry {
    /// IRS→user distances, floored at the 1 m reference distance of the
    /// path-loss law.
    pub fn irs_user_distances(&self) -> Vec<f64> {
        self.users
            .iter()
            .map(|p| ((p[0] - self.irs[0]).hypot(p[1] - self.irs[1])).max(1.0))
            .collect()
    }
}

fn place_nodes(cfg: &ScenarioConfig, rng: &mut impl Rng) -> Geometry {
    let d = cfg.bs_irs_distance;
    let x = (cfg.r_be * cfg.r_be - cfg.r_re * cfg.r_re + d * d) / (2.0 * d);
    let y = (cfg.r_be * cfg.r_be - x * x).max(0.0).sqrt();
    let half = cfg.sector_aperture_deg.to_radians() / 2.0;
    let (r0, r1) = (cfg.sector_inner_radius, cfg.cell_radius);
    let users = (0..cfg.num_users)
        .map(|_| {
            // Uniform in area over the annulus sector.
            let radius = (r0 * r0 + rng.random::<f64>() * (r1 * r1 - r0 * r0)).sqrt();
            let angle = -half + 2.0 * half * rng.random::<f64>();
            [radius * angle.cos(), radius * angle.sin()]
        })
        .collect();
    Geometry {
        irs: [d, 0.0],
        eavesdropper: [x, y],
        users,
    }
}

/// Seeded node placement for `cfg`; the same draw [`generate_scenario`] uses.
pub fn draw_geometry(cfg: &ScenarioConfig) -> Result<Geometry> {
    cfg.validate()?;
    Ok(place_nodes(cfg, &mut scenario_rng(cfg.rng_seed)))
}

fn scenario_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(CHANNEL_STREAM);
    rng
}

fn cn_matrix(rng: &mut impl Rng, rows: usize, cols: usize, variance: f64) -> CMat {
    let normal = Normal::new(0.0, (variance / 2.0).sqrt()).expect("finite variance");
    DMatrix::from_fn(rows, cols, |_, _| Complex64::new(normal.sample(rng), normal.sample(rng)))
}

/// Draw one channel realization. Identical configs (including `rng_seed`)
/// give bit-identical channel sets.
pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<ChannelSet> {
    cfg.validate()?;
    let mut rng = scenario_rng(cfg.rng_seed);
    let geometry = place_nodes(cfg, &mut rng);
    let (m, n) = (cfg.num_irs_elements, cfg.num_bs_antennas);

    let bs_irs_gain = cfg.path_loss_gain(cfg.bs_irs_distance, LinkClass::BsIrs)?;
    let h = cn_matrix(&mut rng, m, n, bs_irs_gain);
    let g = geometry
        .irs_user_distances()
        .into_iter()
        .map(|dist| {
            let gain = cfg.path_loss_gain(dist, LinkClass::IrsUser)?;
            Ok(cn_matrix(&mut rng, m, 1, gain).column(0).into_owned())
        })
        .collect::<Result<Vec<CVec>>>()?;
    let eve_gain = cfg.path_loss_gain(cfg.r_re, LinkClass::IrsEve)?;
    let l = cn_matrix(&mut rng, m, 1, eve_gain).column(0).into_owned();

    ChannelSet::new(h, g, l, cfg.noise_user, cfg.noise_eve)
}

/// Propagation data of one realization. `G_k = diag(conj(g_k)) H` and
/// `L = diag(conj(l)) H` are precomputed on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    bs_irs: CMat,
    irs_user: Vec<CVec>,
    irs_eve: CVec,
    noise_user: f64,
    noise_eve: f64,
    user_cascade: Vec<CMat>,
    eve_cascade: CMat,
}

fn cascade(reflect: &CVec, h: &CMat) -> CMat {
    let mut out = h.clone();
    for (mut row, gm) in out.row_iter_mut().zip(reflect.iter()) {
        row *= gm.conj();
    }
    out
}

impl ChannelSet {
    pub fn new(bs_irs: CMat, irs_user: Vec<CVec>, irs_eve: CVec, noise_user: f64, noise_eve: f64) -> Result<Self> {
        let (m, n) = bs_irs.shape();
        if m == 0 || n == 0 {
            return Err(Error::invalid("BS→IRS channel must be non-empty"));
        }
        if irs_user.is_empty() {
            return Err(Error::invalid("at least one user channel is required"));
        }
        if let Some(k) = irs_user.iter().position(|g| g.len() != m) {
            return Err(Error::invalid(format!("user {k} channel has length {}, expected {m}", irs_user[k].len())));
        }
        if irs_eve.len() != m {
            return Err(Error::invalid(format!("eavesdropper channel has length {}, expected {m}", irs_eve.len())));
        }
        if !(noise_user > 0.0 && noise_eve > 0.0 && noise_user.is_finite() && noise_eve.is_finite()) {
            return Err(Error::invalid("noise powers must be positive and finite"));
        }
        let all_finite = bs_irs
            .iter()
            .chain(irs_user.iter().flat_map(|g| g.iter()))
            .chain(irs_eve.iter())
            .all(|z| z.re.is_finite() && z.im.is_finite());
        if !all_finite {
            return Err(Error::invalid("channel coefficients must be finite"));
        }
        let user_cascade = irs_user.iter().map(|g| cascade(g, &bs_irs)).collect();
        let eve_cascade = cascade(&irs_eve, &bs_irs);
        Ok(Self {
            bs_irs,
            irs_user,
            irs_eve,
            noise_user,
            noise_eve,
            user_cascade,
            eve_cascade,
        })
    }

    pub fn num_users(&self) -> usize {
        self.irs_user.len()
    }

    pub fn num_antennas(&self) -> usize {
        self.bs_irs.ncols()
    }

    pub fn num_elements(&self) -> usize {
        self.bs_irs.nrows()
    }

    pub fn bs_irs(&self) -> &CMat {
        &self.bs_irs
    }

    pub fn irs_user(&self, k: usize) -> &CVec {
        &self.irs_user[k]
    }

    pub fn irs_eve(&self) -> &CVec {
        &self.irs_eve
    }

    pub fn noise_user(&self) -> f64 {
        self.noise_user
    }

    pub fn noise_eve(&self) -> f64 {
        self.noise_eve
    }

    /// `G_k`, M×N_T.
    pub fn user_cascade(&self, k: usize) -> &CMat {
        &self.user_cascade[k]
    }

    /// `L`, M×N_T.
    pub fn eve_cascade(&self) -> &CMat {
        &self.eve_cascade
    }

    /// Effective BS→user channel `G_k^H u` for phase vector `u`.
    pub fn user_effective(&self, k: usize, u: &CVec) -> CVec {
        self.user_cascade[k].ad_mul(u)
    }

    /// Effective BS→eavesdropper channel `L^H u`.
    pub fn eve_effective(&self, u: &CVec) -> CVec {
        self.eve_cascade.ad_mul(u)
    }

    /// Order-sensitive hash of every stored coefficient (FNV-1a over the
    /// IEEE bit patterns). Used to confirm paired schemes see one channel.
    pub fn fingerprint(&self) -> u64 {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: f64| {
            for b in x.to_bits().to_le_bytes() {
                hash ^= u64::from(b);
                hash = hash.wrapping_mul(0x0100_0000_01b3);
            }
        };
        for z in self
            .bs_irs
            .iter()
            .chain(self.irs_user.iter().flat_map(|g| g.iter()))
            .chain(self.irs_eve.iter())
        {
            eat(z.re);
            eat(z.im);
        }
        eat(self.noise_user);
        eat(self.noise_eve);
        hash
    }

    pub fn to_fixture(&self) -> ChannelFixture {
        ChannelFixture {
            num_users: self.num_users(),
            num_bs_antennas: self.num_antennas(),
            num_irs_elements: self.num_elements(),
            noise_user: self.noise_user,
            noise_eve: self.noise_eve,
            bs_irs: self.bs_irs.row_iter().map(|r| r.iter().copied().collect()).collect(),
            irs_user: self.irs_user.iter().map(|g| g.iter().copied().collect()).collect(),
            irs_eve: self.irs_eve.iter().copied().collect(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_fixture()).expect("fixture serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let fixture: ChannelFixture = serde_json::from_str(s)?;
        fixture.into_channel_set()
    }
}

/// JSON form of a [`ChannelSet`]. Complex numbers are `[re, im]` pairs and
/// `bs_irs` is stored row-major (M rows of N_T entries).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFixture {
    pub num_users: usize,
    pub num_bs_antennas: usize,
    pub num_irs_elements: usize,
    pub noise_user: f64,
    pub noise_eve: f64,
    pub bs_irs: Vec<Vec<Complex64>>,
    pub irs_user: Vec<Vec<Complex64>>,
    pub irs_eve: Vec<Complex64>,
}

impl ChannelFixture {
    pub fn into_channel_set(self) -> Result<ChannelSet> {
        let (k, n, m) = (self.num_users, self.num_bs_antennas, self.num_irs_elements);
        if self.bs_irs.len() != m || self.bs_irs.iter().any(|r| r.len() != n) {
            return Err(Error::invalid(format!("bs_irs must be {m}×{n}")));
        }
        if self.irs_user.len() != k {
            return Err(Error::invalid(format!("expected {k} user channels, found {}", self.irs_user.len())));
        }
        let h = CMat::from_fn(m, n, |r, c| self.bs_irs[r][c]);
        let g = self.irs_user.into_iter().map(CVec::from_vec).collect();
        ChannelSet::new(h, g, CVec::from_vec(self.irs_eve), self.noise_user, self.noise_eve)
    }
}

/// Scaling applied by [`normalize`]. Powers (W, Z) are untouched; received
/// powers and noise are both divided by `power_scale⁻¹`, so every SINR and
/// rate is unchanged.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleRecord {
    /// Factor applied to H (amplitude).
    pub amplitude: f64,
    /// Factor applied to noise powers, `amplitude²`.
    pub power: f64,
}

impl ScaleRecord {
    pub const IDENTITY: Self = Self { amplitude: 1.0, power: 1.0 };
}

/// Rescale so the user noise power is 1.
pub fn normalize(ch: &ChannelSet) -> (ChannelSet, ScaleRecord) {
    if ch.noise_user == 1.0 {
        return (ch.clone(), ScaleRecord::IDENTITY);
    }
    let power = 1.0 / ch.noise_user;
    let amplitude = power.sqrt();
    let h = ch.bs_irs.scale(amplitude);
    let out = ChannelSet::new(
        h,
        ch.irs_user.clone(),
        ch.irs_eve.clone(),
        1.0,
        ch.noise_eve * power,
    )
    .expect("rescaling preserves validity");
    (out, ScaleRecord { amplitude, power })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gain_reference_distance() {
        let p = PathLossParams::default();
        let g = path_loss_gain(1.0, LinkClass::BsIrs, &p).unwrap();
        assert!((g - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn gain_hundred_meters() {
        // 30 + 22 * log10(100) = 74 dB by hand.
        let p = PathLossParams::default();
        let g = path_loss_gain(100.0, LinkClass::BsIrs, &p).unwrap();
        assert!((g / 10f64.powf(-7.4) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gain_strictly_decreasing() {
        let p = PathLossParams::default();
        for class in [LinkClass::BsIrs, LinkClass::IrsUser, LinkClass::IrsEve] {
            assert!(path_loss_gain(200.0, class, &p).unwrap() > path_loss_gain(250.0, class, &p).unwrap());
        }
    }

    #[test]
    fn gain_rejects_nonpositive_distance() {
        let p = PathLossParams::default();
        assert!(matches!(path_loss_gain(0.0, LinkClass::IrsUser, &p), Err(Error::InvalidArgument(_))));
        assert!(matches!(path_loss_gain(-3.0, LinkClass::IrsUser, &p), Err(Error::InvalidArgument(_))));
        assert!(path_loss_gain(f64::NAN, LinkClass::IrsUser, &p).is_err());
    }

    #[test]
    fn table_defaults_validate() {
        let cfg = ScenarioConfig::default();
        cfg.validate().unwrap();
        assert!((cfg.noise_user - 1e-14).abs() < 1e-28);
        assert!((cfg.p_max - 10.0).abs() < 1e-12);
        assert_eq!(cfg.manifold_tol, 1e-3);
        assert_eq!(cfg.outer_tol, 1e-3);
    }

    #[test]
    fn config_rejects_bad_values() {
        let bad = [
            ScenarioConfig { num_bs_antennas: 1, ..Default::default() },
            ScenarioConfig { num_users: 0, ..Default::default() },
            ScenarioConfig { p_max: 0.0, ..Default::default() },
            ScenarioConfig { noise_eve: -1.0, ..Default::default() },
            ScenarioConfig { r_re: 400.0, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn config_json_partial_document_uses_defaults() {
        let cfg = ScenarioConfig::from_json_str(r#"{"num_users": 2, "rng_seed": 7}"#).unwrap();
        assert_eq!(cfg.num_users, 2);
        assert_eq!(cfg.num_irs_elements, 6);
        assert!(ScenarioConfig::from_json_str(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn eavesdropper_satisfies_both_distances() {
        let cfg = ScenarioConfig { r_be: 120.0, r_re: 100.0, ..Default::default() };
        let geo = draw_geometry(&cfg).unwrap();
        let [x, y] = geo.eavesdropper;
        assert!((x.hypot(y) - 120.0).abs() < 1e-9);
        assert!(((x - 50.0).hypot(y) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn users_inside_sector() {
        let cfg = ScenarioConfig { num_users: 200, ..Default::default() };
        let geo = draw_geometry(&cfg).unwrap();
        for p in &geo.users {
            let r = p[0].hypot(p[1]);
            assert!((20.0 - 1e-9..=500.0 + 1e-9).contains(&r));
            assert!(p[1].atan2(p[0]).abs() <= 60f64.to_radians() + 1e-12);
        }
    }

    #[test]
    fn deterministic_generation() {
        let cfg = ScenarioConfig { rng_seed: 42, ..Default::default() };
        let a = generate_scenario(&cfg).unwrap();
        let b = generate_scenario(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = generate_scenario(&ScenarioConfig { rng_seed: 43, ..cfg }).unwrap();
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn cascade_identity() {
        let cfg = ScenarioConfig { rng_seed: 5, ..Default::default() };
        let ch = generate_scenario(&cfg).unwrap();
        for k in 0..ch.num_users() {
            let gk = ch.user_cascade(k);
            for m in 0..ch.num_elements() {
                for n in 0..ch.num_antennas() {
                    let expect = ch.irs_user(k)[m].conj() * ch.bs_irs()[(m, n)];
                    assert!((gk[(m, n)] - expect).norm() <= 1e-15 * expect.norm());
                }
            }
        }
    }

    #[test]
    fn bs_irs_variance_matches_path_loss() {
        // Monte-Carlo moment estimate over 10^4 draws.
        let base = ScenarioConfig { num_users: 1, num_bs_antennas: 2, num_irs_elements: 1, ..Default::default() };
        let expected = base.path_loss_gain(base.bs_irs_distance, LinkClass::BsIrs).unwrap();
        let mut acc = 0.0;
        let draws = 10_000;
        for seed in 0..draws {
            let ch = generate_scenario(&ScenarioConfig { rng_seed: seed, ..base.clone() }).unwrap();
            acc += ch.bs_irs()[(0, 0)].norm_sqr();
        }
        let empirical = acc / draws as f64;
        assert!((empirical / expected - 1.0).abs() < 0.05, "{empirical} vs {expected}");
    }

    #[test]
    fn fixture_round_trip() {
        let ch = generate_scenario(&ScenarioConfig { rng_seed: 9, num_users: 2, ..Default::default() }).unwrap();
        let back = ChannelSet::from_json_str(&ch.to_json_string()).unwrap();
        assert_eq!(ch, back);
    }

    #[test]
    fn fixture_dimension_mismatch_rejected() {
        let ch = generate_scenario(&ScenarioConfig { rng_seed: 9, ..Default::default() }).unwrap();
        let mut fx = ch.to_fixture();
        fx.irs_eve.pop();
        assert!(fx.clone().into_channel_set().is_err());
        let mut fx = ch.to_fixture();
        fx.num_users = 5;
        assert!(fx.into_channel_set().is_err());
    }

    #[test]
    fn normalize_identity_when_unit_noise() {
        let ch = generate_scenario(&ScenarioConfig { rng_seed: 1, noise_user: 1.0, noise_eve: 2.0, ..Default::default() })
            .unwrap();
        let (out, scale) = normalize(&ch);
        assert_eq!(out, ch);
        assert_eq!(scale, ScaleRecord::IDENTITY);
    }

    #[test]
    fn dbm_conversions() {
        assert!((dbm_to_watts(40.0) - 10.0).abs() < 1e-12);
        assert!((dbm_to_watts(-110.0) - 1e-14).abs() < 1e-28);
        assert!((watts_to_dbm(1e-3)).abs() < 1e-12);
    }
}
