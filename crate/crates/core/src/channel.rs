//! Scalar link-budget physics in the dB domain.
//!
//! Units: path loss takes the carrier in GHz (close-in model with a 1 m
//! free-space intercept of `32.4 + 20 log10(fc)`), the fitted ITU-R foliage
//! model takes it in MHz. Rain uses the power-law specific attenuation
//! `k * R^alpha` dB/km with coefficients from an embedded table.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::Deserialize;

use crate::error::{Error, Result};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `10 log10(x)`; zero maps to negative infinity.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarrierConfig {
    pub frequency_ghz: f64,
    pub bandwidth_hz: f64,
}

impl CarrierConfig {
    pub fn new(frequency_ghz: f64, bandwidth_hz: f64) -> Result<Self> {
        if !(frequency_ghz.is_finite() && frequency_ghz > 0.0) {
            return Err(Error::invalid("carrier.frequency_ghz", format!("must be > 0, got {frequency_ghz}")));
        }
        if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
            return Err(Error::invalid("carrier.bandwidth_hz", format!("must be > 0, got {bandwidth_hz}")));
        }
        Ok(CarrierConfig {
            frequency_ghz,
            bandwidth_hz,
        })
    }

    /// Whether the carrier lies where the fitted foliage model was calibrated.
    pub fn in_foliage_model_range(&self) -> bool {
        (10.0..=40.0).contains(&self.frequency_ghz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossConfig {
    pub alpha_los: f64,
    pub alpha_nlos: f64,
}

impl PathLossConfig {
    pub fn new(alpha_los: f64, alpha_nlos: f64) -> Result<Self> {
        if !(alpha_los.is_finite() && alpha_los >= 1.0) {
            return Err(Error::invalid("path_loss.alpha_los", format!("must be >= 1, got {alpha_los}")));
        }
        if !(alpha_nlos.is_finite() && alpha_nlos >= alpha_los) {
            return Err(Error::invalid(
                "path_loss.alpha_nlos",
                format!("must be >= alpha_los ({alpha_los}), got {alpha_nlos}"),
            ));
        }
        Ok(PathLossConfig { alpha_los, alpha_nlos })
    }

    pub fn exponent(&self, los: bool) -> f64 {
        if los {
            self.alpha_los
        } else {
            self.alpha_nlos
        }
    }
}

/// Sectored (flat-top) antenna pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaPattern {
    pub main_gain_db: f64,
    pub side_gain_db: f64,
    /// Half-power beamwidth in radians.
    pub hpbw: f64,
}

impl AntennaPattern {
    pub fn new(main_gain_db: f64, side_gain_db: f64, hpbw: f64) -> Result<Self> {
        if !(main_gain_db.is_finite() && side_gain_db.is_finite()) {
            return Err(Error::invalid("antenna", "gains must be finite"));
        }
        if main_gain_db <= side_gain_db {
            return Err(Error::invalid(
                "antenna.main_gain_db",
                format!("main lobe gain {main_gain_db} dBi must exceed side lobe gain {side_gain_db} dBi"),
            ));
        }
        if !(hpbw > 0.0 && hpbw < 2.0 * PI) {
            return Err(Error::invalid("antenna.hpbw", format!("must lie in (0, 2pi), got {hpbw}")));
        }
        Ok(AntennaPattern {
            main_gain_db,
            side_gain_db,
            hpbw,
        })
    }

    /// Linear-scale gain integrated over the full circle, divided by `2 pi`.
    pub fn mean_linear_gain(&self) -> f64 {
        (self.hpbw * db_to_linear(self.main_gain_db) + (2.0 * PI - self.hpbw) * db_to_linear(self.side_gain_db))
            / (2.0 * PI)
    }
}

/// Wraps an angle to `(-pi, pi]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Gain at angular offset `theta` from boresight; the main-lobe edge is inclusive.
pub fn antenna_gain_db(theta: f64, pattern: &AntennaPattern) -> f64 {
    if normalize_angle(theta).abs() <= pattern.hpbw / 2.0 {
        pattern.main_gain_db
    } else {
        pattern.side_gain_db
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss {
    pub db: f64,
    /// The distance was below the 1 m close-in reference and was clamped.
    pub clamped: bool,
}

/// Close-in path loss `32.4 + 10 alpha log10(d) + 20 log10(fc)`, `fc` in GHz.
pub fn path_loss_db(distance: f64, frequency_ghz: f64, alpha: f64) -> PathLoss {
    let clamped = distance < 1.0;
    let d = distance.max(1.0);
    PathLoss {
        db: 32.4 + 10.0 * alpha * d.log10() + 20.0 * frequency_ghz.log10(),
        clamped,
    }
}

const IN_LEAF: (f64, f64, f64) = (0.39, 0.39, 0.25);
const OUT_OF_LEAF: (f64, f64, f64) = (0.37, 0.18, 0.59);

fn fitted_foliage_branch(depth: f64, frequency_mhz: f64, (scale, f_exp, d_exp): (f64, f64, f64)) -> f64 {
    if depth <= 0.0 {
        0.0
    } else {
        scale * frequency_mhz.powf(f_exp) * depth.powf(d_exp)
    }
}

/// Fitted ITU-R vegetation loss summed over the in-leaf and out-of-leaf depths.
pub fn foliage_loss_db(in_leaf_depth: f64, out_of_leaf_depth: f64, frequency_ghz: f64) -> f64 {
    let f_mhz = frequency_ghz * 1e3;
    fitted_foliage_branch(in_leaf_depth, f_mhz, IN_LEAF) + fitted_foliage_branch(out_of_leaf_depth, f_mhz, OUT_OF_LEAF)
}

/// Power-law rain coefficients: specific attenuation `k * rate^alpha` dB/km.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct RainConfig {
    pub k: f64,
    pub alpha: f64,
}

impl RainConfig {
    pub fn new(k: f64, alpha: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::invalid("rain.k", format!("must be > 0, got {k}")));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid("rain.alpha", format!("must be > 0, got {alpha}")));
        }
        Ok(RainConfig { k, alpha })
    }

    pub fn specific_attenuation_db_per_km(&self, rate_mm_per_hr: f64) -> f64 {
        if rate_mm_per_hr <= 0.0 {
            0.0
        } else {
            self.k * rate_mm_per_hr.powf(self.alpha)
        }
    }
}

pub fn rain_loss_db(rate_mm_per_hr: f64, distance: f64, rain: &RainConfig) -> f64 {
    rain.specific_attenuation_db_per_km(rate_mm_per_hr) * distance / 1000.0
}

#[derive(Debug, Deserialize)]
struct RainTableFile {
    entry: Vec<RainTableEntry>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
struct RainTableEntry {
    frequency_ghz: f64,
    k: f64,
    alpha: f64,
}

/// Frequency-keyed rain coefficient table.
#[derive(Debug, Clone)]
pub struct RainTable {
    entries: Vec<RainTableEntry>,
}

static EMBEDDED_RAIN_TABLE: &str = include_str!("../data/rain_coefficients.toml");

impl RainTable {
    pub fn parse(text: &str) -> Result<Self> {
        let file: RainTableFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("rain coefficient table: {e}")))?;
        let mut entries = file.entry;
        if entries.is_empty() {
            return Err(Error::Config("rain coefficient table is empty".into()));
        }
        entries.sort_by(|a, b| a.frequency_ghz.total_cmp(&b.frequency_ghz));
        for e in &entries {
            RainConfig::new(e.k, e.alpha)?;
        }
        if entries.windows(2).any(|w| w[0].frequency_ghz == w[1].frequency_ghz) {
            return Err(Error::Config("rain coefficient table has duplicate frequencies".into()));
        }
        Ok(RainTable { entries })
    }

    /// The table shipped with the crate (10-40 GHz, horizontal polarization).
    pub fn embedded() -> &'static RainTable {
        static TABLE: OnceLock<RainTable> = OnceLock::new();
        TABLE.get_or_init(|| RainTable::parse(EMBEDDED_RAIN_TABLE).expect("embedded rain table is valid"))
    }

    /// Coefficients at `frequency_ghz`: exact on table rows, otherwise log-log
    /// interpolation for `k` and log-frequency interpolation for `alpha`.
    pub fn lookup(&self, frequency_ghz: f64) -> Result<RainConfig> {
        let first = self.entries[0];
        let last = self.entries[self.entries.len() - 1];
        if !(frequency_ghz >= first.frequency_ghz && frequency_ghz <= last.frequency_ghz) {
            return Err(Error::invalid(
                "carrier.frequency_ghz",
                format!(
                    "{frequency_ghz} GHz is outside the rain table range [{}, {}] GHz; set [rain] k and alpha explicitly",
                    first.frequency_ghz, last.frequency_ghz
                ),
            ));
        }
        let idx = self.entries.partition_point(|e| e.frequency_ghz < frequency_ghz);
        let hi = self.entries[idx];
        if hi.frequency_ghz == frequency_ghz {
            return Ok(RainConfig { k: hi.k, alpha: hi.alpha });
        }
        let lo = self.entries[idx - 1];
        let t = (frequency_ghz.ln() - lo.frequency_ghz.ln()) / (hi.frequency_ghz.ln() - lo.frequency_ghz.ln());
        Ok(RainConfig {
            k: (lo.k.ln() + t * (hi.k.ln() - lo.k.ln())).exp(),
            alpha: lo.alpha + t * (hi.alpha - lo.alpha),
        })
    }
}

/// Rayleigh power gain `|h|^2`, exponential with unit mean.
pub fn sample_fading_power<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

/// `p_tx + gains - losses + 10 log10(fading)`. Zero fading yields negative infinity.
pub fn received_power_dbm(p_tx_dbm: f64, gains_db: f64, losses_db: f64, fading_power: f64) -> f64 {
    p_tx_dbm + gains_db - losses_db + linear_to_db(fading_power)
}

/// Everything that varies per link besides the carrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub carrier: CarrierConfig,
    pub path_loss: PathLossConfig,
    pub rain: RainConfig,
    pub rain_rate_mm_per_hr: f64,
    pub noise_figure_db: f64,
}

/// One link's budget with every term kept for inspection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub p_tx_dbm: f64,
    pub distance: f64,
    pub los: bool,
    pub tx_gain_db: f64,
    pub rx_gain_db: f64,
    pub path_loss_db: f64,
    pub path_loss_clamped: bool,
    pub foliage_in_leaf_db: f64,
    pub foliage_out_of_leaf_db: f64,
    pub rain_db: f64,
    pub fading_power: f64,
    pub p_rx_dbm: f64,
}

impl LinkBudget {
    /// Builds the budget of a link of length `distance` crossing the given vegetation.
    pub fn compose(
        channel: &ChannelConfig,
        p_tx_dbm: f64,
        distance: f64,
        depth: crate::geometry::VegetationDepth,
        tx_gain_db: f64,
        rx_gain_db: f64,
        fading_power: f64,
    ) -> Self {
        let fc = channel.carrier.frequency_ghz;
        let los = depth.total() == 0.0;
        let pl = path_loss_db(distance, fc, channel.path_loss.exponent(los));
        let foliage_in_leaf_db = foliage_loss_db(depth.in_leaf, 0.0, fc);
        let foliage_out_of_leaf_db = foliage_loss_db(0.0, depth.out_of_leaf, fc);
        let rain_db = rain_loss_db(channel.rain_rate_mm_per_hr, distance, &channel.rain);
        let mut budget = LinkBudget {
            p_tx_dbm,
            distance,
            los,
            tx_gain_db,
            rx_gain_db,
            path_loss_db: pl.db,
            path_loss_clamped: pl.clamped,
            foliage_in_leaf_db,
            foliage_out_of_leaf_db,
            rain_db,
            fading_power,
            p_rx_dbm: 0.0,
        };
        budget.p_rx_dbm = budget.recompute_p_rx_dbm();
        budget
    }

    pub fn gains_db(&self) -> f64 {
        self.tx_gain_db + self.rx_gain_db
    }

    pub fn losses_db(&self) -> f64 {
        self.path_loss_db + self.foliage_in_leaf_db + self.foliage_out_of_leaf_db + self.rain_db
    }

    /// Large-scale gain (antennas minus losses), excluding transmit power and fading.
    pub fn large_scale_gain_db(&self) -> f64 {
        self.gains_db() - self.losses_db()
    }

    pub fn recompute_p_rx_dbm(&self) -> f64 {
        received_power_dbm(self.p_tx_dbm, self.gains_db(), self.losses_db(), self.fading_power)
    }

    pub fn p_rx_mw(&self) -> f64 {
        db_to_linear(self.p_rx_dbm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn path_loss_close_in_values() {
        // 32.4 + 20 log10(28) = 61.3431...
        let intercept = 32.4 + 20.0 * 28f64.log10();
        assert_relative_eq!(path_loss_db(1.0, 28.0, 2.0).db, intercept, max_relative = 1e-12);
        assert_relative_eq!(intercept, 61.34, epsilon = 0.005);
        assert_relative_eq!(path_loss_db(100.0, 28.0, 2.0).db, intercept + 40.0, max_relative = 1e-12);
        let diff = path_loss_db(100.0, 38.0, 2.0).db - path_loss_db(100.0, 28.0, 2.0).db;
        assert_relative_eq!(diff, 20.0 * (38.0f64 / 28.0).log10(), max_relative = 1e-12);
        assert_relative_eq!(diff, 2.65, epsilon = 0.01);
    }

    #[test]
    fn short_distances_clamp_to_reference() {
        let pl = path_loss_db(0.2, 28.0, 2.0);
        assert!(pl.clamped);
        assert_eq!(pl.db, path_loss_db(1.0, 28.0, 2.0).db);
        assert!(!path_loss_db(1.0, 28.0, 2.0).clamped);
    }

    #[test]
    fn antenna_pattern_lookup() {
        let p = AntennaPattern::new(24.0, -4.0, 30f64.to_radians()).unwrap();
        assert_eq!(antenna_gain_db(0.0, &p), 24.0);
        assert_eq!(antenna_gain_db(PI, &p), -4.0);
        assert_eq!(antenna_gain_db(p.hpbw / 2.0, &p), 24.0);
        assert_eq!(antenna_gain_db(-p.hpbw / 2.0, &p), 24.0);
        assert_eq!(antenna_gain_db(p.hpbw / 2.0 + 1e-9, &p), -4.0);
        // Wrapped angles.
        assert_eq!(antenna_gain_db(2.0 * PI + 0.1, &p), 24.0);
        assert_eq!(antenna_gain_db(-2.0 * PI + PI / 2.0, &p), -4.0);
    }

    #[test]
    fn antenna_pattern_validation() {
        assert!(AntennaPattern::new(10.0, 10.0, 0.5).is_err());
        assert!(AntennaPattern::new(10.0, 0.0, 0.0).is_err());
        assert!(AntennaPattern::new(10.0, 0.0, 2.0 * PI).is_err());
        let p = AntennaPattern::new(10.0, 0.0, PI).unwrap();
        assert_relative_eq!(p.mean_linear_gain(), 5.5, max_relative = 1e-12);
    }

    #[test]
    fn foliage_values_use_mhz() {
        assert_eq!(foliage_loss_db(0.0, 0.0, 28.0), 0.0);
        let in_leaf = foliage_loss_db(100.0, 0.0, 28.0);
        assert_relative_eq!(in_leaf, 0.39 * 28000f64.powf(0.39) * 100f64.powf(0.25), max_relative = 1e-12);
        assert_relative_eq!(in_leaf, 66.9, epsilon = 0.05);
        let out = foliage_loss_db(0.0, 100.0, 28.0);
        assert_relative_eq!(out, 0.37 * 28000f64.powf(0.18) * 100f64.powf(0.59), max_relative = 1e-12);
        assert_relative_eq!(out, 35.4, epsilon = 0.05);
        assert_relative_eq!(foliage_loss_db(100.0, 100.0, 28.0), in_leaf + out, max_relative = 1e-12);
    }

    #[test]
    fn rain_loss_values() {
        let rain = RainConfig::new(0.2, 1.0).unwrap();
        assert_eq!(rain_loss_db(0.0, 1000.0, &rain), 0.0);
        assert_relative_eq!(rain_loss_db(10.0, 1000.0, &rain), 2.0, max_relative = 1e-12);
        assert_relative_eq!(
            rain_loss_db(7.0, 600.0, &rain) * 2.0,
            rain_loss_db(7.0, 1200.0, &rain),
            max_relative = 1e-12
        );
        assert!(RainConfig::new(0.0, 1.0).is_err());
        assert!(RainConfig::new(0.1, -1.0).is_err());
    }

    #[test]
    fn embedded_rain_table_rows() {
        let table = RainTable::embedded();
        let c28 = table.lookup(28.0).unwrap();
        assert_eq!((c28.k, c28.alpha), (0.2051, 0.9679));
        let c38 = table.lookup(38.0).unwrap();
        assert_eq!((c38.k, c38.alpha), (0.4001, 0.8816));
        let mid = table.lookup(28.5).unwrap();
        assert!(mid.k > c28.k && mid.k < table.lookup(29.0).unwrap().k);
        assert!(table.lookup(5.0).is_err());
        assert!(table.lookup(41.0).is_err());
    }

    #[test]
    fn rain_table_rejects_bad_input() {
        assert!(RainTable::parse("entry = []").is_err());
        assert!(RainTable::parse("[[entry]]\nfrequency_ghz = 1.0\nk = -1.0\nalpha = 1.0\n").is_err());
        assert!(RainTable::parse("[[entry]]\nfrequency_ghz = 1.0\nk = 1.0\n").is_err());
    }

    #[test]
    fn fading_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n).map(|_| sample_fading_power(&mut rng)).collect();
        assert!(draws.iter().all(|&h| h >= 0.0));
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn received_power_composition() {
        assert_eq!(received_power_dbm(30.0, 0.0, 0.0, 1.0), 30.0);
        assert_relative_eq!(received_power_dbm(30.0, 20.0, 101.34, 1.0), -51.34, max_relative = 1e-12);
        let diff = received_power_dbm(30.0, 20.0, 101.34, 1.0) - received_power_dbm(30.0, 20.0, 101.34, 0.5);
        assert_relative_eq!(diff, 10.0 * 2f64.log10(), max_relative = 1e-12);
        assert_eq!(received_power_dbm(30.0, 0.0, 0.0, 0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn link_budget_is_self_consistent() {
        let channel = ChannelConfig {
            carrier: CarrierConfig::new(28.0, 400e6).unwrap(),
            path_loss: PathLossConfig::new(2.0, 3.0).unwrap(),
            rain: RainConfig::new(0.2051, 0.9679).unwrap(),
            rain_rate_mm_per_hr: 5.0,
            noise_figure_db: 7.0,
        };
        let depth = crate::geometry::VegetationDepth {
            in_leaf: 3.0,
            out_of_leaf: 4.0,
        };
        let b = LinkBudget::compose(&channel, 40.0, 250.0, depth, 24.0, 24.0, 0.7);
        assert!(!b.los);
        assert_relative_eq!(b.path_loss_db, path_loss_db(250.0, 28.0, 3.0).db, max_relative = 1e-12);
        assert_relative_eq!(b.p_rx_dbm, b.recompute_p_rx_dbm(), max_relative = 1e-12);
        let clear = LinkBudget::compose(&channel, 40.0, 250.0, crate::geometry::VegetationDepth::ZERO, 24.0, 24.0, 0.7);
        assert!(clear.los);
        assert_eq!(clear.foliage_in_leaf_db + clear.foliage_out_of_leaf_db, 0.0);
    }

    proptest! {
        #[test]
        fn path_loss_is_increasing(d in 1.0..5000.0f64, fc in 1.0..100.0f64, alpha in 1.0..5.0f64, step in 0.01..10.0f64) {
            let base = path_loss_db(d, fc, alpha).db;
            prop_assert!(path_loss_db(d + step, fc, alpha).db > base);
            prop_assert!(path_loss_db(d, fc + step, alpha).db > base);
            if d > 1.0 {
                prop_assert!(path_loss_db(d, fc, alpha + step).db > base);
            }
        }

        #[test]
        fn foliage_is_increasing_and_in_leaf_dominates(r in 0.01..200.0f64, step in 0.01..50.0f64, fc in 10.0..40.0f64) {
            prop_assert!(foliage_loss_db(r + step, 0.0, fc) > foliage_loss_db(r, 0.0, fc));
            prop_assert!(foliage_loss_db(0.0, r + step, fc) > foliage_loss_db(0.0, r, fc));
            prop_assert!(foliage_loss_db(r, 0.0, fc) > foliage_loss_db(0.0, r, fc));
        }

        #[test]
        fn received_power_is_monotone(p in -10.0..50.0f64, g in 0.0..60.0f64, l in 0.0..200.0f64, h in 0.01..10.0f64, step in 0.01..10.0f64) {
            let base = received_power_dbm(p, g, l, h);
            prop_assert!(received_power_dbm(p + step, g, l, h) > base);
            prop_assert!(received_power_dbm(p, g + step, l, h) > base);
            prop_assert!(received_power_dbm(p, g, l + step, h) < base);
        }
    }
}
