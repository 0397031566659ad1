//! Seeded Monte Carlo trials, pooled coverage estimation and parameter sweeps.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{sample_fading_power, AntennaPattern, ChannelConfig, RainTable};
use crate::error::{Error, Result};
use crate::geometry::{sample_tree_field, sample_uniform_points, Region, TreeFieldParams, VegetationDepth};
use crate::network::{
    associate_backhaul, associate_ues, compute_rates, ris_gains, Antenna, Association, AssociationRule, BeamPlan,
    Deployment, FadingSource, Foliage, InterferenceLoss, LinkDepths, NetworkConfig, NodeId, PathPolicy, RateReport,
    ResourceSplit, RisGains,
};
use crate::rng::{substream, StreamTag};

/// 97.5% standard normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

/// Backhaul options available to IAB SBSs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    DirectOnly,
    /// Direct or any RIS, whichever is better.
    WithRis,
    /// Backhaul forced through the best NCR; direct if there is none.
    WithNcr,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::DirectOnly, Variant::WithRis, Variant::WithNcr];

    pub fn paths(&self) -> PathPolicy {
        match self {
            Variant::DirectOnly => PathPolicy::DIRECT_ONLY,
            Variant::WithRis => PathPolicy {
                direct: true,
                ris: true,
                ncr: false,
            },
            Variant::WithNcr => PathPolicy {
                direct: false,
                ris: false,
                ncr: true,
            },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Variant::DirectOnly => "direct",
            Variant::WithRis => "ris",
            Variant::WithNcr => "ncr",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Variant::DirectOnly),
            "ris" => Ok(Variant::WithRis),
            "ncr" => Ok(Variant::WithNcr),
            other => Err(Error::Config(format!("unknown variant `{other}` (expected direct, ris or ncr)"))),
        }
    }
}

/// Vegetation model of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum FoliageSpec {
    /// Tree lines resampled every trial; every link is checked geometrically.
    Stochastic(TreeFieldParams),
    /// Every direct donor -> IAB SBS link crosses `total_depth` metres of
    /// vegetation, all of it in-leaf with probability `in_leaf_probability`
    /// (drawn per trial and link) and out-of-leaf otherwise. `overrides`
    /// pins the depth of individual links by node pair.
    Deterministic {
        total_depth: f64,
        in_leaf_probability: f64,
        overrides: LinkDepths,
    },
}

impl FoliageSpec {
    pub fn clear() -> Self {
        FoliageSpec::Deterministic {
            total_depth: 0.0,
            in_leaf_probability: 0.0,
            overrides: LinkDepths::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            FoliageSpec::Stochastic(params) => params.validate(),
            FoliageSpec::Deterministic {
                total_depth,
                in_leaf_probability,
                ..
            } => {
                if !(total_depth.is_finite() && *total_depth >= 0.0) {
                    return Err(Error::invalid("foliage.total_depth", format!("must be >= 0, got {total_depth}")));
                }
                if !(0.0..=1.0).contains(in_leaf_probability) {
                    return Err(Error::invalid(
                        "foliage.in_leaf_probability",
                        format!("must lie in [0, 1], got {in_leaf_probability}"),
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Everything one coverage estimate depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub region: Region,
    /// Base stations, RIS panels and NCRs; UEs are dropped per trial.
    pub infrastructure: Deployment,
    pub ue_count: usize,
    pub channel: ChannelConfig,
    pub psi: f64,
    pub foliage: FoliageSpec,
    pub rate_threshold_bps: f64,
    pub trials: usize,
    pub seed: u64,
    pub variant: Variant,
    pub association: AssociationRule,
    pub ris_tolerance: f64,
    pub ris_max_iterations: usize,
    pub interference_loss: InterferenceLoss,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be >= 1"));
        }
        if !(self.rate_threshold_bps.is_finite() && self.rate_threshold_bps >= 0.0) {
            return Err(Error::invalid(
                "rate_threshold_bps",
                format!("must be >= 0, got {}", self.rate_threshold_bps),
            ));
        }
        if self.infrastructure.base_stations().next().is_none() {
            return Err(Error::Config("scenario has no base station".into()));
        }
        if self.infrastructure.ues().next().is_some() {
            return Err(Error::Config("UEs are dropped per trial and must not be listed as infrastructure".into()));
        }
        if !(self.rain_rate().is_finite() && self.rain_rate() >= 0.0) {
            return Err(Error::invalid("rain_rate", format!("must be >= 0, got {}", self.rain_rate())));
        }
        if !(self.ris_tolerance.is_finite() && self.ris_tolerance >= 0.0) {
            return Err(Error::invalid("ris_tolerance", "must be finite and >= 0"));
        }
        self.split()?;
        self.foliage.validate()
    }

    fn rain_rate(&self) -> f64 {
        self.channel.rain_rate_mm_per_hr
    }

    pub fn split(&self) -> Result<ResourceSplit> {
        ResourceSplit::new(self.psi, self.channel.carrier.bandwidth_hz)
    }

    pub fn network_config(&self) -> Result<NetworkConfig> {
        Ok(NetworkConfig {
            channel: self.channel,
            split: self.split()?,
            association: self.association,
            paths: self.variant.paths(),
            ris_tolerance: self.ris_tolerance,
            ris_max_iterations: self.ris_max_iterations,
            interference_loss: self.interference_loss,
        })
    }

    /// RIS gains shared by every trial, available when vegetation on the
    /// relay hops cannot change between trials.
    fn trial_invariant_ris_gains(&self, config: &NetworkConfig) -> Result<Option<RisGains>> {
        if !config.paths.ris {
            return Ok(Some(RisGains::default()));
        }
        match &self.foliage {
            FoliageSpec::Stochastic(_) => Ok(None),
            FoliageSpec::Deterministic { overrides, .. } => Ok(Some(ris_gains(
                &self.infrastructure,
                &Foliage::PerLink(overrides.clone()),
                config,
            )?)),
        }
    }
}

/// Rayleigh fading drawn from a per-(trial, link) substream.
#[derive(Debug, Clone, Copy)]
pub struct SeededFading {
    pub seed: u64,
    pub trial: u64,
}

impl FadingSource for SeededFading {
    fn power(&self, tx: NodeId, rx: NodeId) -> f64 {
        let mut rng = substream(self.seed, self.trial, StreamTag::Fading, &[tx.0 as u64, rx.0 as u64]);
        sample_fading_power(&mut rng)
    }
}

fn trial_foliage(scenario: &Scenario, deployment: &Deployment, trial: u64) -> Result<Foliage> {
    match &scenario.foliage {
        FoliageSpec::Stochastic(params) => {
            let mut rng = substream(scenario.seed, trial, StreamTag::TreeField, &[]);
            Ok(Foliage::Field(sample_tree_field(&scenario.region, params, &mut rng)?))
        }
        FoliageSpec::Deterministic {
            total_depth,
            in_leaf_probability,
            overrides,
        } => {
            let mut depths = LinkDepths::new();
            if *total_depth > 0.0 {
                for donor in deployment.donors() {
                    for sbs in deployment.iab_sbss() {
                        let ids = [donor.id.0 as u64, sbs.id.0 as u64];
                        let u: f64 = substream(scenario.seed, trial, StreamTag::Foliage, &ids).random();
                        let depth = if u < *in_leaf_probability {
                            VegetationDepth {
                                in_leaf: *total_depth,
                                out_of_leaf: 0.0,
                            }
                        } else {
                            VegetationDepth {
                                in_leaf: 0.0,
                                out_of_leaf: *total_depth,
                            }
                        };
                        depths.set(donor.id, sbs.id, depth);
                    }
                }
            }
            for ((a, b), pinned) in overrides.iter() {
                depths.set(a, b, pinned);
            }
            Ok(Foliage::PerLink(depths))
        }
    }
}

/// Drops UEs for trial `trial_index` with each UE on its own substream, so
/// the first `n` positions do not depend on the total UE count.
fn drop_ues(scenario: &Scenario, trial: u64) -> Result<Deployment> {
    let points: Vec<_> = (0..scenario.ue_count)
        .map(|i| {
            let mut rng = substream(scenario.seed, trial, StreamTag::UePosition, &[i as u64]);
            sample_uniform_points(&scenario.region, 1, &mut rng)[0]
        })
        .collect();
    scenario.infrastructure.with_ues(&points)
}

fn run_trial_with(scenario: &Scenario, config: &NetworkConfig, trial_index: usize, cached: Option<&RisGains>) -> Result<RateReport> {
    let trial = trial_index as u64;
    let deployment = drop_ues(scenario, trial)?;
    let foliage = trial_foliage(scenario, &deployment, trial)?;
    let fading = SeededFading {
        seed: scenario.seed,
        trial,
    };
    let computed;
    let gains = match cached {
        Some(g) => g,
        None => {
            computed = ris_gains(&deployment, &foliage, config)?;
            &computed
        }
    };
    let association = Association {
        ue_to_bs: associate_ues(&deployment, &foliage, config, &fading),
        sbs_backhaul: associate_backhaul(&deployment, &foliage, config, gains)?,
    };
    let beams = BeamPlan::from_choices(&association, |tx, n| {
        substream(scenario.seed, trial, StreamTag::Beam, &[tx.0 as u64]).random_range(0..n)
    });
    compute_rates(&deployment, &association, &foliage, config, &beams, &fading, gains)
}

/// One realization: drops UEs, samples vegetation and fading from substreams
/// of `(seed, trial_index)`, then associates and computes every rate.
pub fn run_trial(scenario: &Scenario, trial_index: usize) -> Result<RateReport> {
    scenario.validate()?;
    let config = scenario.network_config()?;
    let cached = scenario.trial_invariant_ris_gains(&config)?;
    run_trial_with(scenario, &config, trial_index, cached.as_ref())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageEstimate {
    pub rho_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: usize,
    pub ue_samples: usize,
    pub mean_rate_bps: f64,
}

/// 95% Wilson score interval for `successes` out of `n`; `(0, 1)` when `n == 0`.
pub fn wilson_interval(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((centre - half).max(0.0).min(p), (centre + half).min(1.0).max(p))
}

impl CoverageEstimate {
    pub fn from_counts(covered: usize, samples: usize, trials: usize, rate_sum: f64) -> Self {
        let (ci_low, ci_high) = wilson_interval(covered, samples);
        let (rho_hat, mean_rate_bps) = if samples == 0 {
            (0.0, 0.0)
        } else {
            (covered as f64 / samples as f64, rate_sum / samples as f64)
        };
        CoverageEstimate {
            rho_hat,
            ci_low,
            ci_high,
            trials,
            ue_samples: samples,
            mean_rate_bps,
        }
    }

    pub fn overlaps(&self, other: &CoverageEstimate) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

/// Pooled coverage over `trials` independent rate samplers. Trials run in
/// parallel; their results are reduced in trial order.
pub fn estimate_with<F>(trials: usize, threshold_bps: f64, sampler: F) -> Result<CoverageEstimate>
where
    F: Fn(usize) -> Result<Vec<f64>> + Sync,
{
    let per_trial: Vec<Vec<f64>> = (0..trials).into_par_iter().map(&sampler).collect::<Result<_>>()?;
    let mut covered = 0;
    let mut samples = 0;
    let mut rate_sum = 0.0;
    for rates in &per_trial {
        for &r in rates {
            samples += 1;
            rate_sum += r;
            if r >= threshold_bps {
                covered += 1;
            }
        }
    }
    Ok(CoverageEstimate::from_counts(covered, samples, trials, rate_sum))
}

/// `Pr(R_u >= beta)` pooled over every UE of every trial.
pub fn estimate_coverage(scenario: &Scenario) -> Result<CoverageEstimate> {
    scenario.validate()?;
    let config = scenario.network_config()?;
    let cached = scenario.trial_invariant_ris_gains(&config)?;
    estimate_with(scenario.trials, scenario.rate_threshold_bps, |t| {
        let report = run_trial_with(scenario, &config, t, cached.as_ref())?;
        Ok(report.ues.iter().map(|u| u.rate_bps).collect())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    TreeDepth,
    UeCount,
    RainRate,
    MainLobeGain,
    CarrierFrequency,
    Psi,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 6] = [
        SweepAxis::TreeDepth,
        SweepAxis::UeCount,
        SweepAxis::RainRate,
        SweepAxis::MainLobeGain,
        SweepAxis::CarrierFrequency,
        SweepAxis::Psi,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::TreeDepth => "tree_depth",
            SweepAxis::UeCount => "ue_count",
            SweepAxis::RainRate => "rain_rate",
            SweepAxis::MainLobeGain => "main_lobe_gain",
            SweepAxis::CarrierFrequency => "carrier_frequency",
            SweepAxis::Psi => "psi",
        }
    }

    /// Copy of `base` with this axis set to `value`.
    pub fn apply(&self, base: &Scenario, value: f64) -> Result<Scenario> {
        if !value.is_finite() {
            return Err(Error::Config(format!("sweep value {value} for `{}` is not finite", self.name())));
        }
        let mut s = base.clone();
        match self {
            SweepAxis::TreeDepth => match &mut s.foliage {
                FoliageSpec::Deterministic { total_depth, .. } => *total_depth = value,
                FoliageSpec::Stochastic(_) => {
                    return Err(Error::Config(
                        "the tree_depth axis needs deterministic foliage; stochastic tree fields have no fixed depth"
                            .into(),
                    ))
                }
            },
            SweepAxis::UeCount => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(Error::Config(format!("ue_count must be a non-negative integer, got {value}")));
                }
                s.ue_count = value as usize;
            }
            SweepAxis::RainRate => s.channel.rain_rate_mm_per_hr = value,
            SweepAxis::MainLobeGain => {
                let mut nodes = s.infrastructure.nodes().to_vec();
                for node in &mut nodes {
                    if let Antenna::Sectored(p) = node.antenna {
                        node.antenna = Antenna::Sectored(AntennaPattern::new(value, p.side_gain_db, p.hpbw)?);
                    }
                }
                s.infrastructure = Deployment::new(nodes)?;
            }
            SweepAxis::CarrierFrequency => {
                s.channel.carrier.frequency_ghz = value;
                s.channel.rain = RainTable::embedded().lookup(value)?;
                s.channel.carrier = crate::channel::CarrierConfig::new(value, s.channel.carrier.bandwidth_hz)?;
            }
            SweepAxis::Psi => s.psi = value,
        }
        s.validate()?;
        Ok(s)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepAxis::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| {
            let names: Vec<_> = SweepAxis::ALL.iter().map(|a| a.name()).collect();
            Error::Config(format!("unknown sweep axis `{s}` (expected one of {})", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub variant: Variant,
    pub estimate: CoverageEstimate,
}

/// One estimate per `(value, variant)`, values outermost. Every point reuses
/// the base seed, so all rows share their per-trial draws.
pub fn run_sweep(base: &Scenario, axis: SweepAxis, values: &[f64], variants: &[Variant]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    if variants.is_empty() {
        return Err(Error::Config("sweep needs at least one variant".into()));
    }
    let mut rows = Vec::with_capacity(values.len() * variants.len());
    for &value in values {
        let point = axis.apply(base, value)?;
        for &variant in variants {
            let scenario = Scenario {
                variant,
                ..point.clone()
            };
            rows.push(SweepRow {
                value,
                variant,
                estimate: estimate_coverage(&scenario)?,
            });
        }
    }
    Ok(rows)
}

/// Infrastructure node kinds present in a deployment, for diagnostics.
pub fn describe(deployment: &Deployment) -> String {
    let mut counts: Vec<(&str, usize)> = Vec::new();
    for node in deployment.nodes() {
        let label = node.kind.label();
        match counts.iter_mut().find(|(l, _)| *l == label) {
            Some((_, c)) => *c += 1,
            None => counts.push((label, 1)),
        }
    }
    counts.iter().map(|(l, c)| format!("{c} {l}")).collect::<Vec<_>>().join(", ")
}
