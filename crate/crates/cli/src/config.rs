//! Scenario files: TOML schema, defaults, validation and conversion to a
//! [`Scenario`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use iabsim::channel::{AntennaPattern, CarrierConfig, ChannelConfig, PathLossConfig, RainConfig, RainTable};
use iabsim::geometry::{Orientation, Point, Region, TreeFieldParams, VegetationDepth};
use iabsim::montecarlo::{FoliageSpec, Scenario, SweepAxis, Variant};
use iabsim::network::{AssociationRule, DeploymentBuilder, InterferenceLoss, LinkDepths};
use iabsim::ris::{NcrConfig, RisPanel};

use crate::CliError;

/// Marker line introducing the resolved configuration in a result file.
pub const EMBEDDED_CONFIG_MARKER: &str = "# config:";

fn default_seed() -> u64 {
    1
}
fn default_trials() -> usize {
    1000
}
fn default_threshold() -> f64 {
    25.0
}
fn default_ue_count() -> usize {
    50
}
fn default_psi() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssociationMode {
    #[default]
    Average,
    Instantaneous,
}

/// Loss terms carried by interfering links.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterferenceLossMode {
    #[default]
    PathOnly,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantName {
    #[default]
    Direct,
    Ris,
    Ncr,
}

impl From<VariantName> for Variant {
    fn from(v: VariantName) -> Self {
        match v {
            VariantName::Direct => Variant::DirectOnly,
            VariantName::Ris => Variant::WithRis,
            VariantName::Ncr => Variant::WithNcr,
        }
    }
}

/// Top-level scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_threshold")]
    pub rate_threshold_mbps: f64,
    #[serde(default = "default_ue_count")]
    pub ue_count: usize,
    #[serde(default = "default_psi")]
    pub psi: f64,
    #[serde(default)]
    pub association: AssociationMode,
    /// Variant evaluated when no sweep lists its own.
    #[serde(default)]
    pub variant: VariantName,
    pub region: RegionDoc,
    #[serde(default)]
    pub channel: ChannelDoc,
    #[serde(default)]
    pub antenna: AntennaDoc,
    #[serde(default)]
    pub foliage: FoliageDoc,
    #[serde(default)]
    pub optimizer: OptimizerDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputDoc>,
    #[serde(rename = "node")]
    pub nodes: Vec<NodeDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionDoc {
    #[serde(default)]
    pub x: f64,
    #[serde(default)]
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelDoc {
    pub carrier_ghz: f64,
    pub bandwidth_mhz: f64,
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    pub noise_figure_db: f64,
    pub rain_rate_mm_per_hr: f64,
    /// Explicit rain coefficients; looked up from the carrier when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rain_k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rain_alpha: Option<f64>,
    /// Whether foliage and rain also attenuate interfering links.
    pub interference_loss: InterferenceLossMode,
}

impl Default for ChannelDoc {
    fn default() -> Self {
        ChannelDoc {
            carrier_ghz: 28.0,
            bandwidth_mhz: 1000.0,
            alpha_los: 2.0,
            alpha_nlos: 2.5,
            noise_figure_db: 7.0,
            rain_rate_mm_per_hr: 0.0,
            rain_k: None,
            rain_alpha: None,
            interference_loss: InterferenceLossMode::PathOnly,
        }
    }
}

/// Sectored pattern shared by every base station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AntennaDoc {
    pub main_lobe_gain_db: f64,
    pub side_lobe_gain_db: f64,
    pub hpbw_deg: f64,
}

impl Default for AntennaDoc {
    fn default() -> Self {
        AntennaDoc {
            main_lobe_gain_db: 20.0,
            side_lobe_gain_db: -10.0,
            hpbw_deg: 30.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoliageMode {
    #[default]
    Deterministic,
    Stochastic,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoliageDoc {
    #[serde(default)]
    pub mode: FoliageMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_depth_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_leaf_probability: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_per_km2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_length_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_width_m: Option<f64>,
    /// Fixed tree-line orientation; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation_deg: Option<f64>,
    #[serde(default, rename = "link", skip_serializing_if = "Vec::is_empty")]
    pub links: Vec<LinkDepthDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDepthDoc {
    pub a: String,
    pub b: String,
    #[serde(default)]
    pub in_leaf_m: f64,
    #[serde(default)]
    pub out_of_leaf_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerDoc {
    pub ris_tolerance: f64,
    pub ris_max_iterations: usize,
}

impl Default for OptimizerDoc {
    fn default() -> Self {
        OptimizerDoc {
            ris_tolerance: 1e-9,
            ris_max_iterations: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepDoc {
    pub axis: String,
    pub values: Vec<f64>,
    #[serde(default = "all_variants")]
    pub variants: Vec<VariantName>,
}

fn all_variants() -> Vec<VariantName> {
    vec![VariantName::Direct, VariantName::Ris, VariantName::Ncr]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputDoc {
    pub path: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKindDoc {
    Mbs,
    SbsIab,
    SbsNonIab,
    Ris,
    Ncr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    pub name: String,
    pub kind: NodeKindDoc,
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_tx_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elements: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_spacing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amp_gain_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_output_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antenna_gain_db: Option<f64>,
}

/// Command-line values that replace file values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub sweep: Option<String>,
    pub values: Option<Vec<f64>>,
    pub variants: Option<Vec<String>>,
    pub output: Option<String>,
}

impl Overrides {
    /// The overrides as command-line flags, in a fixed order.
    pub fn describe(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(s) = self.seed {
            out.push(format!("--seed {s}"));
        }
        if let Some(t) = self.trials {
            out.push(format!("--trials {t}"));
        }
        if let Some(s) = &self.sweep {
            out.push(format!("--sweep {s}"));
        }
        if let Some(v) = &self.values {
            let v: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            out.push(format!("--values {}", v.join(",")));
        }
        if let Some(v) = &self.variants {
            out.push(format!("--variants {}", v.join(",")));
        }
        if let Some(o) = &self.output {
            out.push(format!("--output {o}"));
        }
        out
    }
}

/// A validated configuration ready to run.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    /// Document with every default filled in.
    pub document: ConfigDocument,
    pub scenario: Scenario,
    pub sweep: Option<(SweepAxis, Vec<f64>)>,
    pub variants: Vec<Variant>,
}

impl LoadedConfig {
    pub fn resolved_toml(&self) -> String {
        toml::to_string(&self.document).expect("resolved configuration serializes")
    }
}

/// 1-based line of the first assignment to `key`, if any.
fn locate(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|line| {
        let t = line.trim_start();
        t.strip_prefix(key)
            .map(|rest| rest.trim_start().starts_with('='))
            .unwrap_or(false)
    })
    .map(|i| i + 1)
}

fn field_error(text: &str, key: &str, reason: impl std::fmt::Display) -> CliError {
    let leaf = key.rsplit('.').next().unwrap_or(key);
    match locate(text, leaf) {
        Some(line) => CliError::Config(format!("line {line}: `{key}` {reason}")),
        None => CliError::Config(format!("`{key}` {reason}")),
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Adds a "did you mean" hint to unknown-field errors.
fn explain_parse_error(text: &str, err: &toml::de::Error) -> CliError {
    let message = err.message().trim().to_string();
    let mut out = match err.span() {
        Some(span) => format!("line {}: {message}", line_of(text, span.start)),
        None => message.clone(),
    };
    if let Some(rest) = message.strip_prefix("unknown field `") {
        if let Some((unknown, tail)) = rest.split_once('`') {
            let expected: Vec<&str> = tail.split('`').skip(1).step_by(2).collect();
            let best = expected
                .iter()
                .map(|cand| (strsim::jaro_winkler(unknown, cand), *cand))
                .max_by(|a, b| a.0.total_cmp(&b.0));
            if let Some((score, cand)) = best {
                if score >= 0.7 {
                    out.push_str(&format!(" (did you mean `{cand}`?)"));
                }
            }
        }
    }
    CliError::Config(out)
}

/// Pulls the resolved configuration back out of a result file.
fn embedded_config(text: &str) -> Option<String> {
    let mut lines = text.lines();
    lines.by_ref().find(|l| l.trim_end() == EMBEDDED_CONFIG_MARKER)?;
    let body: Vec<&str> = lines
        .take_while(|l| l.starts_with('#'))
        .map(|l| l.strip_prefix("# ").or_else(|| l.strip_prefix('#')).unwrap_or(l))
        .collect();
    Some(body.join("\n"))
}

pub fn parse_and_validate(path: &Path, overrides: &Overrides) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        context: format!("cannot read config `{}`", path.display()),
        source,
    })?;
    let text = embedded_config(&text).unwrap_or(text);
    parse_str(&text, overrides)
}

pub fn parse_str(text: &str, overrides: &Overrides) -> Result<LoadedConfig, CliError> {
    let mut doc: ConfigDocument = toml::from_str(text).map_err(|e| explain_parse_error(text, &e))?;
    apply_overrides(&mut doc, overrides)?;
    resolve(text, doc)
}

fn apply_overrides(doc: &mut ConfigDocument, o: &Overrides) -> Result<(), CliError> {
    if let Some(s) = o.seed {
        doc.seed = s;
    }
    if let Some(t) = o.trials {
        doc.trials = t;
    }
    if o.sweep.is_some() || o.values.is_some() || o.variants.is_some() {
        let variants = match &o.variants {
            Some(names) => names
                .iter()
                .map(|n| parse_variant(n))
                .collect::<Result<Vec<_>, _>>()?,
            None => doc.sweep.as_ref().map(|s| s.variants.clone()).unwrap_or_else(all_variants),
        };
        let axis = o.sweep.clone().or_else(|| doc.sweep.as_ref().map(|s| s.axis.clone()));
        let values = o.values.clone().or_else(|| doc.sweep.as_ref().map(|s| s.values.clone()));
        match (axis, values) {
            (Some(axis), Some(values)) => {
                doc.sweep = Some(SweepDoc { axis, values, variants });
            }
            (None, None) if o.variants.is_some() => {
                doc.sweep = None;
                if let [single] = variants.as_slice() {
                    doc.variant = *single;
                } else {
                    return Err(CliError::Config(
                        "--variants with several entries needs a sweep (--sweep and --values)".into(),
                    ));
                }
            }
            (Some(_), None) => return Err(CliError::Config("--sweep needs --values".into())),
            _ => return Err(CliError::Config("--values needs --sweep".into())),
        }
    }
    if let Some(out) = &o.output {
        doc.output = Some(OutputDoc { path: out.clone() });
    }
    Ok(())
}

fn parse_variant(name: &str) -> Result<VariantName, CliError> {
    match name.trim() {
        "direct" => Ok(VariantName::Direct),
        "ris" => Ok(VariantName::Ris),
        "ncr" => Ok(VariantName::Ncr),
        other => Err(CliError::Config(format!(
            "unknown variant `{other}` (expected direct, ris or ncr)"
        ))),
    }
}

fn check(text: &str, ok: bool, key: &str, reason: impl std::fmt::Display) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(field_error(text, key, reason))
    }
}

fn core_error(text: &str, err: iabsim::Error) -> CliError {
    match err {
        iabsim::Error::InvalidParameter { name, reason } => field_error(text, name, reason),
        other => CliError::Config(other.to_string()),
    }
}

/// Fills defaults into `doc`, checks physical ranges and builds the scenario.
fn resolve(text: &str, mut doc: ConfigDocument) -> Result<LoadedConfig, CliError> {
    check(text, doc.trials >= 1, "trials", "must be >= 1")?;
    check(
        text,
        doc.rate_threshold_mbps.is_finite() && doc.rate_threshold_mbps >= 0.0,
        "rate_threshold_mbps",
        format!("must be >= 0, got {}", doc.rate_threshold_mbps),
    )?;
    check(text, (0.0..=1.0).contains(&doc.psi), "psi", format!("must lie in [0, 1], got {}", doc.psi))?;
    check(
        text,
        doc.region.width > 0.0 && doc.region.height > 0.0,
        "region.width",
        "and `region.height` must be > 0",
    )?;

    let ch = &mut doc.channel;
    check(
        text,
        (10.0..=40.0).contains(&ch.carrier_ghz),
        "channel.carrier_ghz",
        format!("must lie in [10, 40] GHz (foliage and rain models), got {}", ch.carrier_ghz),
    )?;
    check(text, ch.bandwidth_mhz > 0.0, "channel.bandwidth_mhz", "must be > 0")?;
    check(
        text,
        ch.rain_rate_mm_per_hr.is_finite() && ch.rain_rate_mm_per_hr >= 0.0,
        "channel.rain_rate_mm_per_hr",
        "must be >= 0",
    )?;
    check(text, ch.noise_figure_db.is_finite(), "channel.noise_figure_db", "must be finite")?;
    let rain = match (ch.rain_k, ch.rain_alpha) {
        (Some(k), Some(alpha)) => RainConfig::new(k, alpha).map_err(|e| core_error(text, e))?,
        (None, None) => RainTable::embedded().lookup(ch.carrier_ghz).map_err(|e| core_error(text, e))?,
        _ => return Err(field_error(text, "channel.rain_k", "and `rain_alpha` must be given together")),
    };
    let channel = ChannelConfig {
        carrier: CarrierConfig::new(ch.carrier_ghz, ch.bandwidth_mhz * 1e6).map_err(|e| core_error(text, e))?,
        path_loss: PathLossConfig::new(ch.alpha_los, ch.alpha_nlos).map_err(|e| core_error(text, e))?,
        rain,
        rain_rate_mm_per_hr: ch.rain_rate_mm_per_hr,
        noise_figure_db: ch.noise_figure_db,
    };

    let a = &doc.antenna;
    check(
        text,
        a.main_lobe_gain_db > a.side_lobe_gain_db,
        "antenna.main_lobe_gain_db",
        "must exceed `side_lobe_gain_db`",
    )?;
    check(
        text,
        a.hpbw_deg > 0.0 && a.hpbw_deg < 360.0,
        "antenna.hpbw_deg",
        format!("must lie in (0, 360), got {}", a.hpbw_deg),
    )?;
    let pattern = AntennaPattern::new(a.main_lobe_gain_db, a.side_lobe_gain_db, a.hpbw_deg.to_radians())
        .map_err(|e| core_error(text, e))?;

    check(text, !doc.nodes.is_empty(), "node", "list is empty; at least one `mbs` is required")?;
    let mut builder = DeploymentBuilder::new();
    for node in &mut doc.nodes {
        resolve_node(text, node)?;
        let p = Point::new(node.x, node.y);
        match node.kind {
            NodeKindDoc::Mbs => {
                builder.donor(&node.name, p, node.p_tx_dbm.unwrap_or_default(), pattern, node.elements.unwrap_or(1));
            }
            NodeKindDoc::SbsIab => {
                builder.iab_sbs(&node.name, p, node.p_tx_dbm.unwrap_or_default(), pattern, node.elements.unwrap_or(1));
            }
            NodeKindDoc::SbsNonIab => {
                builder.non_iab_sbs(&node.name, p, node.p_tx_dbm.unwrap_or_default(), pattern, node.elements.unwrap_or(1));
            }
            NodeKindDoc::Ris => {
                let panel = RisPanel::new(p, node.elements.unwrap_or(1), node.element_spacing.unwrap_or(0.5))
                    .map_err(|e| core_error(text, e))?;
                builder.ris(&node.name, panel);
            }
            NodeKindDoc::Ncr => {
                let cfg = NcrConfig::new(
                    p,
                    node.amp_gain_db.unwrap_or_default(),
                    node.max_output_dbm.unwrap_or_default(),
                    node.antenna_gain_db.unwrap_or_default(),
                )
                .map_err(|e| core_error(text, e))?;
                builder.ncr(&node.name, cfg);
            }
        }
    }
    if !doc.nodes.iter().any(|n| n.kind == NodeKindDoc::Mbs) {
        return Err(field_error(text, "kind", "no node of kind `mbs`; at least one donor is required"));
    }
    let infrastructure = builder.build().map_err(|e| core_error(text, e))?;

    let foliage = resolve_foliage(text, &mut doc.foliage, &infrastructure)?;

    let o = &doc.optimizer;
    check(text, o.ris_tolerance >= 0.0, "optimizer.ris_tolerance", "must be >= 0")?;
    check(text, o.ris_max_iterations >= 1, "optimizer.ris_max_iterations", "must be >= 1")?;

    let scenario = Scenario {
        region: Region::new(Point::new(doc.region.x, doc.region.y), doc.region.width, doc.region.height)
            .map_err(|e| core_error(text, e))?,
        infrastructure,
        ue_count: doc.ue_count,
        channel,
        psi: doc.psi,
        foliage,
        rate_threshold_bps: doc.rate_threshold_mbps * 1e6,
        trials: doc.trials,
        seed: doc.seed,
        variant: doc.variant.into(),
        association: match doc.association {
            AssociationMode::Average => AssociationRule::AveragePower,
            AssociationMode::Instantaneous => AssociationRule::InstantaneousPower,
        },
        ris_tolerance: o.ris_tolerance,
        ris_max_iterations: o.ris_max_iterations,
        interference_loss: match doc.channel.interference_loss {
            InterferenceLossMode::PathOnly => InterferenceLoss::PathOnly,
            InterferenceLossMode::Full => InterferenceLoss::Full,
        },
    };
    scenario.validate().map_err(|e| core_error(text, e))?;

    let (sweep, variants) = match &doc.sweep {
        Some(s) => {
            let axis: SweepAxis = s.axis.parse().map_err(|e: iabsim::Error| field_error(text, "axis", e))?;
            check(text, !s.values.is_empty(), "sweep.values", "must not be empty")?;
            check(text, !s.variants.is_empty(), "sweep.variants", "must not be empty")?;
            for &v in &s.values {
                axis.apply(&scenario, v).map_err(|e| core_error(text, e))?;
            }
            (Some((axis, s.values.clone())), s.variants.iter().map(|&v| v.into()).collect())
        }
        None => (None, vec![doc.variant.into()]),
    };

    Ok(LoadedConfig {
        document: doc,
        scenario,
        sweep,
        variants,
    })
}

fn resolve_node(text: &str, node: &mut NodeDoc) -> Result<(), CliError> {
    let kind = node.kind;
    let forbid = |present: bool, field: &str| -> Result<(), CliError> {
        if present {
            Err(field_error(
                text,
                field,
                format!("is not used by node `{}` of kind `{kind:?}`", node.name),
            ))
        } else {
            Ok(())
        }
    };
    match kind {
        NodeKindDoc::Mbs | NodeKindDoc::SbsIab | NodeKindDoc::SbsNonIab => {
            forbid(node.element_spacing.is_some(), "element_spacing")?;
            forbid(node.amp_gain_db.is_some(), "amp_gain_db")?;
            forbid(node.max_output_dbm.is_some(), "max_output_dbm")?;
            forbid(node.antenna_gain_db.is_some(), "antenna_gain_db")?;
            let (p, n) = if kind == NodeKindDoc::Mbs { (40.0, 16) } else { (30.0, 4) };
            node.p_tx_dbm.get_or_insert(p);
            node.elements.get_or_insert(n);
        }
        NodeKindDoc::Ris => {
            forbid(node.p_tx_dbm.is_some(), "p_tx_dbm")?;
            forbid(node.amp_gain_db.is_some(), "amp_gain_db")?;
            forbid(node.max_output_dbm.is_some(), "max_output_dbm")?;
            forbid(node.antenna_gain_db.is_some(), "antenna_gain_db")?;
            node.elements.get_or_insert(200);
            node.element_spacing.get_or_insert(0.5);
        }
        NodeKindDoc::Ncr => {
            forbid(node.p_tx_dbm.is_some(), "p_tx_dbm")?;
            forbid(node.elements.is_some(), "elements")?;
            forbid(node.element_spacing.is_some(), "element_spacing")?;
            node.amp_gain_db.get_or_insert(100.0);
            node.max_output_dbm.get_or_insert(40.0);
            node.antenna_gain_db.get_or_insert(0.0);
        }
    }
    check(text, node.x.is_finite() && node.y.is_finite(), "x", format!("of node `{}` must be finite", node.name))?;
    if let Some(p) = node.p_tx_dbm {
        check(text, p.is_finite(), "p_tx_dbm", format!("of node `{}` must be finite", node.name))?;
    }
    if let Some(n) = node.elements {
        check(text, n >= 1, "elements", format!("of node `{}` must be >= 1", node.name))?;
    }
    Ok(())
}

fn resolve_foliage(
    text: &str,
    f: &mut FoliageDoc,
    infrastructure: &iabsim::Deployment,
) -> Result<FoliageSpec, CliError> {
    let p = *f.in_leaf_probability.get_or_insert(0.5);
    check(
        text,
        (0.0..=1.0).contains(&p),
        "foliage.in_leaf_probability",
        format!("must lie in [0, 1], got {p}"),
    )?;
    match f.mode {
        FoliageMode::Deterministic => {
            for (present, key) in [
                (f.density_per_km2.is_some(), "density_per_km2"),
                (f.line_length_m.is_some(), "line_length_m"),
                (f.line_width_m.is_some(), "line_width_m"),
                (f.orientation_deg.is_some(), "orientation_deg"),
            ] {
                if present {
                    return Err(field_error(text, key, "only applies to `mode = \"stochastic\"`"));
                }
            }
            let depth = *f.total_depth_m.get_or_insert(0.0);
            check(
                text,
                depth.is_finite() && depth >= 0.0,
                "foliage.total_depth_m",
                format!("must be >= 0, got {depth}"),
            )?;
            let mut overrides = LinkDepths::new();
            for link in &f.links {
                let find = |name: &str| {
                    infrastructure
                        .find(name)
                        .map(|n| n.id)
                        .ok_or_else(|| field_error(text, "a", format!("names unknown node `{name}` in a foliage link")))
                };
                let (a, b) = (find(&link.a)?, find(&link.b)?);
                check(
                    text,
                    link.in_leaf_m >= 0.0 && link.out_of_leaf_m >= 0.0,
                    "in_leaf_m",
                    "and `out_of_leaf_m` must be >= 0",
                )?;
                overrides.set(
                    a,
                    b,
                    VegetationDepth {
                        in_leaf: link.in_leaf_m,
                        out_of_leaf: link.out_of_leaf_m,
                    },
                );
            }
            Ok(FoliageSpec::Deterministic {
                total_depth: depth,
                in_leaf_probability: p,
                overrides,
            })
        }
        FoliageMode::Stochastic => {
            if f.total_depth_m.is_some() {
                return Err(field_error(text, "total_depth_m", "only applies to `mode = \"deterministic\"`"));
            }
            if !f.links.is_empty() {
                return Err(field_error(text, "link", "overrides only apply to `mode = \"deterministic\"`"));
            }
            let density = *f.density_per_km2.get_or_insert(50.0);
            let params = TreeFieldParams {
                density: density / 1e6,
                line_length: *f.line_length_m.get_or_insert(30.0),
                line_width: *f.line_width_m.get_or_insert(10.0),
                in_leaf_probability: p,
                orientation: match f.orientation_deg {
                    Some(deg) => Orientation::Fixed(deg.rem_euclid(180.0).to_radians()),
                    None => Orientation::Uniform,
                },
            };
            params.validate().map_err(|e| core_error(text, e))?;
            Ok(FoliageSpec::Stochastic(params))
        }
    }
}
