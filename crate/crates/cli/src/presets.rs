//! Scenario templates shaped after the four published experiments.

pub const NAMES: [&str; 4] = ["fig2", "fig3", "fig4", "fig5"];

/// TOML text of a preset, or `None` for an unknown name.
pub fn get(name: &str) -> Option<&'static str> {
    match name {
        "fig2" => Some(include_str!("../presets/fig2.toml")),
        "fig3" => Some(include_str!("../presets/fig3.toml")),
        "fig4" => Some(include_str!("../presets/fig4.toml")),
        "fig5" => Some(include_str!("../presets/fig5.toml")),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_str, Overrides};

    #[test]
    fn every_preset_parses() {
        for name in NAMES {
            let loaded = parse_str(get(name).unwrap(), &Overrides::default()).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(loaded.sweep.is_some(), "{name} has no sweep");
        }
        assert!(get("fig9").is_none());
    }
}
