//! Named experiment configs shipped with the binary.

const PRESETS: [(&str, &str); 8] = [
    ("sps-vs-rwm", include_str!("../presets/sps-vs-rwm.toml")),
    ("sps-vs-rwm-south", include_str!("../presets/sps-vs-rwm-south.toml")),
    ("radius-efficiency", include_str!("../presets/radius-efficiency.toml")),
    ("optimal-scaling", include_str!("../presets/optimal-scaling.toml")),
    ("sbps-student-t", include_str!("../presets/sbps-student-t.toml")),
    ("sbps-gaussian-2d", include_str!("../presets/sbps-gaussian-2d.toml")),
    ("ess-per-switch", include_str!("../presets/ess-per-switch.toml")),
    ("c-nu-table", include_str!("../presets/c-nu-table.toml")),
];

pub const NAMES: [&str; 8] = [
    PRESETS[0].0,
    PRESETS[1].0,
    PRESETS[2].0,
    PRESETS[3].0,
    PRESETS[4].0,
    PRESETS[5].0,
    PRESETS[6].0,
    PRESETS[7].0,
];

pub fn get(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::LoadedConfig;

    #[test]
    fn every_preset_parses_and_resolves() {
        for name in NAMES {
            let c = LoadedConfig::from_preset(name).unwrap();
            if c.config.target.is_some() {
                let r = c.config.resolve().unwrap_or_else(|i| panic!("{}", c.error(i)));
                if !c.config.samplers.is_empty() {
                    c.config.plans(&r).unwrap_or_else(|i| panic!("{}", c.error(i)));
                }
            }
        }
    }
}
