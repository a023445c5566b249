//! Named parameter presets shipped with the crate.

use std::sync::OnceLock;

use crate::config::{apply_all, parse_assignments};
use crate::params::ParamBundle;

pub const DEFAULT_PRESET: &str = "paper-1K";

/// `(name, config text)` of every built-in preset.
pub const PRESETS: &[(&str, &str)] = &[("paper-1K", include_str!("../presets/paper-1K.toml"))];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Builds the bundle for a named preset.
pub fn load(name: &str) -> Option<ParamBundle> {
    let text = text(name)?;
    let origin = format!("preset {name}");
    let list = parse_assignments(text, &origin).expect("built-in preset parses");
    let mut bundle = ParamBundle::default();
    apply_all(&mut bundle, &list, &origin).expect("built-in preset applies");
    Some(bundle)
}

/// The 1 K calibration.
pub fn calibrated_1k() -> ParamBundle {
    static CELL: OnceLock<ParamBundle> = OnceLock::new();
    CELL.get_or_init(|| load(DEFAULT_PRESET).expect("default preset exists"))
        .clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::schema::{resolve, Resolved, ENTRIES};

    #[test]
    fn preset_sets_every_key_once() {
        for (name, text) in PRESETS {
            let list = parse_assignments(text, name).unwrap();
            for e in ENTRIES {
                let hits = list
                    .iter()
                    .filter(
                        |a| matches!(resolve(&a.key), Resolved::Found(f, _) if std::ptr::eq(f, e)),
                    )
                    .count();
                assert_eq!(hits, 1, "preset {name} sets {} {hits} times", e.key());
            }
        }
    }

    #[test]
    fn preset_is_valid() {
        calibrated_1k().validate().unwrap();
    }
}
