//! Scenario documents bundled with the library.

use crate::config::{ConfigError, Scenario};

macro_rules! presets {
    ($($name:literal),* $(,)?) => {
        /// (name, TOML document) for every bundled scenario.
        pub const PRESETS: &[(&str, &str)] = &[
            $(($name, include_str!(concat!("../presets/", $name, ".toml"))),)*
        ];
    };
}

presets!(
    "Fig1-inset",
    "Fig1b",
    "Fig1b-noise",
    "Fig2a",
    "Fig2b",
    "Fig3a",
    "Fig3b",
    "Fig4",
    "FigS1a",
    "FigS1b",
    "FigS1c",
    "FigS2a",
    "FigS2b",
    "AppendixA-tuning",
    "AppendixA-depth",
);

pub fn preset_source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn load_preset(name: &str) -> Result<Scenario, ConfigError> {
    let text = preset_source(name).ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))?;
    Scenario::from_toml_str(text)
}

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}
