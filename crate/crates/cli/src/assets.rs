//! Scenarios and fixtures compiled into the binary.

use clap::Args;

use crate::CliResult;

pub const SCENARIOS: &[(&str, &str)] = &[
    ("grid16", include_str!("../assets/grid16.json")),
    ("calibration", include_str!("../assets/calibration.json")),
    ("hover_blocks", include_str!("../assets/hover_blocks.json")),
    ("pressure_blocks", include_str!("../assets/pressure_blocks.json")),
    ("typing", include_str!("../assets/typing.json")),
];

pub const FILES: &[(&str, &str)] = &[
    ("phrases", include_str!("../assets/phrases.txt")),
    ("typing_log", include_str!("../assets/typing_log.csv")),
    ("typing_references", include_str!("../assets/typing_references.txt")),
];

pub fn scenario(name: &str) -> Option<&'static str> {
    SCENARIOS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

fn names() -> String {
    SCENARIOS.iter().chain(FILES).map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Args)]
pub struct AssetArgs {
    /// Asset name: a scenario (grid16, calibration, hover_blocks,
    /// pressure_blocks, typing) or a fixture (phrases, typing_log,
    /// typing_references).
    pub name: String,
}

pub fn print_asset(a: &AssetArgs) -> CliResult<()> {
    let text = SCENARIOS
        .iter()
        .chain(FILES)
        .find(|(n, _)| *n == a.name)
        .map(|(_, s)| *s)
        .ok_or_else(|| anyhow::anyhow!("unknown asset {:?}; available: {}", a.name, names()))?;
    print!("{text}");
    Ok(())
}
