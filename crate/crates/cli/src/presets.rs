//! Shipped configurations, one per figure of the paper.
//!
//! A preset is an ordinary config file. Its header comments may carry
//! `# sweep <axis> = <values>` lines, used when no `--axis` is given, and a
//! `# lag = <τ>` line for `analyze`.

use std::path::Path;

use crate::error::{CliError, Result};

pub struct Preset {
    pub name: &'static str,
    pub text: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig3",
        text: include_str!("../presets/fig3.conf"),
    },
    Preset {
        name: "fig4",
        text: include_str!("../presets/fig4.conf"),
    },
    Preset {
        name: "fig5",
        text: include_str!("../presets/fig5.conf"),
    },
    Preset {
        name: "fig6",
        text: include_str!("../presets/fig6.conf"),
    },
    Preset {
        name: "fig7",
        text: include_str!("../presets/fig7.conf"),
    },
    Preset {
        name: "fig8",
        text: include_str!("../presets/fig8.conf"),
    },
];

impl Preset {
    /// First comment line.
    pub fn summary(&self) -> &'static str {
        self.text
            .lines()
            .next()
            .and_then(|l| l.strip_prefix('#'))
            .map_or("", str::trim)
    }
}

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

/// Config text from a file path, or from a preset when no such file exists.
pub fn load(arg: &str) -> Result<(String, String)> {
    let path = Path::new(arg);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("config")
            .to_string();
        return Ok((stem, text));
    }
    match find(arg) {
        Some(p) => Ok((p.name.to_string(), p.text.to_string())),
        None => Err(CliError::io(path, std::io::Error::from(std::io::ErrorKind::NotFound))),
    }
}

/// `(axis, values)` pairs from `# sweep` header lines.
pub fn default_sweeps(text: &str) -> Vec<(String, String)> {
    header_comments(text)
        .filter_map(|c| c.strip_prefix("sweep "))
        .filter_map(|rest| rest.split_once('='))
        .map(|(a, v)| (a.trim().to_string(), v.trim().to_string()))
        .collect()
}

/// Lags from a `# lag = ...` header line.
pub fn default_lags(text: &str) -> Option<String> {
    header_comments(text)
        .filter_map(|c| c.strip_prefix("lag"))
        .filter_map(|rest| rest.trim_start().strip_prefix('='))
        .map(|v| v.trim().to_string())
        .next()
}

fn header_comments(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim)
        .take_while(|l| l.is_empty() || l.starts_with('#'))
        .filter_map(|l| l.strip_prefix('#'))
        .map(str::trim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use mobiqueue::config::ExperimentConfig;

    #[test]
    fn every_preset_parses() {
        for p in PRESETS {
            ExperimentConfig::parse(p.text).unwrap_or_else(|e| panic!("{}: {e}", p.name));
            assert!(!p.summary().is_empty());
        }
    }

    #[test]
    fn sweep_headers() {
        let s = default_sweeps(find("fig4").unwrap().text);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0], ("model".to_string(), "rd, rwp, bm".to_string()));
        assert_eq!(default_lags(find("fig8").unwrap().text).as_deref(), Some("1"));
        assert_eq!(default_lags(find("fig4").unwrap().text), None);
    }
}
