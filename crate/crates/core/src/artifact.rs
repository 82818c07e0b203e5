//! Headers and number formatting shared by every file this crate writes.

use std::io::{self, Write};

use crate::rng::GENERATOR_ID;

pub const ARTIFACT_VERSION: &str = concat!("autolab ", env!("CARGO_PKG_VERSION"));

/// Terminal and absorbed-state convention used by the solver and by reward accounting.
pub const PSI_CONVENTION: &str = "psi=0 (terminal reward zero; absorbed value zero)";

/// Ordered `key: value` metadata written as `#` comment lines at the top of CSV files.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArtifactHeader {
    pub entries: Vec<(String, String)>,
}

impl ArtifactHeader {
    /// Header pre-filled with version, preset, convention and generator.
    pub fn new(preset: &str) -> Self {
        Self::default()
            .with("artifact_version", ARTIFACT_VERSION)
            .with("preset", preset)
            .with("psi_convention", PSI_CONVENTION)
            .with("generator", GENERATOR_ID)
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn write_comment<W: Write + ?Sized>(&self, w: &mut W) -> io::Result<()> {
        for (k, v) in &self.entries {
            writeln!(w, "# {k}: {v}")?;
        }
        Ok(())
    }
}

/// 17 significant digits, so that written values round-trip exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_lines() {
        let h = ArtifactHeader::new("paper-2025").with("seed", 42);
        let mut buf = Vec::new();
        h.write_comment(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().all(|l| l.starts_with("# ")));
        assert!(text.contains("# seed: 42"));
        assert_eq!(h.get("preset"), Some("paper-2025"));
    }

    #[test]
    fn formatting_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 123456.789] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
