use std::fmt::{Display, Write as _};
use std::path::Path;

use anyhow::Result;
use uflmatch::io_util::write_atomic;

/// Flat `key=value` report, one entry per line, in insertion order.
#[derive(Debug, Default)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn add(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// Prints to stdout and, when given, writes the same text to `path`.
    pub fn emit(&self, path: Option<&Path>) -> Result<()> {
        let text = self.render();
        print!("{text}");
        if let Some(p) = path {
            write_atomic(p, text.as_bytes())?;
        }
        Ok(())
    }
}

/// Fixed-precision milliseconds.
pub fn ms(v: f64) -> String {
    format!("{v:.3}")
}
