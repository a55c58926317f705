//! Flat `key = value` documents used for run headers, fit parameters and
//! reports. Numbers are written with Rust's shortest round-trip formatting,
//! so a value read back is bit-identical to the one written.

use std::fmt::{self, Display};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KeyValueDoc {
    entries: Vec<(String, String)>,
}

impl KeyValueDoc {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends an entry. Keys may repeat; lookups return the last one.
    pub fn push(&mut self, key: impl Into<String>, value: impl Display) -> &mut Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn extend(&mut self, other: &KeyValueDoc) -> &mut Self {
        self.entries.extend(other.entries.iter().cloned());
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(|v| v.parse().ok())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut doc = KeyValueDoc::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::parse(origin, format!("line {}: expected `key = value`", n + 1))
            })?;
            doc.push(k.trim(), v.trim());
        }
        Ok(doc)
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_string()).map_err(|e| Error::io(path, e))
    }
}

impl Display for KeyValueDoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_numbers_exactly() {
        let x = 0.1 + 0.2;
        let mut doc = KeyValueDoc::new();
        doc.push("x", x).push("name", "spectrum").push("x", 2.5);
        let back = KeyValueDoc::parse(&doc.to_string(), Path::new("m")).unwrap();
        assert_eq!(back.get_f64("x"), Some(2.5));
        assert_eq!(back.entries()[0].1.parse::<f64>().unwrap(), x);
        assert_eq!(back.get("name"), Some("spectrum"));
        assert!(KeyValueDoc::parse("novalue\n", Path::new("m")).is_err());
    }
}
