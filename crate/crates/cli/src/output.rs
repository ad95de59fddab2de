use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde_json::Value;

use crate::config::Format;

/// A command's result in both renderings.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub csv: String,
    pub json: Value,
}

impl Artifact {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.csv.clone(),
            Format::Json => {
                let mut s =
                    serde_json::to_string_pretty(&self.json).expect("JSON values serialize");
                s.push('\n');
                s
            }
        }
    }
}

/// Builds CSV text from a fixed header and preformatted cells.
pub struct Table {
    text: String,
    width: usize,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            text: format!("{}\n", header.join(",")),
            width: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.width, "row width differs from header");
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// Fixed-point rendering shared by every table so reruns diff cleanly.
pub fn num(x: f64) -> String {
    format!("{x:.10}")
}

/// Writes via a sibling temporary file renamed into place, so readers never
/// see a partial artifact. Without a path the text goes to standard output.
pub fn write_atomic(path: Option<&Path>, text: &str) -> io::Result<()> {
    let Some(path) = path else {
        let mut out = io::stdout().lock();
        out.write_all(text.as_bytes())?;
        return out.flush();
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_layout() {
        let mut t = Table::new(&["q", "lower", "upper"]);
        t.row(&["4".into(), num(0.5), num(-1.25)]);
        assert_eq!(t.finish(), "q,lower,upper\n4,0.5000000000,-1.2500000000\n");
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/out.csv");
        write_atomic(Some(&path), "a\n").unwrap();
        write_atomic(Some(&path), "b,c\n").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "b,c\n");
        assert_eq!(fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }
}
