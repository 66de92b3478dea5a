use std::fmt::Write as _;
use std::path::Path;

use crate::dataio::{read_file, text_lines, write_file};
use crate::error::{Error, Result};

/// Line-oriented split description: `#key=value` header lines, then
/// `[section]` headers each followed by one id per line.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub header: Vec<(String, String)>,
    pub sections: Vec<(String, Vec<String>)>,
}

impl Manifest {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::invalid(format!("manifest has no #{key} header")))
    }

    pub fn section(&self, name: &str) -> Option<&[String]> {
        self.sections
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, ids)| ids.as_slice())
    }

    pub fn push_header(&mut self, key: &str, value: impl ToString) {
        self.header.push((key.to_owned(), value.to_string()));
    }

    pub fn push_section(&mut self, name: impl Into<String>, ids: Vec<String>) {
        self.sections.push((name.into(), ids));
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.header {
            writeln!(out, "#{k}={v}").unwrap();
        }
        for (name, ids) in &self.sections {
            writeln!(out, "[{name}]").unwrap();
            for id in ids {
                out.push_str(id);
                out.push('\n');
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut m = Manifest::default();
        for line in text_lines(bytes) {
            let (line_no, line) = line?;
            if let Some(rest) = line.strip_prefix('#') {
                if !m.sections.is_empty() {
                    return Err(Error::parse(line_no, "header line after the first section"));
                }
                let (k, v) = rest
                    .split_once('=')
                    .ok_or_else(|| Error::parse(line_no, "expected `#key=value`"))?;
                m.header.push((k.to_owned(), v.to_owned()));
            } else if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                if m.section(name).is_some() {
                    return Err(Error::parse(line_no, format!("repeated section [{name}]")));
                }
                m.sections.push((name.to_owned(), Vec::new()));
            } else {
                let (_, ids) = m
                    .sections
                    .last_mut()
                    .ok_or_else(|| Error::parse(line_no, "id before any [section]"))?;
                let id = line.trim();
                if id.contains(char::is_whitespace) {
                    return Err(Error::parse(line_no, format!("id {id:?} contains whitespace")));
                }
                ids.push(id.to_owned());
            }
        }
        Ok(m)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&read_file(path)?).map_err(|e| e.in_file(path))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), self.to_text().as_bytes())
    }
}
