//! Plain tables rendered as TSV (machine-readable) and Markdown (for reading).

use std::fmt::Write as _;

/// Tabs and line breaks inside a field would break the row; they become spaces.
pub fn tsv_field(s: &str) -> String {
    s.chars().map(|c| if matches!(c, '\t' | '\n' | '\r') { ' ' } else { c }).collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    /// Optional `#schema=<name>/v1` line emitted before the TSV header.
    pub schema: Option<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            schema: None,
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_schema(mut self, name: &str) -> Self {
        self.schema = Some(name.to_string());
        self
    }

    pub fn push<S: Into<String>>(&mut self, row: impl IntoIterator<Item = S>) {
        let row: Vec<String> = row.into_iter().map(Into::into).collect();
        assert_eq!(row.len(), self.header.len(), "row width differs from header");
        self.rows.push(row);
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        if let Some(s) = &self.schema {
            let _ = writeln!(out, "#schema={s}/v1");
        }
        for line in std::iter::once(&self.header).chain(&self.rows) {
            let cells: Vec<String> = line.iter().map(|c| tsv_field(c)).collect();
            let _ = writeln!(out, "{}", cells.join("\t"));
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let esc = |c: &str| tsv_field(c).replace('|', "\\|");
        let mut out = String::new();
        let _ = writeln!(out, "| {} |", self.header.iter().map(|h| esc(h)).collect::<Vec<_>>().join(" | "));
        let _ = writeln!(out, "|{}", "---|".repeat(self.header.len()));
        for row in &self.rows {
            let _ = writeln!(out, "| {} |", row.iter().map(|c| esc(c)).collect::<Vec<_>>().join(" | "));
        }
        out
    }
}
