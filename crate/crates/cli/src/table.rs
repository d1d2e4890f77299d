//! Comma-separated numeric tables with `#` comment headers.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Comment lines, without the leading `# `.
    pub comments: Vec<String>,
}

impl Table {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        for (i, r) in rows.iter().enumerate() {
            if r.len() != columns.len() {
                bail!("row {} has {} values for {} columns", i + 1, r.len(), columns.len());
            }
        }
        Ok(Table {
            columns,
            rows,
            comments: Vec::new(),
        })
    }

    pub fn with_comments(mut self, text: &str) -> Self {
        self.comments.extend(text.lines().map(str::to_string));
        self
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let k = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| anyhow!("no column {name:?} (have {})", self.columns.join(", ")))?;
        Ok(self.rows.iter().map(|r| r[k]).collect())
    }

    /// Values are written in Rust's shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for c in &self.comments {
            s.push_str("# ");
            s.push_str(c);
            s.push('\n');
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut comments = Vec::new();
        let mut columns: Option<Vec<String>> = None;
        let mut rows = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if let Some(c) = line.strip_prefix('#') {
                comments.push(c.strip_prefix(' ').unwrap_or(c).to_string());
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            match &columns {
                None => columns = Some(line.split(',').map(|c| c.trim().to_string()).collect()),
                Some(cols) => {
                    let row: Vec<f64> = line
                        .split(',')
                        .enumerate()
                        .map(|(k, v)| {
                            v.trim().parse::<f64>().map_err(|e| {
                                anyhow!("{}:{}:{}: {e} ({v:?})", path.display(), n + 1, k + 1)
                            })
                        })
                        .collect::<Result<_>>()?;
                    if row.len() != cols.len() {
                        bail!("{}:{}: expected {} values, found {}", path.display(), n + 1, cols.len(), row.len());
                    }
                    rows.push(row);
                }
            }
        }
        let columns = columns.ok_or_else(|| anyhow!("{}: no header line", path.display()))?;
        Ok(Table { columns, rows, comments })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Table::parse(&text, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let t = Table::new(vec!["a".into(), "b".into()], vec![vec![0.1, 1.0 / 3.0], vec![-2.5e-300, 7.0]])
            .unwrap()
            .with_comments("seed = 4\nsource = \"x\"");
        let back = Table::parse(&t.to_csv(), Path::new("t.csv")).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn bad_cell_reports_position() {
        let err = Table::parse("a,b\n1,2\n3,zz\n", Path::new("t.csv")).unwrap_err().to_string();
        assert!(err.contains("t.csv:3:2"), "{err}");
    }
}
