//! Conversion of the CSV outputs to JSON and reading either back.

use serde_json::{json, Map, Value};

use crate::error::CliError;

/// A parsed output file: metadata, column names, rows of raw fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse_csv(text: &str) -> Table {
        let mut meta = Vec::new();
        let mut columns = Vec::new();
        let mut rows = Vec::new();
        for line in text.lines() {
            if let Some(m) = line.strip_prefix("# ") {
                if let Some((k, v)) = m.split_once('=') {
                    meta.push((k.to_string(), v.to_string()));
                }
            } else if line.is_empty() || line.starts_with('#') {
                continue;
            } else if columns.is_empty() {
                columns = line.split(',').map(String::from).collect();
            } else {
                rows.push(line.split(',').map(String::from).collect());
            }
        }
        Table {
            meta,
            columns,
            rows,
        }
    }

    pub fn parse_json(text: &str) -> Result<Table, CliError> {
        let v: Value = serde_json::from_str(text).map_err(|e| CliError::Io(e.to_string()))?;
        let field = |x: &Value| match x {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        let meta = v["metadata"]
            .as_array()
            .map(|a| {
                a.iter()
                    .filter_map(|p| Some((p.get(0)?.as_str()?.to_string(), field(p.get(1)?))))
                    .collect()
            })
            .unwrap_or_default();
        let columns = v["columns"]
            .as_array()
            .map(|a| a.iter().map(field).collect())
            .unwrap_or_default();
        let rows = v["rows"]
            .as_array()
            .map(|a| {
                a.iter()
                    .map(|r| {
                        r.as_array()
                            .map(|r| r.iter().map(field).collect())
                            .unwrap_or_default()
                    })
                    .collect()
            })
            .unwrap_or_default();
        Ok(Table {
            meta,
            columns,
            rows,
        })
    }

    pub fn read(path: &std::path::Path) -> Result<Table, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            Table::parse_json(&text)
        } else {
            Ok(Table::parse_csv(&text))
        }
    }

    pub fn to_json(&self) -> String {
        let cell = |s: &String| match s.parse::<f64>() {
            Ok(x) if x.is_finite() => json!(x),
            _ => json!(s),
        };
        let mut obj = Map::new();
        obj.insert(
            "metadata".into(),
            Value::Array(self.meta.iter().map(|(k, v)| json!([k, v])).collect()),
        );
        obj.insert("columns".into(), json!(self.columns));
        obj.insert(
            "rows".into(),
            Value::Array(
                self.rows
                    .iter()
                    .map(|r| Value::Array(r.iter().map(cell).collect()))
                    .collect(),
            ),
        );
        let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("in-memory json");
        s.push('\n');
        s
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Numeric column by name.
    pub fn column(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let idx = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| CliError::Io(format!("missing column '{name}'")))?;
        self.rows
            .iter()
            .map(|r| {
                r.get(idx)
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| CliError::Io(format!("non-numeric value in column '{name}'")))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_json_round_trip() {
        let csv = "# eps=0.1\n# note=a b\nk,F,class\n0,1.0000000000000000e0,regular\n1,3.3333333333333331e-1,chaotic\n";
        let t = Table::parse_csv(csv);
        assert_eq!(t.meta("eps"), Some("0.1"));
        let back = Table::parse_json(&t.to_json()).unwrap();
        assert_eq!(back.columns, t.columns);
        assert_eq!(back.column("F").unwrap(), t.column("F").unwrap());
        assert_eq!(back.rows[1][2], "chaotic");
        assert_eq!(back.meta, t.meta);
    }
}
