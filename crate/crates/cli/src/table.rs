//! Report tables and their CSV / JSON rendering.

use std::f64::consts::LN_2;
use std::fmt::Write as _;

use cms_core::numeric::fmt_g12;

/// One output value. `Log` values are in natural-log units and rescale
/// under `--log2`.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(String),
    Log(f64),
    Num(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    pub fn int(x: impl ToString) -> Self {
        Cell::Int(x.to_string())
    }

    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    fn number(&self, log2: bool) -> Option<f64> {
        match self {
            Cell::Log(x) if log2 => Some(x / LN_2),
            Cell::Log(x) | Cell::Num(x) => Some(*x),
            _ => None,
        }
    }

    fn csv(&self, log2: bool) -> String {
        match self {
            Cell::Int(s) => s.clone(),
            Cell::Text(s) => {
                if s.contains([',', '"', '\n']) {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
            Cell::Bool(b) => b.to_string(),
            _ => fmt_g12(self.number(log2).unwrap_or(f64::NAN)),
        }
    }

    fn json(&self, log2: bool) -> String {
        match self {
            Cell::Int(s) => s.clone(),
            Cell::Text(s) => serde_json::to_string(s).expect("strings serialize"),
            Cell::Bool(b) => b.to_string(),
            _ => {
                let x = self.number(log2).unwrap_or(f64::NAN);
                if x.is_finite() {
                    fmt_g12(x)
                } else {
                    format!("\"{}\"", fmt_g12(x))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[&'static str]) -> Self {
        Table {
            name,
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn csv(&self, log2: bool) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.csv(log2)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    fn json(&self, log2: bool, indent: &str) -> String {
        let mut s = String::from("[");
        for (i, row) in self.rows.iter().enumerate() {
            s.push_str(if i == 0 { "\n" } else { ",\n" });
            let fields: Vec<String> = self
                .columns
                .iter()
                .zip(row)
                .map(|(k, c)| format!("\"{k}\": {}", c.json(log2)))
                .collect();
            let _ = write!(s, "{indent}  {{{}}}", fields.join(", "));
        }
        if !self.rows.is_empty() {
            let _ = write!(s, "\n{indent}");
        }
        s.push(']');
        s
    }
}

/// A command's output: an ordered summary block plus tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: &'static str,
    pub summary: Vec<(&'static str, Cell)>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Report {
            command,
            summary: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &'static str, value: Cell) {
        self.summary.push((key, value));
    }

    pub fn summary_csv(&self, log2: bool) -> String {
        let mut s = String::from("key,value\n");
        for (k, v) in &self.summary {
            let _ = writeln!(s, "{k},{}", v.csv(log2));
        }
        s
    }

    /// Summary and tables as labelled CSV blocks.
    pub fn csv(&self, log2: bool) -> String {
        let mut s = format!("# summary\n{}", self.summary_csv(log2));
        for t in &self.tables {
            let _ = write!(s, "\n# {}\n{}", t.name, t.csv(log2));
        }
        s
    }

    pub fn json(&self, log2: bool) -> String {
        let mut s = format!("{{\n  \"command\": \"{}\",\n  \"summary\": {{", self.command);
        for (i, (k, v)) in self.summary.iter().enumerate() {
            s.push_str(if i == 0 { "\n" } else { ",\n" });
            let _ = write!(s, "    \"{k}\": {}", v.json(log2));
        }
        s.push_str("\n  },\n  \"tables\": {");
        for (i, t) in self.tables.iter().enumerate() {
            s.push_str(if i == 0 { "\n" } else { ",\n" });
            let _ = write!(s, "    \"{}\": {}", t.name, t.json(log2, "    "));
        }
        if !self.tables.is_empty() {
            s.push_str("\n  ");
        }
        s.push_str("}\n}\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("pressure");
        r.set("pressure", Cell::Log(LN_2));
        r.set("label", Cell::text("a,b"));
        let mut t = Table::new("partition_sums", &["n", "logZ"]);
        t.push(vec![Cell::int(1), Cell::Log(f64::NEG_INFINITY)]);
        t.push(vec![Cell::int(2), Cell::Log(-LN_2)]);
        r.tables.push(t);
        r
    }

    #[test]
    fn csv_uses_twelve_digits() {
        let s = sample().csv(false);
        assert!(s.contains("pressure,0.69314718056\n"), "{s}");
        assert!(s.contains("label,\"a,b\"\n"));
        assert!(s.contains("n,logZ\n1,-inf\n2,-0.69314718056\n"));
        assert!(sample().csv(true).contains("pressure,1\n"));
    }

    #[test]
    fn json_parses_and_quotes_non_finite_values() {
        let s = sample().json(false);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        let p = v["summary"]["pressure"].as_f64().unwrap();
        assert!((p - std::f64::consts::LN_2).abs() < 1e-11);
        assert_eq!(v["tables"]["partition_sums"][0]["logZ"], "-inf");
    }
}
