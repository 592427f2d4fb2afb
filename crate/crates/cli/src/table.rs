//! Tabular artifacts and their deterministic CSV/JSON encodings.

use crate::error::CliError;
use crate::scenario::Format;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Num(v as f64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// 17 significant digits, so values round-trip exactly.
pub fn number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => number(*v),
                    Cell::Text(t) => t.clone(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, scenario: &str, headline: &Headline) -> String {
        let json_num = |v: f64| if v.is_finite() { number(v) } else { "null".into() };
        let quote = |s: &str| serde_json::to_string(s).expect("strings serialize");
        let mut out = String::from("{\n");
        out.push_str(&format!("  \"scenario\": {},\n", quote(scenario)));
        out.push_str(&format!(
            "  \"headline\": {{\"name\": {}, \"value\": {}}},\n",
            quote(&headline.name),
            json_num(headline.value)
        ));
        let cols: Vec<String> = self.columns.iter().map(|c| quote(c)).collect();
        out.push_str(&format!("  \"columns\": [{}],\n", cols.join(", ")));
        out.push_str("  \"records\": [");
        for (i, row) in self.rows.iter().enumerate() {
            let fields: Vec<String> = self
                .columns
                .iter()
                .zip(row)
                .map(|(c, v)| {
                    let v = match v {
                        Cell::Num(x) => json_num(*x),
                        Cell::Text(t) => quote(t),
                    };
                    format!("{}: {v}", quote(c))
                })
                .collect();
            out.push_str(if i == 0 { "\n    {" } else { ",\n    {" });
            out.push_str(&fields.join(", "));
            out.push('}');
        }
        out.push_str(if self.rows.is_empty() { "]\n}\n" } else { "\n  ]\n}\n" });
        out
    }

    pub fn encode(&self, format: Format, scenario: &str, headline: &Headline) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(scenario, headline),
        }
    }
}

/// The one scalar that summarizes a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Headline {
    pub name: String,
    pub value: f64,
}

impl Headline {
    pub fn new(name: &str, value: f64) -> Self {
        Headline { name: name.into(), value }
    }
}

/// Write through a temporary file in the target directory and rename it.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let err = |source| CliError::Write { path: path.display().to_string(), source };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(err)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    tmp.write_all(contents.as_bytes()).map_err(err)?;
    tmp.flush().map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}
