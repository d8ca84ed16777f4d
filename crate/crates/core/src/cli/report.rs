//! Experiment reports: CSV tables, a JSON summary and two-column plot data.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Result;

/// One asserted property; a failure sets exit code 2.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Property {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Table {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }
}

/// A curve for plotting.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Curve {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub experiment: String,
    pub properties: Vec<Property>,
    pub tables: Vec<Table>,
    pub curves: Vec<Curve>,
    pub summary: Value,
    /// Extra text files written verbatim (name, contents).
    #[serde(skip)]
    pub files: Vec<(String, String)>,
}

impl Report {
    pub fn new(experiment: &str) -> Report {
        Report {
            experiment: experiment.into(),
            properties: Vec::new(),
            tables: Vec::new(),
            curves: Vec::new(),
            summary: json!({}),
            files: Vec::new(),
        }
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.properties.push(Property { name: name.into(), passed, detail });
    }

    pub fn note(&mut self, key: &str, value: Value) {
        self.summary[key] = value;
    }

    pub fn passed(&self) -> bool {
        self.properties.iter().all(|p| p.passed)
    }

    pub fn failures(&self) -> Vec<&Property> {
        self.properties.iter().filter(|p| !p.passed).collect()
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn summary_json(&self) -> Value {
        json!({
            "experiment": self.experiment,
            "passed": self.passed(),
            "properties": self.properties,
            "summary": self.summary,
            "tables": self.tables.iter().map(|t| format!("{}.csv", t.name)).collect::<Vec<_>>(),
        })
    }

    /// Write every table, the summary and the plot data below `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for t in &self.tables {
            let p = dir.join(format!("{}.csv", t.name));
            std::fs::write(&p, t.to_csv())?;
            written.push(p);
        }
        for (name, body) in &self.files {
            let p = dir.join(name);
            std::fs::write(&p, body)?;
            written.push(p);
        }
        let p = dir.join("summary.json");
        std::fs::write(&p, serde_json::to_string_pretty(&self.summary_json()).unwrap() + "\n")?;
        written.push(p);
        written.extend(emit_plotdata(self, &dir.join("plotdata"))?);
        Ok(written)
    }
}

/// One `x y` file per curve plus `manifest.json` listing them.
pub fn emit_plotdata(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut manifest = Vec::new();
    for c in &report.curves {
        let file = format!("{}.dat", c.name);
        let mut body = format!("# {} {}\n", c.x_label, c.y_label);
        for (x, y) in &c.points {
            let _ = writeln!(body, "{x:.12e} {y:.12e}");
        }
        let p = dir.join(&file);
        std::fs::write(&p, body)?;
        written.push(p);
        manifest.push(json!({ "file": file, "x": c.x_label, "y": c.y_label, "points": c.points.len() }));
    }
    let p = dir.join("manifest.json");
    std::fs::write(&p, serde_json::to_string_pretty(&json!({ "experiment": report.experiment, "curves": manifest })).unwrap() + "\n")?;
    written.push(p);
    Ok(written)
}
