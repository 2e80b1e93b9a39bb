use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::format_sig;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Agent,
    Full,
    Random,
    MiGeStruct,
    MiGeEm,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Agent,
        Method::Full,
        Method::Random,
        Method::MiGeStruct,
        Method::MiGeEm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Agent => "agent",
            Method::Full => "full",
            Method::Random => "random",
            Method::MiGeStruct => "mi_ge_struct",
            Method::MiGeEm => "mi_ge_em",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// Scope of a row evaluated on the whole task dataset.
pub const SCOPE_ALL: &str = "all";
/// Variant of the headline row for a method.
pub const VARIANT_MAIN: &str = "main";
/// Variant of the averaged random-baseline row.
pub const VARIANT_MEAN: &str = "mean";

/// One line of the comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub task: String,
    pub method: Method,
    /// `all`, or the sub-scenario id for per-scenario rows of pooled tasks.
    pub scope: String,
    /// `main`, `mean`, or `seed-<k>` for individual random draws.
    pub variant: String,
    /// `(2,7,9,10)`, `All`, or `k=<n>` for averaged random rows.
    pub features: String,
    pub cardinality: usize,
    pub rmse_val: f64,
    pub rmse_test: f64,
    pub trend_error: f64,
    pub total_score: f64,
}

impl ResultRow {
    /// Headline rows: one per (task, method, scope), excluding per-draw
    /// random rows.
    pub fn is_headline(&self) -> bool {
        self.variant == VARIANT_MAIN || self.variant == VARIANT_MEAN
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
}

const HEADER: [&str; 10] = [
    "task",
    "method",
    "scope",
    "variant",
    "features",
    "cardinality",
    "rmse_val",
    "rmse_test",
    "trend_error",
    "total_score",
];

impl ResultsTable {
    pub fn headline(&self) -> impl Iterator<Item = &ResultRow> {
        self.rows.iter().filter(|r| r.is_headline())
    }

    /// Headline row for `(task, method)` on the whole task dataset.
    pub fn get(&self, task: &str, method: Method) -> Option<&ResultRow> {
        self.headline()
            .find(|r| r.task == task && r.method == method && r.scope == SCOPE_ALL)
    }

    pub fn get_scoped(&self, task: &str, method: Method, scope: &str) -> Option<&ResultRow> {
        self.headline()
            .find(|r| r.task == task && r.method == method && r.scope == scope)
    }

    pub fn tasks(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.task.as_str()) {
                out.push(&r.task);
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(HEADER).expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.task.clone(),
                r.method.to_string(),
                r.scope.clone(),
                r.variant.clone(),
                r.features.clone(),
                r.cardinality.to_string(),
                format_sig(r.rmse_val, 9),
                format_sig(r.rmse_test, 9),
                format_sig(r.trend_error, 9),
                format_sig(r.total_score, 9),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    pub fn read_csv(path: &Path) -> Result<ResultsTable> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let rows = r
            .deserialize::<ResultRow>()
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::csv(path, e))?;
        Ok(ResultsTable { rows })
    }

    /// Aligned plain-text rendering of the headline rows.
    pub fn to_text(&self) -> String {
        let head = ["Task", "Method", "Scope", "Features", "RMSE val (dB)", "RMSE test (dB)", "E_c (dB)", "Total score"];
        let body: Vec<[String; 8]> = self
            .headline()
            .map(|r| {
                [
                    r.task.clone(),
                    r.method.to_string(),
                    r.scope.clone(),
                    r.features.clone(),
                    format!("{:.3}", r.rmse_val),
                    format!("{:.3}", r.rmse_test),
                    format!("{:.3}", r.trend_error),
                    format!("{:.3}", r.total_score),
                ]
            })
            .collect();
        let mut widths = head.map(str::len);
        for row in &body {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let line = |cells: Vec<&str>| -> String {
            let parts: Vec<String> = cells
                .iter()
                .zip(widths)
                .enumerate()
                .map(|(i, (c, w))| if i < 4 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            parts.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = line(head.to_vec());
        out += &line(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect());
        for row in &body {
            out += &line(row.iter().map(String::as_str).collect());
        }
        out
    }
}
