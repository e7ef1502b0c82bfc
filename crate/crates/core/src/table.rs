//! The counterexample table shipped in `data/table1.json` and per-row
//! verification against it.

use serde::{Deserialize, Serialize};

use crate::channel::CziChannel;
use crate::error::{Error, Result};
use crate::hk::{hk_max, HkConfig, WeightedProblem};
use crate::twoletter::{two_letter_max, GapReport, TwoLetterConfig, DEFAULT_GAP_THRESHOLD};

const TABLE_JSON: &str = include_str!("../data/table1.json");

pub const SUPPORTED_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub lambda: f64,
    /// `P(Y1 = 0 | x1, x2)` with row `x1` and column `x2`.
    pub q: [[f64; 2]; 2],
    pub hk: f64,
    pub two: f64,
}

impl TableRow {
    pub fn channel(&self) -> Result<CziChannel> {
        CziChannel::new(self.q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub version: u32,
    pub description: String,
    pub rows: Vec<TableRow>,
}

impl Table {
    pub fn parse(json: &str) -> Result<Self> {
        let table: Table = serde_json::from_str(json).map_err(|e| Error::Config(format!("table data: {e}")))?;
        if table.version != SUPPORTED_VERSION {
            return Err(Error::Config(format!("unsupported table version {}", table.version)));
        }
        for row in &table.rows {
            row.channel()?;
        }
        Ok(table)
    }
}

/// The embedded table.
pub fn table() -> Table {
    Table::parse(TABLE_JSON).expect("embedded table is valid")
}

/// Acceptance tolerances for a row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Allowed `|hk_ours - hk_table|`.
    pub hk_abs: f64,
    /// Allowed shortfall `two_table - two_ours`.
    pub two_below: f64,
    /// Allowed `|two_ours - two_table|`.
    pub two_abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hk_abs: 2e-5,
            two_below: 2e-4,
            two_abs: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowCheck {
    /// One-based row number.
    pub row: usize,
    pub expected: TableRow,
    pub report: GapReport,
    pub hk_ok: bool,
    pub two_ok: bool,
    /// Gap exceeds the combined error budget.
    pub gap_ok: bool,
}

impl RowCheck {
    pub fn passed(&self) -> bool {
        self.hk_ok && self.two_ok && self.gap_ok
    }
}

/// Recomputes one row (one-based) and compares it with the table.
pub fn verify_row(
    table: &Table,
    row: usize,
    hk_cfg: &HkConfig,
    tl_cfg: &TwoLetterConfig,
    tol: &Tolerances,
) -> Result<RowCheck> {
    let expected = *row
        .checked_sub(1)
        .and_then(|i| table.rows.get(i))
        .ok_or_else(|| Error::Config(format!("row {row} out of range 1..={}", table.rows.len())))?;
    let ch = expected.channel()?;
    let hk = hk_max(&WeightedProblem::new(ch, expected.lambda)?, hk_cfg)?;
    let two = two_letter_max(&ch, expected.lambda, tl_cfg)?;
    let report = GapReport::from_results(&ch, expected.lambda, &hk, &two, DEFAULT_GAP_THRESHOLD, false);
    Ok(RowCheck {
        row,
        expected,
        hk_ok: (report.hk_value - expected.hk).abs() <= tol.hk_abs,
        two_ok: report.two_letter_value >= expected.two - tol.two_below
            && (report.two_letter_value - expected.two).abs() <= tol.two_abs,
        gap_ok: report.gap > report.error_budget,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_table_loads() {
        let t = table();
        assert_eq!(t.rows.len(), 17);
        assert_eq!(t.rows[0].q, [[1.0, 0.5], [1.0, 0.0]]);
        assert_eq!(t.rows[16].lambda, 100.0);
        assert!(t.rows.iter().all(|r| r.two > r.hk && r.lambda >= 1.0));
    }

    #[test]
    fn rejects_other_versions_and_bad_rows() {
        let bumped = TABLE_JSON.replacen("\"version\": 1", "\"version\": 2", 1);
        assert!(Table::parse(&bumped).is_err());
        let bad = r#"{"version":1,"description":"","rows":[{"lambda":2,"q":[[1.5,0],[0,0]],"hk":1,"two":1}]}"#;
        assert!(Table::parse(bad).is_err());
    }

    #[test]
    fn out_of_range_row() {
        let t = table();
        let cfg = HkConfig::default();
        let tl = TwoLetterConfig::default();
        assert!(verify_row(&t, 0, &cfg, &tl, &Tolerances::default()).is_err());
        assert!(verify_row(&t, 18, &cfg, &tl, &Tolerances::default()).is_err());
    }
}
