//! Per-tick trace records, their CSV form, and tolerance-based comparison
//! of two trace files.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 13] = [
    "tick",
    "distance",
    "pleasure",
    "arousal",
    "dominance",
    "sd_target",
    "c_sd",
    "torso_pitch_command",
    "deviation",
    "lean",
    "forward_velocity",
    "blocked",
    "phase",
];

/// Every quantity computed during one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub tick: u64,
    pub distance: f64,
    pub pleasure: f64,
    pub arousal: f64,
    pub dominance: f64,
    pub sd_target: f64,
    pub c_sd: f64,
    pub torso_pitch_command: f64,
    pub deviation: f64,
    pub lean: f64,
    pub forward_velocity: f64,
    pub blocked: bool,
    pub phase: String,
}

impl TraceRow {
    fn csv_fields(&self) -> [String; 13] {
        [
            self.tick.to_string(),
            format_float(self.distance),
            format_float(self.pleasure),
            format_float(self.arousal),
            format_float(self.dominance),
            format_float(self.sd_target),
            format_float(self.c_sd),
            format_float(self.torso_pitch_command),
            format_float(self.deviation),
            format_float(self.lean),
            format_float(self.forward_velocity),
            self.blocked.to_string(),
            self.phase.clone(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        // Writing into a Vec cannot fail.
        w.write_record(CSV_HEADER).expect("in-memory csv write");
        for row in &self.rows {
            w.write_record(row.csv_fields())
                .expect("in-memory csv write");
        }
        let bytes = w.into_inner().expect("in-memory csv flush");
        String::from_utf8(bytes).expect("csv output is utf-8")
    }

    pub fn column(&self, f: impl Fn(&TraceRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }
}

/// At most 9 significant digits, shortest form, no negative zero.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{x:.8e}").parse().unwrap_or(x);
    format!("{rounded}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    /// 1-based data row.
    pub row: usize,
    pub column: String,
    pub got: String,
    pub want: String,
}

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "row {}, column {}: got {}, want {}",
            self.row, self.column, self.got, self.want
        )
    }
}

fn read_csv(text: &str, label: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = r
        .headers()
        .map_err(|e| Error::Trace(format!("{label}: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Trace(format!("{label}: {e}")))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

/// Compares two CSV traces column by column (matched by name). Cells that
/// parse as numbers on both sides compare within `tol`; everything else must
/// match exactly. A different column set is an error, not a mismatch.
pub fn compare_csv(got: &str, want: &str, tol: f64) -> Result<Vec<Mismatch>> {
    let (got_head, got_rows) = read_csv(got, "trace")?;
    let (want_head, want_rows) = read_csv(want, "expected")?;

    let mut a = got_head.clone();
    let mut b = want_head.clone();
    a.sort();
    b.sort();
    if a != b {
        let missing: Vec<_> = want_head.iter().filter(|c| !got_head.contains(c)).collect();
        let extra: Vec<_> = got_head.iter().filter(|c| !want_head.contains(c)).collect();
        return Err(Error::Trace(format!(
            "column sets differ (missing {missing:?}, unexpected {extra:?})"
        )));
    }

    let mut out = Vec::new();
    for i in 0..got_rows.len().max(want_rows.len()) {
        let (Some(g), Some(w)) = (got_rows.get(i), want_rows.get(i)) else {
            out.push(Mismatch {
                row: i + 1,
                column: "*".into(),
                got: if i < got_rows.len() { "row" } else { "no row" }.into(),
                want: if i < want_rows.len() { "row" } else { "no row" }.into(),
            });
            continue;
        };
        for (wi, name) in want_head.iter().enumerate() {
            let gi = got_head
                .iter()
                .position(|c| c == name)
                .expect("same column set");
            let gv = g.get(gi).map(String::as_str).unwrap_or("");
            let wv = w.get(wi).map(String::as_str).unwrap_or("");
            if !cells_match(gv, wv, tol) {
                out.push(Mismatch {
                    row: i + 1,
                    column: name.clone(),
                    got: gv.to_string(),
                    want: wv.to_string(),
                });
            }
        }
    }
    Ok(out)
}

fn cells_match(got: &str, want: &str, tol: f64) -> bool {
    let num = |s: &str| s.trim().parse::<f64>().ok().filter(|v| v.is_finite());
    match (num(got), num(want)) {
        (Some(g), Some(w)) => (g - w).abs() <= tol,
        _ => got == want,
    }
}
