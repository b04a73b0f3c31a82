//! Report formatting at the MW/MWh boundary.
//!
//! Values are stored in kW/kWh; reports divide by 1000 and print two
//! fractional digits, rounding half away from zero on the exact binary value.

use std::fmt::Write;

use serde::Serialize;

use crate::battery::BatteryParams;
use crate::dispatch::ComparisonRow;

/// Exact decimal rendering of `x` rounded half away from zero to `digits`.
pub fn round_half_away(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    // Every finite f64 has at most 1074 fractional digits, so this is exact.
    let full = format!("{:.1074}", x.abs());
    let (int_part, frac_part) = full.split_once('.').expect("fixed notation has a point");
    let mut digits_vec: Vec<u8> = int_part
        .bytes()
        .chain(frac_part.bytes().take(digits))
        .map(|b| b - b'0')
        .collect();
    if frac_part.as_bytes()[digits] >= b'5' {
        let mut i = digits_vec.len();
        loop {
            if i == 0 {
                digits_vec.insert(0, 1);
                break;
            }
            i -= 1;
            if digits_vec[i] == 9 {
                digits_vec[i] = 0;
            } else {
                digits_vec[i] += 1;
                break;
            }
        }
    }
    let split = digits_vec.len() - digits;
    let mut out = String::new();
    let is_zero = digits_vec.iter().all(|&d| d == 0);
    if x.is_sign_negative() && !is_zero {
        out.push('-');
    }
    for d in &digits_vec[..split] {
        out.push((b'0' + d) as char);
    }
    if digits > 0 {
        out.push('.');
        for d in &digits_vec[split..] {
            out.push((b'0' + d) as char);
        }
    }
    out
}

/// kW or kWh to a two-decimal MW or MWh string.
pub fn mega(x: f64) -> String {
    round_half_away(x / 1000.0, 2)
}

/// Battery parameters in both unit systems.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamsReport {
    pub kw: BatteryParams,
    pub mw: MegaParams,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MegaParams {
    pub n_plus_mw: String,
    pub n_minus_mw: String,
    pub c_mwh: String,
}

impl From<&BatteryParams> for ParamsReport {
    fn from(p: &BatteryParams) -> Self {
        Self {
            kw: *p,
            mw: MegaParams {
                n_plus_mw: mega(p.n_plus),
                n_minus_mw: mega(p.n_minus),
                c_mwh: mega(p.c),
            },
        }
    }
}

const HEADER: [&str; 6] = [
    "Model",
    "mu",
    "n_+ (MW)",
    "n_- (MW)",
    "C (MWh)",
    "eta_w (%)",
];

fn cells(row: &ComparisonRow) -> [String; 6] {
    [
        row.name.clone(),
        row.mu
            .map_or_else(|| "-".to_string(), |m| round_half_away(m, 2)),
        mega(row.params.n_plus),
        mega(row.params.n_minus),
        mega(row.params.c),
        round_half_away(100.0 * row.eta_w, 1),
    ]
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = HEADER.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&cells(r).join(","));
        out.push('\n');
    }
    out
}

/// Aligned plain-text table; the first column is left-aligned, the rest right.
pub fn comparison_text(rows: &[ComparisonRow]) -> String {
    let body: Vec<[String; 6]> = rows.iter().map(cells).collect();
    let mut width: [usize; 6] = HEADER.map(str::len);
    for r in &body {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cols: &[String]| {
        for (k, c) in cols.iter().enumerate() {
            if k > 0 {
                out.push_str("  ");
            }
            if k == 0 {
                let _ = write!(out, "{c:<w$}", w = width[0]);
            } else {
                let _ = write!(out, "{c:>w$}", w = width[k]);
            }
        }
        out.push('\n');
    };
    line(&HEADER.map(String::from));
    for r in &body {
        line(r);
    }
    out
}
