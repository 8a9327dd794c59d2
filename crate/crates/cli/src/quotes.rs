//! Quote CSV files.
//!
//! Header `tenor,expiry,forward,discount,atm,ms25,rr25`, one row per tenor
//! with strictly increasing expiries. Numbers are decimals; a trailing `%`
//! divides by 100 exactly (the text `12.70%` is read as `12.70e-2`).

use std::path::Path;

use svcal::fx::TenorQuote;
use svcal::mixing::{clark_markdown, mix_at, MixingCurve};
use svcal::param_store::quote_digest;
use svcal::MarketSlice;

use crate::error::{CliError, CliResult};

pub const QUOTE_COLUMNS: [&str; 7] = ["tenor", "expiry", "forward", "discount", "atm", "ms25", "rr25"];
pub const CURVE_COLUMNS: [&str; 2] = ["expiry", "variance"];

/// Parses a decimal, or a percentage with a `%` suffix.
pub fn parse_number(text: &str) -> Option<f64> {
    let t = text.trim();
    let v = match t.strip_suffix('%') {
        Some(body) => {
            let body = body.trim_end();
            if body.is_empty() || body.contains(['e', 'E']) {
                return None;
            }
            format!("{body}e-2").parse::<f64>().ok()?
        }
        None => t.parse::<f64>().ok()?,
    };
    v.is_finite().then_some(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuoteRow {
    pub quote: TenorQuote,
    pub slice: MarketSlice,
    /// Cell text as read, reused on output when the value is unchanged.
    raw: Vec<String>,
}

impl QuoteRow {
    fn values(&self) -> [f64; 6] {
        [
            self.slice.expiry,
            self.slice.forward,
            self.slice.discount,
            self.quote.atm_vol,
            self.quote.ms25,
            self.quote.rr25,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuoteFile {
    pub rows: Vec<QuoteRow>,
    /// Hex SHA-256 of the bytes the file was read from.
    pub digest: String,
}

fn column_index(headers: &csv::StringRecord, expected: &[&str], what: &str) -> CliResult<Vec<usize>> {
    let names: Vec<String> = headers.iter().map(|h| h.trim().to_ascii_lowercase()).collect();
    for n in &names {
        if !expected.contains(&n.as_str()) {
            return Err(CliError::input(format!("line 1: unknown {what} column `{n}`")));
        }
    }
    expected
        .iter()
        .map(|c| {
            names
                .iter()
                .position(|n| n == c)
                .ok_or_else(|| CliError::input(format!("line 1: missing {what} column `{c}`")))
        })
        .collect()
}

fn reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(false)
        .from_reader(bytes)
}

fn csv_error(e: csv::Error) -> CliError {
    match e.position() {
        Some(p) => CliError::input(format!("line {}: {e}", p.line())),
        None => CliError::input(e.to_string()),
    }
}

impl QuoteFile {
    pub fn read(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(format!("cannot read {}", path.display()), e))?;
        Self::parse(&bytes)
    }

    pub fn parse(bytes: &[u8]) -> CliResult<Self> {
        let mut rdr = reader(bytes);
        if bytes.iter().all(|b| b.is_ascii_whitespace()) {
            return Err(CliError::input("no quotes"));
        }
        let headers = rdr.headers().map_err(csv_error)?.clone();
        let idx = column_index(&headers, &QUOTE_COLUMNS, "quote")?;
        let mut rows: Vec<QuoteRow> = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_error)?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let raw: Vec<String> = idx.iter().map(|&i| rec[i].to_string()).collect();
            let mut nums = [0.0; 6];
            for (k, n) in nums.iter_mut().enumerate() {
                *n = parse_number(&raw[k + 1]).ok_or_else(|| {
                    CliError::input(format!(
                        "line {line}: invalid {} `{}`",
                        QUOTE_COLUMNS[k + 1],
                        raw[k + 1]
                    ))
                })?;
            }
            let [expiry, forward, discount, atm, ms, rr] = nums;
            let tenor = raw[0].clone();
            if tenor.is_empty() {
                return Err(CliError::input(format!("line {line}: empty tenor label")));
            }
            let at = |e: svcal::Error| CliError::input(format!("line {line}: {e}"));
            let quote = TenorQuote::new(tenor, expiry, atm, ms, rr).map_err(at)?;
            let slice = MarketSlice::new(forward, discount, expiry).map_err(at)?;
            if let Some(prev) = rows.last() {
                if !(expiry > prev.slice.expiry) {
                    return Err(CliError::input(format!(
                        "line {line}: expiry {expiry} not after previous expiry {}",
                        prev.slice.expiry
                    )));
                }
            }
            rows.push(QuoteRow { quote, slice, raw });
        }
        if rows.is_empty() {
            return Err(CliError::input("no quotes"));
        }
        Ok(Self {
            rows,
            digest: quote_digest(bytes),
        })
    }

    pub fn pairs(&self) -> Vec<(TenorQuote, MarketSlice)> {
        self.rows.iter().map(|r| (r.quote.clone(), r.slice)).collect()
    }

    /// Row with the given tenor label.
    pub fn find(&self, tenor: &str) -> Option<&QuoteRow> {
        self.rows.iter().find(|r| r.quote.tenor_label == tenor)
    }

    /// Strangles and risk reversals scaled by the curve value at each expiry.
    pub fn marked_down(&self, curve: &MixingCurve) -> CliResult<Self> {
        let mut out = self.clone();
        for row in &mut out.rows {
            let lambda = mix_at(curve, row.slice.expiry)?;
            row.quote = clark_markdown(&row.quote, lambda)?;
        }
        Ok(out)
    }

    /// CSV text in canonical column order. Cells whose value is unchanged
    /// since parsing are copied verbatim; others use the shortest decimal
    /// that reads back to the same double.
    pub fn to_csv(&self) -> String {
        let mut out = QUOTE_COLUMNS.join(",");
        out.push('\n');
        for row in &self.rows {
            let mut cells = vec![row.quote.tenor_label.clone()];
            for (k, v) in row.values().iter().enumerate() {
                let raw = &row.raw[k + 1];
                let same = parse_number(raw).is_some_and(|r| r.to_bits() == v.to_bits());
                cells.push(if same { raw.clone() } else { format!("{v}") });
            }
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Quoted variance-swap curve: header `expiry,variance`.
pub fn parse_curve(bytes: &[u8]) -> CliResult<Vec<(f64, f64)>> {
    let mut rdr = reader(bytes);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let idx = column_index(&headers, &CURVE_COLUMNS, "curve")?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let mut pair = [0.0; 2];
        for (k, v) in pair.iter_mut().enumerate() {
            let text = &rec[idx[k]];
            *v = parse_number(text)
                .filter(|x| *x > 0.0)
                .ok_or_else(|| CliError::input(format!("line {line}: invalid {} `{text}`", CURVE_COLUMNS[k])))?;
        }
        out.push((pair[0], pair[1]));
    }
    if out.is_empty() {
        return Err(CliError::input("no curve points"));
    }
    Ok(out)
}
