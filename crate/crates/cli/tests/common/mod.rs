#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use svcal::fx::{resolve_smile, TenorQuote};
use svcal::pricing::model_smile;
use svcal::{Conventions, MarketSlice, Model, QuadratureConfig};

pub const TABLE_FILE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/eurusd_2008-09-16.csv");

pub fn table_file() -> PathBuf {
    PathBuf::from(TABLE_FILE)
}

pub fn svcal(args: &[&str], store: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_svcal"));
    cmd.args(args).env_remove("SVCAL_STORE");
    if let Some(s) = store {
        cmd.env("SVCAL_STORE", s);
    }
    cmd.output().expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

pub fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stderr(o)))
}

/// Quotes whose resolved 25-delta and ATM strikes carry the model's own
/// implied vols, found by fixed-point iteration on the strikes.
pub fn model_quote(model: &Model, label: &str, expiry: f64) -> (TenorQuote, MarketSlice) {
    let slice = MarketSlice::new(1.0, 1.0, expiry).unwrap();
    let conv = Conventions::default();
    let quad = QuadratureConfig::default();
    let mut vols = [0.1, 0.1, 0.1];
    for _ in 0..100 {
        let q = TenorQuote::new(
            label,
            expiry,
            vols[1],
            0.5 * (vols[0] + vols[2]) - vols[1],
            vols[2] - vols[0],
        )
        .unwrap();
        let strikes: Vec<f64> = resolve_smile(&q, &slice, &conv)
            .unwrap()
            .iter()
            .map(|p| p.strike)
            .collect();
        let smile = model_smile(model, &slice, &strikes, &quad).unwrap();
        let next = [smile[0].1, smile[1].1, smile[2].1];
        let moved = next.iter().zip(&vols).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        vols = next;
        if moved < 1e-15 {
            break;
        }
    }
    let q = TenorQuote::new(
        label,
        expiry,
        vols[1],
        0.5 * (vols[0] + vols[2]) - vols[1],
        vols[2] - vols[0],
    )
    .unwrap();
    (q, slice)
}

pub fn quote_csv(rows: &[(TenorQuote, MarketSlice)]) -> String {
    let mut s = String::from("tenor,expiry,forward,discount,atm,ms25,rr25\n");
    for (q, sl) in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            q.tenor_label, sl.expiry, sl.forward, sl.discount, q.atm_vol, q.ms25, q.rr25
        ));
    }
    s
}
