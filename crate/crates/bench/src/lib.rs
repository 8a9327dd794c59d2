//! Shared fixtures for the criterion benchmarks.

use svcal::fx::TenorQuote;
use svcal::{HestonParams, MarketSlice};

/// Heston parameters of the order fitted to short-dated EURUSD smiles.
pub fn heston() -> HestonParams {
    HestonParams::new(0.018, 0.018, 6.02, 0.49, -0.13).expect("admissible")
}

/// A three-month EURUSD quote row with unit forward and discount.
pub fn quote_3m() -> (TenorQuote, MarketSlice) {
    let expiry = 1.5 / 6.02;
    let q = TenorQuote::new("3M", expiry, 0.127, 0.0028, -0.0055).expect("valid quote");
    let s = MarketSlice::new(1.0, 1.0, expiry).expect("valid slice");
    (q, s)
}
