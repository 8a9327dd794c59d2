//! Black-Scholes core and Fourier pricing for affine models.

mod black;
mod fourier;
pub mod quadrature;

pub use black::{
    black, black_forward_delta, black_vega, bs_implied_vol, bs_price, inv_norm_cdf, norm_cdf, norm_pdf, OptionKind,
    OptionSpec,
};
pub use fourier::{cf_vanilla_price, cf_vanilla_prices, model_smile, QuadratureConfig};
