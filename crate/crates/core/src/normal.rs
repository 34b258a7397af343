//! Standard normal CDF and quantile.

use std::sync::OnceLock;

use statrs::distribution::{ContinuousCDF, Normal};

fn standard() -> &'static Normal {
    static N: OnceLock<Normal> = OnceLock::new();
    N.get_or_init(|| Normal::new(0.0, 1.0).expect("unit normal"))
}

/// `Φ(z)`.
pub fn cdf(z: f64) -> f64 {
    standard().cdf(z)
}

/// `Φ⁻¹(p)`, exactly zero at `p = 0.5`.
pub fn quantile(p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    standard().inverse_cdf(p)
}
