//! Small special-function helpers on top of `statrs`.

use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::dd::Dd;

/// `ln(Γ(r + k) / Γ(r))` for real `r > 0`.
pub fn ln_rising(r: f64, k: u64) -> f64 {
    if k == 0 {
        0.0
    } else if k <= 64 {
        (0..k).map(|i| (r + i as f64).ln()).sum()
    } else {
        ln_gamma(r + k as f64) - ln_gamma(r)
    }
}

/// `ln C(r + x - 1, x)`, the negative binomial coefficient with real `r`.
///
/// Small `x` uses `sum ln(1 + (r - 1)/i)`, which stays accurate when `r` is
/// large and the log-gamma difference would cancel.
pub fn ln_nb_coef(r: f64, x: u64) -> f64 {
    if x == 0 {
        0.0
    } else if x <= 64 {
        (1..=x).map(|i| ((r - 1.0) / i as f64).ln_1p()).sum()
    } else {
        ln_gamma(r + x as f64) - ln_gamma(r) - ln_gamma(x as f64 + 1.0)
    }
}

/// Binomial coefficients `C(n, 0..=n)` in double-double.
pub(crate) fn binomial_row(n: u64) -> Vec<Dd> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c = Dd::ONE;
    row.push(c);
    for j in 0..n {
        c = c * ((n - j) as f64) / ((j + 1) as f64);
        row.push(c);
    }
    row
}

/// Upper tail `P(chi2_df > stat)`.
pub fn chi_square_sf(stat: f64, df: u32) -> f64 {
    if stat <= 0.0 {
        return 1.0;
    }
    gamma_ur(0.5 * df as f64, 0.5 * stat)
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = Dd::ZERO;
    for v in values {
        acc = acc + v;
    }
    acc.to_f64()
}
