use std::fmt;

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};

/// Number of ways to guess the pairing of an `n`-slot stream one pair at a
/// time: ∏_{j=2,4,…,n} j!/(2!(j−2)!) = n!/2^{n/2}.
pub fn pairing_combinations(n: u64) -> Result<BigUint> {
    if n % 2 == 1 {
        return Err(Error::OddLength(n));
    }
    if n < 2 {
        return Err(Error::out_of_range("n", "need at least one pair"));
    }
    let mut c = BigUint::one();
    for j in (2..=n).step_by(2) {
        c *= BigUint::from(j * (j - 1) / 2);
    }
    Ok(c)
}

/// Probability of guessing every one of `n` basis choices out of
/// `basis_count` bases.
pub fn basis_guess_probability(n: u32, basis_count: u32) -> f64 {
    (basis_count as f64).powf(-(n as f64))
}

/// A positive number held as log10, printable in scientific notation far
/// outside the f64 range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scientific {
    log10: f64,
}

impl Scientific {
    pub fn from_log10(log10: f64) -> Self {
        Scientific { log10 }
    }

    pub fn of(value: &BigUint) -> Self {
        let digits = value.to_str_radix(10);
        let lead_len = digits.len().min(17);
        let lead: f64 = digits[..lead_len].parse().expect("decimal digits");
        Scientific {
            log10: lead.log10() + (digits.len() - lead_len) as f64,
        }
    }

    pub fn reciprocal(self) -> Self {
        Scientific { log10: -self.log10 }
    }

    pub fn log10(&self) -> f64 {
        self.log10
    }

    /// (mantissa, exponent) rounded to `significant` digits.
    pub fn parts(&self, significant: usize) -> (f64, i32) {
        let mut exponent = self.log10.floor() as i32;
        let mut mantissa = 10f64.powf(self.log10 - exponent as f64);
        let scale = 10f64.powi(significant.saturating_sub(1) as i32);
        mantissa = (mantissa * scale).round() / scale;
        if mantissa >= 10.0 {
            mantissa /= 10.0;
            exponent += 1;
        }
        (mantissa, exponent)
    }

    pub fn to_string_with(&self, significant: usize) -> String {
        let (m, e) = self.parts(significant);
        format!("{:.*}e{}", significant.saturating_sub(1), m, e)
    }
}

impl fmt::Display for Scientific {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_string_with(f.precision().map_or(3, |p| p + 1)))
    }
}
