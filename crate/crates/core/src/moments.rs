//! Exact moments ⟨Sₓᵖ⟩ of the collective spin in the product state |1…1⟩.
//!
//! In the Sₓ eigenbasis the state has weights C(n, n/2 − m)/2ⁿ, so every
//! moment is a binomial sum. Sums are carried out in exact rationals; the
//! variance-like brackets of the perturbative model cancel catastrophically
//! in floating point at large n.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Highest moment order kept in a [`SpinMomentTable`].
pub const MAX_ORDER: usize = 8;

/// Binomial coefficient as a big integer.
pub fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for j in 0..k {
        acc = acc * BigInt::from(n - j) / BigInt::from(j + 1);
    }
    acc
}

/// Twice the Sₓ eigenvalues, −n, −n + 2, …, n.
pub fn twice_m_values(n: u32) -> impl Iterator<Item = i32> {
    let n = n as i32;
    (0..=n).map(move |j| 2 * j - n)
}

/// Weight C(n, n/2 − m)/2ⁿ of the Sₓ = m component of |1…1⟩.
pub fn block_weight(n: u32, twice_m: i32) -> f64 {
    let j = (n as i32 - twice_m) / 2;
    let w = BigRational::new(binomial(n, j as u32), BigInt::one() << n as usize);
    w.to_f64().unwrap_or(0.0)
}

/// ⟨Sₓᵖ⟩ in |1…1⟩ for `n` spins, exactly.
pub fn sx_moment(n: u32, p: u32) -> BigRational {
    let mut num = BigInt::zero();
    for twice_m in twice_m_values(n) {
        let j = ((n as i32 - twice_m) / 2) as u32;
        num += binomial(n, j) * BigInt::from(twice_m).pow(p);
    }
    // m^p = (2m)^p / 2^p
    BigRational::new(num, BigInt::one() << (n as usize + p as usize))
}

/// Moments ⟨Sₓᵖ⟩ for p = 0..=8.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinMomentTable {
    n: u32,
    moments: Vec<BigRational>,
}

impl SpinMomentTable {
    pub fn new(n: u32) -> SpinMomentTable {
        let moments = (0..=MAX_ORDER as u32).map(|p| sx_moment(n, p)).collect();
        SpinMomentTable { n, moments }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn exact(&self, p: usize) -> &BigRational {
        &self.moments[p]
    }

    pub fn get(&self, p: usize) -> f64 {
        self.moments[p].to_f64().unwrap_or(f64::NAN)
    }

    /// ⟨Sₓ⁴⟩ − ⟨Sₓ²⟩²
    pub fn var2(&self) -> BigRational {
        &self.moments[4] - &self.moments[2] * &self.moments[2]
    }

    /// ⟨Sₓ⁶⟩ − ⟨Sₓ⁴⟩⟨Sₓ²⟩
    pub fn cov24(&self) -> BigRational {
        &self.moments[6] - &self.moments[4] * &self.moments[2]
    }

    /// ⟨Sₓ⁸⟩ − ⟨Sₓ⁴⟩²
    pub fn var4(&self) -> BigRational {
        &self.moments[8] - &self.moments[4] * &self.moments[4]
    }

    /// Residual Sₓ⁴ variance after the best Sₓ² correction,
    /// var4 − cov24²/var2; zero for n = 1 where var2 vanishes.
    pub fn optimal_bracket(&self) -> BigRational {
        let var2 = self.var2();
        if var2.is_zero() {
            return BigRational::zero();
        }
        self.var4() - self.cov24() * self.cov24() / var2
    }
}
