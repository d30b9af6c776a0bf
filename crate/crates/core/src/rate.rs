//! Rates of bounding partition families and the iterated size recursion.
//!
//! A family of partitions bounds the partition lattice with *rate* `phi` when
//! every partition of size `p` has a refinement inside the family of size at
//! most `phi(p)`. Iterating "split by a witness, re-enter the family" for `s`
//! rounds yields the size recursion computed here. Its values explode as
//! towers of exponentials, so results saturate at a configurable bit width
//! instead of materializing astronomically large integers.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::rational::{ceil_div_eps, format_rat, Rat};

/// Default saturation threshold for size bounds, in bits.
pub const DEFAULT_BOUND_BITS: u64 = 512;

/// A natural number that may have saturated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PsiValue {
    Exact(BigUint),
    /// Strictly larger than `2^bits`; the exact value was not materialized.
    AtLeast { bits: u64 },
}

impl PsiValue {
    pub fn from_u64(v: u64) -> Self {
        PsiValue::Exact(BigUint::from(v))
    }

    /// Is `n <= self`? Saturated values dominate everything representable.
    pub fn at_least(&self, n: &BigUint) -> bool {
        match self {
            PsiValue::Exact(v) => v >= n,
            PsiValue::AtLeast { bits } => n.bits() <= *bits,
        }
    }

    pub fn to_string_canonical(&self) -> String {
        match self {
            PsiValue::Exact(v) => v.to_string(),
            PsiValue::AtLeast { bits } => format!(">=2^{bits}"),
        }
    }

    fn saturate(self, cap_bits: u64) -> Self {
        match self {
            PsiValue::Exact(v) if v.bits() > cap_bits => PsiValue::AtLeast { bits: cap_bits },
            other => other,
        }
    }
}

/// Closed-form rate of a bounding family.
///
/// `eps` parameters refer to the equitable class-size bound of the family the
/// rate was emitted for, `k` to the product arity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RateFunction {
    /// `phi(p) = p` (no re-coarsening).
    Identity,
    /// `phi(p) = 2^p` (handy in tests and worked examples).
    PowerOfTwo,
    /// `phi(p) = 2^(p k^2)`: atom family of `p` product cells, lifted to a
    /// `k`-fold product partition.
    ProductAtoms { k: u32 },
    /// `phi(p) = 2^(p k)`: per-class atom families of a `k`-partite box
    /// partition, one class per coordinate.
    KPartiteAtoms { k: u32 },
    /// `phi(p) = (2pk + 1)^k`: endpoint-induced interval families.
    IntervalAtoms { k: u32 },
    /// `phi(p) = (ceil(2/eps) + 1)^k * 2^(p k^2)`: equitable refinement of the
    /// coordinate atom family, counting-measure block construction.
    EquitableCount { eps: Rat, k: u32 },
    /// `phi(p) = (ceil(1/eps) + 1)^k * 2^(p k^2)`: the tighter rate available
    /// when classes can be cut to exact measure.
    EquitableCube { eps: Rat, k: u32 },
    /// `phi(p) = (ceil(2/eps) + 1)^k * 2^(p k)`: per-class equitable
    /// refinement for `k`-partite boxes.
    EquitableKPartite { eps: Rat, k: u32 },
    /// `phi(p) = ((ceil(2/eps) + 1) (2pk + 1))^k`: equitable refinement of
    /// endpoint-induced interval families.
    EquitableInterval { eps: Rat, k: u32 },
}

impl RateFunction {
    /// Evaluate at an exact argument, saturating beyond `cap_bits` bits.
    pub fn eval_capped(&self, p: &BigUint, cap_bits: u64) -> PsiValue {
        // `2^e` saturates as soon as the exponent exceeds the cap.
        let pow2 = |e: BigUint| -> PsiValue {
            match e.to_u64() {
                Some(bits) if bits <= cap_bits => {
                    PsiValue::Exact(BigUint::one() << bits).saturate(cap_bits)
                }
                _ => PsiValue::AtLeast { bits: cap_bits },
            }
        };
        let mul = |a: PsiValue, b: PsiValue| -> PsiValue {
            match (a, b) {
                (PsiValue::Exact(x), PsiValue::Exact(y)) => {
                    PsiValue::Exact(x * y).saturate(cap_bits)
                }
                _ => PsiValue::AtLeast { bits: cap_bits },
            }
        };
        let powk = |base: BigUint, k: u32| -> PsiValue {
            let mut acc = PsiValue::Exact(BigUint::one());
            for _ in 0..k {
                acc = mul(acc, PsiValue::Exact(base.clone()));
            }
            acc
        };
        match self {
            RateFunction::Identity => PsiValue::Exact(p.clone()).saturate(cap_bits),
            RateFunction::PowerOfTwo => pow2(p.clone()),
            RateFunction::ProductAtoms { k } => pow2(p * BigUint::from(*k as u64 * *k as u64)),
            RateFunction::KPartiteAtoms { k } => pow2(p * BigUint::from(*k as u64)),
            RateFunction::IntervalAtoms { k } => {
                let base = BigUint::from(2u32) * p * BigUint::from(*k) + BigUint::one();
                powk(base, *k)
            }
            RateFunction::EquitableCount { eps, k } => {
                let head = powk(ceil_div_eps(2, eps) + BigUint::one(), *k);
                mul(head, pow2(p * BigUint::from(*k as u64 * *k as u64)))
            }
            RateFunction::EquitableCube { eps, k } => {
                let head = powk(ceil_div_eps(1, eps) + BigUint::one(), *k);
                mul(head, pow2(p * BigUint::from(*k as u64 * *k as u64)))
            }
            RateFunction::EquitableKPartite { eps, k } => {
                let head = powk(ceil_div_eps(2, eps) + BigUint::one(), *k);
                mul(head, pow2(p * BigUint::from(*k as u64)))
            }
            RateFunction::EquitableInterval { eps, k } => {
                let blocks = ceil_div_eps(2, eps) + BigUint::one();
                let gaps = BigUint::from(2u32) * p * BigUint::from(*k) + BigUint::one();
                powk(blocks * gaps, *k)
            }
        }
    }

    pub fn eval(&self, p: u64) -> PsiValue {
        self.eval_capped(&BigUint::from(p), DEFAULT_BOUND_BITS)
    }

    /// Formula rendering for reports.
    pub fn describe(&self) -> String {
        match self {
            RateFunction::Identity => "p".into(),
            RateFunction::PowerOfTwo => "2^p".into(),
            RateFunction::ProductAtoms { k } => format!("2^(p*{k}^2)"),
            RateFunction::KPartiteAtoms { k } => format!("2^(p*{k})"),
            RateFunction::IntervalAtoms { k } => format!("(2*p*{k}+1)^{k}"),
            RateFunction::EquitableCount { eps, k } => {
                format!("(ceil(2/({}))+1)^{k} * 2^(p*{k}^2)", format_rat(eps))
            }
            RateFunction::EquitableCube { eps, k } => {
                format!("(ceil(1/({}))+1)^{k} * 2^(p*{k}^2)", format_rat(eps))
            }
            RateFunction::EquitableKPartite { eps, k } => {
                format!("(ceil(2/({}))+1)^{k} * 2^(p*{k})", format_rat(eps))
            }
            RateFunction::EquitableInterval { eps, k } => {
                format!("((ceil(2/({}))+1)*(2*p*{k}+1))^{k}", format_rat(eps))
            }
        }
    }
}

fn eval_rate(phi: &RateFunction, arg: &PsiValue, cap_bits: u64) -> PsiValue {
    match arg {
        PsiValue::Exact(p) => phi.eval_capped(p, cap_bits),
        // rates are increasing, so a saturated argument stays saturated
        PsiValue::AtLeast { bits } => PsiValue::AtLeast { bits: *bits },
    }
}

fn times_r_plus_one(v: &PsiValue, r: u64, cap_bits: u64) -> PsiValue {
    match v {
        PsiValue::Exact(x) => {
            PsiValue::Exact(x * BigUint::from(r + 1)).saturate(cap_bits)
        }
        PsiValue::AtLeast { bits } => PsiValue::AtLeast { bits: *bits },
    }
}

/// The stated size recursion: `psi(1, p) = p`,
/// `psi(s+1, p) = (r+1) * phi(psi(s, p))`.
pub fn psi_stated(s: u64, p: u64, r: u64, phi: &RateFunction, cap_bits: u64) -> PsiValue {
    assert!(s >= 1, "recursion depth starts at 1");
    let mut v = PsiValue::from_u64(p);
    for _ in 1..s {
        // saturation is permanent and fixpoints never move again
        if matches!(v, PsiValue::AtLeast { .. }) {
            break;
        }
        let next = times_r_plus_one(&eval_rate(phi, &v, cap_bits), r, cap_bits);
        if next == v {
            break;
        }
        v = next;
    }
    v.saturate(cap_bits)
}

/// The conservative variant actually guaranteed by the main loop:
/// `psi'(1, p) = phi(p)`, `psi'(s+1, p) = phi((r+1) * psi'(s, p))`.
///
/// `psi'(s, p)` bounds the partition size after `s - 1` refinement rounds,
/// counting the initial re-coarsening into the bounding family. The stated
/// recursion interleaves the same two factors in the other order; for
/// super-linear rates the two disagree, and only this variant tracks the
/// loop's actual bookkeeping (size `<= phi((r+1) * previous)` per round).
pub fn psi_conservative(s: u64, p: u64, r: u64, phi: &RateFunction, cap_bits: u64) -> PsiValue {
    assert!(s >= 1, "recursion depth starts at 1");
    let mut v = eval_rate(phi, &PsiValue::from_u64(p), cap_bits);
    for _ in 1..s {
        if matches!(v, PsiValue::AtLeast { .. }) {
            break;
        }
        let next = eval_rate(phi, &times_r_plus_one(&v, r, cap_bits), cap_bits);
        if next == v {
            break;
        }
        v = next;
    }
    v.saturate(cap_bits)
}

/// Convenience: check `achieved <= bound` treating saturated bounds as huge.
pub fn within_bound(achieved: u64, bound: &PsiValue) -> bool {
    if achieved == 0 {
        return true;
    }
    bound.at_least(&BigUint::from(achieved))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use num_traits::Zero;

    #[test]
    fn stated_recursion_base_case() {
        for p in [1u64, 2, 5, 17] {
            assert_eq!(
                psi_stated(1, p, 3, &RateFunction::PowerOfTwo, 64),
                PsiValue::from_u64(p)
            );
        }
    }

    #[test]
    fn stated_recursion_identity_rate() {
        // r = 1, phi = id: one step doubles
        assert_eq!(
            psi_stated(2, 3, 1, &RateFunction::Identity, 64),
            PsiValue::from_u64(6)
        );
    }

    #[test]
    fn stated_recursion_power_of_two() {
        // r = 1, phi(x) = 2^x: psi(3, 1) = 2 * 2^(2 * 2^1) = 32
        assert_eq!(
            psi_stated(3, 1, 1, &RateFunction::PowerOfTwo, 64),
            PsiValue::from_u64(32)
        );
    }

    #[test]
    fn conservative_recursion_tracks_loop_bookkeeping() {
        // phi = id, r = 1: psi'(s, p) = 2^(s-1) * p
        assert_eq!(
            psi_conservative(3, 3, 1, &RateFunction::Identity, 64),
            PsiValue::from_u64(12)
        );
        // phi(x) = 2^x, r = 1: psi'(1, 2) = 4, psi'(2, 2) = 2^8 = 256
        assert_eq!(
            psi_conservative(2, 2, 1, &RateFunction::PowerOfTwo, 64),
            PsiValue::from_u64(256)
        );
    }

    #[test]
    fn saturation_kicks_in() {
        let v = psi_conservative(16, 4, 3, &RateFunction::PowerOfTwo, 128);
        assert_eq!(v, PsiValue::AtLeast { bits: 128 });
        assert!(v.at_least(&BigUint::from(u64::MAX)));
        assert_eq!(v.to_string_canonical(), ">=2^128");
    }

    #[test]
    fn equitable_rate_formulas() {
        // counting variant, eps = 1/2, k = 1, p = 1: (4+1) * 2 = 10
        let count = RateFunction::EquitableCount { eps: rat(1, 2), k: 1 };
        assert_eq!(count.eval(1), PsiValue::from_u64(10));
        // exact-cut variant, eps = 1/2, k = 1, p = 1: (2+1) * 2 = 6
        let cube = RateFunction::EquitableCube { eps: rat(1, 2), k: 1 };
        assert_eq!(cube.eval(1), PsiValue::from_u64(6));
    }

    #[test]
    fn rates_are_increasing() {
        let eps = rat(1, 3);
        let rates = vec![
            RateFunction::Identity,
            RateFunction::PowerOfTwo,
            RateFunction::ProductAtoms { k: 2 },
            RateFunction::KPartiteAtoms { k: 3 },
            RateFunction::IntervalAtoms { k: 2 },
            RateFunction::EquitableCount { eps: eps.clone(), k: 2 },
            RateFunction::EquitableCube { eps: eps.clone(), k: 2 },
            RateFunction::EquitableKPartite { eps: eps.clone(), k: 2 },
            RateFunction::EquitableInterval { eps, k: 2 },
        ];
        for rate in rates {
            let mut prev = BigUint::zero();
            for p in 1..6u64 {
                match rate.eval(p) {
                    PsiValue::Exact(v) => {
                        assert!(v > prev, "{} not increasing at p={p}", rate.describe());
                        prev = v;
                    }
                    PsiValue::AtLeast { .. } => break,
                }
            }
        }
    }
}
