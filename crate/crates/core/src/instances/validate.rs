//! Independent validation of the decomposition theorems' conditions.
//!
//! This module deliberately recomputes everything from raw data — class
//! sizes, block atom lists, per-tuple verdicts — with its own arithmetic,
//! so that a bookkeeping bug in the engine cannot silently validate itself.

use num_bigint::BigUint;

use crate::rational::Rat;

/// What a per-set count is taken over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountKind {
    /// Ordered tuples of distinct class indices; threshold `(1-eps) q^k`.
    DistinctTuples,
    /// All ordered tuples of class indices; threshold `(1-eps) q^k`.
    AllTuples,
    /// Unordered sets of distinct indices, every ordering regular;
    /// threshold `(1-eps) C(q,k)`.
    UnorderedSets,
}

/// Size conditions for one vertex class.
#[derive(Clone, Debug)]
pub struct ClassCondition {
    pub class_index: usize,
    pub q: u64,
    /// Distinct non-exceptional block sizes observed (must be a singleton).
    pub block_sizes: Vec<u64>,
    pub equal_sizes: bool,
    /// Every non-exceptional block strictly below `eps * n`.
    pub sizes_below_eps_n: bool,
    pub exceptional_size: u64,
    /// Merged exceptional class strictly below `eps * n`.
    pub exceptional_below_eps_n: bool,
}

impl ClassCondition {
    pub fn ok(&self) -> bool {
        self.equal_sizes && self.sizes_below_eps_n && self.exceptional_below_eps_n
    }
}

/// Count condition for one input set.
#[derive(Clone, Debug)]
pub struct CountCondition {
    pub id: String,
    pub kind: CountKind,
    pub regular: u64,
    pub enumerated: u64,
    /// The comparison baseline: `q^k` for tuple counts, `C(q,k)` for
    /// unordered sets.
    pub baseline: u64,
    pub ok: bool,
}

/// The assembled verdict.
#[derive(Clone, Debug)]
pub struct TheoremConditions {
    pub classes: Vec<ClassCondition>,
    pub counts: Vec<CountCondition>,
    pub validated: bool,
}

/// `count >= (1 - eps) * baseline`, exactly.
fn count_threshold_ok(count: u64, baseline: &BigUint, eps: &Rat) -> bool {
    let en = eps.numer().magnitude();
    let ed = eps.denom().magnitude();
    BigUint::from(count) * ed >= (ed - en) * baseline
}

fn falling_factorial(q: u64, k: u32) -> BigUint {
    let mut acc = BigUint::from(1u32);
    for j in 0..k as u64 {
        acc *= BigUint::from(q.saturating_sub(j));
    }
    acc
}

fn binomial(q: u64, k: u32) -> BigUint {
    let mut num = falling_factorial(q, k);
    for j in 1..=k as u64 {
        num /= BigUint::from(j);
    }
    num
}

/// Recompute the theorem conditions from raw sizes and verdicts.
///
/// `classes` holds, per vertex class: the ground size `n`, the sizes of the
/// non-exceptional blocks, and the total size of the exceptional part.
/// `counts` holds, per input set, the number of regular tuples (or unordered
/// sets) the caller counted, the number it enumerated, and the kind.
pub fn validate_conditions(
    eps: &Rat,
    q: u64,
    k: u32,
    classes: &[(u64, Vec<u64>, u64)],
    counts: &[(String, u64, u64, CountKind)],
) -> TheoremConditions {
    let en = eps.numer().magnitude();
    let ed = eps.denom().magnitude();
    let class_conditions: Vec<ClassCondition> = classes
        .iter()
        .enumerate()
        .map(|(i, (n, sizes, exceptional))| {
            let mut distinct: Vec<u64> = sizes.clone();
            distinct.sort_unstable();
            distinct.dedup();
            // strict: size * ed < en * n
            let below = |s: u64| BigUint::from(s) * ed < en * BigUint::from(*n);
            ClassCondition {
                class_index: i,
                q: sizes.len() as u64,
                equal_sizes: distinct.len() <= 1,
                sizes_below_eps_n: sizes.iter().all(|&s| below(s)),
                exceptional_size: *exceptional,
                exceptional_below_eps_n: below(*exceptional),
                block_sizes: distinct,
            }
        })
        .collect();

    let count_conditions: Vec<CountCondition> = counts
        .iter()
        .map(|(id, regular, enumerated, kind)| {
            let baseline = match kind {
                CountKind::DistinctTuples | CountKind::AllTuples => {
                    num_traits::Pow::pow(&BigUint::from(q), k)
                }
                CountKind::UnorderedSets => binomial(q, k),
            };
            let ok = count_threshold_ok(*regular, &baseline, eps);
            CountCondition {
                id: id.clone(),
                kind: *kind,
                regular: *regular,
                enumerated: *enumerated,
                baseline: baseline.try_into().unwrap_or(u64::MAX),
                ok,
            }
        })
        .collect();

    let validated = class_conditions.iter().all(ClassCondition::ok)
        && count_conditions.iter().all(|c| c.ok)
        && class_conditions.iter().all(|c| c.q == q);
    TheoremConditions { classes: class_conditions, counts: count_conditions, validated }
}
