//! Finite measure triples with exact rational atom weights.
//!
//! A ground set is a block of atoms `0..size`; the measurable algebra is its
//! full power set; the measure is a finitely additive probability measure
//! given by one nonnegative rational weight per atom, summing to exactly 1.
//! Alongside the rational weights each triple caches integer numerators over
//! a common denominator, which is what the hot enumeration paths work with.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::Rat;

/// Default cap on ground-set size. Keeps exhaustive set arithmetic bounded.
pub const DEFAULT_ATOM_CAP: usize = 1 << 20;

/// A measurable set: a sorted, deduplicated list of atom indices.
///
/// All set algebra is closed and exact. Two sets may only be combined when
/// they live over the same ground size.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MSet {
    atoms: Vec<u32>,
    ground: u32,
}

impl MSet {
    /// Build a set from arbitrary indices; sorts, deduplicates, range-checks.
    pub fn new(mut atoms: Vec<u32>, ground: u32) -> Result<Self> {
        atoms.sort_unstable();
        atoms.dedup();
        if let Some(&max) = atoms.last() {
            if max >= ground {
                return Err(Error::Structural(format!(
                    "atom index {max} out of range for ground of size {ground}"
                )));
            }
        }
        Ok(MSet { atoms, ground })
    }

    pub fn empty(ground: u32) -> Self {
        MSet { atoms: Vec::new(), ground }
    }

    pub fn full(ground: u32) -> Self {
        MSet { atoms: (0..ground).collect(), ground }
    }

    /// Contiguous range `[lo, hi)`.
    pub fn range(lo: u32, hi: u32, ground: u32) -> Result<Self> {
        if lo > hi || hi > ground {
            return Err(Error::Structural(format!(
                "range [{lo},{hi}) invalid over ground of size {ground}"
            )));
        }
        Ok(MSet { atoms: (lo..hi).collect(), ground })
    }

    pub fn ground(&self) -> u32 {
        self.ground
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[u32] {
        &self.atoms
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.atoms.iter().copied()
    }

    pub fn contains(&self, atom: u32) -> bool {
        self.atoms.binary_search(&atom).is_ok()
    }

    fn check_ground(&self, other: &MSet) {
        assert_eq!(
            self.ground, other.ground,
            "set operation across different ground sets"
        );
    }

    pub fn union(&self, other: &MSet) -> MSet {
        self.check_ground(other);
        let mut atoms = Vec::with_capacity(self.atoms.len() + other.atoms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.atoms.len() && j < other.atoms.len() {
            match self.atoms[i].cmp(&other.atoms[j]) {
                std::cmp::Ordering::Less => {
                    atoms.push(self.atoms[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    atoms.push(other.atoms[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    atoms.push(self.atoms[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        atoms.extend_from_slice(&self.atoms[i..]);
        atoms.extend_from_slice(&other.atoms[j..]);
        MSet { atoms, ground: self.ground }
    }

    pub fn intersect(&self, other: &MSet) -> MSet {
        self.check_ground(other);
        let (short, long) = if self.atoms.len() <= other.atoms.len() {
            (self, other)
        } else {
            (other, self)
        };
        let atoms = short
            .atoms
            .iter()
            .copied()
            .filter(|a| long.contains(*a))
            .collect();
        MSet { atoms, ground: self.ground }
    }

    pub fn difference(&self, other: &MSet) -> MSet {
        self.check_ground(other);
        let atoms = self
            .atoms
            .iter()
            .copied()
            .filter(|a| !other.contains(*a))
            .collect();
        MSet { atoms, ground: self.ground }
    }

    pub fn complement(&self) -> MSet {
        let mut atoms = Vec::with_capacity(self.ground as usize - self.atoms.len());
        let mut next = 0usize;
        for a in 0..self.ground {
            if next < self.atoms.len() && self.atoms[next] == a {
                next += 1;
            } else {
                atoms.push(a);
            }
        }
        MSet { atoms, ground: self.ground }
    }

    pub fn is_subset(&self, other: &MSet) -> bool {
        self.check_ground(other);
        self.atoms.iter().all(|a| other.contains(*a))
    }

    pub fn is_disjoint(&self, other: &MSet) -> bool {
        self.check_ground(other);
        let (short, long) = if self.atoms.len() <= other.atoms.len() {
            (self, other)
        } else {
            (other, self)
        };
        !short.atoms.iter().any(|a| long.contains(*a))
    }
}

/// A finite measure triple: ground set, power-set algebra, probability
/// measure with exact rational atom weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasureTriple {
    weights: Vec<Rat>,
    /// Integer numerators of the weights over `denom`; they sum to `denom`.
    scaled: Vec<BigUint>,
    denom: BigUint,
    uniform: bool,
}

impl MeasureTriple {
    /// Uniform measure: every atom weighs `1/size`.
    pub fn uniform(size: u32) -> Result<Self> {
        Self::uniform_capped(size, DEFAULT_ATOM_CAP)
    }

    /// Uniform measure with an explicit ground-size cap.
    pub fn uniform_capped(size: u32, cap: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Precondition("ground set must be nonempty".into()));
        }
        if size as usize > cap {
            return Err(Error::Precondition(format!(
                "ground size {size} exceeds the cap of {cap} atoms"
            )));
        }
        let denom = BigUint::from(size);
        Ok(MeasureTriple {
            weights: vec![Rat::new(1.into(), size.into()); size as usize],
            scaled: vec![BigUint::one(); size as usize],
            denom,
            uniform: true,
        })
    }

    /// Weighted measure; weights must be nonnegative and sum to exactly 1.
    pub fn weighted(weights: Vec<Rat>) -> Result<Self> {
        Self::weighted_capped(weights, DEFAULT_ATOM_CAP)
    }

    pub fn weighted_capped(weights: Vec<Rat>, cap: usize) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Precondition("ground set must be nonempty".into()));
        }
        if weights.len() > cap {
            return Err(Error::Precondition(format!(
                "ground size {} exceeds the cap of {cap} atoms",
                weights.len()
            )));
        }
        if weights.iter().any(|w| w < &Rat::zero()) {
            return Err(Error::Precondition("negative atom weight".into()));
        }
        let total: Rat = weights.iter().sum();
        if !total.is_one() {
            return Err(Error::Precondition(format!(
                "atom weights must sum to exactly 1, got {}",
                crate::rational::format_rat(&total)
            )));
        }
        let denom = weights
            .iter()
            .fold(BigUint::one(), |acc, w| acc.lcm(w.denom().magnitude()));
        let scaled: Vec<BigUint> = weights
            .iter()
            .map(|w| w.numer().magnitude() * (&denom / w.denom().magnitude()))
            .collect();
        let uniform = weights.windows(2).all(|w| w[0] == w[1]);
        Ok(MeasureTriple { weights, scaled, denom, uniform })
    }

    /// `k`-fold product measure over the row-major product ground set.
    pub fn product(&self, k: u32) -> Result<MeasureTriple> {
        self.product_capped(k, DEFAULT_ATOM_CAP)
    }

    pub fn product_capped(&self, k: u32, cap: usize) -> Result<MeasureTriple> {
        if k == 0 {
            return Err(Error::Precondition("product arity must be positive".into()));
        }
        let mut weights = vec![Rat::one()];
        for _ in 0..k {
            if weights.len().saturating_mul(self.size() as usize) > cap {
                return Err(Error::Precondition(format!(
                    "product ground size exceeds the cap of {cap} atoms"
                )));
            }
            let mut next = Vec::with_capacity(weights.len() * self.size() as usize);
            for w in &weights {
                for v in &self.weights {
                    next.push(w * v);
                }
            }
            weights = next;
        }
        MeasureTriple::weighted_capped(weights, cap)
    }

    pub fn size(&self) -> u32 {
        self.weights.len() as u32
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    pub fn weight(&self, atom: u32) -> &Rat {
        &self.weights[atom as usize]
    }

    /// Common denominator of all atom weights.
    pub fn scale_denom(&self) -> &BigUint {
        &self.denom
    }

    /// Integer numerator of an atom weight over [`Self::scale_denom`].
    pub fn scaled_weight(&self, atom: u32) -> &BigUint {
        &self.scaled[atom as usize]
    }

    fn check_set(&self, a: &MSet) -> Result<()> {
        if a.ground() != self.size() {
            return Err(Error::Structural(format!(
                "set over ground of size {} used with a triple of size {}",
                a.ground(),
                self.size()
            )));
        }
        Ok(())
    }

    /// Exact measure of a set: the sum of its atom weights.
    pub fn measure(&self, a: &MSet) -> Result<Rat> {
        Ok(Rat::new(self.measure_scaled(a)?.into(), self.denom.clone().into()))
    }

    /// Integer numerator of `measure(a)` over [`Self::scale_denom`].
    pub fn measure_scaled(&self, a: &MSet) -> Result<BigUint> {
        self.check_set(a)?;
        Ok(a.iter().map(|x| &self.scaled[x as usize]).sum())
    }

    /// Density `d(a, v) = measure(a ∩ v) / measure(v)`, with the convention
    /// that it is exactly 0 whenever `measure(v) = 0`.
    pub fn density(&self, a: &MSet, v: &MSet) -> Result<Rat> {
        self.check_set(a)?;
        self.check_set(v)?;
        let mv = self.measure_scaled(v)?;
        if mv.is_zero() {
            return Ok(Rat::zero());
        }
        let mav = self.measure_scaled(&a.intersect(v))?;
        Ok(Rat::new(mav.into(), mv.into()))
    }
}
