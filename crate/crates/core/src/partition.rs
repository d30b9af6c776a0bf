//! Partitions of the ground set into semi-ring cells.
//!
//! Everything downstream — energies, refinement chains, bounding families,
//! equitable constructions — operates on these. Cells are kept in canonical
//! order (the derived cell order) so refinement checks, reports and diffs are
//! deterministic. An optional per-cell flag marks the exceptional class of
//! equitable partitions; flags never influence set-level semantics.

use num_bigint::BigUint;
use num_traits::Zero;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::measure::{MSet, MeasureTriple};
use crate::rate::RateFunction;
use crate::rational::{Rat, require_unit_interval};
use crate::semiring::{Cell, SemiRing};

/// A finite partition of the ground set into nonempty semi-ring cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    semiring: SemiRing,
    cells: Vec<Cell>,
    atoms: Vec<MSet>,
    exceptional: Vec<bool>,
}

impl Partition {
    /// Build and validate a partition; cells are sorted canonically.
    pub fn new(semiring: SemiRing, cells: Vec<Cell>) -> Result<Self> {
        let flagged = cells.into_iter().map(|c| (c, false)).collect();
        Self::with_flags(semiring, flagged)
    }

    /// Build with explicit exceptional flags.
    pub fn with_flags(semiring: SemiRing, cells: Vec<(Cell, bool)>) -> Result<Self> {
        let ground = semiring.ground_size();
        if ground > u32::MAX as u64 {
            return Err(Error::Structural("ground set too large".into()));
        }
        let ground = ground as u32;
        let mut flagged = cells;
        flagged.sort_by(|a, b| a.0.cmp(&b.0));
        let mut atom_sets = Vec::with_capacity(flagged.len());
        let mut seen = vec![false; ground as usize];
        let mut covered = 0u64;
        for (cell, _) in &flagged {
            semiring.validate_cell(cell)?;
            let atoms = semiring.cell_atoms(cell);
            for x in atoms.iter() {
                if seen[x as usize] {
                    return Err(Error::Structural(format!(
                        "cells overlap at atom {x}"
                    )));
                }
                seen[x as usize] = true;
                covered += 1;
            }
            atom_sets.push(atoms);
        }
        if covered != ground as u64 {
            return Err(Error::Structural(format!(
                "cells cover {covered} of {ground} atoms"
            )));
        }
        let (cells, exceptional): (Vec<Cell>, Vec<bool>) = flagged.into_iter().unzip();
        Ok(Partition { semiring, cells, atoms: atom_sets, exceptional })
    }

    /// The one-cell partition of the whole ground set.
    pub fn trivial(semiring: SemiRing) -> Result<Self> {
        let cell = full_cell(&semiring);
        Partition::new(semiring, vec![cell])
    }

    /// The all-singletons partition (base semi-rings only).
    pub fn singletons(semiring: SemiRing) -> Result<Self> {
        let ground = semiring.ground_size() as u32;
        let cells: Vec<Cell> = match &semiring {
            SemiRing::PowerSet { .. } => (0..ground)
                .map(|i| Cell::Set(MSet::new(vec![i], ground).expect("singleton")))
                .collect(),
            SemiRing::Interval { .. } => {
                (0..ground).map(|i| Cell::Interval { lo: i, hi: i + 1 }).collect()
            }
            SemiRing::Product { .. } => {
                return Err(Error::Structural(
                    "singleton partitions are built on base semi-rings".into(),
                ))
            }
        };
        Partition::new(semiring, cells)
    }

    pub fn semiring(&self) -> &SemiRing {
        &self.semiring
    }

    pub fn size(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, i: usize) -> &Cell {
        &self.cells[i]
    }

    /// Materialized atom set of cell `i`.
    pub fn atoms_of(&self, i: usize) -> &MSet {
        &self.atoms[i]
    }

    pub fn is_exceptional(&self, i: usize) -> bool {
        self.exceptional[i]
    }

    pub fn exceptional_flags(&self) -> &[bool] {
        &self.exceptional
    }

    pub fn ground_size(&self) -> u32 {
        self.semiring.ground_size() as u32
    }

    /// Total measure of the flagged exceptional cells.
    pub fn exceptional_measure(&self, t: &MeasureTriple) -> Result<Rat> {
        let mut total = Rat::zero();
        for (i, flag) in self.exceptional.iter().enumerate() {
            if *flag {
                total += t.measure(&self.atoms[i])?;
            }
        }
        Ok(total)
    }

    /// Map from ground atom to the index of the cell containing it.
    pub fn atom_to_cell(&self) -> Vec<u32> {
        let mut map = vec![0u32; self.ground_size() as usize];
        for (i, atoms) in self.atoms.iter().enumerate() {
            for x in atoms.iter() {
                map[x as usize] = i as u32;
            }
        }
        map
    }

    /// Does every cell of `coarser` split into cells of `self`?
    pub fn refines(&self, coarser: &Partition) -> Result<bool> {
        if self.ground_size() != coarser.ground_size() {
            return Err(Error::Structural(
                "refinement compares partitions of the same ground set".into(),
            ));
        }
        let owner = coarser.atom_to_cell();
        for atoms in &self.atoms {
            let first = atoms.atoms()[0];
            let target = &coarser.atoms[owner[first as usize] as usize];
            if !atoms.is_subset(target) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// All nonempty pairwise intersections, as a partition.
    pub fn common_refinement(&self, other: &Partition) -> Result<Partition> {
        if self.semiring != other.semiring {
            return Err(Error::Structural(
                "common refinement requires one shared semi-ring".into(),
            ));
        }
        let mut cells = Vec::new();
        for a in &self.cells {
            for b in &other.cells {
                if let Some(c) = self.semiring.intersect_cells(a, b) {
                    cells.push(c);
                }
            }
        }
        Partition::new(self.semiring.clone(), cells)
    }

    /// The `k`-fold product partition: all `k`-tuples of cells, as cells of
    /// the constrained product semi-ring over the same base.
    ///
    /// Distinct cells are disjoint and repeated cells coincide, so every
    /// tuple satisfies the coordinate constraint. A product cell is flagged
    /// exceptional when any coordinate is.
    pub fn product_power(&self, k: u32) -> Result<Partition> {
        if k == 0 {
            return Err(Error::Precondition("product arity must be positive".into()));
        }
        let semiring = SemiRing::power(self.semiring.clone(), k)?;
        let mut cells = Vec::new();
        let mut pick = vec![0usize; k as usize];
        loop {
            let coords: Vec<Cell> = pick.iter().map(|&i| self.cells[i].clone()).collect();
            let flag = pick.iter().any(|&i| self.exceptional[i]);
            cells.push((Cell::Product(coords), flag));
            let mut dim = k as usize;
            loop {
                if dim == 0 {
                    return Partition::with_flags(semiring, cells);
                }
                dim -= 1;
                pick[dim] += 1;
                if pick[dim] < self.cells.len() {
                    break;
                }
                pick[dim] = 0;
            }
        }
    }
}

/// Product of per-coordinate partitions over a box semi-ring.
pub fn box_product(parts: &[Partition], semiring: SemiRing) -> Result<Partition> {
    if parts.is_empty() {
        return Err(Error::Structural("box product of zero partitions".into()));
    }
    let mut cells: Vec<(Cell, bool)> = vec![(Cell::Product(Vec::new()), false)];
    for part in parts {
        let mut next = Vec::with_capacity(cells.len() * part.size());
        for (cell, flag) in &cells {
            let coords = cell.coords().expect("product under construction");
            for (i, c) in part.cells().iter().enumerate() {
                let mut extended = coords.to_vec();
                extended.push(c.clone());
                next.push((Cell::Product(extended), *flag || part.is_exceptional(i)));
            }
        }
        cells = next;
    }
    Partition::with_flags(semiring, cells)
}

fn full_cell(semiring: &SemiRing) -> Cell {
    match semiring {
        SemiRing::PowerSet { ground } => Cell::Set(MSet::full(*ground)),
        SemiRing::Interval { ground } => Cell::Interval { lo: 0, hi: *ground },
        SemiRing::Product { bases, .. } => {
            Cell::Product(bases.iter().map(full_cell).collect())
        }
    }
}

// ----------------------------------------------------------------------
// Energy of a partition with respect to a set.
// ----------------------------------------------------------------------

/// The index (energy) of a partition with respect to a set:
/// `sum over cells P of measure(P) * density(a, P)^2`.
///
/// Always within `[0, measure(a)]`, and monotone under refinement.
pub fn index(t: &MeasureTriple, a: &MSet, p: &Partition) -> Result<Rat> {
    if t.size() != p.ground_size() {
        return Err(Error::Structural(
            "partition and triple live over different ground sets".into(),
        ));
    }
    let denom = t.scale_denom();
    let mut total = Rat::zero();
    for atoms in &p.atoms {
        let w = t.measure_scaled(atoms)?;
        if w.is_zero() {
            continue;
        }
        let x = t.measure_scaled(&a.intersect(atoms))?;
        // mu(P) d^2(a,P) = x^2 / (w * denom) in scaled units
        total += Rat::new((&x * &x).into(), (w * denom).into());
    }
    Ok(total)
}

// ----------------------------------------------------------------------
// Atom families: the coarsest base partitions refining given cells.
// ----------------------------------------------------------------------

/// Partition the base ground so that every input cell is a union of parts.
///
/// Power-set bases group atoms by their membership signature across the
/// cells; interval bases cut at all endpoints. The result is a partition of
/// the full ground (atoms outside every cell form their own parts).
pub fn base_atom_family(base: &SemiRing, cells: &[Cell]) -> Result<Partition> {
    let ground = base.ground_size() as u32;
    match base {
        SemiRing::PowerSet { .. } => {
            let mut classes: BTreeMap<Vec<bool>, Vec<u32>> = BTreeMap::new();
            for atom in 0..ground {
                let sig: Vec<bool> = cells.iter().map(|c| base.cell_contains(c, atom)).collect();
                classes.entry(sig).or_default().push(atom);
            }
            let parts: Vec<Cell> = classes
                .into_values()
                .map(|atoms| Ok(Cell::Set(MSet::new(atoms, ground)?)))
                .collect::<Result<_>>()?;
            Partition::new(base.clone(), parts)
        }
        SemiRing::Interval { .. } => {
            let mut cuts = vec![0u32, ground];
            for c in cells {
                match c {
                    Cell::Interval { lo, hi } => {
                        cuts.push(*lo);
                        cuts.push(*hi);
                    }
                    _ => {
                        return Err(Error::Structural(
                            "interval atom family needs interval cells".into(),
                        ))
                    }
                }
            }
            cuts.sort_unstable();
            cuts.dedup();
            let parts: Vec<Cell> = cuts
                .windows(2)
                .filter(|w| w[0] < w[1])
                .map(|w| Cell::Interval { lo: w[0], hi: w[1] })
                .collect();
            Partition::new(base.clone(), parts)
        }
        SemiRing::Product { .. } => Err(Error::Structural(
            "atom families are built over base semi-rings".into(),
        )),
    }
}

/// Atom family of all coordinate cells of a constrained product partition.
pub fn coordinate_atom_family(p: &Partition) -> Result<Partition> {
    match p.semiring() {
        SemiRing::Product { bases, disjoint_or_equal: true } => {
            let mut coords = Vec::new();
            for cell in p.cells() {
                coords.extend(cell.coords().expect("product cell").iter().cloned());
            }
            base_atom_family(&bases[0], &coords)
        }
        _ => Err(Error::Structural(
            "coordinate atom family applies to constrained product partitions".into(),
        )),
    }
}

/// Per-coordinate atom families of a box-product partition.
pub fn slot_atom_families(p: &Partition) -> Result<Vec<Partition>> {
    match p.semiring() {
        SemiRing::Product { bases, disjoint_or_equal: false } => {
            let mut out = Vec::with_capacity(bases.len());
            for (slot, base) in bases.iter().enumerate() {
                let coords: Vec<Cell> = p
                    .cells()
                    .iter()
                    .map(|c| c.coords().expect("product cell")[slot].clone())
                    .collect();
                out.push(base_atom_family(base, &coords)?);
            }
            Ok(out)
        }
        _ => Err(Error::Structural(
            "slot atom families apply to box-product partitions".into(),
        )),
    }
}

/// Re-coarsen a product partition into the product family: build the atom
/// family of its coordinates and return that family's product partition,
/// together with the rate the construction guarantees.
pub fn bound_by_product_family(p: &Partition) -> Result<(Partition, RateFunction)> {
    match p.semiring() {
        SemiRing::Product { bases, disjoint_or_equal: true } => {
            let k = bases.len() as u32;
            let family = coordinate_atom_family(p)?;
            let rate = match &bases[0] {
                SemiRing::PowerSet { .. } => RateFunction::ProductAtoms { k },
                SemiRing::Interval { .. } => RateFunction::IntervalAtoms { k },
                SemiRing::Product { .. } => {
                    return Err(Error::Structural("nested products are unsupported".into()))
                }
            };
            Ok((family.product_power(k)?, rate))
        }
        SemiRing::Product { bases, disjoint_or_equal: false } => {
            let k = bases.len() as u32;
            let families = slot_atom_families(p)?;
            let bounded = box_product(&families, p.semiring().clone())?;
            Ok((bounded, RateFunction::KPartiteAtoms { k }))
        }
        // base partitions bound themselves
        _ => Ok((p.clone(), RateFunction::Identity)),
    }
}

// ----------------------------------------------------------------------
// Equitable refinement.
// ----------------------------------------------------------------------

/// Which closed-form rate an equitable family is quoted at.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EquitableVariant {
    /// Counting-measure block construction.
    Count,
    /// Exact-measure cuts (non-atomic classes).
    Cube,
}

/// Closed-form rate of the equitable family for product arity `k`.
pub fn equitable_rate(eps: &Rat, k: u32, variant: EquitableVariant) -> Result<RateFunction> {
    require_unit_interval(eps, "eps")?;
    Ok(match variant {
        EquitableVariant::Count => RateFunction::EquitableCount { eps: eps.clone(), k },
        EquitableVariant::Cube => RateFunction::EquitableCube { eps: eps.clone(), k },
    })
}

/// Equitable refinement of a base partition under a uniform measure.
///
/// Splits every part into blocks of `floor(eps*n/r)` atoms plus a smaller
/// residual (flagged exceptional), unless `n < 2r/eps`, in which case the
/// singleton partition is returned. The output refines the input, all
/// non-exceptional cells have equal size at most `eps*n`, the flagged cells
/// carry total measure at most `eps`, and the cell count is at most
/// `(2/eps + 1) * r`.
pub fn equitable_refine(t: &MeasureTriple, r_parts: &Partition, eps: &Rat) -> Result<Partition> {
    equitable_refine_impl(t, r_parts, eps, false)
}

/// Like [`equitable_refine`] but forces block sizes strictly below `eps*n`,
/// shrinking the block by one in the single borderline case (`r = 1` with
/// `eps*n` an integer). The size bound is unchanged.
pub(crate) fn equitable_refine_strict(
    t: &MeasureTriple,
    r_parts: &Partition,
    eps: &Rat,
) -> Result<Partition> {
    equitable_refine_impl(t, r_parts, eps, true)
}

fn equitable_refine_impl(
    t: &MeasureTriple,
    r_parts: &Partition,
    eps: &Rat,
    strict: bool,
) -> Result<Partition> {
    require_unit_interval(eps, "eps")?;
    if !t.is_uniform() {
        return Err(Error::Precondition(
            "equitable refinement requires a uniform measure".into(),
        ));
    }
    if t.size() != r_parts.ground_size() {
        return Err(Error::Structural(
            "partition and triple live over different ground sets".into(),
        ));
    }
    let n = t.size() as u64;
    let en = eps.numer().magnitude().clone();
    let ed = eps.denom().magnitude().clone();
    // n > 1/eps, i.e. eps*n > 1
    if &en * BigUint::from(n) <= ed {
        return Err(Error::Precondition(format!(
            "ground size {n} must exceed 1/eps"
        )));
    }
    let r = r_parts.size() as u64;

    // n >= 2r/eps, i.e. eps*n >= 2r: block construction; otherwise singletons.
    let block_case = &en * BigUint::from(n) >= &ed * BigUint::from(2 * r);
    if !block_case {
        let singles = Partition::singletons(r_parts.semiring().clone())?;
        debug_assert!(singles.refines(r_parts).unwrap());
        return Ok(singles);
    }

    // b = floor(eps * n / r), at least 2 in this branch
    let mut b = ((&en * BigUint::from(n)) / (&ed * BigUint::from(r)))
        .try_into()
        .unwrap_or(u64::MAX);
    if strict {
        // drop equality with eps*n (possible only for r = 1, eps*n integral)
        if BigUint::from(b) * &ed >= &en * BigUint::from(n) {
            b -= 1;
        }
    }
    debug_assert!(b >= 1);

    let mut cells: Vec<(Cell, bool)> = Vec::new();
    for (i, cell) in r_parts.cells().iter().enumerate() {
        let inherited = r_parts.is_exceptional(i);
        for (chunk, residual) in chunk_cell(r_parts.semiring(), cell, b as usize)? {
            cells.push((chunk, residual || inherited));
        }
    }
    let out = Partition::with_flags(r_parts.semiring().clone(), cells)?;
    debug_assert!(out.refines(r_parts).unwrap());
    Ok(out)
}

/// Split a base cell into consecutive blocks of `block` atoms plus a smaller
/// residual, marked `true`.
fn chunk_cell(base: &SemiRing, cell: &Cell, block: usize) -> Result<Vec<(Cell, bool)>> {
    let ground = base.ground_size() as u32;
    match (base, cell) {
        (SemiRing::PowerSet { .. }, Cell::Set(s)) => {
            let atoms = s.atoms();
            let mut out = Vec::new();
            for chunk in atoms.chunks(block) {
                let residual = chunk.len() < block;
                out.push((Cell::Set(MSet::new(chunk.to_vec(), ground)?), residual));
            }
            Ok(out)
        }
        (SemiRing::Interval { .. }, Cell::Interval { lo, hi }) => {
            let mut out = Vec::new();
            let mut at = *lo;
            while at < *hi {
                let end = (at + block as u32).min(*hi);
                let residual = ((end - at) as usize) < block;
                out.push((Cell::Interval { lo: at, hi: end }, residual));
                at = end;
            }
            Ok(out)
        }
        _ => Err(Error::Structural(
            "equitable refinement applies to base partitions".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    fn mset(atoms: &[u32], ground: u32) -> MSet {
        MSet::new(atoms.to_vec(), ground).unwrap()
    }

    fn pset(atoms: &[u32], ground: u32) -> Cell {
        Cell::Set(mset(atoms, ground))
    }

    fn ps_partition(groups: &[&[u32]], ground: u32) -> Partition {
        Partition::new(
            SemiRing::PowerSet { ground },
            groups.iter().map(|g| pset(g, ground)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn refinement_examples() {
        let q = ps_partition(&[&[0, 1], &[2, 3]], 4);
        assert!(q.refines(&q).unwrap());
        let singles = Partition::singletons(SemiRing::PowerSet { ground: 4 }).unwrap();
        assert!(singles.refines(&q).unwrap());
        let crossed = ps_partition(&[&[0, 2], &[1, 3]], 4);
        assert!(!q.refines(&crossed).unwrap());
        assert!(!crossed.refines(&q).unwrap());
    }

    #[test]
    fn common_refinement_examples() {
        let p = ps_partition(&[&[0, 1], &[2, 3]], 4);
        assert_eq!(p.common_refinement(&p).unwrap(), p);
        let trivial = Partition::trivial(SemiRing::PowerSet { ground: 4 }).unwrap();
        assert_eq!(trivial.common_refinement(&p).unwrap(), p);
        let q = ps_partition(&[&[0, 2], &[1, 3]], 4);
        let meet = p.common_refinement(&q).unwrap();
        assert_eq!(meet.size(), 4);
        assert!(meet.refines(&p).unwrap());
        assert!(meet.refines(&q).unwrap());
    }

    #[test]
    fn product_power_sizes() {
        let one = Partition::trivial(SemiRing::PowerSet { ground: 3 }).unwrap();
        assert_eq!(one.product_power(2).unwrap().size(), 1);
        let two = ps_partition(&[&[0, 1], &[2]], 3);
        assert_eq!(two.product_power(2).unwrap().size(), 4);
        let p = ps_partition(&[&[0], &[1, 2]], 3);
        let sq = p.product_power(2).unwrap();
        let mut expected = vec![
            Cell::Product(vec![pset(&[0], 3), pset(&[0], 3)]),
            Cell::Product(vec![pset(&[0], 3), pset(&[1, 2], 3)]),
            Cell::Product(vec![pset(&[1, 2], 3), pset(&[0], 3)]),
            Cell::Product(vec![pset(&[1, 2], 3), pset(&[1, 2], 3)]),
        ];
        expected.sort();
        assert_eq!(sq.cells(), expected.as_slice());
    }

    #[test]
    fn index_examples() {
        let t = MeasureTriple::uniform(4).unwrap();
        let p = ps_partition(&[&[0, 1], &[2, 3]], 4);
        assert_eq!(index(&t, &MSet::full(4), &p).unwrap(), rat_int(1));
        assert_eq!(index(&t, &MSet::empty(4), &p).unwrap(), rat_int(0));
        assert_eq!(index(&t, &mset(&[0, 1], 4), &p).unwrap(), rat(1, 2));
    }

    #[test]
    fn product_family_bound_example() {
        // three box cells over {0,1}^2 whose coordinate families are {0},{1}
        // ({1}x{0,1} is a box but not a constrained product cell)
        let base = SemiRing::PowerSet { ground: 2 };
        let sr = SemiRing::product_of(vec![base; 2], false).unwrap();
        let p = Partition::new(
            sr,
            vec![
                Cell::Product(vec![pset(&[0], 2), pset(&[0], 2)]),
                Cell::Product(vec![pset(&[0], 2), pset(&[1], 2)]),
                Cell::Product(vec![pset(&[1], 2), pset(&[0, 1], 2)]),
            ],
        )
        .unwrap();
        let (bounded, rate) = bound_by_product_family(&p).unwrap();
        assert_eq!(bounded.size(), 4);
        assert!(bounded.refines(&p).unwrap());
        assert_eq!(rate, RateFunction::KPartiteAtoms { k: 2 });
        // the result respects the emitted rate
        assert!(rate.eval(p.size() as u64).at_least(&(bounded.size() as u64).into()));
        // trivial constrained product partition collapses to itself
        let sr2 = SemiRing::power(SemiRing::PowerSet { ground: 2 }, 2).unwrap();
        let trivial = Partition::trivial(sr2).unwrap();
        let (b2, rate2) = bound_by_product_family(&trivial).unwrap();
        assert_eq!(b2.size(), 1);
        assert_eq!(rate2, RateFunction::ProductAtoms { k: 2 });
        // a genuinely constrained partition: {0}^2, {0}x{1}, {1}x{0}, {1}^2
        let split = ps_partition(&[&[0], &[1]], 2).product_power(2).unwrap();
        let (b3, _) = bound_by_product_family(&split).unwrap();
        assert_eq!(b3.size(), 4);
        assert!(b3.refines(&split).unwrap());
    }

    #[test]
    fn equitable_refine_block_case() {
        // n=10, eps=1/2, parts {0..6} and {7..9}: blocks of 2, residuals {6},{9}
        let t = MeasureTriple::uniform(10).unwrap();
        let r = ps_partition(&[&[0, 1, 2, 3, 4, 5, 6], &[7, 8, 9]], 10);
        let q = equitable_refine(&t, &r, &rat(1, 2)).unwrap();
        assert!(q.refines(&r).unwrap());
        let mut residuals = Vec::new();
        let mut block_sizes = Vec::new();
        for i in 0..q.size() {
            if q.is_exceptional(i) {
                residuals.push(q.atoms_of(i).atoms().to_vec());
            } else {
                block_sizes.push(q.atoms_of(i).len());
            }
        }
        assert!(block_sizes.iter().all(|&s| s == 2));
        assert_eq!(block_sizes.len(), 4);
        assert_eq!(residuals, vec![vec![6], vec![9]]);
        assert_eq!(q.exceptional_measure(&t).unwrap(), rat(2, 10));
        // within (2/eps + 1) * r = 10
        assert!(q.size() <= 10);
    }

    #[test]
    fn equitable_refine_singleton_case() {
        // n=4, eps=1/2, r=4: n < 2r/eps = 16, so singletons
        let t = MeasureTriple::uniform(4).unwrap();
        let r = ps_partition(&[&[0], &[1], &[2], &[3]], 4);
        let q = equitable_refine(&t, &r, &rat(1, 2)).unwrap();
        assert_eq!(q.size(), 4);
        assert!(q.exceptional_flags().iter().all(|f| !f));
    }

    #[test]
    fn equitable_refine_exact_division() {
        // whole ground, eps=1/2, n=10: blocks of 5, no residual
        let t = MeasureTriple::uniform(10).unwrap();
        let r = Partition::trivial(SemiRing::PowerSet { ground: 10 }).unwrap();
        let q = equitable_refine(&t, &r, &rat(1, 2)).unwrap();
        assert_eq!(q.size(), 2);
        assert!(q.exceptional_flags().iter().all(|f| !f));
        assert!(q.cells().iter().all(|c| match c {
            Cell::Set(s) => s.len() == 5,
            _ => false,
        }));
        assert_eq!(q.exceptional_measure(&t).unwrap(), rat_int(0));
    }

    #[test]
    fn strict_variant_shrinks_borderline_blocks() {
        let t = MeasureTriple::uniform(10).unwrap();
        let r = Partition::trivial(SemiRing::PowerSet { ground: 10 }).unwrap();
        let q = equitable_refine_strict(&t, &r, &rat(1, 2)).unwrap();
        // blocks of 4 with residual {8,9}: every block strictly below eps*n=5
        for i in 0..q.size() {
            if !q.is_exceptional(i) {
                assert!(q.atoms_of(i).len() < 5);
            }
        }
        assert!(q.refines(&r).unwrap());
    }

    #[test]
    fn equitable_refine_on_intervals() {
        let t = MeasureTriple::uniform(12).unwrap();
        let sr = SemiRing::Interval { ground: 12 };
        let r = Partition::new(
            sr,
            vec![Cell::Interval { lo: 0, hi: 7 }, Cell::Interval { lo: 7, hi: 12 }],
        )
        .unwrap();
        let q = equitable_refine(&t, &r, &rat(1, 2)).unwrap();
        assert!(q.refines(&r).unwrap());
        // blocks of floor(6/2)=3: [0,3),[3,6) + residual [6,7); [7,10) + residual [10,12)
        let sizes: Vec<(usize, bool)> = (0..q.size())
            .map(|i| (q.atoms_of(i).len(), q.is_exceptional(i)))
            .collect();
        assert_eq!(
            sizes,
            vec![(3, false), (3, false), (1, true), (3, false), (2, true)]
        );
    }

    #[test]
    fn product_power_respects_coarsening() {
        // p refines p' implies p^k refines p'^k
        let fine = ps_partition(&[&[0], &[1], &[2, 3]], 4);
        let coarse = ps_partition(&[&[0, 1], &[2, 3]], 4);
        assert!(fine.refines(&coarse).unwrap());
        let fine2 = fine.product_power(2).unwrap();
        let coarse2 = coarse.product_power(2).unwrap();
        assert!(fine2.refines(&coarse2).unwrap());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_partition(ground: u32) -> impl Strategy<Value = Partition> {
            proptest::collection::vec(0u32..4, ground as usize).prop_map(move |assign| {
                let mut groups: Vec<Vec<u32>> = vec![Vec::new(); 4];
                for (atom, g) in assign.iter().enumerate() {
                    groups[*g as usize].push(atom as u32);
                }
                let cells: Vec<Cell> = groups
                    .into_iter()
                    .filter(|g| !g.is_empty())
                    .map(|g| Cell::Set(MSet::new(g, ground).unwrap()))
                    .collect();
                Partition::new(SemiRing::PowerSet { ground }, cells).unwrap()
            })
        }

        proptest! {
            #[test]
            fn common_refinement_refines_both(p in arb_partition(9), q in arb_partition(9)) {
                let meet = p.common_refinement(&q).unwrap();
                prop_assert!(meet.refines(&p).unwrap());
                prop_assert!(meet.refines(&q).unwrap());
            }

            #[test]
            fn refinement_is_transitive_and_antisymmetric(
                p in arb_partition(9),
                q in arb_partition(9),
            ) {
                let meet = p.common_refinement(&q).unwrap();
                // transitivity along the chain meet > p > trivial
                let trivial = Partition::trivial(SemiRing::PowerSet { ground: 9 }).unwrap();
                prop_assert!(p.refines(&trivial).unwrap());
                prop_assert!(meet.refines(&trivial).unwrap());
                // mutual refinement means equality (cells are canonical)
                if p.refines(&q).unwrap() && q.refines(&p).unwrap() {
                    prop_assert_eq!(p.cells(), q.cells());
                }
            }
        }
    }

    #[test]
    fn partition_validation_rejects_bad_inputs() {
        let sr = SemiRing::PowerSet { ground: 4 };
        // overlap
        assert!(Partition::new(
            sr.clone(),
            vec![pset(&[0, 1], 4), pset(&[1, 2, 3], 4)]
        )
        .is_err());
        // gap
        assert!(Partition::new(sr, vec![pset(&[0, 1], 4), pset(&[2], 4)]).is_err());
    }
}
