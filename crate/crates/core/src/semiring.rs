//! Boundedly built semi-rings of sets.
//!
//! A semi-ring here is a family of subsets of the ground set that is closed
//! under intersection and whose pairwise differences decompose into finitely
//! many disjoint members; it is `r`-built when `r` pieces always suffice.
//! Three constructions are provided:
//!
//! * the power set of the atoms (`r = 1`),
//! * half-open index intervals `[lo, hi)` (`r = 2`),
//! * products of `k` base cells, either over `k` independent coordinate
//!   universes (boxes, no coordinate constraint) or over one shared universe
//!   with the *disjoint-or-equal* constraint: any two coordinate cells of a
//!   product must be disjoint or identical.
//!
//! Difference decomposition for constrained products goes through a common
//! refinement of the coordinate cells (the "atom family" of the pair), so
//! that every emitted box draws its coordinates from one family of pairwise
//! disjoint cells — which makes the constraint hold by construction.

use num_bigint::BigUint;
use num_traits::One;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::measure::{MSet, MeasureTriple};

/// Handle for one of the supported semi-ring constructions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SemiRing {
    /// All subsets of a ground set of `ground` atoms.
    PowerSet { ground: u32 },
    /// Half-open atom-index intervals `[lo, hi)` within `0..ground`.
    Interval { ground: u32 },
    /// Products of cells of the base semi-rings, one per coordinate.
    ///
    /// With `disjoint_or_equal` set, all bases must coincide and any two
    /// coordinates of a cell are required to be disjoint or identical.
    Product {
        bases: Vec<SemiRing>,
        disjoint_or_equal: bool,
    },
}

/// One member of a semi-ring.
///
/// The derived ordering (atom-list order for sets, endpoint order for
/// intervals, coordinate-wise for products) is the canonical cell order used
/// everywhere reports and partitions need determinism.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cell {
    Set(MSet),
    Interval { lo: u32, hi: u32 },
    Product(Vec<Cell>),
}

impl Cell {
    /// Human-readable rendering, e.g. `{0,2}x[4,6)`.
    pub fn display(&self) -> String {
        match self {
            Cell::Set(s) => {
                let inner: Vec<String> = s.iter().map(|a| a.to_string()).collect();
                format!("{{{}}}", inner.join(","))
            }
            Cell::Interval { lo, hi } => format!("[{lo},{hi})"),
            Cell::Product(coords) => coords
                .iter()
                .map(Cell::display)
                .collect::<Vec<_>>()
                .join("x"),
        }
    }

    pub fn coords(&self) -> Option<&[Cell]> {
        match self {
            Cell::Product(c) => Some(c),
            _ => None,
        }
    }
}

impl SemiRing {
    pub fn product_of(bases: Vec<SemiRing>, disjoint_or_equal: bool) -> Result<SemiRing> {
        if bases.is_empty() {
            return Err(Error::Structural("product of zero semi-rings".into()));
        }
        if disjoint_or_equal && bases.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::Structural(
                "disjoint-or-equal products require a single shared base".into(),
            ));
        }
        Ok(SemiRing::Product { bases, disjoint_or_equal })
    }

    /// Same-base product with the disjoint-or-equal coordinate constraint.
    pub fn power(base: SemiRing, k: u32) -> Result<SemiRing> {
        Self::product_of(vec![base; k as usize], true)
    }

    /// Number of atoms of the ground set this semi-ring lives over.
    pub fn ground_size(&self) -> u64 {
        match self {
            SemiRing::PowerSet { ground } | SemiRing::Interval { ground } => *ground as u64,
            SemiRing::Product { bases, .. } => {
                bases.iter().map(|b| b.ground_size()).product()
            }
        }
    }

    pub fn arity(&self) -> u32 {
        match self {
            SemiRing::Product { bases, .. } => bases.len() as u32,
            _ => 1,
        }
    }

    /// The `r` of "`r`-built": every difference of two cells decomposes into
    /// at most this many disjoint cells.
    ///
    /// For products the bound follows the decomposition actually implemented:
    /// boxes telescope coordinate by coordinate (`sum of base r`), while
    /// constrained products route through the coordinate atom family, where a
    /// coordinate contributes at most `k` intersection cells plus `r_base^k`
    /// difference pieces.
    pub fn declared_r(&self) -> u64 {
        match self {
            SemiRing::PowerSet { .. } => 1,
            SemiRing::Interval { .. } => 2,
            SemiRing::Product { bases, disjoint_or_equal: false } => {
                bases.iter().map(|b| b.declared_r()).sum()
            }
            SemiRing::Product { bases, disjoint_or_equal: true } => {
                let k = bases.len() as u32;
                let rb = bases[0].declared_r();
                (k as u64 + rb.pow(k)).pow(k) - 1
            }
        }
    }

    // ------------------------------------------------------------------
    // Ground-set encoding for product cells (row major).
    // ------------------------------------------------------------------

    fn coordinate_grounds(&self) -> Vec<u64> {
        match self {
            SemiRing::Product { bases, .. } => bases.iter().map(|b| b.ground_size()).collect(),
            _ => vec![self.ground_size()],
        }
    }

    /// Encode per-coordinate atom indices into a product-ground atom index.
    pub fn encode(&self, coords: &[u32]) -> u32 {
        let grounds = self.coordinate_grounds();
        assert_eq!(coords.len(), grounds.len());
        let mut idx: u64 = 0;
        for (c, g) in coords.iter().zip(&grounds) {
            idx = idx * g + *c as u64;
        }
        idx as u32
    }

    /// Decode a product-ground atom index into per-coordinate atom indices.
    pub fn decode(&self, atom: u32) -> Vec<u32> {
        let grounds = self.coordinate_grounds();
        let mut rest = atom as u64;
        let mut coords = vec![0u32; grounds.len()];
        for i in (0..grounds.len()).rev() {
            coords[i] = (rest % grounds[i]) as u32;
            rest /= grounds[i];
        }
        coords
    }

    // ------------------------------------------------------------------
    // Cell validity and point-set views.
    // ------------------------------------------------------------------

    /// Check that `cell` is a nonempty member of this semi-ring.
    pub fn validate_cell(&self, cell: &Cell) -> Result<()> {
        match (self, cell) {
            (SemiRing::PowerSet { ground }, Cell::Set(s)) => {
                if s.ground() != *ground {
                    return Err(Error::Structural(format!(
                        "cell ground {} does not match semi-ring ground {ground}",
                        s.ground()
                    )));
                }
                if s.is_empty() {
                    return Err(Error::Structural("empty cell".into()));
                }
                Ok(())
            }
            (SemiRing::Interval { ground }, Cell::Interval { lo, hi }) => {
                if lo >= hi || *hi > *ground {
                    return Err(Error::Structural(format!(
                        "interval [{lo},{hi}) invalid over ground of size {ground}"
                    )));
                }
                Ok(())
            }
            (SemiRing::Product { bases, disjoint_or_equal }, Cell::Product(coords)) => {
                if coords.len() != bases.len() {
                    return Err(Error::Structural(format!(
                        "product cell arity {} does not match semi-ring arity {}",
                        coords.len(),
                        bases.len()
                    )));
                }
                for (base, c) in bases.iter().zip(coords) {
                    base.validate_cell(c)?;
                }
                if *disjoint_or_equal {
                    let base = &bases[0];
                    for i in 0..coords.len() {
                        for j in i + 1..coords.len() {
                            let equal = coords[i] == coords[j];
                            let disjoint = base.intersect_cells(&coords[i], &coords[j]).is_none();
                            if !equal && !disjoint {
                                return Err(Error::Structural(format!(
                                    "coordinates {} and {} of {} are neither disjoint nor equal",
                                    i,
                                    j,
                                    cell.display()
                                )));
                            }
                        }
                    }
                }
                Ok(())
            }
            _ => Err(Error::Structural("cell kind does not match semi-ring kind".into())),
        }
    }

    /// Materialize a cell as a set of ground atoms.
    pub fn cell_atoms(&self, cell: &Cell) -> MSet {
        let ground = self.ground_size() as u32;
        match (self, cell) {
            (SemiRing::PowerSet { .. }, Cell::Set(s)) => s.clone(),
            (SemiRing::Interval { .. }, Cell::Interval { lo, hi }) => {
                MSet::range(*lo, *hi, ground).expect("validated interval")
            }
            (SemiRing::Product { bases, .. }, Cell::Product(coords)) => {
                // cartesian product of the coordinate atom lists, row major
                let per_coord: Vec<Vec<u32>> = bases
                    .iter()
                    .zip(coords)
                    .map(|(b, c)| b.cell_atoms(c).atoms().to_vec())
                    .collect();
                let mut acc: Vec<u64> = vec![0];
                for (dim, list) in per_coord.iter().enumerate() {
                    let g = bases[dim].ground_size();
                    let mut next = Vec::with_capacity(acc.len() * list.len());
                    for base_idx in &acc {
                        for a in list {
                            next.push(base_idx * g + *a as u64);
                        }
                    }
                    acc = next;
                }
                MSet::new(acc.into_iter().map(|x| x as u32).collect(), ground)
                    .expect("product atoms in range")
            }
            _ => unreachable!("cell kind validated against semi-ring kind"),
        }
    }

    /// Does the cell contain the given ground atom?
    pub fn cell_contains(&self, cell: &Cell, atom: u32) -> bool {
        match (self, cell) {
            (SemiRing::PowerSet { .. }, Cell::Set(s)) => s.contains(atom),
            (SemiRing::Interval { .. }, Cell::Interval { lo, hi }) => atom >= *lo && atom < *hi,
            (SemiRing::Product { bases, .. }, Cell::Product(coords)) => {
                let point = self.decode(atom);
                bases
                    .iter()
                    .zip(coords)
                    .zip(&point)
                    .all(|((b, c), p)| b.cell_contains(c, *p))
            }
            _ => unreachable!("cell kind validated against semi-ring kind"),
        }
    }

    /// Pointwise subset test between two cells of this semi-ring.
    pub fn cell_subset(&self, a: &Cell, b: &Cell) -> bool {
        match (self, a, b) {
            (SemiRing::PowerSet { .. }, Cell::Set(x), Cell::Set(y)) => x.is_subset(y),
            (SemiRing::Interval { .. }, Cell::Interval { lo: al, hi: ah }, Cell::Interval { lo: bl, hi: bh }) => {
                bl <= al && ah <= bh
            }
            (SemiRing::Product { bases, .. }, Cell::Product(xs), Cell::Product(ys)) => bases
                .iter()
                .zip(xs.iter().zip(ys))
                .all(|(base, (x, y))| base.cell_subset(x, y)),
            _ => unreachable!("cell kind validated against semi-ring kind"),
        }
    }

    /// Number of atoms in a cell, without materializing it.
    pub fn cell_point_count(&self, cell: &Cell) -> u64 {
        match (self, cell) {
            (SemiRing::PowerSet { .. }, Cell::Set(s)) => s.len() as u64,
            (SemiRing::Interval { .. }, Cell::Interval { lo, hi }) => (*hi - *lo) as u64,
            (SemiRing::Product { bases, .. }, Cell::Product(coords)) => bases
                .iter()
                .zip(coords)
                .map(|(b, c)| b.cell_point_count(c))
                .product(),
            _ => unreachable!("cell kind validated against semi-ring kind"),
        }
    }

    // ------------------------------------------------------------------
    // Semi-ring operations.
    // ------------------------------------------------------------------

    /// Intersection of two cells; `None` encodes the empty set.
    pub fn intersect_cells(&self, a: &Cell, b: &Cell) -> Option<Cell> {
        match (self, a, b) {
            (SemiRing::PowerSet { .. }, Cell::Set(x), Cell::Set(y)) => {
                let i = x.intersect(y);
                (!i.is_empty()).then_some(Cell::Set(i))
            }
            (SemiRing::Interval { .. }, Cell::Interval { lo: al, hi: ah }, Cell::Interval { lo: bl, hi: bh }) => {
                let lo = (*al).max(*bl);
                let hi = (*ah).min(*bh);
                (lo < hi).then_some(Cell::Interval { lo, hi })
            }
            (SemiRing::Product { bases, .. }, Cell::Product(xs), Cell::Product(ys)) => {
                let mut coords = Vec::with_capacity(xs.len());
                for (base, (x, y)) in bases.iter().zip(xs.iter().zip(ys)) {
                    coords.push(base.intersect_cells(x, y)?);
                }
                Some(Cell::Product(coords))
            }
            _ => unreachable!("cell kind validated against semi-ring kind"),
        }
    }

    /// Checked intersection: validates both inputs first.
    pub fn cell_intersect(&self, a: &Cell, b: &Cell) -> Result<Option<Cell>> {
        self.validate_cell(a)?;
        self.validate_cell(b)?;
        Ok(self.intersect_cells(a, b))
    }

    /// Decompose `a \ b` into pairwise disjoint cells of this semi-ring.
    ///
    /// Empty pieces are dropped; the piece count never exceeds
    /// [`Self::declared_r`]. For constrained products every emitted box keeps
    /// the disjoint-or-equal property.
    pub fn decompose_difference(&self, a: &Cell, b: &Cell) -> Result<Vec<Cell>> {
        self.validate_cell(a)?;
        self.validate_cell(b)?;
        Ok(self.difference_pieces(a, b))
    }

    fn difference_pieces(&self, a: &Cell, b: &Cell) -> Vec<Cell> {
        if self.intersect_cells(a, b).is_none() {
            return vec![a.clone()];
        }
        match (self, a, b) {
            (SemiRing::PowerSet { .. }, Cell::Set(x), Cell::Set(y)) => {
                let d = x.difference(y);
                if d.is_empty() { vec![] } else { vec![Cell::Set(d)] }
            }
            (SemiRing::Interval { .. }, Cell::Interval { lo: al, hi: ah }, Cell::Interval { lo: bl, hi: bh }) => {
                let mut out = Vec::new();
                if al < bl {
                    out.push(Cell::Interval { lo: *al, hi: (*bl).min(*ah) });
                }
                if bh < ah {
                    out.push(Cell::Interval { lo: (*bh).max(*al), hi: *ah });
                }
                out
            }
            (SemiRing::Product { bases, disjoint_or_equal: false }, Cell::Product(xs), Cell::Product(ys)) => {
                // Telescoping box difference: peel one coordinate at a time,
                // keeping the already-intersected prefix.
                let mut out = Vec::new();
                let mut prefix: Vec<Cell> = Vec::new();
                for (i, base) in bases.iter().enumerate() {
                    for piece in base.difference_pieces(&xs[i], &ys[i]) {
                        let mut coords = prefix.clone();
                        coords.push(piece);
                        coords.extend(xs[i + 1..].iter().cloned());
                        out.push(Cell::Product(coords));
                    }
                    match base.intersect_cells(&xs[i], &ys[i]) {
                        Some(c) => prefix.push(c),
                        // a and b are disjoint after all; handled above
                        None => return vec![a.clone()],
                    }
                }
                out
            }
            (SemiRing::Product { bases, disjoint_or_equal: true }, Cell::Product(xs), Cell::Product(ys)) => {
                let base = &bases[0];
                // Distinct coordinate cells of `a` (classes of the
                // disjoint-or-equal relation) and of `b`.
                let mut a_classes: Vec<Cell> = Vec::new();
                for x in xs {
                    if !a_classes.contains(x) {
                        a_classes.push(x.clone());
                    }
                }
                let mut b_classes: Vec<Cell> = Vec::new();
                for y in ys {
                    if !b_classes.contains(y) {
                        b_classes.push(y.clone());
                    }
                }
                // Refine each a-class against *all* b-classes at once, so
                // that coordinates drawn from the shared family are pairwise
                // disjoint or equal by construction. The b-classes are
                // pairwise disjoint where distinct, hence at most one
                // intersection region each plus the iterated remainder.
                let mut family: BTreeMap<Cell, Vec<Cell>> = BTreeMap::new();
                for class in &a_classes {
                    let mut cells: Vec<Cell> = Vec::new();
                    let mut remainder = vec![class.clone()];
                    for bc in &b_classes {
                        if let Some(hit) = base.intersect_cells(class, bc) {
                            cells.push(hit);
                        }
                        remainder = remainder
                            .into_iter()
                            .flat_map(|piece| base.difference_pieces(&piece, bc))
                            .collect();
                    }
                    cells.extend(remainder);
                    family.insert(class.clone(), cells);
                }
                // Assemble all boxes over the family and keep those not
                // fully inside `b`.
                let choices: Vec<&Vec<Cell>> = xs.iter().map(|x| &family[x]).collect();
                let mut out = Vec::new();
                let mut pick = vec![0usize; xs.len()];
                'boxes: loop {
                    let coords: Vec<Cell> = pick
                        .iter()
                        .enumerate()
                        .map(|(i, &j)| choices[i][j].clone())
                        .collect();
                    let inside_b = coords
                        .iter()
                        .zip(ys)
                        .all(|(c, y)| base.cell_subset(c, y));
                    if !inside_b {
                        out.push(Cell::Product(coords));
                    }
                    for i in (0..pick.len()).rev() {
                        pick[i] += 1;
                        if pick[i] < choices[i].len() {
                            continue 'boxes;
                        }
                        pick[i] = 0;
                    }
                    break;
                }
                out
            }
            _ => unreachable!("cell kind validated against semi-ring kind"),
        }
    }

    /// Size of the sub-cell search space of `v`: the number of nonempty
    /// sub-cells a witness scan would enumerate.
    pub fn witness_space(&self, v: &Cell) -> BigUint {
        match (self, v) {
            (SemiRing::PowerSet { .. }, Cell::Set(s)) => {
                (BigUint::one() << s.len()) - BigUint::one()
            }
            (SemiRing::Interval { .. }, Cell::Interval { lo, hi }) => {
                let len = (*hi - *lo) as u64;
                BigUint::from(len * (len + 1) / 2)
            }
            (SemiRing::Product { bases, disjoint_or_equal }, Cell::Product(coords)) => {
                if *disjoint_or_equal {
                    // repeated coordinates share one sub-cell choice
                    let mut seen: Vec<&Cell> = Vec::new();
                    let mut total = BigUint::one();
                    for c in coords {
                        if !seen.contains(&c) {
                            seen.push(c);
                            total *= bases[0].witness_space(c);
                        }
                    }
                    total
                } else {
                    bases
                        .iter()
                        .zip(coords)
                        .map(|(b, c)| b.witness_space(c))
                        .product()
                }
            }
            _ => unreachable!("cell kind validated against semi-ring kind"),
        }
    }
}

// ----------------------------------------------------------------------
// Axiom verification report.
// ----------------------------------------------------------------------

/// Outcome of checking the semi-ring axioms on one pair of cells.
#[derive(Clone, Debug)]
pub struct AxiomEntry {
    pub pair: (Cell, Cell),
    pub intersection_ok: bool,
    pub pieces: usize,
    pub pieces_disjoint: bool,
    pub pieces_cover: bool,
    pub pieces_within_r: bool,
    pub pieces_valid: bool,
}

impl AxiomEntry {
    pub fn ok(&self) -> bool {
        self.intersection_ok
            && self.pieces_disjoint
            && self.pieces_cover
            && self.pieces_within_r
            && self.pieces_valid
    }
}

/// Report of [`verify_semiring_axioms`].
#[derive(Clone, Debug)]
pub struct AxiomReport {
    pub entries: Vec<AxiomEntry>,
    pub max_pieces: usize,
    pub all_pass: bool,
}

/// Check intersection closure and difference decomposition on sample pairs,
/// comparing against the pointwise truth over all atoms of the universe.
pub fn verify_semiring_axioms(
    semiring: &SemiRing,
    universe: &MeasureTriple,
    samples: &[(Cell, Cell)],
) -> Result<AxiomReport> {
    if universe.size() as u64 != semiring.ground_size() {
        return Err(Error::Structural(format!(
            "universe of size {} does not match semi-ring ground of size {}",
            universe.size(),
            semiring.ground_size()
        )));
    }
    let ground = universe.size();
    let mut entries = Vec::with_capacity(samples.len());
    let mut max_pieces = 0usize;
    for (a, b) in samples {
        semiring.validate_cell(a)?;
        semiring.validate_cell(b)?;
        let inter = semiring.intersect_cells(a, b);
        let intersection_ok = {
            let expected: Vec<u32> = (0..ground)
                .filter(|&x| semiring.cell_contains(a, x) && semiring.cell_contains(b, x))
                .collect();
            match &inter {
                Some(c) => {
                    semiring.validate_cell(c).is_ok()
                        && semiring.cell_atoms(c).atoms() == expected.as_slice()
                }
                None => expected.is_empty(),
            }
        };

        let pieces = semiring.decompose_difference(a, b)?;
        let pieces_valid = pieces.iter().all(|p| semiring.validate_cell(p).is_ok());
        let mut seen = vec![false; ground as usize];
        let mut pieces_disjoint = true;
        for p in &pieces {
            for x in semiring.cell_atoms(p).iter() {
                if seen[x as usize] {
                    pieces_disjoint = false;
                }
                seen[x as usize] = true;
            }
        }
        let pieces_cover = (0..ground).all(|x| {
            let in_diff =
                semiring.cell_contains(a, x) && !semiring.cell_contains(b, x);
            seen[x as usize] == in_diff
        });
        let pieces_within_r = pieces.len() as u64 <= semiring.declared_r();
        max_pieces = max_pieces.max(pieces.len());
        entries.push(AxiomEntry {
            pair: (a.clone(), b.clone()),
            intersection_ok,
            pieces: pieces.len(),
            pieces_disjoint,
            pieces_cover,
            pieces_within_r,
            pieces_valid,
        });
    }
    let all_pass = entries.iter().all(AxiomEntry::ok);
    Ok(AxiomReport { entries, max_pieces, all_pass })
}
