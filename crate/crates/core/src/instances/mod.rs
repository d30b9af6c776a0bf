//! Concrete systems the engine decomposes: directed and undirected
//! `k`-graphs, `k`-partite `k`-graphs, and grid-discretized subsets of the
//! unit cube, together with their text formats and theorem-level validators.

mod driver;
mod formats;
mod validate;

pub use driver::{
    decompose_cube, decompose_digraph, decompose_kpartite, decompose_undirected,
    ClassReportData, CubeSemiRing, DriverReportData, InstanceKind,
};
pub use formats::{header_field_count, parse_digraph, parse_grid, parse_kpartite};
pub use validate::{
    validate_conditions, ClassCondition, CountCondition, CountKind, TheoremConditions,
};

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::measure::{MSet, MeasureTriple};
use crate::regularity::SrSystem;
use crate::semiring::SemiRing;

/// A labelled directed `k`-graph on `[n]`, loops allowed: a set of ordered
/// `k`-tuples of vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectedKGraph {
    n: u32,
    k: u32,
    edges: BTreeSet<Vec<u32>>,
}

impl DirectedKGraph {
    pub fn new(n: u32, k: u32, edges: impl IntoIterator<Item = Vec<u32>>) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::Validation("need n >= 1 and k >= 1".into()));
        }
        let mut set = BTreeSet::new();
        for e in edges {
            if e.len() != k as usize {
                return Err(Error::Validation(format!(
                    "edge {e:?} has arity {}, expected {k}",
                    e.len()
                )));
            }
            if let Some(&v) = e.iter().find(|&&v| v >= n) {
                return Err(Error::Validation(format!(
                    "edge {e:?} uses vertex {v}, but n = {n}"
                )));
            }
            set.insert(e);
        }
        Ok(DirectedKGraph { n, k, edges: set })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Vec<u32>> {
        self.edges.iter()
    }

    /// Undirected graphs contain each permutation of every edge, and every
    /// edge consists of `k` distinct vertices.
    pub fn is_undirected(&self) -> bool {
        self.edges.iter().all(|e| {
            let mut sorted = e.clone();
            sorted.sort_unstable();
            sorted.windows(2).all(|w| w[0] != w[1])
                && permutations(e).iter().all(|p| self.edges.contains(p))
        })
    }

    /// Close under permutations. Fails on edges with repeated vertices,
    /// which have no undirected reading.
    pub fn symmetrized(&self) -> Result<Self> {
        let mut edges = BTreeSet::new();
        for e in &self.edges {
            let mut sorted = e.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Validation(format!(
                    "edge {e:?} repeats a vertex; undirected edges need {} distinct vertices",
                    self.k
                )));
            }
            for p in permutations(e) {
                edges.insert(p);
            }
        }
        Ok(DirectedKGraph { n: self.n, k: self.k, edges })
    }
}

fn permutations(tuple: &[u32]) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut items = tuple.to_vec();
    heap_permute(&mut items, tuple.len(), &mut out);
    out
}

fn heap_permute(items: &mut Vec<u32>, k: usize, out: &mut Vec<Vec<u32>>) {
    if k <= 1 {
        out.push(items.clone());
        return;
    }
    for i in 0..k {
        heap_permute(items, k - 1, out);
        if k.is_multiple_of(2) {
            items.swap(i, k - 1);
        } else {
            items.swap(0, k - 1);
        }
    }
}

/// A labelled `k`-partite `k`-graph: coordinate `i` of every edge ranges
/// over class `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KPartiteKGraph {
    class_sizes: Vec<u32>,
    edges: BTreeSet<Vec<u32>>,
}

impl KPartiteKGraph {
    pub fn new(class_sizes: Vec<u32>, edges: impl IntoIterator<Item = Vec<u32>>) -> Result<Self> {
        if class_sizes.len() < 2 {
            return Err(Error::Validation("k-partite graphs need k >= 2".into()));
        }
        if class_sizes.contains(&0) {
            return Err(Error::Validation("empty vertex class".into()));
        }
        let k = class_sizes.len();
        let mut set = BTreeSet::new();
        for e in edges {
            if e.len() != k {
                return Err(Error::Validation(format!(
                    "edge {e:?} has arity {}, expected {k}",
                    e.len()
                )));
            }
            for (i, (&v, &s)) in e.iter().zip(&class_sizes).enumerate() {
                if v >= s {
                    return Err(Error::Validation(format!(
                        "edge {e:?}: coordinate {i} is {v}, but class {i} has {s} vertices"
                    )));
                }
            }
            set.insert(e);
        }
        Ok(KPartiteKGraph { class_sizes, edges: set })
    }

    pub fn k(&self) -> u32 {
        self.class_sizes.len() as u32
    }

    pub fn class_sizes(&self) -> &[u32] {
        &self.class_sizes
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Vec<u32>> {
        self.edges.iter()
    }
}

/// A union of grid cubes approximating a subset of the unit cube at
/// resolution `m` per axis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridSubset {
    k: u32,
    m: u32,
    cells: BTreeSet<Vec<u32>>,
}

impl GridSubset {
    pub fn new(k: u32, m: u32, cells: impl IntoIterator<Item = Vec<u32>>) -> Result<Self> {
        if k == 0 || m == 0 {
            return Err(Error::Validation("need k >= 1 and m >= 1".into()));
        }
        let mut set = BTreeSet::new();
        for c in cells {
            if c.len() != k as usize {
                return Err(Error::Validation(format!(
                    "grid cell {c:?} has dimension {}, expected {k}",
                    c.len()
                )));
            }
            if let Some(&v) = c.iter().find(|&&v| v >= m) {
                return Err(Error::Validation(format!(
                    "grid cell {c:?} has index {v}, but m = {m}"
                )));
            }
            set.insert(c);
        }
        Ok(GridSubset { k, m, cells: set })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> impl Iterator<Item = &Vec<u32>> {
        self.cells.iter()
    }

    /// The same region at `factor` times the resolution: every occupied cube
    /// becomes `factor^k` occupied subcubes, so the measure is unchanged.
    pub fn refined(&self, factor: u32) -> Result<GridSubset> {
        if factor == 0 {
            return Err(Error::Validation("refinement factor must be positive".into()));
        }
        let mut cells = Vec::new();
        for c in &self.cells {
            let mut offsets = vec![0u32; self.k as usize];
            loop {
                cells.push(
                    c.iter()
                        .zip(&offsets)
                        .map(|(&v, &o)| v * factor + o)
                        .collect::<Vec<_>>(),
                );
                let mut dim = self.k as usize;
                let mut done = true;
                while dim > 0 {
                    dim -= 1;
                    offsets[dim] += 1;
                    if offsets[dim] < factor {
                        done = false;
                        break;
                    }
                    offsets[dim] = 0;
                }
                if done {
                    break;
                }
            }
        }
        GridSubset::new(self.k, self.m * factor, cells)
    }
}

// ----------------------------------------------------------------------
// Systems.
// ----------------------------------------------------------------------

/// The directed `k`-graph system: uniform measure on `[n]^k`, tested against
/// constrained products of vertex subsets. Returns the system and the edge
/// set as a measurable set.
pub fn digraph_sr_system(g: &DirectedKGraph) -> Result<(SrSystem, MSet)> {
    let base = MeasureTriple::uniform(g.n)?;
    let sys = SrSystem::power(base, SemiRing::PowerSet { ground: g.n }, g.k)?;
    let edges = tuple_set(&sys, g.edges.iter())?;
    Ok((sys, edges))
}

/// The `k`-partite box system over the product of the vertex classes.
pub fn kpartite_sr_system(g: &KPartiteKGraph) -> Result<(SrSystem, MSet)> {
    let bases: Vec<_> = g
        .class_sizes
        .iter()
        .map(|&s| Ok((MeasureTriple::uniform(s)?, SemiRing::PowerSet { ground: s })))
        .collect::<Result<_>>()?;
    let sys = SrSystem::product(bases, false)?;
    let edges = tuple_set(&sys, g.edges.iter())?;
    Ok((sys, edges))
}

/// The grid cube system at resolution `m`, with either arbitrary measurable
/// classes or interval classes on the axis.
pub fn grid_sr_system(k: u32, m: u32, semiring: CubeSemiRing) -> Result<SrSystem> {
    let base_sr = match semiring {
        CubeSemiRing::Sets => SemiRing::PowerSet { ground: m },
        CubeSemiRing::Intervals => SemiRing::Interval { ground: m },
    };
    SrSystem::power(MeasureTriple::uniform(m)?, base_sr, k)
}

/// Encode a grid subset as a measurable set of the cube system.
pub fn grid_set(sys: &SrSystem, g: &GridSubset) -> Result<MSet> {
    tuple_set(sys, g.cells.iter())
}

fn tuple_set<'a>(sys: &SrSystem, tuples: impl Iterator<Item = &'a Vec<u32>>) -> Result<MSet> {
    let atoms: Vec<u32> = tuples.map(|t| sys.semiring.encode(t)).collect();
    MSet::new(atoms, sys.triple.size())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn digraph_system_measures_edges() {
        let g = DirectedKGraph::new(2, 2, vec![vec![0, 1], vec![1, 0]]).unwrap();
        let (sys, edges) = digraph_sr_system(&g).unwrap();
        assert_eq!(sys.triple.size(), 4);
        assert_eq!(sys.triple.measure(&edges).unwrap(), rat(1, 2));
        // empty and complete graphs
        let empty = DirectedKGraph::new(2, 2, Vec::<Vec<u32>>::new()).unwrap();
        let (sys_e, e) = digraph_sr_system(&empty).unwrap();
        assert_eq!(sys_e.triple.measure(&e).unwrap(), rat(0, 1));
        let all: Vec<Vec<u32>> =
            (0..2).flat_map(|i| (0..2).map(move |j| vec![i, j])).collect();
        let complete = DirectedKGraph::new(2, 2, all).unwrap();
        let (sys_c, c) = digraph_sr_system(&complete).unwrap();
        assert_eq!(sys_c.triple.measure(&c).unwrap(), rat(1, 1));
    }

    #[test]
    fn densities_count_edges_between_parts() {
        // d(edges, V1 x V2) = e(V1, V2) / (|V1| |V2|)
        let g = DirectedKGraph::new(
            4,
            2,
            vec![vec![0, 2], vec![0, 3], vec![1, 2], vec![3, 3]],
        )
        .unwrap();
        let (sys, edges) = digraph_sr_system(&g).unwrap();
        let v1 = MSet::new(vec![0, 1], 4).unwrap();
        let v2 = MSet::new(vec![2, 3], 4).unwrap();
        let mut cell_atoms = Vec::new();
        for i in v1.iter() {
            for j in v2.iter() {
                cell_atoms.push(sys.semiring.encode(&[i, j]));
            }
        }
        let cell = MSet::new(cell_atoms, 16).unwrap();
        // e({0,1},{2,3}) = 3 of 4 pairs
        assert_eq!(sys.triple.density(&edges, &cell).unwrap(), rat(3, 4));
    }

    #[test]
    fn symmetrization_and_closure_checks() {
        let g = DirectedKGraph::new(4, 2, vec![vec![0, 1], vec![2, 3]]).unwrap();
        assert!(!g.is_undirected());
        let u = g.symmetrized().unwrap();
        assert!(u.is_undirected());
        assert_eq!(u.edge_count(), 4);
        // loops cannot be symmetrized
        let looped = DirectedKGraph::new(4, 2, vec![vec![1, 1]]).unwrap();
        assert!(looped.symmetrized().is_err());
    }

    #[test]
    fn grid_refinement_preserves_measure() {
        let l = GridSubset::new(2, 4, vec![vec![0, 0], vec![1, 2], vec![3, 3]]).unwrap();
        let sys4 = grid_sr_system(2, 4, CubeSemiRing::Sets).unwrap();
        let m4 = sys4.triple.measure(&grid_set(&sys4, &l).unwrap()).unwrap();
        let l8 = l.refined(2).unwrap();
        let sys8 = grid_sr_system(2, 8, CubeSemiRing::Sets).unwrap();
        let m8 = sys8.triple.measure(&grid_set(&sys8, &l8).unwrap()).unwrap();
        assert_eq!(m4, m8);
        assert_eq!(m4, rat(3, 16));
    }

    #[test]
    fn kpartite_validation() {
        assert!(KPartiteKGraph::new(vec![3], vec![]).is_err());
        assert!(KPartiteKGraph::new(vec![2, 2], vec![vec![0, 2]]).is_err());
        let g = KPartiteKGraph::new(vec![2, 3], vec![vec![0, 2], vec![1, 0]]).unwrap();
        let (sys, edges) = kpartite_sr_system(&g).unwrap();
        assert_eq!(sys.triple.size(), 6);
        assert_eq!(sys.triple.measure(&edges).unwrap(), rat(2, 6));
    }
}
