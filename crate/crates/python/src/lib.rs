//! Python bindings for the regularity-decomposition engine.
//!
//! Exposes the main types (measure triples, semi-rings, cells, partitions)
//! and operations (densities, energies, regularity checks, refinement, the
//! decomposition loop and the instance drivers). Rationals cross the
//! boundary as exact `"a/b"` strings; full decomposition runs come back as
//! the same JSON documents the CLI emits.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;

use regulens::instances::{
    decompose_cube, decompose_digraph, decompose_kpartite, decompose_undirected, CubeSemiRing,
    DirectedKGraph, GridSubset, KPartiteKGraph,
};
use regulens::rational::{format_rat, parse_rational};
use regulens::report::{driver_report, plain_report, RunMeta};
use regulens::{
    Bounding, EngineConfig, MSet, Mode, Partition as CorePartition, Rat,
    SemiRing as CoreSemiRing,
};

fn py_err(e: regulens::Error) -> PyErr {
    match e {
        regulens::Error::Invariant(_) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn rat_arg(text: &str) -> PyResult<Rat> {
    parse_rational(text).map_err(py_err)
}

/// A finite measure triple with exact rational atom weights.
#[pyclass(name = "MeasureTriple", from_py_object)]
#[derive(Clone)]
struct PyMeasureTriple {
    inner: regulens::MeasureTriple,
}

#[pymethods]
impl PyMeasureTriple {
    /// Uniform measure on `size` atoms.
    #[staticmethod]
    fn uniform(size: u32) -> PyResult<Self> {
        Ok(PyMeasureTriple { inner: regulens::MeasureTriple::uniform(size).map_err(py_err)? })
    }

    /// Weighted measure; weights are `"a/b"` strings summing to 1.
    #[staticmethod]
    fn weighted(weights: Vec<String>) -> PyResult<Self> {
        let ws = weights
            .iter()
            .map(|w| rat_arg(w))
            .collect::<PyResult<Vec<_>>>()?;
        Ok(PyMeasureTriple { inner: regulens::MeasureTriple::weighted(ws).map_err(py_err)? })
    }

    #[getter]
    fn size(&self) -> u32 {
        self.inner.size()
    }

    /// Exact measure of a set of atoms, as `"a/b"`.
    fn measure(&self, atoms: Vec<u32>) -> PyResult<String> {
        let s = MSet::new(atoms, self.inner.size()).map_err(py_err)?;
        Ok(format_rat(&self.inner.measure(&s).map_err(py_err)?))
    }

    /// Density `d(a, v) = measure(a ∩ v)/measure(v)` (0 on null `v`).
    fn density(&self, a: Vec<u32>, v: Vec<u32>) -> PyResult<String> {
        let a = MSet::new(a, self.inner.size()).map_err(py_err)?;
        let v = MSet::new(v, self.inner.size()).map_err(py_err)?;
        Ok(format_rat(&self.inner.density(&a, &v).map_err(py_err)?))
    }

    fn __repr__(&self) -> String {
        format!("MeasureTriple(size={}, uniform={})", self.inner.size(), self.inner.is_uniform())
    }
}

/// One cell of a semi-ring (construct through `SemiRing` methods).
#[pyclass(name = "Cell", from_py_object)]
#[derive(Clone)]
struct PyCell {
    inner: regulens::Cell,
}

#[pymethods]
impl PyCell {
    fn __repr__(&self) -> String {
        self.inner.display()
    }

    fn __eq__(&self, other: &PyCell) -> bool {
        self.inner == other.inner
    }
}

/// A boundedly built semi-ring of test cells.
#[pyclass(name = "SemiRing", from_py_object)]
#[derive(Clone)]
struct PySemiRing {
    inner: CoreSemiRing,
}

#[pymethods]
impl PySemiRing {
    /// The power set of `ground` atoms (r = 1).
    #[staticmethod]
    fn power_set(ground: u32) -> Self {
        PySemiRing { inner: CoreSemiRing::PowerSet { ground } }
    }

    /// Half-open index intervals over `ground` atoms (r = 2).
    #[staticmethod]
    fn intervals(ground: u32) -> Self {
        PySemiRing { inner: CoreSemiRing::Interval { ground } }
    }

    /// `k`-fold product of one base, coordinates pairwise disjoint or equal.
    #[staticmethod]
    fn power(base: &PySemiRing, k: u32) -> PyResult<Self> {
        Ok(PySemiRing { inner: CoreSemiRing::power(base.inner.clone(), k).map_err(py_err)? })
    }

    /// Product of independent bases (boxes, no coordinate constraint).
    #[staticmethod]
    fn boxes(bases: Vec<PySemiRing>) -> PyResult<Self> {
        let inner = CoreSemiRing::product_of(
            bases.into_iter().map(|b| b.inner).collect(),
            false,
        )
        .map_err(py_err)?;
        Ok(PySemiRing { inner })
    }

    #[getter]
    fn ground_size(&self) -> u64 {
        self.inner.ground_size()
    }

    /// The `r` of "r-built": the decomposition piece bound.
    #[getter]
    fn declared_r(&self) -> u64 {
        self.inner.declared_r()
    }

    /// A power-set cell from its atoms.
    fn set_cell(&self, atoms: Vec<u32>) -> PyResult<PyCell> {
        let ground = match &self.inner {
            CoreSemiRing::PowerSet { ground } => *ground,
            _ => return Err(PyValueError::new_err("set cells live in power-set semi-rings")),
        };
        let cell = regulens::Cell::Set(MSet::new(atoms, ground).map_err(py_err)?);
        self.inner.validate_cell(&cell).map_err(py_err)?;
        Ok(PyCell { inner: cell })
    }

    /// An interval cell `[lo, hi)`.
    fn interval_cell(&self, lo: u32, hi: u32) -> PyResult<PyCell> {
        let cell = regulens::Cell::Interval { lo, hi };
        self.inner.validate_cell(&cell).map_err(py_err)?;
        Ok(PyCell { inner: cell })
    }

    /// A product cell from per-coordinate cells.
    fn product_cell(&self, coords: Vec<PyCell>) -> PyResult<PyCell> {
        let cell = regulens::Cell::Product(coords.into_iter().map(|c| c.inner).collect());
        self.inner.validate_cell(&cell).map_err(py_err)?;
        Ok(PyCell { inner: cell })
    }

    /// Intersection of two cells, or `None` when empty.
    fn intersect(&self, a: &PyCell, b: &PyCell) -> PyResult<Option<PyCell>> {
        Ok(self
            .inner
            .cell_intersect(&a.inner, &b.inner)
            .map_err(py_err)?
            .map(|c| PyCell { inner: c }))
    }

    /// Decompose `a \ b` into pairwise disjoint cells (at most `declared_r`).
    fn decompose_difference(&self, a: &PyCell, b: &PyCell) -> PyResult<Vec<PyCell>> {
        Ok(self
            .inner
            .decompose_difference(&a.inner, &b.inner)
            .map_err(py_err)?
            .into_iter()
            .map(|c| PyCell { inner: c })
            .collect())
    }

    /// Ground atoms of a cell.
    fn cell_atoms(&self, cell: &PyCell) -> Vec<u32> {
        self.inner.cell_atoms(&cell.inner).atoms().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("SemiRing(ground={}, r={})", self.inner.ground_size(), self.inner.declared_r())
    }
}

/// A partition of the ground set into semi-ring cells.
#[pyclass(name = "Partition", from_py_object)]
#[derive(Clone)]
struct PyPartition {
    inner: CorePartition,
}

#[pymethods]
impl PyPartition {
    #[new]
    fn new(semiring: &PySemiRing, cells: Vec<PyCell>) -> PyResult<Self> {
        let inner = CorePartition::new(
            semiring.inner.clone(),
            cells.into_iter().map(|c| c.inner).collect(),
        )
        .map_err(py_err)?;
        Ok(PyPartition { inner })
    }

    /// The one-cell partition of the whole ground set.
    #[staticmethod]
    fn trivial(semiring: &PySemiRing) -> PyResult<Self> {
        Ok(PyPartition { inner: CorePartition::trivial(semiring.inner.clone()).map_err(py_err)? })
    }

    #[getter]
    fn size(&self) -> usize {
        self.inner.size()
    }

    fn cells(&self) -> Vec<PyCell> {
        self.inner.cells().iter().map(|c| PyCell { inner: c.clone() }).collect()
    }

    fn exceptional_flags(&self) -> Vec<bool> {
        self.inner.exceptional_flags().to_vec()
    }

    /// Does every cell of `coarser` split into cells of this partition?
    fn refines(&self, coarser: &PyPartition) -> PyResult<bool> {
        self.inner.refines(&coarser.inner).map_err(py_err)
    }

    fn common_refinement(&self, other: &PyPartition) -> PyResult<PyPartition> {
        Ok(PyPartition { inner: self.inner.common_refinement(&other.inner).map_err(py_err)? })
    }

    /// The `k`-fold product partition.
    fn product_power(&self, k: u32) -> PyResult<PyPartition> {
        Ok(PyPartition { inner: self.inner.product_power(k).map_err(py_err)? })
    }

    fn __repr__(&self) -> String {
        format!("Partition({} cells)", self.inner.size())
    }
}

/// Energy of a partition with respect to a set of atoms, as `"a/b"`.
#[pyfunction]
fn index(t: &PyMeasureTriple, atoms: Vec<u32>, p: &PyPartition) -> PyResult<String> {
    let a = MSet::new(atoms, t.inner.size()).map_err(py_err)?;
    Ok(format_rat(&regulens::index(&t.inner, &a, &p.inner).map_err(py_err)?))
}

/// Equitable refinement of a base partition under a uniform measure.
#[pyfunction]
fn equitable_refine(t: &PyMeasureTriple, parts: &PyPartition, eps: &str) -> PyResult<PyPartition> {
    let eps = rat_arg(eps)?;
    Ok(PyPartition {
        inner: regulens::equitable_refine(&t.inner, &parts.inner, &eps).map_err(py_err)?,
    })
}

/// Exact check of the defect Cauchy–Schwarz inequality. Returns
/// `(part1, part2)` with `part2` one of `"holds"`, `"fails"`,
/// `"hypothesis-not-met"`.
#[pyfunction]
fn defect_cs_check(
    c: Vec<String>,
    x: Vec<String>,
    j_set: Vec<usize>,
    gamma: &str,
) -> PyResult<(bool, String)> {
    let c = c.iter().map(|v| rat_arg(v)).collect::<PyResult<Vec<_>>>()?;
    let x = x.iter().map(|v| rat_arg(v)).collect::<PyResult<Vec<_>>>()?;
    let gamma = rat_arg(gamma)?;
    let out = regulens::defect_cs_check(&c, &x, &j_set, &gamma).map_err(py_err)?;
    let part2 = match out.part2 {
        regulens::regularity::DefectPart::Holds => "holds",
        regulens::regularity::DefectPart::Fails => "fails",
        regulens::regularity::DefectPart::HypothesisNotMet => "hypothesis-not-met",
    };
    Ok((out.part1, part2.to_string()))
}

fn config_from_args(eps: &Rat, mode: &str, samples: u32, seed: u64) -> PyResult<EngineConfig> {
    let mode = match mode {
        "exact" => Mode::Exact,
        "sample" => Mode::Sample,
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    };
    let mut cfg = EngineConfig::exact(eps.clone());
    cfg.mode = mode;
    cfg.sample_count = samples.max(1);
    cfg.seed = seed;
    Ok(cfg)
}

fn meta_for(subcommand: &str, eps: &Rat, mode: &str, samples: u32, seed: u64, bounding: &str) -> RunMeta {
    RunMeta {
        subcommand: subcommand.into(),
        inputs: vec!["<python>".into()],
        eps: eps.clone(),
        mode: mode.into(),
        samples,
        seed,
        bounding: bounding.into(),
        format: "json".into(),
    }
}

/// Decompose a directed `k`-graph; returns the CLI's JSON report.
#[pyfunction]
#[pyo3(signature = (n, k, edges, eps, mode="exact", samples=256, seed=0))]
fn digraph_decomposition(
    n: u32,
    k: u32,
    edges: Vec<Vec<u32>>,
    eps: &str,
    mode: &str,
    samples: u32,
    seed: u64,
) -> PyResult<String> {
    let eps = rat_arg(eps)?;
    let g = DirectedKGraph::new(n, k, edges).map_err(py_err)?;
    let cfg = config_from_args(&eps, mode, samples, seed)?;
    let points = vec![("g".to_string(), g.edge_count() as u64)];
    let data = decompose_digraph(&[("g".into(), g.clone())], &eps, &cfg).map_err(py_err)?;
    let (sys, _) = regulens::instances::digraph_sr_system(&g).map_err(py_err)?;
    let meta = meta_for("regularize", &eps, mode, samples, seed, "equitable");
    Ok(driver_report(&sys, &data, &points, &meta).to_json())
}

/// Decompose an undirected `k`-graph (edges are closed under permutation
/// automatically); returns the JSON report.
#[pyfunction]
#[pyo3(signature = (n, k, edges, eps, mode="exact", samples=256, seed=0))]
fn undirected_decomposition(
    n: u32,
    k: u32,
    edges: Vec<Vec<u32>>,
    eps: &str,
    mode: &str,
    samples: u32,
    seed: u64,
) -> PyResult<String> {
    let eps = rat_arg(eps)?;
    let g = DirectedKGraph::new(n, k, edges)
        .and_then(|g| g.symmetrized())
        .map_err(py_err)?;
    let cfg = config_from_args(&eps, mode, samples, seed)?;
    let points = vec![("g".to_string(), g.edge_count() as u64)];
    let data = decompose_undirected(&[("g".into(), g.clone())], &eps, &cfg).map_err(py_err)?;
    let (sys, _) = regulens::instances::digraph_sr_system(&g).map_err(py_err)?;
    let meta = meta_for("regularize", &eps, mode, samples, seed, "equitable");
    Ok(driver_report(&sys, &data, &points, &meta).to_json())
}

/// Decompose a `k`-partite `k`-graph with equal class sizes; JSON report.
#[pyfunction]
#[pyo3(signature = (class_sizes, edges, eps, mode="exact", samples=256, seed=0))]
fn kpartite_decomposition(
    class_sizes: Vec<u32>,
    edges: Vec<Vec<u32>>,
    eps: &str,
    mode: &str,
    samples: u32,
    seed: u64,
) -> PyResult<String> {
    let eps = rat_arg(eps)?;
    let g = KPartiteKGraph::new(class_sizes, edges).map_err(py_err)?;
    let cfg = config_from_args(&eps, mode, samples, seed)?;
    let points = vec![("g".to_string(), g.edge_count() as u64)];
    let data = decompose_kpartite(&[("g".into(), g.clone())], &eps, &cfg).map_err(py_err)?;
    let (sys, _) = regulens::instances::kpartite_sr_system(&g).map_err(py_err)?;
    let meta = meta_for("regularize", &eps, mode, samples, seed, "equitable");
    Ok(driver_report(&sys, &data, &points, &meta).to_json())
}

/// Decompose a grid-discretized cube subset; `semiring` is `"sets"` or
/// `"intervals"`. JSON report.
#[pyfunction]
#[pyo3(signature = (k, m, cells, eps, semiring="sets", mode="exact", samples=256, seed=0))]
#[allow(clippy::too_many_arguments)]
fn cube_decomposition(
    k: u32,
    m: u32,
    cells: Vec<Vec<u32>>,
    eps: &str,
    semiring: &str,
    mode: &str,
    samples: u32,
    seed: u64,
) -> PyResult<String> {
    let eps = rat_arg(eps)?;
    let l = GridSubset::new(k, m, cells).map_err(py_err)?;
    let choice = match semiring {
        "sets" => CubeSemiRing::Sets,
        "intervals" => CubeSemiRing::Intervals,
        other => return Err(PyValueError::new_err(format!("unknown semi-ring {other:?}"))),
    };
    let cfg = config_from_args(&eps, mode, samples, seed)?;
    let points = vec![("l".to_string(), l.cell_count() as u64)];
    let data = decompose_cube(&[("l".into(), l.clone())], &eps, &cfg, choice).map_err(py_err)?;
    let sys = regulens::instances::grid_sr_system(l.k(), l.m(), choice).map_err(py_err)?;
    let meta = meta_for("cube", &eps, mode, samples, seed, "equitable");
    Ok(driver_report(&sys, &data, &points, &meta).to_json())
}

/// Plain decomposition of a directed graph without the instance driver:
/// re-coarsening by the product family. JSON report.
#[pyfunction]
#[pyo3(signature = (n, k, edges, eps, mode="exact", samples=256, seed=0))]
fn digraph_regularize_plain(
    n: u32,
    k: u32,
    edges: Vec<Vec<u32>>,
    eps: &str,
    mode: &str,
    samples: u32,
    seed: u64,
) -> PyResult<String> {
    let eps = rat_arg(eps)?;
    let g = DirectedKGraph::new(n, k, edges).map_err(py_err)?;
    let cfg = config_from_args(&eps, mode, samples, seed)?;
    let (sys, a) = regulens::instances::digraph_sr_system(&g).map_err(py_err)?;
    let p0 = CorePartition::trivial(sys.semiring.clone()).map_err(py_err)?;
    let sets = vec![("g".to_string(), a)];
    let run = regulens::regularize(&sys, &sets, &p0, &cfg, &Bounding::ProductFamily)
        .map_err(py_err)?;
    let meta = meta_for("regularize", &eps, mode, samples, seed, "product-family");
    let points = vec![("g".to_string(), g.edge_count() as u64)];
    Ok(plain_report(&sys, &run, &points, &meta).to_json())
}

/// Check one set for regularity in one cell of a product digraph system.
/// Returns `(regular, deviation)` with the deviation as `"a/b"`.
#[pyfunction]
fn digraph_cell_check(
    n: u32,
    k: u32,
    edges: Vec<Vec<u32>>,
    coords: Vec<Vec<u32>>,
    eps: &str,
) -> PyResult<(bool, String)> {
    let eps = rat_arg(eps)?;
    let g = DirectedKGraph::new(n, k, edges).map_err(py_err)?;
    let (sys, a) = regulens::instances::digraph_sr_system(&g).map_err(py_err)?;
    let cell = regulens::Cell::Product(
        coords
            .into_iter()
            .map(|c| Ok(regulens::Cell::Set(MSet::new(c, n).map_err(py_err)?)))
            .collect::<PyResult<Vec<_>>>()?,
    );
    sys.semiring.validate_cell(&cell).map_err(py_err)?;
    let cfg = EngineConfig::exact(eps);
    match regulens::check_regular_in_cell(&sys, &a, &cell, &cfg).map_err(py_err)? {
        regulens::CellVerdict::Regular { max_deviation, .. } => {
            Ok((true, format_rat(&max_deviation)))
        }
        regulens::CellVerdict::Irregular(w) => Ok((false, format_rat(&w.deviation))),
    }
}

/// Run one verification suite; returns
/// `(cases, passes, failures, first_counterexample)`.
#[pyfunction]
#[pyo3(signature = (name, cases=None, seed=0))]
fn run_verify_suite(
    name: &str,
    cases: Option<u64>,
    seed: u64,
) -> PyResult<(u64, u64, u64, Option<String>)> {
    let cases = cases.unwrap_or_else(|| regulens::verify::default_cases(name));
    let r = regulens::verify::run_suite(name, cases, seed).map_err(py_err)?;
    Ok((r.cases, r.passes, r.failures, r.first_counterexample))
}

#[pymodule]
fn regulens_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMeasureTriple>()?;
    m.add_class::<PySemiRing>()?;
    m.add_class::<PyCell>()?;
    m.add_class::<PyPartition>()?;
    m.add_function(wrap_pyfunction!(index, m)?)?;
    m.add_function(wrap_pyfunction!(equitable_refine, m)?)?;
    m.add_function(wrap_pyfunction!(defect_cs_check, m)?)?;
    m.add_function(wrap_pyfunction!(digraph_decomposition, m)?)?;
    m.add_function(wrap_pyfunction!(undirected_decomposition, m)?)?;
    m.add_function(wrap_pyfunction!(kpartite_decomposition, m)?)?;
    m.add_function(wrap_pyfunction!(cube_decomposition, m)?)?;
    m.add_function(wrap_pyfunction!(digraph_regularize_plain, m)?)?;
    m.add_function(wrap_pyfunction!(digraph_cell_check, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify_suite, m)?)?;
    m.add("SUITES", regulens::verify::SUITES.to_vec())?;
    Ok(())
}
