//! Decomposition reports.
//!
//! The JSON layout is the machine contract: top-level keys `config`,
//! `instance_summary`, `partition`, `per_set`, `trace`, `bounds`, in that
//! order, with rationals rendered as `"a/b"` strings. Serialization is
//! deterministic: no maps, no timestamps, field order fixed by declaration.
//! The text format is a human summary of the same data.

use serde::Serialize;
use std::fmt::Write as _;

use crate::instances::{CountKind, DriverReportData};
use crate::measure::MeasureTriple;
use crate::partition::Partition;
use crate::rational::{format_rat, Rat};
use crate::regularity::{IterationTrace, RunResult, SetOutcome, SrSystem, Witness};
use crate::semiring::Cell;

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub config: ConfigEcho,
    pub instance_summary: InstanceSummary,
    pub partition: PartitionReport,
    pub per_set: Vec<PerSetReport>,
    pub trace: Vec<TraceEntry>,
    pub bounds: BoundsReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConfigEcho {
    pub subcommand: String,
    pub inputs: Vec<String>,
    /// The target eps, echoed exactly as parsed.
    pub eps: String,
    pub mode: String,
    pub samples: u32,
    pub seed: u64,
    pub bounding: String,
    pub format: String,
    /// Regularity parameter of the final engine run (driver runs may tighten
    /// it below the target).
    pub eps_internal: String,
    /// Equitability parameter of the final bounding family, when one ran.
    pub eps_equity: Option<String>,
    /// For undirected runs: the directed target `eps / k!`.
    pub eps_directed: Option<String>,
    /// Parameter tightenings the adaptive driver took.
    pub adaptive_rounds: u32,
    /// Closed-form rate of the bounding family actually used.
    pub rate: String,
    pub certified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct InstanceSummary {
    pub kind: String,
    pub k: u32,
    /// Ground size per vertex class.
    pub ground: Vec<u64>,
    /// Difference-decomposition bound of the semi-ring in use.
    pub declared_r: u64,
    pub sets: Vec<SetSummary>,
    /// Instance-level theorem conditions; absent for plain engine runs.
    pub theorem: Option<TheoremReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SetSummary {
    pub id: String,
    pub points: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremReport {
    pub q: u64,
    pub classes: Vec<ClassReport>,
    pub counts: Vec<CountReport>,
    pub validated: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassReport {
    pub class_index: usize,
    pub q: u64,
    /// Common block size when the blocks are equal.
    pub block_size: Option<u64>,
    pub equal_sizes: bool,
    pub sizes_below_eps_n: bool,
    pub exceptional_size: u64,
    pub exceptional_below_eps_n: bool,
    pub blocks: Vec<Vec<u32>>,
    pub exceptional: Vec<u32>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CountReport {
    pub id: String,
    pub kind: String,
    pub regular: u64,
    pub enumerated: u64,
    pub baseline: u64,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PartitionReport {
    pub size: usize,
    pub cells: Vec<CellReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CellReport {
    pub cell: CellRepr,
    pub exceptional: bool,
    pub measure: String,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CellRepr {
    Set { atoms: Vec<u32> },
    Interval { lo: u32, hi: u32 },
    Product { coords: Vec<CellRepr> },
}

impl CellRepr {
    pub fn from_cell(cell: &Cell) -> CellRepr {
        match cell {
            Cell::Set(s) => CellRepr::Set { atoms: s.atoms().to_vec() },
            Cell::Interval { lo, hi } => CellRepr::Interval { lo: *lo, hi: *hi },
            Cell::Product(coords) => CellRepr::Product {
                coords: coords.iter().map(CellRepr::from_cell).collect(),
            },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PerSetReport {
    pub id: String,
    pub regular: bool,
    pub irregular_mass: String,
    pub regular_cell_count: usize,
    pub witness_log: Vec<WitnessReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessReport {
    pub cell: CellRepr,
    pub sub: CellRepr,
    pub d_cell: String,
    pub d_sub: String,
    pub deviation: String,
}

impl WitnessReport {
    fn from_witness(w: &Witness) -> Self {
        WitnessReport {
            cell: CellRepr::from_cell(&w.cell),
            sub: CellRepr::from_cell(&w.sub),
            d_cell: format_rat(&w.d_cell),
            d_sub: format_rat(&w.d_sub),
            deviation: format_rat(&w.deviation),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceEntry {
    pub step: u64,
    pub offending_set: String,
    pub index_before: String,
    pub index_after: String,
    pub partition_size: usize,
}

impl TraceEntry {
    fn from_trace(t: &IterationTrace) -> Self {
        TraceEntry {
            step: t.step,
            offending_set: t.offending_set.clone(),
            index_before: format_rat(&t.index_before),
            index_after: format_rat(&t.index_after),
            partition_size: t.partition_size,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsReport {
    pub psi_conservative: String,
    pub psi_paper: String,
    pub achieved_size: u64,
}

/// Metadata the CLI threads through into the report.
#[derive(Clone, Debug)]
pub struct RunMeta {
    pub subcommand: String,
    pub inputs: Vec<String>,
    pub eps: Rat,
    pub mode: String,
    pub samples: u32,
    pub seed: u64,
    pub bounding: String,
    pub format: String,
}

fn partition_report(triple: &MeasureTriple, p: &Partition) -> PartitionReport {
    let cells = (0..p.size())
        .map(|i| CellReport {
            cell: CellRepr::from_cell(p.cell(i)),
            exceptional: p.is_exceptional(i),
            measure: format_rat(&triple.measure(p.atoms_of(i)).expect("cell over triple")),
        })
        .collect();
    PartitionReport { size: p.size(), cells }
}

fn per_set_reports(outcomes: &[SetOutcome]) -> Vec<PerSetReport> {
    outcomes
        .iter()
        .map(|o| PerSetReport {
            id: o.id.clone(),
            regular: o.regular,
            irregular_mass: format_rat(&o.irregular_mass),
            regular_cell_count: o.regular_cell_count,
            witness_log: o.witness_log.iter().map(WitnessReport::from_witness).collect(),
        })
        .collect()
}

fn bounds_report(run: &RunResult) -> BoundsReport {
    BoundsReport {
        psi_conservative: run.bounds.psi_conservative.to_string_canonical(),
        psi_paper: run.bounds.psi_stated.to_string_canonical(),
        achieved_size: run.bounds.achieved,
    }
}

/// Report for a plain engine run (no instance-level theorem).
pub fn plain_report(
    sys: &SrSystem,
    run: &RunResult,
    set_points: &[(String, u64)],
    meta: &RunMeta,
) -> Report {
    Report {
        config: ConfigEcho {
            subcommand: meta.subcommand.clone(),
            inputs: meta.inputs.clone(),
            eps: format_rat(&meta.eps),
            mode: meta.mode.clone(),
            samples: meta.samples,
            seed: meta.seed,
            bounding: meta.bounding.clone(),
            format: meta.format.clone(),
            eps_internal: format_rat(&run.eps),
            eps_equity: None,
            eps_directed: None,
            adaptive_rounds: 0,
            rate: run.rate.describe(),
            certified: run.certified,
        },
        instance_summary: InstanceSummary {
            kind: "plain".into(),
            k: sys.arity(),
            ground: (0..sys.arity() as usize)
                .map(|s| sys.base_triple(s).size() as u64)
                .collect(),
            declared_r: sys.semiring.declared_r(),
            sets: set_points
                .iter()
                .map(|(id, points)| SetSummary { id: id.clone(), points: *points })
                .collect(),
            theorem: None,
        },
        partition: partition_report(&sys.triple, &run.final_partition),
        per_set: per_set_reports(&run.per_set),
        trace: run.trace.iter().map(TraceEntry::from_trace).collect(),
        bounds: bounds_report(run),
    }
}

/// Report for a driver run with theorem conditions.
pub fn driver_report(
    sys: &SrSystem,
    data: &DriverReportData,
    set_points: &[(String, u64)],
    meta: &RunMeta,
) -> Report {
    let conditions = &data.conditions;
    let theorem = TheoremReport {
        q: data.q,
        classes: conditions
            .classes
            .iter()
            .zip(&data.classes)
            .map(|(cond, class)| ClassReport {
                class_index: cond.class_index,
                q: cond.q,
                block_size: if cond.equal_sizes {
                    cond.block_sizes.first().copied()
                } else {
                    None
                },
                equal_sizes: cond.equal_sizes,
                sizes_below_eps_n: cond.sizes_below_eps_n,
                exceptional_size: cond.exceptional_size,
                exceptional_below_eps_n: cond.exceptional_below_eps_n,
                blocks: class.blocks.iter().map(|b| b.atoms().to_vec()).collect(),
                exceptional: class.exceptional.atoms().to_vec(),
            })
            .collect(),
        counts: conditions
            .counts
            .iter()
            .map(|c| CountReport {
                id: c.id.clone(),
                kind: match c.kind {
                    CountKind::DistinctTuples => "distinct-tuples".into(),
                    CountKind::AllTuples => "all-tuples".into(),
                    CountKind::UnorderedSets => "unordered-sets".into(),
                },
                regular: c.regular,
                enumerated: c.enumerated,
                baseline: c.baseline,
                ok: c.ok,
            })
            .collect(),
        validated: conditions.validated,
    };
    Report {
        config: ConfigEcho {
            subcommand: meta.subcommand.clone(),
            inputs: meta.inputs.clone(),
            eps: format_rat(&data.eps_target),
            mode: meta.mode.clone(),
            samples: meta.samples,
            seed: meta.seed,
            bounding: meta.bounding.clone(),
            format: meta.format.clone(),
            eps_internal: format_rat(&data.eps_internal),
            eps_equity: Some(format_rat(&data.eps_equity)),
            eps_directed: data.eps_directed.as_ref().map(format_rat),
            adaptive_rounds: data.attempts,
            rate: data.run.rate.describe(),
            certified: data.run.certified,
        },
        instance_summary: InstanceSummary {
            kind: data.kind.as_str().into(),
            k: sys.arity(),
            ground: data.classes.iter().map(|c| c.ground).collect(),
            declared_r: sys.semiring.declared_r(),
            sets: set_points
                .iter()
                .map(|(id, points)| SetSummary { id: id.clone(), points: *points })
                .collect(),
            theorem: Some(theorem),
        },
        partition: partition_report(&sys.triple, &data.run.final_partition),
        per_set: per_set_reports(&data.per_set_target),
        trace: data.run.trace.iter().map(TraceEntry::from_trace).collect(),
        bounds: bounds_report(&data.run),
    }
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Human-readable summary.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let c = &self.config;
        let _ = writeln!(out, "{} run over {:?}", c.subcommand, c.inputs);
        let _ = writeln!(
            out,
            "  eps {} | mode {} | seed {} | bounding {} | internal eps {}",
            c.eps, c.mode, c.seed, c.bounding, c.eps_internal
        );
        let s = &self.instance_summary;
        let _ = writeln!(
            out,
            "  instance: {} (k={}, ground {:?}), {} set(s)",
            s.kind,
            s.k,
            s.ground,
            s.sets.len()
        );
        if let Some(t) = &s.theorem {
            let _ = writeln!(out, "  theorem conditions: q={} validated={}", t.q, t.validated);
            for class in &t.classes {
                let _ = writeln!(
                    out,
                    "    class {}: q={} block_size={:?} equal={} small={} exceptional_size={} small={}",
                    class.class_index,
                    class.q,
                    class.block_size,
                    class.equal_sizes,
                    class.sizes_below_eps_n,
                    class.exceptional_size,
                    class.exceptional_below_eps_n
                );
            }
            for count in &t.counts {
                let _ = writeln!(
                    out,
                    "    set {}: {} regular of {} ({}; baseline {}) ok={}",
                    count.id, count.regular, count.enumerated, count.kind, count.baseline, count.ok
                );
            }
        }
        let _ = writeln!(out, "  final partition: {} cells", self.partition.size);
        for set in &self.per_set {
            let _ = writeln!(
                out,
                "  set {}: regular={} irregular_mass={} regular_cells={} witnesses_logged={}",
                set.id,
                set.regular,
                set.irregular_mass,
                set.regular_cell_count,
                set.witness_log.len()
            );
        }
        let _ = writeln!(out, "  refinement rounds: {}", self.trace.len());
        for step in &self.trace {
            let _ = writeln!(
                out,
                "    step {}: set {} index {} -> {} (size {})",
                step.step, step.offending_set, step.index_before, step.index_after, step.partition_size
            );
        }
        let b = &self.bounds;
        let _ = writeln!(
            out,
            "  size: achieved {} | conservative bound {} | stated recursion {}",
            b.achieved_size, b.psi_conservative, b.psi_paper
        );
        out
    }
}
