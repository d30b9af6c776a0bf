//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).
//!
//! Oracles here are deliberately independent of the engine: pointwise
//! membership, brute-force sub-box scans and direct density sums are written
//! from scratch in this file and compared against library results.

use num_bigint::BigUint;
use num_traits::{One, Pow, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use regulens::instances::{
    decompose_cube, decompose_digraph, decompose_kpartite, decompose_undirected, CubeSemiRing,
    DirectedKGraph, DriverReportData, GridSubset, KPartiteKGraph,
};
use regulens::partition::{base_atom_family, equitable_refine};
use regulens::rate::within_bound;
use regulens::rational::{floor_inv_fourth_power, format_rat, rat};
use regulens::regularity::{
    check_regular_in_cell, check_regular_in_partition, refine_step_with, CellVerdict,
};
use regulens::verify::run_suite;
use regulens::{
    Bounding, Cell, EngineConfig, MSet, MeasureTriple, Partition, Rat, SemiRing, SrSystem,
};

fn pass(name: &str, detail: &str) {
    println!("[PASS] {name}: {detail}");
}

// ----------------------------------------------------------------------
// Pointwise oracle over cells, independent of SemiRing::cell_contains.
// ----------------------------------------------------------------------

fn oracle_point_in(cell: &Cell, coords: &[u32]) -> bool {
    match cell {
        Cell::Set(s) => coords.len() == 1 && s.atoms().contains(&coords[0]),
        Cell::Interval { lo, hi } => coords.len() == 1 && coords[0] >= *lo && coords[0] < *hi,
        Cell::Product(parts) => {
            coords.len() == parts.len()
                && parts
                    .iter()
                    .zip(coords)
                    .all(|(p, &c)| oracle_point_in(p, &[c]))
        }
    }
}

fn all_points(grounds: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &g in grounds {
        let mut next = Vec::with_capacity(out.len() * g as usize);
        for p in &out {
            for c in 0..g {
                let mut q = p.clone();
                q.push(c);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// All nonempty subsets of `0..u` as sorted atom vectors.
fn all_subsets(u: u32) -> Vec<Vec<u32>> {
    (1u32..(1 << u))
        .map(|mask| (0..u).filter(|i| mask & (1 << i) != 0).collect())
        .collect()
}

fn deq_ok(cells: &[Vec<u32>]) -> bool {
    for i in 0..cells.len() {
        for j in i + 1..cells.len() {
            let equal = cells[i] == cells[j];
            let disjoint = cells[i].iter().all(|a| !cells[j].contains(a));
            if !equal && !disjoint {
                return false;
            }
        }
    }
    true
}

#[test]
fn c01_semiring_soundness_exhaustive() {
    let mut pairs_checked = 0u64;
    let mut max_pieces_seen = 0usize;
    // constrained products over a shared power-set base
    for u in 2..=4u32 {
        for k in 2..=3u32 {
            let base = SemiRing::PowerSet { ground: u };
            let semiring = SemiRing::power(base, k).unwrap();
            let subsets = all_subsets(u);
            let mut cells: Vec<Cell> = Vec::new();
            let mut pick = vec![0usize; k as usize];
            'enumerate: loop {
                let coords: Vec<Vec<u32>> = pick.iter().map(|&i| subsets[i].clone()).collect();
                if deq_ok(&coords) {
                    cells.push(Cell::Product(
                        coords
                            .into_iter()
                            .map(|atoms| Cell::Set(MSet::new(atoms, u).unwrap()))
                            .collect(),
                    ));
                }
                let mut dim = k as usize;
                loop {
                    if dim == 0 {
                        break 'enumerate;
                    }
                    dim -= 1;
                    pick[dim] += 1;
                    if pick[dim] < subsets.len() {
                        break;
                    }
                    pick[dim] = 0;
                }
            }
            let points = all_points(&vec![u; k as usize]);
            let r = semiring.declared_r();
            for a in &cells {
                for b in &cells {
                    let pieces = semiring.decompose_difference(a, b).unwrap();
                    assert!(
                        pieces.len() as u64 <= r,
                        "u={u} k={k}: {} pieces for {} \\ {} exceeds r={r}",
                        pieces.len(),
                        a.display(),
                        b.display()
                    );
                    max_pieces_seen = max_pieces_seen.max(pieces.len());
                    for piece in &pieces {
                        semiring.validate_cell(piece).unwrap();
                    }
                    for point in &points {
                        let in_diff = oracle_point_in(a, point) && !oracle_point_in(b, point);
                        let covered =
                            pieces.iter().filter(|p| oracle_point_in(p, point)).count();
                        assert_eq!(
                            covered,
                            usize::from(in_diff),
                            "u={u} k={k} point {point:?} of {} \\ {}",
                            a.display(),
                            b.display()
                        );
                    }
                    pairs_checked += 1;
                }
            }
        }
    }
    // interval base, k = 2
    {
        let u = 4u32;
        let semiring = SemiRing::power(SemiRing::Interval { ground: u }, 2).unwrap();
        let mut intervals = Vec::new();
        for lo in 0..u {
            for hi in lo + 1..=u {
                intervals.push(Cell::Interval { lo, hi });
            }
        }
        let mut cells = Vec::new();
        for a in &intervals {
            for b in &intervals {
                let c = Cell::Product(vec![a.clone(), b.clone()]);
                if semiring.validate_cell(&c).is_ok() {
                    cells.push(c);
                }
            }
        }
        let points = all_points(&[u, u]);
        let r = semiring.declared_r();
        for a in &cells {
            for b in &cells {
                let pieces = semiring.decompose_difference(a, b).unwrap();
                assert!(pieces.len() as u64 <= r);
                max_pieces_seen = max_pieces_seen.max(pieces.len());
                for point in &points {
                    let in_diff = oracle_point_in(a, point) && !oracle_point_in(b, point);
                    let covered = pieces.iter().filter(|p| oracle_point_in(p, point)).count();
                    assert_eq!(covered, usize::from(in_diff));
                }
                pairs_checked += 1;
            }
        }
    }
    // unconstrained boxes, mixed grounds
    {
        let semiring = SemiRing::product_of(
            vec![SemiRing::PowerSet { ground: 3 }, SemiRing::PowerSet { ground: 4 }],
            false,
        )
        .unwrap();
        let lefts = all_subsets(3);
        let rights = all_subsets(4);
        let mut cells = Vec::new();
        for l in &lefts {
            for rt in &rights {
                cells.push(Cell::Product(vec![
                    Cell::Set(MSet::new(l.clone(), 3).unwrap()),
                    Cell::Set(MSet::new(rt.clone(), 4).unwrap()),
                ]));
            }
        }
        let points = all_points(&[3, 4]);
        let r = semiring.declared_r();
        for a in &cells {
            for b in &cells {
                let pieces = semiring.decompose_difference(a, b).unwrap();
                assert!(pieces.len() as u64 <= r);
                for point in &points {
                    let in_diff = oracle_point_in(a, point) && !oracle_point_in(b, point);
                    let covered = pieces.iter().filter(|p| oracle_point_in(p, point)).count();
                    assert_eq!(covered, usize::from(in_diff));
                }
                pairs_checked += 1;
            }
        }
    }
    pass(
        "criterion 1 (semi-ring soundness)",
        &format!("{pairs_checked} exhaustive pairs, max pieces {max_pieces_seen}, all within declared r"),
    );
}

#[test]
fn c02_index_bounded_by_measure() {
    let report = run_suite("index-bound", 10_000, 20_260_810).unwrap();
    assert!(report.all_passed(), "{:?}", report.first_counterexample);
    pass("criterion 2 (index bound)", "10000 random (a, p): 0 <= index <= mu(a) <= 1");
}

#[test]
fn c03_index_monotone_under_refinement() {
    let report = run_suite("index-monotone", 1_000, 20_260_810).unwrap();
    assert!(report.all_passed(), "{:?}", report.first_counterexample);
    pass("criterion 3 (index monotone)", "1000 refinement pairs: index never drops");
}

#[test]
fn c04_defect_cauchy_schwarz() {
    let report = run_suite("defect-cs", 10_000, 20_260_810).unwrap();
    assert!(report.all_passed(), "{:?}", report.first_counterexample);
    pass(
        "criterion 4 (defect Cauchy-Schwarz)",
        "10000 instances, both parts exact with generator-computed defect",
    );
}

#[test]
fn c05_energy_split_lower_bound() {
    let report = run_suite("energy-split", 500, 20_260_810).unwrap();
    assert!(report.all_passed(), "{:?}", report.first_counterexample);
    pass(
        "criterion 5 (energy split)",
        "500 constructed (A,S,T,partition): energy gain >= eps^2 mu(T)",
    );
}

/// Bipartite box system over classes of size `n1`, `n2` with the given edges.
fn bipartite_system(n1: u32, n2: u32, edges: &[(u32, u32)]) -> (SrSystem, MSet) {
    let sys = SrSystem::product(
        vec![
            (MeasureTriple::uniform(n1).unwrap(), SemiRing::PowerSet { ground: n1 }),
            (MeasureTriple::uniform(n2).unwrap(), SemiRing::PowerSet { ground: n2 }),
        ],
        false,
    )
    .unwrap();
    let atoms: Vec<u32> = edges.iter().map(|&(i, j)| sys.semiring.encode(&[i, j])).collect();
    let a = MSet::new(atoms, n1 * n2).unwrap();
    (sys, a)
}

#[test]
fn c06_refine_step_postconditions() {
    let mut rng = ChaCha12Rng::seed_from_u64(606);
    let eps_list = [rat(1, 4), rat(1, 8)];
    let mut done = 0u32;
    while done < 200 {
        let n1 = rng.random_range(4..=8u32);
        let n2 = rng.random_range(4..=8u32);
        let threshold = rng.random_range(1..n1 + n2);
        let flip = f64::from(rng.random_range(0..3u32)) * 0.06;
        let mut edges = Vec::new();
        for i in 0..n1 {
            for j in 0..n2 {
                let mut present = i + j <= threshold;
                if flip > 0.0 && rng.random_bool(flip) {
                    present = !present;
                }
                if present {
                    edges.push((i, j));
                }
            }
        }
        let (sys, a) = bipartite_system(n1, n2, &edges);
        let p = Partition::trivial(sys.semiring.clone()).unwrap();
        for eps in &eps_list {
            let cfg = EngineConfig::exact(eps.clone());
            let verdict = check_regular_in_partition(&sys, &a, &p, &cfg).unwrap();
            if verdict.regular {
                continue;
            }
            let q = refine_step_with(&sys, &a, &p, &verdict, &cfg).unwrap();
            // oracle: recompute both energies directly from densities
            let direct = |part: &Partition| -> Rat {
                let mut acc = Rat::zero();
                for i in 0..part.size() {
                    let d = sys.triple.density(&a, part.atoms_of(i)).unwrap();
                    acc += sys.triple.measure(part.atoms_of(i)).unwrap() * &d * &d;
                }
                acc
            };
            assert!(q.refines(&p).unwrap());
            assert!(q.size() as u64 <= (sys.semiring.declared_r() + 1) * p.size() as u64);
            let gain = direct(&q) - direct(&p);
            let eps4 = eps * eps * eps * eps;
            assert!(gain >= eps4, "gain {} below eps^4", format_rat(&gain));
            done += 1;
            break;
        }
    }
    pass(
        "criterion 6 (refinement step)",
        "200 irregular bipartite instances: refines, size factor r+1, gain >= eps^4",
    );
}

fn random_digraph(rng: &mut ChaCha12Rng, n: u32) -> DirectedKGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if rng.random_bool(0.5) {
                edges.push(vec![i, j]);
            }
        }
    }
    DirectedKGraph::new(n, 2, edges).unwrap()
}

/// Criterion 7 runs, reused by criterion 10.
fn digraph_runs() -> Vec<(String, Rat, usize, DriverReportData)> {
    let mut out = Vec::new();
    let mut rng = ChaCha12Rng::seed_from_u64(707);
    for eps in [rat(1, 2), rat(1, 3)] {
        for l in [1usize, 2] {
            let n = rng.random_range(10..=12u32);
            let graphs: Vec<(String, DirectedKGraph)> = (0..l)
                .map(|i| (format!("g{i}"), random_digraph(&mut rng, n)))
                .collect();
            let cfg = EngineConfig::exact(eps.clone());
            let data = decompose_digraph(&graphs, &eps, &cfg).unwrap();
            out.push((format!("n={n} l={l} eps={}", format_rat(&eps)), eps.clone(), l, data));
        }
    }
    out
}

#[test]
fn c07_termination_and_bounds() {
    // driver runs at the target eps
    for (label, eps, l, data) in digraph_runs() {
        let cap = BigUint::from(l as u64) * floor_inv_fourth_power(&eps);
        assert!(
            BigUint::from(data.run.refinement_iterations) <= cap,
            "{label}: {} rounds exceeds l * floor(eps^-4) = {cap}",
            data.run.refinement_iterations
        );
        for set in &data.per_set_target {
            assert!(set.regular, "{label}: set {} not regular at target eps", set.id);
        }
        assert!(data.run.certified);
        assert!(within_bound(data.run.final_partition.size() as u64, &data.run.bounds.psi_conservative));
        let e4 = {
            let e = &data.eps_internal;
            e * e * e * e
        };
        for step in &data.run.trace {
            assert!(&step.index_after - &step.index_before >= e4);
            assert!(step.index_after <= Rat::one());
        }
    }
    // plain engine runs: same instances, product-family bounding
    let mut rng = ChaCha12Rng::seed_from_u64(717);
    for eps in [rat(1, 2), rat(1, 3)] {
        for l in [1usize, 2] {
            let n = rng.random_range(10..=12u32);
            let graphs: Vec<(String, DirectedKGraph)> = (0..l)
                .map(|i| (format!("g{i}"), random_digraph(&mut rng, n)))
                .collect();
            let (sys, _) = regulens::instances::digraph_sr_system(&graphs[0].1).unwrap();
            let sets: Vec<(String, MSet)> = graphs
                .iter()
                .map(|(id, g)| {
                    (id.clone(), regulens::instances::digraph_sr_system(g).unwrap().1)
                })
                .collect();
            let p0 = Partition::trivial(sys.semiring.clone()).unwrap();
            let cfg = EngineConfig::exact(eps.clone());
            let run = regulens::regularize(&sys, &sets, &p0, &cfg, &Bounding::ProductFamily).unwrap();
            let cap = BigUint::from(l as u64) * floor_inv_fourth_power(&eps);
            assert!(BigUint::from(run.refinement_iterations) <= cap);
            assert!(run.per_set.iter().all(|s| s.regular));
            assert!(run.certified);
            assert!(within_bound(run.final_partition.size() as u64, &run.bounds.psi_conservative));
        }
    }
    pass(
        "criterion 7 (termination and bounds)",
        "eps in {1/2,1/3}, l in {1,2}, n<=12: rounds <= l*floor(eps^-4), certified, size within psi'",
    );
}

#[test]
fn c08_equitable_construction_bounds() {
    let mut rng = ChaCha12Rng::seed_from_u64(808);
    let mut cases = 0u32;
    for eps in [rat(1, 2), rat(1, 4)] {
        for n in [10u32, 50] {
            for _ in 0..25 {
                let p = rng.random_range(1..=3u32);
                let k = rng.random_range(1..=2u32);
                let t = MeasureTriple::uniform(n).unwrap();
                let coords: Vec<Cell> = (0..p * k)
                    .map(|_| loop {
                        let atoms: Vec<u32> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
                        if !atoms.is_empty() {
                            break Cell::Set(MSet::new(atoms, n).unwrap());
                        }
                    })
                    .collect();
                let family =
                    base_atom_family(&SemiRing::PowerSet { ground: n }, &coords).unwrap();
                let q = equitable_refine(&t, &family, &eps).unwrap();
                assert!(q.refines(&family).unwrap());
                let mut sizes = Vec::new();
                let mut exceptional = Rat::zero();
                for i in 0..q.size() {
                    if q.is_exceptional(i) {
                        exceptional += t.measure(q.atoms_of(i)).unwrap();
                    } else {
                        sizes.push(q.atoms_of(i).len() as u64);
                    }
                }
                let en = eps.numer().magnitude();
                let ed = eps.denom().magnitude();
                sizes.sort_unstable();
                sizes.dedup();
                assert!(sizes.len() <= 1, "unequal block sizes {sizes:?}");
                assert!(sizes
                    .iter()
                    .all(|&s| BigUint::from(s) * ed <= en * BigUint::from(n)));
                assert!(exceptional <= eps);
                // coordinate bound (2/eps + 1) * 2^(pk), exact
                let fam_bound = BigUint::one() << (p * k) as usize;
                assert!(
                    BigUint::from(q.size() as u64) * en
                        <= (BigUint::from(2u32) * ed + en) * &fam_bound
                );
                // product bound (ceil(2/eps) + 1)^k * 2^(p k^2)
                let rate = regulens::equitable_rate(
                    &eps,
                    k,
                    regulens::EquitableVariant::Count,
                )
                .unwrap();
                let product = BigUint::from(q.size() as u64).pow(k);
                assert!(rate
                    .eval_capped(&BigUint::from(p as u64), 4096)
                    .at_least(&product));
                cases += 1;
            }
        }
    }
    pass(
        "criterion 8 (equitable construction)",
        &format!("{cases} random families: refinement, equal blocks, mass and size bounds exact"),
    );
}

#[test]
fn c09_witness_oracle_equivalence() {
    let mut rng = ChaCha12Rng::seed_from_u64(909);
    let mut checked = 0u32;
    for _ in 0..50 {
        // random bipartite graph on parts of size 8
        let mut adj = [0u16; 8];
        let mut edges = Vec::new();
        for (i, row) in adj.iter_mut().enumerate() {
            for j in 0..8u32 {
                if rng.random_bool(0.5) {
                    *row |= 1 << j;
                    edges.push((i as u32, j));
                }
            }
        }
        let (sys, a) = bipartite_system(8, 8, &edges);
        let v = Cell::Product(vec![
            Cell::Set(MSet::full(8)),
            Cell::Set(MSet::full(8)),
        ]);
        let total_edges: u64 = adj.iter().map(|r| r.count_ones() as u64).sum();
        for eps in [rat(1, 4), rat(1, 2)] {
            let en = eps.numer().magnitude().try_into().unwrap_or(u64::MAX);
            let ed: u64 = eps.denom().magnitude().try_into().unwrap_or(u64::MAX);
            // independent brute force over all 2^8 * 2^8 sub-boxes
            let mut best_num: u128 = 0;
            let mut best_den: u128 = 1;
            for m1 in 1u32..256 {
                let c1 = m1.count_ones() as u64;
                for m2 in 1u32..256 {
                    let c2 = m2.count_ones() as u64;
                    // qualifying: |U1||U2|/64 > eps
                    if ed * c1 * c2 <= en * 64 {
                        continue;
                    }
                    let mut e = 0u64;
                    for (i, row) in adj.iter().enumerate() {
                        if m1 & (1 << i) != 0 {
                            e += (*row as u32 & m2).count_ones() as u64;
                        }
                    }
                    // |e/(c1 c2) - E/64| as a fraction
                    let lhs = e as u128 * 64;
                    let rhs = total_edges as u128 * (c1 * c2) as u128;
                    let num = lhs.abs_diff(rhs);
                    let den = 64u128 * (c1 * c2) as u128;
                    if num * best_den > best_num * den {
                        best_num = num;
                        best_den = den;
                    }
                }
            }
            let oracle_dev = if best_num == 0 {
                Rat::zero()
            } else {
                Rat::new(best_num.into(), best_den.into())
            };
            let oracle_irregular = oracle_dev >= eps;

            let cfg = EngineConfig::exact(eps.clone());
            match check_regular_in_cell(&sys, &a, &v, &cfg).unwrap() {
                CellVerdict::Regular { certified, max_deviation } => {
                    assert!(certified);
                    assert!(!oracle_irregular, "oracle found a witness the engine missed");
                    assert_eq!(max_deviation, oracle_dev, "max deviations differ");
                }
                CellVerdict::Irregular(w) => {
                    assert!(oracle_irregular, "engine found a witness the oracle refutes");
                    assert_eq!(w.deviation, oracle_dev, "max deviations differ");
                }
            }
            checked += 1;
        }
    }
    pass(
        "criterion 9 (oracle equivalence)",
        &format!("{checked} cell scans: identical verdicts and maximal deviations"),
    );
}

#[test]
fn c10_theorem_condition_validators() {
    // the digraph runs of criterion 7
    for (label, eps, _, data) in digraph_runs() {
        assert!(data.conditions.validated, "{label}: conditions failed");
        // independent recount of the class conditions from raw block data
        let en = eps.numer().magnitude();
        let ed = eps.denom().magnitude();
        for class in &data.classes {
            let sizes: Vec<u64> = class.blocks.iter().map(|b| b.len() as u64).collect();
            assert!(sizes.windows(2).all(|w| w[0] == w[1]));
            for s in &sizes {
                assert!(BigUint::from(*s) * ed < en * BigUint::from(class.ground));
            }
            assert!(
                BigUint::from(class.exceptional.len() as u64) * ed
                    < en * BigUint::from(class.ground)
            );
        }
        for count in &data.conditions.counts {
            // count * ed >= (ed - en) * q^k
            assert!(
                BigUint::from(count.regular) * ed
                    >= (ed - en) * BigUint::from(data.q).pow(2u32)
            );
        }
    }

    // a k-partite run with classes of size 6
    {
        let mut rng = ChaCha12Rng::seed_from_u64(1010);
        let mut edges = Vec::new();
        for i in 0..6u32 {
            for j in 0..6u32 {
                if rng.random_bool(0.5) {
                    edges.push(vec![i, j]);
                }
            }
        }
        let g = KPartiteKGraph::new(vec![6, 6], edges).unwrap();
        let eps = rat(1, 3);
        let cfg = EngineConfig::exact(eps.clone());
        let data = decompose_kpartite(&[("kp".into(), g)], &eps, &cfg).unwrap();
        assert!(data.conditions.validated);
        assert_eq!(data.classes.len(), 2);
    }

    // grid runs, k = 2, m = 16, both base semi-rings
    {
        let cells: Vec<Vec<u32>> = (0..8u32)
            .flat_map(|i| (0..8u32).map(move |j| vec![i, j]))
            .collect();
        let l = GridSubset::new(2, 16, cells).unwrap();
        let eps = rat(1, 2);
        let cfg = EngineConfig::exact(eps.clone());
        for semiring in [CubeSemiRing::Sets, CubeSemiRing::Intervals] {
            let data =
                decompose_cube(&[("quad".into(), l.clone())], &eps, &cfg, semiring).unwrap();
            assert!(data.conditions.validated, "{semiring:?} failed validation");
            if semiring == CubeSemiRing::Intervals {
                // interval classes stay contiguous: lengths strictly below eps
                for b in &data.classes[0].blocks {
                    assert!(b.atoms().windows(2).all(|w| w[1] == w[0] + 1));
                    assert!((b.len() as u64) * 2 < 16);
                }
            }
        }
    }

    // an undirected 8-vertex run with internal eps / k!
    {
        let mut rng = ChaCha12Rng::seed_from_u64(1011);
        let mut edges = Vec::new();
        for i in 0..8u32 {
            for j in (i + 1)..8u32 {
                if rng.random_bool(0.5) {
                    edges.push(vec![i, j]);
                }
            }
        }
        let g = DirectedKGraph::new(8, 2, edges).unwrap().symmetrized().unwrap();
        let eps = rat(1, 2);
        let cfg = EngineConfig::exact(eps.clone());
        let data = decompose_undirected(&[("u".into(), g)], &eps, &cfg).unwrap();
        assert!(data.conditions.validated);
        assert_eq!(data.eps_directed, Some(rat(1, 4)));
        // count * ed >= (ed - en) * C(q, 2)
        let binom = data.q * (data.q - 1) / 2;
        for count in &data.conditions.counts {
            assert!(count.regular * 2 >= binom);
            assert_eq!(count.baseline, binom);
        }
    }

    pass(
        "criterion 10 (theorem validators)",
        "digraph, k-partite, grid (both kinds) and undirected conditions all reconfirmed",
    );
}

#[test]
fn c11_cli_determinism() {
    use std::process::Command;
    let bin = env!("CARGO_BIN_EXE_regulens");
    let dir = std::env::temp_dir().join("regulens-acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    let graph = dir.join("det.txt");
    std::fs::write(&graph, "2 10\n0 1\n1 2\n3 4\n5 6\n7 8\n0 9\n2 7\n").unwrap();
    let grid = dir.join("det-grid.txt");
    let mut grid_text = String::from("2 8\n");
    for i in 0..4u32 {
        for j in 0..4u32 {
            grid_text.push_str(&format!("{i} {j}\n"));
        }
    }
    std::fs::write(&grid, grid_text).unwrap();

    let invocations: Vec<Vec<String>> = vec![
        vec![
            "regularize".into(),
            "--eps".into(),
            "1/4".into(),
            "--mode".into(),
            "sample".into(),
            "--seed".into(),
            "7".into(),
            graph.display().to_string(),
        ],
        vec![
            "regularize".into(),
            "--eps".into(),
            "1/2".into(),
            "--bounding".into(),
            "equitable".into(),
            graph.display().to_string(),
        ],
        vec![
            "cube".into(),
            "--eps".into(),
            "1/2".into(),
            "--semiring".into(),
            "intervals".into(),
            grid.display().to_string(),
        ],
        vec![
            "verify".into(),
            "--suite".into(),
            "defect-cs".into(),
            "--cases".into(),
            "50".into(),
            "--seed".into(),
            "3".into(),
        ],
    ];
    for (i, args) in invocations.iter().enumerate() {
        let mut outputs = Vec::new();
        for round in 0..2 {
            let path = dir.join(format!("out-{i}-{round}.json"));
            let status = Command::new(bin)
                .args(args)
                .arg("--output")
                .arg(&path)
                .status()
                .unwrap();
            assert!(
                status.code().is_some(),
                "command {args:?} terminated without a code"
            );
            outputs.push(std::fs::read(&path).unwrap());
        }
        assert_eq!(outputs[0], outputs[1], "run {i}: reports differ between identical runs");
        assert!(!outputs[0].is_empty());
    }
    pass(
        "criterion 11 (determinism)",
        "4 CLI invocations, identical config and seed: byte-identical reports",
    );
}
