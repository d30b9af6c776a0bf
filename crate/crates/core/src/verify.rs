//! Seeded property suites for the inequalities the engine relies on, plus
//! the empirical root-exponent check.
//!
//! Each suite draws random instances from a deterministic generator and
//! checks an exact inequality; a failure carries the fully serialized
//! counterexample. These suites back the `verify` subcommand.

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::measure::{MSet, MeasureTriple};
use crate::partition::{base_atom_family, equitable_refine, index, Partition};
use crate::rational::{format_rat, rat, Rat};
use crate::regularity::{
    check_regular_in_cell, check_regular_in_partition, defect_cs_check, refine_step_with,
    CellVerdict, DefectPart, EngineConfig, SrSystem,
};
use crate::semiring::{verify_semiring_axioms, Cell, SemiRing};
use num_traits::{One, Zero};

/// Names of the available suites, in the order `verify` runs them.
pub const SUITES: &[&str] = &[
    "semiring",
    "index-bound",
    "index-monotone",
    "defect-cs",
    "energy-split",
    "refine-step",
    "equitable",
];

/// Default case count per suite.
pub fn default_cases(name: &str) -> u64 {
    match name {
        "semiring" => 500,
        "index-bound" => 10_000,
        "index-monotone" => 1_000,
        "defect-cs" => 10_000,
        "energy-split" => 500,
        "refine-step" => 200,
        "equitable" => 300,
        _ => 100,
    }
}

/// Outcome of one suite.
#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub name: String,
    pub cases: u64,
    pub passes: u64,
    pub failures: u64,
    pub first_counterexample: Option<String>,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        SuiteReport {
            name: name.to_string(),
            cases: 0,
            passes: 0,
            failures: 0,
            first_counterexample: None,
        }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if ok {
            self.passes += 1;
        } else {
            self.failures += 1;
            if self.first_counterexample.is_none() {
                self.first_counterexample = Some(describe());
            }
        }
    }

    pub fn all_passed(&self) -> bool {
        self.failures == 0
    }
}

fn suite_rng(seed: u64, salt: &str) -> ChaCha12Rng {
    let mut h: u64 = 0xcbf29ce484222325 ^ seed;
    for b in salt.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    ChaCha12Rng::seed_from_u64(h)
}

/// Run one suite by name.
pub fn run_suite(name: &str, cases: u64, seed: u64) -> Result<SuiteReport> {
    match name {
        "semiring" => suite_semiring(cases, seed),
        "index-bound" => suite_index_bound(cases, seed),
        "index-monotone" => suite_index_monotone(cases, seed),
        "defect-cs" => suite_defect_cs(cases, seed),
        "energy-split" => suite_energy_split(cases, seed),
        "refine-step" => suite_refine_step(cases, seed),
        "equitable" => suite_equitable(cases, seed),
        other => Err(Error::Validation(format!(
            "unknown suite {other:?}; available: {}",
            SUITES.join(", ")
        ))),
    }
}

// ----------------------------------------------------------------------
// Generators.
// ----------------------------------------------------------------------

fn random_triple(rng: &mut ChaCha12Rng, n: u32, allow_weighted: bool) -> MeasureTriple {
    if !allow_weighted || rng.random_bool(0.5) {
        return MeasureTriple::uniform(n).expect("uniform triple");
    }
    let raw: Vec<u64> = (0..n).map(|_| rng.random_range(1..6u64)).collect();
    let total: u64 = raw.iter().sum();
    let weights = raw.into_iter().map(|a| rat(a, total)).collect();
    MeasureTriple::weighted(weights).expect("normalized weights")
}

fn random_subset(rng: &mut ChaCha12Rng, ground: u32) -> MSet {
    let atoms: Vec<u32> = (0..ground).filter(|_| rng.random_bool(0.5)).collect();
    MSet::new(atoms, ground).expect("subset in range")
}

fn random_nonempty(rng: &mut ChaCha12Rng, ground: u32) -> MSet {
    loop {
        let s = random_subset(rng, ground);
        if !s.is_empty() {
            return s;
        }
    }
}

fn random_partition(rng: &mut ChaCha12Rng, ground: u32, max_parts: u32) -> Partition {
    let parts = rng.random_range(1..=max_parts.max(1));
    let mut groups: Vec<Vec<u32>> = vec![Vec::new(); parts as usize];
    for atom in 0..ground {
        groups[rng.random_range(0..parts) as usize].push(atom);
    }
    let cells: Vec<Cell> = groups
        .into_iter()
        .filter(|g| !g.is_empty())
        .map(|g| Cell::Set(MSet::new(g, ground).expect("atoms in range")))
        .collect();
    Partition::new(SemiRing::PowerSet { ground }, cells).expect("valid partition")
}

fn random_refinement(rng: &mut ChaCha12Rng, p: &Partition) -> Partition {
    let ground = p.ground_size();
    let mut cells = Vec::new();
    for i in 0..p.size() {
        let atoms = p.atoms_of(i).atoms();
        if atoms.len() >= 2 && rng.random_bool(0.7) {
            let mut shuffled = atoms.to_vec();
            for j in (1..shuffled.len()).rev() {
                let swap = rng.random_range(0..=j);
                shuffled.swap(j, swap);
            }
            let pivot = rng.random_range(1..atoms.len());
            let (left, right) = shuffled.split_at(pivot);
            cells.push(Cell::Set(MSet::new(left.to_vec(), ground).unwrap()));
            cells.push(Cell::Set(MSet::new(right.to_vec(), ground).unwrap()));
        } else {
            cells.push(p.cell(i).clone());
        }
    }
    Partition::new(p.semiring().clone(), cells).expect("refinement is a partition")
}

fn random_positive_rat(rng: &mut ChaCha12Rng) -> Rat {
    rat(rng.random_range(1..=12), rng.random_range(1..=8))
}

fn random_interval(rng: &mut ChaCha12Rng, ground: u32) -> Cell {
    let lo = rng.random_range(0..ground);
    let hi = rng.random_range(lo + 1..=ground);
    Cell::Interval { lo, hi }
}

/// A constrained product cell: coordinates pairwise disjoint or equal.
fn random_deq_cell(rng: &mut ChaCha12Rng, ground: u32, k: u32) -> Cell {
    loop {
        let first = random_nonempty(rng, ground);
        let mut coords = vec![Cell::Set(first.clone())];
        let mut ok = true;
        for _ in 1..k {
            if rng.random_bool(0.5) {
                coords.push(coords[0].clone());
            } else {
                let outside: Vec<u32> =
                    first.complement().iter().filter(|_| rng.random_bool(0.5)).collect();
                if outside.is_empty() {
                    ok = false;
                    break;
                }
                coords.push(Cell::Set(MSet::new(outside, ground).unwrap()));
            }
        }
        if ok {
            return Cell::Product(coords);
        }
    }
}

// ----------------------------------------------------------------------
// Suites.
// ----------------------------------------------------------------------

/// Intersection closure and difference decomposition on random cell pairs
/// across all semi-ring kinds.
fn suite_semiring(cases: u64, seed: u64) -> Result<SuiteReport> {
    let mut rng = suite_rng(seed, "semiring");
    let mut report = SuiteReport::new("semiring");
    while report.cases < cases {
        let which = rng.random_range(0..4u32);
        let (semiring, universe, pair) = match which {
            0 => {
                let u = rng.random_range(2..=6u32);
                let s = SemiRing::PowerSet { ground: u };
                let a = random_nonempty(&mut rng, u);
                let b = random_nonempty(&mut rng, u);
                (s, MeasureTriple::uniform(u)?, (Cell::Set(a), Cell::Set(b)))
            }
            1 => {
                let u = rng.random_range(4..=12u32);
                let s = SemiRing::Interval { ground: u };
                let c1 = random_interval(&mut rng, u);
                let c2 = random_interval(&mut rng, u);
                (s, MeasureTriple::uniform(u)?, (c1, c2))
            }
            2 => {
                let u = rng.random_range(2..=4u32);
                let base = SemiRing::PowerSet { ground: u };
                let s = SemiRing::power(base, 2)?;
                let a = random_deq_cell(&mut rng, u, 2);
                let b = random_deq_cell(&mut rng, u, 2);
                (s, MeasureTriple::uniform(u)?.product(2)?, (a, b))
            }
            _ => {
                let u1 = rng.random_range(2..=4u32);
                let u2 = rng.random_range(2..=4u32);
                let s = SemiRing::product_of(
                    vec![SemiRing::PowerSet { ground: u1 }, SemiRing::PowerSet { ground: u2 }],
                    false,
                )?;
                let a = Cell::Product(vec![
                    Cell::Set(random_nonempty(&mut rng, u1)),
                    Cell::Set(random_nonempty(&mut rng, u2)),
                ]);
                let b = Cell::Product(vec![
                    Cell::Set(random_nonempty(&mut rng, u1)),
                    Cell::Set(random_nonempty(&mut rng, u2)),
                ]);
                let inner = MeasureTriple::uniform(u1)?;
                let outer = MeasureTriple::uniform(u2)?;
                let weights = (0..u1 * u2)
                    .map(|i| inner.weight(i / u2) * outer.weight(i % u2))
                    .collect();
                (s, MeasureTriple::weighted(weights)?, (a, b))
            }
        };
        let axe = verify_semiring_axioms(&semiring, &universe, std::slice::from_ref(&pair))?;
        report.record(axe.all_pass, || {
            format!("pair ({}, {}): {:?}", pair.0.display(), pair.1.display(), axe.entries[0])
        });
    }
    Ok(report)
}

/// `0 <= index <= mu(a) <= 1` on random sets and partitions.
fn suite_index_bound(cases: u64, seed: u64) -> Result<SuiteReport> {
    let mut rng = suite_rng(seed, "index-bound");
    let mut report = SuiteReport::new("index-bound");
    for _ in 0..cases {
        let n = rng.random_range(2..=10u32);
        let t = random_triple(&mut rng, n, true);
        let a = random_subset(&mut rng, n);
        let p = random_partition(&mut rng, n, 5);
        let ind = index(&t, &a, &p)?;
        let mu = t.measure(&a)?;
        let ok = ind >= Rat::zero() && ind <= mu && mu <= Rat::one();
        report.record(ok, || {
            format!(
                "n={n} a={:?} partition of {} cells: index={} mu={}",
                a.atoms(),
                p.size(),
                format_rat(&ind),
                format_rat(&mu)
            )
        });
    }
    Ok(report)
}

/// Refining can only raise the index.
fn suite_index_monotone(cases: u64, seed: u64) -> Result<SuiteReport> {
    let mut rng = suite_rng(seed, "index-monotone");
    let mut report = SuiteReport::new("index-monotone");
    for _ in 0..cases {
        let n = rng.random_range(2..=10u32);
        let t = random_triple(&mut rng, n, true);
        let a = random_subset(&mut rng, n);
        let p = random_partition(&mut rng, n, 4);
        let q = random_refinement(&mut rng, &p);
        let ind_p = index(&t, &a, &p)?;
        let ind_q = index(&t, &a, &q)?;
        report.record(ind_q >= ind_p, || {
            format!(
                "n={n} a={:?}: coarse {} cells index={}, fine {} cells index={}",
                a.atoms(),
                p.size(),
                format_rat(&ind_p),
                q.size(),
                format_rat(&ind_q)
            )
        });
    }
    Ok(report)
}

/// Both parts of the defect Cauchy–Schwarz inequality, with the defect
/// computed as the exact slack of the hypothesis.
fn suite_defect_cs(cases: u64, seed: u64) -> Result<SuiteReport> {
    let mut rng = suite_rng(seed, "defect-cs");
    let mut report = SuiteReport::new("defect-cs");
    for _ in 0..cases {
        let n = rng.random_range(2..=8usize);
        let c: Vec<Rat> = (0..n).map(|_| random_positive_rat(&mut rng)).collect();
        let mut x: Vec<Rat> = (0..n).map(|_| random_positive_rat(&mut rng)).collect();
        let mut j_set: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
        if j_set.is_empty() {
            j_set.push(rng.random_range(0..n));
        }
        if j_set.len() == n {
            j_set.pop();
        }
        // hypothesis slack for J; the complement has the opposite sign
        let slack = |c: &[Rat], x: &[Rat], j: &[usize]| -> Rat {
            let sum_c: Rat = c.iter().sum();
            let sum_cx: Rat = c.iter().zip(x).map(|(a, b)| a * b).sum();
            let sum_cj: Rat = j.iter().map(|&i| c[i].clone()).sum();
            let sum_cxj: Rat = j.iter().map(|&i| &c[i] * &x[i]).sum();
            &sum_c * &sum_cxj - &sum_cx * &sum_cj
        };
        let mut s = slack(&c, &x, &j_set);
        if s.is_zero() {
            x[0] += Rat::one();
            s = slack(&c, &x, &j_set);
        }
        if s < Rat::zero() {
            j_set = (0..n).filter(|i| !j_set.contains(i)).collect();
            s = -s;
        }
        if s.is_zero() {
            let out = defect_cs_check(&c, &x, &j_set, &Rat::one())?;
            report.record(out.part1, || format!("degenerate draw, part 1 failed: c={c:?} x={x:?}"));
            continue;
        }
        let out = defect_cs_check(&c, &x, &j_set, &s)?;
        let ok = out.part1 && out.part2 == DefectPart::Holds;
        report.record(ok, || {
            format!(
                "c=[{}] x=[{}] J={:?} gamma={}: {:?}",
                c.iter().map(format_rat).collect::<Vec<_>>().join(","),
                x.iter().map(format_rat).collect::<Vec<_>>().join(","),
                j_set,
                format_rat(&s),
                out
            )
        });
    }
    Ok(report)
}

/// Splitting along a deviating sub-set raises the cell-local energy by at
/// least `eps^2 * mu(T)`.
fn suite_energy_split(cases: u64, seed: u64) -> Result<SuiteReport> {
    let mut rng = suite_rng(seed, "energy-split");
    let mut report = SuiteReport::new("energy-split");
    'outer: while report.cases < cases {
        let n = rng.random_range(4..=10u32);
        let t = random_triple(&mut rng, n, false);
        let s = loop {
            let s = random_subset(&mut rng, n);
            if s.len() >= 2 {
                break s;
            }
        };
        let t_set = {
            let keep = rng.random_range(1..s.len());
            MSet::new(s.atoms()[..keep].to_vec(), n).unwrap()
        };
        // a set with different densities on T and S
        let mut a = random_subset(&mut rng, n);
        let mut tries = 0;
        let eps = loop {
            let ds = t.density(&a, &s)?;
            let dt = t.density(&a, &t_set)?;
            let dev = if dt >= ds { &dt - &ds } else { &ds - &dt };
            if !dev.is_zero() {
                break dev;
            }
            a = random_subset(&mut rng, n);
            tries += 1;
            if tries > 32 {
                continue 'outer;
            }
        };
        // a partition refining both S and T: random splits of T, S\T, X\S
        let mut cells = Vec::new();
        for part in [t_set.clone(), s.difference(&t_set), s.complement()] {
            if part.is_empty() {
                continue;
            }
            let atoms = part.atoms();
            if atoms.len() >= 2 && rng.random_bool(0.6) {
                let pivot = rng.random_range(1..atoms.len());
                cells.push(Cell::Set(MSet::new(atoms[..pivot].to_vec(), n).unwrap()));
                cells.push(Cell::Set(MSet::new(atoms[pivot..].to_vec(), n).unwrap()));
            } else {
                cells.push(Cell::Set(part));
            }
        }
        let u = Partition::new(SemiRing::PowerSet { ground: n }, cells).unwrap();
        // left side straight from densities, not through index()
        let mut lhs = Rat::zero();
        for i in 0..u.size() {
            let cell = u.atoms_of(i);
            if cell.is_subset(&s) {
                let d = t.density(&a, cell)?;
                lhs += t.measure(cell)? * &d * &d;
            }
        }
        let ds = t.density(&a, &s)?;
        let rhs = t.measure(&s)? * &ds * &ds + &eps * &eps * t.measure(&t_set)?;
        report.record(lhs >= rhs, || {
            format!(
                "n={n} S={:?} T={:?} A={:?} eps={}: lhs={} rhs={}",
                s.atoms(),
                t_set.atoms(),
                a.atoms(),
                format_rat(&eps),
                format_rat(&lhs),
                format_rat(&rhs)
            )
        });
    }
    Ok(report)
}

/// The refinement step's postconditions on irregular bipartite instances.
fn suite_refine_step(cases: u64, seed: u64) -> Result<SuiteReport> {
    let mut rng = suite_rng(seed, "refine-step");
    let mut report = SuiteReport::new("refine-step");
    let eps_list = [rat(1, 4), rat(1, 8), rat(1, 16)];
    while report.cases < cases {
        let n1 = rng.random_range(3..=6u32);
        let n2 = rng.random_range(3..=6u32);
        let t1 = MeasureTriple::uniform(n1)?;
        let t2 = MeasureTriple::uniform(n2)?;
        let s1 = SemiRing::PowerSet { ground: n1 };
        let s2 = SemiRing::PowerSet { ground: n2 };
        let sys = SrSystem::product(vec![(t1, s1), (t2, s2)], false)?;
        // near-half-graphs are reliably irregular
        let threshold = rng.random_range(1..n1 + n2);
        let flip_prob = f64::from(rng.random_range(0..4u32)) * 0.05;
        let mut edges = Vec::new();
        for i in 0..n1 {
            for j in 0..n2 {
                let mut present = i + j <= threshold;
                if flip_prob > 0.0 && rng.random_bool(flip_prob) {
                    present = !present;
                }
                if present {
                    edges.push(sys.semiring.encode(&[i, j]));
                }
            }
        }
        let a = MSet::new(edges, n1 * n2)?;
        let p = Partition::trivial(sys.semiring.clone())?;
        for eps in &eps_list {
            let cfg = EngineConfig::exact(eps.clone());
            let verdict = check_regular_in_partition(&sys, &a, &p, &cfg)?;
            if verdict.regular {
                continue;
            }
            let q = refine_step_with(&sys, &a, &p, &verdict, &cfg)?;
            // recompute both energies straight from densities
            let direct_index = |part: &Partition| -> Result<Rat> {
                let mut acc = Rat::zero();
                for i in 0..part.size() {
                    let d = sys.triple.density(&a, part.atoms_of(i))?;
                    acc += sys.triple.measure(part.atoms_of(i))? * &d * &d;
                }
                Ok(acc)
            };
            let gain = direct_index(&q)? - direct_index(&p)?;
            let eps4 = eps * eps * eps * eps;
            let ok = q.refines(&p)?
                && q.size() as u64 <= (sys.semiring.declared_r() + 1) * p.size() as u64
                && gain >= eps4;
            report.record(ok, || {
                format!(
                    "bipartite {n1}x{n2}, eps={}, |p|={}, |q|={}, gain={}",
                    format_rat(eps),
                    p.size(),
                    q.size(),
                    format_rat(&gain)
                )
            });
            break;
        }
    }
    Ok(report)
}

/// The equitable block construction: refinement, equal block sizes, bounded
/// exceptional mass, and both closed-form size bounds.
fn suite_equitable(cases: u64, seed: u64) -> Result<SuiteReport> {
    let mut rng = suite_rng(seed, "equitable");
    let mut report = SuiteReport::new("equitable");
    let eps_list = [rat(1, 2), rat(1, 4)];
    for case in 0..cases {
        let n = [10u32, 20, 50][rng.random_range(0..3usize)];
        let p = rng.random_range(1..=3u32);
        let k = rng.random_range(1..=2u32);
        let eps = &eps_list[(case % 2) as usize];
        let t = MeasureTriple::uniform(n)?;
        // coordinate sets of p product cells of arity k
        let coords: Vec<Cell> = (0..p * k)
            .map(|_| Cell::Set(random_nonempty(&mut rng, n)))
            .collect();
        let family = base_atom_family(&SemiRing::PowerSet { ground: n }, &coords)?;
        let r = family.size() as u64;
        let q = equitable_refine(&t, &family, eps)?;

        let refines = q.refines(&family)?;
        let mut sizes = Vec::new();
        let mut exceptional_mass = Rat::zero();
        for i in 0..q.size() {
            if q.is_exceptional(i) {
                exceptional_mass += t.measure(q.atoms_of(i))?;
            } else {
                sizes.push(q.atoms_of(i).len() as u64);
            }
        }
        sizes.sort_unstable();
        sizes.dedup();
        let en = eps.numer().magnitude();
        let ed = eps.denom().magnitude();
        let sizes_ok = sizes.len() <= 1
            && sizes
                .iter()
                .all(|&s| BigUint::from(s) * ed <= en * BigUint::from(n));
        let mass_ok = &exceptional_mass <= eps;
        // coordinate bound (2/eps + 1) * 2^(pk), exact rational comparison
        let family_bound = BigUint::one() << (p * k) as usize;
        let coord_ok = BigUint::from(q.size() as u64) * en
            <= (BigUint::from(2u32) * ed + en) * &family_bound;
        // product bound via the quoted rate formula
        let rate =
            crate::partition::equitable_rate(eps, k, crate::partition::EquitableVariant::Count)?;
        let product_size = num_traits::Pow::pow(&BigUint::from(q.size() as u64), k);
        let product_ok = rate
            .eval_capped(&BigUint::from(p as u64), 4096)
            .at_least(&product_size);
        let ok = refines && sizes_ok && mass_ok && coord_ok && product_ok && r <= 1 << (p * k);
        report.record(ok, || {
            format!(
                "n={n} p={p} k={k} eps={} r={r}: |Q|={} sizes={sizes:?} mass={} \
                 (refines={refines} sizes_ok={sizes_ok} mass_ok={mass_ok} \
                 coord_ok={coord_ok} product_ok={product_ok})",
                format_rat(eps),
                q.size(),
                format_rat(&exceptional_mass)
            )
        });
    }
    Ok(report)
}

// ----------------------------------------------------------------------
// Empirical root-exponent check.
// ----------------------------------------------------------------------

/// Report of [`claim_k_root_check`]; informational only.
#[derive(Clone, Debug)]
pub struct ClaimKRootReport {
    pub cases: u64,
    pub premise_held: u64,
    pub violations: u64,
    pub first_violation: Option<String>,
}

/// Empirically probe the claim that `delta`-regularity of a product cell
/// (`delta = eps^(1/k)`) forces density deviations below `eps` for every
/// sub-box whose coordinates each keep more than an `eps` share of the
/// cell's — including boxes whose overall measure share is only `eps^k`,
/// which the `delta`-regularity quantifier does not obviously cover.
/// Violations are reported, never treated as a failure.
pub fn claim_k_root_check(cases: u64, seed: u64) -> Result<ClaimKRootReport> {
    let mut rng = suite_rng(seed, "claim-k-root");
    let mut report = ClaimKRootReport {
        cases: 0,
        premise_held: 0,
        violations: 0,
        first_violation: None,
    };
    let k = 2u32;
    while report.cases < cases {
        report.cases += 1;
        let n = rng.random_range(6..=8u32);
        let half = n / 2;
        let delta = if rng.random_bool(0.5) { rat(1, 2) } else { rat(1, 3) };
        let eps = &delta * &delta; // eps = delta^k for k = 2
        let t = MeasureTriple::uniform(n)?;
        let sys = SrSystem::power(t, SemiRing::PowerSet { ground: n }, k)?;
        let v1 = MSet::new((0..half).collect(), n)?;
        let v2 = MSet::new((half..n).collect(), n)?;
        let mut edges = Vec::new();
        for i in v1.iter() {
            for j in v2.iter() {
                if rng.random_bool(0.5) {
                    edges.push(sys.semiring.encode(&[i, j]));
                }
            }
        }
        let a = MSet::new(edges, n * n)?;
        let v = Cell::Product(vec![Cell::Set(v1.clone()), Cell::Set(v2.clone())]);
        let cfg = EngineConfig::exact(delta.clone());
        let premise = matches!(
            check_regular_in_cell(&sys, &a, &v, &cfg)?,
            CellVerdict::Regular { .. }
        );
        if !premise {
            continue;
        }
        report.premise_held += 1;
        let d_v = sys.triple.density(&a, &sys.semiring.cell_atoms(&v))?;
        let subsets = |atoms: &[u32]| -> Vec<Vec<u32>> {
            (1u32..(1 << atoms.len()))
                .map(|mask| {
                    atoms
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask & (1 << i) != 0)
                        .map(|(_, &a)| a)
                        .collect()
                })
                .collect()
        };
        let big_enough = |len: usize, whole: usize| {
            BigUint::from(len as u64) * eps.denom().magnitude()
                > eps.numer().magnitude() * BigUint::from(whole as u64)
        };
        'boxes: for u1 in subsets(v1.atoms()) {
            if !big_enough(u1.len(), v1.len()) {
                continue;
            }
            for u2 in subsets(v2.atoms()) {
                if !big_enough(u2.len(), v2.len()) {
                    continue;
                }
                let mut atoms = Vec::new();
                for &i in &u1 {
                    for &j in &u2 {
                        atoms.push(sys.semiring.encode(&[i, j]));
                    }
                }
                let u_set = MSet::new(atoms, n * n)?;
                let d_u = sys.triple.density(&a, &u_set)?;
                let dev = if d_u >= d_v { &d_u - &d_v } else { &d_v - &d_u };
                if dev >= eps {
                    report.violations += 1;
                    if report.first_violation.is_none() {
                        report.first_violation = Some(format!(
                            "n={n} delta={} eps={}: U={u1:?}x{u2:?} deviates by {}",
                            format_rat(&delta),
                            format_rat(&eps),
                            format_rat(&dev)
                        ));
                    }
                    break 'boxes;
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass_small_runs() {
        for name in SUITES {
            let cases = match *name {
                "refine-step" => 10,
                "energy-split" => 40,
                _ => 60,
            };
            let report = run_suite(name, cases, 42).unwrap();
            assert!(
                report.all_passed(),
                "suite {name} failed: {:?}",
                report.first_counterexample
            );
            assert_eq!(report.cases, cases);
        }
    }

    #[test]
    fn unknown_suite_is_an_error() {
        assert!(run_suite("no-such-suite", 1, 0).is_err());
    }

    #[test]
    fn claim_check_runs_and_reports() {
        let r = claim_k_root_check(20, 3).unwrap();
        assert_eq!(r.cases, 20);
        // informational: violations may or may not occur
    }
}
