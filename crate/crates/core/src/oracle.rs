//! Brute-force ground truth for tiny instances: exhaustive enumeration of
//! states, underlying graphs and polymers, the exact transition kernel when
//! `k = Q`, connectivity of the one-polymer move graph, and distances
//! between empirical and target distributions.

use std::collections::{BTreeMap, HashMap, VecDeque};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::energy::Energy;
use crate::error::{Error, Result};
use crate::graph::{binomial, DegreeMode, UnderlyingGraph};
use crate::lattice::{Lattice, VertexId};
use crate::state::{canonical_key_of, CanonicalKey, Occupancy, Polymer, SystemState};

/// Largest lattice accepted by state enumeration.
pub const MAX_ENUMERATED_VERTICES: usize = 36;

/// All self-avoiding paths of `length` vertices, each listed once in the
/// orientation whose first vertex is smaller than its last.
pub fn enumerate_paths(lattice: &Lattice, length: usize) -> Vec<Polymer> {
    let mut out = Vec::new();
    let mut path = Vec::with_capacity(length);
    for v in lattice.vertices() {
        path.push(v);
        extend_paths(lattice, &mut path, length, &mut out);
        path.pop();
    }
    out
}

fn extend_paths(lattice: &Lattice, path: &mut Vec<VertexId>, length: usize, out: &mut Vec<Polymer>) {
    if path.len() == length {
        if path[0] < path[length - 1] || length == 1 {
            out.push(Polymer::new(path.clone()));
        }
        return;
    }
    let end = *path.last().expect("non-empty");
    for &u in lattice.neighbors(end) {
        if !path.contains(&u) {
            path.push(u);
            extend_paths(lattice, path, length, out);
            path.pop();
        }
    }
}

/// Canonical paths with vertex bitmasks, for fast disjointness tests.
struct PathCatalog {
    paths: Vec<Polymer>,
    masks: Vec<u64>,
}

impl PathCatalog {
    fn new(lattice: &Lattice, length: usize) -> Result<Self> {
        if lattice.vertex_count() > 64 {
            return Err(Error::TooLarge(format!(
                "{} vertices exceed the 64-vertex catalog",
                lattice.vertex_count()
            )));
        }
        let paths = enumerate_paths(lattice, length);
        let masks = paths
            .iter()
            .map(|c| c.vertices().iter().fold(0u64, |m, v| m | 1 << v.0))
            .collect();
        Ok(PathCatalog { paths, masks })
    }

    /// Calls `f` on every increasing `n`-tuple of pairwise disjoint paths.
    fn for_each_state(&self, n: usize, mut f: impl FnMut(&[u32])) {
        let mut chosen = Vec::with_capacity(n);
        self.recurse(n, 0, 0, &mut chosen, &mut f);
    }

    fn recurse(&self, n: usize, from: usize, used: u64, chosen: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
        if chosen.len() == n {
            f(chosen);
            return;
        }
        for i in from..self.paths.len() {
            if self.masks[i] & used == 0 {
                chosen.push(i as u32);
                self.recurse(n, i + 1, used | self.masks[i], chosen, f);
                chosen.pop();
            }
        }
    }
}

/// Every state of `n` polymers of `length` vertices, once per canonical key.
#[derive(Clone, Debug)]
pub struct StateSpace {
    lattice: Lattice,
    n: usize,
    length: usize,
    states: Vec<Vec<Polymer>>,
    index: HashMap<CanonicalKey, usize>,
}

impl StateSpace {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn polymers(&self, i: usize) -> &[Polymer] {
        &self.states[i]
    }

    pub fn state(&self, i: usize) -> SystemState {
        SystemState::new(&self.lattice, self.states[i].clone()).expect("enumerated states are valid")
    }

    pub fn key(&self, i: usize) -> CanonicalKey {
        canonical_key_of(&self.states[i])
    }

    pub fn index_of(&self, key: &CanonicalKey) -> Option<usize> {
        self.index.get(key).copied()
    }
}

/// Enumerates all states of `n` polymers of `length` vertices.
pub fn enumerate_states(lattice: &Lattice, n: usize, length: usize) -> Result<StateSpace> {
    if lattice.vertex_count() > MAX_ENUMERATED_VERTICES {
        return Err(Error::TooLarge(format!(
            "a^d = {} exceeds {MAX_ENUMERATED_VERTICES}",
            lattice.vertex_count()
        )));
    }
    if n * length > lattice.vertex_count() || length < 2 || n == 0 {
        return Err(Error::Infeasible(format!(
            "{n} polymers of length {length} on {} vertices",
            lattice.vertex_count()
        )));
    }
    let catalog = PathCatalog::new(lattice, length)?;
    let mut states = Vec::new();
    let mut index = HashMap::new();
    catalog.for_each_state(n, |tuple| {
        let polymers: Vec<Polymer> = tuple.iter().map(|&i| catalog.paths[i as usize].clone()).collect();
        index.insert(canonical_key_of(&polymers), states.len());
        states.push(polymers);
    });
    Ok(StateSpace {
        lattice: lattice.clone(),
        n,
        length,
        states,
        index,
    })
}

/// Connectivity of the move graph whose edges join states that differ in
/// exactly one polymer.
#[derive(Clone, Debug, Serialize)]
pub struct ReachabilityReport {
    pub irreducible: bool,
    pub components: usize,
    pub states: u64,
    /// Two states in different components, when there are several.
    pub witness: Option<(String, String)>,
}

/// Disjoint sets over dense indices.
struct DisjointSets {
    parent: Vec<u32>,
}

impl DisjointSets {
    fn add(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb) as usize] = ra.min(rb);
        }
    }
}

/// Irreducibility by streaming over all states without storing them.
///
/// Two states differ in one polymer exactly when they share `n - 1`
/// polymers, so states are connected iff their `(n - 1)`-subsets ("cores")
/// are, and it suffices to join the cores of every state.
pub fn check_irreducibility_streaming(
    lattice: &Lattice,
    n: usize,
    length: usize,
) -> Result<ReachabilityReport> {
    if n * length > lattice.vertex_count() || length < 2 || n == 0 {
        return Err(Error::Infeasible(format!(
            "{n} polymers of length {length} on {} vertices",
            lattice.vertex_count()
        )));
    }
    let catalog = PathCatalog::new(lattice, length)?;
    if catalog.paths.len() > u16::MAX as usize || n > 4 {
        return Err(Error::TooLarge("streaming check supports N <= 4".into()));
    }
    let pack = |tuple: &[u32], skip: usize| -> u64 {
        tuple
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != skip)
            .fold(0u64, |acc, (_, &p)| (acc << 16) | (p as u64 + 1))
    };
    let mut sets = DisjointSets { parent: Vec::new() };
    let mut cores: HashMap<u64, u32> = HashMap::new();
    let mut count = 0u64;
    catalog.for_each_state(n, |tuple| {
        count += 1;
        let mut first = None;
        for skip in 0..n {
            let key = pack(tuple, skip);
            let id = *cores.entry(key).or_insert_with(|| sets.add());
            match first {
                None => first = Some(id),
                Some(f) => sets.union(f, id),
            }
        }
    });
    // Second pass: one representative state per component.
    let mut reps: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    catalog.for_each_state(n, |tuple| {
        let id = cores[&pack(tuple, 0)];
        let root = sets.find(id);
        reps.entry(root).or_insert_with(|| tuple.to_vec());
    });
    let describe = |tuple: &Vec<u32>| {
        canonical_key_of(tuple.iter().map(|&i| &catalog.paths[i as usize])).to_string()
    };
    let mut it = reps.values();
    let witness = match (it.next(), it.next()) {
        (Some(a), Some(b)) => Some((describe(a), describe(b))),
        _ => None,
    };
    Ok(ReachabilityReport {
        irreducible: reps.len() == 1,
        components: reps.len(),
        states: count,
        witness,
    })
}

/// Connected components of the move graph of an enumerated state space,
/// found by breadth-first search over one-polymer replacements.
pub fn check_irreducibility(space: &StateSpace) -> ReachabilityReport {
    let n = space.len();
    let mut by_core: HashMap<CanonicalKey, Vec<usize>> = HashMap::new();
    for i in 0..n {
        let polymers = space.polymers(i);
        for skip in 0..polymers.len() {
            let core = canonical_key_of(
                polymers.iter().enumerate().filter(|&(j, _)| j != skip).map(|(_, c)| c),
            );
            by_core.entry(core).or_default().push(i);
        }
    }
    let mut component = vec![usize::MAX; n];
    let mut components = 0;
    let mut reps = Vec::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        reps.push(start);
        component[start] = components;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let polymers = space.polymers(i);
            for skip in 0..polymers.len() {
                let core = canonical_key_of(
                    polymers.iter().enumerate().filter(|&(j, _)| j != skip).map(|(_, c)| c),
                );
                for &j in &by_core[&core] {
                    if component[j] == usize::MAX {
                        component[j] = components;
                        queue.push_back(j);
                    }
                }
            }
        }
        components += 1;
    }
    let witness = (reps.len() > 1).then(|| (space.key(reps[0]).to_string(), space.key(reps[1]).to_string()));
    ReachabilityReport {
        irreducible: components == 1,
        components,
        states: n as u64,
        witness,
    }
}

/// Every compatible complete polymer: directed self-avoiding paths of
/// `length` vertices from the root of `g` that avoid `occupancy`, oriented
/// from the root.
pub fn enumerate_polymers(g: &UnderlyingGraph, occupancy: &Occupancy, length: usize) -> Vec<Polymer> {
    let mut out = Vec::new();
    if occupancy.is_occupied(g.root()) {
        return out;
    }
    let mut path = vec![g.root()];
    walk_graph(g, occupancy, &mut path, length, &mut |p| out.push(Polymer::new(p.to_vec())));
    out
}

fn walk_graph(
    g: &UnderlyingGraph,
    occupancy: &Occupancy,
    path: &mut Vec<VertexId>,
    length: usize,
    emit: &mut impl FnMut(&[VertexId]),
) {
    if path.len() == length {
        emit(path);
        return;
    }
    let end = *path.last().expect("non-empty");
    for &u in g.out_edges(end) {
        if occupancy.is_free(u) && !path.contains(&u) {
            path.push(u);
            walk_graph(g, occupancy, path, length, emit);
            path.pop();
        }
    }
}

/// Admissibility by listing every continuation level by level.
pub fn brute_admissible(
    g: &UnderlyingGraph,
    occupancy: &Occupancy,
    prefix: &[VertexId],
    v: VertexId,
    ell: usize,
    length: usize,
) -> bool {
    if occupancy.is_occupied(v) || prefix.contains(&v) {
        return false;
    }
    let i = prefix.len();
    let depth = if i < length.saturating_sub(ell) { ell } else { length - i - 1 };
    let mut start = prefix.to_vec();
    start.push(v);
    let mut frontier = vec![start];
    for _ in 0..depth {
        let mut next = Vec::new();
        for p in &frontier {
            for &u in g.out_edges(*p.last().expect("non-empty")) {
                if occupancy.is_free(u) && !p.contains(&u) {
                    let mut q = p.clone();
                    q.push(u);
                    next.push(q);
                }
            }
        }
        frontier = next;
    }
    !frontier.is_empty()
}

/// `W(C | G)` from [`brute_admissible`]; `c` must be oriented from the root.
pub fn brute_weight(g: &UnderlyingGraph, occupancy: &Occupancy, c: &Polymer, ell: usize) -> u64 {
    let vs = c.vertices();
    (1..vs.len())
        .map(|i| {
            g.out_edges(vs[i - 1])
                .iter()
                .filter(|&&u| brute_admissible(g, occupancy, &vs[..i], u, ell, vs.len()))
                .count() as u64
        })
        .product()
}

/// Sparse row-stochastic matrix over an enumerated state space.
#[derive(Clone, Debug)]
pub struct Kernel<T> {
    pub rows: Vec<BTreeMap<usize, T>>,
}

impl Kernel<f64> {
    pub fn row_sum(&self, i: usize) -> f64 {
        self.rows[i].values().sum()
    }

    /// `x P`.
    pub fn apply_left(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for (i, row) in self.rows.iter().enumerate() {
            for (&j, &p) in row {
                y[j] += x[i] * p;
            }
        }
        y
    }

    /// Iterates `x <- x P` from a point mass on state 0 until successive
    /// iterates differ by less than `tol` in sup norm.
    pub fn stationary_by_power_iteration(&self, tol: f64, max_iter: usize) -> (Vec<f64>, usize) {
        let n = self.rows.len();
        let mut x = vec![0.0; n];
        x[0] = 1.0;
        for it in 0..max_iter {
            let y = self.apply_left(&x);
            let diff = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            x = y;
            if diff < tol {
                return (x, it + 1);
            }
        }
        (x, max_iter)
    }
}

/// One off-diagonal contribution before the acceptance factor:
/// `(1/N)(1/gamma)(1/W_n)(1/2)`, with the weights needed for acceptance.
struct Move {
    to: usize,
    coefficient: BigRational,
    w_new: u64,
    w_old: u64,
    ln_q_ratio: f64,
}

fn kernel_moves<E: Energy>(space: &StateSpace, ell: usize, energy: &E) -> Result<Vec<Vec<Move>>> {
    let lattice = space.lattice();
    let n = space.n();
    let length = space.length();
    let mut all = Vec::with_capacity(space.len());
    for s in 0..space.len() {
        let state = space.state(s);
        let mut moves = Vec::new();
        for slot in 0..n {
            let mut rest = state.clone();
            let old = rest.remove_polymer(slot)?;
            let occ = rest.occupancy();
            let gamma = occ.free_count();
            // Both orientations of the removed polymer, one complete graph each.
            let w_olds: Vec<u64> = [old.clone(), old.reversed()]
                .iter()
                .map(|o| brute_weight(&UnderlyingGraph::complete_lattice(lattice, o.first()), occ, o, ell))
                .collect();
            for root in occ.free_vertices() {
                let g = UnderlyingGraph::complete_lattice(lattice, root);
                for cand in enumerate_polymers(&g, occ, length) {
                    let w_new = brute_weight(&g, occ, &cand, ell);
                    let mut next = rest.clone();
                    next.insert_polymer(cand.clone())?;
                    let to = space
                        .index_of(&next.canonical_key())
                        .ok_or_else(|| Error::UnknownState(next.canonical_key().to_string()))?;
                    if to == s {
                        continue;
                    }
                    let ln_q_ratio = energy.ln_q_ratio(lattice, &rest, &old, &cand);
                    for &w_old in &w_olds {
                        let coefficient = BigRational::new(
                            BigInt::one(),
                            BigInt::from(n as u64 * gamma as u64 * w_new * 2),
                        );
                        moves.push(Move {
                            to,
                            coefficient,
                            w_new,
                            w_old,
                            ln_q_ratio,
                        });
                    }
                }
            }
        }
        all.push(moves);
    }
    Ok(all)
}

fn require_full_degree(space: &StateSpace, mode: &DegreeMode) -> Result<()> {
    match mode {
        DegreeMode::Fixed { k } if *k == space.lattice().q() => Ok(()),
        _ => Err(Error::InvalidConfig(
            "the exact kernel is only available for k = Q".into(),
        )),
    }
}

/// Exact kernel for `k = Q` and uniform `q`, in rational arithmetic.
pub fn exact_kernel_kq_rational(space: &StateSpace, mode: &DegreeMode, ell: usize) -> Result<Kernel<BigRational>> {
    require_full_degree(space, mode)?;
    let moves = kernel_moves(space, ell, &crate::energy::EnergyModel::Uniform)?;
    let mut rows = Vec::with_capacity(space.len());
    for (s, list) in moves.into_iter().enumerate() {
        let mut row: BTreeMap<usize, BigRational> = BTreeMap::new();
        for m in list {
            let ratio = BigRational::new(BigInt::from(m.w_new), BigInt::from(m.w_old));
            let acc = if ratio > BigRational::one() { BigRational::one() } else { ratio };
            *row.entry(m.to).or_insert_with(BigRational::zero) += m.coefficient * acc;
        }
        let off: BigRational = row.values().fold(BigRational::zero(), |a, b| a + b);
        row.insert(s, BigRational::one() - off);
        rows.push(row);
    }
    Ok(Kernel { rows })
}

/// Exact kernel for `k = Q` and any energy, in floating point.
pub fn exact_kernel_kq<E: Energy>(space: &StateSpace, mode: &DegreeMode, ell: usize, energy: &E) -> Result<Kernel<f64>> {
    require_full_degree(space, mode)?;
    let moves = kernel_moves(space, ell, energy)?;
    let mut rows = Vec::with_capacity(space.len());
    for (s, list) in moves.into_iter().enumerate() {
        let mut row: BTreeMap<usize, f64> = BTreeMap::new();
        for m in list {
            let acc = (m.ln_q_ratio.exp() * m.w_new as f64 / m.w_old as f64).min(1.0);
            *row.entry(m.to).or_insert(0.0) += m.coefficient.to_f64().expect("finite") * acc;
        }
        let off: f64 = row.values().sum();
        row.insert(s, 1.0 - off);
        rows.push(row);
    }
    Ok(Kernel { rows })
}

/// Normalized `q = exp(-E)` over the state space.
pub fn boltzmann_target<E: Energy>(space: &StateSpace, energy: &E) -> Vec<f64> {
    let energies: Vec<f64> = (0..space.len())
        .map(|i| energy.energy(space.lattice(), &space.state(i)))
        .collect();
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = energies.iter().map(|e| (min - e).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

/// Largest `|pi_i P_ij - pi_j P_ji|` over all pairs.
pub fn max_balance_violation(kernel: &Kernel<f64>, pi: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for (i, row) in kernel.rows.iter().enumerate() {
        for (&j, &p) in row {
            let back = kernel.rows[j].get(&i).copied().unwrap_or(0.0);
            worst = worst.max((pi[i] * p - pi[j] * back).abs());
        }
    }
    worst
}

/// Pairs `(i, j)` with `P_ij != P_ji` exactly (uniform target).
pub fn rational_balance_violations(kernel: &Kernel<BigRational>) -> usize {
    let zero = BigRational::zero();
    let mut bad = 0;
    for (i, row) in kernel.rows.iter().enumerate() {
        for (&j, p) in row {
            if kernel.rows[j].get(&i).unwrap_or(&zero) != p {
                bad += 1;
            }
        }
    }
    bad
}

/// Histogram of visited states keyed by canonical key.
pub type Histogram = HashMap<CanonicalKey, u64>;

#[derive(Clone, Debug, Serialize)]
pub struct Distance {
    pub total_variation: f64,
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub samples: u64,
}

/// Total variation and Pearson chi-square between a histogram and a target
/// law over `space`. Unknown keys are an error.
pub fn distribution_distance(hist: &Histogram, space: &StateSpace, target: &[f64]) -> Result<Distance> {
    let mut counts = vec![0u64; space.len()];
    for (key, &c) in hist {
        let i = space.index_of(key).ok_or_else(|| Error::UnknownState(key.to_string()))?;
        counts[i] += c;
    }
    let total: u64 = counts.iter().sum();
    let nf = total as f64;
    let mut tv = 0.0;
    let mut chi = 0.0;
    for (i, &c) in counts.iter().enumerate() {
        let p_hat = if total == 0 { 0.0 } else { c as f64 / nf };
        tv += (p_hat - target[i]).abs();
        let expected = nf * target[i];
        if expected > 0.0 {
            chi += (c as f64 - expected).powi(2) / expected;
        }
    }
    let dof = space.len().saturating_sub(1);
    Ok(Distance {
        total_variation: tv / 2.0,
        chi_square: chi,
        degrees_of_freedom: dof,
        p_value: chi_square_sf(chi, dof),
        samples: total,
    })
}

/// Upper tail of the chi-square law.
pub fn chi_square_sf(statistic: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    ChiSquared::new(dof as f64).map(|d| d.sf(statistic)).unwrap_or(f64::NAN)
}

/// Two-sample chi-square homogeneity test over the union of keys.
pub fn two_sample_chi_square<K: std::hash::Hash + Eq + Clone>(a: &HashMap<K, u64>, b: &HashMap<K, u64>) -> Distance {
    let na: u64 = a.values().sum();
    let nb: u64 = b.values().sum();
    let mut keys: Vec<&K> = a.keys().collect();
    keys.extend(b.keys().filter(|k| !a.contains_key(k)));
    let (fa, fb) = (na as f64, nb as f64);
    let mut chi = 0.0;
    let mut tv = 0.0;
    for k in &keys {
        let x = *a.get(k).unwrap_or(&0) as f64;
        let y = *b.get(k).unwrap_or(&0) as f64;
        let pooled = (x + y) / (fa + fb);
        let (ea, eb) = (pooled * fa, pooled * fb);
        chi += (x - ea).powi(2) / ea + (y - eb).powi(2) / eb;
        tv += (x / fa - y / fb).abs();
    }
    let dof = keys.len().saturating_sub(1);
    Distance {
        total_variation: tv / 2.0,
        chi_square: chi,
        degrees_of_freedom: dof,
        p_value: chi_square_sf(chi, dof),
        samples: na + nb,
    }
}

/// Pearson goodness of fit of counts against probabilities. Outcomes with
/// expected count below `min_expected` are pooled into one cell.
pub fn goodness_of_fit(counts: &[u64], probs: &[f64], min_expected: f64) -> Distance {
    let total: u64 = counts.iter().sum();
    let nf = total as f64;
    let mut chi = 0.0;
    let mut cells: usize = 0;
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    let mut tv = 0.0;
    for (&c, &p) in counts.iter().zip(probs) {
        let e = nf * p;
        tv += (c as f64 / nf - p).abs();
        if e < min_expected {
            pooled_obs += c as f64;
            pooled_exp += e;
        } else {
            chi += (c as f64 - e).powi(2) / e;
            cells += 1;
        }
    }
    if pooled_exp > 0.0 {
        chi += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        cells += 1;
    }
    let dof = cells.saturating_sub(1);
    Distance {
        total_variation: tv / 2.0,
        chi_square: chi,
        degrees_of_freedom: dof,
        p_value: chi_square_sf(chi, dof),
        samples: total,
    }
}

/// Upper bound on branches explored by graph enumeration.
pub const MAX_ENUMERATED_GRAPHS: usize = 2_000_000;

/// The support of the underlying-graph law with the given roots, each root
/// weighted `1 / roots.len()`. Probabilities are products of the per-vertex
/// choice probabilities along the generation, in exact arithmetic.
pub fn enumerate_underlying_graphs(
    lattice: &Lattice,
    roots: &[VertexId],
    mode: &DegreeMode,
) -> Result<Vec<(UnderlyingGraph, BigRational)>> {
    let mut out = Vec::new();
    let root_prob = BigRational::new(BigInt::one(), BigInt::from(roots.len()));
    for &root in roots {
        let g = UnderlyingGraph::empty(lattice, root);
        branch_generation(lattice, mode, None, g, VecDeque::from([root]), root_prob.clone(), &mut out)?;
    }
    Ok(out)
}

/// The support of the compatible-graph law for `c`.
pub fn enumerate_compatible_graphs(
    lattice: &Lattice,
    c: &Polymer,
    mode: &DegreeMode,
) -> Result<Vec<(UnderlyingGraph, BigRational)>> {
    let mut out = Vec::new();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    for oriented in [c.clone(), c.reversed()] {
        let mut forced = vec![None; lattice.vertex_count()];
        for w in oriented.vertices().windows(2) {
            forced[w[0].index()] = Some(w[1]);
        }
        let root = oriented.first();
        let g = UnderlyingGraph::empty(lattice, root);
        branch_generation(lattice, mode, Some(&forced), g, VecDeque::from([root]), half.clone(), &mut out)?;
    }
    Ok(out)
}

fn degree_choices(mode: &DegreeMode, q: usize) -> Vec<(usize, BigRational)> {
    match mode {
        DegreeMode::Fixed { k } => vec![(*k, BigRational::one())],
        DegreeMode::Extended(dist) => (1..=q)
            .filter(|&d| dist.prob(d) > 0.0)
            .map(|d| (d, BigRational::from_float(dist.prob(d)).expect("finite")))
            .collect(),
    }
}

/// All `r`-subsets of `items`, in lexicographic position order.
fn subsets(items: &[VertexId], r: usize) -> Vec<Vec<VertexId>> {
    let mut out = Vec::new();
    let mut pick = Vec::with_capacity(r);
    fn rec(items: &[VertexId], r: usize, from: usize, pick: &mut Vec<VertexId>, out: &mut Vec<Vec<VertexId>>) {
        if pick.len() == r {
            out.push(pick.clone());
            return;
        }
        for i in from..items.len() {
            pick.push(items[i]);
            rec(items, r, i + 1, pick, out);
            pick.pop();
        }
    }
    rec(items, r, 0, &mut pick, &mut out);
    out
}

fn branch_generation(
    lattice: &Lattice,
    mode: &DegreeMode,
    forced: Option<&[Option<VertexId>]>,
    g: UnderlyingGraph,
    mut waiting: VecDeque<VertexId>,
    prob: BigRational,
    out: &mut Vec<(UnderlyingGraph, BigRational)>,
) -> Result<()> {
    // Skip waiting entries assigned since they were queued.
    while waiting.front().is_some_and(|&v| g.contains(v)) {
        waiting.pop_front();
    }
    let Some(v) = waiting.pop_front() else {
        if out.len() >= MAX_ENUMERATED_GRAPHS {
            return Err(Error::TooLarge(format!("more than {MAX_ENUMERATED_GRAPHS} graphs")));
        }
        out.push((g, prob));
        return Ok(());
    };
    let q = lattice.q();
    let must = forced.and_then(|f| f[v.index()]);
    for (degree, p_degree) in degree_choices(mode, q) {
        let (pool, need): (Vec<VertexId>, usize) = match must {
            Some(m) => (lattice.neighbors(v).iter().copied().filter(|&u| u != m).collect(), degree - 1),
            None => (lattice.neighbors(v).to_vec(), degree),
        };
        let options = subsets(&pool, need);
        let p_choice = BigRational::new(BigInt::one(), BigInt::from(binomial(pool.len(), need)));
        for choice in options {
            let mut outs: Vec<VertexId> = must.into_iter().collect();
            outs.extend(choice);
            let mut g2 = g.clone();
            g2.assign(v, &outs);
            let mut w2 = waiting.clone();
            for &u in &outs {
                if !g2.contains(u) && !w2.contains(&u) {
                    w2.push_back(u);
                }
            }
            branch_generation(lattice, mode, forced, g2, w2, &prob * &p_degree * &p_choice, out)?;
        }
    }
    Ok(())
}

/// The trapped configuration on `(Z/9Z)^2`: four polymers of length 5
/// pinwheeling around the single free vertex (3, 3), the remaining 60
/// vertices tiled by twelve more polymers of length 5.
pub fn trapped_pinwheel() -> Result<(Lattice, SystemState)> {
    let lattice = Lattice::with_shape(2, 9)?;
    let at = |x: usize, y: usize| lattice.to_index(&[x, y]).expect("in range");
    let arms: [[(usize, usize); 5]; 4] = [
        [(0, 3), (1, 3), (2, 3), (2, 4), (2, 5)],
        [(3, 6), (3, 5), (3, 4), (4, 4), (5, 4)],
        [(6, 3), (5, 3), (4, 3), (4, 2), (4, 1)],
        [(3, 0), (3, 1), (3, 2), (2, 2), (1, 2)],
    ];
    let mut polymers: Vec<Polymer> = arms
        .iter()
        .map(|arm| Polymer::new(arm.iter().map(|&(x, y)| at(x, y)).collect()))
        .collect();
    let mut covered = vec![false; lattice.vertex_count()];
    covered[at(3, 3).index()] = true;
    for c in &polymers {
        for v in c.vertices() {
            covered[v.index()] = true;
        }
    }
    let paths = enumerate_paths(&lattice, 5);
    let mut through: Vec<Vec<usize>> = vec![Vec::new(); lattice.vertex_count()];
    for (i, c) in paths.iter().enumerate() {
        for v in c.vertices() {
            through[v.index()].push(i);
        }
    }
    let mut chosen = Vec::new();
    if !tile(&paths, &through, &mut covered, &mut chosen) {
        return Err(Error::Infeasible("no tiling of the pinwheel complement".into()));
    }
    polymers.extend(chosen.into_iter().map(|i| paths[i].clone()));
    let state = SystemState::new(&lattice, polymers)?;
    Ok((lattice, state))
}

fn tile(paths: &[Polymer], through: &[Vec<usize>], covered: &mut [bool], chosen: &mut Vec<usize>) -> bool {
    let Some(first) = covered.iter().position(|&c| !c) else {
        return true;
    };
    for &i in &through[first] {
        let vs = paths[i].vertices();
        if vs.iter().any(|v| covered[v.index()]) {
            continue;
        }
        for v in vs {
            covered[v.index()] = true;
        }
        chosen.push(i);
        if tile(paths, through, covered, chosen) {
            return true;
        }
        chosen.pop();
        for v in vs {
            covered[v.index()] = false;
        }
    }
    false
}

/// Per polymer, the number of distinct vertex sets a replacement polymer
/// of the same length can occupy once it is removed. A state is locally
/// trapped when every entry is 1.
pub fn replacement_footprints(lattice: &Lattice, state: &SystemState) -> Vec<usize> {
    let mut out = Vec::new();
    for (slot, c) in state.polymers() {
        let mut rest = state.clone();
        rest.remove_polymer(slot).expect("slot is filled");
        let occ = rest.occupancy();
        let g_all: Vec<VertexId> = occ.free_vertices().collect();
        let mut footprints: Vec<Vec<VertexId>> = Vec::new();
        for &root in &g_all {
            let g = UnderlyingGraph::complete_lattice(lattice, root);
            for p in enumerate_polymers(&g, occ, c.len()) {
                let mut set = p.vertices().to_vec();
                set.sort();
                if !footprints.contains(&set) {
                    footprints.push(set);
                }
            }
        }
        out.push(footprints.len());
    }
    out
}
