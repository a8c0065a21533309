//! Multi-polymer configurations.
//!
//! A [`SystemState`] holds polymer slots plus a dense occupancy index over
//! all `a^d` vertices. Removing a polymer vacates its slot without
//! renumbering the others, so `remove` followed by `insert` restores the
//! original state exactly.

use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Lattice, LatticeConfig, VertexId};

/// A self-avoiding lattice path, stored in one of its two orientations.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polymer {
    vertices: Vec<VertexId>,
}

impl Polymer {
    /// Wraps a vertex sequence without checking it; see [`Polymer::validate`].
    pub fn new(vertices: Vec<VertexId>) -> Self {
        Polymer { vertices }
    }

    pub fn from_indices(indices: &[u32]) -> Self {
        Polymer::new(indices.iter().copied().map(VertexId).collect())
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn first(&self) -> VertexId {
        self.vertices[0]
    }

    pub fn last(&self) -> VertexId {
        self.vertices[self.vertices.len() - 1]
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.vertices.contains(&v)
    }

    pub fn reversed(&self) -> Polymer {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        Polymer { vertices }
    }

    /// The polymer oriented so that it starts at `root`, if `root` is one of
    /// its extremities.
    pub fn oriented_from(&self, root: VertexId) -> Option<Polymer> {
        if self.first() == root {
            Some(self.clone())
        } else if self.last() == root {
            Some(self.reversed())
        } else {
            None
        }
    }

    /// Orientation-independent form: the lexicographically smaller of the two
    /// orientations.
    pub fn canonical(&self) -> Polymer {
        let reversed = self.reversed();
        if reversed.vertices < self.vertices {
            reversed
        } else {
            self.clone()
        }
    }

    /// Checks length, adjacency of consecutive vertices and self-avoidance.
    pub fn validate(&self, lattice: &Lattice) -> Result<(), Violation> {
        self.validate_as(lattice, 0)
    }

    fn validate_as(&self, lattice: &Lattice, index: usize) -> Result<(), Violation> {
        if self.len() < 2 {
            return Err(Violation::TooShort {
                polymer: index,
                length: self.len(),
            });
        }
        for (position, &v) in self.vertices.iter().enumerate() {
            if !lattice.contains(v) {
                return Err(Violation::OutOfRange {
                    polymer: index,
                    vertex: v,
                });
            }
            if position > 0 && !lattice.are_neighbors(self.vertices[position - 1], v) {
                return Err(Violation::BrokenPath {
                    polymer: index,
                    position,
                });
            }
            if self.vertices[..position].contains(&v) {
                return Err(Violation::SelfIntersection {
                    polymer: index,
                    vertex: v,
                });
            }
        }
        Ok(())
    }
}

/// Occupancy of one vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Slot {
    pub polymer: u32,
    pub position: u32,
}

impl Slot {
    const FREE: Slot = Slot {
        polymer: u32::MAX,
        position: u32::MAX,
    };

    #[inline]
    pub fn is_free(self) -> bool {
        self.polymer == u32::MAX
    }
}

/// Dense vertex-to-polymer index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Occupancy {
    slots: Vec<Slot>,
    occupied: usize,
}

impl Occupancy {
    pub fn empty(n_vertices: usize) -> Self {
        Occupancy {
            slots: vec![Slot::FREE; n_vertices],
            occupied: 0,
        }
    }

    #[inline]
    pub fn is_free(&self, v: VertexId) -> bool {
        self.slots[v.index()].is_free()
    }

    #[inline]
    pub fn is_occupied(&self, v: VertexId) -> bool {
        !self.is_free(v)
    }

    /// `(polymer slot, position)` of the polymer covering `v`.
    pub fn owner(&self, v: VertexId) -> Option<(usize, usize)> {
        let slot = self.slots[v.index()];
        (!slot.is_free()).then(|| (slot.polymer as usize, slot.position as usize))
    }

    pub fn vertex_count(&self) -> usize {
        self.slots.len()
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied
    }

    pub fn free_count(&self) -> usize {
        self.slots.len() - self.occupied
    }

    pub fn free_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_free())
            .map(|(i, _)| VertexId(i as u32))
    }

    fn mark(&mut self, polymer: usize, c: &Polymer) {
        for (position, &v) in c.vertices().iter().enumerate() {
            self.slots[v.index()] = Slot {
                polymer: polymer as u32,
                position: position as u32,
            };
        }
        self.occupied += c.len();
    }

    fn clear(&mut self, c: &Polymer) {
        for &v in c.vertices() {
            self.slots[v.index()] = Slot::FREE;
        }
        self.occupied -= c.len();
    }

    /// Builds an occupancy from a list of polymers (slot `i` for the `i`-th).
    /// Vertices must be in range; overlaps are reported.
    pub fn from_polymers<'a>(
        n_vertices: usize,
        polymers: impl IntoIterator<Item = &'a Polymer>,
    ) -> Result<Self> {
        let mut occ = Occupancy::empty(n_vertices);
        for (i, c) in polymers.into_iter().enumerate() {
            for &v in c.vertices() {
                if v.index() >= n_vertices {
                    return Err(Error::VertexOutOfRange {
                        vertex: v.0,
                        count: n_vertices,
                    });
                }
                if let Some((polymer, _)) = occ.owner(v) {
                    return Err(Error::Overlap { vertex: v.0, polymer });
                }
            }
            occ.mark(i, c);
        }
        Ok(occ)
    }
}

/// First invariant violation found by [`SystemState::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    TooShort { polymer: usize, length: usize },
    OutOfRange { polymer: usize, vertex: VertexId },
    BrokenPath { polymer: usize, position: usize },
    SelfIntersection { polymer: usize, vertex: VertexId },
    Overlap { first: usize, second: usize, vertex: VertexId },
    OccupancyMismatch { vertex: VertexId },
}

impl Violation {
    /// Short machine-friendly name of the violation kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::TooShort { .. } => "too short",
            Violation::OutOfRange { .. } => "out of range",
            Violation::BrokenPath { .. } => "broken path",
            Violation::SelfIntersection { .. } => "self intersection",
            Violation::Overlap { .. } => "overlap",
            Violation::OccupancyMismatch { .. } => "occupancy mismatch",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooShort { polymer, length } => {
                write!(f, "too short: polymer {polymer} has length {length} < 2")
            }
            Violation::OutOfRange { polymer, vertex } => {
                write!(f, "out of range: polymer {polymer} uses vertex {vertex}")
            }
            Violation::BrokenPath { polymer, position } => write!(
                f,
                "broken path: polymer {polymer} positions {} and {position} are not neighbors",
                position - 1
            ),
            Violation::SelfIntersection { polymer, vertex } => {
                write!(f, "self intersection: polymer {polymer} visits {vertex} twice")
            }
            Violation::Overlap {
                first,
                second,
                vertex,
            } => write!(f, "overlap: polymers {first} and {second} share vertex {vertex}"),
            Violation::OccupancyMismatch { vertex } => {
                write!(f, "occupancy mismatch at vertex {vertex}")
            }
        }
    }
}

/// Hashable, orientation- and permutation-invariant identity of a state.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalKey(Box<[u32]>);

impl CanonicalKey {
    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }
}

impl fmt::Display for CanonicalKey {
    /// Polymers separated by `|`, vertices by `,`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut rest = &self.0[..];
        let mut first = true;
        while let Some((&len, tail)) = rest.split_first() {
            if !first {
                f.write_str("|")?;
            }
            first = false;
            let (verts, next) = tail.split_at(len as usize);
            for (i, v) in verts.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{v}")?;
            }
            rest = next;
        }
        Ok(())
    }
}

/// `N` mutually disjoint polymers on a lattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemState {
    slots: Vec<Option<Polymer>>,
    occupancy: Occupancy,
}

impl SystemState {
    pub fn empty(lattice: &Lattice) -> Self {
        SystemState {
            slots: Vec::new(),
            occupancy: Occupancy::empty(lattice.vertex_count()),
        }
    }

    /// Builds a state from polymers, rejecting overlaps and out-of-range
    /// vertices. Path validity is checked by [`SystemState::validate`].
    pub fn new(lattice: &Lattice, polymers: Vec<Polymer>) -> Result<Self> {
        let occupancy = Occupancy::from_polymers(lattice.vertex_count(), &polymers)?;
        Ok(SystemState {
            slots: polymers.into_iter().map(Some).collect(),
            occupancy,
        })
    }

    pub fn occupancy(&self) -> &Occupancy {
        &self.occupancy
    }

    /// Number of slots, including a vacated one.
    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    /// Number of polymers currently present.
    pub fn polymer_count(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }

    pub fn polymer(&self, i: usize) -> Option<&Polymer> {
        self.slots.get(i).and_then(Option::as_ref)
    }

    /// Present polymers with their slot indices.
    pub fn polymers(&self) -> impl Iterator<Item = (usize, &Polymer)> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_ref().map(|c| (i, c)))
    }

    pub fn into_polymers(self) -> Vec<Polymer> {
        self.slots.into_iter().flatten().collect()
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.polymers().map(|(_, c)| c.len()).collect()
    }

    /// Vacates slot `i` and returns its polymer.
    pub fn remove_polymer(&mut self, i: usize) -> Result<Polymer> {
        let c = self
            .slots
            .get_mut(i)
            .and_then(Option::take)
            .ok_or(Error::NoSuchPolymer(i))?;
        self.occupancy.clear(&c);
        self.debug_check();
        Ok(c)
    }

    /// Inserts `c` into the first vacant slot (or a new one) and returns the
    /// slot index. Fails without side effects if `c` hits an occupied vertex.
    pub fn insert_polymer(&mut self, c: Polymer) -> Result<usize> {
        for &v in c.vertices() {
            if v.index() >= self.occupancy.vertex_count() {
                return Err(Error::VertexOutOfRange {
                    vertex: v.0,
                    count: self.occupancy.vertex_count(),
                });
            }
            if let Some((polymer, _)) = self.occupancy.owner(v) {
                return Err(Error::Overlap { vertex: v.0, polymer });
            }
        }
        if c.vertices().iter().enumerate().any(|(i, v)| c.vertices()[..i].contains(v)) {
            return Err(Error::InvalidPolymer("polymer is not self-avoiding".into()));
        }
        let index = match self.slots.iter().position(Option::is_none) {
            Some(i) => i,
            None => {
                self.slots.push(None);
                self.slots.len() - 1
            }
        };
        self.occupancy.mark(index, &c);
        self.slots[index] = Some(c);
        self.debug_check();
        Ok(index)
    }

    /// Checks every polymer and state invariant, reporting the first failure.
    pub fn validate(&self, lattice: &Lattice) -> Result<(), Violation> {
        for (i, c) in self.polymers() {
            c.validate_as(lattice, i)?;
        }
        let mut seen: Vec<Option<usize>> = vec![None; lattice.vertex_count()];
        for (i, c) in self.polymers() {
            for &v in c.vertices() {
                if let Some(first) = seen[v.index()] {
                    return Err(Violation::Overlap {
                        first,
                        second: i,
                        vertex: v,
                    });
                }
                seen[v.index()] = Some(i);
            }
        }
        if self.occupancy.vertex_count() != lattice.vertex_count() {
            return Err(Violation::OccupancyMismatch { vertex: VertexId(0) });
        }
        for v in lattice.vertices() {
            let expected = seen[v.index()].map(|i| {
                let pos = self.slots[i].as_ref().unwrap().vertices().iter().position(|&u| u == v);
                (i, pos.unwrap())
            });
            if self.occupancy.owner(v) != expected {
                return Err(Violation::OccupancyMismatch { vertex: v });
            }
        }
        let total: usize = self.polymers().map(|(_, c)| c.len()).sum();
        if total != self.occupancy.occupied_count() {
            return Err(Violation::OccupancyMismatch { vertex: VertexId(0) });
        }
        Ok(())
    }

    #[inline]
    fn debug_check(&self) {
        #[cfg(debug_assertions)]
        {
            let total: usize = self.polymers().map(|(_, c)| c.len()).sum();
            debug_assert_eq!(total, self.occupancy.occupied_count());
            for (i, c) in self.polymers() {
                for (p, &v) in c.vertices().iter().enumerate() {
                    debug_assert_eq!(self.occupancy.owner(v), Some((i, p)));
                }
            }
        }
    }

    /// Occupied fraction `sum of lengths / a^d`.
    pub fn density(&self) -> Ratio<u64> {
        Ratio::new(
            self.occupancy.occupied_count() as u64,
            self.occupancy.vertex_count() as u64,
        )
    }

    /// Key identifying the unordered set of undirected polymers.
    pub fn canonical_key(&self) -> CanonicalKey {
        canonical_key_of(self.polymers().map(|(_, c)| c))
    }

    /// Unordered pairs of neighboring vertices covered by distinct polymers.
    pub fn contact_count(&self, lattice: &Lattice) -> usize {
        let mut contacts = 0;
        for (i, c) in self.polymers() {
            contacts += contacts_with_others(lattice, &self.occupancy, c, Some(i));
        }
        contacts / 2
    }
}

/// Contacts between `c` and polymers other than slot `own` (`None` when `c`
/// is not installed in `occupancy`).
pub fn contacts_with_others(
    lattice: &Lattice,
    occupancy: &Occupancy,
    c: &Polymer,
    own: Option<usize>,
) -> usize {
    let mut contacts = 0;
    for &v in c.vertices() {
        for &u in lattice.neighbors(v) {
            if let Some((owner, _)) = occupancy.owner(u) {
                if Some(owner) != own {
                    contacts += 1;
                }
            }
        }
    }
    contacts
}

/// Canonical key of an arbitrary collection of polymers.
pub fn canonical_key_of<'a>(polymers: impl IntoIterator<Item = &'a Polymer>) -> CanonicalKey {
    let mut parts: Vec<Polymer> = polymers.into_iter().map(Polymer::canonical).collect();
    parts.sort_by(|x, y| x.len().cmp(&y.len()).then_with(|| x.vertices.cmp(&y.vertices)));
    let mut key = Vec::with_capacity(parts.iter().map(|c| c.len() + 1).sum());
    for c in &parts {
        key.push(c.len() as u32);
        key.extend(c.vertices().iter().map(|v| v.0));
    }
    CanonicalKey(key.into_boxed_slice())
}

/// Hamiltonian path through `(Z/aZ)^d` that never uses a wrap-around edge:
/// a boustrophedon sweep, reversing the inner sweep on odd outer coordinates.
pub fn boustrophedon_order(lattice: &Lattice) -> Vec<VertexId> {
    let a = lattice.side();
    let mut order: Vec<Vec<usize>> = (0..a).map(|x| vec![x]).collect();
    for _ in 1..lattice.dimension() {
        let mut next = Vec::with_capacity(order.len() * a);
        for x in 0..a {
            let inner: Box<dyn Iterator<Item = &Vec<usize>>> = if x % 2 == 0 {
                Box::new(order.iter())
            } else {
                Box::new(order.iter().rev())
            };
            for tail in inner {
                let mut coords = Vec::with_capacity(tail.len() + 1);
                coords.push(x);
                coords.extend_from_slice(tail);
                next.push(coords);
            }
        }
        order = next;
    }
    order
        .iter()
        .map(|c| lattice.to_index(c).expect("valid coordinates"))
        .collect()
}

/// `N` polymers of length `L` cut consecutively from the boustrophedon path.
pub fn boxed_initial_state(lattice: &Lattice, n: usize, length: usize) -> Result<SystemState> {
    boxed_initial_state_with_lengths(lattice, &vec![length; n])
}

/// Variable-length form of [`boxed_initial_state`].
pub fn boxed_initial_state_with_lengths(
    lattice: &Lattice,
    lengths: &[usize],
) -> Result<SystemState> {
    if let Some(&bad) = lengths.iter().find(|&&l| l < 2) {
        return Err(Error::InvalidConfig(format!("polymer length {bad} < 2")));
    }
    let total: usize = lengths.iter().sum();
    if total > lattice.vertex_count() {
        return Err(Error::Infeasible(format!(
            "{total} monomers do not fit on {} vertices",
            lattice.vertex_count()
        )));
    }
    let order = boustrophedon_order(lattice);
    let mut polymers = Vec::with_capacity(lengths.len());
    let mut start = 0;
    for &l in lengths {
        polymers.push(Polymer::new(order[start..start + l].to_vec()));
        start += l;
    }
    SystemState::new(lattice, polymers)
}

/// A state together with its lattice shape, as stored in snapshot files.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot {
    pub lattice: LatticeConfig,
    pub polymers: Vec<Polymer>,
}

impl Snapshot {
    pub fn from_state(lattice: &Lattice, state: &SystemState) -> Self {
        Snapshot {
            lattice: lattice.config(),
            polymers: state.polymers().map(|(_, c)| c.clone()).collect(),
        }
    }

    /// Text form: header `d a N L` (`L = 0` when lengths differ), then one
    /// line of space-separated vertex indices per polymer.
    pub fn emit(&self) -> String {
        let common = match self.polymers.first() {
            Some(c) if self.polymers.iter().all(|p| p.len() == c.len()) => c.len(),
            Some(_) => 0,
            None => 0,
        };
        let mut out = format!(
            "{} {} {} {}\n",
            self.lattice.d,
            self.lattice.a,
            self.polymers.len(),
            common
        );
        for c in &self.polymers {
            let line: Vec<String> = c.vertices().iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty snapshot".into(),
        })?;
        let fields = parse_numbers(header, 1)?;
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: 1,
                message: format!("header needs 4 fields `d a N L`, found {}", fields.len()),
            });
        }
        let (d, a, n, l) = (
            fields[0] as usize,
            fields[1] as usize,
            fields[2] as usize,
            fields[3] as usize,
        );
        let mut polymers = Vec::with_capacity(n);
        for (idx, line) in lines {
            let number = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let verts = parse_numbers(line, number)?;
            if l != 0 && verts.len() != l {
                return Err(Error::Parse {
                    line: number,
                    message: format!("expected {l} vertices, found {}", verts.len()),
                });
            }
            polymers.push(Polymer::from_indices(&verts));
        }
        if polymers.len() != n {
            return Err(Error::Parse {
                line: 1,
                message: format!("header announces {n} polymers, found {}", polymers.len()),
            });
        }
        Ok(Snapshot {
            lattice: LatticeConfig::new(d, a),
            polymers,
        })
    }

    /// Validates the snapshot against its own lattice and builds the state.
    pub fn into_state(self) -> Result<(Lattice, SystemState)> {
        let lattice = Lattice::new(self.lattice)?;
        let state = SystemState::new(&lattice, self.polymers)?;
        state
            .validate(&lattice)
            .map_err(|v| Error::InvalidPolymer(v.to_string()))?;
        Ok((lattice, state))
    }
}

fn parse_numbers(line: &str, number: usize) -> Result<Vec<u32>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<u32>().map_err(|e| Error::Parse {
                line: number,
                message: format!("`{tok}`: {e}"),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{HashMap, HashSet};

    fn lat(d: usize, a: usize) -> Lattice {
        Lattice::with_shape(d, a).unwrap()
    }

    #[test]
    fn validate_reports_first_violation() {
        let l = lat(2, 5);
        let ok = boxed_initial_state(&l, 3, 4).unwrap();
        assert_eq!(ok.validate(&l), Ok(()));

        let overlapping = SystemState {
            slots: vec![
                Some(Polymer::from_indices(&[0, 1, 2])),
                Some(Polymer::from_indices(&[2, 3, 4])),
            ],
            occupancy: Occupancy::empty(25),
        };
        assert_eq!(overlapping.validate(&l).unwrap_err().kind(), "overlap");

        let broken = SystemState::new(&l, vec![Polymer::from_indices(&[0, 2, 3])]).unwrap();
        assert_eq!(broken.validate(&l).unwrap_err().kind(), "broken path");

        let looped = SystemState {
            slots: vec![Some(Polymer::from_indices(&[0, 1, 0]))],
            occupancy: Occupancy::empty(25),
        };
        assert_eq!(looped.validate(&l).unwrap_err().kind(), "self intersection");
    }

    #[test]
    fn remove_insert_round_trip() {
        let l = lat(2, 5);
        let original = boxed_initial_state(&l, 4, 5).unwrap();
        let mut state = original.clone();
        let free_before = state.occupancy().free_count();
        let c = state.remove_polymer(2).unwrap();
        assert_eq!(state.occupancy().free_count(), free_before + 5);
        assert_eq!(state.polymer_count(), 3);
        assert_eq!(state.insert_polymer(c).unwrap(), 2);
        assert_eq!(state, original);
    }

    #[test]
    fn insert_rejects_overlap() {
        let l = lat(1, 6);
        let mut state = boxed_initial_state(&l, 1, 3).unwrap();
        let before = state.clone();
        let err = state.insert_polymer(Polymer::from_indices(&[2, 3])).unwrap_err();
        assert!(matches!(err, Error::Overlap { vertex: 2, polymer: 0 }));
        assert_eq!(state, before);
        assert!(matches!(state.remove_polymer(5), Err(Error::NoSuchPolymer(5))));
    }

    #[test]
    fn density_values() {
        let l = lat(2, 135);
        let s = boxed_initial_state(&l, 100, 25).unwrap();
        assert_eq!(s.density(), Ratio::new(2500, 18225));
        assert_eq!(SystemState::empty(&l).density(), Ratio::new(0, 1));
        let l = lat(1, 4);
        assert_eq!(boxed_initial_state(&l, 2, 2).unwrap().density(), Ratio::new(1, 1));
    }

    #[test]
    fn boxed_state_examples() {
        let l = lat(1, 6);
        let s = boxed_initial_state(&l, 2, 3).unwrap();
        let ps: Vec<_> = s.polymers().map(|(_, c)| c.clone()).collect();
        assert_eq!(
            ps,
            vec![Polymer::from_indices(&[0, 1, 2]), Polymer::from_indices(&[3, 4, 5])]
        );
        let l = lat(2, 4);
        assert!(boxed_initial_state(&l, 2, 4).unwrap().validate(&l).is_ok());
        assert!(boxed_initial_state(&l, 4, 4).unwrap().validate(&l).is_ok());
        assert!(matches!(
            boxed_initial_state(&l, 5, 4),
            Err(Error::Infeasible(_))
        ));
        assert!(boxed_initial_state(&l, 2, 1).is_err());
    }

    #[test]
    fn boxed_state_always_valid() {
        for d in 1..=3 {
            for a in 3..=6 {
                let l = lat(d, a);
                let order = boustrophedon_order(&l);
                let distinct: HashSet<_> = order.iter().collect();
                assert_eq!(distinct.len(), l.vertex_count());
                for w in order.windows(2) {
                    assert!(l.are_neighbors(w[0], w[1]));
                }
                let total = l.vertex_count();
                for length in 2..=total.min(8) {
                    for n in [1, total / length] {
                        if n == 0 {
                            continue;
                        }
                        let s = boxed_initial_state(&l, n, length).unwrap();
                        assert_eq!(s.validate(&l), Ok(()), "d={d} a={a} n={n} L={length}");
                    }
                }
            }
        }
    }

    #[test]
    fn canonical_key_symmetries() {
        let l = lat(2, 4);
        let s = boxed_initial_state(&l, 3, 3).unwrap();
        let mut ps: Vec<Polymer> = s.polymers().map(|(_, c)| c.clone()).collect();
        let key = s.canonical_key();
        ps[1] = ps[1].reversed();
        assert_eq!(SystemState::new(&l, ps.clone()).unwrap().canonical_key(), key);
        ps.swap(0, 2);
        assert_eq!(SystemState::new(&l, ps.clone()).unwrap().canonical_key(), key);
        // Moving one polymer elsewhere changes the key.
        ps[0] = Polymer::from_indices(&[15, 14, 13]);
        assert_ne!(SystemState::new(&l, ps).unwrap().canonical_key(), key);
    }

    #[test]
    fn canonical_key_collides_only_within_orbits() {
        // All two-dimer states on the 4-cycle of a 1D lattice with a = 5,
        // enumerated as ordered, oriented tuples.
        let l = lat(1, 5);
        let mut dimers = Vec::new();
        for v in l.vertices() {
            for &u in l.neighbors(v) {
                dimers.push(Polymer::new(vec![v, u]));
            }
        }
        let mut by_key: HashMap<CanonicalKey, HashSet<Vec<(u32, u32)>>> = HashMap::new();
        for x in &dimers {
            for y in &dimers {
                if x.vertices().iter().any(|v| y.contains(*v)) {
                    continue;
                }
                let s = SystemState::new(&l, vec![x.clone(), y.clone()]).unwrap();
                let mut edges: Vec<(u32, u32)> = [x, y]
                    .iter()
                    .map(|c| {
                        let (p, q) = (c.first().0, c.last().0);
                        (p.min(q), p.max(q))
                    })
                    .collect();
                edges.sort();
                by_key.entry(s.canonical_key()).or_default().insert(edges);
            }
        }
        // Each key maps to exactly one unordered set of undirected dimers.
        assert!(by_key.values().all(|sets| sets.len() == 1));
        // 5 dimers on the 5-cycle, disjoint pairs: 5.
        assert_eq!(by_key.len(), 5);
    }

    #[test]
    fn snapshot_round_trip_and_errors() {
        let l = lat(2, 5);
        let s = boxed_initial_state(&l, 3, 4).unwrap();
        let snap = Snapshot::from_state(&l, &s);
        let text = snap.emit();
        assert!(text.starts_with("2 5 3 4\n"));
        let parsed = Snapshot::parse(&text).unwrap();
        assert_eq!(parsed, snap);
        assert_eq!(parsed.emit(), text);
        let (_, back) = parsed.into_state().unwrap();
        assert_eq!(back.canonical_key(), s.canonical_key());

        assert!(matches!(
            Snapshot::parse("2 5 1 3\n0 1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            Snapshot::parse("2 5 x 3\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(Snapshot::parse("2 5 1 2\n0 2\n").unwrap().into_state().is_err());
    }

    #[test]
    fn contact_count_on_strip() {
        let l = lat(2, 5);
        // Two parallel horizontal trimers in adjacent rows touch three times.
        let s = SystemState::new(
            &l,
            vec![Polymer::from_indices(&[0, 1, 2]), Polymer::from_indices(&[5, 6, 7])],
        )
        .unwrap();
        assert_eq!(s.contact_count(&l), 3);
    }
}
