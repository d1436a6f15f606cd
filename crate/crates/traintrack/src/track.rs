//! Combinatorial train tracks as embedded ribbon graphs.
//!
//! A track is stored as switches with two ordered germs (incoming/outgoing)
//! of half-branch slots, plus branches whose ends occupy those slots. The
//! linear order within each germ together with the in/out split is exactly
//! a ribbon structure, so complementary regions are recoverable as boundary
//! walks. Regions carry user-declared `(genus, punctures)` decorations that
//! pin the embedding; the validator cross-checks them against the global
//! Euler identity and the per-region geometry condition.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::surface::Surface;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SwitchId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BranchId(pub u32);

impl std::fmt::Display for SwitchId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "s{}", self.0)
    }
}

impl std::fmt::Display for BranchId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "b{}", self.0)
    }
}

/// The two tangency classes of half branches at a switch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GermClass {
    In,
    Out,
}

impl GermClass {
    pub fn other(self) -> GermClass {
        match self {
            GermClass::In => GermClass::Out,
            GermClass::Out => GermClass::In,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BranchEnd {
    #[serde(rename = "switch")]
    pub switch: SwitchId,
    pub germ: GermClass,
    pub slot: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Branch {
    pub id: BranchId,
    pub ends: [BranchEnd; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchSpec {
    pub id: SwitchId,
    pub incoming: usize,
    pub outgoing: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionDecoration {
    pub genus: u32,
    pub punctures: u32,
}

impl RegionDecoration {
    pub fn euler_characteristic(&self) -> i64 {
        1 - 2 * self.genus as i64 - self.punctures as i64
    }
}

/// Which side of a branch a region walk runs along, relative to the
/// end_a -> end_b orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    AToB,
    BToA,
}

impl Direction {
    pub fn reversed(self) -> Direction {
        match self {
            Direction::AToB => Direction::BToA,
            Direction::BToA => Direction::AToB,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RegionSideRef {
    pub branch: BranchId,
    pub side: Side,
    pub direction: Direction,
}

/// One complementary region: a boundary walk with its cusp count and the
/// decoration declared for it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Region {
    pub boundary: Vec<RegionSideRef>,
    pub cusp_count: usize,
    pub decoration: RegionDecoration,
}

impl Region {
    pub fn euler_characteristic(&self) -> i64 {
        self.decoration.euler_characteristic()
    }

    /// 2 * (chi(Q) - V(Q)/2), negative iff the region is admissible.
    pub fn doubled_generalized_euler(&self) -> i64 {
        2 * self.euler_characteristic() - self.cusp_count as i64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchKind {
    Large,
    Mixed,
    Small,
}

#[derive(Debug, Error)]
pub enum TrackError {
    #[error("malformed track document: {0}")]
    Syntax(String),
    #[error("branch {branch} references unknown switch {switch}")]
    UnknownSwitch { branch: BranchId, switch: SwitchId },
    #[error("branch {branch} end sits at slot {slot} of a germ of size {size} at {switch}")]
    SlotOutOfRange {
        branch: BranchId,
        switch: SwitchId,
        slot: usize,
        size: usize,
    },
    #[error("two branch ends collide at {switch} {germ:?} slot {slot}")]
    SlotCollision {
        switch: SwitchId,
        germ: GermClass,
        slot: usize,
    },
    #[error("slot {slot} of {germ:?} germ at {switch} is not covered by any branch end")]
    SlotUncovered {
        switch: SwitchId,
        germ: GermClass,
        slot: usize,
    },
    #[error("duplicate switch id {0}")]
    DuplicateSwitch(SwitchId),
    #[error("duplicate branch id {0}")]
    DuplicateBranch(BranchId),
    #[error("region decoration index {index} out of range ({regions} regions)")]
    DecorationIndex { index: usize, regions: usize },
    #[error("unknown branch id {0}")]
    UnknownBranch(BranchId),
}

/// A single validator finding. An empty report means the track is a valid
/// train track on its declared surface.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    UnsupportedSurface,
    BadValence { switch: SwitchId, valence: usize },
    EmptyGerm { switch: SwitchId, germ: GermClass },
    BivalentNonCircle { switch: SwitchId },
    BranchCountBound { count: usize, bound: i64 },
    SwitchCountBound { count: usize, bound: i64 },
    RegionGeometry { region: usize, doubled_generalized_euler: i64 },
    EulerIdentity { lhs: i64, rhs: i64 },
    PunctureSum { total: u32, expected: u32 },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Dart = one half-branch end; `2 * branch_index + end_index`.
pub type Dart = usize;

#[derive(Clone, Debug)]
struct Walk {
    steps: Vec<(usize, Side, Direction)>, // branch index, side, direction
    cusps: usize,
}

#[derive(Clone, Debug)]
pub struct TrainTrack {
    surface: Surface,
    switches: Vec<SwitchSpec>, // sorted by id
    branches: Vec<Branch>,     // sorted by id
    decorations: BTreeMap<usize, RegionDecoration>,
    // derived ribbon data
    in_darts: Vec<Vec<Dart>>,  // per switch index, slot-ordered
    out_darts: Vec<Vec<Dart>>, // per switch index, slot-ordered
    walks: Vec<Walk>,          // canonical order
}

// ---------------------------------------------------------------------------
// serde wire format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct RegionEntry {
    index: usize,
    #[serde(default)]
    genus: u32,
    #[serde(default)]
    punctures: u32,
}

#[derive(Serialize, Deserialize)]
struct TrackDoc {
    surface: Surface,
    switches: Vec<SwitchSpec>,
    branches: Vec<Branch>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    regions: Vec<RegionEntry>,
}

impl TrainTrack {
    pub fn from_parts(
        surface: Surface,
        switches: Vec<SwitchSpec>,
        branches: Vec<Branch>,
        decorations: BTreeMap<usize, RegionDecoration>,
    ) -> Result<TrainTrack, TrackError> {
        let mut switches = switches;
        switches.sort_by_key(|s| s.id);
        for w in switches.windows(2) {
            if w[0].id == w[1].id {
                return Err(TrackError::DuplicateSwitch(w[0].id));
            }
        }
        let mut branches = branches;
        branches.sort_by_key(|b| b.id);
        for w in branches.windows(2) {
            if w[0].id == w[1].id {
                return Err(TrackError::DuplicateBranch(w[0].id));
            }
        }

        let switch_index: BTreeMap<SwitchId, usize> = switches
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id, i))
            .collect();

        let mut in_darts: Vec<Vec<Option<Dart>>> = switches
            .iter()
            .map(|s| vec![None; s.incoming])
            .collect();
        let mut out_darts: Vec<Vec<Option<Dart>>> = switches
            .iter()
            .map(|s| vec![None; s.outgoing])
            .collect();

        for (bi, b) in branches.iter().enumerate() {
            for (ei, end) in b.ends.iter().enumerate() {
                let &si = switch_index
                    .get(&end.switch)
                    .ok_or(TrackError::UnknownSwitch {
                        branch: b.id,
                        switch: end.switch,
                    })?;
                let table = match end.germ {
                    GermClass::In => &mut in_darts[si],
                    GermClass::Out => &mut out_darts[si],
                };
                if end.slot >= table.len() {
                    return Err(TrackError::SlotOutOfRange {
                        branch: b.id,
                        switch: end.switch,
                        slot: end.slot,
                        size: table.len(),
                    });
                }
                if table[end.slot].is_some() {
                    return Err(TrackError::SlotCollision {
                        switch: end.switch,
                        germ: end.germ,
                        slot: end.slot,
                    });
                }
                table[end.slot] = Some(2 * bi + ei);
            }
        }

        let unwrap_table = |tables: Vec<Vec<Option<Dart>>>,
                            germ: GermClass|
         -> Result<Vec<Vec<Dart>>, TrackError> {
            tables
                .into_iter()
                .enumerate()
                .map(|(si, t)| {
                    t.into_iter()
                        .enumerate()
                        .map(|(slot, d)| {
                            d.ok_or(TrackError::SlotUncovered {
                                switch: switches[si].id,
                                germ,
                                slot,
                            })
                        })
                        .collect()
                })
                .collect()
        };
        let in_darts = unwrap_table(in_darts, GermClass::In)?;
        let out_darts = unwrap_table(out_darts, GermClass::Out)?;

        let mut track = TrainTrack {
            surface,
            switches,
            branches,
            decorations: BTreeMap::new(),
            in_darts,
            out_darts,
            walks: Vec::new(),
        };
        track.walks = track.compute_walks();
        for (&idx, _) in &decorations {
            if idx >= track.walks.len() {
                return Err(TrackError::DecorationIndex {
                    index: idx,
                    regions: track.walks.len(),
                });
            }
        }
        track.decorations = decorations
            .into_iter()
            .filter(|(_, d)| *d != RegionDecoration::default())
            .collect();
        Ok(track)
    }

    pub fn parse(text: &str) -> Result<TrainTrack, TrackError> {
        let doc: TrackDoc =
            serde_json::from_str(text).map_err(|e| TrackError::Syntax(e.to_string()))?;
        let decorations = doc
            .regions
            .iter()
            .map(|r| {
                (
                    r.index,
                    RegionDecoration {
                        genus: r.genus,
                        punctures: r.punctures,
                    },
                )
            })
            .collect();
        TrainTrack::from_parts(doc.surface, doc.switches, doc.branches, decorations)
    }

    /// Canonical JSON rendering; byte-identical for equal tracks.
    pub fn to_json(&self) -> String {
        let doc = TrackDoc {
            surface: self.surface,
            switches: self.switches.clone(),
            branches: self.branches.clone(),
            regions: self
                .decorations
                .iter()
                .map(|(&index, d)| RegionEntry {
                    index,
                    genus: d.genus,
                    punctures: d.punctures,
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("track serialization");
        s.push('\n');
        s
    }

    // -- accessors ----------------------------------------------------------

    pub fn surface(&self) -> Surface {
        self.surface
    }

    pub fn switches(&self) -> &[SwitchSpec] {
        &self.switches
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn n_branches(&self) -> usize {
        self.branches.len()
    }

    pub fn n_switches(&self) -> usize {
        self.switches.len()
    }

    pub fn branch_index(&self, id: BranchId) -> Option<usize> {
        self.branches.binary_search_by_key(&id, |b| b.id).ok()
    }

    pub fn switch_idx(&self, id: SwitchId) -> Option<usize> {
        self.switches.binary_search_by_key(&id, |s| s.id).ok()
    }

    pub fn decorations(&self) -> &BTreeMap<usize, RegionDecoration> {
        &self.decorations
    }

    pub fn decoration(&self, region: usize) -> RegionDecoration {
        self.decorations.get(&region).copied().unwrap_or_default()
    }

    // -- darts ---------------------------------------------------------------

    pub fn dart(&self, branch_idx: usize, end_idx: usize) -> Dart {
        2 * branch_idx + end_idx
    }

    pub fn dart_branch(&self, d: Dart) -> usize {
        d / 2
    }

    pub fn dart_end(&self, d: Dart) -> &BranchEnd {
        &self.branches[d / 2].ends[d % 2]
    }

    pub fn alpha(&self, d: Dart) -> Dart {
        d ^ 1
    }

    /// Cyclic counterclockwise dart order around a switch: outgoing germ in
    /// reverse slot order, then incoming germ in slot order.
    pub fn cyclic_order(&self, switch_idx: usize) -> Vec<Dart> {
        let mut order: Vec<Dart> = self.out_darts[switch_idx].iter().rev().copied().collect();
        order.extend(self.in_darts[switch_idx].iter().copied());
        order
    }

    pub fn sigma(&self, d: Dart) -> Dart {
        let si = self.switch_idx(self.dart_end(d).switch).unwrap();
        let order = self.cyclic_order(si);
        let pos = order.iter().position(|&x| x == d).unwrap();
        order[(pos + 1) % order.len()]
    }

    pub fn sigma_inv(&self, d: Dart) -> Dart {
        let si = self.switch_idx(self.dart_end(d).switch).unwrap();
        let order = self.cyclic_order(si);
        let pos = order.iter().position(|&x| x == d).unwrap();
        order[(pos + order.len() - 1) % order.len()]
    }

    pub fn in_darts(&self, switch_idx: usize) -> &[Dart] {
        &self.in_darts[switch_idx]
    }

    pub fn out_darts(&self, switch_idx: usize) -> &[Dart] {
        &self.out_darts[switch_idx]
    }

    pub fn germ_darts(&self, switch_idx: usize, germ: GermClass) -> &[Dart] {
        match germ {
            GermClass::In => &self.in_darts[switch_idx],
            GermClass::Out => &self.out_darts[switch_idx],
        }
    }

    pub fn germ_size_at(&self, end: &BranchEnd) -> usize {
        let si = self.switch_idx(end.switch).unwrap();
        self.germ_darts(si, end.germ).len()
    }

    // -- boundary walks -------------------------------------------------------

    /// Face orbits of the ribbon structure. Each orbit element `d` contributes
    /// the corner `(d, sigma(d))` at its switch (a cusp when both darts lie in
    /// the same germ) followed by a step along `branch(sigma(d))` away from
    /// that switch.
    fn compute_walks(&self) -> Vec<Walk> {
        let n_darts = 2 * self.branches.len();
        let mut seen = vec![false; n_darts];
        let mut walks = Vec::new();
        for start in 0..n_darts {
            if seen[start] {
                continue;
            }
            let mut steps = Vec::new();
            let mut cusps = 0;
            let mut d = start;
            loop {
                seen[d] = true;
                let s = self.sigma(d);
                if self.dart_end(d).germ == self.dart_end(s).germ {
                    cusps += 1;
                }
                let bi = self.dart_branch(s);
                let (side, direction) = if s % 2 == 0 {
                    (Side::Left, Direction::AToB)
                } else {
                    (Side::Right, Direction::BToA)
                };
                steps.push((bi, side, direction));
                d = self.alpha(s);
                if d == start {
                    break;
                }
            }
            walks.push(Walk { steps, cusps });
        }
        // canonical order: minimal (branch id, side) on the boundary
        let key = |w: &Walk| {
            w.steps
                .iter()
                .map(|&(bi, side, _)| (self.branches[bi].id, side))
                .min()
                .unwrap()
        };
        walks.sort_by_key(key);
        walks
    }

    pub fn n_regions(&self) -> usize {
        self.walks.len()
    }

    /// Complementary regions in canonical order with decorations attached.
    pub fn regions(&self) -> Vec<Region> {
        self.walks
            .iter()
            .enumerate()
            .map(|(i, w)| Region {
                boundary: w
                    .steps
                    .iter()
                    .map(|&(bi, side, direction)| RegionSideRef {
                        branch: self.branches[bi].id,
                        side,
                        direction,
                    })
                    .collect(),
                cusp_count: w.cusps,
                decoration: self.decoration(i),
            })
            .collect()
    }

    /// Region index bounding the given branch side.
    pub fn region_of_side(&self, branch_idx: usize, side: Side) -> usize {
        self.walks
            .iter()
            .position(|w| w.steps.iter().any(|&(bi, s, _)| bi == branch_idx && s == side))
            .expect("every branch side lies on exactly one walk")
    }

    // -- validation -----------------------------------------------------------

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if !self.surface.supports_tracks() {
            violations.push(Violation::UnsupportedSurface);
        }
        for (si, sw) in self.switches.iter().enumerate() {
            let n_in = self.in_darts[si].len();
            let n_out = self.out_darts[si].len();
            let valence = n_in + n_out;
            if valence < 2 {
                violations.push(Violation::BadValence {
                    switch: sw.id,
                    valence,
                });
            } else if valence == 2 {
                let circle = n_in == 1
                    && n_out == 1
                    && self.dart_branch(self.in_darts[si][0])
                        == self.dart_branch(self.out_darts[si][0]);
                if !circle {
                    violations.push(Violation::BivalentNonCircle { switch: sw.id });
                }
            } else {
                if n_in == 0 {
                    violations.push(Violation::EmptyGerm {
                        switch: sw.id,
                        germ: GermClass::In,
                    });
                }
                if n_out == 0 {
                    violations.push(Violation::EmptyGerm {
                        switch: sw.id,
                        germ: GermClass::Out,
                    });
                }
            }
        }
        if (self.branches.len() as i64) > self.surface.max_branches() {
            violations.push(Violation::BranchCountBound {
                count: self.branches.len(),
                bound: self.surface.max_branches(),
            });
        }
        if (self.switches.len() as i64) > self.surface.max_switches() {
            violations.push(Violation::SwitchCountBound {
                count: self.switches.len(),
                bound: self.surface.max_switches(),
            });
        }
        let regions = self.regions();
        for (i, r) in regions.iter().enumerate() {
            let dge = r.doubled_generalized_euler();
            if dge >= 0 {
                violations.push(Violation::RegionGeometry {
                    region: i,
                    doubled_generalized_euler: dge,
                });
            }
        }
        let chi_sum: i64 = regions.iter().map(|r| r.euler_characteristic()).sum();
        let lhs = self.switches.len() as i64 - self.branches.len() as i64 + chi_sum;
        let rhs = self.surface.euler_characteristic();
        if lhs != rhs {
            violations.push(Violation::EulerIdentity { lhs, rhs });
        }
        let puncture_total: u32 = regions.iter().map(|r| r.decoration.punctures).sum();
        if puncture_total != self.surface.punctures {
            violations.push(Violation::PunctureSum {
                total: puncture_total,
                expected: self.surface.punctures,
            });
        }
        ValidationReport { violations }
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_valid()
    }

    // -- branch classification --------------------------------------------------

    pub fn classify_branch(&self, id: BranchId) -> Result<BranchKind, TrackError> {
        let bi = self.branch_index(id).ok_or(TrackError::UnknownBranch(id))?;
        let sizes = [
            self.germ_size_at(&self.branches[bi].ends[0]),
            self.germ_size_at(&self.branches[bi].ends[1]),
        ];
        Ok(match (sizes[0] == 1, sizes[1] == 1) {
            (true, true) => BranchKind::Large,
            (false, false) => BranchKind::Small,
            _ => BranchKind::Mixed,
        })
    }

    fn switch_is_circle(&self, si: usize) -> bool {
        self.in_darts[si].len() == 1
            && self.out_darts[si].len() == 1
            && self.dart_branch(self.in_darts[si][0]) == self.dart_branch(self.out_darts[si][0])
    }

    /// Every switch has a singleton germ on exactly one side; circle switches
    /// count as semi-generic.
    pub fn is_semi_generic(&self) -> bool {
        (0..self.switches.len()).all(|si| {
            let (a, b) = (self.in_darts[si].len(), self.out_darts[si].len());
            (a == 1) != (b == 1) || self.switch_is_circle(si)
        })
    }

    pub fn is_generic(&self) -> bool {
        self.is_semi_generic()
            && (0..self.switches.len())
                .all(|si| self.in_darts[si].len() + self.out_darts[si].len() <= 3)
    }

    /// Every complementary region is an undecorated (simply connected) disk.
    pub fn is_large(&self) -> bool {
        (0..self.walks.len()).all(|i| self.decoration(i) == RegionDecoration::default())
    }

    /// Germ-structure-preserving equality up to nothing: exact structural
    /// equality of the sorted representations, including decorations.
    pub fn structurally_eq(&self, other: &TrainTrack) -> bool {
        self.surface == other.surface
            && self.switches == other.switches
            && self.branches == other.branches
            && self.decorations == other.decorations
    }
}

/// A train path as a sequence of directed branch traversals.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrainPath {
    pub steps: Vec<(BranchId, Direction)>,
    pub closed: bool,
}

impl TrainPath {
    pub fn closed(steps: Vec<(BranchId, Direction)>) -> TrainPath {
        TrainPath {
            steps,
            closed: true,
        }
    }

    pub fn reversed(&self) -> TrainPath {
        TrainPath {
            steps: self
                .steps
                .iter()
                .rev()
                .map(|&(b, d)| (b, d.reversed()))
                .collect(),
            closed: self.closed,
        }
    }
}

impl TrainTrack {
    /// Arrival end of a directed traversal.
    pub fn arrival_end(&self, branch_idx: usize, dir: Direction) -> &BranchEnd {
        match dir {
            Direction::AToB => &self.branches[branch_idx].ends[1],
            Direction::BToA => &self.branches[branch_idx].ends[0],
        }
    }

    /// Departure end of a directed traversal.
    pub fn departure_end(&self, branch_idx: usize, dir: Direction) -> &BranchEnd {
        match dir {
            Direction::AToB => &self.branches[branch_idx].ends[0],
            Direction::BToA => &self.branches[branch_idx].ends[1],
        }
    }

    /// A transition is legal when it enters the switch via one germ and
    /// leaves via the other.
    pub fn transition_is_legal(
        &self,
        from: (usize, Direction),
        to: (usize, Direction),
    ) -> bool {
        let arr = self.arrival_end(from.0, from.1);
        let dep = self.departure_end(to.0, to.1);
        arr.switch == dep.switch && arr.germ != dep.germ
    }

    /// Checks germ-legality of every transition; for closed paths this
    /// includes the wrap-around, which is exactly smooth (proper) closure.
    pub fn path_is_legal(&self, path: &TrainPath) -> bool {
        if path.steps.is_empty() {
            return false;
        }
        let idx: Option<Vec<(usize, Direction)>> = path
            .steps
            .iter()
            .map(|&(b, d)| self.branch_index(b).map(|i| (i, d)))
            .collect();
        let Some(steps) = idx else { return false };
        for w in steps.windows(2) {
            if !self.transition_is_legal(w[0], w[1]) {
                return false;
            }
        }
        if path.closed && !self.transition_is_legal(steps[steps.len() - 1], steps[0]) {
            return false;
        }
        true
    }

    /// Directed successor states of `(branch, direction)` under germ-legal
    /// switch crossings.
    pub fn successors(&self, branch_idx: usize, dir: Direction) -> Vec<(usize, Direction)> {
        let arr = self.arrival_end(branch_idx, dir);
        let si = self.switch_idx(arr.switch).unwrap();
        self.germ_darts(si, arr.germ.other())
            .iter()
            .map(|&d| {
                let bi = self.dart_branch(d);
                let dir = if d % 2 == 0 {
                    Direction::AToB
                } else {
                    Direction::BToA
                };
                (bi, dir)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn circle_parses_and_has_two_regions() {
        let t = fixtures::circle();
        assert_eq!(t.n_branches(), 1);
        assert_eq!(t.n_switches(), 1);
        let regions = t.regions();
        assert_eq!(regions.len(), 2);
        for r in &regions {
            assert_eq!(r.cusp_count, 0);
        }
        assert!(t.validate().is_valid());
    }

    #[test]
    fn s11_standard_single_punctured_bigon() {
        let t = fixtures::s11_standard();
        assert_eq!(t.n_branches(), 3);
        assert_eq!(t.n_switches(), 2);
        let regions = t.regions();
        assert_eq!(regions.len(), 1, "standard track complement is one region");
        assert_eq!(regions[0].cusp_count, 2);
        assert_eq!(regions[0].decoration.punctures, 1);
        // boundary walk covers each branch side exactly once
        assert_eq!(regions[0].boundary.len(), 6);
        let report = t.validate();
        assert!(report.is_valid(), "unexpected violations: {report:?}");
    }

    #[test]
    fn s11_euler_identity_hand_check() {
        // 2 - 2g - p = -1 must equal (|S| - |B|) + chi(Q) = (2 - 3) + 0
        let t = fixtures::s11_standard();
        let chi: i64 = t.regions().iter().map(|r| r.euler_characteristic()).sum();
        assert_eq!(chi, 0);
        assert_eq!(
            t.n_switches() as i64 - t.n_branches() as i64 + chi,
            t.surface().euler_characteristic()
        );
    }

    #[test]
    fn classification_examples() {
        let c = fixtures::circle();
        assert_eq!(
            c.classify_branch(BranchId(0)).unwrap(),
            BranchKind::Large,
            "both circle germs are singletons"
        );
        let t = fixtures::s11_standard();
        assert_eq!(t.classify_branch(BranchId(0)).unwrap(), BranchKind::Large);
        assert_eq!(t.classify_branch(BranchId(1)).unwrap(), BranchKind::Small);
        assert_eq!(t.classify_branch(BranchId(2)).unwrap(), BranchKind::Small);
        assert!(t.classify_branch(BranchId(99)).is_err());
    }

    #[test]
    fn genericity_and_largeness() {
        let t = fixtures::s11_standard();
        assert!(t.is_generic());
        assert!(!t.is_large(), "region carries the puncture");
        let c = fixtures::circle();
        assert!(c.is_semi_generic());
        assert!(!c.is_large());
    }

    #[test]
    fn slot_out_of_range_is_reference_error() {
        let text = r#"{
            "surface": {"genus": 2, "punctures": 0},
            "switches": [{"id": 0, "incoming": 1, "outgoing": 1}],
            "branches": [{"id": 0, "ends": [
                {"switch": 0, "germ": "in", "slot": 2},
                {"switch": 0, "germ": "out", "slot": 0}]}]
        }"#;
        match TrainTrack::parse(text) {
            Err(TrackError::SlotOutOfRange { slot: 2, size: 1, .. }) => {}
            other => panic!("expected slot error, got {other:?}"),
        }
    }

    #[test]
    fn monogon_region_rejected() {
        // A disk with one cusp has chi - V/2 = 1/2 > 0.
        let r = Region {
            boundary: Vec::new(),
            cusp_count: 1,
            decoration: RegionDecoration::default(),
        };
        assert!(r.doubled_generalized_euler() > 0);
    }

    #[test]
    fn count_bound_violation_reported() {
        // 19 circle components on S_2 exceed the 18-branch bound.
        let mut switches = Vec::new();
        let mut branches = Vec::new();
        for i in 0..19u32 {
            switches.push(SwitchSpec {
                id: SwitchId(i),
                incoming: 1,
                outgoing: 1,
            });
            branches.push(Branch {
                id: BranchId(i),
                ends: [
                    BranchEnd {
                        switch: SwitchId(i),
                        germ: GermClass::In,
                        slot: 0,
                    },
                    BranchEnd {
                        switch: SwitchId(i),
                        germ: GermClass::Out,
                        slot: 0,
                    },
                ],
            });
        }
        let t = TrainTrack::from_parts(
            Surface::new(2, 0),
            switches,
            branches,
            BTreeMap::new(),
        )
        .unwrap();
        let report = t.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::BranchCountBound { bound: 18, .. })));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::SwitchCountBound { bound: 12, .. })));
    }

    #[test]
    fn side_multiplicity_is_twice_branch_count() {
        for t in [fixtures::circle(), fixtures::s11_standard()] {
            let total: usize = t.regions().iter().map(|r| r.boundary.len()).sum();
            assert_eq!(total, 2 * t.n_branches());
        }
    }

    #[test]
    fn json_round_trip_is_canonical() {
        let t = fixtures::s11_standard();
        let s1 = t.to_json();
        let t2 = TrainTrack::parse(&s1).unwrap();
        assert_eq!(s1, t2.to_json());
        assert!(t.structurally_eq(&t2));
    }
}
