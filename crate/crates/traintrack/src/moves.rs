//! Splitting and sliding moves with exact measure transport.
//!
//! A split rewrites the two switches and four germ slots around a large
//! branch into one of the three outcomes; a slide reassociates the two
//! consecutive merges along a mixed branch. Every move returns a transport
//! matrix taking measures on the new track to measures on the old one,
//! verified against the switch-condition kernels at construction time, plus
//! a per-branch carrying image for independent path retracing.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, Rat};
use crate::measures::{counting_measure, MeasureError, TransverseMeasure};
use crate::track::{
    Branch, BranchEnd, BranchId, BranchKind, Dart, Direction, GermClass, RegionDecoration, Side,
    SwitchId, SwitchSpec, TrackError, TrainPath, TrainTrack, ValidationReport,
};

#[derive(Debug, Error)]
pub enum MoveError {
    #[error("track error: {0}")]
    Track(#[from] TrackError),
    #[error("branch {0} is not large")]
    NotLarge(BranchId),
    #[error("branch {0} is not mixed")]
    NotMixed(BranchId),
    #[error("germ profile around {0} is not the generic square of the local move model")]
    UnsupportedGermProfile(BranchId),
    #[error("resulting object fails validation: {0:?}")]
    ResultingInvalid(ValidationReport),
    #[error("region decorations cannot be transported through the move")]
    DecorationTransport,
    #[error("transport verification failed")]
    TransportBroken,
    #[error("target measure must be strictly positive")]
    TargetNotPositive,
    #[error("measure error: {0}")]
    Measure(#[from] MeasureError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitChoice {
    Left,
    Right,
    Central,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    SplitLeft,
    SplitRight,
    SplitCentral,
    Slide,
}

impl MoveKind {
    pub fn of_split(c: SplitChoice) -> MoveKind {
        match c {
            SplitChoice::Left => MoveKind::SplitLeft,
            SplitChoice::Right => MoveKind::SplitRight,
            SplitChoice::Central => MoveKind::SplitCentral,
        }
    }
}

/// Integer matrix taking weight vectors on `from` (the new track) to weight
/// vectors on `to` (the old track). Rows follow `to`'s branch order, columns
/// `from`'s. Verified at construction: non-negative entries, and kernel
/// vectors of the new incidence matrix map into the kernel of the old one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasureTransport {
    pub matrix: Vec<Vec<BigInt>>,
    pub from_branches: Vec<BranchId>,
    pub to_branches: Vec<BranchId>,
}

impl MeasureTransport {
    pub fn identity(track: &TrainTrack) -> MeasureTransport {
        let ids: Vec<BranchId> = track.branches().iter().map(|b| b.id).collect();
        let n = ids.len();
        let mut matrix = vec![vec![BigInt::zero(); n]; n];
        for (i, row) in matrix.iter_mut().enumerate() {
            row[i] = BigInt::one();
        }
        MeasureTransport {
            matrix,
            from_branches: ids.clone(),
            to_branches: ids,
        }
    }

    pub fn apply(&self, weights: &[Rat]) -> Vec<Rat> {
        self.matrix
            .iter()
            .map(|row| {
                row.iter()
                    .zip(weights)
                    .fold(Rat::zero(), |acc, (a, w)| {
                        acc + Rat::from_integer(a.clone()) * w
                    })
            })
            .collect()
    }

    /// `self` after `earlier`: with `earlier: C -> B` and `self: B -> A`
    /// the result maps `C -> A`.
    pub fn compose(&self, later: &MeasureTransport) -> MeasureTransport {
        assert_eq!(self.from_branches, later.to_branches);
        let rows = self.matrix.len();
        let mid = later.matrix.len();
        let cols = later.from_branches.len();
        let mut matrix = vec![vec![BigInt::zero(); cols]; rows];
        for i in 0..rows {
            for k in 0..mid {
                if self.matrix[i][k].is_zero() {
                    continue;
                }
                for j in 0..cols {
                    let add = &self.matrix[i][k] * &later.matrix[k][j];
                    matrix[i][j] += add;
                }
            }
        }
        MeasureTransport {
            matrix,
            from_branches: later.from_branches.clone(),
            to_branches: self.to_branches.clone(),
        }
    }

    /// Kernel-mapping identity: for a basis of `ker(L_new)`, the image lies
    /// in `ker(L_old)` exactly. Also checks entry non-negativity.
    pub fn verify(&self, old: &TrainTrack, new: &TrainTrack) -> bool {
        if self
            .matrix
            .iter()
            .any(|r| r.iter().any(|x| x.is_negative()))
        {
            return false;
        }
        let l_new = crate::measures::incidence_matrix(new).to_rational();
        let l_old = crate::measures::incidence_matrix(old).to_rational();
        let basis = linalg::nullspace(&l_new, new.n_branches());
        for v in basis {
            let image: Vec<Rat> = self.apply(&v);
            if !linalg::mat_vec(&l_old, &image).iter().all(|x| x.is_zero()) {
                return false;
            }
        }
        true
    }
}

/// Carrying image of a move: for every directed branch of the new track, the
/// train path it covers on the old track. Retracing a new path through these
/// images is the independent check against the transport matrix.
#[derive(Clone, Debug)]
pub struct CarryingImage {
    /// image of (new branch index, AToB); the reversed traversal is the
    /// reversed, direction-flipped image
    forward: Vec<Vec<(BranchId, Direction)>>,
}

impl CarryingImage {
    pub fn image_of(&self, new_branch_idx: usize, dir: Direction) -> Vec<(BranchId, Direction)> {
        match dir {
            Direction::AToB => self.forward[new_branch_idx].clone(),
            Direction::BToA => self.forward[new_branch_idx]
                .iter()
                .rev()
                .map(|&(b, d)| (b, d.reversed()))
                .collect(),
        }
    }

    /// Retraces a closed path on the new track into the carried closed path
    /// on the old track.
    pub fn retrace(&self, new: &TrainTrack, path: &TrainPath) -> TrainPath {
        let mut steps = Vec::new();
        for &(b, d) in &path.steps {
            let bi = new.branch_index(b).expect("path lives on the new track");
            steps.extend(self.image_of(bi, d));
        }
        TrainPath {
            steps,
            closed: path.closed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MoveRecord {
    pub kind: MoveKind,
    pub branch: BranchId,
    pub transport: MeasureTransport,
    pub carrying: CarryingImage,
}

#[derive(Serialize, Deserialize)]
struct MoveRecordDoc {
    kind: MoveKind,
    branch: BranchId,
}

impl MoveRecord {
    /// One JSON-lines entry; replay re-derives transports from the move.
    pub fn to_log_line(&self) -> String {
        serde_json::to_string(&MoveRecordDoc {
            kind: self.kind,
            branch: self.branch,
        })
        .unwrap()
    }

    pub fn parse_log_line(line: &str) -> Result<(MoveKind, BranchId), MoveError> {
        let doc: MoveRecordDoc = serde_json::from_str(line)
            .map_err(|e| MoveError::Track(TrackError::Syntax(e.to_string())))?;
        Ok((doc.kind, doc.branch))
    }
}

/// A sequence of tracks where each is obtained from its predecessor by one
/// move, so each later track is carried by every earlier one.
#[derive(Clone, Debug)]
pub struct NestedSequence {
    pub tracks: Vec<TrainTrack>,
    pub records: Vec<MoveRecord>,
    pub step_bound: Option<Rat>,
}

impl NestedSequence {
    pub fn new(start: TrainTrack) -> NestedSequence {
        NestedSequence {
            tracks: vec![start],
            records: Vec::new(),
            step_bound: None,
        }
    }

    pub fn last(&self) -> &TrainTrack {
        self.tracks.last().unwrap()
    }

    /// Product of the per-move transports: measures on the final track
    /// expressed on the first one.
    pub fn composite_transport(&self) -> MeasureTransport {
        let mut acc = MeasureTransport::identity(&self.tracks[0]);
        for rec in &self.records {
            acc = acc.compose(&rec.transport);
        }
        acc
    }

    pub fn to_log(&self) -> String {
        let mut s = String::new();
        for rec in &self.records {
            s.push_str(&rec.to_log_line());
            s.push('\n');
        }
        s
    }
}

// ---------------------------------------------------------------------------
// split
// ---------------------------------------------------------------------------

struct SquareDarts {
    bi: usize,
    b_u: Dart,
    b_w: Dart,
    x_a: Dart,
    x_b: Dart,
    y_a: Dart,
    y_b: Dart,
}

/// The generic square around a large branch: both opposite germs have
/// exactly two darts. `u` is the switch of `ends[0]`, `w` of `ends[1]`;
/// strand A pairs `(sigma^-1(b_u), sigma(b_w))`, strand B the other two.
fn square_darts(track: &TrainTrack, b: BranchId) -> Result<SquareDarts, MoveError> {
    let bi = track
        .branch_index(b)
        .ok_or(TrackError::UnknownBranch(b))?;
    if track.classify_branch(b)? != BranchKind::Large {
        return Err(MoveError::NotLarge(b));
    }
    let ends = &track.branches()[bi].ends;
    for end in ends {
        let si = track.switch_idx(end.switch).unwrap();
        if track.germ_darts(si, end.germ.other()).len() != 2 {
            return Err(MoveError::UnsupportedGermProfile(b));
        }
    }
    let b_u = track.dart(bi, 0);
    let b_w = track.dart(bi, 1);
    Ok(SquareDarts {
        bi,
        b_u,
        b_w,
        x_a: track.sigma_inv(b_u),
        x_b: track.sigma(b_u),
        y_a: track.sigma(b_w),
        y_b: track.sigma_inv(b_w),
    })
}

/// Applies end relocations and drops to the branch list.
fn rebuild_branches(
    track: &TrainTrack,
    drop: &BTreeSet<usize>,
    relocations: &HashMap<Dart, BranchEnd>,
    extra: Vec<Branch>,
) -> Vec<Branch> {
    let mut out = Vec::new();
    for (bi, b) in track.branches().iter().enumerate() {
        if drop.contains(&bi) {
            continue;
        }
        let mut nb = b.clone();
        for ei in 0..2 {
            if let Some(end) = relocations.get(&track.dart(bi, ei)) {
                nb.ends[ei] = *end;
            }
        }
        out.push(nb);
    }
    out.extend(extra);
    out
}

/// Moves region decorations from the old track onto the new one by matching
/// boundary walks through the sides of untouched branches. Components that
/// merge sum their decorations; components that split must be undecorated.
fn transport_decorations(
    old: &TrainTrack,
    new_surface: crate::surface::Surface,
    new_switches: &[SwitchSpec],
    new_branches: &[Branch],
    touched: &BTreeSet<BranchId>,
) -> Result<BTreeMap<usize, RegionDecoration>, MoveError> {
    let bare = TrainTrack::from_parts(
        new_surface,
        new_switches.to_vec(),
        new_branches.to_vec(),
        BTreeMap::new(),
    )?;
    let old_regions = old.regions();
    let new_regions = bare.regions();

    let persisting = |b: BranchId| !touched.contains(&b);

    // union-find over old regions (0..n_old) and new regions (n_old..)
    let n_old = old_regions.len();
    let n_new = new_regions.len();
    let mut parent: Vec<usize> = (0..n_old + n_new).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let r = find(parent, parent[x]);
            parent[x] = r;
        }
        parent[x]
    }
    let mut by_side: HashMap<(BranchId, Side), usize> = HashMap::new();
    for (i, r) in old_regions.iter().enumerate() {
        for s in &r.boundary {
            if persisting(s.branch) {
                by_side.insert((s.branch, s.side), i);
            }
        }
    }
    for (j, r) in new_regions.iter().enumerate() {
        for s in &r.boundary {
            if persisting(s.branch) {
                if let Some(&i) = by_side.get(&(s.branch, s.side)) {
                    let a = find(&mut parent, i);
                    let b = find(&mut parent, n_old + j);
                    parent[a] = b;
                }
            }
        }
    }

    let mut sums: HashMap<usize, (u32, u32, usize)> = HashMap::new(); // genus, punctures, #new
    for (i, r) in old_regions.iter().enumerate() {
        let root = find(&mut parent, i);
        let e = sums.entry(root).or_insert((0, 0, 0));
        e.0 += r.decoration.genus;
        e.1 += r.decoration.punctures;
    }
    for j in 0..n_new {
        let root = find(&mut parent, n_old + j);
        sums.entry(root).or_insert((0, 0, 0)).2 += 1;
    }

    let mut out = BTreeMap::new();
    for j in 0..n_new {
        let root = find(&mut parent, n_old + j);
        let &(g, p, count) = sums.get(&root).unwrap();
        if count == 1 {
            if g != 0 || p != 0 {
                out.insert(
                    j,
                    RegionDecoration {
                        genus: g,
                        punctures: p,
                    },
                );
            }
        } else if g != 0 || p != 0 {
            // an old decorated region would have to split: not transportable
            return Err(MoveError::DecorationTransport);
        }
    }
    Ok(out)
}

fn germ_class_of(track: &TrainTrack, d: Dart) -> GermClass {
    track.dart_end(d).germ
}

fn branch_of(track: &TrainTrack, d: Dart) -> BranchId {
    track.branches()[track.dart_branch(d)].id
}

/// One rebuilt trivalent switch: a singleton germ and a two-slot germ whose
/// entries are either surviving darts or an end of the new diagonal branch.
struct NewSwitch {
    id: SwitchId,
    singleton: (Dart, GermClass),
    pair: ([PairSlot; 2], GermClass),
}

enum PairSlot {
    Old(Dart),
    NewBranch(usize), // end index of the new diagonal branch
}

#[allow(clippy::type_complexity)]
fn split_structures(
    track: &TrainTrack,
    sq: &SquareDarts,
    choice: SplitChoice,
) -> Result<(Vec<SwitchSpec>, Vec<Branch>, BTreeSet<BranchId>, CarryingImage), MoveError> {
    let b_id = track.branches()[sq.bi].id;
    let u_id = track.dart_end(sq.b_u).switch;
    let w_id = track.dart_end(sq.b_w).switch;
    let new_branch_id = BranchId(track.branches().iter().map(|b| b.id.0).max().unwrap() + 1);

    let mut switches: Vec<SwitchSpec> = track
        .switches()
        .iter()
        .filter(|s| s.id != u_id && s.id != w_id)
        .copied()
        .collect();

    // Slot orders are pinned by walk continuity: the zone-side corner of the
    // singleton dart must continue onto the diagonal exactly where the walk
    // previously continued onto the split branch (sigma_new(x_a) = diagonal
    // on the u side of a left split, sigma_new(diagonal) = x_b on the w
    // side; mirrored for right splits).
    let (na, nb, u_cross, w_cross) = match choice {
        SplitChoice::Left => {
            // diagonal carries the (x_a <-> y_b) routes
            let xa_class = germ_class_of(track, sq.x_a);
            let na = NewSwitch {
                id: u_id,
                singleton: (sq.x_a, xa_class),
                pair: (
                    match xa_class {
                        GermClass::Out => [PairSlot::NewBranch(0), PairSlot::Old(sq.y_a)],
                        GermClass::In => [PairSlot::Old(sq.y_a), PairSlot::NewBranch(0)],
                    },
                    xa_class.other(),
                ),
            };
            let yb_class = germ_class_of(track, sq.y_b);
            let nb = NewSwitch {
                id: w_id,
                singleton: (sq.y_b, yb_class),
                pair: (
                    match yb_class {
                        GermClass::In => [PairSlot::Old(sq.x_b), PairSlot::NewBranch(1)],
                        GermClass::Out => [PairSlot::NewBranch(1), PairSlot::Old(sq.x_b)],
                    },
                    yb_class.other(),
                ),
            };
            (na, nb, sq.y_a, sq.x_b)
        }
        SplitChoice::Right => {
            // diagonal carries the (x_b <-> y_a) routes
            let xb_class = germ_class_of(track, sq.x_b);
            let n1 = NewSwitch {
                id: u_id,
                singleton: (sq.x_b, xb_class),
                pair: (
                    match xb_class {
                        GermClass::Out => [PairSlot::Old(sq.y_b), PairSlot::NewBranch(0)],
                        GermClass::In => [PairSlot::NewBranch(0), PairSlot::Old(sq.y_b)],
                    },
                    xb_class.other(),
                ),
            };
            let ya_class = germ_class_of(track, sq.y_a);
            let n2 = NewSwitch {
                id: w_id,
                singleton: (sq.y_a, ya_class),
                pair: (
                    match ya_class {
                        GermClass::In => [PairSlot::NewBranch(1), PairSlot::Old(sq.x_a)],
                        GermClass::Out => [PairSlot::Old(sq.x_a), PairSlot::NewBranch(1)],
                    },
                    ya_class.other(),
                ),
            };
            (n1, n2, sq.y_b, sq.x_a)
        }
        SplitChoice::Central => unreachable!("handled by split_central_structures"),
    };

    let plan = |sw: NewSwitch| -> (SwitchSpec, Vec<(PairSlot, BranchEnd)>) {
        let (n_in, n_out) = match sw.singleton.1 {
            GermClass::In => (1, 2),
            GermClass::Out => (2, 1),
        };
        let spec = SwitchSpec {
            id: sw.id,
            incoming: n_in,
            outgoing: n_out,
        };
        let mut placements = vec![(
            PairSlot::Old(sw.singleton.0),
            BranchEnd {
                switch: sw.id,
                germ: sw.singleton.1,
                slot: 0,
            },
        )];
        let pair_germ = sw.pair.1;
        let [p0, p1] = sw.pair.0;
        for (slot, ps) in [p0, p1].into_iter().enumerate() {
            placements.push((
                ps,
                BranchEnd {
                    switch: sw.id,
                    germ: pair_germ,
                    slot,
                },
            ));
        }
        (spec, placements)
    };

    let (spec_a, place_a) = plan(na);
    let (spec_b, place_b) = plan(nb);
    switches.push(spec_a);
    switches.push(spec_b);

    let mut relocations: HashMap<Dart, BranchEnd> = HashMap::new();
    let mut new_ends: [Option<BranchEnd>; 2] = [None, None];
    for (ps, end) in place_a.into_iter().chain(place_b) {
        match ps {
            PairSlot::Old(d) => {
                relocations.insert(d, end);
            }
            PairSlot::NewBranch(ei) => new_ends[ei] = Some(end),
        }
    }
    let new_branch = Branch {
        id: new_branch_id,
        ends: [new_ends[0].unwrap(), new_ends[1].unwrap()],
    };
    let drop: BTreeSet<usize> = [sq.bi].into_iter().collect();
    let mut branches = rebuild_branches(track, &drop, &relocations, vec![new_branch]);
    branches.sort_by_key(|b| b.id);

    // carrying images: a branch whose relocated end sits at the u-side
    // switch has its body beyond w, so departing that end crosses b from u
    // to w; w-side relocations cross the other way. The diagonal covers b
    // once, oriented u -> w.
    let mut forward: Vec<Vec<(BranchId, Direction)>> = Vec::with_capacity(branches.len());
    for nb in &branches {
        if nb.id == new_branch_id {
            forward.push(vec![(b_id, Direction::AToB)]);
            continue;
        }
        let old_bi = track.branch_index(nb.id).unwrap();
        let mut img = vec![(nb.id, Direction::AToB)];
        for ei in 0..2 {
            let d = track.dart(old_bi, ei);
            if d == u_cross {
                if ei == 0 {
                    img.insert(0, (b_id, Direction::AToB));
                } else {
                    img.push((b_id, Direction::BToA));
                }
            } else if d == w_cross {
                if ei == 0 {
                    img.insert(0, (b_id, Direction::BToA));
                } else {
                    img.push((b_id, Direction::AToB));
                }
            }
        }
        forward.push(img);
    }

    let touched = [b_id, new_branch_id].into_iter().collect();
    Ok((switches, branches, touched, CarryingImage { forward }))
}

#[allow(clippy::type_complexity)]
fn split_central_structures(
    track: &TrainTrack,
    sq: &SquareDarts,
) -> Result<(Vec<SwitchSpec>, Vec<Branch>, BTreeSet<BranchId>, CarryingImage), MoveError> {
    let b_id = track.branches()[sq.bi].id;
    let u_id = track.dart_end(sq.b_u).switch;
    let w_id = track.dart_end(sq.b_w).switch;

    // joins glue strand darts across the removed branch; leaving the u-side
    // dart crosses b from u to w
    let join_of: HashMap<Dart, (Dart, Direction)> = [
        (sq.x_a, (sq.y_a, Direction::AToB)),
        (sq.y_a, (sq.x_a, Direction::BToA)),
        (sq.x_b, (sq.y_b, Direction::AToB)),
        (sq.y_b, (sq.x_b, Direction::BToA)),
    ]
    .into_iter()
    .collect();

    let mut switches: Vec<SwitchSpec> = track
        .switches()
        .iter()
        .filter(|s| s.id != u_id && s.id != w_id)
        .copied()
        .collect();

    let mut branches: Vec<Branch> = Vec::new();
    let mut images: HashMap<BranchId, Vec<(BranchId, Direction)>> = HashMap::new();
    let mut touched: BTreeSet<BranchId> = [b_id].into_iter().collect();
    let mut circle_switch_ids = vec![u_id, w_id].into_iter();
    let mut seen = vec![false; track.n_branches()];
    seen[sq.bi] = true;

    for start_bi in 0..track.n_branches() {
        if seen[start_bi] {
            continue;
        }
        let at_join = |d: Dart| join_of.contains_key(&d);
        if !at_join(track.dart(start_bi, 0)) && !at_join(track.dart(start_bi, 1)) {
            // untouched branch
            seen[start_bi] = true;
            let b = &track.branches()[start_bi];
            branches.push(b.clone());
            images.insert(b.id, vec![(b.id, Direction::AToB)]);
            continue;
        }
        // walk back from this branch to the chain start (a dart whose far
        // side is not joined), or detect a circle
        let mut depart = track.dart(start_bi, 0);
        let mut is_circle = false;
        let mut guard = 0;
        while let Some(&(joined_from, _)) = join_of.get(&depart) {
            depart = track.alpha(joined_from);
            guard += 1;
            if guard > 2 * track.n_branches() {
                is_circle = true;
                depart = track.dart(start_bi, 0);
                break;
            }
        }
        // traverse the chain from `depart`
        let mut chain: Vec<(usize, Direction)> = Vec::new();
        let mut crossings: Vec<(usize, Direction)> = Vec::new();
        let mut d = depart;
        loop {
            let bi = track.dart_branch(d);
            if chain.iter().any(|&(cbi, _)| cbi == bi) {
                break; // circle closed
            }
            seen[bi] = true;
            let dir = if d % 2 == 0 {
                Direction::AToB
            } else {
                Direction::BToA
            };
            chain.push((bi, dir));
            let far = track.alpha(d);
            match join_of.get(&far) {
                Some(&(next_d, cross_dir)) => {
                    crossings.push((chain.len() - 1, cross_dir));
                    d = next_d;
                }
                None => break,
            }
        }
        let new_id = chain
            .iter()
            .map(|&(bi, _)| track.branches()[bi].id)
            .min()
            .unwrap();
        for &(bi, _) in &chain {
            touched.insert(track.branches()[bi].id);
        }
        let mut img: Vec<(BranchId, Direction)> = Vec::new();
        for (pos, &(bi, dir)) in chain.iter().enumerate() {
            img.push((track.branches()[bi].id, dir));
            if let Some(&(_, cross_dir)) = crossings.iter().find(|&&(p, _)| p == pos) {
                if !is_circle || pos + 1 < chain.len() {
                    img.push((b_id, cross_dir));
                }
            }
        }
        if is_circle {
            // the wrap-around crossing closes the circle
            if let Some(&(_, cross_dir)) = crossings.iter().find(|&&(p, _)| p + 1 == chain.len()) {
                img.push((b_id, cross_dir));
            }
            let sw = circle_switch_ids
                .next()
                .ok_or(MoveError::DecorationTransport)?;
            switches.push(SwitchSpec {
                id: sw,
                incoming: 1,
                outgoing: 1,
            });
            branches.push(Branch {
                id: new_id,
                ends: [
                    BranchEnd {
                        switch: sw,
                        germ: GermClass::Out,
                        slot: 0,
                    },
                    BranchEnd {
                        switch: sw,
                        germ: GermClass::In,
                        slot: 0,
                    },
                ],
            });
        } else {
            let last = {
                let &(bi, dir) = chain.last().unwrap();
                let ei = match dir {
                    Direction::AToB => 1,
                    Direction::BToA => 0,
                };
                track.dart(bi, ei)
            };
            // ends keep their old switch placements; the chain interior
            // switch ends were consumed by joins
            branches.push(Branch {
                id: new_id,
                ends: [*track.dart_end(depart), *track.dart_end(last)],
            });
        }
        images.insert(new_id, img);
    }

    branches.sort_by_key(|b| b.id);
    let forward = branches
        .iter()
        .map(|b| images.remove(&b.id).expect("image for every new branch"))
        .collect();
    Ok((switches, branches, touched, CarryingImage { forward }))
}

fn build_transport_from_images(
    old: &TrainTrack,
    new_branches_sorted: &[Branch],
    carrying: &CarryingImage,
) -> MeasureTransport {
    let n_old = old.n_branches();
    let n_new = new_branches_sorted.len();
    let mut matrix = vec![vec![BigInt::zero(); n_new]; n_old];
    for j in 0..n_new {
        for &(old_b, _) in &carrying.forward[j] {
            let i = old.branch_index(old_b).unwrap();
            matrix[i][j] += 1;
        }
    }
    MeasureTransport {
        matrix,
        from_branches: new_branches_sorted.iter().map(|b| b.id).collect(),
        to_branches: old.branches().iter().map(|b| b.id).collect(),
    }
}

/// Splits a large branch. Returns the new track and the move record whose
/// transport maps measures on the new track to measures on the old one.
pub fn split(
    track: &TrainTrack,
    b: BranchId,
    choice: SplitChoice,
) -> Result<(TrainTrack, MoveRecord), MoveError> {
    let sq = square_darts(track, b)?;
    let (switches, branches, touched, carrying) = match choice {
        SplitChoice::Central => split_central_structures(track, &sq)?,
        _ => split_structures(track, &sq, choice)?,
    };
    let decorations =
        transport_decorations(track, track.surface(), &switches, &branches, &touched)?;
    let new = TrainTrack::from_parts(track.surface(), switches, branches.clone(), decorations)?;
    let report = new.validate();
    if !report.is_valid() {
        return Err(MoveError::ResultingInvalid(report));
    }
    let transport = build_transport_from_images(track, &branches, &carrying);
    if !transport.verify(track, &new) {
        return Err(MoveError::TransportBroken);
    }
    Ok((
        new,
        MoveRecord {
            kind: MoveKind::of_split(choice),
            branch: b,
            transport,
            carrying,
        },
    ))
}

// ---------------------------------------------------------------------------
// slide
// ---------------------------------------------------------------------------

/// Slides a mixed branch: the singleton-end switch passes the germ-mate at
/// the shared end, reassociating the two merges along the zigzag. The
/// measure polytope is carried isomorphically.
pub fn slide(track: &TrainTrack, b: BranchId) -> Result<(TrainTrack, MoveRecord), MoveError> {
    let bi = track
        .branch_index(b)
        .ok_or(TrackError::UnknownBranch(b))?;
    if track.classify_branch(b)? != BranchKind::Mixed {
        return Err(MoveError::NotMixed(b));
    }
    let ends = &track.branches()[bi].ends;
    let (ev, _ew) = if track.germ_size_at(&ends[0]) == 1 {
        (0usize, 1usize)
    } else {
        (1, 0)
    };
    let b_v = track.dart(bi, ev);
    let b_w = track.dart(bi, 1 - ev);
    let v_id = track.dart_end(b_v).switch;
    let w_id = track.dart_end(b_w).switch;
    let v_idx = track.switch_idx(v_id).unwrap();
    let w_idx = track.switch_idx(w_id).unwrap();
    let v_end = *track.dart_end(b_v);
    let w_end = *track.dart_end(b_w);
    if track.germ_darts(v_idx, v_end.germ.other()).len() != 2
        || track.germ_darts(w_idx, w_end.germ).len() != 2
        || v_id == w_id
    {
        return Err(MoveError::UnsupportedGermProfile(b));
    }
    let shared = track.germ_darts(w_idx, w_end.germ);
    let c = *shared.iter().find(|&&d| d != b_w).unwrap();

    // the side of b facing c determines which v-germ member stays
    let (q_inner, p_outer) = if track.sigma(b_w) == c {
        (track.sigma_inv(b_v), track.sigma(b_v))
    } else if track.sigma_inv(b_w) == c {
        (track.sigma(b_v), track.sigma_inv(b_v))
    } else {
        return Err(MoveError::UnsupportedGermProfile(b));
    };
    let _ = q_inner;

    // c moves to v taking p's vacated slot; p moves to w taking c's slot
    let p_slot_old = track.dart_end(p_outer).slot;
    let c_slot_old = track.dart_end(c).slot;
    let mut relocations: HashMap<Dart, BranchEnd> = HashMap::new();
    relocations.insert(
        c,
        BranchEnd {
            switch: v_id,
            germ: v_end.germ.other(),
            slot: p_slot_old,
        },
    );
    relocations.insert(
        p_outer,
        BranchEnd {
            switch: w_id,
            germ: w_end.germ,
            slot: c_slot_old,
        },
    );

    let switches: Vec<SwitchSpec> = track.switches().to_vec();
    let mut branches = rebuild_branches(track, &BTreeSet::new(), &relocations, Vec::new());
    branches.sort_by_key(|x| x.id);

    let touched: BTreeSet<BranchId> = [b].into_iter().collect();
    let decorations =
        transport_decorations(track, track.surface(), &switches, &branches, &touched)?;
    let new = TrainTrack::from_parts(track.surface(), switches, branches.clone(), decorations)?;
    let report = new.validate();
    if !report.is_valid() {
        return Err(MoveError::ResultingInvalid(report));
    }

    // carrying: p ends at w now, so its image continues across b; the slid
    // branch is absorbed into the stem and covers nothing
    let p_id = branch_of(track, p_outer);
    let p_ei = p_outer % 2;
    let cross_dir = if ev == 0 {
        Direction::AToB
    } else {
        Direction::BToA
    }; // v -> w along b
    let mut forward: Vec<Vec<(BranchId, Direction)>> = Vec::new();
    for nb in &branches {
        if nb.id == b {
            forward.push(vec![]);
            continue;
        }
        let mut img = vec![(nb.id, Direction::AToB)];
        if nb.id == p_id {
            if p_ei == 0 {
                // AToB departs end 0, crossing v -> w first
                img.insert(0, (b, cross_dir));
            } else {
                img.push((b, cross_dir));
            }
        }
        forward.push(img);
    }
    let carrying = CarryingImage { forward };
    let transport = build_transport_from_images(track, &branches, &carrying);
    if !transport.verify(track, &new) {
        return Err(MoveError::TransportBroken);
    }
    Ok((
        new,
        MoveRecord {
            kind: MoveKind::Slide,
            branch: b,
            transport,
            carrying,
        },
    ))
}

// ---------------------------------------------------------------------------
// split_toward and sequences
// ---------------------------------------------------------------------------

/// Outcome of driving splits toward a strictly positive target measure. The
/// pulled-back target on each intermediate track rides along.
#[derive(Clone, Debug)]
pub struct SplitTowardRun {
    pub sequence: NestedSequence,
    pub targets: Vec<TransverseMeasure>,
}

/// At each step the smallest large branch with a legal split is processed;
/// the heavier side of the square decides left against right, and equality
/// forces the central split. Every transport exactly carries the target.
pub fn split_toward(
    track: &TrainTrack,
    target: &TransverseMeasure,
    max_steps: usize,
) -> Result<SplitTowardRun, MoveError> {
    if !target.is_strictly_positive() {
        return Err(MoveError::TargetNotPositive);
    }
    let mut seq = NestedSequence::new(track.clone());
    let mut targets = vec![target.clone()];
    for _ in 0..max_steps {
        let cur = seq.last().clone();
        let tgt = targets.last().unwrap().clone();
        let mut stepped = false;
        for bh in cur.branches().to_vec() {
            if cur.classify_branch(bh.id).unwrap() != BranchKind::Large {
                continue;
            }
            let Ok(sq) = square_darts(&cur, bh.id) else {
                continue;
            };
            let wa = tgt.weight(cur.dart_branch(sq.x_a)).clone();
            let wya = tgt.weight(cur.dart_branch(sq.y_a)).clone();
            let choice = match wa.cmp(&wya) {
                std::cmp::Ordering::Greater => SplitChoice::Left,
                std::cmp::Ordering::Less => SplitChoice::Right,
                std::cmp::Ordering::Equal => SplitChoice::Central,
            };
            let Ok((new_track, record)) = split(&cur, bh.id, choice) else {
                continue;
            };
            let new_target = pull_back_target(&record.transport, &new_track, tgt.weights())?;
            debug_assert_eq!(record.transport.apply(new_target.weights()), tgt.weights());
            seq.tracks.push(new_track);
            seq.records.push(record);
            targets.push(new_target);
            stepped = true;
            break;
        }
        if !stepped {
            break;
        }
    }
    Ok(SplitTowardRun {
        sequence: seq,
        targets,
    })
}

fn pull_back_target(
    transport: &MeasureTransport,
    new_track: &TrainTrack,
    old_weights: &[Rat],
) -> Result<TransverseMeasure, MoveError> {
    let m: Vec<Vec<Rat>> = transport
        .matrix
        .iter()
        .map(|row| row.iter().map(|x| Rat::from_integer(x.clone())).collect())
        .collect();
    let sol = linalg::solve(&m, old_weights).ok_or(MoveError::TransportBroken)?;
    Ok(TransverseMeasure::new(new_track, sol)?)
}

/// Minimal R bounding consecutive track distances, where the distance
/// between tracks is the minimum over pairs of their vertex cycles of the
/// supplied vertex-cycle distance.
pub fn check_bounded_steps<F>(seq: &NestedSequence, dist: F) -> Option<u64>
where
    F: Fn(
        &TrainTrack,
        &crate::cycles::VertexCycle,
        &TrainTrack,
        &crate::cycles::VertexCycle,
    ) -> Option<u64>,
{
    let mut worst = 0u64;
    for i in 0..seq.records.len() {
        let a = &seq.tracks[i];
        let b = &seq.tracks[i + 1];
        let va = crate::cycles::enumerate_vertex_cycles(a).ok()?.cycles;
        let vb = crate::cycles::enumerate_vertex_cycles(b).ok()?.cycles;
        let mut best: Option<u64> = None;
        for x in &va {
            for y in &vb {
                let d = dist(a, x, b, y)?;
                best = Some(best.map_or(d, |cur| cur.min(d)));
            }
        }
        worst = worst.max(best?);
    }
    Some(worst)
}

/// Replays a JSON-lines move log against a starting track.
pub fn replay(track: &TrainTrack, log: &str) -> Result<NestedSequence, MoveError> {
    let mut seq = NestedSequence::new(track.clone());
    for line in log.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (kind, branch) = MoveRecord::parse_log_line(line)?;
        let cur = seq.last().clone();
        let (new_track, record) = match kind {
            MoveKind::SplitLeft => split(&cur, branch, SplitChoice::Left)?,
            MoveKind::SplitRight => split(&cur, branch, SplitChoice::Right)?,
            MoveKind::SplitCentral => split(&cur, branch, SplitChoice::Central)?,
            MoveKind::Slide => slide(&cur, branch)?,
        };
        seq.tracks.push(new_track);
        seq.records.push(record);
    }
    Ok(seq)
}

/// Independent retracing check: transporting a counting measure must agree
/// with the counting measure of the retraced path.
pub fn verify_carrying(
    old: &TrainTrack,
    new: &TrainTrack,
    record: &MoveRecord,
    path: &TrainPath,
) -> Result<bool, MoveError> {
    let new_measure = counting_measure(new, path)?;
    let transported = record.transport.apply(new_measure.weights());
    let retraced = record.carrying.retrace(new, path);
    if retraced.steps.is_empty() {
        return Ok(transported.iter().all(|x| x.is_zero()));
    }
    if !old.path_is_legal(&retraced) {
        return Ok(false);
    }
    let old_measure = counting_measure(old, &retraced)?;
    Ok(old_measure.weights() == transported.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::enumerate_vertex_cycles;
    use crate::fixtures;
    use crate::linalg::rat;

    fn s11_split(choice: SplitChoice) -> (TrainTrack, TrainTrack, MoveRecord) {
        let t = fixtures::s11_standard();
        let (new, rec) = split(&t, BranchId(0), choice).unwrap();
        (t, new, rec)
    }

    #[test]
    fn left_split_of_s11_is_valid_theta() {
        let (_, new, _) = s11_split(SplitChoice::Left);
        assert!(new.is_valid(), "{:?}", new.validate());
        assert_eq!(new.n_branches(), 3);
        assert_eq!(new.n_switches(), 2);
        let regions = new.regions();
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].cusp_count, 2);
        assert_eq!(regions[0].decoration.punctures, 1);
    }

    #[test]
    fn right_split_of_s11_is_valid_theta() {
        let (_, new, _) = s11_split(SplitChoice::Right);
        assert!(new.is_valid(), "{:?}", new.validate());
        let regions = new.regions();
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].cusp_count, 2);
    }

    #[test]
    fn left_split_vertex_measures_transport_to_mediant() {
        let (_, new, rec) = s11_split(SplitChoice::Left);
        let vcs = enumerate_vertex_cycles(&new).unwrap().cycles;
        assert_eq!(vcs.len(), 2);
        let mut images: Vec<Vec<Rat>> = vcs
            .iter()
            .map(|vc| rec.transport.apply(vc.measure.weights()))
            .collect();
        images.sort();
        // in (e1,e2,e3) coordinates with slope = mu(e3)/mu(e2):
        // kept 0/1 = (1,1,0) and mediant 1/1 = (2,1,1)
        assert_eq!(
            images,
            vec![vec![rat(1), rat(1), rat(0)], vec![rat(2), rat(1), rat(1)]]
        );
    }

    #[test]
    fn right_split_vertex_measures_transport_to_mediant() {
        let (_, new, rec) = s11_split(SplitChoice::Right);
        let vcs = enumerate_vertex_cycles(&new).unwrap().cycles;
        let mut images: Vec<Vec<Rat>> = vcs
            .iter()
            .map(|vc| rec.transport.apply(vc.measure.weights()))
            .collect();
        images.sort();
        // kept 1/0 = (1,0,1) and mediant 1/1 = (2,1,1)
        assert_eq!(
            images,
            vec![vec![rat(1), rat(0), rat(1)], vec![rat(2), rat(1), rat(1)]]
        );
    }

    #[test]
    fn central_split_of_s11_fails_validation() {
        let t = fixtures::s11_standard();
        match split(&t, BranchId(0), SplitChoice::Central) {
            Err(MoveError::ResultingInvalid(_)) | Err(MoveError::DecorationTransport) => {}
            other => panic!("central split must fail on the once-punctured torus: {other:?}"),
        }
    }

    #[test]
    fn split_transport_zero_is_zero() {
        let (_, new, rec) = s11_split(SplitChoice::Left);
        let zero = vec![rat(0); new.n_branches()];
        assert!(rec.transport.apply(&zero).iter().all(|x| x.is_zero()));
    }

    #[test]
    fn split_transport_length_nondecreasing() {
        let (_, new, rec) = s11_split(SplitChoice::Left);
        // column sums >= 1 give l(M mu') >= l(mu') for mu' >= 0
        for j in 0..new.n_branches() {
            let col: BigInt = rec.transport.matrix.iter().map(|r| r[j].clone()).sum();
            assert!(col >= BigInt::one());
        }
    }

    #[test]
    fn split_retracing_matches_transport() {
        for choice in [SplitChoice::Left, SplitChoice::Right] {
            let (old, new, rec) = s11_split(choice);
            for vc in enumerate_vertex_cycles(&new).unwrap().cycles {
                assert!(verify_carrying(&old, &new, &rec, &vc.path).unwrap());
            }
        }
    }

    #[test]
    fn split_toward_follows_continued_fraction() {
        // target slope 2/5, counting measure (7,5,2). The continued fraction
        // [0;2,2] has quotient sum 4; the last step would be the central
        // split onto the bare 2/5 curve, which cannot embed on the
        // once-punctured torus, so the run stops after 3 splits at the tie.
        let t = fixtures::s11_standard();
        let target = TransverseMeasure::new(&t, vec![rat(7), rat(5), rat(2)]).unwrap();
        let run = split_toward(&t, &target, 100).unwrap();
        assert_eq!(run.sequence.records.len(), 3);
        let last = run.targets.last().unwrap();
        assert!(last.weights().iter().all(|w| w.is_positive()));
        // the residual target is the tied square (2,1,1) up to ordering
        let mut w = last.weights().to_vec();
        w.sort();
        assert_eq!(w, vec![rat(1), rat(1), rat(2)]);
    }

    #[test]
    fn split_toward_rejects_non_positive_target() {
        let t = fixtures::s11_standard();
        let vc = enumerate_vertex_cycles(&t).unwrap().cycles[0].clone();
        assert!(matches!(
            split_toward(&t, &vc.measure, 10),
            Err(MoveError::TargetNotPositive)
        ));
    }

    #[test]
    fn split_toward_tie_stops_on_invalid_central() {
        // target 1/1 = (2,1,1): equality forces central, which cannot be
        // embedded on the punctured torus, so the run stops at once
        let t = fixtures::s11_standard();
        let target = TransverseMeasure::new(&t, vec![rat(2), rat(1), rat(1)]).unwrap();
        let run = split_toward(&t, &target, 10).unwrap();
        assert_eq!(run.sequence.records.len(), 0);
        assert_eq!(run.sequence.tracks.len(), 1);
    }

    #[test]
    fn composite_transport_is_product() {
        let t = fixtures::s11_standard();
        let target = TransverseMeasure::new(&t, vec![rat(7), rat(5), rat(2)]).unwrap();
        let run = split_toward(&t, &target, 100).unwrap();
        let comp = run.sequence.composite_transport();
        let final_target = run.targets.last().unwrap();
        assert_eq!(comp.apply(final_target.weights()), target.weights());
    }

    #[test]
    fn replay_reproduces_final_track() {
        let t = fixtures::s11_standard();
        let target = TransverseMeasure::new(&t, vec![rat(7), rat(5), rat(2)]).unwrap();
        let run = split_toward(&t, &target, 100).unwrap();
        let log = run.sequence.to_log();
        let replayed = replay(&t, &log).unwrap();
        assert_eq!(
            replayed.last().to_json(),
            run.sequence.last().to_json(),
            "replay determinism is byte-exact"
        );
    }
}
