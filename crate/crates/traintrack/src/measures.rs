//! Switch-condition linear algebra: incidence matrices, transverse measures,
//! exact-LP recurrence detection, and the non-recurrence deviation bound.

use std::collections::{BTreeSet, VecDeque};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{map_collect, Parallelism};
use crate::linalg::{self, Rat};
use crate::simplex::{maximize, LpResult};
use crate::track::{BranchId, Direction, GermClass, SwitchId, TrackError, TrainPath, TrainTrack};

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("weight vector has length {got}, track has {expected} branches")]
    Length { got: usize, expected: usize },
    #[error("negative weight on branch {0}")]
    Negative(BranchId),
    #[error("switch condition violated at {0}")]
    SwitchCondition(SwitchId),
    #[error("unknown switch {0}")]
    UnknownSwitch(SwitchId),
    #[error("track error: {0}")]
    Track(#[from] TrackError),
    #[error("path is not germ-legal on this track")]
    IllegalPath,
    #[error("path is not closed")]
    OpenPath,
    #[error("gap check requires a non-recurrent track")]
    Recurrent,
    #[error("gap check requires strictly positive weights")]
    NotPositive,
    #[error("malformed measure document: {0}")]
    Syntax(String),
}

/// Integer matrix of switch conditions: +1 per incoming incidence, -1 per
/// outgoing, so a branch meeting one switch with both ends contributes
/// +-2 or 0 to that row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IncidenceMatrix {
    pub rows: Vec<Vec<BigInt>>,
}

impl IncidenceMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn to_rational(&self) -> Vec<Vec<Rat>> {
        linalg::int_mat_to_rat(&self.rows)
    }

    pub fn apply(&self, u: &[Rat]) -> Vec<Rat> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .zip(u)
                    .fold(Rat::zero(), |acc, (a, b)| acc + Rat::from_integer(a.clone()) * b)
            })
            .collect()
    }
}

/// Rows indexed by switches in id order, columns by branches in id order.
pub fn incidence_matrix(track: &TrainTrack) -> IncidenceMatrix {
    let n = track.n_branches();
    let mut rows = vec![vec![BigInt::zero(); n]; track.n_switches()];
    for (bi, b) in track.branches().iter().enumerate() {
        for end in &b.ends {
            let si = track.switch_idx(end.switch).unwrap();
            match end.germ {
                GermClass::In => rows[si][bi] += 1,
                GermClass::Out => rows[si][bi] -= 1,
            }
        }
    }
    IncidenceMatrix { rows }
}

/// Non-negative weight vector satisfying the switch conditions, indexed by
/// branch id order. Raw weight vectors that only need non-negativity are
/// plain `Vec<Rat>` throughout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransverseMeasure {
    weights: Vec<Rat>,
}

impl TransverseMeasure {
    pub fn new(track: &TrainTrack, weights: Vec<Rat>) -> Result<Self, MeasureError> {
        if weights.len() != track.n_branches() {
            return Err(MeasureError::Length {
                got: weights.len(),
                expected: track.n_branches(),
            });
        }
        for (bi, w) in weights.iter().enumerate() {
            if w.is_negative() {
                return Err(MeasureError::Negative(track.branches()[bi].id));
            }
        }
        let l = incidence_matrix(track);
        for (si, v) in l.apply(&weights).iter().enumerate() {
            if !v.is_zero() {
                return Err(MeasureError::SwitchCondition(track.switches()[si].id));
            }
        }
        Ok(TransverseMeasure { weights })
    }

    pub fn weights(&self) -> &[Rat] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> &Rat {
        &self.weights[i]
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.weights.iter().all(|w| w.is_positive())
    }

    pub fn support(&self) -> Vec<usize> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| !w.is_zero())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|w| w.is_zero())
    }

    /// Combinatorial length: the total weight over all branches.
    pub fn combinatorial_length(&self) -> Rat {
        self.weights.iter().fold(Rat::zero(), |acc, w| acc + w)
    }

    /// Serializes as a JSON array of `"num/den"` strings in branch id order.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&weights_to_strings(&self.weights)).unwrap()
    }

    pub fn parse(track: &TrainTrack, text: &str) -> Result<Self, MeasureError> {
        let raw: Vec<String> =
            serde_json::from_str(text).map_err(|e| MeasureError::Syntax(e.to_string()))?;
        let weights = strings_to_weights(&raw)?;
        TransverseMeasure::new(track, weights)
    }
}

pub fn weights_to_strings(weights: &[Rat]) -> Vec<String> {
    weights
        .iter()
        .map(|w| format!("{}/{}", w.numer(), w.denom()))
        .collect()
}

pub fn strings_to_weights(raw: &[String]) -> Result<Vec<Rat>, MeasureError> {
    raw.iter()
        .map(|s| {
            let (n, d) = s.split_once('/').unwrap_or((s.as_str(), "1"));
            let n: BigInt = n
                .trim()
                .parse()
                .map_err(|_| MeasureError::Syntax(format!("bad numerator in {s:?}")))?;
            let d: BigInt = d
                .trim()
                .parse()
                .map_err(|_| MeasureError::Syntax(format!("bad denominator in {s:?}")))?;
            if d.is_zero() {
                return Err(MeasureError::Syntax(format!("zero denominator in {s:?}")));
            }
            Ok(BigRational::new(n, d))
        })
        .collect()
}

/// |v_s . u| for the row of the switch `s`.
pub fn deviation(track: &TrainTrack, u: &[Rat], s: SwitchId) -> Result<Rat, MeasureError> {
    let si = track
        .switch_idx(s)
        .ok_or(MeasureError::UnknownSwitch(s))?;
    if u.len() != track.n_branches() {
        return Err(MeasureError::Length {
            got: u.len(),
            expected: track.n_branches(),
        });
    }
    let l = incidence_matrix(track);
    Ok(l.apply(u)[si].abs())
}

/// Per-branch exact LP: maximize mu(b) over the measure polytope normalized
/// by total weight one. Optimum zero (or an infeasible normalization) means
/// the branch is invisible.
fn branch_optimum(track: &TrainTrack, l: &IncidenceMatrix, bi: usize) -> Option<Vec<Rat>> {
    let n = track.n_branches();
    let mut constraints = l.to_rational();
    let mut rhs = vec![Rat::zero(); constraints.len()];
    constraints.push(vec![Rat::from_integer(BigInt::from(1)); n]);
    rhs.push(Rat::from_integer(BigInt::from(1)));
    let mut objective = vec![Rat::zero(); n];
    objective[bi] = Rat::from_integer(BigInt::from(1));
    match maximize(&objective, &constraints, &rhs) {
        LpResult::Optimal { value, point } if value.is_positive() => Some(point),
        LpResult::Optimal { .. } | LpResult::Infeasible => None,
        LpResult::Unbounded => unreachable!("normalized polytope is bounded"),
    }
}

/// Branches assigned zero by every transverse measure.
pub fn invisible_branches(track: &TrainTrack, par: Parallelism) -> BTreeSet<BranchId> {
    let l = incidence_matrix(track);
    let results = map_collect(par, (0..track.n_branches()).collect(), |bi| {
        (bi, branch_optimum(track, &l, bi).is_none())
    });
    results
        .into_iter()
        .filter(|&(_, invisible)| invisible)
        .map(|(bi, _)| track.branches()[bi].id)
        .collect()
}

#[derive(Clone, Debug)]
pub struct RecurrenceCertificate {
    pub recurrent: bool,
    pub invisible: BTreeSet<BranchId>,
    /// Strictly positive witness measure when recurrent, rescaled to the
    /// primitive integer vector.
    pub witness: Option<TransverseMeasure>,
}

/// A track is recurrent iff it has no invisible branch; the witness is the
/// sum of the per-branch LP optima, which is deterministic.
pub fn is_recurrent(track: &TrainTrack, par: Parallelism) -> RecurrenceCertificate {
    let l = incidence_matrix(track);
    let n = track.n_branches();
    let optima = map_collect(par, (0..n).collect(), |bi| branch_optimum(track, &l, bi));
    let mut invisible = BTreeSet::new();
    let mut sum = vec![Rat::zero(); n];
    let mut all_visible = true;
    for (bi, opt) in optima.iter().enumerate() {
        match opt {
            Some(point) => {
                for (s, x) in sum.iter_mut().zip(point) {
                    *s = &*s + x;
                }
            }
            None => {
                all_visible = false;
                invisible.insert(track.branches()[bi].id);
            }
        }
    }
    let witness = if all_visible && n > 0 {
        let prim = linalg::primitive_integer_vector(&sum);
        let weights: Vec<Rat> = prim.into_iter().map(Rat::from_integer).collect();
        let m = TransverseMeasure::new(track, weights).expect("witness satisfies conditions");
        debug_assert!(m.is_strictly_positive());
        Some(m)
    } else {
        None
    };
    RecurrenceCertificate {
        recurrent: all_visible && n > 0,
        invisible,
        witness,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapCheck {
    pub holds: bool,
    pub lhs: String,
    pub rhs: String,
}

/// Theorem-style deviation bound for non-recurrent tracks:
/// sup-norm of `L(u)` against `u_min / (12g + 4p - 12)`. The returned values
/// are exact rationals; the boolean is a zero-tolerance comparison.
pub fn nonrecurrence_gap_check(
    track: &TrainTrack,
    u: &[Rat],
    par: Parallelism,
) -> Result<(bool, Rat, Rat), MeasureError> {
    if is_recurrent(track, par).recurrent {
        return Err(MeasureError::Recurrent);
    }
    if u.len() != track.n_branches() {
        return Err(MeasureError::Length {
            got: u.len(),
            expected: track.n_branches(),
        });
    }
    if !u.iter().all(|x| x.is_positive()) {
        return Err(MeasureError::NotPositive);
    }
    let l = incidence_matrix(track);
    let lhs = linalg::sup_norm(&l.apply(u));
    let u_min = u.iter().min().unwrap().clone();
    let denom = Rat::from_integer(BigInt::from(track.surface().max_switches()));
    let rhs = u_min / denom;
    Ok((lhs >= rhs, lhs, rhs))
}

/// Counting measure of a proper closed train path.
pub fn counting_measure(
    track: &TrainTrack,
    path: &TrainPath,
) -> Result<TransverseMeasure, MeasureError> {
    if !path.closed {
        return Err(MeasureError::OpenPath);
    }
    if !track.path_is_legal(path) {
        return Err(MeasureError::IllegalPath);
    }
    let mut weights = vec![Rat::zero(); track.n_branches()];
    for &(b, _) in &path.steps {
        let bi = track.branch_index(b).ok_or(TrackError::UnknownBranch(b))?;
        weights[bi] = &weights[bi] + Rat::from_integer(BigInt::from(1));
    }
    TransverseMeasure::new(track, weights)
}

/// Some proper closed train path traversing `b`, or `None`. Breadth-first
/// search over directed `(branch, direction)` states, each visited at most
/// once per search.
pub fn closed_path_through(
    track: &TrainTrack,
    b: BranchId,
) -> Result<Option<TrainPath>, MeasureError> {
    let bi = track.branch_index(b).ok_or(TrackError::UnknownBranch(b))?;
    for dir in [Direction::AToB, Direction::BToA] {
        let start = (bi, dir);
        // BFS from the successors of `start` back to `start`
        let mut parent: std::collections::HashMap<(usize, Direction), (usize, Direction)> =
            std::collections::HashMap::new();
        let mut queue = VecDeque::new();
        for succ in track.successors(bi, dir) {
            if !parent.contains_key(&succ) {
                parent.insert(succ, start);
                queue.push_back(succ);
            }
        }
        let mut found = false;
        while let Some(state) = queue.pop_front() {
            if state == start {
                found = true;
                break;
            }
            for succ in track.successors(state.0, state.1) {
                if !parent.contains_key(&succ) {
                    parent.insert(succ, state);
                    queue.push_back(succ);
                }
            }
        }
        if found {
            // reconstruct the cycle ending at start
            let mut rev = vec![start];
            let mut cur = parent[&start];
            while cur != start {
                rev.push(cur);
                cur = parent[&cur];
            }
            rev.push(start);
            rev.pop(); // the seed occurrence; the cycle starts at `start`
            rev.reverse();
            let steps = rev
                .into_iter()
                .map(|(i, d)| (track.branches()[i].id, d))
                .collect();
            let path = TrainPath::closed(steps);
            debug_assert!(track.path_is_legal(&path));
            return Ok(Some(path));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::rat;

    #[test]
    fn circle_incidence_is_zero_row() {
        let t = fixtures::circle();
        let l = incidence_matrix(&t);
        assert_eq!(l.rows, vec![vec![BigInt::zero()]]);
    }

    #[test]
    fn s11_incidence_kernel_dimension_two() {
        let t = fixtures::s11_standard();
        let l = incidence_matrix(&t);
        assert_eq!(l.rows.len(), 2);
        let rk = linalg::rank(&l.to_rational());
        assert_eq!(rk, 1, "two rows are negatives of each other");
        assert_eq!(t.n_branches() - rk, 2);
    }

    #[test]
    fn both_ends_incoming_gives_two_entry() {
        // loop with both ends incoming at one switch plus a feeder circle
        use crate::fixtures::{branch, end, switch};
        use crate::track::GermClass::{In, Out};
        let switches = vec![switch(0, 3, 1)];
        let branches = vec![
            branch(0, end(0, In, 0), end(0, Out, 0)),
            branch(1, end(0, In, 1), end(0, In, 2)),
        ];
        let t = crate::track::TrainTrack::from_parts(
            crate::surface::Surface::new(2, 0),
            switches,
            branches,
            Default::default(),
        )
        .unwrap();
        let l = incidence_matrix(&t);
        assert_eq!(l.rows[0][1], BigInt::from(2));
    }

    #[test]
    fn deviation_of_measure_is_zero() {
        let t = fixtures::s11_standard();
        let m = TransverseMeasure::new(&t, vec![rat(2), rat(1), rat(1)]).unwrap();
        for s in t.switches() {
            assert_eq!(deviation(&t, m.weights(), s.id).unwrap(), rat(0));
        }
    }

    #[test]
    fn deviation_all_ones_matches_row_sums() {
        let t = fixtures::s11_standard();
        let l = incidence_matrix(&t);
        let u = vec![rat(1); 3];
        for (si, s) in t.switches().iter().enumerate() {
            let dot: BigInt = l.rows[si].iter().sum();
            let expect = Rat::from_integer(dot).abs();
            assert_eq!(deviation(&t, &u, s.id).unwrap(), expect);
        }
    }

    #[test]
    fn circle_recurrent_with_unit_witness() {
        let t = fixtures::circle();
        let cert = is_recurrent(&t, Parallelism::Sequential);
        assert!(cert.recurrent);
        assert_eq!(cert.witness.unwrap().weights(), &[rat(1)]);
    }

    #[test]
    fn s11_recurrent_with_positive_witness() {
        let t = fixtures::s11_standard();
        let cert = is_recurrent(&t, Parallelism::Sequential);
        assert!(cert.recurrent);
        let w = cert.witness.unwrap();
        assert!(w.is_strictly_positive());
    }

    #[test]
    fn barbell_invisible_connector() {
        let t = fixtures::nonrecurrent_barbell();
        let inv = invisible_branches(&t, Parallelism::Sequential);
        assert_eq!(inv, [BranchId(1)].into_iter().collect());
        let cert = is_recurrent(&t, Parallelism::Sequential);
        assert!(!cert.recurrent);
    }

    #[test]
    fn flipped_theta_invisible_third_branch() {
        let t = fixtures::nonrecurrent_flipped_theta();
        let inv = invisible_branches(&t, Parallelism::Sequential);
        assert_eq!(inv, [BranchId(2)].into_iter().collect());
    }

    #[test]
    fn gap_check_on_barbell() {
        let t = fixtures::nonrecurrent_barbell();
        let u = vec![rat(1); t.n_branches()];
        let (ok, lhs, rhs) = nonrecurrence_gap_check(&t, &u, Parallelism::Sequential).unwrap();
        assert!(ok, "lhs {lhs} >= rhs {rhs}");
        // homogeneity: scaling u by 7 scales both sides by 7
        let u7 = vec![rat(7); t.n_branches()];
        let (ok7, lhs7, rhs7) = nonrecurrence_gap_check(&t, &u7, Parallelism::Sequential).unwrap();
        assert!(ok7);
        assert_eq!(lhs7, lhs * rat(7));
        assert_eq!(rhs7, rhs * rat(7));
    }

    #[test]
    fn gap_check_rejects_recurrent() {
        let t = fixtures::circle();
        let u = vec![rat(5)];
        assert!(matches!(
            nonrecurrence_gap_check(&t, &u, Parallelism::Sequential),
            Err(MeasureError::Recurrent)
        ));
    }

    #[test]
    fn counting_measure_circle() {
        let t = fixtures::circle();
        let once = TrainPath::closed(vec![(BranchId(0), Direction::AToB)]);
        let m = counting_measure(&t, &once).unwrap();
        assert_eq!(m.weights(), &[rat(1)]);
        let twice = TrainPath::closed(vec![
            (BranchId(0), Direction::AToB),
            (BranchId(0), Direction::AToB),
        ]);
        let m2 = counting_measure(&t, &twice).unwrap();
        assert_eq!(m2.weights(), &[rat(2)]);
    }

    #[test]
    fn counting_measure_rejects_illegal() {
        let t = fixtures::s11_standard();
        // e1 then e1 again: re-enters through the same germ
        let bad = TrainPath::closed(vec![
            (BranchId(0), Direction::AToB),
            (BranchId(0), Direction::AToB),
        ]);
        assert!(matches!(
            counting_measure(&t, &bad),
            Err(MeasureError::IllegalPath)
        ));
        let open = TrainPath {
            steps: vec![(BranchId(0), Direction::AToB)],
            closed: false,
        };
        assert!(matches!(
            counting_measure(&t, &open),
            Err(MeasureError::OpenPath)
        ));
    }

    #[test]
    fn closed_path_through_examples() {
        let c = fixtures::circle();
        let p = closed_path_through(&c, BranchId(0)).unwrap().unwrap();
        assert_eq!(p.steps.len(), 1);

        let barbell = fixtures::nonrecurrent_barbell();
        assert!(closed_path_through(&barbell, BranchId(1)).unwrap().is_none());
        assert!(closed_path_through(&barbell, BranchId(0)).unwrap().is_some());
        assert!(closed_path_through(&barbell, BranchId(2)).unwrap().is_some());
    }

    #[test]
    fn measure_serialization_round_trip() {
        let t = fixtures::s11_standard();
        let m = TransverseMeasure::new(&t, vec![rat(2), rat(1), rat(1)]).unwrap();
        let s = m.to_json();
        let m2 = TransverseMeasure::parse(&t, &s).unwrap();
        assert_eq!(m, m2);
    }
}
