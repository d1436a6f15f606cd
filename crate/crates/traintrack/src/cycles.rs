//! Vertex cycles: enumeration by the closed-path criterion, extreme-point
//! tests, combinatorial length, and convex decompositions.
//!
//! A vertex cycle is an extreme point of the measure polytope; its carried
//! curve traverses every branch at most twice and never twice in the same
//! direction. In the directed state graph over `(branch, direction)` pairs
//! those paths are exactly the simple cycles, which keeps the enumeration
//! finite and the 3^|B| count bound automatic.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, Rat};
use crate::measures::{incidence_matrix, MeasureError, TransverseMeasure};
use crate::track::{BranchId, Direction, TrainPath, TrainTrack};

pub const ENUMERATION_BRANCH_GUARD: usize = 20;

#[derive(Debug, Error)]
pub enum CycleError {
    #[error("track has {0} branches, enumeration is guarded at {ENUMERATION_BRANCH_GUARD}")]
    SizeGuard(usize),
    #[error("measure error: {0}")]
    Measure(#[from] MeasureError),
    #[error("no decomposition exists; enumeration and polytope are inconsistent")]
    Infeasible,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexCycle {
    pub path: TrainPath,
    pub measure: TransverseMeasure,
}

impl VertexCycle {
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc {
            path: Vec<(BranchId, Direction)>,
            measure: Vec<String>,
        }
        let doc = Doc {
            path: self.path.steps.clone(),
            measure: crate::measures::weights_to_strings(self.measure.weights()),
        };
        serde_json::to_string(&doc).unwrap()
    }
}

/// Enumeration result; vertex cycles of non-recurrent tracks are still
/// meaningful, so the recurrence status rides along as a flag.
#[derive(Clone, Debug)]
pub struct VertexCycles {
    pub cycles: Vec<VertexCycle>,
    pub recurrent: bool,
}

type State = usize; // 2 * branch_index + (0 for AToB, 1 for BToA)

fn state_dir(s: State) -> Direction {
    if s % 2 == 0 {
        Direction::AToB
    } else {
        Direction::BToA
    }
}

fn successor_states(track: &TrainTrack, s: State) -> Vec<State> {
    let mut succ: Vec<State> = track
        .successors(s / 2, state_dir(s))
        .into_iter()
        .map(|(bi, d)| 2 * bi + usize::from(d == Direction::BToA))
        .collect();
    succ.sort_unstable();
    succ
}

/// Canonical form of a cyclic state sequence up to rotation and reversal.
fn canonical_cycle(track: &TrainTrack, cycle: &[State]) -> Vec<State> {
    let rot_min = |seq: &[State]| -> Vec<State> {
        let n = seq.len();
        (0..n)
            .map(|r| {
                let mut v = Vec::with_capacity(n);
                v.extend_from_slice(&seq[r..]);
                v.extend_from_slice(&seq[..r]);
                v
            })
            .min()
            .unwrap()
    };
    let fwd = rot_min(cycle);
    let rev: Vec<State> = cycle.iter().rev().map(|&s| s ^ 1).collect();
    let rev = rot_min(&rev);
    let _ = track;
    fwd.min(rev)
}

/// All simple directed cycles of the germ-legal transition graph,
/// deduplicated up to rotation and reversal. Deterministic: depth-first from
/// the smallest state with lexicographic successor order.
fn simple_cycles(track: &TrainTrack) -> Vec<Vec<State>> {
    let n_states = 2 * track.n_branches();
    let mut out: Vec<Vec<State>> = Vec::new();
    let mut seen: std::collections::HashSet<Vec<State>> = std::collections::HashSet::new();
    for root in 0..n_states {
        // cycles whose least state is `root`
        let mut stack: Vec<State> = vec![root];
        let mut on_path = vec![false; n_states];
        on_path[root] = true;
        // iterative DFS with explicit successor cursors
        let mut cursors: Vec<(State, Vec<State>, usize)> =
            vec![(root, successor_states(track, root), 0)];
        while let Some((state, succ, idx)) = cursors.last_mut() {
            if *idx >= succ.len() {
                on_path[*state] = false;
                stack.pop();
                cursors.pop();
                continue;
            }
            let next = succ[*idx];
            *idx += 1;
            if next == root {
                let canon = canonical_cycle(track, &stack);
                if seen.insert(canon.clone()) {
                    out.push(canon);
                }
                continue;
            }
            if next > root && !on_path[next] {
                on_path[next] = true;
                stack.push(next);
                let s = successor_states(track, next);
                cursors.push((next, s, 0));
            }
        }
    }
    out.sort();
    out
}

fn cycle_to_path(track: &TrainTrack, cycle: &[State]) -> TrainPath {
    TrainPath::closed(
        cycle
            .iter()
            .map(|&s| (track.branches()[s / 2].id, state_dir(s)))
            .collect(),
    )
}

/// True iff the solution space of the switch conditions together with
/// `x_b = 0` off the support of `mu` is one-dimensional.
pub fn is_extreme(track: &TrainTrack, mu: &TransverseMeasure) -> bool {
    if mu.is_zero() {
        return false;
    }
    let n = track.n_branches();
    let support = mu.support();
    let mut rows = incidence_matrix(track).to_rational();
    for b in 0..n {
        if !support.contains(&b) {
            let mut row = vec![Rat::zero(); n];
            row[b] = Rat::one();
            rows.push(row);
        }
    }
    n - linalg::rank(&rows) == 1
}

/// Complete duplicate-free list of vertex cycles. Paths are identified up to
/// rotation and reversal; distinct paths with the same counting measure
/// count once, the lexicographically least path representing the class.
pub fn enumerate_vertex_cycles(track: &TrainTrack) -> Result<VertexCycles, CycleError> {
    if track.n_branches() > ENUMERATION_BRANCH_GUARD {
        return Err(CycleError::SizeGuard(track.n_branches()));
    }
    let recurrent =
        crate::measures::is_recurrent(track, crate::exec::Parallelism::Sequential).recurrent;
    let mut by_measure: Vec<(Vec<Rat>, TrainPath)> = Vec::new();
    for cycle in simple_cycles(track) {
        let path = cycle_to_path(track, &cycle);
        debug_assert!(track.path_is_legal(&path));
        let measure = crate::measures::counting_measure(track, &path)?;
        if !is_extreme(track, &measure) {
            continue;
        }
        match by_measure.iter_mut().find(|(w, _)| w == measure.weights()) {
            Some(_) => {} // same projective class, first (least) path kept
            None => by_measure.push((measure.weights().to_vec(), path)),
        }
    }
    by_measure.sort_by(|a, b| a.0.cmp(&b.0));
    let cycles = by_measure
        .into_iter()
        .map(|(w, path)| {
            let measure = TransverseMeasure::new(track, w).expect("already validated");
            VertexCycle { path, measure }
        })
        .collect();
    Ok(VertexCycles { cycles, recurrent })
}

/// All counting measures of simple germ-legal closed paths, extreme or not.
/// Used by the Hamenstaedt equivalence tests.
pub fn closed_path_measures(track: &TrainTrack) -> Result<Vec<Vec<BigInt>>, CycleError> {
    if track.n_branches() > ENUMERATION_BRANCH_GUARD {
        return Err(CycleError::SizeGuard(track.n_branches()));
    }
    let mut out: Vec<Vec<BigInt>> = Vec::new();
    for cycle in simple_cycles(track) {
        let path = cycle_to_path(track, &cycle);
        let measure = crate::measures::counting_measure(track, &path)?;
        let ints: Vec<BigInt> = measure.weights().iter().map(|w| w.numer().clone()).collect();
        if !out.contains(&ints) {
            out.push(ints);
        }
    }
    out.sort();
    Ok(out)
}

/// Exact convex decomposition of a transverse measure over the vertex
/// cycles, by sequential support elimination: each step subtracts the
/// largest feasible multiple of a cycle supported inside the residual,
/// killing at least one branch.
pub fn vertex_decomposition(
    track: &TrainTrack,
    mu: &TransverseMeasure,
) -> Result<Vec<(VertexCycle, Rat)>, CycleError> {
    let cycles = enumerate_vertex_cycles(track)?.cycles;
    let mut residual: Vec<Rat> = mu.weights().to_vec();
    let mut out: Vec<(VertexCycle, Rat)> = Vec::new();
    loop {
        if residual.iter().all(|x| x.is_zero()) {
            return Ok(out);
        }
        let supp: Vec<bool> = residual.iter().map(|x| !x.is_zero()).collect();
        let Some(vc) = cycles.iter().find(|vc| {
            vc.measure
                .weights()
                .iter()
                .enumerate()
                .all(|(i, w)| w.is_zero() || supp[i])
        }) else {
            return Err(CycleError::Infeasible);
        };
        let t = vc
            .measure
            .weights()
            .iter()
            .zip(&residual)
            .filter(|(w, _)| !w.is_zero())
            .map(|(w, r)| r / w)
            .min()
            .expect("vertex cycle has non-empty support");
        debug_assert!(t.is_positive());
        for (r, w) in residual.iter_mut().zip(vc.measure.weights()) {
            let sub = w * &t;
            *r = &*r - sub;
        }
        out.push((vc.clone(), t));
    }
}

/// Re-sums a decomposition; exact identity with the input is the contract.
pub fn resum(track: &TrainTrack, parts: &[(VertexCycle, Rat)]) -> TransverseMeasure {
    let mut total = vec![Rat::zero(); track.n_branches()];
    for (vc, a) in parts {
        for (t, w) in total.iter_mut().zip(vc.measure.weights()) {
            let add = w * a;
            *t = &*t + add;
        }
    }
    TransverseMeasure::new(track, total).expect("sum of measures is a measure")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::rat;
    use crate::measures::TransverseMeasure;

    #[test]
    fn circle_has_one_cycle() {
        let t = fixtures::circle();
        let vcs = enumerate_vertex_cycles(&t).unwrap();
        assert_eq!(vcs.cycles.len(), 1);
        assert_eq!(vcs.cycles[0].measure.weights(), &[rat(1)]);
        assert!(vcs.recurrent);
    }

    #[test]
    fn s11_has_two_cycles_matching_polytope_oracle() {
        let t = fixtures::s11_standard();
        let vcs = enumerate_vertex_cycles(&t).unwrap();
        let measures: Vec<Vec<BigInt>> = vcs
            .cycles
            .iter()
            .map(|vc| vc.measure.weights().iter().map(|w| w.numer().clone()).collect())
            .collect();
        let oracle = crate::oracles::polytope_vertex_measures(&t);
        assert_eq!(measures, oracle);
        assert_eq!(vcs.cycles.len(), 2);
    }

    #[test]
    fn every_enumerated_cycle_is_extreme_and_short() {
        for t in [
            fixtures::circle(),
            fixtures::s11_standard(),
            fixtures::nonrecurrent_barbell(),
            fixtures::nonrecurrent_flipped_theta(),
        ] {
            let bound = rat(2 * t.surface().max_branches());
            let vcs = enumerate_vertex_cycles(&t).unwrap();
            for vc in &vcs.cycles {
                assert!(is_extreme(&t, &vc.measure));
                assert!(vc.measure.combinatorial_length() <= bound);
                // at most twice per branch, never twice in one direction
                let mut counts = std::collections::HashMap::new();
                for &(b, d) in &vc.path.steps {
                    *counts.entry((b, d)).or_insert(0usize) += 1;
                }
                for (&(b, _), &c) in &counts {
                    assert!(c <= 1, "branch {b} traversed twice in one direction");
                }
            }
        }
    }

    #[test]
    fn count_bound_three_to_the_b() {
        for t in [fixtures::circle(), fixtures::s11_standard()] {
            let vcs = enumerate_vertex_cycles(&t).unwrap();
            assert!(vcs.cycles.len() as f64 <= 3f64.powi(t.n_branches() as i32));
        }
    }

    #[test]
    fn convex_combination_is_not_extreme() {
        let t = fixtures::s11_standard();
        let m = TransverseMeasure::new(&t, vec![rat(2), rat(1), rat(1)]).unwrap();
        assert!(!is_extreme(&t, &m), "sum of the two vertex cycles");
        let zero = TransverseMeasure::new(&t, vec![rat(0); 3]).unwrap();
        assert!(!is_extreme(&t, &zero));
    }

    #[test]
    fn decomposition_recovers_coefficients() {
        let t = fixtures::s11_standard();
        // alpha1 + 2 alpha2 with alpha1 = (1,1,0), alpha2 = (1,0,1)
        let m = TransverseMeasure::new(&t, vec![rat(3), rat(1), rat(2)]).unwrap();
        let parts = vertex_decomposition(&t, &m).unwrap();
        assert_eq!(resum(&t, &parts), m);
        let mut coeffs: Vec<Rat> = parts.iter().map(|(_, a)| a.clone()).collect();
        coeffs.sort();
        assert_eq!(coeffs, vec![rat(1), rat(2)]);
    }

    #[test]
    fn decomposition_of_vertex_cycle_is_itself() {
        let t = fixtures::s11_standard();
        let vcs = enumerate_vertex_cycles(&t).unwrap();
        for vc in &vcs.cycles {
            let parts = vertex_decomposition(&t, &vc.measure).unwrap();
            assert_eq!(parts.len(), 1);
            assert_eq!(parts[0].1, rat(1));
        }
    }

    #[test]
    fn zero_measure_decomposes_empty() {
        let t = fixtures::s11_standard();
        let zero = TransverseMeasure::new(&t, vec![rat(0); 3]).unwrap();
        assert!(vertex_decomposition(&t, &zero).unwrap().is_empty());
    }

    use num_bigint::BigInt;
}
