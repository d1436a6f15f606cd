//! Independent reference implementations used by the test suite.
//!
//! Each oracle decides a question the production code also answers, by a
//! different route: Fourier-Motzkin elimination against the per-branch
//! simplex, and support-subset polytope vertex enumeration against the
//! closed-path criterion. They share only the rational arithmetic.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::linalg::{self, Rat};
use crate::measures::{incidence_matrix, IncidenceMatrix};
use crate::track::{BranchId, TrainTrack};

/// Feasibility of `{ L x = 0, x >= 0, x_target = 1 }` by exact
/// Fourier-Motzkin elimination. Equalities are removed by substitution
/// first; the remaining inequality system is eliminated one variable at a
/// time. Exponential, intended for n <= 12.
pub fn fm_branch_positive_feasible(track: &TrainTrack, target: usize) -> bool {
    let l = incidence_matrix(track);
    let n = track.n_branches();
    // equalities: L x = 0 and x_target = 1
    let mut eqs: Vec<Vec<Rat>> = l
        .to_rational()
        .into_iter()
        .map(|mut row| {
            row.push(Rat::zero()); // constant column
            row
        })
        .collect();
    let mut target_row = vec![Rat::zero(); n + 1];
    target_row[target] = Rat::one();
    target_row[n] = -Rat::one(); // x_target - 1 = 0
    eqs.push(target_row);

    // substitute equalities: rref over variable columns only
    let pivots = rref_vars(&mut eqs, n);
    // inconsistent equality: 0 = c with c != 0
    for row in &eqs {
        if row[..n].iter().all(|x| x.is_zero()) && !row[n].is_zero() {
            return false;
        }
    }

    // inequalities x_j >= 0 expressed over free variables:
    // for pivot var x_p (pivot row r): x_p = -row[n] - sum_{free f} row[f] x_f
    let free: Vec<usize> = (0..n)
        .filter(|c| !pivots.iter().any(|&(_, pc)| pc == *c))
        .collect();
    let mut ineqs: Vec<Vec<Rat>> = Vec::new(); // coeffs over free vars + constant: a.y + c >= 0
    for j in 0..n {
        let mut row = vec![Rat::zero(); free.len() + 1];
        if let Some(&(r, _)) = pivots.iter().find(|&&(_, pc)| pc == j) {
            for (fi, &f) in free.iter().enumerate() {
                row[fi] = -eqs[r][f].clone();
            }
            row[free.len()] = -eqs[r][n].clone();
        } else {
            let fi = free.iter().position(|&f| f == j).unwrap();
            row[fi] = Rat::one();
        }
        ineqs.push(row);
    }

    // eliminate free variables one at a time
    let mut width = free.len();
    while width > 0 {
        let k = width - 1;
        let mut next: Vec<Vec<Rat>> = Vec::new();
        let mut lowers: Vec<Vec<Rat>> = Vec::new(); // coefficient on y_k > 0
        let mut uppers: Vec<Vec<Rat>> = Vec::new(); // coefficient on y_k < 0
        for row in ineqs {
            if row[k].is_zero() {
                let mut r = row;
                r.remove(k);
                next.push(r);
            } else if row[k].is_positive() {
                lowers.push(row);
            } else {
                uppers.push(row);
            }
        }
        for lo in &lowers {
            for up in &uppers {
                let mut r = Vec::with_capacity(width);
                for c in 0..=width {
                    if c == k {
                        continue;
                    }
                    let v = &lo[c] * &(-up[k].clone()) + &up[c] * &lo[k];
                    r.push(v);
                }
                next.push(r);
            }
        }
        ineqs = next;
        width -= 1;
    }
    ineqs.into_iter().all(|row| !row[0].is_negative())
}

fn rref_vars(mat: &mut [Vec<Rat>], var_cols: usize) -> Vec<(usize, usize)> {
    let rows = mat.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..var_cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !mat[i][c].is_zero()) else {
            continue;
        };
        mat.swap(r, p);
        let inv = mat[r][c].clone();
        for x in mat[r].iter_mut() {
            *x = &*x / &inv;
        }
        for i in 0..rows {
            if i != r && !mat[i][c].is_zero() {
                let f = mat[i][c].clone();
                for j in 0..mat[i].len() {
                    let sub = &mat[r][j] * &f;
                    mat[i][j] = &mat[i][j] - sub;
                }
            }
        }
        pivots.push((r, c));
        r += 1;
    }
    pivots
}

/// Invisible branches decided purely by Fourier-Motzkin.
pub fn fm_invisible_branches(track: &TrainTrack) -> std::collections::BTreeSet<BranchId> {
    (0..track.n_branches())
        .filter(|&bi| !fm_branch_positive_feasible(track, bi))
        .map(|bi| track.branches()[bi].id)
        .collect()
}

/// Recurrence decided purely by Fourier-Motzkin.
pub fn fm_is_recurrent(track: &TrainTrack) -> bool {
    track.n_branches() > 0 && fm_invisible_branches(track).is_empty()
}

/// Extreme rays of `ker(L) with the non-negative orthant` by enumeration of support complements:
/// a primitive non-negative kernel vector is an extreme ray exactly when the
/// kernel restricted to its support is one-dimensional. Returns primitive
/// integer weight vectors, sorted, duplicate-free.
pub fn polytope_vertex_measures(track: &TrainTrack) -> Vec<Vec<BigInt>> {
    let l: IncidenceMatrix = incidence_matrix(track);
    let n = track.n_branches();
    assert!(n <= 20, "support enumeration bounded to 20 branches");
    let lrat = l.to_rational();
    let mut found: Vec<Vec<BigInt>> = Vec::new();
    for mask in 0u64..(1u64 << n) {
        // mask bit set = branch forced to zero
        let mut rows = lrat.clone();
        for b in 0..n {
            if mask & (1 << b) != 0 {
                let mut row = vec![Rat::zero(); n];
                row[b] = Rat::one();
                rows.push(row);
            }
        }
        let ns = linalg::nullspace(&rows, n);
        if ns.len() != 1 {
            continue;
        }
        let v = linalg::primitive_integer_vector(&ns[0]);
        let has_pos = v.iter().any(|x| x.is_positive());
        let has_neg = v.iter().any(|x| x.is_negative());
        let v = match (has_pos, has_neg) {
            (true, false) => v,
            (false, true) => v.into_iter().map(|x| -x).collect(),
            _ => continue, // mixed signs: the ray leaves the cone
        };
        if !found.contains(&v) {
            found.push(v);
        }
    }
    found.sort();
    found
}

/// Exhaustive search for a signed subset of switch rows summing to a
/// non-zero, non-negative integer vector. Flipping the sign of a row is the
/// legal relabeling that reverses the preferred direction at that switch.
pub fn signed_row_subset_nonnegative(track: &TrainTrack) -> Option<Vec<i8>> {
    let l = incidence_matrix(track);
    let m = l.rows.len();
    let n = track.n_branches();
    assert!(m <= 12, "brute force bounded to 12 switches");
    fn rec(i: usize, signs: &mut Vec<i8>, rows: &[Vec<BigInt>], n: usize) -> bool {
        if i == rows.len() {
            let mut sum = vec![BigInt::zero(); n];
            for (s, row) in signs.iter().zip(rows) {
                for (acc, x) in sum.iter_mut().zip(row) {
                    match s {
                        1 => *acc += x,
                        -1 => *acc -= x,
                        _ => {}
                    }
                }
            }
            return sum.iter().all(|x| !x.is_negative()) && sum.iter().any(|x| x.is_positive());
        }
        for s in [0i8, 1, -1] {
            signs[i] = s;
            if rec(i + 1, signs, rows, n) {
                return true;
            }
        }
        signs[i] = 0;
        false
    }
    let mut signs = vec![0i8; m];
    rec(0, &mut signs, &l.rows, n).then_some(signs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Parallelism;
    use crate::fixtures;
    use crate::measures;

    #[test]
    fn fm_agrees_on_named_fixtures() {
        for t in [
            fixtures::circle(),
            fixtures::s11_standard(),
            fixtures::nonrecurrent_barbell(),
            fixtures::nonrecurrent_flipped_theta(),
        ] {
            let lp = measures::invisible_branches(&t, Parallelism::Sequential);
            let fm = fm_invisible_branches(&t);
            assert_eq!(lp, fm, "oracle disagreement on {}", t.surface());
            assert_eq!(
                measures::is_recurrent(&t, Parallelism::Sequential).recurrent,
                fm_is_recurrent(&t)
            );
        }
    }

    #[test]
    fn polytope_rays_of_s11() {
        let t = fixtures::s11_standard();
        let rays = polytope_vertex_measures(&t);
        // exactly the two vertex cycles (1,1,0) and (1,0,1)
        assert_eq!(rays.len(), 2);
        assert!(rays.contains(&vec![BigInt::from(1), BigInt::from(1), BigInt::from(0)]));
        assert!(rays.contains(&vec![BigInt::from(1), BigInt::from(0), BigInt::from(1)]));
    }

    #[test]
    fn polytope_rays_of_circle() {
        let rays = polytope_vertex_measures(&fixtures::circle());
        assert_eq!(rays, vec![vec![BigInt::from(1)]]);
    }

    #[test]
    fn signed_row_sums_on_nonrecurrent() {
        for t in [
            fixtures::nonrecurrent_barbell(),
            fixtures::nonrecurrent_flipped_theta(),
        ] {
            assert!(signed_row_subset_nonnegative(&t).is_some());
        }
    }
}
