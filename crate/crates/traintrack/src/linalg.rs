//! Dense exact-rational linear algebra used by the measure polytope machinery.
//!
//! Everything here works over `BigRational`; there is no floating point and
//! no tolerance anywhere. Matrices are row-major `Vec<Vec<Rat>>`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_frac(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Reduced row echelon form in place; returns the pivot column of each pivot row.
pub fn rref(mat: &mut [Vec<Rat>]) -> Vec<usize> {
    let rows = mat.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = mat[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
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
                for j in 0..cols {
                    let sub = &mat[r][j] * &f;
                    mat[i][j] = &mat[i][j] - sub;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(mat: &[Vec<Rat>]) -> usize {
    let mut m: Vec<Vec<Rat>> = mat.to_vec();
    rref(&mut m).len()
}

/// Basis of the right nullspace `{x : mat . x = 0}`.
pub fn nullspace(mat: &[Vec<Rat>], cols: usize) -> Vec<Vec<Rat>> {
    let mut m: Vec<Vec<Rat>> = mat.to_vec();
    let pivots = rref(&mut m);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let mut basis = Vec::new();
    for &f in &free {
        let mut v = vec![Rat::zero(); cols];
        v[f] = Rat::one();
        for (row, &pc) in pivots.iter().enumerate() {
            v[pc] = -m[row][f].clone();
        }
        basis.push(v);
    }
    basis
}

pub fn mat_vec(mat: &[Vec<Rat>], v: &[Rat]) -> Vec<Rat> {
    mat.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .fold(Rat::zero(), |acc, (a, b)| acc + a * b)
        })
        .collect()
}

pub fn int_mat_to_rat(mat: &[Vec<BigInt>]) -> Vec<Vec<Rat>> {
    mat.iter()
        .map(|row| row.iter().map(|x| Rat::from_integer(x.clone())).collect())
        .collect()
}

/// Clears denominators and divides by the content, preserving sign.
/// Returns the primitive integer vector proportional to `v`.
pub fn primitive_integer_vector(v: &[Rat]) -> Vec<BigInt> {
    use num_integer::Integer;
    if v.iter().all(|x| x.is_zero()) {
        return vec![BigInt::zero(); v.len()];
    }
    let mut lcm = BigInt::one();
    for x in v {
        lcm = lcm.lcm(x.denom());
    }
    let ints: Vec<BigInt> = v.iter().map(|x| x.numer() * &lcm / x.denom()).collect();
    let mut gcd = BigInt::zero();
    for x in &ints {
        gcd = gcd.gcd(x);
    }
    ints.into_iter().map(|x| x / &gcd).collect()
}

/// Solves `mat . x = rhs` if consistent, returning one solution.
pub fn solve(mat: &[Vec<Rat>], rhs: &[Rat]) -> Option<Vec<Rat>> {
    let rows = mat.len();
    let cols = if rows == 0 { 0 } else { mat[0].len() };
    let mut aug: Vec<Vec<Rat>> = mat
        .iter()
        .zip(rhs)
        .map(|(row, b)| {
            let mut r = row.clone();
            r.push(b.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.contains(&cols) {
        return None; // pivot in the augmented column: inconsistent
    }
    let mut x = vec![Rat::zero(); cols];
    for (row, &pc) in pivots.iter().enumerate() {
        x[pc] = aug[row][cols].clone();
    }
    Some(x)
}

pub fn sup_norm(v: &[Rat]) -> Rat {
    v.iter()
        .map(|x| x.abs())
        .max()
        .unwrap_or_else(Rat::zero)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rref_rank_nullspace() {
        // x + y + z = 0 twice: rank 1, nullity 2
        let m = vec![
            vec![rat(1), rat(1), rat(1)],
            vec![rat(2), rat(2), rat(2)],
        ];
        assert_eq!(rank(&m), 1);
        let ns = nullspace(&m, 3);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!(mat_vec(&m, v).iter().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn solve_consistent_and_not() {
        let m = vec![vec![rat(1), rat(2)], vec![rat(3), rat(4)]];
        let x = solve(&m, &[rat(5), rat(11)]).unwrap();
        assert_eq!(mat_vec(&m, &x), vec![rat(5), rat(11)]);
        let sing = vec![vec![rat(1), rat(1)], vec![rat(2), rat(2)]];
        assert!(solve(&sing, &[rat(1), rat(3)]).is_none());
    }

    #[test]
    fn primitive_vector() {
        let v = vec![rat_frac(1, 2), rat_frac(3, 4), rat(0)];
        assert_eq!(
            primitive_integer_vector(&v),
            vec![BigInt::from(2), BigInt::from(3), BigInt::from(0)]
        );
    }
}
