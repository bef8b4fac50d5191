//! Exact lattice reduction on integer bases.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// An integer basis (vectors are `basis[k]`) together with the unimodular transform
/// `transform[k]` expressing each vector in the original coordinates.
#[derive(Clone, Debug)]
pub struct Reduced {
    pub basis: Vec<Vec<BigInt>>,
    pub transform: Vec<Vec<BigInt>>,
}

pub(crate) fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: &mut [BigInt], q: &BigInt, b: &[BigInt]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x -= q * y;
    }
}

fn unit(n: usize, k: usize) -> Vec<BigInt> {
    (0..n)
        .map(|i| {
            if i == k {
                BigInt::one()
            } else {
                BigInt::zero()
            }
        })
        .collect()
}

/// Nearest integer to `a/b` for `b > 0`, ties toward `+inf`.
fn round_div(a: &BigInt, b: &BigInt) -> BigInt {
    let two = BigInt::from(2);
    (a * &two + b).div_floor(&(b * &two))
}

/// Lagrange–Gauss reduction of a two-dimensional basis.
pub fn gauss(b1: Vec<BigInt>, b2: Vec<BigInt>) -> Reduced {
    let mut v = [b1, b2];
    let mut t = [unit(2, 0), unit(2, 1)];
    let mut n = [dot(&v[0], &v[0]), dot(&v[1], &v[1])];
    if n[1] < n[0] {
        v.swap(0, 1);
        t.swap(0, 1);
        n.swap(0, 1);
    }
    loop {
        let q = round_div(&dot(&v[0], &v[1]), &n[0]);
        if !q.is_zero() {
            let (a, b) = v.split_at_mut(1);
            axpy(&mut b[0], &q, &a[0]);
            let (a, b) = t.split_at_mut(1);
            axpy(&mut b[0], &q, &a[0]);
            n[1] = dot(&v[1], &v[1]);
        }
        if n[1] >= n[0] {
            break;
        }
        v.swap(0, 1);
        t.swap(0, 1);
        n.swap(0, 1);
    }
    Reduced {
        basis: v.to_vec(),
        transform: t.to_vec(),
    }
}

/// Integral LLL with parameter 3/4 (Cohen, Algorithm 2.6.7), tracking the transform.
///
/// All Gram–Schmidt data are kept as exact integers `d_i` and `λ_{k,j}`.
pub fn lll(basis: Vec<Vec<BigInt>>) -> Reduced {
    let n = basis.len();
    let mut b = basis;
    let mut h: Vec<Vec<BigInt>> = (0..n).map(|k| unit(n, k)).collect();
    if n < 2 {
        return Reduced {
            basis: b,
            transform: h,
        };
    }
    // 1-based d with d[0] = 1; lambda[k][j] for j < k, 0-based vectors
    let mut d = vec![BigInt::zero(); n + 1];
    d[0] = BigInt::one();
    let mut lam = vec![vec![BigInt::zero(); n]; n];
    d[1] = dot(&b[0], &b[0]);
    let mut k = 1usize; // 0-based index of the current vector
    let mut k_max = 0usize;

    fn red(
        k: usize,
        l: usize,
        b: &mut [Vec<BigInt>],
        h: &mut [Vec<BigInt>],
        d: &[BigInt],
        lam: &mut [Vec<BigInt>],
    ) {
        let dl = &d[l + 1];
        if (&lam[k][l] * BigInt::from(2)).abs() <= *dl {
            return;
        }
        let q = round_div(&lam[k][l], dl);
        let bl = b[l].clone();
        axpy(&mut b[k], &q, &bl);
        let hl = h[l].clone();
        axpy(&mut h[k], &q, &hl);
        lam[k][l] -= &q * dl;
        for i in 0..l {
            let t = &q * &lam[l][i];
            lam[k][i] -= t;
        }
    }

    while k < n {
        if k > k_max {
            k_max = k;
            for j in 0..=k {
                let mut u = dot(&b[k], &b[j]);
                for i in 0..j {
                    u = (&d[i + 1] * &u - &lam[k][i] * &lam[j][i]) / &d[i];
                }
                if j < k {
                    lam[k][j] = u;
                } else {
                    assert!(!u.is_zero(), "basis vectors are linearly dependent");
                    d[k + 1] = u;
                }
            }
        }
        loop {
            red(k, k - 1, &mut b, &mut h, &d, &mut lam);
            let lhs = &d[k + 1] * &d[k - 1] * 4;
            let rhs = &d[k] * &d[k] * 3 - &lam[k][k - 1] * &lam[k][k - 1] * 4;
            if lhs < rhs {
                // swap k and k-1
                b.swap(k, k - 1);
                h.swap(k, k - 1);
                for j in 0..k - 1 {
                    let t = lam[k][j].clone();
                    lam[k][j] = lam[k - 1][j].clone();
                    lam[k - 1][j] = t;
                }
                let l = lam[k][k - 1].clone();
                let bb = (&d[k - 1] * &d[k + 1] + &l * &l) / &d[k];
                for i in k + 1..=k_max {
                    let t = lam[i][k].clone();
                    lam[i][k] = (&d[k + 1] * &lam[i][k - 1] - &l * &t) / &d[k];
                    lam[i][k - 1] = (&bb * &t + &l * &lam[i][k]) / &d[k + 1];
                }
                d[k] = bb;
                if k > 1 {
                    k -= 1;
                }
            } else {
                for l in (0..k - 1).rev() {
                    red(k, l, &mut b, &mut h, &d, &mut lam);
                }
                k += 1;
                break;
            }
        }
    }
    Reduced {
        basis: b,
        transform: h,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[i64]) -> Vec<BigInt> {
        x.iter().map(|&a| BigInt::from(a)).collect()
    }

    fn apply(orig: &[Vec<BigInt>], t: &[BigInt]) -> Vec<BigInt> {
        let n = orig[0].len();
        (0..n)
            .map(|r| orig.iter().zip(t).map(|(col, c)| &col[r] * c).sum())
            .collect()
    }

    #[test]
    fn gauss_finds_short_basis() {
        let orig = vec![v(&[1, 0]), v(&[1000, 1])];
        let r = gauss(orig[0].clone(), orig[1].clone());
        assert_eq!(dot(&r.basis[0], &r.basis[0]), BigInt::from(1));
        assert_eq!(dot(&r.basis[1], &r.basis[1]), BigInt::from(1));
        for (bk, tk) in r.basis.iter().zip(&r.transform) {
            assert_eq!(&apply(&orig, tk), bk);
        }
    }

    #[test]
    fn lll_reduces_and_tracks_transform() {
        let orig = vec![v(&[1, 1, 1]), v(&[-1, 0, 2]), v(&[3, 5, 6])];
        let r = lll(orig.clone());
        for (bk, tk) in r.basis.iter().zip(&r.transform) {
            assert_eq!(&apply(&orig, tk), bk);
        }
        // the first vector never grows
        let n0 = dot(&r.basis[0], &r.basis[0]);
        assert!(n0 <= BigInt::from(3));
    }

    #[test]
    fn lll_on_skewed_basis() {
        let orig = vec![
            v(&[1, 0, 0, 12345]),
            v(&[0, 1, 0, 54321]),
            v(&[0, 0, 1, 99999]),
            v(&[0, 0, 0, 1000003]),
        ];
        let r = lll(orig.clone());
        for (bk, tk) in r.basis.iter().zip(&r.transform) {
            assert_eq!(&apply(&orig, tk), bk);
        }
        let n0 = dot(&r.basis[0], &r.basis[0]);
        assert!(n0 < BigInt::from(10_000));
    }
}
