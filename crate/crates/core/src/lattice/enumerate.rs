//! Exact Fincke–Pohst enumeration of all shortest vectors.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::reduce::dot;

struct Gso {
    mu: Vec<Vec<BigRational>>,
    b: Vec<BigRational>,
}

fn gso(basis: &[Vec<BigInt>]) -> Gso {
    let n = basis.len();
    let gram: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| BigRational::from_integer(dot(&basis[i], &basis[j])))
                .collect()
        })
        .collect();
    let mut mu = vec![vec![BigRational::zero(); n]; n];
    let mut b = vec![BigRational::zero(); n];
    for i in 0..n {
        for j in 0..i {
            let mut s = gram[i][j].clone();
            for k in 0..j {
                s -= &mu[i][k] * &mu[j][k] * &b[k];
            }
            mu[i][j] = s / &b[j];
        }
        let mut s = gram[i][i].clone();
        for k in 0..i {
            s -= &mu[i][k] * &mu[i][k] * &b[k];
        }
        b[i] = s;
    }
    Gso { mu, b }
}

fn fits(x: &BigInt, c: &BigRational, s: &BigRational) -> bool {
    let t = BigRational::from_integer(x.clone()) - c;
    &(&t * &t) <= s
}

/// Integers `x` with `(x - c)^2 <= s`, as an inclusive range.
fn int_range(c: &BigRational, s: &BigRational) -> Option<(BigInt, BigInt)> {
    let f = c.numer().div_floor(c.denom());
    let start = if fits(&f, c, s) {
        f
    } else if fits(&(&f + 1), c, s) {
        f + 1
    } else {
        return None;
    };
    let gallop = |dir: i32| -> BigInt {
        let mut step = BigInt::one();
        while fits(&(&start + &step * dir), c, s) {
            step *= 2;
        }
        // largest k in [step/2, step) with start + k*dir fitting
        let (mut lo, mut hi) = (&step / 2, step);
        while &hi - &lo > BigInt::one() {
            let mid = (&lo + &hi) / 2;
            if fits(&(&start + &mid * dir), c, s) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        &start + lo * dir
    };
    Some((gallop(-1), gallop(1)))
}

/// All nonzero coefficient vectors `x` minimizing `|Σ x_i basis[i]|²`, with that minimum.
pub fn shortest_vectors(basis: &[Vec<BigInt>]) -> (BigInt, Vec<Vec<BigInt>>) {
    let n = basis.len();
    let g = gso(basis);
    let mut best = dot(&basis[0], &basis[0]);
    let mut found: Vec<Vec<BigInt>> = Vec::new();
    let mut x = vec![BigInt::zero(); n];
    search(
        n,
        &g,
        basis,
        &mut x,
        &BigRational::zero(),
        &mut best,
        &mut found,
    );
    (best, found)
}

fn search(
    level: usize,
    g: &Gso,
    basis: &[Vec<BigInt>],
    x: &mut Vec<BigInt>,
    partial: &BigRational,
    best: &mut BigInt,
    found: &mut Vec<Vec<BigInt>>,
) {
    if level == 0 {
        if x.iter().all(|v| v.is_zero()) {
            return;
        }
        let dim = basis[0].len();
        let v: Vec<BigInt> = (0..dim)
            .map(|r| basis.iter().zip(x.iter()).map(|(b, c)| &b[r] * c).sum())
            .collect();
        let norm = dot(&v, &v);
        if norm < *best {
            *best = norm.clone();
            found.clear();
        }
        if norm == *best {
            found.push(x.clone());
        }
        return;
    }
    let i = level - 1;
    let n = x.len();
    let mut c = BigRational::zero();
    for j in i + 1..n {
        c -= &g.mu[j][i] * BigRational::from_integer(x[j].clone());
    }
    let room = BigRational::from_integer(best.clone()) - partial;
    if room < BigRational::zero() {
        return;
    }
    let s = room / &g.b[i];
    let Some((lo, hi)) = int_range(&c, &s) else {
        return;
    };
    let mut xi = lo;
    while xi <= hi {
        let t = BigRational::from_integer(xi.clone()) - &c;
        let next = partial + &t * &t * &g.b[i];
        if next <= BigRational::from_integer(best.clone()) {
            x[i] = xi.clone();
            search(level - 1, g, basis, x, &next, best, found);
        }
        xi += 1;
    }
    x[i] = BigInt::zero();
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[i64]) -> Vec<BigInt> {
        x.iter().map(|&a| BigInt::from(a)).collect()
    }

    #[test]
    fn ranges_are_exact() {
        let c = BigRational::new(1.into(), 2.into());
        let s = BigRational::new(9.into(), 4.into());
        assert_eq!(int_range(&c, &s), Some((BigInt::from(-1), BigInt::from(2))));
        let tiny = BigRational::new(1.into(), 100.into());
        assert_eq!(int_range(&c, &tiny), None);
        let big = BigRational::from_integer(BigInt::from(10).pow(40));
        let (lo, hi) = int_range(&BigRational::zero(), &big).unwrap();
        assert_eq!(hi, BigInt::from(10).pow(20));
        assert_eq!(lo, -BigInt::from(10).pow(20));
    }

    #[test]
    fn ties_are_all_collected() {
        let basis = vec![v(&[2, 0]), v(&[1, 1])];
        let (best, found) = shortest_vectors(&basis);
        assert_eq!(best, BigInt::from(2));
        // (0,±1) and ±(1,-1)
        assert_eq!(found.len(), 4);
    }
}
