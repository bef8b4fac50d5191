//! Dense univariate polynomials over `Q` and Sturm sequences.

use std::cmp::Ordering;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::RationalMatrix;

/// Coefficients from the constant term upward, without trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly(Vec<BigRational>);

impl Poly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly(coeffs)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree; the zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn leading(&self) -> BigRational {
        self.0.last().cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.0.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn sign_at(&self, x: &BigRational) -> Ordering {
        self.eval(x).cmp(&BigRational::zero())
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer((i as i64).into()))
                .collect(),
        )
    }

    /// Euclidean division `self = q * d + r`.
    pub fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        let dd = d.degree().expect("division by the zero polynomial");
        let lead = d.leading();
        let mut r = self.0.clone();
        let mut q = vec![BigRational::zero(); self.0.len().saturating_sub(dd)];
        while r.len() > dd && !r.is_empty() {
            let k = r.len() - 1 - dd;
            let f = r.last().cloned().unwrap_or_else(BigRational::zero) / &lead;
            if !f.is_zero() {
                for (i, c) in d.0.iter().enumerate() {
                    let t = &f * c;
                    r[k + i] -= t;
                }
                q[k] = f;
            }
            r.pop();
            while r.last().is_some_and(|c| c.is_zero()) {
                r.pop();
            }
        }
        (Poly::new(q), Poly::new(r))
    }

    pub fn monic(&self) -> Poly {
        let l = self.leading();
        Poly::new(self.0.iter().map(|c| c / &l).collect())
    }

    pub fn gcd(&self, o: &Poly) -> Poly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.monic()
        }
    }

    /// The squarefree part `p / gcd(p, p')`, monic.
    pub fn squarefree(&self) -> Poly {
        let g = self.gcd(&self.derivative());
        if g.degree().unwrap_or(0) == 0 {
            return self.monic();
        }
        self.div_rem(&g).0.monic()
    }
}

/// Characteristic polynomial `det(λI − S)` by the Faddeev–LeVerrier recurrence.
pub fn char_poly(s: &RationalMatrix) -> Poly {
    let n = s.dim();
    let a = s.entries();
    let mut coeffs = vec![BigRational::zero(); n + 1];
    coeffs[n] = BigRational::one();
    let mut m = vec![BigRational::zero(); n * n];
    for k in 1..=n {
        // M_k = S M_{k-1} + c_{n-k+1} I, then c_{n-k} = -tr(S M_k)/k
        let mut next = mat_mul(a, &m, n);
        for i in 0..n {
            next[i * n + i] += &coeffs[n - k + 1];
        }
        m = next;
        let tr: BigRational = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| &a[i * n + j] * &m[j * n + i])
                    .sum::<BigRational>()
            })
            .sum();
        coeffs[n - k] = -tr / BigRational::from_integer((k as i64).into());
    }
    Poly::new(coeffs)
}

fn mat_mul(a: &[BigRational], b: &[BigRational], n: usize) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); n * n];
    for i in 0..n {
        for k in 0..n {
            let x = &a[i * n + k];
            if x.is_zero() {
                continue;
            }
            for j in 0..n {
                let y = &b[k * n + j];
                if !y.is_zero() {
                    out[i * n + j] += x * y;
                }
            }
        }
    }
    out
}

/// Sturm sequence of a squarefree polynomial.
pub struct Sturm {
    chain: Vec<Poly>,
}

fn sign_of(x: &BigRational) -> i8 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

fn variations(signs: impl Iterator<Item = i8>) -> usize {
    let mut last = 0i8;
    let mut v = 0;
    for s in signs {
        if s == 0 {
            continue;
        }
        if last != 0 && s != last {
            v += 1;
        }
        last = s;
    }
    v
}

impl Sturm {
    pub fn new(p: &Poly) -> Self {
        let mut chain = vec![p.clone(), p.derivative()];
        loop {
            let n = chain.len();
            if chain[n - 1].is_zero() {
                chain.pop();
                break;
            }
            let (_, r) = chain[n - 2].div_rem(&chain[n - 1]);
            if r.is_zero() {
                break;
            }
            chain.push(Poly::new(r.0.into_iter().map(|c| -c).collect()));
        }
        Sturm { chain }
    }

    fn variations_at(&self, x: &BigRational) -> usize {
        variations(self.chain.iter().map(|p| sign_of(&p.eval(x))))
    }

    fn variations_at_pos_inf(&self) -> usize {
        variations(self.chain.iter().map(|p| sign_of(&p.leading())))
    }

    /// Number of distinct real roots strictly greater than `x`.
    pub fn roots_above(&self, x: &BigRational) -> usize {
        self.variations_at(x) - self.variations_at_pos_inf()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratmat::rat;

    fn p(c: &[i64]) -> Poly {
        Poly::new(c.iter().map(|&x| rat(x, 1)).collect())
    }

    #[test]
    fn char_poly_of_shear_gram() {
        // N_1ᵀ N_1 = [[1,1],[1,2]] has characteristic polynomial λ² − 3λ + 1
        let n1 = RationalMatrix::shear(2, rat(1, 1));
        assert_eq!(char_poly(&n1.gram()), p(&[1, -3, 1]));
    }

    #[test]
    fn char_poly_diag() {
        let d = RationalMatrix::diag(vec![rat(2, 1), rat(3, 1), rat(1, 6)]).unwrap();
        // (λ-2)(λ-3)(λ-1/6)
        let expect = Poly::new(vec![rat(-1, 1), rat(41, 6), rat(-31, 6), rat(1, 1)]);
        assert_eq!(char_poly(&d), expect);
    }

    #[test]
    fn squarefree_and_sturm() {
        // (x-1)^2 (x-3)
        let q = p(&[-3, 7, -5, 1]);
        let sf = q.squarefree();
        assert_eq!(sf, p(&[3, -4, 1]));
        let s = Sturm::new(&sf);
        assert_eq!(s.roots_above(&rat(0, 1)), 2);
        assert_eq!(s.roots_above(&rat(1, 1)), 1);
        assert_eq!(s.roots_above(&rat(2, 1)), 1);
        assert_eq!(s.roots_above(&rat(3, 1)), 0);
    }
}
