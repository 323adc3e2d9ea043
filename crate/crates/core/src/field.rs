//! Small finite fields and the projective plane over them.
//!
//! Elements of `GF(p^k)` are encoded as integers `Σ a_i p^i`, the digits being
//! the coefficients of `t^i` modulo a fixed irreducible polynomial.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unsupported field size {0}; expected one of 2, 3, 4, 5, 7, 8, 9")]
pub struct UnsupportedField(pub usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Field {
    q: usize,
    p: usize,
    k: usize,
    /// Low coefficients of the monic modulus `t^k + ..`.
    modulus: Vec<usize>,
    mul: Vec<Vec<usize>>,
}

impl Field {
    pub fn new(q: usize) -> Result<Self, UnsupportedField> {
        let (p, k, modulus) = match q {
            2 | 3 | 5 | 7 => (q, 1, vec![0]),
            // t² + t + 1
            4 => (2, 2, vec![1, 1]),
            // t³ + t + 1
            8 => (2, 3, vec![1, 1, 0]),
            // t² + 1
            9 => (3, 2, vec![1, 0]),
            _ => return Err(UnsupportedField(q)),
        };
        let mut f = Field { q, p, k, modulus, mul: Vec::new() };
        f.mul = (0..q).map(|a| (0..q).map(|b| f.slow_mul(a, b)).collect()).collect();
        Ok(f)
    }

    pub fn order(&self) -> usize {
        self.q
    }

    pub fn characteristic(&self) -> usize {
        self.p
    }

    fn digits(&self, a: usize) -> Vec<usize> {
        let mut v = Vec::with_capacity(self.k);
        let mut a = a;
        for _ in 0..self.k {
            v.push(a % self.p);
            a /= self.p;
        }
        v
    }

    fn encode(&self, d: &[usize]) -> usize {
        d.iter().rev().fold(0, |acc, &c| acc * self.p + c)
    }

    pub fn add(&self, a: usize, b: usize) -> usize {
        let (x, y) = (self.digits(a), self.digits(b));
        self.encode(&x.iter().zip(&y).map(|(u, v)| (u + v) % self.p).collect::<Vec<_>>())
    }

    pub fn neg(&self, a: usize) -> usize {
        self.encode(&self.digits(a).iter().map(|&u| (self.p - u) % self.p).collect::<Vec<_>>())
    }

    fn slow_mul(&self, a: usize, b: usize) -> usize {
        if self.k == 1 {
            return a * b % self.p;
        }
        let (x, y) = (self.digits(a), self.digits(b));
        let mut prod = vec![0; 2 * self.k - 1];
        for (i, u) in x.iter().enumerate() {
            for (j, v) in y.iter().enumerate() {
                prod[i + j] = (prod[i + j] + u * v) % self.p;
            }
        }
        // reduce with t^k = -(modulus)
        for deg in (self.k..prod.len()).rev() {
            let c = prod[deg];
            if c == 0 {
                continue;
            }
            prod[deg] = 0;
            for (i, m) in self.modulus.iter().enumerate() {
                let idx = deg - self.k + i;
                prod[idx] = (prod[idx] + self.p * self.p - c * m % self.p) % self.p;
            }
        }
        self.encode(&prod[..self.k])
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a][b]
    }

    pub fn inv(&self, a: usize) -> Option<usize> {
        (1..self.q).find(|&b| self.mul[a][b] == 1)
    }

    /// Points of the projective plane, first nonzero coordinate 1, in
    /// lexicographic order.
    pub fn projective_plane(&self) -> Vec<[usize; 3]> {
        let q = self.q;
        let mut pts = Vec::with_capacity(q * q + q + 1);
        for y in 0..q {
            for z in 0..q {
                pts.push([1, y, z]);
            }
        }
        for z in 0..q {
            pts.push([0, 1, z]);
        }
        pts.push([0, 0, 1]);
        pts.sort_unstable();
        pts
    }

    /// Scales so that the first nonzero coordinate is 1.
    pub fn normalize(&self, v: [usize; 3]) -> Option<[usize; 3]> {
        let lead = v.iter().copied().find(|&c| c != 0)?;
        let s = self.inv(lead)?;
        Some(v.map(|c| self.mul(c, s)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_axioms() {
        for q in [2, 3, 4, 5, 7, 8, 9] {
            let f = Field::new(q).unwrap();
            for a in 0..q {
                assert_eq!(f.add(a, f.neg(a)), 0);
                assert_eq!(f.mul(a, 1), a);
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), 1, "q={q} a={a}");
                }
                for b in 0..q {
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for c in 0..q {
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                        assert_eq!(f.mul(a, f.mul(b, c)), f.mul(f.mul(a, b), c));
                    }
                }
            }
        }
        assert!(Field::new(6).is_err());
    }

    #[test]
    fn plane_sizes() {
        for q in [2, 3, 4, 5, 7, 8, 9] {
            let f = Field::new(q).unwrap();
            let pts = f.projective_plane();
            assert_eq!(pts.len(), q * q + q + 1);
            assert!(pts.iter().all(|&p| f.normalize(p) == Some(p)));
        }
    }
}
