//! Dense complex matrices (dimension <= 9) and a self-contained Jacobi
//! eigensolver for Hermitian matrices.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Row-major square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    n: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n);
            for (j, v) in r.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }

    /// Outer product |psi><psi| of a (not necessarily normalized) vector.
    pub fn projector_onto(psi: &[C64]) -> Self {
        let n = psi.len();
        let norm2: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = psi[i] * psi[j].conj() / norm2;
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn add(&self, o: &CMat) -> CMat {
        assert_eq!(self.n, o.n);
        let mut m = self.clone();
        for (a, b) in m.data.iter_mut().zip(&o.data) {
            *a += b;
        }
        m
    }

    pub fn sub(&self, o: &CMat) -> CMat {
        assert_eq!(self.n, o.n);
        let mut m = self.clone();
        for (a, b) in m.data.iter_mut().zip(&o.data) {
            *a -= b;
        }
        m
    }

    pub fn scale(&self, s: f64) -> CMat {
        let mut m = self.clone();
        for a in m.data.iter_mut() {
            *a *= s;
        }
        m
    }

    pub fn mul(&self, o: &CMat) -> CMat {
        assert_eq!(self.n, o.n);
        let n = self.n;
        let mut m = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self[(i, k)];
                if aik.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    m[(i, j)] += aik * o[(k, j)];
                }
            }
        }
        m
    }

    pub fn dagger(&self) -> CMat {
        let n = self.n;
        let mut m = CMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn kron(&self, o: &CMat) -> CMat {
        let (na, nb) = (self.n, o.n);
        let n = na * nb;
        let mut m = CMat::zeros(n);
        for i in 0..na {
            for j in 0..na {
                let a = self[(i, j)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for k in 0..nb {
                    for l in 0..nb {
                        m[(i * nb + k, j * nb + l)] = a * o[(k, l)];
                    }
                }
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn max_hermiticity_violation(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for j in 0..self.n {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Trace of self * o (no conjugation).
    pub fn trace_product(&self, o: &CMat) -> C64 {
        assert_eq!(self.n, o.n);
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.n {
            for k in 0..self.n {
                acc += self[(i, k)] * o[(k, i)];
            }
        }
        acc
    }

    /// Embed into a larger space: entry (i, j) goes to (i, j), the rest is
    /// zero-padded.
    pub fn embed(&self, n: usize) -> CMat {
        assert!(n >= self.n);
        let mut m = CMat::zeros(n);
        for i in 0..self.n {
            for j in 0..self.n {
                m[(i, j)] = self[(i, j)];
            }
        }
        m
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations,
/// ascending. Deterministic; converges to ~1e-14 of the matrix scale.
pub fn hermitian_eigenvalues(m: &CMat) -> Result<Vec<f64>> {
    let n = m.dim();
    if n == 1 {
        return Ok(vec![m[(0, 0)].re]);
    }
    let mut a = m.clone();
    let scale: f64 = a
        .data
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
        .max(1e-300);
    let tol = 1e-15 * scale;

    for _sweep in 0..200 {
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].norm());
            }
        }
        if off <= tol {
            let mut eigs: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
            eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
            return Ok(eigs);
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= tol {
                    continue;
                }
                let phase = apq / r;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // G = diag(1, e^{-i phi}) * plane rotation on (p, q);
                // A <- G^dagger A G annihilates the (p, q) entry.
                let mut g = CMat::identity(n);
                g[(p, p)] = C64::new(c, 0.0);
                g[(p, q)] = C64::new(s, 0.0);
                g[(q, p)] = C64::new(-s, 0.0) * phase.conj();
                g[(q, q)] = C64::new(c, 0.0) * phase.conj();
                a = g.dagger().mul(&a).mul(&g);
            }
        }
    }
    Err(Error::Numerical(
        "Jacobi eigensolver did not converge in 200 sweeps".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn eigenvalues_of_pauli_x() {
        let x = CMat::from_rows(&[&[c(0.0, 0.0), c(1.0, 0.0)], &[c(1.0, 0.0), c(0.0, 0.0)]]);
        let e = hermitian_eigenvalues(&x).unwrap();
        assert!((e[0] + 1.0).abs() < 1e-14 && (e[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigenvalues_complex_hermitian() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3.
        let m = CMat::from_rows(&[&[c(2.0, 0.0), c(0.0, 1.0)], &[c(0.0, -1.0), c(2.0, 0.0)]]);
        let e = hermitian_eigenvalues(&m).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-13 && (e[1] - 3.0).abs() < 1e-13);
    }

    #[test]
    fn eigenvalues_preserve_trace_on_random_hermitian() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.gen_range(2..=9);
            let mut m = CMat::zeros(n);
            for i in 0..n {
                m[(i, i)] = c(rng.gen_range(-1.0..1.0), 0.0);
                for j in (i + 1)..n {
                    let v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    m[(i, j)] = v;
                    m[(j, i)] = v.conj();
                }
            }
            let e = hermitian_eigenvalues(&m).unwrap();
            let tr: f64 = e.iter().sum();
            assert!((tr - m.trace().re).abs() < 1e-11, "trace mismatch");
        }
    }

    #[test]
    fn kron_dimensions_and_values() {
        let i2 = CMat::identity(2);
        let x = CMat::from_rows(&[&[c(0.0, 0.0), c(1.0, 0.0)], &[c(1.0, 0.0), c(0.0, 0.0)]]);
        let k = i2.kron(&x);
        assert_eq!(k.dim(), 4);
        assert_eq!(k[(0, 1)], c(1.0, 0.0));
        assert_eq!(k[(2, 3)], c(1.0, 0.0));
        assert_eq!(k[(0, 2)], c(0.0, 0.0));
    }
}
