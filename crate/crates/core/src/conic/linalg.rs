//! Dense symmetric factorization for the reduced KKT system.

/// Row-major square matrix.
#[derive(Debug, Clone)]
pub(crate) struct SymMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }

    #[cfg(test)]
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

/// `L D L^T` without pivoting; valid for positive definite and
/// quasi-definite matrices. Only the lower triangle of the input is read.
#[derive(Debug, Clone)]
pub(crate) struct Ldl {
    n: usize,
    l: Vec<f64>,
    d: Vec<f64>,
}

impl Ldl {
    /// `signs[i]` is the expected sign of pivot `i`; a pivot of the wrong sign
    /// or magnitude below `tiny` aborts the factorization.
    pub fn factor(a: &SymMatrix, signs: &[f64], tiny: f64) -> Option<Self> {
        let n = a.n;
        let mut l = vec![0.0; n * n];
        let mut d = vec![0.0; n];
        let mut work = vec![0.0; n];
        for j in 0..n {
            // work[k] = L[j][k] * d[k]
            for k in 0..j {
                work[k] = l[j * n + k] * d[k];
            }
            let mut djj = a.at(j, j);
            for k in 0..j {
                djj -= l[j * n + k] * work[k];
            }
            if !djj.is_finite() || djj * signs[j] <= tiny {
                return None;
            }
            d[j] = djj;
            l[j * n + j] = 1.0;
            for i in j + 1..n {
                let mut v = a.at(i, j);
                let li = &l[i * n..i * n + j];
                for k in 0..j {
                    v -= li[k] * work[k];
                }
                l[i * n + j] = v / djj;
            }
        }
        Some(Self { n, l, d })
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] -= s;
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let mut s = 0.0;
            for k in i + 1..n {
                s += self.l[k * n + i] * x[k];
            }
            x[i] -= s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_quasi_definite_system() {
        // [[4, 1, 1], [1, 3, 0], [1, 0, -2]]
        let mut a = SymMatrix::zeros(3);
        let vals = [4.0, 1.0, 1.0, 1.0, 3.0, 0.0, 1.0, 0.0, -2.0];
        a.data.copy_from_slice(&vals);
        let f = Ldl::factor(&a, &[1.0, 1.0, -1.0], 1e-14).unwrap();
        let b = [1.0, 2.0, 3.0];
        let mut x = b;
        f.solve_in_place(&mut x);
        let mut r = [0.0; 3];
        a.mul_vec(&x, &mut r);
        for i in 0..3 {
            assert!((r[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_wrong_sign_pivot() {
        let mut a = SymMatrix::zeros(2);
        a.data.copy_from_slice(&[1.0, 2.0, 2.0, 1.0]);
        assert!(Ldl::factor(&a, &[1.0, 1.0], 1e-14).is_none());
    }
}
