//! Small dense and tridiagonal kernels used as independent oracles.

use num_complex::Complex64 as C64;

/// Row-major square matrix.
#[derive(Debug, Clone)]
pub struct Dense {
    pub n: usize,
    pub a: Vec<C64>,
}

impl Dense {
    pub fn zeros(n: usize) -> Self {
        Dense { n, a: vec![C64::new(0.0, 0.0); n * n] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.a[i * self.n + j] = v;
    }

    /// Tridiagonal matrix with `diag`, superdiagonal `sup` and subdiagonal `sub`.
    pub fn tridiagonal(diag: &[C64], sup: &[C64], sub: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Dense::zeros(n);
        for i in 0..n {
            m.set(i, i, diag[i]);
            if i + 1 < n {
                m.set(i, i + 1, sup[i]);
                m.set(i + 1, i, sub[i]);
            }
        }
        m
    }
}

/// LU factorization with partial pivoting. `None` if exactly singular.
pub struct Lu {
    n: usize,
    lu: Vec<C64>,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    pub fn new(m: &Dense) -> Option<Lu> {
        let n = m.n;
        let mut lu = m.a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].norm();
            for i in k + 1..n {
                let v = lu[i * n + k].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return None;
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let piv = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / piv;
                lu[i * n + k] = f;
                for j in k + 1..n {
                    let u = lu[k * n + j];
                    lu[i * n + j] -= f * u;
                }
            }
        }
        Some(Lu { n, lu, perm, sign })
    }

    pub fn det(&self) -> C64 {
        let mut d = C64::new(self.sign, 0.0);
        for k in 0..self.n {
            d *= self.lu[k * self.n + k];
        }
        d
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[i * n + j];
                let xj = x[j];
                x[i] -= l * xj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[i * n + j];
                let xj = x[j];
                x[i] -= u * xj;
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }
}

/// Determinant by LU; zero for a singular matrix.
pub fn det(m: &Dense) -> C64 {
    if m.n == 0 {
        return C64::new(1.0, 0.0);
    }
    Lu::new(m).map(|lu| lu.det()).unwrap_or(C64::new(0.0, 0.0))
}

/// Thomas algorithm for a tridiagonal system. `sub[i]` couples rows i+1 and i.
/// Returns `None` on a zero pivot.
pub fn tridiag_solve(diag: &[C64], sup: &[C64], sub: &[C64], rhs: &[C64]) -> Option<Vec<C64>> {
    let n = diag.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let mut c = vec![C64::new(0.0, 0.0); n];
    let mut d = vec![C64::new(0.0, 0.0); n];
    let mut piv = diag[0];
    if piv.norm() == 0.0 {
        return None;
    }
    if n > 1 {
        c[0] = sup[0] / piv;
    }
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - sub[i - 1] * c[i - 1];
        if piv.norm() == 0.0 {
            return None;
        }
        if i + 1 < n {
            c[i] = sup[i] / piv;
        }
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        let next = d[i + 1];
        d[i] -= c[i] * next;
    }
    Some(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn det_2x2() {
        let m = Dense { n: 2, a: vec![c(1.0), c(2.0), c(3.0), c(4.0)] };
        assert!((det(&m) - c(-2.0)).norm() < 1e-15);
    }

    #[test]
    fn det_needs_pivot() {
        let m = Dense { n: 2, a: vec![c(0.0), c(1.0), c(1.0), c(0.0)] };
        assert!((det(&m) - c(-1.0)).norm() < 1e-15);
    }

    #[test]
    fn thomas_matches_lu() {
        let diag = vec![c(4.0), c(5.0), C64::new(6.0, 1.0), c(3.0)];
        let sup = vec![c(1.0), c(-2.0), c(0.5)];
        let sub = vec![c(0.3), c(1.5), C64::new(0.0, 2.0)];
        let rhs = vec![c(1.0), c(2.0), c(3.0), c(4.0)];
        let x = tridiag_solve(&diag, &sup, &sub, &rhs).unwrap();
        let m = Dense::tridiagonal(&diag, &sup, &sub);
        let y = Lu::new(&m).unwrap().solve(&rhs);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
