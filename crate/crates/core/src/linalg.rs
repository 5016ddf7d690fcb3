//! Thin wrappers over the LAPACK symmetric eigensolvers plus a complex
//! tridiagonal solver.

use std::os::raw::c_char;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenpairs of a real symmetric matrix. Eigenvectors are stored
/// column-major: column `j` is `vectors[j * dim..(j + 1) * dim]`.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub dim: usize,
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
}

impl EigenPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, j: usize) -> &[f64] {
        &self.vectors[j * self.dim..(j + 1) * self.dim]
    }

    /// Coefficients `V^T x`.
    pub fn project(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.len())
            .map(|j| {
                let v = self.vector(j);
                let (mut re, mut im) = (0.0, 0.0);
                for (vk, xk) in v.iter().zip(x) {
                    re += vk * xk.re;
                    im += vk * xk.im;
                }
                Complex64::new(re, im)
            })
            .collect()
    }

    /// `V c`.
    pub fn synthesize(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        for (j, c) in coeffs.iter().enumerate() {
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            for (o, vk) in out.iter_mut().zip(self.vector(j)) {
                o.re += c.re * vk;
                o.im += c.im * vk;
            }
        }
        out
    }
}

/// Which eigenpairs `dstemr` should return.
#[derive(Debug, Clone, Copy)]
pub enum Range {
    All,
    /// Eigenvalues in the half-open interval `(lo, hi]`.
    Values(f64, f64),
}

/// Eigenpairs of the symmetric tridiagonal matrix with diagonal `diag` and
/// off-diagonal `offdiag` (MRRR algorithm, LAPACK `dstemr`).
pub fn tridiagonal_eigen(diag: &[f64], offdiag: &[f64], range: Range) -> Result<EigenPairs> {
    let n = diag.len();
    if offdiag.len() + 1 != n {
        return Err(Error::InvalidArgument(
            "off-diagonal length must be one less than diagonal".into(),
        ));
    }
    if n == 0 {
        return Ok(EigenPairs {
            dim: 0,
            values: vec![],
            vectors: vec![],
        });
    }
    let ni = n as i32;
    let (jobz, rng, vl, vu) = match range {
        Range::All => (b'V', b'A', 0.0, 0.0),
        Range::Values(lo, hi) => (b'V', b'V', lo, hi),
    };

    let mut d = diag.to_vec();
    // dstemr needs an e array of length n.
    let mut e = offdiag.to_vec();
    e.push(0.0);
    let mut m = 0i32;
    let mut w = vec![0.0; n];
    let mut isuppz = vec![0i32; 2 * n];
    let mut tryrac = 1i32;
    let mut info = 0i32;

    // Column count query for value ranges.
    let ncols = match range {
        Range::All => n,
        Range::Values(..) => {
            let mut z = [0.0f64; 1];
            let mut work = [0.0f64; 1];
            let mut iwork = [0i32; 1];
            let (mut dq, mut eq) = (d.clone(), e.clone());
            unsafe {
                lapack_sys::dstemr_(
                    &jobz as *const u8 as *const c_char,
                    &rng as *const u8 as *const c_char,
                    &ni,
                    dq.as_mut_ptr(),
                    eq.as_mut_ptr(),
                    &vl,
                    &vu,
                    &0,
                    &0,
                    &mut m,
                    w.as_mut_ptr(),
                    z.as_mut_ptr(),
                    &ni,
                    &-1,
                    isuppz.as_mut_ptr(),
                    &mut tryrac,
                    work.as_mut_ptr(),
                    &-1,
                    iwork.as_mut_ptr(),
                    &-1,
                    &mut info,
                );
            }
            if info != 0 {
                return Err(Error::Lapack {
                    routine: "dstemr",
                    info,
                });
            }
            (z[0] as usize).clamp(1, n)
        }
    };

    let mut z = vec![0.0f64; n * ncols];
    let lwork = 18 * n as i32;
    let liwork = 10 * n as i32;
    let mut work = vec![0.0f64; lwork as usize];
    let mut iwork = vec![0i32; liwork as usize];
    let nzc = ncols as i32;
    tryrac = 1;
    unsafe {
        lapack_sys::dstemr_(
            &jobz as *const u8 as *const c_char,
            &rng as *const u8 as *const c_char,
            &ni,
            d.as_mut_ptr(),
            e.as_mut_ptr(),
            &vl,
            &vu,
            &0,
            &0,
            &mut m,
            w.as_mut_ptr(),
            z.as_mut_ptr(),
            &ni,
            &nzc,
            isuppz.as_mut_ptr(),
            &mut tryrac,
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "dstemr",
            info,
        });
    }
    let m = m as usize;
    w.truncate(m);
    z.truncate(n * m);
    Ok(EigenPairs {
        dim: n,
        values: w,
        vectors: z,
    })
}

/// Eigenvalues (ascending) of a small dense symmetric matrix given in
/// column-major order (LAPACK `dsyev`).
pub fn symmetric_eigenvalues(matrix: &[f64], n: usize) -> Result<Vec<f64>> {
    if matrix.len() != n * n {
        return Err(Error::InvalidArgument("matrix is not n x n".into()));
    }
    if n == 0 {
        return Ok(vec![]);
    }
    let ni = n as i32;
    let mut a = matrix.to_vec();
    let mut w = vec![0.0; n];
    let lwork = (3 * n).max(1) as i32 * 4;
    let mut work = vec![0.0; lwork as usize];
    let mut info = 0;
    unsafe {
        lapack_sys::dsyev_(
            &b'N' as *const u8 as *const c_char,
            &b'U' as *const u8 as *const c_char,
            &ni,
            a.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "dsyev", info });
    }
    Ok(w)
}

/// Solves `(T - z) x = rhs` for the symmetric tridiagonal `T`
/// (Thomas algorithm; `T - z` is non-Hermitian but diagonally stable for
/// `Im z != 0`).
pub fn tridiagonal_solve(diag: &[f64], offdiag: &[f64], z: Complex64, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = diag.len();
    if offdiag.len() + 1 != n || rhs.len() != n {
        return Err(Error::InvalidArgument("inconsistent tridiagonal system".into()));
    }
    let mut c_prime = vec![Complex64::new(0.0, 0.0); n];
    let mut d_prime = vec![Complex64::new(0.0, 0.0); n];
    let mut pivot = Complex64::new(diag[0], 0.0) - z;
    for i in 0..n {
        if i > 0 {
            pivot = Complex64::new(diag[i], 0.0) - z - c_prime[i - 1] * offdiag[i - 1];
        }
        if pivot.norm() == 0.0 {
            return Err(Error::InvalidArgument("singular tridiagonal system".into()));
        }
        if i + 1 < n {
            c_prime[i] = Complex64::new(offdiag[i], 0.0) / pivot;
        }
        let prev = if i > 0 {
            d_prime[i - 1] * offdiag[i - 1]
        } else {
            Complex64::new(0.0, 0.0)
        };
        d_prime[i] = (rhs[i] - prev) / pivot;
    }
    let mut x = d_prime;
    for i in (0..n.saturating_sub(1)).rev() {
        let next = x[i + 1];
        x[i] -= c_prime[i] * next;
    }
    Ok(x)
}
