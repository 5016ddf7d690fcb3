//! Band structure of the background: Floquet discriminant, band edges and
//! transfer matrices.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigenvalues;
use crate::model::Background;

/// Relative width of the excluded neighbourhood around each band edge.
pub const EDGE_MARGIN: f64 = 1e-6;

/// Imaginary offset used to pick branches by continuity from `C+`.
pub const PROBE_EPS: f64 = 1e-8;

/// 2x2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Mat2([[one, zero], [zero, one]])
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    /// Both eigenvalues, `(tr ± sqrt(tr^2 - 4 det)) / 2`.
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let tr = self.trace();
        let disc = (tr * tr - self.det() * 4.0).sqrt();
        // Avoid cancellation: compute the larger root first.
        let big = if (tr + disc).norm() >= (tr - disc).norm() {
            (tr + disc) * 0.5
        } else {
            (tr - disc) * 0.5
        };
        let small = if big.norm() == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            self.det() / big
        };
        [big, small]
    }

    /// An eigenvector for eigenvalue `x`.
    pub fn eigenvector(&self, x: Complex64) -> [Complex64; 2] {
        let m = &self.0;
        let v1 = [m[0][1], x - m[0][0]];
        let v2 = [x - m[1][1], m[1][0]];
        let n1 = v1[0].norm_sqr() + v1[1].norm_sqr();
        let n2 = v2[0].norm_sqr() + v2[1].norm_sqr();
        if n1 >= n2 {
            v1
        } else {
            v2
        }
    }
}

/// One-step transfer matrix at site `k`:
/// `(u_{k+1}, u_k) = T_k (u_k, u_{k-1})` for solutions of
/// `a_k u_{k+1} + a_{k-1} u_{k-1} + b_k u_k = z u_k`.
pub fn transfer(a_prev: f64, a: f64, b: f64, z: Complex64) -> Mat2 {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    Mat2([[(z - b) / a, Complex64::new(-a_prev / a, 0.0)], [one, zero]])
}

/// Transfer matrix over one period starting at site `start`, built from
/// `coeff(k) = (a_k, b_k)`.
pub fn monodromy(coeff: impl Fn(i64) -> (f64, f64), start: i64, period: usize, z: Complex64) -> Mat2 {
    let mut m = Mat2::identity();
    for k in start..start + period as i64 {
        let (a, b) = coeff(k);
        let a_prev = coeff(k - 1).0;
        m = transfer(a_prev, a, b, z).mul(&m);
    }
    m
}

/// Floquet discriminant `Δ(λ)`: trace of the one-period transfer matrix.
pub fn discriminant(bg: &Background, z: Complex64) -> Complex64 {
    monodromy(|k| bg.coefficient(k), 0, bg.period(), z).trace()
}

/// Spectral bands `[lo, hi]` of the background, in increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct Bands {
    bands: Vec<(f64, f64)>,
}

impl Bands {
    pub fn of(bg: &Background) -> Result<Self> {
        let bg = bg.canonical();
        let bands = match &bg {
            Background::Free => unreachable!("canonical form has no Free"),
            Background::Constant { a, b } => vec![(b - 2.0 * a, b + 2.0 * a)],
            Background::Periodic { .. } => {
                let p = bg.period();
                let mut edges = Vec::with_capacity(2 * p);
                for sign in [1.0, -1.0] {
                    // Bloch matrix at quasi-momentum 0 (sign +1) or π (sign -1).
                    let mut h = vec![0.0; p * p];
                    for j in 0..p {
                        let (a, b) = bg.coefficient(j as i64);
                        h[j + j * p] += b;
                        let next = (j + 1) % p;
                        let weight = if next == 0 { sign * a } else { a };
                        h[j + next * p] += weight;
                        h[next + j * p] += weight;
                    }
                    edges.extend(symmetric_eigenvalues(&h, p)?);
                }
                edges.sort_by(f64::total_cmp);
                edges.chunks(2).map(|c| (c[0], c[1])).collect()
            }
        };
        Ok(Bands { bands })
    }

    pub fn bands(&self) -> &[(f64, f64)] {
        &self.bands
    }

    pub fn edges(&self) -> impl Iterator<Item = f64> + '_ {
        self.bands.iter().flat_map(|&(lo, hi)| [lo, hi])
    }

    /// Errors with [`Error::BandEdge`] when `λ` is within
    /// `EDGE_MARGIN * width` of an edge of some band.
    pub fn guard(&self, lambda: f64) -> Result<()> {
        for &(lo, hi) in &self.bands {
            let margin = EDGE_MARGIN * (hi - lo).max(f64::EPSILON);
            for edge in [lo, hi] {
                if (lambda - edge).abs() < margin {
                    return Err(Error::BandEdge { lambda, edge });
                }
            }
        }
        Ok(())
    }

    /// True if `λ` lies strictly inside a band (margins not applied).
    pub fn contains(&self, lambda: f64) -> bool {
        self.bands.iter().any(|&(lo, hi)| lambda > lo && lambda < hi)
    }

    /// Interior sub-interval of each band with the edge margins removed.
    pub fn interiors(&self) -> Vec<(f64, f64)> {
        self.bands
            .iter()
            .filter(|&&(lo, hi)| hi > lo)
            .map(|&(lo, hi)| {
                let m = EDGE_MARGIN * (hi - lo) * (1.0 + 1e-6);
                (lo + m, hi - m)
            })
            .collect()
    }
}

/// Group velocity (sites per unit time) of the background at an in-band
/// energy: `p · |dλ/dθ|` with `Δ(λ) = 2 cos θ`.
pub fn group_velocity(bg: &Background, lambda: f64) -> f64 {
    let p = bg.period() as f64;
    let delta = |x: f64| discriminant(bg, Complex64::new(x, 0.0)).re;
    let h = 1e-6;
    let slope = (delta(lambda + h) - delta(lambda - h)) / (2.0 * h);
    let d = delta(lambda);
    let sin_theta = (1.0 - 0.25 * d * d).max(0.0).sqrt();
    if slope == 0.0 {
        return 0.0;
    }
    p * 2.0 * sin_theta / slope.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_band() {
        let b = Bands::of(&Background::Constant { a: 0.5, b: 1.0 }).unwrap();
        assert_eq!(b.bands(), &[(0.0, 2.0)]);
        assert!(b.guard(1.0).is_ok());
        assert!(matches!(b.guard(2.0 - 1e-7), Err(Error::BandEdge { .. })));
        assert!(b.guard(2.0 - 1e-5).is_ok());
    }

    #[test]
    fn period_two_edges() {
        // a = (1, 0.5), b = 0: bands ±[0.5, 1.5].
        let bg = Background::Periodic {
            a: vec![1.0, 0.5],
            b: vec![0.0, 0.0],
            phase: 0,
        };
        let bands = Bands::of(&bg).unwrap();
        let expect = [(-1.5, -0.5), (0.5, 1.5)];
        for (got, want) in bands.bands().iter().zip(expect) {
            assert!(
                (got.0 - want.0).abs() < 1e-14 && (got.1 - want.1).abs() < 1e-14,
                "{got:?}"
            );
        }
        for e in bands.edges() {
            let d = discriminant(&bg, Complex64::new(e, 0.0));
            assert!((d.re.abs() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn free_group_velocity() {
        let v = group_velocity(&Background::Free, 0.0);
        assert!((v - 2.0).abs() < 1e-8);
        let v = group_velocity(&Background::Free, 1.0);
        assert!((v - 3f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn monodromy_has_unit_determinant() {
        let bg = Background::Periodic {
            a: vec![1.0, 0.5, 2.0],
            b: vec![0.2, -0.3, 0.0],
            phase: 1,
        };
        let m = monodromy(|k| bg.coefficient(k), 5, 3, Complex64::new(0.3, 0.1));
        assert!((m.det() - 1.0).norm() < 1e-13);
    }
}
