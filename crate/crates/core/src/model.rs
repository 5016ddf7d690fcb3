//! Bi-infinite Jacobi coefficient rules.
//!
//! A [`JacobiSpec`] describes the operator
//!
//! ```text
//! (J u)_k = a_k u_{k+1} + a_{k-1} u_{k-1} + b_k u_k
//! ```
//!
//! on the whole line. Coefficients come from a single background (free,
//! constant or periodic) that is overridden on a finite window.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::floquet::Bands;

/// Coefficient rule far away from the perturbation window.
#[derive(Debug, Clone, PartialEq)]
pub enum Background {
    /// `a_k = 1`, `b_k = 0`. Canonicalizes to `Constant { a: 1, b: 0 }`.
    Free,
    Constant {
        a: f64,
        b: f64,
    },
    /// `a_k = a[(k - phase) mod p]`, same for `b`.
    Periodic {
        a: Vec<f64>,
        b: Vec<f64>,
        phase: usize,
    },
}

impl Background {
    /// Free maps to `Constant(1, 0)`, period one maps to `Constant`, and
    /// periodic phases are reduced modulo the period.
    pub fn canonical(&self) -> Background {
        match self {
            Background::Free => Background::Constant { a: 1.0, b: 0.0 },
            Background::Constant { a, b } => Background::Constant { a: *a, b: *b },
            Background::Periodic { a, b, phase } => {
                if a.len() == 1 && b.len() == 1 {
                    Background::Constant { a: a[0], b: b[0] }
                } else {
                    let p = a.len().max(1);
                    Background::Periodic {
                        a: a.clone(),
                        b: b.clone(),
                        phase: phase % p,
                    }
                }
            }
        }
    }

    pub fn period(&self) -> usize {
        match self {
            Background::Free | Background::Constant { .. } => 1,
            Background::Periodic { a, .. } => a.len(),
        }
    }

    /// `(a_k, b_k)` of the unperturbed background.
    pub fn coefficient(&self, k: i64) -> (f64, f64) {
        match self {
            Background::Free => (1.0, 0.0),
            Background::Constant { a, b } => (*a, *b),
            Background::Periodic { a, b, phase } => {
                let p = a.len() as i64;
                let r = (k - *phase as i64).rem_euclid(p) as usize;
                (a[r], b[r])
            }
        }
    }

    /// Largest off-diagonal entry.
    pub fn max_a(&self) -> f64 {
        match self {
            Background::Free => 1.0,
            Background::Constant { a, .. } => *a,
            Background::Periodic { a, .. } => a.iter().copied().fold(f64::MIN, f64::max),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Background::Free => Ok(()),
            Background::Constant { a, b } => check_entries(&[*a], &[*b], 0),
            Background::Periodic { a, b, phase } => {
                if a.is_empty() || a.len() != b.len() {
                    return Err(Error::InvalidPeriod {
                        a_len: a.len(),
                        b_len: b.len(),
                    });
                }
                check_entries(a, b, *phase as i64)
            }
        }
    }
}

fn check_entries(a: &[f64], b: &[f64], first_site: i64) -> Result<()> {
    for (i, &v) in a.iter().enumerate() {
        let site = first_site + i as i64;
        if !v.is_finite() {
            return Err(Error::NonFiniteEntry { site });
        }
        if v <= 0.0 {
            return Err(Error::NonPositiveCoefficient { site });
        }
    }
    for (i, &v) in b.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteEntry {
                site: first_site + i as i64,
            });
        }
    }
    Ok(())
}

/// Finite override window. `a[i]` replaces `a_{offset+i}`, `b[i]` replaces
/// `b_{offset+i}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Perturbation {
    pub offset: i64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Perturbation {
    pub fn is_empty(&self) -> bool {
        self.a.is_empty() && self.b.is_empty()
    }

    /// Inclusive site range touched by the overrides.
    pub fn window(&self) -> Option<(i64, i64)> {
        let len = self.a.len().max(self.b.len());
        (len > 0).then(|| (self.offset, self.offset + len as i64 - 1))
    }
}

/// A validated whole-line Jacobi operator.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiSpec {
    background: Background,
    perturbation: Perturbation,
    bands: Bands,
}

impl JacobiSpec {
    /// Validates and canonicalizes.
    pub fn new(background: Background, perturbation: Perturbation) -> Result<Self> {
        background.validate()?;
        check_entries(&perturbation.a, &perturbation.b, perturbation.offset)?;
        let perturbation = if perturbation.is_empty() {
            Perturbation::default()
        } else {
            perturbation
        };
        let background = background.canonical();
        let bands = Bands::of(&background)?;
        Ok(JacobiSpec {
            background,
            perturbation,
            bands,
        })
    }

    pub fn free() -> Self {
        JacobiSpec::new(Background::Free, Perturbation::default()).expect("free chain is valid")
    }

    /// Free chain with `b_k` replaced by `potential` on `offset..`.
    pub fn free_with_potential(offset: i64, potential: &[f64]) -> Result<Self> {
        JacobiSpec::new(
            Background::Free,
            Perturbation {
                offset,
                a: Vec::new(),
                b: potential.to_vec(),
            },
        )
    }

    pub fn background(&self) -> &Background {
        &self.background
    }

    pub fn perturbation(&self) -> &Perturbation {
        &self.perturbation
    }

    /// Spectral bands of the background (the a.c. spectrum of the operator).
    pub fn bands(&self) -> &Bands {
        &self.bands
    }

    /// Inclusive range of perturbed sites, if any.
    pub fn window(&self) -> Option<(i64, i64)> {
        self.perturbation.window()
    }

    pub fn coefficient(&self, k: i64) -> (f64, f64) {
        let (mut a, mut b) = self.background.coefficient(k);
        let i = k - self.perturbation.offset;
        if i >= 0 {
            let i = i as usize;
            if let Some(&v) = self.perturbation.a.get(i) {
                a = v;
            }
            if let Some(&v) = self.perturbation.b.get(i) {
                b = v;
            }
        }
        (a, b)
    }

    pub fn a(&self, k: i64) -> f64 {
        self.coefficient(k).0
    }

    pub fn b(&self, k: i64) -> f64 {
        self.coefficient(k).1
    }

    /// Largest off-diagonal entry anywhere on the line.
    pub fn max_a(&self) -> f64 {
        self.perturbation
            .a
            .iter()
            .copied()
            .fold(self.background.max_a(), f64::max)
    }

    /// Restriction to sites `-n..=n` with Dirichlet ends.
    pub fn truncate(&self, n: usize) -> Result<TruncatedOperator> {
        if n == 0 {
            return Err(Error::InvalidArgument("truncation size must be at least 1".into()));
        }
        let half = n as i64;
        if let Some((start, end)) = self.window() {
            if start < -half + 1 || end > half - 1 {
                return Err(Error::WindowTooSmall { start, end });
            }
        }
        let diag = (-half..=half).map(|k| self.b(k)).collect();
        let offdiag = (-half..half).map(|k| self.a(k)).collect();
        Ok(TruncatedOperator {
            half_width: n,
            diag,
            offdiag,
        })
    }
}

/// Validates a spec built from raw parts.
pub fn validate(background: &Background, perturbation: &Perturbation) -> Result<()> {
    JacobiSpec::new(background.clone(), perturbation.clone()).map(|_| ())
}

/// Finite section of a Jacobi operator on sites `-N..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    half_width: usize,
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl TruncatedOperator {
    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `b_{-N..=N}`.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// `a_{-N..N-1}`; entry `i` couples rows `i` and `i + 1`.
    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// Array index of site `k`.
    pub fn index(&self, site: i64) -> usize {
        (site + self.half_width as i64) as usize
    }

    pub fn site(&self, index: usize) -> i64 {
        index as i64 - self.half_width as i64
    }

    /// `J x` for complex `x`.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.diag.len();
        let mut y: Vec<Complex64> = x.iter().zip(&self.diag).map(|(v, d)| v * d).collect();
        for i in 0..n.saturating_sub(1) {
            let a = self.offdiag[i];
            y[i] += x[i + 1] * a;
            y[i + 1] += x[i] * a;
        }
        y
    }
}

/// Which half-line (or which channel).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn label(self) -> &'static str {
        match self {
            Side::Left => "l",
            Side::Right => "r",
        }
    }
}

/// Side of approach for real boundary values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Approach {
    /// `λ + i0`
    Above,
    /// `λ - i0`, always obtained by conjugating the `λ + i0` value.
    Below,
}

/// Point at which a Herglotz function is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryPoint {
    UpperHalfPlane(Complex64),
    RealLimit { lambda: f64, approach: Approach },
}

impl BoundaryPoint {
    pub fn upper(z: Complex64) -> Result<Self> {
        if !z.re.is_finite() || !z.im.is_finite() || z.im <= 0.0 {
            return Err(Error::InvalidPoint(format!("{z} is not in the open upper half-plane")));
        }
        Ok(BoundaryPoint::UpperHalfPlane(z))
    }

    /// `λ + i0`.
    pub fn above(lambda: f64) -> Self {
        BoundaryPoint::RealLimit {
            lambda,
            approach: Approach::Above,
        }
    }

    /// `λ - i0`.
    pub fn below(lambda: f64) -> Self {
        BoundaryPoint::RealLimit {
            lambda,
            approach: Approach::Below,
        }
    }

    /// The spectral parameter used for the actual computation: `z` itself or
    /// the real `λ` (for both approaches).
    pub fn z(&self) -> Complex64 {
        match *self {
            BoundaryPoint::UpperHalfPlane(z) => z,
            BoundaryPoint::RealLimit { lambda, .. } => Complex64::new(lambda, 0.0),
        }
    }

    pub fn is_below(&self) -> bool {
        matches!(
            self,
            BoundaryPoint::RealLimit {
                approach: Approach::Below,
                ..
            }
        )
    }

    /// The same point approached from above.
    pub fn as_above(&self) -> Self {
        match *self {
            BoundaryPoint::RealLimit { lambda, .. } => BoundaryPoint::above(lambda),
            p => p,
        }
    }
}

/// Draws a finite perturbation of `background`: window length in
/// `1..=max_window`, contained in `[-4, 4]` when `max_window <= 8`, with
/// `a` entries in `[0.5, 2]` and `b` entries in `[-1, 1]`.
pub fn random_perturbation<R: Rng>(rng: &mut R, background: Background, max_window: usize) -> JacobiSpec {
    let len = rng.gen_range(1..=max_window.max(1));
    let lo = -4i64;
    let hi = (4 - len as i64 + 1).max(lo);
    let offset = rng.gen_range(lo..=hi);
    let a = (0..len).map(|_| rng.gen_range(0.5..=2.0)).collect();
    let b = (0..len).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    JacobiSpec::new(background, Perturbation { offset, a, b }).expect("random entries are positive and finite")
}
