//! Weyl m-functions of the half-line restrictions.
//!
//! For a cut at site `n`,
//!
//! ```text
//! m_n^(r)(z) = <δ_{n+1}, (J_n^(r) - z)^{-1} δ_{n+1}>   on [n+1, ∞)
//! m_n^(l)(z) = <δ_{n-1}, (J_n^(l) - z)^{-1} δ_{n-1}>   on (-∞, n-1]
//! ```
//!
//! Tails beyond the perturbation window are closed-form fixed points of the
//! periodic stripping map; the window itself is handled by stripping one
//! site at a time. Boundary values `λ - i0` are conjugates of `λ + i0`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::floquet::{Mat2, PROBE_EPS};
use crate::linalg::tridiagonal_solve;
use crate::model::{Background, BoundaryPoint, JacobiSpec, Side};

/// Stripping denominators below this modulus are treated as poles.
pub const POLE_THRESHOLD: f64 = 1e-14;

/// An m-function value together with where it was evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HerglotzValue {
    pub value: Complex64,
    pub point: BoundaryPoint,
    pub side: Side,
    pub cut_site: i64,
}

impl HerglotzValue {
    /// Reflection principle: the value at `λ - i0` from the one at `λ + i0`.
    fn reflected(self, point: BoundaryPoint) -> Self {
        HerglotzValue {
            value: self.value.conj(),
            point,
            ..self
        }
    }
}

/// One stripping step: `1 / (b - z - a^2 m_next)`.
pub fn strip(m_next: Complex64, a: f64, b: f64, z: Complex64) -> Result<Complex64> {
    strip_at(None, m_next, a, b, z)
}

fn strip_at(site: Option<i64>, m_next: Complex64, a: f64, b: f64, z: Complex64) -> Result<Complex64> {
    let denom = Complex64::new(b, 0.0) - z - m_next * (a * a);
    if denom.norm() < POLE_THRESHOLD {
        return Err(Error::PoleHit { site });
    }
    Ok(denom.inv())
}

/// Möbius matrix of one stripping step, `m ↦ 1 / (b - z - a² m)`.
fn strip_matrix(a: f64, b: f64, z: Complex64) -> Mat2 {
    Mat2([
        [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        [Complex64::new(-a * a, 0.0), Complex64::new(b, 0.0) - z],
    ])
}

/// Both fixed points of the Möbius map `m ↦ (A m + B) / (C m + D)`, i.e. the
/// roots of `C m² + (D - A) m - B = 0`. A vanishing `C` leaves one finite root.
fn fixed_points(q: &Mat2) -> Vec<Complex64> {
    let [[a, b], [c, d]] = q.0;
    let lin = d - a;
    let scale = a.norm() + b.norm() + d.norm();
    if c.norm() <= 1e-15 * scale {
        return if lin.norm() > 0.0 { vec![b / lin] } else { vec![] };
    }
    let s = (lin * lin + b * c * 4.0).sqrt();
    // Pick the sign that avoids cancellation.
    let qq = if (lin.conj() * s).re >= 0.0 {
        (lin + s) * -0.5
    } else {
        (lin - s) * -0.5
    };
    if qq.norm() == 0.0 {
        return vec![Complex64::new(0.0, 0.0)];
    }
    vec![qq / c, -b / qq]
}

/// Stripping map over one full period of the background, for the half-line
/// that starts (right) or ends (left) at `site`.
fn period_map(bg: &Background, side: Side, site: i64, z: Complex64) -> Mat2 {
    let p = bg.period() as i64;
    let mut q = Mat2::identity();
    match side {
        Side::Right => {
            // m_s = A_s A_{s+1} ... A_{s+p-1} · m_{s+p}
            for k in site..site + p {
                let (a, b) = bg.coefficient(k);
                q = q.mul(&strip_matrix(a, b, z));
            }
        }
        Side::Left => {
            // l_s = B_s B_{s-1} ... B_{s-p+1} · l_{s-p}, hopping a_{s-1} in B_s
            for k in (site - p + 1..=site).rev() {
                let b = bg.coefficient(k).1;
                let a = bg.coefficient(k - 1).0;
                q = q.mul(&strip_matrix(a, b, z));
            }
        }
    }
    q
}

fn herglotz_root(roots: &[Complex64]) -> Result<Complex64> {
    let upper: Vec<Complex64> = roots.iter().copied().filter(|r| r.im > 0.0).collect();
    match upper.as_slice() {
        [r] => Ok(*r),
        _ => Err(Error::BranchFailure(format!(
            "expected exactly one root in C+, got {roots:?}"
        ))),
    }
}

fn tail_value(bg: &Background, side: Side, site: i64, z: Complex64, real_axis: bool) -> Result<Complex64> {
    let roots = fixed_points(&period_map(bg, side, site, z));
    if !real_axis {
        return herglotz_root(&roots);
    }
    if roots.iter().any(|r| r.im != 0.0) {
        // Inside a band the two roots are a conjugate pair.
        return herglotz_root(&roots);
    }
    // Gap: continue from λ + iε and keep the closer real root.
    let probe_z = z + Complex64::new(0.0, PROBE_EPS);
    let probe = herglotz_root(&fixed_points(&period_map(bg, side, site, probe_z)))?;
    roots
        .iter()
        .copied()
        .min_by(|x, y| (x - probe).norm().total_cmp(&(y - probe).norm()))
        .ok_or_else(|| Error::BranchFailure("no finite fixed point in gap".into()))
}

/// m-function of the unperturbed background on the half-line starting at
/// `site` (right) or ending at `site` (left).
pub fn tail_m(bg: &Background, side: Side, site: i64, point: BoundaryPoint) -> Result<HerglotzValue> {
    let bg = bg.canonical();
    let cut_site = match side {
        Side::Right => site - 1,
        Side::Left => site + 1,
    };
    if point.is_below() {
        return tail_m(&bg, side, site, point.as_above()).map(|m| m.reflected(point));
    }
    let real_axis = matches!(point, BoundaryPoint::RealLimit { .. });
    if let BoundaryPoint::RealLimit { lambda, .. } = point {
        crate::floquet::Bands::of(&bg)?.guard(lambda)?;
    }
    let value = tail_value(&bg, side, site, point.z(), real_axis)?;
    Ok(HerglotzValue {
        value,
        point,
        side,
        cut_site,
    })
}

fn guard(spec: &JacobiSpec, point: &BoundaryPoint) -> Result<()> {
    if let BoundaryPoint::RealLimit { lambda, .. } = *point {
        spec.bands().guard(lambda)?;
    }
    Ok(())
}

/// `m_n^(r)` at `point`.
pub fn m_right(spec: &JacobiSpec, n: i64, point: BoundaryPoint) -> Result<HerglotzValue> {
    if point.is_below() {
        return m_right(spec, n, point.as_above()).map(|m| m.reflected(point));
    }
    guard(spec, &point)?;
    let z = point.z();
    let real_axis = matches!(point, BoundaryPoint::RealLimit { .. });
    let first = n + 1;
    let tail_start = spec.window().map_or(first, |(_, end)| first.max(end + 1));
    let mut m = tail_value(spec.background(), Side::Right, tail_start, z, real_axis)?;
    for s in (first..tail_start).rev() {
        let (a, b) = spec.coefficient(s);
        m = strip_at(Some(s), m, a, b, z)?;
    }
    Ok(HerglotzValue {
        value: m,
        point,
        side: Side::Right,
        cut_site: n,
    })
}

/// `m_n^(l)` at `point`.
pub fn m_left(spec: &JacobiSpec, n: i64, point: BoundaryPoint) -> Result<HerglotzValue> {
    if point.is_below() {
        return m_left(spec, n, point.as_above()).map(|m| m.reflected(point));
    }
    guard(spec, &point)?;
    let z = point.z();
    let real_axis = matches!(point, BoundaryPoint::RealLimit { .. });
    let last = n - 1;
    let tail_end = spec.window().map_or(last, |(start, _)| last.min(start - 1));
    let mut m = tail_value(spec.background(), Side::Left, tail_end, z, real_axis)?;
    for s in tail_end + 1..=last {
        let b = spec.b(s);
        let a = spec.a(s - 1);
        m = strip_at(Some(s), m, a, b, z)?;
    }
    Ok(HerglotzValue {
        value: m,
        point,
        side: Side::Left,
        cut_site: n,
    })
}

/// m-function of either side.
pub fn m_side(spec: &JacobiSpec, side: Side, n: i64, point: BoundaryPoint) -> Result<HerglotzValue> {
    match side {
        Side::Left => m_left(spec, n, point),
        Side::Right => m_right(spec, n, point),
    }
}

/// Brute-force m-function: resolvent corner element of the half-line cut to
/// `size` sites with a Dirichlet end, by a direct tridiagonal solve.
pub fn m_oracle_truncated(spec: &JacobiSpec, side: Side, n: i64, z: Complex64, size: usize) -> Result<Complex64> {
    if z.im.is_nan() || z.im <= 0.0 {
        return Err(Error::InvalidPoint(format!("{z} is not in the upper half-plane")));
    }
    if size < 2 {
        return Err(Error::InvalidArgument(
            "half-line truncation needs at least two sites".into(),
        ));
    }
    let len = size as i64;
    let (lo, hi) = match side {
        Side::Right => (n + 1, n + len),
        Side::Left => (n - len, n - 1),
    };
    if let Some((start, end)) = spec.window() {
        // Only the part of the window on this side of the cut matters.
        let (ws, we) = match side {
            Side::Right => (start.max(n + 1), end),
            Side::Left => (start, end.min(n - 1)),
        };
        let reaches_far_end = match side {
            Side::Right => we > hi - 1,
            Side::Left => ws < lo + 1,
        };
        if ws <= we && reaches_far_end {
            return Err(Error::WindowTooSmall { start, end });
        }
    }
    let diag: Vec<f64> = (lo..=hi).map(|k| spec.b(k)).collect();
    let offdiag: Vec<f64> = (lo..hi).map(|k| spec.a(k)).collect();
    let mut rhs = vec![Complex64::new(0.0, 0.0); size];
    let corner = match side {
        Side::Right => 0,
        Side::Left => size - 1,
    };
    rhs[corner] = Complex64::new(1.0, 0.0);
    let x = tridiagonal_solve(&diag, &offdiag, z, &rhs)?;
    Ok(x[corner])
}

/// Density `Im m(λ + i0) / π` of the a.c. part of the half-line spectral
/// measure.
pub fn ac_density(m: &HerglotzValue) -> Result<f64> {
    match m.point {
        BoundaryPoint::RealLimit {
            approach: crate::model::Approach::Above,
            ..
        } => Ok((m.value.im / PI).max(0.0)),
        _ => Err(Error::InvalidPoint("a.c. density needs a λ + i0 boundary value".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Perturbation;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    /// Closed-form constant-background m-function with the branch that is
    /// asymptotic to -1/z at infinity.
    fn constant_closed_form(a: f64, b: f64, z: Complex64) -> Complex64 {
        let w = Complex64::new(b, 0.0) - z;
        let r = (w * w - 4.0 * a * a).sqrt();
        let roots = [(w + r) / (2.0 * a * a), (w - r) / (2.0 * a * a)];
        *roots.iter().find(|m| m.im > 0.0).unwrap()
    }

    #[test]
    fn strip_examples() {
        assert!(close(
            strip(c(0.0, 1.0), 1.0, 1.0, c(0.0, 0.0)).unwrap(),
            c(0.5, 0.5),
            1e-15
        ));
        assert!(close(
            strip(c(0.0, 1.0), 1.0, 0.0, c(0.0, 0.0)).unwrap(),
            c(0.0, 1.0),
            1e-15
        ));
        assert!(close(
            strip(c(0.0, 2.0), 0.5, 0.0, c(0.0, 0.0)).unwrap(),
            c(0.0, 2.0),
            1e-15
        ));
        assert_eq!(
            strip(c(1.0, 0.0), 1.0, 1.0, c(0.0, 0.0)),
            Err(Error::PoleHit { site: None })
        );
    }

    #[test]
    fn constant_tails() {
        let free = Background::Free;
        let m = tail_m(&free, Side::Right, 1, BoundaryPoint::above(0.0)).unwrap();
        assert!(close(m.value, c(0.0, 1.0), 1e-15));
        assert_eq!(m.cut_site, 0);

        let half = Background::Constant { a: 0.5, b: 0.0 };
        let m = tail_m(&half, Side::Left, -1, BoundaryPoint::above(0.0)).unwrap();
        assert!(close(m.value, c(0.0, 2.0), 1e-14));

        let z = c(0.0, 0.01);
        let m = tail_m(&free, Side::Right, 1, BoundaryPoint::upper(z).unwrap()).unwrap();
        assert!((m.value.im - 0.9950125).abs() < 5e-8 && m.value.re.abs() < 1e-15);
        assert!(close(m.value, constant_closed_form(1.0, 0.0, z), 1e-14));
    }

    #[test]
    fn gap_value_is_real_decaying_root() {
        // λ = 3 lies above the free band: m = (-3 + sqrt(5)) / 2.
        let m = tail_m(&Background::Free, Side::Right, 1, BoundaryPoint::above(3.0)).unwrap();
        assert_eq!(m.value.im, 0.0);
        assert!((m.value.re - (-3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-14);
        let m = tail_m(&Background::Free, Side::Right, 1, BoundaryPoint::above(-3.0)).unwrap();
        assert!((m.value.re - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn band_edge_is_refused() {
        let err = tail_m(&Background::Free, Side::Right, 1, BoundaryPoint::above(2.0)).unwrap_err();
        assert!(matches!(err, Error::BandEdge { .. }));
        let err = m_right(&JacobiSpec::free(), 0, BoundaryPoint::above(-2.0 + 1e-7)).unwrap_err();
        assert!(matches!(err, Error::BandEdge { .. }));
    }

    #[test]
    fn free_m_functions() {
        let free = JacobiSpec::free();
        assert!(close(
            m_right(&free, 0, BoundaryPoint::above(0.0)).unwrap().value,
            c(0.0, 1.0),
            1e-15
        ));
        assert!(close(
            m_left(&free, 0, BoundaryPoint::above(0.0)).unwrap().value,
            c(0.0, 1.0),
            1e-15
        ));
        let m = m_right(&free, 0, BoundaryPoint::above(1.0)).unwrap().value;
        assert!(close(m, c(-0.5, 3f64.sqrt() / 2.0), 1e-15));
        assert!((m.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn one_stripping_step() {
        let spec = JacobiSpec::free_with_potential(1, &[1.0]).unwrap();
        let m = m_right(&spec, 0, BoundaryPoint::above(0.0)).unwrap();
        assert!(close(m.value, c(0.5, 0.5), 1e-15));

        let spec = JacobiSpec::free_with_potential(0, &[1.0]).unwrap();
        let m = m_left(&spec, 1, BoundaryPoint::above(0.0)).unwrap();
        assert!(close(m.value, c(0.5, 0.5), 1e-15));
    }

    #[test]
    fn below_is_conjugate() {
        let spec = JacobiSpec::free_with_potential(-1, &[0.3, -0.7]).unwrap();
        for lambda in [-1.5, 0.2, 1.1] {
            let up = m_left(&spec, 2, BoundaryPoint::above(lambda)).unwrap();
            let down = m_left(&spec, 2, BoundaryPoint::below(lambda)).unwrap();
            assert_eq!(down.value, up.value.conj());
            assert!(down.point.is_below());
        }
    }

    #[test]
    fn oracle_examples() {
        let free = JacobiSpec::free();
        let m = m_oracle_truncated(&free, Side::Right, 0, c(0.0, 0.01), 4000).unwrap();
        assert!(close(m, c(0.0, 0.9950125), 1e-6));
        let m = m_oracle_truncated(&free, Side::Right, 0, c(0.0, 1.0), 200).unwrap();
        assert!(close(m, c(0.0, (5f64.sqrt() - 1.0) / 2.0), 1e-8));

        let spec = JacobiSpec::free_with_potential(1, &[1.0]).unwrap();
        let z = c(0.0, 0.01);
        let oracle = m_oracle_truncated(&spec, Side::Right, 0, z, 4000).unwrap();
        let exact = m_right(&spec, 0, BoundaryPoint::upper(z).unwrap()).unwrap().value;
        assert!(close(oracle, exact, 1e-6));

        let far = JacobiSpec::free_with_potential(3, &[1.0]).unwrap();
        assert!(matches!(
            m_oracle_truncated(&far, Side::Right, 0, z, 3),
            Err(Error::WindowTooSmall { .. })
        ));
        assert!(m_oracle_truncated(&far, Side::Right, 0, z, 4).is_ok());
        assert!(m_oracle_truncated(&far, Side::Left, 0, z, 2).is_ok());
    }

    #[test]
    fn periodic_tail_matches_oracle() {
        let bg = Background::Periodic {
            a: vec![1.0, 0.5, 1.3],
            b: vec![0.2, 0.0, -0.4],
            phase: 1,
        };
        let spec = JacobiSpec::new(bg, Perturbation::default()).unwrap();
        let z = c(0.37, 0.05);
        for n in -2..=2 {
            for side in [Side::Left, Side::Right] {
                let exact = m_side(&spec, side, n, BoundaryPoint::upper(z).unwrap()).unwrap().value;
                let oracle = m_oracle_truncated(&spec, side, n, z, 3000).unwrap();
                assert!(close(exact, oracle, 1e-10), "{side:?} {n}: {exact} vs {oracle}");
            }
        }
    }

    #[test]
    fn densities() {
        let free = JacobiSpec::free();
        let m = m_right(&free, 0, BoundaryPoint::above(0.0)).unwrap();
        assert!((ac_density(&m).unwrap() - 1.0 / PI).abs() < 1e-16);
        let gap = m_right(&free, 0, BoundaryPoint::above(3.0)).unwrap();
        assert_eq!(ac_density(&gap).unwrap(), 0.0);
        let half = JacobiSpec::new(Background::Constant { a: 0.5, b: 0.0 }, Perturbation::default()).unwrap();
        let m = m_right(&half, 0, BoundaryPoint::above(0.0)).unwrap();
        assert!((ac_density(&m).unwrap() - 2.0 / PI).abs() < 1e-15);
        let upper = m_right(&free, 0, BoundaryPoint::upper(c(0.0, 1.0)).unwrap()).unwrap();
        assert!(ac_density(&upper).is_err());
    }
}
