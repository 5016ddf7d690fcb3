//! Diagonal Green's function and the two-channel scattering matrix of the
//! pair `(J, J_0)`, where `J_0` decouples site `n` from both half-lines.
//!
//! With `a_l = a_{n-1}`, `a_r = a_n` and boundary values at `λ + i0`:
//!
//! ```text
//! G_nn = -1 / (a_n² m_n^(r) - 1/m_{n+1}^(l)) = -1 / (a_{n-1}² m_n^(l) - 1/m_{n-1}^(r))
//! s_jk = δ_jk + 2i a_j a_k G_nn sqrt(Im m_n^(j) Im m_n^(k))
//! ```

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::herglotz::{ac_density, m_left, m_right, POLE_THRESHOLD};
use crate::model::{BoundaryPoint, JacobiSpec};

/// Relative tolerance for the agreement of the two Green's function
/// expressions.
pub const CROSS_CHECK_TOL: f64 = 1e-10;

/// A channel is open where its a.c. density exceeds this.
pub const SUPPORT_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenDiag {
    pub value: Complex64,
    pub n: i64,
    pub point: BoundaryPoint,
}

fn inverse(m: Complex64, site: i64) -> Result<Complex64> {
    if m.norm() < POLE_THRESHOLD {
        return Err(Error::PoleHit { site: Some(site) });
    }
    Ok(m.inv())
}

fn neg_inverse(denom: Complex64, site: i64) -> Result<Complex64> {
    if denom.norm() < POLE_THRESHOLD {
        return Err(Error::PoleHit { site: Some(site) });
    }
    Ok(-denom.inv())
}

/// `G_nn` at `point`, evaluated through both m-function expressions. Fails
/// with [`Error::CrossCheckFailure`] if they disagree.
pub fn green_diag(spec: &JacobiSpec, n: i64, point: BoundaryPoint) -> Result<GreenDiag> {
    if point.is_below() {
        let up = green_diag(spec, n, point.as_above())?;
        return Ok(GreenDiag {
            value: up.value.conj(),
            n,
            point,
        });
    }
    let (a_left, a_right) = (spec.a(n - 1), spec.a(n));

    let m_r = m_right(spec, n, point)?.value;
    let m_l_next = m_left(spec, n + 1, point)?.value;
    let first = neg_inverse(m_r * (a_right * a_right) - inverse(m_l_next, n)?, n)?;

    let m_l = m_left(spec, n, point)?.value;
    let m_r_prev = m_right(spec, n - 1, point)?.value;
    let second = neg_inverse(m_l * (a_left * a_left) - inverse(m_r_prev, n)?, n)?;

    let scale = first.norm().max(second.norm());
    if (first - second).norm() > CROSS_CHECK_TOL * scale {
        return Err(Error::CrossCheckFailure(format!(
            "G_{n}{n}: {first} vs {second} at {:?}",
            point.z()
        )));
    }
    Ok(GreenDiag { value: first, n, point })
}

/// Scattering matrix at cut site `n` and energy `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringMatrix {
    pub n: i64,
    pub lambda: f64,
    pub s_ll: Complex64,
    pub s_lr: Complex64,
    pub s_rl: Complex64,
    pub s_rr: Complex64,
    /// `Im m_n^(l)(λ + i0)`, zero on a closed channel.
    pub im_m_l: f64,
    /// `Im m_n^(r)(λ + i0)`, zero on a closed channel.
    pub im_m_r: f64,
}

impl ScatteringMatrix {
    pub fn open_left(&self) -> bool {
        self.im_m_l > 0.0
    }

    pub fn open_right(&self) -> bool {
        self.im_m_r > 0.0
    }

    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        [[self.s_ll, self.s_lr], [self.s_rl, self.s_rr]]
    }
}

/// The 2x2 scattering matrix. A channel whose a.c. density vanishes is
/// closed: its row and column reduce to the identity.
pub fn scattering_matrix(spec: &JacobiSpec, n: i64, lambda: f64) -> Result<ScatteringMatrix> {
    let point = BoundaryPoint::above(lambda);
    let m_l = m_left(spec, n, point)?;
    let m_r = m_right(spec, n, point)?;
    let open = |m| ac_density(m).map(|d| d > SUPPORT_THRESHOLD);
    let im_l = if open(&m_l)? { m_l.value.im } else { 0.0 };
    let im_r = if open(&m_r)? { m_r.value.im } else { 0.0 };
    if im_l == 0.0 && im_r == 0.0 {
        return Err(Error::NoOpenChannel { lambda });
    }
    let g = green_diag(spec, n, point)?.value;
    let (a_l, a_r) = (spec.a(n - 1), spec.a(n));
    let two_i_g = Complex64::new(0.0, 2.0) * g;
    let entry = |a_j: f64, a_k: f64, im_j: f64, im_k: f64, diagonal: bool| {
        let delta = if diagonal { 1.0 } else { 0.0 };
        two_i_g * (a_j * a_k * (im_j * im_k).sqrt()) + delta
    };
    let s_ll = entry(a_l, a_l, im_l, im_l, true);
    let s_rr = entry(a_r, a_r, im_r, im_r, true);
    let s_lr = entry(a_l, a_r, im_l, im_r, false);
    let s_rl = entry(a_r, a_l, im_r, im_l, false);
    debug_assert_eq!(s_lr, s_rl);
    Ok(ScatteringMatrix {
        n,
        lambda,
        s_ll,
        s_lr,
        s_rl,
        s_rr,
        im_m_l: im_l,
        im_m_r: im_r,
    })
}

/// Reflection and transmission probabilities read off a scattering matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionTransmission {
    pub r_l: f64,
    pub r_r: f64,
    pub t: f64,
}

pub fn reflection_transmission(s: &ScatteringMatrix) -> ReflectionTransmission {
    ReflectionTransmission {
        r_l: s.s_ll.norm_sqr(),
        r_r: s.s_rr.norm_sqr(),
        t: s.s_lr.norm_sqr(),
    }
}

/// `|s_lr(λ)|²` at cut `n`.
pub fn transmission(spec: &JacobiSpec, n: i64, lambda: f64) -> Result<f64> {
    scattering_matrix(spec, n, lambda).map(|s| reflection_transmission(&s).t)
}

/// Square roots of the channel a.c. densities, the diagonal of `V(λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelWeight {
    pub lambda: f64,
    pub v_l: f64,
    pub v_r: f64,
}

pub fn channel_weight(spec: &JacobiSpec, n: i64, lambda: f64) -> Result<ChannelWeight> {
    let point = BoundaryPoint::above(lambda);
    let v_l = ac_density(&m_left(spec, n, point)?)?.sqrt();
    let v_r = ac_density(&m_right(spec, n, point)?)?.sqrt();
    Ok(ChannelWeight { lambda, v_l, v_r })
}

/// Max-norm of `s s* - I` over the open channels.
pub fn unitarity_defect(s: &ScatteringMatrix) -> f64 {
    let m = s.entries();
    let open = [s.open_left(), s.open_right()];
    let mut worst: f64 = 0.0;
    for j in 0..2 {
        for k in 0..2 {
            if !(open[j] && open[k]) {
                continue;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for (x, y) in m[j].iter().zip(&m[k]) {
                acc += x * y.conj();
            }
            if j == k {
                acc -= 1.0;
            }
            worst = worst.max(acc.norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Background, Perturbation};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single_site() -> JacobiSpec {
        JacobiSpec::free_with_potential(0, &[1.0]).unwrap()
    }

    #[test]
    fn green_examples() {
        let free = JacobiSpec::free();
        let g = green_diag(&free, 0, BoundaryPoint::above(0.0)).unwrap();
        assert!((g.value - c(0.0, 0.5)).norm() < 1e-15);
        let g = green_diag(&free, 0, BoundaryPoint::above(1.0)).unwrap();
        assert!((g.value - c(0.0, 1.0 / 3f64.sqrt())).norm() < 1e-15);
        let g = green_diag(&single_site(), 0, BoundaryPoint::above(0.0)).unwrap();
        assert!((g.value - c(0.2, 0.4)).norm() < 1e-15);
        let below = green_diag(&single_site(), 0, BoundaryPoint::below(0.0)).unwrap();
        assert_eq!(below.value, g.value.conj());
    }

    #[test]
    fn green_matches_resolvent_of_truncation() {
        // Independent route: (T - z)^{-1} on a long finite section.
        let spec = JacobiSpec::free_with_potential(-1, &[0.4, 1.0, -0.3]).unwrap();
        let t = spec.truncate(3000).unwrap();
        let z = c(0.3, 0.02);
        let mut rhs = vec![c(0.0, 0.0); t.len()];
        for n in -2i64..=2 {
            rhs.iter_mut().for_each(|r| *r = c(0.0, 0.0));
            rhs[t.index(n)] = c(1.0, 0.0);
            let x = crate::linalg::tridiagonal_solve(t.diag(), t.offdiag(), z, &rhs).unwrap();
            let g = green_diag(&spec, n, BoundaryPoint::upper(z).unwrap()).unwrap();
            assert!((g.value - x[t.index(n)]).norm() < 1e-10, "n = {n}");
            assert!(g.value.im > 0.0);
        }
    }

    #[test]
    fn free_band_centre() {
        let s = scattering_matrix(&JacobiSpec::free(), 0, 0.0).unwrap();
        assert!(s.s_ll.norm() < 1e-15 && s.s_rr.norm() < 1e-15);
        assert!((s.s_lr - c(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(s.s_lr, s.s_rl);
        assert!(unitarity_defect(&s) < 1e-12);
    }

    #[test]
    fn free_is_off_diagonal() {
        let s = scattering_matrix(&JacobiSpec::free(), 0, 1.0).unwrap();
        assert!(s.s_ll.norm() < 1e-15);
        assert!((s.s_lr.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_site_fixture() {
        let s = scattering_matrix(&single_site(), 0, 0.0).unwrap();
        assert!((s.s_ll - c(1.0, 0.0) / c(1.0, -2.0)).norm() < 1e-15);
        let rt = reflection_transmission(&s);
        assert!((rt.r_l - 0.2).abs() < 1e-15 && (rt.r_r - 0.2).abs() < 1e-15);
        assert!((rt.t - 0.8).abs() < 1e-15);
    }

    #[test]
    fn single_site_closed_form_transmission() {
        // T(λ) = (4 - λ²) / (c² + 4 - λ²) for a potential c at one site.
        let spec = single_site();
        let mut lambda = -1.999;
        while lambda < 1.999 {
            let t = transmission(&spec, 0, lambda).unwrap();
            let exact = (4.0 - lambda * lambda) / (5.0 - lambda * lambda);
            assert!((t - exact).abs() < 1e-12, "λ = {lambda}");
            lambda += 0.01;
        }
    }

    #[test]
    fn unitarity_over_band() {
        let spec = single_site();
        let mut lambda = -2.0 + 1e-3;
        while lambda < 2.0 - 1e-3 {
            let s = scattering_matrix(&spec, 0, lambda).unwrap();
            assert!(unitarity_defect(&s) <= 1e-10, "λ = {lambda}");
            let rt = reflection_transmission(&s);
            assert!((rt.r_l + rt.t - 1.0).abs() < 1e-10 && (rt.r_l - rt.r_r).abs() < 1e-10);
            lambda += 1e-3;
        }
    }

    #[test]
    fn defect_of_non_unitary_fixture() {
        let s = ScatteringMatrix {
            n: 0,
            lambda: 0.0,
            s_ll: c(0.5, 0.0),
            s_lr: c(0.0, 0.0),
            s_rl: c(0.0, 0.0),
            s_rr: c(1.0, 0.0),
            im_m_l: 1.0,
            im_m_r: 1.0,
        };
        assert!((unitarity_defect(&s) - 0.75).abs() < 1e-15);
        let closed = ScatteringMatrix { im_m_l: 0.0, ..s };
        assert_eq!(unitarity_defect(&closed), 0.0);
    }

    #[test]
    fn gaps_close_channels() {
        assert!(matches!(
            scattering_matrix(&JacobiSpec::free(), 0, 3.0),
            Err(Error::NoOpenChannel { .. })
        ));
        let w = channel_weight(&JacobiSpec::free(), 0, 3.0).unwrap();
        assert_eq!((w.v_l, w.v_r), (0.0, 0.0));
    }

    #[test]
    fn closed_channel_convention() {
        // With only one open channel the matrix is diag(1, unimodular).
        let s = ScatteringMatrix {
            n: 0,
            lambda: 0.0,
            s_ll: c(1.0, 0.0),
            s_lr: c(0.0, 0.0),
            s_rl: c(0.0, 0.0),
            s_rr: c(0.6, 0.8),
            im_m_l: 0.0,
            im_m_r: 0.4,
        };
        let rt = reflection_transmission(&s);
        assert_eq!(rt.t, 0.0);
        assert!((rt.r_l - 1.0).abs() < 1e-15 && (rt.r_r - 1.0).abs() < 1e-15);
        assert!(unitarity_defect(&s) < 1e-15);
    }

    #[test]
    fn channel_weights() {
        let w = channel_weight(&JacobiSpec::free(), 0, 0.0).unwrap();
        let expect = 1.0 / std::f64::consts::PI.sqrt();
        assert!((w.v_l - expect).abs() < 1e-15 && (w.v_r - expect).abs() < 1e-15);
        let half = JacobiSpec::new(Background::Constant { a: 0.5, b: 0.0 }, Perturbation::default()).unwrap();
        let w = channel_weight(&half, 0, 0.0).unwrap();
        assert!((w.v_l - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-15);
    }
}
