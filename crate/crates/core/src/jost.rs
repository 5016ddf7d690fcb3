//! Jost solutions and spectral reflection probabilities.
//!
//! `ψ^(r)` solves `a_k ψ_{k+1} + a_{k-1} ψ_{k-1} + b_k ψ_k = z ψ_k` and is
//! square summable at `+∞` (for `z` in the upper half-plane; on the real
//! axis it is the limit from above). `ψ^(l)` is the mirror object at `-∞`.
//! Both are normalized by `ψ_0 = 1`.
//!
//! The tail is seeded with the Floquet eigenvector of the background
//! monodromy and the window is filled by the three-term recursion, always
//! propagating in the direction in which the solution grows.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::floquet::{monodromy, PROBE_EPS};
use crate::herglotz::{m_left, m_right};
use crate::model::{BoundaryPoint, JacobiSpec, Side};

/// Jost solution restricted to a finite window of sites.
#[derive(Debug, Clone, PartialEq)]
pub struct JostSolution {
    pub side: Side,
    pub point: BoundaryPoint,
    k_min: i64,
    values: Vec<Complex64>,
    /// `a_k` for `k` in the window, used by the Wronskian.
    hopping: Vec<f64>,
    /// Floquet multiplier per period in the direction of the tail.
    pub tail_multiplier: Complex64,
}

impl JostSolution {
    pub fn window(&self) -> (i64, i64) {
        (self.k_min, self.k_min + self.values.len() as i64 - 1)
    }

    pub fn contains(&self, k: i64) -> bool {
        let (lo, hi) = self.window();
        (lo..=hi).contains(&k)
    }

    /// `ψ_k`; panics outside the window.
    pub fn value(&self, k: i64) -> Complex64 {
        assert!(self.contains(k), "site {k} outside Jost window {:?}", self.window());
        self.values[(k - self.k_min) as usize]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    fn hopping(&self, k: i64) -> f64 {
        self.hopping[(k - self.k_min) as usize]
    }

    /// Complex conjugate solution (a solution again for real `λ`).
    pub fn conj(&self) -> JostSolution {
        JostSolution {
            values: self.values.iter().map(|v| v.conj()).collect(),
            tail_multiplier: self.tail_multiplier.conj(),
            ..self.clone()
        }
    }

    /// Largest `|a_k ψ_{k+1} + a_{k-1} ψ_{k-1} + (b_k - z) ψ_k|` over
    /// interior sites of the window.
    pub fn recursion_residual(&self, spec: &JacobiSpec) -> f64 {
        let z = self.point.z();
        let (lo, hi) = self.window();
        (lo + 1..hi)
            .map(|k| {
                let (a, b) = spec.coefficient(k);
                (self.value(k + 1) * a
                    + self.value(k - 1) * spec.a(k - 1)
                    + self.value(k) * (Complex64::new(b, 0.0) - z))
                    .norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Smallest window that contains the perturbation, sites 0 and 1 and the
/// requested range, with room for one background period plus seeding sites
/// on each side.
fn default_window(spec: &JacobiSpec, extra: (i64, i64)) -> (i64, i64) {
    let pad = spec.background().period() as i64 + 3;
    let (ws, we) = spec.window().unwrap_or((0, 0));
    let lo = ws.min(0).min(extra.0).min(-8) - pad;
    let hi = we.max(1).max(extra.1).max(8) + pad;
    (lo, hi)
}

fn floquet_multiplier(spec: &JacobiSpec, start: i64, z: Complex64, real_axis: bool, decaying_right: bool) -> Complex64 {
    let p = spec.background().period();
    let pick = |eigs: [Complex64; 2]| {
        let (x0, x1) = (eigs[0], eigs[1]);
        let first_smaller = x0.norm() <= x1.norm();
        if first_smaller == decaying_right {
            x0
        } else {
            x1
        }
    };
    let eigs = monodromy(|k| spec.coefficient(k), start, p, z).eigenvalues();
    if !real_axis {
        return pick(eigs);
    }
    // On the real axis pick the multiplier continued from λ + iε.
    let probe_z = z + Complex64::new(0.0, PROBE_EPS);
    let target = pick(monodromy(|k| spec.coefficient(k), start, p, probe_z).eigenvalues());
    if (eigs[0] - target).norm() <= (eigs[1] - target).norm() {
        eigs[0]
    } else {
        eigs[1]
    }
}

/// Jost solution on an explicit window `[lo, hi]` (enlarged as needed so
/// the tail can be seeded in the background region).
pub fn jost_solution_on(
    spec: &JacobiSpec,
    side: Side,
    point: BoundaryPoint,
    range: (i64, i64),
) -> Result<JostSolution> {
    if point.is_below() {
        return Err(Error::InvalidPoint(
            "Jost solutions are built at λ + i0 or in C+".into(),
        ));
    }
    let real_axis = matches!(point, BoundaryPoint::RealLimit { .. });
    if let BoundaryPoint::RealLimit { lambda, .. } = point {
        spec.bands().guard(lambda)?;
    }
    let z = point.z();
    let (k_min, k_max) = default_window(spec, range);
    let len = (k_max - k_min + 1) as usize;
    let mut psi = vec![Complex64::new(0.0, 0.0); len];
    let idx = |k: i64| (k - k_min) as usize;
    let p = spec.background().period() as i64;

    let tail_multiplier = match side {
        Side::Right => {
            let start = k_max;
            let x = floquet_multiplier(spec, start, z, real_axis, true);
            let m = monodromy(|k| spec.coefficient(k), start, p as usize, z);
            let [psi_k, psi_prev] = m.eigenvector(x);
            psi[idx(start)] = psi_k;
            psi[idx(start - 1)] = psi_prev;
            for k in (k_min + 1..start).rev() {
                let (a, b) = spec.coefficient(k);
                let next = psi[idx(k + 1)];
                psi[idx(k - 1)] = (psi[idx(k)] * (z - b) - next * a) / spec.a(k - 1);
            }
            x
        }
        Side::Left => {
            let start = k_min + 1;
            let x = floquet_multiplier(spec, start, z, real_axis, false);
            let m = monodromy(|k| spec.coefficient(k), start, p as usize, z);
            let [psi_k, psi_prev] = m.eigenvector(x);
            psi[idx(start)] = psi_k;
            psi[idx(start - 1)] = psi_prev;
            for k in start..k_max {
                let (a, b) = spec.coefficient(k);
                let prev = psi[idx(k - 1)];
                psi[idx(k + 1)] = (psi[idx(k)] * (z - b) - prev * spec.a(k - 1)) / a;
            }
            x.inv()
        }
    };

    let scale = psi.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let at_zero = psi[idx(0)];
    if at_zero.norm() < 1e-12 * scale || scale == 0.0 {
        return Err(Error::NormalizationPole { lambda: z.re });
    }
    psi.iter_mut().for_each(|v| *v /= at_zero);
    let hopping = (k_min..=k_max).map(|k| spec.a(k)).collect();
    Ok(JostSolution {
        side,
        point,
        k_min,
        values: psi,
        hopping,
        tail_multiplier,
    })
}

/// `ψ^(l/r)(λ + i0)` on the default window.
pub fn jost_solution(spec: &JacobiSpec, side: Side, lambda: f64) -> Result<JostSolution> {
    jost_solution_on(spec, side, BoundaryPoint::above(lambda), (0, 1))
}

/// `a_k (u_{k+1} v_k - u_k v_{k+1})`.
pub fn wronskian(u: &JostSolution, v: &JostSolution, k: i64) -> Result<Complex64> {
    for s in [u, v] {
        if !s.contains(k) || !s.contains(k + 1) {
            return Err(Error::InvalidArgument(format!(
                "sites {k}, {} not in Jost window {:?}",
                k + 1,
                s.window()
            )));
        }
    }
    Ok((u.value(k + 1) * v.value(k) - u.value(k) * v.value(k + 1)) * u.hopping(k))
}

/// Coefficients of `ψ^(l) = α conj(ψ^(r)) + β ψ^(r)` and the resulting
/// reflection probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionDatum {
    pub lambda: f64,
    pub alpha: Complex64,
    pub beta: Complex64,
    /// `|β/α|²`.
    pub r_r: f64,
    /// Mirror quantity from `ψ^(r) = α' conj(ψ^(l)) + β' ψ^(l)`.
    pub r_l: f64,
    /// `max_k |ψ^(l)_k - α conj(ψ^(r))_k - β ψ^(r)_k|` over the window.
    pub residual: f64,
}

/// Tolerance on the expansion residual.
pub const EXPANSION_TOL: f64 = 1e-9;

fn expand(target: &JostSolution, basis: &JostSolution, lambda: f64) -> Result<(Complex64, Complex64, f64)> {
    let basis_bar = basis.conj();
    let w = wronskian(&basis_bar, basis, 0)?;
    if w.norm() < 1e-12 {
        return Err(Error::DegenerateBasis { lambda });
    }
    let alpha = wronskian(target, basis, 0)? / w;
    let beta = wronskian(target, &basis_bar, 0)? / (-w);
    let (lo, hi) = target.window();
    let residual = (lo..=hi)
        .map(|k| (target.value(k) - basis_bar.value(k) * alpha - basis.value(k) * beta).norm())
        .fold(0.0, f64::max);
    Ok((alpha, beta, residual))
}

/// α, β and `R_r = |β/α|²` at cut `n = 0`.
pub fn alpha_beta(spec: &JacobiSpec, lambda: f64) -> Result<ReflectionDatum> {
    let psi_l = jost_solution(spec, Side::Left, lambda)?;
    let psi_r = jost_solution(spec, Side::Right, lambda)?;
    let (alpha, beta, residual) = expand(&psi_l, &psi_r, lambda)?;
    let (alpha_m, beta_m, residual_m) = expand(&psi_r, &psi_l, lambda)?;
    let residual = residual.max(residual_m);
    if residual > EXPANSION_TOL {
        return Err(Error::CrossCheckFailure(format!(
            "Jost expansion residual {residual:e} at λ = {lambda}"
        )));
    }
    Ok(ReflectionDatum {
        lambda,
        alpha,
        beta,
        r_r: (beta / alpha).norm_sqr(),
        r_l: (beta_m / alpha_m).norm_sqr(),
        residual,
    })
}

/// `R_r` from half-line m-functions at cut 0:
/// `|(a_0² conj(m_0^(r)) m_1^(l) - 1) / (a_0² m_0^(r) m_1^(l) - 1)|²`.
pub fn spectral_reflection_mratio(spec: &JacobiSpec, lambda: f64) -> Result<f64> {
    let point = BoundaryPoint::above(lambda);
    let m0 = m_right(spec, 0, point)?.value;
    let m1 = m_left(spec, 1, point)?.value;
    let a0 = spec.a(0);
    let num = m0.conj() * m1 * (a0 * a0) - 1.0;
    let den = m0 * m1 * (a0 * a0) - 1.0;
    if den.norm() == 0.0 {
        return Err(Error::PoleHit { site: Some(0) });
    }
    Ok((num / den).norm_sqr())
}

/// `G_nm(λ + i0) = -ψ^(l)_{min(n,m)} ψ^(r)_{max(n,m)} / W(ψ^(l), ψ^(r))`.
pub fn green_offdiag(spec: &JacobiSpec, n: i64, m: i64, lambda: f64) -> Result<Complex64> {
    let (lo, hi) = (n.min(m), n.max(m));
    let point = BoundaryPoint::above(lambda);
    let psi_l = jost_solution_on(spec, Side::Left, point, (lo, hi))?;
    let psi_r = jost_solution_on(spec, Side::Right, point, (lo, hi))?;
    let w = wronskian(&psi_l, &psi_r, 0)?;
    if w.norm() < 1e-300 {
        return Err(Error::DegenerateBasis { lambda });
    }
    Ok(-psi_l.value(lo) * psi_r.value(hi) / w)
}
