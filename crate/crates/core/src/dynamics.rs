//! Wave-packet scattering on finite truncations.
//!
//! `e^{-itJ}` is applied exactly through the eigendecomposition of the
//! truncated operator on sites `-N..=N`. Packets are launched deep on one
//! side and the experiment stops before the fastest component can reach the
//! Dirichlet ends.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::floquet::group_velocity;
use crate::jost::jost_solution_on;
use crate::linalg::{tridiagonal_eigen, EigenPairs, Range};
use crate::model::{BoundaryPoint, JacobiSpec, Perturbation, Side, TruncatedOperator};
use crate::scattering::transmission;

/// Complex amplitudes on sites `-N..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    half_width: usize,
    amplitudes: Vec<Complex64>,
    norm: f64,
}

fn l2(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

impl LatticeState {
    pub fn new(half_width: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 2 * half_width + 1 {
            return Err(Error::InvalidArgument(format!(
                "state has {} amplitudes, expected {}",
                amplitudes.len(),
                2 * half_width + 1
            )));
        }
        let norm = l2(&amplitudes);
        Ok(LatticeState {
            half_width,
            amplitudes,
            norm,
        })
    }

    /// `δ_site`.
    pub fn delta(half_width: usize, site: i64) -> Result<Self> {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 2 * half_width + 1];
        let idx = site + half_width as i64;
        if idx < 0 || idx as usize >= amplitudes.len() {
            return Err(Error::InvalidArgument(format!(
                "site {site} outside -{half_width}..={half_width}"
            )));
        }
        amplitudes[idx as usize] = Complex64::new(1.0, 0.0);
        Self::new(half_width, amplitudes)
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, site: i64) -> Complex64 {
        self.amplitudes[(site + self.half_width as i64) as usize]
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn conj(&self) -> LatticeState {
        LatticeState {
            amplitudes: self.amplitudes.iter().map(|v| v.conj()).collect(),
            ..self.clone()
        }
    }

    pub fn normalized(&self) -> LatticeState {
        let amplitudes = self.amplitudes.iter().map(|v| v / self.norm).collect();
        LatticeState {
            half_width: self.half_width,
            amplitudes,
            norm: 1.0,
        }
    }

    /// `Σ |φ_k|²` over the sites selected by `keep`.
    pub fn mass(&self, keep: impl Fn(i64) -> bool) -> f64 {
        let n = self.half_width as i64;
        (-n..=n)
            .zip(&self.amplitudes)
            .filter(|(k, _)| keep(*k))
            .map(|(_, v)| v.norm_sqr())
            .sum()
    }

    /// `χ φ`, with `χ` the indicator of the selected sites.
    pub fn restrict(&self, keep: impl Fn(i64) -> bool) -> LatticeState {
        let n = self.half_width as i64;
        let amplitudes = (-n..=n)
            .zip(&self.amplitudes)
            .map(|(k, v)| if keep(k) { *v } else { Complex64::new(0.0, 0.0) })
            .collect();
        LatticeState::new(self.half_width, amplitudes).expect("same length")
    }

    pub fn distance(&self, other: &LatticeState) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `⟨φ, Jφ⟩ / ⟨φ, φ⟩`.
    pub fn energy(&self, truncation: &TruncatedOperator) -> f64 {
        let jx = truncation.apply(&self.amplitudes);
        let num: f64 = self.amplitudes.iter().zip(&jx).map(|(a, b)| (a.conj() * b).re).sum();
        num / (self.norm * self.norm)
    }
}

/// Shared eigendecomposition of a truncation plus the propagation horizon.
#[derive(Debug, Clone)]
pub struct PropagationPlan {
    truncation: TruncatedOperator,
    eigen: Arc<EigenPairs>,
    window_len: usize,
    packet_extent: usize,
    pub v_max: f64,
    pub t_max: f64,
}

impl PropagationPlan {
    /// Diagonalizes the truncation of `spec` to `-n..=n`. The horizon
    /// assumes a point-like initial state until
    /// [`PropagationPlan::with_packet_extent`] is applied.
    pub fn new(spec: &JacobiSpec, n: usize) -> Result<Self> {
        let truncation = spec.truncate(n)?;
        let eigen = tridiagonal_eigen(truncation.diag(), truncation.offdiag(), Range::All)?;
        let window_len = spec.window().map(|(s, e)| (e - s + 1) as usize).unwrap_or(0);
        let plan = PropagationPlan {
            truncation,
            eigen: Arc::new(eigen),
            window_len,
            packet_extent: 0,
            v_max: 2.0 * spec.max_a(),
            t_max: 0.0,
        };
        plan.with_packet_extent(0)
    }

    /// Same decomposition, horizon `(N - K_pack - |window|) / v_max`.
    pub fn with_packet_extent(&self, k_pack: usize) -> Result<Self> {
        let room = self.truncation.half_width() as f64 - k_pack as f64 - self.window_len as f64;
        if room <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "truncation N = {} leaves no room for a packet of extent {k_pack}",
                self.truncation.half_width()
            )));
        }
        Ok(PropagationPlan {
            packet_extent: k_pack,
            t_max: room / self.v_max,
            ..self.clone()
        })
    }

    pub fn truncation(&self) -> &TruncatedOperator {
        &self.truncation
    }

    pub fn half_width(&self) -> usize {
        self.truncation.half_width()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen.values
    }

    pub fn packet_extent(&self) -> usize {
        self.packet_extent
    }

    /// Largest `|⟨v_i, v_j⟩ - δ_ij|` over a sample of eigenvector pairs.
    pub fn orthogonality_defect(&self, samples: usize) -> f64 {
        let m = self.eigen.len();
        let step = (m / samples.max(1)).max(1);
        let idx: Vec<usize> = (0..m).step_by(step).collect();
        let mut worst: f64 = 0.0;
        for &i in &idx {
            for &j in &idx {
                let dot: f64 = self
                    .eigen
                    .vector(i)
                    .iter()
                    .zip(self.eigen.vector(j))
                    .map(|(a, b)| a * b)
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// `e^{-itJ_N} φ`.
pub fn evolve(plan: &PropagationPlan, state: &LatticeState, t: f64) -> Result<LatticeState> {
    if state.half_width() != plan.half_width() {
        return Err(Error::InvalidArgument(
            "state and plan have different truncations".into(),
        ));
    }
    if t.abs() > plan.t_max {
        return Err(Error::HorizonExceeded { t, t_max: plan.t_max });
    }
    if t == 0.0 {
        return Ok(state.clone());
    }
    let mut coeffs = plan.eigen.project(state.amplitudes());
    for (c, e) in coeffs.iter_mut().zip(&plan.eigen.values) {
        *c *= Complex64::from_polar(1.0, -t * e);
    }
    LatticeState::new(state.half_width(), plan.eigen.synthesize(&coeffs))
}

/// Incident packet together with its energy distribution.
#[derive(Debug, Clone)]
pub struct WavePacket {
    pub state: LatticeState,
    pub side: Side,
    pub lambda0: f64,
    pub dlambda: f64,
    pub center: i64,
    /// Sites on either side of `center` carrying the packet.
    pub half_extent: usize,
    /// Eigenvalues of the decoupled half-line block and the packet's
    /// normalized weights on them.
    pub energies: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Packet of energy width `Δλ` around `λ₀` moving toward the perturbation
/// from the given side.
///
/// A Bloch wave of the background at `λ₀` with the right direction of
/// motion is cut off by a Gaussian envelope whose energy spread is `2Δλ`,
/// then filtered in the eigenbasis of the decoupled half-line block so that
/// the resulting energy density has standard deviation `Δλ`.
pub fn wave_packet(spec: &JacobiSpec, side: Side, lambda0: f64, dlambda: f64, n: usize) -> Result<WavePacket> {
    if dlambda.is_nan() || dlambda <= 0.0 {
        return Err(Error::InvalidArgument("packet width must be positive".into()));
    }
    let inside = spec
        .bands()
        .bands()
        .iter()
        .any(|&(lo, hi)| lambda0 - 3.0 * dlambda > lo && lambda0 + 3.0 * dlambda < hi);
    if !inside {
        return Err(Error::InvalidArgument(format!(
            "[λ₀ - 3Δλ, λ₀ + 3Δλ] around {lambda0} is not inside a band"
        )));
    }
    let bg = spec.background();
    let v = group_velocity(bg, lambda0);
    let sigma_env = v / (4.0 * dlambda);
    let half_extent = (12.0 * sigma_env).ceil() as usize;
    let quarter = (n / 4) as i64;
    let (ws, we) = spec.window().unwrap_or((0, 0));
    let center = match side {
        Side::Left => ws.min(0) - quarter - half_extent as i64,
        Side::Right => we.max(0) + quarter + half_extent as i64,
    };
    let half = n as i64;
    if center - half_extent as i64 <= -half || center + half_extent as i64 >= half {
        return Err(Error::InvalidArgument(format!(
            "N = {n} is too small for a packet of half extent {half_extent}"
        )));
    }

    let lo = center - half_extent as i64;
    let hi = center + half_extent as i64;
    let background = JacobiSpec::new(bg.clone(), Perturbation::default())?;
    let bloch = jost_solution_on(&background, Side::Right, BoundaryPoint::above(lambda0), (lo, hi))?;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 2 * n + 1];
    for k in lo..=hi {
        let u = match side {
            Side::Left => bloch.value(k),
            Side::Right => bloch.value(k).conj(),
        };
        let x = (k - center) as f64;
        amplitudes[(k + half) as usize] = u * (-x * x / (4.0 * sigma_env * sigma_env)).exp();
    }

    // Energy filter on the decoupled block of this side.
    let truncation = spec.truncate(n)?;
    let (block_lo, block_hi) = match side {
        Side::Left => (0, n),
        Side::Right => (n + 1, 2 * n + 1),
    };
    let diag = &truncation.diag()[block_lo..block_hi];
    let offdiag = &truncation.offdiag()[block_lo..block_hi - 1];
    let sigma_f = 2.0 * dlambda / 3f64.sqrt();
    let eigen = tridiagonal_eigen(
        diag,
        offdiag,
        Range::Values(lambda0 - 10.0 * sigma_f, lambda0 + 10.0 * sigma_f),
    )?;
    let mut coeffs = eigen.project(&amplitudes[block_lo..block_hi]);
    for (c, e) in coeffs.iter_mut().zip(&eigen.values) {
        let d = e - lambda0;
        *c *= (-d * d / (4.0 * sigma_f * sigma_f)).exp();
    }
    let filtered = eigen.synthesize(&coeffs);
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 2 * n + 1];
    amplitudes[block_lo..block_hi].copy_from_slice(&filtered);
    let state = LatticeState::new(n, amplitudes)?;
    if state.norm() == 0.0 {
        return Err(Error::InvalidArgument("energy filter removed the whole packet".into()));
    }
    let total: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    let weights = coeffs.iter().map(|c| c.norm_sqr() / total).collect();
    Ok(WavePacket {
        state: state.normalized(),
        side,
        lambda0,
        dlambda,
        center,
        half_extent,
        energies: eigen.values,
        weights,
    })
}

/// Outcome of one scattering experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicalReflection {
    pub lambda0: f64,
    pub dlambda: f64,
    pub n: usize,
    pub t_star: f64,
    /// Mass on sites `≤ -1` at `t*`.
    pub r_dyn: f64,
    /// Mass on sites `≥ 1` at `t*`.
    pub t_dyn: f64,
    pub site0_mass: f64,
    /// Stationary reflection `1 - T(λ)` averaged over the packet's energy
    /// distribution.
    pub r_stationary_avg: f64,
    pub abs_error: f64,
    /// Largest change of `R_dyn` when `t*` is moved by ±10%.
    pub time_variation: f64,
}

/// Stationary reflection probability averaged over the packet weights.
pub fn stationary_average(spec: &JacobiSpec, packet: &WavePacket) -> f64 {
    let (mut acc, mut total) = (0.0, 0.0);
    for (&e, &w) in packet.energies.iter().zip(&packet.weights) {
        if let Ok(t) = transmission(spec, 0, e) {
            acc += w * (1.0 - t).max(0.0);
            total += w;
        }
    }
    if total > 0.0 {
        acc / total
    } else {
        f64::NAN
    }
}

/// Runs the left-incident experiment for a prepared packet.
pub fn run_experiment(plan: &PropagationPlan, spec: &JacobiSpec, packet: &WavePacket) -> Result<DynamicalReflection> {
    let plan = plan.with_packet_extent(2 * packet.half_extent)?;
    let t_star = 0.8 * plan.t_max;
    let observe = |t: f64| -> Result<(f64, f64, f64)> {
        let s = evolve(&plan, &packet.state, t)?;
        Ok((s.mass(|k| k <= -1), s.mass(|k| k >= 1), s.amplitude(0).norm_sqr()))
    };
    let (r_dyn, t_dyn, site0_mass) = observe(t_star)?;
    let mut time_variation: f64 = 0.0;
    for f in [0.9, 1.1] {
        let (r, _, _) = observe(f * t_star)?;
        time_variation = time_variation.max((r - r_dyn).abs());
    }
    let (r_dyn, t_dyn) = match packet.side {
        Side::Left => (r_dyn, t_dyn),
        Side::Right => (t_dyn, r_dyn),
    };
    let r_stationary_avg = stationary_average(spec, packet);
    Ok(DynamicalReflection {
        lambda0: packet.lambda0,
        dlambda: packet.dlambda,
        n: plan.half_width(),
        t_star,
        r_dyn,
        t_dyn,
        site0_mass,
        r_stationary_avg,
        abs_error: (r_dyn - r_stationary_avg).abs(),
        time_variation,
    })
}

/// Reflected and transmitted mass of a left-incident packet at `t*`.
pub fn dynamical_reflection(spec: &JacobiSpec, lambda0: f64, dlambda: f64, n: usize) -> Result<DynamicalReflection> {
    let packet = wave_packet(spec, Side::Left, lambda0, dlambda, n)?;
    let plan = PropagationPlan::new(spec, n)?;
    run_experiment(&plan, spec, &packet)
}

/// [`dynamical_reflection`] on a grid of packet centres sharing one
/// eigendecomposition. `R_dyn` estimates `|s_ll|²` and `T_dyn` estimates
/// `|s_lr|²` up to the packet-width bias.
pub fn scattering_from_dynamics(
    spec: &JacobiSpec,
    grid: &[f64],
    dlambda: f64,
    n: usize,
) -> Result<Vec<DynamicalReflection>> {
    let plan = PropagationPlan::new(spec, n)?;
    grid.par_iter()
        .map(|&lambda0| {
            let packet = wave_packet(spec, Side::Left, lambda0, dlambda, n)?;
            run_experiment(&plan, spec, &packet)
        })
        .collect()
}

/// `‖P̂_l(P̂_l φ) - P̂_l φ‖ + |‖P̂_l φ‖² + ‖P̂_r φ‖² + |φ_0(t)|² - ‖φ‖²|` with
/// `P̂_{l/r} = e^{itJ} χ_{l/r} e^{-itJ}` and `χ_{l/r}` the indicators of
/// sites `≤ -1` / `≥ 1`.
pub fn projection_defect_at(plan: &PropagationPlan, state: &LatticeState, t: f64) -> Result<f64> {
    let left = |k: i64| k <= -1;
    let right = |k: i64| k >= 1;
    let moved = evolve(plan, state, t)?;
    let p_l = evolve(plan, &moved.restrict(left), -t)?;
    let p_l_twice = evolve(plan, &evolve(plan, &p_l, t)?.restrict(left), -t)?;
    let idempotency = p_l_twice.distance(&p_l);
    let p_r = evolve(plan, &moved.restrict(right), -t)?;
    let decomposition =
        (p_l.norm().powi(2) + p_r.norm().powi(2) + moved.amplitude(0).norm_sqr() - state.norm().powi(2)).abs();
    Ok(idempotency + decomposition)
}

/// [`projection_defect_at`] for a left-incident packet at `t*`.
pub fn projection_defect(spec: &JacobiSpec, lambda0: f64, dlambda: f64, n: usize) -> Result<f64> {
    let packet = wave_packet(spec, Side::Left, lambda0, dlambda, n)?;
    let plan = PropagationPlan::new(spec, n)?.with_packet_extent(2 * packet.half_extent)?;
    projection_defect_at(&plan, &packet.state, 0.8 * plan.t_max)
}
