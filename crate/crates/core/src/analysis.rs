//! Reflectionless criteria on energy grids, essential supports and the
//! Landauer-Büttiker current.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::RangeInclusive;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::floquet::EDGE_MARGIN;
use crate::herglotz::{ac_density, m_left, m_right};
use crate::model::{BoundaryPoint, JacobiSpec};
use crate::scattering::{green_diag, scattering_matrix, transmission, SUPPORT_THRESHOLD};

/// Default verdict threshold.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Residuals must avoid the open interval between these two values.
pub const GAP_LOW: f64 = 1e-10;
pub const GAP_HIGH: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridProvenance {
    Explicit,
    BandScan,
}

/// Sorted sample of energies kept clear of the band edges.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyGrid {
    pub points: Vec<f64>,
    pub edge_margin: f64,
    pub provenance: GridProvenance,
    /// Rejected points with the reason.
    pub dropped: Vec<(f64, String)>,
}

impl EnergyGrid {
    /// Sorts `points` and drops those within the edge margin.
    pub fn explicit(spec: &JacobiSpec, points: &[f64]) -> Result<Self> {
        let mut sorted = Vec::with_capacity(points.len());
        for &p in points {
            if !p.is_finite() {
                return Err(Error::InvalidArgument(format!("grid point {p} is not finite")));
            }
            sorted.push(p);
        }
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        let mut kept = Vec::with_capacity(sorted.len());
        let mut dropped = Vec::new();
        for p in sorted {
            match spec.bands().guard(p) {
                Ok(()) => kept.push(p),
                Err(e) => dropped.push((p, e.to_string())),
            }
        }
        Ok(EnergyGrid {
            points: kept,
            edge_margin: EDGE_MARGIN,
            provenance: GridProvenance::Explicit,
            dropped,
        })
    }

    /// `start, start + step, ...` while `≤ stop + step/2`.
    pub fn range(spec: &JacobiSpec, start: f64, stop: f64, step: f64) -> Result<Self> {
        let points = grid_points(start, stop, step)?;
        Self::explicit(spec, &points)
    }

    /// `per_band` equally spaced points in the interior of every band.
    pub fn band_scan(spec: &JacobiSpec, per_band: usize) -> Self {
        let mut points = Vec::new();
        for (lo, hi) in spec.bands().interiors() {
            let h = (hi - lo) / per_band as f64;
            points.extend((0..per_band).map(|i| lo + (i as f64 + 0.5) * h));
        }
        EnergyGrid {
            points,
            edge_margin: EDGE_MARGIN,
            provenance: GridProvenance::BandScan,
            dropped: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Points `start + k·step` for `k = 0, 1, ...` with `start + k·step ≤ stop + step/2`.
pub fn grid_points(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start {
        return Err(Error::InvalidArgument(format!("bad grid {start}:{stop}:{step}")));
    }
    let count = ((stop - start) / step + 0.5).floor() as usize + 1;
    if count > 50_000_000 {
        return Err(Error::InvalidArgument(format!(
            "grid {start}:{stop}:{step} has too many points"
        )));
    }
    Ok((0..count)
        .map(|k| start + k as f64 * step)
        .filter(|&x| x <= stop + 0.5 * step)
        .collect())
}

/// Grid indices in `Σ_{l,ac}`, `Σ_{r,ac}` and their union (cut at site 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EssentialSupport {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub union: Vec<usize>,
}

fn density_positive(value: Result<crate::herglotz::HerglotzValue>) -> Result<bool> {
    match value {
        Ok(m) => Ok(ac_density(&m)? > SUPPORT_THRESHOLD),
        // A pole on the real axis carries a point mass, not a.c. spectrum.
        Err(Error::PoleHit { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

pub fn essential_support(spec: &JacobiSpec, grid: &EnergyGrid) -> Result<EssentialSupport> {
    let flags: Vec<(bool, bool)> = grid
        .points
        .par_iter()
        .map(|&lambda| {
            let point = BoundaryPoint::above(lambda);
            Ok((
                density_positive(m_left(spec, 0, point))?,
                density_positive(m_right(spec, 0, point))?,
            ))
        })
        .collect::<Result<_>>()?;
    let pick =
        |f: &dyn Fn(&(bool, bool)) -> bool| flags.iter().enumerate().filter(|(_, x)| f(x)).map(|(i, _)| i).collect();
    Ok(EssentialSupport {
        left: pick(&|x| x.0),
        right: pick(&|x| x.1),
        union: pick(&|x| x.0 || x.1),
    })
}

/// Values at one `(λ, n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriteriaRow {
    pub lambda: f64,
    pub n: i64,
    pub re_g: f64,
    /// `|a_n² m_n^(r)(λ+i0) conj(m_{n+1}^(l)(λ+i0)) - 1|`.
    pub specref_residual: f64,
    /// `max(|s_ll|, |s_rr|)` for the cut at `n`.
    pub s_diag_mag: f64,
    pub verdict_mt: bool,
    pub verdict_spec: bool,
    pub verdict_stat: bool,
}

/// Verdicts of the criteria at one energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointVerdicts {
    pub lambda: f64,
    /// `Re G_nn = 0` for every `n` in the range.
    pub mt_all: bool,
    /// `Re G_nn = 0` for some three consecutive `n`.
    pub mt_triple: bool,
    /// Spectral identity at some `n`.
    pub spec_some: bool,
    /// Spectral identity at every `n`.
    pub spec_all: bool,
    /// `s` off-diagonal for some cut.
    pub stationary: bool,
    pub agree: bool,
    /// Statistics the verdicts are thresholded on, in the order
    /// `mt_all, mt_triple, spec_some, spec_all, stationary`.
    pub statistics: [f64; 5],
}

impl PointVerdicts {
    pub fn reflectionless(&self) -> bool {
        self.agree && self.mt_all
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriteriaReport {
    pub tol: f64,
    pub rows: Vec<CriteriaRow>,
    pub points: Vec<PointVerdicts>,
    /// Grid points left out, with the reason.
    pub dropped: Vec<(f64, String)>,
}

impl CriteriaReport {
    pub fn all_agree(&self) -> bool {
        self.points.iter().all(|p| p.agree)
    }

    pub fn all_reflectionless(&self) -> bool {
        self.points.iter().all(|p| p.reflectionless())
    }

    /// Verdict statistics lying strictly between [`GAP_LOW`] and
    /// [`GAP_HIGH`].
    pub fn gap_violations(&self) -> Vec<(f64, &'static str, f64)> {
        let names = ["mt_all", "mt_triple", "spec_some", "spec_all", "stationary"];
        let mut out = Vec::new();
        for p in &self.points {
            for (name, &v) in names.iter().zip(&p.statistics) {
                if v > GAP_LOW && v < GAP_HIGH {
                    out.push((p.lambda, *name, v));
                }
            }
        }
        out
    }

    /// Rows evaluated at `λ`.
    pub fn rows_at(&self, lambda: f64) -> impl Iterator<Item = &CriteriaRow> {
        self.rows.iter().filter(move |r| r.lambda == lambda)
    }
}

fn evaluate_row(spec: &JacobiSpec, lambda: f64, n: i64, tol: f64) -> Result<CriteriaRow> {
    let point = BoundaryPoint::above(lambda);
    let re_g = green_diag(spec, n, point)?.value.re;
    let m_r = m_right(spec, n, point)?.value;
    let m_l = m_left(spec, n + 1, point)?.value;
    let a = spec.a(n);
    let specref_residual = (m_r * m_l.conj() * (a * a) - 1.0).norm();
    let s = scattering_matrix(spec, n, lambda)?;
    let s_diag_mag = s.s_ll.norm().max(s.s_rr.norm());
    Ok(CriteriaRow {
        lambda,
        n,
        re_g,
        specref_residual,
        s_diag_mag,
        verdict_mt: re_g.abs() <= tol,
        verdict_spec: specref_residual <= tol,
        verdict_stat: s_diag_mag <= tol,
    })
}

fn verdicts(lambda: f64, rows: &[CriteriaRow], tol: f64) -> PointVerdicts {
    let max = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0, f64::max);
    let min = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::INFINITY, f64::min);
    let statistics = [
        max(&mut rows.iter().map(|r| r.re_g.abs())),
        min(&mut rows.windows(3).map(|w| max(&mut w.iter().map(|r| r.re_g.abs())))),
        min(&mut rows.iter().map(|r| r.specref_residual)),
        max(&mut rows.iter().map(|r| r.specref_residual)),
        min(&mut rows.iter().map(|r| r.s_diag_mag)),
    ];
    let [mt_all, mt_triple, spec_some, spec_all, stationary] = statistics.map(|v| v <= tol);
    let agree = [mt_triple, spec_some, spec_all, stationary]
        .iter()
        .all(|&v| v == mt_all);
    PointVerdicts {
        lambda,
        mt_all,
        mt_triple,
        spec_some,
        spec_all,
        stationary,
        agree,
        statistics,
    }
}

/// Evaluates the measure-theoretic, spectral and stationary criteria at
/// every grid point in the essential support and every cut in `n_range`.
pub fn reflectionless_report(
    spec: &JacobiSpec,
    grid: &EnergyGrid,
    n_range: RangeInclusive<i64>,
    tol: f64,
) -> Result<CriteriaReport> {
    if n_range.clone().count() < 3 {
        return Err(Error::InvalidArgument(
            "the cut range needs at least three consecutive sites".into(),
        ));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    let support = essential_support(spec, grid)?;
    let mut dropped = grid.dropped.clone();
    let mut in_support = vec![false; grid.len()];
    support.union.iter().for_each(|&i| in_support[i] = true);
    let mut retained = Vec::new();
    for (i, &lambda) in grid.points.iter().enumerate() {
        if in_support[i] {
            retained.push(lambda);
        } else {
            dropped.push((lambda, "outside the essential support".into()));
        }
    }
    let per_point: Vec<Result<Vec<CriteriaRow>>> = retained
        .par_iter()
        .map(|&lambda| n_range.clone().map(|n| evaluate_row(spec, lambda, n, tol)).collect())
        .collect();
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for (lambda, result) in retained.iter().zip(per_point) {
        match result {
            Ok(r) => {
                points.push(verdicts(*lambda, &r, tol));
                rows.extend(r);
            }
            Err(e @ Error::BandEdge { .. }) => dropped.push((*lambda, e.to_string())),
            Err(e) => return Err(e),
        }
    }
    dropped.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(CriteriaReport {
        tol,
        rows,
        points,
        dropped,
    })
}

/// Reservoir parameters: inverse temperature and chemical potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reservoir {
    pub beta: f64,
    pub mu: f64,
}

impl Reservoir {
    pub fn fermi(&self, lambda: f64) -> f64 {
        1.0 / (1.0 + (self.beta * (lambda - self.mu)).exp())
    }
}

/// Target absolute error per band for the transport integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub tol: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { tol: 1e-12 }
    }
}

/// Steady-state currents with `ħ = e = 1`; positive from left to right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Currents {
    pub charge: f64,
    pub energy: f64,
}

/// `I_q = (2π)⁻¹ ∫ T(λ)(f_l - f_r) dλ` and `I_e` with an extra factor `λ`,
/// integrated over the bands by double-exponential quadrature. Nodes inside
/// the edge margin use `T` at the nearest admissible energy.
pub fn landauer_current(
    spec: &JacobiSpec,
    left: Reservoir,
    right: Reservoir,
    quadrature: Quadrature,
) -> Result<Currents> {
    for r in [left, right] {
        if r.beta.is_nan() || r.beta <= 0.0 || !r.mu.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "reservoir β = {}, μ = {} is not admissible",
                r.beta, r.mu
            )));
        }
    }
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let bands = spec.bands().bands().to_vec();
    let interiors = spec.bands().interiors();
    let mut charge = 0.0;
    let mut energy = 0.0;
    for (&(lo, hi), &(ilo, ihi)) in bands.iter().zip(&interiors) {
        let weight = |lambda: f64| -> f64 {
            let df = left.fermi(lambda) - right.fermi(lambda);
            if df == 0.0 {
                return 0.0;
            }
            match transmission(spec, 0, lambda.clamp(ilo, ihi)) {
                Ok(t) => t * df,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            }
        };
        charge += quadrature::double_exponential::integrate(weight, lo, hi, quadrature.tol).integral;
        energy += quadrature::double_exponential::integrate(|x| x * weight(x), lo, hi, quadrature.tol).integral;
    }
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(Currents {
        charge: charge / (2.0 * PI),
        energy: energy / (2.0 * PI),
    })
}
