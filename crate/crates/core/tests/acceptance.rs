//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use jacobi_scatter::analysis::{
    landauer_current, reflectionless_report, CriteriaReport, EnergyGrid, Quadrature, Reservoir, GAP_HIGH, GAP_LOW,
};
use jacobi_scatter::dynamics::{dynamical_reflection, evolve, LatticeState, PropagationPlan};
use jacobi_scatter::herglotz::{m_left, m_oracle_truncated, m_right};
use jacobi_scatter::jost::{alpha_beta, jost_solution, spectral_reflection_mratio, wronskian};
use jacobi_scatter::model::random_perturbation;
use jacobi_scatter::scattering::{green_diag, scattering_matrix, unitarity_defect};
use jacobi_scatter::{Background, BoundaryPoint, Error, JacobiSpec, Perturbation, Side};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn free_grid() -> Vec<f64> {
    (0..=3998).map(|k| -1.999 + k as f64 * 1e-3).collect()
}

fn single_site() -> JacobiSpec {
    JacobiSpec::free_with_potential(0, &[1.0]).unwrap()
}

fn period_two() -> JacobiSpec {
    let bg = Background::Periodic {
        a: vec![1.0, 0.5],
        b: vec![0.0, 0.0],
        phase: 0,
    };
    JacobiSpec::new(bg, Perturbation::default()).unwrap()
}

fn random_suite() -> Vec<JacobiSpec> {
    (0..100u64)
        .map(|seed| random_perturbation(&mut ChaCha8Rng::seed_from_u64(seed), Background::Free, 8))
        .collect()
}

fn criterion_1() -> Outcome {
    let free = JacobiSpec::free();
    let start = Instant::now();
    let (mut re_g, mut s_ll, mut spec_res) = (0.0f64, 0.0f64, 0.0f64);
    for lambda in free_grid() {
        let point = BoundaryPoint::above(lambda);
        re_g = re_g.max(green_diag(&free, 0, point).map_err(|e| e.to_string())?.value.re.abs());
        s_ll = s_ll.max(
            scattering_matrix(&free, 0, lambda)
                .map_err(|e| e.to_string())?
                .s_ll
                .norm(),
        );
        let m0 = m_right(&free, 0, point).map_err(|e| e.to_string())?.value;
        let m1 = m_left(&free, 1, point).map_err(|e| e.to_string())?.value;
        spec_res = spec_res.max((m0 * m1.conj() * free.a(0).powi(2) - 1.0).norm());
    }
    let elapsed = start.elapsed().as_secs_f64();
    check(
        re_g <= 1e-10 && s_ll <= 1e-10 && spec_res <= 1e-10 && elapsed <= 1.0,
        format!(
            "max|Re G00| = {re_g:.2e}, max|s_ll| = {s_ll:.2e}, max specref residual = {spec_res:.2e}, {elapsed:.3} s"
        ),
    )
}

fn criterion_2() -> Outcome {
    let spec = single_site();
    let s = scattering_matrix(&spec, 0, 0.0).map_err(|e| e.to_string())?;
    let re_g = green_diag(&spec, 0, BoundaryPoint::above(0.0))
        .map_err(|e| e.to_string())?
        .value
        .re;
    let r_jost = alpha_beta(&spec, 0.0).map_err(|e| e.to_string())?.r_r;
    let values = [s.s_ll.norm_sqr(), 1.0 - s.s_lr.norm_sqr(), re_g, r_jost];
    let spread = values
        .iter()
        .flat_map(|a| values.iter().map(move |b| (a - b).abs()))
        .fold(0.0, f64::max);
    let off_target = values.iter().map(|v| (v - 0.2).abs()).fold(0.0, f64::max);
    let mut defect: f64 = 0.0;
    for lambda in free_grid() {
        defect = defect.max(unitarity_defect(
            &scattering_matrix(&spec, 0, lambda).map_err(|e| e.to_string())?,
        ));
    }
    check(
        spread <= 1e-10 && off_target <= 1e-10 && defect <= 1e-10,
        format!(
            "|s_ll|² = {:.15}, |s_lr|² = {:.15}, Re G00 = {:.15}, R_r = {:.15}, max unitarity defect = {defect:.2e}",
            values[0],
            s.s_lr.norm_sqr(),
            values[2],
            values[3]
        ),
    )
}

/// `Tr` of the one-period transfer matrix product, computed directly.
fn discriminant_oracle(a: &[f64], b: &[f64], lambda: f64) -> f64 {
    let p = a.len();
    let mut m = [[1.0, 0.0], [0.0, 1.0]];
    for k in 0..p {
        let a_prev = a[(k + p - 1) % p];
        let t = [[(lambda - b[k]) / a[k], -a_prev / a[k]], [1.0, 0.0]];
        m = [
            [
                t[0][0] * m[0][0] + t[0][1] * m[1][0],
                t[0][0] * m[0][1] + t[0][1] * m[1][1],
            ],
            [
                t[1][0] * m[0][0] + t[1][1] * m[1][0],
                t[1][0] * m[0][1] + t[1][1] * m[1][1],
            ],
        ];
    }
    m[0][0] + m[1][1]
}

fn criterion_3() -> Outcome {
    let spec = period_two();
    let edges: Vec<f64> = spec.bands().edges().collect();
    let edge_err = edges
        .iter()
        .map(|&e| (discriminant_oracle(&[1.0, 0.5], &[0.0, 0.0], e).abs() - 2.0).abs())
        .fold(0.0, f64::max);
    let grid = EnergyGrid::band_scan(&spec, 1000);
    let report = reflectionless_report(&spec, &grid, -3..=3, 1e-8).map_err(|e| e.to_string())?;
    let worst = report
        .points
        .iter()
        .map(|p| p.statistics.iter().copied().fold(0.0, f64::max))
        .fold(0.0, f64::max);
    check(
        edge_err <= 1e-8 && report.points.len() == 2000 && report.all_reflectionless() && report.all_agree(),
        format!(
            "edges {edges:?}, max ||Δ| - 2| = {edge_err:.2e}, {} of 2000 points reflectionless, worst statistic {worst:.2e}",
            report.points.iter().filter(|p| p.reflectionless()).count()
        ),
    )
}

struct Suite {
    specs: Vec<JacobiSpec>,
    reports: Vec<CriteriaReport>,
}

fn build_suite() -> Result<Suite, String> {
    let specs = random_suite();
    let reports = specs
        .iter()
        .map(|spec| {
            let grid = EnergyGrid::range(spec, -1.99, 1.99, 0.01)?;
            reflectionless_report(spec, &grid, -3..=3, 1e-8)
        })
        .collect::<Result<Vec<_>, Error>>()
        .map_err(|e| e.to_string())?;
    Ok(Suite { specs, reports })
}

fn criterion_4(suite: &Suite) -> Outcome {
    let points: usize = suite.reports.iter().map(|r| r.points.len()).sum();
    let disagree: usize = suite
        .reports
        .iter()
        .map(|r| r.points.iter().filter(|p| !p.agree).count())
        .sum();
    let violations: Vec<String> = suite
        .reports
        .iter()
        .enumerate()
        .flat_map(|(seed, r)| {
            r.gap_violations()
                .into_iter()
                .map(move |(l, name, v)| format!("seed {seed} λ = {l:.2} {name} = {v:.2e}"))
        })
        .collect();
    let near_tol = suite
        .reports
        .iter()
        .flat_map(|r| r.points.iter().flat_map(|p| p.statistics))
        .filter(|v| (1e-9..=1e-7).contains(v))
        .count();
    check(
        disagree == 0 && violations.is_empty(),
        format!(
            "{points} retained points, {disagree} disagreements, {near_tol} statistics in [1e-9, 1e-7], {} statistics inside ({GAP_LOW:e}, {GAP_HIGH:e}){}{}",
            violations.len(),
            if violations.is_empty() { "" } else { ": " },
            violations.join("; ")
        ),
    )
}

fn criterion_5(suite: &Suite) -> Outcome {
    let mut worst: f64 = 0.0;
    for (spec, report) in suite.specs.iter().zip(&suite.reports) {
        for p in &report.points {
            let reference = scattering_matrix(spec, 0, p.lambda)
                .map_err(|e| e.to_string())?
                .s_ll
                .norm();
            for n in -3..=3 {
                let s = scattering_matrix(spec, n, p.lambda).map_err(|e| e.to_string())?;
                worst = worst.max((s.s_ll.norm() - reference).abs());
            }
        }
    }
    check(worst <= 1e-8, format!("max ||s_ll(n)| - |s_ll(0)|| = {worst:.2e}"))
}

fn criterion_6(suite: &Suite) -> Outcome {
    let (mut vs_s, mut vs_mratio, mut evaluated, mut skipped) = (0.0f64, 0.0f64, 0usize, 0usize);
    for (spec, report) in suite.specs.iter().zip(&suite.reports) {
        for p in &report.points {
            let r_jost = match alpha_beta(spec, p.lambda) {
                Ok(d) => d.r_r,
                Err(Error::NormalizationPole { .. }) => {
                    skipped += 1;
                    continue;
                }
                Err(e) => return Err(e.to_string()),
            };
            let s_rr = scattering_matrix(spec, 0, p.lambda)
                .map_err(|e| e.to_string())?
                .s_rr
                .norm_sqr();
            let mratio = spectral_reflection_mratio(spec, p.lambda).map_err(|e| e.to_string())?;
            vs_s = vs_s.max((r_jost - s_rr).abs());
            vs_mratio = vs_mratio.max((r_jost - mratio).abs());
            evaluated += 1;
        }
    }
    check(
        vs_s <= 1e-8 && vs_mratio <= 1e-8,
        format!(
            "{evaluated} points ({skipped} Jost zeros skipped), max |R_jost - |s_rr|²| = {vs_s:.2e}, max |R_jost - R_mratio| = {vs_mratio:.2e}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let c1 = dynamical_reflection(&single_site(), 0.0, 0.05, 4000).map_err(|e| e.to_string())?;
    let free = dynamical_reflection(&JacobiSpec::free(), 0.0, 0.05, 2000).map_err(|e| e.to_string())?;
    let p2 = dynamical_reflection(&period_two(), 1.0, 0.1, 2000).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    check(
        (c1.t_dyn - 0.8).abs() <= 0.05 && free.t_dyn >= 0.999 && p2.r_dyn <= 1e-2 && elapsed <= 600.0,
        format!(
            "c=1: T_dyn = {:.6} (stationary average {:.6}); free: T_dyn = {:.9}; period-2: R_dyn = {:.2e}; {elapsed:.1} s",
            c1.t_dyn,
            1.0 - c1.r_stationary_avg,
            free.t_dyn,
            p2.r_dyn
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut oracle_err: f64 = 0.0;
    let mut wronskian_err: f64 = 0.0;
    for seed in 1000..1050u64 {
        let spec = random_perturbation(&mut ChaCha8Rng::seed_from_u64(seed), Background::Free, 8);
        for re in [-2.5, -1.7, -0.6, 0.0, 0.9, 1.95, 2.4] {
            let z = Complex64::new(re, 1e-2);
            let point = BoundaryPoint::upper(z).map_err(|e| e.to_string())?;
            for side in [Side::Left, Side::Right] {
                let fast = match side {
                    Side::Right => m_right(&spec, 0, point),
                    Side::Left => m_left(&spec, 0, point),
                }
                .map_err(|e| e.to_string())?
                .value;
                let slow = m_oracle_truncated(&spec, side, 0, z, 4000).map_err(|e| e.to_string())?;
                oracle_err = oracle_err.max((fast - slow).norm());
            }
        }
        for lambda in [-1.3, 0.4, 1.1] {
            let l = jost_solution(&spec, Side::Left, lambda).map_err(|e| e.to_string())?;
            let r = jost_solution(&spec, Side::Right, lambda).map_err(|e| e.to_string())?;
            let w0 = wronskian(&l, &r, -3).map_err(|e| e.to_string())?;
            let w1 = wronskian(&l, &r, 3).map_err(|e| e.to_string())?;
            wronskian_err = wronskian_err.max((w0 - w1).norm() / w0.norm());
        }
    }
    let spec = random_perturbation(&mut ChaCha8Rng::seed_from_u64(7), Background::Free, 8);
    let plan = PropagationPlan::new(&spec, 400).map_err(|e| e.to_string())?;
    let state = LatticeState::delta(400, 0).map_err(|e| e.to_string())?;
    let mut unitarity: f64 = 0.0;
    for t in [1.0, 25.0, 90.0] {
        unitarity = unitarity.max((evolve(&plan, &state, t).map_err(|e| e.to_string())?.norm() - 1.0).abs());
    }
    check(
        oracle_err <= 1e-6 && unitarity <= 1e-12 && wronskian_err <= 1e-12,
        format!(
            "max |m - m_truncated| = {oracle_err:.2e}, evolve norm drift = {unitarity:.2e}, Wronskian drift = {wronskian_err:.2e}"
        ),
    )
}

/// Composite 5-point Gauss-Legendre rule.
fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let x = [
        0.0,
        0.538_469_310_105_683_1,
        -0.538_469_310_105_683_1,
        0.906_179_845_938_664,
        -0.906_179_845_938_664,
    ];
    let w = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let mid = a + (i as f64 + 0.5) * h;
            x.iter().zip(&w).map(|(xi, wi)| wi * f(mid + 0.5 * h * xi)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

fn criterion_9() -> Outcome {
    let free = JacobiSpec::free();
    let left = Reservoir { beta: 1.0, mu: 0.5 };
    let right = Reservoir { beta: 1.0, mu: -0.5 };
    let q = Quadrature::default();
    let zero = landauer_current(&free, left, left, q).map_err(|e| e.to_string())?;
    let i_free = landauer_current(&free, left, right, q).map_err(|e| e.to_string())?;
    let oracle = gauss_legendre(|x| left.fermi(x) - right.fermi(x), -2.0, 2.0, 1000) / (2.0 * PI);
    let i_c1 = landauer_current(&single_site(), left, right, q).map_err(|e| e.to_string())?;
    check(
        zero.charge == 0.0
            && zero.energy == 0.0
            && (i_free.charge - oracle).abs() <= 1e-8
            && i_c1.charge.abs() < i_free.charge.abs(),
        format!(
            "zero bias I = {:e}, free I = {:.12} vs quadrature {oracle:.12}, c=1 I = {:.12}",
            zero.charge, i_free.charge, i_c1.charge
        ),
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, outcome: Outcome| match &outcome {
        Ok(detail) => println!("PASS criterion {id} ({name}): {detail}"),
        Err(detail) => {
            failed += 1;
            println!("FAIL criterion {id} ({name}): {detail}");
        }
    };
    report(1, "free operator reflectionless", criterion_1());
    report(2, "single-site fixture", criterion_2());
    report(3, "period-2 fixture", criterion_3());
    match build_suite() {
        Ok(suite) => {
            report(4, "criteria equivalence on random perturbations", criterion_4(&suite));
            report(5, "cut-site invariance", criterion_5(&suite));
            report(6, "reflection identities", criterion_6(&suite));
        }
        Err(e) => {
            for (id, name) in [
                (4, "criteria equivalence on random perturbations"),
                (5, "cut-site invariance"),
                (6, "reflection identities"),
            ] {
                report(id, name, Err(format!("suite construction failed: {e}")));
            }
        }
    }
    report(7, "wave-packet dynamics", criterion_7());
    report(8, "m-function oracle, unitarity and Wronskian", criterion_8());
    report(9, "transport", criterion_9());
    if failed == 0 {
        println!("all acceptance criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
