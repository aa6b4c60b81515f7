//! Continuation in the investment slope κ₂, with κ₃ re-solved at every step
//! so the interior equilibrium stays fixed.

use rayon::prelude::*;

use crate::conserved::{periodic_debt, planar_cycle};
use crate::error::{Error, Result};
use crate::model::{ModelParams, State};
use crate::orbits::{shoot_orbit, shoot_orbit_at_anchor, PeriodicOrbit, ShootingOptions};
use crate::reduction::{reduced_multiplier, reduction_row, select_cycle, ReductionTables, Selection};
use crate::spectral::{critical_kappa2, hopf_indicator, interior_spectrum};

/// Default κ₂ window of the spectral sweep.
pub const DEFAULT_SWEEP: (f64, f64) = (8.0, 20.0);

#[derive(Debug, Clone, PartialEq)]
pub struct BranchData {
    pub a_omega: f64,
    pub period: f64,
    pub m_full: f64,
    /// Larger non-trivial multiplier (amplitude direction).
    pub m_amplitude: f64,
    pub m_reduced: Option<f64>,
    pub residual: f64,
    /// `|multiplier product − Liouville integral|`.
    pub liouville_gap: f64,
    /// `|phase multiplier − 1|`.
    pub unit_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationRecord {
    pub kappa2: f64,
    pub kappa3: f64,
    pub eta: f64,
    /// Real part of the complex pair.
    pub a: f64,
    /// Imaginary part of the complex pair.
    pub omega_h: f64,
    /// `|κ(π*) − ν(α+β+δ)|`.
    pub calibration_residual: f64,
    pub branch: Option<BranchData>,
    /// Error class and message when this step failed.
    pub failure: Option<(String, String)>,
}

impl ContinuationRecord {
    fn failed(kappa2: f64, err: &Error) -> Self {
        Self {
            kappa2,
            kappa3: f64::NAN,
            eta: f64::NAN,
            a: f64::NAN,
            omega_h: f64::NAN,
            calibration_residual: f64::NAN,
            branch: None,
            failure: Some((err.class().to_string(), err.to_string())),
        }
    }
}

/// Spectral data of the re-calibrated model at `kappa2`.
pub fn record_at(params: &ModelParams, kappa2: f64) -> Result<(ModelParams, ContinuationRecord)> {
    let p = params.with_kappa2(kappa2)?;
    let spec = interior_spectrum(&p)?;
    let pair = spec
        .complex_pair()
        .ok_or_else(|| Error::NoRoot(format!("no complex pair at kappa2 = {kappa2}")))?;
    let record = ContinuationRecord {
        kappa2,
        kappa3: p.kappa3,
        eta: spec.eta,
        a: pair.re,
        omega_h: pair.im,
        calibration_residual: (p.investment(p.pi_star) - p.target_investment()).abs(),
        branch: None,
        failure: None,
    };
    Ok((p, record))
}

/// Evenly spaced spectral sweep; failed steps are recorded, not fatal.
pub fn sweep(params: &ModelParams, range: (f64, f64), steps: usize) -> Vec<ContinuationRecord> {
    let steps = steps.max(2);
    (0..steps)
        .into_par_iter()
        .map(|k| {
            let k2 = range.0 + (range.1 - range.0) * k as f64 / (steps - 1) as f64;
            match record_at(params, k2) {
                Ok((_, rec)) => rec,
                Err(e) => ContinuationRecord::failed(k2, &e),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfLocation {
    pub bisection: f64,
    pub analytic: f64,
    pub relative_difference: f64,
    /// Real part of the pair at the bisection result.
    pub residual: f64,
    pub omega_h: f64,
    pub period: f64,
    pub real_eigenvalue: f64,
    pub iterations: usize,
}

/// Bisection on the real part of the complex pair.
pub fn locate_hopf(params: &ModelParams, bracket: (f64, f64)) -> Result<HopfLocation> {
    let a_of = |k2: f64| record_at(params, k2).map(|(_, r)| r.a);
    let (mut lo, mut hi) = bracket;
    let (mut f_lo, f_hi) = (a_of(lo)?, a_of(hi)?);
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange("a(kappa2)"));
    }
    let mut iterations = 0;
    let mut mid = 0.5 * (lo + hi);
    let mut f_mid = a_of(mid)?;
    while f_mid.abs() >= 1e-12 && iterations < 200 {
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        let next = 0.5 * (lo + hi);
        if next == mid {
            break;
        }
        mid = next;
        f_mid = a_of(mid)?;
        iterations += 1;
    }
    let analytic = critical_kappa2(params)?;
    let p = params.with_kappa2(mid)?;
    let spec = interior_spectrum(&p)?;
    let pair = spec.complex_pair().expect("complex pair at the Hopf point");
    Ok(HopfLocation {
        bisection: mid,
        analytic,
        relative_difference: (mid - analytic).abs() / analytic,
        residual: f_mid,
        omega_h: pair.im,
        period: 2.0 * std::f64::consts::PI / spec.omega_r.sqrt(),
        real_eigenvalue: spec.eigenvalues[0].re,
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchOptions {
    pub shooting: ShootingOptions,
    /// Phase grid of the zero-interest cycles used for seeding and `M_reduced`.
    pub reduced_grid: usize,
    pub max_halvings: usize,
    pub compute_reduced: bool,
}

impl Default for BranchOptions {
    fn default() -> Self {
        Self {
            shooting: ShootingOptions::default(),
            reduced_grid: 256,
            max_halvings: 4,
            compute_reduced: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub record: ContinuationRecord,
    pub orbit: Option<PeriodicOrbit>,
    pub selection: Option<Selection>,
}

/// Family parameters scanned when looking for the selected cycle.
fn seed_window() -> Vec<f64> {
    let (lo, hi, n) = (1e-4_f64, 0.08_f64, 28);
    (0..n)
        .map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64))
        .collect()
}

/// Selected cycle of the reduction at `params`, scanning a fixed window.
pub fn reduction_selection(params: &ModelParams, grid: usize) -> Result<Selection> {
    let rows: Vec<_> = seed_window()
        .par_iter()
        .map(|&a| reduction_row(params, a, grid))
        .collect();
    // large family members may leave the admissible region; keep the prefix
    let rows: Vec<_> = rows.into_iter().map_while(|r| r.ok()).collect();
    select_cycle(&ReductionTables {
        params: *params,
        grid,
        rows,
    })
}

/// Shooting seed `(anchor, period)` from the reduction's selected cycle.
pub fn reduction_seed(params: &ModelParams, grid: usize) -> Result<(State, f64, Selection)> {
    let sel = reduction_selection(params, grid)?;
    let cycle = planar_cycle(sel.amplitude, params, grid)?;
    let debt = periodic_debt(&cycle)?;
    let lambda0 = params.interior_equilibrium()?.point.lambda;
    let seed = State::new(cycle.samples[0][0], lambda0, debt.d[0]);
    Ok((seed, 2.0 * std::f64::consts::PI / sel.predicted_frequency, sel))
}

fn branch_data(orbit: &PeriodicOrbit, p: &ModelParams, opts: &BranchOptions) -> BranchData {
    let fl = &orbit.floquet;
    let m_reduced = if opts.compute_reduced {
        reduced_multiplier(p, orbit.amplitude, opts.reduced_grid)
            .ok()
            .map(|(_, m)| m)
    } else {
        None
    };
    BranchData {
        a_omega: orbit.amplitude,
        period: orbit.period,
        m_full: fl.m_full(),
        m_amplitude: fl.amplitude,
        m_reduced,
        residual: orbit.residual,
        liouville_gap: (fl.product - orbit.liouville).abs(),
        unit_gap: (fl.multipliers[0].re - 1.0).abs(),
    }
}

/// Solves the orbit at `kappa2` from a seed.
fn solve_at(
    params: &ModelParams,
    kappa2: f64,
    seed: (State, f64),
    opts: &BranchOptions,
) -> Result<(ModelParams, ContinuationRecord, PeriodicOrbit)> {
    let (p, record) = record_at(params, kappa2)?;
    let orbit = shoot_orbit(seed.0, seed.1, &p, &opts.shooting)?;
    Ok((p, record, orbit))
}

fn extrapolate(prev: &[(f64, PeriodicOrbit)], kappa2: f64) -> (State, f64) {
    match prev {
        [.., (k1, o1), (k2, o2)] if (k2 - k1).abs() > 0.0 => {
            let s = (kappa2 - k2) / (k2 - k1);
            let lerp = |a: f64, b: f64| b + s * (b - a);
            (
                State::new(
                    lerp(o1.anchor.omega, o2.anchor.omega),
                    o2.anchor.lambda,
                    lerp(o1.anchor.d, o2.anchor.d),
                ),
                lerp(o1.period, o2.period),
            )
        }
        [.., (_, o)] => (o.anchor, o.period),
        [] => unreachable!("extrapolation needs a previous orbit"),
    }
}

/// Natural-parameter continuation of the cycle branch over `kappa2_values`.
///
/// The first point is seeded by the reduction; later points by secant
/// extrapolation of the previous orbits, with step halving on failure and a
/// fresh reduction seed as the last resort. Repeated failure terminates the
/// branch with a failure record.
pub fn trace_branch(params: &ModelParams, kappa2_values: &[f64], opts: &BranchOptions) -> Vec<BranchPoint> {
    let mut out = Vec::new();
    let mut solved: Vec<(f64, PeriodicOrbit)> = Vec::new();
    for &k2 in kappa2_values {
        let attempt = || -> Result<(ModelParams, ContinuationRecord, PeriodicOrbit, Option<Selection>)> {
            if solved.is_empty() {
                let p = params.with_kappa2(k2)?;
                let (seed, t, sel) = reduction_seed(&p, opts.reduced_grid)?;
                let (p, rec, orbit) = solve_at(params, k2, (seed, t), opts)?;
                return Ok((p, rec, orbit, Some(sel)));
            }
            let direct = solve_at(params, k2, extrapolate(&solved, k2), opts);
            if let Ok((p, rec, orbit)) = direct {
                return Ok((p, rec, orbit, None));
            }
            // step halving towards the target
            let mut last_err = direct.err().expect("failed attempt");
            let mut local = solved.clone();
            let mut halvings = 0;
            let mut target = k2;
            while halvings < opts.max_halvings {
                let from = local.last().expect("non-empty").0;
                let mid = 0.5 * (from + target);
                match solve_at(params, mid, extrapolate(&local, mid), opts) {
                    Ok((_, _, orbit)) => {
                        local.push((mid, orbit));
                        match solve_at(params, k2, extrapolate(&local, k2), opts) {
                            Ok((p, rec, orbit)) => return Ok((p, rec, orbit, None)),
                            Err(e) => last_err = e,
                        }
                        target = k2;
                    }
                    Err(e) => {
                        last_err = e;
                        target = mid;
                    }
                }
                halvings += 1;
            }
            // last resort: reseed from the reduction
            let p = params.with_kappa2(k2)?;
            match reduction_seed(&p, opts.reduced_grid)
                .and_then(|(seed, t, sel)| solve_at(params, k2, (seed, t), opts).map(|r| (r, sel)))
            {
                Ok(((p, rec, orbit), sel)) => Ok((p, rec, orbit, Some(sel))),
                Err(_) => Err(last_err),
            }
        };
        match attempt() {
            Ok((p, mut record, orbit, selection)) => {
                record.branch = Some(branch_data(&orbit, &p, opts));
                solved.push((k2, orbit.clone()));
                out.push(BranchPoint {
                    record,
                    orbit: Some(orbit),
                    selection,
                });
            }
            Err(e) => {
                let mut record = record_at(params, k2)
                    .map(|(_, r)| r)
                    .unwrap_or_else(|_| ContinuationRecord::failed(k2, &e));
                record.failure = Some((e.class().to_string(), e.to_string()));
                out.push(BranchPoint {
                    record,
                    orbit: None,
                    selection: None,
                });
                break;
            }
        }
    }
    out
}

/// κ₂ values below the Hopf point, spaced so that `κ₂* − κ₂` is geometric.
pub fn branch_kappa2_values(params: &ModelParams, min_gap: f64, max_gap: f64, n: usize) -> Result<Vec<f64>> {
    let ks = critical_kappa2(params)?;
    Ok((0..n)
        .map(|k| {
            let s = if n > 1 { k as f64 / (n - 1) as f64 } else { 0.0 };
            ks - min_gap * (max_gap / min_gap).powf(s)
        })
        .collect())
}

/// Finds the branch orbit whose `A_ω` equals `target`, by a secant iteration
/// on the anchor `ω` between the bracketing branch points.
pub fn orbit_with_amplitude(
    params: &ModelParams,
    target: f64,
    branch: &[BranchPoint],
    opts: &BranchOptions,
) -> Result<(f64, PeriodicOrbit)> {
    let pts: Vec<(f64, &PeriodicOrbit)> = branch
        .iter()
        .filter_map(|b| b.orbit.as_ref().map(|o| (b.record.kappa2, o)))
        .collect();
    let idx = pts
        .windows(2)
        .position(|w| (w[0].1.amplitude - target).signum() != (w[1].1.amplitude - target).signum())
        .ok_or(Error::NoSignChange("A_omega - target"))?;
    // secant on the anchor ω with κ₂ solved for, which stays well
    // conditioned where the amplitude multiplier approaches 1
    let solve = |omega: f64, from: &PeriodicOrbit| {
        shoot_orbit_at_anchor(
            omega,
            from.anchor.d,
            from.period,
            from.params.kappa2,
            params,
            &opts.shooting,
        )
    };
    let (mut o_a, mut o_b) = (pts[idx].1.clone(), pts[idx + 1].1.clone());
    for _ in 0..30 {
        let (ga, gb) = (o_a.amplitude - target, o_b.amplitude - target);
        let (wa, wb) = (o_a.anchor.omega, o_b.anchor.omega);
        let w_new = wb - gb * (wb - wa) / (gb - ga);
        let near = if (w_new - wa).abs() < (w_new - wb).abs() { &o_a } else { &o_b };
        let orbit = solve(w_new, near)?;
        if (orbit.amplitude - target).abs() < 1e-10 * target.max(1e-3) {
            return Ok((orbit.params.kappa2, orbit));
        }
        o_a = o_b;
        o_b = orbit;
    }
    let err = (o_b.amplitude - target).abs();
    if err < 1e-9 {
        Ok((o_b.params.kappa2, o_b))
    } else {
        Err(Error::NonConvergence {
            iterations: 30,
            residual: err,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(points: &[(f64, f64)]) -> LinearFit {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    LinearFit {
        slope,
        intercept: my - slope * mx,
        r2: if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 },
    }
}

/// Linear fit of `A_ω²` against η over the `count` smallest-amplitude branch points.
pub fn amplitude_scaling_fit(branch: &[BranchPoint], count: usize) -> Option<LinearFit> {
    let mut pts: Vec<(f64, f64)> = branch
        .iter()
        .filter_map(|b| b.record.branch.as_ref().map(|d| (b.record.eta, d.a_omega)))
        .collect();
    pts.sort_by(|x, y| x.1.total_cmp(&y.1));
    pts.truncate(count);
    if pts.len() < 3 {
        return None;
    }
    let sq: Vec<(f64, f64)> = pts.iter().map(|&(e, a)| (e, a * a)).collect();
    Some(linear_fit(&sq))
}

/// Indicator check used throughout: `sign(a) = sign(η)`.
pub fn record_consistent(rec: &ContinuationRecord) -> bool {
    rec.failure.is_some() || rec.a.signum() == rec.eta.signum()
}

/// `η` at the given parameters.
pub fn eta_of(params: &ModelParams) -> Result<f64> {
    Ok(hopf_indicator(params)?.eta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_records_are_consistent() {
        let p = ModelParams::benchmark();
        let recs = sweep(&p, (10.0, 16.0), 25);
        assert_eq!(recs.len(), 25);
        let eq = p.interior_equilibrium().unwrap().point;
        for r in &recs {
            assert!(r.failure.is_none());
            assert!(r.calibration_residual < 1e-12);
            assert!(record_consistent(r));
            let q = p.with_kappa2(r.kappa2).unwrap();
            let e = q.interior_equilibrium().unwrap().point;
            assert!((e.omega - eq.omega).abs() < 1e-12 && (e.d - eq.d).abs() < 1e-12);
        }
        assert!(recs.windows(2).all(|w| w[1].eta < w[0].eta));
        assert!(recs.first().unwrap().a > 0.0 && recs.last().unwrap().a < 0.0);
    }

    #[test]
    fn sweep_survives_infeasible_steps() {
        let p = ModelParams::benchmark();
        let recs = sweep(&p, (-1.0, 1.0), 3);
        assert!(recs.iter().any(|r| r.failure.is_some()));
        assert_eq!(recs.len(), 3);
    }

    #[test]
    fn hopf_bisection_matches_closed_form() {
        let p = ModelParams::benchmark();
        let h = locate_hopf(&p, DEFAULT_SWEEP).unwrap();
        assert!(h.relative_difference < 1e-8);
        assert!(h.residual.abs() < 1e-12);
        assert!((h.real_eigenvalue + 0.045).abs() < 1e-6);
        assert!((h.omega_h - 0.95304).abs() < 1e-5);
        assert!((h.period - 6.5927).abs() < 6.5927e-3);
        assert!(matches!(locate_hopf(&p, (14.0, 20.0)), Err(Error::NoSignChange(_))));
    }

    #[test]
    fn linear_fit_exact_line() {
        let f = linear_fit(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]);
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-14);
        assert!((f.r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn short_branch_near_hopf() {
        let p = ModelParams::benchmark();
        let ks = branch_kappa2_values(&p, 0.01, 0.04, 3).unwrap();
        let opts = BranchOptions {
            compute_reduced: false,
            ..BranchOptions::default()
        };
        let branch = trace_branch(&p, &ks, &opts);
        assert_eq!(branch.len(), 3);
        let amps: Vec<f64> = branch
            .iter()
            .map(|b| b.record.branch.as_ref().expect("converged").a_omega)
            .collect();
        assert!(amps.windows(2).all(|w| w[1] > w[0]), "{amps:?}");
        for b in &branch {
            let d = b.record.branch.as_ref().unwrap();
            assert!(d.residual < 1e-10 && d.unit_gap < 1e-6 && d.liouville_gap < 1e-6);
            assert!(((d.m_full.ln() / d.period) + 0.045).abs() < 0.02);
        }
    }
}
