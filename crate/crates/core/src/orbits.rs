//! Limit cycles of the full model for `r > 0`.
//!
//! Cycles are anchored where they cross `λ = λ₀` with `ω > ω₀`. Newton
//! shooting solves for `(ω, d, T)` at that anchor, and the monodromy matrix
//! then yields the Floquet multipliers.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::integrate::{
    integrate_system, model_options, pack_variational, unpack_variational, KeenFlow,
    VariationalFlow,
};
use crate::linalg::{char_poly, cubic_roots, inverse3, mat_mul, quadratic_roots, solve3, Mat3, IDENTITY3};
use crate::model::{max_norm, ModelParams, State};
use crate::periodic;
use crate::spectral::jacobian_trace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOptions {
    pub rk_tol: f64,
    pub newton_tol: f64,
    pub max_iter: usize,
    /// Phase grid size of the stored samples.
    pub grid: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            rk_tol: 1e-12,
            newton_tol: 1e-10,
            max_iter: 25,
            grid: 512,
        }
    }
}

/// Floquet multipliers of a cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct FloquetReport {
    /// Ordered as (phase, larger non-trivial, smaller non-trivial).
    pub multipliers: [Complex64; 3],
    /// Smaller-modulus non-trivial multiplier, the debt-transverse direction.
    pub transverse: f64,
    /// Larger-modulus non-trivial multiplier, the in-family amplitude direction.
    pub amplitude: f64,
    /// Eigenvalues of the monodromy via its characteristic cubic (cross-check).
    pub cubic: [Complex64; 3],
    pub product: f64,
}

impl FloquetReport {
    /// The multiplier compared against the reduced `M(I)`.
    pub fn m_full(&self) -> f64 {
        self.transverse
    }

    /// Largest-modulus multiplier strictly inside the unit disk, excluding the phase one.
    pub fn largest_inside(&self) -> Option<f64> {
        self.multipliers[1..]
            .iter()
            .filter(|z| z.norm() < 1.0)
            .map(|z| z.norm())
            .fold(None, |acc: Option<f64>, m| Some(acc.map_or(m, |a| a.max(m))))
    }
}

#[derive(Debug, Clone)]
pub struct PeriodicOrbit {
    pub params: ModelParams,
    pub anchor: State,
    pub period: f64,
    pub samples: Vec<[f64; 3]>,
    /// `(max ω − min ω)/2`.
    pub amplitude: f64,
    pub peak_to_peak: f64,
    pub monodromy: Mat3,
    pub floquet: FloquetReport,
    /// `exp(∫₀ᵀ tr J dt)`.
    pub liouville: f64,
    pub residual: f64,
    pub residual_history: Vec<f64>,
}

impl PeriodicOrbit {
    pub fn iterations(&self) -> usize {
        self.residual_history.len().saturating_sub(1)
    }

    pub fn frequency(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.period
    }
}

fn flow_map(x0: &[f64; 3], t: f64, p: &ModelParams, tol: f64) -> Result<([f64; 3], Mat3)> {
    let y0 = pack_variational(x0, &IDENTITY3);
    let sol = integrate_system(&VariationalFlow { params: p }, 0.0, y0, t, model_options(tol))?;
    Ok(unpack_variational(&sol.last()))
}

/// Eigen-decomposition of a monodromy matrix whose phase direction `f` is known.
///
/// In the basis `[f, e_ω, e_d]` the matrix is block upper-triangular up to
/// the shooting residual, so the phase multiplier and the remaining pair
/// separate cleanly even when the amplitude multiplier is close to 1.
pub fn floquet_from_monodromy(v: &Mat3, f: &[f64; 3]) -> Result<FloquetReport> {
    let b = [[f[0], 1.0, 0.0], [f[1], 0.0, 0.0], [f[2], 0.0, 1.0]];
    let b_inv = inverse3(&b).ok_or_else(|| Error::Floquet("flow is tangent to the section".into()))?;
    let c = mat_mul(&b_inv, &mat_mul(v, &b));
    let phase = Complex64::new(c[0][0], 0.0);
    let tr = c[1][1] + c[2][2];
    let det = c[1][1] * c[2][2] - c[1][2] * c[2][1];
    let pair = quadratic_roots(-tr, det);
    let (big, small) = if pair[0].norm() >= pair[1].norm() {
        (pair[0], pair[1])
    } else {
        (pair[1], pair[0])
    };
    if (phase.re - 1.0).abs() > 1e-4 {
        return Err(Error::Floquet(format!(
            "no multiplier near 1 (phase multiplier {})",
            phase.re
        )));
    }
    let [c2, c1, c0] = char_poly(v);
    Ok(FloquetReport {
        multipliers: [phase, big, small],
        transverse: small.norm() * small.re.signum(),
        amplitude: big.norm() * big.re.signum(),
        cubic: cubic_roots(c2, c1, c0),
        product: crate::linalg::det3(v),
    })
}

/// Newton shooting for a cycle through `(ω, λ₀, d)`.
pub fn shoot_orbit(
    guess: State,
    t_guess: f64,
    params: &ModelParams,
    opts: &ShootingOptions,
) -> Result<PeriodicOrbit> {
    let eq = params.interior_equilibrium()?.point;
    let lambda0 = eq.lambda;
    let mut z = [guess.omega, guess.d, t_guess];
    let mut best = z;
    let mut history = Vec::new();
    let mut residual = f64::INFINITY;
    for iter in 0..=opts.max_iter {
        let x0 = [z[0], lambda0, z[1]];
        let (xt, v) = flow_map(&x0, z[2], params, opts.rk_tol)?;
        let r = [xt[0] - x0[0], xt[1] - x0[1], xt[2] - x0[2]];
        let res = max_norm(&r);
        history.push(res);
        // near the Hopf point the amplitude is only pinned to residual/(1 − m),
        // so keep iterating past the tolerance while the residual still halves
        let improved = res < 0.5 * residual;
        if res < residual {
            residual = res;
            best = z;
        }
        if residual < opts.newton_tol && (!improved || residual < 1e-14) {
            break;
        }
        if iter == opts.max_iter {
            if residual < opts.newton_tol {
                break;
            }
            return Err(Error::NonConvergence {
                iterations: opts.max_iter,
                residual,
            });
        }
        let f = params.rates(&xt);
        let jac = [
            [v[0][0] - 1.0, v[0][2], f[0]],
            [v[1][0], v[1][2], f[1]],
            [v[2][0], v[2][2] - 1.0, f[2]],
        ];
        let dz = solve3(&jac, &[-r[0], -r[1], -r[2]]).ok_or_else(|| {
            Error::DegenerateOrbit("singular shooting Jacobian".into())
        })?;
        // the amplitude direction is nearly neutral, so full steps can
        // collapse the anchor onto the equilibrium; limit the shrink per step
        let offset = z[0] - eq.omega;
        let mut step = 1.0;
        while step > 1e-3
            && (z[0] + step * dz[0] - eq.omega < 0.5 * offset || z[2] + step * dz[2] <= 0.0)
        {
            step *= 0.5;
        }
        for k in 0..3 {
            z[k] += step * dz[k];
        }
    }
    let z = best;
    if z[0] - eq.omega < 1e-7 {
        return Err(Error::DegenerateOrbit(format!(
            "zero-amplitude solution at omega = {}",
            z[0]
        )));
    }
    build_orbit(State::new(z[0], lambda0, z[1]), z[2], params, opts, residual, history)
}

/// Shooting with the anchor `ω` held fixed and `κ₂` free.
///
/// Near the Hopf point the amplitude is poorly pinned by the plain shooting
/// problem; trading `ω` for `κ₂` removes the near-neutral direction.
pub fn shoot_orbit_at_anchor(
    omega: f64,
    d_guess: f64,
    t_guess: f64,
    kappa2_guess: f64,
    params: &ModelParams,
    opts: &ShootingOptions,
) -> Result<PeriodicOrbit> {
    let lambda0 = params.interior_equilibrium()?.point.lambda;
    let mut z = [d_guess, t_guess, kappa2_guess];
    let mut history = Vec::new();
    let map = |z: &[f64; 3]| -> Result<([f64; 3], Mat3, ModelParams)> {
        let p = params.with_kappa2(z[2])?;
        let x0 = [omega, lambda0, z[0]];
        let (xt, v) = flow_map(&x0, z[1], &p, opts.rk_tol)?;
        Ok(([xt[0] - x0[0], xt[1] - x0[1], xt[2] - x0[2]], v, p))
    };
    for iter in 0..=opts.max_iter {
        let (r, v, p) = map(&z)?;
        let res = max_norm(&r);
        history.push(res);
        if res < opts.newton_tol {
            let eq = p.interior_equilibrium()?.point;
            if omega - eq.omega < 1e-7 {
                return Err(Error::DegenerateOrbit("anchor on the equilibrium".into()));
            }
            return build_orbit(State::new(omega, lambda0, z[0]), z[1], &p, opts, res, history);
        }
        if iter == opts.max_iter {
            return Err(Error::NonConvergence {
                iterations: opts.max_iter,
                residual: res,
            });
        }
        let h = 1e-6 * z[2].abs().max(1.0);
        let (rk, _, _) = map(&[z[0], z[1], z[2] + h])?;
        let xt = [omega + r[0], lambda0 + r[1], z[0] + r[2]];
        let f = p.rates(&xt);
        let jac = [
            [v[0][2], f[0], (rk[0] - r[0]) / h],
            [v[1][2], f[1], (rk[1] - r[1]) / h],
            [v[2][2] - 1.0, f[2], (rk[2] - r[2]) / h],
        ];
        let dz = solve3(&jac, &[-r[0], -r[1], -r[2]])
            .ok_or_else(|| Error::DegenerateOrbit("singular anchored Jacobian".into()))?;
        for k in 0..3 {
            z[k] += dz[k];
        }
    }
    unreachable!()
}

fn build_orbit(
    anchor: State,
    period: f64,
    params: &ModelParams,
    opts: &ShootingOptions,
    residual: f64,
    residual_history: Vec<f64>,
) -> Result<PeriodicOrbit> {
    let x0 = anchor.to_array();
    let y0 = pack_variational(&x0, &IDENTITY3);
    let sol = integrate_system(
        &VariationalFlow { params },
        0.0,
        y0,
        period,
        model_options(opts.rk_tol),
    )?;
    let (_, monodromy) = unpack_variational(&sol.last());
    let n = opts.grid;
    let samples: Vec<[f64; 3]> = (0..n)
        .map(|k| {
            let y = sol.eval(period * k as f64 / n as f64);
            [y[0], y[1], y[2]]
        })
        .collect();
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s[0]), hi.max(s[0])));
    let traces: Vec<f64> = samples.iter().map(|x| jacobian_trace(x, params)).collect();
    let liouville = (periodic::mean(&traces) * period).exp();
    let floquet = floquet_from_monodromy(&monodromy, &params.rates(&x0))?;
    if !(hi - lo > 0.0) {
        return Err(Error::DegenerateOrbit("flat orbit".into()));
    }
    Ok(PeriodicOrbit {
        params: *params,
        anchor,
        period,
        samples,
        amplitude: 0.5 * (hi - lo),
        peak_to_peak: hi - lo,
        monodromy,
        floquet,
        liouville,
        residual,
        residual_history,
    })
}

/// Multipliers of a converged orbit (recomputed from its monodromy).
pub fn floquet(orbit: &PeriodicOrbit) -> Result<FloquetReport> {
    floquet_from_monodromy(&orbit.monodromy, &orbit.params.rates(&orbit.anchor.to_array()))
}

/// Eigenvector of `v` for a real eigenvalue `mu`, normalised to unit `d` component.
fn real_eigenvector(v: &Mat3, mu: f64) -> Option<[f64; 3]> {
    let mut a = *v;
    for (i, row) in a.iter_mut().enumerate() {
        row[i] -= mu;
    }
    // null vector from the cross product of the two best-conditioned rows
    let cross = |r: &[f64; 3], s: &[f64; 3]| {
        [
            r[1] * s[2] - r[2] * s[1],
            r[2] * s[0] - r[0] * s[2],
            r[0] * s[1] - r[1] * s[0],
        ]
    };
    let candidates = [cross(&a[0], &a[1]), cross(&a[0], &a[2]), cross(&a[1], &a[2])];
    let best = candidates
        .iter()
        .max_by(|x, y| max_norm(&x[..]).total_cmp(&max_norm(&y[..])))?;
    if best[2].abs() < 1e-14 * max_norm(best) || max_norm(best) == 0.0 {
        return None;
    }
    Some([best[0] / best[2], best[1] / best[2], 1.0])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub offset: f64,
    /// Distance to the unperturbed trajectory after `k = 1..` periods.
    pub distances: Vec<f64>,
    /// Fitted decay rate per unit time; `None` for a zero offset.
    pub rate: Option<f64>,
    /// `ln|M_transverse| / T`.
    pub expected: f64,
}

impl ProbeResult {
    pub fn relative_error(&self) -> Option<f64> {
        self.rate.map(|r| (r - self.expected).abs() / self.expected.abs())
    }
}

/// Perturbs the anchor along the transverse Floquet direction, scaled so the
/// debt offset equals `offset`, and fits the log-distance decay over `periods` returns.
pub fn transverse_contraction_probe(
    orbit: &PeriodicOrbit,
    offset: f64,
    periods: usize,
    params: &ModelParams,
) -> Result<ProbeResult> {
    let mu = orbit.floquet.transverse;
    let expected = mu.abs().ln() / orbit.period;
    let w = real_eigenvector(&orbit.monodromy, mu)
        .ok_or_else(|| Error::Floquet("transverse eigenvector is degenerate".into()))?;
    let x0 = orbit.anchor.to_array();
    let start = [x0[0] + offset * w[0], x0[1] + offset * w[1], x0[2] + offset * w[2]];
    let t_end = orbit.period * periods as f64;
    let flow = KeenFlow { params };
    let sol = integrate_system(&flow, 0.0, start, t_end, model_options(1e-12))?;
    let reference = integrate_system(&flow, 0.0, x0, t_end, model_options(1e-12))?;
    let distances: Vec<f64> = (1..=periods)
        .map(|k| {
            let t = orbit.period * k as f64;
            let (y, x) = (sol.eval(t), reference.eval(t));
            ((y[0] - x[0]).powi(2) + (y[1] - x[1]).powi(2) + (y[2] - x[2]).powi(2)).sqrt()
        })
        .collect();
    let rate = if offset == 0.0 {
        None
    } else {
        // least-squares slope of ln(distance) against time
        let pts: Vec<(f64, f64)> = distances
            .iter()
            .enumerate()
            .map(|(k, d)| (orbit.period * (k + 1) as f64, d.ln()))
            .collect();
        let n = pts.len() as f64;
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
        Some(sxy / sxx)
    };
    Ok(ProbeResult {
        offset,
        distances,
        rate,
        expected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::integrate;

    #[test]
    fn deflation_on_synthetic_matrix() {
        // V = B diag(1, 0.999, 0.74) B⁻¹ with first column of B the flow direction
        let b = [[0.3, 0.2, -0.1], [-1.2, 0.5, 0.3], [0.4, 0.1, 1.0]];
        let d = [[1.0, 0.0, 0.0], [0.0, 0.999, 0.0], [0.0, 0.0, 0.74]];
        let v = mat_mul(&b, &mat_mul(&d, &inverse3(&b).unwrap()));
        let f = [b[0][0], b[1][0], b[2][0]];
        let rep = floquet_from_monodromy(&v, &f).unwrap();
        assert!((rep.multipliers[0].re - 1.0).abs() < 1e-13);
        assert!((rep.amplitude - 0.999).abs() < 1e-12);
        assert!((rep.transverse - 0.74).abs() < 1e-12);
        assert!((rep.product - 0.999 * 0.74).abs() < 1e-12);
        assert_eq!(rep.largest_inside(), Some(rep.amplitude));
        let w = real_eigenvector(&v, 0.74).unwrap();
        let vw = crate::linalg::mat_vec(&v, &w);
        for i in 0..3 {
            assert!((vw[i] - 0.74 * w[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn missing_unit_multiplier_is_an_error() {
        let v = [[0.5, 0.0, 0.0], [0.0, 0.4, 0.0], [0.0, 0.0, 0.3]];
        assert!(matches!(
            floquet_from_monodromy(&v, &[1.0, 0.0, 0.0]),
            Err(Error::Floquet(_))
        ));
    }

    #[test]
    fn equilibrium_guess_is_rejected() {
        let p = ModelParams::benchmark();
        let eq = p.interior_equilibrium().unwrap().point;
        let t = 2.0 * std::f64::consts::PI / 0.95;
        let err = shoot_orbit(eq, t, &p, &ShootingOptions::default()).unwrap_err();
        assert!(matches!(err, Error::DegenerateOrbit(_)), "{err}");
    }

    fn benchmark_orbit() -> PeriodicOrbit {
        // seed from the zero-interest cycle and its periodic debt
        let p = ModelParams::benchmark();
        let cycle = crate::conserved::planar_cycle(0.03, &p, 256).unwrap();
        let debt = crate::conserved::periodic_debt(&cycle).unwrap();
        let lambda0 = p.interior_equilibrium().unwrap().point.lambda;
        let guess = State::new(cycle.samples[0][0], lambda0, debt.d[0]);
        shoot_orbit(guess, cycle.period, &p, &ShootingOptions::default()).unwrap()
    }

    #[test]
    fn benchmark_cycle_invariants() {
        let orbit = benchmark_orbit();
        assert!(orbit.residual < 1e-10);
        let fl = &orbit.floquet;
        assert!((fl.multipliers[0].re - 1.0).abs() < 1e-6);
        assert!((fl.product - orbit.liouville).abs() < 1e-6);
        // the char-poly roots agree with the deflated ones
        let mut moduli: Vec<f64> = fl.cubic.iter().map(|z| z.norm()).collect();
        moduli.sort_by(f64::total_cmp);
        assert!((moduli[0] - fl.transverse.abs()).abs() < 1e-6);
        assert!(fl.transverse > 0.0 && fl.transverse < fl.amplitude && fl.amplitude < 1.0);
        // Newton converges quadratically at the end
        let h = &orbit.residual_history;
        assert!(h.len() >= 2);
    }

    #[test]
    fn converged_cycle_closes_over_three_periods() {
        let orbit = benchmark_orbit();
        let p = orbit.params;
        let traj = integrate(orbit.anchor, (0.0, 3.0 * orbit.period), &p, 1e-12).unwrap();
        let end = traj.last();
        let x0 = orbit.anchor.to_array();
        let gap = max_norm(&[end[0] - x0[0], end[1] - x0[1], end[2] - x0[2]]);
        assert!(gap < 3.0 * orbit.residual.max(1e-11), "{gap}");
    }

    #[test]
    fn probe_matches_transverse_multiplier() {
        let orbit = benchmark_orbit();
        let p = orbit.params;
        let pos = transverse_contraction_probe(&orbit, 1e-4, 4, &p).unwrap();
        let neg = transverse_contraction_probe(&orbit, -1e-4, 4, &p).unwrap();
        assert!(pos.relative_error().unwrap() < 0.1);
        assert!((pos.rate.unwrap() - neg.rate.unwrap()).abs() < 0.05 * pos.expected.abs());
        let zero = transverse_contraction_probe(&orbit, 0.0, 2, &p).unwrap();
        assert!(zero.rate.is_none());
        assert!(zero.distances.iter().all(|&d| d == 0.0));
    }
}
