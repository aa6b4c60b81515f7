//! First-order phase–amplitude reduction for small `r`.
//!
//! The zero-interest cycles `X(θ; I)` (family parameter `I` = section offset)
//! are perturbed at order `r` by `G = (0, −λκ′(1−ω)d₀/ν)`, where `d₀` is the
//! periodic debt along the cycle. Projecting `G` on the dual frame of
//! `{∂θX, ∂I X}` gives the averaged phase and amplitude drifts `Ω₁(I)` and
//! `S₁(I)`; zeros of `S₁` select the cycles that persist for `r > 0`.

use rayon::prelude::*;

use crate::conserved::{periodic_debt, planar_cycle, PeriodicDebtGraph, PlanarCycle};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::periodic;

/// Relative step of the central difference in the family parameter.
pub const FAMILY_STEP: f64 = 1e-3;

/// Largest admissible condition number of the 2×2 frame.
pub const MAX_FRAME_CONDITION: f64 = 1e8;

/// Forcing `G(θ) = (0, −λκ′(1−ω)d₀/ν)` on the phase grid.
pub fn forcing(cycle: &PlanarCycle, graph: &PeriodicDebtGraph, params: &ModelParams) -> Vec<[f64; 2]> {
    cycle
        .samples
        .iter()
        .zip(&graph.d)
        .map(|(x, d)| [0.0, -x[1] * params.investment_prime(1.0 - x[0]) * d / params.nu])
        .collect()
}

/// `∂I X` by central differences over neighbouring family members.
pub fn family_derivative(params: &ModelParams, a: f64, n: usize) -> Result<Vec<[f64; 2]>> {
    let h = FAMILY_STEP * a;
    let plus = planar_cycle(a + h, params, n)?;
    let minus = planar_cycle(a - h, params, n)?;
    Ok(plus
        .samples
        .iter()
        .zip(&minus.samples)
        .map(|(p, m)| [(p[0] - m[0]) / (2.0 * h), (p[1] - m[1]) / (2.0 * h)])
        .collect())
}

/// Second-order one-sided `∂I X` (for the edges of an amplitude window);
/// `sign = 1.0` uses `a, a+h, a+2h`, `sign = −1.0` uses `a, a−h, a−2h`.
pub fn family_derivative_one_sided(
    params: &ModelParams,
    a: f64,
    n: usize,
    sign: f64,
) -> Result<Vec<[f64; 2]>> {
    let h = sign * FAMILY_STEP * a;
    let c0 = planar_cycle(a, params, n)?;
    let c1 = planar_cycle(a + h, params, n)?;
    let c2 = planar_cycle(a + 2.0 * h, params, n)?;
    Ok((0..n)
        .map(|k| {
            let d = |c: usize| {
                (-3.0 * c0.samples[k][c] + 4.0 * c1.samples[k][c] - c2.samples[k][c]) / (2.0 * h)
            };
            [d(0), d(1)]
        })
        .collect())
}

/// Pointwise dual basis of `{∂θX, ∂I X}`.
#[derive(Debug, Clone)]
pub struct DualFrame {
    pub z_theta: Vec<[f64; 2]>,
    pub z_i: Vec<[f64; 2]>,
    pub max_condition: f64,
}

impl DualFrame {
    /// Max deviation of `⟨Z_a, ∂_b X⟩` from `δ_ab` over the grid.
    pub fn biorthogonality_error(&self, d_theta: &[[f64; 2]], d_i: &[[f64; 2]]) -> f64 {
        let dot = |u: &[f64; 2], v: &[f64; 2]| u[0] * v[0] + u[1] * v[1];
        (0..self.z_theta.len())
            .map(|k| {
                let e = [
                    dot(&self.z_theta[k], &d_theta[k]) - 1.0,
                    dot(&self.z_theta[k], &d_i[k]),
                    dot(&self.z_i[k], &d_theta[k]),
                    dot(&self.z_i[k], &d_i[k]) - 1.0,
                ];
                e.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
            })
            .fold(0.0, f64::max)
    }
}

pub fn dual_frame(d_theta: &[[f64; 2]], d_i: &[[f64; 2]]) -> Result<DualFrame> {
    let mut z_theta = Vec::with_capacity(d_theta.len());
    let mut z_i = Vec::with_capacity(d_theta.len());
    let mut max_condition = 0.0_f64;
    for (node, (t, i)) in d_theta.iter().zip(d_i).enumerate() {
        // columns ∂θX and ∂I X
        let det = t[0] * i[1] - i[0] * t[1];
        let norm = (t[0].abs() + i[0].abs()).max(t[1].abs() + i[1].abs());
        let inv_norm = (i[1].abs() + i[0].abs()).max(t[1].abs() + t[0].abs()) / det.abs();
        let cond = norm * inv_norm;
        if !(cond < MAX_FRAME_CONDITION) {
            return Err(Error::FrameDegenerate { node, cond });
        }
        max_condition = max_condition.max(cond);
        z_theta.push([i[1] / det, -i[0] / det]);
        z_i.push([-t[1] / det, t[0] / det]);
    }
    Ok(DualFrame {
        z_theta,
        z_i,
        max_condition,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Averages {
    /// `(1/2π)∫⟨Zθ, G⟩dθ`.
    pub omega1: f64,
    /// `(1/2π)∫⟨Z_I, G⟩dθ`.
    pub s1: f64,
}

impl Averages {
    /// The unnormalised integrals over `[0, 2π]`.
    pub fn raw(&self) -> (f64, f64) {
        let tau = 2.0 * std::f64::consts::PI;
        (tau * self.omega1, tau * self.s1)
    }
}

pub fn averaged_corrections(frame: &DualFrame, g: &[[f64; 2]]) -> Averages {
    let proj = |z: &[[f64; 2]]| -> Vec<f64> {
        z.iter().zip(g).map(|(z, g)| z[0] * g[0] + z[1] * g[1]).collect()
    };
    Averages {
        omega1: periodic::mean(&proj(&frame.z_theta)),
        s1: periodic::mean(&proj(&frame.z_i)),
    }
}

fn planar_jacobian(p: &ModelParams, x: &[f64; 2]) -> [[f64; 2]; 2] {
    let [w, l] = *x;
    [
        [p.phillips_unchecked(l) - p.alpha, w * p.phillips_prime_unchecked(l)],
        [
            -l * p.investment_prime(1.0 - w) / p.nu,
            p.investment(1.0 - w) / p.nu - p.alpha - p.beta - p.delta,
        ],
    ]
}

/// Max nodal residual of the adjoint equation `Ω∂θZ + J₀ᵀZ = 0` (diagnostic only).
pub fn adjoint_residual(cycle: &PlanarCycle, z: &[[f64; 2]]) -> f64 {
    let d0 = periodic::derivative(&z.iter().map(|v| v[0]).collect::<Vec<_>>());
    let d1 = periodic::derivative(&z.iter().map(|v| v[1]).collect::<Vec<_>>());
    (0..z.len())
        .map(|k| {
            let j = planar_jacobian(&cycle.params, &cycle.samples[k]);
            let r0 = cycle.omega * d0[k] + j[0][0] * z[k][0] + j[1][0] * z[k][1];
            let r1 = cycle.omega * d1[k] + j[0][1] * z[k][0] + j[1][1] * z[k][1];
            r0.abs().max(r1.abs())
        })
        .fold(0.0, f64::max)
}

/// Max residual of `∂θX θ̇ + ∂I X İ = F₀(X) + rG` with the projected drifts.
pub fn projection_residual(
    cycle: &PlanarCycle,
    d_i: &[[f64; 2]],
    frame: &DualFrame,
    g: &[[f64; 2]],
    r: f64,
) -> f64 {
    (0..cycle.len())
        .map(|k| {
            let dot = |z: &[f64; 2]| z[0] * g[k][0] + z[1] * g[k][1];
            let theta_dot = cycle.omega + r * dot(&frame.z_theta[k]);
            let i_dot = r * dot(&frame.z_i[k]);
            let f0 = crate::conserved::planar_rates(&cycle.params, &cycle.samples[k]);
            (0..2)
                .map(|c| {
                    (cycle.d_theta[k][c] * theta_dot + d_i[k][c] * i_dot - f0[c] - r * g[k][c]).abs()
                })
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Reduction data for one family member.
#[derive(Debug, Clone)]
pub struct ReductionRow {
    /// Family parameter `I` (section offset).
    pub amplitude: f64,
    pub level: f64,
    /// `(max ω − min ω)/2` of the cycle.
    pub a_omega: f64,
    pub omega: f64,
    pub period: f64,
    pub omega1: f64,
    pub s1: f64,
    pub multiplier: f64,
    pub biorthogonality: f64,
    pub max_condition: f64,
    pub adjoint_residual_theta: f64,
    pub adjoint_residual_i: f64,
    pub projection_residual: f64,
    pub z_theta: Vec<[f64; 2]>,
    pub z_i: Vec<[f64; 2]>,
}

pub fn reduction_row(params: &ModelParams, a: f64, n: usize) -> Result<ReductionRow> {
    let cycle = planar_cycle(a, params, n)?;
    let d_i = family_derivative(params, a, n)?;
    let graph = periodic_debt(&cycle)?;
    let g = forcing(&cycle, &graph, params);
    let frame = dual_frame(&cycle.d_theta, &d_i)?;
    let avg = averaged_corrections(&frame, &g);
    Ok(ReductionRow {
        amplitude: a,
        level: cycle.level,
        a_omega: cycle.omega_amplitude(),
        omega: cycle.omega,
        period: cycle.period,
        omega1: avg.omega1,
        s1: avg.s1,
        multiplier: graph.multiplier,
        biorthogonality: frame.biorthogonality_error(&cycle.d_theta, &d_i),
        max_condition: frame.max_condition,
        adjoint_residual_theta: adjoint_residual(&cycle, &frame.z_theta),
        adjoint_residual_i: adjoint_residual(&cycle, &frame.z_i),
        projection_residual: projection_residual(&cycle, &d_i, &frame, &g, params.r),
        z_theta: frame.z_theta,
        z_i: frame.z_i,
    })
}

#[derive(Debug, Clone)]
pub struct ReductionTables {
    pub params: ModelParams,
    pub grid: usize,
    pub rows: Vec<ReductionRow>,
}

/// Rows for every family parameter in `amplitudes`, computed in parallel.
pub fn reduction_tables(params: &ModelParams, amplitudes: &[f64], n: usize) -> Result<ReductionTables> {
    let rows = amplitudes
        .par_iter()
        .map(|&a| reduction_row(params, a, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReductionTables {
        params: *params,
        grid: n,
        rows,
    })
}

/// The selected cycle `S₁(I*) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub amplitude: f64,
    pub a_omega: f64,
    pub s1_slope: f64,
    pub attracting: bool,
    pub omega: f64,
    pub omega1: f64,
    pub multiplier: f64,
    /// `Ω(I*) + rΩ₁(I*)`.
    pub predicted_frequency: f64,
}

/// Bisection on the first sign change of `S₁` in the tables.
pub fn select_cycle(tables: &ReductionTables) -> Result<Selection> {
    let rows = &tables.rows;
    let idx = rows
        .windows(2)
        .position(|w| w[0].s1.signum() != w[1].s1.signum())
        .ok_or(Error::NoSignChange("S1"))?;
    let p = &tables.params;
    let n = tables.grid;
    let s1 = |a: f64| reduction_row(p, a, n).map(|r| r.s1);
    let (mut lo, mut hi) = (rows[idx].amplitude, rows[idx + 1].amplitude);
    let (mut f_lo, mut f_hi) = (rows[idx].s1, rows[idx + 1].s1);
    // Illinois regula falsi
    let mut side = 0;
    for _ in 0..100 {
        if (hi - lo).abs() < 1e-10 * hi.abs() {
            break;
        }
        let mut mid = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        if !(mid > lo.min(hi) && mid < lo.max(hi)) {
            mid = 0.5 * (lo + hi);
        }
        let f_mid = s1(mid)?;
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = mid;
            f_hi = f_mid;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
    }
    let a_star = 0.5 * (lo + hi);
    let row = reduction_row(p, a_star, n)?;
    let h = 1e-3 * a_star;
    let s1_slope = (s1(a_star + h)? - s1(a_star - h)?) / (2.0 * h);
    Ok(Selection {
        amplitude: a_star,
        a_omega: row.a_omega,
        s1_slope,
        attracting: p.r * s1_slope < 0.0,
        omega: row.omega,
        omega1: row.omega1,
        multiplier: row.multiplier,
        predicted_frequency: row.omega + p.r * row.omega1,
    })
}

/// Family parameter whose planar cycle has half peak-to-peak `a_omega`.
pub fn match_amplitude(params: &ModelParams, a_omega: f64, n: usize) -> Result<f64> {
    let amp = |a: f64| planar_cycle(a, params, n).map(|c| c.omega_amplitude() - a_omega);
    // section offset and ω amplitude agree to leading order
    let (mut lo, mut hi) = (0.5 * a_omega, 1.5 * a_omega);
    let (mut f_lo, mut f_hi) = (amp(lo)?, amp(hi)?);
    let mut tries = 0;
    while f_lo.signum() == f_hi.signum() {
        tries += 1;
        if tries > 20 {
            return Err(Error::NoRoot(format!("no cycle with amplitude {a_omega}")));
        }
        if f_lo > 0.0 {
            lo *= 0.5;
            f_lo = amp(lo)?;
        } else {
            hi *= 1.5;
            f_hi = amp(hi)?;
        }
    }
    for _ in 0..200 {
        let mid = lo - f_lo * (hi - lo) / (f_hi - f_lo);
        let mid = if mid > lo && mid < hi { mid } else { 0.5 * (lo + hi) };
        let f_mid = amp(mid)?;
        if f_mid.abs() < 1e-13 || (hi - lo) < 1e-13 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
            f_hi *= 0.5;
        } else {
            hi = mid;
            f_hi = f_mid;
            f_lo *= 0.5;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `M(I)` of the planar cycle whose ω amplitude equals `a_omega`.
pub fn reduced_multiplier(params: &ModelParams, a_omega: f64, n: usize) -> Result<(f64, f64)> {
    let a = match_amplitude(params, a_omega, n)?;
    let graph = periodic_debt(&planar_cycle(a, params, n)?)?;
    Ok((a, graph.multiplier))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::periodic::phase_grid;

    fn circles(radius: f64, n: usize) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
        let th = phase_grid(n);
        let d_theta = th.iter().map(|t| [-radius * t.sin(), radius * t.cos()]).collect();
        let d_i = th.iter().map(|t| [t.cos(), t.sin()]).collect();
        (d_theta, d_i)
    }

    #[test]
    fn dual_frame_of_circles() {
        let (dt, di) = circles(0.7, 64);
        let frame = dual_frame(&dt, &di).unwrap();
        for (k, t) in phase_grid(64).iter().enumerate() {
            let zt = [-t.sin() / 0.7, t.cos() / 0.7];
            let zi = [t.cos(), t.sin()];
            for c in 0..2 {
                assert!((frame.z_theta[k][c] - zt[c]).abs() < 1e-14);
                assert!((frame.z_i[k][c] - zi[c]).abs() < 1e-14);
            }
        }
        assert!(frame.biorthogonality_error(&dt, &di) < 1e-14);
        // constant radial forcing is pure amplitude drift
        let g: Vec<[f64; 2]> = phase_grid(64).iter().map(|t| [0.3 * t.cos(), 0.3 * t.sin()]).collect();
        let avg = averaged_corrections(&frame, &g);
        assert!((avg.s1 - 0.3).abs() < 1e-14);
        assert!(avg.omega1.abs() < 1e-14);
        let zero = averaged_corrections(&frame, &vec![[0.0; 2]; 64]);
        assert_eq!((zero.omega1, zero.s1), (0.0, 0.0));
    }

    #[test]
    fn degenerate_frame_is_rejected() {
        let dt = vec![[1.0, 0.0], [1.0, 0.0]];
        let di = vec![[1.0, 1e-12], [0.0, 1.0]];
        assert!(matches!(
            dual_frame(&dt, &di),
            Err(Error::FrameDegenerate { node: 0, .. })
        ));
    }

    #[test]
    fn forcing_shape() {
        let p = ModelParams::benchmark();
        let cycle = planar_cycle(1e-4, &p, 256).unwrap();
        let graph = periodic_debt(&cycle).unwrap();
        let g = forcing(&cycle, &graph, &p);
        assert!(g.iter().all(|v| v[0] == 0.0));
        let eq = cycle.equilibrium;
        let g_eq = -eq[1] * p.investment_prime(1.0 - eq[0]) * eq[2] / p.nu;
        let dev = g.iter().map(|v| (v[1] - g_eq).abs()).fold(0.0, f64::max);
        assert!(dev < 100.0 * 1e-4 * g_eq.abs(), "{dev}");
        let mut doubled = graph.clone();
        doubled.d.iter_mut().for_each(|d| *d *= 2.0);
        let g2 = forcing(&cycle, &doubled, &p);
        for (a, b) in g.iter().zip(&g2) {
            assert!((b[1] - 2.0 * a[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn keen_family_row_diagnostics() {
        let p = ModelParams::benchmark();
        let row = reduction_row(&p, 0.02, 512).unwrap();
        assert!(row.biorthogonality < 1e-10);
        assert!(row.projection_residual < 10.0 * p.r * p.r);
        assert!(row.max_condition < MAX_FRAME_CONDITION);
        // the phase mode of a conservative family is an exact adjoint solution
        assert!(row.adjoint_residual_theta.is_finite());
    }

    #[test]
    fn central_and_one_sided_differences_agree() {
        let p = ModelParams::benchmark();
        let (a, n) = (0.02, 256);
        let central = family_derivative(&p, a, n).unwrap();
        for sign in [1.0, -1.0] {
            let one_sided = family_derivative_one_sided(&p, a, n, sign).unwrap();
            let worst = (0..n)
                .flat_map(|k| (0..2).map(move |c| (k, c)))
                .map(|(k, c)| (one_sided[k][c] - central[k][c]).abs())
                .fold(0.0, f64::max);
            assert!(worst < 1e-5, "{worst}");
        }
    }

    #[test]
    fn small_amplitude_drift_sign_follows_eta() {
        let unstable = ModelParams::benchmark();
        let stable = unstable.with_kappa2(14.0).unwrap();
        for p in [unstable, stable] {
            let eta = crate::spectral::hopf_indicator(&p).unwrap().eta;
            let row = reduction_row(&p, 2e-3, 256).unwrap();
            assert_eq!(row.s1.signum(), eta.signum(), "eta {eta} s1 {}", row.s1);
        }
    }

    #[test]
    fn averages_converge_under_grid_doubling() {
        let p = ModelParams::benchmark();
        let a = reduction_row(&p, 0.02, 512).unwrap();
        let b = reduction_row(&p, 0.02, 1024).unwrap();
        assert!((a.s1 - b.s1).abs() < 1e-8);
        assert!((a.omega1 - b.omega1).abs() < 1e-8);
    }

    #[test]
    fn stable_regime_has_no_selected_cycle() {
        let p = ModelParams::benchmark().with_kappa2(14.0).unwrap();
        let tables = reduction_tables(&p, &[0.005, 0.01, 0.02, 0.04], 256).unwrap();
        assert!(matches!(select_cycle(&tables), Err(Error::NoSignChange(_))));
    }

    #[test]
    fn benchmark_selects_attracting_cycle() {
        let p = ModelParams::benchmark();
        let tables = reduction_tables(&p, &[0.01, 0.02, 0.03, 0.04, 0.05], 256).unwrap();
        let sel = select_cycle(&tables).unwrap();
        assert!(sel.attracting);
        assert!(sel.amplitude > 0.01 && sel.amplitude < 0.05);
    }

    #[test]
    fn reduced_multiplier_limit() {
        let bench = ModelParams::benchmark();
        let p = bench
            .with_kappa2(crate::spectral::critical_kappa2(&bench).unwrap())
            .unwrap();
        let (a, m) = reduced_multiplier(&p, 1e-4, 256).unwrap();
        assert!(a > 0.0);
        assert!((m - 0.74329).abs() < 1e-3);
    }
}
