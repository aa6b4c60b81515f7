//! Dormand–Prince 5(4) integration with dense output and section events.
//!
//! The stepper is generic over the state dimension so the same code drives
//! the planar system, the full model, and the 12-dimensional variational
//! system used for monodromy matrices.

use crate::error::{Error, Result};
use crate::linalg::Mat3;
use crate::model::{ModelParams, State};
use crate::spectral::jacobian_unchecked;

pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N]) -> [f64; N];

    /// States outside the admissible region abort the integration.
    fn admissible(&self, y: &[f64; N]) -> bool {
        y.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    /// Relative and absolute tolerance of the local error estimate.
    pub tol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
    /// Disables error control and takes steps of this size.
    pub fixed_step: Option<f64>,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 2_000_000,
            fixed_step: None,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    pub fn fixed(h: f64) -> Self {
        Self {
            fixed_step: Some(h),
            ..Self::default()
        }
    }
}

// Dormand–Prince coefficients
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Continuous extension of one accepted step.
#[derive(Debug, Clone, Copy)]
pub struct DenseSegment<const N: usize> {
    pub t0: f64,
    pub h: f64,
    coeffs: [[f64; N]; 5],
}

impl<const N: usize> DenseSegment<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let [r1, r2, r3, r4, r5] = &self.coeffs;
        std::array::from_fn(|i| r1[i] + s * (r2[i] + s1 * (r3[i] + s * (r4[i] + s1 * r5[i]))))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Largest normalised local error estimate among accepted steps (≤ 1 under control).
    pub max_error_ratio: f64,
}

/// Accepted step points plus the dense output between them.
#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub segments: Vec<DenseSegment<N>>,
    pub stats: StepStats,
}

impl<const N: usize> Solution<N> {
    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("non-empty solution")
    }

    pub fn last(&self) -> [f64; N] {
        *self.states.last().expect("non-empty solution")
    }

    /// Dense-output evaluation; clamps to the covered interval.
    pub fn eval(&self, t: f64) -> [f64; N] {
        if self.segments.is_empty() {
            return self.states[0];
        }
        let idx = self
            .segments
            .partition_point(|s| s.t1() < t)
            .min(self.segments.len() - 1);
        self.segments[idx].eval(t)
    }
}

/// One-step-at-a-time driver; keeps the FSAL stage and controller memory.
pub struct Dopri5<'a, S, const N: usize> {
    sys: &'a S,
    t: f64,
    y: [f64; N],
    k1: [f64; N],
    h: f64,
    err_old: f64,
    opts: IntegratorOptions,
    stats: StepStats,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

impl<'a, S: OdeSystem<N>, const N: usize> Dopri5<'a, S, N> {
    pub fn new(sys: &'a S, t0: f64, y0: [f64; N], opts: IntegratorOptions) -> Result<Self> {
        if !sys.admissible(&y0) {
            return Err(Error::DomainExit {
                t: t0,
                state: y0.to_vec(),
            });
        }
        let k1 = sys.rhs(t0, &y0);
        let mut stepper = Self {
            sys,
            t: t0,
            y: y0,
            k1,
            h: 0.0,
            err_old: 1e-4,
            opts,
            stats: StepStats {
                evaluations: 1,
                ..StepStats::default()
            },
        };
        stepper.h = match (opts.fixed_step, opts.h_init) {
            (Some(h), _) => h,
            (None, Some(h)) => h,
            (None, None) => stepper.initial_step(),
        };
        Ok(stepper)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> [f64; N] {
        self.y
    }

    pub fn stats(&self) -> StepStats {
        self.stats
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.opts.tol * (1.0 + a.abs().max(b.abs()))
    }

    fn initial_step(&mut self) -> f64 {
        let norm = |v: &[f64; N], y: &[f64; N]| -> f64 {
            let s: f64 = (0..N)
                .map(|i| (v[i] / (self.opts.tol * (1.0 + y[i].abs()))).powi(2))
                .sum();
            (s / N as f64).sqrt()
        };
        let d0 = norm(&self.y, &self.y);
        let d1 = norm(&self.k1, &self.y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let y1 = axpy(&self.y, h0, &[(1.0, &self.k1)]);
        let f1 = self.sys.rhs(self.t + h0, &y1);
        self.stats.evaluations += 1;
        let diff: [f64; N] = std::array::from_fn(|i| f1[i] - self.k1[i]);
        let d2 = norm(&diff, &self.y) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(self.opts.h_max)
    }

    /// Takes one accepted step, never stepping past `t_bound`.
    pub fn step(&mut self, t_bound: f64) -> Result<DenseSegment<N>> {
        let fixed = self.opts.fixed_step.is_some();
        let mut h = self.h.min(self.opts.h_max).min(t_bound - self.t);
        // absorb a round-off sliver at the end instead of stepping onto it
        if t_bound - self.t - h <= 1e-8 * h {
            h = t_bound - self.t;
        }
        let mut failed_domain = false;
        loop {
            if !(h > 1e-14 * self.t.abs().max(1.0)) {
                return Err(if failed_domain {
                    Error::DomainExit {
                        t: self.t,
                        state: self.y.to_vec(),
                    }
                } else {
                    Error::StepUnderflow { t: self.t, h }
                });
            }
            if self.stats.accepted + self.stats.rejected >= self.opts.max_steps {
                return Err(Error::MaxSteps(self.opts.max_steps));
            }
            let (t, y, k1) = (self.t, self.y, self.k1);
            let k2 = self.sys.rhs(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
            let k3 = self.sys.rhs(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
            let k4 = self.sys.rhs(
                t + C4 * h,
                &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            );
            let k5 = self.sys.rhs(
                t + C5 * h,
                &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = self.sys.rhs(
                t + h,
                &axpy(
                    &y,
                    h,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                ),
            );
            let y_new = axpy(
                &y,
                h,
                &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
            );
            let k7 = self.sys.rhs(t + h, &y_new);
            self.stats.evaluations += 6;

            let ok_domain = self.sys.admissible(&y_new) && k7.iter().all(|v| v.is_finite());
            let err = if ok_domain {
                let sum: f64 = (0..N)
                    .map(|i| {
                        let e = h
                            * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                                + E7 * k7[i]);
                        (e / self.scale(y[i], y_new[i])).powi(2)
                    })
                    .sum();
                (sum / N as f64).sqrt()
            } else {
                f64::INFINITY
            };

            if !ok_domain {
                failed_domain = true;
                self.stats.rejected += 1;
                h *= 0.25;
                continue;
            }
            if !fixed && err > 1.0 {
                self.stats.rejected += 1;
                let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                h *= fac;
                continue;
            }

            let ydiff: [f64; N] = std::array::from_fn(|i| y_new[i] - y[i]);
            let bspl: [f64; N] = std::array::from_fn(|i| h * k1[i] - ydiff[i]);
            let coeffs = [
                y,
                ydiff,
                bspl,
                std::array::from_fn(|i| ydiff[i] - h * k7[i] - bspl[i]),
                std::array::from_fn(|i| {
                    h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                        + D7 * k7[i])
                }),
            ];
            let segment = DenseSegment { t0: t, h, coeffs };

            self.stats.accepted += 1;
            if err.is_finite() {
                self.stats.max_error_ratio = self.stats.max_error_ratio.max(err);
            }
            self.t = if t + h >= t_bound - 1e-15 * t_bound.abs().max(1.0) {
                t_bound
            } else {
                t + h
            };
            self.y = y_new;
            self.k1 = k7;

            if !fixed {
                // PI controller
                let e = err.max(1e-10);
                let fac = (0.9 * e.powf(-0.7 / 5.0) * self.err_old.powf(0.4 / 5.0)).clamp(0.2, 10.0);
                self.err_old = e.max(1e-4);
                self.h = h * fac;
            }
            return Ok(segment);
        }
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end`.
pub fn integrate_system<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: IntegratorOptions,
) -> Result<Solution<N>> {
    let mut stepper = Dopri5::new(sys, t0, y0, opts)?;
    let mut sol = Solution {
        times: vec![t0],
        states: vec![y0],
        segments: Vec::new(),
        stats: StepStats::default(),
    };
    while stepper.time() < t_end {
        let seg = stepper.step(t_end)?;
        sol.segments.push(seg);
        sol.times.push(stepper.time());
        sol.states.push(stepper.state());
    }
    sol.stats = stepper.stats();
    Ok(sol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Rising,
    Falling,
    Both,
}

/// The hyperplane `y[coord] = level`, optionally restricted to `y[side.0] > side.1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneSection {
    pub coord: usize,
    pub level: f64,
    pub side: Option<(usize, f64)>,
    pub direction: Direction,
}

impl PlaneSection {
    /// The `λ = λ₀` plane on the `ω > ω₀` side. Orbits around the interior
    /// equilibrium rotate clockwise in `(ω, λ)`, so this half-plane is crossed
    /// with λ decreasing.
    pub fn employment(lambda0: f64, omega0: f64) -> Self {
        Self {
            coord: 1,
            level: lambda0,
            side: Some((0, omega0)),
            direction: Direction::Falling,
        }
    }

    fn value<const N: usize>(&self, y: &[f64; N]) -> f64 {
        y[self.coord] - self.level
    }

    fn on_side<const N: usize>(&self, y: &[f64; N]) -> bool {
        self.side.map_or(true, |(i, v)| y[i] > v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionEvent<const N: usize> {
    pub time: f64,
    pub state: [f64; N],
    /// +1 rising, −1 falling.
    pub direction: i8,
}

/// Locates a crossing inside one dense segment, refined with the Illinois
/// variant of regula falsi to `|g| < 1e-12`.
pub fn crossing_in_segment<const N: usize>(
    seg: &DenseSegment<N>,
    section: &PlaneSection,
) -> Option<SectionEvent<N>> {
    let ya = seg.eval(seg.t0);
    let yb = seg.eval(seg.t1());
    let ga = section.value(&ya);
    let gb = section.value(&yb);
    if ga == 0.0 || ga.signum() == gb.signum() && gb != 0.0 {
        return None;
    }
    let direction: i8 = if gb > ga { 1 } else { -1 };
    let wanted = match section.direction {
        Direction::Rising => direction == 1,
        Direction::Falling => direction == -1,
        Direction::Both => true,
    };
    if !wanted {
        return None;
    }
    let (mut a, mut b) = (seg.t0, seg.t1());
    let (mut fa, mut fb) = (ga, gb);
    let mut t = b;
    let mut y = yb;
    let mut side = 0i8;
    for _ in 0..200 {
        if fb.abs() < 1e-13 {
            t = b;
            y = seg.eval(b);
            break;
        }
        t = (a * fb - b * fa) / (fb - fa);
        if !(t > a.min(b) && t < a.max(b)) {
            t = 0.5 * (a + b);
        }
        y = seg.eval(t);
        let ft = section.value(&y);
        if ft.abs() < 1e-13 || (b - a).abs() < 4.0 * f64::EPSILON * t.abs().max(1.0) {
            break;
        }
        if ft.signum() == fb.signum() {
            b = t;
            fb = ft;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        } else {
            a = t;
            fa = ft;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        }
    }
    if !section.on_side(&y) {
        return None;
    }
    Some(SectionEvent {
        time: t,
        state: y,
        direction,
    })
}

pub fn find_section_crossings<const N: usize>(
    sol: &Solution<N>,
    section: &PlaneSection,
) -> Vec<SectionEvent<N>> {
    sol.segments
        .iter()
        .filter_map(|seg| crossing_in_segment(seg, section))
        .collect()
}

/// Integrates until the first crossing of `section` later than `t_min`.
pub fn first_return<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    y0: [f64; N],
    section: &PlaneSection,
    t_min: f64,
    t_max: f64,
    opts: IntegratorOptions,
) -> Result<(SectionEvent<N>, Solution<N>)> {
    let mut stepper = Dopri5::new(sys, 0.0, y0, opts)?;
    let mut sol = Solution {
        times: vec![0.0],
        states: vec![y0],
        segments: Vec::new(),
        stats: StepStats::default(),
    };
    while stepper.time() < t_max {
        let seg = stepper.step(t_max)?;
        sol.segments.push(seg);
        sol.times.push(stepper.time());
        sol.states.push(stepper.state());
        if seg.t1() > t_min {
            if let Some(ev) = crossing_in_segment(&seg, section) {
                if ev.time > t_min {
                    sol.stats = stepper.stats();
                    return Ok((ev, sol));
                }
            }
        }
    }
    Err(Error::NoReturn(t_max))
}

/// The full three-dimensional model.
pub struct KeenFlow<'a> {
    pub params: &'a ModelParams,
}

impl OdeSystem<3> for KeenFlow<'_> {
    fn rhs(&self, _t: f64, y: &[f64; 3]) -> [f64; 3] {
        self.params.rates(y)
    }

    fn admissible(&self, y: &[f64; 3]) -> bool {
        y[0] > 0.0 && y[1] > 0.0 && y[1] < 1.0 && y[2].is_finite() && y[0].is_finite()
    }
}

/// State plus row-major fundamental matrix: `x' = f(x)`, `V' = J(x) V`.
pub struct VariationalFlow<'a> {
    pub params: &'a ModelParams,
}

impl OdeSystem<12> for VariationalFlow<'_> {
    fn rhs(&self, _t: f64, y: &[f64; 12]) -> [f64; 12] {
        let x = [y[0], y[1], y[2]];
        let f = self.params.rates(&x);
        let j = jacobian_unchecked(&x, self.params);
        let mut out = [0.0; 12];
        out[..3].copy_from_slice(&f);
        for r in 0..3 {
            for c in 0..3 {
                out[3 + 3 * r + c] = (0..3).map(|k| j[r][k] * y[3 + 3 * k + c]).sum();
            }
        }
        out
    }

    fn admissible(&self, y: &[f64; 12]) -> bool {
        y[0] > 0.0 && y[1] > 0.0 && y[1] < 1.0 && y.iter().all(|v| v.is_finite())
    }
}

pub type Trajectory = Solution<3>;

impl Solution<3> {
    pub fn state_at(&self, t: f64) -> State {
        State::from(self.eval(t))
    }
}

/// Integrates the model from `x0` over `[t0, t1]` at tolerance `tol ∈ [1e-13, 1e-6]`.
pub fn integrate(x0: State, t_span: (f64, f64), params: &ModelParams, tol: f64) -> Result<Trajectory> {
    check_tol(tol)?;
    integrate_system(
        &KeenFlow { params },
        t_span.0,
        x0.to_array(),
        t_span.1,
        model_options(tol),
    )
}

/// Step cap for the model flows. Near an equilibrium the local error estimate
/// vanishes and uncapped steps would leave the stability region of the method.
pub const MODEL_H_MAX: f64 = 0.5;

/// Default options for integrating the model at tolerance `tol`.
pub fn model_options(tol: f64) -> IntegratorOptions {
    IntegratorOptions {
        h_max: MODEL_H_MAX,
        ..IntegratorOptions::with_tol(tol)
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if (1e-13..=1e-6).contains(&tol) {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "tolerance",
            value: tol,
        })
    }
}

pub fn pack_variational(x: &[f64; 3], v: &Mat3) -> [f64; 12] {
    let mut y = [0.0; 12];
    y[..3].copy_from_slice(x);
    for r in 0..3 {
        for c in 0..3 {
            y[3 + 3 * r + c] = v[r][c];
        }
    }
    y
}

pub fn unpack_variational(y: &[f64; 12]) -> ([f64; 3], Mat3) {
    let mut v = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            v[r][c] = y[3 + 3 * r + c];
        }
    }
    ([y[0], y[1], y[2]], v)
}

/// Co-integrates the fundamental matrix; returns the state trajectory and `V(t1)`.
pub fn integrate_with_variational(
    x0: State,
    v0: &Mat3,
    t_span: (f64, f64),
    params: &ModelParams,
    tol: f64,
) -> Result<(Trajectory, Mat3)> {
    check_tol(tol)?;
    let y0 = pack_variational(&x0.to_array(), v0);
    let sol = integrate_system(
        &VariationalFlow { params },
        t_span.0,
        y0,
        t_span.1,
        model_options(tol),
    )?;
    let (_, v_end) = unpack_variational(&sol.last());
    let traj = Solution {
        times: sol.times.clone(),
        states: sol.states.iter().map(|y| [y[0], y[1], y[2]]).collect(),
        segments: sol
            .segments
            .iter()
            .map(|s| DenseSegment {
                t0: s.t0,
                h: s.h,
                coeffs: std::array::from_fn(|k| [s.coeffs[k][0], s.coeffs[k][1], s.coeffs[k][2]]),
            })
            .collect(),
        stats: sol.stats,
    };
    Ok((traj, v_end))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{det3, IDENTITY3};
    use std::f64::consts::PI;

    struct Rotation;

    impl OdeSystem<2> for Rotation {
        fn rhs(&self, _t: f64, y: &[f64; 2]) -> [f64; 2] {
            [-y[1], y[0]]
        }
    }

    #[test]
    fn circle_crossings() {
        let sol = integrate_system(&Rotation, 0.0, [1.0, 0.0], 20.0, IntegratorOptions::with_tol(1e-12))
            .unwrap();
        let section = PlaneSection {
            coord: 0,
            level: 0.0,
            side: None,
            direction: Direction::Falling,
        };
        // x = cos t falls through zero at π/2 + 2πk
        let events = find_section_crossings(&sol, &section);
        assert_eq!(events.len(), 3);
        for (k, ev) in events.iter().enumerate() {
            let expected = PI / 2.0 + 2.0 * PI * k as f64;
            assert!((ev.time - expected).abs() < 1e-10, "{} vs {expected}", ev.time);
            assert_eq!(ev.direction, -1);
        }
        let rising = PlaneSection {
            direction: Direction::Rising,
            ..section
        };
        let events = find_section_crossings(&sol, &rising);
        assert!((events[0].time - 1.5 * PI).abs() < 1e-10);

        // x = −cos t rises through zero at π/2 + 2πk
        let sol = integrate_system(&Rotation, 0.0, [-1.0, 0.0], 20.0, IntegratorOptions::with_tol(1e-12))
            .unwrap();
        let events = find_section_crossings(&sol, &rising);
        assert_eq!(events.len(), 3);
        for (k, ev) in events.iter().enumerate() {
            assert!((ev.time - PI / 2.0 - 2.0 * PI * k as f64).abs() < 1e-10);
            assert!(ev.state[0].abs() < 1e-12);
        }
    }

    #[test]
    fn sine_accuracy() {
        let sol = integrate_system(&Rotation, 0.0, [1.0, 0.0], 10.0, IntegratorOptions::with_tol(1e-12))
            .unwrap();
        let y = sol.last();
        assert!((y[0] - 10f64.cos()).abs() < 1e-10);
        assert!((y[1] - 10f64.sin()).abs() < 1e-10);
        for k in 0..100 {
            let t = 0.1 * k as f64 + 0.037;
            let y = sol.eval(t);
            assert!((y[0] - t.cos()).abs() < 1e-9);
        }
        assert!(sol.stats.max_error_ratio <= 1.0);
        assert!(sol.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn fifth_order_convergence_on_rotation() {
        let err = |h: f64| {
            let sol =
                integrate_system(&Rotation, 0.0, [1.0, 0.0], 2.0, IntegratorOptions::fixed(h)).unwrap();
            (sol.last()[0] - 2f64.cos()).abs()
        };
        let (e1, e2) = (err(0.1), err(0.05));
        let order = (e1 / e2).log2();
        assert!(order > 4.5, "observed order {order}");
    }

    #[test]
    fn equilibrium_stays_put() {
        let p = ModelParams::benchmark();
        let eq = p.interior_equilibrium().unwrap().point;
        let traj = integrate(eq, (0.0, 100.0), &p, 1e-10).unwrap();
        for s in &traj.states {
            let drift = (s[0] - eq.omega)
                .abs()
                .max((s[1] - eq.lambda).abs())
                .max((s[2] - eq.d).abs());
            assert!(drift < 1e-10, "drift {drift:e}");
        }
        let section = PlaneSection::employment(eq.lambda, eq.omega);
        assert!(find_section_crossings(&traj, &section).is_empty());
    }

    #[test]
    fn tolerance_range_enforced() {
        let p = ModelParams::benchmark();
        let eq = p.interior_equilibrium().unwrap().point;
        assert!(integrate(eq, (0.0, 1.0), &p, 1e-3).is_err());
        assert!(integrate(eq, (0.0, 1.0), &p, 1e-14).is_err());
    }

    #[test]
    fn domain_exit_is_an_error() {
        let p = ModelParams::benchmark();
        let bad = State::new(0.8, 1.2, 0.1);
        assert!(matches!(
            integrate(bad, (0.0, 1.0), &p, 1e-8),
            Err(Error::DomainExit { .. })
        ));
    }

    #[test]
    fn variational_zero_span_is_identity() {
        let p = ModelParams::benchmark();
        let x0 = State::new(0.85, 0.96, 0.2);
        let (_, v) = integrate_with_variational(x0, &IDENTITY3, (0.0, 0.0), &p, 1e-10).unwrap();
        assert_eq!(v, IDENTITY3);
    }

    #[test]
    fn liouville_identity() {
        let p = ModelParams::benchmark();
        let x0 = State::new(0.86, 0.955, 0.3);
        let (traj, v) = integrate_with_variational(x0, &IDENTITY3, (0.0, 3.0), &p, 1e-11).unwrap();
        // composite Simpson on the dense output of the state
        let n = 4000;
        let h = 3.0 / n as f64;
        let tr = |t: f64| crate::spectral::jacobian_trace(&traj.eval(t), &p);
        let mut s = tr(0.0) + tr(3.0);
        for k in 1..n {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * tr(k as f64 * h);
        }
        let integral = s * h / 3.0;
        assert!((det3(&v) - integral.exp()).abs() < 1e-6);
    }

    /// Scaling-and-squaring Taylor exponential (test oracle).
    fn expm(a: &Mat3, t: f64) -> Mat3 {
        let norm = a.iter().flatten().map(|x| x.abs()).sum::<f64>() * t.abs();
        let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
        let scale = t / 2f64.powi(squarings);
        let mut term = IDENTITY3;
        let mut sum = IDENTITY3;
        for k in 1..30 {
            term = crate::linalg::mat_mul(&term, a);
            for row in term.iter_mut() {
                for x in row.iter_mut() {
                    *x *= scale / k as f64;
                }
            }
            for i in 0..3 {
                for j in 0..3 {
                    sum[i][j] += term[i][j];
                }
            }
        }
        for _ in 0..squarings {
            sum = crate::linalg::mat_mul(&sum, &sum);
        }
        sum
    }

    #[test]
    fn variational_at_equilibrium_is_matrix_exponential() {
        let p = ModelParams::benchmark();
        let eq = p.interior_equilibrium().unwrap().point;
        let j = crate::spectral::jacobian(&eq, &p).unwrap();
        let (_, v) = integrate_with_variational(eq, &IDENTITY3, (0.0, 10.0), &p, 1e-12).unwrap();
        let e = expm(&j, 10.0);
        for i in 0..3 {
            for k in 0..3 {
                assert!((v[i][k] - e[i][k]).abs() < 1e-8, "({i},{k}) {} vs {}", v[i][k], e[i][k]);
            }
        }
    }
}
