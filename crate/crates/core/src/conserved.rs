//! Structure of the zero-interest system.
//!
//! At `r = 0` the `(ω, λ)` subsystem decouples from debt and conserves the
//! separable first integral `I = F(λ) − G(ω)`, so it is foliated by closed
//! orbits. Debt then obeys a linear periodic equation along each orbit.
//! Every operation here evaluates the `r = 0` subsystem of the parameters it
//! is given.

use crate::error::{Error, Result};
use crate::integrate::{first_return, integrate_system, model_options, OdeSystem, PlaneSection};
use crate::model::ModelParams;
use crate::periodic;
use crate::quad;
use crate::spectral::jacobian_composites;

/// Default tolerance for cycle integrations.
pub const CYCLE_TOL: f64 = 1e-12;

/// The planar `(ω, λ)` flow at zero interest.
pub struct PlanarFlow<'a> {
    pub params: &'a ModelParams,
}

impl OdeSystem<2> for PlanarFlow<'_> {
    fn rhs(&self, _t: f64, y: &[f64; 2]) -> [f64; 2] {
        planar_rates(self.params, y)
    }

    fn admissible(&self, y: &[f64; 2]) -> bool {
        y[0] > 0.0 && y[1] > 0.0 && y[1] < 1.0 && y[0].is_finite()
    }
}

/// Planar flow plus `A' = a(ω)` and `Q' = e^{−A} b(ω)`.
struct DebtFlow<'a> {
    params: &'a ModelParams,
}

impl OdeSystem<4> for DebtFlow<'_> {
    fn rhs(&self, _t: f64, y: &[f64; 4]) -> [f64; 4] {
        let [dw, dl] = planar_rates(self.params, &[y[0], y[1]]);
        let (a, b) = debt_coefficients(self.params, y[0]);
        [dw, dl, a, (-y[2]).exp() * b]
    }

    fn admissible(&self, y: &[f64; 4]) -> bool {
        y[0] > 0.0 && y[1] > 0.0 && y[1] < 1.0 && y.iter().all(|v| v.is_finite())
    }
}

pub fn planar_rates(p: &ModelParams, y: &[f64; 2]) -> [f64; 2] {
    let [omega, lambda] = *y;
    let kappa = p.investment(1.0 - omega);
    [
        omega * (p.phillips_unchecked(lambda) - p.alpha),
        lambda * (kappa / p.nu - p.alpha - p.beta - p.delta),
    ]
}

/// `a = δ − κ(1−ω)/ν` and `b = κ(1−ω) − (1−ω)` of `d' = a d + b`.
pub fn debt_coefficients(p: &ModelParams, omega: f64) -> (f64, f64) {
    let kappa = p.investment(1.0 - omega);
    (p.delta - kappa / p.nu, kappa - (1.0 - omega))
}

fn zero_rate(p: &ModelParams) -> Result<(ModelParams, [f64; 3])> {
    let p0 = p.with_r(0.0);
    let eq = p0.interior_equilibrium()?.point;
    Ok((p0, eq.to_array()))
}

/// `I(ω, λ) = F(λ) − G(ω)` anchored to vanish at the equilibrium.
#[derive(Debug, Clone)]
pub struct FirstIntegral {
    params: ModelParams,
    pub omega0: f64,
    pub lambda0: f64,
    f_ref: f64,
}

pub fn first_integral(params: &ModelParams) -> Result<FirstIntegral> {
    let (p0, eq) = zero_rate(params)?;
    let mut fi = FirstIntegral {
        params: p0,
        omega0: eq[0],
        lambda0: eq[1],
        f_ref: 0.0,
    };
    fi.f_ref = fi.f(eq[1]);
    Ok(fi)
}

impl FirstIntegral {
    /// Closed-form antiderivative of `(Φ(λ) − α)/λ` (unanchored).
    pub fn f(&self, lambda: f64) -> f64 {
        let p = &self.params;
        p.phi1 * (lambda.ln() - (1.0 - lambda).ln() + 1.0 / (1.0 - lambda))
            - (p.phi0 + p.alpha) * lambda.ln()
    }

    pub fn f_prime(&self, lambda: f64) -> f64 {
        (self.params.phillips_unchecked(lambda) - self.params.alpha) / lambda
    }

    pub fn g_prime(&self, omega: f64) -> f64 {
        let p = &self.params;
        (p.investment(1.0 - omega) / p.nu - (p.alpha + p.beta + p.delta)) / omega
    }

    /// `∫_{ω₀}^{ω} G′(s) ds` by adaptive Gauss–Kronrod.
    pub fn g(&self, omega: f64) -> Result<f64> {
        if !(omega > 0.0) {
            return Err(Error::Domain {
                what: "omega",
                value: omega,
            });
        }
        quad::integrate(|s| self.g_prime(s), self.omega0, omega, 1e-15)
    }

    pub fn value(&self, omega: f64, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Domain {
                what: "lambda",
                value: lambda,
            });
        }
        Ok(self.f(lambda) - self.f_ref - self.g(omega)?)
    }
}

/// One sign convention for the linear center-manifold coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientVariant {
    pub label: &'static str,
    pub h10: f64,
    pub h01: f64,
    pub residual: f64,
}

/// Linear part of the invariant graph `d − d₀ = h₁₀(ω−ω₀) + h₀₁(λ−λ₀) + …`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterManifold {
    pub h10: f64,
    pub h01: f64,
    pub omega0_sq: f64,
    pub residual: f64,
    /// The solved pair followed by the two alternative sign conventions that
    /// circulate for this result, each with its own residual.
    pub variants: Vec<CoefficientVariant>,
}

/// Residual of the linear invariance equation
/// `−γ(h₁₀u + h₀₁v) + K₂u = h₁₀K₀v − h₀₁K₁u` (coefficients of `u` and `v`).
pub fn invariance_residual(k: (f64, f64, f64), gamma: f64, h10: f64, h01: f64) -> f64 {
    let (k0, k1, k2) = k;
    let ru = -gamma * h10 + k2 + h01 * k1;
    let rv = -gamma * h01 - h10 * k0;
    ru.abs().max(rv.abs())
}

pub fn center_manifold_from(k: (f64, f64, f64), gamma: f64) -> CenterManifold {
    let (k0, k1, k2) = k;
    let omega0_sq = k0 * k1;
    let denom = gamma * gamma + omega0_sq;
    let h10 = gamma * k2 / denom;
    let h01 = -k0 * k2 / denom;
    let variant = |label, h10, h01| CoefficientVariant {
        label,
        h10,
        h01,
        residual: invariance_residual(k, gamma, h10, h01),
    };
    let solved = variant("solved", h10, h01);
    CenterManifold {
        h10,
        h01,
        omega0_sq,
        residual: solved.residual,
        variants: vec![
            solved,
            variant("minus_plus", -gamma * k2 / denom, k0 * k2 / denom),
            variant("plus_plus", gamma * k2 / denom, k0 * k2 / denom),
        ],
    }
}

/// Coefficients at the interior equilibrium of `params`, using the
/// zero-interest structure of the Jacobian.
pub fn center_manifold_coeffs(params: &ModelParams) -> Result<CenterManifold> {
    let gamma = params.gamma();
    if !(gamma > 0.0) {
        return Err(Error::Domain {
            what: "alpha+beta",
            value: gamma,
        });
    }
    let eq = params.interior_equilibrium()?;
    Ok(center_manifold_from(jacobian_composites(params, &eq), gamma))
}

/// A closed orbit of the planar family, sampled on a uniform phase grid.
#[derive(Debug, Clone)]
pub struct PlanarCycle {
    pub params: ModelParams,
    pub equilibrium: [f64; 3],
    /// Section offset `ω(0) − ω₀`.
    pub amplitude: f64,
    /// First-integral value of the orbit.
    pub level: f64,
    pub period: f64,
    pub omega: f64,
    pub theta: Vec<f64>,
    pub samples: Vec<[f64; 2]>,
    pub d_theta: Vec<[f64; 2]>,
    pub section_residual: f64,
}

impl PlanarCycle {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `(max ω − min ω)/2` over the grid.
    pub fn omega_amplitude(&self) -> f64 {
        let (lo, hi) = self
            .samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s[0]), hi.max(s[0])));
        0.5 * (hi - lo)
    }

    pub fn component(&self, i: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[i]).collect()
    }
}

pub fn planar_cycle(a: f64, params: &ModelParams, n: usize) -> Result<PlanarCycle> {
    planar_cycle_tol(a, params, n, CYCLE_TOL)
}

pub fn planar_cycle_tol(a: f64, params: &ModelParams, n: usize, tol: f64) -> Result<PlanarCycle> {
    if !(a > 0.0) {
        return Err(Error::Domain {
            what: "cycle amplitude",
            value: a,
        });
    }
    if n < 256 {
        return Err(Error::Domain {
            what: "phase grid size",
            value: n as f64,
        });
    }
    let (p0, eq) = zero_rate(params)?;
    let flow = PlanarFlow { params: &p0 };
    let x0 = [eq[0] + a, eq[1]];
    let section = PlaneSection::employment(eq[1], eq[0]);
    let (event, sol) = first_return(&flow, x0, &section, 0.5, 500.0, model_options(tol))?;
    let period = event.time;
    let omega = 2.0 * std::f64::consts::PI / period;
    let theta = periodic::phase_grid(n);
    let samples: Vec<[f64; 2]> = theta.iter().map(|th| sol.eval(th / omega)).collect();
    let d_theta = samples
        .iter()
        .map(|x| {
            let f = planar_rates(&p0, x);
            [f[0] / omega, f[1] / omega]
        })
        .collect();
    let level = first_integral(&p0)?.value(x0[0], x0[1])?;
    Ok(PlanarCycle {
        params: p0,
        equilibrium: eq,
        amplitude: a,
        level,
        period,
        omega,
        theta,
        samples,
        d_theta,
        section_residual: (event.state[1] - eq[1]).abs(),
    })
}

/// The periodic debt solution `d₀(θ)` along a planar cycle.
#[derive(Debug, Clone)]
pub struct PeriodicDebtGraph {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub d: Vec<f64>,
    pub omega: f64,
    pub period: f64,
    /// `exp(∫₀^{2π} a/Ω dθ)` by the periodic trapezoid rule.
    pub multiplier: f64,
    /// `exp(A(T))` from direct integration of `A' = a`.
    pub multiplier_direct: f64,
    /// Max nodal residual of `Ω ∂θd = a d + b` (spectral derivative).
    pub residual: f64,
}

pub fn periodic_debt(cycle: &PlanarCycle) -> Result<PeriodicDebtGraph> {
    let p = &cycle.params;
    let (a, b): (Vec<f64>, Vec<f64>) = cycle
        .samples
        .iter()
        .map(|x| debt_coefficients(p, x[0]))
        .unzip();
    let multiplier = (periodic::mean(&a) * cycle.period).exp();
    if (multiplier - 1.0).abs() < 1e-10 {
        return Err(Error::Resonance(multiplier));
    }
    let start = [cycle.samples[0][0], cycle.samples[0][1], 0.0, 0.0];
    let sol = integrate_system(
        &DebtFlow { params: p },
        0.0,
        start,
        cycle.period,
        model_options(CYCLE_TOL),
    )?;
    let end = sol.last();
    let multiplier_direct = end[2].exp();
    let d_start = multiplier_direct * end[3] / (1.0 - multiplier_direct);
    let d: Vec<f64> = cycle
        .theta
        .iter()
        .map(|th| {
            let y = sol.eval(th / cycle.omega);
            y[2].exp() * (y[3] + d_start)
        })
        .collect();
    let dd = periodic::derivative(&d);
    let residual = (0..d.len())
        .map(|k| (cycle.omega * dd[k] - (a[k] * d[k] + b[k])).abs())
        .fold(0.0, f64::max);
    Ok(PeriodicDebtGraph {
        a,
        b,
        d,
        omega: cycle.omega,
        period: cycle.period,
        multiplier,
        multiplier_direct,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleStability {
    /// `∫₀^T a dτ`.
    pub exponent: f64,
    pub multiplier: f64,
    pub stable: bool,
    pub neutral: bool,
}

pub fn stability_from_coefficients(a: &[f64], period: f64) -> CycleStability {
    let exponent = periodic::mean(a) * period;
    let neutral = exponent.abs() < 1e-12;
    CycleStability {
        exponent,
        multiplier: exponent.exp(),
        stable: !neutral && exponent < 0.0,
        neutral,
    }
}

pub fn cycle_stability(graph: &PeriodicDebtGraph) -> CycleStability {
    stability_from_coefficients(&graph.a, graph.period)
}
