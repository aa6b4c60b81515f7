//! Model parameters, behavioural functions and equilibria of the Keen system
//!
//! ```text
//! ω' = ω [Φ(λ) − α]
//! λ' = λ [κ(π)/ν − α − β − δ]
//! d' = d [r − κ(π)/ν + δ] + κ(π) − (1 − ω),     π = 1 − ω − r d
//! ```
//!
//! with the Phillips curve `Φ(λ) = φ₁/(1−λ)² − φ₀` and the bounded investment
//! function `κ(π) = κ₀ + κ₁ atan(κ₂ π + κ₃)`.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Default lower/upper-bound pair of the investment function. These are not
/// part of the published calibration; the pair puts the Hopf point of the
/// κ₂ continuation at κ₂* ≈ 13.26, just above the window where the
/// representative cycles are reported, and keeps κ(−∞) < 0.
pub const DEFAULT_KAPPA0: f64 = 0.1;
pub const DEFAULT_KAPPA1: f64 = 0.112;
pub const DEFAULT_KAPPA2: f64 = 13.09;

/// Structural constants and behavioural-function coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub nu: f64,
    pub r: f64,
    pub phi0: f64,
    pub phi1: f64,
    pub kappa0: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    pub lambda_star: f64,
    pub pi_star: f64,
}

/// Calibration targets from which a [`ModelParams`] is built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub nu: f64,
    pub r: f64,
    pub lambda_star: f64,
    pub phi_at_zero: f64,
    pub pi_star: f64,
    pub kappa0: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        Self::benchmark()
    }
}

impl Calibration {
    pub fn benchmark() -> Self {
        Self {
            alpha: 0.025,
            beta: 0.02,
            delta: 0.01,
            nu: 3.0,
            r: 0.003,
            lambda_star: 0.96,
            phi_at_zero: -0.04,
            pi_star: 0.16,
            kappa0: DEFAULT_KAPPA0,
            kappa1: DEFAULT_KAPPA1,
            kappa2: DEFAULT_KAPPA2,
        }
    }

    /// Solves the Phillips pair and the investment shift and validates the result.
    pub fn build(&self) -> Result<ModelParams> {
        let (phi0, phi1) = calibrate_phillips(self.lambda_star, self.phi_at_zero, self.alpha)?;
        let mut params = ModelParams {
            alpha: self.alpha,
            beta: self.beta,
            delta: self.delta,
            nu: self.nu,
            r: self.r,
            phi0,
            phi1,
            kappa0: self.kappa0,
            kappa1: self.kappa1,
            kappa2: self.kappa2,
            kappa3: 0.0,
            lambda_star: self.lambda_star,
            pi_star: self.pi_star,
        };
        params.kappa3 = calibrate_kappa3(
            self.kappa0,
            self.kappa1,
            self.kappa2,
            self.pi_star,
            &params,
        )?;
        params.validate()?;
        Ok(params)
    }
}

impl ModelParams {
    /// Benchmark parameters with the default investment bounds.
    pub fn benchmark() -> Self {
        Calibration::benchmark()
            .build()
            .expect("benchmark calibration is admissible")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("delta", self.delta),
            ("nu", self.nu),
            ("phi1", self.phi1),
        ];
        for (what, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::Domain { what, value });
            }
        }
        if !(self.r >= 0.0) {
            return Err(Error::Domain {
                what: "r",
                value: self.r,
            });
        }
        if !(self.kappa1 * self.kappa2 > 0.0) {
            return Err(Error::Domain {
                what: "kappa1*kappa2",
                value: self.kappa1 * self.kappa2,
            });
        }
        Ok(())
    }

    /// `ν(α+β+δ)`, the investment rate that sustains balanced growth.
    pub fn target_investment(&self) -> f64 {
        self.nu * (self.alpha + self.beta + self.delta)
    }

    pub fn gamma(&self) -> f64 {
        self.alpha + self.beta
    }

    /// Same model with κ₂ replaced and κ₃ re-solved so that κ(π*) is unchanged.
    pub fn with_kappa2(&self, kappa2: f64) -> Result<Self> {
        let mut p = *self;
        p.kappa2 = kappa2;
        p.kappa3 = calibrate_kappa3(self.kappa0, self.kappa1, kappa2, self.pi_star, self)?;
        p.validate()?;
        Ok(p)
    }

    pub fn with_r(&self, r: f64) -> Self {
        Self { r, ..*self }
    }

    pub fn phillips(&self, lambda: f64) -> Result<f64> {
        check_employment(lambda)?;
        Ok(self.phillips_unchecked(lambda))
    }

    pub fn phillips_prime(&self, lambda: f64) -> Result<f64> {
        check_employment(lambda)?;
        Ok(self.phillips_prime_unchecked(lambda))
    }

    #[inline]
    pub fn phillips_unchecked(&self, lambda: f64) -> f64 {
        let s = 1.0 - lambda;
        self.phi1 / (s * s) - self.phi0
    }

    #[inline]
    pub fn phillips_prime_unchecked(&self, lambda: f64) -> f64 {
        let s = 1.0 - lambda;
        2.0 * self.phi1 / (s * s * s)
    }

    /// Closed-form `Φ⁻¹(y)` on the branch `λ < 1`.
    pub fn phillips_inverse(&self, y: f64) -> Result<f64> {
        let denom = y + self.phi0;
        if !(denom > 0.0) {
            return Err(Error::Domain {
                what: "phillips target",
                value: y,
            });
        }
        Ok(1.0 - (self.phi1 / denom).sqrt())
    }

    #[inline]
    pub fn investment(&self, pi: f64) -> f64 {
        self.kappa0 + self.kappa1 * (self.kappa2 * pi + self.kappa3).atan()
    }

    #[inline]
    pub fn investment_prime(&self, pi: f64) -> f64 {
        let z = self.kappa2 * pi + self.kappa3;
        self.kappa1 * self.kappa2 / (1.0 + z * z)
    }

    /// `(κ(−∞), κ(+∞))`.
    pub fn investment_limits(&self) -> (f64, f64) {
        let span = self.kappa1.abs() * FRAC_PI_2;
        (self.kappa0 - span, self.kappa0 + span)
    }

    /// Closed-form `κ⁻¹(y)`.
    pub fn investment_inverse(&self, y: f64) -> Result<f64> {
        let arg = (y - self.kappa0) / self.kappa1;
        if !(arg.abs() < FRAC_PI_2) {
            return Err(Error::Domain {
                what: "investment target",
                value: y,
            });
        }
        Ok((arg.tan() - self.kappa3) / self.kappa2)
    }

    pub fn profit_share(&self, x: &State) -> f64 {
        1.0 - x.omega - self.r * x.d
    }

    /// Right-hand side without domain checks; used inside integrators.
    #[inline]
    pub fn rates(&self, x: &[f64; 3]) -> [f64; 3] {
        let [omega, lambda, d] = *x;
        let pi = 1.0 - omega - self.r * d;
        let kappa = self.investment(pi);
        let growth = kappa / self.nu;
        [
            omega * (self.phillips_unchecked(lambda) - self.alpha),
            lambda * (growth - self.alpha - self.beta - self.delta),
            d * (self.r - growth + self.delta) + kappa - (1.0 - omega),
        ]
    }

    pub fn vector_field(&self, x: &State) -> Result<State> {
        check_employment(x.lambda)?;
        Ok(State::from(self.rates(&x.to_array())))
    }

    pub fn interior_equilibrium(&self) -> Result<EquilibriumReport> {
        let lambda0 = self.phillips_inverse(self.alpha)?;
        if !(lambda0 > 0.0 && lambda0 < 1.0) {
            return Err(Error::Domain {
                what: "lambda0",
                value: lambda0,
            });
        }
        let pi0 = self.investment_inverse(self.target_investment())?;
        let gamma = self.gamma();
        if !(gamma > 0.0) {
            return Err(Error::Domain {
                what: "alpha+beta",
                value: gamma,
            });
        }
        let d0 = (self.target_investment() - pi0) / gamma;
        let omega0 = 1.0 - pi0 - self.r * d0;
        let point = State::new(omega0, lambda0, d0);
        let residual = max_norm(&self.rates(&point.to_array()));
        Ok(EquilibriumReport {
            kind: EquilibriumKind::Interior,
            point,
            pi0,
            residual,
        })
    }

    /// Left-hand side of the boundary-equilibrium equation for the debt level.
    pub fn boundary_residual(&self, d1: f64) -> f64 {
        let kappa = self.investment(1.0 - self.r * d1);
        d1 * (self.r - kappa / self.nu + self.delta) + kappa - 1.0
    }

    fn boundary_residual_prime(&self, d1: f64) -> f64 {
        let pi = 1.0 - self.r * d1;
        let kappa = self.investment(pi);
        let kp = self.investment_prime(pi);
        (self.r - kappa / self.nu + self.delta) + d1 * self.r * kp / self.nu - self.r * kp
    }

    /// Boundary equilibrium `(0, 0, d₁)`: the smallest root of the defining
    /// equation on `[0, 10ν/max(r, 1e-6)]`, bracketed by a uniform scan and
    /// polished by Newton steps kept inside the bracket.
    pub fn boundary_equilibrium(&self) -> Result<EquilibriumReport> {
        const SCAN_INTERVALS: usize = 20_000;
        let upper = 10.0 * self.nu / self.r.max(1e-6);
        let g = |d: f64| self.boundary_residual(d);

        let mut bracket = None;
        let mut lo = 0.0;
        let mut g_lo = g(lo);
        if g_lo == 0.0 {
            bracket = Some((lo, lo));
        }
        for i in 1..=SCAN_INTERVALS {
            if bracket.is_some() {
                break;
            }
            let hi = upper * i as f64 / SCAN_INTERVALS as f64;
            let g_hi = g(hi);
            if g_hi == 0.0 || g_lo.signum() != g_hi.signum() {
                bracket = Some((lo, hi));
                break;
            }
            lo = hi;
            g_lo = g_hi;
        }
        let (mut a, mut b) = bracket.ok_or_else(|| {
            Error::NoRoot(format!(
                "boundary equilibrium equation has no sign change on [0, {upper}]"
            ))
        })?;

        let mut d1 = 0.5 * (a + b);
        if a == b {
            d1 = a;
        } else {
            let mut ga = g(a);
            for _ in 0..200 {
                let gd = g(d1);
                if gd == 0.0 || (b - a) < 1e-15 * (1.0 + d1.abs()) {
                    break;
                }
                if ga.signum() == gd.signum() {
                    a = d1;
                    ga = gd;
                } else {
                    b = d1;
                }
                let slope = self.boundary_residual_prime(d1);
                let newton = d1 - gd / slope;
                d1 = if slope != 0.0 && newton > a && newton < b {
                    newton
                } else {
                    0.5 * (a + b)
                };
            }
        }

        let point = State::new(0.0, 0.0, d1);
        let residual = max_norm(&self.rates(&point.to_array()));
        if !(residual < 1e-10) {
            return Err(Error::NoRoot(format!(
                "boundary equilibrium residual {residual:e} after refinement"
            )));
        }
        Ok(EquilibriumReport {
            kind: EquilibriumKind::Boundary,
            point,
            pi0: 1.0 - self.r * d1,
            residual,
        })
    }

    /// Local classification of the infinite-debt state via `u = 1/d`.
    pub fn infinite_debt_stability(&self) -> InfiniteDebtReport {
        let phillips_at_zero = self.phillips_unchecked(0.0);
        let (kappa_floor, _) = self.investment_limits();
        let mu = kappa_floor / self.nu - self.delta;
        let wage_condition = phillips_at_zero < self.alpha;
        let investment_condition = kappa_floor < self.target_investment();
        let rate_condition = mu < self.r;
        // a failed side condition or a tie μ = r leaves the linearisation silent
        let tie = (mu - self.r).abs() <= 1e-14 * (1.0 + self.r.abs());
        let verdict = if !(wage_condition && investment_condition) || tie {
            Stability::Inconclusive
        } else if rate_condition {
            Stability::Stable
        } else {
            Stability::Unstable
        };
        InfiniteDebtReport {
            report: EquilibriumReport {
                kind: EquilibriumKind::InfiniteDebt,
                point: State::new(0.0, 0.0, 0.0),
                pi0: f64::NEG_INFINITY,
                residual: 0.0,
            },
            wage_condition,
            investment_condition,
            rate_condition,
            mu_minus_infinity: mu,
            verdict,
        }
    }
}

fn check_employment(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "lambda",
            value: lambda,
        })
    }
}

pub(crate) fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Solves `Φ(λ*) = α`, `Φ(0) = phi_at_zero` for `(φ₀, φ₁)`.
pub fn calibrate_phillips(lambda_star: f64, phi_at_zero: f64, alpha: f64) -> Result<(f64, f64)> {
    if !(lambda_star > 0.0 && lambda_star < 1.0) {
        return Err(Error::Domain {
            what: "lambda_star",
            value: lambda_star,
        });
    }
    let s2 = (1.0 - lambda_star).powi(2);
    let phi1 = (alpha - phi_at_zero) * s2 / (1.0 - s2);
    if !(phi1 > 0.0) {
        return Err(Error::Calibration(format!(
            "Phillips slope coefficient phi1 = {phi1} is not positive (alpha must exceed Phi(0))"
        )));
    }
    Ok((phi1 - phi_at_zero, phi1))
}

/// Shift κ₃ such that `κ(π*) = ν(α+β+δ)` for the given bounds and slope.
pub fn calibrate_kappa3(
    kappa0: f64,
    kappa1: f64,
    kappa2: f64,
    pi_star: f64,
    params: &ModelParams,
) -> Result<f64> {
    let arg = (params.target_investment() - kappa0) / kappa1;
    if !(arg.abs() < FRAC_PI_2) || !arg.is_finite() {
        return Err(Error::Calibration(format!(
            "target investment {} is outside the range of kappa (bounds {} +/- {}*pi/2)",
            params.target_investment(),
            kappa0,
            kappa1
        )));
    }
    Ok(arg.tan() - kappa2 * pi_star)
}

/// A point `(ω, λ, d)` of the state space.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State {
    pub omega: f64,
    pub lambda: f64,
    pub d: f64,
}

impl State {
    pub const fn new(omega: f64, lambda: f64, d: f64) -> Self {
        Self { omega, lambda, d }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.omega, self.lambda, self.d]
    }

    /// ω > 0 and λ in (0, 1).
    pub fn is_admissible(&self) -> bool {
        self.omega > 0.0 && self.lambda > 0.0 && self.lambda < 1.0 && self.d.is_finite()
    }
}

impl From<[f64; 3]> for State {
    fn from(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumKind {
    Interior,
    Boundary,
    InfiniteDebt,
}

impl EquilibriumKind {
    pub fn name(self) -> &'static str {
        match self {
            EquilibriumKind::Interior => "interior",
            EquilibriumKind::Boundary => "boundary",
            EquilibriumKind::InfiniteDebt => "infinite_debt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumReport {
    pub kind: EquilibriumKind,
    /// For the infinite-debt kind the third coordinate is `u = 1/d`.
    pub point: State,
    pub pi0: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfiniteDebtReport {
    pub report: EquilibriumReport,
    /// Φ(0) < α
    pub wage_condition: bool,
    /// κ(−∞) < ν(α+β+δ)
    pub investment_condition: bool,
    /// μ(−∞) < r
    pub rate_condition: bool,
    pub mu_minus_infinity: f64,
    pub verdict: Stability,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn phillips_calibration_values() {
        let (phi0, phi1) = calibrate_phillips(0.96, -0.04, 0.025).unwrap();
        // 625 φ₁ − φ₀ = 0.025 and φ₁ − φ₀ = −0.04  =>  624 φ₁ = 0.065
        assert_abs_diff_eq!(phi1, 0.065 / 624.0, epsilon = 1e-15);
        assert_abs_diff_eq!(phi1, 1.0416667e-4, epsilon = 1e-11);
        assert_abs_diff_eq!(phi0, 4.0104167e-2, epsilon = 1e-9);
        let p = ModelParams::benchmark();
        assert_abs_diff_eq!(p.phillips(0.96).unwrap(), 0.025, epsilon = 1e-14);
        assert_abs_diff_eq!(p.phillips(0.0).unwrap(), -0.04, epsilon = 1e-14);
    }

    #[test]
    fn phillips_slope_at_target() {
        let p = ModelParams {
            phi1: 1.0416667e-4,
            ..ModelParams::benchmark()
        };
        // 2 φ₁ / 0.04³
        assert_abs_diff_eq!(p.phillips_prime(0.96).unwrap(), 3.2552084375, epsilon = 1e-9);
        assert_abs_diff_eq!(p.phillips_prime(0.96).unwrap(), 3.2552083, epsilon = 1e-6);
    }

    #[test]
    fn phillips_domain_errors() {
        let p = ModelParams::benchmark();
        assert!(p.phillips(1.0).is_err());
        assert!(p.phillips(1.2).is_err());
        assert!(p.phillips(-0.1).is_err());
        assert!(p.phillips_prime(1.0).is_err());
    }

    #[test]
    fn degenerate_phillips_calibration_rejected() {
        let err = calibrate_phillips(0.96, 0.025, 0.025).unwrap_err();
        assert!(matches!(err, Error::Calibration(_)));
    }

    #[test]
    fn investment_calibration() {
        let p = ModelParams::benchmark();
        assert_abs_diff_eq!(p.investment(0.16), 0.165, epsilon = 1e-12);
        let (lo, hi) = p.investment_limits();
        assert_abs_diff_eq!(lo, p.kappa0 - p.kappa1 * FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(hi, p.kappa0 + p.kappa1 * FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(p.investment(-1e12), lo, epsilon = 1e-10);
    }

    #[test]
    fn kappa3_zero_argument_case() {
        let p = ModelParams::benchmark();
        let k3 = calibrate_kappa3(0.165, 0.3, 7.0, 0.16, &p).unwrap();
        assert_abs_diff_eq!(k3, -0.16 * 7.0, epsilon = 1e-15);
        let q = ModelParams {
            kappa0: 0.165,
            kappa1: 0.3,
            kappa2: 7.0,
            kappa3: k3,
            ..p
        };
        assert_abs_diff_eq!(q.investment_prime(0.16), 0.3 * 7.0, epsilon = 1e-14);
    }

    #[test]
    fn kappa3_unreachable_target() {
        let p = ModelParams::benchmark();
        let err = calibrate_kappa3(0.5, 0.1, 10.0, 0.16, &p).unwrap_err();
        assert!(matches!(err, Error::Calibration(_)));
    }

    #[test]
    fn vector_field_hand_evaluation() {
        let p = ModelParams::benchmark();
        let x = State::new(0.85, 0.96, 0.11);
        let v = p.vector_field(&x).unwrap();
        let pi = 1.0 - 0.85 - p.r * 0.11;
        let kappa = p.kappa0 + p.kappa1 * (p.kappa2 * pi + p.kappa3).atan();
        let phi = p.phi1 / (0.04 * 0.04) - p.phi0;
        assert_abs_diff_eq!(v.omega, 0.85 * (phi - 0.025), epsilon = 1e-15);
        assert_abs_diff_eq!(v.lambda, 0.96 * (kappa / 3.0 - 0.055), epsilon = 1e-15);
        assert_abs_diff_eq!(
            v.d,
            0.11 * (p.r - kappa / 3.0 + 0.01) + kappa - 0.15,
            epsilon = 1e-15
        );
        assert!(v.lambda.abs() > 1e-4);
    }

    #[test]
    fn interior_equilibrium_benchmark() {
        let p = ModelParams::benchmark();
        let eq = p.interior_equilibrium().unwrap();
        assert_abs_diff_eq!(eq.point.omega, 0.839667, epsilon = 1e-6);
        assert_abs_diff_eq!(eq.point.lambda, 0.96, epsilon = 1e-12);
        assert_abs_diff_eq!(eq.point.d, (3.0 * 0.055 - 0.16) / 0.045, epsilon = 1e-12);
        assert_abs_diff_eq!(eq.pi0, 0.16, epsilon = 1e-12);
        assert!(eq.residual < 1e-12);
        let v = p.vector_field(&eq.point).unwrap();
        assert!(max_norm(&v.to_array()) < 1e-12);
    }

    #[test]
    fn zero_rate_equilibrium_and_planar_decoupling() {
        let p = ModelParams::benchmark().with_r(0.0);
        let eq = p.interior_equilibrium().unwrap();
        assert_abs_diff_eq!(eq.point.omega, 0.84, epsilon = 1e-12);
        let x = State::new(eq.point.omega, eq.point.lambda, 0.7);
        let v = p.vector_field(&x).unwrap();
        assert!(v.omega.abs() < 1e-15 && v.lambda.abs() < 1e-15);
        assert!(v.d.abs() > 1e-3);
    }

    #[test]
    fn boundary_equilibrium_solves_defining_equation() {
        let p = ModelParams::benchmark();
        let eq = p.boundary_equilibrium().unwrap();
        assert!(p.boundary_residual(eq.point.d).abs() < 1e-10);
        assert!(eq.residual < 1e-10);
        assert!(eq.point.d > 0.0);
        assert_abs_diff_eq!(p.phillips(0.0).unwrap() - p.alpha, -0.065, epsilon = 1e-14);
    }

    #[test]
    fn boundary_equilibrium_constant_investment() {
        // κ ≡ 1 (κ₁ → 0 is not admissible, so flatten via a tiny slope) and δ = 0:
        // the equation reduces to d₁ (r − 1/ν) = 0.
        let mut p = ModelParams::benchmark();
        p.delta = 0.0;
        p.kappa0 = 1.0;
        p.kappa1 = 1e-300;
        p.kappa3 = 0.0;
        let eq = p.boundary_equilibrium().unwrap();
        assert!(eq.point.d.abs() < 1e-12);
    }

    #[test]
    fn infinite_debt_classification() {
        let p = ModelParams::benchmark();
        let rep = p.infinite_debt_stability();
        assert!(rep.wage_condition);
        assert!(rep.investment_condition);
        assert!(rep.mu_minus_infinity < 0.0);
        assert_eq!(rep.verdict, Stability::Stable);

        // μ(−∞) = 0 with r = 0: boundary case.
        let mut q = p.with_r(0.0);
        q.kappa0 = q.kappa1 * FRAC_PI_2 + q.nu * q.delta;
        let rep = q.infinite_debt_stability();
        assert!(rep.mu_minus_infinity.abs() < 1e-15);
        assert_eq!(rep.verdict, Stability::Inconclusive);
    }

    fn admissible_calibration() -> impl Strategy<Value = Calibration> {
        (
            0.005..0.05f64,
            0.005..0.04f64,
            0.005..0.08f64,
            1.5..5.0f64,
            0.0..0.01f64,
            0.85..0.99f64,
            -0.08..-0.01f64,
            0.05..0.3f64,
            -1.2..1.2f64,
            0.05..0.5f64,
            2.0..30.0f64,
        )
            .prop_map(|(alpha, beta, delta, nu, r, ls, p0, ps, c, k1, k2)| {
                let target = nu * (alpha + beta + delta);
                Calibration {
                    alpha,
                    beta,
                    delta,
                    nu,
                    r,
                    lambda_star: ls,
                    phi_at_zero: p0,
                    // keep the equilibrium debt positive
                    pi_star: ps.min(0.9 * target),
                    kappa0: target - k1 * c.atan(),
                    kappa1: k1,
                    kappa2: k2,
                }
            })
    }

    proptest! {
        #[test]
        fn calibration_round_trips(cal in admissible_calibration()) {
            let p = cal.build().unwrap();
            prop_assert!((p.phillips(cal.lambda_star).unwrap() - cal.alpha).abs() < 1e-12);
            prop_assert!((p.phillips(0.0).unwrap() - cal.phi_at_zero).abs() < 1e-12);
            prop_assert!((p.investment(cal.pi_star) - p.target_investment()).abs() < 1e-12);
        }

        #[test]
        fn interior_equilibrium_is_a_zero(cal in admissible_calibration()) {
            let p = cal.build().unwrap();
            let eq = p.interior_equilibrium().unwrap();
            prop_assert!(eq.residual < 1e-10);
            prop_assert!(eq.point.lambda > 0.0 && eq.point.lambda < 1.0);
        }

        #[test]
        fn equilibrium_invariant_under_kappa2_recalibration(
            cal in admissible_calibration(), k2 in 2.0..30.0f64
        ) {
            let p = cal.build().unwrap();
            let q = p.with_kappa2(k2).unwrap();
            let a = p.interior_equilibrium().unwrap();
            let b = q.interior_equilibrium().unwrap();
            prop_assert!((a.pi0 - b.pi0).abs() < 1e-12);
            prop_assert!((a.point.d - b.point.d).abs() < 1e-10);
        }

        #[test]
        fn behavioural_slopes_positive(lambda in 0.0..0.999f64, pi in -50.0..50.0f64) {
            let p = ModelParams::benchmark();
            prop_assert!(p.phillips_prime(lambda).unwrap() > 0.0);
            prop_assert!(p.investment_prime(pi) > 0.0);
        }
    }
}
