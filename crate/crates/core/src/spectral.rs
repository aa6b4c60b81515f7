//! Jacobians and local spectra of the equilibria.
//!
//! At the interior equilibrium the Jacobian has the structured form
//!
//! ```text
//!     ⎡  0    K₀    0       ⎤
//! J = ⎢ −K₁   0    −r K₁    ⎥
//!     ⎣  K₂   0    r K₂ − γ ⎦
//! ```
//!
//! with characteristic polynomial `ρ³ + (γ − η)ρ² + Ω_r ρ + Ω_r γ`, where
//! `γ = α + β`, `Ω_r = K₀K₁` and `η = r K₂`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{char_poly, cubic_residual, cubic_roots, Mat3};
use crate::model::{EquilibriumReport, ModelParams, State};

/// |η| below this is treated as exactly critical.
pub const HOPF_TOLERANCE: f64 = 1e-12;

/// Analytic Jacobian of the vector field at an arbitrary state.
pub fn jacobian(x: &State, p: &ModelParams) -> Result<Mat3> {
    p.phillips(x.lambda)?;
    Ok(jacobian_unchecked(&x.to_array(), p))
}

#[inline]
pub fn jacobian_unchecked(x: &[f64; 3], p: &ModelParams) -> Mat3 {
    let [omega, lambda, d] = *x;
    let pi = 1.0 - omega - p.r * d;
    let kappa = p.investment(pi);
    let kp = p.investment_prime(pi);
    let nu = p.nu;
    [
        [
            p.phillips_unchecked(lambda) - p.alpha,
            omega * p.phillips_prime_unchecked(lambda),
            0.0,
        ],
        [
            -lambda * kp / nu,
            kappa / nu - p.alpha - p.beta - p.delta,
            -lambda * p.r * kp / nu,
        ],
        [
            d * kp / nu - kp + 1.0,
            0.0,
            p.r - kappa / nu + p.delta + p.r * kp * (d / nu - 1.0),
        ],
    ]
}

/// Trace of the Jacobian, the Liouville integrand.
pub fn jacobian_trace(x: &[f64; 3], p: &ModelParams) -> f64 {
    let j = jacobian_unchecked(x, p);
    j[0][0] + j[1][1] + j[2][2]
}

/// Eigenvalues of a general real 3×3 matrix via its characteristic cubic.
pub fn eigenvalues3(m: &Mat3) -> [Complex64; 3] {
    let [a, b, c] = char_poly(m);
    cubic_roots(a, b, c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    HopfCritical,
    UnstableFocus,
    Other,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::HopfCritical => "hopf_critical",
            Verdict::UnstableFocus => "unstable_focus",
            Verdict::Other => "other",
        }
    }
}

/// Spectral data of the interior equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralReport {
    pub equilibrium: EquilibriumReport,
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
    pub gamma: f64,
    pub omega_r: f64,
    pub eta: f64,
    /// `[a₁, a₂, a₃]` of `ρ³ + a₁ρ² + a₂ρ + a₃`.
    pub coefficients: [f64; 3],
    /// Real root first, then the complex pair (positive imaginary part first).
    pub eigenvalues: [Complex64; 3],
    pub cubic_residual: f64,
    pub routh_hurwitz: bool,
    pub verdict: Verdict,
}

impl SpectralReport {
    /// The complex-conjugate pair `a ± iΩ_H`, if present.
    pub fn complex_pair(&self) -> Option<Complex64> {
        self.eigenvalues
            .iter()
            .copied()
            .find(|z| z.im > 0.0)
    }

    /// Real part of the complex pair, `a(κ₂)`.
    pub fn pair_real_part(&self) -> Option<f64> {
        self.complex_pair().map(|z| z.re)
    }
}

/// `K₀ = ω₀Φ′(λ₀)`, `K₁ = λ₀κ′(π₀)/ν`, `K₂ = ((d₀ − ν)κ′(π₀) + ν)/ν`.
pub fn jacobian_composites(p: &ModelParams, eq: &EquilibriumReport) -> (f64, f64, f64) {
    let x = eq.point;
    let kp = p.investment_prime(eq.pi0);
    let k0 = x.omega * p.phillips_prime_unchecked(x.lambda);
    let k1 = x.lambda * kp / p.nu;
    let k2 = ((x.d - p.nu) * kp + p.nu) / p.nu;
    (k0, k1, k2)
}

pub fn interior_spectrum(p: &ModelParams) -> Result<SpectralReport> {
    let equilibrium = p.interior_equilibrium()?;
    let (k0, k1, k2) = jacobian_composites(p, &equilibrium);
    let gamma = p.gamma();
    let omega_r = k0 * k1;
    let eta = p.r * k2;
    let coefficients = [gamma - eta, omega_r, omega_r * gamma];
    let [a1, a2, a3] = coefficients;
    let eigenvalues = cubic_roots(a1, a2, a3);
    let residual = cubic_residual(a1, a2, a3, &eigenvalues);
    let routh_hurwitz = a1 > 0.0 && a2 > 0.0 && a3 > 0.0 && a1 * a2 > a3;
    let has_pair = eigenvalues.iter().any(|z| z.im != 0.0);
    let verdict = if eta.abs() < HOPF_TOLERANCE {
        Verdict::HopfCritical
    } else if routh_hurwitz {
        Verdict::Stable
    } else if has_pair && eigenvalues[1].re > 0.0 && eigenvalues[0].re < 0.0 {
        Verdict::UnstableFocus
    } else {
        Verdict::Other
    };
    Ok(SpectralReport {
        equilibrium,
        k0,
        k1,
        k2,
        gamma,
        omega_r,
        eta,
        coefficients,
        eigenvalues,
        cubic_residual: residual,
        routh_hurwitz,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfIndicator {
    pub eta: f64,
    pub k2: f64,
    /// κ′(π₀) at which K₂ vanishes, `ν/(ν − d₀)`; `None` when `d₀ ≥ ν`.
    pub critical_slope: Option<f64>,
}

pub fn hopf_indicator(p: &ModelParams) -> Result<HopfIndicator> {
    let eq = p.interior_equilibrium()?;
    let (_, _, k2) = jacobian_composites(p, &eq);
    let d0 = eq.point.d;
    let critical_slope = (d0 < p.nu).then(|| p.nu / (p.nu - d0));
    Ok(HopfIndicator {
        eta: p.r * k2,
        k2,
        critical_slope,
    })
}

/// Closed-form Hopf value `κ₂* = (1 + c²)ν / (κ₁(ν − d₀))` with
/// `c = tan((ν(α+β+δ) − κ₀)/κ₁)`, the κ₂ at which K₂ vanishes.
pub fn critical_kappa2(p: &ModelParams) -> Result<f64> {
    let d0 = p.interior_equilibrium()?.point.d;
    if !(d0 < p.nu) {
        return Err(Error::Domain {
            what: "d0 - nu",
            value: d0 - p.nu,
        });
    }
    let c = ((p.target_investment() - p.kappa0) / p.kappa1).tan();
    Ok((1.0 + c * c) * p.nu / (p.kappa1 * (p.nu - d0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transversality {
    /// `Ω_r / (2(Ω_r + γ²))`
    pub formula: f64,
    /// Central difference of Re ρ over η = ±1e-5 at fixed Ω_r, γ.
    pub finite_difference: f64,
}

/// Crossing speed `d(Re ρ)/dη` of the complex pair at η = 0.
pub fn transversality_from(omega_r: f64, gamma: f64) -> Transversality {
    let formula = omega_r / (2.0 * (omega_r + gamma * gamma));
    let h = 1e-5;
    let re_at = |eta: f64| {
        let roots = cubic_roots(gamma - eta, omega_r, omega_r * gamma);
        roots[1].re
    };
    let finite_difference = (re_at(h) - re_at(-h)) / (2.0 * h);
    Transversality {
        formula,
        finite_difference,
    }
}

pub fn transversality(p: &ModelParams) -> Result<Transversality> {
    let rep = interior_spectrum(p)?;
    Ok(transversality_from(rep.omega_r, rep.gamma))
}

/// Spectrum of the boundary equilibrium `(0, 0, d₁)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySpectrum {
    pub equilibrium: EquilibriumReport,
    /// Eigenvalues of the numerical Jacobian at `(0, 0, d₁)`.
    pub numeric: [Complex64; 3],
    /// Diagonal of the (lower-triangular) Jacobian in closed form.
    pub exact_diagonal: [f64; 3],
    /// The textbook triple `Φ(0) − α`, `g − (α+β+δ)`, `(r+δ) − g` with
    /// `g = κ(π₁)/ν − δ` evaluated at the boundary profit share `π₁ = 1 − r d₁`.
    pub textbook: [f64; 3],
    /// All numeric eigenvalues have negative real parts.
    pub stable: bool,
    /// `Φ(0) < α` and `α+β+δ > g > r+δ`.
    pub textbook_stable: bool,
}

pub fn boundary_spectrum(p: &ModelParams) -> Result<BoundarySpectrum> {
    let equilibrium = p.boundary_equilibrium()?;
    let x = equilibrium.point;
    let j = jacobian(&x, p)?;
    let numeric = eigenvalues3(&j);
    let pi1 = equilibrium.pi0;
    let kappa = p.investment(pi1);
    let kp = p.investment_prime(pi1);
    let lambda1 = p.phillips_unchecked(0.0) - p.alpha;
    let exact_diagonal = [
        lambda1,
        kappa / p.nu - p.alpha - p.beta - p.delta,
        p.r + p.delta - kappa / p.nu + p.r * kp * (x.d / p.nu - 1.0),
    ];
    let g = kappa / p.nu - p.delta;
    let textbook = [
        lambda1,
        g - (p.alpha + p.beta + p.delta),
        (p.r + p.delta) - g,
    ];
    let stable = numeric.iter().all(|z| z.re < 0.0);
    let textbook_stable = p.phillips_unchecked(0.0) < p.alpha
        && p.alpha + p.beta + p.delta > g
        && g > p.r + p.delta;
    Ok(BoundarySpectrum {
        equilibrium,
        numeric,
        exact_diagonal,
        textbook,
        stable,
        textbook_stable,
    })
}
