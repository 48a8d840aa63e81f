//! Concrete PDE definitions: dispersion symbols, nonlinearities, resonance
//! phase functions and conserved functionals for KdV, cubic NLS and
//! quadratic NLS.
//!
//! Internal evolution convention: `∂_t u + i L u = N(u)` with real symbol
//! `ω(k)` for `L`, i.e. the NLS equations are multiplied through by `i` so
//! that a single linear propagator code path serves every equation.
//!
//! * KdV           `∂_t u + (1/6)∂_x³ u + u ∂_x u = 0`:  ω(k) = -k³/6, N(u) = -u ∂_x u
//! * cubic NLS     `i∂_t u + ∂_x² u + λ|u|²u = 0`:       ω(k) = k²,    N(u) = iλ|u|²u
//! * quadratic NLS `i∂_t u + ∂_x² u + λu² = 0`:          ω(k) = k²,    N(u) = iλu²

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::spectral::{DispersionSymbol, Reality, SpectralField};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EquationKind {
    Kdv,
    CubicNls,
    QuadraticNls,
}

impl EquationKind {
    pub fn name(&self) -> &'static str {
        match self {
            EquationKind::Kdv => "kdv",
            EquationKind::CubicNls => "cnls",
            EquationKind::QuadraticNls => "qnls",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "kdv" => Ok(EquationKind::Kdv),
            "cnls" | "cubic_nls" => Ok(EquationKind::CubicNls),
            "qnls" | "quadratic_nls" => Ok(EquationKind::QuadraticNls),
            other => Err(CoreError::Argument(format!("unknown equation kind `{other}`"))),
        }
    }
}

/// A dispersive model: symbol, nonlinearity and invariant functionals.
#[derive(Clone, Copy, Debug)]
pub struct EquationSpec {
    kind: EquationKind,
    symbol: DispersionSymbol,
    lambda: f64,
    dealias_override: Option<f64>,
}

impl EquationSpec {
    pub fn kdv() -> Self {
        Self {
            kind: EquationKind::Kdv,
            symbol: DispersionSymbol::kdv_default(),
            lambda: 1.0,
            dealias_override: None,
        }
    }

    /// KdV with a custom cubic dispersion scale: `ω(k) = scale·k³`.
    pub fn kdv_with_scale(scale: f64) -> Result<Self> {
        if scale == 0.0 {
            return Err(CoreError::Argument("cubic dispersion scale must be nonzero".into()));
        }
        Ok(Self {
            kind: EquationKind::Kdv,
            symbol: DispersionSymbol::Cubic { scale },
            lambda: 1.0,
            dealias_override: None,
        })
    }

    pub fn cubic_nls(lambda: f64) -> Self {
        Self {
            kind: EquationKind::CubicNls,
            symbol: DispersionSymbol::nls_default(),
            lambda,
            dealias_override: None,
        }
    }

    pub fn quadratic_nls(lambda: f64) -> Self {
        Self {
            kind: EquationKind::QuadraticNls,
            symbol: DispersionSymbol::nls_default(),
            lambda,
            dealias_override: None,
        }
    }

    pub fn from_kind(kind: EquationKind, lambda: f64) -> Self {
        match kind {
            EquationKind::Kdv => Self::kdv(),
            EquationKind::CubicNls => Self::cubic_nls(lambda),
            EquationKind::QuadraticNls => Self::quadratic_nls(lambda),
        }
    }

    pub fn kind(&self) -> EquationKind {
        self.kind
    }

    pub fn symbol(&self) -> DispersionSymbol {
        self.symbol
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn reality(&self) -> Reality {
        match self.kind {
            EquationKind::Kdv => Reality::RealValued,
            _ => Reality::ComplexValued,
        }
    }

    /// Dealiasing fraction for the pseudo-spectral nonlinearity: the 2/3
    /// rule for quadratic products, and for the cubic NLS product a band
    /// just under one half so wrapped triple-product modes cannot reach
    /// the retained band on power-of-two grids. A tighter fraction can be
    /// configured; every solver and reference in a run shares it.
    pub fn dealias_fraction(&self) -> f64 {
        if let Some(f) = self.dealias_override {
            return f;
        }
        match self.kind {
            EquationKind::Kdv | EquationKind::QuadraticNls => 2.0 / 3.0,
            EquationKind::CubicNls => 0.499,
        }
    }

    /// Override the dealiasing fraction (must not exceed the per-kind
    /// alias-free default).
    pub fn with_dealias_fraction(mut self, fraction: f64) -> Result<Self> {
        let cap = {
            let mut base = self;
            base.dealias_override = None;
            base.dealias_fraction()
        };
        if fraction <= 0.0 || fraction > cap {
            return Err(CoreError::Argument(format!(
                "dealias fraction {fraction} outside (0, {cap:.4}]"
            )));
        }
        self.dealias_override = Some(fraction);
        Ok(self)
    }

    fn check_reality(&self, u: &SpectralField) -> Result<()> {
        if u.reality() != self.reality() {
            return Err(CoreError::Consistency(format!(
                "field reality {:?} does not match equation {:?}",
                u.reality(),
                self.kind
            )));
        }
        Ok(())
    }

    /// Pseudo-spectral evaluation of `N(u)`: dealias, multiply pointwise in
    /// physical space, transform back, dealias again. Dealiasing both input
    /// and output keeps the retained band alias-free and makes the twisted
    /// midpoint reference solver conserve mass to rounding.
    pub fn nonlinearity(&self, u: &SpectralField) -> Result<SpectralField> {
        self.check_reality(u)?;
        let frac = self.dealias_fraction();
        let ud = u.dealias(frac);
        let out = match self.kind {
            EquationKind::Kdv => {
                let du = ud.spectral_derivative(1);
                ud.pointwise_product(&du)?.scaled(Complex64::new(-1.0, 0.0))
            }
            EquationKind::CubicNls => {
                let conj = ud.conj_field();
                let sq = ud.pointwise_product(&ud)?;
                sq.pointwise_product(&conj)?
                    .scaled(Complex64::new(0.0, self.lambda))
            }
            EquationKind::QuadraticNls => ud
                .pointwise_product(&ud)?
                .scaled(Complex64::new(0.0, self.lambda)),
        };
        Ok(out.dealias(frac))
    }

    /// Number of interacting wavenumbers in the resonance phase.
    pub fn nonlinearity_arity(&self) -> usize {
        match self.kind {
            EquationKind::Kdv | EquationKind::QuadraticNls => 2,
            EquationKind::CubicNls => 3,
        }
    }

    /// Resonance phase `Φ(k; k₁..k_p)` in exact integer arithmetic.
    ///
    /// KdV: `k³-k₁³-k₂³` on `k = k₁+k₂`; cubic NLS: `k²+k₁²-k₂²-k₃²` on
    /// `k = -k₁+k₂+k₃` (first input conjugated); quadratic NLS:
    /// `k²-k₁²-k₂²` on `k = k₁+k₂`.
    pub fn resonance_phase(&self, k: i64, inputs: &[i64]) -> Result<i64> {
        let arity = self.nonlinearity_arity();
        if inputs.len() != arity {
            return Err(CoreError::Arity {
                kind: self.kind.name(),
                expected: arity,
                got: inputs.len(),
            });
        }
        let constraint_sum = match self.kind {
            EquationKind::CubicNls => -inputs[0] + inputs[1] + inputs[2],
            _ => inputs.iter().sum(),
        };
        if constraint_sum != k {
            return Err(CoreError::Argument(format!(
                "convolution constraint violated: inputs combine to {constraint_sum}, expected {k}"
            )));
        }
        let cube = |x: i64| x * x * x;
        let sq = |x: i64| x * x;
        Ok(match self.kind {
            EquationKind::Kdv => cube(k) - cube(inputs[0]) - cube(inputs[1]),
            EquationKind::CubicNls => sq(k) + sq(inputs[0]) - sq(inputs[1]) - sq(inputs[2]),
            EquationKind::QuadraticNls => sq(k) - sq(inputs[0]) - sq(inputs[1]),
        })
    }

    /// Discrete mass `M(u) = Σ_k |û_k|²` (Parseval).
    pub fn mass(&self, u: &SpectralField) -> f64 {
        u.coeffs().iter().map(|c| c.norm_sqr()).sum()
    }

    /// Discrete Hamiltonian, grid-sum normalised consistently with `mass`.
    ///
    /// KdV: `Σ (1/12)k²|û_k|² - (1/6)Σ_j u_j³`;
    /// cubic NLS: `Σ k²|û_k|² - (λ/2)Σ_j |u_j|⁴`;
    /// quadratic NLS: `Σ k²|û_k|² - (2λ/3)·Re Σ_j u_j³`.
    pub fn hamiltonian(&self, u: &SpectralField) -> Result<f64> {
        self.check_reality(u)?;
        let grid = u.grid();
        let quad: f64 = u
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = grid.wavenumber(i) as f64;
                k * k * c.norm_sqr()
            })
            .sum();
        Ok(match self.kind {
            EquationKind::Kdv => {
                let phys = u.to_physical_real()?;
                let cubic: f64 = phys.iter().map(|&v| v * v * v).sum();
                quad / 12.0 - cubic / 6.0
            }
            EquationKind::CubicNls => {
                let phys = u.to_physical()?;
                let quart: f64 = phys.iter().map(|c| c.norm_sqr() * c.norm_sqr()).sum();
                quad - 0.5 * self.lambda * quart
            }
            EquationKind::QuadraticNls => {
                let phys = u.to_physical()?;
                let cubic: f64 = phys.iter().map(|c| (c * c * c).re).sum();
                quad - 2.0 * self.lambda * cubic / 3.0
            }
        })
    }
}
