//! Sampling functions `f` used to score `(token bit, r)` pairs.
//!
//! An admissible `f` satisfies `∫₀ˣ f(r) − f(1−r) dr > 0` for every `x ∈ (0,1)`.
//! Each function carries its antiderivative `F`, its range `Δf = f_max − f_min`
//! and its covertext baseline `E[s|H∅] = ½∫₀¹ f(r) + f(1−r) dr = F(1) − F(0)`.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

/// Absolute tolerance for every quadrature check in this module.
pub const QUAD_TOL: f64 = 1e-9;

pub const BUILTIN_NAMES: [&str; 4] = ["cos_pi", "sin_2pi", "sign_half", "log2_shifted"];

pub const DEFAULT_SAMPLER: &str = "cos_pi";

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("unknown sampling function `{0}` (known: cos_pi, sin_2pi, sign_half, log2_shifted)")]
    NotFound(String),
    #[error("sampling function `{name}` is not finite at r = {at}")]
    NonIntegrable { name: String, at: f64 },
    #[error("sampling function `{name}` violates the admissibility condition at x = {at} (integral {value:e})")]
    Inadmissible { name: String, at: f64, value: f64 },
    #[error("grid size must be at least 100, got {0}")]
    GridTooSmall(usize),
}

/// A sampling function `f` with its analytic companions.
#[derive(Clone)]
pub struct SamplingFunction {
    name: String,
    f: RealFn,
    antiderivative: RealFn,
    delta_f: f64,
    baseline: f64,
}

impl fmt::Debug for SamplingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SamplingFunction")
            .field("name", &self.name)
            .field("delta_f", &self.delta_f)
            .field("baseline", &self.baseline)
            .finish()
    }
}

/// `∫₀¹ log₂(2 − r) dr = 2 − 1/ln 2`.
pub fn log2_shift_constant() -> f64 {
    2.0 - 1.0 / LN_2
}

impl SamplingFunction {
    /// Looks up one of the built-in functions.
    pub fn builtin(name: &str) -> Result<Self, SamplerError> {
        let sf = match name {
            "cos_pi" => Self::raw(name, |r| (PI * r).cos(), |r| (PI * r).sin() / PI, 2.0),
            "sin_2pi" => Self::raw(
                name,
                |r| (2.0 * PI * r).sin(),
                |r| -(2.0 * PI * r).cos() / (2.0 * PI),
                2.0,
            ),
            "sign_half" => Self::raw(
                name,
                |r| {
                    if r < 0.5 {
                        1.0
                    } else if r > 0.5 {
                        -1.0
                    } else {
                        0.0
                    }
                },
                |r| 0.5 - (r - 0.5).abs(),
                2.0,
            ),
            "log2_shifted" => {
                let c = log2_shift_constant();
                Self::raw(
                    name,
                    move |r| (2.0 - r).log2() - c,
                    move |r| {
                        let u = 2.0 - r;
                        -(u * u.ln() - u) / LN_2 - c * r
                    },
                    // f(0) − f(1) = log₂2 − log₂1
                    1.0,
                )
            }
            other => return Err(SamplerError::NotFound(other.to_string())),
        };
        Ok(sf)
    }

    pub fn default_cos() -> Self {
        Self::builtin(DEFAULT_SAMPLER).expect("default sampler is registered")
    }

    /// User-supplied function with explicit antiderivative and range.
    ///
    /// The function must pass [`SamplingFunction::validate`] before it is
    /// returned.
    pub fn custom(
        name: &str,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        antiderivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
        delta_f: f64,
        grid_size: usize,
    ) -> Result<Self, SamplerError> {
        let sf = Self::raw(name, f, antiderivative, delta_f);
        let report = sf.validate(grid_size)?;
        if let Some(v) = report.first_violation() {
            return Err(SamplerError::Inadmissible {
                name: name.to_string(),
                at: v.x,
                value: v.integral,
            });
        }
        Ok(sf)
    }

    fn raw(
        name: &str,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        antiderivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
        delta_f: f64,
    ) -> Self {
        let antiderivative: RealFn = Arc::new(antiderivative);
        let baseline = antiderivative(1.0) - antiderivative(0.0);
        Self {
            name: name.to_string(),
            f: Arc::new(f),
            antiderivative,
            delta_f,
            baseline,
        }
    }

    /// Unchecked constructor for tests that need an inadmissible function.
    #[doc(hidden)]
    pub fn unchecked(
        name: &str,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        antiderivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
        delta_f: f64,
    ) -> Self {
        Self::raw(name, f, antiderivative, delta_f)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.f)(r)
    }

    pub fn antiderivative(&self, x: f64) -> f64 {
        (self.antiderivative)(x)
    }

    pub fn delta_f(&self) -> f64 {
        self.delta_f
    }

    /// `E_r[s | H∅]`.
    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    /// Score of one token bit: `f(r)` for an emitted 0, `f(1 − r)` for a 1.
    #[inline]
    pub fn score(&self, bit: u8, r: f64) -> f64 {
        if bit == 0 {
            self.eval(r)
        } else {
            self.eval(1.0 - r)
        }
    }

    /// `E[s|H₀] − E[s|H∅] = F(p) + F(1−p) − F(1) − F(0)` for a group of mass `p`.
    pub fn gap(&self, p: f64) -> f64 {
        let big_f = &self.antiderivative;
        big_f(p) + big_f(1.0 - p) - big_f(1.0) - big_f(0.0)
    }

    /// Checks the admissibility condition and `F′ = f` by adaptive quadrature
    /// of `f` alone, at `grid_size` interior points of `(0, 1)`.
    pub fn validate(&self, grid_size: usize) -> Result<ValidationReport, SamplerError> {
        if grid_size < 100 {
            return Err(SamplerError::GridTooSmall(grid_size));
        }
        let h = 1.0 / (grid_size as f64 + 1.0);
        let xs: Vec<f64> = (0..=grid_size + 1).map(|i| i as f64 * h).collect();
        for &x in &xs {
            for r in [x, 1.0 - x] {
                if !self.eval(r).is_finite() {
                    return Err(SamplerError::NonIntegrable {
                        name: self.name.clone(),
                        at: r,
                    });
                }
            }
        }

        let g = |r: f64| self.eval(r) - self.eval(1.0 - r);
        let mut cumulative = 0.0;
        let mut min_integral = f64::INFINITY;
        let mut min_at = 0.0;
        let mut violations = Vec::new();
        let mut max_antiderivative_err: f64 = 0.0;
        for w in xs.windows(2) {
            let (a, b) = (w[0], w[1]);
            cumulative += adaptive_simpson(&g, a, b, 1e-13);
            let piece = adaptive_simpson(&|r| self.eval(r), a, b, 1e-13);
            let analytic = self.antiderivative(b) - self.antiderivative(a);
            max_antiderivative_err = max_antiderivative_err.max((analytic - piece).abs());
            if b < 1.0 {
                if cumulative < min_integral {
                    min_integral = cumulative;
                    min_at = b;
                }
                if cumulative <= QUAD_TOL {
                    violations.push(Violation {
                        x: b,
                        integral: cumulative,
                    });
                }
            }
        }
        let admissible = violations.is_empty();
        let antiderivative_ok = max_antiderivative_err <= QUAD_TOL;
        Ok(ValidationReport {
            name: self.name.clone(),
            grid_size,
            passed: admissible && antiderivative_ok,
            admissible,
            antiderivative_ok,
            min_integral,
            min_integral_at: min_at,
            max_antiderivative_error: max_antiderivative_err,
            violations,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub x: f64,
    pub integral: f64,
}

/// JSON-serializable result of [`SamplingFunction::validate`].
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub name: String,
    pub grid_size: usize,
    pub passed: bool,
    pub admissible: bool,
    pub antiderivative_ok: bool,
    /// Smallest value of `∫₀ˣ f(r) − f(1−r) dr` over the grid.
    pub min_integral: f64,
    pub min_integral_at: f64,
    pub max_antiderivative_error: f64,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn first_violation(&self) -> Option<&Violation> {
        self.violations.first()
    }
}

/// Adaptive Simpson quadrature; the depth cap bounds work near jumps.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}
