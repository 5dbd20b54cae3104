//! Composite fluxes `A(x,u) = Â(k(x), u)` with a piecewise-constant coefficient.
//!
//! The coefficient `k` jumps only at a finite, sorted set of interface points.
//! At an interface the left/right traces of the flux are the exact one-sided
//! kernels `Â(k_left, ·)` and `Â(k_right, ·)`; the orientation is fixed left to
//! right, so `A⁻` is always the left trace and `A⁺` the right one.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::grid::CellField;
use crate::scalar::{bisect, linspace, Scalar};

/// Spacing of the state grid on which `σ` and `M` are sampled.
pub const BOUND_SAMPLE_SPACING: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FluxError {
    #[error("interface index {index} out of range ({count} interfaces)")]
    InvalidInterface { index: usize, count: usize },
    #[error("state {u} outside the extended box [{lo}, {hi}]")]
    OutOfBox { u: f64, lo: f64, hi: f64 },
    #[error("x = {x} lies on an interface; use a one-sided trace")]
    AmbiguousSide { x: f64 },
    #[error("structural bound violated: {what} at {sample}")]
    StructuralViolation { what: String, sample: String },
    #[error("invalid flux model: {0}")]
    InvalidModel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// Range of admissible states. Checks accept states up to one unit outside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateBox<T> {
    pub u_min: T,
    pub u_max: T,
}

impl<T: Scalar> StateBox<T> {
    pub fn new(u_min: T, u_max: T) -> Result<Self, FluxError> {
        if !(u_min < u_max) {
            return Err(FluxError::InvalidModel(format!(
                "state box needs u_min < u_max, got [{u_min}, {u_max}]"
            )));
        }
        Ok(Self { u_min, u_max })
    }

    pub fn extended(&self) -> (T, T) {
        (self.u_min - T::one(), self.u_max + T::one())
    }

    pub fn width(&self) -> T {
        self.u_max - self.u_min
    }

    pub fn contains_extended(&self, u: T) -> bool {
        let (lo, hi) = self.extended();
        u >= lo && u <= hi
    }

    pub fn check_extended(&self, u: T) -> Result<(), FluxError> {
        if self.contains_extended(u) {
            Ok(())
        } else {
            let (lo, hi) = self.extended();
            Err(FluxError::OutOfBox {
                u: u.as_f64(),
                lo: lo.as_f64(),
                hi: hi.as_f64(),
            })
        }
    }

    /// Sample points at (at most) [`BOUND_SAMPLE_SPACING`] including both ends.
    pub fn bound_samples(&self) -> Vec<T> {
        let n = (self.width().as_f64() / BOUND_SAMPLE_SPACING).ceil() as usize + 1;
        linspace(self.u_min, self.u_max, n.max(2))
    }
}

type KernelFn<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

/// A kernel supplied as closed forms for `Â(k,u)` and `∂uÂ(k,u)`.
#[derive(Clone)]
pub struct CustomKernel<T> {
    pub name: String,
    pub eval: KernelFn<T>,
    pub deval: KernelFn<T>,
}

impl<T> fmt::Debug for CustomKernel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomKernel")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

/// The smooth kernel `Â(k, u)`.
#[derive(Debug, Clone)]
pub enum Kernel<T> {
    /// `k·u²/2`
    Burgers,
    /// `k·u·(1−u)`
    Lwr,
    /// `k·u`
    Linear,
    /// Independent of both `k` and `u`.
    Constant(T),
    Custom(CustomKernel<T>),
}

/// Monotonicity class of `u ↦ Â(k,u)` on an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape<T> {
    Flat,
    Increasing,
    Decreasing,
    /// Single interior maximum at `theta`.
    Bell { theta: T },
    /// Single interior minimum at `theta`.
    Valley { theta: T },
    Other,
}

impl<T: Scalar> Kernel<T> {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "burgers" => Some(Kernel::Burgers),
            "lwr" => Some(Kernel::Lwr),
            "linear" => Some(Kernel::Linear),
            "constant" => Some(Kernel::Constant(T::zero())),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Kernel::Burgers => "burgers",
            Kernel::Lwr => "lwr",
            Kernel::Linear => "linear",
            Kernel::Constant(_) => "constant",
            Kernel::Custom(c) => &c.name,
        }
    }

    #[inline]
    pub fn eval(&self, k: T, u: T) -> T {
        match self {
            Kernel::Burgers => k * u * u * T::half(),
            Kernel::Lwr => k * u * (T::one() - u),
            Kernel::Linear => k * u,
            Kernel::Constant(c) => *c,
            Kernel::Custom(c) => (c.eval)(k, u),
        }
    }

    #[inline]
    pub fn deval(&self, k: T, u: T) -> T {
        match self {
            Kernel::Burgers => k * u,
            Kernel::Lwr => k * (T::one() - T::two() * u),
            Kernel::Linear => k,
            Kernel::Constant(_) => T::zero(),
            Kernel::Custom(c) => (c.deval)(k, u),
        }
    }

    /// Closed-form critical point of `u ↦ Â(k,u)` when the kernel has one.
    fn known_critical(&self, k: T) -> Option<Option<T>> {
        match self {
            Kernel::Burgers if k != T::zero() => Some(Some(T::zero())),
            Kernel::Lwr if k != T::zero() => Some(Some(T::half())),
            Kernel::Linear if k != T::zero() => Some(None),
            Kernel::Burgers | Kernel::Lwr | Kernel::Linear | Kernel::Constant(_) => Some(None),
            Kernel::Custom(_) => None,
        }
    }

    /// Interior critical points of `u ↦ Â(k,u)` on `(lo, hi)`, ascending.
    pub fn critical_points(&self, k: T, lo: T, hi: T) -> Vec<T> {
        if let Some(known) = self.known_critical(k) {
            return known.into_iter().filter(|t| *t > lo && *t < hi).collect();
        }
        const SCAN: usize = 256;
        let pts = linspace(lo, hi, SCAN + 1);
        let mut out = Vec::new();
        for w in pts.windows(2) {
            let (da, db) = (self.deval(k, w[0]), self.deval(k, w[1]));
            if da.sgn() * db.sgn() < T::zero() {
                if let Some(r) = bisect(|u| self.deval(k, u), w[0], w[1]) {
                    out.push(r);
                }
            }
        }
        out
    }

    pub fn shape(&self, k: T, lo: T, hi: T) -> Shape<T> {
        let crit = self.critical_points(k, lo, hi);
        let probe = |u: T| self.deval(k, u);
        match crit.as_slice() {
            [] => {
                let mid = probe((lo + hi) * T::half());
                let ends = [probe(lo), probe(hi), mid];
                if ends.iter().all(|d| *d == T::zero()) {
                    Shape::Flat
                } else if ends.iter().all(|d| *d >= T::zero()) {
                    Shape::Increasing
                } else if ends.iter().all(|d| *d <= T::zero()) {
                    Shape::Decreasing
                } else {
                    Shape::Other
                }
            }
            [theta] => {
                let left = probe((lo + *theta) * T::half());
                let right = probe((*theta + hi) * T::half());
                if left > T::zero() && right < T::zero() {
                    Shape::Bell { theta: *theta }
                } else if left < T::zero() && right > T::zero() {
                    Shape::Valley { theta: *theta }
                } else {
                    Shape::Other
                }
            }
            _ => Shape::Other,
        }
    }
}

/// Empirical structural bounds reported by [`FluxModel::check_structural`].
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralReport<T> {
    pub m_observed: T,
    /// `(δ, ω(δ))` with δ ascending; ω nondecreasing.
    pub modulus_table: Vec<(T, T)>,
    pub sigma_mass: T,
    pub max_derivative_mismatch: T,
}

/// Total-variation chain-rule check for `x ↦ A(x, u(x))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvReport<T> {
    pub tv_composite: T,
    pub bound: T,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct FluxModel<T> {
    pub kernel: Kernel<T>,
    pub x_lo: T,
    pub x_hi: T,
    pub interfaces: Vec<T>,
    pub k_values: Vec<T>,
    pub state_box: StateBox<T>,
    /// Lipschitz bound on `u ↦ A(x,u)` over the state box.
    pub m_bound: T,
    /// Sampled `Σ_i sup_u |Â(k_{i+1},u) − Â(k_i,u)|`.
    pub sigma_mass: T,
    pub sigma_parts: Vec<T>,
}

impl<T: Scalar> FluxModel<T> {
    pub fn new(
        kernel: Kernel<T>,
        domain: (T, T),
        interfaces: Vec<T>,
        k_values: Vec<T>,
        state_box: StateBox<T>,
    ) -> Result<Self, FluxError> {
        let (x_lo, x_hi) = domain;
        if !(x_lo < x_hi) {
            return Err(FluxError::InvalidModel("domain needs x_lo < x_hi".into()));
        }
        if k_values.len() != interfaces.len() + 1 {
            return Err(FluxError::InvalidModel(format!(
                "{} interfaces need {} coefficients, got {}",
                interfaces.len(),
                interfaces.len() + 1,
                k_values.len()
            )));
        }
        if interfaces.windows(2).any(|w| w[1] <= w[0]) {
            return Err(FluxError::InvalidModel(
                "interfaces must be strictly increasing".into(),
            ));
        }
        if interfaces.iter().any(|x| *x <= x_lo || *x >= x_hi) {
            return Err(FluxError::InvalidModel(
                "interfaces must lie strictly inside the domain".into(),
            ));
        }
        let mut model = Self {
            kernel,
            x_lo,
            x_hi,
            interfaces,
            k_values,
            state_box,
            m_bound: T::zero(),
            sigma_mass: T::zero(),
            sigma_parts: Vec::new(),
        };
        model.m_bound = model.sampled_m(&state_box);
        model.sigma_parts = model.sampled_sigma_parts(&state_box);
        model.sigma_mass = model.sigma_parts.iter().copied().sum();
        Ok(model)
    }

    /// Single-coefficient model without interfaces.
    pub fn uniform(
        kernel: Kernel<T>,
        domain: (T, T),
        k: T,
        state_box: StateBox<T>,
    ) -> Result<Self, FluxError> {
        Self::new(kernel, domain, Vec::new(), vec![k], state_box)
    }

    /// Replace the computed `M` by a user-supplied bound (must not be smaller).
    pub fn with_m_override(mut self, m: T) -> Result<Self, FluxError> {
        if m < self.m_bound - T::lit(1e-12) {
            return Err(FluxError::StructuralViolation {
                what: format!("M override {m} below sampled bound {}", self.m_bound),
                sample: "state box".into(),
            });
        }
        self.m_bound = m;
        Ok(self)
    }

    fn sampled_m(&self, sbox: &StateBox<T>) -> T {
        let us = sbox.bound_samples();
        self.k_values
            .iter()
            .flat_map(|&k| us.iter().map(move |&u| (k, u)))
            .map(|(k, u)| self.kernel.deval(k, u).abs())
            .fold(T::zero(), T::max)
    }

    fn sampled_sigma_parts(&self, sbox: &StateBox<T>) -> Vec<T> {
        let us = sbox.bound_samples();
        self.k_values
            .windows(2)
            .map(|w| {
                us.iter()
                    .map(|&u| (self.kernel.eval(w[1], u) - self.kernel.eval(w[0], u)).abs())
                    .fold(T::zero(), T::max)
            })
            .collect()
    }

    pub fn n_interfaces(&self) -> usize {
        self.interfaces.len()
    }

    /// Index of the constant-coefficient subinterval containing `x`.
    pub fn subinterval(&self, x: T) -> Result<usize, FluxError> {
        if self.interfaces.contains(&x) {
            return Err(FluxError::AmbiguousSide { x: x.as_f64() });
        }
        Ok(self.interfaces.iter().take_while(|p| **p < x).count())
    }

    pub fn coefficient_at(&self, x: T) -> Result<T, FluxError> {
        self.subinterval(x).map(|i| self.k_values[i])
    }

    /// Coefficient on the given side of interface `index`.
    pub fn side_coefficient(&self, index: usize, side: Side) -> Result<T, FluxError> {
        if index >= self.interfaces.len() {
            return Err(FluxError::InvalidInterface {
                index,
                count: self.interfaces.len(),
            });
        }
        Ok(match side {
            Side::Left => self.k_values[index],
            Side::Right => self.k_values[index + 1],
        })
    }

    /// One-sided flux trace `A∓(u)` at interface `index`.
    pub fn trace_flux(&self, index: usize, side: Side, u: T) -> Result<T, FluxError> {
        let k = self.side_coefficient(index, side)?;
        self.state_box.check_extended(u)?;
        Ok(self.kernel.eval(k, u))
    }

    /// `∂uA(x, u)` off the interface set.
    pub fn dv_flux(&self, x: T, u: T) -> Result<T, FluxError> {
        let k = self.coefficient_at(x)?;
        Ok(self.kernel.deval(k, u))
    }

    pub fn flux_at(&self, x: T, u: T) -> Result<T, FluxError> {
        let k = self.coefficient_at(x)?;
        Ok(self.kernel.eval(k, u))
    }

    /// `(A⁻, A⁺)` at interface `index` as plain closures.
    pub fn interface_pair(&self, index: usize) -> Result<InterfacePair<T>, FluxError> {
        Ok(InterfacePair {
            kernel: self.kernel.clone(),
            k_left: self.side_coefficient(index, Side::Left)?,
            k_right: self.side_coefficient(index, Side::Right)?,
        })
    }

    /// `sup |A|` over the state box and every coefficient.
    pub fn sup_flux(&self) -> T {
        let us = self.state_box.bound_samples();
        self.k_values
            .iter()
            .flat_map(|&k| us.iter().map(move |&u| (k, u)))
            .map(|(k, u)| self.kernel.eval(k, u).abs())
            .fold(T::zero(), T::max)
    }

    /// Propagation speed used for domain padding and localized estimates.
    pub fn propagation_speed(&self) -> T {
        self.m_bound.max(self.sup_flux())
    }

    /// Finite-difference check of `deval` against `eval`; returns the worst relative mismatch.
    pub fn derivative_mismatch(&self, sbox: &StateBox<T>, n_samples: usize, step: T) -> T {
        let us = linspace(sbox.u_min, sbox.u_max, n_samples.max(2));
        let mut worst = T::zero();
        for &k in &self.k_values {
            for &u in &us {
                let fd = (self.kernel.eval(k, u + step) - self.kernel.eval(k, u - step))
                    / (T::two() * step);
                let d = self.kernel.deval(k, u);
                let rel = (fd - d).abs() / d.abs().max(T::one());
                worst = worst.max(rel);
            }
        }
        worst
    }

    /// Empirical verification of the Lipschitz bound, the modulus of `∂uA` and `σ`.
    pub fn check_structural(
        &self,
        sbox: &StateBox<T>,
        n_samples: usize,
    ) -> Result<StructuralReport<T>, FluxError> {
        if n_samples < 2 {
            return Err(FluxError::InvalidModel("n_samples must be at least 2".into()));
        }
        let us = linspace(sbox.u_min, sbox.u_max, n_samples);
        let mut m_observed = T::zero();
        for &k in &self.k_values {
            for &u in &us {
                let d = self.kernel.deval(k, u).abs();
                if d > self.m_bound + T::lit(1e-12) {
                    return Err(FluxError::StructuralViolation {
                        what: format!("|∂uA| = {d} exceeds M = {}", self.m_bound),
                        sample: format!("k = {k}, u = {u}"),
                    });
                }
                m_observed = m_observed.max(d);
            }
        }

        let mut modulus_table = Vec::new();
        let mut running = T::zero();
        for j in (0..9).rev() {
            let delta = sbox.width() / T::from_usize_lossy(1usize << j);
            let mut w = T::zero();
            for &k in &self.k_values {
                for &u in &us {
                    if u + delta <= sbox.u_max {
                        w = w.max((self.kernel.deval(k, u + delta) - self.kernel.deval(k, u)).abs());
                    }
                }
            }
            running = running.max(w);
            modulus_table.push((delta, running));
        }

        let sigma: T = self.sampled_sigma_parts(sbox).into_iter().sum();
        if sigma > self.sigma_mass + T::lit(1e-12) {
            return Err(FluxError::StructuralViolation {
                what: format!("σ = {sigma} exceeds stored {}", self.sigma_mass),
                sample: format!("box [{}, {}]", sbox.u_min, sbox.u_max),
            });
        }

        let step = T::lit(1e-5);
        let rel_tol = T::lit(1e-6).max(T::lit(1e3) * T::epsilon() / step);
        let mismatch = self.derivative_mismatch(sbox, n_samples, step);
        if mismatch > rel_tol {
            return Err(FluxError::StructuralViolation {
                what: format!("∂uA disagrees with finite differences (rel {mismatch})"),
                sample: format!("box [{}, {}]", sbox.u_min, sbox.u_max),
            });
        }

        Ok(StructuralReport {
            m_observed,
            modulus_table,
            sigma_mass: sigma,
            max_derivative_mismatch: mismatch,
        })
    }

    /// Discrete total variation of `x ↦ A(x, u(x))` against `σ + M·TV(u)`.
    pub fn tv_chain_bound(&self, u: &CellField<T>) -> TvReport<T> {
        let ks: Vec<T> = (0..u.len())
            .map(|j| {
                let x = u.grid.center(j);
                self.k_values[self.interfaces.iter().take_while(|p| **p < x).count()]
            })
            .collect();
        let w: Vec<T> = u
            .values
            .iter()
            .zip(&ks)
            .map(|(&v, &k)| self.kernel.eval(k, v))
            .collect();
        let tv_composite: T = w.windows(2).map(|p| (p[1] - p[0]).abs()).sum();
        let bound = self.sigma_mass + self.m_bound * u.total_variation();
        TvReport {
            tv_composite,
            bound,
            pass: tv_composite <= bound + T::lit(1e-9),
        }
    }
}

/// The two one-sided kernels meeting at one interface.
#[derive(Debug, Clone)]
pub struct InterfacePair<T> {
    pub kernel: Kernel<T>,
    pub k_left: T,
    pub k_right: T,
}

impl<T: Scalar> InterfacePair<T> {
    /// Both sides share a single kernel coefficient.
    pub fn uniform(kernel: Kernel<T>, k: T) -> Self {
        Self {
            kernel,
            k_left: k,
            k_right: k,
        }
    }

    #[inline]
    pub fn minus(&self, u: T) -> T {
        self.kernel.eval(self.k_left, u)
    }

    #[inline]
    pub fn plus(&self, u: T) -> T {
        self.kernel.eval(self.k_right, u)
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self.kernel.name() == other.kernel.name()
            && self.k_left == other.k_left
            && self.k_right == other.k_right
    }

    /// Points in `(lo, hi)` where `A⁺ = A⁻`, found by sign scan plus bisection.
    pub fn crossings(&self, lo: T, hi: T) -> Vec<T> {
        if self.k_left == self.k_right {
            return Vec::new();
        }
        let g = |u: T| self.plus(u) - self.minus(u);
        let pts = linspace(lo, hi, 257);
        let mut out = Vec::new();
        for w in pts.windows(2) {
            let (a, b) = (g(w[0]), g(w[1]));
            if a == T::zero() && w[0] > lo {
                out.push(w[0]);
            } else if a.sgn() * b.sgn() < T::zero() {
                if let Some(r) = bisect(g, w[0], w[1]) {
                    out.push(r);
                }
            }
        }
        out
    }
}
