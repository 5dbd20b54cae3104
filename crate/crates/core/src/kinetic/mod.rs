//! Kinetic representation `f(x,v) = χ(v, u(x))`, entropy residuals, the discrete
//! defect measure and the mollified commutator.

use thiserror::Error;

use crate::fluxmodel::{FluxError, StateBox};
use crate::grid::{CellField, Grid1D};
use crate::scalar::Scalar;

pub mod commutator;
pub mod defect;
pub mod entropy;

pub use commutator::{commutator_decay, mollifier_limit_check, CommutatorReport, LimitReport};
pub use defect::{
    kinetic_defect, sign_consistency, tol_neg, DefectMeasure, SignConsistency, DEFAULT_TOL_NEG_COEFF,
};
pub use entropy::{
    entropy_pair, entropy_residual, kruzkov_residual, kruzkov_sweep, Entropy, EntropyPair,
    HatRule, ResidualField, SmoothEntropy,
};

/// Smallest admissible number of v-cells.
pub const MIN_NV: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KineticError {
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("state {u} outside the v-grid [{lo}, {hi}]")]
    OutOfBox { u: f64, lo: f64, hi: f64 },
    #[error("entropy is not convex: S''({at}) = {value}")]
    NotConvex { at: f64, value: f64 },
    #[error("no connection value at interface {interface} on step {step}")]
    MissingConnection { interface: usize, step: usize },
    #[error("trajectory is malformed: {0}")]
    BadTrajectory(String),
    #[error(transparent)]
    Flux(#[from] FluxError),
}

/// `χ(v,u)`: 1 below `u`, 1/2 at `u`, 0 above.
#[inline]
pub fn chi<T: Scalar>(v: T, u: T) -> T {
    if v < u {
        T::one()
    } else if v == u {
        T::half()
    } else {
        T::zero()
    }
}

/// Uniform v-grid with nodes `v_lo + m·Δv`, `m = 0..=n_v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VGrid<T> {
    pub v_lo: T,
    pub v_hi: T,
    pub n_v: usize,
}

impl<T: Scalar> VGrid<T> {
    pub fn new(v_lo: T, v_hi: T, n_v: usize) -> Result<Self, KineticError> {
        if n_v < MIN_NV {
            return Err(KineticError::GridTooCoarse(format!(
                "n_v = {n_v} < {MIN_NV}"
            )));
        }
        if !(v_lo < v_hi) {
            return Err(KineticError::GridTooCoarse(format!(
                "empty v-range [{v_lo}, {v_hi}]"
            )));
        }
        Ok(Self { v_lo, v_hi, n_v })
    }

    /// Grid over the extended state box.
    pub fn covering(sbox: &StateBox<T>, n_v: usize) -> Result<Self, KineticError> {
        let (lo, hi) = sbox.extended();
        Self::new(lo, hi, n_v)
    }

    #[inline]
    pub fn dv(&self) -> T {
        (self.v_hi - self.v_lo) / T::from_usize_lossy(self.n_v)
    }

    #[inline]
    pub fn node(&self, m: usize) -> T {
        if m == self.n_v {
            self.v_hi
        } else {
            self.v_lo + self.dv() * T::from_usize_lossy(m)
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_v + 1
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.n_nodes()).map(|m| self.node(m)).collect()
    }

    pub fn contains(&self, u: T) -> bool {
        u >= self.v_lo && u <= self.v_hi
    }

    pub fn check(&self, u: T) -> Result<(), KineticError> {
        if self.contains(u) {
            Ok(())
        } else {
            Err(KineticError::OutOfBox {
                u: u.as_f64(),
                lo: self.v_lo.as_f64(),
                hi: self.v_hi.as_f64(),
            })
        }
    }
}

/// `f(x_j, v_m)` stored row-major by cell.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticField<T> {
    pub grid: Grid1D<T>,
    pub vgrid: VGrid<T>,
    pub values: Vec<T>,
}

impl<T: Scalar> KineticField<T> {
    #[inline]
    pub fn get(&self, j: usize, m: usize) -> T {
        self.values[j * self.vgrid.n_nodes() + m]
    }

    pub fn column(&self, j: usize) -> &[T] {
        let n = self.vgrid.n_nodes();
        &self.values[j * n..(j + 1) * n]
    }

    /// Each column is nonincreasing in v.
    pub fn is_monotone(&self) -> bool {
        (0..self.grid.n_cells).all(|j| self.column(j).windows(2).all(|w| w[1] <= w[0]))
    }

    /// `f = 1` at `v_lo` and `f = 0` at `v_hi` in every column.
    pub fn has_boundary_values(&self) -> bool {
        (0..self.grid.n_cells).all(|j| {
            let c = self.column(j);
            c[0] == T::one() && c[c.len() - 1] == T::zero()
        })
    }

    /// `Σ_m |f(j,·) − g(j,·)| Δv` per cell.
    pub fn l1_v_per_cell(&self, other: &Self) -> Vec<T> {
        let dv = self.vgrid.dv();
        (0..self.grid.n_cells)
            .map(|j| {
                self.column(j)
                    .iter()
                    .zip(other.column(j))
                    .map(|(a, b)| (*a - *b).abs())
                    .sum::<T>()
                    * dv
            })
            .collect()
    }
}

pub fn lift<T: Scalar>(u: &CellField<T>, vgrid: &VGrid<T>) -> Result<KineticField<T>, KineticError> {
    let nodes = vgrid.nodes();
    let mut values = Vec::with_capacity(u.len() * nodes.len());
    for &uj in &u.values {
        vgrid.check(uj)?;
        values.extend(nodes.iter().map(|&v| chi(v, uj)));
    }
    Ok(KineticField {
        grid: u.grid,
        vgrid: *vgrid,
        values,
    })
}

/// Even polynomial bump `φ_ε(w) = φ(w/ε)/ε` with `φ(s) = (15/8)(1 − 4s²)²` on `|s| ≤ 1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier<T> {
    pub epsilon: T,
}

impl<T: Scalar> Mollifier<T> {
    pub fn new(epsilon: T) -> Self {
        Self { epsilon }
    }

    #[inline]
    pub fn phi(&self, w: T) -> T {
        let s = w / self.epsilon;
        if s.abs() > T::half() {
            return T::zero();
        }
        let q = T::one() - T::lit(4.0) * s * s;
        T::lit(15.0 / 8.0) * q * q / self.epsilon
    }

    /// Discrete weights at offsets `−K..=K` (index `K` is the center), normalized to sum 1.
    pub fn weights(&self, dv: T) -> Vec<T> {
        let k = (self.epsilon / (T::two() * dv)).floor().to_usize().unwrap_or(0);
        let raw: Vec<T> = (0..=2 * k)
            .map(|i| {
                let off = T::from_usize_lossy(i) - T::from_usize_lossy(k);
                self.phi(off * dv)
            })
            .collect();
        let total: T = raw.iter().copied().sum();
        if total <= T::zero() {
            return vec![T::one()];
        }
        raw.into_iter().map(|w| w / total).collect()
    }
}

/// `∑_i w_i g(m + i − K)` with `g` extended by `below` / `above` outside the grid.
pub(crate) fn convolve_extended<T: Scalar>(g: &[T], weights: &[T], below: T, above: T) -> Vec<T> {
    let k = (weights.len() / 2) as isize;
    let n = g.len() as isize;
    (0..n)
        .map(|m| {
            weights
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    let idx = m + i as isize - k;
                    let val = if idx < 0 {
                        below
                    } else if idx >= n {
                        above
                    } else {
                        g[idx as usize]
                    };
                    *w * val
                })
                .sum()
        })
        .collect()
}

/// Mollification in v; columns are extended by 1 below and 0 above the grid.
pub fn mollify_v<T: Scalar>(f: &KineticField<T>, moll: &Mollifier<T>) -> KineticField<T> {
    let w = moll.weights(f.vgrid.dv());
    let mut values = Vec::with_capacity(f.values.len());
    for j in 0..f.grid.n_cells {
        values.extend(convolve_extended(f.column(j), &w, T::one(), T::zero()));
    }
    KineticField {
        grid: f.grid,
        vgrid: f.vgrid,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_branches() {
        assert_eq!(chi(0.5, 1.0), 1.0);
        assert_eq!(chi(1.0, 1.0), 0.5);
        assert_eq!(chi(2.0, 1.0), 0.0);
    }

    #[test]
    fn coarse_vgrid_rejected() {
        assert!(matches!(
            VGrid::new(0.0, 1.0, 8),
            Err(KineticError::GridTooCoarse(_))
        ));
    }

    #[test]
    fn lift_and_cavalieri() {
        let g = Grid1D::new(0.0, 1.0, 4).unwrap();
        let vg = VGrid::new(-1.0, 2.0, 60).unwrap();
        let u1 = CellField::new(g, vec![0.0f64, 0.0, 1.0, 1.0], 0.0).unwrap();
        let u2 = CellField::new(g, vec![0.3, 0.9, 0.1, 1.0], 0.0).unwrap();
        let f1 = lift(&u1, &vg).unwrap();
        let f2 = lift(&u2, &vg).unwrap();
        assert!(f1.is_monotone() && f1.has_boundary_values());
        let d = f1.l1_v_per_cell(&f2);
        for j in 0..4 {
            assert!((d[j] - (u1.values[j] - u2.values[j]).abs()).abs() <= vg.dv() + 1e-12);
        }
        let mut cols: Vec<&[f64]> = (0..4).map(|j| f1.column(j)).collect();
        cols.dedup();
        assert_eq!(cols.len(), 2);
        let bad = CellField::new(g, vec![0.0, 0.0, 5.0, 1.0], 0.0).unwrap();
        assert!(matches!(lift(&bad, &vg), Err(KineticError::OutOfBox { .. })));
    }

    #[test]
    fn mollifier_mass_and_symmetry() {
        let m = Mollifier::new(0.2);
        let w = m.weights(0.01);
        let s: f64 = w.iter().sum();
        assert!((s - 1.0).abs() < 1e-9);
        for i in 0..w.len() {
            assert!((w[i] - w[w.len() - 1 - i]).abs() < 1e-12);
        }
        assert!((m.phi(0.03) - m.phi(-0.03)).abs() < 1e-12);
        let cont = crate::scalar::simpson(|x| m.phi(x), -0.1, 0.1, 400);
        assert!((cont - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mollified_field_stays_monotone() {
        let g = Grid1D::new(0.0, 1.0, 3).unwrap();
        let vg = VGrid::new(-1.0, 2.0, 64).unwrap();
        let u = CellField::new(g, vec![0.0, 0.5, 1.0], 0.0).unwrap();
        let f = mollify_v(&lift(&u, &vg).unwrap(), &Mollifier::new(0.3));
        assert!(f.is_monotone());
    }
}
