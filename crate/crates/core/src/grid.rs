//! Uniform 1D grids, cell-averaged fields and closed-form initial data.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{simpson, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs at least one cell and x_lo < x_hi (got n={n_cells}, [{x_lo}, {x_hi}])")]
    Degenerate { x_lo: f64, x_hi: f64, n_cells: usize },
    #[error("grid mismatch: {0}")]
    Mismatch(String),
    #[error("point {x} does not coincide with a cell edge")]
    NotOnEdge { x: f64 },
    #[error("initial data is malformed: {0}")]
    BadInitialData(String),
}

/// Uniform partition of `[x_lo, x_hi]` into `n_cells` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D<T> {
    pub x_lo: T,
    pub x_hi: T,
    pub n_cells: usize,
}

impl<T: Scalar> Grid1D<T> {
    pub fn new(x_lo: T, x_hi: T, n_cells: usize) -> Result<Self, GridError> {
        if n_cells == 0 || !(x_lo < x_hi) {
            return Err(GridError::Degenerate {
                x_lo: x_lo.as_f64(),
                x_hi: x_hi.as_f64(),
                n_cells,
            });
        }
        Ok(Self { x_lo, x_hi, n_cells })
    }

    #[inline]
    pub fn dx(&self) -> T {
        (self.x_hi - self.x_lo) / T::from_usize_lossy(self.n_cells)
    }

    #[inline]
    pub fn center(&self, j: usize) -> T {
        self.x_lo + self.dx() * (T::from_usize_lossy(j) + T::half())
    }

    /// Left edge of cell `e` (`e == n_cells` is the right boundary).
    #[inline]
    pub fn edge(&self, e: usize) -> T {
        if e == self.n_cells {
            self.x_hi
        } else {
            self.x_lo + self.dx() * T::from_usize_lossy(e)
        }
    }

    pub fn length(&self) -> T {
        self.x_hi - self.x_lo
    }

    /// Index of the edge at `x`, if `x` sits on one to within `1e-9·dx`.
    pub fn locate_edge(&self, x: T) -> Option<usize> {
        let s = (x - self.x_lo) / self.dx();
        let e = s.round();
        if e < T::zero() || e > T::from_usize_lossy(self.n_cells) {
            return None;
        }
        if (s - e).abs() <= T::lit(1e-9) {
            e.to_usize()
        } else {
            None
        }
    }

    pub fn centers(&self) -> Vec<T> {
        (0..self.n_cells).map(|j| self.center(j)).collect()
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self.n_cells == other.n_cells
            && (self.x_lo - other.x_lo).abs() <= T::lit(1e-12) * (T::one() + self.x_lo.abs())
            && (self.x_hi - other.x_hi).abs() <= T::lit(1e-12) * (T::one() + self.x_hi.abs())
    }
}

/// One snapshot of cell averages.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField<T> {
    pub grid: Grid1D<T>,
    pub values: Vec<T>,
    pub time: T,
}

impl<T: Scalar> CellField<T> {
    pub fn new(grid: Grid1D<T>, values: Vec<T>, time: T) -> Result<Self, GridError> {
        if values.len() != grid.n_cells {
            return Err(GridError::Mismatch(format!(
                "{} values for {} cells",
                values.len(),
                grid.n_cells
            )));
        }
        Ok(Self { grid, values, time })
    }

    pub fn constant(grid: Grid1D<T>, c: T) -> Self {
        Self {
            grid,
            values: vec![c; grid.n_cells],
            time: T::zero(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mass(&self) -> T {
        self.values.iter().copied().sum::<T>() * self.grid.dx()
    }

    pub fn total_variation(&self) -> T {
        self.values
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .sum()
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// Cell values immediately left and right of edge `e`.
    pub fn traces_at_edge(&self, e: usize) -> Option<(T, T)> {
        if e == 0 || e >= self.values.len() {
            return None;
        }
        Some((self.values[e - 1], self.values[e]))
    }
}

/// Closed-form initial data, sampled as exact (or Simpson) cell averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialData {
    Constant {
        value: f64,
    },
    Riemann {
        x0: f64,
        left: f64,
        right: f64,
    },
    /// Piecewise constant: `values.len() == breaks.len() + 1`, breaks increasing.
    Steps {
        breaks: Vec<f64>,
        values: Vec<f64>,
    },
    /// `base + amplitude·cos²(π(x−center)/(2·half_width))` on `|x−center| < half_width`.
    Bump {
        center: f64,
        half_width: f64,
        base: f64,
        amplitude: f64,
    },
}

impl InitialData {
    pub fn validate(&self) -> Result<(), GridError> {
        match self {
            InitialData::Steps { breaks, values } => {
                if values.len() != breaks.len() + 1 {
                    return Err(GridError::BadInitialData(format!(
                        "steps need {} values for {} breaks, got {}",
                        breaks.len() + 1,
                        breaks.len(),
                        values.len()
                    )));
                }
                if breaks.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(GridError::BadInitialData(
                        "step breaks must be strictly increasing".into(),
                    ));
                }
                Ok(())
            }
            InitialData::Bump { half_width, .. } if *half_width <= 0.0 => Err(
                GridError::BadInitialData("bump half_width must be positive".into()),
            ),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            InitialData::Constant { value } => *value,
            InitialData::Riemann { x0, left, right } => {
                if x < *x0 {
                    *left
                } else {
                    *right
                }
            }
            InitialData::Steps { breaks, values } => {
                let i = breaks.iter().take_while(|b| x >= **b).count();
                values[i]
            }
            InitialData::Bump {
                center,
                half_width,
                base,
                amplitude,
            } => {
                let s = (x - center) / half_width;
                if s.abs() < 1.0 {
                    base + amplitude * (std::f64::consts::FRAC_PI_2 * s).cos().powi(2)
                } else {
                    *base
                }
            }
        }
    }

    /// Value range `(min, max)` attained by the data.
    pub fn range(&self) -> (f64, f64) {
        match self {
            InitialData::Constant { value } => (*value, *value),
            InitialData::Riemann { left, right, .. } => (left.min(*right), left.max(*right)),
            InitialData::Steps { values, .. } => values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                    (a.min(*v), b.max(*v))
                }),
            InitialData::Bump {
                base, amplitude, ..
            } => (base.min(base + amplitude), base.max(base + amplitude)),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            InitialData::Riemann { x0, .. } => vec![*x0],
            InitialData::Steps { breaks, .. } => breaks.clone(),
            InitialData::Bump {
                center, half_width, ..
            } => vec![center - half_width, *center, center + half_width],
            InitialData::Constant { .. } => Vec::new(),
        }
    }

    /// Cell averages on `grid`, splitting each cell at breakpoints of the data.
    pub fn sample<T: Scalar>(&self, grid: &Grid1D<T>) -> CellField<T> {
        let bps = self.breakpoints();
        let dx = grid.dx().as_f64();
        let values = (0..grid.n_cells)
            .map(|j| {
                let a = grid.edge(j).as_f64();
                let b = grid.edge(j + 1).as_f64();
                let mut pts = vec![a];
                pts.extend(bps.iter().copied().filter(|p| *p > a && *p < b));
                pts.push(b);
                let total: f64 = pts
                    .windows(2)
                    .map(|w| {
                        if !matches!(self, InitialData::Bump { .. }) {
                            return self.eval(0.5 * (w[0] + w[1])) * (w[1] - w[0]);
                        }
                        // shrink by a hair so endpoint samples stay on this piece
                        let eps = 1e-12 * (w[1] - w[0]);
                        simpson(|x| self.eval(x), w[0] + eps, w[1] - eps, 16) * (w[1] - w[0])
                            / (w[1] - w[0] - 2.0 * eps)
                    })
                    .sum();
                T::lit(total / dx)
            })
            .collect();
        CellField {
            grid: *grid,
            values,
            time: T::zero(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges_and_centers() {
        let g = Grid1D::new(-1.0, 1.0, 4).unwrap();
        assert_eq!(g.dx(), 0.5);
        assert_eq!(g.center(0), -0.75);
        assert_eq!(g.edge(2), 0.0);
        assert_eq!(g.locate_edge(0.0), Some(2));
        assert_eq!(g.locate_edge(0.1), None);
    }

    #[test]
    fn riemann_sample_is_exact_average() {
        let g = Grid1D::new(0.0, 1.0, 4).unwrap();
        let id = InitialData::Riemann {
            x0: 0.375,
            left: 1.0,
            right: 0.0,
        };
        let f: CellField<f64> = id.sample(&g);
        assert!((f.values[1] - 0.5).abs() < 1e-12);
        assert_eq!(f.values[0], 1.0);
        assert_eq!(f.values[3], 0.0);
    }

    #[test]
    fn steps_validation() {
        let bad = InitialData::Steps {
            breaks: vec![0.0, -1.0],
            values: vec![1.0, 2.0, 3.0],
        };
        assert!(bad.validate().is_err());
        let bad2 = InitialData::Steps {
            breaks: vec![0.0],
            values: vec![1.0],
        };
        assert!(bad2.validate().is_err());
    }

    #[test]
    fn degenerate_grid_rejected() {
        assert!(Grid1D::new(1.0, 1.0, 3).is_err());
        assert!(Grid1D::new(0.0, 1.0, 0).is_err());
    }
}
