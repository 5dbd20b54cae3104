//! First-order finite-volume solver for `u_t + A(x,u)_x = 0` in 1D.
//!
//! Inside each constant-coefficient subinterval the edge flux is Godunov's.
//! At an interface edge the flux is the vanishing-viscosity coupling flux,
//! `min(A⁻(min(u_l,θ_l)), A⁺(max(u_r,θ_r)))` for bell-shaped kernels, its
//! mirror for valley-shaped ones, and upwinding when both sides are monotone
//! in the same direction.

use std::ops::Range;

use thiserror::Error;

use crate::fluxmodel::{FluxError, FluxModel, InterfacePair, Kernel, Shape};
use crate::germ::{find_connections, is_admissible, GermState, MIN_CANDIDATE_GRID, MIN_C_GRID};
use crate::grid::{CellField, Grid1D, GridError, InitialData};
use crate::scalar::{bisect, Scalar};

pub use crate::grid::{CellField as Snapshot, Grid1D as Grid};

pub const DEFAULT_CFL: f64 = 0.45;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("time step {dt} exceeds the stability limit {limit}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("kernel shape {shape} not supported by the interface flux ({side})")]
    UnsupportedKernelShape { shape: String, side: String },
    #[error("interface at x = {x} is not on a cell edge")]
    InterfaceOffGrid { x: f64 },
    #[error("value {u} left the extended state box at t = {t}")]
    OutOfBox { u: f64, t: f64 },
    #[error("viscosity {eps} below the required minimum {min}")]
    ViscosityTooSmall { eps: f64, min: f64 },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Flux(#[from] FluxError),
}

/// Godunov flux of `u ↦ Â(k,u)`: min over `[u_l,u_r]` if `u_l ≤ u_r`, else max over `[u_r,u_l]`.
pub fn godunov_flux<T: Scalar>(kernel: &Kernel<T>, k: T, ul: T, ur: T) -> T {
    let crit = kernel.critical_points(k, ul.min(ur), ul.max(ur));
    godunov_with_critical(kernel, k, ul, ur, &crit)
}

fn godunov_with_critical<T: Scalar>(kernel: &Kernel<T>, k: T, ul: T, ur: T, crit: &[T]) -> T {
    let (fl, fr) = (kernel.eval(k, ul), kernel.eval(k, ur));
    if ul == ur {
        return fl;
    }
    let (lo, hi) = (ul.min(ur), ul.max(ur));
    let inner = crit
        .iter()
        .filter(|t| **t > lo && **t < hi)
        .map(|t| kernel.eval(k, *t));
    if ul < ur {
        inner.fold(fl.min(fr), T::min)
    } else {
        inner.fold(fl.max(fr), T::max)
    }
}

/// How the two sides of an interface are coupled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling<T> {
    Bell { theta_l: T, theta_r: T },
    Valley { theta_l: T, theta_r: T },
    UpwindLeft,
    UpwindRight,
}

impl<T: Scalar> Coupling<T> {
    pub fn classify(pair: &InterfacePair<T>, lo: T, hi: T) -> Result<Self, SolverError> {
        let sl = pair.kernel.shape(pair.k_left, lo, hi);
        let sr = pair.kernel.shape(pair.k_right, lo, hi);
        let inc = |s: &Shape<T>| matches!(s, Shape::Increasing | Shape::Flat);
        let dec = |s: &Shape<T>| matches!(s, Shape::Decreasing | Shape::Flat);
        match (sl, sr) {
            (Shape::Bell { theta: a }, Shape::Bell { theta: b }) => Ok(Coupling::Bell {
                theta_l: a,
                theta_r: b,
            }),
            (Shape::Valley { theta: a }, Shape::Valley { theta: b }) => Ok(Coupling::Valley {
                theta_l: a,
                theta_r: b,
            }),
            (l, r) if inc(&l) && inc(&r) => Ok(Coupling::UpwindLeft),
            (l, r) if dec(&l) && dec(&r) => Ok(Coupling::UpwindRight),
            (l, r) => Err(SolverError::UnsupportedKernelShape {
                shape: format!("{l:?} | {r:?}"),
                side: format!("k_left = {}, k_right = {}", pair.k_left, pair.k_right),
            }),
        }
    }
}

/// Result of one interface Riemann solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceSolution<T> {
    pub flux: T,
    /// Left and right interface traces of the Riemann solution.
    pub trace_minus: T,
    pub trace_plus: T,
    pub u_hat: Option<T>,
}

/// Root of `f(w) = target` on `[lo, hi]` where `f` is monotone; `None` without a bracket.
fn branch_root<T: Scalar, F: Fn(T) -> T>(f: F, target: T, lo: T, hi: T) -> Option<T> {
    if lo > hi {
        return None;
    }
    bisect(|w| f(w) - target, lo, hi)
}

/// Interface flux for `(u_l, u_r)` with the Riemann traces and a connection value.
/// `(lo, hi)` bounds root searches and û candidates.
pub fn interface_solve<T: Scalar>(
    pair: &InterfacePair<T>,
    coupling: &Coupling<T>,
    ul: T,
    ur: T,
    lo: T,
    hi: T,
) -> InterfaceSolution<T> {
    let am = |w: T| pair.minus(w);
    let ap = |w: T| pair.plus(w);
    let (flux, tm, tp) = match *coupling {
        Coupling::Bell { theta_l, theta_r } => {
            let demand = am(ul.min(theta_l));
            let supply = ap(ur.max(theta_r));
            if demand <= supply {
                let tm = ul.min(theta_l);
                let tp = branch_root(ap, demand, lo, theta_r).unwrap_or(ur);
                (demand, tm, tp)
            } else {
                let tp = ur.max(theta_r);
                let tm = branch_root(am, supply, theta_l, hi).unwrap_or(ul);
                (supply, tm, tp)
            }
        }
        Coupling::Valley { theta_l, theta_r } => {
            let a = am(ul.max(theta_l));
            let b = ap(ur.min(theta_r));
            if a >= b {
                let tm = ul.max(theta_l);
                let tp = branch_root(ap, a, theta_r, hi).unwrap_or(ur);
                (a, tm, tp)
            } else {
                let tp = ur.min(theta_r);
                let tm = branch_root(am, b, lo, theta_l).unwrap_or(ul);
                (b, tm, tp)
            }
        }
        Coupling::UpwindLeft => {
            let f = am(ul);
            let tp = branch_root(ap, f, lo, hi).unwrap_or(ur);
            (f, ul, tp)
        }
        Coupling::UpwindRight => {
            let f = ap(ur);
            let tm = branch_root(am, f, lo, hi).unwrap_or(ul);
            (f, tm, ur)
        }
    };
    InterfaceSolution {
        flux,
        trace_minus: tm,
        trace_plus: tp,
        u_hat: select_hat(pair, coupling, tm, tp, lo, hi),
    }
}

/// First admissible connection among the traces and critical points, else a grid search.
fn select_hat<T: Scalar>(
    pair: &InterfacePair<T>,
    coupling: &Coupling<T>,
    tm: T,
    tp: T,
    lo: T,
    hi: T,
) -> Option<T> {
    let mut cands = vec![tp, tm];
    if let Coupling::Bell { theta_l, theta_r } | Coupling::Valley { theta_l, theta_r } = *coupling
    {
        cands.push(theta_l);
        cands.push(theta_r);
    }
    for c in cands {
        if is_admissible(&GermState::new(pair.clone(), tm, tp, c), MIN_C_GRID).admissible {
            return Some(c);
        }
    }
    find_connections(pair, tm, tp, lo, hi, MIN_CANDIDATE_GRID)
        .into_iter()
        .next()
}

#[derive(Debug, Clone)]
enum EdgeKind<T> {
    /// Godunov with subinterval index.
    Interior(usize),
    Interface {
        index: usize,
        pair: InterfacePair<T>,
        coupling: Coupling<T>,
    },
}

/// The discrete scheme on one grid: per-edge numerical fluxes.
#[derive(Debug, Clone)]
pub struct Scheme<T> {
    pub model: FluxModel<T>,
    pub grid: Grid1D<T>,
    pub cfl: T,
    edges: Vec<EdgeKind<T>>,
    /// Subinterval index per cell.
    pub cell_region: Vec<usize>,
    /// Edge index of each interface.
    pub interface_edges: Vec<usize>,
    critical: Vec<Vec<T>>,
}

impl<T: Scalar> Scheme<T> {
    pub fn new(model: &FluxModel<T>, grid: Grid1D<T>) -> Result<Self, SolverError> {
        let mut interface_edges = Vec::with_capacity(model.n_interfaces());
        for &x in &model.interfaces {
            match grid.locate_edge(x) {
                Some(e) if e > 0 && e < grid.n_cells => interface_edges.push(e),
                _ => return Err(SolverError::InterfaceOffGrid { x: x.as_f64() }),
            }
        }
        let cell_region: Vec<usize> = (0..grid.n_cells)
            .map(|j| interface_edges.iter().take_while(|e| **e <= j).count())
            .collect();
        let sb = model.state_box;
        let (elo, ehi) = sb.extended();
        let mut edges: Vec<EdgeKind<T>> = (0..=grid.n_cells)
            .map(|e| EdgeKind::Interior(cell_region[e.min(grid.n_cells - 1)]))
            .collect();
        for (i, &e) in interface_edges.iter().enumerate() {
            let pair = model.interface_pair(i)?;
            let coupling = Coupling::classify(&pair, sb.u_min, sb.u_max)?;
            edges[e] = EdgeKind::Interface {
                index: i,
                pair,
                coupling,
            };
        }
        let critical = model
            .k_values
            .iter()
            .map(|&k| model.kernel.critical_points(k, elo, ehi))
            .collect();
        Ok(Self {
            model: model.clone(),
            grid,
            cfl: T::lit(DEFAULT_CFL),
            edges,
            cell_region,
            interface_edges,
            critical,
        })
    }

    pub fn with_cfl(mut self, cfl: T) -> Self {
        self.cfl = cfl;
        self
    }

    pub fn dt_limit(&self) -> T {
        if self.model.m_bound > T::zero() {
            self.cfl * self.grid.dx() / self.model.m_bound
        } else {
            T::infinity()
        }
    }

    /// Coefficient of cell `j`.
    pub fn cell_k(&self, j: usize) -> T {
        self.model.k_values[self.cell_region[j]]
    }

    /// Exact flux `A(x_j, u)` in cell `j`.
    pub fn cell_flux(&self, j: usize, u: T) -> T {
        self.model.kernel.eval(self.cell_k(j), u)
    }

    pub fn is_interface_edge(&self, e: usize) -> Option<usize> {
        match &self.edges[e] {
            EdgeKind::Interface { index, .. } => Some(*index),
            EdgeKind::Interior(_) => None,
        }
    }

    pub fn interface_pair(&self, e: usize) -> Option<&InterfacePair<T>> {
        match &self.edges[e] {
            EdgeKind::Interface { pair, .. } => Some(pair),
            EdgeKind::Interior(_) => None,
        }
    }

    /// Numerical flux at edge `e`; boundary edges use the adjacent cell's kernel.
    pub fn edge_flux(&self, e: usize, ul: T, ur: T) -> T {
        match &self.edges[e] {
            EdgeKind::Interior(r) => godunov_with_critical(
                &self.model.kernel,
                self.model.k_values[*r],
                ul,
                ur,
                &self.critical[*r],
            ),
            EdgeKind::Interface { pair, coupling, .. } => {
                interface_flux_only(pair, coupling, ul, ur)
            }
        }
    }

    /// Flux and traces at interface edge `e`.
    pub fn interface_solution(&self, e: usize, ul: T, ur: T) -> Option<InterfaceSolution<T>> {
        match &self.edges[e] {
            EdgeKind::Interface { pair, coupling, .. } => {
                let (lo, hi) = self.model.state_box.extended();
                Some(interface_solve(pair, coupling, ul, ur, lo, hi))
            }
            EdgeKind::Interior(_) => None,
        }
    }

    /// Edge fluxes `F_0 .. F_n` with outflow ghost cells.
    pub fn fluxes(&self, u: &[T]) -> Vec<T> {
        let n = u.len();
        (0..=n)
            .map(|e| {
                let ul = u[e.saturating_sub(1)];
                let ur = u[e.min(n - 1)];
                self.edge_flux(e, ul, ur)
            })
            .collect()
    }

    pub fn step(&self, u: &CellField<T>, dt: T) -> Result<CellField<T>, SolverError> {
        let limit = self.dt_limit();
        if dt > limit * (T::one() + T::lit(1e-12)) {
            return Err(SolverError::CflViolation {
                dt: dt.as_f64(),
                limit: limit.as_f64(),
            });
        }
        if !u.grid.same_as(&self.grid) {
            return Err(GridError::Mismatch("field and scheme grids differ".into()).into());
        }
        let f = self.fluxes(&u.values);
        let lambda = dt / self.grid.dx();
        let values: Vec<T> = u
            .values
            .iter()
            .enumerate()
            .map(|(j, &uj)| uj - lambda * (f[j + 1] - f[j]))
            .collect();
        let time = u.time + dt;
        for &v in &values {
            if !self.model.state_box.contains_extended(v) {
                return Err(SolverError::OutOfBox {
                    u: v.as_f64(),
                    t: time.as_f64(),
                });
            }
        }
        Ok(CellField {
            grid: self.grid,
            values,
            time,
        })
    }
}

fn interface_flux_only<T: Scalar>(pair: &InterfacePair<T>, coupling: &Coupling<T>, ul: T, ur: T) -> T {
    match *coupling {
        Coupling::Bell { theta_l, theta_r } => {
            pair.minus(ul.min(theta_l)).min(pair.plus(ur.max(theta_r)))
        }
        Coupling::Valley { theta_l, theta_r } => {
            pair.minus(ul.max(theta_l)).max(pair.plus(ur.min(theta_r)))
        }
        Coupling::UpwindLeft => pair.minus(ul),
        Coupling::UpwindRight => pair.plus(ur),
    }
}

/// Interface flux at interface `index` of `model`, with the connection value.
pub fn interface_flux<T: Scalar>(
    model: &FluxModel<T>,
    index: usize,
    ul: T,
    ur: T,
) -> Result<InterfaceSolution<T>, SolverError> {
    let pair = model.interface_pair(index)?;
    let sb = model.state_box;
    let coupling = Coupling::classify(&pair, sb.u_min, sb.u_max)?;
    let (lo, hi) = sb.extended();
    Ok(interface_solve(&pair, &coupling, ul, ur, lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceTrace<T> {
    pub t: T,
    pub index: usize,
    /// Adjacent cell values.
    pub u_minus: T,
    pub u_plus: T,
    pub u_hat: Option<T>,
    pub flux: T,
    pub riemann_minus: T,
    pub riemann_plus: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T> {
    /// Cells over the model domain (padding cells come on top).
    pub n_cells: usize,
    pub t_final: T,
    pub cfl: T,
    pub n_snapshots: usize,
    /// Pad the domain so outflow boundaries stay out of reach.
    pub pad: bool,
    /// Hold the initial data fixed in time.
    pub frozen: bool,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(n_cells: usize, t_final: T) -> Self {
        Self {
            n_cells,
            t_final,
            cfl: T::lit(DEFAULT_CFL),
            n_snapshots: 11,
            pad: true,
            frozen: false,
        }
    }
}

/// Every time step of a run with its interface traces.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub model: FluxModel<T>,
    pub grid: Grid1D<T>,
    pub dt: T,
    /// `snapshots[n]` at `t = n·dt`.
    pub snapshots: Vec<CellField<T>>,
    /// `traces[n]` from the flux solve on `snapshots[n]` (empty for the last one).
    pub traces: Vec<Vec<InterfaceTrace<T>>>,
    /// Cells belonging to the unpadded domain.
    pub core: Range<usize>,
    pub n_snapshots: usize,
}

impl<T: Scalar> Trajectory<T> {
    pub fn scheme(&self) -> Result<Scheme<T>, SolverError> {
        Scheme::new(&self.model, self.grid)
    }

    pub fn n_steps(&self) -> usize {
        self.snapshots.len().saturating_sub(1)
    }

    pub fn initial(&self) -> &CellField<T> {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &CellField<T> {
        self.snapshots.last().expect("trajectory has at least one snapshot")
    }

    pub fn t_final(&self) -> T {
        self.last().time
    }

    /// Indices of about `count` evenly spaced snapshots including the first and last.
    pub fn snapshot_indices(&self, count: usize) -> Vec<usize> {
        let n = self.n_steps();
        if count <= 1 || n == 0 {
            return vec![n];
        }
        let mut idx: Vec<usize> = (0..count)
            .map(|i| ((i * n) as f64 / (count - 1) as f64).round() as usize)
            .collect();
        idx.dedup();
        idx
    }

    pub fn core_grid(&self) -> Grid1D<T> {
        Grid1D {
            x_lo: self.grid.edge(self.core.start),
            x_hi: self.grid.edge(self.core.end),
            n_cells: self.core.len(),
        }
    }

    /// Snapshot `n` restricted to the unpadded domain.
    pub fn core_field(&self, n: usize) -> CellField<T> {
        let s = &self.snapshots[n];
        CellField {
            grid: self.core_grid(),
            values: s.values[self.core.clone()].to_vec(),
            time: s.time,
        }
    }
}

/// Cells added on each side so nothing reaches the outflow boundary by `t_final`.
pub fn padding_cells<T: Scalar>(model: &FluxModel<T>, dx: T, t_final: T) -> usize {
    (model.propagation_speed() * t_final / dx)
        .ceil()
        .to_usize()
        .unwrap_or(0)
        + 2
}

fn padded_grid<T: Scalar>(
    model: &FluxModel<T>,
    cfg: &SolverConfig<T>,
) -> Result<(Grid1D<T>, Range<usize>), SolverError> {
    let core = Grid1D::new(model.x_lo, model.x_hi, cfg.n_cells)?;
    let dx = core.dx();
    let pad = if cfg.pad {
        padding_cells(model, dx, cfg.t_final)
    } else {
        0
    };
    let padf = T::from_usize_lossy(pad) * dx;
    let grid = Grid1D::new(core.x_lo - padf, core.x_hi + padf, cfg.n_cells + 2 * pad)?;
    Ok((grid, pad..pad + cfg.n_cells))
}

/// Initial field on the padded grid, checked against the extended box.
fn initial_field<T: Scalar>(
    model: &FluxModel<T>,
    initial: &InitialData,
    grid: &Grid1D<T>,
) -> Result<CellField<T>, SolverError> {
    initial.validate()?;
    let u0: CellField<T> = initial.sample(grid);
    for &v in &u0.values {
        if !model.state_box.contains_extended(v) {
            return Err(SolverError::OutOfBox {
                u: v.as_f64(),
                t: 0.0,
            });
        }
    }
    Ok(u0)
}

fn traces_of<T: Scalar>(scheme: &Scheme<T>, u: &CellField<T>) -> Vec<InterfaceTrace<T>> {
    scheme
        .interface_edges
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let (ul, ur) = (u.values[e - 1], u.values[e]);
            let sol = scheme
                .interface_solution(e, ul, ur)
                .expect("interface edge carries a coupling");
            InterfaceTrace {
                t: u.time,
                index: i,
                u_minus: ul,
                u_plus: ur,
                u_hat: sol.u_hat,
                flux: sol.flux,
                riemann_minus: sol.trace_minus,
                riemann_plus: sol.trace_plus,
            }
        })
        .collect()
}

/// Evolve `initial` to `cfg.t_final` with a uniform step at CFL `cfg.cfl`.
pub fn run<T: Scalar>(
    model: &FluxModel<T>,
    initial: &InitialData,
    cfg: &SolverConfig<T>,
) -> Result<Trajectory<T>, SolverError> {
    if !(cfg.t_final > T::zero()) {
        return Err(SolverError::InvalidConfig("t_final must be positive".into()));
    }
    if !(cfg.cfl > T::zero() && cfg.cfl <= T::lit(DEFAULT_CFL)) {
        return Err(SolverError::InvalidConfig(format!(
            "cfl must lie in (0, {DEFAULT_CFL}]"
        )));
    }
    let (grid, core) = padded_grid(model, cfg)?;
    let scheme = Scheme::new(model, grid)?.with_cfl(cfg.cfl);
    let u0 = initial_field(model, initial, &grid)?;

    let limit = scheme.dt_limit();
    let n_steps = if limit.is_finite() {
        (cfg.t_final / limit).ceil().to_usize().unwrap_or(1).max(1)
    } else {
        1
    };
    let dt = cfg.t_final / T::from_usize_lossy(n_steps);

    let mut snapshots = Vec::with_capacity(n_steps + 1);
    let mut traces = Vec::with_capacity(n_steps + 1);
    snapshots.push(u0);
    for n in 0..n_steps {
        let cur = &snapshots[n];
        traces.push(traces_of(&scheme, cur));
        let next = if cfg.frozen {
            CellField {
                grid,
                values: cur.values.clone(),
                time: cur.time + dt,
            }
        } else {
            scheme.step(cur, dt)?
        };
        snapshots.push(next);
    }
    traces.push(Vec::new());
    Ok(Trajectory {
        model: model.clone(),
        grid,
        dt,
        snapshots,
        traces,
        core,
        n_snapshots: cfg.n_snapshots,
    })
}

/// Thomas algorithm for a tridiagonal system (`a` sub, `b` main, `c` super).
fn solve_tridiagonal<T: Scalar>(a: &[T], b: &[T], c: &[T], d: &mut [T]) {
    let n = d.len();
    let mut cp = vec![T::zero(); n];
    cp[0] = c[0] / b[0];
    d[0] /= b[0];
    for i in 1..n {
        let m = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / m;
        d[i] = (d[i] - a[i] * d[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        let next = d[i + 1];
        d[i] -= cp[i] * next;
    }
}

/// Coefficient at edge `e` ramped linearly over four cells around each interface edge.
fn ramped_edge_k<T: Scalar>(model: &FluxModel<T>, interface_edges: &[usize], e: usize) -> T {
    let mut k = model.k_values[0];
    for (i, &ie) in interface_edges.iter().enumerate() {
        let s = (e as f64 - ie as f64) / 4.0 + 0.5;
        let s = T::lit(s.clamp(0.0, 1.0));
        k += s * (model.k_values[i + 1] - model.k_values[i]);
    }
    k
}

/// Viscous regularization `u_t + A(x,u)_x = ε u_xx`: central convection explicit,
/// diffusion implicit, coefficient ramped over four cells at each interface.
pub fn viscous_reference<T: Scalar>(
    model: &FluxModel<T>,
    initial: &InitialData,
    cfg: &SolverConfig<T>,
    eps: T,
) -> Result<Trajectory<T>, SolverError> {
    let (grid, core) = padded_grid(model, cfg)?;
    let dx = grid.dx();
    let m = model.m_bound;
    let min_eps = T::two() * m * dx;
    if eps < min_eps * (T::one() - T::lit(1e-12)) {
        return Err(SolverError::ViscosityTooSmall {
            eps: eps.as_f64(),
            min: min_eps.as_f64(),
        });
    }
    let interface_edges: Vec<usize> = model
        .interfaces
        .iter()
        .map(|x| grid.locate_edge(*x).ok_or(SolverError::InterfaceOffGrid { x: x.as_f64() }))
        .collect::<Result<_, _>>()?;
    let u0 = initial_field(model, initial, &grid)?;

    let mut dt_max = cfg.cfl * dx / m.max(T::lit(1e-300));
    if m > T::zero() {
        dt_max = dt_max.min(eps / (m * m));
    }
    let n_steps = (cfg.t_final / dt_max).ceil().to_usize().unwrap_or(1).max(1);
    let dt = cfg.t_final / T::from_usize_lossy(n_steps);
    if m > T::zero() && dt > cfg.cfl * dx / m * (T::one() + T::lit(1e-12)) {
        return Err(SolverError::CflViolation {
            dt: dt.as_f64(),
            limit: (cfg.cfl * dx / m).as_f64(),
        });
    }

    let n = grid.n_cells;
    let edge_k: Vec<T> = (0..=n).map(|e| ramped_edge_k(model, &interface_edges, e)).collect();
    let r = dt * eps / (dx * dx);
    let (mut a, mut b, mut c) = (vec![-r; n], vec![T::one() + T::two() * r; n], vec![-r; n]);
    a[0] = T::zero();
    c[n - 1] = T::zero();
    b[0] = T::one() + r;
    b[n - 1] = T::one() + r;

    let stride = if cfg.n_snapshots > 1 {
        (n_steps / (cfg.n_snapshots - 1)).max(1)
    } else {
        n_steps
    };
    let kernel = &model.kernel;
    let mut u = u0.values.clone();
    let mut snapshots = vec![u0];
    for s in 1..=n_steps {
        let f: Vec<T> = (0..=n)
            .map(|e| {
                let ul = u[e.saturating_sub(1)];
                let ur = u[e.min(n - 1)];
                (kernel.eval(edge_k[e], ul) + kernel.eval(edge_k[e], ur)) * T::half()
            })
            .collect();
        let mut rhs: Vec<T> = (0..n).map(|j| u[j] - dt / dx * (f[j + 1] - f[j])).collect();
        solve_tridiagonal(&a, &b, &c, &mut rhs);
        u = rhs;
        if s % stride == 0 || s == n_steps {
            snapshots.push(CellField {
                grid,
                values: u.clone(),
                time: T::from_usize_lossy(s) * dt,
            });
        }
    }
    if snapshots.len() >= 2 {
        let l = snapshots.len();
        if snapshots[l - 1].time == snapshots[l - 2].time {
            snapshots.remove(l - 2);
        }
    }
    let traces = vec![Vec::new(); snapshots.len()];
    Ok(Trajectory {
        model: model.clone(),
        grid,
        dt: dt * T::from_usize_lossy(stride),
        snapshots,
        traces,
        core,
        n_snapshots: cfg.n_snapshots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluxmodel::StateBox;

    fn lwr_model(kl: f64, kr: f64) -> FluxModel<f64> {
        FluxModel::new(
            Kernel::Lwr,
            (-1.0, 1.0),
            vec![0.0],
            vec![kl, kr],
            StateBox::new(0.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn godunov_examples() {
        let b = Kernel::<f64>::Burgers;
        assert_eq!(godunov_flux(&b, 1.0, 1.0, 0.0), 0.5);
        assert_eq!(godunov_flux(&b, 1.0, -1.0, 1.0), 0.0);
        assert_eq!(godunov_flux(&Kernel::Lwr, 1.0, 0.3, 0.3), 0.21);
    }

    #[test]
    fn interface_flux_examples() {
        let m = lwr_model(1.0, 2.0);
        assert_eq!(interface_flux(&m, 0, 0.5, 0.5).unwrap().flux, 0.25);
        assert_eq!(interface_flux(&m, 0, 0.0, 1.0).unwrap().flux, 0.0);
        let same = lwr_model(1.5, 1.5);
        for (ul, ur) in [(0.1, 0.9), (0.9, 0.1), (0.3, 0.4), (0.7, 0.2)] {
            let f = interface_flux(&same, 0, ul, ur).unwrap().flux;
            assert_eq!(f, godunov_flux(&Kernel::Lwr, 1.5, ul, ur));
        }
    }

    #[test]
    fn interface_traces_are_admissible() {
        let m = lwr_model(1.0, 2.0);
        for (ul, ur) in [(0.5, 0.5), (0.9, 0.1), (0.2, 0.8), (1.0, 0.0), (0.0, 1.0)] {
            let s = interface_flux(&m, 0, ul, ur).unwrap();
            let h = s.u_hat.expect("connection exists");
            let st = GermState::new(m.interface_pair(0).unwrap(), s.trace_minus, s.trace_plus, h);
            assert!(is_admissible(&st, 64).admissible, "{ul} {ur}");
        }
    }

    #[test]
    fn mixed_shapes_are_refused() {
        let m = FluxModel::new(
            Kernel::Lwr,
            (-1.0, 1.0),
            vec![0.0],
            vec![1.0, -1.0],
            StateBox::new(0.0, 1.0).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            interface_flux(&m, 0, 0.5, 0.5),
            Err(SolverError::UnsupportedKernelShape { .. })
        ));
    }

    #[test]
    fn cfl_violation_detected() {
        let m = lwr_model(1.0, 2.0);
        let g = Grid1D::new(-1.0, 1.0, 20).unwrap();
        let s = Scheme::new(&m, g).unwrap();
        let u = CellField::constant(g, 0.3);
        assert!(matches!(s.step(&u, 1.0), Err(SolverError::CflViolation { .. })));
        let next = s.step(&u, s.dt_limit()).unwrap();
        assert_eq!(next.values[0], 0.3);
    }

    #[test]
    fn interface_off_grid() {
        let m = FluxModel::new(
            Kernel::Lwr,
            (-1.0, 1.0),
            vec![0.05],
            vec![1.0, 2.0],
            StateBox::new(0.0, 1.0).unwrap(),
        )
        .unwrap();
        let g = Grid1D::new(-1.0, 1.0, 20).unwrap();
        assert!(matches!(
            Scheme::new(&m, g),
            Err(SolverError::InterfaceOffGrid { .. })
        ));
    }

    #[test]
    fn tridiagonal_solves() {
        let a = [0.0, 1.0, 1.0];
        let b = [4.0, 4.0, 4.0];
        let c = [1.0, 1.0, 0.0];
        let mut d = [5.0f64, 6.0, 5.0];
        solve_tridiagonal(&a, &b, &c, &mut d);
        for v in d {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }
}
