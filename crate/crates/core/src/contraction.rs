//! Pairwise L¹ distances between trajectories of one flux model.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grid::{CellField, InitialData};
use crate::kinetic::{lift, KineticError, VGrid};
use crate::scalar::Scalar;
use crate::solver1d::Trajectory;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContractionError {
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("trajectories are not comparable: {0}")]
    Incompatible(String),
    #[error("ball [{need_lo}, {need_hi}] leaves the domain [{lo}, {hi}]")]
    DomainTooSmall {
        need_lo: f64,
        need_hi: f64,
        lo: f64,
        hi: f64,
    },
    #[error(transparent)]
    Kinetic(#[from] KineticError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

/// `Σ |u1_j − u2_j| Δx`.
pub fn l1_distance<T: Scalar>(u1: &CellField<T>, u2: &CellField<T>) -> Result<T, ContractionError> {
    if !u1.grid.same_as(&u2.grid) || u1.len() != u2.len() {
        return Err(ContractionError::GridMismatch);
    }
    Ok(u1
        .values
        .iter()
        .zip(&u2.values)
        .map(|(a, b)| (*a - *b).abs())
        .sum::<T>()
        * u1.grid.dx())
}

/// Cavalieri form: `Σ_j Σ_m |χ(v_m, u1_j) − χ(v_m, u2_j)| Δv Δx`.
pub fn kinetic_distance<T: Scalar>(
    u1: &CellField<T>,
    u2: &CellField<T>,
    vgrid: &VGrid<T>,
) -> Result<T, ContractionError> {
    if !u1.grid.same_as(&u2.grid) || u1.len() != u2.len() {
        return Err(ContractionError::GridMismatch);
    }
    let f1 = lift(u1, vgrid)?;
    let f2 = lift(u2, vgrid)?;
    Ok(f1.l1_v_per_cell(&f2).into_iter().sum::<T>() * u1.grid.dx())
}

/// Default slack constant `4·M`.
pub fn default_c_slack<T: Scalar>(traj: &Trajectory<T>) -> T {
    T::lit(4.0) * traj.model.m_bound
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport<T> {
    pub times: Vec<T>,
    pub l1_distances: Vec<T>,
    pub kinetic_distances: Vec<T>,
    /// Largest growth between consecutive reported snapshots.
    pub max_increase: T,
    /// Largest growth between consecutive time steps.
    pub step_max_increase: T,
    pub c_slack: T,
    pub slack_budget: T,
    /// Allowed gap between the two distances, `Δv·|domain|`.
    pub cavalieri_tol: T,
    pub cavalieri_gap: T,
    pub verdict: Verdict,
}

impl<T: Scalar> ContractionReport<T> {
    pub fn cavalieri_ok(&self) -> bool {
        self.cavalieri_gap <= self.cavalieri_tol
    }
}

fn check_pair<T: Scalar>(a: &Trajectory<T>, b: &Trajectory<T>) -> Result<(), ContractionError> {
    if !a.grid.same_as(&b.grid) {
        return Err(ContractionError::GridMismatch);
    }
    if a.model.k_values != b.model.k_values
        || a.model.interfaces != b.model.interfaces
        || a.model.kernel.name() != b.model.kernel.name()
    {
        return Err(ContractionError::Incompatible("different flux models".into()));
    }
    if a.snapshots.len() != b.snapshots.len() || a.dt != b.dt {
        return Err(ContractionError::Incompatible("different time levels".into()));
    }
    Ok(())
}

fn max_growth<T: Scalar>(d: &[T]) -> T {
    d.windows(2)
        .map(|w| (w[1] - w[0]).max(T::zero()))
        .fold(T::zero(), T::max)
}

/// Distances at the reported snapshots of both runs, with slack `c_slack·Δx·T`.
pub fn contraction_report<T: Scalar>(
    traj1: &Trajectory<T>,
    traj2: &Trajectory<T>,
    c_slack: T,
    vgrid: &VGrid<T>,
) -> Result<ContractionReport<T>, ContractionError> {
    check_pair(traj1, traj2)?;
    let all: Vec<T> = traj1
        .snapshots
        .iter()
        .zip(&traj2.snapshots)
        .map(|(a, b)| l1_distance(a, b))
        .collect::<Result<_, _>>()?;
    let idx = traj1.snapshot_indices(traj1.n_snapshots);
    let mut times = Vec::with_capacity(idx.len());
    let mut l1 = Vec::with_capacity(idx.len());
    let mut kin = Vec::with_capacity(idx.len());
    for &n in &idx {
        times.push(traj1.snapshots[n].time);
        l1.push(all[n]);
        kin.push(kinetic_distance(&traj1.snapshots[n], &traj2.snapshots[n], vgrid)?);
    }
    let cavalieri_gap = l1
        .iter()
        .zip(&kin)
        .map(|(a, b)| (*a - *b).abs())
        .fold(T::zero(), T::max);
    let max_increase = max_growth(&l1);
    let slack_budget = c_slack * traj1.grid.dx() * traj1.t_final();
    Ok(ContractionReport {
        times,
        l1_distances: l1,
        kinetic_distances: kin,
        max_increase,
        step_max_increase: max_growth(&all),
        c_slack,
        slack_budget,
        cavalieri_tol: vgrid.dv() * traj1.grid.length(),
        cavalieri_gap,
        verdict: Verdict::from_bool(max_increase <= slack_budget),
    })
}

/// Pair `index` of a seeded family of step data on `[x_lo, x_hi]` with values in
/// `[u_min, u_max]`. Both members share their outermost states, so their difference
/// is supported in the middle 80% of the domain.
pub fn random_step_pair(
    seed: u64,
    index: u64,
    domain: (f64, f64),
    range: (f64, f64),
    n_inner: usize,
) -> (InitialData, InitialData) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let (a, b) = (domain.0 + 0.1 * (domain.1 - domain.0), domain.1 - 0.1 * (domain.1 - domain.0));
    let (lo, hi) = range;
    let far = (rng.gen_range(lo..=hi), rng.gen_range(lo..=hi));
    let mut one = || {
        let mut breaks: Vec<f64> = (0..=n_inner).map(|_| rng.gen_range(a..b)).collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut values = vec![far.0];
        values.extend((1..breaks.len()).map(|_| rng.gen_range(lo..=hi)));
        values.push(far.1);
        InitialData::Steps { breaks, values }
    };
    let first = one();
    (first, one())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizedReport<T> {
    pub center: T,
    pub radius: T,
    pub speed: T,
    /// `∫_{B_R} |u1(T) − u2(T)|`.
    pub final_distance: T,
    /// `∫_{B_{R+VT}} |u1(0) − u2(0)|`.
    pub initial_distance: T,
    pub slack_budget: T,
    pub verdict: Verdict,
}

/// `∫_{[a,b]} |u1 − u2|` with partial cells weighted by overlap.
fn ball_distance<T: Scalar>(u1: &CellField<T>, u2: &CellField<T>, a: T, b: T) -> T {
    let g = &u1.grid;
    (0..g.n_cells)
        .map(|j| {
            let overlap = (g.edge(j + 1).min(b) - g.edge(j).max(a)).max(T::zero());
            (u1.values[j] - u2.values[j]).abs() * overlap
        })
        .sum()
}

/// Checks `∫_{B_R}|u1(T)−u2(T)| ≤ ∫_{B_{R+VT}}|u1(0)−u2(0)| + c_slack·Δx·T`
/// with `V = max(M, sup|A|)`.
pub fn localized_contraction<T: Scalar>(
    traj1: &Trajectory<T>,
    traj2: &Trajectory<T>,
    center: T,
    radius: T,
    c_slack: T,
) -> Result<LocalizedReport<T>, ContractionError> {
    check_pair(traj1, traj2)?;
    if !(radius > T::zero()) {
        return Err(ContractionError::Incompatible("radius must be positive".into()));
    }
    let t = traj1.t_final();
    let speed = traj1.model.propagation_speed();
    let reach = radius + speed * t;
    let (lo, hi) = (traj1.grid.x_lo, traj1.grid.x_hi);
    if center - reach < lo || center + reach > hi {
        return Err(ContractionError::DomainTooSmall {
            need_lo: (center - reach).as_f64(),
            need_hi: (center + reach).as_f64(),
            lo: lo.as_f64(),
            hi: hi.as_f64(),
        });
    }
    let final_distance = ball_distance(traj1.last(), traj2.last(), center - radius, center + radius);
    let initial_distance = ball_distance(traj1.initial(), traj2.initial(), center - reach, center + reach);
    let slack_budget = c_slack * traj1.grid.dx() * t;
    Ok(LocalizedReport {
        center,
        radius,
        speed,
        final_distance,
        initial_distance,
        slack_budget,
        verdict: Verdict::from_bool(final_distance <= initial_distance + slack_budget),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluxmodel::{FluxModel, Kernel, StateBox};
    use crate::grid::{Grid1D, InitialData};
    use crate::solver1d::{run, SolverConfig};

    fn burgers() -> FluxModel<f64> {
        FluxModel::uniform(Kernel::Burgers, (-1.0, 1.0), 1.0, StateBox::new(-1.0, 1.0).unwrap())
            .unwrap()
    }

    #[test]
    fn distance_of_shifted_field() {
        let g = Grid1D::<f64>::new(0.0, 2.0, 40).unwrap();
        let a = CellField::constant(g, 0.5);
        let b = CellField::constant(g, 0.25);
        assert!((l1_distance(&a, &b).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(l1_distance(&a, &a).unwrap(), 0.0);
        let other = CellField::constant(Grid1D::new(0.0, 2.0, 41).unwrap(), 0.5);
        assert_eq!(l1_distance(&a, &other), Err(ContractionError::GridMismatch));
    }

    #[test]
    fn identical_runs_pass() {
        let m = burgers();
        let init = InitialData::Riemann { x0: 0.0, left: 1.0, right: -0.5 };
        let t = run(&m, &init, &SolverConfig::new(80, 0.4)).unwrap();
        let vg = VGrid::covering(&m.state_box, 128).unwrap();
        let r = contraction_report(&t, &t, default_c_slack(&t), &vg).unwrap();
        assert!(r.l1_distances.iter().all(|d| *d == 0.0));
        assert!(r.verdict.passed());
        let loc = localized_contraction(&t, &t, 0.0, 0.2, default_c_slack(&t)).unwrap();
        assert_eq!(loc.final_distance, 0.0);
        assert!(loc.verdict.passed());
    }

    #[test]
    fn ball_outside_domain_rejected() {
        let m = burgers();
        let init = InitialData::Constant { value: 0.1 };
        let t = run(&m, &init, &SolverConfig::new(40, 0.2)).unwrap();
        assert!(matches!(
            localized_contraction(&t, &t, 0.0, 5.0, 1.0),
            Err(ContractionError::DomainTooSmall { .. })
        ));
    }
}
