//! Discrete kinetic defect measure of a trajectory.
//!
//! For a v-node the cell-integrated defect at step `n` is
//!
//! `m_j(v) = Δx/Δt (min(v, u_j^{n+1}) − min(v, u_j^n)) + H_{j+1/2}(v) − H_{j−1/2}(v) + c_j(v)`
//!
//! with `H_e(v) = F_e(u_l∧v, u_r∧v)` and the interface term
//! `−(A⁺(v) − A⁻(v)) χ(v, û)` split between the two cells adjacent to the
//! interface at the level `F_I(v, v)`. Values are tested on 2×2 space-time
//! patches (mean of the four cell-step values).

use rayon::prelude::*;

use super::entropy::{aggregate, check_trajectory, kruzkov_sweep, sampled_steps, HatRule};
use super::{chi, KineticError, VGrid};
use crate::scalar::Scalar;
use crate::solver1d::{Scheme, Trajectory};

/// Default multiplier in `tol_neg = C·(Δx + Δv)·(1 + M)`.
pub const DEFAULT_TOL_NEG_COEFF: f64 = 4.0;

pub fn tol_neg<T: Scalar>(coeff: T, dx: T, dv: T, m: T) -> T {
    coeff * (dx + dv) * (T::one() + m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectMeasure<T> {
    pub vgrid: VGrid<T>,
    pub tol_neg: T,
    /// `Σ m Δt Δv` over all cells, steps and v-cells.
    pub total_mass: T,
    /// Smallest patch value.
    pub min_value: T,
    /// `(t, x, v)` of the smallest patch value.
    pub argmin: (T, T, T),
    /// Mass per v-cell (`Σ m Δt Δv`).
    pub v_profile: Vec<T>,
    /// v-range where some patch exceeds `tol_neg` in magnitude.
    pub support: Option<(T, T)>,
    /// `(t, x, v, value)` patch values at the sampled steps.
    pub samples: Vec<(T, T, T, T)>,
}

impl<T: Scalar> DefectMeasure<T> {
    pub fn is_nonnegative(&self) -> bool {
        self.min_value >= -self.tol_neg
    }

    pub fn duration_mass_rate(&self, t_final: T) -> T {
        self.total_mass / t_final
    }
}

/// Mean of `χ(·, u)` over the v-cell of width `dv` centred at `v`.
fn chi_cell_average<T: Scalar>(v: T, dv: T, u: T) -> T {
    if u == v {
        return chi(v, u);
    }
    ((u - (v - dv * T::half())) / dv).max(T::zero()).min(T::one())
}

fn defect_step<T: Scalar>(
    scheme: &Scheme<T>,
    traj: &Trajectory<T>,
    hats: &[T],
    n: usize,
    v: T,
    dv: T,
) -> Vec<T> {
    let u0 = &traj.snapshots[n].values;
    let u1 = &traj.snapshots[n + 1].values;
    let nc = u0.len();
    let lam = scheme.grid.dx() / traj.dt;
    let h: Vec<T> = (0..=nc)
        .map(|e| {
            let ul = u0[e.saturating_sub(1)];
            let ur = u0[e.min(nc - 1)];
            scheme.edge_flux(e, ul.min(v), ur.min(v))
        })
        .collect();
    let mut m: Vec<T> = (0..nc)
        .map(|j| lam * (u1[j].min(v) - u0[j].min(v)) + h[j + 1] - h[j])
        .collect();
    for (i, &e) in scheme.interface_edges.iter().enumerate() {
        let pair = scheme.interface_pair(e).expect("interface edge");
        let fvv = scheme.edge_flux(e, v, v);
        let x = chi_cell_average(v, dv, hats[i]);
        m[e - 1] -= (fvv - pair.minus(v)) * x;
        m[e] -= (pair.plus(v) - fvv) * x;
    }
    m
}

/// Defect measure on the v-cells of `vgrid` (midpoint values, with the interface
/// step `χ(v, û)` averaged exactly over each cell), with `tol_neg` from `tol_coeff`.
pub fn kinetic_defect<T: Scalar>(
    traj: &Trajectory<T>,
    hat: &HatRule<T>,
    vgrid: &VGrid<T>,
    tol_coeff: T,
) -> Result<DefectMeasure<T>, KineticError> {
    if vgrid.n_v < super::MIN_NV {
        return Err(KineticError::GridTooCoarse(format!("n_v = {}", vgrid.n_v)));
    }
    check_trajectory(traj)?;
    for s in &traj.snapshots {
        for &u in &s.values {
            vgrid.check(u)?;
        }
    }
    let scheme = traj.scheme().map_err(|e| KineticError::BadTrajectory(e.to_string()))?;
    let hats = hat.resolve(traj)?;
    let sampled = sampled_steps(traj);
    let dv = vgrid.dv();
    let tol = tol_neg(tol_coeff, traj.grid.dx(), dv, traj.model.m_bound);

    let per_v: Vec<_> = (0..vgrid.n_v)
        .into_par_iter()
        .map(|mi| {
            let v = vgrid.v_lo + dv * (T::from_usize_lossy(mi) + T::half());
            let r = aggregate(traj, &sampled, |n| defect_step(&scheme, traj, &hats[n], n, v, dv));
            (v, r)
        })
        .collect();

    let mut total = T::zero();
    let mut min_value = T::infinity();
    let mut argmin = (T::zero(), T::zero(), T::zero());
    let mut v_profile = Vec::with_capacity(per_v.len());
    let mut support: Option<(T, T)> = None;
    let mut samples = Vec::new();
    for (v, r) in per_v {
        let mass = r.raw_sum * traj.dt * dv;
        total += mass;
        v_profile.push(mass);
        if r.min_value < min_value {
            min_value = r.min_value;
            argmin = (r.argmin.0, r.argmin.1, v);
        }
        if r.max_positive > tol || r.min_value < -tol {
            support = Some(match support {
                None => (v, v),
                Some((a, b)) => (a.min(v), b.max(v)),
            });
        }
        samples.extend(r.samples.into_iter().map(|(t, x, val)| (t, x, v, val)));
    }
    Ok(DefectMeasure {
        vgrid: *vgrid,
        tol_neg: tol,
        total_mass: total,
        min_value,
        argmin,
        v_profile,
        support,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignConsistency<T> {
    pub max_kruzkov: T,
    pub worst_c: T,
    pub entropy_slack: T,
    pub min_defect: T,
    pub tol_neg: T,
    pub entropy_ok: bool,
    pub kinetic_ok: bool,
}

impl<T: Scalar> SignConsistency<T> {
    /// Both detectors agree.
    pub fn consistent(&self) -> bool {
        self.entropy_ok == self.kinetic_ok
    }

    pub fn admissible(&self) -> bool {
        self.entropy_ok && self.kinetic_ok
    }
}

/// Kruzkov sweep over `n_c` constants against the defect sign; the entropy slack is `2·tol_neg`.
pub fn sign_consistency<T: Scalar>(
    traj: &Trajectory<T>,
    hat: &HatRule<T>,
    vgrid: &VGrid<T>,
    n_c: usize,
    tol_coeff: T,
) -> Result<SignConsistency<T>, KineticError> {
    let defect = kinetic_defect(traj, hat, vgrid, tol_coeff)?;
    let (max_k, worst_c) = kruzkov_sweep(traj, hat, n_c)?;
    let slack = T::two() * defect.tol_neg;
    Ok(SignConsistency {
        max_kruzkov: max_k,
        worst_c,
        entropy_slack: slack,
        min_defect: defect.min_value,
        tol_neg: defect.tol_neg,
        entropy_ok: max_k <= slack,
        kinetic_ok: defect.is_nonnegative(),
    })
}
