//! Convex entropy pairs and the discrete entropy residual of a trajectory.
//!
//! Residuals are cell-integrated (flux units): for a Kruzkov constant `c`,
//!
//! `E_j = Δx/Δt (|u_j^{n+1} − c| − |u_j^n − c|) + G_{j+1/2} − G_{j−1/2} + κ_j`
//!
//! with `G = F(u_l∨c, u_r∨c) − F(u_l∧c, u_r∧c)` built from the scheme's edge
//! fluxes and `κ` the interface correction `sign(û − c)(A⁺(c) − A⁻(c))` split
//! between the two adjacent cells. A smooth convex `S` is reduced to Kruzkov
//! entropies through `S(u) = β + αu + ½∫ S''(c)|u − c| dc`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use super::{KineticError, VGrid};
use crate::fluxmodel::{FluxModel, Kernel};
use crate::scalar::{simpson, Scalar};
use crate::solver1d::{Scheme, Trajectory};

type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Twice differentiable entropy given by closed forms for `S'` and `S''`.
#[derive(Clone)]
pub struct SmoothEntropy<T> {
    pub name: String,
    pub s: ScalarFn<T>,
    pub ds: ScalarFn<T>,
    pub d2s: ScalarFn<T>,
}

impl<T> fmt::Debug for SmoothEntropy<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothEntropy")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum Entropy<T> {
    /// `|v − c|`
    Kruzkov(T),
    /// `β + α v`
    Affine { alpha: T, beta: T },
    Smooth(SmoothEntropy<T>),
}

impl<T: Scalar> Entropy<T> {
    /// `v²/2`
    pub fn quadratic() -> Self {
        Entropy::Smooth(SmoothEntropy {
            name: "quadratic".into(),
            s: Arc::new(|v: T| v * v * T::half()),
            ds: Arc::new(|v: T| v),
            d2s: Arc::new(|_| T::one()),
        })
    }

    pub fn eval(&self, v: T) -> T {
        match self {
            Entropy::Kruzkov(c) => (v - *c).abs(),
            Entropy::Affine { alpha, beta } => *beta + *alpha * v,
            Entropy::Smooth(s) => (s.s)(v),
        }
    }

    /// `S'(v)`, with `sign(0) = 0` at a Kruzkov kink.
    pub fn deriv(&self, v: T) -> T {
        match self {
            Entropy::Kruzkov(c) => (v - *c).sgn(),
            Entropy::Affine { alpha, .. } => *alpha,
            Entropy::Smooth(s) => (s.ds)(v),
        }
    }

    /// `S''(v)` away from kinks.
    pub fn second(&self, v: T) -> T {
        match self {
            Entropy::Kruzkov(_) | Entropy::Affine { .. } => T::zero(),
            Entropy::Smooth(s) => (s.d2s)(v),
        }
    }

    fn kink(&self) -> Option<T> {
        match self {
            Entropy::Kruzkov(c) => Some(*c),
            _ => None,
        }
    }
}

/// `(S, η)` for one constant coefficient `k`.
#[derive(Debug, Clone)]
pub struct EntropyPair<T> {
    pub kernel: Kernel<T>,
    pub k: T,
    pub entropy: Entropy<T>,
}

/// Spacing of the quadrature grid for `η`.
pub const ETA_SPACING: f64 = 1e-3;

impl<T: Scalar> EntropyPair<T> {
    /// `η(v) = ∫₀^v ∂uÂ(k,w) S'(w) dw` by composite Simpson, split at kinks.
    pub fn eta(&self, v: T) -> T {
        let integrand = |w: T| self.kernel.deval(self.k, w) * self.entropy.deriv(w);
        let mut pts = vec![T::zero()];
        if let Some(c) = self.entropy.kink() {
            if c > T::zero().min(v) && c < T::zero().max(v) {
                pts.push(c);
            }
        }
        pts.push(v);
        pts.windows(2)
            .map(|w| {
                let n = ((w[1] - w[0]).abs().as_f64() / ETA_SPACING).ceil() as usize;
                simpson(integrand, w[0], w[1], n.max(2))
            })
            .sum()
    }
}

/// Entropy pair on subinterval `region` of `model`; rejects non-convex `S` on the extended box.
pub fn entropy_pair<T: Scalar>(
    model: &FluxModel<T>,
    entropy: Entropy<T>,
    region: usize,
) -> Result<EntropyPair<T>, KineticError> {
    let k = *model.k_values.get(region).ok_or_else(|| {
        KineticError::BadTrajectory(format!("no subinterval {region}"))
    })?;
    let (lo, hi) = model.state_box.extended();
    for v in crate::scalar::linspace(lo, hi, 1001) {
        let s2 = entropy.second(v);
        if s2 < -T::lit(1e-12) {
            return Err(KineticError::NotConvex {
                at: v.as_f64(),
                value: s2.as_f64(),
            });
        }
    }
    Ok(EntropyPair {
        kernel: model.kernel.clone(),
        k,
        entropy,
    })
}

/// How the connection value û is supplied at interfaces.
#[derive(Debug, Clone, PartialEq)]
pub enum HatRule<T> {
    /// Use the values recorded by the interface flux solve.
    FromTraces,
    /// One fixed value per interface for every step.
    Constant(Vec<T>),
}

impl<T: Scalar> HatRule<T> {
    /// û for every interface at every step `0..n_steps`.
    pub fn resolve(&self, traj: &Trajectory<T>) -> Result<Vec<Vec<T>>, KineticError> {
        let n_int = traj.model.n_interfaces();
        (0..traj.n_steps())
            .map(|n| match self {
                HatRule::FromTraces => (0..n_int)
                    .map(|i| {
                        traj.traces
                            .get(n)
                            .and_then(|tr| tr.get(i))
                            .and_then(|tr| tr.u_hat)
                            .ok_or(KineticError::MissingConnection { interface: i, step: n })
                    })
                    .collect(),
                HatRule::Constant(v) => {
                    if v.len() != n_int {
                        Err(KineticError::MissingConnection {
                            interface: v.len().min(n_int),
                            step: n,
                        })
                    } else {
                        Ok(v.clone())
                    }
                }
            })
            .collect()
    }
}

/// Aggregated residual over 2×2 space-time patches.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualField<T> {
    pub max_positive: T,
    pub min_value: T,
    /// Patch centre `(t, x)` of the maximum.
    pub argmax: (T, T),
    pub argmin: (T, T),
    /// Sum of the unaveraged cell-step values.
    pub raw_sum: T,
    /// Patch values `(t, x, value)` at the sampled steps.
    pub samples: Vec<(T, T, T)>,
}

/// Step indices whose patches are exported.
pub(crate) fn sampled_steps<T: Scalar>(traj: &Trajectory<T>) -> Vec<usize> {
    let mut idx = traj.snapshot_indices(traj.n_snapshots);
    idx.retain(|&n| n + 1 < traj.n_steps());
    if idx.is_empty() && traj.n_steps() >= 2 {
        idx.push(0);
    }
    idx
}

/// Per-cell Kruzkov residual at step `n` (cell-integrated).
fn kruzkov_step<T: Scalar>(
    scheme: &Scheme<T>,
    traj: &Trajectory<T>,
    hats: &[T],
    n: usize,
    c: T,
) -> Vec<T> {
    let u0 = &traj.snapshots[n].values;
    let u1 = &traj.snapshots[n + 1].values;
    let nc = u0.len();
    let dx = scheme.grid.dx();
    let lam = dx / traj.dt;
    let g: Vec<T> = (0..=nc)
        .map(|e| {
            let ul = u0[e.saturating_sub(1)];
            let ur = u0[e.min(nc - 1)];
            scheme.edge_flux(e, ul.max(c), ur.max(c)) - scheme.edge_flux(e, ul.min(c), ur.min(c))
        })
        .collect();
    let mut r: Vec<T> = (0..nc)
        .map(|j| lam * ((u1[j] - c).abs() - (u0[j] - c).abs()) + g[j + 1] - g[j])
        .collect();
    for (i, &e) in scheme.interface_edges.iter().enumerate() {
        let pair = scheme.interface_pair(e).expect("interface edge");
        let fcc = scheme.edge_flux(e, c, c);
        let s = (hats[i] - c).sgn();
        r[e - 1] += s * (fcc - pair.minus(c));
        r[e] += s * (pair.plus(c) - fcc);
    }
    r
}

/// Per-cell conservation residual at step `n`.
fn conservation_step<T: Scalar>(scheme: &Scheme<T>, traj: &Trajectory<T>, n: usize) -> Vec<T> {
    let u0 = &traj.snapshots[n].values;
    let u1 = &traj.snapshots[n + 1].values;
    let f = scheme.fluxes(u0);
    let lam = scheme.grid.dx() / traj.dt;
    (0..u0.len())
        .map(|j| lam * (u1[j] - u0[j]) + f[j + 1] - f[j])
        .collect()
}

/// Kruzkov weights `(c, ½ S''(c) Δc)` on the midpoint grid of `vgrid`, plus `α`.
fn smooth_decomposition<T: Scalar>(entropy: &Entropy<T>, vgrid: &VGrid<T>) -> (T, Vec<(T, T)>) {
    let dv = vgrid.dv();
    let alpha = (entropy.deriv(vgrid.v_lo) + entropy.deriv(vgrid.v_hi)) * T::half();
    let w = (0..vgrid.n_v)
        .map(|m| {
            let c = vgrid.v_lo + dv * (T::from_usize_lossy(m) + T::half());
            (c, T::half() * entropy.second(c) * dv)
        })
        .filter(|(_, w)| *w != T::zero())
        .collect();
    (alpha, w)
}

pub(crate) fn aggregate<T: Scalar>(
    traj: &Trajectory<T>,
    sampled: &[usize],
    per_step: impl Fn(usize) -> Vec<T> + Sync,
) -> ResidualField<T> {
    let grid = traj.grid;
    let nc = grid.n_cells;
    let mut max_positive = T::neg_infinity();
    let mut min_value = T::infinity();
    let mut argmax = (T::zero(), T::zero());
    let mut argmin = (T::zero(), T::zero());
    let mut raw_sum = T::zero();
    let mut samples = Vec::new();
    let mut prev: Option<Vec<T>> = None;
    for n in 0..traj.n_steps() {
        let cur = per_step(n);
        raw_sum += cur.iter().copied().sum::<T>();
        if let Some(p) = prev {
            let t = T::from_usize_lossy(n) * traj.dt;
            for j in 0..nc.saturating_sub(1) {
                let v = (p[j] + p[j + 1] + cur[j] + cur[j + 1]) * T::lit(0.25);
                if v > max_positive {
                    max_positive = v;
                    argmax = (t, grid.edge(j + 1));
                }
                if v < min_value {
                    min_value = v;
                    argmin = (t, grid.edge(j + 1));
                }
                if sampled.binary_search(&(n - 1)).is_ok() {
                    samples.push((t, grid.edge(j + 1), v));
                }
            }
        }
        prev = Some(cur);
    }
    ResidualField {
        max_positive: max_positive.max(T::zero()),
        min_value: if min_value.is_finite() { min_value } else { T::zero() },
        argmax,
        argmin,
        raw_sum,
        samples,
    }
}

/// Patch-tested Kruzkov residual for constant `c`.
pub fn kruzkov_residual<T: Scalar>(
    traj: &Trajectory<T>,
    c: T,
    hat: &HatRule<T>,
) -> Result<ResidualField<T>, KineticError> {
    check_trajectory(traj)?;
    let scheme = traj.scheme().map_err(|e| KineticError::BadTrajectory(e.to_string()))?;
    let hats = hat.resolve(traj)?;
    Ok(aggregate(traj, &sampled_steps(traj), |n| {
        kruzkov_step(&scheme, traj, &hats[n], n, c)
    }))
}

/// Patch-tested residual of `entropy`; smooth entropies use `c_grid` Kruzkov nodes over the extended box.
pub fn entropy_residual<T: Scalar>(
    traj: &Trajectory<T>,
    entropy: &Entropy<T>,
    hat: &HatRule<T>,
    c_grid: usize,
) -> Result<ResidualField<T>, KineticError> {
    check_trajectory(traj)?;
    let scheme = traj.scheme().map_err(|e| KineticError::BadTrajectory(e.to_string()))?;
    let hats = hat.resolve(traj)?;
    let sampled = sampled_steps(traj);
    match entropy {
        Entropy::Kruzkov(c) => Ok(aggregate(traj, &sampled, |n| {
            kruzkov_step(&scheme, traj, &hats[n], n, *c)
        })),
        Entropy::Affine { alpha, .. } => Ok(aggregate(traj, &sampled, |n| {
            conservation_step(&scheme, traj, n)
                .into_iter()
                .map(|r| *alpha * r)
                .collect()
        })),
        Entropy::Smooth(_) => {
            let (lo, hi) = traj.model.state_box.extended();
            let vg = VGrid::new(lo, hi, c_grid.max(super::MIN_NV))?;
            let (alpha, weights) = smooth_decomposition(entropy, &vg);
            Ok(aggregate(traj, &sampled, |n| {
                let base: Vec<T> = conservation_step(&scheme, traj, n)
                    .into_iter()
                    .map(|r| alpha * r)
                    .collect();
                let parts: Vec<Vec<T>> = weights
                    .par_iter()
                    .map(|(c, w)| {
                        kruzkov_step(&scheme, traj, &hats[n], n, *c)
                            .into_iter()
                            .map(|r| r * *w)
                            .collect()
                    })
                    .collect();
                let mut out = base;
                for p in parts {
                    for (o, v) in out.iter_mut().zip(p) {
                        *o += v;
                    }
                }
                out
            }))
        }
    }
}

/// Largest positive Kruzkov residual over `n_c` constants spanning the extended box.
pub fn kruzkov_sweep<T: Scalar>(
    traj: &Trajectory<T>,
    hat: &HatRule<T>,
    n_c: usize,
) -> Result<(T, T), KineticError> {
    let (lo, hi) = traj.model.state_box.extended();
    let cs = crate::scalar::linspace(lo, hi, n_c.max(2));
    let results: Vec<ResidualField<T>> = cs
        .par_iter()
        .map(|&c| kruzkov_residual(traj, c, hat))
        .collect::<Result<_, _>>()?;
    let mut best = (T::zero(), cs[0]);
    for (r, &c) in results.iter().zip(&cs) {
        if r.max_positive > best.0 {
            best = (r.max_positive, c);
        }
    }
    Ok(best)
}

pub(crate) fn check_trajectory<T: Scalar>(traj: &Trajectory<T>) -> Result<(), KineticError> {
    if traj.snapshots.len() < 2 {
        return Err(KineticError::BadTrajectory("need at least two snapshots".into()));
    }
    for (n, s) in traj.snapshots.iter().enumerate() {
        let expect = T::from_usize_lossy(n) * traj.dt;
        if (s.time - expect).abs() > T::lit(1e-9) * (T::one() + expect.abs()) {
            return Err(KineticError::BadTrajectory(format!(
                "snapshot {n} at t = {} breaks the uniform spacing {}",
                s.time, traj.dt
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluxmodel::StateBox;

    fn burgers(k: f64) -> FluxModel<f64> {
        FluxModel::uniform(Kernel::Burgers, (-1.0, 1.0), k, StateBox::new(-1.0, 1.0).unwrap())
            .unwrap()
    }

    #[test]
    fn affine_eta_is_flux_difference() {
        let m = burgers(2.0);
        let p = entropy_pair(&m, Entropy::Affine { alpha: 1.0, beta: 3.0 }, 0).unwrap();
        for v in [-1.5, -0.2, 0.7, 1.9] {
            let expect = m.kernel.eval(2.0, v) - m.kernel.eval(2.0, 0.0);
            assert!((p.eta(v) - expect).abs() < 1e-12);
        }
        assert_eq!(p.eta(0.0), 0.0);
    }

    #[test]
    fn kruzkov_eta_burgers() {
        let m = burgers(2.0);
        let p = entropy_pair(&m, Entropy::Kruzkov(0.0), 0).unwrap();
        assert!((p.eta(1.0) - 1.0).abs() < 1e-12);
        assert!((p.eta(-0.5) + 0.25).abs() < 1e-12);
    }

    #[test]
    fn constant_entropy_has_zero_flux() {
        let m = burgers(1.0);
        let p = entropy_pair(&m, Entropy::Affine { alpha: 0.0, beta: 2.0 }, 0).unwrap();
        assert_eq!(p.eta(1.3), 0.0);
    }

    #[test]
    fn concave_entropy_rejected() {
        let m = burgers(1.0);
        let s = Entropy::Smooth(SmoothEntropy {
            name: "neg".into(),
            s: Arc::new(|v: f64| -v * v),
            ds: Arc::new(|v: f64| -2.0 * v),
            d2s: Arc::new(|_| -2.0),
        });
        assert!(matches!(
            entropy_pair(&m, s, 0),
            Err(KineticError::NotConvex { .. })
        ));
    }
}
