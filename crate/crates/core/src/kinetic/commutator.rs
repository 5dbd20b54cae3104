//! Mollified commutator `r_ε` and the mollifier limit.
//!
//! With `f = χ(v, u(x))` and `a = ∂uA`,
//! `r_ε = ∂x[a f_ε − (a f)_ε] + ∂v[a_I f_ε − (a_I f)_ε]`, where `a_I = −(A⁺ − A⁻)`
//! is the coefficient of the interface Dirac mass and `f = χ(v, û)` there.
//! The mass of `r_ε` is the x-variation of the first bracket (integrated in v)
//! plus the v-variation of the second at each interface.

use super::{chi, convolve_extended, KineticError, Mollifier, VGrid};
use crate::fluxmodel::FluxModel;
use crate::grid::CellField;
use crate::scalar::{simpson, Scalar};
use crate::solver1d::Scheme;

#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorReport<T> {
    pub eps: Vec<T>,
    pub masses: Vec<T>,
    /// Contribution of the x-derivative term.
    pub x_part: Vec<T>,
    /// Contribution of the interface term.
    pub interface_part: Vec<T>,
}

impl<T: Scalar> CommutatorReport<T> {
    /// `mass(ε_{i+1}) / mass(ε_i)` (zero when both vanish).
    pub fn ratios(&self) -> Vec<T> {
        self.masses
            .windows(2)
            .map(|w| if w[0] > T::zero() { w[1] / w[0] } else { T::zero() })
            .collect()
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.masses.windows(2).all(|w| w[1] < w[0])
    }
}

/// Values of `g(v_m)` for `m = −pad..n_v+pad` and the `[pad, pad+n_v]` window after mollification.
fn mollified_window<T: Scalar>(
    vg: &VGrid<T>,
    weights: &[T],
    g: impl Fn(T) -> T,
) -> (Vec<T>, Vec<T>) {
    let pad = weights.len() / 2;
    let dv = vg.dv();
    let nodes: Vec<T> = (0..vg.n_nodes() + 2 * pad)
        .map(|i| vg.v_lo + dv * (T::from_usize_lossy(i) - T::from_usize_lossy(pad)))
        .collect();
    let raw: Vec<T> = nodes.iter().map(|&v| g(v)).collect();
    let conv = convolve_extended(&raw, weights, T::zero(), T::zero());
    let window = pad..pad + vg.n_nodes();
    (raw[window.clone()].to_vec(), conv[window].to_vec())
}

/// `|r_ε|` mass for each `ε` in `eps_list` (strictly decreasing, each ≥ 4Δv).
pub fn commutator_decay<T: Scalar>(
    u: &CellField<T>,
    model: &FluxModel<T>,
    vgrid: &VGrid<T>,
    eps_list: &[T],
) -> Result<CommutatorReport<T>, KineticError> {
    let dv = vgrid.dv();
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(KineticError::GridTooCoarse(
            "eps_list must be strictly decreasing".into(),
        ));
    }
    if let Some(e) = eps_list.iter().find(|e| **e < T::lit(4.0) * dv) {
        return Err(KineticError::GridTooCoarse(format!(
            "epsilon {e} below 4·Δv = {}",
            T::lit(4.0) * dv
        )));
    }
    for &x in &u.values {
        vgrid.check(x)?;
    }
    let scheme = Scheme::new(model, u.grid).map_err(|e| KineticError::BadTrajectory(e.to_string()))?;
    let kernel = &model.kernel;
    let (lo, hi) = model.state_box.extended();

    let mut report = CommutatorReport {
        eps: eps_list.to_vec(),
        masses: Vec::new(),
        x_part: Vec::new(),
        interface_part: Vec::new(),
    };
    for &eps in eps_list {
        let w = Mollifier::new(eps).weights(dv);
        // commutator bracket per cell
        let g: Vec<Vec<T>> = (0..u.len())
            .map(|j| {
                let k = scheme.cell_k(j);
                let uj = u.values[j];
                let (_, f_eps) = mollified_window(vgrid, &w, |v| chi(v, uj));
                let (_, af_eps) = mollified_window(vgrid, &w, |v| kernel.deval(k, v) * chi(v, uj));
                (0..vgrid.n_nodes())
                    .map(|m| kernel.deval(k, vgrid.node(m)) * f_eps[m] - af_eps[m])
                    .collect()
            })
            .collect();
        let x_part: T = g
            .windows(2)
            .map(|p| {
                p[0].iter()
                    .zip(&p[1])
                    .map(|(a, b)| (*b - *a).abs())
                    .sum::<T>()
                    * dv
            })
            .sum();

        let mut iface = T::zero();
        for &e in &scheme.interface_edges {
            let pair = scheme.interface_pair(e).expect("interface edge");
            let sol = scheme
                .interface_solution(e, u.values[e - 1], u.values[e])
                .expect("interface edge");
            let hat = sol.u_hat.unwrap_or_else(|| clamp_mid(sol.trace_minus, lo, hi));
            let jump = |v: T| -(pair.plus(v) - pair.minus(v));
            let (_, f_eps) = mollified_window(vgrid, &w, |v| chi(v, hat));
            let (_, af_eps) = mollified_window(vgrid, &w, |v| jump(v) * chi(v, hat));
            let h: Vec<T> = (0..vgrid.n_nodes())
                .map(|m| jump(vgrid.node(m)) * f_eps[m] - af_eps[m])
                .collect();
            iface += h.windows(2).map(|p| (p[1] - p[0]).abs()).sum::<T>();
        }
        report.masses.push(x_part + iface);
        report.x_part.push(x_part);
        report.interface_part.push(iface);
    }
    Ok(report)
}

fn clamp_mid<T: Scalar>(x: T, lo: T, hi: T) -> T {
    x.max(lo).min(hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitReport<T> {
    pub eps: Vec<T>,
    pub values: Vec<T>,
    /// `h1(u) h2(u) χ(u, û)`.
    pub limit: T,
    pub errors: Vec<T>,
    /// `2 ω(ε) + Δv` with `ω` the combined sampled modulus and `Δv` the quadrature step.
    pub bounds: Vec<T>,
}

impl<T: Scalar> LimitReport<T> {
    pub fn pass(&self) -> bool {
        self.errors.iter().zip(&self.bounds).all(|(e, b)| e <= b)
    }
}

/// Sampled modulus of continuity of `h` over `[a, b]` at scale `delta`.
fn sampled_modulus<T: Scalar>(h: &dyn Fn(T) -> T, a: T, b: T, delta: T) -> T {
    let n = 200usize;
    let pts = crate::scalar::linspace(a, b, n + 1);
    let mut w = T::zero();
    for &x in &pts {
        for s in crate::scalar::linspace(T::zero(), delta, 9) {
            w = w.max((h(x + s) - h(x)).abs());
        }
    }
    w
}

fn sup_abs<T: Scalar>(h: &dyn Fn(T) -> T, a: T, b: T) -> T {
    crate::scalar::linspace(a, b, 401)
        .into_iter()
        .map(|x| h(x).abs())
        .fold(T::zero(), T::max)
}

/// `∫ h1(v) φ_ε(v − u) [h2 χ(·, û)] ∗ φ_ε(v) dv` by nested Simpson quadrature with `n_quad` panels.
pub fn mollifier_limit_check<T: Scalar>(
    h1: &dyn Fn(T) -> T,
    h2: &dyn Fn(T) -> T,
    u: T,
    u_hat: T,
    eps_list: &[T],
    n_quad: usize,
) -> LimitReport<T> {
    let limit = h1(u) * h2(u) * chi(u, u_hat);
    let n = n_quad.max(16);
    let mut report = LimitReport {
        eps: eps_list.to_vec(),
        values: Vec::new(),
        limit,
        errors: Vec::new(),
        bounds: Vec::new(),
    };
    for &eps in eps_list {
        let moll = Mollifier::new(eps);
        let half = eps * T::half();
        let inner = |v: T| {
            let a = v - half;
            let b = (v + half).min(u_hat);
            if b <= a {
                T::zero()
            } else {
                simpson(|w| h2(w) * moll.phi(v - w), a, b, n)
            }
        };
        let outer = |v: T| h1(v) * moll.phi(v - u) * inner(v);
        // split at û so the kink of the inner integral sits on a panel boundary
        let (a, b) = (u - half, u + half);
        let value = if u_hat > a && u_hat < b {
            simpson(outer, a, u_hat, n) + simpson(outer, u_hat, b, n)
        } else {
            simpson(outer, a, b, n)
        };
        let (lo, hi) = (u - eps, u + eps);
        let omega = (sup_abs(h1, lo, hi) * sampled_modulus(h2, lo, hi, eps))
            .max(sup_abs(h2, lo, hi) * sampled_modulus(h1, lo, hi, eps));
        let dv = eps / T::from_usize_lossy(n);
        report.values.push(value);
        report.errors.push((value - limit).abs());
        report.bounds.push(T::two() * omega + dv);
    }
    report
}
