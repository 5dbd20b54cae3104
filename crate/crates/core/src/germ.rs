//! Pointwise interface admissibility for the vanishing-viscosity germ.
//!
//! A [`GermState`] is a triple `(u⁻, u⁺, û)` at one interface together with the
//! two one-sided kernels. Admissibility means the Rankine–Hugoniot balance
//! `A⁺(u⁺) = A⁻(u⁻)` plus every Kruzkov-type implication of the subcase that the
//! ordering of `(u⁻, u⁺, û)` selects. Ties select every subcase whose closed
//! ordering holds, and all of them must pass.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::fluxmodel::{FluxError, FluxModel, InterfacePair, Side};
use crate::kinetic::chi;
use crate::scalar::{bisect, linspace, Scalar};

/// Absolute tolerance on the subcase inequalities (scaled by `1 + |F|`).
pub const TOL_INEQ: f64 = 1e-12;
/// Absolute tolerance on the Rankine–Hugoniot residual.
pub const TOL_RH: f64 = 1e-9;
/// Smallest c-grid the checker uses.
pub const MIN_C_GRID: usize = 64;
/// Smallest û candidate grid for [`find_connections`].
pub const MIN_CANDIDATE_GRID: usize = 128;
/// Threshold above which `W` counts as a sign violation.
pub const TOL_W: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GermError {
    #[error("states belong to different interfaces")]
    MismatchedInterface,
    #[error(transparent)]
    Flux(#[from] FluxError),
    #[error("no admissible states could be sampled ({0})")]
    EmptyPool(String),
}

/// Inequality tolerance for scalar type `T`, floored at a few ulps for `f32`.
pub fn tol_ineq<T: Scalar>() -> T {
    T::lit(TOL_INEQ).max(T::lit(64.0) * T::epsilon())
}

pub fn tol_rh<T: Scalar>() -> T {
    T::lit(TOL_RH).max(T::lit(1e3) * T::epsilon())
}

#[derive(Debug, Clone)]
pub struct GermState<T> {
    pub u_minus: T,
    pub u_plus: T,
    pub u_hat: T,
    pub pair: InterfacePair<T>,
}

impl<T: Scalar> GermState<T> {
    pub fn new(pair: InterfacePair<T>, u_minus: T, u_plus: T, u_hat: T) -> Self {
        Self {
            u_minus,
            u_plus,
            u_hat,
            pair,
        }
    }

    /// State at interface `index` of `model`, with every value checked against the extended box.
    pub fn at_interface(
        model: &FluxModel<T>,
        index: usize,
        u_minus: T,
        u_plus: T,
        u_hat: T,
    ) -> Result<Self, FluxError> {
        for u in [u_minus, u_plus, u_hat] {
            model.state_box.check_extended(u)?;
        }
        model.side_coefficient(index, Side::Left)?;
        Ok(Self::new(model.interface_pair(index)?, u_minus, u_plus, u_hat))
    }

    #[inline]
    pub fn a_minus(&self, u: T) -> T {
        self.pair.minus(u)
    }

    #[inline]
    pub fn a_plus(&self, u: T) -> T {
        self.pair.plus(u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subcase {
    S1a,
    S1b,
    S1c,
    S2a,
    S2b,
    S2c,
}

impl fmt::Display for Subcase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Subcase::S1a => "1a",
            Subcase::S1b => "1b",
            Subcase::S1c => "1c",
            Subcase::S2a => "2a",
            Subcase::S2b => "2b",
            Subcase::S2c => "2c",
        };
        f.write_str(s)
    }
}

/// One implication `c ∈ [lo, hi] ⇒ lhs ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConditionId {
    pub subcase: Subcase,
    /// Roman numeral index 1..=6.
    pub item: u8,
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const ROMAN: [&str; 6] = ["i", "ii", "iii", "iv", "v", "vi"];
        write!(f, "{}({})", self.subcase, ROMAN[(self.item - 1) as usize])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation<T> {
    pub id: ConditionId,
    /// Largest `lhs − rhs` seen on the interval.
    pub margin: T,
    pub at_c: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GermReport<T> {
    pub rh_residual: T,
    pub rh_ok: bool,
    pub admissible: bool,
    pub subcases: Vec<Subcase>,
    pub violated_conditions: Vec<Violation<T>>,
    /// Largest `lhs − rhs` over all checked conditions (≤ 0 up to tolerance when admissible).
    pub worst_margin: T,
    pub q_value: T,
}

#[derive(Debug, Clone, Copy)]
enum Ineq {
    PlusLeMinus,
    PlusLePlusTrace,
    MinusLeMinusTrace,
    PlusTraceLePlus,
    MinusTraceLeMinus,
    MinusLePlus,
}

#[derive(Debug, Clone, Copy)]
enum End {
    Minus,
    Plus,
    Hat,
}

struct Condition {
    id: ConditionId,
    interval: (End, End),
    ineq: Ineq,
}

const fn cond(subcase: Subcase, item: u8, lo: End, hi: End, ineq: Ineq) -> Condition {
    Condition {
        id: ConditionId { subcase, item },
        interval: (lo, hi),
        ineq,
    }
}

use End::{Hat, Minus, Plus};
use Ineq::*;

static CASE_1A: [Condition; 2] = [
    cond(Subcase::S1a, 1, Minus, Hat, PlusLeMinus),
    cond(Subcase::S1a, 2, Plus, Minus, PlusLePlusTrace),
];
static CASE_1B: [Condition; 2] = [
    cond(Subcase::S1b, 3, Hat, Minus, MinusLeMinusTrace),
    cond(Subcase::S1b, 4, Plus, Hat, PlusLePlusTrace),
];
static CASE_1C: [Condition; 2] = [
    cond(Subcase::S1c, 5, Plus, Minus, MinusLeMinusTrace),
    cond(Subcase::S1c, 6, Hat, Plus, MinusLePlus),
];
static CASE_2A: [Condition; 2] = [
    cond(Subcase::S2a, 1, Plus, Hat, PlusLeMinus),
    cond(Subcase::S2a, 2, Minus, Plus, MinusTraceLeMinus),
];
static CASE_2B: [Condition; 2] = [
    cond(Subcase::S2b, 3, Hat, Plus, PlusTraceLePlus),
    cond(Subcase::S2b, 4, Minus, Hat, MinusTraceLeMinus),
];
static CASE_2C: [Condition; 2] = [
    cond(Subcase::S2c, 5, Minus, Plus, PlusTraceLePlus),
    cond(Subcase::S2c, 6, Hat, Minus, MinusLePlus),
];

fn conditions_of(s: Subcase) -> &'static [Condition; 2] {
    match s {
        Subcase::S1a => &CASE_1A,
        Subcase::S1b => &CASE_1B,
        Subcase::S1c => &CASE_1C,
        Subcase::S2a => &CASE_2A,
        Subcase::S2b => &CASE_2B,
        Subcase::S2c => &CASE_2C,
    }
}

/// Every subcase whose closed ordering of `(u⁻, u⁺, û)` holds.
pub fn applicable_subcases<T: Scalar>(u_minus: T, u_plus: T, u_hat: T) -> Vec<Subcase> {
    let (m, p, h) = (u_minus, u_plus, u_hat);
    let mut out = Vec::with_capacity(6);
    if p <= m && m <= h {
        out.push(Subcase::S1a);
    }
    if p <= h && h <= m {
        out.push(Subcase::S1b);
    }
    if h <= p && p <= m {
        out.push(Subcase::S1c);
    }
    if m <= p && p <= h {
        out.push(Subcase::S2a);
    }
    if m <= h && h <= p {
        out.push(Subcase::S2b);
    }
    if h <= m && m <= p {
        out.push(Subcase::S2c);
    }
    out
}

pub fn rh_residual<T: Scalar>(s: &GermState<T>) -> T {
    (s.a_plus(s.u_plus) - s.a_minus(s.u_minus)).abs()
}

/// Critical points of both kernels and crossings of `A⁺ − A⁻` in `(lo, hi)`; the
/// inequalities can only become tight there or at the interval ends.
fn special_points<T: Scalar>(pair: &InterfacePair<T>, lo: T, hi: T) -> Vec<T> {
    let mut pts = Vec::new();
    if lo < hi {
        pts.extend(pair.kernel.critical_points(pair.k_left, lo, hi));
        pts.extend(pair.kernel.critical_points(pair.k_right, lo, hi));
        pts.extend(pair.crossings(lo, hi));
    }
    pts
}

fn probe_points<T: Scalar>(base: &[T], special: &[T], lo: T, hi: T, n: usize) -> Vec<T> {
    let mut pts = if lo == hi {
        vec![lo]
    } else {
        linspace(lo, hi, n)
    };
    pts.extend(
        base.iter()
            .chain(special)
            .copied()
            .filter(|c| *c >= lo && *c <= hi),
    );
    pts
}

/// Full admissibility report. Grids below [`MIN_C_GRID`] points are raised to it.
pub fn is_admissible<T: Scalar>(s: &GermState<T>, c_grid: usize) -> GermReport<T> {
    let lo = s.u_minus.min(s.u_plus).min(s.u_hat);
    let hi = s.u_minus.max(s.u_plus).max(s.u_hat);
    admissibility_with(s, c_grid, &special_points(&s.pair, lo, hi))
}

fn admissibility_with<T: Scalar>(s: &GermState<T>, c_grid: usize, special: &[T]) -> GermReport<T> {
    let n = c_grid.max(MIN_C_GRID);
    let rh = rh_residual(s);
    let rh_ok = rh <= tol_rh::<T>() * (T::one() + s.a_minus(s.u_minus).abs());
    let subcases = applicable_subcases(s.u_minus, s.u_plus, s.u_hat);
    let tol = tol_ineq::<T>();
    let ap_trace = s.a_plus(s.u_plus);
    let am_trace = s.a_minus(s.u_minus);
    let base = [s.u_minus, s.u_plus, s.u_hat];

    let mut worst = T::neg_infinity();
    let mut violations: Vec<Violation<T>> = Vec::new();
    for sc in &subcases {
        for c in conditions_of(*sc) {
            let pick = |e: End| match e {
                End::Minus => s.u_minus,
                End::Plus => s.u_plus,
                End::Hat => s.u_hat,
            };
            let (lo, hi) = (pick(c.interval.0), pick(c.interval.1));
            let mut cw = T::neg_infinity();
            let mut cw_at = lo;
            let mut violated = false;
            for x in probe_points(&base, special, lo, hi, n) {
                let (lhs, rhs) = match c.ineq {
                    PlusLeMinus => (s.a_plus(x), s.a_minus(x)),
                    PlusLePlusTrace => (s.a_plus(x), ap_trace),
                    MinusLeMinusTrace => (s.a_minus(x), am_trace),
                    PlusTraceLePlus => (ap_trace, s.a_plus(x)),
                    MinusTraceLeMinus => (am_trace, s.a_minus(x)),
                    MinusLePlus => (s.a_minus(x), s.a_plus(x)),
                };
                let margin = lhs - rhs;
                if margin > tol * (T::one() + lhs.abs().max(rhs.abs())) {
                    violated = true;
                }
                if margin > cw {
                    cw = margin;
                    cw_at = x;
                }
            }
            worst = worst.max(cw);
            if violated {
                violations.push(Violation {
                    id: c.id,
                    margin: cw,
                    at_c: cw_at,
                });
            }
        }
    }
    if worst == T::neg_infinity() {
        worst = T::zero();
    }
    GermReport {
        rh_residual: rh,
        rh_ok,
        admissible: rh_ok && violations.is_empty(),
        subcases,
        violated_conditions: violations,
        worst_margin: worst,
        q_value: q_value(s),
    }
}

/// All û candidates on a uniform grid over `[lo, hi]` (plus `u⁻`, `u⁺` and the kernels'
/// critical points) for which the state is admissible. Empty when RH fails.
pub fn find_connections<T: Scalar>(
    pair: &InterfacePair<T>,
    u_minus: T,
    u_plus: T,
    lo: T,
    hi: T,
    candidate_grid: usize,
) -> Vec<T> {
    let probe = GermState::new(pair.clone(), u_minus, u_plus, u_minus);
    if rh_residual(&probe) > tol_rh::<T>() * (T::one() + probe.a_minus(u_minus).abs()) {
        return Vec::new();
    }
    let mut cands = linspace(lo, hi, candidate_grid.max(MIN_CANDIDATE_GRID));
    cands.extend([u_minus, u_plus].into_iter().filter(|u| *u >= lo && *u <= hi));
    cands.extend(pair.kernel.critical_points(pair.k_left, lo, hi));
    cands.extend(pair.kernel.critical_points(pair.k_right, lo, hi));
    cands.sort_by(|a, b| a.partial_cmp(b).expect("finite candidates"));
    cands.dedup();
    let special = special_points(
        pair,
        lo.min(u_minus).min(u_plus),
        hi.max(u_minus).max(u_plus),
    );
    cands
        .into_iter()
        .filter(|&h| {
            let s = GermState::new(pair.clone(), u_minus, u_plus, h);
            admissibility_with(&s, MIN_C_GRID, &special).admissible
        })
        .collect()
}

/// The eight-term χ-weighted combination `Q(u⁻, u⁺, û)`.
pub fn q_value<T: Scalar>(s: &GermState<T>) -> T {
    let (m, p, h) = (s.u_minus, s.u_plus, s.u_hat);
    let chi_mp = chi(m, p);
    let chi_pm = chi(p, m);
    let chi_ph = chi(p, h);
    let chi_mh = chi(m, h);
    let jump_m = s.a_plus(m) - s.a_minus(m);
    let jump_p = s.a_plus(p) - s.a_minus(p);
    // eight terms grouped by the flux jump they multiply
    (chi_mp - chi_mh) * jump_m + (chi_pm - chi_ph) * jump_p
}

/// Interface dissipation `W(u1, u2)` for two states at the same interface.
pub fn w_value<T: Scalar>(s1: &GermState<T>, s2: &GermState<T>) -> Result<T, GermError> {
    if !s1.pair.same_as(&s2.pair) {
        return Err(GermError::MismatchedInterface);
    }
    let two = T::two();
    let b1 = -two * chi(s1.u_plus, s2.u_plus) + two * chi(s1.u_minus, s2.u_minus);
    let b2 = -two * chi(s2.u_plus, s1.u_plus) + two * chi(s2.u_minus, s1.u_minus);
    Ok(s1.a_plus(s1.u_plus) * b1 + s1.a_plus(s2.u_plus) * b2)
}

/// All `w` in `[lo, hi]` with `A⁺(w) = target`, by sign scan and bisection.
pub fn rh_partners<T: Scalar>(pair: &InterfacePair<T>, target: T, lo: T, hi: T) -> Vec<T> {
    let g = |w: T| pair.plus(w) - target;
    let pts = linspace(lo, hi, 513);
    let mut out = Vec::new();
    for (i, w) in pts.windows(2).enumerate() {
        let (a, b) = (g(w[0]), g(w[1]));
        if a == T::zero() {
            if i == 0 || out.last() != Some(&w[0]) {
                out.push(w[0]);
            }
        } else if a.sgn() * b.sgn() < T::zero() {
            if let Some(r) = bisect(g, w[0], w[1]) {
                out.push(r);
            }
        }
    }
    if g(hi) == T::zero() && out.last() != Some(&hi) {
        out.push(hi);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub n_samples: usize,
    pub pool_size: usize,
    pub seed: u64,
    pub candidate_grid: usize,
}

impl SweepConfig {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        Self {
            n_samples,
            pool_size: 4000,
            seed,
            candidate_grid: MIN_CANDIDATE_GRID,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WSweepReport<T> {
    pub n_pairs: usize,
    pub pool_size: usize,
    /// Pairs where `u⁻` and `u⁺` are ordered differently between the two states.
    pub crossed_pairs: usize,
    pub max_w: T,
    pub violations: usize,
}

fn pool_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Random admissible states: `u⁻` uniform in `[lo, hi]`, `u⁺` an RH partner, û drawn
/// from the admissible connections. Deterministic in `seed`.
pub fn sample_admissible_pool<T: Scalar>(
    pair: &InterfacePair<T>,
    lo: T,
    hi: T,
    size: usize,
    seed: u64,
    candidate_grid: usize,
) -> Vec<GermState<T>> {
    let (lo64, hi64) = (lo.as_f64(), hi.as_f64());
    (0..size.saturating_mul(4) as u64)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = pool_rng(seed, i);
            let um = T::lit(rng.gen_range(lo64..=hi64));
            let partners = rh_partners(pair, pair.minus(um), lo, hi);
            if partners.is_empty() {
                return None;
            }
            let up = partners[rng.gen_range(0..partners.len())];
            let hats = find_connections(pair, um, up, lo, hi, candidate_grid);
            if hats.is_empty() {
                return None;
            }
            let uh = hats[rng.gen_range(0..hats.len())];
            Some(GermState::new(pair.clone(), um, up, uh))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .take(size)
        .collect()
}

/// Sign sweep of `W` over random pairs drawn from a pool of admissible states.
pub fn w_sign_sweep<T: Scalar>(
    pair: &InterfacePair<T>,
    lo: T,
    hi: T,
    cfg: &SweepConfig,
) -> Result<WSweepReport<T>, GermError> {
    let pool = sample_admissible_pool(pair, lo, hi, cfg.pool_size, cfg.seed, cfg.candidate_grid);
    if pool.is_empty() {
        return Err(GermError::EmptyPool(format!(
            "k_left={}, k_right={}, box [{lo}, {hi}]",
            pair.k_left, pair.k_right
        )));
    }
    w_sweep_over_pool(&pool, cfg.n_samples, cfg.seed)
}

/// `W` over `n_pairs` random pairs from `pool`; aggregation is by sample index.
pub fn w_sweep_over_pool<T: Scalar>(
    pool: &[GermState<T>],
    n_pairs: usize,
    seed: u64,
) -> Result<WSweepReport<T>, GermError> {
    let stream_base = 1u64 << 40;
    let tol = T::lit(TOL_W);
    let results: Vec<(T, bool)> = (0..n_pairs as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = pool_rng(seed, stream_base + i);
            let a = &pool[rng.gen_range(0..pool.len())];
            let b = &pool[rng.gen_range(0..pool.len())];
            let w = w_value(a, b)?;
            let crossed = (a.u_plus - b.u_plus).sgn() != (a.u_minus - b.u_minus).sgn();
            Ok((w, crossed))
        })
        .collect::<Result<_, GermError>>()?;
    let max_w = results
        .iter()
        .map(|r| r.0)
        .fold(T::neg_infinity(), T::max);
    Ok(WSweepReport {
        n_pairs,
        pool_size: pool.len(),
        crossed_pairs: results.iter().filter(|r| r.1).count(),
        max_w: if n_pairs == 0 { T::zero() } else { max_w },
        violations: results.iter().filter(|r| r.0 > tol).count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QSummary<T> {
    pub n: usize,
    pub min: T,
    pub max: T,
    pub mean: T,
    pub n_positive: usize,
    pub n_negative: usize,
}

/// Empirical distribution of `Q` over random admissible states. No sign is asserted.
pub fn q_distribution<T: Scalar>(pool: &[GermState<T>]) -> QSummary<T> {
    let qs: Vec<T> = pool.iter().map(q_value).collect();
    let n = qs.len();
    let tol = tol_ineq::<T>();
    QSummary {
        n,
        min: qs.iter().copied().fold(T::infinity(), T::min),
        max: qs.iter().copied().fold(T::neg_infinity(), T::max),
        mean: if n == 0 {
            T::zero()
        } else {
            qs.iter().copied().sum::<T>() / T::from_usize_lossy(n)
        },
        n_positive: qs.iter().filter(|q| **q > tol).count(),
        n_negative: qs.iter().filter(|q| **q < -tol).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluxmodel::Kernel;

    fn lwr12() -> InterfacePair<f64> {
        InterfacePair {
            kernel: Kernel::Lwr,
            k_left: 1.0,
            k_right: 2.0,
        }
    }

    fn burgers() -> InterfacePair<f64> {
        InterfacePair::uniform(Kernel::Burgers, 1.0)
    }

    #[test]
    fn rh_examples() {
        let p = lwr12();
        let up = (1.0 - 0.5f64.sqrt()) / 2.0;
        assert!(rh_residual(&GermState::new(p.clone(), 0.5, up, 0.5)) < 1e-9);
        let r = rh_residual(&GermState::new(p, 0.5, 0.5, 0.5));
        assert!((r - 0.25).abs() < 1e-15);
        assert_eq!(rh_residual(&GermState::new(burgers(), 0.3, 0.3, 0.0)), 0.0);
    }

    #[test]
    fn constant_state_is_admissible() {
        let r = is_admissible(&GermState::new(lwr12(), 0.0, 0.0, 0.0), 64);
        assert!(r.admissible);
        assert_eq!(r.worst_margin, 0.0);
        assert_eq!(r.subcases.len(), 6);
    }

    #[test]
    fn burgers_lax_and_expansion_shocks() {
        let b = burgers();
        let hats = find_connections(&b, 1.0, -1.0, -2.0, 2.0, 128);
        assert!(!hats.is_empty());
        for h in [-1.0, 1.0, 0.0] {
            assert!(is_admissible(&GermState::new(b.clone(), 1.0, -1.0, h), 64).admissible);
        }
        for h in [-1.0, 0.0, 1.0, 2.0] {
            let r = is_admissible(&GermState::new(b.clone(), -1.0, 1.0, h), 64);
            assert!(!r.admissible);
            assert!(r
                .violated_conditions
                .iter()
                .all(|v| matches!(v.id.subcase, Subcase::S2a | Subcase::S2b | Subcase::S2c)));
        }
        assert!(find_connections(&b, -1.0, 1.0, -2.0, 2.0, 128).is_empty());
    }

    #[test]
    fn rh_violating_pair_has_no_connection() {
        assert!(find_connections(&lwr12(), 0.5, 0.5, -1.0, 2.0, 128).is_empty());
        assert!(find_connections(&lwr12(), 0.0, 0.0, -1.0, 2.0, 128).contains(&0.0));
    }

    #[test]
    fn q_and_w_vanish_on_diagonal() {
        let s = GermState::new(lwr12(), 0.3, 0.3, 0.3);
        assert_eq!(q_value(&s), 0.0);
        let s = GermState::new(lwr12(), 0.5, 0.146, 0.7);
        assert_eq!(w_value(&s, &s).unwrap(), 0.0);
        let t = GermState::new(burgers(), 0.5, 0.146, 0.7);
        assert_eq!(w_value(&s, &t), Err(GermError::MismatchedInterface));
    }

    #[test]
    fn condition_labels() {
        let id = ConditionId {
            subcase: Subcase::S2c,
            item: 6,
        };
        assert_eq!(id.to_string(), "2c(vi)");
    }

    #[test]
    fn rh_partners_lwr() {
        let p = lwr12();
        let r = rh_partners(&p, 0.25, -1.0, 2.0);
        assert_eq!(r.len(), 2);
        assert!((r[0] - (1.0 - 0.5f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!((r[1] - (1.0 + 0.5f64.sqrt()) / 2.0).abs() < 1e-12);
    }
}
