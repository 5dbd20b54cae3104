//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use disflux::fluxmodel::{FluxModel, Kernel, StateBox};
use disflux::grid::InitialData;

pub fn lwr(k_left: f64, k_right: f64) -> FluxModel<f64> {
    FluxModel::new(Kernel::Lwr, (-1.0, 1.0), vec![0.0], vec![k_left, k_right], StateBox::new(0.0, 1.0).unwrap())
        .unwrap()
}

pub fn burgers(k_left: f64, k_right: f64, u_min: f64) -> FluxModel<f64> {
    FluxModel::new(
        Kernel::Burgers,
        (-1.0, 1.0),
        vec![0.0],
        vec![k_left, k_right],
        StateBox::new(u_min, 1.0).unwrap(),
    )
    .unwrap()
}

pub fn burgers_uniform(k: f64, lo: f64, hi: f64, domain: (f64, f64)) -> FluxModel<f64> {
    FluxModel::uniform(Kernel::Burgers, domain, k, StateBox::new(lo, hi).unwrap()).unwrap()
}

/// Ten one-interface problems over several kernels and coefficient jumps.
pub fn admissible_cases() -> Vec<(FluxModel<f64>, InitialData)> {
    let lin = FluxModel::new(Kernel::Linear, (-1.0, 1.0), vec![0.0], vec![1.0, 2.0], StateBox::new(0.0, 1.0).unwrap())
        .unwrap();
    vec![
        (lwr(1.0, 2.0), InitialData::Riemann { x0: -0.5, left: 0.8, right: 0.2 }),
        (lwr(2.0, 1.0), InitialData::Riemann { x0: -0.3, left: 0.3, right: 0.9 }),
        (lwr(1.0, 2.0), InitialData::Riemann { x0: 0.0, left: 1.0, right: 0.0 }),
        (
            lwr(2.0, 1.0),
            InitialData::Bump { center: -0.4, half_width: 0.3, base: 0.2, amplitude: 0.6 },
        ),
        (burgers(1.0, 2.0, -1.0), InitialData::Riemann { x0: 0.0, left: 1.0, right: -1.0 }),
        (burgers(2.0, 1.0, -1.0), InitialData::Riemann { x0: 0.0, left: -0.5, right: 0.5 }),
        (burgers(1.0, 2.0, 0.0), InitialData::Riemann { x0: -0.3, left: 1.0, right: 0.0 }),
        (lin, InitialData::Steps { breaks: vec![-0.6, -0.3], values: vec![0.2, 0.9, 0.4] }),
        (
            burgers(1.0, 0.5, -1.0),
            InitialData::Bump { center: -0.3, half_width: 0.4, base: -0.2, amplitude: 0.9 },
        ),
        (lwr(1.5, 1.0), InitialData::Steps { breaks: vec![-0.5, 0.3], values: vec![0.1, 0.7, 0.3] }),
    ]
}

/// Stationary expansion shocks `−a | a` for `k·u²/2`, to be run frozen.
pub fn expansion_cases() -> Vec<(FluxModel<f64>, InitialData)> {
    [(1.0, 2.0), (2.0, 1.5), (1.0, 3.0)]
        .into_iter()
        .map(|(k, a)| {
            (
                burgers_uniform(k, -a, a, (-1.0, 1.0)),
                InitialData::Riemann { x0: 0.0, left: -a, right: a },
            )
        })
        .collect()
}

/// Entropy solution of `u_t + (u²/2)_x = 0` with Riemann data at `x = 0`, as a function of `x/t`.
pub fn burgers_riemann(ul: f64, ur: f64, xi: f64) -> f64 {
    if ul > ur {
        if xi < 0.5 * (ul + ur) {
            ul
        } else {
            ur
        }
    } else if xi <= ul {
        ul
    } else if xi >= ur {
        ur
    } else {
        xi
    }
}

/// Zero-speed Oleinik test for a jump `u⁻ | u⁺` of an x-independent flux `f`: the chord
/// slopes satisfy `(f(c) − f(u⁻))/(c − u⁻) ≥ 0 ≥ (f(c) − f(u⁺))/(c − u⁺)` on `n − 1`
/// interior points, written without the division so nearly equal states stay exact.
pub fn oleinik_stationary(f: &dyn Fn(f64) -> f64, um: f64, up: f64, n: usize) -> bool {
    let tol = 1e-10 * (1.0 + f(um).abs());
    if (f(um) - f(up)).abs() > tol {
        return false;
    }
    (1..n).all(|i| {
        let c = um + (up - um) * i as f64 / n as f64;
        let left = (f(c) - f(um)) * (c - um).signum();
        let right = (f(c) - f(up)) * (c - up).signum();
        left >= -tol && right <= tol
    })
}
