//! Plain CSV output. Floats use Rust's shortest round-trip formatting, so equal runs
//! give byte-identical files.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::contraction::ContractionReport;
use crate::germ::{GermReport, GermState, WSweepReport};
use crate::kinetic::{CommutatorReport, DefectMeasure, ResidualField};
use crate::scalar::Scalar;
use crate::solver1d::Trajectory;

pub fn write_table<I, R>(path: &Path, header: &[&str], rows: I) -> io::Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.into_iter().collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()
}

fn s<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

/// Shortest round-trip float text, switching to exponent form for tiny and huge values.
pub fn num<T: Scalar>(x: T) -> String {
    format!("{x:?}")
}

/// `(t, x_center, u)` on the unpadded domain at the reported snapshots.
pub fn write_snapshots<T: Scalar>(path: &Path, traj: &Trajectory<T>) -> io::Result<()> {
    let grid = traj.core_grid();
    let rows = traj
        .snapshot_indices(traj.n_snapshots)
        .into_iter()
        .flat_map(|n| {
            let f = traj.core_field(n);
            (0..f.len())
                .map(move |j| vec![num(f.time), num(grid.center(j)), num(f.values[j])])
                .collect::<Vec<_>>()
        });
    write_table(path, &["t", "x_center", "u"], rows)
}

/// `(t, interface_index, u_minus, u_plus, u_hat, flux)` for every step; `u_hat` is
/// empty when no connection was found.
pub fn write_traces<T: Scalar>(path: &Path, traj: &Trajectory<T>) -> io::Result<()> {
    let rows = traj.traces.iter().flatten().map(|tr| {
        vec![
            num(tr.t),
            s(tr.index),
            num(tr.u_minus),
            num(tr.u_plus),
            tr.u_hat.map(num).unwrap_or_default(),
            num(tr.flux),
        ]
    });
    write_table(
        path,
        &["t", "interface_index", "u_minus", "u_plus", "u_hat", "flux"],
        rows,
    )
}

/// `(t, x, v, value)` patch values of a defect measure.
pub fn write_defect<T: Scalar>(path: &Path, d: &DefectMeasure<T>) -> io::Result<()> {
    let rows = d
        .samples
        .iter()
        .map(|(t, x, v, m)| vec![num(*t), num(*x), num(*v), num(*m)]);
    write_table(path, &["t", "x", "v", "value"], rows)
}

pub fn write_defect_summary<T: Scalar>(path: &Path, d: &DefectMeasure<T>) -> io::Result<()> {
    let verdict = crate::contraction::Verdict::from_bool(d.is_nonnegative());
    write_table(
        path,
        &["total_mass", "min_value", "tol_neg", "n_v", "verdict"],
        [vec![
            num(d.total_mass),
            num(d.min_value),
            num(d.tol_neg),
            s(d.vgrid.n_v),
            s(verdict),
        ]],
    )
}

/// `(t, x, value)` patch values of an entropy residual.
pub fn write_residual<T: Scalar>(path: &Path, r: &ResidualField<T>) -> io::Result<()> {
    let rows = r.samples.iter().map(|(t, x, v)| vec![num(*t), num(*x), num(*v)]);
    write_table(path, &["t", "x", "value"], rows)
}

pub fn write_contraction<T: Scalar>(
    path: &Path,
    reports: &[ContractionReport<T>],
) -> io::Result<()> {
    let rows = reports.iter().enumerate().flat_map(|(p, r)| {
        r.times
            .iter()
            .zip(&r.l1_distances)
            .zip(&r.kinetic_distances)
            .map(move |((t, d), k)| vec![s(p), num(*t), num(*d), num(*k)])
            .collect::<Vec<_>>()
    });
    write_table(path, &["pair", "t", "l1_distance", "kinetic_distance"], rows)
}

pub fn write_contraction_summary<T: Scalar>(
    path: &Path,
    reports: &[ContractionReport<T>],
) -> io::Result<()> {
    let rows = reports.iter().enumerate().map(|(p, r)| {
        vec![
            s(p),
            num(r.max_increase),
            num(r.step_max_increase),
            num(r.slack_budget),
            num(r.c_slack),
            num(r.cavalieri_gap),
            s(r.verdict),
        ]
    });
    write_table(
        path,
        &[
            "pair",
            "max_increase",
            "step_max_increase",
            "slack_budget",
            "c_slack",
            "cavalieri_gap",
            "verdict",
        ],
        rows,
    )
}

pub const GERM_HEADER: [&str; 12] = [
    "kernel",
    "k_left",
    "k_right",
    "u_minus",
    "u_plus",
    "u_hat",
    "rh_residual",
    "admissible",
    "subcases",
    "violated",
    "worst_margin",
    "q_value",
];

/// One CSV row for a germ check; list-valued cells are `;`-separated.
pub fn germ_row<T: Scalar>(state: &GermState<T>, r: &GermReport<T>) -> Vec<String> {
    let subcases: Vec<String> = r.subcases.iter().map(|c| c.to_string()).collect();
    let violated: Vec<String> = r.violated_conditions.iter().map(|v| v.id.to_string()).collect();
    vec![
        state.pair.kernel.name().to_string(),
        num(state.pair.k_left),
        num(state.pair.k_right),
        num(state.u_minus),
        num(state.u_plus),
        num(state.u_hat),
        num(r.rh_residual),
        s(r.admissible),
        subcases.join(";"),
        violated.join(";"),
        num(r.worst_margin),
        num(r.q_value),
    ]
}

pub const W_SWEEP_HEADER: [&str; 9] = [
    "kernel",
    "k_left",
    "k_right",
    "n_pairs",
    "pool_size",
    "crossed_pairs",
    "max_w",
    "violations",
    "verdict",
];

pub fn w_sweep_row<T: Scalar>(kernel: &str, k_left: T, k_right: T, r: &WSweepReport<T>) -> Vec<String> {
    vec![
        kernel.to_string(),
        num(k_left),
        num(k_right),
        s(r.n_pairs),
        s(r.pool_size),
        s(r.crossed_pairs),
        num(r.max_w),
        s(r.violations),
        crate::contraction::Verdict::from_bool(r.violations == 0).to_string(),
    ]
}

pub fn write_commutator<T: Scalar>(path: &Path, r: &CommutatorReport<T>) -> io::Result<()> {
    let ratios = r.ratios();
    let rows = (0..r.eps.len()).map(|i| {
        vec![
            num(r.eps[i]),
            num(r.masses[i]),
            num(r.x_part[i]),
            num(r.interface_part[i]),
            if i == 0 { String::new() } else { num(ratios[i - 1]) },
        ]
    });
    write_table(path, &["eps", "mass", "x_part", "interface_part", "ratio"], rows)
}
