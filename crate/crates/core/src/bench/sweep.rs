//! Mixture-versus-standard comparison tables over `(c_t, eps, r eps)` grids.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::accounting::{equivalent_epsilon, zeta_geometric_mixture, zeta_laplace_mixture, NoiseFamily};
use crate::analytics::{geomix_stats, integer_release_stats, lapmix_stats, standard_stats};
use crate::error::Result;
use crate::mechanism::{MechanismSpec, MixtureParams};

/// One comparison row. Laplace-family E|x| and variance describe the noise as
/// released on integer counts (rounded to the nearest integer); entropies of
/// the Laplace families are differential entropies of the continuous law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub c_t: f64,
    pub eps: f64,
    pub r_eps: f64,
    pub zeta_gm: f64,
    pub zeta_lm: f64,
    pub eps_lap: f64,
    pub e_gm: f64,
    pub e_lm: f64,
    pub e_geo: f64,
    pub e_lap: f64,
    pub var_gm: f64,
    pub var_lm: f64,
    pub var_geo: f64,
    pub var_lap: f64,
    pub h_gm: f64,
    pub h_lm: f64,
    pub h_geo: f64,
    pub h_lap: f64,
}

/// Column order of [`TableRow`] in CSV output.
pub const TABLE_COLUMNS: [&str; 18] = [
    "c_t", "eps", "r_eps", "zeta_gm", "zeta_lm", "eps_lap", "e_gm", "e_lm", "e_geo", "e_lap", "var_gm", "var_lm",
    "var_geo", "var_lap", "h_gm", "h_lm", "h_geo", "h_lap",
];

/// Row for one grid point; standard columns are evaluated at the matching budgets.
pub fn table_row(c_t: f64, eps: f64, r_eps: f64) -> Result<TableRow> {
    let params = MixtureParams::from_outer_epsilon(eps, r_eps, c_t)?;
    let zeta_gm = zeta_geometric_mixture(&params)?;
    let zeta_lm = zeta_laplace_mixture(&params);
    let eps_lap = equivalent_epsilon(zeta_lm, NoiseFamily::RoundedLaplace)?;
    let eps_geo = equivalent_epsilon(zeta_gm, NoiseFamily::Geometric)?;

    let gm = geomix_stats(&params)?;
    let lm_int = integer_release_stats(&MechanismSpec::LaplaceMixture(params))?;
    let lm = lapmix_stats(&params);
    let geo = standard_stats(&MechanismSpec::geometric(eps_geo)?)?;
    let lap_int = integer_release_stats(&MechanismSpec::laplace(eps_lap)?)?;
    let lap = standard_stats(&MechanismSpec::laplace(eps_lap)?)?;

    Ok(TableRow {
        c_t,
        eps,
        r_eps,
        zeta_gm,
        zeta_lm,
        eps_lap,
        e_gm: gm.mean_abs_noise,
        e_lm: lm_int.mean_abs_noise,
        e_geo: geo.mean_abs_noise,
        e_lap: lap_int.mean_abs_noise,
        var_gm: gm.variance,
        var_lm: lm_int.variance,
        var_geo: geo.variance,
        var_lap: lap_int.variance,
        h_gm: gm.entropy,
        h_lm: lm.entropy,
        h_geo: geo.entropy,
        h_lap: lap.entropy,
    })
}

pub fn table_sweep(grid: &[(f64, f64, f64)]) -> Result<Vec<TableRow>> {
    grid.iter().map(|&(c, e, re)| table_row(c, e, re)).collect()
}

/// The reference comparison grid: 69 `(c_t, eps, r eps)` points.
///
/// Inner budgets printed as 0.167 are 1/6, so their outer budgets are exact
/// multiples (1/3, 2/3, 5/6, 5/3).
pub fn table1_grid() -> Vec<(f64, f64, f64)> {
    let inner: [(f64, &[f64]); 5] = [
        (0.1, &[2.0, 4.0, 5.0, 10.0]),
        (1.0 / 6.0, &[2.0, 4.0, 5.0, 10.0]),
        (0.2, &[2.0, 4.0, 5.0, 10.0]),
        (0.25, &[2.0, 4.0, 5.0, 10.0]),
        (0.5, &[2.0, 4.0, 5.0]),
    ];
    let mut grid = Vec::new();
    for ct in [4.0, 5.0, 6.0, 7.0] {
        let mut points = Vec::new();
        for (eps, ratios) in inner {
            for &r in ratios {
                points.push((ct, eps, r * eps));
            }
        }
        // the last break point was only tabulated for the first three inner budgets
        if ct == 7.0 {
            points.truncate(12);
        }
        grid.extend(points);
    }
    grid
}

/// Writes rows as CSV with a header in [`TABLE_COLUMNS`] order.
pub fn write_table_csv<W: Write>(rows: &[TableRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(TABLE_COLUMNS)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
