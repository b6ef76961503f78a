use crate::error::{invalid, Result};
use crate::flow::VectorField;
use crate::forms::PolyForm;

use super::family::SolutionFamily;

/// `m_i(β) = <(Φ_{-t_i})_* T_{t_i}, β>` for every grid time (rows) and panel form (columns).
pub fn pulled_back_pairings(f: &SolutionFamily, b: &VectorField, panel: &[PolyForm], tol: f64) -> Result<Vec<Vec<f64>>> {
    f.grid
        .iter()
        .zip(&f.currents)
        .map(|(&t, cur)| {
            let back = cur.pushforward_flow(b, -t, tol)?;
            panel.iter().map(|beta| back.pair(beta)).collect()
        })
        .collect()
}

/// `max_{i, β} |m_i(β) - m_0(β)|`; zero for any family transported by `b`.
pub fn constancy_diagnostic(f: &SolutionFamily, b: &VectorField, panel: &[PolyForm], tol: f64) -> Result<f64> {
    let m = pulled_back_pairings(f, b, panel, tol)?;
    let first = &m[0];
    Ok(m.iter().flat_map(|row| row.iter().zip(first).map(|(a, z)| (a - z).abs())).fold(0.0, f64::max))
}

/// `max_{i, β} |<T_{t_i}, β> - <S_{t_i}, β>|` for two families on one grid.
pub fn panel_difference(f: &SolutionFamily, g: &SolutionFamily, panel: &[PolyForm]) -> Result<f64> {
    if f.grid != g.grid {
        return Err(invalid("families live on different grids"));
    }
    let mut worst = 0.0f64;
    for (a, c) in f.currents.iter().zip(&g.currents) {
        for beta in panel {
            worst = worst.max((a.pair(beta)? - c.pair(beta)?).abs());
        }
    }
    Ok(worst)
}
