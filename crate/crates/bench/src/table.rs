//! CSV emission of the solved threshold-multiplier table.

use std::io::Write;

use finite_bandits::bnormal::BNormalTable;
use finite_bandits::Result;

/// Solves the multiplier for every (delta, pi) cell and writes the table.
/// Grids default to the published layout when empty.
pub fn emit_bnormal_table<W: Write>(
    deltas: Vec<f64>,
    pis: Vec<f64>,
    writer: W,
) -> Result<BNormalTable> {
    let deltas = if deltas.is_empty() { BNormalTable::default_delta_grid() } else { deltas };
    let pis = if pis.is_empty() { BNormalTable::default_pi_grid() } else { pis };
    let table = BNormalTable::compute(deltas, pis)?;
    table.to_csv(writer)?;
    Ok(table)
}
