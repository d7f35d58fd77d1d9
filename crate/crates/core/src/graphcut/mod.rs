//! Binary labeling energies on pixel grids and their exact minimization.

mod energy;
mod maxflow;

pub use energy::{
    contrast_weights, data_term, quantize, smoothness_term, EnergyField, CAPACITY_SCALE,
};
pub use maxflow::FlowGraph;

use crate::error::Result;
use crate::grid::LabelMask;

use energy::INFINITE_CAPACITY;

/// Output of [`solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct CutSolution {
    pub labels: LabelMask,
    /// Maximum flow after removing the per-pixel constant `min(fg, bg)`.
    pub flow: i64,
    /// Minimum fixed-point energy; equals `Σ min(fg_q, bg_q) + flow`.
    pub energy: i64,
}

/// Globally minimal labeling of `e`, with `locked` pixels forced to
/// foreground. Ties resolve to background.
pub fn min_cut(e: &EnergyField, locked: Option<&LabelMask>) -> Result<LabelMask> {
    solve(e, locked).map(|s| s.labels)
}

pub fn solve(e: &EnergyField, locked: Option<&LabelMask>) -> Result<CutSolution> {
    let (nx, ny) = (e.nx(), e.ny());
    if let Some(l) = locked {
        if l.dims() != (nx, ny) {
            return Err(crate::Error::DimensionMismatch(format!(
                "locked mask {:?} vs energy {nx}x{ny}",
                l.dims()
            )));
        }
    }
    let n = nx * ny;
    // Source side is foreground: cutting s->p charges the background cost,
    // cutting p->t the foreground cost.
    let mut source_cap: Vec<i64> = e.bg_cost().iter().map(|&c| quantize(c)).collect();
    let sink_cap: Vec<i64> = e.fg_cost().iter().map(|&c| quantize(c)).collect();
    if let Some(l) = locked {
        for (cap, &lock) in source_cap.iter_mut().zip(l.data()) {
            if lock {
                *cap = INFINITE_CAPACITY;
            }
        }
    }
    let mut edges = Vec::with_capacity(2 * n);
    e.for_each_edge(|p, q, w| {
        let c = quantize(w);
        if c > 0 {
            edges.push((p, q, c));
        }
    });
    let constant: i64 = source_cap.iter().zip(&sink_cap).map(|(s, t)| *s.min(t)).sum();
    let (total, side) = FlowGraph::new(&source_cap, &sink_cap, &edges).solve();
    let flow = total - constant;
    let labels = LabelMask::from_vec(nx, ny, side)?;
    Ok(CutSolution {
        labels,
        flow,
        energy: total,
    })
}
