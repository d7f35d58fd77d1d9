use crate::error::{Error, Result};
use crate::grid::{Grid2, LabelMask, LikelihoodField};

/// Fixed-point scale applied to every capacity before max-flow.
pub const CAPACITY_SCALE: f64 = (1u64 << 20) as f64;

/// Capacity standing in for an infinite terminal link.
pub(crate) const INFINITE_CAPACITY: i64 = 1 << 60;

#[inline]
pub fn quantize(cost: f64) -> i64 {
    (cost * CAPACITY_SCALE).round() as i64
}

/// Unary and pairwise terms of a binary labeling energy on a 4-connected grid.
///
/// `fg_cost[p]` is paid when `p` is labeled foreground, `bg_cost[p]` when it
/// is labeled background. Pairwise weights are paid when the two endpoints
/// take different labels. `horizontal` holds the edge `(x,y)-(x+1,y)` at
/// `y * (nx - 1) + x`; `vertical` holds `(x,y)-(x,y+1)` at `y * nx + x`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyField {
    nx: usize,
    ny: usize,
    fg_cost: Vec<f64>,
    bg_cost: Vec<f64>,
    horizontal: Vec<f64>,
    vertical: Vec<f64>,
}

fn check_costs(name: &str, v: &[f64]) -> Result<()> {
    match v.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
        Some(c) => Err(Error::InvalidArgument(format!(
            "{name} must be finite and >= 0, found {c}"
        ))),
        None => Ok(()),
    }
}

impl EnergyField {
    pub fn new(
        fg_cost: LikelihoodField,
        bg_cost: LikelihoodField,
        horizontal: Vec<f64>,
        vertical: Vec<f64>,
    ) -> Result<Self> {
        fg_cost.check_dims(&bg_cost, "background cost")?;
        let (nx, ny) = fg_cost.dims();
        let nh = nx.saturating_sub(1) * ny;
        let nv = nx * ny.saturating_sub(1);
        if horizontal.len() != nh || vertical.len() != nv {
            return Err(Error::DimensionMismatch(format!(
                "{nx}x{ny} grid needs {nh} horizontal and {nv} vertical weights, got {} and {}",
                horizontal.len(),
                vertical.len()
            )));
        }
        check_costs("foreground cost", fg_cost.data())?;
        check_costs("background cost", bg_cost.data())?;
        check_costs("pairwise weight", &horizontal)?;
        check_costs("pairwise weight", &vertical)?;
        Ok(Self {
            nx,
            ny,
            fg_cost: fg_cost.into_vec(),
            bg_cost: bg_cost.into_vec(),
            horizontal,
            vertical,
        })
    }

    /// Unary terms only.
    pub fn unary(fg_cost: LikelihoodField, bg_cost: LikelihoodField) -> Result<Self> {
        let (nx, ny) = fg_cost.dims();
        Self::new(
            fg_cost,
            bg_cost,
            vec![0.0; nx.saturating_sub(1) * ny],
            vec![0.0; nx * ny.saturating_sub(1)],
        )
    }

    /// Unary terms plus contrast-sensitive weights `smoothness_term(tau, I_p, I_q)`.
    pub fn with_contrast(
        fg_cost: LikelihoodField,
        bg_cost: LikelihoodField,
        pixels: &Grid2<f64>,
        tau: f64,
    ) -> Result<Self> {
        fg_cost.check_dims(pixels, "intensity image")?;
        let (h, v) = contrast_weights(pixels, tau)?;
        Self::new(fg_cost, bg_cost, h, v)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn fg_cost(&self) -> &[f64] {
        &self.fg_cost
    }

    pub fn bg_cost(&self) -> &[f64] {
        &self.bg_cost
    }

    pub fn horizontal(&self) -> &[f64] {
        &self.horizontal
    }

    pub fn vertical(&self) -> &[f64] {
        &self.vertical
    }

    /// Calls `f(p, q, w)` for every undirected 4-neighbour edge.
    pub fn for_each_edge(&self, mut f: impl FnMut(usize, usize, f64)) {
        let nx = self.nx;
        for y in 0..self.ny {
            for x in 0..nx.saturating_sub(1) {
                let p = y * nx + x;
                f(p, p + 1, self.horizontal[y * (nx - 1) + x]);
            }
        }
        for y in 0..self.ny.saturating_sub(1) {
            for x in 0..nx {
                let p = y * nx + x;
                f(p, p + nx, self.vertical[p]);
            }
        }
    }

    fn check_labeling(&self, labeling: &LabelMask) -> Result<()> {
        if labeling.dims() != (self.nx, self.ny) {
            return Err(Error::DimensionMismatch(format!(
                "labeling {:?} vs energy {}x{}",
                labeling.dims(),
                self.nx,
                self.ny
            )));
        }
        Ok(())
    }

    /// `Σ D_p(f_p) + Σ_{cut edges} w_pq`.
    pub fn energy_of(&self, labeling: &LabelMask) -> Result<f64> {
        self.check_labeling(labeling)?;
        let l = labeling.data();
        let mut e: f64 = (0..self.len())
            .map(|p| if l[p] { self.fg_cost[p] } else { self.bg_cost[p] })
            .sum();
        self.for_each_edge(|p, q, w| {
            if l[p] != l[q] {
                e += w;
            }
        });
        Ok(e)
    }

    /// [`energy_of`](Self::energy_of) on the fixed-point capacities the solver
    /// actually minimizes.
    pub fn quantized_energy(&self, labeling: &LabelMask) -> Result<i64> {
        self.check_labeling(labeling)?;
        let l = labeling.data();
        let mut e: i64 = (0..self.len())
            .map(|p| quantize(if l[p] { self.fg_cost[p] } else { self.bg_cost[p] }))
            .sum();
        self.for_each_edge(|p, q, w| {
            if l[p] != l[q] {
                e += quantize(w);
            }
        });
        Ok(e)
    }
}

/// `exp(-τ) · nll_intensity + (1 - exp(-τ)) · nll_prior`, pixelwise.
pub fn data_term(tau: f64, nll_intensity: &LikelihoodField, nll_prior: &LikelihoodField) -> Result<LikelihoodField> {
    if !(tau >= 1.0) {
        return Err(Error::InvalidArgument(format!("tau must be >= 1, got {tau}")));
    }
    nll_intensity.check_dims(nll_prior, "prior likelihood")?;
    let a = (-tau).exp();
    Ok(nll_intensity.zip_map(nll_prior, |i, p| a * i + (1.0 - a) * p))
}

/// Edge weight `τ · exp(-|I_p - I_q| / τ)`, charged when the edge is cut.
#[inline]
pub fn smoothness_term(tau: f64, ip: f64, iq: f64) -> f64 {
    tau * (-(ip - iq).abs() / tau).exp()
}

/// Horizontal and vertical [`smoothness_term`] weights for a whole slice.
pub fn contrast_weights(pixels: &Grid2<f64>, tau: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(tau >= 1.0) {
        return Err(Error::InvalidArgument(format!("tau must be >= 1, got {tau}")));
    }
    let (nx, ny) = pixels.dims();
    let mut h = Vec::with_capacity(nx.saturating_sub(1) * ny);
    for y in 0..ny {
        for x in 0..nx.saturating_sub(1) {
            h.push(smoothness_term(tau, *pixels.get(x, y), *pixels.get(x + 1, y)));
        }
    }
    let mut v = Vec::with_capacity(nx * ny.saturating_sub(1));
    for y in 0..ny.saturating_sub(1) {
        for x in 0..nx {
            v.push(smoothness_term(tau, *pixels.get(x, y), *pixels.get(x, y + 1)));
        }
    }
    Ok((h, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn data_term_examples() {
        let half = Grid2::filled(1, 1, -(0.5f64).ln());
        let d = data_term(1.0, &half, &half).unwrap();
        assert!((d.get(0, 0) - 0.693_147_180_559_945_3).abs() < 1e-12);
        let d = data_term(2.0, &Grid2::filled(1, 1, 0.0), &Grid2::filled(1, 1, 1.0)).unwrap();
        assert!((d.get(0, 0) - 0.864_664_716_763_387_3).abs() < 1e-12);
        let d = data_term(40.0, &Grid2::filled(1, 1, 9.0), &Grid2::filled(1, 1, 2.0)).unwrap();
        assert!((d.get(0, 0) - 2.0).abs() < 1e-12);
        assert!(data_term(0.5, &half, &half).is_err());
    }

    #[test]
    fn smoothness_examples() {
        assert_eq!(smoothness_term(1.0, 5.0, 5.0), 1.0);
        assert!((smoothness_term(2.0, 0.0, 2.0) - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn uniform_labelings_cut_nothing() {
        let fg = Grid2::from_fn(3, 2, |x, y| (x + y) as f64);
        let bg = Grid2::from_fn(3, 2, |x, _| 0.5 * x as f64);
        let pix = Grid2::from_fn(3, 2, |x, y| (x * y) as f64);
        let e = EnergyField::with_contrast(fg.clone(), bg.clone(), &pix, 1.0).unwrap();
        let all_bg = LabelMask::empty(3, 2);
        let all_fg = all_bg.not();
        assert_eq!(e.energy_of(&all_bg).unwrap(), bg.data().iter().sum::<f64>());
        assert_eq!(e.energy_of(&all_fg).unwrap(), fg.data().iter().sum::<f64>());
    }

    #[test]
    fn checkerboard_pays_every_edge() {
        let fg = Grid2::from_vec(2, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let bg = Grid2::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let e = EnergyField::new(fg, bg, vec![0.5, 0.25], vec![0.125, 0.0625]).unwrap();
        let cb = LabelMask::from_vec(2, 2, vec![true, false, false, true]).unwrap();
        // fg at (0,0) and (1,1), bg at (1,0) and (0,1), all four edges cut.
        let expected = 0.1 + 0.4 + 2.0 + 3.0 + 0.5 + 0.25 + 0.125 + 0.0625;
        assert!((e.energy_of(&cb).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn rejects_negative_or_misshapen_terms() {
        let z = Grid2::filled(2, 2, 0.0);
        assert!(EnergyField::unary(Grid2::filled(2, 2, -1.0), z.clone()).is_err());
        assert!(EnergyField::new(z.clone(), z.clone(), vec![0.0], vec![0.0, 0.0]).is_err());
        assert!(EnergyField::unary(z.clone(), Grid2::filled(2, 2, f64::NAN)).is_err());
    }
}
