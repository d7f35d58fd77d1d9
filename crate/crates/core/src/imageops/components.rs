use std::collections::VecDeque;

use crate::grid::{Grid2, LabelMask};

/// 4-connected component labeling. Label 0 is background; components are
/// numbered from 1 in scan order of their first pixel.
#[derive(Debug, Clone)]
pub struct Components {
    pub labels: Grid2<u32>,
    pub count: usize,
}

impl Components {
    pub fn mask(&self, id: u32) -> LabelMask {
        self.labels.map(|&l| l == id)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.count + 1];
        for &l in self.labels.data() {
            sizes[l as usize] += 1;
        }
        sizes.remove(0);
        sizes
    }

    /// Per-component pixel-centre centroids, indexed by `id - 1`.
    pub fn centroids(&self) -> Vec<(f64, f64)> {
        let mut acc = vec![(0.0, 0.0, 0usize); self.count];
        for (i, &l) in self.labels.data().iter().enumerate() {
            if l > 0 {
                let (x, y) = self.labels.coords(i);
                let a = &mut acc[l as usize - 1];
                a.0 += x as f64;
                a.1 += y as f64;
                a.2 += 1;
            }
        }
        acc.into_iter()
            .map(|(sx, sy, n)| (sx / n as f64, sy / n as f64))
            .collect()
    }

    pub fn touches_border(&self) -> Vec<bool> {
        let (nx, ny) = self.labels.dims();
        let mut out = vec![false; self.count];
        for (i, &l) in self.labels.data().iter().enumerate() {
            if l > 0 {
                let (x, y) = self.labels.coords(i);
                if x == 0 || y == 0 || x + 1 == nx || y + 1 == ny {
                    out[l as usize - 1] = true;
                }
            }
        }
        out
    }
}

pub fn connected_components(m: &LabelMask) -> Components {
    let mut labels = Grid2::filled(m.nx(), m.ny(), 0u32);
    let mut count = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..m.len() {
        if !m.data()[start] || labels.data()[start] != 0 {
            continue;
        }
        count += 1;
        labels.data_mut()[start] = count;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            for j in m.neighbors4(i) {
                if m.data()[j] && labels.data()[j] == 0 {
                    labels.data_mut()[j] = count;
                    queue.push_back(j);
                }
            }
        }
    }
    Components {
        labels,
        count: count as usize,
    }
}

/// The component nearest the centre of the whole foreground.
///
/// Components touching the image border are only considered when every
/// component does; among candidates the one whose centroid is nearest the
/// global foreground centroid wins (lowest id on ties).
pub fn inner_component(m: &LabelMask) -> LabelMask {
    let comps = connected_components(m);
    if comps.count == 0 {
        return LabelMask::empty(m.nx(), m.ny());
    }
    let global = m.centroid().expect("nonempty");
    let centroids = comps.centroids();
    let border = comps.touches_border();
    let enclosed_exists = border.iter().any(|&b| !b);
    let mut best: Option<(usize, f64)> = None;
    for (k, &(cx, cy)) in centroids.iter().enumerate() {
        if enclosed_exists && border[k] {
            continue;
        }
        let d = (cx - global.0).powi(2) + (cy - global.1).powi(2);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((k, d));
        }
    }
    comps.mask(best.expect("candidate").0 as u32 + 1)
}

/// Background regions not 4-connected to the image border become foreground.
pub fn fill_holes(m: &LabelMask) -> LabelMask {
    let (nx, ny) = m.dims();
    let mut outside = LabelMask::empty(nx, ny);
    let mut queue = VecDeque::new();
    for i in 0..m.len() {
        let (x, y) = m.coords(i);
        let on_border = x == 0 || y == 0 || x + 1 == nx || y + 1 == ny;
        if on_border && !m.data()[i] {
            outside.data_mut()[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        for j in m.neighbors4(i) {
            if !m.data()[j] && !outside.data()[j] {
                outside.data_mut()[j] = true;
                queue.push_back(j);
            }
        }
    }
    outside.not()
}

/// Background pixels enclosed by `m` (the holes that [`fill_holes`] closes).
pub fn holes(m: &LabelMask) -> LabelMask {
    fill_holes(m).and_not(m)
}

/// Keeps only the components of `m` that are 4-adjacent to, or overlap, `anchor`.
pub fn components_touching(m: &LabelMask, anchor: &LabelMask) -> LabelMask {
    let comps = connected_components(m);
    let mut keep = vec![false; comps.count + 1];
    for (i, &l) in comps.labels.data().iter().enumerate() {
        if l == 0 || keep[l as usize] {
            continue;
        }
        if anchor.data()[i] || m.neighbors4(i).any(|j| anchor.data()[j]) {
            keep[l as usize] = true;
        }
    }
    comps.labels.map(|&l| l > 0 && keep[l as usize])
}

pub fn largest_component(m: &LabelMask) -> LabelMask {
    let comps = connected_components(m);
    if comps.count == 0 {
        return LabelMask::empty(m.nx(), m.ny());
    }
    let sizes = comps.sizes();
    let best = sizes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(k, _)| k)
        .unwrap();
    comps.mask(best as u32 + 1)
}
