use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regular grid; cell `(col, row)` is centred at
/// `(origin_x + (col + ½)·cell_size, origin_y + (row + ½)·cell_size)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin_x: f64,
    pub origin_y: f64,
    pub cell_size: f64,
    pub n_cols: usize,
    pub n_rows: usize,
}

impl GridSpec {
    /// Smallest grid on `cell_size` steps from the padded bounding box's
    /// lower-left corner that covers every point plus `pad` on each side.
    pub fn covering(points: &[(f64, f64)], pad: f64, cell_size: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("no points to cover".into()));
        }
        if !(cell_size > 0.0 && cell_size.is_finite()) || !(pad >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cell size {cell_size} and padding {pad} must be positive"
            )));
        }
        let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for &(x, y) in points {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        let (ox, oy) = (x0 - pad, y0 - pad);
        let n_cols = (((x1 + pad) - ox) / cell_size).ceil().max(1.0) as usize;
        let n_rows = (((y1 + pad) - oy) / cell_size).ceil().max(1.0) as usize;
        Ok(Self {
            origin_x: ox,
            origin_y: oy,
            cell_size,
            n_cols,
            n_rows,
        })
    }

    pub fn center(&self, col: usize, row: usize) -> (f64, f64) {
        (
            self.origin_x + (col as f64 + 0.5) * self.cell_size,
            self.origin_y + (row as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn n_cells(&self) -> usize {
        self.n_cols * self.n_rows
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.origin_x
            && y >= self.origin_y
            && x <= self.origin_x + self.n_cols as f64 * self.cell_size
            && y <= self.origin_y + self.n_rows as f64 * self.cell_size
    }

    fn validate(&self) -> Result<()> {
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) || self.n_cols == 0 || self.n_rows == 0 {
            return Err(Error::InvalidParameter(format!("degenerate grid {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySurface {
    pub grid: GridSpec,
    /// Row-major densities per square unit, row 0 at the bottom.
    pub values: Vec<f64>,
    pub bandwidth: f64,
    pub point_count: usize,
    /// Kernel radius beyond which contributions were dropped, if any.
    pub cutoff: Option<f64>,
}

impl DensitySurface {
    pub fn value(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.grid.n_cols + col]
    }

    /// Riemann sum `Σ value × cell²`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_size * self.grid.cell_size
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct KdeOptions {
    /// Drop kernel contributions farther than this many bandwidths. The
    /// Gaussian mass beyond radius `r·h` is `exp(−r²/2)`, about 1.5e-8 at 6.
    pub cutoff_bandwidths: Option<f64>,
}

/// Gaussian kernel density estimate on `grid`:
/// `f(g) = (1/n) Σ (1 / 2πh²) exp(−‖g − p‖² / 2h²)`.
pub fn kde(points: &[(f64, f64)], bandwidth: f64, grid: &GridSpec, opts: &KdeOptions) -> Result<DensitySurface> {
    if points.is_empty() {
        return Err(Error::EmptyInput("kernel density needs at least one point".into()));
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::InvalidParameter(format!("bandwidth {bandwidth} must be positive")));
    }
    grid.validate()?;
    if let Some(&(x, y)) = points.iter().find(|&&(x, y)| !grid.contains(x, y)) {
        return Err(Error::InvalidParameter(format!("point ({x}, {y}) lies outside the grid")));
    }
    let cutoff = match opts.cutoff_bandwidths {
        Some(c) if !(c > 0.0) => {
            return Err(Error::InvalidParameter(format!("cutoff {c} must be positive")));
        }
        Some(c) => Some(c * bandwidth),
        None => None,
    };

    let inv_two_h2 = 1.0 / (2.0 * bandwidth * bandwidth);
    let norm = 1.0 / (points.len() as f64 * 2.0 * PI * bandwidth * bandwidth);
    let n_cols = grid.n_cols;

    // Separable kernel: precompute the x factor of every point for every column.
    let col_factor: Vec<f64> = points
        .iter()
        .flat_map(|&(px, _)| {
            (0..n_cols).map(move |c| {
                let dx = grid.center(c, 0).0 - px;
                (-dx * dx * inv_two_h2).exp()
            })
        })
        .collect();

    let fill_row = |row: usize, out: &mut [f64]| {
        let cy = grid.center(0, row).1;
        for (k, &(px, py)) in points.iter().enumerate() {
            let dy = cy - py;
            let ey = (-dy * dy * inv_two_h2).exp();
            let xs = &col_factor[k * n_cols..(k + 1) * n_cols];
            match cutoff {
                None => {
                    for (o, ex) in out.iter_mut().zip(xs) {
                        *o += ey * ex;
                    }
                }
                Some(r) => {
                    if dy.abs() > r {
                        continue;
                    }
                    let r2 = r * r - dy * dy;
                    for (c, (o, ex)) in out.iter_mut().zip(xs).enumerate() {
                        let dx = grid.center(c, row).0 - px;
                        if dx * dx <= r2 {
                            *o += ey * ex;
                        }
                    }
                }
            }
        }
        for o in out.iter_mut() {
            *o *= norm;
        }
    };

    let mut values = vec![0.0; grid.n_cells()];
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        values
            .par_chunks_mut(n_cols)
            .enumerate()
            .for_each(|(row, out)| fill_row(row, out));
    }
    #[cfg(not(feature = "parallel"))]
    for (row, out) in values.chunks_mut(n_cols).enumerate() {
        fill_row(row, out);
    }

    Ok(DensitySurface {
        grid: *grid,
        values,
        bandwidth,
        point_count: points.len(),
        cutoff,
    })
}

/// Rule-of-thumb bandwidth `n^(−1/6) · sqrt((s_x² + s_y²) / 2)` with sample
/// variances.
pub fn silverman_bandwidth(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::UndersizedSample(format!(
            "{} points, need at least 2 for a bandwidth",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let vx = points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>() / (n - 1.0);
    let vy = points.iter().map(|p| (p.1 - my).powi(2)).sum::<f64>() / (n - 1.0);
    let h = n.powf(-1.0 / 6.0) * ((vx + vy) / 2.0).sqrt();
    if h > 0.0 && h.is_finite() {
        Ok(h)
    } else {
        Err(Error::InvalidParameter(
            "all points coincide; supply a bandwidth explicitly".into(),
        ))
    }
}
