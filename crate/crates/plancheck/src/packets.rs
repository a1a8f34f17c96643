//! Wave packet tiles: grid-aligned tilings by near-dual boxes, smooth
//! partitions of unity, and the height pigeonholing.

use crate::error::{Error, Result};
use crate::field::{Field, Space};
use crate::grid::Grid;
use crate::weight::Weight;
use num_complex::Complex64;

/// A tiling of the torus by axis-aligned cells with a smooth partition of
/// unity subordinate to it. The base bump is `(weight-profile) * 1_cell`,
/// built spectrally so that the shifted copies sum to one exactly.
#[derive(Clone, Debug)]
pub struct TilePartition {
    pub grid: Grid,
    /// tiles per axis; each divides the grid dimension
    pub counts: Vec<usize>,
    /// samples of the base partition function (tile at the origin)
    pub psi0: Vec<f64>,
}

impl TilePartition {
    /// Build a partition whose cells approximate the target tile dims.
    pub fn build(grid: &Grid, target_dims: &[f64]) -> Result<TilePartition> {
        let rank = grid.rank();
        if target_dims.len() != rank {
            return Err(Error::Invalid("tile target dimension mismatch".into()));
        }
        let mut counts = Vec::with_capacity(rank);
        for ax in 0..rank {
            let ideal = (grid.lens[ax] / target_dims[ax]).round().max(1.0) as usize;
            // largest divisor of N_ax not exceeding ideal
            let mut best = 1usize;
            for d in 1..=grid.dims[ax] {
                if grid.dims[ax].is_multiple_of(d) && d <= ideal {
                    best = best.max(d);
                }
                if d > ideal {
                    break;
                }
            }
            counts.push(best);
        }
        // cell sizes
        let cells: Vec<f64> = grid
            .lens
            .iter()
            .zip(&counts)
            .map(|(l, c)| l / *c as f64)
            .collect();
        // spectral construction of psi0: hat = (1/#tiles) * What(cell xi) *
        // prod sinc(pi xi cell); the sinc zeros kill every nonzero dual
        // lattice frequency, so the shifted sum is exactly one.
        let w = Weight {
            dim: rank,
            frame: None,
            halfwidths: cells.clone(),
            center: vec![0.0; rank],
        };
        let tiles: usize = counts.iter().product();
        let mut hat = Field::zeros(grid.clone(), Space::Frequency);
        let w0 = w.hat(&vec![0.0; rank]).re;
        for idx in 0..grid.len() {
            let xi = grid.frequency(idx);
            let mut v = w.hat(&xi).re / w0;
            for (x, c) in xi.iter().zip(&cells) {
                let arg = std::f64::consts::PI * x * c;
                v *= if arg.abs() < 1e-12 { 1.0 } else { arg.sin() / arg };
            }
            hat.data[idx] = Complex64::new(v / tiles as f64, 0.0);
        }
        hat.to_physical();
        let psi0: Vec<f64> = hat.data.iter().map(|c| c.re).collect();
        Ok(TilePartition { grid: grid.clone(), counts, psi0 })
    }

    pub fn num_tiles(&self) -> usize {
        self.counts.iter().product()
    }

    /// Grid-index shift of a tile (multi-index into the tile lattice).
    fn tile_shift(&self, tile: usize) -> Vec<usize> {
        let mut rem = tile;
        let rank = self.grid.rank();
        let mut shift = vec![0usize; rank];
        for ax in (0..rank).rev() {
            let c = self.counts[ax];
            let step = self.grid.dims[ax] / c;
            shift[ax] = (rem % c) * step;
            rem /= c;
        }
        shift
    }

    /// psi_T at a flat grid index.
    pub fn psi(&self, tile: usize, idx: usize) -> f64 {
        let rank = self.grid.rank();
        let shift = self.tile_shift(tile);
        // unshifted index
        let mut rem = idx;
        let mut src = 0usize;
        for ax in (0..rank).rev() {
            let n = self.grid.dims[ax];
            let j = rem % n;
            rem /= n;
            let j0 = (j + n - shift[ax]) % n;
            // rebuild flat index of the unshifted point
            let mut stride = 1usize;
            for a2 in ax + 1..rank {
                stride *= self.grid.dims[a2];
            }
            src += j0 * stride;
        }
        self.psi0[src]
    }

    /// Residual of the partition-of-unity identity over the grid.
    pub fn partition_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for idx in 0..self.grid.len() {
            let mut acc = 0.0;
            for t in 0..self.num_tiles() {
                acc += self.psi(t, idx);
            }
            worst = worst.max((acc - 1.0).abs());
        }
        worst
    }
}

#[derive(Clone, Debug)]
pub struct WavePacketSet {
    pub partition: TilePartition,
    pub heights: Vec<f64>,
    pub kept: Vec<bool>,
    /// the pigeonholed height scale X
    pub height_scale: f64,
}

/// Tile heights, dyadic pigeonholing, and the kept subset: tiles in the
/// dyadic height bin carrying the largest squared-height mass.
pub fn wave_packets(
    f_theta: &Field,
    partition: TilePartition,
    alpha: f64,
) -> Result<WavePacketSet> {
    assert_eq!(f_theta.space, Space::Physical);
    let max_abs = f_theta.linf_norm();
    if alpha <= 1e-10 * max_abs {
        return Err(Error::Invalid(format!(
            "alpha {alpha} below the pigeonholing floor {}",
            1e-10 * max_abs
        )));
    }
    let tiles = partition.num_tiles();
    let mut heights = vec![0.0f64; tiles];
    for (idx, v) in f_theta.data.iter().enumerate() {
        let a = v.norm();
        if a == 0.0 {
            continue;
        }
        for (t, h) in heights.iter_mut().enumerate() {
            let p = partition.psi(t, idx);
            if p > 0.0 {
                *h = h.max(p * a);
            }
        }
    }
    let h_max = heights.iter().cloned().fold(0.0, f64::max);
    if h_max == 0.0 {
        return Ok(WavePacketSet {
            partition,
            heights,
            kept: vec![false; tiles],
            height_scale: 0.0,
        });
    }
    // dyadic bins below h_max; ties broken toward the lower bin
    let bin_of = |h: f64| -> Option<i64> {
        if h <= 0.0 {
            return None;
        }
        Some((h / h_max).log2().floor() as i64)
    };
    let mut mass: std::collections::HashMap<i64, f64> = std::collections::HashMap::new();
    for &h in &heights {
        if let Some(b) = bin_of(h) {
            *mass.entry(b).or_insert(0.0) += h * h;
        }
    }
    let best_bin = *mass
        .iter()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(k, _)| k)
        .unwrap();
    let kept: Vec<bool> = heights
        .iter()
        .map(|&h| bin_of(h) == Some(best_bin))
        .collect();
    let height_scale = h_max * (best_bin as f64).exp2() * 2.0f64.sqrt();
    Ok(WavePacketSet { partition, heights, kept, height_scale })
}

impl WavePacketSet {
    /// The reconstruction sum_{kept} psi_T f over the grid.
    pub fn reconstruct(&self, f_theta: &Field) -> Field {
        let mut out = Field::zeros(f_theta.grid.clone(), Space::Physical);
        for (t, keep) in self.kept.iter().enumerate() {
            if !*keep {
                continue;
            }
            for idx in 0..out.data.len() {
                out.data[idx] += f_theta.data[idx] * self.partition.psi(t, idx);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> Grid {
        Grid::new(vec![48, 36], vec![6.0, 6.0])
    }

    #[test]
    fn partition_sums_to_one() {
        let grid = small_grid();
        let part = TilePartition::build(&grid, &[1.0, 1.5]).unwrap();
        assert!(part.num_tiles() >= 12);
        assert!(part.partition_residual() < 1e-8, "{}", part.partition_residual());
    }

    #[test]
    fn psi_spectrum_is_band_limited() {
        let grid = small_grid();
        let part = TilePartition::build(&grid, &[1.0, 1.0]).unwrap();
        let mut f = Field::zeros(grid.clone(), Space::Physical);
        for (v, p) in f.data.iter_mut().zip(&part.psi0) {
            *v = Complex64::new(*p, 0.0);
        }
        f.to_frequency();
        // mass outside |xi_i| <= 1.5/cell must be tiny
        let mut inside = 0.0;
        let mut total = 0.0;
        for idx in 0..grid.len() {
            let xi = grid.frequency(idx);
            let m = f.data[idx].norm_sqr();
            total += m;
            if xi.iter().all(|x| x.abs() <= 1.5) {
                inside += m;
            }
        }
        assert!((total - inside) / total < 1e-8);
    }

    #[test]
    fn single_packet_keeps_one_tile() {
        let grid = small_grid();
        let part = TilePartition::build(&grid, &[1.0, 1.0]).unwrap();
        // a bump concentrated in one cell
        let mut f = Field::zeros(grid.clone(), Space::Physical);
        let center = [0.5f64, 0.5];
        for idx in 0..grid.len() {
            let x = grid.point(idx);
            let d2: f64 = x
                .iter()
                .zip(&center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            f.data[idx] = Complex64::new((-12.0 * d2).exp(), 0.0);
        }
        let set = wave_packets(&f, part, 0.5).unwrap();
        let kept = set.kept.iter().filter(|k| **k).count();
        assert!(kept >= 1 && kept <= 4, "{kept} tiles kept");
        assert!(set.height_scale > 0.05, "scale {}", set.height_scale); // heights are psi-weighted sups
    }

    #[test]
    fn kept_heights_within_factor_eight() {
        let grid = small_grid();
        let part = TilePartition::build(&grid, &[1.0, 1.0]).unwrap();
        let mut f = Field::zeros(grid.clone(), Space::Physical);
        // deterministic pseudo-random phases
        for (idx, v) in f.data.iter_mut().enumerate() {
            let ph = (idx as f64 * 0.7391) % std::f64::consts::TAU;
            *v = Complex64::from_polar(1.0, ph);
        }
        let set = wave_packets(&f, part, 0.5).unwrap();
        let kept: Vec<f64> = set
            .heights
            .iter()
            .zip(&set.kept)
            .filter(|(_, k)| **k)
            .map(|(h, _)| *h)
            .collect();
        assert!(!kept.is_empty());
        let hi = kept.iter().cloned().fold(0.0, f64::max);
        let lo = kept.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(hi / lo <= 8.0, "spread {}", hi / lo);
    }

    #[test]
    fn alpha_floor_is_enforced() {
        let grid = small_grid();
        let part = TilePartition::build(&grid, &[1.0, 1.0]).unwrap();
        let mut f = Field::zeros(grid.clone(), Space::Physical);
        f.data[0] = Complex64::new(1.0, 0.0);
        assert!(wave_packets(&f, part, 1e-12).is_err());
    }
}
