//! Periodic anisotropic grids and n-dimensional FFTs.
//!
//! A grid has `dims[i]` samples along axis i over a physical period
//! `lens[i]`, so the frequency lattice has spacing `1/lens[i]` and the
//! representable band is `|xi_i| <= dims[i]/(2 lens[i])`. The transform
//! convention is `f(x) = sum_k fhat(k) exp(+2 pi i xi_k . x)`.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::Arc;
use std::sync::Mutex;

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub dims: Vec<usize>,
    pub lens: Vec<f64>,
}

impl Grid {
    pub fn new(dims: Vec<usize>, lens: Vec<f64>) -> Grid {
        assert_eq!(dims.len(), lens.len());
        Grid { dims, lens }
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume of one sample cell.
    pub fn cell_volume(&self) -> f64 {
        self.dims
            .iter()
            .zip(&self.lens)
            .map(|(n, l)| l / *n as f64)
            .product()
    }

    pub fn volume(&self) -> f64 {
        self.lens.iter().product()
    }

    /// Physical coordinates of a flat index.
    pub fn point(&self, mut idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.rank()];
        for ax in (0..self.rank()).rev() {
            let n = self.dims[ax];
            let j = idx % n;
            idx /= n;
            out[ax] = self.lens[ax] * j as f64 / n as f64;
        }
        out
    }

    /// Signed frequency index along an axis for a storage index.
    pub fn signed_index(&self, ax: usize, k: usize) -> i64 {
        let n = self.dims[ax] as i64;
        let k = k as i64;
        if k <= n / 2 {
            k
        } else {
            k - n
        }
    }

    /// Frequency vector of a flat spectral index.
    pub fn frequency(&self, mut idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.rank()];
        for ax in (0..self.rank()).rev() {
            let n = self.dims[ax];
            let j = idx % n;
            idx /= n;
            out[ax] = self.signed_index(ax, j) as f64 / self.lens[ax];
        }
        out
    }

    /// Storage index of a signed integer frequency tuple (lattice units of
    /// 1/lens). Returns None when out of band.
    pub fn index_of_mode(&self, k: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for ax in 0..self.rank() {
            let n = self.dims[ax] as i64;
            let ks = k[ax];
            if ks < -(n / 2) || ks >= (n + 1) / 2 {
                return None;
            }
            let j = if ks >= 0 { ks } else { ks + n } as usize;
            idx = idx * self.dims[ax] + j;
        }
        Some(idx)
    }

    pub fn max_frequency(&self, ax: usize) -> f64 {
        self.dims[ax] as f64 / (2.0 * self.lens[ax])
    }
}

/// Smallest 2^a 3^b >= x (fast FFT length).
pub fn next_fast_len(x: usize) -> usize {
    let mut best = usize::MAX;
    let mut p3 = 1usize;
    while p3 < 4 * x {
        let mut v = p3;
        while v < x {
            v *= 2;
        }
        best = best.min(v);
        p3 *= 3;
    }
    best
}

struct PlanCache {
    fwd: HashMap<usize, Arc<dyn Fft<f64>>>,
    inv: HashMap<usize, Arc<dyn Fft<f64>>>,
}

static PLANS: Mutex<Option<PlanCache>> = Mutex::new(None);

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut guard = PLANS.lock().unwrap();
    let cache = guard.get_or_insert_with(|| PlanCache { fwd: HashMap::new(), inv: HashMap::new() });
    let map = if inverse { &mut cache.inv } else { &mut cache.fwd };
    map.entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// In-place n-dimensional DFT over every axis. `forward` produces spectral
/// coefficients normalized by 1/len (so `data` afterwards holds the Fourier
/// coefficients of the trigonometric interpolant); `inverse` resynthesizes.
pub fn fftn(grid: &Grid, data: &mut [Complex64], forward: bool) {
    assert_eq!(data.len(), grid.len());
    let rank = grid.rank();
    // stride-based axis transforms with a gather/scatter lane buffer
    let mut stride = 1usize;
    for ax in (0..rank).rev() {
        let n = grid.dims[ax];
        let fft = plan(n, !forward);
        let lanes = grid.len() / n;
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        let mut lane = vec![Complex64::default(); n];
        for li in 0..lanes {
            // decompose lane index into (outer, inner) around this axis
            let inner = li % stride;
            let outer = li / stride;
            let base = outer * stride * n + inner;
            for j in 0..n {
                lane[j] = data[base + j * stride];
            }
            fft.process_with_scratch(&mut lane, &mut scratch);
            for j in 0..n {
                data[base + j * stride] = lane[j];
            }
        }
        stride *= n;
    }
    if forward {
        let scale = 1.0 / grid.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}
