//! Complex fields on periodic grids, the rescaled lattice frequency models,
//! and block projections.
//!
//! The lattice model applies the graded dilation `diag(R^(n/n),...,R^(1/n))`
//! to the frequency picture: the anisotropic neighborhood `M^n(gamma;R)`
//! becomes the unit-scale neighborhood of the long moment curve
//! `(u^n/n!, ..., u)` over `u in [0, M]`, `M = R^(1/n)`, whose canonical
//! blocks are unit boxes. Frequencies live on the lattice `(1/P) Z^n` for an
//! oversampling factor P, physical space is the torus `[0, P)^n`, and both
//! sides of every estimate are formed in the same coordinates, so ratios and
//! ladder slopes match the original normalization.

use crate::cover::{cone_blocks_width, theta_blocks_width, BlockFamily, FamilyKind};
use crate::curve::{solve, PolyCurve};
use crate::error::{Error, Result};
use crate::grid::{fftn, next_fast_len, Grid};
use crate::weight::Weight;
use num_complex::Complex64;
use rand::RngExt;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    Physical,
    Frequency,
}

#[derive(Clone, Debug)]
pub struct Field {
    pub grid: Grid,
    pub data: Vec<Complex64>,
    pub space: Space,
}

impl Field {
    pub fn zeros(grid: Grid, space: Space) -> Field {
        let len = grid.len();
        Field { grid, data: vec![Complex64::default(); len], space }
    }

    pub fn to_physical(&mut self) {
        if self.space == Space::Frequency {
            fftn(&self.grid, &mut self.data, false);
            self.space = Space::Physical;
        }
    }

    pub fn to_frequency(&mut self) {
        if self.space == Space::Physical {
            fftn(&self.grid, &mut self.data, true);
            self.space = Space::Frequency;
        }
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        assert_eq!(self.space, Space::Physical, "lp_norm expects physical samples");
        let cell = self.grid.cell_volume();
        if (p - 2.0).abs() < 1e-12 {
            return (self.data.iter().map(|c| c.norm_sqr()).sum::<f64>() * cell).sqrt();
        }
        (self
            .data
            .iter()
            .map(|c| c.norm().powf(p))
            .sum::<f64>()
            * cell)
            .powf(1.0 / p)
    }

    pub fn linf_norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Weighted L^p norm against nonnegative samples of a weight.
    pub fn lp_norm_weighted(&self, p: f64, weight_samples: &[f64]) -> f64 {
        assert_eq!(self.space, Space::Physical);
        let cell = self.grid.cell_volume();
        (self
            .data
            .iter()
            .zip(weight_samples)
            .map(|(c, w)| c.norm().powf(p) * w)
            .sum::<f64>()
            * cell)
            .powf(1.0 / p)
    }

    /// Convolve with a centered weight shape (multiply coefficients by the
    /// continuum transform of the weight).
    pub fn convolve_weight(&mut self, weight: &Weight) {
        self.to_frequency();
        for idx in 0..self.data.len() {
            let xi = self.grid.frequency(idx);
            self.data[idx] *= weight.hat(&xi);
        }
        self.space = Space::Frequency;
    }

    /// Apply a smooth radial low-pass with per-axis scales: multiplier
    /// eta(|(xi_i / scale_i)|) with eta = 1 below 1/2 and 0 above 1.
    pub fn lowpass(&mut self, scales: &[f64]) {
        self.to_frequency();
        for idx in 0..self.data.len() {
            let xi = self.grid.frequency(idx);
            let r = xi
                .iter()
                .zip(scales)
                .map(|(x, s)| (x / s) * (x / s))
                .sum::<f64>()
                .sqrt();
            self.data[idx] *= smooth_cutoff(r);
        }
    }
}

/// The pointwise l^q square function `S_{U,q}(x) = (sum_theta |f_theta(x)|^q
/// w(x))^(1/q)` for block pieces against sampled weight values.
pub fn square_function(f_thetas: &[Field], weight_samples: &[f64], q: f64) -> Result<Vec<f64>> {
    if q < 1.0 {
        return Err(Error::Invalid("square function needs q >= 1".into()));
    }
    let Some(first) = f_thetas.first() else {
        return Ok(Vec::new());
    };
    let len = first.grid.len();
    if weight_samples.len() != len {
        return Err(Error::Invalid("weight sample length mismatch".into()));
    }
    let mut out = vec![0.0f64; len];
    for fb in f_thetas {
        assert_eq!(fb.space, Space::Physical, "square function expects physical samples");
        for (acc, v) in out.iter_mut().zip(&fb.data) {
            *acc += v.norm().powf(q);
        }
    }
    for (acc, w) in out.iter_mut().zip(weight_samples) {
        *acc = (*acc * w).powf(1.0 / q);
    }
    Ok(out)
}

/// C-infinity cutoff: 1 on [0, 1/2], 0 on [1, inf).
pub fn smooth_cutoff(r: f64) -> f64 {
    if r <= 0.5 {
        1.0
    } else if r >= 1.0 {
        0.0
    } else {
        let t = (r - 0.5) / 0.5;
        let e = |x: f64| if x <= 0.0 { 0.0 } else { (-1.0 / x).exp() };
        e(1.0 - t) / (e(1.0 - t) + e(t))
    }
}

/// One frequency atom of a lattice model: integer coordinates on the
/// `(1/P)`-lattice and the block that owns it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Mode {
    pub k: Vec<i64>,
    pub block: usize,
}

/// The rescaled lattice frequency model of a curve or cone neighborhood.
#[derive(Clone, Debug)]
pub struct LatticeModel {
    pub n: usize,
    pub r: f64,
    pub m: f64,
    pub oversample: f64,
    pub kind: FamilyKind,
    pub curve: PolyCurve,
    pub family: BlockFamily,
    pub grid: Grid,
    pub modes: Vec<Mode>,
}

impl LatticeModel {
    pub fn block_count(&self) -> usize {
        self.family.len()
    }

    pub fn modes_of_block(&self, block: usize) -> impl Iterator<Item = &Mode> {
        self.modes.iter().filter(move |m| m.block == block)
    }

    pub fn frequency_of(&self, k: &[i64]) -> Vec<f64> {
        k.iter().map(|x| *x as f64 / self.oversample).collect()
    }

    /// Unit-modulus random phases on every mode of the support.
    pub fn random_field(&self, rng: &mut impl RngExt) -> Field {
        let mut f = Field::zeros(self.grid.clone(), Space::Frequency);
        for mode in &self.modes {
            let idx = self.grid.index_of_mode(&mode.k).expect("mode in band");
            let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            f.data[idx] = Complex64::from_polar(1.0, phase);
        }
        f
    }

    /// The physical-space block projection f_theta for one block.
    pub fn project_block(&self, fhat: &Field, block: usize) -> Field {
        assert_eq!(fhat.space, Space::Frequency);
        let mut out = Field::zeros(self.grid.clone(), Space::Frequency);
        for mode in self.modes_of_block(block) {
            let idx = self.grid.index_of_mode(&mode.k).expect("mode in band");
            out.data[idx] = fhat.data[idx];
        }
        out.to_physical();
        out
    }

    /// Sum of all block projections (restriction to the annotated support).
    pub fn project_all(&self, fhat: &Field) -> Field {
        assert_eq!(fhat.space, Space::Frequency);
        let mut out = Field::zeros(self.grid.clone(), Space::Frequency);
        for mode in &self.modes {
            let idx = self.grid.index_of_mode(&mode.k).expect("mode in band");
            out.data[idx] = fhat.data[idx];
        }
        out
    }

    /// Relative spectral mass outside the annotated support.
    pub fn mass_outside_support(&self, fhat: &Field) -> f64 {
        assert_eq!(fhat.space, Space::Frequency);
        let total: f64 = fhat.data.iter().map(|c| c.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let mut inside = 0.0;
        for mode in &self.modes {
            let idx = self.grid.index_of_mode(&mode.k).expect("mode in band");
            inside += fhat.data[idx].norm_sqr();
        }
        ((total - inside) / total).max(0.0)
    }
}

/// Solve for the lambda-coordinates of xi at angular parameter u; returns
/// the coefficient vector of xi - include_base*gamma(u) in the derivative
/// basis.
fn lambda_at(curve: &PolyCurve, u: f64, xi: &[f64], include_base: bool) -> Option<Vec<f64>> {
    let n = curve.dim;
    let mut mat = vec![0.0; n * n];
    for j in 1..=n {
        let col = curve.eval_derivative_unchecked(u, j);
        for r in 0..n {
            mat[r * n + j - 1] = col[r];
        }
    }
    let base = if include_base { curve.eval(u) } else { vec![0.0; n] };
    let mut rhs: Vec<f64> = xi.iter().zip(&base).map(|(a, b)| a - b).collect();
    solve(&mut mat, &mut rhs, n)
}

/// Best (largest-margin) angular parameter at which xi lies in the unit
/// lambda-box; returns (u, margin).
fn best_u(
    curve: &PolyCurve,
    xi: &[f64],
    u_lo: f64,
    u_hi: f64,
    include_base: bool,
    lower1: Option<f64>,
) -> Option<(f64, f64)> {
    let samples = 33;
    let mut best: Option<(f64, f64)> = None;
    for i in 0..samples {
        let u = u_lo + (u_hi - u_lo) * i as f64 / (samples - 1) as f64;
        let Some(lambda) = lambda_at(curve, u, xi, include_base) else {
            continue;
        };
        let mut margin = f64::INFINITY;
        for (j, &l) in lambda.iter().enumerate() {
            let m = if j == 0 {
                if let Some(lo) = lower1 {
                    // annular first coordinate: lo <= |l| <= 1
                    (1.0 - l.abs()).min(l.abs() - lo)
                } else {
                    1.0 - l.abs()
                }
            } else {
                1.0 - l.abs()
            };
            margin = margin.min(m);
        }
        if margin >= -1e-9 {
            match best {
                Some((_, bm)) if bm >= margin => {}
                _ => best = Some((u, margin)),
            }
        }
    }
    best
}

/// Build the lattice model of the curve neighborhood at scale R with an
/// oversampling factor P (frequency lattice spacing 1/P). The angular
/// parameter runs over the symmetric window [-M/2, M/2], which keeps the
/// first-coordinate extent at M^2/8 instead of M^2/2.
pub fn lattice_curve_model(n: usize, r: f64, oversample: f64) -> Result<LatticeModel> {
    let m = r.powf(1.0 / n as f64);
    let mut curve = PolyCurve::model_long(n, m);
    curve.domain = (-0.5 * m, 0.5 * m);
    let family = theta_blocks_width(&curve, r, 1.0)?;
    let p = oversample;

    // per-axis frequency extents over the region
    let mut bounds = vec![0.0f64; n];
    for (i, b) in bounds.iter_mut().enumerate() {
        let mut acc: f64 = 0.0;
        for end in [curve.domain.0, curve.domain.1] {
            let mut a = 0.0;
            for j in 0..=n {
                a += curve.eval_derivative_unchecked(end, j)[i].abs();
            }
            acc = acc.max(a);
        }
        *b = acc + 2.0;
    }
    let dims: Vec<usize> = bounds
        .iter()
        .map(|b| {
            let mut d = next_fast_len((2.0 * b * p).ceil() as usize + 2);
            while !d.is_multiple_of(4) {
                d = next_fast_len(d + 1);
            }
            d
        })
        .collect();
    let grid = Grid::new(dims, vec![p; n]);

    // enumerate lattice modes: slab in the linear (last) coordinate, then a
    // bounded window in the remaining coordinates around the curve point
    let (dom_lo, dom_hi) = curve.domain;
    let mut modes = Vec::new();
    let pad = (n + 2) as f64;
    let k_last_lo = ((dom_lo - 1.5) * p).floor() as i64;
    let k_last_hi = ((dom_hi + 1.5) * p).ceil() as i64;
    for k_last in k_last_lo..=k_last_hi {
        let u0 = k_last as f64 / p;
        let centers = curve.eval(u0.clamp(dom_lo, dom_hi));
        let mut ranges: Vec<(i64, i64)> = Vec::with_capacity(n - 1);
        for c in centers.iter().take(n - 1) {
            let lo = ((c - pad) * p).floor() as i64;
            let hi = ((c + pad) * p).ceil() as i64;
            ranges.push((lo, hi));
        }
        let mut counter: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        'outer: loop {
            let mut k = counter.clone();
            k.push(k_last);
            let xi = k.iter().map(|x| *x as f64 / p).collect::<Vec<_>>();
            let u_lo = (u0 - 1.6).max(dom_lo);
            let u_hi = (u0 + 1.6).min(dom_hi);
            if u_hi > u_lo
                && best_u(&curve, &xi, u_lo, u_hi, true, None).is_some()
                    && grid.index_of_mode(&k).is_some()
                {
                    let block = family.assign_block(xi[n - 1], 1);
                    modes.push(Mode { k, block });
                }
            // odometer
            let mut ax = 0;
            loop {
                if ax + 1 >= n {
                    break 'outer;
                }
                counter[ax] += 1;
                if counter[ax] > ranges[ax].1 {
                    counter[ax] = ranges[ax].0;
                    ax += 1;
                } else {
                    break;
                }
            }
        }
    }
    if modes.is_empty() {
        return Err(Error::Invalid("lattice model found no frequency modes".into()));
    }
    modes.sort_by(|a, b| a.k.cmp(&b.k));
    modes.dedup_by(|a, b| a.k == b.k);
    Ok(LatticeModel {
        n,
        r,
        m,
        oversample: p,
        kind: FamilyKind::Curve,
        curve,
        family,
        grid,
        modes,
    })
}

/// Lattice model of the cone `Gamma_n`: caps `|lambda_j| <= 1` with
/// `|lambda_1| in [1/2, 1]`, sign-split blocks.
pub fn lattice_cone_model(n: usize, r: f64, oversample: f64) -> Result<LatticeModel> {
    let m = r.powf(1.0 / n as f64);
    let mut curve = PolyCurve::model_long(n, m);
    curve.domain = (-0.5 * m, 0.5 * m);
    let family = cone_blocks_width(&curve, r, 1.0)?;
    let p = oversample;

    let mut bounds = vec![0.0f64; n];
    for (i, b) in bounds.iter_mut().enumerate() {
        let mut acc: f64 = 0.0;
        for end in [curve.domain.0, curve.domain.1] {
            let mut a = 0.0;
            for j in 1..=n {
                a += curve.eval_derivative_unchecked(end, j)[i].abs();
            }
            acc = acc.max(a);
        }
        *b = acc + 2.0;
    }
    let dims: Vec<usize> = bounds
        .iter()
        .map(|b| {
            let mut d = next_fast_len((2.0 * b * p).ceil() as usize + 2);
            while !d.is_multiple_of(4) {
                d = next_fast_len(d + 1);
            }
            d
        })
        .collect();
    let grid = Grid::new(dims, vec![p; n]);

    // sample the lambda-box on a fine grid per block interval, round to the
    // lattice, then verify membership exactly
    let mut seen = std::collections::HashSet::new();
    let mut modes = Vec::new();
    let lam_steps = 7usize;
    let u_steps = 9usize;
    for block in family.blocks.iter() {
        for iu in 0..u_steps {
            let u = block.t_lo
                + (block.t_hi - block.t_lo) * iu as f64 / (u_steps - 1) as f64;
            let u = u.clamp(curve.domain.0, curve.domain.1);
            let mut stack = vec![vec![]];
            for j in 1..=n {
                let mut next = Vec::new();
                for prefix in &stack {
                    for il in 0..lam_steps {
                        let frac = -1.0 + 2.0 * il as f64 / (lam_steps - 1) as f64;
                        let l = if j == 1 {
                            block.sign as f64 * (0.5 + 0.5 * (frac + 1.0) / 2.0)
                        } else {
                            frac
                        };
                        let mut v: Vec<f64> = prefix.clone();
                        v.push(l);
                        next.push(v);
                    }
                }
                stack = next;
            }
            for lambda in &stack {
                let mut xi = vec![0.0; n];
                for (j, l) in lambda.iter().enumerate() {
                    let d = curve.eval_derivative_unchecked(u, j + 1);
                    for (x, g) in xi.iter_mut().zip(&d) {
                        *x += l * g;
                    }
                }
                let k: Vec<i64> = xi.iter().map(|x| (x * p).round() as i64).collect();
                if grid.index_of_mode(&k).is_none() || !seen.insert(k.clone()) {
                    continue;
                }
                // verify membership, then assign by the slab coordinate
                let xi_snap = k.iter().map(|x| *x as f64 / p).collect::<Vec<_>>();
                let u_lo = (u - 2.2).max(curve.domain.0);
                let u_hi = (u + 2.2).min(curve.domain.1);
                if best_u(&curve, &xi_snap, u_lo, u_hi, false, Some(0.5)).is_some() {
                    if let Some((c, sign)) = family.slab_coordinate(&xi_snap) {
                        let block = family.assign_block(c, sign);
                        modes.push(Mode { k, block });
                    } else {
                        seen.remove(&k);
                    }
                } else {
                    seen.remove(&k);
                }
            }
        }
    }
    if modes.is_empty() {
        return Err(Error::Invalid("cone lattice model found no modes".into()));
    }
    modes.sort_by(|a, b| a.k.cmp(&b.k));
    Ok(LatticeModel {
        n,
        r,
        m,
        oversample: p,
        kind: FamilyKind::Cone,
        curve,
        family,
        grid,
        modes,
    })
}

/// Field snapshot: raw little-endian complex64 (f32 pairs) plus a JSON
/// sidecar with the grid metadata.
#[derive(Serialize, Deserialize)]
pub struct FieldSidecar {
    pub dim: usize,
    pub dims: Vec<usize>,
    pub lens: Vec<f64>,
    pub space: String,
    pub annotation: Option<String>,
}

pub fn write_field_snapshot(
    field: &Field,
    path: &std::path::Path,
    annotation: Option<String>,
) -> Result<()> {
    let mut raw = Vec::with_capacity(field.data.len() * 8);
    for c in &field.data {
        raw.extend_from_slice(&(c.re as f32).to_le_bytes());
        raw.extend_from_slice(&(c.im as f32).to_le_bytes());
    }
    std::fs::write(path, raw)?;
    let sidecar = FieldSidecar {
        dim: field.grid.rank(),
        dims: field.grid.dims.clone(),
        lens: field.grid.lens.clone(),
        space: match field.space {
            Space::Physical => "physical".into(),
            Space::Frequency => "frequency".into(),
        },
        annotation,
    };
    let json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(path.with_extension("json"), json)?;
    Ok(())
}

pub fn read_field_snapshot(path: &std::path::Path) -> Result<Field> {
    let sidecar: FieldSidecar = serde_json::from_str(
        &std::fs::read_to_string(path.with_extension("json"))?,
    )
    .map_err(|e| Error::Parse(e.to_string()))?;
    let raw = std::fs::read(path)?;
    let grid = Grid::new(sidecar.dims, sidecar.lens);
    if raw.len() != grid.len() * 8 {
        return Err(Error::Parse("field snapshot size mismatch".into()));
    }
    let data = raw
        .chunks_exact(8)
        .map(|b| {
            let re = f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64;
            let im = f32::from_le_bytes([b[4], b[5], b[6], b[7]]) as f64;
            Complex64::new(re, im)
        })
        .collect();
    let space = if sidecar.space == "frequency" {
        Space::Frequency
    } else {
        Space::Physical
    };
    Ok(Field { grid, data, space })
}
