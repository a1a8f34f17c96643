//! Sharpness extremizers: the bush of focusing wave packets, the stacked
//! random-sign family, and the focusing shift families for the local
//! smoothing surrogate.
//!
//! Packets are tensor Gaussians truncated at six sigma, modulated to block
//! center frequencies; every quantity needed by the Bochner-Riesz lower
//! bounds is an explicit sparse sum, so the ladder runs to large R without
//! dense grids. Torus wrap-around of the packet translations is part of the
//! construction.

use crate::error::{Error, Result};
use crate::field::LatticeModel;
use crate::frame::{frenet_frame, FrenetFrame};
use crate::plank::AdmissibleTuple;
use crate::verify::EstimateReport;
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtremalKind {
    Bush,
    Stacked,
}

/// One Gaussian wave packet: frame-aligned profile of per-axis width sigma,
/// centered at `center`, modulated to the lattice frequency `xi_mod`.
#[derive(Clone, Debug)]
pub struct Packet {
    pub frame: FrenetFrame,
    pub center: Vec<f64>,
    pub sigma: Vec<f64>,
    pub xi_mod: Vec<f64>,
    pub amplitude: Complex64,
}

impl Packet {
    /// Sample value (with the 6-sigma truncation and torus wrap).
    pub fn eval(&self, x: &[f64], torus: f64) -> Complex64 {
        let rel: Vec<f64> = x
            .iter()
            .zip(&self.center)
            .map(|(a, b)| {
                let mut d = (a - b).rem_euclid(torus);
                if d > torus / 2.0 {
                    d -= torus;
                }
                d
            })
            .collect();
        let coords = self.frame.coords(&rel);
        let mut q = 0.0;
        for (c, s) in coords.iter().zip(&self.sigma) {
            q += (c / s) * (c / s);
        }
        if q > 36.0 {
            return Complex64::default();
        }
        let phase = std::f64::consts::TAU
            * self.xi_mod.iter().zip(&rel).map(|(a, b)| a * b).sum::<f64>();
        self.amplitude * Complex64::from_polar((-0.5 * q).exp(), phase)
    }

    /// Continuum Fourier transform (truncation ignored; its mass is ~1e-8).
    pub fn hat(&self, xi: &[f64]) -> Complex64 {
        let rel: Vec<f64> = xi.iter().zip(&self.xi_mod).map(|(a, b)| a - b).collect();
        let coords = self.frame.coords(&rel);
        let mut mag = 1.0;
        for (c, s) in coords.iter().zip(&self.sigma) {
            mag *= s * (std::f64::consts::TAU).sqrt()
                * (-2.0 * std::f64::consts::PI * std::f64::consts::PI * s * s * c * c).exp();
        }
        let phase = -std::f64::consts::TAU
            * xi.iter().zip(&self.center).map(|(a, b)| a * b).sum::<f64>();
        self.amplitude * Complex64::from_polar(mag, phase)
    }

    /// Exact p-th power integral of |packet| (Gaussian moments).
    pub fn lp_pow(&self, p: f64) -> f64 {
        let mut v = 1.0;
        for s in &self.sigma {
            v *= s * (std::f64::consts::TAU / p).sqrt();
        }
        v
    }
}

#[derive(Clone, Debug)]
pub struct ExtremalInput {
    pub kind: ExtremalKind,
    pub n: usize,
    pub r: f64,
    pub seed: Option<u64>,
    pub packets: Vec<Packet>,
    /// the common focal point
    pub focus: Vec<f64>,
}

/// Central frequency of a block: the mode closest to the block's nominal
/// center.
fn block_center_mode(model: &LatticeModel, block: usize) -> Option<Vec<f64>> {
    let b = &model.family.blocks[block];
    let u_c = b.t_lo + 1.0;
    let target = model.curve.eval(u_c.clamp(model.curve.domain.0, model.curve.domain.1));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mode in model.modes_of_block(block) {
        let xi = model.frequency_of(&mode.k);
        let d: f64 = xi
            .iter()
            .zip(&target)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if best.as_ref().map(|(bd, _)| d < *bd).unwrap_or(true) {
            best = Some((d, xi));
        }
    }
    best.map(|(_, xi)| xi)
}

/// The lattice image of the original-coordinates translation "R units along
/// the longest tile axis": the graded dilation sends `R e_n(t_b)` to a unit
/// step along the dual frame direction, realized here as one tile length
/// along the last frame axis.
fn bush_offset(frame: &FrenetFrame, step: f64) -> Vec<f64> {
    let n = frame.dim();
    frame.vectors[n - 1].iter().map(|e| e * step).collect()
}

/// Build the bush: one packet per interior block, every tile one translation
/// step from the common focal point along its own long axis; packet phases
/// are calibrated afterwards against the sharp frequency projection so the
/// focal contributions add coherently.
pub fn bush(model: &LatticeModel, seed: u64) -> Result<ExtremalInput> {
    build_input(model, ExtremalKind::Bush, seed)
}

/// The stacked family: same tile geometry, independent random signs.
pub fn stacked(model: &LatticeModel, seed: u64) -> Result<ExtremalInput> {
    build_input(model, ExtremalKind::Stacked, seed)
}

fn build_input(model: &LatticeModel, kind: ExtremalKind, seed: u64) -> Result<ExtremalInput> {
    let n = model.n;
    let torus = model.oversample;
    if torus < 2.0 {
        return Err(Error::Invalid(
            "extremal constructions need oversample >= 2 so packets fit the torus".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let focus: Vec<f64> = vec![torus / 2.0; n];
    let (dom_lo, dom_hi) = model.curve.domain;
    let mut packets = Vec::new();
    for b in 0..model.block_count() {
        let blk = &model.family.blocks[b];
        if blk.t_lo < dom_lo - 0.5 || blk.t_lo + 2.0 > dom_hi +  0.5 {
            continue;
        }
        let Some(xi_mod) = block_center_mode(model, b) else {
            continue;
        };
        let u = (blk.t_lo + 1.0).clamp(dom_lo, dom_hi);
        let frame = frenet_frame(&model.curve, u, false)?;
        let offset = bush_offset(&frame, 1.0);
        let center: Vec<f64> = focus
            .iter()
            .zip(&offset)
            .map(|(f, o)| (f + o).rem_euclid(torus))
            .collect();
        let amplitude = if matches!(kind, ExtremalKind::Stacked) {
            if rng.random::<bool>() {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(-1.0, 0.0)
            }
        } else {
            Complex64::new(1.0, 0.0)
        };
        packets.push(Packet {
            frame,
            center,
            sigma: vec![1.0 / 6.0; n],
            xi_mod,
            amplitude,
        });
    }
    if packets.is_empty() {
        return Err(Error::Invalid("no packets could be built".into()));
    }
    Ok(ExtremalInput { kind, n, r: model.r, seed: Some(seed), packets, focus })
}

/// The sharp-projection coefficients of the periodized input at the region
/// modes: `A(omega) = (1/Vol) sum_b p_b^(omega)` (Poisson summation gives
/// the 1/Vol).
fn region_coefficients(model: &LatticeModel, input: &ExtremalInput) -> Vec<(Vec<f64>, Complex64)> {
    let vol = model.oversample.powi(model.n as i32);
    model
        .modes
        .par_iter()
        .map(|mode| {
            let xi = model.frequency_of(&mode.k);
            let mut acc = Complex64::default();
            for p in &input.packets {
                // Gaussian transforms die within a few units of xi_mod
                let d2: f64 = xi
                    .iter()
                    .zip(&p.xi_mod)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if d2 > 36.0 {
                    continue;
                }
                acc += p.hat(&xi);
            }
            (xi, acc / vol)
        })
        .filter(|(_, c)| c.norm_sqr() > 1e-30)
        .collect()
}

fn eval_atoms(atoms: &[(Vec<f64>, Complex64)], x: &[f64]) -> Complex64 {
    let mut acc = Complex64::default();
    for (xi, c) in atoms {
        let phase: f64 =
            std::f64::consts::TAU * xi.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let (s, co) = phase.sin_cos();
        acc += c * Complex64::new(co, s);
    }
    acc
}

/// Calibrate bush packet phases so their sharp-projection values at the
/// focal point add coherently, then return the updated input.
pub fn calibrate_bush_phases(model: &LatticeModel, input: &mut ExtremalInput) {
    if !matches!(input.kind, ExtremalKind::Bush) {
        return;
    }
    let phases: Vec<Complex64> = input
        .packets
        .par_iter()
        .map(|p| {
            let mut acc = Complex64::default();
            for mode in &model.modes {
                let xi = model.frequency_of(&mode.k);
                let d2: f64 = xi
                    .iter()
                    .zip(&p.xi_mod)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if d2 > 36.0 {
                    continue;
                }
                let v = p.hat(&xi);
                let phase: f64 = std::f64::consts::TAU
                    * xi.iter().zip(&input.focus).map(|(a, b)| a * b).sum::<f64>();
                acc += v * Complex64::from_polar(1.0, phase);
            }
            if acc.norm() > 0.0 {
                (acc / acc.norm()).conj()
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
        .collect();
    for (p, ph) in input.packets.iter_mut().zip(phases) {
        p.amplitude *= ph;
    }
}

pub struct ExtremalBrReport {
    pub report: EstimateReport,
    /// focal-patch contribution to the LHS p-th power
    pub focal_mass: f64,
    /// packet-neighborhood contribution
    pub packet_mass: f64,
}

/// Sharp Bochner-Riesz ratio of an extremal input, measured sparsely: the
/// output p-mass is sampled on the packet neighborhoods and on a fine focal
/// patch; the input norm is the exact Gaussian sum.
pub fn extremal_br_ratio(
    model: &LatticeModel,
    input: &ExtremalInput,
    p: f64,
) -> Result<ExtremalBrReport> {
    let started = std::time::Instant::now();
    let n = input.n;
    let mut rep = EstimateReport::new("bochner-riesz-extremal", n, p, input.r);
    rep.seed = input.seed;
    rep.input = format!("{:?}", input.kind);

    let atoms = region_coefficients(model, input);
    if atoms.is_empty() {
        rep.degenerate = true;
        return Ok(ExtremalBrReport { report: rep, focal_mass: 0.0, packet_mass: 0.0 });
    }

    // ||f||_p^p: essentially-disjoint Gaussian packets
    let fmass: f64 = input.packets.iter().map(|pk| pk.lp_pow(p)).sum();
    let fnorm = fmass.powf(1.0 / p);

    // packet-neighborhood p-mass of BR f: local grids of extent +-1 around
    // each packet center at spacing 1/8 of the finest oscillation scale
    let max_freq = atoms
        .iter()
        .map(|(xi, _)| xi.iter().map(|x| x.abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    let local_pts = 12usize;
    let per_packet: Vec<f64> = input
        .packets
        .par_iter()
        .map(|pk| {
            // quasi Monte-Carlo over the packet core
            let mut acc = 0.0;
            let mut count = 0usize;
            for i in 0..local_pts.pow(n as u32) {
                let mut idx = i;
                let mut x = Vec::with_capacity(n);
                for ax in 0..n {
                    let j = idx % local_pts;
                    idx /= local_pts;
                    let frac = (j as f64 + 0.5) / local_pts as f64;
                    x.push(pk.center[ax] - 1.0 + 2.0 * frac);
                }
                acc += eval_atoms(&atoms, &x).norm().powf(p);
                count += 1;
            }
            acc / count as f64 * 2f64.powi(n as i32)
        })
        .collect();
    let packet_mass: f64 = per_packet.iter().sum();

    // focal-patch p-mass: coherence region of size ~ 1/spread per axis
    let patch_half = (2.0 / max_freq.max(1.0)).max(1e-6);
    let patch_pts = 33usize;
    let mut focal_mass = 0.0;
    let samples: Vec<Vec<f64>> = (0..patch_pts.pow(n as u32))
        .map(|i| {
            let mut idx = i;
            let mut x = Vec::with_capacity(n);
            for ax in 0..n {
                let j = idx % patch_pts;
                idx /= patch_pts;
                let frac = (j as f64 + 0.5) / patch_pts as f64;
                x.push(input.focus[ax] - patch_half + 2.0 * patch_half * frac);
            }
            x
        })
        .collect();
    let vals: Vec<f64> = samples
        .par_iter()
        .map(|x| eval_atoms(&atoms, x).norm().powf(p))
        .collect();
    let patch_vol = (2.0 * patch_half).powi(n as i32);
    focal_mass += vals.iter().sum::<f64>() / vals.len() as f64 * patch_vol;

    let lhs = (packet_mass + focal_mass).powf(1.0 / p);
    let rep = rep.finish(lhs, fnorm, started);
    Ok(ExtremalBrReport { report: rep, focal_mass, packet_mass })
}

/// Focusing shift family for the local-smoothing surrogate: per s, pick
/// `n_s = t (gamma(s'), 1)` with t in [1, 2], |s' - s| <= delta, minimizing
/// the transverse distance of the shifted tile's axis line from a common
/// point.
pub fn focusing_shifts(
    curve: &crate::curve::PolyCurve,
    tuple: &AdmissibleTuple,
    s_net: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let n = tuple.n;
    let delta = tuple.delta_product().value();
    let r = tuple.r.value();
    // common target: the shift at the net midpoint with t = 1.5
    let s_mid = s_net[s_net.len() / 2];
    let gmid = curve.eval(s_mid);
    let mut target: Vec<f64> = gmid.iter().map(|g| 1.5 * r * g).collect();
    target.push(1.5 * r);
    let mut out = Vec::with_capacity(s_net.len());
    for &s in s_net {
        let frame = frenet_frame(curve, s, true)?;
        let axis = &frame.vectors[n]; // the flat direction e_{n+1}(s)
        let mut best: Option<(f64, Vec<f64>)> = None;
        for it in 0..65 {
            let t = 1.0 + it as f64 / 64.0;
            for is in 0..9 {
                let sp = (s - delta + 2.0 * delta * is as f64 / 8.0).clamp(0.0, 1.0);
                let g = curve.eval(sp);
                let mut shift: Vec<f64> = g.iter().map(|x| t * r * x).collect();
                shift.push(t * r);
                // transverse distance of target - shift from the axis line
                let rel: Vec<f64> = target.iter().zip(&shift).map(|(a, b)| a - b).collect();
                let along: f64 = rel.iter().zip(axis).map(|(a, b)| a * b).sum();
                let trans2: f64 = rel
                    .iter()
                    .zip(axis)
                    .map(|(a, b)| a - along * b)
                    .map(|v| v * v)
                    .sum();
                if best.as_ref().map(|(bt, _)| trans2 < *bt).unwrap_or(true) {
                    best = Some((trans2, shift));
                }
            }
        }
        out.push(best.expect("grid search nonempty").1);
    }
    Ok(out)
}
