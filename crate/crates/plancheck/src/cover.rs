//! Canonical block families along a nondegenerate curve: the neighborhood
//! blocks of `M^n(gamma;R)`, the cone blocks of `Gamma_n(gamma;R)` and the
//! truncated k-flat cone blocks, plus dual boxes, wave envelopes and cover
//! verification.

use crate::curve::{solve, PolyCurve};
use crate::error::{Error, Result};
use crate::frame::frenet_frame;
use crate::plank::{Axis, AxisKind, Plank};
use rand::RngExt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    Curve,
    Cone,
    KFlat,
}

/// One canonical block: the set of points `gamma(t) + sum_j lambda_j gamma^(j)(t)`
/// over `t` in a short interval with per-derivative caps on `lambda`, and an
/// optional annular constraint on one lambda coordinate.
#[derive(Clone, Debug)]
pub struct Block {
    pub t_lo: f64,
    pub t_hi: f64,
    /// caps[j-1] bounds |lambda_j| (or the upper edge when `lower` is set)
    pub caps: Vec<f64>,
    /// lower bounds; lambda_j in [lo_j, caps_j] when set, |lambda_j| <= cap otherwise
    pub lower: Vec<Option<f64>>,
    /// sign of the annular coordinate (cone families split the |lambda_1|>=1/2
    /// annulus into two blocks)
    pub sign: i8,
    /// index of the annular coordinate (1-based), if any
    pub annulus_axis: Option<usize>,
    /// whether the zeroth-order term gamma(t) is part of the block
    pub include_base: bool,
}

#[derive(Clone, Debug)]
pub struct BlockFamily {
    pub kind: FamilyKind,
    pub curve: PolyCurve,
    pub r: f64,
    /// block width parameter w (t-spacing; `R^(-1/n)` for the canonical families)
    pub width: f64,
    /// slab index of the first block (boundary slabs give l_min < 0)
    pub l_min: i64,
    pub blocks: Vec<Block>,
}

impl Block {
    pub fn t_center(&self) -> f64 {
        0.5 * (self.t_lo + self.t_hi)
    }
}

impl BlockFamily {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Worst relative constraint violation of the lambda-coordinates of xi
    /// at angular parameter t (<= 0 means inside).
    fn violation(&self, block: &Block, xi: &[f64], t: f64, slack: f64) -> f64 {
        let n = self.curve.dim;
        let mut m = vec![0.0; n * n];
        for j in 1..=n {
            let col = self.curve.eval_derivative_unchecked(t, j);
            for r in 0..n {
                m[r * n + j - 1] = col[r];
            }
        }
        let base = if block.include_base {
            self.curve.eval(t)
        } else {
            vec![0.0; n]
        };
        let mut rhs: Vec<f64> = xi.iter().zip(&base).map(|(a, b)| a - b).collect();
        let Some(lambda) = solve(&mut m, &mut rhs, n) else {
            return f64::INFINITY;
        };
        let mut worst = f64::NEG_INFINITY;
        for (j, &l) in lambda.iter().enumerate() {
            let cap = block.caps[j] * slack;
            let v = match block.lower[j] {
                Some(lo) => {
                    let s = l * block.sign as f64;
                    (s - cap).max(lo / slack - s)
                }
                None => l.abs() - cap,
            };
            worst = worst.max(v / block.caps[j].max(1e-300));
        }
        worst
    }

    /// Decide membership of a frequency point in block `idx`: minimize the
    /// constraint violation over t with a coarse grid plus golden-section
    /// refinement.
    pub fn block_contains(&self, idx: usize, xi: &[f64], slack: f64) -> bool {
        let block = &self.blocks[idx];
        let coarse = 17;
        let mut best_i = 0usize;
        let mut best_v = f64::INFINITY;
        for it in 0..coarse {
            let t = block.t_lo
                + (block.t_hi - block.t_lo) * it as f64 / (coarse - 1) as f64;
            let v = self.violation(block, xi, t, slack);
            if v <= 0.0 {
                return true;
            }
            if v < best_v {
                best_v = v;
                best_i = it;
            }
        }
        if !best_v.is_finite() {
            return false;
        }
        // refine around the best coarse sample
        let step = (block.t_hi - block.t_lo) / (coarse - 1) as f64;
        let t_best = block.t_lo + best_i as f64 * step;
        let (mut a, mut b) = (
            (t_best - step).max(block.t_lo),
            (t_best + step).min(block.t_hi),
        );
        let phi = 0.618_033_988_749_894_8;
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let mut f1 = self.violation(block, xi, x1, slack);
        let mut f2 = self.violation(block, xi, x2, slack);
        for _ in 0..40 {
            if f1.min(f2) <= 0.0 {
                return true;
            }
            if f1 < f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = self.violation(block, xi, x1, slack);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = self.violation(block, xi, x2, slack);
            }
        }
        f1.min(f2) <= 0.0
    }

    /// Membership across the family by the geometric (lambda-solve) test.
    pub fn containing_blocks(&self, xi: &[f64], slack: f64) -> Vec<usize> {
        (0..self.blocks.len())
            .filter(|&i| self.block_contains(i, xi, slack))
            .collect()
    }

    /// The angular classification coordinate of a frequency point: the last
    /// coordinate for curve blocks (`xi_n ~ t + lambda_1`), the ratio
    /// `xi_{n-1}/xi_n ~ t + lambda_2/lambda_1` for cone blocks. The
    /// canonical block definition intersects the region with half-open slabs
    /// `[l w, (l+2) w)` in this coordinate, so the cover is exactly finitely
    /// overlapping.
    pub fn slab_coordinate(&self, xi: &[f64]) -> Option<(f64, i8)> {
        let n = self.curve.dim;
        match self.kind {
            FamilyKind::Curve => Some((xi[n - 1], 1)),
            FamilyKind::Cone => {
                let flat = xi[n - 1];
                if flat.abs() < 1e-12 {
                    return None;
                }
                Some((xi[n - 2] / flat, if flat >= 0.0 { 1 } else { -1 }))
            }
            FamilyKind::KFlat => None,
        }
    }

    /// Blocks whose slab contains the point (sign-matched for cone blocks).
    /// Points must already belong to the nominal region.
    pub fn slab_blocks(&self, xi: &[f64]) -> Vec<usize> {
        let Some((c, sign)) = self.slab_coordinate(xi) else {
            return self
                .containing_blocks(xi, 1.0 + 1e-9);
        };
        self.blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| {
                c >= b.t_lo && c < b.t_hi && (b.annulus_axis.is_none() || b.sign == sign)
            })
            .map(|(i, _)| i)
            .collect()
    }

    /// Canonical disjoint block assignment: the slab coordinate c picks the
    /// unique half-open cell `[l w, (l+1) w)` inside the double-cover slab
    /// `[l w, (l+2) w)`. Out-of-range coordinates clamp to the end blocks.
    pub fn assign_block(&self, c: f64, sign: i8) -> usize {
        let a = self.curve.domain.0;
        let per_l = if matches!(self.kind, FamilyKind::Cone) { 2 } else { 1 };
        let slots = self.blocks.len() / per_l;
        let l = (((c - a) / self.width).floor() as i64 - self.l_min)
            .clamp(0, slots as i64 - 1) as usize;
        if per_l == 2 {
            2 * l + usize::from(sign < 0)
        } else {
            l
        }
    }

    /// Whether a frequency point lies in the nominal region (lambda-box at
    /// some angular parameter of the domain; both sign branches are tried
    /// for annular families).
    pub fn in_region(&self, xi: &[f64], slack: f64) -> bool {
        let (a, b) = self.curve.domain;
        let steps = ((b - a).ceil() as usize * 4).clamp(33, 513);
        let mut signs: Vec<i8> = self.blocks.iter().map(|bl| bl.sign).collect();
        signs.sort_unstable();
        signs.dedup();
        let block0 = &self.blocks[0];
        for i in 0..=steps {
            let u = a + (b - a) * i as f64 / steps as f64;
            for &sign in &signs {
                let probe = Block {
                    t_lo: u,
                    t_hi: u,
                    caps: block0.caps.clone(),
                    lower: block0.lower.clone(),
                    sign,
                    annulus_axis: block0.annulus_axis,
                    include_base: block0.include_base,
                };
                if self.violation(&probe, xi, u, slack) <= 0.0 {
                    return true;
                }
            }
        }
        false
    }

    /// Frame-coordinate plank comparable to block `idx`: halfwidth `w^i`
    /// (curve) or `w^(i-1)` (cone) on frame axis i, times `enlarge`.
    pub fn block_plank(&self, idx: usize, enlarge: f64) -> Result<Plank> {
        let block = &self.blocks[idx];
        let n = self.curve.dim;
        let f = frenet_frame(&self.curve, block.t_center(), false)?;
        let mut axes = Vec::with_capacity(n);
        for i in 1..=n {
            let (halfwidth, kind) = match self.kind {
                FamilyKind::Curve => (self.width.powi(i as i32) * enlarge, AxisKind::Full),
                FamilyKind::Cone | FamilyKind::KFlat => {
                    let w = self.width.powi(i as i32 - 1) * enlarge;
                    if block.annulus_axis == Some(i) {
                        let kind = if block.sign >= 0 { AxisKind::Plus } else { AxisKind::Minus };
                        (w, kind)
                    } else {
                        (w, AxisKind::Full)
                    }
                }
            };
            axes.push(Axis { halfwidth, kind });
        }
        Ok(Plank { frame: Some(f), axes })
    }
}

/// Canonical curve blocks: t-intervals `[l w, (l+2) w)` with caps
/// `|lambda_j| <= w^j`, `w = R^(-1/n)`, covering `M^n(gamma; R)` over the
/// curve's domain.
pub fn theta_blocks(curve: &PolyCurve, r: f64) -> Result<BlockFamily> {
    let n = curve.dim;
    if r < (1u64 << n) as f64 {
        return Err(Error::Invalid("block family needs R >= 2^n".into()));
    }
    let w = r.powf(-1.0 / n as f64);
    blocks_with_width(curve, r, w, FamilyKind::Curve)
}

/// Curve blocks at an explicit width parameter; the rescaled lattice models
/// use w = 1 on a long domain.
pub fn theta_blocks_width(curve: &PolyCurve, r: f64, w: f64) -> Result<BlockFamily> {
    blocks_with_width(curve, r, w, FamilyKind::Curve)
}

fn blocks_with_width(
    curve: &PolyCurve,
    r: f64,
    w: f64,
    kind: FamilyKind,
) -> Result<BlockFamily> {
    let n = curve.dim;
    let (a, b) = curve.domain;
    let count = (((b - a) / w).round() as i64).max(1);
    // boundary slabs: the slab coordinate of a region point reaches one
    // block width past the domain (two for the cone's angular ratio)
    let extend: i64 = match kind {
        FamilyKind::Curve => 1,
        FamilyKind::Cone => 2,
        FamilyKind::KFlat => 0,
    };
    let mut blocks = Vec::new();
    for l in -extend..count + extend {
        let t_lo = a + l as f64 * w;
        let t_hi = t_lo + 2.0 * w;
        match kind {
            FamilyKind::Curve => {
                let caps: Vec<f64> = (1..=n).map(|j| w.powi(j as i32)).collect();
                blocks.push(Block {
                    t_lo,
                    t_hi,
                    caps,
                    lower: vec![None; n],
                    sign: 1,
                    annulus_axis: None,
                    include_base: true,
                });
            }
            FamilyKind::Cone => {
                let caps: Vec<f64> = (1..=n).map(|j| w.powi(j as i32 - 1)).collect();
                for sign in [1i8, -1] {
                    let mut lower = vec![None; n];
                    lower[0] = Some(0.5);
                    blocks.push(Block {
                        t_lo,
                        t_hi,
                        caps: caps.clone(),
                        lower,
                        sign,
                        annulus_axis: Some(1),
                        include_base: false,
                    });
                }
            }
            FamilyKind::KFlat => unreachable!("k-flat blocks are built separately"),
        }
    }
    Ok(BlockFamily { kind, curve: curve.clone(), r, width: w, l_min: -extend, blocks })
}

/// Cone blocks of `Gamma_n(gamma;R)`: caps `|lambda_i| <= R^(-(i-1)/n)` with
/// the `|lambda_1| >= 1/2` annulus split into signed blocks.
pub fn cone_blocks(curve: &PolyCurve, r: f64) -> Result<BlockFamily> {
    let n = curve.dim;
    if r < (1u64 << n) as f64 {
        return Err(Error::Invalid("block family needs R >= 2^n".into()));
    }
    let w = r.powf(-1.0 / n as f64);
    blocks_with_width(curve, r, w, FamilyKind::Cone)
}

pub fn cone_blocks_width(curve: &PolyCurve, r: f64, w: f64) -> Result<BlockFamily> {
    blocks_with_width(curve, r, w, FamilyKind::Cone)
}

/// Truncated k-flat cone blocks: the curve lives in R^(n+k); flat coordinates
/// `1..k` are confined to `[h_j, h_j + 1/K]`, the rest capped by
/// `min(1, R^((k-j)/n))`.
pub fn kflat_blocks(
    curve: &PolyCurve,
    n: usize,
    k: usize,
    big_k: f64,
    h: &[f64],
    r: f64,
) -> Result<BlockFamily> {
    let dim = curve.dim;
    if dim != n + k {
        return Err(Error::Invalid(format!(
            "k-flat family needs a curve in dimension n+k={}, got {}",
            n + k,
            dim
        )));
    }
    if h.len() != k {
        return Err(Error::Invalid("h-vector length must equal k".into()));
    }
    if h.iter().any(|x| x.abs() > 1.0) || h[k - 1].abs() < 0.5 {
        return Err(Error::Invalid(
            "h-vector needs |h_i| <= 1 and |h_k| >= 1/2".into(),
        ));
    }
    let w = r.powf(-1.0 / n as f64);
    let (a, b) = curve.domain;
    let count = (((b - a) / w).round() as usize).max(1);
    let mut blocks = Vec::new();
    for l in 0..count {
        let t_lo = a + l as f64 * w;
        let t_hi = (t_lo + w).min(b);
        let mut caps = Vec::with_capacity(dim);
        let mut lower = Vec::with_capacity(dim);
        for j in 1..=dim {
            if j <= k {
                caps.push(h[j - 1] + 1.0 / big_k);
                lower.push(Some(h[j - 1]));
            } else {
                caps.push(r.powf((k as f64 - j as f64) / n as f64).min(1.0));
                lower.push(None);
            }
        }
        blocks.push(Block {
            t_lo,
            t_hi,
            caps,
            lower,
            sign: 1,
            annulus_axis: None,
            include_base: false,
        });
    }
    Ok(BlockFamily {
        kind: FamilyKind::KFlat,
        curve: curve.clone(),
        r,
        width: w,
        l_min: 0,
        blocks,
    })
}

/// Dual box: reciprocal halfwidths on the same frame. Annular axes dualize
/// via their bounding box.
pub fn dual_box(plank: &Plank) -> Result<Plank> {
    let axes = plank
        .axes
        .iter()
        .map(|ax| {
            if ax.halfwidth <= 0.0 {
                return Err(Error::Invalid("zero-width axis cannot be dualized".into()));
            }
            Ok(Axis { halfwidth: 1.0 / ax.halfwidth, kind: AxisKind::Full })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Plank { frame: plank.frame.clone(), axes })
}

/// The wave envelope `U_{tau,R}`: the dual box of tau scaled isotropically so
/// its longest axis reaches R, giving `s^(n-1) R x s^(n-2) R x ... x R` in
/// the curve case.
#[derive(Clone, Debug)]
pub struct WaveEnvelopeFamily {
    pub envelope: Plank,
    /// physical box halfwidths the tiling has to cover
    pub physical: Vec<f64>,
    /// lattice offsets (frame coordinates) of the covering tiles
    pub offsets: Vec<Vec<f64>>,
}

pub fn wave_envelopes(
    tau: &Plank,
    r: f64,
    physical_halfwidths: &[f64],
) -> Result<WaveEnvelopeFamily> {
    let n = tau.dim();
    if physical_halfwidths.len() != n {
        return Err(Error::Invalid("physical box dimension mismatch".into()));
    }
    let dual = dual_box(tau)?;
    let longest = dual.axes.iter().map(|a| a.halfwidth).fold(f64::MIN, f64::max);
    let factor = r / longest;
    let axes: Vec<Axis> = dual
        .axes
        .iter()
        .map(|a| Axis { halfwidth: a.halfwidth * factor, kind: AxisKind::Full })
        .collect();
    let envelope = Plank { frame: tau.frame.clone(), axes };
    let steps: Vec<f64> = envelope.axes.iter().map(|a| 2.0 * a.halfwidth).collect();
    let counts: Vec<i64> = steps
        .iter()
        .zip(physical_halfwidths)
        .map(|(s, p)| ((p / s).ceil() as i64).max(0))
        .collect();
    let mut offsets = vec![vec![]];
    for (step, count) in steps.iter().zip(&counts) {
        let mut next = Vec::new();
        for base in &offsets {
            for k in -count..=*count {
                let mut o: Vec<f64> = base.clone();
                o.push(*step * k as f64);
                next.push(o);
            }
        }
        offsets = next;
    }
    Ok(WaveEnvelopeFamily { envelope, physical: physical_halfwidths.to_vec(), offsets })
}

/// Sample the nominal region of a family (uniform in t and lambda).
pub fn sample_region(family: &BlockFamily, rng: &mut impl RngExt) -> Vec<f64> {
    let n = family.curve.dim;
    let (a, b) = family.curve.domain;
    let t = rng.random_range(a..b);
    let mut xi = if matches!(family.kind, FamilyKind::Curve) {
        family.curve.eval(t)
    } else {
        vec![0.0; n]
    };
    for j in 1..=n {
        let lambda = match family.kind {
            FamilyKind::Curve => {
                let cap = family.width.powi(j as i32);
                rng.random_range(-cap..cap)
            }
            FamilyKind::Cone => {
                let cap = family.width.powi(j as i32 - 1);
                if j == 1 {
                    let v = rng.random_range(0.5..1.0);
                    if rng.random::<bool>() {
                        v
                    } else {
                        -v
                    }
                } else {
                    rng.random_range(-cap..cap)
                }
            }
            FamilyKind::KFlat => {
                let block = &family.blocks[0];
                match block.lower[j - 1] {
                    Some(lo) => rng.random_range(lo..block.caps[j - 1]),
                    None => rng.random_range(-block.caps[j - 1]..block.caps[j - 1]),
                }
            }
        };
        let d = family.curve.eval_derivative_unchecked(t, j);
        for (x, g) in xi.iter_mut().zip(&d) {
            *x += lambda * g;
        }
    }
    xi
}

pub struct CoverReport {
    pub coverage_fraction: f64,
    pub max_multiplicity: usize,
    pub probes: usize,
}

/// Draw probes from the nominal region and measure coverage and multiplicity.
pub fn cover_verify(
    family: &BlockFamily,
    num_probes: usize,
    _slack: f64,
    rng: &mut impl RngExt,
) -> CoverReport {
    let mut covered = 0usize;
    let mut max_mult = 0usize;
    for _ in 0..num_probes {
        let xi = sample_region(family, rng);
        let hits = family.slab_blocks(&xi).len();
        if hits > 0 {
            covered += 1;
        }
        max_mult = max_mult.max(hits);
    }
    CoverReport {
        coverage_fraction: covered as f64 / num_probes as f64,
        max_multiplicity: max_mult,
        probes: num_probes,
    }
}

/// Lattice probes of the curve family (exhaustive low-dimensional checks).
pub fn cover_verify_lattice(family: &BlockFamily, per_axis: usize) -> CoverReport {
    let n = family.curve.dim;
    let (a, b) = family.curve.domain;
    let mut covered = 0usize;
    let mut max_mult = 0usize;
    let mut probes = 0usize;
    for it in 0..per_axis {
        let t = a + (b - a) * (it as f64 + 0.5) / per_axis as f64;
        for il in 0..per_axis {
            let mut xi = family.curve.eval(t);
            let frac = -1.0 + 2.0 * (il as f64 + 0.5) / per_axis as f64;
            for j in 1..=n {
                let cap = family.width.powi(j as i32);
                let lambda = frac * cap;
                let d = family.curve.eval_derivative_unchecked(t, j);
                for (x, g) in xi.iter_mut().zip(&d) {
                    *x += lambda * g;
                }
            }
            probes += 1;
            let hits = family.slab_blocks(&xi).len();
            if hits > 0 {
                covered += 1;
            }
            max_mult = max_mult.max(hits);
        }
    }
    CoverReport {
        coverage_fraction: covered as f64 / probes as f64,
        max_multiplicity: max_mult,
        probes,
    }
}
