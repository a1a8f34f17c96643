//! Admissible tuples, rho-sequences and (delta,nu)-planks.

use crate::error::{Error, Result};
use crate::frame::FrenetFrame;
use crate::scale::Scale;

/// `D_k(d_1,...,d_{k-1}) = (R d_1^n d_2^(n-1) ... d_{k-1}^(n+2-k))^(-1/(n+1-k))`,
/// evaluated exactly in log space. `k` is 1-based; the empty prefix gives
/// `R^(-1/n)`.
pub fn scale_d(prefix: &[Scale], r: Scale, n: usize, k: usize) -> Result<Scale> {
    if k < 1 || k > n - 1 {
        return Err(Error::Invalid(format!("scale_D index k={k} out of range for n={n}")));
    }
    if prefix.len() + 1 != k {
        return Err(Error::Invalid(format!(
            "scale_D expects {} prefix entries for k={k}, got {}",
            k - 1,
            prefix.len()
        )));
    }
    let mut acc = r;
    for (i, d) in prefix.iter().enumerate() {
        // delta_i carries exponent n+1-i (1-based i)
        acc = acc.mul(&d.powi((n - i) as i64));
    }
    Ok(acc.root((n + 1 - k) as i64).recip())
}

/// The chain `D_k(prefix) = {1, 2^-1, ..., 2^-m_k, D_k}` of admissible values.
pub fn chain(prefix: &[Scale], r: Scale, n: usize, k: usize) -> Result<Vec<Scale>> {
    let terminal = scale_d(prefix, r, n, k)?;
    let mut out = Vec::new();
    let mut m = 0i64;
    while Scale::pow2(-m) > terminal {
        out.push(Scale::pow2(-m));
        m += 1;
    }
    out.push(terminal);
    Ok(out)
}

/// An admissible tuple at scale R, with its sign pattern. `nus` may be all
/// zeros when only the delta-part matters.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibleTuple {
    pub n: usize,
    pub r: Scale,
    pub deltas: Vec<Scale>,
    pub nus: Vec<i8>,
}

impl AdmissibleTuple {
    pub fn new(n: usize, r: Scale, deltas: Vec<Scale>) -> AdmissibleTuple {
        let nus = vec![0; deltas.len()];
        AdmissibleTuple { n, r, deltas, nus }
    }

    /// rho_k = d_1^k d_2^(k-1) ... d_k; rho_0 = 1, rho_n = 1/R.
    pub fn rho(&self, k: usize) -> Scale {
        if k == 0 {
            return Scale::ONE;
        }
        if k == self.n {
            let mut acc = Scale::ONE;
            for (i, d) in self.deltas.iter().enumerate() {
                acc = acc.mul(&d.powi((self.n - i) as i64));
            }
            return acc;
        }
        let mut acc = Scale::ONE;
        for i in 0..k {
            acc = Scale::mul(&acc, &self.deltas[i].powi((k - i) as i64));
        }
        acc
    }

    /// delta = prod_i delta_i.
    pub fn delta_product(&self) -> Scale {
        let mut acc = Scale::ONE;
        for d in &self.deltas {
            acc = acc.mul(d);
        }
        acc
    }

    /// Exact check that rho_n = 1/R.
    pub fn rho_identity_holds(&self) -> bool {
        self.rho(self.n) == self.r.recip()
    }

    /// Index (1-based) of the terminal choice, if any delta_k equals
    /// D_k(prefix) for k <= n-2. After it, the tuple is all ones.
    pub fn terminal_index(&self) -> Option<usize> {
        let n = self.n;
        for k in 1..=n.saturating_sub(2) {
            let d = scale_d(&self.deltas[..k - 1], self.r, n, k).ok()?;
            if self.deltas[k - 1] == d {
                return Some(k);
            }
        }
        None
    }

    /// All admissible sign patterns for this delta-part.
    pub fn expand_nus(&self) -> Vec<Vec<i8>> {
        let n = self.n;
        let terminal = self.terminal_index();
        let mut patterns: Vec<Vec<i8>> = vec![Vec::new()];
        for k in 1..=n - 1 {
            let after_terminal = terminal.map(|t| k > t).unwrap_or(false);
            let choices: &[i8] = if after_terminal {
                &[0]
            } else if k == n - 1 {
                &[1, -1]
            } else if self.deltas[k - 1].is_one() {
                &[0, 1, -1]
            } else {
                &[1, -1]
            };
            let mut next = Vec::with_capacity(patterns.len() * choices.len());
            for p in &patterns {
                for &c in choices {
                    let mut q = p.clone();
                    q.push(c);
                    next.push(q);
                }
            }
            patterns = next;
        }
        patterns
    }

    pub fn with_nus(&self, nus: Vec<i8>) -> AdmissibleTuple {
        AdmissibleTuple { n: self.n, r: self.r, deltas: self.deltas.clone(), nus }
    }
}

/// Enumerate the delta-parts of all admissible tuples at scale R.
pub fn enumerate_admissible(n: usize, r: Scale) -> Result<Vec<AdmissibleTuple>> {
    if n < 2 {
        return Err(Error::Invalid("admissible tuples need n >= 2".into()));
    }
    if r < Scale::pow2(n as i64) {
        return Err(Error::Invalid(format!("need R >= 2^n, got log2 R = {}", r.log2())));
    }
    if n == 2 {
        let d1 = scale_d(&[], r, 2, 1)?;
        return Ok(vec![AdmissibleTuple::new(2, r, vec![d1])]);
    }
    let mut out = Vec::new();
    let mut stack: Vec<Vec<Scale>> = vec![Vec::new()];
    while let Some(prefix) = stack.pop() {
        let k = prefix.len() + 1;
        if k == n - 1 {
            let last = scale_d(&prefix, r, n, k)?;
            let mut deltas = prefix.clone();
            deltas.push(last);
            out.push(AdmissibleTuple::new(n, r, deltas));
            continue;
        }
        let ch = chain(&prefix, r, n, k)?;
        let terminal = *ch.last().unwrap();
        for d in ch {
            let mut next = prefix.clone();
            next.push(d);
            if d == terminal {
                // remaining entries are forced to one
                while next.len() < n - 1 {
                    next.push(Scale::ONE);
                }
                out.push(AdmissibleTuple::new(n, r, next));
            } else {
                stack.push(next);
            }
        }
    }
    // deterministic order: lexicographic on the exponent ladder
    out.sort_by(|a, b| {
        a.deltas
            .iter()
            .map(|d| (d.log2_num(), d.log2_den()))
            .cmp(b.deltas.iter().map(|d| (d.log2_num(), d.log2_den())))
            .reverse()
    });
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisKind {
    Full,
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug)]
pub struct Axis {
    pub halfwidth: f64,
    pub kind: AxisKind,
}

impl Axis {
    /// Membership of the C-dilated axis range, Definition 2.11 style:
    /// full axes double-sided, signed axes become half-open annuli.
    pub fn contains(&self, a: f64, c: f64) -> bool {
        let w = self.halfwidth;
        match self.kind {
            AxisKind::Full => a.abs() <= c * w,
            AxisKind::Plus => a > w / (c + 1.0) && a <= (1.0 + c) * w,
            AxisKind::Minus => a < -w / (c + 1.0) && a >= -(1.0 + c) * w,
        }
    }

    /// Representative interval of the C-dilated range.
    pub fn interval(&self, c: f64) -> (f64, f64) {
        let w = self.halfwidth;
        match self.kind {
            AxisKind::Full => (-c * w, c * w),
            AxisKind::Plus => (w / (c + 1.0), (1.0 + c) * w),
            AxisKind::Minus => (-(1.0 + c) * w, -w / (c + 1.0)),
        }
    }
}

/// An anisotropic box in frame coordinates. When `frame` is `None` the box
/// is axis-aligned at the origin.
#[derive(Clone, Debug)]
pub struct Plank {
    pub frame: Option<FrenetFrame>,
    pub axes: Vec<Axis>,
}

impl Plank {
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn coords(&self, z: &[f64]) -> Vec<f64> {
        match &self.frame {
            Some(f) => f.coords(z),
            None => z.to_vec(),
        }
    }

    pub fn point(&self, coords: &[f64]) -> Vec<f64> {
        match &self.frame {
            Some(f) => f.point(coords),
            None => coords.to_vec(),
        }
    }

    pub fn contains(&self, z: &[f64], c: f64) -> bool {
        let a = self.coords(z);
        self.axes.iter().zip(&a).all(|(ax, &x)| ax.contains(x, c))
    }

    /// All corner points of the C-dilated representative intervals.
    pub fn vertices(&self, c: f64) -> Vec<Vec<f64>> {
        let m = self.dim();
        let ranges: Vec<(f64, f64)> = self.axes.iter().map(|ax| ax.interval(c)).collect();
        let mut out = Vec::with_capacity(1 << m);
        for mask in 0..(1usize << m) {
            let coords: Vec<f64> = (0..m)
                .map(|i| if mask >> i & 1 == 1 { ranges[i].1 } else { ranges[i].0 })
                .collect();
            out.push(self.point(&coords));
        }
        out
    }

    /// Uniform sample of the C-dilated box.
    pub fn sample(&self, c: f64, rng: &mut impl rand::RngExt) -> Vec<f64> {
        let coords: Vec<f64> = self
            .axes
            .iter()
            .map(|ax| {
                let (lo, hi) = ax.interval(c);
                rng.random_range(lo..hi)
            })
            .collect();
        self.point(&coords)
    }

    /// Membership of the isotropic dilate (about the box center of the
    /// C-dilated representative intervals) by `factor`.
    pub fn contains_isotropic(&self, z: &[f64], c: f64, factor: f64) -> bool {
        let coords = self.coords(z);
        self.axes.iter().zip(&coords).all(|(ax, &a)| {
            let (lo, hi) = ax.interval(c);
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo) * factor;
            a >= mid - half && a <= mid + half
        })
    }

    pub fn volume(&self, c: f64) -> f64 {
        self.axes
            .iter()
            .map(|ax| {
                let (lo, hi) = ax.interval(c);
                hi - lo
            })
            .product()
    }
}

/// The (delta,nu)-plank of Definition 2.6 in rough form: widths `R rho_{i-1}`
/// with sign kind from nu_i, `|a_n| <= R rho_{n-1}`, `|a_{n+1}| <= 1`.
/// The frame must be the cone frame at s (dimension n+1).
pub fn build_plank(tuple: &AdmissibleTuple, frame: FrenetFrame) -> Result<Plank> {
    let n = tuple.n;
    if frame.dim() != n + 1 {
        return Err(Error::Invalid(format!(
            "plank needs a cone frame of dimension {}, got {}",
            n + 1,
            frame.dim()
        )));
    }
    let r = tuple.r;
    let mut axes = Vec::with_capacity(n + 1);
    for i in 1..=n - 1 {
        let w = r.mul(&tuple.rho(i - 1)).value();
        let kind = match tuple.nus[i - 1] {
            0 => AxisKind::Full,
            1 => AxisKind::Plus,
            -1 => AxisKind::Minus,
            v => return Err(Error::Invalid(format!("bad nu value {v}"))),
        };
        axes.push(Axis { halfwidth: w, kind });
    }
    axes.push(Axis { halfwidth: r.mul(&tuple.rho(n - 1)).value(), kind: AxisKind::Full });
    axes.push(Axis { halfwidth: 1.0, kind: AxisKind::Full });
    Ok(Plank { frame: Some(frame), axes })
}

/// Comparability test of Definition 2.12: the C^-1-dilate of each plank is
/// contained in the C-dilate of the other, decided on vertices plus random
/// boundary samples.
pub fn comparable(
    p1: &Plank,
    p2: &Plank,
    c: f64,
    probes: usize,
    rng: &mut impl rand::RngExt,
) -> bool {
    let inner = 1.0 / c;
    let pairs = [(p1, p2), (p2, p1)];
    for (a, b) in pairs {
        for v in a.vertices(inner) {
            if !b.contains(&v, c) {
                return false;
            }
        }
        for _ in 0..probes {
            let z = a.sample(inner, rng);
            if !b.contains(&z, c) {
                return false;
            }
        }
    }
    true
}

/// Monte-Carlo disjointness of C-dilates.
pub fn disjoint(
    p1: &Plank,
    p2: &Plank,
    c: f64,
    probes: usize,
    rng: &mut impl rand::RngExt,
) -> bool {
    for _ in 0..probes {
        let z = p1.sample(c, rng);
        if p2.contains(&z, c) {
            return false;
        }
        let z = p2.sample(c, rng);
        if p1.contains(&z, c) {
            return false;
        }
    }
    true
}

/// Max multiplicity of the C-dilated planks over probe points drawn from
/// their union; for delta-separated s-sets this stays bounded independently
/// of the scale.
pub fn overlap_count(
    planks: &[Plank],
    c: f64,
    num_probes: usize,
    rng: &mut impl rand::RngExt,
) -> Result<usize> {
    if planks.is_empty() {
        return Err(Error::Invalid("overlap_count needs a nonempty plank set".into()));
    }
    let mut worst = 0usize;
    for i in 0..num_probes {
        let host = &planks[i % planks.len()];
        let z = host.sample(c, rng);
        let mult = planks.iter().filter(|p| p.contains(&z, c)).count();
        worst = worst.max(mult);
    }
    Ok(worst)
}
