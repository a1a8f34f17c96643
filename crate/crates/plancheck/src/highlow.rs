//! High/low decomposition of the box `Q[delta]`: critical scales sigma_k,
//! the nested boxes Q[delta; <= sigma], dyadic shells and their exact
//! partition into rectangular pieces, and coarsening of tuples.

use crate::error::{Error, Result};
use crate::plank::AdmissibleTuple;
use crate::scale::{Endpoint, ExactInterval, Scale};

/// sigma_k = (rho_n / rho_{k-1})^(1/(n+1-k)), exact. Defined for 1 <= k <= n;
/// sigma_{n-1} = sigma_n = delta.
pub fn critical_sigma(tuple: &AdmissibleTuple, k: usize) -> Result<Scale> {
    let n = tuple.n;
    if k < 1 || k > n {
        return Err(Error::Invalid(format!("sigma index {k} out of range")));
    }
    Ok(tuple.rho(n).div(&tuple.rho(k - 1)).root((n + 1 - k) as i64))
}

/// The decreasing list sigma_1 >= ... >= sigma_{n-2} of genuinely critical scales.
pub fn critical_sigmas(tuple: &AdmissibleTuple) -> Result<Vec<Scale>> {
    (1..=tuple.n.saturating_sub(2)).map(|k| critical_sigma(tuple, k)).collect()
}

/// Axis halfwidths of `Q[delta; <= sigma]`: min of sigma^(i-n-1) and R rho_(i-1)
/// for axes i = 1..n+1.
pub fn highlow_halfwidths(tuple: &AdmissibleTuple, sigma: Scale) -> Result<Vec<Scale>> {
    let n = tuple.n;
    let delta = tuple.delta_product();
    if sigma < delta || sigma > Scale::ONE {
        return Err(Error::Invalid(format!(
            "sigma = 2^{} outside [delta, 1] = [2^{}, 1]",
            sigma.log2(),
            delta.log2()
        )));
    }
    Ok((1..=n + 1)
        .map(|i| {
            let a = sigma.powi(i as i64 - n as i64 - 1);
            let b = tuple.r.mul(&tuple.rho(i - 1));
            a.min(b)
        })
        .collect())
}

/// Axis-aligned box with exact halfwidths (to be placed in a frame at s).
pub fn highlow_box(tuple: &AdmissibleTuple, sigma: Scale) -> Result<Vec<ExactInterval>> {
    Ok(highlow_halfwidths(tuple, sigma)?
        .into_iter()
        .map(ExactInterval::symmetric)
        .collect())
}

/// One rectangular piece of a shell partition, with its dyadic labels.
#[derive(Clone, Debug)]
pub struct ShellPiece {
    pub intervals: Vec<ExactInterval>,
    /// axis (1-based) carrying the annulus of the V_m split
    pub m_axis: usize,
    pub sign: i8,
    /// per-axis outer radii chosen by the dyadic algorithm (the mu labels)
    pub mu: Vec<Scale>,
    pub iota: Vec<i8>,
}

impl ShellPiece {
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|i| i.length()).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.intervals.iter().zip(x).enumerate().all(|(i, (iv, &xi))| {
            let annular = i + 1 == self.m_axis
                || (i < self.m_axis - 1 && self.iota.get(i).map(|s| *s != 0).unwrap_or(false));
            if annular {
                if self.piece_sign(i) > 0 {
                    xi > iv.lo.value() && xi <= iv.hi.value()
                } else {
                    xi >= iv.lo.value() && xi < iv.hi.value()
                }
            } else {
                xi >= iv.lo.value() && xi < iv.hi.value()
            }
        })
    }

    fn piece_sign(&self, axis0: usize) -> i8 {
        if axis0 + 1 == self.m_axis {
            self.sign
        } else {
            self.iota.get(axis0).copied().unwrap_or(0)
        }
    }
}

/// Partition of the shell `Q[delta; <= sigma] \ Q[delta; <= 2 sigma]` into
/// rectangular boxes: first the "first protruding axis" split V_{m,+-},
/// then the dyadic subdivision of the lower axes. Exact cover.
pub fn highlow_shell_partition(
    tuple: &AdmissibleTuple,
    sigma: Scale,
) -> Result<Vec<ShellPiece>> {
    let n = tuple.n;
    if sigma == Scale::ONE {
        // Q[delta; 1] is the unit cube: a single piece.
        return Ok(vec![ShellPiece {
            intervals: vec![ExactInterval::symmetric(Scale::ONE); n + 1],
            m_axis: n + 1,
            sign: 1,
            mu: vec![Scale::ONE; n + 1],
            iota: vec![0; n + 1],
        }]);
    }
    let outer = highlow_halfwidths(tuple, sigma)?;
    let two_sigma = sigma.mul(&Scale::pow2(1)).min(Scale::ONE);
    let inner = highlow_halfwidths(tuple, two_sigma)?;

    let mut out = Vec::new();
    for m in 1..=n + 1 {
        if inner[m - 1] >= outer[m - 1] {
            continue; // no protrusion possible on this axis
        }
        for sign in [1i8, -1] {
            let annulus = if sign > 0 {
                ExactInterval::new(Endpoint::Pos(inner[m - 1]), Endpoint::Pos(outer[m - 1]))
            } else {
                ExactInterval::new(Endpoint::Neg(outer[m - 1]), Endpoint::Neg(inner[m - 1]))
            };
            // axes below m are confined to the inner radii; axes above m
            // are free up to the outer radii
            let below: Vec<Scale> = inner[..m - 1].to_vec();
            let above: Vec<Scale> = outer[m..].to_vec();
            // dyadic subdivision of the below-axes, from axis m-1 down to 1,
            // cutoff chain seeded by the annulus scale
            let seed = outer[m - 1];
            subdivide_below(&below, seed, &annulus, &above, m, sign, &mut out);
        }
    }
    Ok(out)
}

fn subdivide_below(
    below: &[Scale],
    seed: Scale,
    annulus: &ExactInterval,
    above: &[Scale],
    m_axis: usize,
    sign: i8,
    out: &mut Vec<ShellPiece>,
) {
    // states: per-axis interval chosen so far (from axis m-1 downward)
    struct St {
        ivs: Vec<ExactInterval>, // reversed order (axis m-1 first)
        mu: Vec<Scale>,
        iota: Vec<i8>,
        cutoff: Scale,
    }
    let mut stack = vec![St { ivs: Vec::new(), mu: Vec::new(), iota: Vec::new(), cutoff: seed }];
    let mut finished: Vec<St> = Vec::new();
    while let Some(st) = stack.pop() {
        let idx = st.ivs.len();
        if idx == below.len() {
            finished.push(st);
            continue;
        }
        // axis index (0-based from the top): axis m-1-idx, radius:
        let r_i = below[below.len() - 1 - idx];
        let cut = st.cutoff.min(r_i);
        // central box [-cut, cut]
        {
            let mut nxt = St {
                ivs: st.ivs.clone(),
                mu: st.mu.clone(),
                iota: st.iota.clone(),
                cutoff: cut,
            };
            nxt.ivs.push(ExactInterval::symmetric(cut));
            nxt.mu.push(cut);
            nxt.iota.push(0);
            stack.push(nxt);
        }
        // dyadic annuli from cut up to r_i: (r/2^j+1, r/2^j]; the innermost
        // one is clipped to the cutoff when the ratio is not a power of two
        let mut hi = r_i;
        while hi > cut {
            let lo = hi.mul(&Scale::HALF).max(cut);
            for s in [1i8, -1] {
                let iv = if s > 0 {
                    ExactInterval::new(Endpoint::Pos(lo), Endpoint::Pos(hi))
                } else {
                    ExactInterval::new(Endpoint::Neg(hi), Endpoint::Neg(lo))
                };
                let mut nxt = St {
                    ivs: st.ivs.clone(),
                    mu: st.mu.clone(),
                    iota: st.iota.clone(),
                    cutoff: lo,
                };
                nxt.ivs.push(iv);
                nxt.mu.push(hi);
                nxt.iota.push(s);
                stack.push(nxt);
            }
            hi = lo;
        }
    }
    for st in finished {
        // assemble full axis list: below-axes were built top-down
        let mut intervals: Vec<ExactInterval> = st.ivs.iter().rev().cloned().collect();
        intervals.push(*annulus);
        intervals.extend(above.iter().map(|w| ExactInterval::symmetric(*w)));
        let mut mu: Vec<Scale> = st.mu.iter().rev().cloned().collect();
        let mut iota: Vec<i8> = st.iota.iter().rev().cloned().collect();
        mu.push(seed);
        iota.push(sign);
        out.push(ShellPiece { intervals, m_axis, sign, mu, iota });
    }
}

/// The dyadic sigma ladder for the shell decomposition of `Q[delta]`:
/// dyadic values in [delta, 1], plus a non-dyadic bottom entry when delta
/// itself is not a power of two.
pub fn sigma_ladder(tuple: &AdmissibleTuple) -> Vec<Scale> {
    let delta = tuple.delta_product();
    let mut out = Vec::new();
    let mut s = Scale::ONE;
    while s > delta {
        out.push(s);
        s = s.mul(&Scale::HALF);
    }
    out.push(s.max(delta)); // delta itself (dyadic or the clipped bottom)
    if !delta.is_dyadic() {
        // replace the clipped bottom by the dyadic just above delta, then
        // delta itself
        out.pop();
        let bottom_dyadic = delta.dyadic_ceil();
        if bottom_dyadic < *out.last().unwrap_or(&Scale::ONE) {
            out.push(bottom_dyadic);
        }
        out.push(delta);
    }
    out.dedup();
    out
}

/// Coarsen a tuple to product sigma, per the plank comparison at different
/// scales: find l with d_1...d_{l-1} > sigma >= d_1...d_l, replace d_l by
/// d_l' = sigma / (d_1...d_{l-1}) and set the trailing entries to one.
/// Returns the new tuple, admissible at scale r = prod (d_i')^-(n+1-i).
pub fn coarsen(tuple: &AdmissibleTuple, sigma: Scale) -> Result<AdmissibleTuple> {
    let n = tuple.n;
    let delta = tuple.delta_product();
    if sigma < delta || sigma > Scale::ONE {
        return Err(Error::Invalid("coarsen needs delta <= sigma <= 1".into()));
    }
    if sigma == delta {
        return Ok(tuple.clone());
    }
    if sigma == Scale::ONE {
        let deltas = vec![Scale::ONE; n - 1];
        let t = AdmissibleTuple { n, r: Scale::ONE, deltas, nus: vec![0; n - 1] };
        return Ok(t);
    }
    let mut prefix = Scale::ONE;
    for l in 1..=n - 1 {
        let with_l = prefix.mul(&tuple.deltas[l - 1]);
        if with_l <= sigma && sigma < prefix {
            let dl = sigma.div(&prefix);
            let mut deltas: Vec<Scale> = tuple.deltas[..l - 1].to_vec();
            deltas.push(dl);
            while deltas.len() < n - 1 {
                deltas.push(Scale::ONE);
            }
            let mut nus: Vec<i8> = tuple.nus[..l].to_vec();
            while nus.len() < n - 1 {
                nus.push(0);
            }
            // scale at which the new tuple is admissible
            let mut r_new = Scale::ONE;
            for (i, d) in deltas.iter().enumerate() {
                r_new = r_new.mul(&d.powi((n - i) as i64));
            }
            let r_new = r_new.recip();
            return Ok(AdmissibleTuple { n, r: r_new, deltas, nus });
        }
        prefix = with_l;
    }
    Err(Error::Invalid("no admissible coarsening index found".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plank::enumerate_admissible;
    use rand::RngExt;
    use rand::SeedableRng;

    fn tuple_n3() -> AdmissibleTuple {
        // n=3, R=4096, deltas (1/4, 1/8)
        let r = Scale::pow2(12);
        let t = enumerate_admissible(3, r)
            .unwrap()
            .into_iter()
            .find(|t| t.deltas[0] == Scale::pow2(-2))
            .unwrap();
        assert_eq!(t.deltas[1], Scale::pow2(-3));
        t.with_nus(vec![1, 1])
    }

    #[test]
    fn critical_sigma_values() {
        let t = tuple_n3();
        // sigma_1 = (rho_3/rho_0)^(1/3) = R^(-1/3) = 2^-4
        assert_eq!(critical_sigma(&t, 1).unwrap(), Scale::pow2(-4));
        // sigma_2 = (rho_3/rho_1)^(1/2) = (2^-12 * 4)^(1/2) = 2^-5 = delta
        assert_eq!(critical_sigma(&t, 2).unwrap(), Scale::pow2(-5));
        // sigma_{n-1} = sigma_n = delta exactly
        let delta = t.delta_product();
        assert_eq!(critical_sigma(&t, 2).unwrap(), delta);
        assert_eq!(critical_sigma(&t, 3).unwrap(), delta);
    }

    #[test]
    fn unit_sigma_gives_unit_cube() {
        let t = tuple_n3();
        let w = highlow_halfwidths(&t, Scale::ONE).unwrap();
        assert!(w.iter().all(|x| *x == Scale::ONE));
        // and sigma = delta recovers the full plank widths R rho_{i-1}
        let w = highlow_halfwidths(&t, t.delta_product()).unwrap();
        for (i, x) in w.iter().enumerate() {
            assert_eq!(*x, t.r.mul(&t.rho(i)));
        }
    }

    #[test]
    fn widths_monotone_in_sigma() {
        let t = tuple_n3();
        let ladder = sigma_ladder(&t);
        let mut prev: Option<Vec<Scale>> = None;
        // iterate ascending sigma; widths must be non-increasing
        for sigma in ladder.iter().rev() {
            let w = highlow_halfwidths(&t, *sigma).unwrap();
            if let Some(p) = prev {
                for (a, b) in w.iter().zip(&p) {
                    assert!(a <= b, "axis width grew as sigma rose");
                }
            }
            prev = Some(w);
        }
    }

    #[test]
    fn shell_partition_is_exact() {
        let t = tuple_n3();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for sigma in [Scale::pow2(-2), Scale::pow2(-4)] {
            let outer = highlow_halfwidths(&t, sigma).unwrap();
            let inner = highlow_halfwidths(&t, sigma.mul(&Scale::pow2(1))).unwrap();
            let pieces = highlow_shell_partition(&t, sigma).unwrap();
            // measure accounting
            let shell: f64 = outer.iter().map(|w| 2.0 * w.value()).product::<f64>()
                - inner.iter().map(|w| 2.0 * w.value()).product::<f64>();
            let total: f64 = pieces.iter().map(|p| p.measure()).sum();
            assert!((total - shell).abs() / shell < 1e-10, "sigma {sigma:?}");
            // probe multiplicity
            let mut hits = 0;
            while hits < 4000 {
                let x: Vec<f64> = outer
                    .iter()
                    .map(|w| rng.random_range(-w.value()..w.value()))
                    .collect();
                let in_inner = x
                    .iter()
                    .zip(&inner)
                    .all(|(xi, w)| xi.abs() < w.value());
                if in_inner {
                    continue;
                }
                hits += 1;
                let mult = pieces.iter().filter(|p| p.contains(&x)).count();
                assert_eq!(mult, 1, "point {x:?} in {mult} pieces at sigma {sigma:?}");
            }
        }
    }

    #[test]
    fn n2_shell_has_two_pieces() {
        let r = Scale::pow2(10);
        let t = enumerate_admissible(2, r).unwrap()[0].clone().with_nus(vec![1]);
        // pick a dyadic sigma strictly inside (delta, 1)
        let sigma = Scale::pow2(-2);
        let pieces = highlow_shell_partition(&t, sigma).unwrap();
        // only the axes with strict inclusion protrude; count sign-split pieces
        let outer = highlow_halfwidths(&t, sigma).unwrap();
        let inner = highlow_halfwidths(&t, sigma.mul(&Scale::pow2(1))).unwrap();
        let protruding = outer.iter().zip(&inner).filter(|(o, i)| o > i).count();
        assert_eq!(pieces.len() % 2, 0);
        assert!(pieces.len() >= 2 * protruding.min(1));
    }

    #[test]
    fn shell_count_stays_polylog() {
        let t = tuple_n3();
        let lr = t.r.log2();
        for sigma in sigma_ladder(&t) {
            if sigma == Scale::ONE || !sigma.is_dyadic() {
                continue;
            }
            let pieces = highlow_shell_partition(&t, sigma).unwrap();
            let cap = (4.0 * lr).powi(t.n as i32) as usize;
            assert!(pieces.len() <= cap, "{} pieces > cap {}", pieces.len(), cap);
        }
    }

    #[test]
    fn coarsen_containment_monte_carlo() {
        // union over |s'-s| <= K^-1 sigma of P[delta,nu](s') sits inside
        // Dil_{R/r}(C P[delta',nu'](s))
        use crate::curve::PolyCurve;
        use crate::frame::frenet_frame;
        use crate::plank::build_plank;
        let t = tuple_n3();
        let sigma = Scale::pow2(-3);
        let coarse = coarsen(&t, sigma).unwrap();
        let ratio = t.r.div(&coarse.r).value();
        let curve = PolyCurve::model(3);
        let s0 = 0.5;
        let frame = frenet_frame(&curve, s0, true).unwrap();
        let coarse_plank = build_plank(&coarse, frame).unwrap();
        let k_sep = 32.0;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let mut checked = 0;
        for i in 0..40 {
            let sp = s0 + (i as f64 / 39.0 - 0.5) * 2.0 * sigma.value() / k_sep;
            let f = frenet_frame(&curve, sp, true).unwrap();
            let p = build_plank(&t, f).unwrap();
            for _ in 0..2500 {
                let z = p.sample(1.0, &mut rng);
                assert!(
                    coarse_plank.contains_isotropic(&z, 4.0, ratio),
                    "escape at s'={sp}"
                );
                checked += 1;
            }
        }
        assert_eq!(checked, 100_000);
    }

    #[test]
    fn coarsen_identities() {
        let t = tuple_n3();
        // sigma = delta: unchanged
        let same = coarsen(&t, t.delta_product()).unwrap();
        assert_eq!(same.deltas, t.deltas);
        // sigma = 1: trivial tuple
        let one = coarsen(&t, Scale::ONE).unwrap();
        assert!(one.deltas.iter().all(|d| d.is_one()));
        // sigma = 1/8: (1/4, 1/2), product 1/8, admissible at its own r
        let c = coarsen(&t, Scale::pow2(-3)).unwrap();
        assert_eq!(c.delta_product(), Scale::pow2(-3));
        assert_eq!(c.deltas[0], Scale::pow2(-2));
        assert_eq!(c.deltas[1], Scale::HALF);
        assert!(c.rho_identity_holds());
        assert!(c.r <= t.r);
    }
}
