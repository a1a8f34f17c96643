//! The iterative decomposition of the hollow rectangular box
//! `[-R,R]^(n-1) \ [-R/2,R/2]^(n-1)` into pieces indexed by admissible
//! `(delta,nu)` pairs. Endpoints are exact powers of two times chain values,
//! so the pieces tile without gaps or double cover.

use crate::error::{Error, Result};
use crate::plank::{chain, scale_d, AdmissibleTuple};
use crate::scale::{Endpoint, ExactInterval, Scale};

#[derive(Clone, Debug)]
pub struct HollowPiece {
    pub tuple: AdmissibleTuple,
    /// R-dilated intervals I'_1 .. I'_{n-1}.
    pub intervals: Vec<ExactInterval>,
}

impl HollowPiece {
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|i| i.length()).product()
    }

    /// Half-open membership; lower-closed on minus annuli so mirrored pieces
    /// stay disjoint at shared faces.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.intervals
            .iter()
            .zip(x)
            .zip(&self.tuple.nus)
            .all(|((iv, &xi), &nu)| match nu {
                -1 => xi >= iv.lo.value() && xi < iv.hi.value(),
                1 => xi > iv.lo.value() && xi <= iv.hi.value(),
                _ => xi >= iv.lo.value() && xi < iv.hi.value(),
            })
    }
}

#[derive(Clone, Debug)]
pub struct HollowDecomposition {
    pub n: usize,
    pub r: Scale,
    pub pieces: Vec<HollowPiece>,
}

impl HollowDecomposition {
    /// Total measure of all pieces; equals (2R)^(n-1) - R^(n-1) when exact.
    pub fn total_measure(&self) -> f64 {
        self.pieces.iter().map(|p| p.measure()).sum()
    }

    pub fn target_measure(&self) -> f64 {
        let r = self.r.value();
        let m = (self.n - 1) as i32;
        (2.0 * r).powi(m) - r.powi(m)
    }

    /// Number of pieces containing the point (1 means exact cover here).
    pub fn multiplicity(&self, x: &[f64]) -> usize {
        self.pieces.iter().filter(|p| p.contains(x)).count()
    }
}

struct BranchState {
    /// outer radii rho_i^(k-1) for the remaining coordinates (index i-k)
    outer: Vec<Scale>,
    /// inner radii rho_{i,down}^(k-1); None once a terminal scale was chosen
    inner: Option<Vec<Scale>>,
    deltas: Vec<Scale>,
    nus: Vec<i8>,
    intervals: Vec<ExactInterval>,
}

/// Decompose the hollow box at scale R for curve dimension n.
pub fn hollow_decompose(n: usize, r: Scale) -> Result<HollowDecomposition> {
    if n < 2 {
        return Err(Error::Invalid("hollow decomposition needs n >= 2".into()));
    }
    if r < Scale::pow2(n as i64) {
        return Err(Error::Invalid("hollow decomposition needs R >= 2^n".into()));
    }
    let m = n - 1;
    let mut done: Vec<HollowPiece> = Vec::new();
    let mut stack = vec![BranchState {
        outer: vec![Scale::ONE; m],
        inner: Some(vec![Scale::HALF; m]),
        deltas: Vec::new(),
        nus: Vec::new(),
        intervals: Vec::new(),
    }];

    while let Some(state) = stack.pop() {
        let k = state.deltas.len() + 1; // 1-based step
        if k > m {
            let tuple = AdmissibleTuple {
                n,
                r,
                deltas: state.deltas.clone(),
                nus: state.nus.clone(),
            };
            debug_assert!(tuple.rho_identity_holds());
            done.push(HollowPiece { tuple, intervals: state.intervals });
            continue;
        }
        let outer_k = state.outer[0];
        match &state.inner {
            None => {
                // terminal already chosen: full interval, delta = 1, nu = 0
                let mut next = branch_base(&state);
                next.deltas.push(Scale::ONE);
                next.nus.push(0);
                next.intervals.push(ExactInterval::symmetric(outer_k.mul(&r)));
                next.outer = state.outer[1..].to_vec();
                next.inner = None;
                stack.push(next);
            }
            Some(inner) => {
                let inner_k = inner[0];
                if k == m {
                    // last coordinate: the 1-D hollow interval splits into
                    // the two signed annuli; delta_{n-1} = D_{n-1}(prefix).
                    let dlast = scale_d(&state.deltas, r, n, k)?;
                    for nu in [1i8, -1] {
                        let mut next = branch_base(&state);
                        next.deltas.push(dlast);
                        next.nus.push(nu);
                        let iv = signed_annulus(inner_k.mul(&r), outer_k.mul(&r), nu);
                        next.intervals.push(iv);
                        next.outer = Vec::new();
                        next.inner = None;
                        stack.push(next);
                    }
                } else {
                    // Case 1: nu_k = 0, delta_k = 1, hollowness continues.
                    {
                        let mut next = branch_base(&state);
                        next.deltas.push(Scale::ONE);
                        next.nus.push(0);
                        next.intervals.push(ExactInterval::symmetric(outer_k.mul(&r)));
                        next.outer = state.outer[1..].to_vec();
                        next.inner = Some(inner[1..].to_vec());
                        stack.push(next);
                    }
                    // Cases 2/3: nu_k = +-1 and a scale from the chain.
                    let ch = chain(&state.deltas, r, n, k)?;
                    let terminal = *ch.last().unwrap();
                    for (pos, d) in ch.iter().enumerate() {
                        let down = ch.get(pos + 1).copied();
                        for nu in [1i8, -1] {
                            let mut next = branch_base(&state);
                            next.deltas.push(*d);
                            next.nus.push(nu);
                            let iv = signed_annulus(inner_k.mul(&r), outer_k.mul(&r), nu);
                            next.intervals.push(iv);
                            // remaining coordinates are the scaled inner box
                            let rest: Vec<Scale> = inner[1..]
                                .iter()
                                .enumerate()
                                .map(|(off, b)| {
                                    // coordinate i = k+1+off gets d^(i-k)
                                    b.mul(&d.powi(off as i64 + 1))
                                })
                                .collect();
                            if *d == terminal {
                                next.outer = rest;
                                next.inner = None;
                            } else {
                                let dn = down.expect("non-terminal has a next scale");
                                let rest_inner: Vec<Scale> = inner[1..]
                                    .iter()
                                    .enumerate()
                                    .map(|(off, b)| b.mul(&dn.powi(off as i64 + 1)))
                                    .collect();
                                next.outer = rest;
                                next.inner = Some(rest_inner);
                            }
                            stack.push(next);
                        }
                    }
                }
            }
        }
    }

    // deterministic output: case order 1 < 2 < 3 per step, scales descending
    done.sort_by(|a, b| piece_key(a).partial_cmp(&piece_key(b)).unwrap());
    Ok(HollowDecomposition { n, r, pieces: done })
}

fn branch_base(state: &BranchState) -> BranchState {
    BranchState {
        outer: Vec::new(),
        inner: None,
        deltas: state.deltas.clone(),
        nus: state.nus.clone(),
        intervals: state.intervals.clone(),
    }
}

fn signed_annulus(inner: Scale, outer: Scale, nu: i8) -> ExactInterval {
    if nu > 0 {
        ExactInterval::new(Endpoint::Pos(inner), Endpoint::Pos(outer))
    } else {
        ExactInterval::new(Endpoint::Neg(outer), Endpoint::Neg(inner))
    }
}

fn piece_key(p: &HollowPiece) -> Vec<f64> {
    let mut key = Vec::with_capacity(p.tuple.nus.len() * 2);
    for (d, nu) in p.tuple.deltas.iter().zip(&p.tuple.nus) {
        let case = match nu {
            0 => 0.0,
            1 => 1.0,
            _ => 2.0,
        };
        key.push(case);
        key.push(-d.log2());
    }
    key
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngExt;
    use rand::SeedableRng;

    #[test]
    fn n2_two_pieces() {
        let d = hollow_decompose(2, Scale::pow2(8)).unwrap();
        assert_eq!(d.pieces.len(), 2);
        let hi: Vec<f64> = d.pieces[0].intervals.iter().map(|i| i.hi.value()).collect();
        let lo: Vec<f64> = d.pieces[0].intervals.iter().map(|i| i.lo.value()).collect();
        assert_eq!((lo[0], hi[0]), (128.0, 256.0));
        let hi: Vec<f64> = d.pieces[1].intervals.iter().map(|i| i.hi.value()).collect();
        let lo: Vec<f64> = d.pieces[1].intervals.iter().map(|i| i.lo.value()).collect();
        assert_eq!((lo[0], hi[0]), (-256.0, -128.0));
    }

    #[test]
    fn measures_add_up() {
        for n in [3usize, 4] {
            let d = hollow_decompose(n, Scale::pow2(12)).unwrap();
            let total = d.total_measure();
            let want = d.target_measure();
            assert!(
                (total - want).abs() / want < 1e-12,
                "n={n}: {total} vs {want}"
            );
        }
    }

    #[test]
    fn random_probes_hit_exactly_one_piece() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for n in [2usize, 3, 4] {
            let r = Scale::pow2(12);
            let d = hollow_decompose(n, r).unwrap();
            let rv = r.value();
            let mut checked = 0;
            while checked < 20_000 {
                let x: Vec<f64> = (0..n - 1).map(|_| rng.random_range(-rv..rv)).collect();
                if x.iter().all(|v| v.abs() < rv / 2.0) {
                    continue;
                }
                checked += 1;
                let mult = d.multiplicity(&x);
                assert_eq!(mult, 1, "n={n}, point {x:?} hit {mult} pieces");
            }
        }
    }

    #[test]
    fn piece_tuples_are_admissible() {
        let d = hollow_decompose(4, Scale::pow2(12)).unwrap();
        for p in &d.pieces {
            assert!(p.tuple.rho_identity_holds(), "{:?}", p.tuple.deltas);
            for (d_i, nu) in p.tuple.deltas.iter().zip(&p.tuple.nus) {
                if !d_i.is_one() {
                    assert!(*nu != 0);
                }
            }
        }
    }
}
