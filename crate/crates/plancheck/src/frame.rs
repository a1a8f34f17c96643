//! Frenet frames by Gram-Schmidt on derivative vectors.
//!
//! The curve frame orthogonalizes `gamma'(s), ..., gamma^(n)(s)`. The cone
//! frame lifts to `v1(s) = (gamma(s),1)/sqrt(|gamma|^2+1)`, orthogonalizes
//! `v1, v1', ..., v1^(n)` into `v1..v_{n+1}` and reindexes `e_i = v_{n+2-i}`,
//! so `e_{n+1}(s)` is the flat direction of the cone. Everything is computed
//! in jet arithmetic so the curvatures `kappa_j = <e_j', e_{j+1}>` come out
//! of the same pass.

use crate::curve::PolyCurve;
use crate::error::{Error, Result};
use crate::jet::{Jet, JetVec};

#[derive(Clone, Debug)]
pub struct FrenetFrame {
    pub s: f64,
    /// Row i is e_{i+1}(s); m rows of length m.
    pub vectors: Vec<Vec<f64>>,
    /// kappa_j = <e_j'(s), e_{j+1}(s)>, j = 1..m-1.
    pub kappas: Vec<f64>,
    /// Rows of e_i'(s); kept for the Frenet ODE checks.
    pub derivatives: Vec<Vec<f64>>,
}

impl FrenetFrame {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// Frame coordinates <z, e_i(s)> of a point.
    pub fn coords(&self, z: &[f64]) -> Vec<f64> {
        self.vectors
            .iter()
            .map(|e| e.iter().zip(z).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Reassemble a point from frame coordinates.
    pub fn point(&self, coords: &[f64]) -> Vec<f64> {
        let m = self.dim();
        let mut out = vec![0.0; m];
        for (a, e) in coords.iter().zip(&self.vectors) {
            for (o, &x) in out.iter_mut().zip(e) {
                *o += a * x;
            }
        }
        out
    }

    pub fn orthonormality_residual(&self) -> f64 {
        let m = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let dot: f64 = self.vectors[i]
                    .iter()
                    .zip(&self.vectors[j])
                    .map(|(a, b)| a * b)
                    .sum();
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - want).abs());
            }
        }
        worst
    }
}

const PIVOT_FLOOR: f64 = 1e-12;

/// Gram-Schmidt over jet-valued vectors. Sign convention: each new vector
/// has positive inner product with the raw vector it orthogonalizes.
fn gram_schmidt_jets(raw: &[JetVec]) -> Result<Vec<JetVec>> {
    let mut basis: Vec<JetVec> = Vec::with_capacity(raw.len());
    for r in raw {
        let mut v = r.clone();
        for b in &basis {
            let proj = v.dot(b);
            v = v.sub(&b.scale_jet(&proj));
        }
        let norm2 = v.dot(&v);
        if norm2.value() < PIVOT_FLOOR * PIVOT_FLOOR {
            return Err(Error::Degenerate(format!(
                "Gram-Schmidt pivot {} below floor",
                norm2.value().sqrt()
            )));
        }
        let inv = norm2.sqrt().recip();
        let mut e = v.scale_jet(&inv);
        // orientation: positive inner product with the raw derivative
        let orient = e.dot(r).value();
        if orient < 0.0 {
            e = e.scale_jet(&Jet::constant(-1.0, inv.order()));
        }
        basis.push(e);
    }
    Ok(basis)
}

/// Frenet frame of the curve (m = n) or of the cone lift (m = n+1).
pub fn frenet_frame(curve: &PolyCurve, s: f64, cone: bool) -> Result<FrenetFrame> {
    let n = curve.dim;
    let order = 2; // value + first derivative is all the frame needs
    let jets_order = n + order;
    let raw: Vec<JetVec> = if cone {
        // v1 = (gamma, 1)/sqrt(|gamma|^2 + 1) and its derivatives
        let g = curve.jets(s, jets_order);
        let mut comps = g.comps.clone();
        comps.push(Jet::constant(1.0, jets_order));
        let lifted = JetVec { comps };
        let norm_inv = lifted.dot(&lifted).sqrt().recip();
        let v1 = lifted.scale_jet(&norm_inv);
        let mut derivs = Vec::with_capacity(n + 1);
        let mut cur = v1;
        for _ in 0..=n {
            derivs.push(cur.clone());
            cur = cur.differentiate();
        }
        derivs
    } else {
        let g = curve.jets(s, jets_order);
        let mut derivs = Vec::with_capacity(n);
        let mut cur = g.differentiate();
        for _ in 1..=n {
            derivs.push(cur.clone());
            cur = cur.differentiate();
        }
        derivs
    };

    let mut basis = gram_schmidt_jets(&raw)?;
    if cone {
        // e_i = v_{n+2-i}
        basis.reverse();
    }
    let vectors: Vec<Vec<f64>> = basis.iter().map(|b| b.values()).collect();
    let derivatives: Vec<Vec<f64>> = basis.iter().map(|b| b.first_derivative()).collect();
    let m = basis.len();
    let mut kappas = Vec::with_capacity(m - 1);
    for j in 0..m - 1 {
        let k: f64 = derivatives[j].iter().zip(&vectors[j + 1]).map(|(a, b)| a * b).sum();
        kappas.push(k);
    }
    Ok(FrenetFrame { s, vectors, kappas, derivatives })
}

/// Check |kappa_i| within [1/c, c]; c is the configured curvature band.
pub fn kappa_band_ok(frame: &FrenetFrame, band: f64) -> bool {
    frame.kappas.iter().all(|k| {
        let a = k.abs();
        a >= 1.0 / band && a <= band
    })
}

/// Leading-order prediction of the frame overlap under a small parameter
/// shift: entry (i,k), 1-indexed, is `Delta^(k-i)/(k-i)! kappa_i...kappa_{k-1}`
/// for i<k, `(-Delta)^(i-k)/(i-k)! kappa_k...kappa_{i-1}` for i>k, and 1 on
/// the diagonal.
pub fn taylor_prediction(frame: &FrenetFrame, delta: f64) -> Vec<Vec<f64>> {
    let m = frame.dim();
    let mut out = vec![vec![0.0; m]; m];
    for i in 0..m {
        for k in 0..m {
            out[i][k] = if i == k {
                1.0
            } else if i < k {
                let mut prod = 1.0;
                let mut fact = 1.0;
                for (step, j) in (i..k).enumerate() {
                    prod *= frame.kappas[j];
                    fact *= (step + 1) as f64;
                }
                delta.powi((k - i) as i32) / fact * prod
            } else {
                let mut prod = 1.0;
                let mut fact = 1.0;
                for (step, j) in (k..i).enumerate() {
                    prod *= frame.kappas[j];
                    fact *= (step + 1) as f64;
                }
                (-delta).powi((i - k) as i32) / fact * prod
            };
        }
    }
    out
}

pub struct TaylorOverlap {
    /// `measured[i][k] = <e_(i+1)(s+Delta), e_(k+1)(s)>`
    pub measured: Vec<Vec<f64>>,
    pub predicted: Vec<Vec<f64>>,
}

/// Inner products between frames at s+Delta and s, plus the leading-order
/// prediction, for comparison.
pub fn taylor_overlap(
    curve: &PolyCurve,
    s: f64,
    delta: f64,
    cone: bool,
) -> Result<TaylorOverlap> {
    if delta.abs() > 0.1 {
        return Err(Error::Invalid("taylor_overlap expects |Delta| <= 0.1".into()));
    }
    let f0 = frenet_frame(curve, s, cone)?;
    let f1 = frenet_frame(curve, s + delta, cone)?;
    let m = f0.dim();
    let mut measured = vec![vec![0.0; m]; m];
    for i in 0..m {
        for k in 0..m {
            measured[i][k] = f1.vectors[i]
                .iter()
                .zip(&f0.vectors[k])
                .map(|(a, b)| a * b)
                .sum();
        }
    }
    Ok(TaylorOverlap { measured, predicted: taylor_prediction(&f0, delta) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::ClassParams;
    use rand::RngExt;
    use rand::SeedableRng;

    #[test]
    fn model_frame_at_zero_is_reversed_identity() {
        let c = PolyCurve::model(3);
        let f = frenet_frame(&c, 0.0, false).unwrap();
        // gamma^(j)(0) = unit(n-j); frame rows e_1..e_3 are the raw
        // derivatives, already orthonormal
        for (j, row) in f.vectors.iter().enumerate() {
            for (i, &x) in row.iter().enumerate() {
                let want = if i == 2 - j { 1.0 } else { 0.0 };
                assert!((x - want).abs() < 1e-12);
            }
        }
        assert!(f.orthonormality_residual() < 1e-12);
    }

    #[test]
    fn parabola_kappa_is_one_at_zero() {
        // (s^2/2, s): kappa_1(0) = 1, with a finite-difference oracle
        let c = PolyCurve::model(2);
        let f = frenet_frame(&c, 0.0, false).unwrap();
        assert!((f.kappas[0].abs() - 1.0).abs() < 1e-10, "kappa={}", f.kappas[0]);
        let h = 1e-6;
        let fp = frenet_frame(&c, h, false).unwrap();
        let fm = frenet_frame(&c, -h, false).unwrap();
        let fd: f64 = (0..2)
            .map(|i| (fp.vectors[0][i] - fm.vectors[0][i]) / (2.0 * h) * f.vectors[1][i])
            .sum();
        assert!((fd - f.kappas[0]).abs() < 1e-6);
    }

    #[test]
    fn cone_frame_last_vector_is_flat_direction() {
        let c = PolyCurve::model(2);
        let f = frenet_frame(&c, 0.0, true).unwrap();
        assert_eq!(f.dim(), 3);
        assert!(f.orthonormality_residual() < 1e-10);
        // e_3(0) parallel to (gamma(0), 1) = (0,0,1)
        let g0 = c.eval(0.0);
        let mut lift = g0.clone();
        lift.push(1.0);
        let norm: f64 = lift.iter().map(|x| x * x).sum::<f64>();
        let lift: Vec<f64> = lift.iter().map(|x| x / norm.sqrt()).collect();
        let dot: f64 = f.vectors[2].iter().zip(&lift).map(|(a, b)| a * b).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn frenet_ode_formula_holds() {
        // e_i' = -kappa_{i-1} e_{i-1} + kappa_i e_{i+1} against the jet derivative
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for n in 2..=5usize {
            let params = ClassParams { a: 1.0, r: 4096.0, eps: 0.1 };
            let c = PolyCurve::random_class(n, params, &mut rng);
            let s = rng.random_range(0.1..0.9);
            for cone in [false, true] {
                let f = frenet_frame(&c, s, cone).unwrap();
                let m = f.dim();
                for i in 0..m {
                    for x in 0..m {
                        let mut want = 0.0;
                        if i > 0 {
                            want -= f.kappas[i - 1] * f.vectors[i - 1][x];
                        }
                        if i + 1 < m {
                            want += f.kappas[i] * f.vectors[i + 1][x];
                        }
                        let got = f.derivatives[i][x];
                        assert!(
                            (got - want).abs() < 1e-7 * (1.0 + want.abs()),
                            "n={n} cone={cone} e_{}'[{}]: {} vs {}",
                            i + 1,
                            x,
                            got,
                            want
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn taylor_overlap_identity_at_zero_delta() {
        let c = PolyCurve::model(3);
        let t = taylor_overlap(&c, 0.3, 0.0, false).unwrap();
        for i in 0..3 {
            for k in 0..3 {
                let want = if i == k { 1.0 } else { 0.0 };
                assert!((t.measured[i][k] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn taylor_leading_order_and_diagonal() {
        let c = PolyCurve::model(3);
        let delta = 1e-3;
        let t = taylor_overlap(&c, 0.3, delta, false).unwrap();
        // off-diagonal (1,2) entry ~ Delta * kappa_1(0.3), relative error O(Delta)
        let rel = (t.measured[0][1] - t.predicted[0][1]).abs() / t.predicted[0][1].abs();
        assert!(rel < 50.0 * delta, "relative error {rel}");
        // diagonal entries 1 + O(Delta^2): for Delta=1e-2 deviation <= 5e-4
        let t2 = taylor_overlap(&c, 0.3, 1e-2, false).unwrap();
        for i in 0..3 {
            assert!((t2.measured[i][i] - 1.0).abs() <= 5e-4);
        }
    }

    #[test]
    fn sign_convention_is_continuous_in_s() {
        let c = PolyCurve::model(3);
        let mut prev = frenet_frame(&c, 0.0, false).unwrap();
        let mut s = 1e-3;
        while s < 1.0 {
            let f = frenet_frame(&c, s, false).unwrap();
            for (a, b) in f.vectors.iter().zip(&prev.vectors) {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                assert!(dot > 0.5, "sign flip near s={s}");
            }
            prev = f;
            s += 1e-3;
        }
    }
}
