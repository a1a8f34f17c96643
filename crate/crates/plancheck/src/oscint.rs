//! Oscillatory integrals: the cone multiplier `mu_hat`, the stationary-phase
//! decay checker, and the curve-average operator `A_t`.

use crate::curve::PolyCurve;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::weight::gauss_legendre;
use num_complex::Complex64;

/// Smooth compactly supported bump `exp(mu (1 - 1/(1-y^2)))` on (-1, 1),
/// equal to 1 at the center. Larger `mu` buys faster Fourier decay.
pub fn smooth_bump(y: f64, mu: f64) -> f64 {
    if y.abs() >= 1.0 {
        0.0
    } else {
        (mu * (1.0 - 1.0 / (1.0 - y * y))).exp()
    }
}

/// A product cutoff `chi(s, t) = chi_s(s) chi_t(t)` supported in an
/// (s, t)-rectangle.
#[derive(Clone, Debug)]
pub struct Chi {
    pub s_range: (f64, f64),
    pub t_range: (f64, f64),
    pub mu: f64,
}

impl Default for Chi {
    fn default() -> Self {
        Chi { s_range: (0.0, 1.0), t_range: (1.0, 2.0), mu: 4.0 }
    }
}

impl Chi {
    pub fn eval_s(&self, s: f64) -> f64 {
        let (a, b) = self.s_range;
        smooth_bump((2.0 * s - a - b) / (b - a), self.mu)
    }

    pub fn eval_t(&self, t: f64) -> f64 {
        let (a, b) = self.t_range;
        smooth_bump((2.0 * t - a - b) / (b - a), self.mu)
    }

    pub fn eval(&self, s: f64, t: f64) -> f64 {
        self.eval_s(s) * self.eval_t(t)
    }

    /// Total mass of the bump (the xi = 0 value of mu_hat).
    pub fn mass(&self, nodes: usize) -> f64 {
        let (gx, gw) = gauss_legendre(nodes.max(16));
        let ms: f64 = gx
            .iter()
            .zip(&gw)
            .map(|(x, w)| {
                let s = 0.5 * (self.s_range.0 + self.s_range.1)
                    + 0.5 * (self.s_range.1 - self.s_range.0) * x;
                w * self.eval_s(s)
            })
            .sum::<f64>()
            * 0.5
            * (self.s_range.1 - self.s_range.0);
        let mt: f64 = gx
            .iter()
            .zip(&gw)
            .map(|(x, w)| {
                let t = 0.5 * (self.t_range.0 + self.t_range.1)
                    + 0.5 * (self.t_range.1 - self.t_range.0) * x;
                w * self.eval_t(t)
            })
            .sum::<f64>()
            * 0.5
            * (self.t_range.1 - self.t_range.0);
        ms * mt
    }

    /// Mass of the s-bump alone.
    pub fn s_mass(&self, nodes: usize) -> f64 {
        let (gx, gw) = gauss_legendre(nodes.max(16));
        gx.iter()
            .zip(&gw)
            .map(|(x, w)| {
                let s = 0.5 * (self.s_range.0 + self.s_range.1)
                    + 0.5 * (self.s_range.1 - self.s_range.0) * x;
                w * self.eval_s(s)
            })
            .sum::<f64>()
            * 0.5
            * (self.s_range.1 - self.s_range.0)
    }
}

pub struct MuHatResult {
    pub value: Complex64,
    /// node-doubling error estimate
    pub error_estimate: f64,
    pub nodes_per_axis: usize,
}

/// `mu_hat(xi, xi_{n+1}) = int e^{-i t (gamma(s), 1) . (xi, xi_{n+1})} chi(s,t) ds dt`
/// by tensor Gauss-Legendre quadrature, node count scaled to sqrt(|xi|).
pub fn mu_hat(
    curve: &PolyCurve,
    chi: &Chi,
    xi: &[f64],
    node_budget: usize,
) -> Result<MuHatResult> {
    let n = curve.dim;
    if xi.len() != n + 1 {
        return Err(Error::Invalid(format!(
            "mu_hat expects a {}-vector, got {}",
            n + 1,
            xi.len()
        )));
    }
    let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    let base = (8.0 * norm.sqrt().ceil()).max(32.0) as usize;
    if base > node_budget {
        return Err(Error::Invalid(format!(
            "mu_hat node requirement {base} exceeds budget {node_budget}"
        )));
    }
    let coarse = integrate(curve, chi, xi, base);
    let fine = integrate(curve, chi, xi, 2 * base);
    Ok(MuHatResult {
        value: fine,
        error_estimate: (fine - coarse).norm(),
        nodes_per_axis: 2 * base,
    })
}

fn integrate(curve: &PolyCurve, chi: &Chi, xi: &[f64], nodes: usize) -> Complex64 {
    let n = curve.dim;
    let (gx, gw) = gauss_legendre(nodes);
    let (sa, sb) = chi.s_range;
    let (ta, tb) = chi.t_range;
    let mut acc = Complex64::default();
    for (xs, ws) in gx.iter().zip(&gw) {
        let s = 0.5 * (sa + sb) + 0.5 * (sb - sa) * xs;
        let g = curve.eval(s);
        // (gamma(s), 1) . (xi, xi_{n+1})
        let dot: f64 = g.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>() + xi[n];
        let cs = chi.eval_s(s);
        if cs == 0.0 {
            continue;
        }
        let mut inner = Complex64::default();
        for (xt, wt) in gx.iter().zip(&gw) {
            let t = 0.5 * (ta + tb) + 0.5 * (tb - ta) * xt;
            let ct = chi.eval_t(t);
            if ct == 0.0 {
                continue;
            }
            inner += wt * ct * Complex64::from_polar(1.0, -t * dot);
        }
        acc += ws * cs * inner;
    }
    acc * Complex64::new(0.25 * (sb - sa) * (tb - ta), 0.0)
}

/// Scalar function with derivatives, for the decay checker hypotheses.
pub trait ScalarFn {
    fn eval(&self, s: f64, order: usize) -> f64;
}

/// Linear phase `lambda s`.
pub struct LinearPhase(pub f64);

impl ScalarFn for LinearPhase {
    fn eval(&self, s: f64, order: usize) -> f64 {
        match order {
            0 => self.0 * s,
            1 => self.0,
            _ => 0.0,
        }
    }
}

/// Quadratic phase `s^2` (fails the nonvanishing-derivative hypothesis at 0).
pub struct QuadraticPhase;

impl ScalarFn for QuadraticPhase {
    fn eval(&self, s: f64, order: usize) -> f64 {
        match order {
            0 => s * s,
            1 => 2.0 * s,
            2 => 2.0,
            _ => 0.0,
        }
    }
}

/// Smooth bump amplitude on an interval, derivatives by nested central
/// differences.
pub struct BumpAmplitude {
    pub range: (f64, f64),
    pub mu: f64,
}

impl ScalarFn for BumpAmplitude {
    fn eval(&self, s: f64, order: usize) -> f64 {
        if order == 0 {
            let (a, b) = self.range;
            return smooth_bump((2.0 * s - a - b) / (b - a), self.mu);
        }
        let h = 1e-3 * (self.range.1 - self.range.0);
        (self.eval(s + h, order - 1) - self.eval(s - h, order - 1)) / (2.0 * h)
    }
}

/// Zero amplitude (trivial integral).
pub struct ZeroAmplitude;

impl ScalarFn for ZeroAmplitude {
    fn eval(&self, _s: f64, _order: usize) -> f64 {
        0.0
    }
}

#[derive(Clone, Debug)]
pub struct BghsConditions {
    /// min |phi'| over the support
    pub min_phase_derivative: f64,
    pub condition1_holds: bool,
    /// measured constants of |phi^(j)| <= C_j r^{-(j-1)} |phi'|^j, j = 2..
    pub c_phase: Vec<f64>,
    /// measured constants of |a^(j)| <= C_j r^{-j} |phi'|^j, j = 0..
    pub c_amplitude: Vec<f64>,
}

#[derive(Debug)]
pub struct BghsReport {
    pub conditions: BghsConditions,
    pub integral: Complex64,
    /// log2 slope against the previous ladder rung, when run on a ladder
    pub decay_fit: Option<f64>,
}

/// Check the decay-lemma hypotheses on a sample grid and evaluate the
/// oscillatory integral.
pub fn bghs_check(
    phase: &dyn ScalarFn,
    amplitude: &dyn ScalarFn,
    support: (f64, f64),
    r: f64,
    order_n: usize,
) -> Result<BghsReport> {
    if r < 1.0 {
        return Err(Error::Invalid("decay checker needs r >= 1".into()));
    }
    let (a, b) = support;
    let samples = 257;
    let mut min_dphi = f64::INFINITY;
    let mut sign_change = false;
    let mut prev_sign = 0.0f64;
    let jmax = 2 * order_n;
    let mut c_phase = vec![0.0f64; jmax + 1];
    let mut c_amp = vec![0.0f64; jmax + 1];
    for i in 0..=samples {
        let s = a + (b - a) * i as f64 / samples as f64;
        let d1 = phase.eval(s, 1);
        if i > 0 && d1 * prev_sign < 0.0 {
            sign_change = true; // phi' vanishes between samples
        }
        prev_sign = d1;
        let dphi = d1.abs();
        min_dphi = min_dphi.min(dphi);
        if dphi == 0.0 {
            continue;
        }
        for (j, slot) in c_phase.iter_mut().enumerate().take(jmax + 1).skip(2) {
            let v = phase.eval(s, j).abs() * r.powi(j as i32 - 1) / dphi.powi(j as i32);
            *slot = slot.max(v);
        }
        for (j, slot) in c_amp.iter_mut().enumerate().take(jmax + 1) {
            let v = amplitude.eval(s, j).abs() * r.powi(j as i32) / dphi.powi(j as i32);
            *slot = slot.max(v);
        }
    }
    let condition1 = min_dphi > 0.0 && !sign_change;
    let integral = oscillatory_integral(phase, amplitude, support);
    Ok(BghsReport {
        conditions: BghsConditions {
            min_phase_derivative: min_dphi,
            condition1_holds: condition1,
            c_phase,
            c_amplitude: c_amp,
        },
        integral,
        decay_fit: None,
    })
}

/// Composite Gauss-Legendre evaluation of `int e^{i phi} a ds`, node count
/// scaled to the total phase variation.
pub fn oscillatory_integral(
    phase: &dyn ScalarFn,
    amplitude: &dyn ScalarFn,
    support: (f64, f64),
) -> Complex64 {
    let (a, b) = support;
    let var = (phase.eval(b, 0) - phase.eval(a, 0)).abs();
    let nodes = ((var / std::f64::consts::TAU * 10.0) as usize + 64).min(40_000);
    let (gx, gw) = gauss_legendre(64);
    let panels = nodes.div_ceil(64).max(1);
    let mut acc = Complex64::default();
    for p in 0..panels {
        let pa = a + (b - a) * p as f64 / panels as f64;
        let pb = a + (b - a) * (p + 1) as f64 / panels as f64;
        for (x, w) in gx.iter().zip(&gw) {
            let s = 0.5 * (pa + pb) + 0.5 * (pb - pa) * x;
            let amp = amplitude.eval(s, 0);
            if amp == 0.0 {
                continue;
            }
            acc += w * amp * Complex64::from_polar(1.0, phase.eval(s, 0)) * 0.5 * (pb - pa);
        }
    }
    acc
}

/// Linear-phase decay ladder: integrals at the given r values with per-rung
/// log-log slopes.
pub fn bghs_ladder(
    amplitude: &dyn ScalarFn,
    support: (f64, f64),
    r_values: &[f64],
    order_n: usize,
) -> Result<Vec<BghsReport>> {
    let mut out: Vec<BghsReport> = Vec::with_capacity(r_values.len());
    for (i, &r) in r_values.iter().enumerate() {
        let phase = LinearPhase(r);
        let mut rep = bghs_check(&phase, amplitude, support, r, order_n)?;
        if i > 0 {
            let prev = &out[i - 1];
            let ratio = rep.integral.norm() / prev.integral.norm().max(1e-300);
            rep.decay_fit = Some(ratio.log2() / (r / r_values[i - 1]).log2());
        }
        out.push(rep);
    }
    Ok(out)
}

/// The averaging operator `A_t f(x) = int f(x - t gamma(s)) chi_s(s) ds`
/// applied spectrally on a periodic grid, plus the discrete helical maximal
/// function over the t-samples.
pub struct AverageResult {
    pub per_t: Vec<Field>,
    pub helical_max: Vec<f64>,
}

pub fn average_operator(
    f: &Field,
    curve: &PolyCurve,
    chi: &Chi,
    t_samples: &[f64],
    nodes: usize,
) -> Result<AverageResult> {
    let n = curve.dim;
    if f.grid.rank() != n {
        return Err(Error::Invalid("field rank must match curve dimension".into()));
    }
    let mut fhat = f.clone();
    fhat.to_frequency();
    // aliasing guard: occupied modes must sit strictly below the band edge
    for ax in 0..n {
        let max_f = fhat.grid.max_frequency(ax);
        for idx in 0..fhat.data.len() {
            if fhat.data[idx].norm_sqr() > 1e-24 {
                let xi = fhat.grid.frequency(idx);
                if xi[ax].abs() >= max_f * (1.0 - 1e-12) {
                    return Err(Error::Invalid("aliasing guard violated".into()));
                }
            }
        }
    }
    let (gx, gw) = gauss_legendre(nodes.max(16));
    let (sa, sb) = chi.s_range;
    let mut per_t = Vec::with_capacity(t_samples.len());
    let mut helical_max = vec![0.0f64; f.grid.len()];
    for &t in t_samples {
        let mut out = fhat.clone();
        for idx in 0..out.data.len() {
            if out.data[idx].norm_sqr() == 0.0 {
                continue;
            }
            let xi = out.grid.frequency(idx);
            let mut m = Complex64::default();
            for (x, w) in gx.iter().zip(&gw) {
                let s = 0.5 * (sa + sb) + 0.5 * (sb - sa) * x;
                let c = chi.eval_s(s);
                if c == 0.0 {
                    continue;
                }
                let g = curve.eval(s);
                let dot: f64 = g.iter().zip(&xi).map(|(a, b)| a * b).sum();
                m += w * c * Complex64::from_polar(1.0, -std::f64::consts::TAU * t * dot);
            }
            out.data[idx] *= m * Complex64::new(0.5 * (sb - sa), 0.0);
        }
        out.to_physical();
        for (hm, v) in helical_max.iter_mut().zip(&out.data) {
            *hm = hm.max(v.norm());
        }
        per_t.push(out);
    }
    Ok(AverageResult { per_t, helical_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Space;
    use crate::grid::Grid;

    #[test]
    fn mu_hat_at_zero_is_bump_mass() {
        let c = PolyCurve::model(2);
        let chi = Chi::default();
        let res = mu_hat(&c, &chi, &[0.0, 0.0, 0.0], 4096).unwrap();
        let mass = chi.mass(128);
        assert!((res.value.re - mass).abs() < 1e-10, "{} vs {mass}", res.value.re);
        assert!(res.value.im.abs() < 1e-12);
    }

    #[test]
    fn mu_hat_conjugate_symmetry() {
        let c = PolyCurve::model(2);
        let chi = Chi::default();
        let xi = [13.0, -7.5, 4.0];
        let neg: Vec<f64> = xi.iter().map(|x| -x).collect();
        let a = mu_hat(&c, &chi, &xi, 4096).unwrap();
        let b = mu_hat(&c, &chi, &neg, 4096).unwrap();
        let err = (a.value.conj() - b.value).norm();
        assert!(err < 1e-9 + 10.0 * (a.error_estimate + b.error_estimate));
    }

    #[test]
    fn mu_hat_node_budget_guard() {
        let c = PolyCurve::model(2);
        let chi = Chi::default();
        assert!(mu_hat(&c, &chi, &[1e6, 0.0, 0.0], 64).is_err());
    }

    #[test]
    fn bghs_linear_family_decays() {
        let amp = BumpAmplitude { range: (0.0, 1.0), mu: 2.6 };
        let rs: Vec<f64> = (4..=10).map(|k| (1u64 << k) as f64).collect();
        let ladder = bghs_ladder(&amp, (0.0, 1.0), &rs, 4).unwrap();
        for rep in &ladder {
            assert!(rep.conditions.condition1_holds);
        }
        for rep in ladder.iter().skip(1) {
            let slope = rep.decay_fit.unwrap();
            assert!(slope <= -3.5, "decay slope {slope}");
        }
    }

    #[test]
    fn bghs_zero_amplitude_and_stationary_phase() {
        let zero = ZeroAmplitude;
        let rep = bghs_check(&LinearPhase(32.0), &zero, (0.0, 1.0), 32.0, 4).unwrap();
        assert!(rep.integral.norm() < 1e-14);
        // phi(s) = s^2 on [-1,1]: condition (1) fails at 0
        let amp = BumpAmplitude { range: (-1.0, 1.0), mu: 4.0 };
        let rep = bghs_check(&QuadraticPhase, &amp, (-1.0, 1.0), 16.0, 2).unwrap();
        assert!(!rep.conditions.condition1_holds);
    }

    #[test]
    fn average_of_constant_is_chi_mass() {
        let c = PolyCurve::model(2);
        let chi = Chi::default();
        let grid = Grid::new(vec![16, 16], vec![4.0, 4.0]);
        let mut f = Field::zeros(grid, Space::Physical);
        for v in f.data.iter_mut() {
            *v = Complex64::new(1.0, 0.0);
        }
        let res = average_operator(&f, &c, &chi, &[1.0, 1.5], 64).unwrap();
        let ms = chi.s_mass(128);
        for ft in &res.per_t {
            for v in &ft.data {
                assert!((v.re - ms).abs() < 1e-10 && v.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn average_single_mode_matches_mu_hat_coupling() {
        // For f = e^{2 pi i x.xi0}: A_t f = m(t) f; integrating
        // chi_t(t) m(t) e^{-i t tau} over t recovers mu_hat(2 pi xi0, tau).
        let c = PolyCurve::model(2);
        let chi = Chi::default();
        let grid = Grid::new(vec![32, 32], vec![8.0, 8.0]);
        let xi0 = [0.5, -0.25];
        let mut f = Field::zeros(grid.clone(), Space::Frequency);
        let idx = grid.index_of_mode(&[4, -2]).unwrap();
        f.data[idx] = Complex64::new(1.0, 0.0);
        f.to_physical();
        let tau = 3.0;
        let (gx, gw) = gauss_legendre(256);
        let mut acc = Complex64::default();
        for (x, w) in gx.iter().zip(&gw) {
            let t = 1.5 + 0.5 * x;
            let res = average_operator(&f, &c, &chi, &[t], 192).unwrap();
            let m = res.per_t[0].data[1] / f.data[1];
            acc += w * 0.5 * chi.eval_t(t) * m * Complex64::from_polar(1.0, -t * tau);
        }
        let xi_full = [
            std::f64::consts::TAU * xi0[0],
            std::f64::consts::TAU * xi0[1],
            tau,
        ];
        let direct = mu_hat(&c, &chi, &xi_full, 4096).unwrap();
        assert!(
            (acc - direct.value).norm() < 1e-6,
            "{acc} vs {}",
            direct.value
        );
    }

    #[test]
    fn average_l2_contraction() {
        let c = PolyCurve::model(2);
        let chi = Chi::default();
        let grid = Grid::new(vec![32, 32], vec![8.0, 8.0]);
        let mut f = Field::zeros(grid.clone(), Space::Frequency);
        for k in [[2i64, 1], [5, -3], [-7, 2]] {
            f.data[grid.index_of_mode(&k).unwrap()] = Complex64::new(0.7, 0.3);
        }
        f.to_physical();
        let norm_in = f.lp_norm(2.0);
        let res = average_operator(&f, &c, &chi, &[1.3], 96).unwrap();
        let norm_out = res.per_t[0].lp_norm(2.0);
        let chi_mass = chi.s_mass(128);
        assert!(norm_out <= chi_mass * norm_in + 1e-8);
    }
}
