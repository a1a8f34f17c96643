//! Polynomial nondegenerate curves and their rescaling maps.

use crate::error::{Error, Result};
use crate::jet::{Jet, JetVec};

/// Class parameters for the perturbed moment-curve family: the perturbation
/// term is `R^-eps s^(n+1) E(s)` with `deg E <= 1/eps` and coefficients
/// bounded by `A`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassParams {
    pub a: f64,
    pub r: f64,
    pub eps: f64,
}

/// A polynomial curve in R^n. Coordinate i is `sum_j coeffs[i][j] s^j`
/// (lowest degree first).
#[derive(Clone, Debug, PartialEq)]
pub struct PolyCurve {
    pub dim: usize,
    pub coeffs: Vec<Vec<f64>>,
    pub domain: (f64, f64),
    pub class_params: Option<ClassParams>,
}

/// Neumaier compensated sum; used for high-degree evaluation.
fn compensated_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    sum + comp
}

impl PolyCurve {
    /// The model moment curve `(s^n/n!, ..., s^2/2, s)` on the unit interval.
    pub fn model(n: usize) -> PolyCurve {
        assert!(n >= 2, "curve dimension must be >= 2");
        let mut coeffs = vec![vec![0.0; n + 1]; n];
        for (i, row) in coeffs.iter_mut().enumerate() {
            // coordinate i carries s^(n-i) / (n-i)!
            let power = n - i;
            let mut fact = 1.0;
            for k in 2..=power {
                fact *= k as f64;
            }
            row[power] = 1.0 / fact;
        }
        PolyCurve { dim: n, coeffs, domain: (0.0, 1.0), class_params: None }
    }

    /// The model moment curve on [0, len]; used by the rescaled lattice
    /// experiments where the angular parameter runs over a long interval.
    pub fn model_long(n: usize, len: f64) -> PolyCurve {
        let mut c = PolyCurve::model(n);
        c.domain = (0.0, len);
        c
    }

    pub fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .map(|row| row.iter().rposition(|&c| c != 0.0).unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    pub fn in_domain(&self, s: f64) -> bool {
        s >= self.domain.0 - 1e-12 && s <= self.domain.1 + 1e-12
    }

    /// Exact j-th derivative at s. Order beyond the degree gives the zero
    /// vector (documented behaviour, not an error).
    pub fn eval_derivative(&self, s: f64, j: usize) -> Result<Vec<f64>> {
        if !self.in_domain(s) {
            return Err(Error::Domain(format!(
                "parameter {s} outside curve domain [{}, {}]",
                self.domain.0, self.domain.1
            )));
        }
        Ok(self.eval_derivative_unchecked(s, j))
    }

    pub fn eval_derivative_unchecked(&self, s: f64, j: usize) -> Vec<f64> {
        let use_compensated = self.degree() > 12;
        self.coeffs
            .iter()
            .map(|row| {
                let terms = row.iter().enumerate().skip(j).map(|(m, &a)| {
                    if a == 0.0 {
                        return 0.0;
                    }
                    // d^j/ds^j s^m = m!/(m-j)! s^(m-j)
                    let mut fall = 1.0;
                    for k in (m - j + 1)..=m {
                        fall *= k as f64;
                    }
                    a * fall * s.powi((m - j) as i32)
                });
                if use_compensated {
                    compensated_sum(terms)
                } else {
                    terms.sum()
                }
            })
            .collect()
    }

    pub fn eval(&self, s: f64) -> Vec<f64> {
        self.eval_derivative_unchecked(s, 0)
    }

    /// The coordinates as jets at base point s, to the given order.
    pub fn jets(&self, s: f64, order: usize) -> JetVec {
        JetVec {
            comps: self.coeffs.iter().map(|row| Jet::from_poly(row, s, order)).collect(),
        }
    }

    /// min over equispaced samples of |det(gamma', ..., gamma^(n))|.
    pub fn nondegeneracy_margin(&self, num_samples: usize) -> f64 {
        assert!(num_samples >= 2, "need at least two samples");
        let n = self.dim;
        let (a, b) = self.domain;
        let mut min_det = f64::INFINITY;
        for i in 0..num_samples {
            let s = a + (b - a) * i as f64 / (num_samples - 1) as f64;
            let mut m = vec![0.0; n * n];
            for j in 1..=n {
                let col = self.eval_derivative_unchecked(s, j);
                for r in 0..n {
                    m[r * n + j - 1] = col[r];
                }
            }
            let d = det(&mut m, n).abs();
            min_det = min_det.min(d);
        }
        min_det
    }

    /// Validate the class invariants when class parameters are present.
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::Invalid("curve dimension must be >= 2".into()));
        }
        if self.coeffs.len() != self.dim {
            return Err(Error::Invalid("coefficient row count != dim".into()));
        }
        if let Some(cp) = self.class_params {
            let cap = (1.0 / cp.eps).floor() as usize + self.dim;
            if self.degree() > cap + 1 {
                return Err(Error::Invalid(format!(
                    "degree {} exceeds class cap {} for eps={}",
                    self.degree(),
                    cap + 1,
                    cp.eps
                )));
            }
        }
        let margin = self.nondegeneracy_margin(64 * self.degree().max(1));
        if margin <= 0.0 {
            return Err(Error::Degenerate(format!(
                "nondegeneracy margin {margin} is not positive"
            )));
        }
        Ok(())
    }

    /// Random curve from the class C_n(A,R,eps): the model plus
    /// `R^-eps s^(n+1) E(s)` with coefficients uniform in [-A, A].
    pub fn random_class(
        n: usize,
        params: ClassParams,
        rng: &mut impl rand::RngExt,
    ) -> PolyCurve {
        let mut c = PolyCurve::model(n);
        let deg_e = (1.0 / params.eps).floor() as usize;
        let scale = params.r.powf(-params.eps);
        for row in c.coeffs.iter_mut() {
            row.resize(n + 2 + deg_e, 0.0);
            for slot in row.iter_mut().skip(n + 1).take(deg_e + 1) {
                *slot += scale * rng.random_range(-params.a..params.a);
            }
        }
        c.class_params = Some(params);
        c
    }
}

/// Curve definition file: first line `dim n deg d domain a b`, then one
/// line per coordinate with space-separated coefficients, lowest degree
/// first. `#` starts a comment. Floats print in shortest round-trip form,
/// so write-then-read reproduces the curve bit-exactly.
pub fn format_curve(curve: &PolyCurve) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "dim {} deg {} domain {} {}\n",
        curve.dim,
        curve.degree(),
        curve.domain.0,
        curve.domain.1
    ));
    for row in &curve.coeffs {
        let parts: Vec<String> = row.iter().map(|c| format!("{c}")).collect();
        out.push_str(&parts.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_curve(text: &str) -> Result<PolyCurve> {
    let mut lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty curve file".into()))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 7 || toks[0] != "dim" || toks[2] != "deg" || toks[4] != "domain" {
        return Err(Error::Parse(
            "curve header must be `dim n deg d domain a b`".into(),
        ));
    }
    let dim: usize = toks[1]
        .parse()
        .map_err(|_| Error::Parse("bad dim in curve header".into()))?;
    let deg: usize = toks[3]
        .parse()
        .map_err(|_| Error::Parse("bad deg in curve header".into()))?;
    let a: f64 = toks[5]
        .parse()
        .map_err(|_| Error::Parse("bad domain start".into()))?;
    let b: f64 = toks[6]
        .parse()
        .map_err(|_| Error::Parse("bad domain end".into()))?;
    let mut coeffs = Vec::with_capacity(dim);
    for line in lines.take(dim) {
        let row: std::result::Result<Vec<f64>, _> =
            line.split_whitespace().map(|t| t.parse::<f64>()).collect();
        let row = row.map_err(|_| Error::Parse("bad coefficient".into()))?;
        if row.len() > deg + 1 {
            return Err(Error::Parse("coefficient row exceeds declared degree".into()));
        }
        coeffs.push(row);
    }
    if coeffs.len() != dim {
        return Err(Error::Parse(format!(
            "expected {dim} coordinate rows, found {}",
            coeffs.len()
        )));
    }
    let curve = PolyCurve { dim, coeffs, domain: (a, b), class_params: None };
    Ok(curve)
}

/// LU determinant with partial pivoting; m is row-major n x n, consumed.
pub fn det(m: &mut [f64], n: usize) -> f64 {
    let mut sign = 1.0;
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if m[r * n + col].abs() > m[piv * n + col].abs() {
                piv = r;
            }
        }
        if m[piv * n + col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
            }
            sign = -sign;
        }
        let d = m[col * n + col];
        for r in col + 1..n {
            let f = m[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[r * n + k] -= f * m[col * n + k];
            }
        }
    }
    let mut out = sign;
    for i in 0..n {
        out *= m[i * n + i];
    }
    out
}

/// Solve A x = b in place (A row-major n x n, consumed). Returns None when singular.
pub fn solve(a: &mut [f64], b: &mut [f64], n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        if a[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[r * n + k] -= f * a[col * n + k];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row * n + k] * x[k];
        }
        x[row] = acc / a[row * n + row];
    }
    Some(x)
}

/// Rescaling maps used by the block and flat-cone reductions.
#[derive(Clone, Debug)]
pub enum RescaleMap {
    /// Identity (kept for the trivial round-trip case).
    Identity,
    /// Recenter at t0, renormalize the derivative frame to the moment
    /// frame, then apply the graded parabolic dilation
    /// `L1 = diag(X^(n/n), ..., X^(1/n))` with `t -> X^(-1/n) t`.
    Block { t0: f64, scale: f64 },
    /// The graded map `L_{J,X}` with diagonal exponents `d-J-i+1` and
    /// parameter substitution `t -> t/X`.
    Flat { j: usize, x: f64 },
}

impl RescaleMap {
    pub fn determinant(&self, dim: usize) -> f64 {
        match self {
            RescaleMap::Identity => 1.0,
            RescaleMap::Block { scale, .. } => {
                // prod_i X^((n+1-i)/n) = X^((n+1)/2)
                scale.powf((dim as f64 + 1.0) / 2.0)
            }
            RescaleMap::Flat { j, x } => {
                let d = dim as i64;
                let jj = *j as i64;
                let mut e = 0i64;
                for i in 1..=d {
                    e += d - jj - i + 1;
                }
                x.powi(e as i32)
            }
        }
    }

    /// Per-axis diagonal factors of the linear part.
    pub fn axis_factors(&self, dim: usize) -> Vec<f64> {
        match self {
            RescaleMap::Identity => vec![1.0; dim],
            RescaleMap::Block { scale, .. } => (1..=dim)
                .map(|i| scale.powf((dim + 1 - i) as f64 / dim as f64))
                .collect(),
            RescaleMap::Flat { j, x } => (1..=dim)
                .map(|i| x.powi((dim as i64 - *j as i64 - i as i64 + 1) as i32))
                .collect(),
        }
    }
}

/// Apply a rescaling map to a polynomial curve, producing a new polynomial
/// curve. For the block map the output matches the moment curve to order n
/// at t = 0, with perturbation coefficients shrunk by the scale.
pub fn rescale(curve: &PolyCurve, map: &RescaleMap) -> Result<PolyCurve> {
    let n = curve.dim;
    match map {
        RescaleMap::Identity => Ok(curve.clone()),
        RescaleMap::Block { t0, scale } => {
            if *scale <= 0.0 {
                return Err(Error::Invalid("block rescale needs scale > 0".into()));
            }
            // 1. recenter: c(t) = gamma(t0 + t) - gamma(t0)
            let recentered = shift_poly(curve, *t0);
            // 2. linear normalization A with A c^(j)(0) = moment^(j)(0)
            let mut v = vec![0.0; n * n];
            for j in 1..=n {
                let col = recentered.eval_derivative_unchecked(0.0, j);
                for r in 0..n {
                    v[r * n + j - 1] = col[r];
                }
            }
            // A = V_model V^-1 where V_model maps e_j -> unit(n+1-j);
            // solve V^T rows instead: row r of A solves A V = V_model.
            let a_mat = normalization_matrix(&v, n)
                .ok_or_else(|| Error::Degenerate("derivative frame is singular".into()))?;
            let normalized = apply_linear(&recentered, &a_mat);
            // 3. graded dilation with parameter substitution
            let factors = map.axis_factors(n);
            let root = scale.powf(1.0 / n as f64);
            let mut out = substitute_scaled_param(&normalized, 1.0 / root);
            for (i, row) in out.coeffs.iter_mut().enumerate() {
                for c in row.iter_mut() {
                    *c *= factors[i];
                }
            }
            out.domain = (0.0, 1.0);
            out.class_params = curve.class_params;
            Ok(out)
        }
        RescaleMap::Flat { x, .. } => {
            if *x <= 0.0 {
                return Err(Error::Invalid("flat rescale needs X > 0".into()));
            }
            let factors = map.axis_factors(n);
            let mut out = substitute_scaled_param(curve, 1.0 / x);
            for (i, row) in out.coeffs.iter_mut().enumerate() {
                for c in row.iter_mut() {
                    *c *= factors[i];
                }
            }
            out.domain = (curve.domain.0 * x, curve.domain.1 * x);
            out.class_params = curve.class_params;
            Ok(out)
        }
    }
}

/// gamma(t0 + t) - gamma(t0) as a polynomial in t.
fn shift_poly(curve: &PolyCurve, t0: f64) -> PolyCurve {
    let order = curve.degree();
    let mut coeffs = Vec::with_capacity(curve.dim);
    for row in &curve.coeffs {
        let jet = Jet::from_poly(row, t0, order);
        let mut new_row = jet.c.clone();
        new_row[0] = 0.0;
        coeffs.push(new_row);
    }
    PolyCurve {
        dim: curve.dim,
        coeffs,
        domain: (curve.domain.0 - t0, curve.domain.1 - t0),
        class_params: curve.class_params,
    }
}

/// Matrix A with A * col_j(V) = unit(n - j) for j = 0..n-1 (columns are
/// the successive derivatives, targets are the moment-curve derivatives).
fn normalization_matrix(v: &[f64], n: usize) -> Option<Vec<f64>> {
    // A V = T where T[r][j] = 1 if r == n-1-j else 0.
    // => V^T A^T = T^T; solve per row of A^T.
    let mut a_t = vec![0.0; n * n];
    for col in 0..n {
        // column `col` of A^T is row `col` of A: solve V^T y = T^T[:, col]
        let mut vt = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                vt[r * n + c] = v[c * n + r];
            }
        }
        let mut rhs = vec![0.0; n];
        for j in 0..n {
            // T[col][j] = 1 iff col == n-1-j
            rhs[j] = if col == n - 1 - j { 1.0 } else { 0.0 };
        }
        let y = solve(&mut vt, &mut rhs, n)?;
        for r in 0..n {
            a_t[r * n + col] = y[r];
        }
    }
    // a_t currently holds A^T in row-major; transpose to A.
    let mut a = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            a[r * n + c] = a_t[c * n + r];
        }
    }
    Some(a)
}

fn apply_linear(curve: &PolyCurve, a: &[f64]) -> PolyCurve {
    let n = curve.dim;
    let deg = curve.coeffs.iter().map(|r| r.len()).max().unwrap_or(1);
    let mut coeffs = vec![vec![0.0; deg]; n];
    for r in 0..n {
        for c in 0..n {
            let f = a[r * n + c];
            if f == 0.0 {
                continue;
            }
            for (k, &x) in curve.coeffs[c].iter().enumerate() {
                coeffs[r][k] += f * x;
            }
        }
    }
    PolyCurve { dim: n, coeffs, domain: curve.domain, class_params: curve.class_params }
}

/// gamma(alpha * t) as a polynomial in t.
fn substitute_scaled_param(curve: &PolyCurve, alpha: f64) -> PolyCurve {
    let coeffs = curve
        .coeffs
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(k, &c)| c * alpha.powi(k as i32))
                .collect()
        })
        .collect();
    PolyCurve {
        dim: curve.dim,
        coeffs,
        domain: (curve.domain.0 / alpha, curve.domain.1 / alpha),
        class_params: curve.class_params,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn model_curve_derivatives() {
        let c = PolyCurve::model(3);
        assert_eq!(c.eval_derivative(0.0, 1).unwrap(), vec![0.0, 0.0, 1.0]);
        assert_eq!(c.eval_derivative(0.0, 3).unwrap(), vec![1.0, 0.0, 0.0]);
        // beyond the degree: zero vector, not an error
        assert_eq!(c.eval_derivative(0.5, 4).unwrap(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn n2_second_derivative_with_fd_oracle() {
        let c = PolyCurve::model(2);
        let d2 = c.eval_derivative(0.5, 2).unwrap();
        assert_eq!(d2, vec![1.0, 0.0]);
        // central finite difference oracle at h=1e-6
        let h = 1e-6;
        let p = c.eval(0.5 + h);
        let m = c.eval(0.5 - h);
        let z = c.eval(0.5);
        for i in 0..2 {
            let fd = (p[i] - 2.0 * z[i] + m[i]) / (h * h);
            assert!((fd - d2[i]).abs() < 1e-3);
        }
    }

    #[test]
    fn domain_error() {
        let c = PolyCurve::model(2);
        assert!(c.eval_derivative(1.5, 1).is_err());
    }

    #[test]
    fn moment_curve_margin_is_one() {
        for n in 2..=5 {
            let c = PolyCurve::model(n);
            let m = c.nondegeneracy_margin(100);
            assert!((m - 1.0).abs() < 1e-9, "n={n}: margin {m}");
        }
        // also the increasing-power parabola
        let c = PolyCurve {
            dim: 2,
            coeffs: vec![vec![0.0, 1.0], vec![0.0, 0.0, 0.5]],
            domain: (0.0, 1.0),
            class_params: None,
        };
        assert!((c.nondegeneracy_margin(100) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perturbed_margin_stays_near_one() {
        // A small perturbation keeps the Wronskian margin near the model
        // value 1. (At A=1, eps=0.1, R=2^12 the prefactor R^-eps ~ 0.43 is
        // not yet in the asymptotic regime and margins land near 8.)
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let params = ClassParams { a: 0.02, r: 4096.0, eps: 0.1 };
        let c = PolyCurve::random_class(3, params, &mut rng);
        let m = c.nondegeneracy_margin(256);
        assert!(m > 0.9 && m < 1.1, "margin {m}");
    }

    #[test]
    fn identity_rescale_roundtrip() {
        let c = PolyCurve::model(3);
        let r = rescale(&c, &RescaleMap::Identity).unwrap();
        assert_eq!(c, r);
    }

    #[test]
    fn moment_curve_self_similar_under_block_rescale() {
        // n=2, scale 4: gamma~(t) = L1(gamma(t/2)) is again (t^2/2, t)
        let c = PolyCurve::model(2);
        let r = rescale(&c, &RescaleMap::Block { t0: 0.0, scale: 4.0 }).unwrap();
        let m = PolyCurve::model(2);
        for i in 0..2 {
            for k in 0..3 {
                let a = r.coeffs[i].get(k).copied().unwrap_or(0.0);
                let b = m.coeffs[i].get(k).copied().unwrap_or(0.0);
                assert!((a - b).abs() < 1e-12, "coeff ({i},{k}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn block_rescale_shrinks_perturbation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let params = ClassParams { a: 1.0, r: 4096.0, eps: 0.1 };
        let c = PolyCurve::random_class(3, params, &mut rng);
        let scale = 8.0;
        let r = rescale(&c, &RescaleMap::Block { t0: 0.5, scale }).unwrap();
        // moment part reproduced to order n at t=0
        for j in 1..=3usize {
            let d = r.eval_derivative_unchecked(0.0, j);
            for (i, &x) in d.iter().enumerate() {
                let want = if i == 3 - j { 1.0 } else { 0.0 };
                assert!((x - want).abs() < 1e-9, "j={j}, i={i}: {x}");
            }
        }
        // perturbation (order n+1) coefficients shrink at least by scale^(1/n)
        let before: f64 = c.coeffs.iter().flat_map(|r| r.iter().skip(4)).map(|x| x.abs()).sum();
        let after: f64 = r.coeffs.iter().flat_map(|r| r.iter().skip(4)).map(|x| x.abs()).sum();
        if before > 1e-12 {
            assert!(after < before, "perturbation grew: {before} -> {after}");
        }
    }

    #[test]
    fn curve_file_roundtrip_is_bit_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let c = PolyCurve::random_class(3, ClassParams { a: 1.0, r: 4096.0, eps: 0.1 }, &mut rng);
        let text = format_curve(&c);
        let d = parse_curve(&text).unwrap();
        assert_eq!(c.dim, d.dim);
        assert_eq!(c.domain, d.domain);
        for (ra, rb) in c.coeffs.iter().zip(&d.coeffs) {
            let ra_trim: Vec<f64> = ra.iter().cloned().collect();
            for (i, b) in rb.iter().enumerate() {
                assert!(ra_trim[i].to_bits() == b.to_bits(), "coefficient drift");
            }
        }
        // comments and the header guard
        assert!(parse_curve("dim 2 deg 1 domain 0 1\n# c\n0 1\n1 0\n").is_ok());
        assert!(parse_curve("bogus").is_err());
    }

    #[test]
    fn flat_rescale_determinant_matches_axis_product() {
        for (j, x) in [(1usize, 2.0f64), (2, 100.0)] {
            let map = RescaleMap::Flat { j, x };
            let f = map.axis_factors(5);
            let prod: f64 = f.iter().product();
            assert!((map.determinant(5) - prod).abs() / prod.abs() < 1e-12);
        }
    }
}
