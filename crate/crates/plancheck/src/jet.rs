//! Truncated Taylor jets.
//!
//! A `Jet` holds the coefficients of a function's Taylor expansion at a base
//! point, up to a fixed order. Products, quotients and square roots propagate
//! through the usual recurrences, so the cone lift `(gamma(s),1)/sqrt(|gamma|^2+1)`
//! and the Gram-Schmidt frame can be differentiated without finite differences.

#[derive(Clone, Debug)]
pub struct Jet {
    /// `c[j] = f^(j)(s0) / j!`
    pub c: Vec<f64>,
}

impl Jet {
    pub fn constant(value: f64, order: usize) -> Jet {
        let mut c = vec![0.0; order + 1];
        c[0] = value;
        Jet { c }
    }

    /// The identity function s at base point s0.
    pub fn variable(s0: f64, order: usize) -> Jet {
        let mut c = vec![0.0; order + 1];
        c[0] = s0;
        if order >= 1 {
            c[1] = 1.0;
        }
        Jet { c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// j-th derivative at the base point.
    pub fn derivative(&self, j: usize) -> f64 {
        if j >= self.c.len() {
            return 0.0;
        }
        let mut fact = 1.0;
        for i in 1..=j {
            fact *= i as f64;
        }
        self.c[j] * fact
    }

    pub fn add(&self, other: &Jet) -> Jet {
        let mut c = self.c.clone();
        for (a, b) in c.iter_mut().zip(&other.c) {
            *a += *b;
        }
        Jet { c }
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        let mut c = self.c.clone();
        for (a, b) in c.iter_mut().zip(&other.c) {
            *a -= *b;
        }
        Jet { c }
    }

    pub fn scale(&self, k: f64) -> Jet {
        Jet { c: self.c.iter().map(|x| x * k).collect() }
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        let n = self.c.len();
        let mut c = vec![0.0; n];
        for i in 0..n {
            for j in 0..n - i {
                c[i + j] += self.c[i] * other.c[j];
            }
        }
        Jet { c }
    }

    /// Reciprocal; requires nonzero value at the base point.
    pub fn recip(&self) -> Jet {
        let n = self.c.len();
        assert!(self.c[0] != 0.0, "jet reciprocal at a zero");
        let mut c = vec![0.0; n];
        c[0] = 1.0 / self.c[0];
        for k in 1..n {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += self.c[j] * c[k - j];
            }
            c[k] = -acc / self.c[0];
        }
        Jet { c }
    }

    /// Square root; requires a positive value at the base point.
    pub fn sqrt(&self) -> Jet {
        let n = self.c.len();
        assert!(self.c[0] > 0.0, "jet sqrt needs positive base value");
        let mut c = vec![0.0; n];
        c[0] = self.c[0].sqrt();
        for k in 1..n {
            let mut acc = 0.0;
            for j in 1..k {
                acc += c[j] * c[k - j];
            }
            c[k] = (self.c[k] - acc) / (2.0 * c[0]);
        }
        Jet { c }
    }

    /// Formal derivative, dropping to one lower order.
    pub fn differentiate(&self) -> Jet {
        let n = self.c.len();
        let mut c = vec![0.0; n];
        for k in 1..n {
            c[k - 1] = self.c[k] * k as f64;
        }
        c[n - 1] = 0.0;
        Jet { c }
    }

    /// Evaluate a polynomial (coefficients lowest-degree first) as a jet.
    pub fn from_poly(coeffs: &[f64], s0: f64, order: usize) -> Jet {
        // Horner in jet arithmetic is overkill; expand via binomials instead:
        // sum_m a_m (s0 + h)^m, collecting h^j terms.
        let mut c = vec![0.0; order + 1];
        for (m, &a) in coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            // (s0 + h)^m: coefficient of h^j is C(m,j) s0^(m-j)
            let jmax = m.min(order);
            let mut binom = 1.0; // C(m,0)
            let mut pw = s0.powi(m as i32); // s0^(m-j) at j=0
            for j in 0..=jmax {
                c[j] += a * binom * pw;
                // update to j+1
                binom *= (m - j) as f64 / (j + 1) as f64;
                if s0 != 0.0 {
                    pw /= s0;
                } else {
                    pw = if m == j + 1 { 1.0 } else { 0.0 };
                }
            }
        }
        Jet { c }
    }
}

/// A vector of jets, one per coordinate.
#[derive(Clone, Debug)]
pub struct JetVec {
    pub comps: Vec<Jet>,
}

impl JetVec {
    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn dot(&self, other: &JetVec) -> Jet {
        let order = self.comps[0].order();
        let mut acc = Jet::constant(0.0, order);
        for (a, b) in self.comps.iter().zip(&other.comps) {
            acc = acc.add(&a.mul(b));
        }
        acc
    }

    pub fn scale_jet(&self, k: &Jet) -> JetVec {
        JetVec { comps: self.comps.iter().map(|c| c.mul(k)).collect() }
    }

    pub fn sub(&self, other: &JetVec) -> JetVec {
        JetVec {
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.sub(b)).collect(),
        }
    }

    pub fn differentiate(&self) -> JetVec {
        JetVec { comps: self.comps.iter().map(|c| c.differentiate()).collect() }
    }

    pub fn values(&self) -> Vec<f64> {
        self.comps.iter().map(|c| c.value()).collect()
    }

    /// First-order coefficients: the s-derivative of the vector at the base point.
    pub fn first_derivative(&self) -> Vec<f64> {
        self.comps.iter().map(|c| c.derivative(1)).collect()
    }
}
