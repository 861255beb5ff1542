//! Scalar reference formulas evaluated with 320-bit floats.
//!
//! Inputs are f64 values; every intermediate is carried at high precision and
//! only the final result is rounded, so the result is the correctly rounded
//! value of the formula at the given inputs (up to one ulp).

use astro_float::{BigFloat, Consts, RoundingMode};

const P: usize = 320;
const RM: RoundingMode = RoundingMode::ToEven;

pub struct Hp {
    cc: Consts,
}

#[derive(Clone, Debug)]
pub struct Cx {
    pub re: BigFloat,
    pub im: BigFloat,
}

impl Default for Hp {
    fn default() -> Self {
        Self::new()
    }
}

impl Hp {
    pub fn new() -> Self {
        Self {
            cc: Consts::new().expect("constants cache"),
        }
    }

    pub fn f(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, P)
    }

    pub fn int(&self, x: u64) -> BigFloat {
        BigFloat::from_u64(x, P)
    }

    pub fn to_f64(&self, x: &BigFloat) -> f64 {
        let s = format!("{x}");
        s.parse().unwrap_or_else(|_| panic!("unparsable {s}"))
    }

    pub fn pi(&mut self) -> BigFloat {
        self.cc.pi(P, RM)
    }

    pub fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, P, RM)
    }

    pub fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, P, RM)
    }

    pub fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, P, RM)
    }

    pub fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, P, RM)
    }

    pub fn exp(&mut self, a: &BigFloat) -> BigFloat {
        a.exp(P, RM, &mut self.cc)
    }

    pub fn ln(&mut self, a: &BigFloat) -> BigFloat {
        a.ln(P, RM, &mut self.cc)
    }

    pub fn sqrt(&self, a: &BigFloat) -> BigFloat {
        a.sqrt(P, RM)
    }

    pub fn cos(&mut self, a: &BigFloat) -> BigFloat {
        a.cos(P, RM, &mut self.cc)
    }

    pub fn sin(&mut self, a: &BigFloat) -> BigFloat {
        a.sin(P, RM, &mut self.cc)
    }

    pub fn pow(&mut self, a: &BigFloat, e: &BigFloat) -> BigFloat {
        a.pow(e, P, RM, &mut self.cc)
    }

    /// `10^(db/10)`
    pub fn db_to_linear(&mut self, db: f64) -> BigFloat {
        let ten = self.f(10.0);
        let ln10 = self.ln(&ten);
        let x = self.div(&self.f(db), &ten);
        let y = self.mul(&x, &ln10);
        self.exp(&y)
    }

    pub fn los_probability(&mut self, theta_deg: f64, a: f64, b: f64) -> BigFloat {
        let (a, b, t) = (self.f(a), self.f(b), self.f(theta_deg));
        let arg = self.mul(&b, &self.sub(&t, &a)).neg();
        let e = self.exp(&arg);
        let one = self.f(1.0);
        self.div(&one, &self.add(&one, &self.mul(&a, &e)))
    }

    fn friis(&mut self, d: f64, lambda: f64, alpha: f64) -> BigFloat {
        let pi = self.pi();
        let x = self.div(&self.mul(&self.mul(&self.f(4.0), &pi), &self.f(d)), &self.f(lambda));
        let e = self.f(alpha);
        self.pow(&x, &e)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn a2g_loss(
        &mut self,
        d: f64,
        lambda: f64,
        alpha: f64,
        theta_deg: f64,
        a: f64,
        b: f64,
        mu_los_db: f64,
        mu_nlos_db: f64,
    ) -> BigFloat {
        let core = self.friis(d, lambda, alpha);
        let p = self.los_probability(theta_deg, a, b);
        let ml = self.db_to_linear(mu_los_db);
        let mn = self.db_to_linear(mu_nlos_db);
        let one = self.f(1.0);
        let atten = self.add(&self.mul(&ml, &p), &self.mul(&mn, &self.sub(&one, &p)));
        self.mul(&core, &atten)
    }

    pub fn a2a_loss(&mut self, d: f64, lambda: f64, alpha: f64, mu_los_db: f64) -> BigFloat {
        let core = self.friis(d, lambda, alpha);
        let ml = self.db_to_linear(mu_los_db);
        self.mul(&core, &ml)
    }

    pub fn rician(&mut self, theta_deg: f64, a1: f64, a2: f64) -> BigFloat {
        let pi = self.pi();
        let rad = self.div(&self.mul(&self.f(theta_deg), &pi), &self.f(180.0));
        let e = self.exp(&self.mul(&self.f(a2), &rad));
        self.mul(&self.f(a1), &e)
    }

    /// Element `i` is `exp(−jπ·i·cos φ)`.
    pub fn steering(&mut self, phi: f64, n: usize) -> Vec<Cx> {
        let pi = self.pi();
        let c = self.cos(&self.f(phi));
        (0..n)
            .map(|i| {
                let arg = self.mul(&self.mul(&pi, &self.int(i as u64)), &c).neg();
                Cx {
                    re: self.cos(&arg),
                    im: self.sin(&arg),
                }
            })
            .collect()
    }

    pub fn cx(&self, re: f64, im: f64) -> Cx {
        Cx {
            re: self.f(re),
            im: self.f(im),
        }
    }

    /// `|Σ_i g_i w_i|²` for a row channel `g` and column precoder `w`.
    pub fn beam_gain(&self, g: &[Cx], w: &[Cx]) -> BigFloat {
        let mut re = self.f(0.0);
        let mut im = self.f(0.0);
        for (a, b) in g.iter().zip(w) {
            re = self.add(&re, &self.sub(&self.mul(&a.re, &b.re), &self.mul(&a.im, &b.im)));
            im = self.add(&im, &self.add(&self.mul(&a.re, &b.im), &self.mul(&a.im, &b.re)));
        }
        self.add(&self.mul(&re, &re), &self.mul(&im, &im))
    }

    /// `Σ_rows |g_r · w|²` for a matrix channel given as rows.
    pub fn beam_gain_mimo(&self, rows: &[Vec<Cx>], w: &[Cx]) -> BigFloat {
        rows.iter()
            .fold(self.f(0.0), |acc, r| self.add(&acc, &self.beam_gain(r, w)))
    }

    /// `signal / (Σ interference + noise)` with all terms already in watts.
    pub fn sinr(&self, signal: &BigFloat, interference: &[BigFloat], noise: f64) -> BigFloat {
        let total = interference
            .iter()
            .fold(self.f(noise), |acc, x| self.add(&acc, x));
        self.div(signal, &total)
    }

    /// `B·log₂(1+SINR)·T / N_p` before flooring.
    pub fn capacity_exact(&mut self, b: f64, sinr: f64, t: f64, np: f64) -> BigFloat {
        let one = self.f(1.0);
        let two = self.f(2.0);
        let num = self.ln(&self.add(&one, &self.f(sinr)));
        let den = self.ln(&two);
        let l = self.div(&num, &den);
        self.div(&self.mul(&self.mul(&self.f(b), &l), &self.f(t)), &self.f(np))
    }
}
