//! Exponent algebra of the blow-up region.
//!
//! Everything here is a closed-form function of the parameters. The lifespan
//! classification decides `Ω = 0` exactly when every input is a short decimal
//! (recognized as a rational with denominator at most 10⁶) and falls back to a
//! float tolerance otherwise.

use crate::error::{invalid, Result};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Parameter set of the coupled system.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SystemParams {
    /// Spatial dimension `N`.
    pub n: u32,
    pub mu1: f64,
    pub mu2: f64,
    pub nu1_sq: f64,
    pub nu2_sq: f64,
    pub p: f64,
    pub q: f64,
    /// Support radius `R` of the initial data.
    pub radius: f64,
    /// Data size `ε`.
    pub eps: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            n: 1,
            mu1: 2.0,
            mu2: 2.0,
            nu1_sq: 0.1875,
            nu2_sq: 0.1875,
            p: 2.0,
            q: 2.0,
            radius: 1.0,
            eps: 0.1,
        }
    }
}

impl SystemParams {
    /// Checks every invariant, reporting the first one that fails.
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(invalid!("N must be a positive integer (got {})", self.n));
        }
        for (name, v) in [("mu1", self.mu1), ("mu2", self.mu2), ("nu1sq", self.nu1_sq), ("nu2sq", self.nu2_sq)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid!("{name} must be a nonnegative real (got {v})"));
            }
        }
        if !(self.p.is_finite() && self.p > 1.0) {
            return Err(invalid!("p must exceed 1 (got {})", self.p));
        }
        if !(self.q.is_finite() && self.q > 1.0) {
            return Err(invalid!("q must exceed 1 (got {})", self.q));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(invalid!("R must be positive (got {})", self.radius));
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(invalid!("eps must be positive (got {})", self.eps));
        }
        Ok(())
    }

    pub fn delta1(&self) -> f64 {
        delta(self.mu1, self.nu1_sq)
    }

    pub fn delta2(&self) -> f64 {
        delta(self.mu2, self.nu2_sq)
    }

    /// `η₀ = 1 + max(|ν₁|, |ν₂|)`.
    pub fn eta0(&self) -> f64 {
        1.0 + libm::sqrt(self.nu1_sq).max(libm::sqrt(self.nu2_sq))
    }

    /// The blow-up theorem needs `δ₁ > 0` and `δ₂ > 0`.
    pub fn theorem_applicable(&self) -> bool {
        self.delta1() > 0.0 && self.delta2() > 0.0
    }

    /// The same system with the roles of `u` and `v` exchanged.
    pub fn swapped(&self) -> Self {
        SystemParams {
            mu1: self.mu2,
            mu2: self.mu1,
            nu1_sq: self.nu2_sq,
            nu2_sq: self.nu1_sq,
            p: self.q,
            q: self.p,
            ..*self
        }
    }

    pub(crate) fn mu(&self, i: usize) -> f64 {
        if i == 0 { self.mu1 } else { self.mu2 }
    }

    pub(crate) fn nu_sq(&self, i: usize) -> f64 {
        if i == 0 { self.nu1_sq } else { self.nu2_sq }
    }
}

/// `δ = (μ − 1)² − 4ν²`. May be negative.
pub fn delta(mu: f64, nu_sq: f64) -> f64 {
    (mu - 1.0) * (mu - 1.0) - 4.0 * nu_sq
}

/// Dimension shift `σ(μ, ν)` of the earlier blow-up region.
pub fn sigma(mu: f64, nu_sq: f64) -> Result<f64> {
    let d = delta(mu, nu_sq);
    if !(d >= 0.0) {
        return Err(invalid!("sigma is undefined for delta < 0 (mu = {mu}, nu_sq = {nu_sq}, delta = {d})"));
    }
    if d < 1.0 {
        Ok(mu + 1.0 - libm::sqrt(d))
    } else {
        Ok(mu)
    }
}

/// Glassey exponent `p_G(N) = 1 + 2/(N − 1)`.
pub fn glassey(n_eff: f64) -> Result<f64> {
    if !(n_eff > 1.0) {
        return Err(invalid!("Glassey exponent needs N_eff > 1 (got {n_eff})"));
    }
    Ok(1.0 + 2.0 / (n_eff - 1.0))
}

/// `Λ(N, p, q) = (p + 1)/(pq − 1) − (N − 1)/2`.
pub fn lambda_exp(n_eff: f64, p: f64, q: f64) -> f64 {
    (p + 1.0) / (p * q - 1.0) - (n_eff - 1.0) / 2.0
}

/// `Υ(N, p, q) = max(Λ(N, p, q), Λ(N, q, p))`, the undamped critical curve.
pub fn upsilon(n: f64, p: f64, q: f64) -> f64 {
    lambda_exp(n, p, q).max(lambda_exp(n, q, p))
}

/// `Ω(N, μ₁, μ₂, p, q) = max(Λ(N+μ₁, p, q), Λ(N+μ₂, q, p))`.
pub fn omega_new(params: &SystemParams) -> f64 {
    let n = f64::from(params.n);
    lambda_exp(n + params.mu1, params.p, params.q).max(lambda_exp(n + params.mu2, params.q, params.p))
}

/// The same maximum with the dimension shifted by `σ_i` instead of `μ_i`.
pub fn omega_sigma(params: &SystemParams) -> Result<f64> {
    let n = f64::from(params.n);
    let s1 = sigma(params.mu1, params.nu1_sq)?;
    let s2 = sigma(params.mu2, params.nu2_sq)?;
    Ok(lambda_exp(n + s1, params.p, params.q).max(lambda_exp(n + s2, params.q, params.p)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum CaseLabel {
    Subcritical,
    CriticalMixed,
    CriticalDouble,
    OutsideRegion,
}

/// Shape of the upper bound on the lifespan.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum LifespanBound {
    /// `T(ε) ≤ C ε^(-exponent)`.
    Power { exponent: f64 },
    /// `T(ε) ≤ exp(C ε^(-exponent))`.
    Exponential { exponent: f64 },
    /// No information.
    None,
}

impl LifespanBound {
    /// Slope expected for `log T` (power case) or `log log T` (exponential case) against `log ε`.
    pub fn predicted_slope(&self) -> Option<f64> {
        match *self {
            LifespanBound::Power { exponent } | LifespanBound::Exponential { exponent } => Some(-exponent),
            LifespanBound::None => None,
        }
    }
}

/// Tolerances for deciding `Ω = 0` and `Λ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalityTolerance {
    /// Used when all inputs were recognized as rationals and evaluated exactly.
    pub exact: f64,
    /// Used for plain floating-point evaluation.
    pub float: f64,
}

impl Default for CriticalityTolerance {
    fn default() -> Self {
        CriticalityTolerance { exact: 1e-12, float: 1e-9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RegionReport {
    pub delta1: f64,
    pub delta2: f64,
    /// `None` when the corresponding `δ` is negative.
    pub sigma1: Option<f64>,
    pub sigma2: Option<f64>,
    pub lambda_new_1: f64,
    pub lambda_new_2: f64,
    pub omega_new: f64,
    pub omega_sigma: Option<f64>,
    pub eta0: f64,
    pub theorem_applicable: bool,
    /// Whether `Ω = 0` was decided in exact rational arithmetic.
    pub exact_arithmetic: bool,
    pub case_label: CaseLabel,
    pub bound: LifespanBound,
}

pub fn region_report(params: &SystemParams) -> RegionReport {
    region_report_with(params, CriticalityTolerance::default())
}

pub fn region_report_with(params: &SystemParams, tol: CriticalityTolerance) -> RegionReport {
    let n = f64::from(params.n);
    let lambda_new_1 = lambda_exp(n + params.mu1, params.p, params.q);
    let lambda_new_2 = lambda_exp(n + params.mu2, params.q, params.p);
    let (case_label, bound, exact_arithmetic) = classify(params, tol);
    RegionReport {
        delta1: params.delta1(),
        delta2: params.delta2(),
        sigma1: sigma(params.mu1, params.nu1_sq).ok(),
        sigma2: sigma(params.mu2, params.nu2_sq).ok(),
        lambda_new_1,
        lambda_new_2,
        omega_new: lambda_new_1.max(lambda_new_2),
        omega_sigma: omega_sigma(params).ok(),
        eta0: params.eta0(),
        theorem_applicable: params.theorem_applicable(),
        exact_arithmetic,
        case_label,
        bound,
    }
}

/// Lifespan case of the blow-up theorem together with the shape of its bound.
pub fn classify_lifespan(params: &SystemParams) -> (CaseLabel, LifespanBound) {
    let (label, bound, _) = classify(params, CriticalityTolerance::default());
    (label, bound)
}

pub fn classify_lifespan_with(params: &SystemParams, tol: CriticalityTolerance) -> (CaseLabel, LifespanBound) {
    let (label, bound, _) = classify(params, tol);
    (label, bound)
}

fn classify(params: &SystemParams, tol: CriticalityTolerance) -> (CaseLabel, LifespanBound, bool) {
    let n = f64::from(params.n);
    let (p, q) = (params.p, params.q);
    let (l1, l2, tol_used, exact) = match (exact_lambda(params, 0), exact_lambda(params, 1)) {
        (Some(a), Some(b)) => (a.to_f64(), b.to_f64(), tol.exact, true),
        _ => (
            lambda_exp(n + params.mu1, p, q),
            lambda_exp(n + params.mu2, q, p),
            tol.float,
            false,
        ),
    };
    let omega = l1.max(l2);
    let is_zero = |x: f64| x.abs() <= tol_used;
    let pq1 = p * q - 1.0;
    let (label, bound) = if is_zero(omega) {
        if is_zero(l1) && is_zero(l2) {
            let e = (pq1 / (p + 1.0)).min(pq1 / (q + 1.0));
            (CaseLabel::CriticalDouble, LifespanBound::Exponential { exponent: e })
        } else {
            (CaseLabel::CriticalMixed, LifespanBound::Exponential { exponent: pq1 })
        }
    } else if omega > 0.0 {
        (CaseLabel::Subcritical, LifespanBound::Power { exponent: omega })
    } else {
        (CaseLabel::OutsideRegion, LifespanBound::None)
    };
    (label, bound, exact)
}

/// `Λ(N + μ_i, ·, ·)` in exact rational arithmetic, when every input is a short rational.
fn exact_lambda(params: &SystemParams, i: usize) -> Option<Ratio> {
    let (a, b) = if i == 0 { (params.p, params.q) } else { (params.q, params.p) };
    let p = Ratio::recognize(a)?;
    let q = Ratio::recognize(b)?;
    let mu = Ratio::recognize(params.mu(i))?;
    let n = Ratio::integer(i128::from(params.n));
    let one = Ratio::integer(1);
    let two = Ratio::integer(2);
    let first = p.add(one)?.div(p.mul(q)?.sub(one)?)?;
    let second = n.add(mu)?.sub(one)?.div(two)?;
    first.sub(second)
}

/// Reduced fraction with `i128` parts; every operation is overflow-checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Ratio {
    num: i128,
    den: i128,
}

impl Ratio {
    const MAX_DEN: i128 = 1_000_000;

    fn integer(n: i128) -> Self {
        Ratio { num: n, den: 1 }
    }

    fn new(num: i128, den: i128) -> Option<Self> {
        if den == 0 {
            return None;
        }
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i128;
        let s = if den < 0 { -1 } else { 1 };
        Some(Ratio { num: s * num / g, den: s * den / g })
    }

    /// Best rational approximation with denominator ≤ 10⁶ that reproduces `x` bit for bit.
    fn recognize(x: f64) -> Option<Self> {
        if !x.is_finite() || x.abs() > 1e12 {
            return None;
        }
        let (mut h0, mut h1) = (0i128, 1i128);
        let (mut k0, mut k1) = (1i128, 0i128);
        let mut rem = x;
        for _ in 0..40 {
            let a = libm::floor(rem);
            let ai = a as i128;
            let h2 = ai.checked_mul(h1)?.checked_add(h0)?;
            let k2 = ai.checked_mul(k1)?.checked_add(k0)?;
            if k2 > Self::MAX_DEN {
                return None;
            }
            if (h2 as f64) / (k2 as f64) == x {
                return Ratio::new(h2, k2);
            }
            (h0, h1, k0, k1) = (h1, h2, k1, k2);
            let frac = rem - a;
            if frac == 0.0 {
                return None;
            }
            rem = 1.0 / frac;
        }
        None
    }

    fn add(self, o: Self) -> Option<Self> {
        let num = self.num.checked_mul(o.den)?.checked_add(o.num.checked_mul(self.den)?)?;
        Ratio::new(num, self.den.checked_mul(o.den)?)
    }

    fn sub(self, o: Self) -> Option<Self> {
        self.add(Ratio { num: -o.num, den: o.den })
    }

    fn mul(self, o: Self) -> Option<Self> {
        Ratio::new(self.num.checked_mul(o.num)?, self.den.checked_mul(o.den)?)
    }

    fn div(self, o: Self) -> Option<Self> {
        Ratio::new(self.num.checked_mul(o.den)?, self.den.checked_mul(o.num)?)
    }

    fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    if a == 0 { 1 } else { a }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn params(n: u32, mu: [f64; 2], nu_sq: [f64; 2], p: f64, q: f64) -> SystemParams {
        SystemParams { n, mu1: mu[0], mu2: mu[1], nu1_sq: nu_sq[0], nu2_sq: nu_sq[1], p, q, ..Default::default() }
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta(1.0, 0.0), 0.0);
        assert_eq!(delta(3.0, 0.0), 4.0);
        assert_abs_diff_eq!(delta(2.0, 0.1875), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma(3.0, 0.0).unwrap(), 3.0);
        assert_abs_diff_eq!(sigma(2.0, 0.1875).unwrap(), 2.5, epsilon = 1e-15);
        assert_eq!(sigma(1.0, 0.0).unwrap(), 2.0);
        assert!(sigma(1.0, 1.0).is_err());
    }

    #[test]
    fn glassey_examples() {
        assert_eq!(glassey(2.0).unwrap(), 3.0);
        assert_eq!(glassey(3.0).unwrap(), 2.0);
        assert_eq!(glassey(5.0).unwrap(), 1.5);
        assert!(glassey(1.0).is_err());
        assert!(glassey(0.5).is_err());
    }

    #[test]
    fn lambda_examples() {
        assert_abs_diff_eq!(lambda_exp(3.0, 2.0, 2.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(lambda_exp(1.0, 2.0, 3.0), 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(lambda_exp(2.0, 3.0, 2.0), 0.3, epsilon = 1e-15);
    }

    #[test]
    fn omega_new_examples() {
        assert_abs_diff_eq!(omega_new(&params(3, [0.0, 0.0], [0.0, 0.0], 2.0, 2.0)), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(omega_new(&params(1, [2.0, 2.0], [0.0, 0.0], 2.0, 2.0)), 0.0, epsilon = 1e-15);
        // Λ(3,2,3) = 3/5 - 1 and Λ(3,3,2) = 4/5 - 1, evaluated by hand.
        let brute = (3.0_f64 / 5.0 - 1.0).max(4.0 / 5.0 - 1.0);
        assert_abs_diff_eq!(brute, -0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(omega_new(&params(1, [2.0, 2.0], [0.0, 0.0], 2.0, 3.0)), -0.2, epsilon = 1e-15);
    }

    #[test]
    fn omega_sigma_examples() {
        let wide = params(2, [4.0, 5.0], [0.5, 0.25], 1.5, 2.5);
        assert!(wide.delta1() >= 1.0 && wide.delta2() >= 1.0);
        assert_eq!(omega_sigma(&wide).unwrap(), omega_new(&wide));

        let narrow = params(1, [2.0, 2.0], [0.1875, 0.1875], 2.0, 2.0);
        assert_abs_diff_eq!(omega_sigma(&narrow).unwrap(), -0.25, epsilon = 1e-15);
        assert!(omega_new(&narrow) > omega_sigma(&narrow).unwrap());

        assert!(omega_sigma(&params(1, [1.0, 2.0], [1.0, 0.0], 2.0, 2.0)).is_err());
    }

    #[test]
    fn classify_examples() {
        let (label, bound) = classify_lifespan(&params(1, [2.0, 2.0], [0.1875, 0.1875], 2.0, 2.0));
        assert_eq!(label, CaseLabel::CriticalDouble);
        assert_eq!(bound, LifespanBound::Exponential { exponent: 1.0 });

        let (label, bound) = classify_lifespan(&params(1, [0.0, 0.0], [0.0, 0.0], 2.0, 2.0));
        assert_eq!(label, CaseLabel::Subcritical);
        assert_eq!(bound, LifespanBound::Power { exponent: 1.0 });

        // Λ(7,2,2) = 1 - 3 = -2.
        let (label, bound) = classify_lifespan(&params(3, [4.0, 4.0], [0.0, 0.0], 2.0, 2.0));
        assert_eq!(label, CaseLabel::OutsideRegion);
        assert_eq!(bound, LifespanBound::None);
    }

    #[test]
    fn classify_critical_mixed() {
        // Λ(3,2,2) = 0 while Λ(4,2,2) = -1/2.
        let (label, bound) = classify_lifespan(&params(1, [2.0, 3.0], [0.0, 0.0], 2.0, 2.0));
        assert_eq!(label, CaseLabel::CriticalMixed);
        assert_eq!(bound, LifespanBound::Exponential { exponent: 3.0 });
    }

    #[test]
    fn exact_arithmetic_catches_inexact_float_zero() {
        // p = 1.4, q = 2.5: pq - 1 = 2.5, Λ(N_eff,1.4,2.5) = 0.96 - (N_eff-1)/2 = 0 at N_eff = 2.92.
        let prm = params(2, [0.92, 3.0], [0.0, 0.0], 1.4, 2.5);
        let report = region_report(&prm);
        assert!(report.exact_arithmetic);
        assert_ne!(report.case_label, CaseLabel::Subcritical);
        assert_eq!(report.case_label, CaseLabel::CriticalMixed);
    }

    #[test]
    fn ratio_recognition() {
        assert_eq!(Ratio::recognize(0.1875), Some(Ratio { num: 3, den: 16 }));
        assert_eq!(Ratio::recognize(1.4), Some(Ratio { num: 7, den: 5 }));
        assert_eq!(Ratio::recognize(2.0), Some(Ratio { num: 2, den: 1 }));
        assert_eq!(Ratio::recognize(core::f64::consts::PI), None);
    }

    #[test]
    fn validation_messages_cite_invariant() {
        let bad = SystemParams { p: 1.0, ..Default::default() };
        let msg = alloc::format!("{}", bad.validate().unwrap_err());
        assert!(msg.contains("p must exceed 1"), "{msg}");
        assert!(SystemParams { eps: 0.0, ..Default::default() }.validate().is_err());
        assert!(SystemParams { mu2: -0.1, ..Default::default() }.validate().is_err());
        assert!(SystemParams::default().validate().is_ok());
    }

    #[test]
    fn default_params_are_compliant() {
        let prm = SystemParams::default();
        assert!(prm.theorem_applicable());
        assert_abs_diff_eq!(prm.eta0(), 1.0 + libm::sqrt(0.1875), epsilon = 1e-15);
        assert_eq!(SystemParams { nu1_sq: 0.0, nu2_sq: 0.0, ..prm }.eta0(), 1.0);
    }

    proptest! {
        #[test]
        fn sigma_branches(mu in 0.0f64..6.0, nu_sq in 0.0f64..4.0) {
            let d = delta(mu, nu_sq);
            prop_assume!(d >= 0.0);
            let s = sigma(mu, nu_sq).unwrap();
            if d >= 1.0 { prop_assert_eq!(s, mu); } else { prop_assert!(s > mu); }
        }

        #[test]
        fn lambda_decreasing_in_dimension(n in 0.5f64..10.0, dn in 1e-3f64..5.0, p in 1.01f64..5.0, q in 1.01f64..5.0) {
            prop_assert!(lambda_exp(n + dn, p, q) < lambda_exp(n, p, q));
        }

        #[test]
        fn improvement_over_sigma_shift(n in 1u32..5, mu1 in 0.0f64..4.0, mu2 in 0.0f64..4.0,
                                        nu1 in 0.0f64..1.0, nu2 in 0.0f64..1.0, p in 1.05f64..4.0, q in 1.05f64..4.0) {
            let prm = params(n, [mu1, mu2], [nu1, nu2], p, q);
            if let Ok(old) = omega_sigma(&prm) {
                prop_assert!(omega_new(&prm) >= old);
            }
        }

        #[test]
        fn strict_exactly_when_every_maximizer_is_shifted(n in 1u32..5, mu1 in 0.0f64..4.0, mu2 in 0.0f64..4.0,
                                                          nu1 in 0.0f64..1.0, nu2 in 0.0f64..1.0, p in 1.05f64..4.0, q in 1.05f64..4.0) {
            let prm = params(n, [mu1, mu2], [nu1, nu2], p, q);
            if let Ok(old) = omega_sigma(&prm) {
                let nf = f64::from(n);
                let a = [lambda_exp(nf + mu1, p, q), lambda_exp(nf + mu2, q, p)];
                let top = a[0].max(a[1]);
                let shifted = [prm.delta1() < 1.0, prm.delta2() < 1.0];
                let expect = (0..2).all(|i| a[i] < top || shifted[i]);
                prop_assert_eq!(omega_new(&prm) > old, expect);
            }
        }

        #[test]
        fn undamped_reduces_to_upsilon(n in 1u32..6, p in 1.01f64..5.0, q in 1.01f64..5.0) {
            let prm = params(n, [0.0, 0.0], [0.0, 0.0], p, q);
            prop_assert_eq!(omega_new(&prm), upsilon(f64::from(n), p, q));
        }

        #[test]
        fn classification_swap_invariant(n in 1u32..4, mu1 in 0.0f64..4.0, mu2 in 0.0f64..4.0,
                                         nu1 in 0.0f64..1.0, nu2 in 0.0f64..1.0, p in 1.05f64..4.0, q in 1.05f64..4.0) {
            let prm = params(n, [mu1, mu2], [nu1, nu2], p, q);
            prop_assert_eq!(classify_lifespan(&prm), classify_lifespan(&prm.swapped()));
        }
    }
}
