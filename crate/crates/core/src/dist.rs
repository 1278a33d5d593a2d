//! Standard normal primitives and the law of one-sided p-values under a
//! mean-shift normal alternative.
//!
//! A test statistic `Z ~ N(snr, 1)` yields the one-sided p-value
//! `p = 1 - Φ(Z)`, whose distribution function is `F(u) = Φ(snr + Φ⁻¹(u))`.

use libm::erfc;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use crate::error::{Error, Result};

/// 1/√(2π)
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_677_939_946_059_934_381_868;

/// Standard normal distribution function Φ(x).
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail 1 - Φ(x), accurate in the far right tail.
pub fn std_normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Standard normal density φ(x).
pub fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Inverse of Φ on (0, 1).
///
/// Wichura's AS 241 (PPND16) rational approximation followed by one Newton
/// step against [`std_normal_cdf`].
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain {
            name: "p",
            value: p,
            expected: "(0, 1)",
        });
    }
    let x = ppnd16(p);
    let density = std_normal_pdf(x);
    if density > 0.0 {
        let step = (std_normal_cdf(x) - p) / density;
        if step.is_finite() {
            return Ok(x - step);
        }
    }
    Ok(x)
}

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

// Coefficients as published, beyond f64 precision.
#[allow(clippy::excessive_precision)]
fn ppnd16(p: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_608_0,
        1.331_416_678_917_843_774_5e2,
        1.971_590_950_306_551_442_7e3,
        1.373_169_376_550_946_112_5e4,
        4.592_195_393_154_987_145_7e4,
        6.726_577_092_700_870_085_3e4,
        3.343_057_558_358_812_810_5e4,
        2.509_080_928_730_122_672_7e3,
    ];
    const B: [f64; 8] = [
        1.0,
        4.231_333_070_160_091_125_2e1,
        6.871_870_074_920_579_083_0e2,
        5.394_196_021_424_751_107_7e3,
        2.121_379_430_158_659_586_7e4,
        3.930_789_580_009_271_061_0e4,
        2.872_908_573_572_194_267_4e4,
        5.226_495_278_852_854_561_0e3,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_577_34,
        4.630_337_846_156_545_295_90,
        5.769_497_221_460_691_405_50,
        3.647_848_324_763_204_605_04,
        1.270_458_252_452_368_382_58,
        2.417_807_251_774_506_117_70e-1,
        2.272_384_498_926_918_458_33e-2,
        7.745_450_142_783_414_076_40e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_821_87,
        1.676_384_830_183_803_849_40,
        6.897_673_349_851_000_045_50e-1,
        1.481_039_764_274_800_745_90e-1,
        1.519_866_656_361_645_719_66e-2,
        5.475_938_084_995_344_946_00e-4,
        1.050_750_071_644_416_843_24e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_777_20,
        5.463_784_911_164_114_369_90,
        1.784_826_539_917_291_335_80,
        2.965_605_718_285_048_912_30e-1,
        2.653_218_952_657_612_309_30e-2,
        1.242_660_947_388_078_438_60e-3,
        2.711_555_568_743_487_578_15e-5,
        2.010_334_399_292_288_132_65e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        5.998_322_065_558_879_376_90e-1,
        1.369_298_809_227_358_053_10e-1,
        1.487_536_129_085_061_485_25e-2,
        7.868_691_311_456_132_591_00e-4,
        1.846_318_317_510_054_681_80e-5,
        1.421_511_758_316_445_888_70e-7,
        2.044_263_103_389_939_785_64e-15,
    ];

    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let r = (-tail.ln()).sqrt();
    let x = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

/// Distribution of a one-sided p-value whose test statistic is `N(snr, 1)`.
///
/// `snr = 0` is the null law (standard uniform).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlternativeLaw {
    snr: f64,
}

impl AlternativeLaw {
    pub fn new(snr: f64) -> Result<Self> {
        if snr.is_finite() && snr >= 0.0 {
            Ok(Self { snr })
        } else {
            Err(Error::Domain {
                name: "snr",
                value: snr,
                expected: "[0, inf)",
            })
        }
    }

    pub fn null() -> Self {
        Self { snr: 0.0 }
    }

    pub fn snr(&self) -> f64 {
        self.snr
    }

    /// F(u) = Φ(snr + Φ⁻¹(u)); `u` is clamped to [0, 1].
    pub fn cdf(&self, u: f64) -> f64 {
        if u.is_nan() {
            return f64::NAN;
        }
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        if self.snr == 0.0 {
            return u;
        }
        let z = std_normal_quantile(u).expect("u is inside (0, 1)");
        std_normal_cdf(self.snr + z)
    }

    /// Density f(u) = φ(snr + z) / φ(z) with z = Φ⁻¹(u).
    pub fn pdf(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain {
                name: "u",
                value: u,
                expected: "(0, 1)",
            });
        }
        let z = std_normal_quantile(u)?;
        Ok((-self.snr * z - 0.5 * self.snr * self.snr).exp())
    }
}

impl Default for AlternativeLaw {
    fn default() -> Self {
        Self::null()
    }
}

/// Free-function form of [`AlternativeLaw::cdf`].
pub fn alt_cdf(u: f64, law: AlternativeLaw) -> f64 {
    law.cdf(u)
}

/// Free-function form of [`AlternativeLaw::pdf`].
pub fn alt_pdf(u: f64, law: AlternativeLaw) -> Result<f64> {
    law.pdf(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Composite Simpson rule for ∫ φ from -12 to x.
    fn cdf_by_quadrature(x: f64) -> f64 {
        // Composite Simpson on [0, |x|] plus the half mass below zero.
        let n = 20_000;
        let h = x.abs() / n as f64;
        let mut sum = std_normal_pdf(0.0) + std_normal_pdf(x.abs());
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * std_normal_pdf(i as f64 * h);
        }
        0.5 + x.signum() * sum * h / 3.0
    }

    fn quantile_by_bisection(p: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if std_normal_cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn cdf_reference_points() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        // Frozen from the quadrature oracle.
        let q95 = cdf_by_quadrature(1.6449);
        let q005 = cdf_by_quadrature(-2.5758);
        assert_abs_diff_eq!(q95, 0.95, epsilon = 1e-4);
        assert_abs_diff_eq!(q005, 0.005, epsilon = 1e-5);
        assert_abs_diff_eq!(std_normal_cdf(1.6449), q95, epsilon = 1e-12);
        assert_abs_diff_eq!(std_normal_cdf(-2.5758), q005, epsilon = 1e-12);
    }

    #[test]
    fn quantile_reference_points() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        let x05 = quantile_by_bisection(0.05);
        let x0005 = quantile_by_bisection(0.0005);
        assert_abs_diff_eq!(x05, -1.6449, epsilon = 1e-3);
        assert_abs_diff_eq!(x0005, -3.2905, epsilon = 1e-3);
        assert_abs_diff_eq!(std_normal_quantile(0.05).unwrap(), x05, epsilon = 1e-9);
        assert_abs_diff_eq!(std_normal_quantile(0.0005).unwrap(), x0005, epsilon = 1e-9);
    }

    #[test]
    fn quantile_residual_across_range() {
        for k in 1..=3000 {
            let p = k as f64 / 3001.0;
            let x = std_normal_quantile(p).unwrap();
            assert!((std_normal_cdf(x) - p).abs() <= 1e-9, "p = {p}");
        }
        for e in 1..300 {
            let p = 10f64.powi(-e);
            let x = std_normal_quantile(p).unwrap();
            assert!((std_normal_cdf(x) / p - 1.0).abs() < 1e-9, "p = {p}");
        }
    }

    #[test]
    fn quantile_rejects_boundaries() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(std_normal_quantile(p).is_err());
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let mut x = -6.0;
        while x <= 6.0 {
            let back = std_normal_quantile(std_normal_cdf(x)).unwrap();
            assert_abs_diff_eq!(back, x, epsilon = 1e-8);
            x += 0.01;
        }
    }

    #[test]
    fn alt_cdf_examples() {
        let null = AlternativeLaw::null();
        assert_eq!(alt_cdf(0.3, null), 0.3);
        let law2 = AlternativeLaw::new(2.0).unwrap();
        assert_abs_diff_eq!(alt_cdf(0.005, law2), 0.2824, epsilon = 1e-4);
        let law1 = AlternativeLaw::new(1.0).unwrap();
        assert_abs_diff_eq!(alt_cdf(0.05, law1), 0.2595, epsilon = 1e-4);
        for law in [null, law1, law2] {
            assert_eq!(law.cdf(0.0), 0.0);
            assert_eq!(law.cdf(1.0), 1.0);
            assert_eq!(law.cdf(-3.0), 0.0);
            assert_eq!(law.cdf(7.0), 1.0);
        }
    }

    #[test]
    fn alt_cdf_monte_carlo() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                std_normal_sf(z + 1.0) <= 0.05
            })
            .count();
        let freq = hits as f64 / n as f64;
        let se = (freq * (1.0 - freq) / n as f64).sqrt();
        let law = AlternativeLaw::new(1.0).unwrap();
        assert!((law.cdf(0.05) - freq).abs() < 4.0 * se);
    }

    #[test]
    fn alt_pdf_examples() {
        assert_abs_diff_eq!(
            alt_pdf(0.5, AlternativeLaw::null()).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let law2 = AlternativeLaw::new(2.0).unwrap();
        let h = 1e-6;
        let fd = (law2.cdf(0.1 + h) - law2.cdf(0.1 - h)) / (2.0 * h);
        assert_abs_diff_eq!(law2.pdf(0.1).unwrap(), fd, epsilon = 1e-5);
        let law3 = AlternativeLaw::new(3.0).unwrap();
        assert!(law3.pdf(0.05).unwrap() > law3.pdf(0.5).unwrap());
        assert!(law3.pdf(0.0).is_err());
        assert!(law3.pdf(1.0).is_err());
    }

    #[test]
    fn alt_pdf_strictly_decreasing() {
        for snr in [0.5, 2.0, 5.0] {
            let law = AlternativeLaw::new(snr).unwrap();
            let mut prev = f64::INFINITY;
            for k in 1..1000 {
                let d = law.pdf(k as f64 / 1000.0).unwrap();
                assert!(d < prev);
                prev = d;
            }
        }
    }

    #[test]
    fn pdf_integrates_to_cdf_increment() {
        let law = AlternativeLaw::new(2.0).unwrap();
        let eps = 1e-3;
        // Simpson in the probit scale, where the integrand is smooth.
        let (zl, zh) = (
            std_normal_quantile(eps).unwrap(),
            std_normal_quantile(1.0 - eps).unwrap(),
        );
        let n = 20_000;
        let h = (zh - zl) / n as f64;
        let integrand = |z: f64| law.pdf(std_normal_cdf(z)).unwrap() * std_normal_pdf(z);
        let mut sum = integrand(zl) + integrand(zh);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * integrand(zl + i as f64 * h);
        }
        let integral = sum * h / 3.0;
        assert_abs_diff_eq!(integral, law.cdf(1.0 - eps) - law.cdf(eps), epsilon = 1e-6);
    }

    #[test]
    fn rejects_negative_snr() {
        assert!(AlternativeLaw::new(-0.1).is_err());
        assert!(AlternativeLaw::new(f64::NAN).is_err());
    }

    proptest::proptest! {
        #[test]
        fn stochastic_dominance(u in 1e-9f64..0.999_999, snr in 0.01f64..8.0) {
            let law = AlternativeLaw::new(snr).unwrap();
            proptest::prop_assert!(law.cdf(u) > u);
        }
    }
}
