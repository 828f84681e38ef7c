//! Weight variance, normal quantiles and confidence intervals.

use crate::error::{invalid, Error, Result};
use crate::numeric;

/// `σ̂` with `σ̂² = (1/n) Σ (w_i − estimate/scale)²`.
///
/// The divisor is `n`, not `n − 1`, so `σ̂²` is slightly biased low.
pub fn sigma_hat(weights: &[f64], estimate: f64, scale: f64) -> Result<f64> {
    if weights.is_empty() {
        return Err(Error::UndefinedInterval);
    }
    let center = estimate / scale;
    let var =
        numeric::sum(weights.iter().map(|w| (w - center) * (w - center))) / weights.len() as f64;
    Ok(var.max(0.0).sqrt())
}

/// `estimate ± z_{α/2} · scale · σ̂ / √n`.
pub fn confidence_interval(
    estimate: f64,
    alpha: f64,
    scale: f64,
    sigma: f64,
    n_region: usize,
) -> Result<(f64, f64)> {
    if n_region == 0 {
        return Err(Error::UndefinedInterval);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let half = normal_quantile(alpha / 2.0)? * scale * sigma / (n_region as f64).sqrt();
    Ok((estimate - half, estimate + half))
}

/// `z_γ`, the `1 − γ` quantile of the standard normal distribution.
///
/// Wichura's AS 241 (PPND16), accurate to about 1e-16 relative.
pub fn normal_quantile(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid(format!(
            "quantile level must lie in (0, 1), got {gamma}"
        )));
    }
    Ok(-ppnd16(gamma))
}

/// Inverse standard normal CDF at `p`.
fn ppnd16(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = ((((((r * 2509.080_928_730_122_7 + 33430.575_583_588_128) * r
            + 67265.770_927_008_7)
            * r
            + 45921.953_931_549_87)
            * r
            + 13731.693_765_509_461)
            * r
            + 1971.590_950_306_551_4)
            * r
            + 133.141_667_891_784_38)
            * r
            + 3.387_132_872_796_366_5;
        let den = ((((((r * 5226.495_278_852_546 + 28729.085_735_721_943) * r
            + 39307.895_800_092_71)
            * r
            + 21213.794_301_586_596)
            * r
            + 5394.196_021_424_751)
            * r
            + 687.187_007_492_057_9)
            * r
            + 42.313_330_701_600_91)
            * r
            + 1.0;
        return q * num / den;
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((r * 7.745_450_142_783_414e-4 + 0.022_723_844_989_269_184) * r
            + 0.241_780_725_177_450_6)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((r * 1.050_750_071_644_416_8e-9 + 5.475_938_084_995_345e-4) * r
            + 0.015_198_666_563_616_457)
            * r
            + 0.148_103_976_427_480_08)
            * r
            + 0.689_767_334_985_1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_759)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((r * 2.010_334_399_292_288e-7 + 2.711_555_568_743_487_6e-5) * r
            + 0.001_242_660_947_388_078_4)
            * r
            + 0.026_532_189_526_576_124)
            * r
            + 0.296_560_571_828_504_9)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((r * 2.044_263_103_389_939_8e-15 + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 0.014_875_361_290_850_615)
            * r
            + 0.136_929_880_922_735_8)
            * r
            + 0.599_832_206_555_887_9)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_of_equal_weights_is_zero() {
        assert_eq!(sigma_hat(&[0.7; 5], 3.5, 5.0).unwrap(), 0.0);
    }

    #[test]
    fn sigma_arithmetic() {
        // weights (1, 3) around F̂/G = 2
        let s = sigma_hat(&[1.0, 3.0], 20.0, 10.0).unwrap();
        assert!((s * s - 1.0).abs() < 1e-15);
        assert!(matches!(
            sigma_hat(&[], 1.0, 1.0),
            Err(Error::UndefinedInterval)
        ));
    }

    #[test]
    fn interval_arithmetic() {
        let (lo, hi) = confidence_interval(100.0, 0.05, 50.0, 0.2, 16).unwrap();
        assert!(
            (lo - 95.1).abs() < 1e-3 && (hi - 104.9).abs() < 1e-3,
            "{lo} {hi}"
        );
        assert_eq!(
            confidence_interval(7.0, 0.05, 3.0, 0.0, 4).unwrap(),
            (7.0, 7.0)
        );
        assert!(matches!(
            confidence_interval(1.0, 0.05, 1.0, 1.0, 0),
            Err(Error::UndefinedInterval)
        ));
    }

    #[test]
    fn quantile_landmarks() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        let z = normal_quantile(0.025).unwrap();
        assert!((z - 1.96).abs() < 5e-5);
        assert!((z - 1.959_963_984_540_054).abs() < 1e-14);
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
        assert!(normal_quantile(f64::NAN).is_err());
    }
}
