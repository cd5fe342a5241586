//! Scalar special functions used by the combiners.
//!
//! Everything here is log-space friendly: tail probabilities are produced as
//! natural logs so callers never see an underflowed zero. All math goes
//! through `libm` so the crate stays `no_std`.
#![allow(clippy::excessive_precision)]

use core::f64::consts::{LN_2, PI, SQRT_2};

/// log(sum(exp(x_i))) with the usual max shift. Empty input yields -inf.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let mut m = f64::NEG_INFINITY;
    for &x in xs {
        if x > m {
            m = x;
        }
    }
    if !m.is_finite() {
        return m;
    }
    let mut s = 0.0;
    for &x in xs {
        s += libm::exp(x - m);
    }
    m + libm::log(s)
}

/// log(1 - exp(y)) for y <= 0, stable on both ends.
pub fn log1m_exp(y: f64) -> f64 {
    debug_assert!(y <= 0.0);
    if y > -LN_2 {
        libm::log(-libm::expm1(y))
    } else {
        libm::log1p(-libm::exp(y))
    }
}

/// ln(2^k - 1) without forming 2^k.
pub fn ln_two_pow_minus_one(k: usize) -> f64 {
    if k <= 52 {
        libm::log(((1u64 << k) - 1) as f64)
    } else {
        k as f64 * LN_2 + libm::log1p(-libm::exp2(-(k as f64)))
    }
}

/// Standard normal upper tail log P(Z >= z), valid for any z.
///
/// Below the switch point this is erfc; above it an asymptotic expansion
/// keeps working long after erfc has underflowed.
pub fn standard_normal_log_sf(z: f64) -> f64 {
    const SWITCH: f64 = 30.0;
    if z <= SWITCH {
        libm::log(0.5 * libm::erfc(z / SQRT_2))
    } else {
        let z2 = z * z;
        let series =
            1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2) + 105.0 / (z2 * z2 * z2 * z2)
                - 945.0 / (z2 * z2 * z2 * z2 * z2);
        -0.5 * z2 - libm::log(z) - 0.5 * libm::log(2.0 * PI) + libm::log(series)
    }
}

/// Standard normal quantile (Wichura's PPND16 rational approximations).
///
/// Accurate to roughly 1e-15 relative over the full double range;
/// `p = 0` and `p = 1` map to the signed infinities.
pub fn standard_normal_quantile(p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    let q = p - 0.5;
    if libm::fabs(q) <= 0.425 {
        let r = 0.180625 - q * q;
        return q * horner(r, &CENTRAL_NUM) / horner(r, &CENTRAL_DEN);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    if r <= 0.0 {
        return if q < 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        };
    }
    let r = libm::sqrt(-libm::log(r));
    let val = if r <= 5.0 {
        let r = r - 1.6;
        horner(r, &TAIL_NUM) / horner(r, &TAIL_DEN)
    } else {
        let r = r - 5.0;
        horner(r, &FAR_TAIL_NUM) / horner(r, &FAR_TAIL_DEN)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

fn horner(x: f64, coeffs: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

const CENTRAL_NUM: [f64; 8] = [
    3.387_132_872_796_366_608,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
const CENTRAL_DEN: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561e3,
];
const TAIL_NUM: [f64; 8] = [
    1.423_437_110_749_683_577_34,
    4.630_337_846_156_545_295_9,
    5.769_497_221_460_691_405_5,
    3.647_848_324_763_204_605_04,
    1.270_458_252_452_368_382_58,
    2.417_807_251_774_506_117_7e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_4e-4,
];
const TAIL_DEN: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87,
    1.676_384_830_183_803_849_4,
    6.897_673_349_851_000_045_5e-1,
    1.481_039_764_274_800_745_9e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
const FAR_TAIL_NUM: [f64; 8] = [
    6.657_904_643_501_103_777_2,
    5.463_784_911_164_114_369_9,
    1.784_826_539_917_291_335_8,
    2.965_605_718_285_048_912_3e-1,
    2.653_218_952_657_612_309_3e-2,
    1.242_660_947_388_078_438_6e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
const FAR_TAIL_DEN: [f64; 8] = [
    1.0,
    5.998_322_065_558_879_376_9e-1,
    1.369_298_809_227_358_053_1e-1,
    1.487_536_129_085_061_485_25e-2,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

/// log of the regularized incomplete beta I_x(a, b).
///
/// Continued fraction on whichever side converges, complement taken in
/// linear space (where the result is near 1 and exact).
pub fn log_reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if x >= 1.0 {
        return 0.0;
    }
    let log_bt = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b)
        + a * libm::log(x)
        + b * libm::log1p(-x);
    if x < (a + 1.0) / (a + b + 2.0) {
        log_bt + libm::log(beta_cf(a, b, x) / a)
    } else {
        let complement = libm::exp(log_bt + libm::log(beta_cf(b, a, 1.0 - x) / b));
        libm::log1p(-complement)
    }
}

// Modified Lentz continued fraction for the incomplete beta (Numerical
// Recipes betacf).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if libm::fabs(d) < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if libm::fabs(delta - 1.0) < EPS {
            break;
        }
    }
    h
}

/// Student-t upper tail log P(T_nu >= t).
pub fn students_t_log_sf(t: f64, nu: f64) -> f64 {
    debug_assert!(nu > 0.0);
    if t == f64::NEG_INFINITY {
        return 0.0;
    }
    if t == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    let x = nu / (nu + t * t);
    let log_half_ix = -LN_2 + log_reg_inc_beta(0.5 * nu, 0.5, x);
    if t >= 0.0 {
        log_half_ix
    } else {
        log1m_exp(log_half_ix)
    }
}
