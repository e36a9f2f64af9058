//! Continuous A-law companding quantizer (A = 87.6) with mid-rise levels.

/// Standard companding constant.
pub const A: f64 = 87.6;

fn one_plus_ln_a() -> f64 {
    1.0 + A.ln()
}

/// Compands `x` in [-1, 1] through the A-law curve, returning a value in [-1, 1].
pub fn compand(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let ax = x.abs();
    let y = if ax < 1.0 / A {
        A * ax / one_plus_ln_a()
    } else {
        (1.0 + (A * ax).ln()) / one_plus_ln_a()
    };
    sign * y
}

/// Inverse of [`compand`].
pub fn expand(y: f64) -> f64 {
    let sign = if y < 0.0 { -1.0 } else { 1.0 };
    let ay = y.abs();
    let x = if ay < 1.0 / one_plus_ln_a() {
        ay * one_plus_ln_a() / A
    } else {
        (ay * one_plus_ln_a() - 1.0).exp() / A
    };
    sign * x
}

/// Quantizes each sample: clip to [-scale, scale], compand, and map onto
/// `2^bits` uniform mid-rise levels. The mapping is monotone.
pub fn alaw_quantize(x: &[f64], bits: u8, scale: f64) -> Vec<u32> {
    assert!(bits >= 1 && bits <= 30, "bits must be in 1..=30");
    assert!(scale > 0.0, "scale must be positive");
    let levels = 1u32 << bits;
    let step = 2.0 / levels as f64;
    x.iter()
        .map(|&v| {
            let clipped = (v / scale).clamp(-1.0, 1.0);
            let y = compand(clipped);
            let code = ((y + 1.0) / step).floor();
            (code.max(0.0) as u32).min(levels - 1)
        })
        .collect()
}

/// Reconstructs samples at the mid-points of the companded cells.
pub fn alaw_dequantize(codes: &[u32], bits: u8, scale: f64) -> Vec<f64> {
    assert!(bits >= 1 && bits <= 30, "bits must be in 1..=30");
    assert!(scale > 0.0, "scale must be positive");
    let levels = 1u32 << bits;
    let step = 2.0 / levels as f64;
    codes
        .iter()
        .map(|&c| {
            let y = -1.0 + (c.min(levels - 1) as f64 + 0.5) * step;
            scale * expand(y)
        })
        .collect()
}
