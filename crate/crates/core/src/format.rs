//! Fixed-precision decimal formatting shared by the CSV and text outputs.

/// Formats `x` with nine significant digits, `%g`-style: fixed notation for
/// decimal exponents in `[-5, 9)`, scientific otherwise. Trailing zeros are
/// kept so every value has the same precision.
pub fn sig9(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    if (-5..DIGITS).contains(&exp) {
        format!("{:.*}", (DIGITS - 1 - exp) as usize, x)
    } else {
        sci
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(0.5), "0.500000000");
        assert_eq!(sig9(150.0), "150.000000");
        assert_eq!(sig9(2.8672e-4), "0.000286720000");
        assert_eq!(sig9(1.4e-6), "1.40000000e-6");
        assert_eq!(sig9(-3.0), "-3.00000000");
        assert_eq!(sig9(1234567890.0), "1.23456789e9");
        assert_eq!(sig9(0.0), "0");
    }

    #[test]
    fn reparse_is_stable() {
        for &x in &[0.49971328, 1.0 / 3.0, 123.456789123, 7.77e-9, 4.5e12] {
            let s = sig9(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(sig9(back), s);
            assert!(((back - x) / x).abs() < 1e-8);
        }
    }
}
