//! Number formatting shared by CSV and report writers.

/// Formats `x` with nine significant digits. Fixed notation for moderate
/// magnitudes, scientific otherwise.
pub fn sig9(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-3..9).contains(&mag) {
        let decimals = (8 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.8e}")
    }
}

#[cfg(test)]
mod tests {
    use super::sig9;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(-130.885503123), "-130.885503");
        assert_eq!(sig9(0.0123456789123), "0.0123456789");
        assert_eq!(sig9(1.23456789123e-7), "1.23456789e-7");
        assert_eq!(sig9(0.0), "0");
        let x = 12.7031234567_f64;
        assert!((sig9(x).parse::<f64>().unwrap() - x).abs() / x < 1e-8);
    }
}
