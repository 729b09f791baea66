//! Numeric formatting shared by every file writer.

/// Rounds to 12 significant digits; `-0` becomes `0`.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Shortest decimal text of `x` at 12 significant digits.
pub fn fmt12(x: f64) -> String {
    let r = round12(x);
    let mag = r.abs();
    if r != 0.0 && mag.is_finite() && !(1e-5..1e16).contains(&mag) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt12(2.0), "2");
        assert_eq!(fmt12(8.0 / 3.0), "2.66666666667");
        assert_eq!(fmt12(-0.0), "0");
        assert_eq!(fmt12(1e-300), "1e-300");
        assert_eq!(fmt12(0.1 + 0.2), "0.3");
    }
}
