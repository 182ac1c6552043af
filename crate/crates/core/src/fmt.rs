//! Number formatting for text outputs.

/// Shortest representation that parses back to the same `f64`, in
/// exponent form when plain decimals would be long.
pub fn number(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for x in [0.0, 1.5, -2.0, 6.123e-17, 1e300, -3.3e-5, 0.25, 1e16] {
            assert_eq!(number(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(number(0.1), "0.1");
        assert_eq!(number(6.125e-17), "6.125e-17");
    }
}
