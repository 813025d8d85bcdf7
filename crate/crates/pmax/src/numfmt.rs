//! Number rendering for every output: 17 significant digits, so each `f64`
//! round-trips. Integral values print without an exponent.

use serde_json::{Number, Value};

/// Largest magnitude printed as a plain integer.
const INT_LIMIT: f64 = 9_007_199_254_740_992.0;

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == x.trunc() && x.abs() < INT_LIMIT {
        return format!("{}", x as i64);
    }
    format!("{x:.16e}")
}

/// JSON number for `x`; `null` when `x` is not finite.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    Value::Number(fmt_f64(x).parse::<Number>().expect("finite float renders as a JSON number"))
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 4.7409, -2.5e-300, 1e300, core::f64::consts::PI] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap();
            let digits = mantissa.chars().filter(char::is_ascii_digit).count();
            assert_eq!(digits, 17, "{s}");
        }
    }

    #[test]
    fn integers_and_specials() {
        assert_eq!(fmt_f64(4.0), "4");
        assert_eq!(fmt_f64(-0.0), "0");
        assert_eq!(fmt_f64(f64::NAN), "NaN");
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
        assert_eq!("NaN".parse::<f64>().unwrap().is_nan(), true);
        assert_eq!(num(4.0).to_string(), "4");
        assert_eq!(num(f64::NAN), Value::Null);
        assert_eq!(num(0.5).to_string(), "5.0000000000000000e-1");
    }
}
