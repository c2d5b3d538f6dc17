//! JSON value helpers: decimal numbers, structural equality and the
//! canonical text form used for fragments, prompts and hashing.
//!
//! Numbers are kept as arbitrary-precision decimals, so `1.0` and `1`
//! compare equal and render identically.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::str::FromStr;

use bigdecimal::num_bigint::Sign;
use bigdecimal::BigDecimal;
use serde_json::{Number, Value};

/// Any JSON document. Object key order is preserved on parse and ignored
/// by [`json_equal`].
pub type JsonValue = Value;

/// Plain-notation threshold: beyond this many padding zeros a number is
/// rendered in exponent form.
const MAX_PLAIN_ZEROS: i64 = 20;

pub fn number_to_decimal(n: &Number) -> BigDecimal {
    // With `arbitrary_precision` the number keeps its source text.
    BigDecimal::from_str(&n.to_string()).expect("serde_json numbers are valid decimals")
}

pub fn decimal_to_number(d: &BigDecimal) -> Number {
    Number::from_str(&canonical_decimal(d)).expect("canonical decimals are valid JSON numbers")
}

pub fn decimal_to_value(d: &BigDecimal) -> Value {
    Value::Number(decimal_to_number(d))
}

/// True when the decimal has no fractional part.
pub fn is_integral(d: &BigDecimal) -> bool {
    d.is_integer()
}

/// Renders a decimal without trailing zeros or insignificant signs.
pub fn canonical_decimal(d: &BigDecimal) -> String {
    let normalized = d.normalized();
    let (int, scale) = normalized.as_bigint_and_exponent();
    if int.sign() == Sign::NoSign {
        return "0".to_string();
    }
    let negative = int.sign() == Sign::Minus;
    let digits = int.magnitude().to_string();
    let len = digits.len() as i64;
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if scale <= 0 {
        if -scale <= MAX_PLAIN_ZEROS {
            out.push_str(&digits);
            out.extend(std::iter::repeat_n('0', (-scale) as usize));
        } else {
            push_scientific(&mut out, &digits, len - 1 - scale);
        }
    } else if scale < len {
        let point = (len - scale) as usize;
        out.push_str(&digits[..point]);
        out.push('.');
        out.push_str(&digits[point..]);
    } else if scale - len <= MAX_PLAIN_ZEROS {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (scale - len) as usize));
        out.push_str(&digits);
    } else {
        push_scientific(&mut out, &digits, len - 1 - scale);
    }
    out
}

fn push_scientific(out: &mut String, digits: &str, exponent: i64) {
    out.push_str(&digits[..1]);
    if digits.len() > 1 {
        out.push('.');
        out.push_str(&digits[1..]);
    }
    let _ = write!(out, "e{exponent}");
}

/// Deterministic serialization: keys sorted by code point, no whitespace,
/// canonical numbers.
pub fn to_canonical_string(value: &Value) -> String {
    let mut out = String::new();
    write_canonical(value, &mut out);
    out
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            let text = n.to_string();
            if is_plain_integer(&text) {
                out.push_str(&text);
            } else {
                out.push_str(&canonical_decimal(&number_to_decimal(n)));
            }
        }
        Value::String(s) => write_string(s, out),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_string(key, out);
                out.push(':');
                write_canonical(&map[key], out);
            }
            out.push('}');
        }
    }
}

/// `0` or an optionally negative digit run without a leading zero.
fn is_plain_integer(text: &str) -> bool {
    let digits = text.strip_prefix('-').unwrap_or(text);
    match digits.as_bytes() {
        [] => false,
        [b'0'] => text == "0",
        [first, rest @ ..] => first.is_ascii_digit() && *first != b'0' && rest.iter().all(u8::is_ascii_digit),
    }
}

fn write_string(s: &str, out: &mut String) {
    out.push_str(&serde_json::to_string(s).expect("string serialization cannot fail"));
}

/// Structural equality: key order ignored, numbers compared as decimals.
pub fn json_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Null, Value::Null) => true,
        (Value::Bool(x), Value::Bool(y)) => x == y,
        (Value::Number(x), Value::Number(y)) => number_to_decimal(x) == number_to_decimal(y),
        (Value::String(x), Value::String(y)) => x == y,
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| json_equal(p, q)),
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| json_equal(v, w)))
        }
        _ => false,
    }
}

/// Total order on values consistent with [`json_equal`]; used to sort
/// value lists deterministically.
pub fn canonical_cmp(a: &Value, b: &Value) -> Ordering {
    to_canonical_string(a).cmp(&to_canonical_string(b))
}

/// Parses JSON text into a value, returning the 1-based position on error.
pub fn parse_json(text: &str) -> Result<Value, serde_json::Error> {
    serde_json::from_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn canon(text: &str) -> String {
        to_canonical_string(&parse_json(text).unwrap())
    }

    #[test]
    fn numbers_drop_trailing_zeros() {
        assert_eq!(canon("1.0"), "1");
        assert_eq!(canon("1.50"), "1.5");
        assert_eq!(canon("-0.0"), "0");
        assert_eq!(canon("100"), "100");
        assert_eq!(canon("1e2"), "100");
        assert_eq!(canon("0.00125"), "0.00125");
        assert_eq!(canon("1e300"), "1e300");
        assert_eq!(canon("-2.5e-40"), "-2.5e-40");
        assert_eq!(canon("123456789012345678901234567890"), "123456789012345678901234567890");
    }

    #[test]
    fn canonical_sorts_keys_by_code_point() {
        assert_eq!(canon(r#"{"type":"string","format":"date-time"}"#), r#"{"format":"date-time","type":"string"}"#);
        assert_eq!(canon(r#"{"b":1,"B":2,"é":3,"a":[true,null]}"#), r#"{"B":2,"a":[true,null],"b":1,"é":3}"#);
    }

    #[test]
    fn equality_ignores_key_order_and_number_spelling() {
        let a = parse_json(r#"{"x":1.0,"y":[1,2]}"#).unwrap();
        let b = parse_json(r#"{"y":[1,2.00],"x":1}"#).unwrap();
        assert!(json_equal(&a, &b));
        assert!(!json_equal(&json!([1, 2]), &json!([2, 1])));
        assert!(!json_equal(&json!("1"), &json!(1)));
    }

    #[test]
    fn canonical_numbers_reparse_to_same_decimal() {
        for text in ["0.1", "12.5e3", "-7", "3.14159", "9.999e-25", "5e21"] {
            let d = BigDecimal::from_str(text).unwrap();
            let back = BigDecimal::from_str(&canonical_decimal(&d)).unwrap();
            assert_eq!(d, back, "{text}");
        }
    }
}
