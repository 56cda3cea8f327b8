use serde_json::{Number, Value};

/// Significant digits for numbers in JSON reports.
pub const SIG_DIGITS: usize = 12;

pub enum Output {
    /// Report printed with [`SIG_DIGITS`] significant digits.
    Json(Value),
    /// JSON printed at full precision (grid envelopes).
    RawJson(Value),
    Text(String),
}

pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Rounds every floating-point number in `v`; integers are left alone.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|x| Number::from_f64(round_sig(x)))
            .map(Value::Number)
            .unwrap_or(Value::Null),
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}
