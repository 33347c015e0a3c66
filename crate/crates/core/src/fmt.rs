/// Renders a double with 17 significant digits, the shortest width that
/// round-trips every `f64`.
pub fn sig17(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.16e}")
    }
}
