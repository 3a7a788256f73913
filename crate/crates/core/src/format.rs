//! Decimal rendering shared by the CSV and CLI outputs.

/// Significant digits used for every reported number.
pub const SIG_DIGITS: usize = 12;

/// Formats `x` with [`SIG_DIGITS`] significant digits.
///
/// Plain decimal notation is used for exponents in `[-5, 15]`, scientific
/// notation otherwise. Non-finite positive values print as `inf`.
pub fn sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    // exponent after rounding to the requested precision
    let exp: i32 = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .expect("scientific formatting always carries an exponent");
    if !(-5..=15).contains(&exp) {
        return sci;
    }
    let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}
