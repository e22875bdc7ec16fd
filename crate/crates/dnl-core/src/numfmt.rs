//! Numeric formatting shared by all CSV emitters: 17 significant digits,
//! '.' decimal separator, enough to reproduce every f64 bit pattern.

pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}
