//! Fixed float rendering for emitted tables.

/// Renders with 17 significant digits so every value round-trips exactly.
pub(crate) fn float(v: f64) -> String {
    format!("{v:.16e}")
}
