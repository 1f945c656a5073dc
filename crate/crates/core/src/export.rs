//! Shared CSV conventions: `,` separator, `#`-prefixed metadata lines and
//! 17-significant-digit numbers.

use std::io::{self, Write};

/// Render a float with 17 significant digits (lossless round trip).
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Write `# key = value` lines.
pub fn write_metadata<W: Write>(w: &mut W, entries: &[(&str, String)]) -> io::Result<()> {
    for (key, value) in entries {
        writeln!(w, "# {key} = {value}")?;
    }
    Ok(())
}
