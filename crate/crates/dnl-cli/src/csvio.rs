//! CSV emission: header row mandatory, CRLF line endings, '.' decimal
//! separator, floats at 17 significant digits so every f64 survives a
//! round trip. Cells never contain commas or quotes, so no quoting is
//! needed.

use std::path::Path;

pub use dnl_core::numfmt::sig17;

pub fn int_cell(x: usize) -> String {
    x.to_string()
}

pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push_str("\r\n");
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        out.push_str(&row.join(","));
        out.push_str("\r\n");
    }
    out
}

pub fn write_file(path: &Path, content: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, content)
}
