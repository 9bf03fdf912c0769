//! CSV assembly with a bit-exact contract: header row, fixed column order,
//! '.' decimal separator, '\n' line endings, shortest round-trip float
//! formatting. Identical inputs produce byte-identical files.

/// Build a CSV string from a header and formatted rows.
pub fn build_csv<I>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len(), "row width != header width");
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Canonical float cell: Rust's shortest round-trip representation.
pub fn cell(v: f64) -> String {
    format!("{v}")
}
