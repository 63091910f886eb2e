//! Deterministic emission: shortest round-trip numbers capped at 12
//! significant digits, LF line endings, data on the data stream only.

/// Formats a float as its shortest round-trip representation after rounding
/// to 12 significant digits, so goldens are stable across platforms.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    format!("{rounded}")
}

/// A CSV table with a fixed header, emitted with LF endings and a trailing
/// newline.
pub struct Table {
    header: &'static [&'static str],
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &'static [&'static str]) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// The same table as a JSON array of row objects; numeric cells stay
    /// bare tokens, everything else is quoted.
    pub fn render_json(&self) -> String {
        let mut out = String::from("[");
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str("\n  {");
            for (j, (name, value)) in self.header.iter().zip(row).enumerate() {
                if j > 0 {
                    out.push_str(", ");
                }
                out.push('"');
                out.push_str(name);
                out.push_str("\": ");
                let numeric = !value.is_empty()
                    && value != "inf"
                    && value != "-inf"
                    && value != "nan"
                    && value.parse::<f64>().is_ok();
                if numeric {
                    out.push_str(value);
                } else {
                    out.push('"');
                    out.push_str(value);
                    out.push('"');
                }
            }
            out.push('}');
        }
        out.push_str("\n]\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting_is_shortest_round_trip() {
        assert_eq!(fmt_f64(0.5), "0.5");
        assert_eq!(fmt_f64(0.0), "0");
        assert_eq!(fmt_f64(1.0), "1");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        // capped at 12 significant digits
        assert_eq!(fmt_f64(1.660_964_047_443_681), "1.66096404744");
        // shortest representation round-trips
        let s = fmt_f64(0.1);
        assert_eq!(s, "0.1");
    }

    #[test]
    fn table_renders_lf_only() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "2".into()]);
        let s = t.render();
        assert_eq!(s, "a,b\n1,2\n");
        assert!(!s.contains('\r'));
    }
}
