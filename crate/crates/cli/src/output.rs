use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::Formatter;

/// Writes every double with 17 significant digits.
struct FullPrecision;

impl Formatter for FullPrecision {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

/// JSON with sorted object keys and round-trip doubles.
pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let tree = serde_json::to_value(value)?;
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision);
    tree.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Csv { text }
    }

    pub fn row(&mut self, fields: &[f64]) {
        let line: Vec<String> = fields.iter().map(|&x| num(x)).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Binary PGM (P5, maxval 255), rows top to bottom.
pub fn pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), width * height);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Linear grey levels for `values` clamped to `[0, top]`.
pub fn grey_levels(values: &[f64], top: f64) -> Vec<u8> {
    values
        .iter()
        .map(|&v| if top > 0.0 && v.is_finite() { (255.0 * (v / top).clamp(0.0, 1.0)).round() as u8 } else { 0 })
        .collect()
}

pub fn emit(bytes: &[u8], out: Option<&Path>) -> io::Result<()> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            w.write_all(bytes)?;
            w.flush()
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(bytes)?;
            lock.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_keys_sorted_and_full_precision() {
        #[derive(Serialize)]
        struct S {
            zeta: f64,
            alpha: u32,
        }
        let s = to_json(&S { zeta: 0.1, alpha: 3 }).unwrap();
        assert_eq!(s, "{\"alpha\":3,\"zeta\":1.0000000000000001e-1}\n");
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["zeta"].as_f64(), Some(0.1));
    }

    #[test]
    fn pgm_layout() {
        let img = pgm(2, 1, &grey_levels(&[0.0, 2.0], 1.0));
        assert_eq!(img, b"P5\n2 1\n255\n\x00\xff".to_vec());
    }
}
