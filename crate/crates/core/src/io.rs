//! File formats: CSV matrices with `NaN` for missing entries, binary PGM
//! images, and JSON with 17-significant-digit floats.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use ndarray::Array2;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::matrix::MaskedMatrix;
use crate::{Error, Result};

/// Enough digits to round-trip any finite `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parses comma-separated rows; a `NaN` token (any case) marks a missing entry.
pub fn parse_csv_matrix(text: &str, origin: &str) -> Result<MaskedMatrix> {
    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    for (r, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (c, tok) in line.split(',').enumerate() {
            let tok = tok.trim();
            let parse_err = |msg: String| Error::Parse {
                path: origin.to_string(),
                row: r + 1,
                col: c + 1,
                msg,
            };
            if tok.eq_ignore_ascii_case("nan") {
                row.push(None);
                continue;
            }
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(format!("cannot parse {tok:?} as a number")))?;
            if !v.is_finite() {
                return Err(parse_err(format!("{tok:?} is not finite")));
            }
            row.push(Some(v));
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    row: r + 1,
                    col: row.len().min(first.len()) + 1,
                    msg: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: origin.to_string(),
            row: 1,
            col: 1,
            msg: "no data".into(),
        });
    }
    let (m, n) = (rows.len(), rows[0].len());
    let values = Array2::from_shape_fn((m, n), |(i, j)| rows[i][j].unwrap_or(0.0));
    let mask = Array2::from_shape_fn((m, n), |(i, j)| rows[i][j].is_some());
    MaskedMatrix::new(values, mask)
}

pub fn read_csv_matrix(path: impl AsRef<Path>) -> Result<MaskedMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv_matrix(&text, &path.display().to_string())
}

pub fn csv_string(values: &Array2<f64>, mask: Option<&Array2<bool>>) -> String {
    let mut out = String::new();
    for (i, row) in values.rows().into_iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(j, &v)| match mask {
                Some(m) if !m[[i, j]] => "NaN".to_string(),
                _ => format_f64(v),
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv_matrix(path: impl AsRef<Path>, x: &MaskedMatrix) -> Result<()> {
    write_text(path, &csv_string(x.values(), Some(x.mask())))
}

/// Writes a plain dense grid (e.g. a factor matrix).
pub fn write_csv_grid(path: impl AsRef<Path>, values: &Array2<f64>) -> Result<()> {
    write_text(path, &csv_string(values, None))
}

fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Decodes a binary (`P5`) PGM into a grid of intensities in [0,1].
pub fn decode_pgm(bytes: &[u8], origin: &str) -> Result<Array2<f64>> {
    let fail = |msg: &str| Error::Format {
        path: origin.to_string(),
        msg: msg.to_string(),
    };
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(fail("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| fail("header is not ASCII"))?);
    }
    if fields[0] != "P5" {
        return Err(fail(&format!("expected magic P5, found {:?}", fields[0])));
    }
    let num =
        |s: &str, what: &str| -> Result<usize> { s.parse::<usize>().map_err(|_| fail(&format!("bad {what} {s:?}"))) };
    let width = num(fields[1], "width")?;
    let height = num(fields[2], "height")?;
    let maxval = num(fields[3], "maxval")?;
    if width == 0 || height == 0 {
        return Err(fail("image has no pixels"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(fail(&format!("maxval {maxval} out of range")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let bpp = if maxval < 256 { 1 } else { 2 };
    let need = width * height * bpp;
    if bytes.len() < pos + need {
        return Err(fail(&format!(
            "truncated raster: need {need} bytes, found {}",
            bytes.len().saturating_sub(pos)
        )));
    }
    let data = &bytes[pos..pos + need];
    let scale = maxval as f64;
    Ok(Array2::from_shape_fn((height, width), |(i, j)| {
        let k = i * width + j;
        let raw = if bpp == 1 {
            data[k] as f64
        } else {
            u16::from_be_bytes([data[2 * k], data[2 * k + 1]]) as f64
        };
        raw / scale
    }))
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes, &path.display().to_string())
}

/// Encodes a grid as 8-bit binary PGM, clamping to [0,1].
pub fn encode_pgm(grid: &Array2<f64>) -> Vec<u8> {
    let (h, w) = grid.dim();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(grid.iter().map(|&v| {
        let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        (v * 255.0).round() as u8
    }));
    out
}

pub fn write_pgm(path: impl AsRef<Path>, grid: &Array2<f64>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(grid)).map_err(|e| Error::io(path, e))
}

/// Pretty JSON formatter that writes floats with 17 significant digits.
struct PreciseFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for PreciseFormatter<'_> {
    fn write_f64<W: ?Sized + std::io::Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }
    fn begin_array<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + std::io::Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes `value` as pretty JSON; non-finite floats are rejected.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, PreciseFormatter(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .map_err(|e| Error::validation(format!("cannot serialize report: {e}")))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let text = to_json_string(value)?;
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}
