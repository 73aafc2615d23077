//! File formats: two-column CSV for 1D signals, PGM (P5 writer, P2/P5
//! reader) for images, and a minimal hand-emitted SVG overlay plot.
//! All writes go through a temp-file-and-rename so a failed run never
//! leaves partial output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use gsdenoise::signal::{Shape, Signal};

use crate::error::{CliError, Result};

/// Writes atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp~",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    let io_err = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = fs::File::create(&tmp).map_err(io_err)?;
    f.write_all(bytes).map_err(io_err)?;
    f.sync_all().map_err(io_err)?;
    drop(f);
    fs::rename(&tmp, path).map_err(io_err)?;
    Ok(())
}

/// Headerless two-column CSV `index,value`, LF line endings, '.' decimal.
pub fn write_csv_signal(path: &Path, signal: &Signal) -> Result<()> {
    let mut out = String::new();
    for (i, v) in signal.values().iter().enumerate() {
        out.push_str(&format!("{i},{v}\n"));
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_csv_signal(path: &Path) -> Result<Signal> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut values = Vec::new();
    let mut offset = 0usize;
    for (line_no, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if !trimmed.is_empty() {
            let parse_err = |message: String| CliError::Parse {
                path: path.to_path_buf(),
                offset,
                message,
            };
            let (idx, val) = trimmed
                .split_once(',')
                .ok_or_else(|| parse_err("expected `index,value`".into()))?;
            let idx: usize = idx
                .trim()
                .parse()
                .map_err(|e| parse_err(format!("bad index: {e}")))?;
            if idx != values.len() {
                return Err(parse_err(format!(
                    "index {idx} out of order (expected {})",
                    values.len()
                )));
            }
            let val: f64 = val
                .trim()
                .parse()
                .map_err(|e| parse_err(format!("bad value: {e}")))?;
            values.push(val);
        }
        offset += line.len() + 1;
        let _ = line_no;
    }
    if values.is_empty() {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            offset: 0,
            message: "no samples".into(),
        });
    }
    Signal::from_values(values).map_err(CliError::from)
}

fn quantize(v: f64) -> u8 {
    // clamp to [0,1], then round half away from zero
    (255.0 * v.clamp(0.0, 1.0) + 0.5).floor() as u8
}

/// Binary PGM (P5), maxval 255; intensities map linearly [0,1] -> [0,255].
pub fn write_pgm(path: &Path, signal: &Signal) -> Result<()> {
    let (rows, cols) = match signal.shape() {
        Shape::Grid { rows, cols } => (rows, cols),
        Shape::Length(n) => (1, n),
    };
    let mut bytes = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    bytes.extend(signal.values().iter().map(|&v| quantize(v)));
    write_atomic(path, &bytes)
}

struct PgmCursor<'a> {
    data: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> PgmCursor<'a> {
    fn error(&self, message: String) -> CliError {
        CliError::Parse {
            path: self.path.to_path_buf(),
            offset: self.pos,
            message,
        }
    }

    /// Advances past whitespace and `#` comments, then reads one token.
    fn token(&mut self) -> Result<&'a [u8]> {
        loop {
            while self.pos < self.data.len() && self.data[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.data.len() && self.data[self.pos] == b'#' {
                while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        if self.pos >= self.data.len() {
            return Err(self.error("unexpected end of file".into()));
        }
        let start = self.pos;
        while self.pos < self.data.len() && !self.data[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        Ok(&self.data[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.error(format!("bad {what}")))
    }
}

/// Reads P2 (ASCII) or P5 (binary) grayscale images with maxval 255.
pub fn read_pgm(path: &Path) -> Result<Signal> {
    let data = fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cur = PgmCursor {
        data: &data,
        pos: 0,
        path,
    };
    let magic = cur.token()?;
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        _ => {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                offset: 0,
                message: "magic number must be P2 or P5".into(),
            })
        }
    };
    let cols = cur.number("width")?;
    let rows = cur.number("height")?;
    if rows == 0 || cols == 0 {
        return Err(cur.error("zero image dimension".into()));
    }
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(cur.error(format!("unsupported maxval {maxval} (only 255)")));
    }

    let count = rows * cols;
    let mut values = Vec::with_capacity(count);
    if binary {
        // exactly one whitespace byte separates the header from raster data
        if cur.pos >= data.len() {
            return Err(cur.error("missing raster data".into()));
        }
        cur.pos += 1;
        if data.len() < cur.pos + count {
            let available = data.len() - cur.pos;
            cur.pos = data.len();
            return Err(cur.error(format!(
                "raster truncated: need {count} bytes, found {available}"
            )));
        }
        values.extend(data[cur.pos..cur.pos + count].iter().map(|&b| b as f64 / 255.0));
    } else {
        for _ in 0..count {
            let v = cur.number("pixel")?;
            if v > 255 {
                return Err(cur.error(format!("pixel {v} exceeds maxval")));
            }
            values.push(v as f64 / 255.0);
        }
    }
    Signal::new(values, Shape::Grid { rows, cols }).map_err(CliError::from)
}

/// Reads a signal by extension: `.pgm` as an image, anything else as CSV.
pub fn read_signal(path: &Path) -> Result<Signal> {
    if path.extension().and_then(|e| e.to_str()) == Some("pgm") {
        read_pgm(path)
    } else {
        read_csv_signal(path)
    }
}

pub fn write_signal(path: &Path, signal: &Signal) -> Result<()> {
    match signal.shape() {
        Shape::Grid { .. } => write_pgm(path, signal),
        Shape::Length(_) => write_csv_signal(path, signal),
    }
}

/// Output path helper: `<dir>/<name>`.
pub fn in_dir(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

const SVG_COLORS: [&str; 6] = ["#444444", "#cc3333", "#2266cc", "#22aa55", "#aa44cc", "#ee8800"];

/// Minimal overlay plot: one polyline per labelled series.
pub fn write_svg_overlay(path: &Path, series: &[(String, &[f64])]) -> Result<()> {
    let (width, height, margin) = (900.0, 420.0, 40.0);
    let n = series.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, v) in series {
        for &y in *v {
            lo = lo.min(y);
            hi = hi.max(y);
        }
    }
    if !(hi > lo) {
        hi = lo + 1.0;
    }
    let sx = (width - 2.0 * margin) / (n.max(2) - 1) as f64;
    let sy = (height - 2.0 * margin) / (hi - lo);

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {width} {height}\">\n\
         <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    );
    for (k, (label, values)) in series.iter().enumerate() {
        let color = SVG_COLORS[k % SVG_COLORS.len()];
        let points: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                let px = margin + i as f64 * sx;
                let py = height - margin - (y - lo) * sy;
                format!("{px:.2},{py:.2}")
            })
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1\" points=\"{}\"/>\n",
            points.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\" font-size=\"13\">{label}</text>\n",
            width - margin - 110.0,
            margin + 16.0 * k as f64
        ));
    }
    svg.push_str("</svg>\n");
    write_atomic(path, svg.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use gsdenoise::signal::{add_gaussian_noise, NoiseSpec};

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let x = add_gaussian_noise(
            &Signal::constant(Shape::Length(17), 0.5),
            &NoiseSpec::new(0.2, 3).unwrap(),
        );
        write_csv_signal(&path, &x).unwrap();
        let back = read_csv_signal(&path).unwrap();
        assert_eq!(back.values(), x.values());
    }

    #[test]
    fn csv_rejects_out_of_order_index() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "0,0.5\n2,0.25\n").unwrap();
        match read_csv_signal(&path) {
            Err(CliError::Parse { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn pgm_round_trip_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let shape = Shape::Grid { rows: 9, cols: 13 };
        let x = add_gaussian_noise(&Signal::constant(shape, 0.5), &NoiseSpec::new(0.1, 5).unwrap());
        write_pgm(&path, &x).unwrap();
        let back = read_pgm(&path).unwrap();
        assert_eq!(back.shape(), shape);
        for (a, b) in back.values().iter().zip(x.values()) {
            assert!((a - b.clamp(0.0, 1.0)).abs() <= 1.0 / 510.0 + 1e-12);
        }
    }

    #[test]
    fn p2_and_p5_parse_identically() {
        let dir = tempfile::tempdir().unwrap();
        let p5 = dir.path().join("a.pgm");
        std::fs::write(&p5, b"P5\n# comment\n3 2\n255\n\x00\x7f\xff\x10\x20\x30").unwrap();
        let p2 = dir.path().join("b.pgm");
        std::fs::write(&p2, "P2\n3 2\n255\n0 127 255\n16 32 48\n").unwrap();
        let a = read_pgm(&p5).unwrap();
        let b = read_pgm(&p2).unwrap();
        assert_eq!(a.values(), b.values());
        assert_eq!(a.shape(), Shape::Grid { rows: 2, cols: 3 });
    }

    #[test]
    fn truncated_pgm_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pgm");
        std::fs::write(&path, b"P5\n4 4\n255\n\x00\x01").unwrap();
        match read_pgm(&path) {
            Err(CliError::Parse { message, .. }) => assert!(message.contains("truncated")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.pgm");
        std::fs::write(&path, b"P6\n1 1\n255\n\x00").unwrap();
        assert!(matches!(read_pgm(&path), Err(CliError::Parse { .. })));
    }

    #[test]
    fn quantization_rounds_half_away_from_zero() {
        assert_eq!(quantize(0.0), 0);
        assert_eq!(quantize(1.0), 255);
        assert_eq!(quantize(1.5), 255);
        assert_eq!(quantize(-0.2), 0);
        // 0.5/255 rounds up
        assert_eq!(quantize(0.5 / 255.0), 1);
    }
}
