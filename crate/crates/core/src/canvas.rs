//! Rectangular grids of printable ASCII characters with row-major linear
//! addressing, plus conversion of grayscale PGM images into ASCII art.

use std::fmt;

use thiserror::Error;

/// Characters a canvas cell may hold: space through tilde.
pub fn is_printable(byte: u8) -> bool {
    (0x20..=0x7E).contains(&byte)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CanvasError {
    #[error("non-printable character at byte {position}")]
    NonPrintable { position: usize },
    #[error("input contains no canvas cells")]
    EmptyInput,
    #[error("cell index {index} out of bounds for canvas with {cells} cells")]
    IndexOutOfBounds { index: usize, cells: usize },
    #[error("invalid image: {0}")]
    BadImage(String),
    #[error("invalid ramp: {0}")]
    BadRamp(String),
}

/// Row-major cell position; newlines are not counted.
///
/// Cell (r, c) of a canvas of width w has linear index `r * w + c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinearIndex(pub usize);

impl From<usize> for LinearIndex {
    fn from(value: usize) -> Self {
        LinearIndex(value)
    }
}

impl fmt::Display for LinearIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// An immutable rectangular grid of printable ASCII characters.
#[derive(Clone, PartialEq, Eq)]
pub struct Canvas {
    cells: Vec<u8>,
    width: usize,
    height: usize,
}

impl fmt::Debug for Canvas {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Canvas({}x{})", self.width, self.height)
    }
}

impl Canvas {
    /// Parses newline-separated text into a canvas.
    ///
    /// Lines shorter than the longest are right-padded with spaces and a
    /// single trailing newline is ignored.
    pub fn parse(text: &str) -> Result<Canvas, CanvasError> {
        for (position, byte) in text.bytes().enumerate() {
            if byte != b'\n' && !is_printable(byte) {
                return Err(CanvasError::NonPrintable { position });
            }
        }
        let body = text.strip_suffix('\n').unwrap_or(text);
        if body.is_empty() {
            return Err(CanvasError::EmptyInput);
        }
        let lines: Vec<&str> = body.split('\n').collect();
        let width = lines.iter().map(|l| l.len()).max().unwrap_or(0);
        if width == 0 {
            return Err(CanvasError::EmptyInput);
        }
        let height = lines.len();
        let mut cells = Vec::with_capacity(width * height);
        for line in &lines {
            cells.extend_from_slice(line.as_bytes());
            cells.resize(cells.len() + (width - line.len()), b' ');
        }
        Ok(Canvas {
            cells,
            width,
            height,
        })
    }

    /// Builds a canvas from individual rows; equivalent to parsing them
    /// joined with newlines.
    pub fn from_rows<I, S>(rows: I) -> Result<Canvas, CanvasError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let joined = rows
            .into_iter()
            .map(|r| r.as_ref().to_owned())
            .collect::<Vec<_>>()
            .join("\n");
        Canvas::parse(&joined)
    }

    /// Serializes rows joined by a single newline, no trailing newline.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.cells.len() + self.height);
        for r in 0..self.height {
            if r > 0 {
                out.push('\n');
            }
            out.push_str(self.row(r));
        }
        out
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// All cells in row-major order, without newlines.
    pub fn as_bytes(&self) -> &[u8] {
        &self.cells
    }

    pub fn row(&self, r: usize) -> &str {
        std::str::from_utf8(self.row_bytes(r)).expect("cells are ASCII")
    }

    pub fn row_bytes(&self, r: usize) -> &[u8] {
        &self.cells[r * self.width..(r + 1) * self.width]
    }

    pub fn rows(&self) -> impl Iterator<Item = &str> {
        (0..self.height).map(move |r| self.row(r))
    }

    /// Returns the character at a row-major cell position.
    pub fn char_at(&self, index: LinearIndex) -> Result<char, CanvasError> {
        self.cells
            .get(index.0)
            .map(|&b| b as char)
            .ok_or(CanvasError::IndexOutOfBounds {
                index: index.0,
                cells: self.cells.len(),
            })
    }

    /// Returns a canvas differing from this one only at the given cells.
    pub fn set_chars(&self, assignments: &[(LinearIndex, char)]) -> Result<Canvas, CanvasError> {
        let mut cells = self.cells.clone();
        for &(index, ch) in assignments {
            if !ch.is_ascii() || !is_printable(ch as u8) {
                return Err(CanvasError::NonPrintable { position: index.0 });
            }
            let slot = cells
                .get_mut(index.0)
                .ok_or(CanvasError::IndexOutOfBounds {
                    index: index.0,
                    cells: self.cells.len(),
                })?;
            *slot = ch as u8;
        }
        Ok(Canvas {
            cells,
            width: self.width,
            height: self.height,
        })
    }
}

/// Default light-to-dense luminance ramp.
pub const DEFAULT_RAMP: &str = " .:-=+*#%@";

/// Default character aspect correction (terminal cells are ~2x taller than wide).
pub const DEFAULT_ASPECT: f64 = 0.5;

/// Renders a PGM image (P2 or P5, maxval <= 255) as ASCII art of the given
/// width using [`DEFAULT_ASPECT`] row correction.
///
/// The ramp is ordered light to dense: a block of mean luminance `L` maps to
/// ramp index `floor((255 - L) * ramp_len / 256)`.
pub fn image_to_ascii(pgm: &[u8], out_width: usize, ramp: &str) -> Result<Canvas, CanvasError> {
    image_to_ascii_scaled(pgm, out_width, ramp, DEFAULT_ASPECT)
}

/// [`image_to_ascii`] with an explicit aspect-correction factor.
pub fn image_to_ascii_scaled(
    pgm: &[u8],
    out_width: usize,
    ramp: &str,
    aspect: f64,
) -> Result<Canvas, CanvasError> {
    assert!(out_width >= 1, "output width must be at least 1");
    let ramp_bytes = ramp.as_bytes();
    if ramp_bytes.len() < 2 {
        return Err(CanvasError::BadRamp(
            "ramp needs at least 2 characters".into(),
        ));
    }
    if let Some(&bad) = ramp_bytes.iter().find(|&&b| !is_printable(b)) {
        return Err(CanvasError::BadRamp(format!(
            "ramp contains non-printable byte 0x{bad:02x}"
        )));
    }

    let image = parse_pgm(pgm)?;
    let out_height = ((image.height as f64) * (out_width as f64 / image.width as f64) * aspect)
        .round()
        .max(1.0) as usize;

    let ramp_len = ramp_bytes.len();
    let mut cells = Vec::with_capacity(out_width * out_height);
    for r in 0..out_height {
        let y0 = r * image.height / out_height;
        let y1 = ((r + 1) * image.height / out_height).max(y0 + 1);
        for c in 0..out_width {
            let x0 = c * image.width / out_width;
            let x1 = ((c + 1) * image.width / out_width).max(x0 + 1);
            let mut sum = 0.0;
            for y in y0..y1 {
                for x in x0..x1 {
                    let v = image.pixels[y * image.width + x] as f64;
                    sum += v * 255.0 / image.maxval as f64;
                }
            }
            let mean = sum / ((y1 - y0) * (x1 - x0)) as f64;
            let idx = (((255.0 - mean) * ramp_len as f64) / 256.0).floor() as usize;
            cells.push(ramp_bytes[idx.min(ramp_len - 1)]);
        }
    }
    Ok(Canvas {
        cells,
        width: out_width,
        height: out_height,
    })
}

struct Pgm {
    width: usize,
    height: usize,
    maxval: u16,
    pixels: Vec<u8>,
}

fn parse_pgm(data: &[u8]) -> Result<Pgm, CanvasError> {
    let bad = |msg: &str| CanvasError::BadImage(msg.to_owned());
    if data.len() < 2 {
        return Err(bad("truncated header"));
    }
    let magic = &data[..2];
    let binary = match magic {
        b"P2" => false,
        b"P5" => true,
        _ => return Err(bad("not a P2/P5 PGM")),
    };

    let mut pos = 2;
    let mut next_token = |data: &[u8]| -> Result<usize, CanvasError> {
        // skip whitespace and '#' comments
        loop {
            while pos < data.len() && data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < data.len() && data[pos] == b'#' {
                while pos < data.len() && data[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < data.len() && data[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(CanvasError::BadImage("expected integer in header".into()));
        }
        std::str::from_utf8(&data[start..pos])
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| CanvasError::BadImage("integer out of range".into()))
    };

    let width = next_token(data)?;
    let height = next_token(data)?;
    let maxval = next_token(data)?;
    if width == 0 || height == 0 {
        return Err(bad("zero image dimension"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(bad("maxval must be in 1..=255"));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| bad("image dimensions overflow"))?;

    let mut pixels = Vec::with_capacity(count);
    if binary {
        // exactly one whitespace byte separates the header from raster data
        if pos >= data.len() || !data[pos].is_ascii_whitespace() {
            return Err(bad("missing raster separator"));
        }
        pos += 1;
        let raster = &data[pos..];
        if raster.len() < count {
            return Err(bad("truncated raster"));
        }
        pixels.extend_from_slice(&raster[..count]);
    } else {
        for _ in 0..count {
            let v = next_token(data)?;
            if v > 255 {
                return Err(bad("pixel value exceeds 255"));
            }
            pixels.push(v as u8);
        }
    }
    if let Some(&v) = pixels.iter().find(|&&v| v as u16 > maxval) {
        return Err(bad(&format!("pixel value {v} exceeds maxval {maxval}")));
    }
    Ok(Pgm {
        width,
        height,
        maxval: maxval as u16,
        pixels,
    })
}
