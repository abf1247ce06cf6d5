//! ESRI ASCII grid reader and writer.
//!
//! Six `KEY value` header lines (NCOLS, NROWS, XLLCORNER, YLLCORNER,
//! CELLSIZE, NODATA_VALUE, keys case-insensitive, in that order) followed
//! by whitespace-separated cells, top row first. Writers use `\n` line
//! endings, uppercase keys, one raster row per line and print integral
//! values without a decimal point.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use super::{Count, CountGrid, Grid, GridHeader, Presence};
use crate::error::{Error, Result};

const HEADER_KEYS: [&str; 6] = ["NCOLS", "NROWS", "XLLCORNER", "YLLCORNER", "CELLSIZE", "NODATA_VALUE"];

/// Rows formatted in parallel before being flushed to the sink in order.
const WRITE_BATCH_ROWS: usize = 256;

/// Largest magnitude below which every integral f64 is exact.
const EXACT_INT_LIMIT: f64 = 9_007_199_254_740_992.0;

/// A cell type that can be emitted in an ASCII grid body.
pub trait AsciiCell: Copy + Send + Sync {
    /// Append this cell's token; `nodata` is the preformatted sentinel.
    fn write_token(self, nodata: &[u8], out: &mut Vec<u8>);
}

impl AsciiCell for Count {
    fn write_token(self, nodata: &[u8], out: &mut Vec<u8>) {
        match self.value() {
            Some(v) => push_number(v, out),
            None => out.extend_from_slice(nodata),
        }
    }
}

/// Real-valued cells; NaN is NoData.
impl AsciiCell for f64 {
    fn write_token(self, nodata: &[u8], out: &mut Vec<u8>) {
        if self.is_nan() {
            out.extend_from_slice(nodata);
        } else {
            push_number(self, out);
        }
    }
}

impl AsciiCell for Presence {
    fn write_token(self, nodata: &[u8], out: &mut Vec<u8>) {
        match self.code() {
            Some(c) => out.push(b'0' + c),
            None => out.extend_from_slice(nodata),
        }
    }
}

/// Appends `v` in its shortest round-tripping decimal form.
pub fn push_number(v: f64, out: &mut Vec<u8>) {
    if v.fract() == 0.0 && v.abs() < EXACT_INT_LIMIT {
        let mut buf = itoa::Buffer::new();
        out.extend_from_slice(buf.format(v as i64).as_bytes());
    } else {
        // Display never uses exponent notation and round-trips exactly
        write!(out, "{v}").expect("writing to a Vec cannot fail");
    }
}

fn format_number(v: f64) -> Vec<u8> {
    let mut out = Vec::new();
    push_number(v, &mut out);
    out
}

pub fn read_ascii_grid<R: Read>(mut source: R) -> Result<CountGrid> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    parse_ascii_grid(&bytes)
}

pub fn read_ascii_grid_path(path: impl AsRef<Path>) -> Result<CountGrid> {
    let bytes = std::fs::read(path)?;
    parse_ascii_grid(&bytes)
}

/// Splits `bytes` into (line number, line) pairs, 1-based, without terminators.
fn lines(bytes: &[u8]) -> impl Iterator<Item = (usize, &[u8])> {
    let mut rest = bytes;
    let mut number = 0;
    std::iter::from_fn(move || {
        if rest.is_empty() {
            return None;
        }
        number += 1;
        let (line, tail) = match rest.iter().position(|&b| b == b'\n') {
            Some(i) => (&rest[..i], &rest[i + 1..]),
            None => (rest, &rest[rest.len()..]),
        };
        rest = tail;
        let line = line.strip_suffix(b"\r").unwrap_or(line);
        Some((number, line))
    })
}

fn tokens(line: &[u8]) -> impl Iterator<Item = &[u8]> {
    line.split(|b| b.is_ascii_whitespace()).filter(|t| !t.is_empty())
}

fn lossy(token: &[u8]) -> String {
    String::from_utf8_lossy(token).into_owned()
}

/// Parses a decimal literal. Plain integers take a fast path.
fn parse_number(token: &[u8]) -> Option<f64> {
    let (negative, digits) = match token.split_first() {
        Some((b'-', rest)) => (true, rest),
        _ => (false, token),
    };
    if !digits.is_empty() && digits.len() <= 15 && digits.iter().all(u8::is_ascii_digit) {
        let mut v: u64 = 0;
        for &d in digits {
            v = v * 10 + u64::from(d - b'0');
        }
        let v = v as f64;
        return Some(if negative { -v } else { v });
    }
    let s = std::str::from_utf8(token).ok()?;
    let v: f64 = s.parse().ok()?;
    v.is_finite().then_some(v)
}

fn parse_header<'a>(lines: &mut impl Iterator<Item = (usize, &'a [u8])>) -> Result<GridHeader> {
    let mut values = [0f64; 6];
    for (i, key) in HEADER_KEYS.iter().enumerate() {
        let (line, text) = lines.next().ok_or(Error::HeaderKey {
            line: i + 1,
            expected: key,
            found: String::new(),
        })?;
        let mut parts = tokens(text);
        let found = parts.next().unwrap_or_default();
        if !found.eq_ignore_ascii_case(key.as_bytes()) {
            return Err(Error::HeaderKey {
                line,
                expected: key,
                found: lossy(found),
            });
        }
        let value = parts.next().unwrap_or_default();
        let bad = || Error::HeaderValue {
            line,
            key,
            value: lossy(value),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        values[i] = parse_number(value).ok_or_else(bad)?;
        let ok = match i {
            0 | 1 => values[i] >= 1.0 && values[i].fract() == 0.0,
            4 => values[i] > 0.0,
            _ => true,
        };
        if !ok {
            return Err(bad());
        }
    }
    Ok(GridHeader {
        ncols: values[0] as usize,
        nrows: values[1] as usize,
        xll: values[2],
        yll: values[3],
        cellsize: values[4],
        nodata_value: values[5],
    })
}

pub fn parse_ascii_grid(bytes: &[u8]) -> Result<CountGrid> {
    let mut it = lines(bytes);
    let header = parse_header(&mut it)?;
    header.validate()?;
    let expected = header.len();

    let body: Vec<(usize, &[u8])> = it.collect();
    let per_line: Vec<usize> = body.par_iter().map(|(_, l)| tokens(l).count()).collect();

    let mut total = 0usize;
    for (i, &n) in per_line.iter().enumerate() {
        total += n;
        if total > expected {
            return Err(Error::CellCount {
                line: body[i].0,
                expected,
                found: total,
            });
        }
    }
    if total != expected {
        return Err(Error::CellCount {
            line: body.last().map_or(HEADER_KEYS.len(), |(n, _)| *n),
            expected,
            found: total,
        });
    }

    let nodata = header.nodata_value;
    let mut cells = vec![Count::NODATA; expected];
    // hand every line its own disjoint output slice
    let mut slices = Vec::with_capacity(body.len());
    let mut rest = cells.as_mut_slice();
    for &n in &per_line {
        let (head, tail) = rest.split_at_mut(n);
        slices.push(head);
        rest = tail;
    }
    let errors: Vec<Error> = body
        .par_iter()
        .zip(slices.into_par_iter())
        .filter_map(|(&(line, text), out)| {
            for (slot, token) in out.iter_mut().zip(tokens(text)) {
                let Some(v) = parse_number(token) else {
                    return Some(Error::NonNumericCell {
                        line,
                        token: lossy(token),
                    });
                };
                *slot = if v == nodata {
                    Count::NODATA
                } else if v < 0.0 {
                    return Some(Error::NegativeCount { line, value: v });
                } else {
                    Count::new(v)
                };
            }
            None
        })
        .collect();
    // first error by line order, independent of scheduling
    if let Some(e) = errors.into_iter().next() {
        return Err(e);
    }
    Grid::new(header, cells)
}

/// Streams an ASCII grid row by row.
pub struct AsciiGridWriter<W: Write> {
    sink: W,
    header: GridHeader,
    nodata: Vec<u8>,
    rows_written: usize,
    line: Vec<u8>,
}

impl<W: Write> AsciiGridWriter<W> {
    pub fn new(mut sink: W, header: GridHeader) -> Result<Self> {
        header.validate()?;
        let nodata = format_number(header.nodata_value);
        let mut text = Vec::new();
        writeln!(text, "NCOLS {}", header.ncols)?;
        writeln!(text, "NROWS {}", header.nrows)?;
        for (key, v) in [
            ("XLLCORNER", header.xll),
            ("YLLCORNER", header.yll),
            ("CELLSIZE", header.cellsize),
        ] {
            text.extend_from_slice(key.as_bytes());
            text.push(b' ');
            push_number(v, &mut text);
            text.push(b'\n');
        }
        text.extend_from_slice(b"NODATA_VALUE ");
        text.extend_from_slice(&nodata);
        text.push(b'\n');
        sink.write_all(&text)?;
        Ok(Self {
            sink,
            header,
            nodata,
            rows_written: 0,
            line: Vec::new(),
        })
    }

    pub fn write_row<T: AsciiCell>(&mut self, row: &[T]) -> Result<()> {
        if row.len() != self.header.ncols {
            return Err(Error::DimensionMismatch(format!(
                "row of {} cells in a grid of {} columns",
                row.len(),
                self.header.ncols
            )));
        }
        if self.rows_written == self.header.nrows {
            return Err(Error::DimensionMismatch("more rows than NROWS".into()));
        }
        self.line.clear();
        format_row(row, &self.nodata, &mut self.line);
        self.sink.write_all(&self.line)?;
        self.rows_written += 1;
        Ok(())
    }

    fn write_rows<T: AsciiCell>(&mut self, cells: &[T]) -> Result<()> {
        let ncols = self.header.ncols;
        let rows = cells.len() / ncols;
        if cells.len() % ncols != 0 || self.rows_written + rows > self.header.nrows {
            return Err(Error::DimensionMismatch("cell buffer does not fit the header".into()));
        }
        for batch in cells.chunks(ncols * WRITE_BATCH_ROWS) {
            let nodata = &self.nodata;
            let text: Vec<Vec<u8>> = batch
                .par_chunks(ncols)
                .map(|row| {
                    let mut line = Vec::with_capacity(ncols * 2);
                    format_row(row, nodata, &mut line);
                    line
                })
                .collect();
            for line in &text {
                self.sink.write_all(line)?;
            }
        }
        self.rows_written += rows;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        if self.rows_written != self.header.nrows {
            return Err(Error::DimensionMismatch(format!(
                "wrote {} of {} rows",
                self.rows_written, self.header.nrows
            )));
        }
        self.sink.flush()?;
        Ok(self.sink)
    }
}

fn format_row<T: AsciiCell>(row: &[T], nodata: &[u8], out: &mut Vec<u8>) {
    for (i, &cell) in row.iter().enumerate() {
        if i > 0 {
            out.push(b' ');
        }
        cell.write_token(nodata, out);
    }
    out.push(b'\n');
}

/// Writes any grid whose cells know their ASCII token.
pub fn write_ascii<T: AsciiCell, W: Write>(grid: &Grid<T>, sink: W) -> Result<W> {
    let mut writer = AsciiGridWriter::new(sink, *grid.header())?;
    writer.write_rows(grid.cells())?;
    writer.finish()
}

pub fn write_ascii_grid<W: Write>(grid: &CountGrid, sink: W) -> Result<W> {
    write_ascii(grid, sink)
}

pub fn write_ascii_path<T: AsciiCell>(grid: &Grid<T>, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    write_ascii(grid, BufWriter::with_capacity(1 << 20, file))?;
    Ok(())
}

pub fn to_ascii_string<T: AsciiCell>(grid: &Grid<T>) -> String {
    let bytes = write_ascii(grid, Vec::new()).expect("in-memory write of a valid grid");
    String::from_utf8(bytes).expect("ASCII grid output is UTF-8")
}
