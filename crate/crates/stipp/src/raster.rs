//! Text raster-series format: load and save [`FieldSeries`] stacks.
//!
//! Layout:
//!
//! ```text
//! stfield v1 <n_frames> <n_y> <n_x> <dt> <x_min> <x_max> <y_min> <y_max>
//! frame <t>
//! <n_y rows of n_x space-separated decimal values, `nan` for masked cells>
//! frame <t>
//! ...
//! ```
//!
//! Values round-trip bit-exactly: they are written with Rust's shortest
//! round-trip float formatting and parsed back with the standard parser.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{Bounds, FieldFrame, FieldSeries};

const MAGIC: &str = "stfield";
const VERSION: &str = "v1";

pub fn save_series(series: &FieldSeries, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_series(series, &mut w)
}

pub fn write_series<W: Write>(series: &FieldSeries, w: &mut W) -> Result<()> {
    let ext = series.extent();
    let first = &series.frames()[0];
    writeln!(
        w,
        "{MAGIC} {VERSION} {} {} {} {} {} {} {} {}",
        series.frames().len(),
        first.n_y(),
        first.n_x(),
        fmt_f64(series.dt()),
        fmt_f64(ext.x_min),
        fmt_f64(ext.x_max),
        fmt_f64(ext.y_min),
        fmt_f64(ext.y_max),
    )?;
    for frame in series.frames() {
        writeln!(w, "frame {}", fmt_f64(frame.time()))?;
        for iy in 0..frame.n_y() {
            let row: Vec<String> = (0..frame.n_x())
                .map(|ix| fmt_f64(frame.get(ix, iy)))
                .collect();
            writeln!(w, "{}", row.join(" "))?;
        }
    }
    Ok(())
}

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

pub fn load_series(path: &Path) -> Result<FieldSeries> {
    read_series(&mut BufReader::new(File::open(path)?))
}

pub fn read_series<R: Read>(r: &mut R) -> Result<FieldSeries> {
    let reader = BufReader::new(r);
    let mut lines = reader.lines().enumerate();

    let (line_no, header) = match lines.next() {
        Some((i, l)) => (i + 1, l?),
        None => {
            return Err(Error::MalformedHeader {
                line: 1,
                msg: "empty file".to_string(),
            })
        }
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 10 || fields[0] != MAGIC || fields[1] != VERSION {
        return Err(Error::MalformedHeader {
            line: line_no,
            msg: format!("expected `{MAGIC} {VERSION}` with 8 numeric fields, got `{header}`"),
        });
    }
    let parse_usize = |s: &str, what: &str| -> Result<usize> {
        s.parse().map_err(|_| Error::MalformedHeader {
            line: line_no,
            msg: format!("bad {what}: `{s}`"),
        })
    };
    let parse_f64 = |s: &str, what: &str, line: usize| -> Result<f64> {
        s.parse().map_err(|_| Error::MalformedHeader {
            line,
            msg: format!("bad {what}: `{s}`"),
        })
    };
    let n_frames = parse_usize(fields[2], "frame count")?;
    let n_y = parse_usize(fields[3], "row count")?;
    let n_x = parse_usize(fields[4], "column count")?;
    let dt = parse_f64(fields[5], "dt", line_no)?;
    let extent = Bounds::new(
        parse_f64(fields[6], "x_min", line_no)?,
        parse_f64(fields[7], "x_max", line_no)?,
        parse_f64(fields[8], "y_min", line_no)?,
        parse_f64(fields[9], "y_max", line_no)?,
    );

    let mut frames = Vec::with_capacity(n_frames);
    let mut prev_time: Option<f64> = None;
    for _ in 0..n_frames {
        let (line_no, frame_line) = match lines.next() {
            Some((i, l)) => (i + 1, l?),
            None => {
                return Err(Error::InconsistentFrame {
                    line: 0,
                    msg: format!("expected {n_frames} frames, file ended early"),
                })
            }
        };
        let parts: Vec<&str> = frame_line.split_whitespace().collect();
        if parts.len() != 2 || parts[0] != "frame" {
            return Err(Error::InconsistentFrame {
                line: line_no,
                msg: format!("expected `frame <t>`, got `{frame_line}`"),
            });
        }
        let time = parse_f64(parts[1], "frame time", line_no)?;
        if let Some(prev) = prev_time {
            if time <= prev {
                return Err(Error::NonMonotoneTime { line: line_no, time });
            }
            if ((time - prev) - dt).abs() > 1e-9 * dt.abs().max(1.0) {
                return Err(Error::InconsistentFrame {
                    line: line_no,
                    msg: format!("frame spacing {} != header dt {dt}", time - prev),
                });
            }
        }
        prev_time = Some(time);

        let mut values = Vec::with_capacity(n_x * n_y);
        for _ in 0..n_y {
            let (line_no, row) = match lines.next() {
                Some((i, l)) => (i + 1, l?),
                None => {
                    return Err(Error::InconsistentFrame {
                        line: 0,
                        msg: "file ended inside a frame".to_string(),
                    })
                }
            };
            let cells: Vec<&str> = row.split_whitespace().collect();
            if cells.len() != n_x {
                return Err(Error::InconsistentFrame {
                    line: line_no,
                    msg: format!("expected {n_x} values per row, got {}", cells.len()),
                });
            }
            for cell in cells {
                values.push(parse_f64(cell, "cell value", line_no)?);
            }
        }
        frames.push(FieldFrame::new(values, n_x, n_y, extent, time));
    }
    FieldSeries::new(frames, dt)
}
