//! Deterministic artifact writers: numbers with 17 significant digits,
//! pretty JSON and comma-separated tables with an optional timestamp line.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

/// `x` with 17 significant digits (`NaN`, `inf`, `-inf` when not finite).
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Pretty JSON whose floats carry 17 significant digits.
struct Digits17<'a>(PrettyFormatter<'a>);

impl Formatter for Digits17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(num(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes `value` as JSON with 17-digit floats and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> io::Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17(PrettyFormatter::new()));
    value.serialize(&mut ser).map_err(io::Error::other)?;
    buf.push(b'\n');
    Ok(buf)
}

/// Writes artifacts into one directory.
pub struct Sink {
    dir: PathBuf,
    timestamp: bool,
}

impl Sink {
    pub fn new(dir: &Path, timestamp: bool) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Sink { dir: dir.to_path_buf(), timestamp })
    }

    fn header(&self) -> String {
        if self.timestamp {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            format!("# generated at unix time {secs}\n")
        } else {
            String::new()
        }
    }

    /// Writes `value` to `name` as JSON; returns the path.
    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> io::Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, to_json(value)?)?;
        Ok(path)
    }

    /// Writes a comma-separated table with a header row.
    pub fn csv(&self, name: &str, columns: &[&str], rows: &[Vec<String>]) -> io::Result<PathBuf> {
        let path = self.dir.join(name);
        let mut out = self.header().into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(columns).map_err(io::Error::other)?;
            for row in rows {
                w.write_record(row).map_err(io::Error::other)?;
            }
            w.flush()?;
        }
        fs::write(&path, out)?;
        Ok(path)
    }

    /// Writes whitespace-separated plot data with `#` comment lines.
    pub fn plot_data(&self, name: &str, comments: &[String], rows: &[Vec<String>]) -> io::Result<PathBuf> {
        let path = self.dir.join(name);
        let mut out = self.header();
        for c in comments {
            out.push_str(&format!("# {c}\n"));
        }
        for row in rows {
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        fs::write(&path, out)?;
        Ok(path)
    }
}
