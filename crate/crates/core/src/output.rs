//! JSON and CSV writers. Floats are written with 17 significant digits so
//! that reports round-trip bit for bit.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter, Serializer};

use crate::entropy::EntropyReport;
use crate::error::Result;
use crate::num::Real;

/// `x` in scientific notation with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

struct Fmt17<'a>(PrettyFormatter<'a>);

macro_rules! forward {
    ($($name:ident),*) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
                self.0.$name(w, first)
            }
        )*
    };
}

impl Formatter for Fmt17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }

    forward!(begin_array_value, begin_object_key);
}

/// Pretty JSON with every float in `fmt17` form.
pub fn to_json_string<S: Serialize + ?Sized>(value: &S) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, Fmt17(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn write_json<S: Serialize + ?Sized>(path: &Path, value: &S) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, to_json_string(value)?)?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

/// `t,rate` rows of an entropy report, plus `t,k_id,delta_id,count,beta,rate`
/// rows for every sweep cell.
pub fn rates_csv<T: Real>(report: &EntropyReport<T>) -> Result<(String, String)> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "rate"])?;
    for (t, r) in &report.per_t_rates {
        w.write_record([fmt17(t.as_f64()), fmt17(r.as_f64())])?;
    }
    let series = String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf8");

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "k_id", "delta_id", "count", "beta", "rate"])?;
    for cell in &report.sweep {
        for (i, (t, r)) in cell.per_t_rates.iter().enumerate() {
            let beta = cell.betas.get(i).map(|b| fmt17(b.as_f64())).unwrap_or_default();
            w.write_record([
                fmt17(t.as_f64()),
                cell.k_id.clone(),
                cell.delta_id.clone(),
                cell.counts.get(i).map(|c| c.to_string()).unwrap_or_default(),
                beta,
                fmt17(r.as_f64()),
            ])?;
        }
    }
    let cells = String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf8");
    Ok((series, cells))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        let x = [0.1f64, std::f64::consts::LN_2, 1e-300, -2.5];
        let s = to_json_string(&x).unwrap();
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, x);
        assert!(s.contains("6.9314718055994529e-1"));
    }

    #[test]
    fn nested_objects_stay_pretty() {
        let v = serde_json::json!({"a": [1, 2], "b": {"c": 0.5}});
        let s = to_json_string(&v).unwrap();
        assert!(s.contains("\n  \"a\": [\n"));
        assert!(s.contains("5.0000000000000000e-1"));
    }
}
