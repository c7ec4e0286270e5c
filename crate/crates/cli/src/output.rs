use std::fs::{self, File};
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use crate::Failure;

/// 17 significant digits, enough to round-trip an f64.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Destination for one artifact: a file under `dir`, or stdout.
pub fn sink(dir: Option<&Path>, name: &str) -> Result<Box<dyn Write>, Failure> {
    match dir {
        Some(d) => {
            fs::create_dir_all(d)?;
            Ok(Box::new(io::BufWriter::new(File::create(d.join(name))?)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

pub struct CsvTable {
    writer: csv::Writer<Box<dyn Write>>,
}

impl CsvTable {
    pub fn create(dir: Option<&Path>, name: &str, header: &[&str]) -> Result<Self, Failure> {
        let w = sink(dir, name)?;
        let mut writer = csv::Writer::from_writer(w);
        writer.write_record(header)?;
        Ok(Self { writer })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<(), Failure> {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn numbers(&mut self, values: &[f64]) -> Result<(), Failure> {
        self.writer.write_record(values.iter().map(|&v| num(v)))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), Failure> {
        self.writer.flush()?;
        Ok(())
    }
}

pub fn write_json<S: Serialize>(dir: Option<&Path>, name: &str, value: &S) -> Result<(), Failure> {
    let mut w = sink(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::num;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [std::f64::consts::TAU, 0.1, -1e-300, 5e-324, 1.0 / 3.0] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            assert_eq!(s.trim_start_matches('-').split('e').next().unwrap().len(), 18);
        }
    }
}
