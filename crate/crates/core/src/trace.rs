//! Sampled noise power versus sideband frequency, and its CSV form.
//!
//! Trace files carry a header `frequency_hz,power` with an optional third
//! column `unit` (`linear`, `dbm` or `db_rel_shot`). Samples flagged invalid
//! are written with power `nan` and read back as invalid.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Physical meaning of the `power` column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PowerUnit {
    /// Absolute linear power (arbitrary analyzer units).
    Linear,
    /// Absolute power in dBm.
    Dbm,
    /// Ratio to shot noise, linear.
    RelShot,
    /// Ratio to shot noise, in dB.
    DbRelShot,
}

impl PowerUnit {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "linear" => Some(PowerUnit::Linear),
            "dbm" => Some(PowerUnit::Dbm),
            "db_rel_shot" => Some(PowerUnit::DbRelShot),
            _ => None,
        }
    }

    pub fn is_shot_normalized(self) -> bool {
        matches!(self, PowerUnit::RelShot | PowerUnit::DbRelShot)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceKind {
    Signal,
    Shot,
    Dark,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumTrace {
    freqs_hz: Vec<f64>,
    power: Vec<f64>,
    valid: Vec<bool>,
    unit: PowerUnit,
    kind: TraceKind,
}

impl SpectrumTrace {
    pub fn new(
        freqs_hz: Vec<f64>,
        power: Vec<f64>,
        unit: PowerUnit,
        kind: TraceKind,
    ) -> Result<Self> {
        let valid = vec![true; power.len()];
        Self::with_validity(freqs_hz, power, valid, unit, kind)
    }

    /// Builds a trace with an explicit validity mask. Power must be finite on
    /// valid samples only.
    pub fn with_validity(
        freqs_hz: Vec<f64>,
        power: Vec<f64>,
        valid: Vec<bool>,
        unit: PowerUnit,
        kind: TraceKind,
    ) -> Result<Self> {
        if freqs_hz.len() != power.len() || valid.len() != power.len() {
            return Err(Error::invalid(format!(
                "trace columns differ in length ({} frequencies, {} powers, {} flags)",
                freqs_hz.len(),
                power.len(),
                valid.len()
            )));
        }
        if let Some(f) = freqs_hz.iter().find(|f| !f.is_finite() || **f < 0.0) {
            return Err(Error::invalid(format!("invalid frequency {f}")));
        }
        if let Some(w) = freqs_hz.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!(
                "frequencies must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        if let Some((i, p)) = power
            .iter()
            .zip(&valid)
            .enumerate()
            .find_map(|(i, (p, ok))| (*ok && !p.is_finite()).then_some((i, p)))
        {
            return Err(Error::invalid(format!("non-finite power {p} at sample {i}")));
        }
        Ok(SpectrumTrace {
            freqs_hz,
            power,
            valid,
            unit,
            kind,
        })
    }

    pub fn freqs_hz(&self) -> &[f64] {
        &self.freqs_hz
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn is_valid(&self, i: usize) -> bool {
        self.valid[i]
    }

    pub fn invalid_count(&self) -> usize {
        self.valid.iter().filter(|v| !**v).count()
    }

    pub fn unit(&self) -> PowerUnit {
        self.unit
    }

    pub fn kind(&self) -> TraceKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }

    pub fn with_kind(mut self, kind: TraceKind) -> Self {
        self.kind = kind;
        self
    }

    /// Iterates `(frequency, power)` over valid samples.
    pub fn valid_samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.freqs_hz
            .iter()
            .zip(&self.power)
            .zip(&self.valid)
            .filter_map(|((f, p), ok)| ok.then_some((*f, *p)))
    }

    /// Converts dB-valued units to their linear counterpart (`dbm` to mW,
    /// `db_rel_shot` to a linear shot-noise ratio). Linear units pass through.
    pub fn to_linear(&self) -> SpectrumTrace {
        let (unit, conv): (PowerUnit, fn(f64) -> f64) = match self.unit {
            PowerUnit::Linear | PowerUnit::RelShot => return self.clone(),
            PowerUnit::Dbm => (PowerUnit::Linear, db_to_lin),
            PowerUnit::DbRelShot => (PowerUnit::RelShot, db_to_lin),
        };
        self.map_valid(unit, conv)
    }

    /// Shot-noise-normalized trace expressed in dB.
    pub fn to_db_rel_shot(&self) -> Result<SpectrumTrace> {
        match self.unit {
            PowerUnit::DbRelShot => Ok(self.clone()),
            PowerUnit::RelShot => {
                let mut out = self.map_valid(PowerUnit::DbRelShot, lin_to_db);
                // non-positive ratios have no dB form
                for (p, ok) in out.power.iter_mut().zip(out.valid.iter_mut()) {
                    if !p.is_finite() {
                        *ok = false;
                    }
                }
                Ok(out)
            }
            u => Err(Error::Unit(format!(
                "trace in {u:?} units is not normalized to shot noise"
            ))),
        }
    }

    fn map_valid(&self, unit: PowerUnit, f: fn(f64) -> f64) -> SpectrumTrace {
        let power = self
            .power
            .iter()
            .zip(&self.valid)
            .map(|(p, ok)| if *ok { f(*p) } else { *p })
            .collect();
        SpectrumTrace {
            freqs_hz: self.freqs_hz.clone(),
            power,
            valid: self.valid.clone(),
            unit,
            kind: self.kind,
        }
    }

    /// True when both traces sample the same frequencies within `rel_tol`.
    pub fn same_grid(&self, other: &SpectrumTrace, rel_tol: f64) -> bool {
        self.freqs_hz.len() == other.freqs_hz.len()
            && self
                .freqs_hz
                .iter()
                .zip(&other.freqs_hz)
                .all(|(a, b)| (a - b).abs() <= rel_tol * a.abs().max(b.abs()))
    }

    pub fn read_csv<R: Read>(reader: R, kind: TraceKind, origin: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::parse(origin, e.to_string()))?
            .clone();
        if headers.len() < 2 || &headers[0] != "frequency_hz" || &headers[1] != "power" {
            return Err(Error::parse(
                origin,
                "expected header `frequency_hz,power[,unit]`",
            ));
        }
        let has_unit = headers.len() >= 3 && &headers[2] == "unit";
        let mut unit: Option<PowerUnit> = None;
        let (mut freqs, mut power, mut valid) = (Vec::new(), Vec::new(), Vec::new());
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::parse(origin, e.to_string()))?;
            let row = line + 2;
            let f: f64 = rec[0]
                .parse()
                .map_err(|_| Error::parse(origin, format!("row {row}: bad frequency `{}`", &rec[0])))?;
            let p: f64 = rec[1]
                .parse()
                .map_err(|_| Error::parse(origin, format!("row {row}: bad power `{}`", &rec[1])))?;
            if has_unit {
                let u = PowerUnit::parse(&rec[2]).ok_or_else(|| {
                    Error::parse(origin, format!("row {row}: unknown unit `{}`", &rec[2]))
                })?;
                match unit {
                    None => unit = Some(u),
                    Some(prev) if prev != u => {
                        return Err(Error::parse(origin, format!("row {row}: mixed units")))
                    }
                    _ => {}
                }
            }
            freqs.push(f);
            valid.push(p.is_finite());
            power.push(p);
        }
        let unit = unit.unwrap_or(PowerUnit::Linear);
        SpectrumTrace::with_validity(freqs, power, valid, unit, kind)
            .map_err(|e| Error::parse(origin, e.to_string()))
    }

    pub fn read_csv_file(path: &Path, kind: TraceKind) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file), kind, path)
    }

    /// Writes the trace; linear shot-noise ratios are written as `db_rel_shot`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let out = match self.unit {
            PowerUnit::RelShot => self.to_db_rel_shot().expect("shot-normalized"),
            _ => self.clone(),
        };
        let unit = match out.unit {
            PowerUnit::Linear => "linear",
            PowerUnit::Dbm => "dbm",
            PowerUnit::DbRelShot | PowerUnit::RelShot => "db_rel_shot",
        };
        writeln!(w, "frequency_hz,power,unit")?;
        for i in 0..out.len() {
            if out.valid[i] {
                writeln!(w, "{},{},{unit}", out.freqs_hz[i], out.power[i])?;
            } else {
                writeln!(w, "{},nan,{unit}", out.freqs_hz[i])?;
            }
        }
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }
}

fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn lin_to_db(v: f64) -> f64 {
    if v > 0.0 {
        10.0 * v.log10()
    } else {
        f64::NAN
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<SpectrumTrace> {
        SpectrumTrace::read_csv(text.as_bytes(), TraceKind::Signal, Path::new("mem.csv"))
    }

    #[test]
    fn reads_two_and_three_column_files() {
        let t = parse("frequency_hz,power\n1e6,2.0\n2e6,3.0\n").unwrap();
        assert_eq!(t.unit(), PowerUnit::Linear);
        assert_eq!(t.power(), &[2.0, 3.0]);

        let t = parse("frequency_hz,power,unit\n1e6,-3.0,db_rel_shot\n2e6,nan,db_rel_shot\n").unwrap();
        assert_eq!(t.unit(), PowerUnit::DbRelShot);
        assert!(!t.is_valid(1));
        assert_eq!(t.invalid_count(), 1);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(parse("freq,power\n1,2\n").is_err());
        assert!(parse("frequency_hz,power\n2,1\n1,1\n").is_err());
        assert!(parse("frequency_hz,power,unit\n1,1,watts\n").is_err());
        assert!(parse("frequency_hz,power,unit\n1,1,dbm\n2,1,linear\n").is_err());
    }

    #[test]
    fn csv_round_trip_preserves_values_and_flags() {
        let t = SpectrumTrace::with_validity(
            vec![1.0e6, 1.5e6, 2.0e6],
            vec![0.123456789012345, -1.0, 7.0],
            vec![true, false, true],
            PowerUnit::Linear,
            TraceKind::Signal,
        )
        .unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = parse(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.freqs_hz(), t.freqs_hz());
        assert_eq!(back.valid(), t.valid());
        assert_eq!(back.power()[0], t.power()[0]);
    }

    #[test]
    fn unit_conversions() {
        let t = SpectrumTrace::new(vec![1.0, 2.0], vec![0.0, 10.0], PowerUnit::Dbm, TraceKind::Dark)
            .unwrap();
        let lin = t.to_linear();
        assert_eq!(lin.unit(), PowerUnit::Linear);
        assert!((lin.power()[1] - 10.0).abs() < 1e-12);
        assert!(t.to_db_rel_shot().is_err());
    }
}
