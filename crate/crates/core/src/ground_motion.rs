//! Ground acceleration records: parsing, serialization, resampling, and a
//! synthetic generator for runs where no recorded accelerogram is at hand.
//!
//! Two on-disk formats are understood:
//!
//! * two-column CSV: `time(s), accel(m/s²)`, no header required, lines
//!   starting with `#` ignored;
//! * PEER AT2: four header lines (the fourth carrying `NPTS` and `DT`) followed
//!   by whitespace-separated samples in units of g.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard gravity used to convert AT2 samples from g to m/s².
pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, PartialEq)]
pub struct GroundMotionRecord {
    name: String,
    dt: f64,
    accel: Vec<f64>,
}

impl GroundMotionRecord {
    pub fn new(name: impl Into<String>, dt: f64, accel: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("time step must be positive, got {dt}")));
        }
        if accel.len() < 2 {
            return Err(Error::invalid(format!(
                "a record needs at least 2 samples, got {}",
                accel.len()
            )));
        }
        if let Some(i) = accel.iter().position(|a| !a.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(Self {
            name: name.into(),
            dt,
            accel,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn accel(&self) -> &[f64] {
        &self.accel
    }

    pub fn len(&self) -> usize {
        self.accel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accel.is_empty()
    }

    pub fn duration(&self) -> f64 {
        (self.accel.len() - 1) as f64 * self.dt
    }

    pub fn peak_abs(&self) -> f64 {
        self.accel.iter().fold(0.0_f64, |m, a| m.max(a.abs()))
    }

    /// Returns a copy with every sample multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.name.clone(),
            self.dt,
            self.accel.iter().map(|a| a * factor).collect(),
        )
    }

    /// Linear interpolation onto a uniform grid of spacing `new_dt`.
    ///
    /// The grid starts at t = 0 and extends to the first grid point at or
    /// beyond the original duration; points past the last original sample
    /// hold its value.
    pub fn resample(&self, new_dt: f64) -> Result<Self> {
        if !(new_dt > 0.0 && new_dt.is_finite()) {
            return Err(Error::invalid(format!(
                "resampling step must be positive, got {new_dt}"
            )));
        }
        let last = self.accel.len() - 1;
        let steps = ((self.duration() / new_dt) - 1e-9).ceil().max(1.0) as usize;
        // Position in units of the original step; multiplying by the ratio
        // keeps same-dt resampling exact.
        let ratio = new_dt / self.dt;
        let accel = (0..=steps)
            .map(|j| {
                let pos = j as f64 * ratio;
                let i = pos.floor() as usize;
                if i >= last {
                    return self.accel[last];
                }
                let frac = pos - i as f64;
                if frac == 0.0 {
                    self.accel[i]
                } else {
                    self.accel[i] + frac * (self.accel[i + 1] - self.accel[i])
                }
            })
            .collect();
        Self::new(self.name.clone(), new_dt, accel)
    }

    /// Writes the record as two-column CSV with round-trip float formatting.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# {}", self.name)?;
        for (i, a) in self.accel.iter().enumerate() {
            writeln!(out, "{:?},{:?}", i as f64 * self.dt, a)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordFormat {
    #[serde(alias = "csv")]
    TwoColumnCsv,
    #[serde(alias = "at2")]
    PeerAt2,
}

impl FromStr for RecordFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" | "two-column-csv" => Ok(Self::TwoColumnCsv),
            "at2" | "peer-at2" => Ok(Self::PeerAt2),
            other => Err(Error::invalid(format!("unknown record format '{other}'"))),
        }
    }
}

impl fmt::Display for RecordFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::TwoColumnCsv => "two-column-csv",
            Self::PeerAt2 => "peer-at2",
        })
    }
}

pub fn parse_record<R: BufRead>(
    source: R,
    format: RecordFormat,
    name: &str,
) -> Result<GroundMotionRecord> {
    match format {
        RecordFormat::TwoColumnCsv => parse_csv(source, name),
        RecordFormat::PeerAt2 => parse_at2(source),
    }
}

fn parse_number(text: &str, line: usize, what: &str) -> Result<f64> {
    let value: f64 = text
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("{what} '{}' is not a number", text.trim())))?;
    if !value.is_finite() {
        return Err(Error::parse(line, format!("{what} is not finite")));
    }
    Ok(value)
}

fn parse_csv<R: BufRead>(source: R, name: &str) -> Result<GroundMotionRecord> {
    let mut times: Vec<f64> = Vec::new();
    let mut accel = Vec::new();
    let mut dt = 0.0;
    let mut last_line = 0;
    for (idx, line) in source.lines().enumerate() {
        let lineno = idx + 1;
        last_line = lineno;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut cols = trimmed.split(',');
        let (Some(t), Some(a), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(Error::parse(lineno, "expected two comma-separated columns"));
        };
        let t = parse_number(t, lineno, "time")?;
        let a = parse_number(a, lineno, "acceleration")?;
        match times.len() {
            0 => {}
            1 => {
                dt = t - times[0];
                if dt <= 0.0 {
                    return Err(Error::parse(lineno, "time column is not increasing"));
                }
            }
            _ => {
                let step = t - times[times.len() - 1];
                if step <= 0.0 {
                    return Err(Error::parse(lineno, "time column is not increasing"));
                }
                if (step - dt).abs() > 1e-6 * dt {
                    return Err(Error::parse(
                        lineno,
                        format!("non-uniform time step {step} (expected {dt})"),
                    ));
                }
            }
        }
        times.push(t);
        accel.push(a);
    }
    if accel.len() < 2 {
        return Err(Error::parse(last_line, "a record needs at least 2 samples"));
    }
    GroundMotionRecord::new(name, dt, accel)
}

/// Extracts NPTS and DT from the fourth AT2 header line. Both the NGA-West
/// style (`NPTS=  4000, DT=   .0100 SEC`) and the older positional style
/// (`4000   .0100   NPTS, DT`) are accepted.
fn parse_at2_dims(line: &str, lineno: usize) -> Result<(usize, f64)> {
    let upper = line.to_ascii_uppercase();
    let field = |key: &str| -> Option<&str> {
        let start = upper.find(key)? + key.len();
        let rest = upper[start..].trim_start().strip_prefix('=')?.trim_start();
        let end = rest
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | 'E' | '+' | '-')))
            .unwrap_or(rest.len());
        Some(&rest[..end])
    };
    let (npts, dt) = match (field("NPTS"), field("DT")) {
        (Some(n), Some(d)) => (n.to_string(), d.to_string()),
        _ => {
            let mut toks = upper.split(|c: char| c.is_whitespace() || c == ',');
            let toks: Vec<&str> = toks.by_ref().filter(|t| !t.is_empty()).collect();
            if toks.len() < 2 {
                return Err(Error::parse(lineno, "header is missing NPTS and DT"));
            }
            (toks[0].to_string(), toks[1].to_string())
        }
    };
    let npts: usize = npts
        .parse()
        .map_err(|_| Error::parse(lineno, format!("NPTS '{npts}' is not an integer")))?;
    let dt = parse_number(&dt, lineno, "DT")?;
    if dt <= 0.0 {
        return Err(Error::parse(lineno, "DT must be positive"));
    }
    Ok((npts, dt))
}

fn parse_at2<R: BufRead>(source: R) -> Result<GroundMotionRecord> {
    let mut lines = source.lines();
    let mut header = Vec::with_capacity(4);
    for lineno in 1..=4 {
        match lines.next() {
            Some(line) => header.push(line?),
            None => return Err(Error::parse(lineno, "truncated AT2 header")),
        }
    }
    let (npts, dt) = parse_at2_dims(&header[3], 4)?;
    let mut accel = Vec::with_capacity(npts);
    let mut lineno = 4;
    for line in lines {
        lineno += 1;
        let line = line?;
        for tok in line.split_whitespace() {
            accel.push(parse_number(tok, lineno, "sample")? * GRAVITY);
        }
    }
    if accel.len() != npts {
        return Err(Error::parse(
            lineno,
            format!("header declares {npts} samples, found {}", accel.len()),
        ));
    }
    GroundMotionRecord::new(header[1].trim(), dt, accel)
}

/// Kanai–Tajimi filtered white noise under a trapezoidal-exponential
/// envelope, scaled to a target peak ground acceleration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticMotion {
    pub duration: f64,
    pub dt: f64,
    pub peak_accel: f64,
    /// Filter frequency, rad/s.
    pub ground_frequency: f64,
    pub ground_damping: f64,
    pub rise_time: f64,
    pub strong_motion_end: f64,
    pub decay_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticMotion {
    /// Filter constants commonly fitted to the 1940 El Centro NS component,
    /// 31.18 s at 0.02 s, peak 3.13 m/s².
    fn default() -> Self {
        Self {
            duration: 31.18,
            dt: 0.02,
            peak_accel: 3.13,
            ground_frequency: 15.6,
            ground_damping: 0.6,
            rise_time: 1.5,
            strong_motion_end: 10.0,
            decay_rate: 0.25,
            seed: 1940,
        }
    }
}

impl SyntheticMotion {
    fn envelope(&self, t: f64) -> f64 {
        if t < self.rise_time {
            (t / self.rise_time).powi(2)
        } else if t <= self.strong_motion_end {
            1.0
        } else {
            (-self.decay_rate * (t - self.strong_motion_end)).exp()
        }
    }

    pub fn generate(&self) -> Result<GroundMotionRecord> {
        if !(self.dt > 0.0 && self.duration > self.dt) {
            return Err(Error::invalid("synthetic motion needs duration > dt > 0"));
        }
        const SUBSTEPS: usize = 20;
        let n = (self.duration / self.dt).round() as usize + 1;
        let h = self.dt / SUBSTEPS as f64;
        let (wg, zg) = (self.ground_frequency, self.ground_damping);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (mut x, mut v) = (0.0_f64, 0.0_f64);
        let mut accel = Vec::with_capacity(n);
        for i in 0..n {
            if i > 0 {
                for _ in 0..SUBSTEPS {
                    let w: f64 = StandardNormal.sample(&mut rng);
                    let w = w / h.sqrt();
                    v += h * (-w - 2.0 * zg * wg * v - wg * wg * x);
                    x += h * v;
                }
            }
            let t = i as f64 * self.dt;
            accel.push(-(2.0 * zg * wg * v + wg * wg * x) * self.envelope(t));
        }
        let peak = accel.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
        if peak > 0.0 {
            let s = self.peak_accel / peak;
            accel.iter_mut().for_each(|a| *a *= s);
        }
        GroundMotionRecord::new(
            format!("synthetic Kanai-Tajimi (seed {})", self.seed),
            self.dt,
            accel,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn csv(text: &str) -> Result<GroundMotionRecord> {
        parse_record(Cursor::new(text), RecordFormat::TwoColumnCsv, "t")
    }

    #[test]
    fn minimal_csv() {
        let r = csv("0.0,0.0\n0.02,1.0").unwrap();
        assert_eq!(r.dt(), 0.02);
        assert_eq!(r.accel(), &[0.0, 1.0]);
    }

    #[test]
    fn csv_comments_and_blank_lines() {
        let r = csv("# header\n\n0,1\n0.5,2\n# mid\n1.0,3\n").unwrap();
        assert_eq!(r.accel(), &[1.0, 2.0, 3.0]);
        assert_eq!(r.dt(), 0.5);
    }

    #[test]
    fn csv_errors_name_the_line() {
        let err = csv("0,0\n0.1,x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = csv("0,0\n0.1,1\n0.25,2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = csv("0,0\n0.1,1\n0.1,2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = csv("0,0,0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        assert!(csv("0,0\n").is_err());
    }

    #[test]
    fn at2_values_are_converted_from_g() {
        let text = "PEER NGA STRONG MOTION DATABASE RECORD\n\
                    IMPERIAL VALLEY 5/19/40, EL CENTRO, 180\n\
                    ACCELERATION TIME SERIES IN UNITS OF G\n\
                    NPTS=     3, DT=   .0200 SEC\n\
                      .1000E+00  -.5000E-01\n  0.0\n";
        let r = parse_record(Cursor::new(text), RecordFormat::PeerAt2, "").unwrap();
        assert_eq!(r.dt(), 0.02);
        assert_eq!(r.accel()[0], 0.1 * GRAVITY);
        assert!((r.accel()[0] - 0.981).abs() < 1e-12);
        assert_eq!(r.name(), "IMPERIAL VALLEY 5/19/40, EL CENTRO, 180");
    }

    #[test]
    fn at2_positional_header() {
        let text = "a\nb\nc\n 2   0.01   NPTS, DT\n0.1 0.2\n";
        let r = parse_record(Cursor::new(text), RecordFormat::PeerAt2, "").unwrap();
        assert_eq!(r.dt(), 0.01);
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn at2_errors() {
        let short = "a\nb\n";
        assert!(matches!(
            parse_record(Cursor::new(short), RecordFormat::PeerAt2, ""),
            Err(Error::Parse { .. })
        ));
        let bad = "a\nb\nc\nNPTS= 2, DT= .01\n0.1 zz\n";
        assert!(matches!(
            parse_record(Cursor::new(bad), RecordFormat::PeerAt2, ""),
            Err(Error::Parse { line: 5, .. })
        ));
        let count = "a\nb\nc\nNPTS= 3, DT= .01\n0.1 0.2\n";
        assert!(parse_record(Cursor::new(count), RecordFormat::PeerAt2, "").is_err());
    }

    #[test]
    fn record_invariants() {
        assert!(GroundMotionRecord::new("x", 0.0, vec![0.0, 1.0]).is_err());
        assert!(GroundMotionRecord::new("x", 0.1, vec![0.0]).is_err());
        assert!(GroundMotionRecord::new("x", 0.1, vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn resample_midpoint() {
        let r = GroundMotionRecord::new("x", 1.0, vec![0.0, 1.0]).unwrap();
        let s = r.resample(0.5).unwrap();
        assert_eq!(s.accel(), &[0.0, 0.5, 1.0]);
        assert!(r.resample(0.0).is_err());
        assert!(r.resample(-1.0).is_err());
    }

    #[test]
    fn resample_same_dt_is_identity() {
        let r = SyntheticMotion::default().generate().unwrap();
        assert_eq!(r.resample(r.dt()).unwrap(), r);
    }

    #[test]
    fn resample_sinusoid_error_bound() {
        let (f, dt, amp) = (2.0, 0.01, 1.5);
        let w = 2.0 * std::f64::consts::PI * f;
        let samples = (0..=200).map(|i| amp * (w * i as f64 * dt).sin()).collect();
        let r = GroundMotionRecord::new("sin", dt, samples).unwrap();
        let fine = r.resample(dt / 10.0).unwrap();
        let bound = (w * dt).powi(2) / 8.0 * amp;
        let max_err = fine
            .accel()
            .iter()
            .enumerate()
            .map(|(j, a)| (a - amp * (w * j as f64 * fine.dt()).sin()).abs())
            .fold(0.0, f64::max);
        assert!(max_err < bound, "{max_err} >= {bound}");
        assert_eq!(fine.len(), 2001);
    }

    #[test]
    fn synthetic_default_matches_target_peak() {
        let r = SyntheticMotion::default().generate().unwrap();
        assert_eq!(r.len(), 1560);
        assert!((r.peak_abs() - 3.13).abs() < 1e-12);
        assert_eq!(r, SyntheticMotion::default().generate().unwrap());
    }

    #[test]
    fn csv_round_trip_is_fixed_point() {
        let r = SyntheticMotion::default().generate().unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let back = parse_record(Cursor::new(&buf), RecordFormat::TwoColumnCsv, r.name()).unwrap();
        assert!((back.dt() - r.dt()).abs() <= 1e-12 * r.dt());
        for (a, b) in back.accel().iter().zip(r.accel()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
        }
        let mut buf2 = Vec::new();
        back.write_csv(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }
}
