//! Checkpoint JSON, trajectory CSV and trajectory JSON.
//!
//! Floats are written with shortest round-trip formatting in JSON and with
//! 17 significant digits in CSV, so both reproduce the stored `f64` exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::energy::ModelParams;
use crate::error::{EpiError, Result};
use crate::flow::{Checkpoint, Sample, StepSchedule, Trajectory};
use crate::spectral::{GridSpec, Profile};

/// A profile on disk: grid size, slope `a`, time and half spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub n: usize,
    pub a: f64,
    pub t: f64,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl CheckpointRecord {
    pub fn new(u: &Profile, a: f64, t: f64) -> Self {
        Self {
            n: u.grid().n(),
            a,
            t,
            re: u.coeffs().iter().map(|c| c.re).collect(),
            im: u.coeffs().iter().map(|c| c.im).collect(),
        }
    }

    /// Rebuilds the profile on a fresh grid.
    pub fn profile(&self) -> Result<Profile> {
        let grid = GridSpec::new(self.n)?;
        self.profile_on(&grid)
    }

    pub fn profile_on(&self, grid: &std::sync::Arc<GridSpec>) -> Result<Profile> {
        if grid.n() != self.n {
            return Err(EpiError::GridMismatch {
                left: grid.n(),
                right: self.n,
            });
        }
        if self.re.len() != self.im.len() {
            return Err(EpiError::InvalidParameter(
                "checkpoint has mismatched coefficient arrays".into(),
            ));
        }
        let coeffs = self
            .re
            .iter()
            .zip(&self.im)
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect();
        Profile::from_coeffs(grid, coeffs)
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.a)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_checkpoint(path: &Path, u: &Profile, a: f64, t: f64) -> Result<()> {
    write_json(path, &CheckpointRecord::new(u, a, t))
}

pub fn read_checkpoint(path: &Path) -> Result<CheckpointRecord> {
    read_json(path)
}

pub const CSV_HEADER: &str =
    "t,E,slope,min_v,l2_u,dq_norm,excess,tau,newton_iters,uxxx_l2,lnv_x_l2,mean_ln_v,v_l2,digest";

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Trajectory rows as CSV, one line per sample.
pub fn write_csv<W: Write>(mut out: W, samples: &[Sample]) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for s in samples {
        let cols = [
            fmt17(s.t),
            fmt17(s.energy),
            fmt17(s.slope),
            fmt17(s.min_v),
            fmt17(s.l2_u),
            fmt17(s.dq_norm),
            fmt17(s.excess),
            fmt17(s.tau),
            s.newton_iters.to_string(),
            fmt17(s.uxxx_l2),
            fmt17(s.lnv_x_l2),
            fmt17(s.mean_ln_v),
            fmt17(s.v_l2),
            s.digest.clone(),
        ];
        writeln!(out, "{}", cols.join(","))?;
    }
    Ok(())
}

/// Everything certificates need, in serializable form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub params: ModelParams,
    pub n: usize,
    pub schedule: StepSchedule,
    pub samples: Vec<Sample>,
    pub checkpoints: Vec<CheckpointRecord>,
    pub states: Vec<CheckpointRecord>,
    pub aborted: Option<String>,
    pub stopped_on_slope: bool,
}

impl TrajectoryRecord {
    pub fn from_trajectory(tr: &Trajectory) -> Self {
        let a = tr.params.a;
        Self {
            params: tr.params,
            n: tr.n,
            schedule: tr.schedule.clone(),
            samples: tr.samples.clone(),
            checkpoints: tr
                .checkpoints
                .iter()
                .map(|c| CheckpointRecord::new(&c.profile, a, c.t))
                .collect(),
            states: tr
                .states
                .iter()
                .zip(&tr.samples)
                .map(|(u, s)| CheckpointRecord::new(u, a, s.t))
                .collect(),
            aborted: tr.aborted.clone(),
            stopped_on_slope: tr.stopped_on_slope,
        }
    }

    pub fn into_trajectory(self) -> Result<Trajectory> {
        let grid = GridSpec::new(self.n)?;
        let checkpoints = self
            .checkpoints
            .iter()
            .map(|c| {
                Ok(Checkpoint {
                    t: c.t,
                    profile: c.profile_on(&grid)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let states = self
            .states
            .iter()
            .map(|c| c.profile_on(&grid))
            .collect::<Result<Vec<_>>>()?;
        Ok(Trajectory {
            params: self.params,
            n: self.n,
            schedule: self.schedule,
            samples: self.samples,
            checkpoints,
            states,
            aborted: self.aborted,
            stopped_on_slope: self.stopped_on_slope,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::InitialProfile;

    #[test]
    fn checkpoint_roundtrip_is_exact() {
        let g = GridSpec::new(32).unwrap();
        let p = ModelParams::new(1.0).unwrap();
        let u = InitialProfile::Random { seed: 3, modes: 8, amplitude: 0.4 }
            .build(&g, &p)
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cp.json");
        write_checkpoint(&path, &u, 1.0, 0.25).unwrap();
        let rec = read_checkpoint(&path).unwrap();
        let back = rec.profile().unwrap();
        assert_eq!(back.coeffs(), u.coeffs());
        assert_eq!(back.values(), u.values());
        assert_eq!(rec.t, 0.25);
    }

    #[test]
    fn csv_has_header_and_exact_digits() {
        let s = Sample {
            t: 0.1,
            energy: -0.19314718055994531,
            excess: 0.0,
            slope: 0.0,
            min_v: 1.0,
            l2_u: 0.0,
            dq_norm: 0.0,
            tau: 0.1,
            newton_iters: 0,
            uxxx_l2: 0.0,
            lnv_x_l2: 0.0,
            mean_ln_v: 0.0,
            v_l2: 1.0,
            digest: "00".into(),
        };
        let mut buf = Vec::new();
        write_csv(&mut buf, &[s]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[1].parse::<f64>().unwrap(), -0.19314718055994531);
        assert_eq!(row[0], "1.0000000000000001e-1");
    }
}
