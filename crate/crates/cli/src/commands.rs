use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use epiflow_core::diagnostics::{
    convexity_probe, diff_quotient_check, evi_check, evi_dictionary, exp_decay_check, identity_check,
    oracle_agreement, positivity_certificate, regression_profiles, slope_decay_check, Certificate,
    CertificateKind,
};
use epiflow_core::flow::{evolve, InitialProfile, Trajectory};
use epiflow_core::io::{read_checkpoint, write_checkpoint, write_csv, write_json, TrajectoryRecord};
use epiflow_core::oracle::QuadratureSpec;
use epiflow_core::{energy, EpiError, Profile};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{load, Loaded};
use crate::CliError;

pub const EXIT_PASS: u8 = 0;
pub const EXIT_CERTIFICATE: u8 = 1;

#[derive(Serialize)]
struct RunReport<'a> {
    config_hash: &'a str,
    status: &'static str,
    aborted: Option<&'a str>,
    steps: usize,
    t_reached: f64,
    stopped_on_slope: bool,
    certificates: Vec<Certificate>,
    /// The only non-deterministic field; always last.
    generated_at_unix: u64,
}

#[derive(Serialize)]
struct CheckReport<'a> {
    config_hash: &'a str,
    status: &'static str,
    certificates: Vec<Certificate>,
    generated_at_unix: u64,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn print_certificates(label: &str, certs: &[Certificate]) {
    for c in certs {
        println!(
            "{label}: {:?} {} (worst margin {:.3e}, tolerance {:.1e})",
            c.kind,
            if c.pass { "PASS" } else { "FAIL" },
            c.worst_margin,
            c.tolerance
        );
    }
}

fn certify(l: &Loaded, tr: &Trajectory) -> Result<Vec<Certificate>, CliError> {
    let p = &l.params;
    let q = QuadratureSpec::reference();
    let mut out = Vec::new();
    for kind in &l.config.certificates {
        let c = match kind {
            CertificateKind::Evi => {
                let dict = evi_dictionary(&l.grid, p, l.config.check.evi_profiles, l.config.check.seed)
                    .map_err(runtime)?;
                evi_check(tr, &dict, p).map_err(runtime)?
            }
            CertificateKind::SlopeDecay => slope_decay_check(tr, p),
            CertificateKind::ExpDecay => exp_decay_check(tr, p),
            CertificateKind::Positivity => positivity_certificate(tr, p),
            CertificateKind::DiffQuotient => diff_quotient_check(tr),
            CertificateKind::Identity => identity_check(&l.u0, p, &q).map_err(runtime)?,
            CertificateKind::ConvexityProbe => {
                convexity_probe(&l.grid, p, l.config.check.convexity_triples, l.config.check.seed)
                    .map_err(runtime)?
            }
            CertificateKind::OracleAgreement => {
                let mut profiles = vec![l.u0.clone()];
                profiles.extend(tr.checkpoints.iter().map(|c| c.profile.clone()));
                oracle_agreement(&profiles, p, &q)
            }
        };
        out.push(c);
    }
    Ok(out)
}

/// Runs one config to completion and writes its artifacts.
pub fn run_loaded(l: &Loaded) -> Result<u8, CliError> {
    let tr = evolve(&l.u0, &l.schedule, &l.params).map_err(|e| match e {
        EpiError::InvalidParameter(_) | EpiError::InvalidGrid(_) => CliError::Input(e.to_string()),
        _ => runtime(e),
    })?;
    fs::create_dir_all(l.out_dir.join("checkpoints")).map_err(runtime)?;

    let mut csv = Vec::new();
    write_csv(&mut csv, &tr.samples).map_err(runtime)?;
    fs::write(l.out_dir.join("trajectory.csv"), csv).map_err(runtime)?;
    for (i, cp) in tr.checkpoints.iter().enumerate() {
        let path = l.out_dir.join("checkpoints").join(format!("checkpoint_{i:03}.json"));
        write_checkpoint(&path, &cp.profile, l.params.a, cp.t).map_err(runtime)?;
    }
    write_json(&l.out_dir.join("trajectory.json"), &TrajectoryRecord::from_trajectory(&tr)).map_err(runtime)?;

    let certificates = certify(l, &tr)?;
    let all_pass = certificates.iter().all(|c| c.pass);
    let status = match (&tr.aborted, all_pass) {
        (Some(_), _) => "aborted",
        (None, true) => "pass",
        (None, false) => "certificate_failure",
    };
    let report = RunReport {
        config_hash: &l.hash,
        status,
        aborted: tr.aborted.as_deref(),
        steps: tr.samples.len().saturating_sub(1),
        t_reached: tr.samples.last().map_or(0.0, |s| s.t),
        stopped_on_slope: tr.stopped_on_slope,
        certificates,
        generated_at_unix: now(),
    };
    write_json(&l.out_dir.join("report.json"), &report).map_err(runtime)?;

    let label = l.out_dir.display().to_string();
    println!(
        "{label}: {} steps to t = {}, config {}",
        report.steps,
        report.t_reached,
        &l.hash[..16]
    );
    print_certificates(&label, &report.certificates);
    if let Some(why) = &tr.aborted {
        return Err(CliError::Runtime(format!("{why} (partial outputs in {label})")));
    }
    Ok(if all_pass { EXIT_PASS } else { EXIT_CERTIFICATE })
}

pub fn run(path: &Path) -> Result<u8, CliError> {
    run_loaded(&load(path)?)
}

/// Stateless suites: identities, convexity probe, quadrature agreement.
pub fn check(path: &Path) -> Result<u8, CliError> {
    let l = load(path)?;
    let p = &l.params;
    let q = QuadratureSpec::reference();
    let c = &l.config.check;

    // Random inputs stay well resolved (ln v is not band-limited, so the
    // flux identity only holds to truncation error on coarse grids).
    let max_modes = (l.grid.n() / 32).max(1);
    let mut identity_inputs = vec![l.u0.clone(), Profile::zeros(&l.grid)];
    for i in 0..c.identity_profiles {
        let u = InitialProfile::Random {
            seed: c.seed.wrapping_add(i as u64),
            modes: 1 + i % max_modes,
            amplitude: 0.3,
        }
        .build(&l.grid, p)
        .map_err(runtime)?;
        identity_inputs.push(u);
    }
    let mut identity = None::<Certificate>;
    for u in &identity_inputs {
        let cert = identity_check(u, p, &q).map_err(runtime)?;
        if identity.as_ref().is_none_or(|w| cert.worst_margin > w.worst_margin) {
            identity = Some(cert);
        }
    }
    let mut certificates: Vec<Certificate> = identity.into_iter().collect();
    certificates.push(convexity_probe(&l.grid, p, c.convexity_triples, c.seed).map_err(runtime)?);
    let mut profiles = regression_profiles(&l.grid, p).map_err(runtime)?;
    profiles.push(l.u0.clone());
    certificates.push(oracle_agreement(&profiles, p, &q));

    let all_pass = certificates.iter().all(|c| c.pass);
    fs::create_dir_all(&l.out_dir).map_err(runtime)?;
    let report = CheckReport {
        config_hash: &l.hash,
        status: if all_pass { "pass" } else { "certificate_failure" },
        certificates,
        generated_at_unix: now(),
    };
    write_json(&l.out_dir.join("check.json"), &report).map_err(runtime)?;
    print_certificates(&l.out_dir.display().to_string(), &report.certificates);
    Ok(if all_pass { EXIT_PASS } else { EXIT_CERTIFICATE })
}

/// Prints the energy report of a checkpoint as JSON.
pub fn energy_of(path: &Path) -> Result<u8, CliError> {
    let input = |e: EpiError| CliError::Input(format!("{}: {e}", path.display()));
    let rec = read_checkpoint(path).map_err(input)?;
    let u = rec.profile().map_err(input)?;
    let p = rec.params().map_err(input)?;
    let report = energy(&u, &p);
    println!("{}", serde_json::to_string_pretty(&report).map_err(runtime)?);
    Ok(EXIT_PASS)
}

/// Runs every `*.json` config in a directory on the rayon pool.
pub fn sweep(dir: &Path) -> Result<u8, CliError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Input(format!("{}: no *.json configs", dir.display())));
    }
    let loaded = paths
        .iter()
        .map(|p| load(p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut seen = BTreeSet::new();
    for l in &loaded {
        if !seen.insert(l.out_dir.clone()) {
            return Err(CliError::Input(format!(
                "two configs share output directory {}",
                l.out_dir.display()
            )));
        }
    }
    let codes: Vec<u8> = loaded
        .par_iter()
        .map(|l| match run_loaded(l) {
            Ok(code) => code,
            Err(e) => {
                eprintln!("{}: error: {e}", l.out_dir.display());
                e.code()
            }
        })
        .collect();
    // Worst outcome wins: input error, then abort, then certificate failure.
    Ok([2, 3, 1].into_iter().find(|c| codes.contains(c)).unwrap_or(EXIT_PASS))
}
