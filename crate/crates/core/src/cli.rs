//! Command handlers behind the `bellforge` binary.
//!
//! Exit codes: `0` success, `1` semantic negative (an inequality violated at
//! a vertex, a rejected certificate, a failed check suite), `2` usage or IO
//! errors, `3` proof search exhausted.

use std::fmt::Write as _;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::catalog::{
    find_entry, load_catalog, load_certificate, load_config, save_catalog, save_certificate,
    CatalogEntry, CatalogError,
};
use crate::expr::{rat, BellExpression, BoxPoint, Builtin, ExprError, Form};
use crate::lhv::{
    i2_zero_theta_form, lhv_value, rearrangement_bounds, sample_lhv, vertex_max, LhvError,
    RearrangeKind,
};
use crate::optimize::{table_row, OptimizeError, OptimizerConfig};
use crate::proof::{default_depth, search, verify, ProofError};
use crate::quantum::{probabilities, quantum_value, Projector, QuantumError, QuantumModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SEARCH_FAILED: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Lhv(#[from] LhvError),
    #[error(transparent)]
    Proof(#[from] ProofError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Write the k-settings chain inequality as a one-entry catalog.
pub fn cmd_gen(k: usize, out: &Path) -> Result<i32, CliError> {
    let expr = BellExpression::gen_ikk(k)?;
    let entry = CatalogEntry {
        name: format!("I{k}{k}"),
        expr,
        provenance: format!("built-in chain family, k = {k}"),
    };
    save_catalog(out, &[entry])?;
    println!("wrote I{k}{k} to {}", out.display());
    Ok(EXIT_OK)
}

/// Certify the local bound of a catalog entry by exact vertex enumeration,
/// or, with a certificate file, re-check a decomposition proof against it.
pub fn cmd_verify(catalog: &Path, name: &str, cert: Option<&Path>) -> Result<i32, CliError> {
    let entries = load_catalog(catalog)?;
    let entry = find_entry(&entries, name)?;
    let algebraic = match entry.expr.form() {
        Form::Algebraic => entry.expr.clone(),
        Form::Probability => entry.expr.to_algebraic_form()?,
    };

    if let Some(cert_path) = cert {
        let cert = load_certificate(cert_path, algebraic.m(), algebraic.n())?;
        return match verify(&algebraic, &cert) {
            Ok(()) => {
                println!(
                    "{name}: certificate accepted (depth {}, {} leaves); proves local bound <= 0",
                    cert.depth(),
                    cert.leaf_count()
                );
                Ok(EXIT_OK)
            }
            Err(ProofError::Rejected { path, reason }) => {
                println!("{name}: certificate rejected at {path}: {reason}");
                Ok(EXIT_NEGATIVE)
            }
            Err(e) => Err(e.into()),
        };
    }

    let one = rat(1);
    let (max, strategy) = vertex_max(&algebraic, &one, &one)?;
    if max > rat(0) {
        println!("{name}: violated, vertex max {max} at {strategy}");
        Ok(EXIT_NEGATIVE)
    } else {
        println!("{name}: valid, local bound {max}; max at {strategy}");
        Ok(EXIT_OK)
    }
}

/// Search for a decomposition proof and write the certificate file.
pub fn cmd_prove(catalog: &Path, name: &str, out: &Path) -> Result<i32, CliError> {
    let entries = load_catalog(catalog)?;
    let entry = find_entry(&entries, name)?;
    let algebraic = match entry.expr.form() {
        Form::Algebraic => entry.expr.clone(),
        Form::Probability => entry.expr.to_algebraic_form()?,
    };
    match search(&algebraic, default_depth(&algebraic))? {
        Some(cert) => {
            save_certificate(out, &cert)?;
            println!(
                "{name}: certificate found, depth {}, {} leaves; wrote {}",
                cert.depth(),
                cert.leaf_count(),
                out.display()
            );
            Ok(EXIT_OK)
        }
        None => {
            println!(
                "{name}: no certificate found within depth {}",
                default_depth(&algebraic)
            );
            Ok(EXIT_SEARCH_FAILED)
        }
    }
}

fn fmt_cell(v: Option<f64>) -> String {
    match v {
        // `+ 0.0` normalizes negative zero.
        Some(v) => format!("{:.4}", v + 0.0),
        None => "-".to_string(),
    }
}

/// Maximize every catalog entry and write a tab-separated report. Values are
/// fixed to four decimals; undefined cells print `-`.
pub fn cmd_table(catalog: &Path, config: Option<&Path>, out: &Path) -> Result<i32, CliError> {
    let entries = load_catalog(catalog)?;
    let config = match config {
        Some(p) => load_config(p)?,
        None => OptimizerConfig::default(),
    };
    config.validate()?;

    let mut text = String::from("name\tQ\ttheta/pi\tlambda_max\tQ_a\ttheta_a/pi\tlambda_a\n");
    for entry in &entries {
        let row = table_row(&entry.expr, true, &config)?;
        let lambda = if row.q > 0.0 { row.lambda_max } else { None };
        let (qa, ta, la) = match &row.alt {
            Some(alt) => (
                Some(alt.q),
                Some(alt.theta_over_pi),
                if alt.q > 0.0 { alt.lambda_max } else { None },
            ),
            None => (None, None, None),
        };
        let _ = writeln!(
            text,
            "{}\t{:.4}\t{:.4}\t{}\t{}\t{}\t{}",
            entry.name,
            row.q,
            row.theta_over_pi,
            fmt_cell(lambda),
            fmt_cell(qa),
            fmt_cell(ta),
            fmt_cell(la),
        );
    }
    std::fs::write(out, &text).map_err(|e| CliError::Io {
        path: out.display().to_string(),
        source: e,
    })?;
    println!("wrote {} rows to {}", entries.len(), out.display());
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Rearrange,
    LhvChain,
    QuantumSanity,
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "REARRANGE" => Ok(Suite::Rearrange),
            "LHV_CHAIN" => Ok(Suite::LhvChain),
            "QUANTUM_SANITY" => Ok(Suite::QuantumSanity),
            other => Err(format!(
                "unknown suite `{other}` (expected REARRANGE, LHV_CHAIN, or QUANTUM_SANITY)"
            )),
        }
    }
}

/// Run one of the randomized property suites.
pub fn cmd_check(suite: Suite, trials: u64, seed: u64) -> Result<i32, CliError> {
    if trials < 1 {
        return Err(CliError::Usage("trials must be >= 1".into()));
    }
    let failures = match suite {
        Suite::Rearrange => check_rearrange(trials, seed),
        Suite::LhvChain => check_lhv_chain(trials, seed),
        Suite::QuantumSanity => check_quantum_sanity(trials, seed),
    }?;
    let name = match suite {
        Suite::Rearrange => "REARRANGE",
        Suite::LhvChain => "LHV_CHAIN",
        Suite::QuantumSanity => "QUANTUM_SANITY",
    };
    println!("{name}: {} / {trials} trials passed", trials - failures);
    Ok(if failures == 0 {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    })
}

fn check_rearrange(trials: u64, seed: u64) -> Result<u64, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..trials {
        let a = rng.gen_range(0.5..2.0);
        let b = rng.gen_range(0.5..2.0);
        let p2 = BoxPoint::new(
            (0..2).map(|_| rng.gen_range(0.0..=a)).collect(),
            (0..2).map(|_| rng.gen_range(0.0..=b)).collect(),
            a,
            b,
        )?;
        let (i2, i20) = rearrangement_bounds(RearrangeKind::K2, &p2)?;
        let closed = i2_zero_theta_form(&p2)?;
        let p3 = BoxPoint::new(
            (0..3).map(|_| rng.gen_range(0.0..=a)).collect(),
            (0..3).map(|_| rng.gen_range(0.0..=b)).collect(),
            a,
            b,
        )?;
        let (i3, i30) = rearrangement_bounds(RearrangeKind::K3, &p3)?;
        let ok = i2 <= i20 + 1e-12
            && i20 <= 1e-12
            && (i20 - closed).abs() <= 1e-12
            && i3 <= i30 + 1e-12
            && i30 <= 1e-12;
        if !ok {
            failures += 1;
        }
    }
    Ok(failures)
}

fn check_lhv_chain(trials: u64, seed: u64) -> Result<u64, CliError> {
    let ch = BellExpression::builtin(Builtin::ChProb);
    let mut failures = 0;
    for t in 0..trials {
        let model = sample_lhv(2, 2, 1 + (t % 6) as usize, seed.wrapping_add(t));
        let value = lhv_value(&ch, &model)?;
        let e = model.joint(0, 0) - model.joint(0, 1) - model.joint(1, 0) + model.joint(1, 1);
        let bound = -(e + e.abs()) / 2.0;
        let ok = value <= bound + 1e-12 && bound <= 1e-12;
        if !ok {
            failures += 1;
        }
    }
    Ok(failures)
}

fn check_quantum_sanity(trials: u64, seed: u64) -> Result<u64, CliError> {
    use std::f64::consts::{FRAC_PI_2, PI};
    let ch = BellExpression::builtin(Builtin::ChProb);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..trials {
        let mk = |rng: &mut ChaCha8Rng| {
            Projector::new(rng.gen_range(0.0..PI), rng.gen_range(0.0..2.0 * PI))
        };
        let model = QuantumModel::new(
            rng.gen_range(0.0..FRAC_PI_2),
            vec![mk(&mut rng), mk(&mut rng)],
            vec![mk(&mut rng), mk(&mut rng)],
            rng.gen_range(0.0..=1.0),
        )?;
        let t = probabilities(&model);
        let mut ok = true;
        for i in 0..2 {
            for j in 0..2 {
                let mut comp = model.clone();
                comp.proj_y[j] = comp.proj_y[j].complement();
                let tc = probabilities(&comp);
                ok &= (t.pxy[i][j] + tc.pxy[i][j] - t.px[i]).abs() < 1e-12;
                ok &= t.pxy[i][j] <= t.px[i].min(t.py[j]) + 1e-12;
            }
        }
        // Affinity in the noise weight.
        let v1 = quantum_value(&ch, &model.with_noise(1.0)?)?;
        let v0 = quantum_value(&ch, &model.with_noise(0.0)?)?;
        let l = rng.gen_range(0.0..=1.0);
        let v = quantum_value(&ch, &model.with_noise(l)?)?;
        ok &= (v - (l * v1 + (1.0 - l) * v0)).abs() < 1e-12;
        // Product states never violate.
        let mut sep = model.clone();
        sep.theta = if rng.gen() { 0.0 } else { FRAC_PI_2 };
        ok &= quantum_value(&ch, &sep)? <= 1e-9;
        if !ok {
            failures += 1;
        }
    }
    Ok(failures)
}
