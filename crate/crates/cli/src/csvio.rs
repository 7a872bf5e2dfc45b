//! CSV schemas. Every file has a header row; reals are written with 17
//! significant digits.

use std::collections::{BTreeMap, BTreeSet};

use u2v_core::channel::{CirSnapshot, PathSnapshot, RaySnapshot};
use u2v_core::io::fmt_f64;
use u2v_core::kinematics::AngleSet;
use u2v_core::scene::{PathKind, LOS_PATH_ID};
use u2v_core::synth::RayRecord;

use crate::error::{CliError, CliResult};

pub const RAY_HEADER: [&str; 9] = [
    "channel_id",
    "path_id",
    "delay_s",
    "power_db",
    "aaoa",
    "eaoa",
    "aaod",
    "eaod",
    "los",
];

pub const CIR_HEADER: [&str; 11] = [
    "t", "pair", "path_id", "ray_id", "delay_s", "power_db", "aaod", "eaod", "aaoa", "eaoa", "phase_rad",
];

pub const OFFSET_HEADER: [&str; 4] = ["channel_id", "cluster", "d_azimuth", "d_elevation"];

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> CliResult<Vec<u8>> {
    w.into_inner().map_err(|e| CliError::input(format!("csv: {e}")))
}

/// Generic numeric table.
pub fn table_to_csv(header: &[&str], rows: &[Vec<f64>]) -> CliResult<Vec<u8>> {
    let mut w = writer();
    w.write_record(header)?;
    for r in rows {
        if r.len() != header.len() {
            return Err(CliError::input("row width differs from header"));
        }
        w.write_record(r.iter().map(|&x| fmt_f64(x)))?;
    }
    finish(w)
}

pub fn rays_to_csv(records: &[RayRecord]) -> CliResult<Vec<u8>> {
    let mut w = writer();
    w.write_record(RAY_HEADER)?;
    for r in records {
        w.write_record([
            r.channel_id.to_string(),
            r.path_id.to_string(),
            fmt_f64(r.delay),
            fmt_f64(r.power_db),
            fmt_f64(r.aaoa),
            fmt_f64(r.eaoa),
            fmt_f64(r.aaod),
            fmt_f64(r.eaod),
            u8::from(r.los).to_string(),
        ])?;
    }
    finish(w)
}

fn reader<'a>(text: &'a str, header: &[&str], what: &str) -> CliResult<csv::Reader<&'a [u8]>> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(CliError::input(format!(
            "{what}: expected columns {}, found {}",
            header.join(","),
            found.join(",")
        )));
    }
    Ok(r)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize, name: &str) -> CliResult<T> {
    rec.get(i)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| CliError::input(format!("line {line}: column `{name}` is not a valid number")))
}

pub fn rays_from_csv(text: &str) -> CliResult<Vec<RayRecord>> {
    let mut r = reader(text, &RAY_HEADER, "ray records")?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let f = |k: usize| field::<f64>(&rec, k, line, RAY_HEADER[k]);
        let los: u8 = field(&rec, 8, line, "los")?;
        if los > 1 {
            return Err(CliError::input(format!("line {line}: column `los` must be 0 or 1")));
        }
        let r = RayRecord {
            channel_id: field(&rec, 0, line, "channel_id")?,
            path_id: field(&rec, 1, line, "path_id")?,
            delay: f(2)?,
            power_db: f(3)?,
            aaoa: f(4)?,
            eaoa: f(5)?,
            aaod: f(6)?,
            eaod: f(7)?,
            los: los == 1,
        };
        if ![r.delay, r.power_db, r.aaoa, r.eaoa, r.aaod, r.eaod].iter().all(|x| x.is_finite()) {
            return Err(CliError::input(format!("line {line}: non-finite value")));
        }
        out.push(r);
    }
    Ok(out)
}

/// CIR dump, time-major then pair. A snapshot without paths is one row with
/// empty path fields.
pub fn cir_to_csv(series: &[Vec<CirSnapshot>]) -> CliResult<Vec<u8>> {
    let mut w = writer();
    w.write_record(CIR_HEADER)?;
    let steps = series.first().map_or(0, Vec::len);
    for k in 0..steps {
        for s in series.iter().map(|p| &p[k]) {
            let (t, pair) = (fmt_f64(s.t), s.pair.to_string());
            if s.paths.is_empty() {
                w.write_record([t.as_str(), &pair, "", "", "", "", "", "", "", "", ""])?;
            }
            for p in &s.paths {
                for r in &p.rays {
                    let a = &r.angles;
                    w.write_record([
                        t.clone(),
                        pair.clone(),
                        p.path_id.to_string(),
                        r.ray_id.to_string(),
                        fmt_f64(p.delay),
                        fmt_f64(p.power_db),
                        fmt_f64(a.aaod),
                        fmt_f64(a.eaod),
                        fmt_f64(a.aaoa),
                        fmt_f64(a.eaoa),
                        fmt_f64(r.phase),
                    ])?;
                }
            }
        }
    }
    finish(w)
}

/// Parses a CIR dump into per-pair series. Ray identities are rebuilt: a path
/// is born at the first snapshot of each run in which it is present.
pub fn cir_from_csv(text: &str) -> CliResult<Vec<Vec<CirSnapshot>>> {
    let mut r = reader(text, &CIR_HEADER, "CIR dump")?;
    let mut series: Vec<Vec<CirSnapshot>> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let t: f64 = field(&rec, 0, line, "t")?;
        let pair: usize = field(&rec, 1, line, "pair")?;
        if pair > series.len() {
            return Err(CliError::input(format!("line {line}: pair {pair} out of order")));
        }
        if pair == series.len() {
            series.push(Vec::new());
        }
        let list = &mut series[pair];
        let new_snapshot = list.last().is_none_or(|s| s.t != t);
        if new_snapshot {
            if list.last().is_some_and(|s| s.t > t) {
                return Err(CliError::input(format!("line {line}: time goes backwards")));
            }
            list.push(CirSnapshot {
                t,
                pair,
                paths: Vec::new(),
            });
        }
        if rec.get(2).is_none_or(|s| s.trim().is_empty()) {
            continue;
        }
        let path_id: u32 = field(&rec, 2, line, "path_id")?;
        let ray_id: u32 = field(&rec, 3, line, "ray_id")?;
        let num = |k: usize| field::<f64>(&rec, k, line, CIR_HEADER[k]);
        let (delay, power_db) = (num(4)?, num(5)?);
        let ray = RaySnapshot {
            ray_id,
            angles: AngleSet {
                aaod: num(6)?,
                eaod: num(7)?,
                aaoa: num(8)?,
                eaoa: num(9)?,
            },
            phase: num(10)?,
        };
        let snap = list.last_mut().expect("snapshot pushed above");
        match snap.paths.last_mut() {
            Some(p) if p.path_id == path_id => p.rays.push(ray),
            _ => snap.paths.push(PathSnapshot {
                path_id,
                kind: if path_id == LOS_PATH_ID { PathKind::LoS } else { PathKind::NLoS },
                birth: 0,
                delay,
                power_db,
                rays: vec![ray],
            }),
        }
    }
    if series.is_empty() {
        return Err(CliError::input("CIR dump has no rows"));
    }
    let steps = series[0].len();
    if series.iter().any(|s| s.len() != steps) {
        return Err(CliError::input("CIR dump pairs have different snapshot counts"));
    }
    for list in &mut series {
        let mut prev: BTreeSet<u32> = BTreeSet::new();
        let mut births: BTreeMap<u32, u32> = BTreeMap::new();
        for (k, snap) in list.iter_mut().enumerate() {
            for p in &mut snap.paths {
                if !prev.contains(&p.path_id) {
                    births.insert(p.path_id, k as u32);
                }
                p.birth = births[&p.path_id];
            }
            prev = snap.paths.iter().map(|p| p.path_id).collect();
        }
    }
    Ok(series)
}

pub fn offsets_to_csv(rows: &[(u32, usize, f64, f64)]) -> CliResult<Vec<u8>> {
    let mut w = writer();
    w.write_record(OFFSET_HEADER)?;
    for &(ch, c, da, de) in rows {
        w.write_record([ch.to_string(), c.to_string(), fmt_f64(da), fmt_f64(de)])?;
    }
    finish(w)
}

/// One numeric column of any CSV with a header row.
pub fn read_column(text: &str, column: &str) -> CliResult<Vec<f64>> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let idx = r
        .headers()?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| CliError::input(format!("no column named `{column}`")))?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let v: f64 = field(&rec?, idx, i + 2, column)?;
        if !v.is_finite() {
            return Err(CliError::input(format!("line {}: non-finite value", i + 2)));
        }
        out.push(v);
    }
    Ok(out)
}
