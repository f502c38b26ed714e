//! CSV and JSON output files.
//!
//! Floats are written with nine significant digits in `%g` style, so files
//! produced from the same run are byte-identical across platforms.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::oracle::{GridSolution, GridSpec};
use crate::sim::{CiRow, GenerationRecord, SweepPoint, TraceRow};

/// Formats `v` like C's `%.9g`.
pub fn fmt_g9(v: f64) -> String {
    const DIGITS: i32 = 9;
    if v == 0.0 {
        return "0".into();
    }
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let fixed = format!("{:.*}", (DIGITS - 1 - exp) as usize, v);
        trim_zeros(&fixed).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_line<W: Write>(w: &mut W, fields: &[String]) -> io::Result<()> {
    writeln!(w, "{}", fields.join(","))
}

pub const GENERATIONS_HEADER: &str =
    "generation,best_fitness,mean_fitness,species_count,best_mean_sum_se,min_rate_satisfaction";

pub fn write_generations<W: Write>(mut w: W, records: &[GenerationRecord]) -> io::Result<()> {
    writeln!(w, "{GENERATIONS_HEADER}")?;
    for r in records {
        csv_line(
            &mut w,
            &[
                r.generation.to_string(),
                fmt_g9(r.best_fitness),
                fmt_g9(r.mean_fitness),
                r.species_count.to_string(),
                fmt_g9(r.best_mean_sum_se),
                fmt_g9(r.min_rate_satisfaction),
            ],
        )?;
    }
    w.flush()
}

pub fn trace_header(num_users: usize) -> String {
    let mut cols: Vec<String> = ["step", "x", "y", "h"].iter().map(|s| s.to_string()).collect();
    cols.extend((1..=num_users).map(|i| format!("alpha_{i}")));
    cols.extend((1..=num_users).map(|i| format!("se_{i}")));
    cols.push("reward".into());
    cols.join(",")
}

pub fn write_trace<W: Write>(mut w: W, num_users: usize, rows: &[TraceRow]) -> io::Result<()> {
    writeln!(w, "{}", trace_header(num_users))?;
    for r in rows {
        let mut fields = vec![r.step.to_string()];
        fields.extend(r.uav.iter().map(|&v| fmt_g9(v)));
        fields.extend(r.alpha.iter().map(|&v| fmt_g9(v)));
        fields.extend(r.se.iter().map(|&v| fmt_g9(v)));
        fields.push(fmt_g9(r.reward));
        csv_line(&mut w, &fields)?;
    }
    w.flush()
}

pub fn write_ee_curve<W: Write>(mut w: W, points: &[SweepPoint]) -> io::Result<()> {
    writeln!(w, "pt_dbm,mean_se,ee")?;
    for p in points {
        csv_line(&mut w, &[fmt_g9(p.pt_dbm), fmt_g9(p.mean_se), fmt_g9(p.ee)])?;
    }
    w.flush()
}

pub fn write_ci<W: Write>(mut w: W, rows: &[CiRow]) -> io::Result<()> {
    writeln!(
        w,
        "generation,best_fitness_mean,best_fitness_std,mean_fitness_mean,mean_fitness_std"
    )?;
    for r in rows {
        csv_line(
            &mut w,
            &[
                r.generation.to_string(),
                fmt_g9(r.best_fitness_mean),
                fmt_g9(r.best_fitness_std),
                fmt_g9(r.mean_fitness_mean),
                fmt_g9(r.mean_fitness_std),
            ],
        )?;
    }
    w.flush()
}

/// Contents of `oracle.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub feasible: bool,
    pub position: Option<[f64; 3]>,
    pub alpha: Option<Vec<f64>>,
    pub sum_se: Option<f64>,
    pub grid: GridSpec,
}

impl OracleReport {
    pub fn new(solution: Option<&GridSolution>, grid: &GridSpec) -> Self {
        Self {
            feasible: solution.is_some(),
            position: solution.map(|s| s.position),
            alpha: solution.map(|s| s.alpha.clone()),
            sum_se: solution.map(|s| s.sum_se),
            grid: grid.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("oracle report serializes")
    }
}

/// Creates `path` and hands a buffered writer to `f`.
pub fn write_file<F>(path: &Path, f: F) -> io::Result<()>
where
    F: FnOnce(BufWriter<File>) -> io::Result<()>,
{
    f(BufWriter::new(File::create(path)?))
}
