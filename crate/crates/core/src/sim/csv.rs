use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{RunResult, Sample};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "at_message,scheme,n,s,z,theta,epsilon,seed,imbalance,head_size,d,memory_units,mem_pkg,mem_sg";

/// Formats a float with 9 significant digits, `%.9g` style.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // exponent after rounding to 9 significant digits
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_fraction(&format!("{x:.decimals$}")).to_owned()
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn row(
    out: &mut impl Write,
    label: &str,
    result: &RunResult,
    sample: &Sample,
) -> std::io::Result<()> {
    let cfg = &result.config;
    let z = cfg
        .workload
        .zipf_exponent()
        .map(format_number)
        .unwrap_or_default();
    let theta = cfg.theta().unwrap_or(f64::NAN);
    writeln!(
        out,
        "{label},{},{},{},{z},{},{},{},{},{},{},{},{},{}",
        cfg.scheme,
        cfg.workers,
        cfg.sources,
        format_number(theta),
        format_number(cfg.epsilon),
        cfg.seed,
        format_number(sample.imbalance),
        sample.head_size,
        sample.d,
        sample.memory.actual,
        sample.memory.mem_pkg,
        sample.memory.mem_sg,
    )
}

fn summary_sample(result: &RunResult) -> Sample {
    Sample {
        at_message: result.messages,
        imbalance: result.final_imbalance,
        head_size: result.head_size,
        d: result.d_final.width(result.config.workers),
        memory: result.memory,
    }
}

/// Writes one header, then for each result its sample rows and a `summary`
/// row. LF line endings.
pub fn write_csv<'a, W, I>(out: W, results: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a RunResult>,
{
    let mut out = BufWriter::new(out);
    writeln!(out, "{CSV_HEADER}")?;
    for result in results {
        for sample in &result.samples {
            row(&mut out, &sample.at_message.to_string(), result, sample)?;
        }
        row(&mut out, "summary", result, &summary_sample(result))?;
    }
    out.flush()
}

pub fn emit_csv(result: &RunResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(file, [result]).map_err(|e| Error::io(path, e))
}
