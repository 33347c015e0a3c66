//! CSV and JSON renderings of a sweep.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::{domain, Result};
use crate::fmt::sig17;

use super::config::{OutputFormat, SweepConfig};
use super::sweep::{ConstantsReport, HalfFit, VerificationRecord};

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const FAIL: i32 = 1;
    pub const BAD_CONFIG: i32 = 2;
    pub const IO: i32 = 3;
}

fn json_num(v: f64) -> String {
    if v.is_finite() {
        sig17(v)
    } else {
        "null".to_string()
    }
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization")
}

fn half_json(h: &HalfFit) -> String {
    let side = |o: Option<f64>| o.map_or("null".to_string(), json_num);
    format!(
        "{{\"lower\":{},\"upper\":{}}}",
        side(h.lower),
        side(h.upper)
    )
}

pub fn render_csv(records: &[VerificationRecord]) -> String {
    let mut out = String::from("n,k,check,passed,slack\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.n,
            r.k,
            r.check_name,
            r.passed,
            sig17(r.slack)
        );
    }
    out
}

pub fn render_json(
    records: &[VerificationRecord],
    constants: &ConstantsReport,
    config: &SweepConfig,
) -> String {
    let mut out = String::from("{\n  \"meta\": {\n    \"config\": {");
    let cfg: Vec<String> = config
        .describe()
        .into_iter()
        .map(|(k, v)| format!("{}: {}", json_str(&k), json_str(&v)))
        .collect();
    out.push_str(&cfg.join(", "));
    let _ = write!(
        out,
        "}},\n    \"versions\": {{\"{}\": \"{}\"}}\n  }},\n  \"records\": [\n",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION")
    );
    for (i, r) in records.iter().enumerate() {
        let _ = writeln!(
            out,
            "    {{\"n\": {}, \"k\": {}, \"check\": {}, \"passed\": {}, \"slack\": {}}}{}",
            r.n,
            r.k,
            json_str(r.check_name),
            r.passed,
            json_num(r.slack),
            if i + 1 < records.len() { "," } else { "" }
        );
    }
    let c = constants;
    let _ = write!(
        out,
        "  ],\n  \"constants\": {{\"c_thm1\": {}, \"c_thm2\": {}, \"c1\": {}, \"c2\": {}, \"c3\": {}, \
         \"c4\": {}, \"c_coupling\": {}, \"stability_ratio\": {}, \"thm1_halves\": {}, \
         \"thm2_halves\": {}, \"coupling_halves\": {}}}\n}}\n",
        json_num(c.c_thm1),
        json_num(c.c_thm2),
        json_num(c.c1),
        json_num(c.c2),
        json_num(c.c3),
        json_num(c.c4),
        json_num(c.c_coupling),
        json_num(c.stability_ratio),
        half_json(&c.thm1_halves),
        half_json(&c.thm2_halves),
        half_json(&c.coupling_halves),
    );
    out
}

/// Writes the report in the requested format.
pub fn emit_report(
    out: &mut dyn Write,
    records: &[VerificationRecord],
    constants: &ConstantsReport,
    config: &SweepConfig,
    format: OutputFormat,
) -> Result<()> {
    if records.is_empty() {
        return Err(domain("no records to report"));
    }
    let text = match format {
        OutputFormat::Csv => render_csv(records),
        OutputFormat::Json => render_json(records, constants, config),
    };
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

/// Exit code for a finished sweep.
pub fn exit_code(records: &[VerificationRecord]) -> i32 {
    if records.iter().all(|r| r.passed) {
        exit::PASS
    } else {
        exit::FAIL
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (Vec<VerificationRecord>, ConstantsReport) {
        let r = VerificationRecord {
            n: 28,
            k: 20,
            check_name: "eq11_lower",
            passed: true,
            slack: 0.125,
            payload: None,
        };
        let h = HalfFit {
            lower: Some(1.0),
            upper: None,
        };
        let c = ConstantsReport {
            c_thm1: 1.0,
            c_thm2: 2.0,
            c1: 0.5,
            c2: 0.25,
            c3: 0.75,
            c4: 1.0,
            c_coupling: 1.5,
            stability_ratio: 1.0,
            thm1_halves: h,
            thm2_halves: h,
            coupling_halves: h,
        };
        (vec![r], c)
    }

    #[test]
    fn csv_rows() {
        let (r, _) = sample();
        assert_eq!(
            render_csv(&r),
            "n,k,check,passed,slack\n28,20,eq11_lower,true,1.2500000000000000e-1\n"
        );
    }

    #[test]
    fn json_parses() {
        let (r, c) = sample();
        let text = render_json(&r, &c, &SweepConfig::default());
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["records"][0]["check"], "eq11_lower");
        assert_eq!(v["constants"]["c2"], 0.25);
        assert!(v["constants"]["thm1_halves"]["upper"].is_null());
        assert!(v["meta"]["config"]["n_values"]
            .as_str()
            .unwrap()
            .starts_with("28,29"));
        assert!(v["meta"]["versions"].is_object());
    }

    #[test]
    fn empty_is_rejected() {
        let (_, c) = sample();
        let mut sink = Vec::new();
        assert!(emit_report(
            &mut sink,
            &[],
            &c,
            &SweepConfig::default(),
            OutputFormat::Csv
        )
        .is_err());
    }

    #[test]
    fn exit_codes() {
        let (mut r, _) = sample();
        assert_eq!(exit_code(&r), exit::PASS);
        r[0].passed = false;
        assert_eq!(exit_code(&r), exit::FAIL);
    }
}
