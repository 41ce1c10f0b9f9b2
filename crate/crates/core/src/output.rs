//! CSV and JSON emission for sweep results.
//!
//! CSV layout (schema v1), one row per point x series x scheme:
//!
//! ```text
//! # ris-emi sweep schema v1 swept=<param>
//! swept_value,scheme,mean_sinr_db,stderr_db,op@<r1>,...,det_err_rate,trials,seed,
//!     mean_sinr_linear,n_elements,rho_db,slots_per_block,transmit_power_dbm[,op_theory@<r1>,...]
//! ```

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::montecarlo::{SweepResult, TOOL_VERSION};

pub const CSV_SCHEMA_VERSION: u32 = 1;

fn fmt_threshold(r: f64) -> String {
    format!("{r}")
}

/// Writes one or more sweeps over the same parameter and thresholds as a single CSV table.
pub fn write_sweep_csv<W: Write>(results: &[SweepResult], mut out: W) -> Result<()> {
    let first = results
        .first()
        .ok_or_else(|| Error::Config("no sweep results to write".into()))?;
    let thresholds = &first.spec.thresholds;
    if results
        .iter()
        .any(|r| r.spec.thresholds != *thresholds || r.spec.param != first.spec.param)
    {
        return Err(Error::Config("sweeps written to one table must share parameter and thresholds".into()));
    }
    let with_theory = results
        .iter()
        .flat_map(|r| &r.points)
        .flat_map(|p| &p.schemes)
        .any(|s| s.theoretical_outage.is_some());

    writeln!(out, "# ris-emi sweep schema v{CSV_SCHEMA_VERSION} swept={}", first.spec.param.name())
        .map_err(|e| Error::io("<csv>", e))?;
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["swept_value", "scheme", "mean_sinr_db", "stderr_db"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(thresholds.iter().map(|r| format!("op@{}", fmt_threshold(*r))));
    header.extend(
        [
            "det_err_rate",
            "trials",
            "seed",
            "mean_sinr_linear",
            "n_elements",
            "rho_db",
            "slots_per_block",
            "transmit_power_dbm",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    if with_theory {
        header.extend(thresholds.iter().map(|r| format!("op_theory@{}", fmt_threshold(*r))));
    }
    w.write_record(&header)?;

    for result in results {
        for point in &result.points {
            for s in &point.schemes {
                let cfg = &point.config;
                let mut row = vec![
                    point.swept_value.to_string(),
                    s.scheme.name().to_string(),
                    s.mean_sinr_db.to_string(),
                    s.stderr_db.to_string(),
                ];
                row.extend(s.outage.iter().map(|o| o.probability.to_string()));
                row.extend([
                    s.det_err_rate.to_string(),
                    s.trials.to_string(),
                    result.spec.seed.to_string(),
                    s.mean_sinr.to_string(),
                    cfg.n_elements.to_string(),
                    cfg.rho_db.map(|r| r.to_string()).unwrap_or_default(),
                    cfg.slots_per_block.to_string(),
                    cfg.transmit_power_dbm.to_string(),
                ]);
                if with_theory {
                    match &s.theoretical_outage {
                        Some(th) => row.extend(th.iter().map(|o| o.probability.to_string())),
                        None => row.extend(thresholds.iter().map(|_| String::new())),
                    }
                }
                w.write_record(&row)?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[derive(Serialize)]
struct SweepDocument<'a> {
    schema: u32,
    version: &'a str,
    results: &'a [SweepResult],
}

/// Structured document with every point's full configuration snapshot.
pub fn write_sweep_json<W: Write>(results: &[SweepResult], mut out: W) -> Result<()> {
    let doc = SweepDocument {
        schema: CSV_SCHEMA_VERSION,
        version: TOOL_VERSION,
        results,
    };
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out).map_err(|e| Error::io("<json>", e))?;
    Ok(())
}
