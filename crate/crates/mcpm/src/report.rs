//! CSV result tables: one fixed schema for simulated BER rows, plus the
//! coefficient, design-report, and analytic-comparison tables the CLI
//! emits. Floats are written in shortest round-trip form with a `.`
//! decimal separator, rows end in LF, optional fields serialize as empty
//! cells, and every writer's output is re-parseable by the matching
//! reader with exact value equality — regeneration is byte-stable.

use crate::simulator::{SchemeRun, SweepAxis, SweepPoint};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One simulated result: a scheme at one operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: String,
    pub k: usize,
    pub m: f64,
    pub tb_s: f64,
    pub tau_s: f64,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub detector: String,
    pub bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub ci95: f64,
    pub seed: u64,
}

impl ResultRow {
    pub fn from_run(run: &SchemeRun, tau_s: f64, seed: u64) -> Self {
        Self {
            scheme: run.cfg.token(),
            k: run.cfg.k,
            m: run.cfg.m_per_bit,
            tb_s: run.cfg.tb_s,
            tau_s,
            alpha: run.alpha,
            gamma: run.gamma,
            detector: run.detector.token().to_string(),
            bits: run.estimate.bits,
            bit_errors: run.estimate.bit_errors,
            ber: run.estimate.ber,
            ci95: run.estimate.ci95,
            seed,
        }
    }
}

/// Flatten sweep output into rows, one per (value, scheme). Budget and
/// interval sweeps already carry the swept value inside each run's
/// configuration; an offset sweep stores it in the `tau_s` column instead
/// of the base experiment's offset.
pub fn sweep_rows(
    points: &[SweepPoint],
    axis: SweepAxis,
    base_tau_s: f64,
    seed: u64,
) -> Vec<ResultRow> {
    points
        .iter()
        .flat_map(|p| {
            let tau = if axis == SweepAxis::Tau { p.value } else { base_tau_s };
            p.runs.iter().map(move |r| ResultRow::from_run(r, tau, seed))
        })
        .collect()
}

/// One channel coefficient, 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffRow {
    pub n: usize,
    pub h_n: f64,
}

/// One design-report line: a parameter pair and how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRow {
    pub scheme: String,
    pub k: usize,
    pub m: f64,
    pub tb_s: f64,
    pub method: String,
    pub alpha: f64,
    pub gamma: f64,
    /// Analytic BER predicted at this design point.
    pub predicted_ber: Option<f64>,
}

/// One analytic-vs-simulated comparison line: the simulated result schema
/// with the analytic prediction appended. Fields are spelled out because
/// the CSV serializer does not support flattened nesting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticRow {
    pub scheme: String,
    pub k: usize,
    pub m: f64,
    pub tb_s: f64,
    pub tau_s: f64,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub detector: String,
    pub bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub ci95: f64,
    pub seed: u64,
    pub analytic_ber: f64,
}

impl AnalyticRow {
    pub fn from_result(r: ResultRow, analytic_ber: f64) -> Self {
        Self {
            scheme: r.scheme,
            k: r.k,
            m: r.m,
            tb_s: r.tb_s,
            tau_s: r.tau_s,
            alpha: r.alpha,
            gamma: r.gamma,
            detector: r.detector,
            bits: r.bits,
            bit_errors: r.bit_errors,
            ber: r.ber,
            ci95: r.ci95,
            seed: r.seed,
            analytic_ber,
        }
    }
}

/// Serialize rows to CSV text (header + LF-terminated records).
pub fn to_csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for row in rows {
        wtr.serialize(row)?;
    }
    let bytes = wtr.into_inner().map_err(std::io::Error::other)?;
    String::from_utf8(bytes).map_err(|e| Error::Io(std::io::Error::other(e)))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let text = to_csv_string(rows)?;
    std::fs::write(path, text)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Parse rows back from CSV text.
pub fn from_csv_string<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in rdr.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    from_csv_string(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<ResultRow> {
        vec![
            ResultRow {
                scheme: "4-mcpm".into(),
                k: 4,
                m: 50.0,
                tb_s: 0.3,
                tau_s: 0.0,
                alpha: Some(0.7351),
                gamma: Some(24.5),
                detector: "tpcd".into(),
                bits: 120_000,
                bit_errors: 143,
                ber: 143.0 / 120_000.0,
                ci95: 0.000_21,
                seed: 7,
            },
            ResultRow {
                scheme: "bcsk".into(),
                k: 1,
                m: 50.0,
                tb_s: 0.3,
                tau_s: 0.0,
                alpha: None,
                gamma: Some(11.5),
                detector: "bcsk-threshold".into(),
                bits: 96_000,
                bit_errors: 2_310,
                ber: 2_310.0 / 96_000.0,
                ci95: 0.000_97,
                seed: 7,
            },
        ]
    }

    #[test]
    fn result_rows_round_trip_exactly() {
        let rows = sample_rows();
        let text = to_csv_string(&rows).unwrap();
        assert!(text.starts_with(
            "scheme,k,m,tb_s,tau_s,alpha,gamma,detector,bits,bit_errors,ber,ci95,seed\n"
        ));
        assert!(text.ends_with('\n'));
        assert!(!text.contains('\r'));
        // None serializes as an empty cell.
        assert!(text.contains("bcsk,1,50.0,0.3,0.0,,11.5,"));
        let back: Vec<ResultRow> = from_csv_string(&text).unwrap();
        assert_eq!(back, rows);
        // Byte stability: serializing the parse is the identity.
        assert_eq!(to_csv_string(&back).unwrap(), text);
    }

    #[test]
    fn file_round_trip_preserves_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let rows = sample_rows();
        write_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let back: Vec<ResultRow> = read_csv(&path).unwrap();
        assert_eq!(back, rows);
        write_csv(&path, &back).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
    }

    #[test]
    fn coeff_and_design_tables_serialize() {
        let coeffs = vec![
            CoeffRow { n: 1, h_n: 0.20130283601383584 },
            CoeffRow { n: 2, h_n: 0.07 },
        ];
        let text = to_csv_string(&coeffs).unwrap();
        assert!(text.starts_with("n,h_n\n"));
        // Shortest round-trip float form keeps full precision: the parsed
        // value is bit-identical, not merely close.
        let back: Vec<CoeffRow> = from_csv_string(&text).unwrap();
        assert_eq!(back, coeffs);
        assert!(text.contains("0.2013028360138358"));

        let designs = vec![DesignRow {
            scheme: "4-mcpm".into(),
            k: 4,
            m: 50.0,
            tb_s: 0.3,
            method: "theoretical".into(),
            alpha: 0.74,
            gamma: 24.5,
            predicted_ber: None,
        }];
        let text = to_csv_string(&designs).unwrap();
        assert!(text.starts_with("scheme,k,m,tb_s,method,alpha,gamma,predicted_ber\n"));
        let back: Vec<DesignRow> = from_csv_string(&text).unwrap();
        assert_eq!(back, designs);
    }

    #[test]
    fn analytic_rows_flatten_the_result_schema() {
        let rows = vec![AnalyticRow::from_result(sample_rows().remove(0), 1.1e-3)];
        let text = to_csv_string(&rows).unwrap();
        assert!(text.starts_with(
            "scheme,k,m,tb_s,tau_s,alpha,gamma,detector,bits,bit_errors,ber,ci95,seed,analytic_ber\n"
        ));
        let back: Vec<AnalyticRow> = from_csv_string(&text).unwrap();
        assert_eq!(back, rows);
    }
}
