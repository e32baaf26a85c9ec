//! Field snapshots and report files.
//!
//! A field snapshot is a JSON object `{"K": int, "real": bool, "coeffs":
//! [[re, im], ...]}` with coefficients ordered k = −K..K. Doubles are emitted
//! in shortest round-trip decimal form, so write→read reproduces every
//! coefficient bit-for-bit. All writers go through a temp-file-plus-rename so
//! a failed run never leaves a partial file behind.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::ConvergenceReport;
use crate::spectral::{GridSpec, SpectralField};

#[derive(Serialize, Deserialize)]
struct FieldSnapshot {
    #[serde(rename = "K")]
    max_mode: usize,
    real: bool,
    coeffs: Vec<[f64; 2]>,
}

/// Serialize a field to the snapshot JSON text.
pub fn field_to_json(field: &SpectralField) -> String {
    let snapshot = FieldSnapshot {
        max_mode: field.grid().max_mode(),
        real: field.is_real(),
        coeffs: field.coeffs().iter().map(|c| [c.re, c.im]).collect(),
    };
    serde_json::to_string(&snapshot).expect("snapshot serialization cannot fail")
}

/// Parse a snapshot; the product grid is re-derived from K under the default
/// sizing policy.
pub fn field_from_json(text: &str, origin: &Path) -> Result<SpectralField> {
    let snapshot: FieldSnapshot =
        serde_json::from_str(text).map_err(|e| Error::MalformedSnapshot {
            path: origin.to_path_buf(),
            reason: e.to_string(),
        })?;
    let grid = GridSpec::new(snapshot.max_mode)?;
    let coeffs = snapshot
        .coeffs
        .iter()
        .map(|&[re, im]| Complex64::new(re, im))
        .collect();
    SpectralField::from_coeffs(grid, coeffs, snapshot.real).map_err(|e| {
        Error::MalformedSnapshot {
            path: origin.to_path_buf(),
            reason: e.to_string(),
        }
    })
}

/// Write a field snapshot atomically.
pub fn write_field(path: &Path, field: &SpectralField) -> Result<()> {
    write_text_atomic(path, &field_to_json(field))
}

/// Read a field snapshot.
pub fn read_field(path: &Path) -> Result<SpectralField> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    field_from_json(&text, path)
}

/// Write any serializable report as pretty JSON, atomically.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serialization cannot fail");
    text.push('\n');
    write_text_atomic(path, &text)
}

/// Write UTF-8 text through a temp file and rename, so partial files are
/// never left at the destination.
pub fn write_text_atomic(path: &Path, text: &str) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let tmp = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.tmp", ext.to_string_lossy()),
        None => "tmp".to_string(),
    });
    fs::write(&tmp, text).map_err(|source| Error::Io {
        path: tmp.clone(),
        source,
    })?;
    fs::rename(&tmp, path).map_err(io_err)
}

/// Render the study as CSV, one row per cell:
/// `gamma,tau,error_l2,modes,T,scheme,reference_tau`. Diverged cells carry
/// `nan` in the error column. Doubles use shortest round-trip form.
pub fn convergence_csv(report: &ConvergenceReport) -> String {
    let mut out = String::from("gamma,tau,error_l2,modes,T,scheme,reference_tau\n");
    for row in &report.rows {
        let error = match row.error_l2 {
            Some(e) => format!("{e}"),
            None => "nan".to_string(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.gamma,
            row.tau,
            error,
            row.modes,
            row.horizon,
            row.scheme.name(),
            row.reference_tau
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::seeded_test_field;

    #[test]
    fn snapshots_round_trip_bit_for_bit() {
        let grid = GridSpec::new(12).unwrap();
        let field = seeded_test_field(grid, 42);
        let text = field_to_json(&field);
        let back = field_from_json(&text, Path::new("<memory>")).unwrap();
        assert_eq!(field, back);

        let dir = std::env::temp_dir().join("kdv_snapshot_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("field.json");
        write_field(&path, &field).unwrap();
        assert_eq!(read_field(&path).unwrap(), field);
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn malformed_snapshots_are_rejected_with_the_path() {
        let err = field_from_json("{\"K\": 2}", Path::new("bad.json")).unwrap_err();
        assert!(matches!(err, Error::MalformedSnapshot { .. }));

        // Hermitian violation in a "real" snapshot
        let text = r#"{"K":1,"real":true,"coeffs":[[1.0,0.5],[0.0,0.0],[2.0,0.0]]}"#;
        assert!(field_from_json(text, Path::new("bad.json")).is_err());
    }

    #[test]
    fn empty_study_renders_a_header_only_csv() {
        let report = ConvergenceReport {
            rows: vec![],
            fits: vec![],
            reference_tau: 0.001,
        };
        assert_eq!(
            convergence_csv(&report),
            "gamma,tau,error_l2,modes,T,scheme,reference_tau\n"
        );
    }
}
