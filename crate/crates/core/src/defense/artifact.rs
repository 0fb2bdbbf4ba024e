//! JSON persistence of [`CalibrationResult`].
//!
//! Every float is written as `d.dddddddddddddddde±x` (17 significant digits),
//! which round-trips any `f64` exactly.

use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use super::{CalibrationResult, EstimatorConfig, OutlierDirection, Seeds, PIPELINE_VERSION};
use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::io::write_atomic;
use crate::rmt::mp_bulk_edges;

const EDGE_TOL: f64 = 1e-12;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    version: u32,
    gamma: f64,
    t_hat: f64,
    tau_star: f64,
    sigma2: f64,
    c: f64,
    lambda_plus: f64,
    directions: Vec<DirectionDoc>,
    seeds: Seeds,
    feature_config: FeatureConfig,
    estimator_config: EstimatorConfig,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DirectionDoc {
    index: usize,
    eigenvalue: f64,
    alpha: f64,
    vector: Vec<f64>,
}

/// Pretty printing with 17-significant-digit floats.
struct Sig17<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Writes `value` as pretty JSON with 17-significant-digit floats.
pub fn to_json_sig17<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Sig17(PrettyFormatter::new()));
    value.serialize(&mut ser).map_err(|e| Error::Numeric(format!("cannot serialize: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

pub fn encode_calibration(calib: &CalibrationResult) -> Result<Vec<u8>> {
    let scalars = [calib.gamma, calib.t_hat, calib.tau_star, calib.mp_model.sigma2, calib.mp_model.c];
    let per_direction = calib.outlier_directions.iter().flat_map(|d| d.vector.iter().chain([&d.alpha, &d.eigenvalue]));
    if scalars.iter().chain(per_direction).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("calibration holds non-finite values".into()));
    }
    let doc = Document {
        version: calib.pipeline_version,
        gamma: calib.gamma,
        t_hat: calib.t_hat,
        tau_star: calib.tau_star,
        sigma2: calib.mp_model.sigma2,
        c: calib.mp_model.c,
        lambda_plus: calib.mp_model.lambda_plus,
        directions: calib
            .outlier_directions
            .iter()
            .map(|d| DirectionDoc { index: d.index, eigenvalue: d.eigenvalue, alpha: d.alpha, vector: d.vector.clone() })
            .collect(),
        seeds: calib.seeds,
        feature_config: calib.feature_config,
        estimator_config: calib.estimator_config,
    };
    to_json_sig17(&doc)
}

/// Parses and validates an artifact. The version is checked before the rest.
pub fn decode_calibration(bytes: &[u8]) -> Result<CalibrationResult> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| Error::Corrupt(format!("calibration file: {e}")))?;
    let version = value
        .get("version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::Corrupt("calibration file has no integer 'version'".into()))?;
    if version != u64::from(PIPELINE_VERSION) {
        return Err(Error::VersionMismatch {
            expected: PIPELINE_VERSION,
            found: u32::try_from(version).unwrap_or(u32::MAX),
        });
    }
    let doc: Document =
        serde_json::from_value(value).map_err(|e| Error::Corrupt(format!("calibration file: {e}")))?;
    let mp_model = mp_bulk_edges(doc.sigma2, doc.c).map_err(|e| Error::Corrupt(e.to_string()))?;
    if (mp_model.lambda_plus - doc.lambda_plus).abs() > EDGE_TOL * doc.lambda_plus.abs().max(1.0) {
        return Err(Error::Corrupt(format!(
            "lambda_plus {} disagrees with sigma2 {} and c {}",
            doc.lambda_plus, doc.sigma2, doc.c
        )));
    }
    let mp_model = crate::rmt::MpModel { lambda_plus: doc.lambda_plus, ..mp_model };
    let calib = CalibrationResult {
        pipeline_version: PIPELINE_VERSION,
        gamma: doc.gamma,
        t_hat: doc.t_hat,
        tau_star: doc.tau_star,
        mp_model,
        outlier_directions: doc
            .directions
            .into_iter()
            .map(|d| OutlierDirection { index: d.index, eigenvalue: d.eigenvalue, alpha: d.alpha, vector: d.vector })
            .collect(),
        seeds: doc.seeds,
        feature_config: doc.feature_config,
        estimator_config: doc.estimator_config,
    };
    calib.validate()?;
    Ok(calib)
}

pub fn save_calibration(calib: &CalibrationResult, path: &Path) -> Result<()> {
    write_atomic(path, &encode_calibration(calib)?)
}

pub fn load_calibration(path: &Path) -> Result<CalibrationResult> {
    decode_calibration(&std::fs::read(path)?)
}
