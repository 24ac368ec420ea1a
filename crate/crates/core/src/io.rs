//! Serialization at the f64 boundary: dense-CSV matrices (>= 17
//! significant digits), the little-endian binary gradient-sample format,
//! and self-describing JSON documents for instances, fits, and Monte
//! Carlo summaries.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::ScalingFit;
use crate::geometry::SymMatrix;
use crate::landscape::{
    AicCertificate, AicInstance, AicParams, CubicForm, FineTuneObjective, QuadraticUtility,
};
use crate::mat::Mat;
use crate::nullmodel::McReport;
use crate::sketch::{GradientSampleSet, GradientStorage};

/// Writes a dense matrix as CSV, one row per line, 17 significant digits.
pub fn write_matrix_csv<W: Write>(out: &mut W, m: &Mat<f64>) -> Result<()> {
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_matrix_csv<R: Read>(input: &mut R) -> Result<Mat<f64>> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse(format!(
                    "line {}: expected {} fields, got {}",
                    lineno + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("empty matrix".into()));
    }
    Ok(Mat::from_rows(rows))
}

/// Writes a (t, value, ...) table as CSV with a header row.
pub fn write_series_csv<W: Write>(out: &mut W, headers: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    writeln!(out, "{}", headers.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

const GRADIENT_MAGIC: &[u8; 4] = b"AICG";
const GRADIENT_VERSION: u32 = 1;

/// Binary gradient-sample file: magic "AICG", u32 version = 1, u8 layout
/// (0 = dense, 1 = factored), u64 N, u64 d_out, u64 d_in, then the f64
/// payload, all little-endian. Dense: N row-major matrices; factored:
/// N x (d_out delta values + d_in v values).
pub fn write_gradient_samples<W: Write>(out: &mut W, set: &GradientSampleSet<f64>) -> Result<()> {
    out.write_all(GRADIENT_MAGIC)?;
    out.write_all(&GRADIENT_VERSION.to_le_bytes())?;
    let layout: u8 = match set.storage() {
        GradientStorage::Dense(_) => 0,
        GradientStorage::Factored(_) => 1,
    };
    out.write_all(&[layout])?;
    out.write_all(&(set.len() as u64).to_le_bytes())?;
    out.write_all(&(set.d_out() as u64).to_le_bytes())?;
    out.write_all(&(set.d_in() as u64).to_le_bytes())?;
    match set.storage() {
        GradientStorage::Dense(samples) => {
            for m in samples {
                for &x in m.data() {
                    out.write_all(&x.to_le_bytes())?;
                }
            }
        }
        GradientStorage::Factored(samples) => {
            for (delta, v) in samples {
                for &x in delta {
                    out.write_all(&x.to_le_bytes())?;
                }
                for &x in v {
                    out.write_all(&x.to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

pub fn read_gradient_samples<R: Read>(input: &mut R) -> Result<GradientSampleSet<f64>> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != GRADIENT_MAGIC {
        return Err(Error::Parse("bad magic (expected AICG)".into()));
    }
    let mut u32buf = [0u8; 4];
    input.read_exact(&mut u32buf)?;
    let version = u32::from_le_bytes(u32buf);
    if version != GRADIENT_VERSION {
        return Err(Error::Parse(format!("unsupported version {version}")));
    }
    let mut u8buf = [0u8; 1];
    input.read_exact(&mut u8buf)?;
    let layout = u8buf[0];
    let mut u64buf = [0u8; 8];
    let mut read_u64 = |input: &mut R| -> Result<u64> {
        input.read_exact(&mut u64buf)?;
        Ok(u64::from_le_bytes(u64buf))
    };
    let n = read_u64(input)? as usize;
    let d_out = read_u64(input)? as usize;
    let d_in = read_u64(input)? as usize;
    let mut f64buf = [0u8; 8];
    let mut read_f64 = |input: &mut R| -> Result<f64> {
        input.read_exact(&mut f64buf)?;
        Ok(f64::from_le_bytes(f64buf))
    };
    match layout {
        0 => {
            let mut samples = Vec::with_capacity(n);
            for _ in 0..n {
                let mut data = Vec::with_capacity(d_out * d_in);
                for _ in 0..d_out * d_in {
                    data.push(read_f64(input)?);
                }
                let mut rows = Vec::with_capacity(d_out);
                for r in 0..d_out {
                    rows.push(data[r * d_in..(r + 1) * d_in].to_vec());
                }
                samples.push(Mat::from_rows(rows));
            }
            GradientSampleSet::dense(d_out, d_in, samples, "file")
        }
        1 => {
            let mut samples = Vec::with_capacity(n);
            for _ in 0..n {
                let mut delta = Vec::with_capacity(d_out);
                for _ in 0..d_out {
                    delta.push(read_f64(input)?);
                }
                let mut v = Vec::with_capacity(d_in);
                for _ in 0..d_in {
                    v.push(read_f64(input)?);
                }
                samples.push((delta, v));
            }
            GradientSampleSet::factored(d_out, d_in, samples, "file")
        }
        other => Err(Error::Parse(format!("unknown layout {other}"))),
    }
}

/// A matrix in the binary container (a single dense "sample"): the same
/// little-endian AICG layout with N = 1, d_out = rows, d_in = cols.
pub fn write_matrix_binary<W: Write>(out: &mut W, m: &Mat<f64>) -> Result<()> {
    let rows: Vec<Vec<f64>> = (0..m.rows()).map(|i| m.row(i).to_vec()).collect();
    let set = GradientSampleSet::dense(m.rows(), m.cols(), vec![Mat::from_rows(rows)], "matrix")?;
    write_gradient_samples(out, &set)
}

pub fn read_matrix_binary<R: Read>(input: &mut R) -> Result<Mat<f64>> {
    let set = read_gradient_samples(input)?;
    if set.len() != 1 {
        return Err(Error::Parse(format!(
            "matrix container holds {} samples, expected 1",
            set.len()
        )));
    }
    let flat = set.flat_sample(0);
    let (rows, cols) = (set.d_out(), set.d_in());
    Ok(Mat::from_fn(rows, cols, |i, j| flat[i * cols + j]))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ParamsDoc {
    pub d: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CubicDoc {
    pub directions: Vec<Vec<f64>>,
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CertificateDoc {
    pub tail_sum: f64,
    pub lambda_d: f64,
    pub proj_grad_norm: f64,
    pub coupling: f64,
    pub conditions_met: [bool; 3],
}

/// Self-describing instance document: everything needed to replay the
/// instance byte-for-byte.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InstanceDoc {
    pub n: usize,
    pub seed: u64,
    pub params: ParamsDoc,
    pub theta_star: Vec<f64>,
    pub fisher: Vec<Vec<f64>>,
    /// Descending Fisher eigenvalues (derived, for self-description).
    pub fisher_eigenvalues: Vec<f64>,
    pub g0: Vec<f64>,
    pub hessian: Vec<Vec<f64>>,
    pub utility_cubic_coeff: f64,
    pub utility_cubic: Option<CubicDoc>,
    pub objective_cubic_scale: f64,
    pub objective_cubic: Option<CubicDoc>,
    pub ball_radius: f64,
    pub certificate: CertificateDoc,
    /// Flattening convention marker for downstream consumers.
    pub vec_convention: String,
}

fn mat_rows(m: &Mat<f64>) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn cubic_doc(c: &CubicForm<f64>) -> CubicDoc {
    CubicDoc {
        directions: c.directions().to_vec(),
        coefficients: c.coefficients().to_vec(),
    }
}

impl InstanceDoc {
    pub fn from_instance(inst: &AicInstance<f64>) -> Self {
        InstanceDoc {
            n: inst.n(),
            seed: inst.seed,
            params: ParamsDoc {
                d: inst.params.d,
                lambda: inst.params.lambda,
                gamma: inst.params.gamma,
                epsilon: inst.params.epsilon,
            },
            theta_star: inst.utility.theta_star.clone(),
            fisher: mat_rows(inst.utility.fisher().mat()),
            fisher_eigenvalues: crate::geometry::eigendecompose(inst.utility.fisher())
                .eigenvalues()
                .to_vec(),
            g0: inst.objective.g0().to_vec(),
            hessian: mat_rows(inst.objective.hessian().mat()),
            utility_cubic_coeff: inst.utility.cubic_coeff(),
            utility_cubic: inst.utility.cubic().map(cubic_doc),
            objective_cubic_scale: inst.objective.cubic_tensor_scale(),
            objective_cubic: inst.objective.cubic().map(cubic_doc),
            ball_radius: inst.objective.ball_radius(),
            certificate: CertificateDoc {
                tail_sum: inst.certificate.tail_sum,
                lambda_d: inst.certificate.lambda_d,
                proj_grad_norm: inst.certificate.proj_grad_norm,
                coupling: inst.certificate.coupling,
                conditions_met: inst.certificate.conditions_met,
            },
            vec_convention: "row-major".into(),
        }
    }

    pub fn to_instance(&self) -> Result<AicInstance<f64>> {
        let params = AicParams {
            d: self.params.d,
            lambda: self.params.lambda,
            gamma: self.params.gamma,
            epsilon: self.params.epsilon,
        };
        let fisher = SymMatrix::new(Mat::from_rows(self.fisher.clone()))?;
        let hessian = SymMatrix::new(Mat::from_rows(self.hessian.clone()))?;
        let utility = QuadraticUtility::new(
            self.theta_star.clone(),
            fisher,
            self.utility_cubic_coeff,
            self.utility_cubic
                .as_ref()
                .map(|c| CubicForm::from_parts(c.directions.clone(), c.coefficients.clone())),
        )?;
        let objective = FineTuneObjective::new(
            self.theta_star.clone(),
            self.g0.clone(),
            hessian,
            self.objective_cubic_scale,
            self.objective_cubic
                .as_ref()
                .map(|c| CubicForm::from_parts(c.directions.clone(), c.coefficients.clone())),
            self.ball_radius,
        )?;
        let certificate = AicCertificate {
            tail_sum: self.certificate.tail_sum,
            lambda_d: self.certificate.lambda_d,
            proj_grad_norm: self.certificate.proj_grad_norm,
            coupling: self.certificate.coupling,
            conditions_met: self.certificate.conditions_met,
        };
        Ok(AicInstance {
            utility,
            objective,
            certificate,
            params,
            seed: self.seed,
        })
    }
}

/// Power-law fit record {exponent, coefficient, r2, window, seed}.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FitDoc {
    pub exponent: f64,
    pub coefficient: f64,
    pub r2: f64,
    pub window: [f64; 2],
    pub seed: u64,
}

impl FitDoc {
    pub fn from_fit(fit: &ScalingFit<f64>, seed: u64) -> Self {
        FitDoc {
            exponent: fit.exponent,
            coefficient: fit.coefficient(),
            r2: fit.r_squared,
            window: [fit.window.0, fit.window.1],
            seed,
        }
    }
}

/// Monte Carlo summary {target, mean, stderr, trials, seed}.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct McDoc {
    pub target: f64,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
    pub seed: u64,
}

impl McDoc {
    pub fn from_report(report: &McReport<f64>, seed: u64) -> Self {
        McDoc {
            target: report.target,
            mean: report.estimate.mean,
            stderr: report.estimate.std_error,
            trials: report.estimate.trials,
            seed,
        }
    }
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))
}

pub fn from_json_str<'a, T: Deserialize<'a>>(s: &'a str) -> Result<T> {
    serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::{build_aic_instance_with, BuildOptions};

    #[test]
    fn matrix_csv_round_trip_is_exact() {
        let m = Mat::from_fn(3, 4, |i, j| ((i * 4 + j) as f64 / 7.0).sin() * 1e-3);
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &m).unwrap();
        let back = read_matrix_csv(&mut buf.as_slice()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn gradient_binary_round_trip_dense_and_factored() {
        let dense = GradientSampleSet::dense(
            2,
            3,
            vec![
                Mat::from_fn(2, 3, |i, j| (i + j) as f64 * 0.5),
                Mat::from_fn(2, 3, |i, j| (i as f64 - j as f64) * 0.25),
            ],
            "t",
        )
        .unwrap();
        let mut buf = Vec::new();
        write_gradient_samples(&mut buf, &dense).unwrap();
        let back = read_gradient_samples(&mut buf.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.flat_sample(0), dense.flat_sample(0));
        assert_eq!(back.flat_sample(1), dense.flat_sample(1));

        let factored =
            GradientSampleSet::factored(3, 2, vec![(vec![1.0, -2.0, 0.5], vec![0.25, 4.0])], "t")
                .unwrap();
        let mut buf2 = Vec::new();
        write_gradient_samples(&mut buf2, &factored).unwrap();
        let back2 = read_gradient_samples(&mut buf2.as_slice()).unwrap();
        assert_eq!(back2.flat_sample(0), factored.flat_sample(0));
    }

    #[test]
    fn bad_magic_is_rejected() {
        let bytes = b"NOPE\x01\x00\x00\x00".to_vec();
        assert!(read_gradient_samples(&mut bytes.as_slice()).is_err());
    }

    #[test]
    fn matrix_binary_round_trip() {
        let m = Mat::from_fn(3, 5, |i, j| ((i * 5 + j) as f64).sqrt() * 0.1);
        let mut buf = Vec::new();
        write_matrix_binary(&mut buf, &m).unwrap();
        let back = read_matrix_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn instance_doc_round_trip_reproduces_dynamics() {
        let params = AicParams {
            d: 2,
            lambda: 4.0,
            gamma: 1.0,
            epsilon: 0.05,
        };
        let options = BuildOptions {
            utility_cubic: 0.1,
            objective_cubic: 0.2,
            ball_radius: 1.0,
        };
        let inst = build_aic_instance_with(12, &params, 3, &options).unwrap();
        let doc = InstanceDoc::from_instance(&inst);
        let json = to_json_pretty(&doc).unwrap();
        let doc2: InstanceDoc = from_json_str(&json).unwrap();
        assert_eq!(doc, doc2);
        let inst2 = doc2.to_instance().unwrap();
        // identical gradient field and utility everywhere
        let theta = vec![0.01; 12];
        assert_eq!(
            inst.objective.gradient_raw(&theta),
            inst2.objective.gradient_raw(&theta)
        );
        assert_eq!(
            crate::landscape::utility_loss(&inst.utility, &theta),
            crate::landscape::utility_loss(&inst2.utility, &theta)
        );
    }
}
