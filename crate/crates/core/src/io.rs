//! JSON documents for channels, tomography data and results.
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major arrays of
//! rows. Floats are written with shortest round-trip formatting, so reading a
//! document back reproduces every binary64 value exactly.

use serde::{Deserialize, Serialize};

use crate::channel::{ChoiMatrix, GenPauliChannel};
use crate::design::FisherMatrix;
use crate::error::{Error, Result};
use crate::estimate::TomographyConfiguration;
use crate::linalg::{c, CMat, CVec};
use crate::qstate::{
    bloch_operator, operator_to_bloch, standard_mub, BlochVector, DensityMatrix, MeasurementRecord, Mub, Povm, RecordEntry,
};

pub type ComplexPair = [f64; 2];
pub type MatrixDoc = Vec<Vec<ComplexPair>>;

pub fn matrix_to_doc(m: &CMat) -> MatrixDoc {
    m.row_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect()
}

pub fn matrix_from_doc(doc: &MatrixDoc) -> Result<CMat> {
    let rows = doc.len();
    let cols = doc.first().map_or(0, |r| r.len());
    if let Some(bad) = doc.iter().find(|r| r.len() != cols) {
        return Err(Error::Dimension { expected: cols, got: bad.len() });
    }
    Ok(CMat::from_fn(rows, cols, |i, j| c(doc[i][j][0], doc[i][j][1])))
}

fn vector_to_doc(v: &CVec) -> Vec<ComplexPair> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

/// `{dim, lambda, directions}`; `directions[i][k]` is vector `k` of basis `i`.
/// Without `directions` the standard MUB of dimension `dim` is used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelDoc {
    pub dim: usize,
    pub lambda: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directions: Option<Vec<Vec<Vec<ComplexPair>>>>,
}

impl ChannelDoc {
    pub fn from_channel(ch: &GenPauliChannel) -> Self {
        let directions = ch.mub().bases().iter().map(|b| b.iter().map(vector_to_doc).collect()).collect();
        ChannelDoc { dim: ch.dim(), lambda: ch.lambda().to_vec(), directions: Some(directions) }
    }

    pub fn build(&self) -> Result<GenPauliChannel> {
        if self.lambda.len() != self.dim + 1 {
            return Err(Error::Dimension { expected: self.dim + 1, got: self.lambda.len() });
        }
        let mub = match &self.directions {
            None => standard_mub(self.dim)?,
            Some(bases) => {
                let bases = bases
                    .iter()
                    .map(|b| b.iter().map(|v| CVec::from_iterator(v.len(), v.iter().map(|p| c(p[0], p[1])))).collect())
                    .collect();
                Mub::new(self.dim, bases)?
            }
        };
        GenPauliChannel::new(mub, self.lambda.clone())
    }
}

/// One configuration. Qubit inputs and POVMs may be given in Bloch form:
/// `input_bloch` is `θ` with `ρ = ½(I + θ·σ)`, and each `povm_blochs` entry is
/// `[a₀, a₁, a₂, a₃]` with `M = ½(a₀I + a·σ)`. Otherwise matrices are given
/// in full.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfigDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_bloch: Option<BlochVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_matrix: Option<MatrixDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub povm_blochs: Option<Vec<[f64; 4]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub povm_matrices: Option<Vec<MatrixDoc>>,
    pub shots: u64,
}

impl ConfigDoc {
    /// Bloch form for qubits, matrix form otherwise.
    pub fn from_configuration(cfg: &TomographyConfiguration) -> Self {
        if cfg.dim() == 2 {
            let povm = cfg
                .povm
                .elements()
                .iter()
                .map(|m| {
                    let a = operator_to_bloch(m);
                    [m.trace().re, a.0[0], a.0[1], a.0[2]]
                })
                .collect();
            ConfigDoc {
                input_bloch: Some(operator_to_bloch(cfg.input.matrix())),
                povm_blochs: Some(povm),
                shots: cfg.shots,
                ..Default::default()
            }
        } else {
            ConfigDoc {
                input_matrix: Some(matrix_to_doc(cfg.input.matrix())),
                povm_matrices: Some(cfg.povm.elements().iter().map(matrix_to_doc).collect()),
                shots: cfg.shots,
                ..Default::default()
            }
        }
    }

    pub fn to_configuration(&self) -> Result<TomographyConfiguration> {
        let input = match (&self.input_bloch, &self.input_matrix) {
            (Some(b), None) => DensityMatrix::from_bloch(b)?,
            (None, Some(m)) => DensityMatrix::new(matrix_from_doc(m)?)?,
            _ => return Err(Error::InvalidSpec("give exactly one of input_bloch and input_matrix".into())),
        };
        let elements = match (&self.povm_blochs, &self.povm_matrices) {
            (Some(bs), None) => bs.iter().map(|a| bloch_operator(a[0], &BlochVector::new(a[1], a[2], a[3]))).collect(),
            (None, Some(ms)) => ms.iter().map(matrix_from_doc).collect::<Result<Vec<_>>>()?,
            _ => return Err(Error::InvalidSpec("give exactly one of povm_blochs and povm_matrices".into())),
        };
        TomographyConfiguration::new(input, Povm::new(elements, None)?, self.shots)
    }
}

/// `{configs, counts}` with `counts[γ][α]` the count of outcome `α` of
/// configuration `γ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordDoc {
    pub configs: Vec<ConfigDoc>,
    pub counts: Vec<Vec<u64>>,
}

impl RecordDoc {
    pub fn new(configs: &[TomographyConfiguration], record: &MeasurementRecord) -> Self {
        RecordDoc {
            configs: configs.iter().map(ConfigDoc::from_configuration).collect(),
            counts: record.entries.iter().map(|e| e.counts.clone()).collect(),
        }
    }

    pub fn parse(&self) -> Result<(Vec<TomographyConfiguration>, MeasurementRecord)> {
        if self.configs.len() != self.counts.len() {
            return Err(Error::Dimension { expected: self.configs.len(), got: self.counts.len() });
        }
        let configs = self.configs.iter().map(ConfigDoc::to_configuration).collect::<Result<Vec<_>>>()?;
        let mut entries = Vec::with_capacity(configs.len());
        for (cfg, counts) in configs.iter().zip(&self.counts) {
            if counts.len() != cfg.povm.len() {
                return Err(Error::Dimension { expected: cfg.povm.len(), got: counts.len() });
            }
            let entry = RecordEntry::new(counts.clone())?;
            if entry.shots != cfg.shots {
                return Err(Error::InsufficientData(format!("counts sum to {} but shots = {}", entry.shots, cfg.shots)));
            }
            entries.push(entry);
        }
        Ok((configs, MeasurementRecord::new(entries)?))
    }
}

/// Estimation result `{lambda, choi, residual, iterations}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateDoc {
    pub lambda: Vec<f64>,
    pub choi: MatrixDoc,
    pub residual: f64,
    pub iterations: usize,
}

impl EstimateDoc {
    pub fn new(lambda: Vec<f64>, choi: &ChoiMatrix, residual: f64, iterations: usize) -> Self {
        EstimateDoc { lambda, choi: matrix_to_doc(choi.matrix()), residual, iterations }
    }
}

/// Design result `{configs, objective, fisher_matrix}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignDoc {
    pub configs: Vec<ConfigDoc>,
    pub objective: f64,
    pub fisher_matrix: Vec<Vec<f64>>,
}

impl DesignDoc {
    pub fn new(configs: &[TomographyConfiguration], fisher: &FisherMatrix) -> Self {
        DesignDoc {
            configs: configs.iter().map(ConfigDoc::from_configuration).collect(),
            objective: fisher.trace(),
            fisher_matrix: fisher.to_rows(),
        }
    }
}
