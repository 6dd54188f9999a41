//! JSON export of sensor encoders and fusion-center decoder blocks.

use klt_mbi_core::{FactorizedWsn, Matrix, SensorPartition};
use serde::{Deserialize, Serialize};

use crate::scenarios::PartitionSpec;

pub const FORMAT: &str = "klt-mbi-wsn";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub scenario: String,
    pub seed: u64,
    /// `"exact"` or `"estimated"`.
    pub second_moments: String,
    pub samples: Option<usize>,
    pub iterations: usize,
    pub converged: bool,
    pub analytic_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorEntry {
    pub index: usize,
    /// `Q_j`, `r_j x n_j`, row-major.
    pub encoder: Vec<Vec<f64>>,
    /// `P_j`, `m x r_j`, row-major.
    pub decoder: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WsnDocument {
    pub format: String,
    pub version: String,
    pub provenance: Provenance,
    pub partition: PartitionSpec,
    pub sensors: Vec<SensorEntry>,
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<Matrix, String> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(format!("expected a {nrows}x{ncols} array"));
    }
    Ok(Matrix::from_fn(nrows, ncols, |r, c| rows[r][c]))
}

impl WsnDocument {
    pub fn new(wsn: &FactorizedWsn, provenance: Provenance) -> Self {
        let part = wsn.partition();
        let sensors = wsn
            .encoders()
            .iter()
            .zip(wsn.decoder_blocks())
            .enumerate()
            .map(|(index, (q, p))| SensorEntry {
                index,
                encoder: rows(q),
                decoder: rows(p),
            })
            .collect();
        Self {
            format: FORMAT.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            provenance,
            partition: PartitionSpec {
                m: part.signal_dim(),
                n: part.obs_dims().to_vec(),
                r: part.ranks().to_vec(),
            },
            sensors,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let doc: Self = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if doc.format != FORMAT {
            return Err(format!("unexpected format {:?}", doc.format));
        }
        Ok(doc)
    }

    /// Rebuilds the network, checking every shape against the partition.
    pub fn to_wsn(&self) -> Result<FactorizedWsn, String> {
        let part: SensorPartition = self.partition.build().map_err(|e| e.to_string())?;
        if self.sensors.len() != part.sensor_count() {
            return Err("one entry per sensor required".into());
        }
        let mut encoders = Vec::new();
        let mut decoders = Vec::new();
        for (j, s) in self.sensors.iter().enumerate() {
            encoders.push(from_rows(&s.encoder, part.rank(j), part.obs_dim(j)).map_err(|e| format!("sensor {j} encoder: {e}"))?);
            decoders.push(from_rows(&s.decoder, part.signal_dim(), part.rank(j)).map_err(|e| format!("sensor {j} decoder: {e}"))?);
        }
        FactorizedWsn::new(part, encoders, decoders).map_err(|e| e.to_string())
    }
}
