//! Expected best-of-`s` makespan from one large sample pool.
//!
//! The pool is cut into `floor(P / s)` consecutive windows of length `s`;
//! the estimate is the mean of the window minima. Trailing entries that do
//! not fill a window are ignored.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jssp::Time;
use crate::output::write_atomic;
use crate::sampling::{delta_serde, Strategy};

/// Where a pool came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub instance_id: String,
    pub policy_id: String,
    pub strategy: Strategy,
    #[serde(with = "delta_serde")]
    pub delta: f64,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePool {
    makespans: Vec<Time>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("sample pool is empty")]
    EmptyPool,
    #[error("makespan {value} at index {index} is not positive")]
    NonPositive { index: usize, value: Time },
    #[error("window size must be positive")]
    ZeroSize,
    #[error("window size {size} exceeds pool size {pool}")]
    SizeTooLarge { size: usize, pool: usize },
    #[error("sizes must be strictly ascending")]
    NotAscending,
    #[error("row {row}: expected index {row}, found {found}")]
    BadIndex { row: usize, found: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("expected header \"index,makespan\", found {0:?}")]
    BadHeader(String),
    #[error("manifest: {0}")]
    Manifest(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Deserialize)]
struct Row {
    index: usize,
    makespan: Time,
}

impl SamplePool {
    pub fn new(makespans: Vec<Time>) -> Result<Self, EstimatorError> {
        if makespans.is_empty() {
            return Err(EstimatorError::EmptyPool);
        }
        if let Some((index, &value)) = makespans.iter().enumerate().find(|(_, &m)| m < 1) {
            return Err(EstimatorError::NonPositive { index, value });
        }
        Ok(Self {
            makespans,
            provenance: None,
        })
    }

    pub fn with_provenance(
        makespans: Vec<Time>,
        provenance: Provenance,
    ) -> Result<Self, EstimatorError> {
        let mut pool = Self::new(makespans)?;
        pool.provenance = Some(provenance);
        Ok(pool)
    }

    pub fn makespans(&self) -> &[Time] {
        &self.makespans
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn len(&self) -> usize {
        self.makespans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.makespans.is_empty()
    }

    pub fn min(&self) -> Time {
        *self.makespans.iter().min().expect("nonempty")
    }

    pub fn mean(&self) -> f64 {
        self.makespans.iter().map(|&m| m as f64).sum::<f64>() / self.len() as f64
    }

    /// `index,makespan` CSV.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["index", "makespan"])
            .expect("in-memory write");
        for (i, m) in self.makespans.iter().enumerate() {
            w.write_record([i.to_string(), m.to_string()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
    }

    pub fn from_csv_reader(reader: impl Read) -> Result<Self, EstimatorError> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = r.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != ["index", "makespan"] {
            return Err(EstimatorError::BadHeader(
                header.iter().collect::<Vec<_>>().join(","),
            ));
        }
        let mut makespans = Vec::new();
        for (row, rec) in r.deserialize::<Row>().enumerate() {
            let rec = rec?;
            if rec.index != row {
                return Err(EstimatorError::BadIndex {
                    row,
                    found: rec.index,
                });
            }
            makespans.push(rec.makespan);
        }
        Self::new(makespans)
    }

    /// Path of the provenance manifest that accompanies `csv_path`.
    pub fn sidecar_path(csv_path: &Path) -> PathBuf {
        csv_path.with_extension("json")
    }

    /// Writes the CSV and, when provenance is known, a JSON sidecar next to
    /// it.
    pub fn write(&self, csv_path: &Path) -> Result<(), EstimatorError> {
        write_atomic(csv_path, self.to_csv().as_bytes())?;
        if let Some(p) = &self.provenance {
            let mut json = serde_json::to_vec_pretty(p)?;
            json.write_all(b"\n")?;
            write_atomic(&Self::sidecar_path(csv_path), &json)?;
        }
        Ok(())
    }

    /// Reads a pool CSV, picking up the sidecar manifest if present.
    pub fn read(csv_path: &Path) -> Result<Self, EstimatorError> {
        let mut pool = Self::from_csv_reader(std::fs::File::open(csv_path)?)?;
        let sidecar = Self::sidecar_path(csv_path);
        if sidecar.exists() {
            pool.provenance = Some(serde_json::from_slice(&std::fs::read(sidecar)?)?);
        }
        Ok(pool)
    }
}

/// Mean of the minima of the `floor(P / s)` disjoint windows of length `s`.
pub fn windowed_min_mean(pool: &SamplePool, s: usize) -> Result<f64, EstimatorError> {
    if s == 0 {
        return Err(EstimatorError::ZeroSize);
    }
    if s > pool.len() {
        return Err(EstimatorError::SizeTooLarge {
            size: s,
            pool: pool.len(),
        });
    }
    let windows = pool.len() / s;
    let total: f64 = pool
        .makespans
        .chunks_exact(s)
        .map(|w| *w.iter().min().expect("nonempty window") as f64)
        .sum();
    Ok(total / windows as f64)
}

/// [`windowed_min_mean`] for each size.
pub fn estimate_curve(
    pool: &SamplePool,
    sizes: &[usize],
) -> Result<Vec<(usize, f64)>, EstimatorError> {
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EstimatorError::NotAscending);
    }
    sizes
        .iter()
        .map(|&s| windowed_min_mean(pool, s).map(|e| (s, e)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool(v: &[Time]) -> SamplePool {
        SamplePool::new(v.to_vec()).unwrap()
    }

    #[test]
    fn hand_checked_windows() {
        let p = pool(&[5, 3, 4, 2]);
        assert_eq!(windowed_min_mean(&p, 1).unwrap(), 3.5);
        assert_eq!(windowed_min_mean(&p, 2).unwrap(), 2.5);
        assert_eq!(windowed_min_mean(&p, 4).unwrap(), 2.0);
        assert_eq!(windowed_min_mean(&pool(&[5, 3, 4, 2, 9]), 2).unwrap(), 2.5);
    }

    #[test]
    fn curve_examples() {
        // Window minima at s = 2 are 3, 2, 1, 7.
        let p = pool(&[5, 3, 4, 2, 6, 1, 7, 8]);
        assert_eq!(
            estimate_curve(&p, &[1, 2, 4, 8]).unwrap(),
            vec![(1, 4.5), (2, 3.25), (4, 1.5), (8, 1.0)]
        );
        let flat = pool(&[7; 12]);
        for (_, e) in estimate_curve(&flat, &[1, 5, 12]).unwrap() {
            assert_eq!(e, 7.0);
        }
        let (_, first) = estimate_curve(&p, &[1, 8]).unwrap()[0];
        assert_eq!(first, p.mean());
        assert!(matches!(
            estimate_curve(&p, &[2, 1]),
            Err(EstimatorError::NotAscending)
        ));
    }

    #[test]
    fn bad_sizes_and_pools() {
        let p = pool(&[5, 3]);
        assert!(matches!(
            windowed_min_mean(&p, 0),
            Err(EstimatorError::ZeroSize)
        ));
        assert!(matches!(
            windowed_min_mean(&p, 3),
            Err(EstimatorError::SizeTooLarge { size: 3, pool: 2 })
        ));
        assert!(matches!(
            SamplePool::new(vec![]),
            Err(EstimatorError::EmptyPool)
        ));
        assert!(matches!(
            SamplePool::new(vec![3, 0]),
            Err(EstimatorError::NonPositive { index: 1, value: 0 })
        ));
    }

    #[test]
    fn csv_round_trip_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pool.csv");
        let p = SamplePool::with_provenance(
            vec![5, 3, 4, 2],
            Provenance {
                instance_id: "tiny".into(),
                policy_id: "uniform".into(),
                strategy: Strategy::Delta,
                delta: 1.0,
                master_seed: 3,
            },
        )
        .unwrap();
        p.write(&path).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "index,makespan\n0,5\n1,3\n2,4\n3,2\n"
        );
        assert_eq!(SamplePool::read(&path).unwrap(), p);
    }

    #[test]
    fn csv_rejects_bad_rows() {
        assert!(matches!(
            SamplePool::from_csv_reader("idx,m\n0,1\n".as_bytes()),
            Err(EstimatorError::BadHeader(_))
        ));
        assert!(matches!(
            SamplePool::from_csv_reader("index,makespan\n1,4\n".as_bytes()),
            Err(EstimatorError::BadIndex { row: 0, found: 1 })
        ));
        assert!(SamplePool::from_csv_reader("index,makespan\n0,x\n".as_bytes()).is_err());
    }
}
