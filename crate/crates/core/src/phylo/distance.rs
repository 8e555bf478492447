use crate::engine::{par_map, RunConfig};
use crate::error::{Error, Result};
use crate::msa::Msa;
use crate::seqio::GAP;

/// Symmetric distance matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistMatrix {
    labels: Vec<String>,
    d: Vec<f64>,
    /// Pairs that shared no gap-free column and were assigned distance 1.
    pub undefined_pairs: Vec<(usize, usize)>,
}

impl DistMatrix {
    pub fn zeros(labels: Vec<String>) -> Self {
        let n = labels.len();
        DistMatrix {
            labels,
            d: vec![0.0; n * n],
            undefined_pairs: Vec::new(),
        }
    }

    /// Builds from a full square matrix; symmetry and the diagonal are checked.
    #[allow(clippy::needless_range_loop)]
    pub fn from_rows(labels: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let n = labels.len();
        let mut m = Self::zeros(labels);
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMsa(format!("distance matrix is not {n}x{n}")));
        }
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (rows[i][j], rows[j][i]);
                if i == j && a != 0.0 || a != b && !(a.is_nan() && b.is_nan()) || a < 0.0 {
                    return Err(Error::InvalidMsa(format!("distance matrix entry ({i},{j}) = {a} breaks symmetry or sign")));
                }
                m.d[i * n + j] = a;
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let n = self.n();
        self.d[i * n + j] = v;
        self.d[j * n + i] = v;
    }
}

/// Mismatches over columns where neither row has a gap. `None` when no such
/// column exists.
pub fn p_distance_pair(a: &[u8], b: &[u8]) -> Option<f64> {
    let mut comparable = 0u32;
    let mut diff = 0u32;
    for (&x, &y) in a.iter().zip(b) {
        let both = (x != GAP) & (y != GAP);
        comparable += both as u32;
        diff += (both & (x != y)) as u32;
    }
    (comparable > 0).then(|| diff as f64 / comparable as f64)
}

pub fn p_distance(msa: &Msa) -> Result<DistMatrix> {
    p_distance_with(msa, &RunConfig::with_threads(1))
}

/// Row-parallel p-distance matrix.
pub fn p_distance_with(msa: &Msa, run: &RunConfig) -> Result<DistMatrix> {
    let n = msa.n_rows();
    if n < 3 {
        return Err(Error::TooFewSequences { need: 3, got: n });
    }
    let idx: Vec<usize> = (0..n).collect();
    let (rows, _) = par_map(
        "distance",
        &idx,
        msa,
        |msa, _, &i| {
            Ok(((i + 1)..n)
                .map(|j| p_distance_pair(msa.row(i), msa.row(j)))
                .collect::<Vec<_>>())
        },
        run,
    )?;
    let mut m = DistMatrix::zeros(msa.ids().to_vec());
    for (i, row) in rows.into_iter().enumerate() {
        for (k, d) in row.into_iter().enumerate() {
            let j = i + 1 + k;
            let v = d.unwrap_or_else(|| {
                m.undefined_pairs.push((i, j));
                1.0
            });
            m.set(i, j, v);
        }
    }
    Ok(m)
}
