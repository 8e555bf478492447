//! Canonical neighbor joining.

use super::distance::DistMatrix;
use super::tree::PhyloTree;
use crate::error::{Error, Result};

/// One join: the working matrix before the join and the chosen pair of
/// working indices.
#[derive(Debug, Clone)]
pub struct NjStep {
    pub matrix: Vec<Vec<f64>>,
    pub joined: (usize, usize),
}

/// Leaves occupy node ids `0..n` in matrix order.
pub fn nj_build(d: &DistMatrix) -> Result<PhyloTree> {
    run(d, None)
}

/// Like [`nj_build`], also returning every intermediate matrix and join.
pub fn nj_build_traced(d: &DistMatrix) -> Result<(PhyloTree, Vec<NjStep>)> {
    let mut steps = Vec::new();
    let tree = run(d, Some(&mut steps))?;
    Ok((tree, steps))
}

fn run(d: &DistMatrix, mut trace: Option<&mut Vec<NjStep>>) -> Result<PhyloTree> {
    let n = d.n();
    if n < 3 {
        return Err(Error::TooFewSequences { need: 3, got: n });
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if !d.get(i, j).is_finite() {
                return Err(Error::NonFiniteDistance {
                    a: d.labels()[i].clone(),
                    b: d.labels()[j].clone(),
                });
            }
        }
    }

    let mut tree = PhyloTree::new();
    let mut active: Vec<usize> = d.labels().iter().map(|l| tree.add_leaf(l.clone())).collect();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| d.get(i, j)).collect()).collect();
    while active.len() > 3 {
        let r = active.len();
        let sums: Vec<f64> = m.iter().map(|row| row.iter().sum()).collect();
        let scale = (r - 2) as f64;
        let (mut bi, mut bj, mut best) = (0, 1, f64::INFINITY);
        for i in 0..r {
            let row = &m[i];
            for j in (i + 1)..r {
                let q = scale * row[j] - sums[i] - sums[j];
                if q < best {
                    best = q;
                    bi = i;
                    bj = j;
                }
            }
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(NjStep {
                matrix: m.clone(),
                joined: (bi, bj),
            });
        }
        let dij = m[bi][bj];
        let mut li = 0.5 * dij + (sums[bi] - sums[bj]) / (2.0 * scale);
        let mut lj = dij - li;
        // a negative estimate is zeroed and its deficit charged to the sibling
        if li < 0.0 {
            lj += li;
            li = 0.0;
        } else if lj < 0.0 {
            li += lj;
            lj = 0.0;
        }
        let u = tree.add_internal();
        tree.connect(u, active[bi], li.max(0.0));
        tree.connect(u, active[bj], lj.max(0.0));

        let du: Vec<f64> = (0..r).map(|k| 0.5 * (m[bi][k] + m[bj][k] - dij)).collect();
        for k in 0..r {
            if k == bi || k == bj {
                continue;
            }
            m[k][bi] = du[k];
            m[bi][k] = du[k];
        }
        m[bi][bi] = 0.0;
        active[bi] = u;
        active.remove(bj);
        m.remove(bj);
        for row in &mut m {
            row.remove(bj);
        }
    }

    let (dab, dac, dbc) = (m[0][1], m[0][2], m[1][2]);
    let mut lens = [0.5 * (dab + dac - dbc), 0.5 * (dab + dbc - dac), 0.5 * (dac + dbc - dab)];
    for i in 0..3 {
        if lens[i] < 0.0 {
            let deficit = lens[i];
            lens[i] = 0.0;
            for (k, l) in lens.iter_mut().enumerate() {
                if k != i {
                    *l = (*l + deficit).max(0.0);
                }
            }
        }
    }
    let center = tree.add_internal();
    for (node, len) in active.into_iter().zip(lens) {
        tree.connect(center, node, len);
    }
    Ok(tree)
}
