//! Sample-based partitioning of an alignment into balanced clusters.
//!
//! A seeded random sample is clustered by complete linkage, each sample
//! cluster contributes a medoid, and every sequence joins its nearest
//! medoid. Oversized clusters are split around two medoids until the size
//! cap holds; clusters left with a single member are folded into the nearest
//! cluster that still has room.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::distance::p_distance_pair;
use crate::engine::{par_map, RunConfig};
use crate::error::Result;
use crate::msa::Msa;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterConfig {
    pub sample_frac: f64,
    pub balance_cap: f64,
    pub seed: u64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            sample_frac: 0.10,
            balance_cap: 0.10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterPlan {
    /// Cluster id for each row.
    pub assignments: Vec<usize>,
    /// Representative row per cluster.
    pub medoids: Vec<usize>,
    pub sizes: Vec<usize>,
}

impl ClusterPlan {
    pub fn len(&self) -> usize {
        self.medoids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.medoids.is_empty()
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == cluster).collect()
    }

    fn from_groups(mut groups: Vec<(usize, Vec<usize>)>, n: usize) -> Self {
        for g in &mut groups {
            g.1.sort_unstable();
        }
        groups.retain(|g| !g.1.is_empty());
        groups.sort_by_key(|g| g.1[0]);
        let mut assignments = vec![0; n];
        for (c, (_, members)) in groups.iter().enumerate() {
            for &m in members {
                assignments[m] = c;
            }
        }
        ClusterPlan {
            assignments,
            medoids: groups.iter().map(|g| g.0).collect(),
            sizes: groups.iter().map(|g| g.1.len()).collect(),
        }
    }
}

/// Below this many sequences everything is one cluster.
pub const MIN_CLUSTERED: usize = 10;
const MEDOID_CANDIDATES: usize = 64;

fn dist(msa: &Msa, i: usize, j: usize) -> f64 {
    if i == j {
        0.0
    } else {
        p_distance_pair(msa.row(i), msa.row(j)).unwrap_or(1.0)
    }
}

/// Member minimizing the summed distance to the others; ties go to the
/// smaller row index. Large groups only consider a strided subset of
/// candidates.
fn medoid(msa: &Msa, members: &[usize]) -> usize {
    let step = members.len().div_ceil(MEDOID_CANDIDATES).max(1);
    let mut best = (f64::INFINITY, usize::MAX);
    for &c in members.iter().step_by(step) {
        let s: f64 = members.iter().map(|&m| dist(msa, c, m)).sum();
        if s < best.0 || (s == best.0 && c < best.1) {
            best = (s, c);
        }
    }
    best.1
}

/// Nearest medoid; ties go to the earlier entry.
fn nearest(msa: &Msa, i: usize, medoids: &[usize]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (c, &m) in medoids.iter().enumerate() {
        let d = dist(msa, i, m);
        if d < best.0 {
            best = (d, c);
        }
    }
    best.1
}

/// Complete-linkage clustering of `points` into `k` groups, using the
/// nearest-neighbor chain algorithm. Returns groups of positions into
/// `points`.
fn complete_linkage(msa: &Msa, points: &[usize], k: usize) -> Vec<Vec<usize>> {
    let s = points.len();
    let mut d = vec![0.0f64; s * s];
    for a in 0..s {
        for b in (a + 1)..s {
            let v = dist(msa, points[a], points[b]);
            d[a * s + b] = v;
            d[b * s + a] = v;
        }
    }
    let mut alive = vec![true; s];
    let mut merges: Vec<(f64, usize, usize)> = Vec::with_capacity(s.saturating_sub(1));
    let mut chain: Vec<usize> = Vec::new();
    let mut remaining = s;
    while remaining > 1 {
        if chain.is_empty() {
            chain.push((0..s).find(|&i| alive[i]).expect("live cluster"));
        }
        let top = *chain.last().expect("non-empty chain");
        let prev = chain.len().checked_sub(2).map(|p| chain[p]);
        // nearest live neighbor; prefer the previous chain element on ties
        let mut best = (f64::INFINITY, usize::MAX);
        for c in (0..s).filter(|&c| alive[c] && c != top) {
            let v = d[top * s + c];
            if v < best.0 || (v == best.0 && Some(c) == prev) {
                best = (v, c);
            }
        }
        let nn = best.1;
        if Some(nn) == prev {
            chain.pop();
            chain.pop();
            let (a, b) = (top.min(nn), top.max(nn));
            merges.push((best.0, a, b));
            for c in 0..s {
                if alive[c] && c != a && c != b {
                    let v = d[a * s + c].max(d[b * s + c]);
                    d[a * s + c] = v;
                    d[c * s + a] = v;
                }
            }
            alive[b] = false;
            remaining -= 1;
        } else {
            chain.push(nn);
        }
    }
    merges.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    // replay the cheapest s - k merges with union-find
    let mut parent: Vec<usize> = (0..s).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(_, a, b) in merges.iter().take(s.saturating_sub(k)) {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        parent[hi] = lo;
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; s];
    for i in 0..s {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

/// Two-medoid split of one group, seeded with the current medoid and the
/// member farthest from it. `None` when every member sits at distance zero
/// from the medoid.
fn split(msa: &Msa, members: &[usize], current: usize) -> Option<[(usize, Vec<usize>); 2]> {
    let mut far = (0.0, usize::MAX);
    for &m in members {
        let d = dist(msa, current, m);
        if d > far.0 {
            far = (d, m);
        }
    }
    if far.1 == usize::MAX {
        return None;
    }
    let partition = |meds: [usize; 2]| {
        let mut parts: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for &m in members {
            let side = usize::from(dist(msa, m, meds[1]) < dist(msa, m, meds[0]));
            parts[side].push(m);
        }
        parts
    };
    // both seeds land on their own side, so this first partition is proper
    let mut meds = [current, far.1];
    let mut parts = partition(meds);
    for _ in 0..20 {
        let next = [medoid(msa, &parts[0]), medoid(msa, &parts[1])];
        if next == meds {
            break;
        }
        let next_parts = partition(next);
        if next_parts.iter().any(Vec::is_empty) {
            break;
        }
        meds = next;
        parts = next_parts;
    }
    let [p0, p1] = parts;
    Some([(meds[0], p0), (meds[1], p1)])
}

pub fn cluster_sequences(msa: &Msa, cfg: &ClusterConfig, run: &RunConfig) -> Result<ClusterPlan> {
    let n = msa.n_rows();
    if n < MIN_CLUSTERED {
        let all: Vec<usize> = (0..n).collect();
        let m = if n == 0 { 0 } else { medoid(msa, &all) };
        return Ok(ClusterPlan::from_groups(vec![(m, all)], n));
    }

    let sample_size = ((cfg.sample_frac * n as f64).ceil() as usize).clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sample = rand::seq::index::sample(&mut rng, n, sample_size).into_vec();
    sample.sort_unstable();

    let k = (sample_size as f64).sqrt().ceil() as usize;
    let mut medoids: Vec<usize> = Vec::new();
    let mut in_sample = vec![usize::MAX; n];
    for group in complete_linkage(msa, &sample, k) {
        let rows: Vec<usize> = group.iter().map(|&p| sample[p]).collect();
        let m = medoid(msa, &rows);
        // groups whose medoids coincide in sequence space collapse into one
        let c = medoids.iter().position(|&o| dist(msa, o, m) == 0.0).unwrap_or_else(|| {
            medoids.push(m);
            medoids.len() - 1
        });
        for r in rows {
            in_sample[r] = c;
        }
    }

    let rows: Vec<usize> = (0..n).collect();
    let (assign, _) = par_map(
        "assign",
        &rows,
        &(msa, &medoids, &in_sample),
        |(msa, medoids, in_sample), _, &i| Ok(if in_sample[i] != usize::MAX { in_sample[i] } else { nearest(msa, i, medoids) }),
        run,
    )?;
    let mut groups: Vec<(usize, Vec<usize>)> = medoids.iter().map(|&m| (m, Vec::new())).collect();
    for (i, c) in assign.into_iter().enumerate() {
        groups[c].1.push(i);
    }

    let cap = ((cfg.balance_cap * n as f64).ceil() as usize).max(1);
    let mut done: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut queue = groups;
    while let Some((m, members)) = queue.pop() {
        if members.len() <= cap {
            done.push((m, members));
            continue;
        }
        match split(msa, &members, m) {
            Some([a, b]) => {
                queue.push(a);
                queue.push(b);
            }
            None => done.push((m, members)),
        }
    }
    done.retain(|g| !g.1.is_empty());
    done.sort_by_key(|g| g.1.iter().copied().min());

    // singletons join the nearest cluster that still has room; with none
    // left they stay alone rather than break the cap
    let mut c = 0;
    while c < done.len() {
        if done[c].1.len() >= 2 {
            c += 1;
            continue;
        }
        let roomy: Vec<usize> = (0..done.len()).filter(|&o| o != c && done[o].1.len() < cap).collect();
        if roomy.is_empty() {
            c += 1;
            continue;
        }
        let target_medoids: Vec<usize> = roomy.iter().map(|&o| done[o].0).collect();
        let target = roomy[nearest(msa, done[c].0, &target_medoids)];
        let (_, members) = done.remove(c);
        let target = if target > c { target - 1 } else { target };
        done[target].1.extend(members);
        c = 0;
    }
    Ok(ClusterPlan::from_groups(done, n))
}
