//! In-process parallel dataflow.
//!
//! Workers pull disjoint chunks of an indexed item list and run a pure map
//! over them with read-only access to a shared context (the analogue of a
//! broadcast variable). Results are handed back to the calling thread, which
//! folds them strictly in item order, so the output never depends on the
//! thread count or on completion order.

use std::alloc::{GlobalAlloc, Layout, System};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunConfig {
    /// Worker threads; 0 means one per available core.
    pub threads: usize,
    /// Items per task; `None` picks `ceil(n / (8 * threads))`.
    pub chunk_size: Option<usize>,
    pub seed: u64,
}

impl RunConfig {
    pub fn with_threads(threads: usize) -> Self {
        RunConfig {
            threads,
            ..Default::default()
        }
    }

    pub fn resolved_threads(&self) -> usize {
        if self.threads == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            self.threads
        }
    }

    pub fn resolved_chunk_size(&self, n: usize) -> usize {
        self.chunk_size
            .unwrap_or_else(|| n.div_ceil(8 * self.resolved_threads()))
            .max(1)
    }

    pub fn task_count(&self, n: usize) -> usize {
        n.div_ceil(self.resolved_chunk_size(n))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StageReport {
    pub name: String,
    pub wall_secs: f64,
    pub items: usize,
    pub tasks: usize,
    pub chunk_size: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunReport {
    pub threads: usize,
    pub stages: Vec<StageReport>,
    /// Peak bytes allocated above the level at the start of the run when the
    /// tracking allocator is installed, otherwise the process peak RSS.
    pub peak_memory_bytes: u64,
    pub memory_source: &'static str,
    /// Free-form counters (DP cells, anchors, ...).
    pub counters: BTreeMap<String, u64>,
}

impl RunReport {
    pub fn tasks(&self) -> usize {
        self.stages.iter().map(|s| s.tasks).sum()
    }

    pub fn total_secs(&self) -> f64 {
        self.stages.iter().map(|s| s.wall_secs).sum()
    }

    pub fn stage(&self, name: &str) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn add_counter(&mut self, key: &str, value: u64) {
        *self.counters.entry(key.to_string()).or_default() += value;
    }

    /// Flat `key=value` lines.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "threads={}", self.threads);
        let _ = writeln!(out, "tasks={}", self.tasks());
        let _ = writeln!(out, "total_secs={:.6}", self.total_secs());
        let _ = writeln!(out, "peak_memory_bytes={}", self.peak_memory_bytes);
        let _ = writeln!(out, "memory_source={}", self.memory_source);
        for s in &self.stages {
            let _ = writeln!(out, "stage.{}.wall_secs={:.6}", s.name, s.wall_secs);
            let _ = writeln!(out, "stage.{}.items={}", s.name, s.items);
            let _ = writeln!(out, "stage.{}.tasks={}", s.name, s.tasks);
            let _ = writeln!(out, "stage.{}.chunk_size={}", s.name, s.chunk_size);
        }
        for (k, v) in &self.counters {
            let _ = writeln!(out, "counter.{k}={v}");
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Samples memory at the start of a run and reports the peak above it.
pub struct MemoryProbe {
    baseline: usize,
}

impl MemoryProbe {
    pub fn start() -> Self {
        if memory::is_tracking() {
            MemoryProbe {
                baseline: memory::reset_peak(),
            }
        } else {
            MemoryProbe { baseline: 0 }
        }
    }

    pub fn finish(&self, report: &mut RunReport) {
        if memory::is_tracking() {
            report.peak_memory_bytes = memory::peak().saturating_sub(self.baseline) as u64;
            report.memory_source = "allocator";
        } else {
            report.peak_memory_bytes = memory::peak_rss().unwrap_or(0);
            report.memory_source = "rss";
        }
    }
}

/// Chunked parallel map with an in-order fold.
///
/// `map` runs on worker threads with shared read-only access to `shared`;
/// `fold` runs on the calling thread and sees results in ascending item
/// index. The first error (lowest failing index among those observed) is
/// returned and outstanding chunks are skipped. Panics in `map` surface as
/// [`Error::TaskPanic`].
pub fn par_map_reduce<T, C, R, A, M, F>(
    name: &str,
    items: &[T],
    shared: &C,
    map: M,
    init: A,
    mut fold: F,
    cfg: &RunConfig,
) -> Result<(A, StageReport)>
where
    T: Sync,
    C: Sync + ?Sized,
    R: Send,
    M: Fn(&C, usize, &T) -> Result<R> + Sync,
    F: FnMut(A, usize, R) -> Result<A>,
{
    let start = Instant::now();
    let n = items.len();
    let threads = cfg.resolved_threads();
    let chunk = cfg.resolved_chunk_size(n);
    let tasks = n.div_ceil(chunk);
    let mut report = StageReport {
        name: name.to_string(),
        items: n,
        tasks,
        chunk_size: chunk,
        wall_secs: 0.0,
    };

    let run_chunk = |t: usize, cancel: &AtomicBool| -> Result<Vec<R>> {
        let lo = t * chunk;
        let hi = (lo + chunk).min(n);
        let mut out = Vec::with_capacity(hi - lo);
        for (i, item) in items[lo..hi].iter().enumerate() {
            if cancel.load(Ordering::Relaxed) {
                break;
            }
            out.push(map(shared, lo + i, item)?);
        }
        Ok(out)
    };
    let guarded = |t: usize, cancel: &AtomicBool| -> Result<Vec<R>> {
        catch_unwind(AssertUnwindSafe(|| run_chunk(t, cancel))).unwrap_or_else(|p| Err(Error::TaskPanic(panic_message(p))))
    };

    let mut acc = init;
    if threads <= 1 || tasks <= 1 {
        let cancel = AtomicBool::new(false);
        for t in 0..tasks {
            for (i, r) in guarded(t, &cancel)?.into_iter().enumerate() {
                acc = fold(acc, t * chunk + i, r)?;
            }
        }
        report.wall_secs = start.elapsed().as_secs_f64();
        return Ok((acc, report));
    }

    let next = AtomicUsize::new(0);
    let cancel = AtomicBool::new(false);
    let workers = threads.min(tasks);
    let result = std::thread::scope(|scope| -> Result<A> {
        let (tx, rx) = mpsc::sync_channel::<(usize, Result<Vec<R>>)>(2 * workers);
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, cancel, guarded) = (&next, &cancel, &guarded);
            scope.spawn(move || loop {
                if cancel.load(Ordering::Relaxed) {
                    break;
                }
                let t = next.fetch_add(1, Ordering::Relaxed);
                if t >= tasks {
                    break;
                }
                let res = guarded(t, cancel);
                if res.is_err() {
                    cancel.store(true, Ordering::Relaxed);
                }
                if tx.send((t, res)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        let mut pending: BTreeMap<usize, Vec<R>> = BTreeMap::new();
        let mut expected = 0usize;
        let mut failure: Option<(usize, Error)> = None;
        let mut acc = Some(acc);
        for (t, res) in rx {
            match res {
                Err(e) => {
                    cancel.store(true, Ordering::Relaxed);
                    if failure.as_ref().is_none_or(|(ft, _)| t < *ft) {
                        failure = Some((t, e));
                    }
                }
                Ok(v) if failure.is_none() => {
                    pending.insert(t, v);
                    while let Some(v) = pending.remove(&expected) {
                        for (i, r) in v.into_iter().enumerate() {
                            let a = acc.take().expect("accumulator present");
                            match fold(a, expected * chunk + i, r) {
                                Ok(a) => acc = Some(a),
                                Err(e) => {
                                    cancel.store(true, Ordering::Relaxed);
                                    failure = Some((expected, e));
                                    break;
                                }
                            }
                        }
                        if failure.is_some() {
                            break;
                        }
                        expected += 1;
                    }
                }
                Ok(_) => {}
            }
        }
        match failure {
            Some((_, e)) => Err(e),
            None => Ok(acc.expect("accumulator present")),
        }
    });
    report.wall_secs = start.elapsed().as_secs_f64();
    result.map(|acc| (acc, report))
}

/// Order-preserving parallel map.
pub fn par_map<T, C, R, M>(name: &str, items: &[T], shared: &C, map: M, cfg: &RunConfig) -> Result<(Vec<R>, StageReport)>
where
    T: Sync,
    C: Sync + ?Sized,
    R: Send,
    M: Fn(&C, usize, &T) -> Result<R> + Sync,
{
    par_map_reduce(
        name,
        items,
        shared,
        map,
        Vec::with_capacity(items.len()),
        |mut acc, _, r| {
            acc.push(r);
            Ok(acc)
        },
        cfg,
    )
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "unknown panic".to_string()
    }
}

/// Allocation tracking. Binaries opt in with
/// `#[global_allocator] static A: TrackingAllocator = TrackingAllocator;`.
pub mod memory {
    use super::*;

    static CURRENT: AtomicUsize = AtomicUsize::new(0);
    static PEAK: AtomicUsize = AtomicUsize::new(0);
    static TRACKING: AtomicBool = AtomicBool::new(false);

    pub struct TrackingAllocator;

    unsafe impl GlobalAlloc for TrackingAllocator {
        unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
            let p = System.alloc(layout);
            if !p.is_null() {
                grow(layout.size());
            }
            p
        }

        unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
            let p = System.alloc_zeroed(layout);
            if !p.is_null() {
                grow(layout.size());
            }
            p
        }

        unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
            System.dealloc(ptr, layout);
            CURRENT.fetch_sub(layout.size(), Ordering::Relaxed);
        }

        unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
            let p = System.realloc(ptr, layout, new_size);
            if !p.is_null() {
                if new_size >= layout.size() {
                    grow(new_size - layout.size());
                } else {
                    CURRENT.fetch_sub(layout.size() - new_size, Ordering::Relaxed);
                }
            }
            p
        }
    }

    #[inline]
    fn grow(bytes: usize) {
        let now = CURRENT.fetch_add(bytes, Ordering::Relaxed) + bytes;
        PEAK.fetch_max(now, Ordering::Relaxed);
        if !TRACKING.load(Ordering::Relaxed) {
            TRACKING.store(true, Ordering::Relaxed);
        }
    }

    pub fn is_tracking() -> bool {
        TRACKING.load(Ordering::Relaxed)
    }

    pub fn current() -> usize {
        CURRENT.load(Ordering::Relaxed)
    }

    pub fn peak() -> usize {
        PEAK.load(Ordering::Relaxed)
    }

    /// Resets the peak to the current level and returns that level.
    pub fn reset_peak() -> usize {
        let now = CURRENT.load(Ordering::Relaxed);
        PEAK.store(now, Ordering::Relaxed);
        now
    }

    /// Peak resident set size from `/proc/self/status`, Linux only.
    pub fn peak_rss() -> Option<u64> {
        let status = std::fs::read_to_string("/proc/self/status").ok()?;
        let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
        let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
        Some(kb * 1024)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Mutex;

    use super::*;

    fn cfg(threads: usize, chunk: Option<usize>) -> RunConfig {
        RunConfig {
            threads,
            chunk_size: chunk,
            seed: 0,
        }
    }

    #[test]
    fn task_count_is_ceiling() {
        assert_eq!(cfg(4, Some(3)).task_count(10), 4);
        assert_eq!(cfg(1, None).resolved_chunk_size(10), 2);
        assert_eq!(cfg(8, None).resolved_chunk_size(10), 1);
        assert_eq!(cfg(2, None).resolved_chunk_size(0), 1);
        let items: Vec<u32> = (0..10).collect();
        let (_, st) = par_map("t", &items, &(), |_, _, x| Ok(*x), &cfg(4, Some(3))).unwrap();
        assert_eq!(st.tasks, 4);
    }

    #[test]
    fn fold_sees_index_order() {
        let items: Vec<usize> = (0..257).collect();
        let started = Mutex::new(Vec::new());
        for threads in [1, 2, 8] {
            for chunk in [None, Some(1), Some(7)] {
                let (order, _) = par_map_reduce(
                    "t",
                    &items,
                    &started,
                    |log, i, x| {
                        log.lock().unwrap().push(i);
                        // uneven work so completion order scrambles
                        std::thread::sleep(std::time::Duration::from_micros((x % 5) as u64 * 20));
                        Ok(*x)
                    },
                    Vec::new(),
                    |mut acc, i, x| {
                        assert_eq!(i, x);
                        acc.push(i);
                        Ok(acc)
                    },
                    &cfg(threads, chunk),
                )
                .unwrap();
                assert_eq!(order, items);
            }
        }
    }

    #[test]
    fn matches_sequential_fold() {
        let items: Vec<u64> = (1..=1000).collect();
        let seq: u64 = items.iter().fold(7, |h, x| h.wrapping_mul(31).wrapping_add(x * x));
        for threads in [1, 3, 8] {
            let (h, _) = par_map_reduce(
                "t",
                &items,
                &(),
                |_, _, x| Ok(x * x),
                7u64,
                |h, _, sq| Ok(h.wrapping_mul(31).wrapping_add(sq)),
                &cfg(threads, Some(13)),
            )
            .unwrap();
            assert_eq!(h, seq);
        }
    }

    #[test]
    fn errors_and_panics_propagate() {
        let items: Vec<usize> = (0..100).collect();
        for threads in [1, 4] {
            let err = par_map(
                "t",
                &items,
                &(),
                |_, i, _| if i == 42 { Err(Error::EmptyInput) } else { Ok(i) },
                &cfg(threads, Some(5)),
            )
            .unwrap_err();
            assert!(matches!(err, Error::EmptyInput));

            let err = par_map(
                "t",
                &items,
                &(),
                |_, i, _| {
                    if i == 17 {
                        panic!("boom at {i}");
                    }
                    Ok(i)
                },
                &cfg(threads, Some(5)),
            )
            .unwrap_err();
            assert!(matches!(err, Error::TaskPanic(ref m) if m.contains("boom at 17")), "{err:?}");
        }
    }

    #[test]
    fn report_formats() {
        let mut r = RunReport {
            threads: 2,
            ..Default::default()
        };
        r.stages.push(StageReport {
            name: "map".into(),
            wall_secs: 0.5,
            items: 10,
            tasks: 4,
            chunk_size: 3,
        });
        r.add_counter("dp_cells", 12);
        let kv = r.to_key_value();
        assert!(kv.contains("tasks=4\n"));
        assert!(kv.contains("stage.map.chunk_size=3\n"));
        assert!(kv.contains("counter.dp_cells=12\n"));
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["stages"][0]["tasks"], 4);
    }
}
