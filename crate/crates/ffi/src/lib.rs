//! C ABI for the `slb` library.
//!
//! Every call returns an [`SlbStatus`]. On failure a message is stored per
//! thread and can be copied out with [`slb_last_error_message`]; it stays
//! until the next failure on the same thread. Handles are opaque and must be
//! released with the matching `_free` function. Panics never cross the
//! boundary: they are caught and reported as `SLB_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use slb::heavy_hitters::default_theta;
use slb::sim::DEFAULT_REPORT_EVERY;
use slb::solver::DEFAULT_EPSILON;
use slb::{
    HashFamily, HeadChoices, Key, LoadVector, Partitioner, PartitionerConfig, RunResult, Scheme,
    SimConfig, SolverInput, SpaceSaving, Workload, ZipfConfig,
};

pub const SLB_SCHEME_KG: u32 = 0;
pub const SLB_SCHEME_SG: u32 = 1;
pub const SLB_SCHEME_PKG: u32 = 2;
pub const SLB_SCHEME_RR: u32 = 3;
pub const SLB_SCHEME_DC: u32 = 4;
pub const SLB_SCHEME_WC: u32 = 5;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Panic = 4,
}

/// Where one message was sent.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SlbRoutingDecision {
    pub worker: usize,
    /// Number of candidate workers considered.
    pub d_used: usize,
    pub was_head: bool,
}

/// Solver output. `d` equals the worker count when `all_workers` is set.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SlbChoices {
    pub all_workers: bool,
    pub d: usize,
}

/// Simulation over a synthetic Zipf stream. `theta <= 0` selects 1/(5n).
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlbSimConfig {
    pub scheme: u32,
    pub workers: usize,
    pub sources: usize,
    pub zipf_z: f64,
    pub keys: usize,
    pub messages: u64,
    pub theta: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub report_every: u64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SlbRunSummary {
    pub messages: u64,
    pub final_imbalance: f64,
    pub mean_imbalance: f64,
    pub head_size: usize,
    pub d: usize,
    pub all_workers: bool,
    pub memory_units: u64,
    pub mem_pkg: u64,
    pub mem_sg: u64,
}

/// Routing state of one source.
pub struct SlbPartitioner {
    inner: Partitioner,
}

/// SpaceSaving summary over 64-bit keys.
pub struct SlbSpaceSaving {
    inner: SpaceSaving<u64>,
}

struct Failure {
    status: SlbStatus,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Failure {
            status: SlbStatus::InvalidArgument,
            message: message.into(),
        }
    }

    fn null(name: &str) -> Self {
        Failure {
            status: SlbStatus::NullPointer,
            message: format!("{name} is null"),
        }
    }
}

impl From<slb::Error> for Failure {
    fn from(e: slb::Error) -> Self {
        let status = if e.is_io() {
            SlbStatus::Io
        } else {
            SlbStatus::InvalidArgument
        };
        Failure {
            status,
            message: e.to_string(),
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<String>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn guard<F>(f: F) -> SlbStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SlbStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(failure.message);
            failure.status
        }
        Err(payload) => {
            let detail = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {detail}"));
            SlbStatus::Panic
        }
    }
}

unsafe fn out_ref<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or_else(|| Failure::null(name))
}

unsafe fn in_ref<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| Failure::null(name))
}

unsafe fn in_slice<'a, T>(ptr: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Failure::null(name));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

fn scheme_from(code: u32) -> Result<Scheme, Failure> {
    Ok(match code {
        SLB_SCHEME_KG => Scheme::Kg,
        SLB_SCHEME_SG => Scheme::Sg,
        SLB_SCHEME_PKG => Scheme::Pkg,
        SLB_SCHEME_RR => Scheme::Rr,
        SLB_SCHEME_DC => Scheme::Dc,
        SLB_SCHEME_WC => Scheme::Wc,
        other => return Err(Failure::invalid(format!("unknown scheme code {other}"))),
    })
}

fn choices_to_c(choices: HeadChoices, workers: usize) -> SlbChoices {
    SlbChoices {
        all_workers: choices == HeadChoices::AllWorkers,
        d: choices.width(workers),
    }
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating to `len - 1` bytes. Returns the full
/// message length in bytes, or 0 if no error has been recorded.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn slb_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let slot = slot.borrow();
        let Some(message) = slot.as_deref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        if !buf.is_null() && len > 0 {
            let n = message.len().min(len - 1);
            std::ptr::copy_nonoverlapping(message.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        message.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn slb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Expected number of distinct workers hit by `h * d` uniform placements
/// into `n` workers.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn slb_expected_workers(
    h: usize,
    d: usize,
    n: usize,
    out: *mut f64,
) -> SlbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        if h == 0 || d == 0 || n == 0 {
            return Err(Failure::invalid("h, d and n must all be positive"));
        }
        *out = slb::expected_workers(h, d, n);
        Ok(())
    })
}

/// Smallest number of choices for the head keys. `head_probs` need not be
/// sorted; the tail mass is `1 - sum(head_probs)`.
///
/// # Safety
/// `head_probs` must point to `len` readable doubles (or be null with
/// `len == 0`); `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn slb_find_optimal_choices(
    head_probs: *const f64,
    len: usize,
    workers: usize,
    epsilon: f64,
    out: *mut SlbChoices,
) -> SlbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let probs = in_slice(head_probs, len, "head_probs")?;
        let input = SolverInput::from_estimates(probs.to_vec(), workers, epsilon)?;
        *out = choices_to_c(slb::find_optimal_choices(&input).decision, workers);
        Ok(())
    })
}

/// Probability of the key with 1-based `rank` under Zipf(`z`) over `keys`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn slb_zipf_probability(
    rank: usize,
    z: f64,
    keys: usize,
    out: *mut f64,
) -> SlbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = slb::zipf_probability(rank, z, keys)?;
        Ok(())
    })
}

/// `(max - mean) / total` of a load vector; 0 when every count is 0.
///
/// # Safety
/// `counts` must point to `len` readable values; `out` must be valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn slb_imbalance(counts: *const u64, len: usize, out: *mut f64) -> SlbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let counts = in_slice(counts, len, "counts")?;
        *out = LoadVector::from_counts(counts.to_vec())?.imbalance();
        Ok(())
    })
}

/// Creates the routing state of source `source_index` out of `sources`.
/// `theta <= 0` and `epsilon <= 0` select the defaults. All sources of one
/// deployment must share `seed`.
///
/// # Safety
/// `out` must be valid for writes. The handle written there must be freed
/// with [`slb_partitioner_free`].
#[no_mangle]
pub unsafe extern "C" fn slb_partitioner_new(
    scheme: u32,
    workers: usize,
    source_index: usize,
    sources: usize,
    theta: f64,
    epsilon: f64,
    seed: u64,
    out: *mut *mut SlbPartitioner,
) -> SlbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = std::ptr::null_mut();
        let theta = if theta > 0.0 {
            theta
        } else {
            default_theta(workers)?
        };
        let epsilon = if epsilon > 0.0 {
            epsilon
        } else {
            DEFAULT_EPSILON
        };
        let config = PartitionerConfig {
            scheme: scheme_from(scheme)?,
            workers,
            theta,
            epsilon,
            source_index,
            sources,
        };
        let family = HashFamily::for_workers(seed, workers)?;
        let inner = Partitioner::new(config, family)?;
        *out = Box::into_raw(Box::new(SlbPartitioner { inner }));
        Ok(())
    })
}

/// Routes one message with key `key`.
///
/// # Safety
/// `partitioner` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn slb_partitioner_route(
    partitioner: *mut SlbPartitioner,
    key: u64,
    out: *mut SlbRoutingDecision,
) -> SlbStatus {
    guard(|| {
        let p = out_ref(partitioner, "partitioner")?;
        let out = out_ref(out, "out")?;
        let d = p.inner.route_key(Key(key));
        *out = SlbRoutingDecision {
            worker: d.worker.index(),
            d_used: d.d_used,
            was_head: d.was_head,
        };
        Ok(())
    })
}

/// Number of workers the partitioner routes to.
///
/// # Safety
/// `partitioner` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn slb_partitioner_workers(
    partitioner: *const SlbPartitioner,
    out: *mut usize,
) -> SlbStatus {
    guard(|| {
        let p = in_ref(partitioner, "partitioner")?;
        *out_ref(out, "out")? = p.inner.config().workers;
        Ok(())
    })
}

/// Copies this source's local load into `counts`, which must hold exactly
/// as many entries as there are workers. `total` may be null.
///
/// # Safety
/// `partitioner` must be a live handle; `counts` must point to `len`
/// writable values; `total` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn slb_partitioner_load(
    partitioner: *const SlbPartitioner,
    counts: *mut u64,
    len: usize,
    total: *mut u64,
) -> SlbStatus {
    guard(|| {
        let p = in_ref(partitioner, "partitioner")?;
        let load = p.inner.local_load();
        if len != load.workers() {
            return Err(Failure::invalid(format!(
                "counts holds {len} entries, partitioner has {} workers",
                load.workers()
            )));
        }
        if counts.is_null() {
            return Err(Failure::null("counts"));
        }
        std::slice::from_raw_parts_mut(counts, len).copy_from_slice(load.counts());
        if let Some(total) = total.as_mut() {
            *total = load.total();
        }
        Ok(())
    })
}

/// Current choices for head keys (`{false, 2}` before any head appears for
/// D-Choices; KG, SG and PKG report 1, all and 2).
///
/// # Safety
/// `partitioner` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn slb_partitioner_head_choices(
    partitioner: *const SlbPartitioner,
    out: *mut SlbChoices,
) -> SlbStatus {
    guard(|| {
        let p = in_ref(partitioner, "partitioner")?;
        let out = out_ref(out, "out")?;
        let n = p.inner.config().workers;
        let choices = match p.inner.config().scheme {
            Scheme::Kg => HeadChoices::Choices(1),
            Scheme::Pkg => HeadChoices::Choices(2),
            Scheme::Sg => HeadChoices::AllWorkers,
            _ => p.inner.head_choices().unwrap_or(HeadChoices::Choices(2)),
        };
        *out = choices_to_c(choices, n);
        Ok(())
    })
}

/// Releases a partitioner. Null is ignored.
///
/// # Safety
/// `partitioner` must be null or a handle from [`slb_partitioner_new`] that
/// has not been freed.
#[no_mangle]
pub unsafe extern "C" fn slb_partitioner_free(partitioner: *mut SlbPartitioner) {
    if !partitioner.is_null() {
        drop(Box::from_raw(partitioner));
    }
}

/// Creates a summary with `capacity` counters.
///
/// # Safety
/// `out` must be valid for writes; free the handle with
/// [`slb_space_saving_free`].
#[no_mangle]
pub unsafe extern "C" fn slb_space_saving_new(
    capacity: usize,
    out: *mut *mut SlbSpaceSaving,
) -> SlbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = std::ptr::null_mut();
        let inner = SpaceSaving::new(capacity)?;
        *out = Box::into_raw(Box::new(SlbSpaceSaving { inner }));
        Ok(())
    })
}

/// Creates a summary sized to track every key above frequency `theta`.
///
/// # Safety
/// As [`slb_space_saving_new`].
#[no_mangle]
pub unsafe extern "C" fn slb_space_saving_for_threshold(
    theta: f64,
    out: *mut *mut SlbSpaceSaving,
) -> SlbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = std::ptr::null_mut();
        let inner = SpaceSaving::for_threshold(theta)?;
        *out = Box::into_raw(Box::new(SlbSpaceSaving { inner }));
        Ok(())
    })
}

/// Counts one occurrence of `key`.
///
/// # Safety
/// `summary` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn slb_space_saving_update(
    summary: *mut SlbSpaceSaving,
    key: u64,
) -> SlbStatus {
    guard(|| {
        out_ref(summary, "summary")?.inner.update(key);
        Ok(())
    })
}

/// Estimated count of `key` (never below its true count).
///
/// # Safety
/// `summary` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn slb_space_saving_estimate(
    summary: *const SlbSpaceSaving,
    key: u64,
    out: *mut u64,
) -> SlbStatus {
    guard(|| {
        let s = in_ref(summary, "summary")?;
        *out_ref(out, "out")? = s.inner.estimate(&key);
        Ok(())
    })
}

/// Whether `key` is tracked with estimated frequency `>= theta`.
///
/// # Safety
/// `summary` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn slb_space_saving_is_head(
    summary: *const SlbSpaceSaving,
    key: u64,
    theta: f64,
    out: *mut bool,
) -> SlbStatus {
    guard(|| {
        let s = in_ref(summary, "summary")?;
        *out_ref(out, "out")? = s.inner.is_head(&key, theta);
        Ok(())
    })
}

/// Number of head keys for `theta` and the remaining tail mass.
/// `tail_mass` may be null.
///
/// # Safety
/// `summary` must be a live handle; `size` must be valid for writes and
/// `tail_mass` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn slb_space_saving_head(
    summary: *const SlbSpaceSaving,
    theta: f64,
    size: *mut usize,
    tail_mass: *mut f64,
) -> SlbStatus {
    guard(|| {
        let s = in_ref(summary, "summary")?;
        let size = out_ref(size, "size")?;
        let head = s.inner.head(theta);
        *size = head.len();
        if let Some(tail) = tail_mass.as_mut() {
            *tail = head.tail_mass;
        }
        Ok(())
    })
}

/// Messages counted so far.
///
/// # Safety
/// `summary` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn slb_space_saving_observed(
    summary: *const SlbSpaceSaving,
    out: *mut u64,
) -> SlbStatus {
    guard(|| {
        let s = in_ref(summary, "summary")?;
        *out_ref(out, "out")? = s.inner.observed();
        Ok(())
    })
}

/// Releases a summary. Null is ignored.
///
/// # Safety
/// `summary` must be null or an unfreed handle from this library.
#[no_mangle]
pub unsafe extern "C" fn slb_space_saving_free(summary: *mut SlbSpaceSaving) {
    if !summary.is_null() {
        drop(Box::from_raw(summary));
    }
}

/// Fills `out` with the command-line defaults and PKG as the scheme.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn slb_sim_config_default(out: *mut SlbSimConfig) -> SlbStatus {
    guard(|| {
        *out_ref(out, "out")? = SlbSimConfig {
            scheme: SLB_SCHEME_PKG,
            workers: 10,
            sources: slb::sim::DEFAULT_SOURCES,
            zipf_z: 1.0,
            keys: 10_000,
            messages: 1_000_000,
            theta: 0.0,
            epsilon: DEFAULT_EPSILON,
            seed: 0,
            report_every: DEFAULT_REPORT_EVERY,
        };
        Ok(())
    })
}

fn sim_config(c: &SlbSimConfig) -> Result<SimConfig, Failure> {
    let mut config = SimConfig::new(
        scheme_from(c.scheme)?,
        c.workers,
        Workload::Zipf(ZipfConfig {
            z: c.zipf_z,
            num_keys: c.keys,
            num_messages: c.messages,
            seed: c.seed,
        }),
    );
    config.sources = c.sources;
    config.theta = (c.theta > 0.0).then_some(c.theta);
    config.epsilon = c.epsilon;
    config.seed = c.seed;
    config.report_every = c.report_every;
    config.validate()?;
    Ok(config)
}

fn summarize(r: &RunResult) -> SlbRunSummary {
    SlbRunSummary {
        messages: r.messages,
        final_imbalance: r.final_imbalance,
        mean_imbalance: r.mean_imbalance,
        head_size: r.head_size,
        d: r.d_final.width(r.config.workers),
        all_workers: r.d_final == HeadChoices::AllWorkers,
        memory_units: r.memory.actual,
        mem_pkg: r.memory.mem_pkg,
        mem_sg: r.memory.mem_sg,
    }
}

/// Runs one simulation and writes its summary.
///
/// # Safety
/// `config` must be readable and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn slb_simulate(
    config: *const SlbSimConfig,
    out: *mut SlbRunSummary,
) -> SlbStatus {
    guard(|| {
        let config = sim_config(in_ref(config, "config")?)?;
        let out = out_ref(out, "out")?;
        *out = summarize(&slb::run(&config)?);
        Ok(())
    })
}

/// Runs one simulation and writes its CSV report to `path`. `out` may be
/// null.
///
/// # Safety
/// `config` must be readable, `path` a NUL-terminated UTF-8 string and
/// `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn slb_simulate_csv(
    config: *const SlbSimConfig,
    path: *const c_char,
    out: *mut SlbRunSummary,
) -> SlbStatus {
    guard(|| {
        let config = sim_config(in_ref(config, "config")?)?;
        if path.is_null() {
            return Err(Failure::null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Failure::invalid("path is not valid UTF-8"))?;
        let result = slb::run(&config)?;
        slb::emit_csv(&result, PathBuf::from(path))?;
        if let Some(out) = out.as_mut() {
            *out = summarize(&result);
        }
        Ok(())
    })
}
