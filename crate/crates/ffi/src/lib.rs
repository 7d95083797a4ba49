//! C interface to the semcom community detector.
//!
//! Every object crosses the boundary as an opaque handle created by a
//! `*_new`/`*_load_*` function and released by the matching `*_free`.
//! Fallible calls return a [`SemcomStatus`]; on failure
//! [`semcom_last_error_message`] describes the error for the calling thread.
//! Strings returned through out-parameters are owned by the caller and must
//! be released with [`semcom_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use semcom::graph_model::parse_pairs;
use semcom::output::{write_json, CommunitiesFile, COMMUNITIES_FILE, REPORT_JSON};
use semcom::synthgen::write_planted;
use semcom::{Config, Dataset, Detection, MetricsReport, PlantedSpec, TopicMap};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemcomStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidConfig = 5,
    InvalidArgument = 6,
    EmptyDataset = 7,
    Numeric = 8,
    Internal = 9,
    Panic = 10,
}

/// Run configuration.
pub struct SemcomConfig {
    inner: Config,
}

/// A loaded, unpruned dataset with its tag-to-topic map.
pub struct SemcomDataset {
    dataset: Dataset,
    topics: TopicMap,
}

/// Communities and metrics of one detection run.
pub struct SemcomResult {
    detection: Detection,
    report: MetricsReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure {
    status: SemcomStatus,
    message: String,
}

impl Failure {
    fn null(what: &str) -> Self {
        Failure {
            status: SemcomStatus::NullPointer,
            message: format!("{what} is null"),
        }
    }

    fn argument(message: String) -> Self {
        Failure {
            status: SemcomStatus::InvalidArgument,
            message,
        }
    }
}

impl From<semcom::Error> for Failure {
    fn from(e: semcom::Error) -> Self {
        use semcom::Error as E;
        let status = match &e {
            E::Io { .. } => SemcomStatus::Io,
            E::Parse { .. } => SemcomStatus::Parse,
            E::InvalidConfig(_) => SemcomStatus::InvalidConfig,
            E::InvalidArgument(_) | E::ItemMismatch | E::NotParticipant { .. } => {
                SemcomStatus::InvalidArgument
            }
            E::EmptyDataset(_) | E::ZeroDegree { .. } | E::EdgelessGraph => {
                SemcomStatus::EmptyDataset
            }
            E::Dimension { .. } | E::NoConvergence { .. } | E::SilhouetteUndefined(_) => {
                SemcomStatus::Numeric
            }
            E::Json(_) => SemcomStatus::Internal,
        };
        Failure {
            status,
            message: e.to_string(),
        }
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SemcomStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            clear_last_error();
            SemcomStatus::Ok
        }
        Ok(Err(fail)) => {
            set_last_error(fail.message);
            fail.status
        }
        Err(_) => {
            set_last_error("panic inside semcom".into());
            SemcomStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure {
        status: SemcomStatus::InvalidUtf8,
        message: format!("{what} is not valid UTF-8"),
    })
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::null(what))
}

unsafe fn handle_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null(what));
    }
    out.write(value);
    Ok(())
}

fn owned_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::argument("string contains an interior NUL".into()))
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next semcom call on the same thread.
#[no_mangle]
pub extern "C" fn semcom_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn semcom_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn semcom_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// New configuration holding the defaults.
#[no_mangle]
pub extern "C" fn semcom_config_new() -> *mut SemcomConfig {
    Box::into_raw(Box::new(SemcomConfig {
        inner: Config::default(),
    }))
}

/// # Safety
/// `cfg` must come from [`semcom_config_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn semcom_config_free(cfg: *mut SemcomConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Applies `edit` and keeps it only if the resulting configuration is valid.
unsafe fn edit_config(cfg: *mut SemcomConfig, edit: impl FnOnce(&mut Config)) -> SemcomStatus {
    guard(|| {
        let cfg = handle_mut(cfg, "config")?;
        let mut next = cfg.inner.clone();
        edit(&mut next);
        next.validate()?;
        cfg.inner = next;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn semcom_config_set_alpha(
    cfg: *mut SemcomConfig,
    alpha: f64,
) -> SemcomStatus {
    edit_config(cfg, |c| c.alpha = alpha)
}

/// PurQ weights to report; replaces the current list.
///
/// # Safety
/// `cfg` must be a live config handle and `betas` must point to `len` values.
#[no_mangle]
pub unsafe extern "C" fn semcom_config_set_betas(
    cfg: *mut SemcomConfig,
    betas: *const f64,
    len: usize,
) -> SemcomStatus {
    if betas.is_null() {
        set_last_error("betas is null".into());
        return SemcomStatus::NullPointer;
    }
    let values = std::slice::from_raw_parts(betas, len).to_vec();
    edit_config(cfg, |c| c.betas = values)
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn semcom_config_set_svd_k(cfg: *mut SemcomConfig, k: usize) -> SemcomStatus {
    edit_config(cfg, |c| c.svd_k = k)
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn semcom_config_set_min_clusters(
    cfg: *mut SemcomConfig,
    min_clusters: usize,
) -> SemcomStatus {
    edit_config(cfg, |c| c.min_clusters = min_clusters)
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn semcom_config_set_epsilon(
    cfg: *mut SemcomConfig,
    epsilon: f64,
) -> SemcomStatus {
    edit_config(cfg, |c| c.epsilon = epsilon)
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn semcom_config_set_min_tag_freq(
    cfg: *mut SemcomConfig,
    min_tag_freq: usize,
) -> SemcomStatus {
    edit_config(cfg, |c| c.min_tag_freq = min_tag_freq)
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn semcom_config_set_min_shared(
    cfg: *mut SemcomConfig,
    min_shared: usize,
) -> SemcomStatus {
    edit_config(cfg, |c| c.min_shared = min_shared)
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn semcom_config_set_profile_theta(
    cfg: *mut SemcomConfig,
    theta: f64,
) -> SemcomStatus {
    edit_config(cfg, |c| c.profile_theta = theta)
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn semcom_config_set_singleton_intra(
    cfg: *mut SemcomConfig,
    value: f64,
) -> SemcomStatus {
    edit_config(cfg, |c| c.singleton_intra = value)
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn semcom_config_set_seed(cfg: *mut SemcomConfig, seed: u64) -> SemcomStatus {
    edit_config(cfg, |c| c.rng_seed = seed)
}

/// Loads the standard TSV files from a directory.
///
/// # Safety
/// `dir` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn semcom_dataset_load_dir(
    dir: *const c_char,
    out: *mut *mut SemcomDataset,
) -> SemcomStatus {
    guard(|| {
        let dir = str_arg(dir, "dir")?;
        let files = semcom::InputFiles::from_dir(dir);
        let dataset = semcom::load_dataset(&files)?;
        let topics = TopicMap::load(&files.tag_topic, &dataset)?;
        let h = Box::into_raw(Box::new(SemcomDataset { dataset, topics }));
        put(out, h, "out")
    })
}

/// Builds a dataset from in-memory TSV texts in the file formats.
/// `friends` and `user_tags` may be NULL.
///
/// # Safety
/// Non-null pointers must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn semcom_dataset_from_tsv(
    event_user: *const c_char,
    event_tag: *const c_char,
    tag_topic: *const c_char,
    friends: *const c_char,
    user_tags: *const c_char,
    out: *mut *mut SemcomDataset,
) -> SemcomStatus {
    guard(|| {
        let pairs = |p: *const c_char, name: &str| -> Result<Vec<(String, String)>, Failure> {
            if p.is_null() {
                return Ok(Vec::new());
            }
            Ok(parse_pairs(Path::new(name), str_arg(p, name)?)?)
        };
        if event_user.is_null() || event_tag.is_null() || tag_topic.is_null() {
            return Err(Failure::null("event_user, event_tag or tag_topic"));
        }
        let dataset = Dataset::from_edges(
            pairs(event_user, "event_user")?,
            pairs(event_tag, "event_tag")?,
            pairs(friends, "friends")?,
            pairs(user_tags, "user_tags")?,
        );
        let topics = TopicMap::from_pairs(pairs(tag_topic, "tag_topic")?);
        let h = Box::into_raw(Box::new(SemcomDataset { dataset, topics }));
        put(out, h, "out")
    })
}

/// Writes a planted synthetic dataset (default shape) into `dir`.
///
/// # Safety
/// `dir` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn semcom_generate_planted(seed: u64, dir: *const c_char) -> SemcomStatus {
    guard(|| {
        let dir = str_arg(dir, "dir")?;
        let spec = PlantedSpec {
            rng_seed: seed,
            ..PlantedSpec::default()
        };
        let net = semcom::generate_planted_esbn(&spec)?;
        write_planted(&net, Path::new(dir))?;
        Ok(())
    })
}

/// Number of events before pruning; 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn semcom_dataset_event_count(ds: *const SemcomDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.dataset.events.len())
}

/// Number of users before pruning; 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn semcom_dataset_user_count(ds: *const SemcomDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.dataset.users.len())
}

/// # Safety
/// `ds` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn semcom_dataset_free(ds: *mut SemcomDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Runs the full pipeline. `cfg` may be NULL for the defaults.
///
/// # Safety
/// `ds` must be a live dataset handle, `cfg` NULL or a live config handle,
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn semcom_detect(
    ds: *const SemcomDataset,
    cfg: *const SemcomConfig,
    out: *mut *mut SemcomResult,
) -> SemcomStatus {
    guard(|| {
        let ds = handle(ds, "dataset")?;
        let cfg = cfg
            .as_ref()
            .map_or_else(Config::default, |c| c.inner.clone());
        let detection = semcom::detect(&ds.dataset, &cfg)?;
        let report = detection.report(&ds.topics, &cfg);
        let h = Box::into_raw(Box::new(SemcomResult { detection, report }));
        put(out, h, "out")
    })
}

/// Number of communities; 0 for NULL.
///
/// # Safety
/// `res` must be NULL or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn semcom_result_community_count(res: *const SemcomResult) -> usize {
    res.as_ref()
        .map_or(0, |r| r.detection.communities.communities.len())
}

/// Member count of community `index`, in output order.
///
/// # Safety
/// `res` must be a live result handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn semcom_result_community_size(
    res: *const SemcomResult,
    index: usize,
    out: *mut usize,
) -> SemcomStatus {
    guard(|| {
        let r = handle(res, "result")?;
        let cs = &r.detection.communities.communities;
        let c = cs.get(index).ok_or_else(|| {
            Failure::argument(format!(
                "community index {index} out of range (0..{})",
                cs.len()
            ))
        })?;
        put(out, c.users.len(), "out")
    })
}

/// Mean community purity.
///
/// # Safety
/// `res` must be a live result handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn semcom_result_purity(
    res: *const SemcomResult,
    out: *mut f64,
) -> SemcomStatus {
    guard(|| put(out, handle(res, "result")?.report.aggregate.purity, "out"))
}

/// Newman modularity of the disjoint projection.
///
/// # Safety
/// `res` must be a live result handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn semcom_result_modularity(
    res: *const SemcomResult,
    out: *mut f64,
) -> SemcomStatus {
    guard(|| put(out, handle(res, "result")?.report.aggregate.q, "out"))
}

/// PurQ at any `beta > 0`.
///
/// # Safety
/// `res` must be a live result handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn semcom_result_purq(
    res: *const SemcomResult,
    beta: f64,
    out: *mut f64,
) -> SemcomStatus {
    guard(|| {
        let r = handle(res, "result")?;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Failure::argument(format!(
                "beta must be positive, got {beta}"
            )));
        }
        let a = &r.report.aggregate;
        put(out, semcom::purq_beta(a.purity, a.q, beta), "out")
    })
}

/// The communities.json document. Free with [`semcom_string_free`].
///
/// # Safety
/// `res` must be a live result handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn semcom_result_communities_json(
    res: *const SemcomResult,
    out: *mut *mut c_char,
) -> SemcomStatus {
    guard(|| {
        let r = handle(res, "result")?;
        let file = CommunitiesFile::new(&r.detection.communities, &r.detection.dataset);
        let s = serde_json::to_string_pretty(&file).map_err(semcom::Error::from)?;
        put(out, owned_string(s)?, "out")
    })
}

/// The report.json document. Free with [`semcom_string_free`].
///
/// # Safety
/// `res` must be a live result handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn semcom_result_report_json(
    res: *const SemcomResult,
    out: *mut *mut c_char,
) -> SemcomStatus {
    guard(|| {
        let r = handle(res, "result")?;
        let s = serde_json::to_string_pretty(&r.report).map_err(semcom::Error::from)?;
        put(out, owned_string(s)?, "out")
    })
}

/// Writes communities.json and report.json into an existing directory.
///
/// # Safety
/// `res` must be a live result handle; `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn semcom_result_write(
    res: *const SemcomResult,
    dir: *const c_char,
) -> SemcomStatus {
    guard(|| {
        let r = handle(res, "result")?;
        let dir = Path::new(str_arg(dir, "dir")?);
        let file = CommunitiesFile::new(&r.detection.communities, &r.detection.dataset);
        write_json(&dir.join(COMMUNITIES_FILE), &file)?;
        write_json(&dir.join(REPORT_JSON), &r.report)?;
        Ok(())
    })
}

/// # Safety
/// `res` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn semcom_result_free(res: *mut SemcomResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}
