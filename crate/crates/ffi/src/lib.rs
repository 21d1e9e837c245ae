//! C interface to taxowl.
//!
//! Sessions are opaque handles. Every function returns a [`TaxowlStatus`];
//! on anything but `TAXOWL_STATUS_OK` a description is available from
//! [`taxowl_last_error_message`] on the same thread. Strings handed out by
//! this library must be released with [`taxowl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use taxowl::gbif::DEFAULT_BASE_URL;
use taxowl::names::{normalize, parse_names_list, RawNameEntry};
use taxowl::owl::{merge, parse, EmitConfig};
use taxowl::pipeline::{convert, Session, TransportMode};
use taxowl::taxonomy::MatchPolicy;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaxowlStatus {
    Ok = 0,
    /// Conversion finished but at least one name failed.
    Partial = 1,
    InvalidArgument = 2,
    /// The backbone transport could not be opened or used.
    Transport = 3,
    InvalidName = 4,
    Parse = 5,
    Merge = 6,
    Internal = 99,
}

/// Opaque conversion session.
pub struct TaxowlSession {
    session: Session,
    policy: MatchPolicy,
    config: EmitConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

struct Failure(TaxowlStatus, String);

fn guard(f: impl FnOnce() -> Result<TaxowlStatus, Failure>) -> TaxowlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            status
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TaxowlStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(TaxowlStatus::InvalidArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(TaxowlStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

fn into_c(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

fn check_out<T>(p: *mut T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(TaxowlStatus::InvalidArgument, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn open(mode: TransportMode, out: *mut *mut TaxowlSession) -> TaxowlStatus {
    guard(|| {
        check_out(out, "out")?;
        let session = Session::open(&mode, 4).map_err(|e| Failure(TaxowlStatus::Transport, e.to_string()))?;
        let handle = TaxowlSession { session, policy: MatchPolicy::default(), config: EmitConfig::default() };
        *out = Box::into_raw(Box::new(handle));
        Ok(TaxowlStatus::Ok)
    })
}

/// Opens a session that replays a recorded corpus directory.
///
/// # Safety
/// `dir` must be a valid C string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn taxowl_session_open_fixtures(dir: *const c_char, out: *mut *mut TaxowlSession) -> TaxowlStatus {
    match str_arg(dir, "dir") {
        Ok(d) => open(TransportMode::Fixtures(PathBuf::from(d)), out),
        Err(Failure(s, m)) => {
            set_error(m);
            s
        }
    }
}

/// Opens a session that serves from a cache directory and fetches misses
/// from `base_url` (the public API when null).
///
/// # Safety
/// `dir` must be a valid C string, `base_url` a valid C string or null,
/// and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn taxowl_session_open_cache(
    dir: *const c_char,
    base_url: *const c_char,
    out: *mut *mut TaxowlSession,
) -> TaxowlStatus {
    let args = str_arg(dir, "dir").and_then(|d| Ok((d, opt_str_arg(base_url, "base_url")?)));
    match args {
        Ok((d, url)) => open(
            TransportMode::CacheThrough {
                dir: PathBuf::from(d),
                base_url: url.unwrap_or(DEFAULT_BASE_URL).to_string(),
                max_age: None,
                refresh: false,
            },
            out,
        ),
        Err(Failure(s, m)) => {
            set_error(m);
            s
        }
    }
}

/// Opens a session against the live API. `base_url` may be null.
///
/// # Safety
/// `base_url` must be a valid C string or null, and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn taxowl_session_open_live(base_url: *const c_char, out: *mut *mut TaxowlSession) -> TaxowlStatus {
    match opt_str_arg(base_url, "base_url") {
        Ok(url) => open(TransportMode::Live { base_url: url.unwrap_or(DEFAULT_BASE_URL).to_string() }, out),
        Err(Failure(s, m)) => {
            set_error(m);
            s
        }
    }
}

/// Sets the fuzzy-match threshold (0 to 100) and whether every fuzzy match
/// is accepted.
///
/// # Safety
/// `session` must come from one of the open functions.
#[no_mangle]
pub unsafe extern "C" fn taxowl_session_set_fuzzy(session: *mut TaxowlSession, threshold: u8, allow_all: bool) -> TaxowlStatus {
    guard(|| {
        let s = session.as_mut().ok_or(Failure(TaxowlStatus::InvalidArgument, "session is null".into()))?;
        if threshold > 100 {
            return Err(Failure(TaxowlStatus::InvalidArgument, format!("threshold {threshold} above 100")));
        }
        s.policy.fuzzy_threshold = threshold;
        s.policy.allow_fuzzy = allow_all;
        Ok(TaxowlStatus::Ok)
    })
}

/// Turns rank banner comments in emitted documents on or off.
///
/// # Safety
/// `session` must come from one of the open functions.
#[no_mangle]
pub unsafe extern "C" fn taxowl_session_set_comments(session: *mut TaxowlSession, comments: bool) -> TaxowlStatus {
    guard(|| {
        let s = session.as_mut().ok_or(Failure(TaxowlStatus::InvalidArgument, "session is null".into()))?;
        s.config.comments = comments;
        Ok(TaxowlStatus::Ok)
    })
}

/// # Safety
/// `session` must come from one of the open functions, or be null.
#[no_mangle]
pub unsafe extern "C" fn taxowl_session_free(session: *mut TaxowlSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Converts a names list (one name per line, optional tab-separated rank,
/// `#` comments) into an OWL document and a CSV report.
///
/// Returns `TAXOWL_STATUS_PARTIAL` when some names failed; both outputs are still
/// set. `report` may be null when the report is not wanted.
///
/// # Safety
/// `session` must come from one of the open functions, `names` must be a
/// valid C string and `xml` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn taxowl_convert(
    session: *const TaxowlSession,
    names: *const c_char,
    xml: *mut *mut c_char,
    report: *mut *mut c_char,
) -> TaxowlStatus {
    guard(|| {
        let s = session.as_ref().ok_or(Failure(TaxowlStatus::InvalidArgument, "session is null".into()))?;
        let text = str_arg(names, "names")?;
        check_out(xml, "xml")?;
        let list = parse_names_list(text).map_err(|e| Failure(TaxowlStatus::InvalidArgument, e.to_string()))?;
        if list.is_empty() {
            return Err(Failure(TaxowlStatus::InvalidArgument, "no names given".into()));
        }
        let conversion = convert(&list, &s.session.client, &s.policy, &s.config);
        *xml = into_c(conversion.xml);
        if !report.is_null() {
            *report = into_c(conversion.report.to_csv_string());
        }
        if conversion.report.has_failures() {
            return Err(Failure(TaxowlStatus::Partial, conversion.report.summary()));
        }
        Ok(TaxowlStatus::Ok)
    })
}

/// Canonicalizes one scientific name.
///
/// # Safety
/// `name` must be a valid C string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn taxowl_normalize(name: *const c_char, out: *mut *mut c_char) -> TaxowlStatus {
    guard(|| {
        let raw = str_arg(name, "name")?;
        check_out(out, "out")?;
        let n = normalize(&RawNameEntry::new(raw)).map_err(|e| Failure(TaxowlStatus::InvalidName, e.to_string()))?;
        *out = into_c(n.canonical_text);
        Ok(TaxowlStatus::Ok)
    })
}

/// Merges `count` OWL documents into one.
///
/// # Safety
/// `documents` must point to `count` valid C strings and `out` must be a
/// writable pointer.
#[no_mangle]
pub unsafe extern "C" fn taxowl_merge(documents: *const *const c_char, count: usize, out: *mut *mut c_char) -> TaxowlStatus {
    guard(|| {
        check_out(out, "out")?;
        if documents.is_null() || count == 0 {
            return Err(Failure(TaxowlStatus::InvalidArgument, "no documents given".into()));
        }
        let mut fragments = Vec::with_capacity(count);
        for i in 0..count {
            let name = format!("document {i}");
            let text = str_arg(*documents.add(i), &name)?;
            fragments.push(parse(text, &name).map_err(|e| Failure(TaxowlStatus::Parse, e.to_string()))?);
        }
        let merged = merge(&fragments).map_err(|e| Failure(TaxowlStatus::Merge, e.to_string()))?;
        *out = into_c(merged.document.to_xml());
        Ok(TaxowlStatus::Ok)
    })
}

/// # Safety
/// `s` must be a string returned by this library, or null.
#[no_mangle]
pub unsafe extern "C" fn taxowl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn taxowl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
