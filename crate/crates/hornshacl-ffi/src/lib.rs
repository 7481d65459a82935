//! C ABI over the validation pipeline.
//!
//! Knowledge bases and reports are opaque handles owned by the caller and
//! released with their `_free` function. Every call returns an `HsStatus`;
//! on failure the message of the last error on the calling thread is
//! available from `hs_last_error`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hornshacl::format::{parse_abox, parse_shapes, parse_targets, parse_tbox};
use hornshacl::kb::{ABox, TBox};
use hornshacl::pipeline::{
    run, Input, Mode, PipelineError, RunConfig, ValidationReport, DEFAULT_DEPTH,
};

/// Outcome of a call. The first six values match the exit codes of the
/// command-line tool.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum HsStatus {
    /// Every target holds.
    Valid = 0,
    /// Some target is violated.
    Violation = 1,
    /// The knowledge base has no model.
    Inconsistent = 2,
    /// Unparsable input, or a mode that does not apply to it.
    InputError = 3,
    /// The shapes are not stratified.
    NotStratified = 4,
    /// The model could not be built within the depth or node limit.
    DepthLimit = 5,
    /// A required pointer argument was null.
    NullPointer = 6,
    /// A string was not UTF-8, or an index was out of range.
    InvalidArgument = 7,
    /// The library panicked; the handle arguments are left untouched.
    Internal = 8,
}

/// Validation route.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum HsMode {
    Direct = 0,
    Rewrite = 1,
    PureAlchi = 2,
    PureShaclb = 3,
    Chase = 4,
}

impl From<HsMode> for Mode {
    fn from(m: HsMode) -> Mode {
        match m {
            HsMode::Direct => Mode::Direct,
            HsMode::Rewrite => Mode::Rewrite,
            HsMode::PureAlchi => Mode::PureAlchi,
            HsMode::PureShaclb => Mode::PureShaclb,
            HsMode::Chase => Mode::Chase,
        }
    }
}

/// A parsed TBox and ABox.
pub struct HsKnowledgeBase {
    tbox: TBox,
    abox: ABox,
}

/// The verdicts of one validation run.
pub struct HsReport {
    report: ValidationReport,
    json: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(HsStatus, String);

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let status = match e.exit_code() {
            4 => HsStatus::NotStratified,
            5 => HsStatus::DepthLimit,
            _ => HsStatus::InputError,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(message: &str) {
    // Interior NULs cannot be represented; they are dropped.
    let message = CString::new(message.replace('\0', "")).expect("NULs were removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

/// Runs `f`, records its error, and turns panics into `Internal`.
fn guard(f: impl FnOnce() -> Result<HsStatus, Failure>) -> HsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("internal error: the library panicked");
            HsStatus::Internal
        }
    }
}

/// Text of a non-null C string; a null pointer reads as empty when
/// `optional` holds.
///
/// # Safety
/// A non-null `s` must point to a NUL-terminated string that outlives the
/// returned slice.
unsafe fn text<'a>(s: *const c_char, what: &str, optional: bool) -> Result<&'a str, Failure> {
    if s.is_null() {
        return if optional {
            Ok("")
        } else {
            Err(Failure(HsStatus::NullPointer, format!("{what} is null")))
        };
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure(HsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn parsed<T, E: std::fmt::Display>(what: &str, r: Result<T, E>) -> Result<T, Failure> {
    r.map_err(|e| Failure(HsStatus::InputError, format!("{what}: {e}")))
}

/// Message of the last failed call on this thread, or null if none failed.
/// The string stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn hs_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// Parses a knowledge base. Either text may be null for an empty one. On
/// success `*out` receives a handle to release with `hs_kb_free`.
///
/// # Safety
/// `tbox` and `abox` must each be null or a NUL-terminated string. `out`
/// must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn hs_kb_new(
    tbox: *const c_char,
    abox: *const c_char,
    out: *mut *mut HsKnowledgeBase,
) -> HsStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure(HsStatus::NullPointer, "out is null".into()));
        }
        let tbox = parsed("tbox", parse_tbox(text(tbox, "tbox", true)?))?;
        let abox = parsed("abox", parse_abox(text(abox, "abox", true)?))?;
        *out = Box::into_raw(Box::new(HsKnowledgeBase { tbox, abox }));
        Ok(HsStatus::Valid)
    })
}

/// Releases a knowledge base. Null is ignored.
///
/// # Safety
/// `kb` must be null or a handle from `hs_kb_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hs_kb_free(kb: *mut HsKnowledgeBase) {
    if !kb.is_null() {
        drop(Box::from_raw(kb));
    }
}

/// Validates `targets` against `shapes` over `kb` along `mode`. A `depth`
/// of zero selects the default. On `Valid`, `Violation` and `Inconsistent`
/// `*out` receives a report to release with `hs_report_free`; otherwise
/// `*out` is left untouched.
///
/// # Safety
/// `kb` must be a live handle from `hs_kb_new`. `shapes` and `targets` must
/// be NUL-terminated strings. `mode` must be one of the `HsMode` values.
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn hs_validate(
    kb: *const HsKnowledgeBase,
    shapes: *const c_char,
    targets: *const c_char,
    mode: HsMode,
    depth: usize,
    out: *mut *mut HsReport,
) -> HsStatus {
    guard(|| {
        if kb.is_null() || out.is_null() {
            return Err(Failure(HsStatus::NullPointer, "kb or out is null".into()));
        }
        let kb = &*kb;
        let input = Input {
            tbox: kb.tbox.clone(),
            abox: kb.abox.clone(),
            constraints: parsed("shapes", parse_shapes(text(shapes, "shapes", false)?))?,
            targets: parsed("targets", parse_targets(text(targets, "targets", false)?))?,
        };
        let depth = if depth == 0 { DEFAULT_DEPTH } else { depth };
        let config = RunConfig {
            mode: mode.into(),
            depth,
            ..RunConfig::default()
        };
        let report = run(&input, &config)?;
        let status = match report.exit_code() {
            0 => HsStatus::Valid,
            1 => HsStatus::Violation,
            _ => HsStatus::Inconsistent,
        };
        let json = CString::new(report.to_json()).expect("JSON has no NUL");
        *out = Box::into_raw(Box::new(HsReport { report, json }));
        Ok(status)
    })
}

/// The report as JSON. The string is owned by the report.
///
/// # Safety
/// `report` must be a live handle from `hs_validate`.
#[no_mangle]
pub unsafe extern "C" fn hs_report_json(report: *const HsReport) -> *const c_char {
    if report.is_null() {
        return ptr::null();
    }
    (*report).json.as_ptr()
}

/// Number of targets in the report; zero for a null report.
///
/// # Safety
/// `report` must be null or a live handle from `hs_validate`.
#[no_mangle]
pub unsafe extern "C" fn hs_report_target_count(report: *const HsReport) -> usize {
    if report.is_null() {
        return 0;
    }
    (*report).report.targets.len()
}

/// Stores whether target `index`, in the order of the JSON report, holds.
///
/// # Safety
/// `report` must be a live handle from `hs_validate`. `valid` must be a
/// valid pointer to writable storage for one `bool`.
#[no_mangle]
pub unsafe extern "C" fn hs_report_target_valid(
    report: *const HsReport,
    index: usize,
    valid: *mut bool,
) -> HsStatus {
    guard(|| {
        if report.is_null() || valid.is_null() {
            return Err(Failure(
                HsStatus::NullPointer,
                "report or valid is null".into(),
            ));
        }
        let targets = &(*report).report.targets;
        let t = targets.get(index).ok_or_else(|| {
            Failure(
                HsStatus::InvalidArgument,
                format!("target {index} out of range ({} targets)", targets.len()),
            )
        })?;
        *valid = t.valid;
        Ok(HsStatus::Valid)
    })
}

/// Releases a report. Null is ignored.
///
/// # Safety
/// `report` must be null or a handle from `hs_validate` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hs_report_free(report: *mut HsReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    fn last_error() -> String {
        unsafe {
            CStr::from_ptr(hs_last_error())
                .to_str()
                .unwrap()
                .to_string()
        }
    }

    unsafe fn kb(tbox: &str, abox: &str) -> *mut HsKnowledgeBase {
        let mut kb = ptr::null_mut();
        assert_eq!(
            hs_kb_new(c(tbox).as_ptr(), c(abox).as_ptr(), &mut kb),
            HsStatus::Valid
        );
        kb
    }

    #[test]
    fn a_violation_comes_with_a_report() {
        unsafe {
            let kb = kb("A <= some p.B\n", "A(a)\n");
            let mut report = ptr::null_mut();
            let shapes = c("$s <- some [p].C\n");
            let targets = c("$s(@a)\n");
            let status = hs_validate(
                kb,
                shapes.as_ptr(),
                targets.as_ptr(),
                HsMode::Rewrite,
                0,
                &mut report,
            );
            assert_eq!(status, HsStatus::Violation);
            assert_eq!(hs_report_target_count(report), 1);
            let mut valid = true;
            assert_eq!(
                hs_report_target_valid(report, 0, &mut valid),
                HsStatus::Valid
            );
            assert!(!valid);
            assert_eq!(
                hs_report_target_valid(report, 1, &mut valid),
                HsStatus::InvalidArgument
            );
            let json = CStr::from_ptr(hs_report_json(report)).to_str().unwrap();
            assert!(json.contains("\"mode\": \"rewrite\""), "{json}");
            hs_report_free(report);
            hs_kb_free(kb);
        }
    }

    #[test]
    fn statuses_follow_the_exit_codes() {
        unsafe {
            let clash = kb("A & B <= bot\n", "A(a)\nB(a)\n");
            let mut report = ptr::null_mut();
            let (shapes, targets) = (c("$s <- A\n"), c("$s(@a)\n"));
            let status = hs_validate(
                clash,
                shapes.as_ptr(),
                targets.as_ptr(),
                HsMode::Direct,
                0,
                &mut report,
            );
            assert_eq!(status, HsStatus::Inconsistent);
            hs_report_free(report);
            let mut untouched = ptr::null_mut();
            let cyclic = c("$s <- !$s\n");
            let status = hs_validate(
                clash,
                cyclic.as_ptr(),
                targets.as_ptr(),
                HsMode::Direct,
                0,
                &mut untouched,
            );
            assert_eq!(status, HsStatus::NotStratified);
            assert!(untouched.is_null());
            hs_kb_free(clash);

            let chain = kb("A <= some r.A\n", "A(a)\n");
            let negated = c("$s <- !$t\n$t <- B\n");
            let status = hs_validate(
                chain,
                negated.as_ptr(),
                targets.as_ptr(),
                HsMode::Direct,
                4,
                &mut untouched,
            );
            assert_eq!(status, HsStatus::DepthLimit);
            assert!(last_error().contains("depth"));
            hs_kb_free(chain);
        }
    }

    #[test]
    fn bad_input_is_reported_not_panicked() {
        unsafe {
            let mut kb = ptr::null_mut();
            let bad = c("A <= some\n");
            assert_eq!(
                hs_kb_new(bad.as_ptr(), ptr::null(), &mut kb),
                HsStatus::InputError
            );
            assert!(kb.is_null());
            assert!(last_error().starts_with("tbox"));
            assert_eq!(
                hs_kb_new(ptr::null(), ptr::null(), ptr::null_mut()),
                HsStatus::NullPointer
            );
            let not_utf8 = [0xffu8, 0];
            assert_eq!(
                hs_kb_new(not_utf8.as_ptr().cast(), ptr::null(), &mut kb),
                HsStatus::InvalidArgument
            );
            let mut report = ptr::null_mut();
            let targets = c("$s(@a)\n");
            let status = hs_validate(
                ptr::null(),
                ptr::null(),
                targets.as_ptr(),
                HsMode::Direct,
                0,
                &mut report,
            );
            assert_eq!(status, HsStatus::NullPointer);
            assert!(hs_report_json(ptr::null()).is_null());
            hs_kb_free(ptr::null_mut());
            hs_report_free(ptr::null_mut());
        }
    }
}
