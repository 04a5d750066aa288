//! C interface to `decaylab`.
//!
//! Every function returns a [`DlStatus`]; on failure the message is kept
//! per thread and can be copied out with [`dl_last_error`]. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use decaylab::config::{LawConfig, RunConfig};
use decaylab::damping::DampingLaw;
use decaylab::decay_ode::{check_a2, solve_phi, uniform_grid, Alpha0Status, PhiParams};
use decaylab::error::Error;
use decaylab::verify::{run_experiment, ExperimentReport, Verdict};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Domain = 4,
    Newton = 5,
    Solver = 6,
    Analysis = 7,
    Io = 8,
    BufferTooSmall = 9,
    NotFound = 10,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DlVerdict {
    Pass = 0,
    Fail = 1,
    NotApplicable = 2,
    Warn = 3,
}

impl From<Verdict> for DlVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Pass => DlVerdict::Pass,
            Verdict::Fail => DlVerdict::Fail,
            Verdict::NotApplicable => DlVerdict::NotApplicable,
            Verdict::Warn => DlVerdict::Warn,
        }
    }
}

/// Result of the A2 checker.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DlA2Result {
    pub verdict: bool,
    pub limits_ok: bool,
    pub ineq2_ok: bool,
    pub ineq3_ok: bool,
    /// `0` positive, `1` zero, `2` divergent.
    pub alpha0_status: i32,
    pub alpha0: f64,
}

/// A damping law from the catalog.
pub struct DlLaw {
    law: DampingLaw,
}

/// Outcome of a full verification run.
pub struct DlReport {
    report: ExperimentReport,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> DlStatus {
    match e {
        Error::Config(_) => DlStatus::Config,
        Error::Domain { .. } => DlStatus::Domain,
        Error::Newton { .. } => DlStatus::Newton,
        Error::Solver(_) => DlStatus::Solver,
        Error::Analysis(_) => DlStatus::Analysis,
        Error::Io(_) => DlStatus::Io,
    }
}

struct Fail(DlStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> DlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DlStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside decaylab".into());
            DlStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(DlStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(DlStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes). Returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dl_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds a catalog law. `law_toml` is the body of a `[law]` table, e.g.
/// `kind = "polynomial"\np = 3.0`.
///
/// # Safety
/// `law_toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dl_law_new(law_toml: *const c_char, out: *mut *mut DlLaw) -> DlStatus {
    guard(|| {
        let text = str_arg(law_toml, "law_toml")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg: LawConfig =
            toml::from_str(text).map_err(|e| Fail(DlStatus::Config, format!("law: {e}")))?;
        let law = cfg.build()?;
        *out = Box::into_raw(Box::new(DlLaw { law }));
        Ok(())
    })
}

/// # Safety
/// `law` must be null or a handle from [`dl_law_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dl_law_free(law: *mut DlLaw) {
    if !law.is_null() {
        drop(Box::from_raw(law));
    }
}

/// Evaluates `g(s)` and `g'(s)`.
///
/// # Safety
/// `law` must be a live handle; `g` and `g_prime` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dl_law_eval(law: *const DlLaw, s: f64, g: *mut f64, g_prime: *mut f64) -> DlStatus {
    guard(|| {
        let l = &handle(law, "law")?.law;
        if g.is_null() || g_prime.is_null() {
            return Err(null("output"));
        }
        *g = l.g(s);
        *g_prime = l.g_prime(s);
        Ok(())
    })
}

/// `h^{-1}` and its first three derivatives at `y` for damping mass `m_a`.
///
/// # Safety
/// `law` must be a live handle; `out` must point to 4 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dl_h_inverse_derivs(law: *const DlLaw, m_a: f64, y: f64, out: *mut f64) -> DlStatus {
    guard(|| {
        let l = &handle(law, "law")?.law;
        if out.is_null() {
            return Err(null("out"));
        }
        let d = l.h_inverse(m_a)?.derivs(y);
        ptr::copy_nonoverlapping(d.as_ptr(), out, 4);
        Ok(())
    })
}

/// Solves the decay ODE for `phi` on `n` uniform samples of `[0, t_end]`.
///
/// # Safety
/// `law` must be a live handle; `out` must point to `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dl_solve_phi(
    law: *const DlLaw,
    m_a: f64,
    eps0: f64,
    c1: f64,
    beta: f64,
    phi0: f64,
    r0: f64,
    t_end: f64,
    n: usize,
    out: *mut f64,
) -> DlStatus {
    guard(|| {
        let l = &handle(law, "law")?.law;
        if out.is_null() {
            return Err(null("out"));
        }
        if n < 2 {
            return Err(Fail(DlStatus::Config, "need at least 2 samples".into()));
        }
        let inv = l.h_inverse(m_a)?;
        let params = PhiParams { eps0, c1, beta, phi0, r0 };
        let traj = solve_phi(&params, &inv, &uniform_grid(t_end, n))?;
        ptr::copy_nonoverlapping(traj.values.as_ptr(), out, n);
        Ok(())
    })
}

/// Runs the A2 checker.
///
/// # Safety
/// `law` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dl_check_a2(
    law: *const DlLaw,
    m_a: f64,
    beta: f64,
    r0: f64,
    n_samples: usize,
    out: *mut DlA2Result,
) -> DlStatus {
    guard(|| {
        let l = &handle(law, "law")?.law;
        if out.is_null() {
            return Err(null("out"));
        }
        let inv = l.h_inverse(m_a)?;
        let rep = check_a2(&inv, beta, r0, n_samples)?;
        *out = DlA2Result {
            verdict: rep.verdict,
            limits_ok: rep.limits_ok,
            ineq2_ok: rep.ineq2.ok,
            ineq3_ok: rep.ineq3.ok,
            alpha0_status: match rep.alpha0.status {
                Alpha0Status::Positive => 0,
                Alpha0Status::Zero => 1,
                Alpha0Status::Divergent => 2,
            },
            alpha0: rep.alpha0.value,
        };
        Ok(())
    })
}

/// Parses a TOML run configuration and runs the full verification.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dl_verify_run(config_toml: *const c_char, out: *mut *mut DlReport) -> DlStatus {
    guard(|| {
        let text = str_arg(config_toml, "config_toml")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = RunConfig::from_toml_str(text)?;
        let report = run_experiment(&cfg)?;
        *out = Box::into_raw(Box::new(DlReport { report }));
        Ok(())
    })
}

/// # Safety
/// `report` must be null or a handle from [`dl_verify_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dl_report_free(report: *mut DlReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// True when no verdict failed. A null handle reads as false.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dl_report_passed(report: *const DlReport) -> bool {
    report.as_ref().is_some_and(|r| r.report.passed())
}

/// Number of energy records.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dl_report_len(report: *const DlReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.records.len())
}

/// Copies record times and `E_uv` into `times` and `energy` (`len` each).
///
/// # Safety
/// `report` must be a live handle; both buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dl_report_energy(
    report: *const DlReport,
    times: *mut f64,
    energy: *mut f64,
    len: usize,
) -> DlStatus {
    guard(|| {
        let r = &handle(report, "report")?.report;
        if times.is_null() || energy.is_null() {
            return Err(null("output"));
        }
        if len < r.records.len() {
            return Err(Fail(
                DlStatus::BufferTooSmall,
                format!("need {} entries, got {len}", r.records.len()),
            ));
        }
        for (i, rec) in r.records.iter().enumerate() {
            *times.add(i) = rec.t;
            *energy.add(i) = rec.e_uv;
        }
        Ok(())
    })
}

/// Looks up a named verdict such as `upper_envelope`.
///
/// # Safety
/// `report` must be a live handle; `name` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dl_report_verdict(
    report: *const DlReport,
    name: *const c_char,
    out: *mut DlVerdict,
) -> DlStatus {
    guard(|| {
        let r = &handle(report, "report")?.report;
        let name = str_arg(name, "name")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let v = r
            .verdict(name)
            .ok_or_else(|| Fail(DlStatus::NotFound, format!("no verdict named {name}")))?;
        *out = v.into();
        Ok(())
    })
}
