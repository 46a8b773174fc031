//! C ABI over `ria-core`.
//!
//! Objects are opaque handles created by `ria_*_new` or `ria_simulate` and
//! released with the matching `ria_*_free`. Every fallible call returns a
//! [`RiaStatus`]; on failure `ria_last_error` describes the cause. Strings
//! handed out by the library are released with `ria_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ria_core::dof::{self, ReplicationPlan};
use ria_core::error::{DofError, ProtocolError};
use ria_core::protocol::TrialConfig;
use ria_core::report::{self, TheoryBlock};
use ria_core::sim::{self, Campaign};
use ria_core::Rational;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RiaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The value exists but does not fit the requested C type.
    Overflow = 3,
    /// The requested value is not defined for this object.
    Unavailable = 4,
    Internal = 5,
}

/// An exact fraction `num / den` in lowest terms.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RiaRatio {
    pub num: u64,
    pub den: u64,
}

/// Sum-DoF breakdown for one K.
pub struct RiaTheory {
    block: TheoryBlock,
}

/// Replication plan for one (K, n).
pub struct RiaPlan {
    plan: ReplicationPlan,
}

/// Results of a simulation campaign.
pub struct RiaCampaign {
    campaign: Campaign,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: RiaStatus, msg: impl Into<String>) -> RiaStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning panics into `RiaStatus::Internal`.
fn guard(f: impl FnOnce() -> RiaStatus) -> RiaStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(RiaStatus::Internal, format!("internal error: {msg}"))
        }
    }
}

fn dof_status(e: DofError) -> RiaStatus {
    match e {
        DofError::Overflow(_) => fail(RiaStatus::Overflow, e.to_string()),
        _ => fail(RiaStatus::InvalidArgument, e.to_string()),
    }
}

fn protocol_status(e: ProtocolError) -> RiaStatus {
    match e {
        ProtocolError::Config(_) | ProtocolError::Dof(_) => {
            fail(RiaStatus::InvalidArgument, e.to_string())
        }
        _ => fail(RiaStatus::Internal, e.to_string()),
    }
}

fn write_out<T>(out: *mut T, value: T) -> RiaStatus {
    if out.is_null() {
        return fail(RiaStatus::NullPointer, "output pointer is null");
    }
    // SAFETY: checked non-null; the caller guarantees it is writable.
    unsafe { out.write(value) };
    RiaStatus::Ok
}

fn write_ratio(out: *mut RiaRatio, r: &Rational) -> RiaStatus {
    let (num, den) = (u64::try_from(r.numer()), u64::try_from(r.denom()));
    match (num, den) {
        (Ok(num), Ok(den)) => write_out(out, RiaRatio { num, den }),
        _ => fail(
            RiaStatus::Overflow,
            format!("{r} does not fit in 64-bit integers"),
        ),
    }
}

fn write_string(out: *mut *mut c_char, s: String) -> RiaStatus {
    match CString::new(s) {
        Ok(c) => write_out(out, c.into_raw()),
        Err(_) => fail(RiaStatus::Internal, "string contains an interior NUL"),
    }
}

fn handle<'a, T>(h: *const T) -> Result<&'a T, RiaStatus> {
    if h.is_null() {
        Err(fail(RiaStatus::NullPointer, "handle is null"))
    } else {
        // SAFETY: non-null handles come from Box::into_raw in this crate.
        Ok(unsafe { &*h })
    }
}

fn json<T: serde::Serialize>(value: &T) -> Result<String, RiaStatus> {
    serde_json::to_string_pretty(value).map_err(|e| fail(RiaStatus::Internal, e.to_string()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ria_version() -> *const c_char {
    static VERSION: &CStr =
        match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
            Ok(v) => v,
            Err(_) => panic!("version string"),
        };
    VERSION.as_ptr()
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next library call on the same thread.
#[no_mangle]
pub extern "C" fn ria_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ria_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Computes the sum-DoF breakdown for `k >= 2` users.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ria_theory_new(k: u32, out: *mut *mut RiaTheory) -> RiaStatus {
    guard(|| {
        if out.is_null() {
            return fail(RiaStatus::NullPointer, "output pointer is null");
        }
        match report::theory(k as usize, None) {
            Ok(block) => write_out(out, Box::into_raw(Box::new(RiaTheory { block }))),
            Err(e) => dof_status(e),
        }
    })
}

/// # Safety
/// `h` must come from `ria_theory_new` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ria_theory_free(h: *mut RiaTheory) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Optimal number of phase-1 transmitters.
///
/// # Safety
/// `h` must be a live theory handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ria_theory_n_star(h: *const RiaTheory, out: *mut u32) -> RiaStatus {
    guard(|| match handle(h) {
        Ok(t) => write_out(out, t.block.breakdown.n_star as u32),
        Err(s) => s,
    })
}

/// Exact sum DoF.
///
/// # Safety
/// `h` must be a live theory handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ria_theory_sum_dof(h: *const RiaTheory, out: *mut RiaRatio) -> RiaStatus {
    guard(|| match handle(h) {
        Ok(t) => write_ratio(out, &t.block.breakdown.ds),
        Err(s) => s,
    })
}

/// Sum DoF as a double.
///
/// # Safety
/// `h` must be a live theory handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ria_theory_sum_dof_f64(h: *const RiaTheory, out: *mut f64) -> RiaStatus {
    guard(|| match handle(h) {
        Ok(t) => write_out(out, t.block.breakdown.ds.to_f64()),
        Err(s) => s,
    })
}

/// Per-order DoF for `2 <= m <= K`.
///
/// # Safety
/// `h` must be a live theory handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ria_theory_order_dof(
    h: *const RiaTheory,
    m: u32,
    out: *mut RiaRatio,
) -> RiaStatus {
    guard(|| match handle(h) {
        Ok(t) => match t.block.breakdown.dof(m as usize) {
            Some(r) => write_ratio(out, r),
            None => fail(
                RiaStatus::InvalidArgument,
                format!("order m = {m} outside 2..=K"),
            ),
        },
        Err(s) => s,
    })
}

/// Sum DoF of a comparator scheme by name (`mat_bc`, `two_phase_misoic`,
/// `torrellas`, `abdoli_siso_k3`, `maleki_k3`). Three-user schemes report
/// `Unavailable` for other K.
///
/// # Safety
/// `h` must be a live theory handle, `scheme` a NUL-terminated string and
/// `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ria_theory_comparator(
    h: *const RiaTheory,
    scheme: *const c_char,
    out: *mut RiaRatio,
) -> RiaStatus {
    guard(|| {
        let t = match handle(h) {
            Ok(t) => t,
            Err(s) => return s,
        };
        if scheme.is_null() {
            return fail(RiaStatus::NullPointer, "scheme is null");
        }
        let name = match CStr::from_ptr(scheme).to_str() {
            Ok(n) => n,
            Err(_) => return fail(RiaStatus::InvalidArgument, "scheme is not UTF-8"),
        };
        let sch: dof::Scheme = match name.parse() {
            Ok(s) => s,
            Err(e) => return fail(RiaStatus::InvalidArgument, e),
        };
        match dof::comparator(t.block.breakdown.k, sch) {
            Ok(r) => write_ratio(out, &r),
            Err(e) => fail(RiaStatus::Unavailable, e.to_string()),
        }
    })
}

/// The full breakdown as JSON; free with `ria_string_free`.
///
/// # Safety
/// `h` must be a live theory handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ria_theory_to_json(
    h: *const RiaTheory,
    out: *mut *mut c_char,
) -> RiaStatus {
    guard(|| match handle(h).and_then(|t| json(&t.block)) {
        Ok(s) => write_string(out, s),
        Err(s) => s,
    })
}

/// Minimal replication plan; `n = 0` selects the optimal n.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ria_plan_new(k: u32, n: u32, out: *mut *mut RiaPlan) -> RiaStatus {
    guard(|| {
        if out.is_null() {
            return fail(RiaStatus::NullPointer, "output pointer is null");
        }
        let k = k as usize;
        let n = match n {
            0 => match dof::sum_dof(k) {
                Ok(b) => b.n_star,
                Err(e) => return dof_status(e),
            },
            n => n as usize,
        };
        match dof::replication_plan(k, n) {
            Ok(plan) => write_out(out, Box::into_raw(Box::new(RiaPlan { plan }))),
            Err(e) => dof_status(e),
        }
    })
}

/// # Safety
/// `h` must come from `ria_plan_new` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ria_plan_free(h: *mut RiaPlan) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// # Safety
/// `h` must be a live plan handle and the outputs valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ria_plan_totals(
    h: *const RiaPlan,
    symbols: *mut u64,
    slots: *mut u64,
) -> RiaStatus {
    guard(|| match handle(h) {
        Ok(p) => match write_out(symbols, p.plan.total_symbols) {
            RiaStatus::Ok => write_out(slots, p.plan.total_slots),
            s => s,
        },
        Err(s) => s,
    })
}

/// Rounds of phase 1 (`m = 1`) or of phase m-I (`2 <= m <= K`).
///
/// # Safety
/// `h` must be a live plan handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ria_plan_rounds(h: *const RiaPlan, m: u32, out: *mut u64) -> RiaStatus {
    guard(|| match handle(h) {
        Ok(p) => match p.plan.rounds(m as usize) {
            Some(r) => write_out(out, r),
            None => fail(RiaStatus::InvalidArgument, format!("m = {m} outside 1..=K")),
        },
        Err(s) => s,
    })
}

/// # Safety
/// `h` must be a live plan handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ria_plan_to_json(h: *const RiaPlan, out: *mut *mut c_char) -> RiaStatus {
    guard(|| match handle(h).and_then(|p| json(&p.plan)) {
        Ok(s) => write_string(out, s),
        Err(s) => s,
    })
}

/// Runs `trials` seeded trials. `n = 0` selects the optimal n and
/// `antennas = 0` selects K. A campaign with failed trials is still
/// returned with `RiaStatus::Ok`; inspect it with `ria_campaign_passed`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ria_simulate(
    k: u32,
    n: u32,
    antennas: u32,
    trials: u64,
    seed: u64,
    tolerance: f64,
    out: *mut *mut RiaCampaign,
) -> RiaStatus {
    guard(|| {
        if out.is_null() {
            return fail(RiaStatus::NullPointer, "output pointer is null");
        }
        let k = k as usize;
        let n = match n {
            0 => match dof::sum_dof(k) {
                Ok(b) => b.n_star,
                Err(e) => return dof_status(e),
            },
            n => n as usize,
        };
        let antennas = if antennas == 0 { k } else { antennas as usize };
        let result = TrialConfig::new(k, n, antennas, seed)
            .and_then(|cfg| sim::simulate(&cfg, trials, tolerance));
        match result {
            Ok(campaign) => write_out(out, Box::into_raw(Box::new(RiaCampaign { campaign }))),
            Err(e) => protocol_status(e),
        }
    })
}

/// # Safety
/// `h` must come from `ria_simulate` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ria_campaign_free(h: *mut RiaCampaign) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Trials run and trials that decoded every symbol within tolerance.
///
/// # Safety
/// `h` must be a live campaign handle and the outputs valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ria_campaign_passed(
    h: *const RiaCampaign,
    trials: *mut u64,
    passed: *mut u64,
) -> RiaStatus {
    guard(|| match handle(h) {
        Ok(c) => match write_out(trials, c.campaign.trials) {
            RiaStatus::Ok => write_out(passed, c.campaign.passed),
            s => s,
        },
        Err(s) => s,
    })
}

/// Total CSIT-rule violations over all trials.
///
/// # Safety
/// `h` must be a live campaign handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ria_campaign_csit_violations(
    h: *const RiaCampaign,
    out: *mut u64,
) -> RiaStatus {
    guard(|| match handle(h) {
        Ok(c) => write_out(out, c.campaign.csit_violations),
        Err(s) => s,
    })
}

/// Largest relative residual over all recovered symbols.
///
/// # Safety
/// `h` must be a live campaign handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ria_campaign_max_residual(
    h: *const RiaCampaign,
    out: *mut f64,
) -> RiaStatus {
    guard(|| match handle(h) {
        Ok(c) => write_out(out, c.campaign.max_relative_residual),
        Err(s) => s,
    })
}

/// Private symbols per slot measured in every trial; `Unavailable` when
/// trials disagree or none ran.
///
/// # Safety
/// `h` must be a live campaign handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ria_campaign_measured_dof(
    h: *const RiaCampaign,
    out: *mut RiaRatio,
) -> RiaStatus {
    guard(|| match handle(h) {
        Ok(c) => match &c.campaign.measured_dof {
            Some(r) => write_ratio(out, r),
            None => fail(RiaStatus::Unavailable, "no common measured DoF"),
        },
        Err(s) => s,
    })
}

/// # Safety
/// `h` must be a live campaign handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ria_campaign_to_json(
    h: *const RiaCampaign,
    out: *mut *mut c_char,
) -> RiaStatus {
    guard(|| match handle(h).and_then(|c| json(&c.campaign)) {
        Ok(s) => write_string(out, s),
        Err(s) => s,
    })
}
