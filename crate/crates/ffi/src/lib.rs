// SPDX-License-Identifier: Apache-2.0

//! C ABI over the guider library.
//!
//! Every function returns a [`GuiderStatus`]. On failure the message is kept
//! per thread and can be copied out with [`guider_last_error`]. Stateful
//! pieces (navigation belief, end-effector tracker) live behind opaque
//! handles that the caller releases with the matching `_free` function.
//! Panics never cross the boundary; they surface as `GUIDER_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::slice;

use guider::config::Config;
use guider::eef_evolution::{EefState, EefTracker};
use guider::error::GuiderError;
use guider::field::Field;
use guider::grasp_feasibility::{assess_object, ObjectMask2D};
use guider::nav_belief::{BaseOdometry, CellState, NavBeliefState, NavParams, OccupancyGrid};
use guider::replay::metrics::{evaluate, wilcoxon_exact, Alternative, Sample};
use guider::scene_geometry::Vec3;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuiderStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Input = 4,
    Degenerate = 5,
    Panic = 6,
}

/// Layer selector for [`guider_nav_layer`], passed as its integer value.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuiderNavLayer {
    Base = 0,
    Motion = 1,
    Synergy = 2,
    Combined = 3,
}

/// One-sided alternative for [`guider_wilcoxon`], passed as its integer value.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuiderAlternative {
    Greater = 0,
    Less = 1,
}

/// Grid cell codes accepted by [`guider_nav_new`].
pub const GUIDER_CELL_FREE: u8 = 0;
pub const GUIDER_CELL_UNKNOWN: u8 = 1;
pub const GUIDER_CELL_OCCUPIED: u8 = 2;

/// Opaque navigation belief handle.
pub struct GuiderNav {
    state: NavBeliefState,
    params: NavParams,
}

/// Opaque end-effector tracker handle.
pub struct GuiderEef {
    tracker: EefTracker,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GuiderPrediction {
    /// Cell column and row of the predicted area.
    pub x: usize,
    pub y: usize,
    /// Cell centre in the global frame, metres.
    pub wx: f64,
    pub wy: f64,
    pub value: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GuiderGraspVerdict {
    pub bbox: bool,
    pub morph: bool,
    pub advanced: bool,
    pub bbox_short_side_m: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GuiderWilcoxon {
    pub n: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    pub p_two: f64,
    pub p_one: f64,
    pub r_bs: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GuiderMetrics {
    pub has_rtcp: bool,
    pub rtcp: f64,
    pub stability: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Failure(GuiderStatus, String);

impl From<GuiderError> for Failure {
    fn from(e: GuiderError) -> Self {
        let status = match e {
            GuiderError::Config(_) | GuiderError::Parse { .. } => GuiderStatus::Config,
            GuiderError::Degenerate(_) => GuiderStatus::Degenerate,
            _ => GuiderStatus::Input,
        };
        Failure(status, e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(GuiderStatus::NullPointer, format!("{name} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(GuiderStatus::InvalidArgument, msg.into())
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> GuiderStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            GuiderStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            GuiderStatus::Panic
        }
    }
}

unsafe fn slice_in<'a, T>(ptr: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn out_ref<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or_else(|| null(name))
}

/// Parse optional flat config text (`group.key = value` lines) over the defaults.
unsafe fn config_from(text: *const c_char) -> Result<Config, Failure> {
    if text.is_null() {
        return Ok(Config::default());
    }
    let text = CStr::from_ptr(text)
        .to_str()
        .map_err(|_| invalid("config text is not UTF-8"))?;
    Ok(Config::from_flat_str(text, Path::new("<ffi>"))?)
}

/// Copy the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn guider_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Build a navigation belief over a row-major grid of `GUIDER_CELL_*` codes.
/// `config` may be null for the defaults.
///
/// # Safety
/// `cells` must point to `width * height` bytes, `config` must be null or a
/// NUL-terminated string, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn guider_nav_new(
    width: usize,
    height: usize,
    resolution: f64,
    origin_x: f64,
    origin_y: f64,
    cells: *const u8,
    config: *const c_char,
    out: *mut *mut GuiderNav,
) -> GuiderStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = std::ptr::null_mut();
        let n = width.checked_mul(height).ok_or_else(|| invalid("grid size overflows"))?;
        let codes = slice_in(cells, n, "cells")?;
        let states = codes
            .iter()
            .map(|&c| match c {
                GUIDER_CELL_FREE => Ok(CellState::Free),
                GUIDER_CELL_UNKNOWN => Ok(CellState::Unknown),
                GUIDER_CELL_OCCUPIED => Ok(CellState::Occupied),
                other => Err(invalid(format!("unknown cell code {other}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let params = config_from(config)?.nav;
        let grid = OccupancyGrid::new(width, height, resolution, (origin_x, origin_y), states)?;
        let state = NavBeliefState::init(&grid, &params)?;
        *out = Box::into_raw(Box::new(GuiderNav { state, params }));
        Ok(())
    })
}

/// Release a navigation handle. Null is ignored.
///
/// # Safety
/// `nav` must come from [`guider_nav_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn guider_nav_free(nav: *mut GuiderNav) {
    if !nav.is_null() {
        drop(Box::from_raw(nav));
    }
}

/// Feed one odometry sample; `accepted` reports whether it passed the
/// update-distance gate and changed the layers.
///
/// # Safety
/// `nav` must be a live handle; `accepted` may be null.
#[no_mangle]
pub unsafe extern "C" fn guider_nav_observe(
    nav: *mut GuiderNav,
    t: f64,
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
    accepted: *mut bool,
) -> GuiderStatus {
    guard(|| {
        let nav = out_ref(nav, "nav")?;
        if ![t, x, y, vx, vy].iter().all(|v| v.is_finite()) {
            return Err(invalid("odometry must be finite"));
        }
        let took = nav.state.observe(&BaseOdometry { t, x, y, vx, vy }, &nav.params);
        if let Some(a) = accepted.as_mut() {
            *a = took;
        }
        Ok(())
    })
}

/// Current predicted area: peak of the combined belief over free cells.
///
/// # Safety
/// `nav` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn guider_nav_predict(nav: *const GuiderNav, out: *mut GuiderPrediction) -> GuiderStatus {
    guard(|| {
        let nav = nav.as_ref().ok_or_else(|| null("nav"))?;
        let out = out_ref(out, "out")?;
        let (cell, value) = nav
            .state
            .predict_area()
            .ok_or_else(|| Failure(GuiderStatus::Input, "grid has no free cell".into()))?;
        let (wx, wy) = nav.state.geometry().cell_center(cell.x, cell.y);
        *out = GuiderPrediction {
            x: cell.x,
            y: cell.y,
            wx,
            wy,
            value,
        };
        Ok(())
    })
}

/// Copy one layer (row-major, `width * height` values) into `out`.
///
/// # Safety
/// `nav` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn guider_nav_layer(
    nav: *const GuiderNav,
    layer: u32,
    out: *mut f64,
    len: usize,
) -> GuiderStatus {
    guard(|| {
        let nav = nav.as_ref().ok_or_else(|| null("nav"))?;
        let combined;
        let field = match layer {
            l if l == GuiderNavLayer::Base as u32 => nav.state.base_layer(),
            l if l == GuiderNavLayer::Motion as u32 => nav.state.motion_layer(),
            l if l == GuiderNavLayer::Synergy as u32 => nav.state.synergy_layer(),
            l if l == GuiderNavLayer::Combined as u32 => {
                combined = nav.state.combined_belief();
                &combined
            }
            other => return Err(invalid(format!("unknown layer {other}"))),
        };
        if len != field.len() {
            return Err(invalid(format!("layer has {} cells, buffer holds {len}", field.len())));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        slice::from_raw_parts_mut(out, len).copy_from_slice(field.data());
        Ok(())
    })
}

/// Track `n` object proposals: `centroids` holds `3n` coordinates in the TCP
/// frame, `g` the initial beliefs. `config` may be null.
///
/// # Safety
/// Pointers must cover `3n` and `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn guider_eef_new(
    centroids: *const f64,
    g: *const f64,
    n: usize,
    config: *const c_char,
    out: *mut *mut GuiderEef,
) -> GuiderStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = std::ptr::null_mut();
        let c = slice_in(centroids, 3 * n, "centroids")?;
        let g = slice_in(g, n, "g")?;
        let props: Vec<(Vec3, f64)> = (0..n).map(|i| (Vec3::new(c[3 * i], c[3 * i + 1], c[3 * i + 2]), g[i])).collect();
        let tracker = EefTracker::new(&props, config_from(config)?.eef)?;
        *out = Box::into_raw(Box::new(GuiderEef { tracker }));
        Ok(())
    })
}

/// Release a tracker handle. Null is ignored.
///
/// # Safety
/// `eef` must come from [`guider_eef_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn guider_eef_free(eef: *mut GuiderEef) {
    if !eef.is_null() {
        drop(Box::from_raw(eef));
    }
}

/// Advance the tracker to a TCP sample (position, velocity, acceleration).
///
/// # Safety
/// `eef` must be a live handle; `q`, `qd`, `qdd` must each hold 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn guider_eef_observe(
    eef: *mut GuiderEef,
    t: f64,
    q: *const f64,
    qd: *const f64,
    qdd: *const f64,
) -> GuiderStatus {
    guard(|| {
        let eef = out_ref(eef, "eef")?;
        let v = |p: *const f64, name: &str| -> Result<Vec3, Failure> {
            let s = slice_in(p, 3, name)?;
            Ok(Vec3::new(s[0], s[1], s[2]))
        };
        let state = EefState {
            t,
            q: v(q, "q")?,
            qd: v(qd, "qd")?,
            qdd: v(qdd, "qdd")?,
        };
        eef.tracker.observe(&state)?;
        Ok(())
    })
}

/// Copy the current beliefs (one per proposal, in proposal order).
///
/// # Safety
/// `eef` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn guider_eef_beliefs(eef: *const GuiderEef, out: *mut f64, len: usize) -> GuiderStatus {
    guard(|| {
        let eef = eef.as_ref().ok_or_else(|| null("eef"))?;
        let objs = eef.tracker.objects();
        if len != objs.len() {
            return Err(invalid(format!("tracker has {} objects, buffer holds {len}", objs.len())));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let dst = slice::from_raw_parts_mut(out, len);
        for (d, o) in dst.iter_mut().zip(objs) {
            *d = o.p;
        }
        Ok(())
    })
}

/// Index of the most likely object.
///
/// # Safety
/// `eef` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn guider_eef_top(eef: *const GuiderEef, out: *mut usize) -> GuiderStatus {
    guard(|| {
        let eef = eef.as_ref().ok_or_else(|| null("eef"))?;
        *out_ref(out, "out")? = eef.tracker.top();
        Ok(())
    })
}

/// Run the three grasp tests on one row-major silhouette (non-zero = set)
/// seen at depth `z` metres with focal length `fx` pixels.
///
/// # Safety
/// `mask` must hold `width * height` bytes and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn guider_grasp_assess(
    mask: *const u8,
    width: usize,
    height: usize,
    z: f64,
    fx: f64,
    config: *const c_char,
    out: *mut GuiderGraspVerdict,
) -> GuiderStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let n = width.checked_mul(height).ok_or_else(|| invalid("mask size overflows"))?;
        let px = slice_in(mask, n, "mask")?;
        let mask = Field::from_vec(width, height, px.iter().map(|&b| b != 0).collect())?;
        let grip = config_from(config)?.grasp;
        let v = assess_object(&ObjectMask2D::new(mask, z, fx)?, &grip);
        *out = GuiderGraspVerdict {
            bbox: v.bbox,
            morph: v.morph,
            advanced: v.advanced,
            bbox_short_side_m: v.bbox_short_side_m,
        };
        Ok(())
    })
}

/// Exact paired signed-rank test on `x[i] - y[i]`.
///
/// # Safety
/// `x` and `y` must hold `n` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn guider_wilcoxon(
    x: *const f64,
    y: *const f64,
    n: usize,
    alternative: u32,
    out: *mut GuiderWilcoxon,
) -> GuiderStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let (x, y) = (slice_in(x, n, "x")?, slice_in(y, n, "y")?);
        let pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
        let alt = match alternative {
            a if a == GuiderAlternative::Greater as u32 => Alternative::Greater,
            a if a == GuiderAlternative::Less as u32 => Alternative::Less,
            other => return Err(invalid(format!("unknown alternative {other}"))),
        };
        let r = wilcoxon_exact(&pairs, alt)?;
        *out = GuiderWilcoxon {
            n: r.n,
            w_plus: r.w_plus,
            w_minus: r.w_minus,
            p_two: r.p_two,
            p_one: r.p_one,
            r_bs: r.r_bs,
        };
        Ok(())
    })
}

/// RTCP and stability of a prediction timeline. `predicted[i] < 0` means no
/// prediction at `t[i]`.
///
/// # Safety
/// `t` and `predicted` must hold `n` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn guider_metrics(
    t: *const f64,
    predicted: *const i64,
    n: usize,
    truth: usize,
    contact_t: f64,
    hold: f64,
    out: *mut GuiderMetrics,
) -> GuiderStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let (t, p) = (slice_in(t, n, "t")?, slice_in(predicted, n, "predicted")?);
        let samples: Vec<Sample> = t
            .iter()
            .zip(p)
            .map(|(&t, &p)| Sample {
                t,
                predicted: usize::try_from(p).ok(),
            })
            .collect();
        let m = evaluate(&samples, truth, contact_t, hold)?;
        *out = GuiderMetrics {
            has_rtcp: m.rtcp.is_some(),
            rtcp: m.rtcp.unwrap_or(0.0),
            stability: m.stability,
        };
        Ok(())
    })
}
