// SPDX-License-Identifier: Apache-2.0

use std::ffi::{c_char, CString};
use std::ptr;

use guider_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { guider_last_error(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

fn free_room(n: usize) -> Vec<u8> {
    vec![GUIDER_CELL_FREE; n * n]
}

#[test]
fn nav_handle_lifecycle() {
    let n = 60;
    let cells = free_room(n);
    let mut nav = ptr::null_mut();
    let s = unsafe { guider_nav_new(n, n, 0.05, 0.0, 0.0, cells.as_ptr(), ptr::null(), &mut nav) };
    assert_eq!(s, GuiderStatus::Ok);
    let mut accepted = false;
    let s = unsafe { guider_nav_observe(nav, 0.0, 1.5, 1.5, 0.4, 0.0, &mut accepted) };
    assert_eq!(s, GuiderStatus::Ok);
    assert!(accepted);
    unsafe { guider_nav_observe(nav, 0.1, 1.52, 1.5, 0.4, 0.0, &mut accepted) };
    assert!(!accepted, "below the update distance");

    let mut layers = vec![vec![0.0; n * n]; 4];
    for (k, buf) in layers.iter_mut().enumerate() {
        assert_eq!(unsafe { guider_nav_layer(nav, k as u32, buf.as_mut_ptr(), buf.len()) }, GuiderStatus::Ok);
    }
    for i in 0..n * n {
        assert_eq!(layers[3][i], layers[0][i].max(layers[1][i]).max(layers[2][i]));
    }
    let mut pred = GuiderPrediction::default();
    assert_eq!(unsafe { guider_nav_predict(nav, &mut pred) }, GuiderStatus::Ok);
    assert!(pred.wx > 1.5, "prediction ahead of the base: {pred:?}");

    assert_eq!(unsafe { guider_nav_layer(nav, 9, layers[0].as_mut_ptr(), n * n) }, GuiderStatus::InvalidArgument);
    assert!(last_error().contains("unknown layer"));
    assert_eq!(unsafe { guider_nav_layer(nav, 0, layers[0].as_mut_ptr(), 3) }, GuiderStatus::InvalidArgument);
    unsafe { guider_nav_free(nav) };
    unsafe { guider_nav_free(ptr::null_mut()) };
}

#[test]
fn nav_rejects_bad_inputs() {
    let mut nav = ptr::null_mut();
    let cells = vec![7u8; 4];
    assert_eq!(
        unsafe { guider_nav_new(2, 2, 0.05, 0.0, 0.0, cells.as_ptr(), ptr::null(), &mut nav) },
        GuiderStatus::InvalidArgument
    );
    assert!(nav.is_null());
    assert_eq!(
        unsafe { guider_nav_new(2, 2, 0.05, 0.0, 0.0, ptr::null(), ptr::null(), &mut nav) },
        GuiderStatus::NullPointer
    );
    let ok = vec![GUIDER_CELL_FREE; 4];
    let cfg = CString::new("nav.motion_radius = -1").unwrap();
    assert_eq!(
        unsafe { guider_nav_new(2, 2, 0.05, 0.0, 0.0, ok.as_ptr(), cfg.as_ptr(), &mut nav) },
        GuiderStatus::Config
    );
    assert!(last_error().contains("motion_radius"));
    let cfg = CString::new("nav.motion_radius = 1.5").unwrap();
    assert_eq!(
        unsafe { guider_nav_new(2, 2, 0.05, 0.0, 0.0, ok.as_ptr(), cfg.as_ptr(), &mut nav) },
        GuiderStatus::Ok
    );
    assert_eq!(last_error(), "");
    assert_eq!(
        unsafe { guider_nav_observe(nav, 0.0, f64::NAN, 0.0, 0.0, 0.0, ptr::null_mut()) },
        GuiderStatus::InvalidArgument
    );
    unsafe { guider_nav_free(nav) };
    assert_eq!(
        unsafe { guider_nav_observe(ptr::null_mut(), 0.0, 0.0, 0.0, 0.0, 0.0, ptr::null_mut()) },
        GuiderStatus::NullPointer
    );
}

#[test]
fn eef_parked_tcp_grows_belief() {
    let centroids = [0.4, 0.1, 0.05, -0.3, 0.2, 0.05];
    let g = [0.5, 0.7];
    let mut eef = ptr::null_mut();
    assert_eq!(
        unsafe { guider_eef_new(centroids.as_ptr(), g.as_ptr(), 2, ptr::null(), &mut eef) },
        GuiderStatus::Ok
    );
    let (q, zero) = ([0.4, 0.1, 0.1], [0.0; 3]);
    for k in 0..100 {
        let s = unsafe { guider_eef_observe(eef, k as f64 * 0.02, q.as_ptr(), zero.as_ptr(), zero.as_ptr()) };
        assert_eq!(s, GuiderStatus::Ok);
    }
    let mut p = [0.0; 2];
    assert_eq!(unsafe { guider_eef_beliefs(eef, p.as_mut_ptr(), 2) }, GuiderStatus::Ok);
    assert!(p[0] > 0.9 && p[0] <= 0.99, "{p:?}");
    let mut top = 9;
    assert_eq!(unsafe { guider_eef_top(eef, &mut top) }, GuiderStatus::Ok);
    assert_eq!(top, 0);
    assert_eq!(
        unsafe { guider_eef_observe(eef, 0.0, ptr::null(), zero.as_ptr(), zero.as_ptr()) },
        GuiderStatus::NullPointer
    );
    unsafe { guider_eef_free(eef) };
}

#[test]
fn grasp_verdicts_for_bar_and_disk() {
    let (w, h) = (60, 120);
    let mut bar = vec![0u8; w * h];
    for y in 10..110 {
        for x in 15..45 {
            bar[y * w + x] = 1;
        }
    }
    let mut v = GuiderGraspVerdict::default();
    assert_eq!(
        unsafe { guider_grasp_assess(bar.as_ptr(), w, h, 1.0, 600.0, ptr::null(), &mut v) },
        GuiderStatus::Ok
    );
    assert!(v.bbox && v.morph && v.advanced, "{v:?}");
    assert!((v.bbox_short_side_m - 0.05).abs() < 1e-12);

    let size = 90;
    let mut disk = vec![0u8; size * size];
    for y in 0..size {
        for x in 0..size {
            let (dx, dy) = (x as f64 + 0.5 - 45.0, y as f64 + 0.5 - 45.0);
            disk[y * size + x] = u8::from(dx * dx + dy * dy <= 36.0 * 36.0);
        }
    }
    assert_eq!(
        unsafe { guider_grasp_assess(disk.as_ptr(), size, size, 1.0, 600.0, ptr::null(), &mut v) },
        GuiderStatus::Ok
    );
    assert!(!v.bbox && !v.morph && !v.advanced, "{v:?}");

    let empty = vec![0u8; 4];
    assert_eq!(
        unsafe { guider_grasp_assess(empty.as_ptr(), 2, 2, 1.0, 600.0, ptr::null(), &mut v) },
        GuiderStatus::Input
    );
}

#[test]
fn wilcoxon_and_metrics() {
    let x = [10.0, 11.0, 12.0, 13.0, 14.0];
    let y = [5.0, 6.0, 7.0, 8.0, 9.0];
    let mut r = GuiderWilcoxon::default();
    assert_eq!(
        unsafe { guider_wilcoxon(x.as_ptr(), y.as_ptr(), 5, GuiderAlternative::Greater as u32, &mut r) },
        GuiderStatus::Ok
    );
    assert_eq!((r.n, r.p_one, r.r_bs), (5, 1.0 / 32.0, 1.0));
    assert_eq!(
        unsafe { guider_wilcoxon(x.as_ptr(), y.as_ptr(), 5, 4, &mut r) },
        GuiderStatus::InvalidArgument
    );

    let t = [0.0, 1.0, 2.0, 3.0];
    let p = [-1, 0, 1, 1];
    let mut m = GuiderMetrics::default();
    assert_eq!(
        unsafe { guider_metrics(t.as_ptr(), p.as_ptr(), 4, 1, 5.0, 0.5, &mut m) },
        GuiderStatus::Ok
    );
    assert!(m.has_rtcp);
    assert_eq!(m.rtcp, 3.0);
    assert_eq!(m.stability, 100.0);
    assert_eq!(
        unsafe { guider_metrics(t.as_ptr(), p.as_ptr(), 0, 1, 5.0, 0.5, &mut m) },
        GuiderStatus::Input
    );
}
