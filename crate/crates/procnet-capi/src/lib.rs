//! C ABI for the KASUMI process-network library.
//!
//! Everything crosses the boundary as raw bytes (big-endian words), status
//! codes and one opaque handle type. The generated header lives in
//! `include/procnet.h`; a test keeps it in sync with `cbindgen`.

use std::panic::{catch_unwind, AssertUnwindSafe};

use procnet::kasumi_net::{build_design, ciphertexts, DesignId, KasumiNetwork};
use procnet::kasumi_ref;
use procnet::perf;
use procnet::runtime::RunConfig;

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PnStatus {
    PnOk = 0,
    /// A required pointer argument was null.
    PnErrNullArg = 1,
    /// The design name was not one of `d1`..`d4`.
    PnErrBadDesign = 2,
    /// The network run failed (deadlock, protocol fault, limits).
    PnErrRun = 3,
    /// An internal panic was caught at the boundary.
    PnErrPanic = 4,
}

/// Opaque handle to an elaborated design network.
pub struct PnNetwork {
    net: KasumiNetwork,
}

/// Communication-cost summary for one run.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct PnCostSummary {
    pub channel_events: u64,
    pub epochs: u64,
    pub in_flight_max: u64,
    pub blocks_per_epoch: f64,
}

fn key_from_bytes(b: &[u8; 16]) -> u128 {
    u128::from_be_bytes(*b)
}

fn guard<F: FnOnce() -> PnStatus>(f: F) -> PnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => PnStatus::PnErrPanic,
    }
}

/// Encrypt one 64-bit block with the sequential reference.
///
/// `key` is 16 bytes, `block` and `out` 8 bytes, all big-endian.
///
/// # Safety
/// All pointers must be valid for the sizes above or null (null yields
/// `PnErrNullArg`).
#[no_mangle]
pub unsafe extern "C" fn pn_kasumi_encrypt(
    key: *const u8,
    block: *const u8,
    out: *mut u8,
) -> PnStatus {
    if key.is_null() || block.is_null() || out.is_null() {
        return PnStatus::PnErrNullArg;
    }
    guard(|| {
        let k = key_from_bytes(&*(key as *const [u8; 16]));
        let b = u64::from_be_bytes(*(block as *const [u8; 8]));
        let ct = kasumi_ref::kasumi_encrypt(b, k);
        std::ptr::copy_nonoverlapping(ct.to_be_bytes().as_ptr(), out, 8);
        PnStatus::PnOk
    })
}

/// Derive the 64 16-bit subkeys, written pack-major in group order
/// (kL odd pair, kO odd triple, kI odd triple, then the even groups).
///
/// # Safety
/// `key` must point to 16 bytes, `out` to 64 `uint16_t`, or be null.
#[no_mangle]
pub unsafe extern "C" fn pn_key_schedule(key: *const u8, out: *mut u16) -> PnStatus {
    if key.is_null() || out.is_null() {
        return PnStatus::PnErrNullArg;
    }
    guard(|| {
        let ks = kasumi_ref::key_schedule(key_from_bytes(&*(key as *const [u8; 16])));
        let mut flat = Vec::with_capacity(64);
        for p in &ks.packs {
            flat.extend_from_slice(&p.kl_odd);
            flat.extend_from_slice(&p.ko_odd);
            flat.extend_from_slice(&p.ki_odd);
            flat.extend_from_slice(&p.kl_even);
            flat.extend_from_slice(&p.ko_even);
            flat.extend_from_slice(&p.ki_even);
        }
        std::ptr::copy_nonoverlapping(flat.as_ptr(), out, 64);
        PnStatus::PnOk
    })
}

/// Build a design network. `design` is a NUL-terminated string `d1`..`d4`.
/// On success `*out` owns the handle; release it with [`pn_network_free`].
///
/// # Safety
/// `design` must be a valid NUL-terminated string; `out` must be a valid
/// pointer or null.
#[no_mangle]
pub unsafe extern "C" fn pn_network_new(
    design: *const std::os::raw::c_char,
    out: *mut *mut PnNetwork,
) -> PnStatus {
    if design.is_null() || out.is_null() {
        return PnStatus::PnErrNullArg;
    }
    guard(|| {
        let name = match std::ffi::CStr::from_ptr(design).to_str() {
            Ok(s) => s,
            Err(_) => return PnStatus::PnErrBadDesign,
        };
        let id: DesignId = match name.parse() {
            Ok(d) => d,
            Err(_) => return PnStatus::PnErrBadDesign,
        };
        match build_design(id) {
            Ok(net) => {
                *out = Box::into_raw(Box::new(PnNetwork { net }));
                PnStatus::PnOk
            }
            Err(_) => PnStatus::PnErrRun,
        }
    })
}

/// Release a network handle. Null is accepted.
///
/// # Safety
/// `net` must have come from [`pn_network_new`] and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn pn_network_free(net: *mut PnNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Encrypt `n_blocks` 8-byte blocks through the design network.
///
/// # Safety
/// `blocks` and `out` must each point to `8 * n_blocks` bytes; `key` to 16
/// bytes. Null pointers yield `PnErrNullArg` (zero-block calls may pass null
/// data pointers).
#[no_mangle]
pub unsafe extern "C" fn pn_network_encrypt(
    net: *mut PnNetwork,
    key: *const u8,
    blocks: *const u8,
    n_blocks: usize,
    out: *mut u8,
    seed: u64,
) -> PnStatus {
    if net.is_null() || key.is_null() || (n_blocks > 0 && (blocks.is_null() || out.is_null())) {
        return PnStatus::PnErrNullArg;
    }
    guard(|| {
        let k = key_from_bytes(&*(key as *const [u8; 16]));
        let mut pts = Vec::with_capacity(n_blocks);
        for i in 0..n_blocks {
            let mut buf = [0u8; 8];
            std::ptr::copy_nonoverlapping(blocks.add(8 * i), buf.as_mut_ptr(), 8);
            pts.push(u64::from_be_bytes(buf));
        }
        match (*net).net.run_blocks(k, &pts, &RunConfig::cooperative(seed)) {
            Ok(outcome) => {
                for (i, ct) in ciphertexts(&outcome).into_iter().enumerate() {
                    std::ptr::copy_nonoverlapping(ct.to_be_bytes().as_ptr(), out.add(8 * i), 8);
                }
                PnStatus::PnOk
            }
            Err(_) => PnStatus::PnErrRun,
        }
    })
}

/// Run an instrumented workload and return the cost summary.
///
/// # Safety
/// `key` must point to 16 bytes and `out` to a `PnCostSummary`, or be null.
#[no_mangle]
pub unsafe extern "C" fn pn_network_measure(
    net: *mut PnNetwork,
    key: *const u8,
    n_blocks: usize,
    seed: u64,
    out: *mut PnCostSummary,
) -> PnStatus {
    if net.is_null() || key.is_null() || out.is_null() {
        return PnStatus::PnErrNullArg;
    }
    if n_blocks == 0 {
        return PnStatus::PnErrRun;
    }
    guard(|| {
        let k = key_from_bytes(&*(key as *const [u8; 16]));
        let design = (*net).net.design;
        match perf::measure(design, k, n_blocks, seed) {
            Ok(m) => {
                *out = PnCostSummary {
                    channel_events: m.report.total_channel_events,
                    epochs: m.report.epochs,
                    in_flight_max: m.report.in_flight_max,
                    blocks_per_epoch: m.throughput.blocks_per_epoch,
                };
                PnStatus::PnOk
            }
            Err(_) => PnStatus::PnErrRun,
        }
    })
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn pn_status_message(status: PnStatus) -> *const std::os::raw::c_char {
    let msg: &'static [u8] = match status {
        PnStatus::PnOk => b"ok\0",
        PnStatus::PnErrNullArg => b"null argument\0",
        PnStatus::PnErrBadDesign => b"unknown design (expected d1..d4)\0",
        PnStatus::PnErrRun => b"network run failed\0",
        PnStatus::PnErrPanic => b"internal panic\0",
    };
    msg.as_ptr() as *const std::os::raw::c_char
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    const KEY: [u8; 16] = [
        0x2B, 0xD6, 0x45, 0x9F, 0x82, 0xC5, 0xB3, 0x00, 0x95, 0x2C, 0x49, 0x10, 0x48, 0x81,
        0xFF, 0x48,
    ];

    #[test]
    fn reference_encrypt_round_trips_vector() {
        let block = 0xEA024714AD5C4D84u64.to_be_bytes();
        let mut out = [0u8; 8];
        let st = unsafe { pn_kasumi_encrypt(KEY.as_ptr(), block.as_ptr(), out.as_mut_ptr()) };
        assert_eq!(st, PnStatus::PnOk);
        assert_eq!(u64::from_be_bytes(out), 0xDF1F9B251C0BF45F);
    }

    #[test]
    fn null_arguments_are_rejected() {
        let st =
            unsafe { pn_kasumi_encrypt(std::ptr::null(), std::ptr::null(), std::ptr::null_mut()) };
        assert_eq!(st, PnStatus::PnErrNullArg);
    }

    #[test]
    fn key_schedule_flattens_in_pack_order() {
        let mut out = [0u16; 64];
        let st = unsafe { pn_key_schedule([0u8; 16].as_ptr(), out.as_mut_ptr()) };
        assert_eq!(st, PnStatus::PnOk);
        assert_eq!(out[0], 0x0000); // kL11
        assert_eq!(out[1], 0x89AB); // kL12
        assert_eq!(out[5], 0xFEDC); // kI11
    }

    #[test]
    fn network_handle_lifecycle_and_encrypt() {
        let name = CString::new("d4").unwrap();
        let mut handle: *mut PnNetwork = std::ptr::null_mut();
        let st = unsafe { pn_network_new(name.as_ptr(), &mut handle) };
        assert_eq!(st, PnStatus::PnOk);
        assert!(!handle.is_null());

        let blocks = 0xEA024714AD5C4D84u64.to_be_bytes();
        let mut out = [0u8; 8];
        let st = unsafe {
            pn_network_encrypt(handle, KEY.as_ptr(), blocks.as_ptr(), 1, out.as_mut_ptr(), 0)
        };
        assert_eq!(st, PnStatus::PnOk);
        assert_eq!(u64::from_be_bytes(out), 0xDF1F9B251C0BF45F);

        let mut summary = PnCostSummary::default();
        let st = unsafe { pn_network_measure(handle, KEY.as_ptr(), 4, 0, &mut summary) };
        assert_eq!(st, PnStatus::PnOk);
        assert!(summary.channel_events > 0);
        assert!(summary.epochs > 0);

        unsafe { pn_network_free(handle) };
    }

    #[test]
    fn bad_design_name_is_reported() {
        let name = CString::new("d9").unwrap();
        let mut handle: *mut PnNetwork = std::ptr::null_mut();
        let st = unsafe { pn_network_new(name.as_ptr(), &mut handle) };
        assert_eq!(st, PnStatus::PnErrBadDesign);
        assert!(handle.is_null());
    }

    #[test]
    fn status_messages_are_nul_terminated() {
        for s in [
            PnStatus::PnOk,
            PnStatus::PnErrNullArg,
            PnStatus::PnErrBadDesign,
            PnStatus::PnErrRun,
            PnStatus::PnErrPanic,
        ] {
            let msg = unsafe { std::ffi::CStr::from_ptr(pn_status_message(s)) };
            assert!(!msg.to_str().unwrap().is_empty());
        }
    }
}
