//! Fixed-width word types and the bit-level plumbing (rotation, segmentation,
//! split/concat) used throughout the cipher and its process networks.
//!
//! Bit 0 is the least-significant bit. The "left half" of a 2w-bit word is its
//! most-significant w bits, and segment 0 of a segmented key is its
//! most-significant 16 bits. All arithmetic is modulo the word width.

pub type Word16 = u16;
pub type Word32 = u32;
pub type Word64 = u64;
pub type Word128 = u128;

/// Rotate a 16-bit word left by `n` bits.
///
/// `n` must be in `0..=15`; any other count is a contract violation and
/// panics.
#[inline]
pub fn rotl16(w: Word16, n: u32) -> Word16 {
    assert!(n < 16, "rotl16 count out of range: {n}");
    w.rotate_left(n)
}

/// Split a 128-bit key into eight 16-bit segments, most-significant first.
#[inline]
pub fn segs(key: Word128) -> [Word16; 8] {
    let mut out = [0u16; 8];
    for (i, seg) in out.iter_mut().enumerate() {
        *seg = (key >> (112 - 16 * i)) as u16;
    }
    out
}

/// Split a 64-bit word into its (most-significant, least-significant) halves.
#[inline]
pub fn split64(w: Word64) -> (Word32, Word32) {
    ((w >> 32) as u32, w as u32)
}

/// Join two 32-bit halves, `left` most significant.
#[inline]
pub fn concat32(left: Word32, right: Word32) -> Word64 {
    ((left as u64) << 32) | right as u64
}

/// Split a 32-bit word into its (most-significant, least-significant) halves.
#[inline]
pub fn split32(w: Word32) -> (Word16, Word16) {
    ((w >> 16) as u16, w as u16)
}

/// Join two 16-bit halves, `left` most significant.
#[inline]
pub fn concat16(left: Word16, right: Word16) -> Word32 {
    ((left as u32) << 16) | right as u32
}

/// Fixed-width uppercase hex, no separators: 4 digits.
pub fn hex16(w: Word16) -> String {
    format!("{w:04X}")
}

/// Fixed-width uppercase hex, no separators: 8 digits.
pub fn hex32(w: Word32) -> String {
    format!("{w:08X}")
}

/// Fixed-width uppercase hex, no separators: 16 digits.
pub fn hex64(w: Word64) -> String {
    format!("{w:016X}")
}

/// Fixed-width uppercase hex, no separators: 32 digits.
pub fn hex128(w: Word128) -> String {
    format!("{w:032X}")
}
