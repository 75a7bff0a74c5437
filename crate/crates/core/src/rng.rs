//! Philox4x32-10 counter-based generator.
//!
//! Every Brownian increment is a pure function of `(seed, sample, mode, step)`,
//! so samples can be generated on any worker, in any order, and replayed.

const M0: u32 = 0xD251_1F53;
const M1: u32 = 0xCD9E_8D57;
const W0: u32 = 0x9E37_79B9;
const W1: u32 = 0xBB67_AE85;

#[inline]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = a as u64 * b as u64;
    ((p >> 32) as u32, p as u32)
}

/// Ten-round Philox bijection of a 128-bit counter under a 64-bit key.
pub fn philox4x32(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(W0);
            k[1] = k[1].wrapping_add(W1);
        }
        let (hi0, lo0) = mulhilo(M0, c[0]);
        let (hi1, lo1) = mulhilo(M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

/// Uniform in `(0, 1]` with 53 random bits.
#[inline]
fn open_unit(hi: u32, lo: u32) -> f64 {
    let bits = ((hi as u64) << 32 | lo as u64) >> 11;
    (bits + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal variate addressed by `(seed, sample, mode, step)` (Box–Muller, cosine branch).
pub fn normal_at(seed: u64, sample: u64, mode: u32, step: u32) -> f64 {
    let out = philox4x32(
        [step, mode, sample as u32, (sample >> 32) as u32],
        [seed as u32, (seed >> 32) as u32],
    );
    let u1 = open_unit(out[0], out[1]);
    let u2 = open_unit(out[2], out[3]);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
