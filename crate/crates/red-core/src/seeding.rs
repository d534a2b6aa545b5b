//! Deterministic seed fan-out.
//!
//! A run has one master seed; every randomized component derives its own
//! stream as `master ^ fnv1a(component_name)`. The XOR keeps streams distinct
//! across components while staying reproducible from the master seed alone.

/// FNV-1a 64-bit hash. Stable across platforms and releases.
pub fn stable_hash(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derive a component seed from the master seed.
pub fn split_seed(master: u64, component: &str) -> u64 {
    master ^ stable_hash(component)
}
