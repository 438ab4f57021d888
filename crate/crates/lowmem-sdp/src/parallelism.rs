//! Internal thread-count control.
//!
//! `LOWMEM_SDP_THREADS` caps how many threads embarrassingly parallel stages
//! (sample rounding, independent chains) may use. Unset or unparsable values
//! fall back to the available parallelism, capped at 8.

pub fn thread_cap() -> usize {
    if let Ok(s) = std::env::var("LOWMEM_SDP_THREADS") {
        if let Ok(v) = s.trim().parse::<usize>() {
            return v.max(1);
        }
    }
    std::thread::available_parallelism()
        .map(|v| v.get())
        .unwrap_or(1)
        .min(8)
}
