//! File formats, configuration, reports and plots around `kdvnet-core`,
//! plus the pieces behind the `kdvnet` command line.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod manifest;
pub mod plot;
pub mod report;

mod binfmt;

pub use error::{Error, Result};

/// Keeps large buffers on the heap instead of fresh `mmap`s. Training
/// allocates and frees multi-megabyte activations every step; with glibc's
/// default threshold each one costs a round of page faults.
pub fn tune_allocator() {
    #[cfg(all(target_os = "linux", target_env = "gnu"))]
    // SAFETY: mallopt only adjusts allocator tunables.
    unsafe {
        libc::mallopt(libc::M_MMAP_THRESHOLD, 1 << 30);
        libc::mallopt(libc::M_TRIM_THRESHOLD, 1 << 30);
    }
}
