//! Criterion benchmarks for the `tagcal` kernels. See `benches/kernels.rs`.
