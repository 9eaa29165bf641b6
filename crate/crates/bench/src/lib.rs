//! Benchmarks for the core library live under `benches/`.
