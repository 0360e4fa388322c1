//! Criterion benchmarks for the `postexplore` crate; see `benches/`.
