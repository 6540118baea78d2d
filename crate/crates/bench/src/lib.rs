//! Criterion benchmarks for the hot paths of `pettykit`; see `benches/`.
