//! Criterion benchmarks for `uipt-core`; see `benches/`.
