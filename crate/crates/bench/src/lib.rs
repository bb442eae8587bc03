//! Criterion benchmarks for `wallflow-core`; see `benches/`.
