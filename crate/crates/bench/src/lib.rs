//! Criterion benchmarks for `odfc-core`; see `benches/`.
