// SPDX-License-Identifier: Apache-2.0

//! Criterion benchmarks for the graph kernels; see `benches/`.
