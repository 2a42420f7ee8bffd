#![cfg_attr(not(test), no_std)]
//! Core kernels for p-adic L-series work: windowed arithmetic in unramified
//! p-adic fields, exact roots of unity and cyclotomic integers,
//! multiplicative characters with their Gauss sums, the tree of lattice
//! classes with Hecke operators and difference maps, local measure
//! bookkeeping, archimedean Bessel integrals, and the rational-curve
//! assembly that ties them together.

extern crate alloc;

pub mod arch;
pub mod chars;
pub mod global;
pub mod local;
pub mod padic;
pub mod roots;
pub mod tree;
