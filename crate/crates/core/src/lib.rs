// SPDX-License-Identifier: Apache-2.0

//! Class groups, `p`-ranks and cyclotomic `λ`-invariants of imaginary
//! quadratic fields, together with the Cohen–Lenstra densities they are
//! compared against.

pub mod arith;
pub mod classgroup;
pub mod cldensity;
pub mod iwasawa;
pub mod randmatrix;
pub mod sweep;
pub mod verify;
