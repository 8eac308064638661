pub mod milp;
pub mod pwa;
pub mod hscop;
pub mod encode;
pub mod pip;
pub mod treatment;
pub mod synthdata;
pub mod classify;

#[cfg(test)]
pub(crate) mod testutil;
