//! Numerical verification of a perturbative existence result for the mixed
//! local/nonlocal Lane-Emden equation `−Δu + μ(−Δ)^s u + μu = n(n−2)u₊^{p₁−ε}`
//! near the Aubin-Talenti bubble, by Lyapunov-Schmidt reduction on a radial grid.
#![allow(non_snake_case)]

pub mod bessel;
pub mod cli;
pub mod fracop;
pub mod lemma_verify;
pub mod profiles;
pub mod quad;
pub mod radialgrid;
pub mod reduction;
pub mod specfun;
