//! Arithmetic statistics of the congruent-number curve family
//! `E_D : y^2 = x^3 - D^2 x` over square-free `D > 0`.
//!
//! The crate is organized around a batch pipeline:
//!
//! * [`arith`] — integer substrate: smallest-prime-factor sieve, factorization,
//!   square-free enumeration, Jacobi symbols, two-square decompositions.
//! * [`descent`] — 2-Selmer ranks `s(D)` by complete 2-descent (the normative
//!   oracle) and by F₂ rank of the Monsky matrix (the fast path for odd `D`),
//!   plus unconditional congruent/non-congruent certification.
//! * [`frobenius`] — traces `a_p(E_D)` via the CM twist formula, brute-force
//!   point counts for cross-checks and for cubic/quartic twist families,
//!   Frobenius averages.
//! * [`lfunction`] — real period by AGM, `L(1, E_D)` by the exponential-sum
//!   series, Tamagawa numbers, and the normalized BSD quantity with the
//!   odd-integer criterion.
//! * [`stats`] — empirical rank distributions per residue class against the
//!   Heath-Brown / Poonen-Rains / Delaunay models, chi-square testing,
//!   error-term normalization, Bernoulli resampling.
//! * [`learn`] — from-scratch logistic regression, CART decision tree,
//!   classification metrics and PCA for the feature-pipeline experiments.
//! * [`data`] — the `CurveRecord` schema, CSV persistence, ingestion of
//!   externally computed columns (MW ranks, 3-Selmer ranks, ...), merge
//!   validation.

pub mod arith;
pub mod data;
pub mod descent;
pub mod frobenius;
pub mod learn;
pub mod lfunction;
pub mod stats;
