//! Bell nonlocality of bipartite pure states, quantified by Monte Carlo
//! integration over measurement settings.
//!
//! For each sampled setting the generated behavior `p(a,b|x,y)` is tested
//! against the local polytope with a linear program. Averaging gives the
//! nonlocal volume (fraction of nonlocal settings), the trace-weighted
//! nonlocal volume (each nonlocal setting weighted by its trace distance to
//! the local polytope) and, per Bell functional, the volume of violation.

pub mod cli;
pub mod lp;
pub mod montecarlo;
pub mod polytope;
pub mod quantum;
