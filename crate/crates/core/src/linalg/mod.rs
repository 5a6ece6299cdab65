//! Dense linear algebra and Matrix Market IO.

mod dense;
mod eigen;
mod matrix_market;

pub use dense::{add, axpy, dist, dot, norm, norm_inf, norm_sq, scale, solve_general, sub, Cholesky, DenseMatrix};
pub use eigen::{cond_number, lambda_min_sym, singular_values, sym_eigenvalues, sym_spectral_norm};
pub use matrix_market::{load_matrix_market, to_matrix_market, write_matrix_market};
