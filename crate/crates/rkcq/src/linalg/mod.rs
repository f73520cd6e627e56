//! Dense complex linear algebra and FFT primitives shared by all modules.

mod dense;
mod eig;
mod fft;

pub use dense::{kron, vec_norm, BandedLu, BandedMatrix, CMatrix, LuFactorization};
pub use eig::{eig_small, EigenDecomposition, DEFECTIVE_CONDITION_LIMIT};
pub use fft::{inverse_contour_all, inverse_contour_at, inverse_contour_stack};
