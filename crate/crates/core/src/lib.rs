pub mod emm;
pub mod gep;
pub mod hankel;
pub mod linalg;
pub mod lp;
pub mod moments;
pub mod pade;
pub mod real;
