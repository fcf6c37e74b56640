pub(crate) mod conv;
mod elementwise;
mod linalg;
mod norm;
mod reduce;
mod sample;
mod shape_ops;
