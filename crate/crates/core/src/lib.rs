pub mod error;
pub mod factorize;
pub mod halfrange;
pub mod index;
pub mod io;
pub mod fixtures;
pub mod grating;
pub mod linalg;
pub mod linearize;
pub mod pencil;
pub mod qz;
pub mod signchar;
pub mod snumbers;
pub mod spectral;
pub mod top;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
