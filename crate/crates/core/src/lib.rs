pub mod error;
pub mod forward;
pub mod inversion;
pub mod io;
pub mod medium;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};

#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/medium.md")]
    pub mod medium {}
    #[doc = include_str!("../../../book/src/forward.md")]
    pub mod forward {}
    #[doc = include_str!("../../../book/src/continuation.md")]
    pub mod continuation {}
    #[doc = include_str!("../../../book/src/stripping.md")]
    pub mod stripping {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    pub mod bounds {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
