//! Files, patches, and conflicting files.
//!
//! This crate models a single text file under version control as a category:
//!
//! * [`line`] holds plain files (sequences of [`Label`]s) and patches between
//!   them (injective, increasing, label-preserving partial maps of line
//!   positions), together with composition, the monoidal tensor, the
//!   insert/delete generators and a longest-common-subsequence `diff`.
//! * [`conflict`] holds conflict files: finite labeled sets with a transitive
//!   relation. Every pair of patches with a common source has a merge there,
//!   computed by [`conflict::pushout`]. Files embed as strict total orders.
//! * [`render`] has the canonical text encodings of objects and morphisms and
//!   the git-style marker rendering of conflicted objects.
//! * [`repository`] models a history as an event structure whose events carry
//!   morphisms, and evaluates configurations to conflict files by iterated
//!   pushouts.
//!
//! The crate is `no_std` and only needs `alloc`.
//!
//! ```
//! use copatch_core::line::{diff, File};
//! use copatch_core::conflict::{pushout, PartialMorphism};
//! use copatch_core::render::render_conflicts;
//!
//! let base = File::from_text("a\nb\n").unwrap();
//! let left = File::from_text("a\nc\nb\n").unwrap();
//! let right = File::from_text("a\nd\nb\n").unwrap();
//! let f = PartialMorphism::embed_patch(&diff(&base, &left)).unwrap();
//! let g = PartialMorphism::embed_patch(&diff(&base, &right)).unwrap();
//! let merged = pushout(&f, &g).unwrap();
//! assert_eq!(
//!     render_conflicts(merged.apex()),
//!     "a\n<<<<<<<\nc\n=======\nd\n>>>>>>>\nb\n"
//! );
//! ```
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod conflict;
pub mod line;
pub mod render;
pub mod repository;

pub use conflict::{ConflictFile, LineId, PartialMorphism};
pub use line::{File, Label, Patch};
