//! Validation of stratified shape constraints over knowledge bases with a
//! normalized Horn-SHIQ ontology, either directly over the austere canonical
//! model or by rewriting the constraints and validating over the completed
//! data.

pub mod chase;
pub mod format;
pub mod gen;
pub mod kb;
pub mod model;
pub mod pipeline;
pub mod rewrite;
pub mod selftest;
pub mod shacl;
pub mod tbox;
