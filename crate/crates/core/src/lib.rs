pub mod colombeau;
pub mod corpus;
pub mod decompose;
pub mod expr;
pub mod groups;
pub mod numbertheory;
pub mod verify;
mod json;

pub use json::JsonFloat;
