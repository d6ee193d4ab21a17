pub mod audio;
pub mod augment;
pub mod text;
pub mod corpus;
pub mod metrics;
pub mod par;
