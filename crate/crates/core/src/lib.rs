pub mod certificate;
pub mod commensuration;
pub mod examples;
pub mod field;
pub mod format;
pub mod globalization;
pub mod group;
pub mod noetherian;
pub mod partial;
pub mod perm;
pub mod regularization;
pub mod space;
pub mod union_find;
pub mod zset;
