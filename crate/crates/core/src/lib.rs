pub mod advice;
pub mod engine;
pub mod experiments;
pub mod format;
pub mod gridworld;
pub mod opinion;
pub mod policy;
