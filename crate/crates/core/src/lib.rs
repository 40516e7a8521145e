pub mod error;
pub mod kernel;
pub mod operator;
pub mod pulse;
pub mod restore;
pub mod quality;
pub mod engine;
pub mod pulse_file;
pub mod experiment;
