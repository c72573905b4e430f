pub mod bench;
pub mod cli;
pub mod emit;
pub mod engine;
pub mod model;
pub mod oracle;
pub mod parser;
pub mod plan;
pub mod report;
pub mod search;
