pub mod arrm;
pub mod channel;
pub mod config;
pub mod experiments;
pub mod lp;
pub mod metrics;
pub mod scenario;
pub mod simulator;
