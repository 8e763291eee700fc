#![allow(dead_code)]

pub mod decode;
pub mod metrics;
pub mod policy;
pub mod imitation;
pub mod cli;
