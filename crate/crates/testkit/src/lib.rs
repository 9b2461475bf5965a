//! Test support: random program generators and a brute-force reference
//! simulator for the norm engine, plus checks over filling-plant runs.

pub mod gen;
pub mod oracle;
pub mod plant;
