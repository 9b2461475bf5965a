//! Interpreter and agent-centric enforcement runtime for NPL(s), a normative
//! programming language where norms produce time-bounded obligations and
//! sanction rules fire on obligation outcomes.

pub mod logic;
pub mod engine;
pub mod parser;
pub mod sanction;
pub mod runtime;
