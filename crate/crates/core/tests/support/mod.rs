#![allow(dead_code)]

pub mod plain;
pub mod rewrite;
pub mod skolem;
