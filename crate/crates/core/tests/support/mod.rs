#![allow(dead_code)]

pub mod laws;
