#![allow(dead_code)]

pub mod richardson;
