pub mod asymptotics;
pub mod real;
pub mod billiard;
pub mod config;
pub mod error;
pub mod geometry;
pub mod jet2;
pub mod normalform;
pub mod orbits;
pub mod series;
pub mod suspension;
pub mod symbolic;
