//! Experience-driven level design for a Super-Mario-style platformer.
//!
//! A reinforcement-learning designer picks latent vectors, a generator
//! decodes them into 14x14 tile segments, and the level grows one segment
//! at a time under repair and automated play-testing.

pub mod commands;
pub mod config;
pub mod designer;
pub mod generator;
pub mod level;
pub mod metrics;
pub mod online;
pub mod player;
pub mod render;
