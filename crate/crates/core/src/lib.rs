//! Attack-resilient cooperative adaptive cruise control over redundant V2V
//! channels.
//!
//! A platoon of vehicles tracks a leader with a constant time-headway
//! policy. Each follower receives its predecessor's command over `N`
//! redundant channels, up to `q` of which may carry arbitrary injected
//! values. The receiver fuses the channels by least-spread subset
//! averaging, monitors them for attacks, and feeds the fused command to an
//! H-infinity-tuned PD controller.

pub mod attack_monitor;
pub mod channel_set;
pub mod control_design;
pub mod error;
pub mod fusion;
pub mod numerics;
pub mod platoon_model;
pub mod rng;
pub mod sim_runner;
pub mod v2v_link;

pub use error::{Error, Result};
