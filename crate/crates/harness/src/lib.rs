//! Experiment runner for the ARN simulator: seeded sweeps with CSV/JSON
//! reports, two-sample statistics, and the live HTTP/WebSocket session.

pub mod replay;
pub mod server;
pub mod stats;
pub mod sweep;
