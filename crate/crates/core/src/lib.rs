//! Chatbot evaluation campaigns.
//!
//! A corpus of human-bot dialogues is annotated with turn-level behavior
//! labels and with dialogue-level, turn-level and comparative Likert-style
//! ratings. The crate runs the campaign (training, screening, assignment,
//! persistence, HTTP service) and validates the resulting metrics:
//! agreement, predictive validity, sensitivity, stepwise selection and cost.

pub mod analysis;
pub mod campaign;
pub mod corpus;
pub mod metrics;
pub mod service;
pub mod synth;

pub use statkit;
