//! Knowledge synthesis from large language models, fact-checked multimodal
//! data augmentation, and conditional prompt distillation into a compact
//! NER / relation-classification student model.

pub mod corpus;

pub use corpus::{F1Report, Sample, Span, Task};
