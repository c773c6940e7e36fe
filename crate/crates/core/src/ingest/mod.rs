//! Input parsing, questionnaire scoring and panel assembly.

mod files;
mod panel;
mod scoring;

pub use files::*;
pub use panel::{DesignLabels, GroupAssignment, Panel};
pub use scoring::*;
