use std::collections::BTreeSet;

use crate::tools::{Category, ToolRegistry};

pub const GENERAL_INSTRUCTIONS: &str = include_str!("../../assets/general_instructions.v1.md");
pub const SPECIAL_INSTRUCTIONS: &str = include_str!("../../assets/special_instructions.v1.md");

pub const TOOLS_HEADER: &str = "# Available tools";
pub const SPECIAL_HEADER: &str = "# Special instructions";

/// General instructions, then tool documentation, then special instructions,
/// under fixed headers. Pass `registry = None` to leave the tool section empty.
pub fn build_system_prompt(
    general: &str,
    registry: Option<&ToolRegistry>,
    categories: Option<&BTreeSet<Category>>,
    special: &str,
) -> String {
    let mut out = String::new();
    out.push_str(general.trim_end());
    out.push_str("\n\n");
    out.push_str(TOOLS_HEADER);
    out.push('\n');
    if let Some(reg) = registry {
        let docs = reg.render_tool_docs(categories);
        if !docs.is_empty() {
            out.push_str("The following functions are already defined and can be called directly from your code.\n\n");
            out.push_str(&docs);
        }
    }
    out.push('\n');
    out.push_str(SPECIAL_HEADER);
    out.push('\n');
    if !special.trim().is_empty() {
        out.push_str(special.trim_end());
        out.push('\n');
    }
    out
}
