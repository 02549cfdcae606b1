//! Question files, prompt materialization, answer scoring and aggregation.

mod hungarian;
mod report;
mod score;
mod spec;
mod suite;

pub use hungarian::{assignment_cost, hungarian_assign};
pub use report::{aggregate, standard_error, weighted, AggregateError, CategorySummary, RunReport, ScoredQuestion, Summary};
pub use score::{compare_value, evaluate_answer, evaluate_value, FieldScore, QuestionScore, Record};
pub use spec::{
    load_question, materialize_prompt, placeholders_in, DataType, PromptError, PromptRoots, QuestionCategory,
    QuestionSpec, SchemaError, ToleranceSpec, PLACEHOLDERS,
};
pub use suite::{load_suite, Suite, SuiteError, SuiteQuestion};
