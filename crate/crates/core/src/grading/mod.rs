//! Rubrics, grade validation, the append-only grade ledger and the
//! four-dimensional grade table built from it.

mod ledger;
mod rubric;
mod table;

pub use ledger::{
    GradeKey, GradeLedger, GradeRecord, IssuedTasks, LedgerEntry, LedgerError, LedgerLine, LedgerLoadError,
    GRADES_SCHEMA,
};
pub use rubric::{validate_grade, QuestionType, Rubric, RubricCatalog, RubricError, ScaleLevel, MAX_RUBRIC_GRADE};
pub use table::{build_grade_table, CellRef, DimensionBlock, GradeTable, QuestionBlock, TableError};
