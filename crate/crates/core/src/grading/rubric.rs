use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::RubricId;

/// Highest grade any rubric may award (the general 0-3 point scale).
pub const MAX_RUBRIC_GRADE: u32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionType {
    Factual,
    OpenEnded,
    Creative,
    Binary,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleLevel {
    pub grade: u32,
    pub descriptor: String,
}

impl ScaleLevel {
    pub fn new(grade: u32, descriptor: impl Into<String>) -> Self {
        Self { grade, descriptor: descriptor.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rubric {
    pub id: RubricId,
    #[serde(default = "first_version")]
    pub version: u32,
    pub question_type: QuestionType,
    pub scale: Vec<ScaleLevel>,
    pub min_grade: u32,
    pub max_grade: u32,
    pub allows_zero: bool,
    #[serde(default)]
    pub timeliness_note: String,
}

fn first_version() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RubricError {
    #[error("rubric scale is empty")]
    EmptyScale,
    #[error("rubric scale grades must be strictly increasing, got {0:?}")]
    NonMonotonicScale(Vec<u32>),
    #[error("rubric grade {0} exceeds the maximum of {MAX_RUBRIC_GRADE}")]
    GradeAboveMaximum(u32),
    #[error("open-ended rubrics stop at grade 2, binary rubrics at grade 1")]
    TypeCapExceeded,
    #[error("min/max/allows_zero do not match the scale")]
    InconsistentBounds,
    #[error("rubric `{0}` is already registered; revise it instead")]
    AlreadyRegistered(RubricId),
    #[error("unknown rubric `{0}`")]
    UnknownRubric(RubricId),
    #[error("grade {grade} is not on the scale {allowed:?}")]
    GradeOutOfScale { grade: i64, allowed: Vec<u32> },
}

impl Rubric {
    /// Builds a rubric with bounds derived from its scale.
    pub fn new(
        id: impl Into<RubricId>,
        question_type: QuestionType,
        scale: Vec<ScaleLevel>,
    ) -> Result<Self, RubricError> {
        let first = scale.first().ok_or(RubricError::EmptyScale)?.grade;
        let last = scale.last().map(|l| l.grade).unwrap_or(first);
        let rubric = Self {
            id: id.into(),
            version: 1,
            question_type,
            min_grade: first,
            max_grade: last,
            allows_zero: first == 0,
            scale,
            timeliness_note: String::new(),
        };
        rubric.check()?;
        Ok(rubric)
    }

    pub fn with_timeliness_note(mut self, note: impl Into<String>) -> Self {
        self.timeliness_note = note.into();
        self
    }

    pub fn grades(&self) -> Vec<u32> {
        self.scale.iter().map(|l| l.grade).collect()
    }

    pub fn check(&self) -> Result<(), RubricError> {
        if self.scale.is_empty() {
            return Err(RubricError::EmptyScale);
        }
        let grades = self.grades();
        if grades.windows(2).any(|w| w[0] >= w[1]) {
            return Err(RubricError::NonMonotonicScale(grades));
        }
        let top = *grades.last().expect("non-empty");
        if top > MAX_RUBRIC_GRADE {
            return Err(RubricError::GradeAboveMaximum(top));
        }
        let cap = match self.question_type {
            QuestionType::OpenEnded => 2,
            QuestionType::Binary => 1,
            QuestionType::Factual | QuestionType::Creative => MAX_RUBRIC_GRADE,
        };
        if top > cap {
            return Err(RubricError::TypeCapExceeded);
        }
        if self.min_grade != grades[0] || self.max_grade != top || self.allows_zero != (self.min_grade == 0) {
            return Err(RubricError::InconsistentBounds);
        }
        Ok(())
    }

    pub fn descriptor(&self, grade: u32) -> Option<&str> {
        self.scale.iter().find(|l| l.grade == grade).map(|l| l.descriptor.as_str())
    }
}

/// Accepts iff `grade` is one of the rubric's scale values.
pub fn validate_grade(grade: i64, rubric: &Rubric) -> Result<u32, RubricError> {
    u32::try_from(grade)
        .ok()
        .filter(|g| rubric.scale.iter().any(|l| l.grade == *g))
        .ok_or_else(|| RubricError::GradeOutOfScale { grade, allowed: rubric.grades() })
}

/// Versioned rubric store. Versions are never overwritten: a revision
/// appends a new version and leaves earlier ones readable.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<Rubric>", into = "Vec<Rubric>")]
pub struct RubricCatalog {
    versions: BTreeMap<RubricId, Vec<Rubric>>,
}

impl From<Vec<Rubric>> for RubricCatalog {
    fn from(list: Vec<Rubric>) -> Self {
        let mut versions: BTreeMap<RubricId, Vec<Rubric>> = BTreeMap::new();
        for r in list {
            versions.entry(r.id.clone()).or_default().push(r);
        }
        for v in versions.values_mut() {
            v.sort_by_key(|r| r.version);
        }
        Self { versions }
    }
}

impl From<RubricCatalog> for Vec<Rubric> {
    fn from(c: RubricCatalog) -> Self {
        c.versions.into_values().flatten().collect()
    }
}

impl RubricCatalog {
    pub fn register(&mut self, mut rubric: Rubric) -> Result<RubricId, RubricError> {
        rubric.check()?;
        if self.versions.contains_key(&rubric.id) {
            return Err(RubricError::AlreadyRegistered(rubric.id));
        }
        rubric.version = 1;
        let id = rubric.id.clone();
        self.versions.insert(id.clone(), vec![rubric]);
        Ok(id)
    }

    /// Appends a new version with the given scale; returns its version number.
    pub fn revise(&mut self, id: &RubricId, scale: Vec<ScaleLevel>) -> Result<u32, RubricError> {
        let history = self.versions.get_mut(id).ok_or_else(|| RubricError::UnknownRubric(id.clone()))?;
        let latest = history.last().expect("registered rubrics have a version");
        let mut next = Rubric::new(id.clone(), latest.question_type, scale)?;
        next.timeliness_note = latest.timeliness_note.clone();
        next.version = latest.version + 1;
        let version = next.version;
        history.push(next);
        Ok(version)
    }

    pub fn current(&self, id: &RubricId) -> Option<&Rubric> {
        self.versions.get(id).and_then(|v| v.last())
    }

    pub fn version(&self, id: &RubricId, version: u32) -> Option<&Rubric> {
        self.versions.get(id).and_then(|v| v.iter().find(|r| r.version == version))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Rubric> {
        self.versions.values().filter_map(|v| v.last())
    }

    /// Checks every stored version.
    pub fn check_all(&self) -> Result<(), RubricError> {
        self.versions.values().flatten().try_for_each(Rubric::check)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factuality() -> Rubric {
        Rubric::new(
            "factuality",
            QuestionType::Factual,
            vec![
                ScaleLevel::new(0, "Incorrect information"),
                ScaleLevel::new(1, "Correct information but incomplete"),
                ScaleLevel::new(2, "Correct information and complete"),
            ],
        )
        .unwrap()
    }

    fn logistics_creativity() -> Rubric {
        Rubric::new(
            "logistics-creativity",
            QuestionType::Creative,
            vec![
                ScaleLevel::new(1, "Limited consistency with requirements"),
                ScaleLevel::new(2, "Complete consistency with requirements but not in logistics context"),
                ScaleLevel::new(3, "Complete consistency with requirements and in logistics context"),
            ],
        )
        .unwrap()
    }

    #[test]
    fn registers_factuality_and_zero_less_creativity_scales() {
        let mut c = RubricCatalog::default();
        c.register(factuality()).unwrap();
        c.register(logistics_creativity()).unwrap();
        let creative = c.current(&"logistics-creativity".into()).unwrap();
        assert!(!creative.allows_zero);
        assert_eq!(creative.min_grade, 1);
        assert_eq!(c.current(&"factuality".into()).unwrap().descriptor(2), Some("Correct information and complete"));
    }

    #[test]
    fn rejects_bad_scales() {
        let scale = vec![ScaleLevel::new(0, "a"), ScaleLevel::new(2, "b"), ScaleLevel::new(1, "c")];
        assert_eq!(
            Rubric::new("x", QuestionType::Factual, scale).unwrap_err(),
            RubricError::NonMonotonicScale(vec![0, 2, 1])
        );
        assert_eq!(Rubric::new("x", QuestionType::Factual, vec![]).unwrap_err(), RubricError::EmptyScale);
        assert_eq!(
            Rubric::new("x", QuestionType::Factual, vec![ScaleLevel::new(4, "too high")]).unwrap_err(),
            RubricError::GradeAboveMaximum(4)
        );
        let open = vec![ScaleLevel::new(0, "a"), ScaleLevel::new(3, "b")];
        assert_eq!(Rubric::new("x", QuestionType::OpenEnded, open).unwrap_err(), RubricError::TypeCapExceeded);
    }

    #[test]
    fn grade_membership() {
        let factual3 = Rubric::new(
            "principle-factual",
            QuestionType::Factual,
            (0..=3).map(|g| ScaleLevel::new(g, format!("grade {g}"))).collect(),
        )
        .unwrap();
        assert_eq!(validate_grade(3, &factual3), Ok(3));
        assert_eq!(
            validate_grade(0, &logistics_creativity()),
            Err(RubricError::GradeOutOfScale { grade: 0, allowed: vec![1, 2, 3] })
        );
        assert!(validate_grade(-1, &factual3).is_err());
        assert!(validate_grade(-1, &logistics_creativity()).is_err());
    }

    #[test]
    fn revisions_append_versions() {
        let mut c = RubricCatalog::default();
        let id = c.register(factuality()).unwrap();
        let v = c.revise(&id, (0..=3).map(|g| ScaleLevel::new(g, "x")).collect()).unwrap();
        assert_eq!(v, 2);
        assert_eq!(c.current(&id).unwrap().max_grade, 3);
        assert_eq!(c.version(&id, 1).unwrap().max_grade, 2);
        assert_eq!(c.register(factuality()).unwrap_err(), RubricError::AlreadyRegistered(id));

        let json = serde_json::to_string(&c).unwrap();
        let back: RubricCatalog = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }
}
