use serde::{Deserialize, Serialize};

/// Outcome of direct reasoning (DR) versus tool-integrated reasoning (TIR)
/// on the same question.
#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DifficultyCategory {
    Cat1_DRok_TIRok,
    Cat2_DRok_TIRbad,
    Cat3_DRbad_TIRok,
    Cat4_DRbad_TIRbad,
}

impl DifficultyCategory {
    pub fn from_verdicts(dr_correct: bool, tir_correct: bool) -> Self {
        match (dr_correct, tir_correct) {
            (true, true) => Self::Cat1_DRok_TIRok,
            (true, false) => Self::Cat2_DRok_TIRbad,
            (false, true) => Self::Cat3_DRbad_TIRok,
            (false, false) => Self::Cat4_DRbad_TIRbad,
        }
    }

    pub fn dr_correct(self) -> bool {
        matches!(self, Self::Cat1_DRok_TIRok | Self::Cat2_DRok_TIRbad)
    }

    pub fn tir_correct(self) -> bool {
        matches!(self, Self::Cat1_DRok_TIRok | Self::Cat3_DRbad_TIRok)
    }
}
