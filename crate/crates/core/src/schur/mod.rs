//! Measurements on `ℓ`-copy blocks that depend only on the pre-change state.

pub mod isotypic;
pub mod pvm;
pub mod young;

pub use isotypic::{
    isotypic_projector, isotypic_projectors, ClassSums, MAX_BLOCK_LENGTH, PVM_DIM_CAP,
};
pub use pvm::{
    build_isotypic_pvm, build_pvm, build_type_pvm, eigenvalue_classes, entropy_gap_sweep, induce,
    EigenvalueClass, EntropyGapRow, InducedModel, OutcomeLabel, Pvm, PvmKind, PvmResiduals,
};
pub use young::{enumerate_young_diagrams, hook_dimension, mn_character, YoungDiagram};
