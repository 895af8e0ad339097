//! Fourier-side certificates: the quantities `A, B, B̃, C, D, E` for the
//! families of a square function or a gap-block functional, checks of the
//! angular ratio, M1 and M2 conditions, and the Ritt trend.

mod conditions;
mod lemma;
pub mod tails;

pub use conditions::{
    angular_ratio, check_m1, check_m2, ritt_constant, Condition, ConditionReport, M2Report,
    RittTrend, Verdict,
};
pub use lemma::{
    auto_t_min, family_sums, fit_constants, gap_family_sums, gap_small_t_bounds, lemma2_quantities,
    lemma_quantities, small_t_bounds, CertificateOptions, CertificateReport, FamilySpec,
    Lemma2Mode, PowerFamily, Quantity, SmallTBounds, SmallTConstants, TailBounds,
};
