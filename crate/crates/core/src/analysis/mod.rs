//! Statistics over transcripts and the report files built from them.

pub mod report;
pub mod samples;
pub mod stats;
pub mod tables;

pub use report::{analyze, write_reports, AnalysisReport, ReportError, TreatmentMetrics};
pub use samples::{
    chi_square_homogeneity, classify_bids, extract_samples, mean_abs_diff, r2_identity_decomposition, ratio_bin,
    truthful_rate, BidClasses, BidSample, R2Decomposition,
};
pub use stats::{
    chi_square_from_counts, chi_square_isf, chi_square_sf, kendall_tau_b, loess_smooth, mean_se, quantile,
    student_t_two_sided, welch_t_test, ChiSquare, KendallTau, MeanSe, StatsError, TTest,
};
pub use tables::{revenue_table, sniping_profile, treatment_label, winner_profit_by_n, ProfitSummary, SnipingProfile};
