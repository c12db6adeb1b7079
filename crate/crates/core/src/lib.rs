//! Tail-risk networks of financial firms.
//!
//! Daily return panels are cut into calendar-month windows. In each window the
//! marginal expected shortfall of every ordered firm pair defines a directed
//! impact weight; the symmetrized network is then scored with the weighted
//! Kirchhoff index and the weighted effective resistance centrality (WERC) of
//! each firm. A study aggregates WERC over sub-periods into quartile rankings.

pub mod charts;
pub mod config;
pub mod error;
pub mod network;
pub mod panel;
pub mod risk;
pub mod serde_inf;
pub mod spectral;
pub mod study;
pub mod synthetic;

pub use error::{Error, Result};
pub use network::{build_directed, symmetrize, DirectedNetwork, RiskNetwork, VertexStats};
pub use panel::{load_returns, window_panel, LoadOptions, ReturnPanel, WindowConfig, WindowSlice};
pub use risk::{edge_weight, estimate_es, estimate_mes, estimate_var, impact, RiskProfile};
pub use spectral::{
    analyze, barrat_clustering, effective_resistance_oracle, kirchhoff, kirchhoff_index,
    normalized_kirchhoff, spectrum, weighted_laplacian, werc, werc_all, LaplacianSpectrum,
    RobustnessReport,
};
pub use study::{run_study, RankingTable, StudyConfig, StudyOutput};
