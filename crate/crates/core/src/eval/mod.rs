//! Metrics, per-epoch stability statistics and the lemma checks.

mod lemmas;
mod metrics;
mod stability;

pub use lemmas::{
    argmax_limit, descend_entropy, descend_probability_rows, entropy_gradient, lemma_two_scores, softmax_rows,
    verify_lemma1, verify_lemma2, EtaGroup, LemmaOneConfig, LemmaOneReport, LemmaTwoReport, LemmaTwoSetup,
};
pub use metrics::{auc_binary, macro_f1, micro_f1, ClassMetrics, MetricReport};
pub use stability::{stability_stats, StabilityStats, DEFAULT_SKIP};
