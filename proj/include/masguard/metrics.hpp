#pragma once

#include <optional>
#include <string>
#include <vector>

#include "masguard/engine.hpp"
#include "masguard/linalg.hpp"

namespace masguard {

// Undefined values (precision with no positive predictions, AUC with a single
// class) are reported absent rather than zero so averages stay honest.
struct RecognitionMetrics {
    int tp = 0;
    int fp = 0;
    int tn = 0;
    int fn = 0;
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    std::optional<double> auc;
};

std::optional<double> auc_midrank(const Vec& scores, const std::vector<std::uint8_t>& labels);

RecognitionMetrics recognition(const Vec& probabilities, const std::vector<std::uint8_t>& labels,
                               double threshold = 0.5);

// Set-valued prediction; no AUC without scores.
RecognitionMetrics recognition_from_set(const std::vector<AgentId>& predicted,
                                        const std::vector<std::uint8_t>& labels);

// Fraction of agents exhibiting malicious or incorrect behavior at round t:
// adversarial flag set, or answer differing from gold. `count_seeds=false`
// restricts both numerator and denominator to non-seeded agents.
double asr(const Transcript& transcript, int round, bool count_seeds = true);

// Per-round fraction of transcripts whose aggregated answer matches gold.
std::vector<double> system_accuracy(const std::vector<Transcript>& transcripts);

// Tab-separated comparison table: per-round mean ASR for the paired runs plus
// "baseline/defended (delta)" cells, percentages.
std::string asr_table(const std::vector<Transcript>& baseline,
                      const std::vector<Transcript>& defended);

}  // namespace masguard
