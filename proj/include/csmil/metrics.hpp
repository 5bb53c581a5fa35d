#pragma once

#include <vector>

namespace csmil {

// Parallel (score, label) lists; labels are 0/1.
struct ScoredSet {
    std::vector<double> scores;
    std::vector<int> labels;
};

// Mean of per-bag positive-class probabilities: the slide-level prediction.
double slide_score(const std::vector<double>& bag_probs);

// Mann-Whitney AUC: (wins + 0.5 * ties) / (P * N), computed via rank sums.
// Requires at least one positive and one negative.
double roc_auc(const ScoredSet& s);

// Step (non-interpolated) average precision over descending-score thresholds;
// tied scores are grouped at one threshold. Requires at least one positive.
double pr_ap(const ScoredSet& s);

// Fraction with (score >= threshold) matching the label.
double accuracy(const ScoredSet& s, double threshold = 0.5);

} // namespace csmil
