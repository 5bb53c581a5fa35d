#include "csmil/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "csmil/common.hpp"

namespace csmil {

namespace {

void check(const ScoredSet& s) {
    if (s.scores.size() != s.labels.size())
        throw DataError("scored set: size mismatch");
    for (double v : s.scores)
        if (!std::isfinite(v)) throw DataError("scored set: non-finite score");
}

} // namespace

double slide_score(const std::vector<double>& bag_probs) {
    if (bag_probs.empty()) throw DataError("slide_score: empty bag list");
    double s = 0.0;
    for (double p : bag_probs) s += p;
    return s / double(bag_probs.size());
}

double roc_auc(const ScoredSet& s) {
    check(s);
    size_t n = s.scores.size();
    size_t pos = 0;
    for (int l : s.labels) pos += size_t(l != 0);
    size_t neg = n - pos;
    if (pos == 0 || neg == 0) throw DataError("roc_auc: needs both classes");

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t(0));
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return s.scores[a] < s.scores[b]; });

    // Midranks over tie groups; rank sum of positives gives the U statistic.
    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j < n && s.scores[order[j]] == s.scores[order[i]]) ++j;
        double midrank = 0.5 * double(i + 1 + j); // average of ranks i+1..j
        for (size_t k = i; k < j; ++k)
            if (s.labels[order[k]] != 0) rank_sum_pos += midrank;
        i = j;
    }
    double u = rank_sum_pos - double(pos) * double(pos + 1) / 2.0;
    return u / (double(pos) * double(neg));
}

double pr_ap(const ScoredSet& s) {
    check(s);
    size_t n = s.scores.size();
    size_t pos = 0;
    for (int l : s.labels) pos += size_t(l != 0);
    if (pos == 0) throw DataError("pr_ap: no positives");

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t(0));
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return s.scores[a] > s.scores[b]; });

    double ap = 0.0;
    double tp = 0.0, fp = 0.0, prev_recall = 0.0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j < n && s.scores[order[j]] == s.scores[order[i]]) ++j;
        for (size_t k = i; k < j; ++k) {
            if (s.labels[order[k]] != 0)
                tp += 1.0;
            else
                fp += 1.0;
        }
        double recall = tp / double(pos);
        double precision = tp / (tp + fp);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    return ap;
}

double accuracy(const ScoredSet& s, double threshold) {
    check(s);
    if (s.scores.empty()) return 0.0;
    size_t ok = 0;
    for (size_t i = 0; i < s.scores.size(); ++i) {
        int pred = s.scores[i] >= threshold ? 1 : 0;
        ok += size_t(pred == (s.labels[i] != 0 ? 1 : 0));
    }
    return double(ok) / double(s.scores.size());
}

} // namespace csmil
