#pragma once

#include <cstddef>

namespace sass {

struct DetectionScores {
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

inline DetectionScores make_scores(std::size_t tp, std::size_t n_pred, std::size_t n_truth) {
    DetectionScores s;
    s.true_positives = tp;
    s.false_positives = n_pred - tp;
    s.false_negatives = n_truth - tp;
    s.precision = n_pred ? static_cast<double>(tp) / static_cast<double>(n_pred) : 0.0;
    s.recall = n_truth ? static_cast<double>(tp) / static_cast<double>(n_truth) : 0.0;
    s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

}  // namespace sass
