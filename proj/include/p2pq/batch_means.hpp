#pragma once

#include <span>

namespace p2pq {

struct ConfidenceInterval {
    double mean = 0.0;
    double halfwidth = 0.0;
};

/// Two-sided Student-t quantile t_{(1+confidence)/2, dof}.
double student_t_quantile(double confidence, int dof);

/// Mean and t-based half-width treating the samples as i.i.d.; used both for
/// batch means within a run and across independent replications.
/// Needs at least two samples.
ConfidenceInterval mean_ci(std::span<const double> samples, double confidence = 0.95);

}  // namespace p2pq
