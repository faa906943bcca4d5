#include "p2pq/batch_means.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <stdexcept>

namespace p2pq {

double student_t_quantile(double confidence, int dof) {
    if (dof < 1 || !(confidence > 0.0 && confidence < 1.0)) {
        throw std::invalid_argument("student_t_quantile needs dof >= 1 and confidence in (0, 1)");
    }
    const boost::math::students_t dist(dof);
    return boost::math::quantile(dist, 0.5 + 0.5 * confidence);
}

ConfidenceInterval mean_ci(std::span<const double> samples, double confidence) {
    const std::size_t n = samples.size();
    if (n < 2) throw std::invalid_argument("mean_ci needs at least two samples");
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : samples) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    const double t = student_t_quantile(confidence, static_cast<int>(n - 1));
    return {mean, t * sd / std::sqrt(static_cast<double>(n))};
}

}  // namespace p2pq
