#pragma once

#include <span>
#include <vector>

namespace opeval {

// Average ranks (1-based); tied values share the mean of their rank range.
std::vector<double> average_ranks(std::span<const double> xs);

// Spearman rank correlation with average-rank tie handling. Throws
// std::invalid_argument on length mismatch, n < 2, or zero rank variance.
double spearman(std::span<const double> xs, std::span<const double> ys);

// Coefficient of determination of the least-squares line predicting ys from
// xs. Constant xs throws; constant ys returns 0 by convention.
double r_squared(std::span<const double> xs, std::span<const double> ys);

}  // namespace opeval
