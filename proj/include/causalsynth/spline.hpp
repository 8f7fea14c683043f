#pragma once

#include <Eigen/Dense>
#include <vector>

#include "causalsynth/common.hpp"

namespace causal {

// Clamped cubic B-spline basis for one predictor. Interior knots sit at
// empirical quantiles of the training column; inputs outside
// [boundary_min, boundary_max] are clamped to the boundary.
struct SplineBasis {
    int num_basis = 6;
    int degree = 3;
    std::vector<double> interior_knots;
    double boundary_min = 0.0;
    double boundary_max = 1.0;

    // full clamped knot vector, length num_basis + degree + 1
    std::vector<double> knot_vector() const;
};

// Builds a basis from the training column: boundary at min/max, the
// num_basis - degree - 1 interior knots at evenly spaced quantiles.
// Throws NumericError for (near-)constant columns.
SplineBasis make_quantile_basis(const std::vector<double>& column, int num_basis = 6, int degree = 3);

// All num_basis basis functions at one (clamped) point; rows sum to one.
Eigen::VectorXd spline_eval(const SplineBasis& basis, double x);

// rows x num_basis design block for a column.
Eigen::MatrixXd spline_design(const std::vector<double>& column, const SplineBasis& basis);

}  // namespace causal
