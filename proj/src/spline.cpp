#include "causalsynth/spline.hpp"

#include <algorithm>
#include <cmath>

namespace causal {

std::vector<double> SplineBasis::knot_vector() const {
    std::vector<double> t;
    t.reserve(static_cast<std::size_t>(num_basis + degree + 1));
    for (int i = 0; i <= degree; ++i) t.push_back(boundary_min);
    t.insert(t.end(), interior_knots.begin(), interior_knots.end());
    for (int i = 0; i <= degree; ++i) t.push_back(boundary_max);
    return t;
}

SplineBasis make_quantile_basis(const std::vector<double>& column, int num_basis, int degree) {
    if (num_basis < degree + 1) throw InputError("num_basis must be at least degree + 1");
    if (column.size() < 2) throw InputError("basis needs at least 2 values");
    for (double v : column)
        if (!std::isfinite(v)) throw InputError("non-finite value in predictor column");
    std::vector<double> sorted(column);
    std::sort(sorted.begin(), sorted.end());
    SplineBasis basis;
    basis.num_basis = num_basis;
    basis.degree = degree;
    basis.boundary_min = sorted.front();
    basis.boundary_max = sorted.back();
    const double span = basis.boundary_max - basis.boundary_min;
    const double scale = std::max(std::abs(basis.boundary_min), std::abs(basis.boundary_max));
    if (span <= 1e-12 * std::max(scale, 1.0))
        throw NumericError("degenerate basis: column is constant");
    const int interior = num_basis - degree - 1;
    double prev = basis.boundary_min;
    for (int i = 1; i <= interior; ++i) {
        double q = stats::quantile_sorted(sorted, static_cast<double>(i) / (interior + 1));
        // quantile knots can collide on heavily tied data; keep the knot
        // sequence strictly increasing inside the boundary
        const double min_gap = span * 1e-6;
        if (q <= prev + min_gap) q = prev + (basis.boundary_max - prev) / (interior - i + 2);
        if (q >= basis.boundary_max - min_gap)
            q = prev + (basis.boundary_max - prev) / (interior - i + 2);
        basis.interior_knots.push_back(q);
        prev = q;
    }
    return basis;
}

Eigen::VectorXd spline_eval(const SplineBasis& basis, double x) {
    const auto t = basis.knot_vector();
    const int m = basis.num_basis;
    const int d = basis.degree;
    x = std::clamp(x, basis.boundary_min, basis.boundary_max);

    // find the knot span [t[j], t[j+1]) containing x; the last nonempty span
    // is closed so x = boundary_max lands in it
    int j = d;
    const int last = m - 1;
    while (j < last && x >= t[static_cast<std::size_t>(j + 1)]) ++j;

    // all d+1 basis functions alive on span j (N_{j-d..j,d}); denominators are
    // knot spans that contain [t[j], t[j+1]] and stay positive
    std::vector<double> coeff(static_cast<std::size_t>(d) + 1, 0.0);
    std::vector<double> left(static_cast<std::size_t>(d) + 1, 0.0);
    std::vector<double> right(static_cast<std::size_t>(d) + 1, 0.0);
    coeff[0] = 1.0;
    for (int r = 1; r <= d; ++r) {
        left[static_cast<std::size_t>(r)] = x - t[static_cast<std::size_t>(j + 1 - r)];
        right[static_cast<std::size_t>(r)] = t[static_cast<std::size_t>(j + r)] - x;
        double saved = 0.0;
        for (int i = 0; i < r; ++i) {
            const double denom = right[static_cast<std::size_t>(i + 1)] + left[static_cast<std::size_t>(r - i)];
            const double temp = coeff[static_cast<std::size_t>(i)] / denom;
            coeff[static_cast<std::size_t>(i)] = saved + right[static_cast<std::size_t>(i + 1)] * temp;
            saved = left[static_cast<std::size_t>(r - i)] * temp;
        }
        coeff[static_cast<std::size_t>(r)] = saved;
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(m);
    for (int i = 0; i <= d; ++i) {
        const int idx = j - d + i;
        if (idx >= 0 && idx < m) out[idx] = coeff[static_cast<std::size_t>(i)];
    }
    return out;
}

Eigen::MatrixXd spline_design(const std::vector<double>& column, const SplineBasis& basis) {
    Eigen::MatrixXd design(static_cast<Eigen::Index>(column.size()), basis.num_basis);
    for (std::size_t r = 0; r < column.size(); ++r) {
        if (!std::isfinite(column[r])) throw InputError("non-finite value in predictor column");
        design.row(static_cast<Eigen::Index>(r)) = spline_eval(basis, column[r]).transpose();
    }
    return design;
}

}  // namespace causal
