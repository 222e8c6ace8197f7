#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <functional>

namespace mgcn::test {

/// Central-difference gradient of a scalar function of one tensor.
inline Eigen::MatrixXd numeric_gradient(const std::function<double(const Eigen::MatrixXd&)>& f, Eigen::MatrixXd x,
    double h = 1e-5)
{
    Eigen::MatrixXd g(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double keep = x.data()[i];
        x.data()[i] = keep + h;
        const double up = f(x);
        x.data()[i] = keep - h;
        const double down = f(x);
        x.data()[i] = keep;
        g.data()[i] = (up - down) / (2.0 * h);
    }
    return g;
}

/// ||a - b|| / max(||a||, ||b||), zero when both vanish.
inline double relative_error(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& numeric)
{
    const double scale = std::max(analytic.norm(), numeric.norm());
    if (scale == 0.0) return 0.0;
    return (analytic - numeric).norm() / scale;
}

} // namespace mgcn::test
