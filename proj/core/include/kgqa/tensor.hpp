#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace kgqa {

// Row-major so that per-symbol rows are contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// m x d matrix of per-symbol embeddings, rows in dictionary order.
struct EmbeddingMatrix {
    Matrix values;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index dim() const { return values.cols(); }
    bool all_finite() const { return values.allFinite(); }
};

// Worst per-tensor relative error |analytic - numeric| / (|analytic| + |numeric|)
// over vector norms.
struct TensorCheck {
    std::string name;
    double analytic_norm = 0;
    double abs_error = 0;  // |analytic - numeric|
    double relative_error = 0;
};

struct GradientCheckResult {
    double max_relative_error = 0;
    std::string worst_tensor;
    std::vector<TensorCheck> tensors;
};

}  // namespace kgqa
