#include "kgqa/compose.hpp"

#include <string>

#include "kgqa/error.hpp"

namespace kgqa {

std::string_view to_string(CompositionOp op) {
    switch (op) {
        case CompositionOp::Mult: return "mult";
        case CompositionOp::Corr: return "corr";
        case CompositionOp::Sub: return "sub";
    }
    return "?";
}

CompositionOp composition_from_string(std::string_view name) {
    if (name == "mult") return CompositionOp::Mult;
    if (name == "corr") return CompositionOp::Corr;
    if (name == "sub") return CompositionOp::Sub;
    throw ArgumentError("unknown composition operator '" + std::string(name) + "'");
}

Vector circular_correlation(const Vector& a, const Vector& b) {
    const Eigen::Index d = a.size();
    Vector c(d);
    for (Eigen::Index k = 0; k < d; ++k) {
        // sum_i a_i b_{i+k}: the wrap splits the index range into two runs.
        double s = a.head(d - k).dot(b.tail(d - k));
        if (k > 0) s += a.tail(k).dot(b.head(k));
        c[k] = s;
    }
    return c;
}

namespace {

void check_dims(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) {
        throw ArgumentError("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
    }
}

}  // namespace

Vector compose(const Vector& a, const Vector& b, CompositionOp op) {
    check_dims(a, b);
    switch (op) {
        case CompositionOp::Mult: return a.cwiseProduct(b);
        case CompositionOp::Corr: return circular_correlation(a, b);
        case CompositionOp::Sub: return a - b;
    }
    return a;
}

void compose_backward(const Vector& a, const Vector& b, const Vector& grad, CompositionOp op,
                      Eigen::Ref<Vector> grad_a, Eigen::Ref<Vector> grad_b) {
    check_dims(a, b);
    switch (op) {
        case CompositionOp::Mult:
            grad_a += grad.cwiseProduct(b);
            grad_b += grad.cwiseProduct(a);
            return;
        case CompositionOp::Sub:
            grad_a += grad;
            grad_b -= grad;
            return;
        case CompositionOp::Corr: {
            const Eigen::Index d = a.size();
            // d/da_i = sum_k g_k b_{i+k}
            grad_a += circular_correlation(grad, b);
            // d/db_j = sum_k g_k a_{j-k}: correlate a with the circular reversal of g.
            Vector reversed(d);
            for (Eigen::Index m = 0; m < d; ++m) reversed[m] = grad[(d - m) % d];
            const Vector c = circular_correlation(a, reversed);
            for (Eigen::Index j = 0; j < d; ++j) grad_b[j] += c[(d - j) % d];
            return;
        }
    }
}

double distmult_score(const Vector& h, const Vector& r, const Vector& t) {
    check_dims(h, r);
    check_dims(r, t);
    return (h.array() * r.array() * t.array()).sum();
}

}  // namespace kgqa
