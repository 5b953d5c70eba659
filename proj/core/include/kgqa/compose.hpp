#pragma once

#include <string_view>

#include "kgqa/tensor.hpp"

namespace kgqa {

// Entity-relation composition used inside the relational GCN layer.
enum class CompositionOp { Mult, Corr, Sub };

std::string_view to_string(CompositionOp op);
CompositionOp composition_from_string(std::string_view name);

// mult: a * b elementwise; corr: c_k = sum_i a_i b_{(i+k) mod d}; sub: a - b.
Vector compose(const Vector& a, const Vector& b, CompositionOp op);

// Accumulates d(compose)/da and d(compose)/db contracted with grad into the outputs.
void compose_backward(const Vector& a, const Vector& b, const Vector& grad, CompositionOp op,
                      Eigen::Ref<Vector> grad_a, Eigen::Ref<Vector> grad_b);

Vector circular_correlation(const Vector& a, const Vector& b);

double distmult_score(const Vector& h, const Vector& r, const Vector& t);

}  // namespace kgqa
