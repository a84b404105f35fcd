#pragma once

#include <Eigen/Dense>

#include "mwsub/kernels.hpp"
#include "mwsub/panel.hpp"
#include "mwsub/sketch.hpp"

namespace mwsub::reference {

/// Serial reference implementations written as literal double sums.
/// They share no accumulation code with the grouped kernels and exist to
/// pin the fast path down in tests and benchmarks; complexity is
/// O(sum_i n_i^2 + sum_j m_j^2) for the pair sums, so keep panels small.

/// (1/L_hat) * sum over selected cells of v_c.
Eigen::VectorXd subsample_mean(const SketchMask& mask, const ValueMatrix& values);

/// (C_bar/L_hat^2) * [ sum_i sum_{j,j'} Z_ij Z_ij' v_ij v_ij'^T
///                   + sum_{i,i'} sum_j Z_ij Z_i'j v_ij v_i'j^T ],
/// diagonal pairs included.
Eigen::MatrixXd gamma_A(const TwoWayPanel& panel, const SketchMask& mask,
                        const ValueMatrix& values, std::int64_t C_bar);

/// (1/L_hat) * sum over selected cells of v_c v_c^T.
Eigen::MatrixXd gamma_B(const SketchMask& mask, const ValueMatrix& values);

}  // namespace mwsub::reference
