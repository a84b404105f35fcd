#pragma once

#include <Eigen/Dense>
#include <functional>

#include "mwsub/panel.hpp"
#include "mwsub/sketch.hpp"

namespace mwsub {
namespace kernels {

/// The accumulation kernels below are OpenMP-parallel but bit-reproducible
/// for any thread count: work is split into fixed index ranges (rows,
/// columns, or constant-size cell blocks) that are each summed serially,
/// and the partial results are combined in a fixed order afterwards.

/// S_i = sum of selected values in dense row i; returns N x k.
ValueMatrix row_sums(const TwoWayPanel& panel, const SketchMask& mask,
                     const ValueMatrix& values);

/// T_j = sum of selected values in dense column j; returns M x k.
ValueMatrix col_sums(const TwoWayPanel& panel, const SketchMask& mask,
                     const ValueMatrix& values);

/// Sum of v_c over selected cells.
Eigen::VectorXd masked_total(const SketchMask& mask, const ValueMatrix& values);

/// Sum of v_c v_c^T over selected cells (k x k, symmetric PSD).
Eigen::MatrixXd masked_outer_total(const SketchMask& mask, const ValueMatrix& values);

/// Sum of v_c^2 per coordinate over selected cells.
Eigen::VectorXd masked_square_total(const SketchMask& mask, const ValueMatrix& values);

/// Sum of f(cell) over selected cells, where f writes a `dim`-vector.
/// `f` must be pure; it is called once per selected cell.
Eigen::VectorXd masked_eval_total(const SketchMask& mask, Eigen::Index dim,
                                  const std::function<void(std::size_t, Eigen::VectorXd&)>& f);

/// Matrix-valued variant: sum of f(cell) with `rows` x `cols` output.
Eigen::MatrixXd masked_eval_matrix_total(
    const SketchMask& mask, Eigen::Index rows, Eigen::Index cols,
    const std::function<void(std::size_t, Eigen::MatrixXd&)>& f);

}  // namespace kernels
}  // namespace mwsub
