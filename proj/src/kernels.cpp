#include "mwsub/kernels.hpp"

#include <vector>

namespace mwsub::kernels {

namespace {

constexpr std::size_t kBlock = 4096;  // cells per reduction block

std::size_t block_count(std::size_t n) { return (n + kBlock - 1) / kBlock; }

}  // namespace

ValueMatrix row_sums(const TwoWayPanel& panel, const SketchMask& mask,
                     const ValueMatrix& values) {
    const std::int64_t n_rows = panel.n_rows();
    ValueMatrix sums = ValueMatrix::Zero(n_rows, values.cols());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t r = 0; r < n_rows; ++r) {
        auto row = sums.row(r);
        const std::size_t end = panel.row_end(static_cast<std::int32_t>(r));
        for (std::size_t c = panel.row_begin(static_cast<std::int32_t>(r)); c < end; ++c) {
            if (mask.is_selected(c)) row += values.row(static_cast<Eigen::Index>(c));
        }
    }
    return sums;
}

ValueMatrix col_sums(const TwoWayPanel& panel, const SketchMask& mask,
                     const ValueMatrix& values) {
    const std::int64_t n_cols = panel.n_cols();
    ValueMatrix sums = ValueMatrix::Zero(n_cols, values.cols());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t j = 0; j < n_cols; ++j) {
        auto row = sums.row(j);
        const std::size_t* it = panel.col_begin(static_cast<std::int32_t>(j));
        const std::size_t* end = panel.col_end(static_cast<std::int32_t>(j));
        for (; it != end; ++it) {
            if (mask.is_selected(*it)) row += values.row(static_cast<Eigen::Index>(*it));
        }
    }
    return sums;
}

Eigen::VectorXd masked_total(const SketchMask& mask, const ValueMatrix& values) {
    const auto& cells = mask.selected_cells;
    const std::size_t nb = block_count(cells.size());
    const Eigen::Index k = values.cols();
    ValueMatrix partials = ValueMatrix::Zero(static_cast<Eigen::Index>(nb), k);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t b = 0; b < static_cast<std::int64_t>(nb); ++b) {
        auto acc = partials.row(b);
        const std::size_t hi = std::min(cells.size(), (static_cast<std::size_t>(b) + 1) * kBlock);
        for (std::size_t idx = static_cast<std::size_t>(b) * kBlock; idx < hi; ++idx) {
            acc += values.row(static_cast<Eigen::Index>(cells[idx]));
        }
    }
    Eigen::VectorXd total = Eigen::VectorXd::Zero(k);
    for (std::size_t b = 0; b < nb; ++b) total += partials.row(static_cast<Eigen::Index>(b));
    return total;
}

Eigen::MatrixXd masked_outer_total(const SketchMask& mask, const ValueMatrix& values) {
    const auto& cells = mask.selected_cells;
    const std::size_t nb = block_count(cells.size());
    const Eigen::Index k = values.cols();
    std::vector<Eigen::MatrixXd> partials(nb, Eigen::MatrixXd::Zero(k, k));
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t b = 0; b < static_cast<std::int64_t>(nb); ++b) {
        Eigen::MatrixXd& acc = partials[static_cast<std::size_t>(b)];
        const std::size_t hi = std::min(cells.size(), (static_cast<std::size_t>(b) + 1) * kBlock);
        for (std::size_t idx = static_cast<std::size_t>(b) * kBlock; idx < hi; ++idx) {
            const auto v = values.row(static_cast<Eigen::Index>(cells[idx]));
            acc.selfadjointView<Eigen::Lower>().rankUpdate(v.transpose());
        }
    }
    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(k, k);
    for (std::size_t b = 0; b < nb; ++b) total += partials[b];
    return total.selfadjointView<Eigen::Lower>();
}

Eigen::VectorXd masked_square_total(const SketchMask& mask, const ValueMatrix& values) {
    const auto& cells = mask.selected_cells;
    const std::size_t nb = block_count(cells.size());
    const Eigen::Index k = values.cols();
    ValueMatrix partials = ValueMatrix::Zero(static_cast<Eigen::Index>(nb), k);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t b = 0; b < static_cast<std::int64_t>(nb); ++b) {
        auto acc = partials.row(b);
        const std::size_t hi = std::min(cells.size(), (static_cast<std::size_t>(b) + 1) * kBlock);
        for (std::size_t idx = static_cast<std::size_t>(b) * kBlock; idx < hi; ++idx) {
            acc += values.row(static_cast<Eigen::Index>(cells[idx])).cwiseAbs2();
        }
    }
    Eigen::VectorXd total = Eigen::VectorXd::Zero(k);
    for (std::size_t b = 0; b < nb; ++b) total += partials.row(static_cast<Eigen::Index>(b));
    return total;
}

Eigen::VectorXd masked_eval_total(
    const SketchMask& mask, Eigen::Index dim,
    const std::function<void(std::size_t, Eigen::VectorXd&)>& f) {
    const auto& cells = mask.selected_cells;
    const std::size_t nb = block_count(cells.size());
    std::vector<Eigen::VectorXd> partials(nb, Eigen::VectorXd::Zero(dim));
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t b = 0; b < static_cast<std::int64_t>(nb); ++b) {
        Eigen::VectorXd& acc = partials[static_cast<std::size_t>(b)];
        const std::size_t hi = std::min(cells.size(), (static_cast<std::size_t>(b) + 1) * kBlock);
        for (std::size_t idx = static_cast<std::size_t>(b) * kBlock; idx < hi; ++idx) {
            f(cells[idx], acc);
        }
    }
    Eigen::VectorXd total = Eigen::VectorXd::Zero(dim);
    for (std::size_t b = 0; b < nb; ++b) total += partials[b];
    return total;
}

Eigen::MatrixXd masked_eval_matrix_total(
    const SketchMask& mask, Eigen::Index rows, Eigen::Index cols,
    const std::function<void(std::size_t, Eigen::MatrixXd&)>& f) {
    const auto& cells = mask.selected_cells;
    const std::size_t nb = block_count(cells.size());
    std::vector<Eigen::MatrixXd> partials(nb, Eigen::MatrixXd::Zero(rows, cols));
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t b = 0; b < static_cast<std::int64_t>(nb); ++b) {
        Eigen::MatrixXd& acc = partials[static_cast<std::size_t>(b)];
        const std::size_t hi = std::min(cells.size(), (static_cast<std::size_t>(b) + 1) * kBlock);
        for (std::size_t idx = static_cast<std::size_t>(b) * kBlock; idx < hi; ++idx) {
            f(cells[idx], acc);
        }
    }
    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(rows, cols);
    for (std::size_t b = 0; b < nb; ++b) total += partials[b];
    return total;
}

}  // namespace mwsub::kernels
