#include "mwsub/reference.hpp"

namespace mwsub::reference {

Eigen::VectorXd subsample_mean(const SketchMask& mask, const ValueMatrix& values) {
    Eigen::VectorXd total = Eigen::VectorXd::Zero(values.cols());
    for (std::size_t c = 0; c < static_cast<std::size_t>(values.rows()); ++c) {
        if (mask.is_selected(c)) total += values.row(static_cast<Eigen::Index>(c));
    }
    return total / static_cast<double>(mask.L_hat());
}

Eigen::MatrixXd gamma_A(const TwoWayPanel& panel, const SketchMask& mask,
                        const ValueMatrix& values, std::int64_t C_bar) {
    const Eigen::Index k = values.cols();
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(k, k);

    for (std::int32_t r = 0; r < panel.n_rows(); ++r) {
        for (std::size_t a = panel.row_begin(r); a < panel.row_end(r); ++a) {
            if (!mask.is_selected(a)) continue;
            for (std::size_t b = panel.row_begin(r); b < panel.row_end(r); ++b) {
                if (!mask.is_selected(b)) continue;
                acc += values.row(static_cast<Eigen::Index>(a)).transpose() *
                       values.row(static_cast<Eigen::Index>(b));
            }
        }
    }
    for (std::int32_t j = 0; j < panel.n_cols(); ++j) {
        for (const std::size_t* a = panel.col_begin(j); a != panel.col_end(j); ++a) {
            if (!mask.is_selected(*a)) continue;
            for (const std::size_t* b = panel.col_begin(j); b != panel.col_end(j); ++b) {
                if (!mask.is_selected(*b)) continue;
                acc += values.row(static_cast<Eigen::Index>(*a)).transpose() *
                       values.row(static_cast<Eigen::Index>(*b));
            }
        }
    }

    const double L = static_cast<double>(mask.L_hat());
    return acc * (static_cast<double>(C_bar) / (L * L));
}

Eigen::MatrixXd gamma_B(const SketchMask& mask, const ValueMatrix& values) {
    const Eigen::Index k = values.cols();
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(k, k);
    for (std::size_t c = 0; c < static_cast<std::size_t>(values.rows()); ++c) {
        if (!mask.is_selected(c)) continue;
        acc += values.row(static_cast<Eigen::Index>(c)).transpose() *
               values.row(static_cast<Eigen::Index>(c));
    }
    return acc / static_cast<double>(mask.L_hat());
}

}  // namespace mwsub::reference
