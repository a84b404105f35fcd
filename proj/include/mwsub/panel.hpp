#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace mwsub {

/// Per-cell values, one row per cell in canonical order. Row-major so a
/// record view is a contiguous span.
using ValueMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A single observation of a two-way clustered panel, identified by its
/// row-cluster and column-cluster labels. Labels are arbitrary 64-bit
/// integers (store codes, UPCs, ...), not required to be contiguous.
struct CellKey {
    std::int64_t i = 0;
    std::int64_t j = 0;

    friend bool operator==(const CellKey&, const CellKey&) = default;
};

struct PanelDims {
    std::int64_t N = 0;        // distinct row-cluster labels
    std::int64_t M = 0;        // distinct column-cluster labels
    std::int64_t C_bar = 0;    // min(N, M)
    double lambda1_hat = 0.0;  // C_bar / N
    double lambda2_hat = 0.0;  // C_bar / M
};

/// Immutable two-way clustered panel. Cells are stored in a canonical
/// order (sorted by dense row index, then dense column index), so every
/// derived quantity -- including the Bernoulli mask keyed by cell index --
/// is independent of the ordering of the input file.
///
/// Both a row-grouped (CSR) and a column-grouped (CSC) index are built at
/// construction; the panel is safe for concurrent shared reads afterwards.
class TwoWayPanel {
public:
    using RecordView = Eigen::Map<const Eigen::VectorXd>;

    /// Build a panel from raw triplets. Throws DuplicateCell, EmptyPanel,
    /// NonFiniteValue, DimensionMismatch.
    static TwoWayPanel from_records(std::vector<CellKey> keys,
                                    ValueMatrix records,
                                    std::vector<std::string> field_names);

    /// Fast path for complete N x M arrays with labels 0..N-1 / 0..M-1 and
    /// cell index i*M + j. `records` must have N*M rows.
    static TwoWayPanel balanced(std::int64_t n_rows, std::int64_t n_cols,
                                ValueMatrix records,
                                std::vector<std::string> field_names);

    std::int64_t n_rows() const { return static_cast<std::int64_t>(row_labels_.size()); }
    std::int64_t n_cols() const { return static_cast<std::int64_t>(col_labels_.size()); }
    std::size_t n_obs() const { return static_cast<std::size_t>(data_.rows()); }
    std::size_t n_fields() const { return field_names_.size(); }
    bool is_balanced() const {
        return static_cast<std::int64_t>(n_obs()) == n_rows() * n_cols();
    }

    const std::vector<std::string>& field_names() const { return field_names_; }

    /// Index of a named field; throws MissingField if absent.
    std::size_t field_index(const std::string& name) const;

    /// Dense row/column index of cell `c` (cells are numbered in canonical
    /// order, 0 .. n_obs-1).
    std::int32_t row_of(std::size_t c) const { return cell_row_[c]; }
    std::int32_t col_of(std::size_t c) const { return cell_col_[c]; }

    std::int64_t row_label(std::int32_t dense) const { return row_labels_[dense]; }
    std::int64_t col_label(std::int32_t dense) const { return col_labels_[dense]; }

    CellKey key_of(std::size_t c) const {
        return CellKey{row_labels_[cell_row_[c]], col_labels_[cell_col_[c]]};
    }

    /// Canonical cell index for a label pair, or npos if the cell is absent.
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t find(CellKey key) const;

    /// Contiguous view of the record stored in cell `c`.
    RecordView record(std::size_t c) const {
        return RecordView(data_.row(c).data(), data_.cols());
    }

    /// All records, one row per cell (row-major, canonical order).
    const ValueMatrix& data() const { return data_; }

    /// n_obs x 1 copy of one field in canonical cell order.
    ValueMatrix field_column(std::size_t field) const {
        return data_.col(static_cast<Eigen::Index>(field));
    }

    /// Cells of dense row r occupy [row_begin(r), row_end(r)) in canonical order.
    std::size_t row_begin(std::int32_t r) const { return row_ptr_[r]; }
    std::size_t row_end(std::int32_t r) const { return row_ptr_[r + 1]; }

    /// Cell indices of dense column c, ascending in row index.
    const std::size_t* col_begin(std::int32_t c) const {
        return col_cells_.data() + col_ptr_[c];
    }
    const std::size_t* col_end(std::int32_t c) const {
        return col_cells_.data() + col_ptr_[c + 1];
    }

private:
    TwoWayPanel() = default;
    void build_column_index();

    std::vector<std::int64_t> row_labels_;  // sorted ascending
    std::vector<std::int64_t> col_labels_;
    std::vector<std::string> field_names_;
    std::vector<std::int32_t> cell_row_;
    std::vector<std::int32_t> cell_col_;
    ValueMatrix data_;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::size_t> col_ptr_;
    std::vector<std::size_t> col_cells_;
};

/// Dimension bookkeeping of Assumption-3 plug-ins: C_bar = min(N, M),
/// lambda1_hat = C_bar/N, lambda2_hat = C_bar/M. Throws EmptyPanel.
PanelDims dims(const TwoWayPanel& panel);

/// Load a panel from a CSV file with header `i,j,<field>...`. Only the
/// requested fields are kept, in the requested order. Throws ParseError,
/// MissingField, DuplicateCell, NonFiniteValue, EmptyPanel.
TwoWayPanel load_panel(const std::string& path,
                       const std::vector<std::string>& field_names);

}  // namespace mwsub
