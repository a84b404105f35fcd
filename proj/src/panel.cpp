#include "mwsub/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mwsub/errors.hpp"

namespace mwsub {

namespace {

std::int32_t dense_index(const std::vector<std::int64_t>& labels, std::int64_t label) {
    auto it = std::lower_bound(labels.begin(), labels.end(), label);
    return static_cast<std::int32_t>(it - labels.begin());
}

std::vector<std::int64_t> sorted_unique(std::vector<std::int64_t> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace

TwoWayPanel TwoWayPanel::from_records(std::vector<CellKey> keys,
                                      ValueMatrix records,
                                      std::vector<std::string> field_names) {
    const std::size_t n = keys.size();
    if (n == 0) {
        throw Error(ErrorCode::EmptyPanel, "panel has no cells");
    }
    if (records.rows() != static_cast<Eigen::Index>(n)) {
        throw Error(ErrorCode::DimensionMismatch,
                    "record matrix rows do not match number of cells");
    }
    if (records.cols() != static_cast<Eigen::Index>(field_names.size())) {
        throw Error(ErrorCode::DimensionMismatch,
                    "record matrix columns do not match field names");
    }
    if (!records.allFinite()) {
        throw Error(ErrorCode::NonFiniteValue, "panel records contain NaN or infinity");
    }

    TwoWayPanel panel;
    panel.field_names_ = std::move(field_names);

    {
        std::vector<std::int64_t> labels(n);
        for (std::size_t c = 0; c < n; ++c) labels[c] = keys[c].i;
        panel.row_labels_ = sorted_unique(labels);
        for (std::size_t c = 0; c < n; ++c) labels[c] = keys[c].j;
        panel.col_labels_ = sorted_unique(std::move(labels));
    }

    panel.cell_row_.resize(n);
    panel.cell_col_.resize(n);
    for (std::size_t c = 0; c < n; ++c) {
        panel.cell_row_[c] = dense_index(panel.row_labels_, keys[c].i);
        panel.cell_col_[c] = dense_index(panel.col_labels_, keys[c].j);
    }

    // Canonical order: sort cells by (row, col), then detect duplicates.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (panel.cell_row_[a] != panel.cell_row_[b])
            return panel.cell_row_[a] < panel.cell_row_[b];
        return panel.cell_col_[a] < panel.cell_col_[b];
    });
    for (std::size_t c = 1; c < n; ++c) {
        const std::size_t a = order[c - 1];
        const std::size_t b = order[c];
        if (panel.cell_row_[a] == panel.cell_row_[b] &&
            panel.cell_col_[a] == panel.cell_col_[b]) {
            std::ostringstream msg;
            msg << "cell (" << keys[b].i << ", " << keys[b].j << ") appears more than once";
            throw Error(ErrorCode::DuplicateCell, msg.str());
        }
    }

    std::vector<std::int32_t> sorted_row(n), sorted_col(n);
    panel.data_.resize(n, records.cols());
    for (std::size_t c = 0; c < n; ++c) {
        sorted_row[c] = panel.cell_row_[order[c]];
        sorted_col[c] = panel.cell_col_[order[c]];
        panel.data_.row(c) = records.row(static_cast<Eigen::Index>(order[c]));
    }
    panel.cell_row_ = std::move(sorted_row);
    panel.cell_col_ = std::move(sorted_col);

    panel.row_ptr_.assign(panel.row_labels_.size() + 1, 0);
    for (std::size_t c = 0; c < n; ++c) {
        ++panel.row_ptr_[static_cast<std::size_t>(panel.cell_row_[c]) + 1];
    }
    for (std::size_t r = 0; r < panel.row_labels_.size(); ++r) {
        panel.row_ptr_[r + 1] += panel.row_ptr_[r];
    }

    panel.build_column_index();
    return panel;
}

TwoWayPanel TwoWayPanel::balanced(std::int64_t n_rows, std::int64_t n_cols,
                                  ValueMatrix records,
                                  std::vector<std::string> field_names) {
    if (n_rows < 1 || n_cols < 1) {
        throw Error(ErrorCode::EmptyPanel, "balanced panel needs N >= 1 and M >= 1");
    }
    const std::size_t n = static_cast<std::size_t>(n_rows) * static_cast<std::size_t>(n_cols);
    if (records.rows() != static_cast<Eigen::Index>(n)) {
        throw Error(ErrorCode::DimensionMismatch, "balanced panel needs N*M records");
    }
    if (records.cols() != static_cast<Eigen::Index>(field_names.size())) {
        throw Error(ErrorCode::DimensionMismatch,
                    "record matrix columns do not match field names");
    }

    TwoWayPanel panel;
    panel.field_names_ = std::move(field_names);
    panel.row_labels_.resize(static_cast<std::size_t>(n_rows));
    std::iota(panel.row_labels_.begin(), panel.row_labels_.end(), 0);
    panel.col_labels_.resize(static_cast<std::size_t>(n_cols));
    std::iota(panel.col_labels_.begin(), panel.col_labels_.end(), 0);

    panel.cell_row_.resize(n);
    panel.cell_col_.resize(n);
    for (std::size_t c = 0; c < n; ++c) {
        panel.cell_row_[c] = static_cast<std::int32_t>(c / static_cast<std::size_t>(n_cols));
        panel.cell_col_[c] = static_cast<std::int32_t>(c % static_cast<std::size_t>(n_cols));
    }
    panel.data_ = std::move(records);

    panel.row_ptr_.resize(static_cast<std::size_t>(n_rows) + 1);
    for (std::size_t r = 0; r <= static_cast<std::size_t>(n_rows); ++r) {
        panel.row_ptr_[r] = r * static_cast<std::size_t>(n_cols);
    }
    panel.build_column_index();
    return panel;
}

void TwoWayPanel::build_column_index() {
    const std::size_t n = n_obs();
    col_ptr_.assign(col_labels_.size() + 1, 0);
    for (std::size_t c = 0; c < n; ++c) {
        ++col_ptr_[static_cast<std::size_t>(cell_col_[c]) + 1];
    }
    for (std::size_t j = 0; j < col_labels_.size(); ++j) {
        col_ptr_[j + 1] += col_ptr_[j];
    }
    col_cells_.resize(n);
    std::vector<std::size_t> cursor(col_ptr_.begin(), col_ptr_.end() - 1);
    for (std::size_t c = 0; c < n; ++c) {
        col_cells_[cursor[static_cast<std::size_t>(cell_col_[c])]++] = c;
    }
}

std::size_t TwoWayPanel::field_index(const std::string& name) const {
    for (std::size_t k = 0; k < field_names_.size(); ++k) {
        if (field_names_[k] == name) return k;
    }
    throw Error(ErrorCode::MissingField, "field '" + name + "' not present in panel");
}

std::size_t TwoWayPanel::find(CellKey key) const {
    auto rit = std::lower_bound(row_labels_.begin(), row_labels_.end(), key.i);
    if (rit == row_labels_.end() || *rit != key.i) return npos;
    auto cit = std::lower_bound(col_labels_.begin(), col_labels_.end(), key.j);
    if (cit == col_labels_.end() || *cit != key.j) return npos;
    const auto r = static_cast<std::int32_t>(rit - row_labels_.begin());
    const auto jdense = static_cast<std::int32_t>(cit - col_labels_.begin());
    std::size_t lo = row_ptr_[r];
    std::size_t hi = row_ptr_[r + 1];
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (cell_col_[mid] < jdense) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    if (lo < row_ptr_[r + 1] && cell_col_[lo] == jdense) return lo;
    return npos;
}

PanelDims dims(const TwoWayPanel& panel) {
    if (panel.n_obs() == 0) {
        throw Error(ErrorCode::EmptyPanel, "panel has no cells");
    }
    PanelDims d;
    d.N = panel.n_rows();
    d.M = panel.n_cols();
    d.C_bar = std::min(d.N, d.M);
    d.lambda1_hat = static_cast<double>(d.C_bar) / static_cast<double>(d.N);
    d.lambda2_hat = static_cast<double>(d.C_bar) / static_cast<double>(d.M);
    return d;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    for (auto& tok : out) {
        while (!tok.empty() && (tok.back() == '\r' || tok.back() == ' ')) tok.pop_back();
        std::size_t lead = 0;
        while (lead < tok.size() && tok[lead] == ' ') ++lead;
        tok.erase(0, lead);
    }
    return out;
}

std::int64_t parse_label(const std::string& tok, std::size_t line_no) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
        throw Error(ErrorCode::ParseError,
                    "line " + std::to_string(line_no) + ": cluster label '" + tok +
                        "' is not a 64-bit integer");
    }
    return v;
}

double parse_value(const std::string& tok, const std::string& field, std::size_t line_no) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
        throw Error(ErrorCode::ParseError,
                    "line " + std::to_string(line_no) + ": value '" + tok + "' in field '" +
                        field + "' is not a number");
    }
    if (!std::isfinite(v)) {
        throw Error(ErrorCode::NonFiniteValue,
                    "line " + std::to_string(line_no) + ": field '" + field +
                        "' is not finite");
    }
    return v;
}

}  // namespace

TwoWayPanel load_panel(const std::string& path,
                       const std::vector<std::string>& field_names) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::UsageError, "cannot open '" + path + "'");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorCode::EmptyPanel, "'" + path + "' is empty");
    }
    const std::vector<std::string> header = split_csv_line(line);

    auto column_of = [&](const std::string& name) {
        for (std::size_t k = 0; k < header.size(); ++k) {
            if (header[k] == name) return k;
        }
        throw Error(ErrorCode::MissingField,
                    "'" + path + "' has no column '" + name + "'");
    };
    const std::size_t i_col = column_of("i");
    const std::size_t j_col = column_of("j");
    std::vector<std::size_t> value_cols;
    value_cols.reserve(field_names.size());
    for (const auto& name : field_names) value_cols.push_back(column_of(name));

    std::vector<CellKey> keys;
    std::vector<double> values;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        const std::vector<std::string> toks = split_csv_line(line);
        if (toks.size() != header.size()) {
            throw Error(ErrorCode::ParseError,
                        "line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " columns, found " +
                            std::to_string(toks.size()));
        }
        keys.push_back(CellKey{parse_label(toks[i_col], line_no),
                               parse_label(toks[j_col], line_no)});
        for (std::size_t k = 0; k < value_cols.size(); ++k) {
            values.push_back(parse_value(toks[value_cols[k]], field_names[k], line_no));
        }
    }
    if (keys.empty()) {
        throw Error(ErrorCode::EmptyPanel, "'" + path + "' has a header but no rows");
    }

    ValueMatrix records(keys.size(), field_names.size());
    for (std::size_t c = 0; c < keys.size(); ++c) {
        for (std::size_t k = 0; k < field_names.size(); ++k) {
            records(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) =
                values[c * field_names.size() + k];
        }
    }
    return TwoWayPanel::from_records(std::move(keys), std::move(records), field_names);
}

}  // namespace mwsub
