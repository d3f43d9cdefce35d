#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "causalad/error.hpp"
#include "causalad/log.hpp"

namespace causalad {

/// T x d panel of uniformly sampled observations with named columns.
class TimeSeriesMatrix {
public:
    TimeSeriesMatrix() = default;

    TimeSeriesMatrix(Eigen::MatrixXd values, std::vector<std::string> names, std::int64_t start_index = 0)
        : values_(std::move(values)), names_(std::move(names)), start_index_(start_index) {
        if (static_cast<std::size_t>(values_.cols()) != names_.size())
            throw SchemaError("column count " + std::to_string(values_.cols()) + " does not match " +
                              std::to_string(names_.size()) + " names");
        std::set<std::string> seen;
        for (const auto& n : names_) {
            if (n.empty()) throw SchemaError("empty column name");
            if (!seen.insert(n).second) throw SchemaError("duplicate column name '" + n + "'");
        }
        if (!values_.allFinite()) throw SchemaError("matrix contains NaN or Inf");
    }

    std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(values_.cols()); }
    bool empty() const { return values_.size() == 0; }

    const Eigen::MatrixXd& values() const { return values_; }
    double operator()(std::size_t t, std::size_t j) const {
        return values_(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
    }

    std::span<const double> column(std::size_t j) const {
        return {values_.col(static_cast<Eigen::Index>(j)).data(), rows()};
    }

    const std::vector<std::string>& names() const { return names_; }
    const std::string& name(std::size_t j) const { return names_.at(j); }
    std::int64_t start_index() const { return start_index_; }

    std::optional<std::size_t> index_of(std::string_view name) const {
        auto it = std::find(names_.begin(), names_.end(), name);
        if (it == names_.end()) return std::nullopt;
        return static_cast<std::size_t>(it - names_.begin());
    }

    /// Rows [begin, end) as a new matrix whose start index is shifted accordingly.
    TimeSeriesMatrix slice_rows(std::size_t begin, std::size_t end) const {
        if (begin > end || end > rows()) throw ArgumentError("row slice out of range");
        const auto n = static_cast<Eigen::Index>(end - begin);
        return TimeSeriesMatrix(values_.middleRows(static_cast<Eigen::Index>(begin), n), names_,
                                start_index_ + static_cast<std::int64_t>(begin));
    }

    /// Gathers the given rows in order. The result is no longer contiguous in time.
    TimeSeriesMatrix select_rows(std::span<const std::size_t> rows_to_keep) const {
        Eigen::MatrixXd out(static_cast<Eigen::Index>(rows_to_keep.size()), values_.cols());
        for (std::size_t r = 0; r < rows_to_keep.size(); ++r)
            out.row(static_cast<Eigen::Index>(r)) = values_.row(static_cast<Eigen::Index>(rows_to_keep[r]));
        return TimeSeriesMatrix(std::move(out), names_, start_index_);
    }

    bool operator==(const TimeSeriesMatrix& other) const {
        return names_ == other.names_ && start_index_ == other.start_index_ &&
               values_.rows() == other.values_.rows() && values_.cols() == other.values_.cols() &&
               values_ == other.values_;
    }

private:
    Eigen::MatrixXd values_;
    std::vector<std::string> names_;
    std::int64_t start_index_ = 0;
};

enum class NanPolicy { drop_row, forward_fill };

struct CsvOptions {
    NanPolicy nan_policy = NanPolicy::drop_row;
    // Columns with these names (case-insensitive) are treated as timestamps and dropped.
    std::vector<std::string> timestamp_names = {"timestamp", "time", "date", "datetime", "ts"};
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

/// Splits one CSV record; supports double-quoted fields with "" escapes.
inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.emplace_back(trim(cur));
    return fields;
}

/// Parses a numeric cell. NaN spellings and empty cells map to NaN; anything else malformed is nullopt.
inline std::optional<double> parse_cell(std::string_view cell) {
    cell = trim(cell);
    if (cell.empty()) return std::numeric_limits<double>::quiet_NaN();
    const std::string low = lower(cell);
    if (low == "nan" || low == "na" || low == "null") return std::numeric_limits<double>::quiet_NaN();
    if (low == "inf" || low == "+inf" || low == "infinity") return std::numeric_limits<double>::infinity();
    if (low == "-inf" || low == "-infinity") return -std::numeric_limits<double>::infinity();
    if (cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
    return value;
}

inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace detail

/// Parses CSV text with a header row. `source` labels error messages.
inline TimeSeriesMatrix parse_csv(std::istream& in, const CsvOptions& options = {}, std::string_view source = "<csv>") {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!detail::trim(line).empty()) {
            header = detail::split_csv_line(line);
            break;
        }
    }
    if (header.empty()) throw SchemaError(std::string(source) + ": empty file");

    std::vector<bool> keep(header.size(), true);
    std::vector<std::string> names;
    std::set<std::string> seen;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j].empty()) throw SchemaError(std::string(source) + ": empty column name at column " + std::to_string(j + 1));
        if (!seen.insert(header[j]).second)
            throw SchemaError(std::string(source) + ": duplicate column name '" + header[j] + "'");
        const std::string low = detail::lower(header[j]);
        if (std::find(options.timestamp_names.begin(), options.timestamp_names.end(), low) != options.timestamp_names.end()) {
            keep[j] = false;
            warn("dropping timestamp column '" + header[j] + "'; series are treated as index-aligned");
            continue;
        }
        names.push_back(header[j]);
    }
    if (names.empty()) throw SchemaError(std::string(source) + ": no numeric columns");

    std::vector<std::vector<double>> rows;
    std::size_t dropped = 0;
    std::vector<double> last;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw ParseError(std::string(source) + ": row " + std::to_string(line_no) + " has " +
                             std::to_string(fields.size()) + " fields, expected " + std::to_string(header.size()));
        std::vector<double> row;
        row.reserve(names.size());
        bool bad = false;
        for (std::size_t j = 0; j < fields.size(); ++j) {
            if (!keep[j]) continue;
            auto v = detail::parse_cell(fields[j]);
            if (!v)
                throw ParseError(std::string(source) + ": malformed numeric cell '" + fields[j] + "' at row " +
                                 std::to_string(line_no) + ", column " + std::to_string(j + 1) + " (" + header[j] + ")");
            if (!std::isfinite(*v)) {
                if (options.nan_policy == NanPolicy::forward_fill && !last.empty()) {
                    *v = last[row.size()];
                } else {
                    bad = true;
                }
            }
            row.push_back(*v);
        }
        if (bad) {
            ++dropped;
            continue;
        }
        last = row;
        rows.push_back(std::move(row));
    }
    if (dropped > 0) warn(std::string(source) + ": dropped " + std::to_string(dropped) + " rows with NaN/Inf");
    if (rows.empty()) throw SchemaError(std::string(source) + ": no data rows");

    Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t j = 0; j < names.size(); ++j)
            values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = rows[t][j];
    return TimeSeriesMatrix(std::move(values), std::move(names));
}

inline TimeSeriesMatrix load_csv(const std::filesystem::path& path, const CsvOptions& options = {}) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return parse_csv(in, options, path.string());
}

/// Writes shortest round-trip decimal representations, so load_csv(write_csv(m)) == m bitwise.
inline void write_csv(std::ostream& out, const TimeSeriesMatrix& m) {
    for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m.name(j);
    out << '\n';
    for (std::size_t t = 0; t < m.rows(); ++t) {
        for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? "," : "") << detail::format_double(m(t, j));
        out << '\n';
    }
}

inline void write_csv(const std::filesystem::path& path, const TimeSeriesMatrix& m) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    write_csv(out, m);
}

enum class NormalizationMode { zscore, minmax, none };

inline constexpr double kMinScale = 1e-12;

/// Per-column affine normalization fitted on training rows only.
struct Normalizer {
    NormalizationMode mode = NormalizationMode::none;
    std::vector<double> center;
    std::vector<double> scale;

    static Normalizer fit(const TimeSeriesMatrix& train, NormalizationMode mode) {
        if (train.empty()) throw ArgumentError("cannot fit a normalizer on an empty matrix");
        Normalizer n;
        n.mode = mode;
        n.center.assign(train.cols(), 0.0);
        n.scale.assign(train.cols(), 1.0);
        if (mode == NormalizationMode::none) return n;
        const auto T = static_cast<double>(train.rows());
        for (std::size_t j = 0; j < train.cols(); ++j) {
            const auto col = train.values().col(static_cast<Eigen::Index>(j));
            if (mode == NormalizationMode::zscore) {
                const double m = col.sum() / T;
                const double var = (col.array() - m).square().sum() / T;
                n.center[j] = m;
                n.scale[j] = std::max(std::sqrt(var), kMinScale);
            } else {
                n.center[j] = col.minCoeff();
                n.scale[j] = std::max(col.maxCoeff() - col.minCoeff(), kMinScale);
            }
        }
        return n;
    }

    TimeSeriesMatrix apply(const TimeSeriesMatrix& m) const {
        check(m);
        Eigen::MatrixXd v = m.values();
        for (std::size_t j = 0; j < m.cols(); ++j) {
            auto col = v.col(static_cast<Eigen::Index>(j));
            col = (col.array() - center[j]) / scale[j];
        }
        return TimeSeriesMatrix(std::move(v), m.names(), m.start_index());
    }

    TimeSeriesMatrix invert(const TimeSeriesMatrix& m) const {
        check(m);
        Eigen::MatrixXd v = m.values();
        for (std::size_t j = 0; j < m.cols(); ++j) {
            auto col = v.col(static_cast<Eigen::Index>(j));
            col = col.array() * scale[j] + center[j];
        }
        return TimeSeriesMatrix(std::move(v), m.names(), m.start_index());
    }

private:
    void check(const TimeSeriesMatrix& m) const {
        if (m.cols() != center.size())
            throw SchemaError("normalizer fitted on " + std::to_string(center.size()) + " columns, got " +
                              std::to_string(m.cols()));
    }
};

inline std::string to_string(NormalizationMode mode) {
    switch (mode) {
        case NormalizationMode::zscore: return "zscore";
        case NormalizationMode::minmax: return "minmax";
        case NormalizationMode::none: return "none";
    }
    return "none";
}

inline NormalizationMode parse_normalization_mode(std::string_view s) {
    if (s == "zscore") return NormalizationMode::zscore;
    if (s == "minmax") return NormalizationMode::minmax;
    if (s == "none") return NormalizationMode::none;
    throw ConfigError("unknown normalization mode '" + std::string(s) + "'");
}

/// Temporal split at floor(fraction * T); no shuffling.
inline std::pair<TimeSeriesMatrix, TimeSeriesMatrix> train_test_split(const TimeSeriesMatrix& m, double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ArgumentError("split fraction must lie in (0, 1)");
    const auto cut = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(m.rows())));
    if (cut == 0 || cut == m.rows())
        throw ArgumentError("split of " + std::to_string(m.rows()) + " rows at fraction " + detail::format_double(fraction) +
                            " leaves an empty half");
    return {m.slice_rows(0, cut), m.slice_rows(cut, m.rows())};
}

}  // namespace causalad
