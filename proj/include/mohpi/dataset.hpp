#pragma once

// Performance meta-dataset: one row per evaluated configuration with the raw
// value of every measured objective. All objectives are minimized.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "mohpi/configspace.hpp"
#include "mohpi/errors.hpp"
#include "mohpi/matrix.hpp"

namespace mohpi {

class MinMaxNormalizer {
public:
    MinMaxNormalizer() = default;
    MinMaxNormalizer(double min, double max) : min_(min), max_(max) {}

    static MinMaxNormalizer fit(std::span<const double> values)
    {
        if (values.empty()) {
            return {};
        }
        const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
        return {*lo, *hi};
    }

    double min() const { return min_; }
    double max() const { return max_; }
    bool degenerate() const { return !(max_ > min_); }

    // Not clamped: surrogate predictions may fall outside the fitted range.
    double operator()(double v) const { return degenerate() ? 0.0 : (v - min_) / (max_ - min_); }

    bool operator==(const MinMaxNormalizer&) const = default;

private:
    double min_ = 0.0;
    double max_ = 0.0;
};

inline double apply_normalizer(const MinMaxNormalizer& norm, double v) { return norm(v); }

struct ObjectiveColumn {
    std::string name;
    std::vector<double> raw;
    MinMaxNormalizer normalizer;

    ObjectiveColumn() = default;
    ObjectiveColumn(std::string n, std::vector<double> values)
        : name(std::move(n)), raw(std::move(values)), normalizer(MinMaxNormalizer::fit(raw))
    {
    }
};

inline std::vector<double> normalize(const ObjectiveColumn& col)
{
    std::vector<double> out(col.raw.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = col.normalizer(col.raw[i]);
    }
    return out;
}

class MetaDataset {
public:
    MetaDataset() = default;

    // Encodes every row under space and fits one normalizer per objective.
    MetaDataset(ConfigSpace space, std::vector<Configuration> rows, std::vector<ObjectiveColumn> objectives)
        : space_(std::move(space)), objectives_(std::move(objectives))
    {
        if (rows.size() < 2) {
            throw EmptyDatasetError("meta-dataset needs at least 2 rows, got " + std::to_string(rows.size()));
        }
        if (objectives_.empty()) {
            throw MissingColumnError("meta-dataset needs at least one objective");
        }
        X_ = Matrix(rows.size(), space_.size());
        rows_.reserve(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            rows_.push_back(canonicalize(space_, rows[r]));
            const auto x = encode(space_, rows_.back());
            std::copy(x.begin(), x.end(), X_.row(r).begin());
        }
        for (const auto& col : objectives_) {
            if (col.raw.size() != rows.size()) {
                throw ShapeMismatchError("objective '" + col.name + "' has " + std::to_string(col.raw.size()) +
                                         " values for " + std::to_string(rows.size()) + " rows");
            }
            for (std::size_t r = 0; r < col.raw.size(); ++r) {
                if (!std::isfinite(col.raw[r])) {
                    throw NonFiniteObjectiveError("objective '" + col.name + "' is not finite in row " +
                                                  std::to_string(r + 1));
                }
            }
            if (col.normalizer.degenerate()) {
                warnings_.push_back("DegenerateObjective: objective '" + col.name +
                                    "' is constant; normalized values are all 0");
            }
        }
    }

    const ConfigSpace& space() const { return space_; }
    const Matrix& X() const { return X_; }
    const std::vector<Configuration>& rows() const { return rows_; }
    const std::vector<ObjectiveColumn>& objectives() const { return objectives_; }
    const ObjectiveColumn& objective(std::size_t i) const { return objectives_.at(i); }
    std::size_t n() const { return X_.rows(); }
    std::size_t d() const { return X_.cols(); }
    const std::vector<std::string>& warnings() const { return warnings_; }

    std::vector<double> normalized(std::size_t objective_index) const { return normalize(objective(objective_index)); }

    // Copy restricted to (and ordered by) the named objectives.
    MetaDataset select_objectives(const std::vector<std::string>& names) const
    {
        std::vector<ObjectiveColumn> cols;
        for (const auto& name : names) {
            auto it = std::find_if(objectives_.begin(), objectives_.end(), [&](const auto& c) { return c.name == name; });
            if (it == objectives_.end()) {
                throw MissingColumnError("objective column '" + name + "' not found");
            }
            cols.push_back(*it);
        }
        return MetaDataset(space_, rows_, std::move(cols));
    }

private:
    ConfigSpace space_;
    Matrix X_;
    std::vector<Configuration> rows_;
    std::vector<ObjectiveColumn> objectives_;
    std::vector<std::string> warnings_;
};

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace csv {

inline std::vector<std::string> split_line(std::string_view line)
{
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

inline std::string quote(const std::string& field)
{
    if (field.find_first_of(",\"\n") == std::string::npos) {
        return field;
    }
    std::string out = "\"";
    for (char c : field) {
        out += c;
        if (c == '"') {
            out += '"';
        }
    }
    return out + "\"";
}

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline bool parse_double(std::string_view s, double& out)
{
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end && !s.empty();
}

// Shortest representation that parses back to the same double.
inline std::string format_double(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

} // namespace csv

namespace detail {

inline Value parse_cell(const HyperparameterSpec& spec, const std::string& cell)
{
    switch (spec.kind) {
    case Kind::Float:
    case Kind::Int: {
        double v = 0.0;
        if (!csv::parse_double(cell, v)) {
            throw ParseError("not a number: '" + cell + "'");
        }
        if (spec.kind == Kind::Int) {
            if (!is_integral(v)) {
                throw ParseError("not an integer: '" + cell + "'");
            }
            return static_cast<std::int64_t>(v);
        }
        return v;
    }
    case Kind::Categorical:
        return cell;
    case Kind::Boolean: {
        std::string lower;
        for (char c : cell) {
            lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
        if (lower == "true" || lower == "1") {
            return true;
        }
        if (lower == "false" || lower == "0") {
            return false;
        }
        throw ParseError("not a boolean: '" + cell + "'");
    }
    }
    return cell;
}

inline std::string format_cell(const Value& v)
{
    if (const auto* d = std::get_if<double>(&v)) {
        return csv::format_double(*d);
    }
    return csv::quote(format_value(v));
}

} // namespace detail

inline MetaDataset parse_csv(std::istream& in, const ConfigSpace& space, const std::vector<std::string>& objective_names)
{
    std::string line;
    if (!std::getline(in, line)) {
        throw EmptyDatasetError("meta-dataset CSV is empty");
    }
    if (line.starts_with("\xEF\xBB\xBF")) {
        line.erase(0, 3);
    }
    std::vector<std::string> header;
    for (const auto& h : csv::split_line(line)) {
        header.push_back(csv::trim(h));
    }
    auto column_of = [&](const std::string& name) -> std::size_t {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw MissingColumnError("missing column '" + name + "'");
        }
        return static_cast<std::size_t>(it - header.begin());
    };
    std::vector<std::size_t> hp_cols;
    for (const auto& spec : space.specs()) {
        hp_cols.push_back(column_of(spec.name));
    }
    std::vector<std::size_t> obj_cols;
    for (const auto& name : objective_names) {
        obj_cols.push_back(column_of(name));
    }

    std::vector<Configuration> rows;
    std::vector<std::vector<double>> values(objective_names.size());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (csv::trim(line).empty()) {
            continue;
        }
        const auto fields = csv::split_line(line);
        if (fields.size() != header.size()) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                             " fields, got " + std::to_string(fields.size()));
        }
        Configuration config;
        for (std::size_t i = 0; i < space.size(); ++i) {
            const std::string cell = csv::trim(fields[hp_cols[i]]);
            if (cell.empty()) {
                continue;
            }
            try {
                config.emplace(space.spec(i).name, detail::parse_cell(space.spec(i), cell));
            } catch (const ParseError& e) {
                throw ParseError("line " + std::to_string(line_no) + ", column '" + space.spec(i).name + "': " + e.what());
            }
        }
        try {
            config = canonicalize(space, config);
        } catch (const OutOfDomainError& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        rows.push_back(std::move(config));
        for (std::size_t k = 0; k < obj_cols.size(); ++k) {
            const std::string cell = csv::trim(fields[obj_cols[k]]);
            double v = 0.0;
            if (!csv::parse_double(cell, v)) {
                throw ParseError("line " + std::to_string(line_no) + ", column '" + objective_names[k] +
                                 "': not a number: '" + cell + "'");
            }
            if (!std::isfinite(v)) {
                throw NonFiniteObjectiveError("line " + std::to_string(line_no) + ", column '" + objective_names[k] +
                                              "': non-finite objective value");
            }
            values[k].push_back(v);
        }
    }
    std::vector<ObjectiveColumn> cols;
    for (std::size_t k = 0; k < objective_names.size(); ++k) {
        cols.emplace_back(objective_names[k], std::move(values[k]));
    }
    return MetaDataset(space, std::move(rows), std::move(cols));
}

inline MetaDataset load_csv(const std::string& path, const ConfigSpace& space,
                            const std::vector<std::string>& objective_names)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open meta-dataset '" + path + "'");
    }
    return parse_csv(in, space, objective_names);
}

// Header: hyperparameters in canonical order, then objectives. Inactive
// hyperparameters are empty cells.
inline std::string to_csv(const MetaDataset& ds)
{
    std::ostringstream os;
    bool first = true;
    auto sep = [&] {
        if (!first) {
            os << ',';
        }
        first = false;
    };
    for (const auto& spec : ds.space().specs()) {
        sep();
        os << csv::quote(spec.name);
    }
    for (const auto& col : ds.objectives()) {
        sep();
        os << csv::quote(col.name);
    }
    os << '\n';
    for (std::size_t r = 0; r < ds.n(); ++r) {
        first = true;
        for (const auto& spec : ds.space().specs()) {
            sep();
            auto it = ds.rows()[r].find(spec.name);
            if (it != ds.rows()[r].end()) {
                os << detail::format_cell(it->second);
            }
        }
        for (const auto& col : ds.objectives()) {
            sep();
            os << csv::format_double(col.raw[r]);
        }
        os << '\n';
    }
    return os.str();
}

inline void save_csv(const MetaDataset& ds, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path + "'");
    }
    out << to_csv(ds);
    if (!out) {
        throw IoError("error writing '" + path + "'");
    }
}

} // namespace mohpi
