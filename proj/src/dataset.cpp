#include "cgann/dataset.hpp"
#include "cgann/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace cgann {

std::vector<int> Dataset::class_of_rows() const {
    std::vector<int> cls(patterns());
    for (int p = 0; p < patterns(); ++p) {
        Vector row = targets.row(p).transpose();
        cls[p] = winner_takes_all(row);
    }
    return cls;
}

namespace {

std::vector<std::string> split_fields(const std::string& line, char delim) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, delim)) fields.push_back(field);
    if (!line.empty() && line.back() == delim) fields.emplace_back();
    return fields;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

bool parse_number(const std::string& s, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(s, &pos);
        return pos == s.size();
    } catch (...) {
        return false;
    }
}

} // namespace

Dataset load_csv_text(const std::string& text, const CsvSchema& schema, const std::string& name) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    int line_no = 0;
    std::size_t width = 0;
    int dropped = 0;

    auto is_missing = [&](const std::string& v) {
        if (v.empty()) return true;
        return std::find(schema.missing_tokens.begin(), schema.missing_tokens.end(), v) !=
               schema.missing_tokens.end();
    };

    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        auto fields = split_fields(stripped, schema.delimiter);
        for (auto& f : fields) f = trim(f);
        if (header.empty() && schema.has_header) {
            header = fields;
            width = fields.size();
            continue;
        }
        if (width == 0) width = fields.size();
        if (fields.size() != width)
            throw std::runtime_error(name + ":" + std::to_string(line_no) + ": expected " +
                                     std::to_string(width) + " fields, got " +
                                     std::to_string(fields.size()));
        if (std::any_of(fields.begin(), fields.end(), is_missing)) {
            ++dropped;
            continue;
        }
        rows.push_back(std::move(fields));
    }

    if (width == 0) throw std::runtime_error(name + ": no rows found");

    int label_idx = schema.label_index;
    if (!schema.label_column.empty()) {
        if (header.empty())
            throw std::runtime_error(name + ": label column by name requires a header row");
        auto it = std::find(header.begin(), header.end(), schema.label_column);
        if (it == header.end())
            throw std::runtime_error(name + ": label column '" + schema.label_column +
                                     "' not in header");
        label_idx = static_cast<int>(it - header.begin());
    }
    if (label_idx < 0 || label_idx >= static_cast<int>(width))
        throw std::runtime_error(name + ": label column index " + std::to_string(label_idx) +
                                 " out of range for " + std::to_string(width) + " columns");
    if (rows.empty()) throw std::runtime_error(name + ": no usable rows after dropping " +
                                               std::to_string(dropped) + " incomplete rows");

    const int n_rows = static_cast<int>(rows.size());
    const int n_features = static_cast<int>(width) - 1;
    if (n_features < 1) throw std::runtime_error(name + ": no feature columns");

    // Feature columns: numeric as-is; otherwise integer-code the sorted
    // distinct values so reloads are order-independent.
    Matrix features(n_rows, n_features);
    int out_col = 0;
    for (int col = 0; col < static_cast<int>(width); ++col) {
        if (col == label_idx) continue;
        bool numeric = true;
        std::vector<double> parsed(n_rows);
        for (int r = 0; r < n_rows; ++r) {
            if (!parse_number(rows[r][col], parsed[r])) {
                numeric = false;
                break;
            }
        }
        if (numeric) {
            for (int r = 0; r < n_rows; ++r) features(r, out_col) = parsed[r];
        } else {
            std::set<std::string> values;
            for (int r = 0; r < n_rows; ++r) values.insert(rows[r][col]);
            std::map<std::string, int> code;
            int next = 0;
            for (const auto& v : values) code[v] = next++;
            for (int r = 0; r < n_rows; ++r)
                features(r, out_col) = static_cast<double>(code[rows[r][col]]);
        }
        ++out_col;
    }

    std::set<std::string> label_values;
    for (int r = 0; r < n_rows; ++r) label_values.insert(rows[r][label_idx]);
    std::vector<std::string> labels(label_values.begin(), label_values.end());
    std::map<std::string, int> label_code;
    for (std::size_t i = 0; i < labels.size(); ++i) label_code[labels[i]] = static_cast<int>(i);

    Matrix targets = Matrix::Zero(n_rows, static_cast<int>(labels.size()));
    for (int r = 0; r < n_rows; ++r) targets(r, label_code[rows[r][label_idx]]) = 1.0;

    Dataset d;
    d.name = name;
    d.features = std::move(features);
    d.targets = std::move(targets);
    d.class_labels = std::move(labels);
    d.dropped_rows = dropped;
    return d;
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open dataset file: " + path);
    std::ostringstream buffer;
    buffer << file.rdbuf();
    std::string name = path;
    const auto slash = name.find_last_of('/');
    if (slash != std::string::npos) name = name.substr(slash + 1);
    const auto dot = name.find_last_of('.');
    if (dot != std::string::npos) name = name.substr(0, dot);
    return load_csv_text(buffer.str(), schema, name);
}

NormStats fit_normalization(const Matrix& features) {
    if (features.rows() == 0) throw std::invalid_argument("fit_normalization: empty matrix");
    NormStats stats;
    stats.min = features.colwise().minCoeff().transpose();
    stats.max = features.colwise().maxCoeff().transpose();
    return stats;
}

Matrix apply_normalization(const Matrix& features, const NormStats& stats) {
    if (features.cols() != stats.min.size())
        throw std::invalid_argument("apply_normalization: width mismatch");
    Matrix scaled(features.rows(), features.cols());
    for (int c = 0; c < features.cols(); ++c) {
        const double span = stats.max[c] - stats.min[c];
        if (span == 0.0)
            scaled.col(c).setConstant(0.5);
        else
            scaled.col(c) = (features.col(c).array() - stats.min[c]) / span;
    }
    return scaled;
}

Dataset normalize(const Dataset& d) {
    Dataset out = d;
    out.features = apply_normalization(d.features, fit_normalization(d.features));
    return out;
}

namespace {

Dataset take_rows(const Dataset& d, const std::vector<int>& rows) {
    Dataset out;
    out.name = d.name;
    out.class_labels = d.class_labels;
    out.dropped_rows = 0;
    out.features.resize(static_cast<int>(rows.size()), d.features.cols());
    out.targets.resize(static_cast<int>(rows.size()), d.targets.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.features.row(static_cast<int>(i)) = d.features.row(rows[i]);
        out.targets.row(static_cast<int>(i)) = d.targets.row(rows[i]);
    }
    return out;
}

} // namespace

Split split(const Dataset& d, const SplitSpec& spec) {
    const auto classes = d.class_of_rows();
    std::vector<std::vector<int>> by_class(d.classes());
    for (int p = 0; p < d.patterns(); ++p) by_class[classes[p]].push_back(p);

    Rng rng = make_rng(derive_seed(spec.seed, 0x73706c6974ULL)); // "split"
    std::vector<int> train_rows, val_rows, test_rows;

    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& rows = by_class[c];
        if (rows.size() < 2)
            throw std::runtime_error("split: class '" + d.class_labels[c] +
                                     "' has fewer than 2 patterns");
        // Fisher-Yates with the shared stream keeps the halving reproducible.
        for (std::size_t i = rows.size() - 1; i > 0; --i) {
            const std::size_t j = uniform_index(rng, i + 1);
            std::swap(rows[i], rows[j]);
        }
        const int n = static_cast<int>(rows.size());
        int n_test = static_cast<int>(std::floor(n * spec.half_fraction));
        n_test = std::clamp(n_test, 1, n - 1);
        std::vector<int> test_part(rows.begin(), rows.begin() + n_test);
        std::vector<int> design_part(rows.begin() + n_test, rows.end());
        if (spec.swap_halves) std::swap(test_part, design_part);

        const int n_design = static_cast<int>(design_part.size());
        int n_train = static_cast<int>(std::llround(n_design * spec.train_fraction));
        n_train = std::clamp(n_train, 1, n_design);
        for (int i = 0; i < n_design; ++i)
            (i < n_train ? train_rows : val_rows).push_back(design_part[i]);
        test_rows.insert(test_rows.end(), test_part.begin(), test_part.end());
    }

    std::sort(train_rows.begin(), train_rows.end());
    std::sort(val_rows.begin(), val_rows.end());
    std::sort(test_rows.begin(), test_rows.end());

    Split s;
    s.train = take_rows(d, train_rows);
    s.validation = take_rows(d, val_rows);
    s.test = take_rows(d, test_rows);
    return s;
}

Split split_normalized(const Dataset& d, const SplitSpec& spec) {
    Split s = split(d, spec);
    const NormStats stats = fit_normalization(s.train.features);
    s.train.features = apply_normalization(s.train.features, stats);
    if (s.validation.patterns() > 0)
        s.validation.features = apply_normalization(s.validation.features, stats);
    s.test.features = apply_normalization(s.test.features, stats);
    return s;
}

} // namespace cgann
