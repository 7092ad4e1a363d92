#pragma once

#include "cgann/mlp.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cgann {

/// A classification dataset: numeric feature matrix (patterns as rows) and
/// one-hot targets. Rows with missing values are dropped at load time;
/// categorical feature columns are integer-coded.
struct Dataset {
    std::string name;
    Matrix features;                  // P x A
    Matrix targets;                   // P x N, one-hot rows
    std::vector<std::string> class_labels;
    int dropped_rows = 0;

    int patterns() const { return static_cast<int>(features.rows()); }
    int attributes() const { return static_cast<int>(features.cols()); }
    int classes() const { return static_cast<int>(targets.cols()); }

    /// Class index per pattern (argmax of the one-hot row).
    std::vector<int> class_of_rows() const;
};

struct CsvSchema {
    std::string label_column;   // by name (needs header) ...
    int label_index = -1;       // ... or by 0-based index; exactly one must be set
    bool has_header = true;
    char delimiter = ',';
    /// Field values treated as missing (in addition to empty fields).
    std::vector<std::string> missing_tokens = {"?", "NA"};
};

/// Loads a delimited text file into a Dataset. Non-numeric feature columns
/// are coded as integers over their sorted distinct values; rows containing
/// missing values are dropped and counted. Throws std::runtime_error with a
/// line diagnostic on unparseable input or when no usable rows remain.
Dataset load_csv(const std::string& path, const CsvSchema& schema);

/// Same loader over an in-memory buffer (used by tests and the CSV
/// round-trip checks).
Dataset load_csv_text(const std::string& text, const CsvSchema& schema, const std::string& name);

/// Per-feature min/max from a reference feature matrix.
struct NormStats {
    Vector min;
    Vector max;
};

NormStats fit_normalization(const Matrix& features);

/// Min-max scales features to [0,1] with the given statistics. Constant
/// features map to 0.5. Rows outside the reference range are not clamped,
/// so held-out data may fall outside [0,1].
Matrix apply_normalization(const Matrix& features, const NormStats& stats);

/// Convenience: scales a dataset by its own statistics.
Dataset normalize(const Dataset& d);

struct SplitSpec {
    std::uint64_t seed = 0;
    double half_fraction = 0.5;   // share of each class held out as the test half
    double train_fraction = 0.7;  // train share of the remaining design half
    /// Exchanges the roles of the two halves; lets 2-fold protocols reuse
    /// one halving with each half serving once as test.
    bool swap_halves = false;
};

struct Split {
    Dataset train;
    Dataset validation;
    Dataset test;
};

/// Stratified split into (train, validation, test): one random half of each
/// class becomes the test set, the remainder splits train/validation by
/// train_fraction. Deterministic per seed; partitions are disjoint and
/// exhaustive. Throws if any class has fewer than 2 patterns.
Split split(const Dataset& d, const SplitSpec& spec);

/// split() followed by min-max normalization fitted on the train portion
/// only and applied to all three parts.
Split split_normalized(const Dataset& d, const SplitSpec& spec);

} // namespace cgann
