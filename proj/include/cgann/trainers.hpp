#pragma once

#include "cgann/mlp.hpp"

#include <map>
#include <string>
#include <vector>

namespace cgann {

enum class TrainAlgo { BP, LM, QNA, SCG };

inline constexpr int kMaxEpochs = 5;

const char* algo_name(TrainAlgo algo);
TrainAlgo algo_from_name(const std::string& name); // throws on unknown name
std::vector<TrainAlgo> all_algos();

struct ParamRange {
    std::string name;
    double lo;
    double hi;
};

/// Searchable parameter intervals per training algorithm:
///   BP  — learning_rate, momentum in [0.05, 0.25]
///   LM  — learning_rate in [0.001, 0.02] (initial damping)
///   QNA — step_size [1e-6, 100], step_limit [0.1, 0.6],
///         perf_scale [0.001, 0.003], step_scale [0.001, 0.02]
///   SCG — sigma [0, 1e-4], lambda [0, 1e-6]
const std::vector<ParamRange>& param_ranges(TrainAlgo algo);

struct TrainParams {
    TrainAlgo algo = TrainAlgo::BP;
    std::map<std::string, double> values;
    int epochs = kMaxEpochs;

    double at(const std::string& name) const;
    /// Throws if a parameter is missing, out of range, or epochs not in [1,5].
    void validate() const;
};

/// Params with every value at the midpoint of its interval.
TrainParams default_params(TrainAlgo algo, int epochs = kMaxEpochs);

struct TrainReport {
    Network trained;
    double train_nmse = 0.0;
    int epochs_run = 0;
};

/// Gradient of E = 1/2 * sum over patterns/outputs of (output - target)^2
/// with respect to every weight (bias columns included). Shapes mirror
/// net.weights. Rows of inputs/targets are patterns.
std::vector<Matrix> gradient(const Network& net, const Matrix& inputs, const Matrix& targets);

/// Runs at most params.epochs full-batch passes of the selected algorithm
/// and reports the trained network with its training-set NMSE. Never
/// produces non-finite weights: an update that would is rolled back and
/// training stops there. The validation set is accepted for interface
/// symmetry; no early stopping is performed on it.
TrainReport train(const Network& net, const TrainParams& params, const Matrix& train_x,
                  const Matrix& train_d, const Matrix& val_x, const Matrix& val_d);

} // namespace cgann
