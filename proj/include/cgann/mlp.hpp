#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace cgann {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Architecture search space bounds: fully connected MLPs with 1..3 hidden
/// layers of 1..12 units each.
inline constexpr int kMaxHiddenLayers = 3;
inline constexpr int kMaxHiddenNodes = 12;

enum class TransferFn { Linear, TanH, LogSig };

const char* transfer_name(TransferFn fn);

/// Evaluates the transfer function. Pre-activations are clamped to
/// [-500, 500] before the exponential so outputs stay finite at any scale.
double apply_transfer(TransferFn fn, double x);

/// Derivative of the transfer function at x (used by backprop).
double transfer_derivative(TransferFn fn, double x);

struct Architecture {
    int input_size = 0;
    std::vector<int> hidden_sizes;    // 1..3 entries, each in [1, 12]
    std::vector<TransferFn> hidden_fns;
    int output_size = 0;
    TransferFn output_fn = TransferFn::Linear;

    /// Throws std::invalid_argument if any bound or length invariant fails.
    void validate() const;

    /// [input, hidden..., output]
    std::vector<int> layer_sizes() const;

    int total_hidden_nodes() const;

    bool same_shape(const Architecture& other) const {
        return input_size == other.input_size && output_size == other.output_size &&
               hidden_sizes == other.hidden_sizes;
    }
};

/// Feed-forward MLP. weights[l] maps layer l to layer l+1 and has shape
/// (fan_out x fan_in+1); the last column is the bias, fed by an implicit
/// constant 1 input.
struct Network {
    Architecture arch;
    std::vector<Matrix> weights;

    void validate() const;
};

/// Allocates zero weight matrices matching the architecture.
std::vector<Matrix> zero_weights(const Architecture& arch);

/// Single-pattern forward pass. Throws on input length mismatch.
Vector forward(const Network& net, const Vector& input);

/// Batched forward pass over patterns-as-rows (P x input_size), returning
/// P x output_size.
Matrix forward_batch(const Network& net, const Matrix& inputs);

/// Normalized mean square error of Eq.-style form: 100/(N*P) * sum of
/// squared residuals over all P patterns and N outputs. Rows are patterns.
double nmse(const Matrix& outputs, const Matrix& targets);

/// Index of the largest output value; ties resolve to the lowest index.
/// Throws on an empty vector.
int winner_takes_all(const Vector& output);

struct NodeCounts {
    int c = 0;        // nodes actually used: input + hidden + output
    int c_total = 0;  // capacity: input + 3*12 + output
};

NodeCounts count_nodes(const Architecture& arch);

} // namespace cgann
