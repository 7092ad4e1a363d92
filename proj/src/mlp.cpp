#include "cgann/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cgann {

const char* transfer_name(TransferFn fn) {
    switch (fn) {
    case TransferFn::Linear: return "linear";
    case TransferFn::TanH: return "tanh";
    case TransferFn::LogSig: return "logsig";
    }
    return "?";
}

double apply_transfer(TransferFn fn, double x) {
    const double z = std::clamp(x, -500.0, 500.0);
    switch (fn) {
    case TransferFn::Linear: return z;
    case TransferFn::TanH: return std::tanh(z);
    case TransferFn::LogSig: return 1.0 / (1.0 + std::exp(-z));
    }
    return z;
}

double transfer_derivative(TransferFn fn, double x) {
    const double z = std::clamp(x, -500.0, 500.0);
    switch (fn) {
    case TransferFn::Linear: return 1.0;
    case TransferFn::TanH: {
        const double t = std::tanh(z);
        return 1.0 - t * t;
    }
    case TransferFn::LogSig: {
        const double s = 1.0 / (1.0 + std::exp(-z));
        return s * (1.0 - s);
    }
    }
    return 1.0;
}

void Architecture::validate() const {
    if (input_size < 1) throw std::invalid_argument("architecture: input_size must be positive");
    if (output_size < 1) throw std::invalid_argument("architecture: output_size must be positive");
    const auto layers = hidden_sizes.size();
    if (layers < 1 || layers > static_cast<std::size_t>(kMaxHiddenLayers))
        throw std::invalid_argument("architecture: hidden layer count out of [1,3]");
    if (hidden_fns.size() != layers)
        throw std::invalid_argument("architecture: hidden_fns length mismatch");
    for (int n : hidden_sizes)
        if (n < 1 || n > kMaxHiddenNodes)
            throw std::invalid_argument("architecture: hidden layer size out of [1,12]");
    if (output_fn != TransferFn::Linear)
        throw std::invalid_argument("architecture: output transfer must be linear");
}

std::vector<int> Architecture::layer_sizes() const {
    std::vector<int> sizes;
    sizes.reserve(hidden_sizes.size() + 2);
    sizes.push_back(input_size);
    sizes.insert(sizes.end(), hidden_sizes.begin(), hidden_sizes.end());
    sizes.push_back(output_size);
    return sizes;
}

int Architecture::total_hidden_nodes() const {
    int total = 0;
    for (int n : hidden_sizes) total += n;
    return total;
}

void Network::validate() const {
    arch.validate();
    const auto sizes = arch.layer_sizes();
    if (weights.size() + 1 != sizes.size())
        throw std::invalid_argument("network: weight matrix count mismatch");
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (weights[l].rows() != sizes[l + 1] || weights[l].cols() != sizes[l] + 1)
            throw std::invalid_argument("network: weight matrix " + std::to_string(l) +
                                        " has wrong shape");
        if (!weights[l].allFinite())
            throw std::invalid_argument("network: non-finite weight");
    }
}

std::vector<Matrix> zero_weights(const Architecture& arch) {
    const auto sizes = arch.layer_sizes();
    std::vector<Matrix> w;
    w.reserve(sizes.size() - 1);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
        w.push_back(Matrix::Zero(sizes[l + 1], sizes[l] + 1));
    return w;
}

namespace {

TransferFn layer_fn(const Architecture& arch, std::size_t layer_index, std::size_t n_layers) {
    return layer_index + 1 == n_layers ? arch.output_fn : arch.hidden_fns[layer_index];
}

} // namespace

Matrix forward_batch(const Network& net, const Matrix& inputs) {
    if (inputs.cols() != net.arch.input_size)
        throw std::invalid_argument("forward: input width " + std::to_string(inputs.cols()) +
                                    " does not match architecture input size " +
                                    std::to_string(net.arch.input_size));
    const std::size_t n_layers = net.weights.size();
    Matrix act = inputs;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const Matrix& w = net.weights[l];
        // z = act * W(:, :-1)^T + bias row
        Matrix z = act * w.leftCols(w.cols() - 1).transpose();
        z.rowwise() += w.col(w.cols() - 1).transpose();
        const TransferFn fn = layer_fn(net.arch, l, n_layers);
        act = z.unaryExpr([fn](double v) { return apply_transfer(fn, v); });
    }
    return act;
}

Vector forward(const Network& net, const Vector& input) {
    if (input.size() != net.arch.input_size)
        throw std::invalid_argument("forward: input length mismatch");
    Matrix out = forward_batch(net, input.transpose());
    return out.row(0).transpose();
}

double nmse(const Matrix& outputs, const Matrix& targets) {
    if (outputs.rows() != targets.rows() || outputs.cols() != targets.cols())
        throw std::invalid_argument("nmse: shape mismatch");
    if (outputs.rows() < 1 || outputs.cols() < 1)
        throw std::invalid_argument("nmse: empty matrices");
    const double p = static_cast<double>(outputs.rows());
    const double n = static_cast<double>(outputs.cols());
    return 100.0 / (n * p) * (targets - outputs).squaredNorm();
}

int winner_takes_all(const Vector& output) {
    if (output.size() == 0) throw std::invalid_argument("winner_takes_all: empty output");
    int best = 0;
    for (int i = 1; i < output.size(); ++i)
        if (output[i] > output[best]) best = i;
    return best;
}

NodeCounts count_nodes(const Architecture& arch) {
    NodeCounts counts;
    counts.c = arch.input_size + arch.total_hidden_nodes() + arch.output_size;
    counts.c_total = arch.input_size + kMaxHiddenLayers * kMaxHiddenNodes + arch.output_size;
    return counts;
}

} // namespace cgann
