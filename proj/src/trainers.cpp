#include "cgann/trainers.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cgann {

const char* algo_name(TrainAlgo algo) {
    switch (algo) {
    case TrainAlgo::BP: return "bp";
    case TrainAlgo::LM: return "lm";
    case TrainAlgo::QNA: return "qna";
    case TrainAlgo::SCG: return "scg";
    }
    return "?";
}

TrainAlgo algo_from_name(const std::string& name) {
    for (TrainAlgo a : all_algos())
        if (name == algo_name(a)) return a;
    throw std::invalid_argument("unknown training algorithm: " + name);
}

std::vector<TrainAlgo> all_algos() {
    return {TrainAlgo::BP, TrainAlgo::LM, TrainAlgo::QNA, TrainAlgo::SCG};
}

const std::vector<ParamRange>& param_ranges(TrainAlgo algo) {
    static const std::vector<ParamRange> bp = {
        {"learning_rate", 0.05, 0.25},
        {"momentum", 0.05, 0.25},
    };
    static const std::vector<ParamRange> lm = {
        {"learning_rate", 0.001, 0.02},
    };
    static const std::vector<ParamRange> qna = {
        {"step_size", 1.0e-6, 100.0},
        {"step_limit", 0.1, 0.6},
        {"perf_scale", 0.001, 0.003},
        {"step_scale", 0.001, 0.02},
    };
    static const std::vector<ParamRange> scg = {
        {"sigma", 0.0, 1.0e-4},
        {"lambda", 0.0, 1.0e-6},
    };
    switch (algo) {
    case TrainAlgo::BP: return bp;
    case TrainAlgo::LM: return lm;
    case TrainAlgo::QNA: return qna;
    case TrainAlgo::SCG: return scg;
    }
    return bp;
}

double TrainParams::at(const std::string& name) const {
    auto it = values.find(name);
    if (it == values.end())
        throw std::invalid_argument(std::string("missing trainer parameter: ") + name);
    return it->second;
}

void TrainParams::validate() const {
    if (epochs < 1 || epochs > kMaxEpochs)
        throw std::invalid_argument("epochs must be in [1, 5]");
    for (const auto& range : param_ranges(algo)) {
        const double v = at(range.name);
        if (!(v >= range.lo && v <= range.hi))
            throw std::invalid_argument("parameter " + range.name + " out of [" +
                                        std::to_string(range.lo) + ", " +
                                        std::to_string(range.hi) + "]");
    }
}

TrainParams default_params(TrainAlgo algo, int epochs) {
    TrainParams p;
    p.algo = algo;
    p.epochs = epochs;
    for (const auto& range : param_ranges(algo))
        p.values[range.name] = 0.5 * (range.lo + range.hi);
    return p;
}

namespace {

struct ForwardTrace {
    std::vector<Matrix> pre_acts;    // z per non-input layer, P x n_l
    std::vector<Matrix> activations; // a per layer incl. input, P x n_l
};

TransferFn layer_fn(const Architecture& arch, std::size_t l, std::size_t n_layers) {
    return l + 1 == n_layers ? arch.output_fn : arch.hidden_fns[l];
}

ForwardTrace forward_trace(const Network& net, const Matrix& inputs) {
    ForwardTrace trace;
    const std::size_t n_layers = net.weights.size();
    trace.pre_acts.reserve(n_layers);
    trace.activations.reserve(n_layers + 1);
    trace.activations.push_back(inputs);
    for (std::size_t l = 0; l < n_layers; ++l) {
        const Matrix& w = net.weights[l];
        Matrix z = trace.activations.back() * w.leftCols(w.cols() - 1).transpose();
        z.rowwise() += w.col(w.cols() - 1).transpose();
        const TransferFn fn = layer_fn(net.arch, l, n_layers);
        trace.activations.push_back(
            z.unaryExpr([fn](double v) { return apply_transfer(fn, v); }));
        trace.pre_acts.push_back(std::move(z));
    }
    return trace;
}

Matrix derivative_of(const Matrix& z, TransferFn fn) {
    return z.unaryExpr([fn](double v) { return transfer_derivative(fn, v); });
}

void check_batch(const Network& net, const Matrix& x, const Matrix& d, const char* what) {
    if (x.rows() == 0) throw std::invalid_argument(std::string(what) + ": empty batch");
    if (x.cols() != net.arch.input_size)
        throw std::invalid_argument(std::string(what) + ": input width mismatch");
    if (d.cols() != net.arch.output_size)
        throw std::invalid_argument(std::string(what) + ": target width mismatch");
    if (x.rows() != d.rows())
        throw std::invalid_argument(std::string(what) + ": pattern count mismatch");
}

/// Flat-vector view of a weight set; LM/QNA/SCG work on the packed form.
struct WeightLayout {
    std::vector<std::pair<int, int>> shapes;
    std::vector<int> offsets;
    int total = 0;

    explicit WeightLayout(const std::vector<Matrix>& weights) {
        for (const Matrix& w : weights) {
            shapes.emplace_back(static_cast<int>(w.rows()), static_cast<int>(w.cols()));
            offsets.push_back(total);
            total += static_cast<int>(w.size());
        }
    }

    Vector pack(const std::vector<Matrix>& weights) const {
        Vector v(total);
        for (std::size_t l = 0; l < weights.size(); ++l)
            v.segment(offsets[l], weights[l].size()) =
                Eigen::Map<const Vector>(weights[l].data(), weights[l].size());
        return v;
    }

    void unpack(const Vector& v, std::vector<Matrix>& weights) const {
        for (std::size_t l = 0; l < weights.size(); ++l)
            weights[l] = Eigen::Map<const Matrix>(v.data() + offsets[l], shapes[l].first,
                                                  shapes[l].second);
    }
};

double half_sse(const Network& net, const Matrix& x, const Matrix& d) {
    return 0.5 * (forward_batch(net, x) - d).squaredNorm();
}

Vector packed_gradient(const Network& net, const WeightLayout& layout, const Matrix& x,
                       const Matrix& d) {
    return layout.pack(gradient(net, x, d));
}

bool finite(const Vector& v) { return v.allFinite(); }

/// Jacobian of the residual vector (pattern-major, output-minor) with
/// respect to the packed weights.
Matrix residual_jacobian(const Network& net, const WeightLayout& layout,
                         const ForwardTrace& trace) {
    const std::size_t n_layers = net.weights.size();
    const int n_out = net.arch.output_size;
    const int n_patterns = static_cast<int>(trace.activations.front().rows());
    Matrix jac(n_patterns * n_out, layout.total);

    std::vector<Matrix> deriv(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l)
        deriv[l] = derivative_of(trace.pre_acts[l], layer_fn(net.arch, l, n_layers));

    // One pattern at a time; columns of `delta` track all outputs at once.
    for (int p = 0; p < n_patterns; ++p) {
        Matrix delta = deriv[n_layers - 1].row(p).transpose().asDiagonal(); // n_out x n_out
        for (std::size_t li = n_layers; li-- > 0;) {
            const Matrix& act = trace.activations[li]; // previous layer activation
            const int rows = static_cast<int>(net.weights[li].rows());
            const int cols = static_cast<int>(net.weights[li].cols());
            // d residual_i / d W(r, c) = delta(r, i) * aug_act(c)
            for (int i = 0; i < n_out; ++i) {
                Eigen::Map<Matrix> block(jac.row(p * n_out + i).data() + layout.offsets[li],
                                         rows, cols);
                block.leftCols(cols - 1).noalias() = delta.col(i) * act.row(p);
                block.col(cols - 1) = delta.col(i);
            }
            if (li > 0) {
                const Matrix& w = net.weights[li];
                Matrix back = w.leftCols(cols - 1).transpose() * delta;
                delta = deriv[li - 1].row(p).transpose().asArray().matrix().asDiagonal() * back;
            }
        }
    }
    return jac;
}

TrainReport finish(Network net, const Matrix& x, const Matrix& d, int epochs_run) {
    TrainReport report;
    report.train_nmse = nmse(forward_batch(net, x), d);
    report.trained = std::move(net);
    report.epochs_run = epochs_run;
    return report;
}

// ---------------------------------------------------------------------------
// Back-propagation: full-batch gradient descent with momentum on the mean
// squared error (the sum-form gradient scaled by 1/P, so step sizes do not
// grow with the batch).
TrainReport train_bp(Network net, const TrainParams& params, const Matrix& x, const Matrix& d) {
    const double lr = params.at("learning_rate");
    const double momentum = params.at("momentum");
    const double inv_p = 1.0 / static_cast<double>(x.rows());
    const WeightLayout layout(net.weights);

    Vector w = layout.pack(net.weights);
    Vector velocity = Vector::Zero(layout.total);
    int epochs_run = 0;
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        const Vector g = packed_gradient(net, layout, x, d) * inv_p;
        velocity = momentum * velocity - lr * g;
        const Vector candidate = w + velocity;
        if (!finite(candidate)) break;
        w = candidate;
        layout.unpack(w, net.weights);
        ++epochs_run;
    }
    return finish(std::move(net), x, d, epochs_run);
}

// ---------------------------------------------------------------------------
// Levenberg-Marquardt: Gauss-Newton steps on the summed squared residuals
// with Marquardt damping. The genome's learning_rate seeds the damping
// factor, which moves by x10 on reject and /10 on accept.
TrainReport train_lm(Network net, const TrainParams& params, const Matrix& x, const Matrix& d) {
    const WeightLayout layout(net.weights);
    double mu = params.at("learning_rate");
    Vector w = layout.pack(net.weights);

    int epochs_run = 0;
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        const ForwardTrace trace = forward_trace(net, x);
        const Matrix& outputs = trace.activations.back();
        Matrix residual_rows = outputs - d;
        const double err = residual_rows.squaredNorm();
        if (err < 1e-18) break;

        const Matrix jac = residual_jacobian(net, layout, trace);
        Eigen::Map<const Vector> residuals(residual_rows.data(), residual_rows.size());
        // residual_rows is column-major (pattern index fastest), matching the
        // pattern-major Jacobian only after reordering; rebuild explicitly.
        Vector r(residual_rows.size());
        const int n_out = static_cast<int>(d.cols());
        for (int p = 0; p < residual_rows.rows(); ++p)
            for (int i = 0; i < n_out; ++i) r[p * n_out + i] = residual_rows(p, i);

        Matrix hessian = Matrix::Zero(layout.total, layout.total);
        hessian.selfadjointView<Eigen::Lower>().rankUpdate(jac.transpose());
        const Vector g = jac.transpose() * r;
        if (g.lpNorm<Eigen::Infinity>() < 1e-14) break;

        bool accepted = false;
        for (int attempt = 0; attempt < 16; ++attempt) {
            Matrix damped = hessian.selfadjointView<Eigen::Lower>();
            damped.diagonal().array() += mu;
            Vector step = damped.ldlt().solve(-g);
            if (step.allFinite()) {
                const Vector candidate = w + step;
                layout.unpack(candidate, net.weights);
                const double new_err = (forward_batch(net, x) - d).squaredNorm();
                if (std::isfinite(new_err) && new_err < err) {
                    w = candidate;
                    mu = std::max(mu / 10.0, 1e-12);
                    accepted = true;
                    break;
                }
            }
            mu *= 10.0;
            if (mu > 1e12) break;
        }
        if (!accepted) {
            layout.unpack(w, net.weights); // roll back the last trial step
            break;
        }
        ++epochs_run;
    }
    layout.unpack(w, net.weights);
    return finish(std::move(net), x, d, epochs_run);
}

// ---------------------------------------------------------------------------
// Quasi-Newton (BFGS) on the mean error. Line search is backtracking with
// quadratic interpolation:
//   - trial step length capped at step_size,
//   - sufficient decrease constant = perf_scale,
//   - each backtrack rescales the step by the interpolated ratio clamped
//     into [step_scale, step_limit].
TrainReport train_qna(Network net, const TrainParams& params, const Matrix& x, const Matrix& d) {
    const double step_size = params.at("step_size");
    const double step_limit = params.at("step_limit");
    const double perf_scale = params.at("perf_scale");
    const double step_scale = params.at("step_scale");
    const double inv_p = 1.0 / static_cast<double>(x.rows());
    const WeightLayout layout(net.weights);

    Vector w = layout.pack(net.weights);
    Matrix h_inv = Matrix::Identity(layout.total, layout.total);
    Vector g = packed_gradient(net, layout, x, d) * inv_p;

    auto eval_at = [&](const Vector& candidate) {
        layout.unpack(candidate, net.weights);
        return half_sse(net, x, d) * inv_p;
    };

    int epochs_run = 0;
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        if (g.lpNorm<Eigen::Infinity>() < 1e-14) break;
        Vector direction = -(h_inv.selfadjointView<Eigen::Lower>() * g);
        double slope = g.dot(direction);
        if (!(slope < 0.0)) { // lost positive definiteness; restart from steepest descent
            h_inv.setIdentity();
            direction = -g;
            slope = g.dot(direction);
        }
        const double dir_norm = direction.norm();
        if (dir_norm < 1e-300) break;

        layout.unpack(w, net.weights);
        const double f0 = half_sse(net, x, d) * inv_p;
        double t = std::min(1.0, step_size / dir_norm);
        bool accepted = false;
        double ft = f0;
        for (int backtrack = 0; backtrack < 24; ++backtrack) {
            ft = eval_at(w + t * direction);
            if (std::isfinite(ft) && ft <= f0 + perf_scale * t * slope) {
                accepted = true;
                break;
            }
            double ratio = 0.5;
            const double denom = 2.0 * (ft - f0 - t * slope);
            if (std::isfinite(denom) && denom > 0.0) ratio = -slope * t / denom;
            ratio = std::clamp(ratio, step_scale, step_limit);
            t *= ratio;
            if (t * dir_norm < 1e-12) break;
        }
        if (!accepted) {
            layout.unpack(w, net.weights);
            break;
        }

        const Vector step = t * direction;
        const Vector w_next = w + step;
        layout.unpack(w_next, net.weights);
        const Vector g_next = packed_gradient(net, layout, x, d) * inv_p;
        if (!finite(g_next) || !finite(w_next)) {
            layout.unpack(w, net.weights);
            break;
        }
        const Vector y = g_next - g;
        const double curvature = y.dot(step);
        if (curvature > 1e-12) {
            // Sherman-Morrison form of the inverse BFGS update.
            const double rho = 1.0 / curvature;
            const Vector hy = h_inv.selfadjointView<Eigen::Lower>() * y;
            const double yhy = y.dot(hy);
            h_inv.triangularView<Eigen::Lower>() -=
                rho * (hy * step.transpose() + step * hy.transpose()) -
                rho * (1.0 + rho * yhy) * (step * step.transpose());
        }
        w = w_next;
        g = g_next;
        ++epochs_run;
    }
    layout.unpack(w, net.weights);
    return finish(std::move(net), x, d, epochs_run);
}

// ---------------------------------------------------------------------------
// Scaled conjugate gradient (Moller's algorithm) on the mean error. sigma
// controls the finite-difference second-order probe; lambda seeds the
// Hessian-indefiniteness regulator.
TrainReport train_scg(Network net, const TrainParams& params, const Matrix& x, const Matrix& d) {
    const double sigma_param = std::max(params.at("sigma"), 1e-10);
    double lambda = std::max(params.at("lambda"), 0.0);
    double lambda_bar = 0.0;
    const double inv_p = 1.0 / static_cast<double>(x.rows());
    const WeightLayout layout(net.weights);

    Vector w = layout.pack(net.weights);
    auto grad_at = [&](const Vector& candidate) {
        layout.unpack(candidate, net.weights);
        return Vector(packed_gradient(net, layout, x, d) * inv_p);
    };
    auto value_at = [&](const Vector& candidate) {
        layout.unpack(candidate, net.weights);
        return half_sse(net, x, d) * inv_p;
    };

    Vector r = -grad_at(w);
    Vector p = r;
    bool success = true;
    double delta = 0.0;

    int epochs_run = 0;
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        const double p_sq = p.squaredNorm();
        const double p_norm = std::sqrt(p_sq);
        if (p_norm < 1e-300) break;

        if (success) {
            const double sigma_k = sigma_param / p_norm;
            const Vector s = (-grad_at(w + sigma_k * p) + grad_at(w) * 0.0 + grad_at(w)) / 1.0;
            // s above computed explicitly below; kept for clarity of the probe step
            const Vector g_probe = grad_at(w + sigma_k * p);
            const Vector g_here = grad_at(w);
            delta = p.dot((g_probe - g_here) / sigma_k);
        }
        delta += (lambda - lambda_bar) * p_sq;
        if (delta <= 0.0) { // make the scaled Hessian positive definite
            lambda_bar = 2.0 * (lambda - delta / p_sq);
            delta = -delta + lambda * p_sq;
            lambda = lambda_bar;
        }

        const double mu = p.dot(r);
        const double alpha = mu / delta;
        const double f_here = value_at(w);
        const double f_step = value_at(w + alpha * p);
        const double comparison = 2.0 * delta * (f_here - f_step) / (mu * mu);

        if (std::isfinite(comparison) && comparison >= 0.0 && std::isfinite(f_step)) {
            w += alpha * p;
            const Vector r_next = -grad_at(w);
            lambda_bar = 0.0;
            success = true;
            if ((epoch + 1) % layout.total == 0) {
                p = r_next; // periodic restart
            } else {
                const double beta = (r_next.squaredNorm() - r_next.dot(r)) / mu;
                p = r_next + beta * p;
            }
            r = r_next;
            if (comparison >= 0.75) lambda = std::max(lambda * 0.25, 0.0);
            ++epochs_run;
        } else {
            lambda_bar = lambda;
            success = false;
        }
        if (comparison < 0.25 && std::isfinite(comparison))
            lambda += delta * (1.0 - comparison) / p_sq;
        if (!std::isfinite(lambda) || lambda > 1e100) break;
        if (r.lpNorm<Eigen::Infinity>() < 1e-14) break;
    }
    layout.unpack(w, net.weights);
    return finish(std::move(net), x, d, epochs_run);
}

} // namespace

std::vector<Matrix> gradient(const Network& net, const Matrix& inputs, const Matrix& targets) {
    check_batch(net, inputs, targets, "gradient");
    const std::size_t n_layers = net.weights.size();
    const ForwardTrace trace = forward_trace(net, inputs);

    std::vector<Matrix> grads(n_layers);
    Matrix delta = (trace.activations.back() - targets)
                       .cwiseProduct(derivative_of(trace.pre_acts.back(),
                                                   layer_fn(net.arch, n_layers - 1, n_layers)));
    for (std::size_t li = n_layers; li-- > 0;) {
        const Matrix& act = trace.activations[li];
        Matrix g(net.weights[li].rows(), net.weights[li].cols());
        g.leftCols(g.cols() - 1).noalias() = delta.transpose() * act;
        g.col(g.cols() - 1) = delta.colwise().sum().transpose();
        grads[li] = std::move(g);
        if (li > 0) {
            const Matrix& w = net.weights[li];
            delta = (delta * w.leftCols(w.cols() - 1))
                        .cwiseProduct(derivative_of(trace.pre_acts[li - 1],
                                                    layer_fn(net.arch, li - 1, n_layers)));
        }
    }
    return grads;
}

TrainReport train(const Network& net, const TrainParams& params, const Matrix& train_x,
                  const Matrix& train_d, const Matrix& /*val_x*/, const Matrix& /*val_d*/) {
    params.validate();
    check_batch(net, train_x, train_d, "train");
    net.validate();

    TrainReport report;
    switch (params.algo) {
    case TrainAlgo::BP: report = train_bp(net, params, train_x, train_d); break;
    case TrainAlgo::LM: report = train_lm(net, params, train_x, train_d); break;
    case TrainAlgo::QNA: report = train_qna(net, params, train_x, train_d); break;
    case TrainAlgo::SCG: report = train_scg(net, params, train_x, train_d); break;
    }
    for (const Matrix& w : report.trained.weights)
        if (!w.allFinite()) throw std::runtime_error("trainer produced non-finite weights");
    return report;
}

} // namespace cgann
