// Dense 1-D/2-D double tensors with tape-based reverse-mode autodiff.
//
// The op set is exactly what the fixed model architectures need; there is
// no general broadcasting. A Tape records executed ops in order, and
// backward() replays the record in reverse, visiting each op once.
#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "medaug/rng.hpp"

namespace medaug {

// Shared-handle tensor: copies alias the same storage. Gradient storage is
// allocated when the tensor is marked as requiring gradients (parameters)
// or when a tracking tape produces it.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> values);

    static Tensor scalar(double v);
    static Tensor row(std::vector<double> values);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double v);
    static Tensor randn(std::vector<std::size_t> shape, Rng& rng, double stddev);

    bool defined() const noexcept { return impl_ != nullptr; }
    const std::vector<std::size_t>& shape() const;
    std::size_t ndim() const;
    std::size_t size() const;
    // 1-D tensors are treated as a single row where a 2-D view is needed.
    std::size_t rows() const;
    std::size_t cols() const;
    std::string shape_str() const;

    // Handle semantics: value/grad give mutable access to shared storage.
    std::vector<double>& value() const;
    std::vector<double>& grad() const;

    double item() const;
    double& at(std::size_t i) const;
    double& at(std::size_t r, std::size_t c) const;

    bool requires_grad() const;
    void set_requires_grad(bool on) const;
    void zero_grad() const;

    bool same_storage(const Tensor& other) const noexcept { return impl_ == other.impl_; }

private:
    struct Impl {
        std::vector<std::size_t> shape;
        std::vector<double> value;
        std::vector<double> grad;
        bool requires_grad = false;
    };

    std::shared_ptr<Impl> impl_;

    Impl& impl() const;
};

// Records ops for backward traversal. Construct with track=false for
// forward-only evaluation (inference, sampling, finite differences).
class Tape {
public:
    explicit Tape(bool track = true) : track_(track) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool tracking() const noexcept { return track_; }
    std::size_t node_count() const noexcept { return nodes_.size(); }

    Tensor add(const Tensor& a, const Tensor& b);
    Tensor sub(const Tensor& a, const Tensor& b);
    Tensor mul(const Tensor& a, const Tensor& b);
    Tensor scale(const Tensor& a, double c);
    // out[i][j] = m[i][j] + v[j]
    Tensor add_row_vector(const Tensor& m, const Tensor& v);
    Tensor matmul(const Tensor& a, const Tensor& b);
    // a [m x k] times b [n x k] transposed -> [m x n]
    Tensor matmul_nt(const Tensor& a, const Tensor& b);
    Tensor softmax_rows(const Tensor& x);
    Tensor cross_entropy(const Tensor& logits, const std::vector<std::size_t>& targets);
    Tensor cross_entropy(const Tensor& logits, const std::vector<std::size_t>& targets,
                         const std::vector<double>& weights);
    Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                      double eps = 1e-5);
    Tensor gelu(const Tensor& x);
    // Mean over rows of sum_i p_i * ln(p_i / q_i), q clamped below at 1e-12.
    // Both arguments must be rows of valid probabilities.
    Tensor kl_divergence(const Tensor& p, const Tensor& q);
    Tensor embed(const Tensor& table, const std::vector<std::size_t>& ids);
    // Count-weighted mean of embedding rows; exactly invariant to id order.
    Tensor bow_pool(const Tensor& table, const std::vector<std::size_t>& ids);
    Tensor slice_rows(const Tensor& x, std::size_t start, std::size_t count);
    Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t count);
    Tensor concat_rows(const std::vector<Tensor>& parts);
    Tensor concat_cols(const std::vector<Tensor>& parts);
    Tensor mean_rows(const Tensor& x);
    Tensor sum_all(const Tensor& x);

    // Seeds d(root) = seed and accumulates gradients into every tracked
    // tensor reachable from the recorded ops. root must be scalar.
    void backward(const Tensor& root, double seed = 1.0);

private:
    std::vector<std::function<void()>> nodes_;
    bool track_;

    Tensor make_output(std::vector<std::size_t> shape);
    void record(std::function<void()> fn);
};

inline constexpr double kKlClampFloor = 1e-12;

// Max over coordinates of |analytic - numeric| / max(1, |analytic|, |numeric|),
// numeric being central differences with step 1e-5. f must build a scalar.
double grad_check(const std::function<Tensor(Tape&, const Tensor&)>& f, const Tensor& x);

// Same check for a scalar loss that closes over a parameter list.
double grad_check_params(const std::function<Tensor(Tape&)>& loss,
                         const std::vector<Tensor>& params);

}  // namespace medaug
