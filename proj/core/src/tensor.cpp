#include "medaug/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "medaug/errors.hpp"

namespace medaug {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string format_shape(const std::vector<std::size_t>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    s += "]";
    return s;
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_str() +
                             " vs " + b.shape_str());
    }
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor(std::vector<std::size_t> shape) {
    if (shape.empty() || shape.size() > 2) {
        throw DimensionError("tensor shape must be 1-D or 2-D, got " + format_shape(shape));
    }
    impl_ = std::make_shared<Impl>();
    impl_->shape = std::move(shape);
    impl_->value.assign(shape_product(impl_->shape), 0.0);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values) : Tensor(std::move(shape)) {
    if (values.size() != impl_->value.size()) {
        throw DimensionError("tensor init: " + std::to_string(values.size()) +
                             " values for shape " + shape_str());
    }
    impl_->value = std::move(values);
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::row(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
    Tensor t(std::move(shape));
    std::fill(t.value().begin(), t.value().end(), v);
    return t;
}

Tensor Tensor::randn(std::vector<std::size_t> shape, Rng& rng, double stddev) {
    Tensor t(std::move(shape));
    for (double& x : t.value()) x = rng.normal(0.0, stddev);
    return t;
}

Tensor::Impl& Tensor::impl() const {
    if (!impl_) throw ValidationError("use of undefined tensor");
    return *impl_;
}

const std::vector<std::size_t>& Tensor::shape() const { return impl().shape; }
std::size_t Tensor::ndim() const { return impl().shape.size(); }
std::size_t Tensor::size() const { return impl().value.size(); }

std::size_t Tensor::rows() const {
    const auto& s = impl().shape;
    return s.size() == 2 ? s[0] : 1;
}

std::size_t Tensor::cols() const {
    const auto& s = impl().shape;
    return s.size() == 2 ? s[1] : s[0];
}

std::string Tensor::shape_str() const { return format_shape(impl().shape); }

std::vector<double>& Tensor::value() const { return impl().value; }

std::vector<double>& Tensor::grad() const {
    Impl& im = impl();
    if (im.grad.size() != im.value.size()) im.grad.assign(im.value.size(), 0.0);
    return im.grad;
}

double Tensor::item() const {
    if (size() != 1) throw DimensionError("item(): tensor " + shape_str() + " is not scalar");
    return impl().value[0];
}

double& Tensor::at(std::size_t i) const {
    if (i >= size()) throw IndexError("tensor index " + std::to_string(i) + " out of range");
    return impl().value[i];
}

double& Tensor::at(std::size_t r, std::size_t c) const {
    if (r >= rows() || c >= cols()) {
        throw IndexError("tensor index (" + std::to_string(r) + "," + std::to_string(c) +
                         ") out of range for " + shape_str());
    }
    return impl().value[r * cols() + c];
}

bool Tensor::requires_grad() const { return impl().requires_grad; }

void Tensor::set_requires_grad(bool on) const {
    Impl& im = impl();
    im.requires_grad = on;
    if (on && im.grad.size() != im.value.size()) im.grad.assign(im.value.size(), 0.0);
}

void Tensor::zero_grad() const {
    Impl& im = impl();
    im.grad.assign(im.value.size(), 0.0);
}

// ---------------------------------------------------------------------------
// Tape

Tensor Tape::make_output(std::vector<std::size_t> shape) {
    Tensor out(std::move(shape));
    if (track_) out.set_requires_grad(true);
    return out;
}

void Tape::record(std::function<void()> fn) {
    if (track_) nodes_.push_back(std::move(fn));
}

void Tape::backward(const Tensor& root, double seed) {
    if (!track_) throw ValidationError("backward on a non-tracking tape");
    if (root.size() != 1) {
        throw DimensionError("backward root must be scalar, got " + root.shape_str());
    }
    root.grad()[0] += seed;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
    require_same_shape("add", a, b);
    Tensor out = make_output(a.shape());
    const std::size_t n = a.size();
    const double* av = a.value().data();
    const double* bv = b.value().data();
    double* ov = out.value().data();
    for (std::size_t i = 0; i < n; ++i) ov[i] = av[i] + bv[i];
    record([a, b, out] {
        const auto& go = out.grad();
        if (a.requires_grad()) {
            auto& ga = a.grad();
            for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
        }
        if (b.requires_grad()) {
            auto& gb = b.grad();
            for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i];
        }
    });
    return out;
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
    require_same_shape("sub", a, b);
    Tensor out = make_output(a.shape());
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) out.value()[i] = a.value()[i] - b.value()[i];
    record([a, b, out] {
        const auto& go = out.grad();
        if (a.requires_grad()) {
            auto& ga = a.grad();
            for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
        }
        if (b.requires_grad()) {
            auto& gb = b.grad();
            for (std::size_t i = 0; i < go.size(); ++i) gb[i] -= go[i];
        }
    });
    return out;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
    require_same_shape("mul", a, b);
    Tensor out = make_output(a.shape());
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) out.value()[i] = a.value()[i] * b.value()[i];
    record([a, b, out] {
        const auto& go = out.grad();
        if (a.requires_grad()) {
            auto& ga = a.grad();
            const auto& bv = b.value();
            for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * bv[i];
        }
        if (b.requires_grad()) {
            auto& gb = b.grad();
            const auto& av = a.value();
            for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * av[i];
        }
    });
    return out;
}

Tensor Tape::scale(const Tensor& a, double c) {
    Tensor out = make_output(a.shape());
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) out.value()[i] = a.value()[i] * c;
    record([a, out, c] {
        if (!a.requires_grad()) return;
        const auto& go = out.grad();
        auto& ga = a.grad();
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * c;
    });
    return out;
}

Tensor Tape::add_row_vector(const Tensor& m, const Tensor& v) {
    if (v.ndim() != 1 || v.cols() != m.cols()) {
        throw DimensionError("add_row_vector: " + m.shape_str() + " vs " + v.shape_str());
    }
    Tensor out = make_output(m.shape());
    const std::size_t r = m.rows(), c = m.cols();
    const double* mv = m.value().data();
    const double* vv = v.value().data();
    double* ov = out.value().data();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) ov[i * c + j] = mv[i * c + j] + vv[j];
    record([m, v, out, r, c] {
        const auto& go = out.grad();
        if (m.requires_grad()) {
            auto& gm = m.grad();
            for (std::size_t i = 0; i < go.size(); ++i) gm[i] += go[i];
        }
        if (v.requires_grad()) {
            auto& gv = v.grad();
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) gv[j] += go[i * c + j];
        }
    });
    return out;
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.cols() != b.rows()) {
        throw DimensionError("matmul: inner dimensions disagree: " + a.shape_str() +
                             " vs " + b.shape_str());
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out = make_output({m, n});
    const double* av = a.value().data();
    const double* bv = b.value().data();
    double* ov = out.value().data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t l = 0; l < k; ++l) {
            const double x = av[i * k + l];
            const double* brow = bv + l * n;
            double* orow = ov + i * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += x * brow[j];
        }
    }
    record([a, b, out, m, k, n] {
        const auto& go = out.grad();
        if (a.requires_grad()) {
            // dA = dC * B^T
            auto& ga = a.grad();
            const auto& bv2 = b.value();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t l = 0; l < k; ++l) {
                    double acc = 0.0;
                    const double* grow = go.data() + i * n;
                    const double* brow = bv2.data() + l * n;
                    for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                    ga[i * k + l] += acc;
                }
            }
        }
        if (b.requires_grad()) {
            // dB = A^T * dC
            auto& gb = b.grad();
            const auto& av2 = a.value();
            for (std::size_t i = 0; i < m; ++i) {
                const double* grow = go.data() + i * n;
                for (std::size_t l = 0; l < k; ++l) {
                    const double x = av2[i * k + l];
                    double* gbrow = gb.data() + l * n;
                    for (std::size_t j = 0; j < n; ++j) gbrow[j] += x * grow[j];
                }
            }
        }
    });
    return out;
}

Tensor Tape::matmul_nt(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.cols() != b.cols()) {
        throw DimensionError("matmul_nt: inner dimensions disagree: " + a.shape_str() +
                             " vs " + b.shape_str() + " transposed");
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    Tensor out = make_output({m, n});
    const double* av = a.value().data();
    const double* bv = b.value().data();
    double* ov = out.value().data();
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = av + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = bv + j * k;
            double acc = 0.0;
            for (std::size_t l = 0; l < k; ++l) acc += arow[l] * brow[l];
            ov[i * n + j] = acc;
        }
    }
    record([a, b, out, m, k, n] {
        const auto& go = out.grad();
        if (a.requires_grad()) {
            // dA = dC * B
            auto& ga = a.grad();
            const auto& bv2 = b.value();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    const double g = go[i * n + j];
                    const double* brow = bv2.data() + j * k;
                    double* garow = ga.data() + i * k;
                    for (std::size_t l = 0; l < k; ++l) garow[l] += g * brow[l];
                }
            }
        }
        if (b.requires_grad()) {
            // dB = dC^T * A
            auto& gb = b.grad();
            const auto& av2 = a.value();
            for (std::size_t i = 0; i < m; ++i) {
                const double* arow = av2.data() + i * k;
                for (std::size_t j = 0; j < n; ++j) {
                    const double g = go[i * n + j];
                    double* gbrow = gb.data() + j * k;
                    for (std::size_t l = 0; l < k; ++l) gbrow[l] += g * arow[l];
                }
            }
        }
    });
    return out;
}

Tensor Tape::softmax_rows(const Tensor& x) {
    const std::size_t r = x.rows(), c = x.cols();
    Tensor out = make_output(x.shape());
    const double* xv = x.value().data();
    double* ov = out.value().data();
    for (std::size_t i = 0; i < r; ++i) {
        const double* row = xv + i * c;
        double* orow = ov + i * c;
        double mx = row[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            orow[j] = std::exp(row[j] - mx);
            sum += orow[j];
        }
        for (std::size_t j = 0; j < c; ++j) orow[j] /= sum;
    }
    record([x, out, r, c] {
        if (!x.requires_grad()) return;
        const auto& go = out.grad();
        const auto& ov2 = out.value();
        auto& gx = x.grad();
        for (std::size_t i = 0; i < r; ++i) {
            const double* y = ov2.data() + i * c;
            const double* gy = go.data() + i * c;
            double dot = 0.0;
            for (std::size_t j = 0; j < c; ++j) dot += gy[j] * y[j];
            double* gxrow = gx.data() + i * c;
            for (std::size_t j = 0; j < c; ++j) gxrow[j] += y[j] * (gy[j] - dot);
        }
    });
    return out;
}

Tensor Tape::cross_entropy(const Tensor& logits, const std::vector<std::size_t>& targets) {
    return cross_entropy(logits, targets, {});
}

Tensor Tape::cross_entropy(const Tensor& logits, const std::vector<std::size_t>& targets,
                           const std::vector<double>& weights) {
    if (logits.ndim() != 2) {
        throw DimensionError("cross_entropy: logits must be 2-D, got " + logits.shape_str());
    }
    const std::size_t m = logits.rows(), c = logits.cols();
    if (targets.size() != m) {
        throw DimensionError("cross_entropy: " + std::to_string(targets.size()) +
                             " targets for " + std::to_string(m) + " rows");
    }
    if (!weights.empty() && weights.size() != m) {
        throw DimensionError("cross_entropy: " + std::to_string(weights.size()) +
                             " weights for " + std::to_string(m) + " rows");
    }
    for (std::size_t t : targets) {
        if (t >= c) {
            throw IndexError("cross_entropy: target " + std::to_string(t) +
                             " out of range for " + std::to_string(c) + " classes");
        }
    }

    // Keep the row softmax for the backward pass.
    auto probs = std::make_shared<std::vector<double>>(m * c);
    const double* xv = logits.value().data();
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = xv + i * c;
        double* prow = probs->data() + i * c;
        double mx = row[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            prow[j] = std::exp(row[j] - mx);
            sum += prow[j];
        }
        for (std::size_t j = 0; j < c; ++j) prow[j] /= sum;
        const double w = weights.empty() ? 1.0 : weights[i];
        total += w * -(row[targets[i]] - mx - std::log(sum));
    }
    Tensor out = make_output({1});
    out.value()[0] = total / static_cast<double>(m);
    record([logits, out, probs, targets, weights, m, c] {
        if (!logits.requires_grad()) return;
        const double g = out.grad()[0] / static_cast<double>(m);
        auto& gx = logits.grad();
        for (std::size_t i = 0; i < m; ++i) {
            const double w = weights.empty() ? 1.0 : weights[i];
            const double* prow = probs->data() + i * c;
            double* gxrow = gx.data() + i * c;
            for (std::size_t j = 0; j < c; ++j) gxrow[j] += g * w * prow[j];
            gxrow[targets[i]] -= g * w;
        }
    });
    return out;
}

Tensor Tape::layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    if (eps <= 0.0) throw ValidationError("layer_norm: eps must be positive");
    const std::size_t r = x.rows(), c = x.cols();
    if (gain.size() != c || bias.size() != c) {
        throw DimensionError("layer_norm: gain " + gain.shape_str() + " / bias " +
                             bias.shape_str() + " vs row width " + std::to_string(c));
    }
    Tensor out = make_output(x.shape());
    // Cache per-row mean and inverse stddev for backward.
    auto mean = std::make_shared<std::vector<double>>(r);
    auto inv_std = std::make_shared<std::vector<double>>(r);
    const double* xv = x.value().data();
    const double* gv = gain.value().data();
    const double* bv = bias.value().data();
    double* ov = out.value().data();
    for (std::size_t i = 0; i < r; ++i) {
        const double* row = xv + i * c;
        double mu = 0.0;
        for (std::size_t j = 0; j < c; ++j) mu += row[j];
        mu /= static_cast<double>(c);
        double var = 0.0;
        for (std::size_t j = 0; j < c; ++j) var += (row[j] - mu) * (row[j] - mu);
        var /= static_cast<double>(c);
        const double is = 1.0 / std::sqrt(var + eps);
        (*mean)[i] = mu;
        (*inv_std)[i] = is;
        for (std::size_t j = 0; j < c; ++j) ov[i * c + j] = gv[j] * (row[j] - mu) * is + bv[j];
    }
    record([x, gain, bias, out, mean, inv_std, r, c] {
        const auto& go = out.grad();
        const auto& xv2 = x.value();
        const auto& gv2 = gain.value();
        for (std::size_t i = 0; i < r; ++i) {
            const double mu = (*mean)[i];
            const double is = (*inv_std)[i];
            const double* row = xv2.data() + i * c;
            const double* gy = go.data() + i * c;
            if (gain.requires_grad()) {
                auto& gg = gain.grad();
                for (std::size_t j = 0; j < c; ++j) gg[j] += gy[j] * (row[j] - mu) * is;
            }
            if (bias.requires_grad()) {
                auto& gb = bias.grad();
                for (std::size_t j = 0; j < c; ++j) gb[j] += gy[j];
            }
            if (x.requires_grad()) {
                // dxhat = gy * gain; dx = is * (dxhat - mean(dxhat) - xhat * mean(dxhat*xhat))
                double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
                for (std::size_t j = 0; j < c; ++j) {
                    const double xhat = (row[j] - mu) * is;
                    const double dxhat = gy[j] * gv2[j];
                    sum_dxhat += dxhat;
                    sum_dxhat_xhat += dxhat * xhat;
                }
                const double inv_c = 1.0 / static_cast<double>(c);
                auto& gx = x.grad();
                for (std::size_t j = 0; j < c; ++j) {
                    const double xhat = (row[j] - mu) * is;
                    const double dxhat = gy[j] * gv2[j];
                    gx[i * c + j] +=
                        is * (dxhat - sum_dxhat * inv_c - xhat * sum_dxhat_xhat * inv_c);
                }
            }
        }
    });
    return out;
}

Tensor Tape::gelu(const Tensor& x) {
    Tensor out = make_output(x.shape());
    const std::size_t n = x.size();
    const double* xv = x.value().data();
    double* ov = out.value().data();
    for (std::size_t i = 0; i < n; ++i) {
        const double v = xv[i];
        const double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
        ov[i] = 0.5 * v * (1.0 + t);
    }
    record([x, out, n] {
        if (!x.requires_grad()) return;
        const auto& go = out.grad();
        const auto& xv2 = x.value();
        auto& gx = x.grad();
        for (std::size_t i = 0; i < n; ++i) {
            const double v = xv2[i];
            const double u = kGeluC * (v + kGeluA * v * v * v);
            const double t = std::tanh(u);
            const double du = kGeluC * (1.0 + 3.0 * kGeluA * v * v);
            gx[i] += go[i] * (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du);
        }
    });
    return out;
}

Tensor Tape::kl_divergence(const Tensor& p, const Tensor& q) {
    require_same_shape("kl_divergence", p, q);
    const std::size_t r = p.rows(), c = p.cols();
    const double* pv = p.value().data();
    const double* qv = q.value().data();
    for (std::size_t i = 0; i < r; ++i) {
        double psum = 0.0, qsum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double pe = pv[i * c + j], qe = qv[i * c + j];
            if (pe < 0.0 || qe < 0.0) {
                throw ValidationError("kl_divergence: negative probability entry");
            }
            psum += pe;
            qsum += qe;
        }
        if (std::abs(psum - 1.0) > 1e-9 || std::abs(qsum - 1.0) > 1e-9) {
            throw ValidationError("kl_divergence: row " + std::to_string(i) +
                                  " not normalized (sums " + std::to_string(psum) + ", " +
                                  std::to_string(qsum) + ")");
        }
    }
    Tensor out = make_output({1});
    double total = 0.0;
    for (std::size_t i = 0; i < r * c; ++i) {
        const double pe = pv[i];
        if (pe <= 0.0) continue;  // 0 * ln(0/q) = 0
        const double qc = std::max(qv[i], kKlClampFloor);
        total += pe * std::log(pe / qc);
    }
    out.value()[0] = total / static_cast<double>(r);
    record([p, q, out, r, c] {
        const double g = out.grad()[0] / static_cast<double>(r);
        const auto& pv2 = p.value();
        const auto& qv2 = q.value();
        if (q.requires_grad()) {
            auto& gq = q.grad();
            for (std::size_t i = 0; i < r * c; ++i) {
                if (pv2[i] <= 0.0 || qv2[i] <= kKlClampFloor) continue;
                gq[i] += g * -(pv2[i] / qv2[i]);
            }
        }
        if (p.requires_grad()) {
            auto& gp = p.grad();
            for (std::size_t i = 0; i < r * c; ++i) {
                if (pv2[i] <= 0.0) continue;
                const double qc = std::max(qv2[i], kKlClampFloor);
                gp[i] += g * (std::log(pv2[i] / qc) + 1.0);
            }
        }
    });
    return out;
}

Tensor Tape::embed(const Tensor& table, const std::vector<std::size_t>& ids) {
    if (table.ndim() != 2) {
        throw DimensionError("embed: table must be 2-D, got " + table.shape_str());
    }
    const std::size_t v = table.rows(), d = table.cols(), t = ids.size();
    for (std::size_t id : ids) {
        if (id >= v) {
            throw IndexError("embed: id " + std::to_string(id) + " out of range for table " +
                             table.shape_str());
        }
    }
    Tensor out = make_output({t, d});
    const double* tv = table.value().data();
    double* ov = out.value().data();
    for (std::size_t i = 0; i < t; ++i)
        std::copy_n(tv + ids[i] * d, d, ov + i * d);
    record([table, out, ids, d, t] {
        if (!table.requires_grad()) return;
        const auto& go = out.grad();
        auto& gt = table.grad();
        for (std::size_t i = 0; i < t; ++i) {
            const double* grow = go.data() + i * d;
            double* trow = gt.data() + ids[i] * d;
            for (std::size_t j = 0; j < d; ++j) trow[j] += grow[j];
        }
    });
    return out;
}

Tensor Tape::bow_pool(const Tensor& table, const std::vector<std::size_t>& ids) {
    if (table.ndim() != 2) {
        throw DimensionError("bow_pool: table must be 2-D, got " + table.shape_str());
    }
    if (ids.empty()) throw ValidationError("bow_pool: empty id list");
    const std::size_t v = table.rows(), d = table.cols();
    // Accumulate by ascending id so the result is independent of id order.
    auto counts = std::make_shared<std::map<std::size_t, std::size_t>>();
    for (std::size_t id : ids) {
        if (id >= v) {
            throw IndexError("bow_pool: id " + std::to_string(id) + " out of range for table " +
                             table.shape_str());
        }
        ++(*counts)[id];
    }
    const double inv_n = 1.0 / static_cast<double>(ids.size());
    Tensor out = make_output({1, d});
    const double* tv = table.value().data();
    double* ov = out.value().data();
    for (const auto& [id, cnt] : *counts) {
        const double w = static_cast<double>(cnt) * inv_n;
        const double* trow = tv + id * d;
        for (std::size_t j = 0; j < d; ++j) ov[j] += w * trow[j];
    }
    record([table, out, counts, d, inv_n] {
        if (!table.requires_grad()) return;
        const auto& go = out.grad();
        auto& gt = table.grad();
        for (const auto& [id, cnt] : *counts) {
            const double w = static_cast<double>(cnt) * inv_n;
            double* trow = gt.data() + id * d;
            for (std::size_t j = 0; j < d; ++j) trow[j] += w * go[j];
        }
    });
    return out;
}

Tensor Tape::slice_rows(const Tensor& x, std::size_t start, std::size_t count) {
    if (x.ndim() != 2 || start + count > x.rows()) {
        throw DimensionError("slice_rows: rows [" + std::to_string(start) + ", " +
                             std::to_string(start + count) + ") out of " + x.shape_str());
    }
    const std::size_t c = x.cols();
    Tensor out = make_output({count, c});
    std::copy_n(x.value().data() + start * c, count * c, out.value().data());
    record([x, out, start, count, c] {
        if (!x.requires_grad()) return;
        const auto& go = out.grad();
        auto& gx = x.grad();
        for (std::size_t i = 0; i < count * c; ++i) gx[start * c + i] += go[i];
    });
    return out;
}

Tensor Tape::slice_cols(const Tensor& x, std::size_t start, std::size_t count) {
    if (x.ndim() != 2 || start + count > x.cols()) {
        throw DimensionError("slice_cols: cols [" + std::to_string(start) + ", " +
                             std::to_string(start + count) + ") out of " + x.shape_str());
    }
    const std::size_t r = x.rows(), c = x.cols();
    Tensor out = make_output({r, count});
    const double* xv = x.value().data();
    double* ov = out.value().data();
    for (std::size_t i = 0; i < r; ++i)
        std::copy_n(xv + i * c + start, count, ov + i * count);
    record([x, out, start, count, r, c] {
        if (!x.requires_grad()) return;
        const auto& go = out.grad();
        auto& gx = x.grad();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < count; ++j) gx[i * c + start + j] += go[i * count + j];
    });
    return out;
}

Tensor Tape::concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ValidationError("concat_rows: no parts");
    const std::size_t c = parts[0].cols();
    std::size_t total = 0;
    for (const Tensor& p : parts) {
        if (p.cols() != c) {
            throw DimensionError("concat_rows: column mismatch " + parts[0].shape_str() +
                                 " vs " + p.shape_str());
        }
        total += p.rows();
    }
    Tensor out = make_output({total, c});
    std::size_t off = 0;
    for (const Tensor& p : parts) {
        std::copy_n(p.value().data(), p.size(), out.value().data() + off);
        off += p.size();
    }
    record([parts, out] {
        const auto& go = out.grad();
        std::size_t off2 = 0;
        for (const Tensor& p : parts) {
            if (p.requires_grad()) {
                auto& gp = p.grad();
                for (std::size_t i = 0; i < p.size(); ++i) gp[i] += go[off2 + i];
            }
            off2 += p.size();
        }
    });
    return out;
}

Tensor Tape::concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ValidationError("concat_cols: no parts");
    const std::size_t r = parts[0].rows();
    std::size_t total = 0;
    for (const Tensor& p : parts) {
        if (p.rows() != r) {
            throw DimensionError("concat_cols: row mismatch " + parts[0].shape_str() + " vs " +
                                 p.shape_str());
        }
        total += p.cols();
    }
    Tensor out = make_output({r, total});
    double* ov = out.value().data();
    std::size_t off = 0;
    for (const Tensor& p : parts) {
        const std::size_t pc = p.cols();
        const double* pv = p.value().data();
        for (std::size_t i = 0; i < r; ++i)
            std::copy_n(pv + i * pc, pc, ov + i * total + off);
        off += pc;
    }
    record([parts, out, r, total] {
        const auto& go = out.grad();
        std::size_t off2 = 0;
        for (const Tensor& p : parts) {
            const std::size_t pc = p.cols();
            if (p.requires_grad()) {
                auto& gp = p.grad();
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < pc; ++j)
                        gp[i * pc + j] += go[i * total + off2 + j];
            }
            off2 += pc;
        }
    });
    return out;
}

Tensor Tape::mean_rows(const Tensor& x) {
    if (x.ndim() != 2) throw DimensionError("mean_rows: need 2-D, got " + x.shape_str());
    const std::size_t r = x.rows(), c = x.cols();
    Tensor out = make_output({1, c});
    const double inv_r = 1.0 / static_cast<double>(r);
    const double* xv = x.value().data();
    double* ov = out.value().data();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) ov[j] += xv[i * c + j] * inv_r;
    record([x, out, r, c, inv_r] {
        if (!x.requires_grad()) return;
        const auto& go = out.grad();
        auto& gx = x.grad();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += go[j] * inv_r;
    });
    return out;
}

Tensor Tape::sum_all(const Tensor& x) {
    Tensor out = make_output({1});
    double acc = 0.0;
    for (double v : x.value()) acc += v;
    out.value()[0] = acc;
    record([x, out] {
        if (!x.requires_grad()) return;
        const double g = out.grad()[0];
        auto& gx = x.grad();
        for (double& v : gx) v += g;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Gradient checking

double grad_check(const std::function<Tensor(Tape&, const Tensor&)>& f, const Tensor& x) {
    const bool was_tracked = x.requires_grad();
    x.set_requires_grad(true);
    x.zero_grad();

    Tape tape;
    Tensor y = f(tape, x);
    tape.backward(y);
    std::vector<double> analytic = x.grad();

    const double h = 1e-5;
    double max_err = 0.0;
    auto& xv = x.value();
    for (std::size_t i = 0; i < xv.size(); ++i) {
        const double orig = xv[i];
        xv[i] = orig + h;
        Tape fwd1(false);
        const double fp = f(fwd1, x).item();
        xv[i] = orig - h;
        Tape fwd2(false);
        const double fm = f(fwd2, x).item();
        xv[i] = orig;
        const double numeric = (fp - fm) / (2.0 * h);
        const double err = std::abs(analytic[i] - numeric) /
                           std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
        max_err = std::max(max_err, err);
    }
    x.set_requires_grad(was_tracked);
    return max_err;
}

double grad_check_params(const std::function<Tensor(Tape&)>& loss,
                         const std::vector<Tensor>& params) {
    for (const Tensor& p : params) {
        p.set_requires_grad(true);
        p.zero_grad();
    }
    Tape tape;
    Tensor y = loss(tape);
    tape.backward(y);

    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const Tensor& p : params) analytic.push_back(p.grad());

    const double h = 1e-5;
    double max_err = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& pv = params[pi].value();
        for (std::size_t i = 0; i < pv.size(); ++i) {
            const double orig = pv[i];
            pv[i] = orig + h;
            Tape fwd1(false);
            const double fp = loss(fwd1).item();
            pv[i] = orig - h;
            Tape fwd2(false);
            const double fm = loss(fwd2).item();
            pv[i] = orig;
            const double numeric = (fp - fm) / (2.0 * h);
            const double a = analytic[pi][i];
            const double err =
                std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
            max_err = std::max(max_err, err);
        }
    }
    return max_err;
}

}  // namespace medaug
