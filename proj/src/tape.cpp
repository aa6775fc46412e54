#include "ffr/tape.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace ffr {
namespace {

// C[M,N] += A[M,K] * B[K,N]
void matmul_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[K,N] += A^T[K,M] * B[M,N]  (A given as [M,K])
void matmul_at_b_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        const double* brow = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            double* crow = c + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[M,K] += A[M,N] * B^T[N,K]  (B given as [K,N])
void matmul_a_bt_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * n;
        double* crow = c + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double* brow = b + p * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
            crow[p] += acc;
        }
    }
}

double sigma(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

constexpr double kLeakySlope = 0.2;
constexpr double kHalfLog2Pi = 0.91893853320467274178; // 0.5 * log(2*pi)

} // namespace

std::size_t ParamStore::add(std::string name, Tensor init) {
    Entry e;
    e.name = std::move(name);
    e.grad = Tensor::zeros(init.shape());
    e.value = std::move(init);
    entries_.push_back(std::move(e));
    return entries_.size() - 1;
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
}

void ParamStore::zero_grads() {
    for (auto& e : entries_) {
        std::fill(e.grad.data(), e.grad.data() + e.grad.size(), 0.0);
    }
}

std::size_t ParamStore::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name == name) return i;
    }
    throw std::invalid_argument("param store: no parameter named '" + name + "'");
}

Var Tape::push(Tensor value, std::function<void()> back) {
    Node n;
    n.grad = Tensor::zeros(value.shape());
    n.value = std::move(value);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::check(Var v) const {
    if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size()) {
        throw std::logic_error("tape: invalid node handle");
    }
}

Var Tape::constant(Tensor v) { return push(std::move(v)); }

Var Tape::param(ParamStore& store, std::size_t i, bool trainable) {
    Var v = push(store.value(i));
    if (trainable) {
        bindings_.push_back(Binding{v.id, &store, i});
    }
    return v;
}

const Tensor& Tape::value(Var v) const {
    check(v);
    return nodes_[static_cast<std::size_t>(v.id)].value;
}

const Tensor& Tape::grad(Var v) const {
    check(v);
    return nodes_[static_cast<std::size_t>(v.id)].grad;
}

Var Tape::affine(Var x, Var w, Var c) {
    check(x);
    check(w);
    check(c);
    const Tensor& xv = val(x);
    const Tensor& wv = val(w);
    const Tensor& cv = val(c);
    if (xv.rank() != 2 || wv.rank() != 2 || cv.rank() != 1) {
        throw std::invalid_argument("affine: expected x[batch,in], w[in,out], c[out]; got x" + xv.shape_str() +
                                    " w" + wv.shape_str() + " c" + cv.shape_str());
    }
    if (xv.cols() != wv.rows() || wv.cols() != cv.shape()[0]) {
        throw std::invalid_argument("affine: dimension mismatch x" + xv.shape_str() + " w" + wv.shape_str() +
                                    " c" + cv.shape_str());
    }
    const std::size_t b = xv.rows(), in = xv.cols(), out = wv.cols();
    Tensor y({b, out});
    for (std::size_t r = 0; r < b; ++r) {
        double* yrow = y.data() + r * out;
        for (std::size_t j = 0; j < out; ++j) yrow[j] = cv[j];
    }
    matmul_acc(xv.data(), wv.data(), y.data(), b, in, out);
    return push(std::move(y), [this, x, w, c, y = Var{static_cast<int>(nodes_.size())}, b, in, out] {
        const Tensor& gy = grad_mut(y);
        const Tensor& xv2 = val(x);
        const Tensor& wv2 = val(w);
        // dX += gY * W^T ; dW += X^T * gY ; dc += column sums of gY
        matmul_a_bt_acc(gy.data(), wv2.data(), grad_mut(x).data(), b, out, in);
        matmul_at_b_acc(xv2.data(), gy.data(), grad_mut(w).data(), b, in, out);
        Tensor& gc = grad_mut(c);
        for (std::size_t r = 0; r < b; ++r) {
            const double* grow = gy.data() + r * out;
            for (std::size_t j = 0; j < out; ++j) gc[j] += grow[j];
        }
    });
}

Var Tape::activation(Var x, Activation kind) {
    check(x);
    const Tensor& xv = val(x);
    Tensor y(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) {
        const double v = xv[i];
        switch (kind) {
            case Activation::Relu: y[i] = v > 0.0 ? v : 0.0; break;
            case Activation::LeakyRelu: y[i] = v > 0.0 ? v : kLeakySlope * v; break;
            case Activation::Sigmoid: y[i] = sigma(v); break;
            case Activation::Tanh: y[i] = std::tanh(v); break;
        }
    }
    return push(std::move(y), [this, x, kind, y = Var{static_cast<int>(nodes_.size())}] {
        const Tensor& gy = grad_mut(y);
        const Tensor& yv = val(y);
        const Tensor& xv2 = val(x);
        Tensor& gx = grad_mut(x);
        for (std::size_t i = 0; i < xv2.size(); ++i) {
            double d = 0.0;
            switch (kind) {
                case Activation::Relu: d = xv2[i] > 0.0 ? 1.0 : 0.0; break;
                case Activation::LeakyRelu: d = xv2[i] > 0.0 ? 1.0 : kLeakySlope; break;
                case Activation::Sigmoid: d = yv[i] * (1.0 - yv[i]); break;
                case Activation::Tanh: d = 1.0 - yv[i] * yv[i]; break;
            }
            gx[i] += gy[i] * d;
        }
    });
}

Var Tape::add(Var a, Var b) {
    check(a);
    check(b);
    if (!val(a).same_shape(val(b))) {
        throw std::invalid_argument("add: shape mismatch " + val(a).shape_str() + " vs " + val(b).shape_str());
    }
    Tensor y(val(a).shape());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = val(a)[i] + val(b)[i];
    return push(std::move(y), [this, a, b, y = Var{static_cast<int>(nodes_.size())}] {
        const Tensor& gy = grad_mut(y);
        Tensor& ga = grad_mut(a);
        Tensor& gb = grad_mut(b);
        for (std::size_t i = 0; i < gy.size(); ++i) {
            ga[i] += gy[i];
            gb[i] += gy[i];
        }
    });
}

Var Tape::sub(Var a, Var b) {
    check(a);
    check(b);
    if (!val(a).same_shape(val(b))) {
        throw std::invalid_argument("sub: shape mismatch " + val(a).shape_str() + " vs " + val(b).shape_str());
    }
    Tensor y(val(a).shape());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = val(a)[i] - val(b)[i];
    return push(std::move(y), [this, a, b, y = Var{static_cast<int>(nodes_.size())}] {
        const Tensor& gy = grad_mut(y);
        Tensor& ga = grad_mut(a);
        Tensor& gb = grad_mut(b);
        for (std::size_t i = 0; i < gy.size(); ++i) {
            ga[i] += gy[i];
            gb[i] -= gy[i];
        }
    });
}

Var Tape::mul(Var a, Var b) {
    check(a);
    check(b);
    if (!val(a).same_shape(val(b))) {
        throw std::invalid_argument("mul: shape mismatch " + val(a).shape_str() + " vs " + val(b).shape_str());
    }
    Tensor y(val(a).shape());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = val(a)[i] * val(b)[i];
    return push(std::move(y), [this, a, b, y = Var{static_cast<int>(nodes_.size())}] {
        const Tensor& gy = grad_mut(y);
        const Tensor& av = val(a);
        const Tensor& bv = val(b);
        Tensor& ga = grad_mut(a);
        Tensor& gb = grad_mut(b);
        for (std::size_t i = 0; i < gy.size(); ++i) {
            ga[i] += gy[i] * bv[i];
            gb[i] += gy[i] * av[i];
        }
    });
}

Var Tape::scale(Var a, double s) {
    check(a);
    Tensor y(val(a).shape());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = s * val(a)[i];
    return push(std::move(y), [this, a, s, y = Var{static_cast<int>(nodes_.size())}] {
        const Tensor& gy = grad_mut(y);
        Tensor& ga = grad_mut(a);
        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += s * gy[i];
    });
}

Var Tape::concat_cols(Var a, Var b) {
    check(a);
    check(b);
    const Tensor& av = val(a);
    const Tensor& bv = val(b);
    if (av.rank() != 2 || bv.rank() != 2 || av.rows() != bv.rows()) {
        throw std::invalid_argument("concat_cols: incompatible " + av.shape_str() + " and " + bv.shape_str());
    }
    const std::size_t rows = av.rows(), ca = av.cols(), cb = bv.cols();
    Tensor y({rows, ca + cb});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < ca; ++j) y.at(r, j) = av.at(r, j);
        for (std::size_t j = 0; j < cb; ++j) y.at(r, ca + j) = bv.at(r, j);
    }
    return push(std::move(y), [this, a, b, y = Var{static_cast<int>(nodes_.size())}, rows, ca, cb] {
        const Tensor& gy = grad_mut(y);
        Tensor& ga = grad_mut(a);
        Tensor& gb = grad_mut(b);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < ca; ++j) ga.at(r, j) += gy.at(r, j);
            for (std::size_t j = 0; j < cb; ++j) gb.at(r, j) += gy.at(r, ca + j);
        }
    });
}

Var Tape::clamp(Var x, double lo, double hi) {
    check(x);
    const Tensor& xv = val(x);
    Tensor y(xv.shape());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::min(hi, std::max(lo, xv[i]));
    return push(std::move(y), [this, x, lo, hi, y = Var{static_cast<int>(nodes_.size())}] {
        const Tensor& gy = grad_mut(y);
        const Tensor& xv2 = val(x);
        Tensor& gx = grad_mut(x);
        for (std::size_t i = 0; i < gy.size(); ++i) {
            if (xv2[i] >= lo && xv2[i] <= hi) gx[i] += gy[i];
        }
    });
}

Var Tape::mean_all(Var x) {
    check(x);
    const Tensor& xv = val(x);
    if (xv.size() == 0) throw std::invalid_argument("mean_all: empty tensor");
    double s = 0.0;
    for (std::size_t i = 0; i < xv.size(); ++i) s += xv[i];
    const double inv = 1.0 / static_cast<double>(xv.size());
    return push(Tensor::scalar(s * inv), [this, x, inv, y = Var{static_cast<int>(nodes_.size())}] {
        const double g = grad_mut(y)[0] * inv;
        Tensor& gx = grad_mut(x);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
    });
}

Var Tape::gaussian_kl_std_normal(Var mu, Var logvar) {
    check(mu);
    check(logvar);
    const Tensor& m = val(mu);
    const Tensor& lv = val(logvar);
    if (m.rank() != 2 || !m.same_shape(lv)) {
        throw std::invalid_argument("gaussian_kl_std_normal: shape mismatch " + m.shape_str() + " vs " +
                                    lv.shape_str());
    }
    const std::size_t rows = m.rows(), cols = m.cols();
    Tensor y({rows});
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            const double mv = m.at(r, j), l = lv.at(r, j);
            s += mv * mv + std::exp(l) - 1.0 - l;
        }
        y[r] = 0.5 * s;
    }
    return push(std::move(y), [this, mu, logvar, y = Var{static_cast<int>(nodes_.size())}, rows, cols] {
        const Tensor& gy = grad_mut(y);
        const Tensor& m2 = val(mu);
        const Tensor& lv2 = val(logvar);
        Tensor& gm = grad_mut(mu);
        Tensor& gl = grad_mut(logvar);
        for (std::size_t r = 0; r < rows; ++r) {
            const double g = gy[r];
            for (std::size_t j = 0; j < cols; ++j) {
                gm.at(r, j) += g * m2.at(r, j);
                gl.at(r, j) += g * 0.5 * (std::exp(lv2.at(r, j)) - 1.0);
            }
        }
    });
}

Var Tape::reparam_sample(Var mu, Var logvar, Var eps) {
    check(mu);
    check(logvar);
    check(eps);
    const Tensor& m = val(mu);
    if (!m.same_shape(val(logvar)) || !m.same_shape(val(eps))) {
        throw std::invalid_argument("reparam_sample: shape mismatch " + m.shape_str() + " / " +
                                    val(logvar).shape_str() + " / " + val(eps).shape_str());
    }
    Tensor y(m.shape());
    const Tensor& lv = val(logvar);
    const Tensor& e = val(eps);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = m[i] + std::exp(0.5 * lv[i]) * e[i];
    return push(std::move(y), [this, mu, logvar, eps, y = Var{static_cast<int>(nodes_.size())}] {
        const Tensor& gy = grad_mut(y);
        const Tensor& lv2 = val(logvar);
        const Tensor& e2 = val(eps);
        Tensor& gm = grad_mut(mu);
        Tensor& gl = grad_mut(logvar);
        for (std::size_t i = 0; i < gy.size(); ++i) {
            gm[i] += gy[i];
            gl[i] += gy[i] * 0.5 * std::exp(0.5 * lv2[i]) * e2[i];
        }
    });
}

Var Tape::bernoulli_ce_with_logits(Var logits, Var targets) {
    check(logits);
    check(targets);
    const Tensor& l = val(logits);
    const Tensor& t = val(targets);
    if (l.rank() != 2 || !l.same_shape(t)) {
        throw std::invalid_argument("bernoulli_ce_with_logits: shape mismatch " + l.shape_str() + " vs " +
                                    t.shape_str());
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(t[i] >= 0.0 && t[i] <= 1.0)) {
            throw std::invalid_argument("bernoulli_ce_with_logits: target outside [0,1] at flat index " +
                                        std::to_string(i));
        }
    }
    const std::size_t rows = l.rows(), cols = l.cols();
    Tensor y({rows});
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            const double lv = l.at(r, j), tv = t.at(r, j);
            s += std::max(lv, 0.0) - lv * tv + std::log1p(std::exp(-std::abs(lv)));
        }
        y[r] = s;
    }
    // Targets are constants; only the logits receive gradient.
    return push(std::move(y), [this, logits, targets, y = Var{static_cast<int>(nodes_.size())}, rows, cols] {
        const Tensor& gy = grad_mut(y);
        const Tensor& l2 = val(logits);
        const Tensor& t2 = val(targets);
        Tensor& gl = grad_mut(logits);
        for (std::size_t r = 0; r < rows; ++r) {
            const double g = gy[r];
            for (std::size_t j = 0; j < cols; ++j) {
                gl.at(r, j) += g * (sigma(l2.at(r, j)) - t2.at(r, j));
            }
        }
    });
}

Var Tape::gaussian_nll(Var mean, Var targets) {
    check(mean);
    check(targets);
    const Tensor& m = val(mean);
    const Tensor& t = val(targets);
    if (m.rank() != 2 || !m.same_shape(t)) {
        throw std::invalid_argument("gaussian_nll: shape mismatch " + m.shape_str() + " vs " + t.shape_str());
    }
    const std::size_t rows = m.rows(), cols = m.cols();
    Tensor y({rows});
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            const double d = m.at(r, j) - t.at(r, j);
            s += 0.5 * d * d;
        }
        y[r] = s + kHalfLog2Pi * static_cast<double>(cols);
    }
    return push(std::move(y), [this, mean, targets, y = Var{static_cast<int>(nodes_.size())}, rows, cols] {
        const Tensor& gy = grad_mut(y);
        const Tensor& m2 = val(mean);
        const Tensor& t2 = val(targets);
        Tensor& gm = grad_mut(mean);
        for (std::size_t r = 0; r < rows; ++r) {
            const double g = gy[r];
            for (std::size_t j = 0; j < cols; ++j) gm.at(r, j) += g * (m2.at(r, j) - t2.at(r, j));
        }
    });
}

Var Tape::standardize_cols(Var x, double eps) {
    check(x);
    const Tensor& xv = val(x);
    if (xv.rank() != 2 || xv.rows() == 0) {
        throw std::invalid_argument("standardize_cols: expected a non-empty rank-2 tensor");
    }
    const std::size_t rows = xv.rows(), cols = xv.cols();
    std::vector<double> mean(cols, 0.0), inv_sd(cols, 0.0);
    for (std::size_t c = 0; c < cols; ++c) {
        double s = 0.0, s2 = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            s += xv.at(r, c);
            s2 += xv.at(r, c) * xv.at(r, c);
        }
        mean[c] = s / static_cast<double>(rows);
        const double var = std::max(0.0, s2 / static_cast<double>(rows) - mean[c] * mean[c]);
        inv_sd[c] = 1.0 / std::sqrt(var + eps);
    }
    Tensor y({rows, cols});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) y.at(r, c) = (xv.at(r, c) - mean[c]) * inv_sd[c];
    }
    return push(std::move(y),
                [this, x, inv_sd = std::move(inv_sd), y = Var{static_cast<int>(nodes_.size())}, rows, cols] {
                    const Tensor& gy = grad_mut(y);
                    const Tensor& yv = val(y);
                    Tensor& gx = grad_mut(x);
                    const double inv_n = 1.0 / static_cast<double>(rows);
                    for (std::size_t c = 0; c < cols; ++c) {
                        double g_mean = 0.0, gy_dot_y = 0.0;
                        for (std::size_t r = 0; r < rows; ++r) {
                            g_mean += gy.at(r, c);
                            gy_dot_y += gy.at(r, c) * yv.at(r, c);
                        }
                        g_mean *= inv_n;
                        gy_dot_y *= inv_n;
                        for (std::size_t r = 0; r < rows; ++r) {
                            gx.at(r, c) +=
                                inv_sd[c] * (gy.at(r, c) - g_mean - yv.at(r, c) * gy_dot_y);
                        }
                    }
                });
}

Var Tape::softmax_ce_two_class(Var logits, std::vector<int> labels) {
    check(logits);
    const Tensor& l = val(logits);
    if (l.rank() != 2 || l.cols() != 2) {
        throw std::invalid_argument("softmax_ce_two_class: expected [batch,2] logits, got " + l.shape_str());
    }
    if (labels.size() != l.rows()) {
        throw std::invalid_argument("softmax_ce_two_class: " + std::to_string(labels.size()) + " labels for " +
                                    std::to_string(l.rows()) + " rows");
    }
    for (int lab : labels) {
        if (lab != 0 && lab != 1) throw std::invalid_argument("softmax_ce_two_class: label outside {0,1}");
    }
    const std::size_t rows = l.rows();
    Tensor y({rows});
    for (std::size_t r = 0; r < rows; ++r) {
        const double l0 = l.at(r, 0), l1 = l.at(r, 1);
        const double m = std::max(l0, l1);
        const double lse = m + std::log(std::exp(l0 - m) + std::exp(l1 - m));
        y[r] = lse - l.at(r, static_cast<std::size_t>(labels[r]));
    }
    return push(std::move(y),
                [this, logits, labels = std::move(labels), y = Var{static_cast<int>(nodes_.size())}, rows] {
                    const Tensor& gy = grad_mut(y);
                    const Tensor& l2 = val(logits);
                    Tensor& gl = grad_mut(logits);
                    for (std::size_t r = 0; r < rows; ++r) {
                        const double l0 = l2.at(r, 0), l1 = l2.at(r, 1);
                        const double m = std::max(l0, l1);
                        const double e0 = std::exp(l0 - m), e1 = std::exp(l1 - m);
                        const double z = e0 + e1;
                        const double p0 = e0 / z, p1 = e1 / z;
                        const double g = gy[r];
                        gl.at(r, 0) += g * (p0 - (labels[r] == 0 ? 1.0 : 0.0));
                        gl.at(r, 1) += g * (p1 - (labels[r] == 1 ? 1.0 : 0.0));
                    }
                });
}

Var Tape::mean_col_diff(Var logits) {
    check(logits);
    const Tensor& l = val(logits);
    if (l.rank() != 2 || l.cols() != 2) {
        throw std::invalid_argument("mean_col_diff: expected [batch,2] logits, got " + l.shape_str());
    }
    const std::size_t rows = l.rows();
    double s = 0.0;
    for (std::size_t r = 0; r < rows; ++r) s += l.at(r, 0) - l.at(r, 1);
    const double inv = 1.0 / static_cast<double>(rows);
    return push(Tensor::scalar(s * inv), [this, logits, inv, y = Var{static_cast<int>(nodes_.size())}, rows] {
        const double g = grad_mut(y)[0] * inv;
        Tensor& gl = grad_mut(logits);
        for (std::size_t r = 0; r < rows; ++r) {
            gl.at(r, 0) += g;
            gl.at(r, 1) -= g;
        }
    });
}

void Tape::backward(Var loss) {
    check(loss);
    if (val(loss).size() != 1) {
        throw std::invalid_argument("backward: loss must be scalar, got shape " + val(loss).shape_str());
    }
    std::set<ParamStore*> stores;
    for (const auto& b : bindings_) stores.insert(b.store);
    for (ParamStore* s : stores) s->zero_grads();

    for (auto& n : nodes_) {
        std::fill(n.grad.data(), n.grad.data() + n.grad.size(), 0.0);
    }
    nodes_[static_cast<std::size_t>(loss.id)].grad[0] = 1.0;
    for (int i = loss.id; i >= 0; --i) {
        auto& n = nodes_[static_cast<std::size_t>(i)];
        if (n.back) n.back();
    }
    for (const auto& b : bindings_) {
        if (b.node > loss.id) continue;
        const Tensor& g = nodes_[static_cast<std::size_t>(b.node)].grad;
        Tensor& dst = b.store->grad(b.index);
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    }
}

double finite_diff_check(ParamStore& store, const std::function<Var(Tape&)>& build, double h) {
    // Analytic gradients.
    {
        Tape tape;
        Var loss = build(tape);
        tape.backward(loss);
    }
    std::vector<Tensor> analytic;
    analytic.reserve(store.count());
    for (std::size_t p = 0; p < store.count(); ++p) analytic.push_back(store.grad(p));

    const auto eval = [&]() {
        Tape tape;
        Var loss = build(tape);
        return tape.value(loss).item();
    };

    double worst = 0.0;
    for (std::size_t p = 0; p < store.count(); ++p) {
        Tensor& value = store.value(p);
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double keep = value[i];
            value[i] = keep + h;
            const double fp = eval();
            value[i] = keep - h;
            const double fm = eval();
            value[i] = keep;
            const double numeric = (fp - fm) / (2.0 * h);
            const double a = analytic[p][i];
            const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

} // namespace ffr
