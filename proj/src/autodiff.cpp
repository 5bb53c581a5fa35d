#include "csmil/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "csmil/common.hpp"

namespace csmil {

Tensor::Tensor(size_t rows, size_t cols, bool requires_grad) {
    p_ = std::make_shared<Impl>();
    p_->rows = rows;
    p_->cols = cols;
    p_->v.assign(rows * cols, 0.0);
    p_->g.assign(rows * cols, 0.0);
    p_->requires_grad = requires_grad;
}

Tensor::Tensor(size_t rows, size_t cols, std::vector<double> data, bool requires_grad) {
    if (data.size() != rows * cols)
        throw NumericError("tensor: data length " + std::to_string(data.size()) +
                           " does not match shape [" + std::to_string(rows) + "x" +
                           std::to_string(cols) + "]");
    p_ = std::make_shared<Impl>();
    p_->rows = rows;
    p_->cols = cols;
    p_->v = std::move(data);
    p_->g.assign(p_->v.size(), 0.0);
    p_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return Tensor(1, 1, std::vector<double>{v}, requires_grad);
}

Tensor Tensor::row(std::vector<double> data, bool requires_grad) {
    size_t n = data.size();
    return Tensor(1, n, std::move(data), requires_grad);
}

std::string Tensor::shape_str() const {
    return "[" + std::to_string(rows()) + "x" + std::to_string(cols()) + "]";
}

double Tensor::scalar_value() const {
    if (size() != 1) throw NumericError("tensor: scalar_value on shape " + shape_str());
    return p_->v[0];
}

Tensor Tensor::clone() const {
    Tensor t(rows(), cols(), p_->v, p_->requires_grad);
    t.p_->g = p_->g;
    return t;
}

Tensor Tape::make_output(size_t rows, size_t cols) {
    Tensor t(rows, cols, false);
    outputs_.push_back(t.id());
    return t;
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows())
        throw NumericError("matmul: inner dimensions disagree " + a.shape_str() + " * " +
                           b.shape_str());
    size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor c = make_output(m, n);
    const double* av = a.values().data();
    const double* bv = b.values().data();
    double* cv = c.values().data();
    for (size_t i = 0; i < m; ++i)
        for (size_t p = 0; p < k; ++p) {
            double aip = av[i * k + p];
            if (aip == 0.0) continue;
            const double* brow = bv + p * n;
            double* crow = cv + i * n;
            for (size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    record([a, b, c, m, k, n]() mutable {
        const double* dc = c.grad().data();
        const double* av2 = a.values().data();
        const double* bv2 = b.values().data();
        double* da = a.grad().data();
        double* db = b.grad().data();
        // dA += dC * B^T
        for (size_t i = 0; i < m; ++i)
            for (size_t p = 0; p < k; ++p) {
                double s = 0.0;
                const double* dcrow = dc + i * n;
                const double* brow = bv2 + p * n;
                for (size_t j = 0; j < n; ++j) s += dcrow[j] * brow[j];
                da[i * k + p] += s;
            }
        // dB += A^T * dC
        for (size_t p = 0; p < k; ++p)
            for (size_t i = 0; i < m; ++i) {
                double aip = av2[i * k + p];
                if (aip == 0.0) continue;
                const double* dcrow = dc + i * n;
                double* dbrow = db + p * n;
                for (size_t j = 0; j < n; ++j) dbrow[j] += aip * dcrow[j];
            }
    });
    return c;
}

Tensor Tape::transpose(const Tensor& a) {
    size_t m = a.rows(), n = a.cols();
    Tensor c = make_output(n, m);
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < n; ++j) c.at(j, i) = a.at(i, j);
    record([a, c, m, n]() mutable {
        for (size_t i = 0; i < m; ++i)
            for (size_t j = 0; j < n; ++j) a.grad()[i * n + j] += c.grad()[j * m + i];
    });
    return c;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
    size_t m = a.rows(), n = a.cols();
    bool bias = (b.rows() == 1 && m > 1);
    if (!bias && (b.rows() != m || b.cols() != n))
        throw NumericError("add: shape mismatch " + a.shape_str() + " + " + b.shape_str());
    if (bias && b.cols() != n)
        throw NumericError("add: bias width mismatch " + a.shape_str() + " + " + b.shape_str());
    Tensor c = make_output(m, n);
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < n; ++j)
            c.at(i, j) = a.at(i, j) + (bias ? b.at(0, j) : b.at(i, j));
    record([a, b, c, m, n, bias]() mutable {
        for (size_t i = 0; i < m * n; ++i) a.grad()[i] += c.grad()[i];
        if (bias) {
            for (size_t i = 0; i < m; ++i)
                for (size_t j = 0; j < n; ++j) b.grad()[j] += c.grad()[i * n + j];
        } else {
            for (size_t i = 0; i < m * n; ++i) b.grad()[i] += c.grad()[i];
        }
    });
    return c;
}

Tensor Tape::relu(const Tensor& a) {
    Tensor c = make_output(a.rows(), a.cols());
    for (size_t i = 0; i < a.size(); ++i) c.values()[i] = a.values()[i] > 0 ? a.values()[i] : 0.0;
    record([a, c]() mutable {
        for (size_t i = 0; i < a.size(); ++i)
            if (a.values()[i] > 0) a.grad()[i] += c.grad()[i];
    });
    return c;
}

Tensor Tape::tanh(const Tensor& a) {
    Tensor c = make_output(a.rows(), a.cols());
    for (size_t i = 0; i < a.size(); ++i) c.values()[i] = std::tanh(a.values()[i]);
    record([a, c]() mutable {
        for (size_t i = 0; i < a.size(); ++i)
            a.grad()[i] += c.grad()[i] * (1.0 - c.values()[i] * c.values()[i]);
    });
    return c;
}

Tensor Tape::sigmoid(const Tensor& a) {
    Tensor c = make_output(a.rows(), a.cols());
    for (size_t i = 0; i < a.size(); ++i) c.values()[i] = 1.0 / (1.0 + std::exp(-a.values()[i]));
    record([a, c]() mutable {
        for (size_t i = 0; i < a.size(); ++i)
            a.grad()[i] += c.grad()[i] * c.values()[i] * (1.0 - c.values()[i]);
    });
    return c;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw NumericError("mul: shape mismatch " + a.shape_str() + " * " + b.shape_str());
    Tensor c = make_output(a.rows(), a.cols());
    for (size_t i = 0; i < a.size(); ++i) c.values()[i] = a.values()[i] * b.values()[i];
    record([a, b, c]() mutable {
        for (size_t i = 0; i < a.size(); ++i) {
            a.grad()[i] += c.grad()[i] * b.values()[i];
            b.grad()[i] += c.grad()[i] * a.values()[i];
        }
    });
    return c;
}

Tensor Tape::scale(const Tensor& a, double k) {
    Tensor c = make_output(a.rows(), a.cols());
    for (size_t i = 0; i < a.size(); ++i) c.values()[i] = k * a.values()[i];
    record([a, c, k]() mutable {
        for (size_t i = 0; i < a.size(); ++i) a.grad()[i] += k * c.grad()[i];
    });
    return c;
}

Tensor Tape::softmax_rows(const Tensor& a) {
    size_t m = a.rows(), n = a.cols();
    if (n < 1) throw NumericError("softmax: empty row");
    Tensor c = make_output(m, n);
    for (size_t i = 0; i < m; ++i) {
        double mx = a.at(i, 0);
        for (size_t j = 1; j < n; ++j) mx = std::max(mx, a.at(i, j));
        double z = 0.0;
        for (size_t j = 0; j < n; ++j) {
            double e = std::exp(a.at(i, j) - mx);
            c.at(i, j) = e;
            z += e;
        }
        for (size_t j = 0; j < n; ++j) c.at(i, j) /= z;
    }
    record([a, c, m, n]() mutable {
        for (size_t i = 0; i < m; ++i) {
            double dot = 0.0;
            for (size_t j = 0; j < n; ++j) dot += c.grad()[i * n + j] * c.values()[i * n + j];
            for (size_t j = 0; j < n; ++j)
                a.grad()[i * n + j] += c.values()[i * n + j] * (c.grad()[i * n + j] - dot);
        }
    });
    return c;
}

Tensor Tape::log_clamped(const Tensor& a, double floor) {
    Tensor c = make_output(a.rows(), a.cols());
    for (size_t i = 0; i < a.size(); ++i) c.values()[i] = std::log(std::max(a.values()[i], floor));
    record([a, c, floor]() mutable {
        for (size_t i = 0; i < a.size(); ++i)
            if (a.values()[i] > floor) a.grad()[i] += c.grad()[i] / a.values()[i];
    });
    return c;
}

Tensor Tape::concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw NumericError("concat: no inputs");
    size_t m = parts[0].rows(), n = 0;
    for (const Tensor& p : parts) {
        if (p.rows() != m)
            throw NumericError("concat: row mismatch " + parts[0].shape_str() + " vs " +
                               p.shape_str());
        n += p.cols();
    }
    Tensor c = make_output(m, n);
    size_t off = 0;
    for (const Tensor& p : parts) {
        for (size_t i = 0; i < m; ++i)
            for (size_t j = 0; j < p.cols(); ++j) c.at(i, off + j) = p.at(i, j);
        off += p.cols();
    }
    record([parts, c, m, n]() mutable {
        size_t o = 0;
        for (Tensor& p : const_cast<std::vector<Tensor>&>(parts)) {
            for (size_t i = 0; i < m; ++i)
                for (size_t j = 0; j < p.cols(); ++j)
                    p.grad()[i * p.cols() + j] += c.grad()[i * n + o + j];
            o += p.cols();
        }
    });
    return c;
}

Tensor Tape::slice_col(const Tensor& a, size_t j) {
    if (j >= a.cols())
        throw NumericError("slice_col: column " + std::to_string(j) + " out of range for " +
                           a.shape_str());
    size_t m = a.rows(), n = a.cols();
    Tensor c = make_output(m, 1);
    for (size_t i = 0; i < m; ++i) c.values()[i] = a.at(i, j);
    record([a, c, m, n, j]() mutable {
        for (size_t i = 0; i < m; ++i) a.grad()[i * n + j] += c.grad()[i];
    });
    return c;
}

Tensor Tape::colwise_scale(const Tensor& x, const Tensor& s) {
    if (s.cols() != 1 || s.rows() != x.rows())
        throw NumericError("colwise_scale: want column " + std::to_string(x.rows()) + "x1, got " +
                           s.shape_str() + " for " + x.shape_str());
    size_t m = x.rows(), n = x.cols();
    Tensor c = make_output(m, n);
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < n; ++j) c.at(i, j) = x.at(i, j) * s.at(i, 0);
    record([x, s, c, m, n]() mutable {
        for (size_t i = 0; i < m; ++i) {
            double acc = 0.0;
            for (size_t j = 0; j < n; ++j) {
                x.grad()[i * n + j] += c.grad()[i * n + j] * s.values()[i];
                acc += c.grad()[i * n + j] * x.values()[i * n + j];
            }
            s.grad()[i] += acc;
        }
    });
    return c;
}

Tensor Tape::sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.values()) s += v;
    Tensor c = make_output(1, 1);
    c.values()[0] = s;
    record([a, c]() mutable {
        for (size_t i = 0; i < a.size(); ++i) a.grad()[i] += c.grad()[0];
    });
    return c;
}

Tensor Tape::mean(const Tensor& a) {
    double s = 0.0;
    for (double v : a.values()) s += v;
    size_t n = a.size();
    Tensor c = make_output(1, 1);
    c.values()[0] = s / double(n);
    record([a, c, n]() mutable {
        for (size_t i = 0; i < a.size(); ++i) a.grad()[i] += c.grad()[0] / double(n);
    });
    return c;
}

Tensor Tape::pick(const Tensor& a, size_t i, size_t j) {
    if (i >= a.rows() || j >= a.cols())
        throw NumericError("pick: index (" + std::to_string(i) + "," + std::to_string(j) +
                           ") out of range for " + a.shape_str());
    Tensor c = make_output(1, 1);
    c.values()[0] = a.at(i, j);
    size_t idx = i * a.cols() + j;
    record([a, c, idx]() mutable { a.grad()[idx] += c.grad()[0]; });
    return c;
}

void Tape::backward(const Tensor& loss) {
    if (loss.size() != 1) throw NumericError("backward: loss is not scalar, shape " + loss.shape_str());
    if (std::find(outputs_.begin(), outputs_.end(), loss.id()) == outputs_.end())
        throw NumericError("backward: loss is detached from this tape");
    if (backward_done_) throw NumericError("backward: called twice without reset");
    backward_done_ = true;
    const_cast<Tensor&>(loss).grad()[0] = 1.0;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
}

void Tape::reset() {
    ops_.clear();
    outputs_.clear();
    backward_done_ = false;
}

double finite_diff_check(const std::vector<Tensor>& params,
                         const std::function<double()>& loss_fn, double eps) {
    if (eps <= 0) throw NumericError("finite_diff_check: eps must be > 0");
    for (const Tensor& p : params) const_cast<Tensor&>(p).zero_grad();
    loss_fn();
    std::vector<std::vector<double>> analytic;
    for (const Tensor& p : params) analytic.push_back(p.grad());

    double worst = 0.0;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Tensor p = params[pi];
        for (size_t i = 0; i < p.size(); ++i) {
            double orig = p.values()[i];
            p.values()[i] = orig + eps;
            for (const Tensor& q : params) const_cast<Tensor&>(q).zero_grad();
            double up = loss_fn();
            p.values()[i] = orig - eps;
            for (const Tensor& q : params) const_cast<Tensor&>(q).zero_grad();
            double dn = loss_fn();
            p.values()[i] = orig;
            double numeric = (up - dn) / (2.0 * eps);
            double a = analytic[pi][i];
            double err = std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), 1e-8});
            worst = std::max(worst, err);
        }
    }
    // leave analytic grads in place for callers that want them
    for (size_t pi = 0; pi < params.size(); ++pi)
        const_cast<Tensor&>(params[pi]).grad() = analytic[pi];
    return worst;
}

} // namespace csmil
