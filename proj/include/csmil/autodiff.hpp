#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace csmil {

// Dense 2-D tensor of f64 with shared-handle semantics. Copies alias the same
// storage, which is what the tape needs; use clone() for a deep copy.
class Tensor {
  public:
    Tensor() = default;
    Tensor(size_t rows, size_t cols, bool requires_grad = false);
    Tensor(size_t rows, size_t cols, std::vector<double> data, bool requires_grad = false);

    static Tensor scalar(double v, bool requires_grad = false);
    static Tensor row(std::vector<double> data, bool requires_grad = false);

    bool defined() const { return p_ != nullptr; }
    size_t rows() const { return p_->rows; }
    size_t cols() const { return p_->cols; }
    size_t size() const { return p_->v.size(); }
    std::string shape_str() const;

    // Handle semantics: accessors are const but the storage is shared and
    // mutable, like a shared_ptr target.
    double& at(size_t i, size_t j) const { return p_->v[i * p_->cols + j]; }
    std::vector<double>& values() const { return p_->v; }
    std::vector<double>& grad() const { return p_->g; }

    bool requires_grad() const { return p_->requires_grad; }
    void zero_grad() const { p_->g.assign(p_->v.size(), 0.0); }
    double scalar_value() const;

    Tensor clone() const;
    bool same_storage(const Tensor& o) const { return p_ == o.p_; }
    const void* id() const { return p_.get(); }

  private:
    struct Impl {
        size_t rows = 0, cols = 0;
        std::vector<double> v; // row-major values
        std::vector<double> g; // same-shape gradient accumulator
        bool requires_grad = false;
    };
    std::shared_ptr<Impl> p_;
};

// Records every op for one forward pass; backward() replays the recorded
// closures in reverse. A tape is single-threaded; distinct tapes over the same
// frozen tensors may run concurrently.
class Tape {
  public:
    Tensor matmul(const Tensor& a, const Tensor& b);
    Tensor transpose(const Tensor& a);
    Tensor add(const Tensor& a, const Tensor& b); // same shape, or b a [1 x n] bias row
    Tensor relu(const Tensor& a);
    Tensor tanh(const Tensor& a);
    Tensor sigmoid(const Tensor& a);
    Tensor mul(const Tensor& a, const Tensor& b); // elementwise
    Tensor scale(const Tensor& a, double c);
    Tensor softmax_rows(const Tensor& a);
    Tensor log_clamped(const Tensor& a, double floor = 1e-12);
    Tensor concat_cols(const std::vector<Tensor>& parts);
    Tensor slice_col(const Tensor& a, size_t j); // [n x m] -> column j as [n x 1]
    Tensor colwise_scale(const Tensor& x, const Tensor& c); // x[n x m] * c[n x 1]
    Tensor sum(const Tensor& a);
    Tensor mean(const Tensor& a);
    Tensor pick(const Tensor& a, size_t i, size_t j);

    // Seeds d(loss)=1 and accumulates grads into every tensor reachable on the
    // tape. Errors on non-scalar loss, a loss this tape did not produce, or a
    // second call without reset().
    void backward(const Tensor& loss);
    void reset();
    size_t num_ops() const { return ops_.size(); }

  private:
    Tensor make_output(size_t rows, size_t cols);
    void record(std::function<void()> back) { ops_.push_back(std::move(back)); }

    std::vector<std::function<void()>> ops_;
    std::vector<const void*> outputs_;
    bool backward_done_ = false;
};

// Compares analytic gradients against central finite differences.
// loss_fn must run a fresh forward/backward over `params` (grads are zeroed
// here before each call) and return the loss value. Returns
// max over elements of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
double finite_diff_check(const std::vector<Tensor>& params,
                         const std::function<double()>& loss_fn, double eps = 1e-5);

} // namespace csmil
