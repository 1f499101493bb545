#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace topogen::ad {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);
std::size_t numel(const Shape& s);

struct Node;

/// Handle to a dense row-major f64 array that may carry a reverse-mode
/// gradient record. Copies share the underlying buffer.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    [[nodiscard]] bool defined() const { return node_ != nullptr; }
    [[nodiscard]] const Shape& shape() const;
    [[nodiscard]] std::size_t dim(std::size_t axis) const { return shape().at(axis); }
    [[nodiscard]] std::size_t rank() const { return shape().size(); }
    [[nodiscard]] std::size_t numel() const;

    [[nodiscard]] std::span<const double> data() const;
    /// Mutable view; only meaningful on leaves (parameters, inputs).
    [[nodiscard]] std::span<double> mutable_data();
    [[nodiscard]] double item() const;
    [[nodiscard]] double at(std::size_t flat) const { return data()[flat]; }

    [[nodiscard]] bool requires_grad() const;
    [[nodiscard]] bool has_grad() const;
    [[nodiscard]] std::span<const double> grad() const;
    void zero_grad();

    /// Seeds d(this)/d(this) = 1 and accumulates into every reachable leaf.
    /// Interior gradients are recomputed; leaf gradients accumulate across calls.
    void backward() const;

    /// Same values, no gradient history.
    [[nodiscard]] Tensor detach() const;

    [[nodiscard]] Node* node() const { return node_.get(); }
    [[nodiscard]] const std::shared_ptr<Node>& node_ptr() const { return node_; }
    explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

private:
    std::shared_ptr<Node> node_;
};

struct Node {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad; // empty until needed
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward; // reads this->grad, accumulates into parents

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
};

/// While alive on a thread, ops record no graph.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled();

// Broadcasting is limited to leading-batch expansion: the second operand's
// shape must equal a suffix of the first's.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);

Tensor matmul(const Tensor& a, const Tensor& b);   // [m,k] x [k,n]
Tensor transpose(const Tensor& a);                 // 2-D only
Tensor reshape(const Tensor& a, Shape shape);

/// y = x W + b with W stored [in, out]; b may be undefined.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

Tensor softmax(const Tensor& x, std::size_t axis);
/// Normalizes over the last axis; gain and bias (shape [last]) may be undefined.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);
/// Tanh approximation.
Tensor gelu(const Tensor& x);
Tensor silu(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor clamp(const Tensor& x, double lo, double hi);
Tensor square(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

Tensor concat(std::span<const Tensor> ts, std::size_t axis);
std::vector<Tensor> split(const Tensor& x, std::size_t axis, std::span<const std::size_t> sizes);

/// Fixed sparse linear map out[i] = sum_e weight[e] * x[col[e]] over the CSR
/// row i. Covers gathers, scatters and interpolation stencils.
struct SparseMap {
    std::size_t in_size = 0;
    std::vector<std::size_t> row_ptr; // out_size + 1
    std::vector<std::size_t> col;
    std::vector<double> weight;
    [[nodiscard]] std::size_t out_size() const { return row_ptr.empty() ? 0 : row_ptr.size() - 1; }
};

Tensor apply_sparse(const Tensor& x, std::shared_ptr<const SparseMap> map, Shape out_shape);

/// Named parameters plus Adam moment buffers.
class ParamStore {
public:
    struct Entry {
        Tensor value;
        std::vector<double> m, v;
    };

    Tensor& add(const std::string& name, Tensor value);
    [[nodiscard]] const Tensor& get(const std::string& name) const;
    [[nodiscard]] bool contains(const std::string& name) const { return entries_.count(name) != 0; }
    [[nodiscard]] std::size_t size() const { return entries_.size(); }
    [[nodiscard]] std::size_t parameter_count() const;
    [[nodiscard]] const std::map<std::string, Entry>& entries() const { return entries_; }
    [[nodiscard]] std::int64_t step() const { return step_; }

    /// Allocates zeroed gradients on every parameter.
    void zero_grad();

    friend void adam_step(ParamStore&, double, double, double, double);

private:
    std::map<std::string, Entry> entries_;
    std::int64_t step_ = 0;
};

/// Bias-corrected Adam. Throws InputError naming any parameter without a gradient.
void adam_step(ParamStore& store, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

/// "TCK1", u32 version, u32 count, then per tensor {u32 name length, name,
/// u32 rank, u64 dims...}, then every payload as little-endian f64 in table order.
void save_checkpoint(std::ostream& os, const ParamStore& store);
/// Replaces values of an existing store; names and shapes must match exactly.
void load_checkpoint(std::istream& is, ParamStore& store);

} // namespace topogen::ad
