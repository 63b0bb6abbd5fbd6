#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vidcls/errors.hpp"
#include "vidcls/rng.hpp"

namespace vidcls {

class TensorBuffer;
using TensorPtr = std::shared_ptr<TensorBuffer>;

/// Train/eval switch for stochastic operations (dropout, input noise).
enum class Mode { train, eval };

/// Dense row-major tensor of doubles with paired gradient storage.
///
/// TensorBuffer doubles as a node of the recorded forward tape: every
/// operation fills `parents` and `backward_fn` on its result, and backward()
/// later replays the tape in reverse topological order. Gradients always
/// accumulate (+=) so parameters shared across time steps or batch examples
/// sum their contributions; callers zero them between optimizer steps.
class TensorBuffer {
public:
    std::vector<int> shape;
    std::vector<double> values;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;

    std::vector<TensorPtr> parents;
    std::function<void()> backward_fn;

    TensorBuffer() = default;
    TensorBuffer(std::vector<int> shape_, std::vector<double> values_);

    std::size_t size() const { return values.size(); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
    int ndim() const { return static_cast<int>(shape.size()); }

    double& at(std::size_t i) { return values[i]; }
    double at(std::size_t i) const { return values[i]; }

    /// Allocates zeroed gradient storage if absent.
    void ensure_grad();
    void zero_grad();

    std::string shape_str() const;
};

// ---- construction ----------------------------------------------------------

TensorPtr tensor(std::vector<int> shape, std::vector<double> values);
TensorPtr zeros(std::vector<int> shape);
TensorPtr full(std::vector<int> shape, double value);

/// Leaf with requires_grad set; the usual way to make a trainable parameter.
TensorPtr parameter(std::vector<int> shape, std::vector<double> values);

/// I.i.d. standard normal draws from the stream, in row-major order.
TensorPtr gaussian(const std::vector<int>& shape, RngStream& rng);

/// Xavier-uniform init in ±sqrt(6/(fan_in+fan_out)), requires_grad set.
TensorPtr xavier(int fan_in, int fan_out, std::vector<int> shape, RngStream& rng);

// ---- elementwise and linear algebra ----------------------------------------

enum class Activation { sigmoid, tanh, relu };

/// Strict 2-D matrix product [m×k]·[k×n] → [m×n].
TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
/// Row vector times matrix: x[k] · a[k×n] → [n].
TensorPtr vecmat(const TensorPtr& x, const TensorPtr& a);
/// Matrix times column vector: a[m×n] · x[n] → [m].
TensorPtr matvec(const TensorPtr& a, const TensorPtr& x);

TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);  // elementwise
TensorPtr scale(const TensorPtr& x, double c);

TensorPtr activation(const TensorPtr& x, Activation kind);
TensorPtr sigmoid(const TensorPtr& x);
TensorPtr tanh(const TensorPtr& x);
TensorPtr relu(const TensorPtr& x);

/// Numerically stable softmax over a 1-D tensor (max subtraction).
TensorPtr softmax(const TensorPtr& x);
/// Softmax over each consecutive group of `group` entries of a 1-D tensor.
TensorPtr grouped_softmax(const TensorPtr& x, int group);
/// Sum over each consecutive group of `group` entries of a 1-D tensor.
TensorPtr group_sum(const TensorPtr& x, int group);

/// y = gain ⊙ (x − mean) / sqrt(var + eps) + bias, population variance.
TensorPtr layer_norm(const TensorPtr& x, const TensorPtr& gain,
                     const TensorPtr& bias, double eps = 1e-6);

/// Inverted dropout. Eval mode and drop_prob == 0 return x unchanged.
TensorPtr dropout(const TensorPtr& x, double drop_prob, Mode mode, RngStream& rng);

/// Concatenation of 1-D tensors.
TensorPtr concat(const std::vector<TensorPtr>& parts);

/// View of row i of a 2-D tensor as a 1-D tensor (copying, grad-routing).
TensorPtr row(const TensorPtr& x, int i);

/// Column sums of a 2-D tensor: [t×d] → [d].
TensorPtr sum_rows(const TensorPtr& x);
/// Weighted row sum: Σ_t w[t]·x[t,:] for x [t×d], w [t].
TensorPtr weighted_rowsum(const TensorPtr& x, const TensorPtr& w);

/// Sum of every entry, as a scalar [1].
TensorPtr sum_all(const TensorPtr& x);

/// Clamp to [lo, hi]; gradient passes where lo ≤ x ≤ hi and is zero outside.
TensorPtr clamp(const TensorPtr& x, double lo, double hi);

/// Valid 1-D convolution over time. x [t×d_in] with filter [window, d_in,
/// d_out] and bias [d_out] gives [(t−window+1) × d_out], stride 1.
TensorPtr conv_time(const TensorPtr& x, const TensorPtr& filter, const TensorPtr& bias);
/// Per-column max of a 2-D tensor; gradient routes to the first argmax row.
TensorPtr max_over_time(const TensorPtr& x);

// ---- autodiff driver --------------------------------------------------------

/// Reverse pass from a scalar root; seeds d(root)/d(root) = seed and
/// accumulates into the grad of every reachable tensor that requires it.
void backward(const TensorPtr& root, double seed = 1.0);

/// Central-difference gradient oracle: (f(x+h·e_i) − f(x−h·e_i)) / 2h.
/// f is evaluated with x's values perturbed in place and restored afterwards.
TensorPtr finite_diff_grad(const std::function<double(const TensorBuffer&)>& f,
                           const TensorPtr& x, double h = 1e-5);

/// ‖a−b‖₂ / max(‖a‖₂+‖b‖₂, floor); the relative error used by gradient checks.
double relative_error(const std::vector<double>& a, const std::vector<double>& b,
                      double floor = 1e-8);

}  // namespace vidcls
