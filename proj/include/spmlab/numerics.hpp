#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace spmlab {

// Pairwise (cascade) summation. Error grows like eps*log2(n) instead of
// eps*n, which several identity tests at 1e-12 rely on.
double pairwise_sum(std::span<const double> values);

// Accumulator that buffers terms and reduces them pairwise.
class PairwiseAccumulator {
public:
    void add(double v) { terms_.push_back(v); }
    double total() const;
    void clear() { terms_.clear(); }

private:
    std::vector<double> terms_;
};

struct QuadratureRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;  // sum to 2
};

// Gauss-Legendre rule with n nodes (Newton iteration on Legendre roots).
const QuadratureRule& gauss_legendre(int n);

// Integrate f over [a, b] with an n-point Gauss-Legendre rule.
double integrate_gl(const std::function<double(double)>& f, double a, double b, int n = 32);

// Composite Gauss-Legendre: splits [a, b] into `panels` equal panels.
double integrate_gl_composite(const std::function<double(double)>& f, double a, double b,
                              int panels, int nodes_per_panel = 16);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
};

// Least-squares line through (x_i, y_i). Throws std::invalid_argument on
// degenerate input (fewer than two points or zero x-variance).
LineFit fit_line(std::span<const double> x, std::span<const double> y);

// Static-partition parallel map: fn(i) for i in [0, n). Work item i always
// produces the same result regardless of thread count; callers reduce the
// per-item outputs in a fixed order. threads <= 1 runs inline.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int threads);

// Global default worker count used by the CLI's --threads flag.
int default_threads();
void set_default_threads(int threads);

}  // namespace spmlab
