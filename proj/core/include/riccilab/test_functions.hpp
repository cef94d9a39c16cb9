#pragma once

#include <string>
#include <vector>

#include "riccilab/tensor.hpp"

namespace riccilab {

/// Flat coordinate layout used by all pointwise operator checks:
///   slot 0          = tau
///   slots 1..n      = x^i
///   slots 1+n + i*r + b = frame entry e^i_b (row-major, r x r, row 0 = tau
///                     direction for the block bundle)
/// r = 0 gives scalar functions on M x I.
struct CoordLayout {
    int n = 0;
    int r = 0;
    int dim() const { return 1 + n + r * r; }
    int tau() const { return 0; }
    int x(int i) const { return 1 + i; }
    int e(int i, int b) const { return 1 + n + i * r + b; }
};

/// Closed-form test function: a sum of terms, each a product of factors that
/// read a single coordinate (power, cos, or sin). First and second partials
/// are exact by construction.
class TestFunction {
public:
    enum class FactorKind { Power, Cos, Sin };
    struct Factor {
        int coord = 0;
        FactorKind kind = FactorKind::Power;
        double a = 1.0;  // Power: integer exponent; Cos/Sin: frequency
        double b = 0.0;  // Cos/Sin: phase
    };
    struct Term {
        double coeff = 1.0;
        std::vector<Factor> factors;
    };

    TestFunction() = default;
    TestFunction(CoordLayout layout, std::string name, std::vector<Term> terms)
        : layout_(layout), name_(std::move(name)), terms_(std::move(terms)) {}

    const CoordLayout& layout() const { return layout_; }
    const std::string& name() const { return name_; }

    double eval(const VectorXd& v) const;
    VectorXd grad(const VectorXd& v) const;
    MatrixXd hess(const VectorXd& v) const;

    /// True when no factor reads a frame slot.
    bool base_only() const;
    /// True when every frame factor reads a spatial-block entry (i, b >= 1).
    bool spatial_block_only() const;

    static Factor pw(int coord, int exponent);
    static Factor cosf(int coord, double freq = 1.0, double phase = 0.0);
    static Factor sinf(int coord, double freq = 1.0, double phase = 0.0);

private:
    CoordLayout layout_;
    std::string name_;
    std::vector<Term> terms_;
};

/// Base-only battery over (tau, x) used for the scalar operator checks.
std::vector<TestFunction> scalar_battery(int n);

/// Block-frame battery (r = n+1) covering tau-row, column-0, and spatial
/// entries; exercises every term group of the frame operators.
std::vector<TestFunction> frame_battery(int n);

/// Block-frame battery reading only the spatial sub-block e^j_b (j, b >= 1).
std::vector<TestFunction> spatial_block_battery(int n);

/// Max abs mismatch of grad/hess against central differences at v.
double derivative_check(const TestFunction& f, const VectorXd& v, double h = 1e-5);

}  // namespace riccilab
