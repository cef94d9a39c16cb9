#include "riccilab/test_functions.hpp"

#include <cmath>

namespace riccilab {

namespace {

// value, first, and second derivative of a single factor
void factor_derivs(const TestFunction::Factor& f, double v, double& f0, double& f1, double& f2) {
    switch (f.kind) {
        case TestFunction::FactorKind::Power: {
            const int k = static_cast<int>(f.a);
            if (k == 0) { f0 = 1.0; f1 = 0.0; f2 = 0.0; return; }
            if (k == 1) { f0 = v; f1 = 1.0; f2 = 0.0; return; }
            const double pkm2 = std::pow(v, k - 2);
            f0 = pkm2 * v * v;
            f1 = k * pkm2 * v;
            f2 = static_cast<double>(k) * (k - 1) * pkm2;
            return;
        }
        case TestFunction::FactorKind::Cos: {
            const double s = std::sin(f.a * v + f.b), c = std::cos(f.a * v + f.b);
            f0 = c; f1 = -f.a * s; f2 = -f.a * f.a * c;
            return;
        }
        case TestFunction::FactorKind::Sin: {
            const double s = std::sin(f.a * v + f.b), c = std::cos(f.a * v + f.b);
            f0 = s; f1 = f.a * c; f2 = -f.a * f.a * s;
            return;
        }
    }
    f0 = f1 = f2 = 0.0;
}

}  // namespace

TestFunction::Factor TestFunction::pw(int coord, int exponent) {
    return Factor{coord, FactorKind::Power, static_cast<double>(exponent), 0.0};
}
TestFunction::Factor TestFunction::cosf(int coord, double freq, double phase) {
    return Factor{coord, FactorKind::Cos, freq, phase};
}
TestFunction::Factor TestFunction::sinf(int coord, double freq, double phase) {
    return Factor{coord, FactorKind::Sin, freq, phase};
}

double TestFunction::eval(const VectorXd& v) const {
    double total = 0.0;
    for (const Term& t : terms_) {
        double prod = t.coeff;
        for (const Factor& f : t.factors) {
            double f0, f1, f2;
            factor_derivs(f, v[f.coord], f0, f1, f2);
            prod *= f0;
        }
        total += prod;
    }
    return total;
}

VectorXd TestFunction::grad(const VectorXd& v) const {
    VectorXd g = VectorXd::Zero(v.size());
    for (const Term& t : terms_) {
        const size_t m = t.factors.size();
        std::vector<double> f0(m), f1(m);
        for (size_t q = 0; q < m; ++q) {
            double d2;
            factor_derivs(t.factors[q], v[t.factors[q].coord], f0[q], f1[q], d2);
        }
        for (size_t q = 0; q < m; ++q) {
            double prod = t.coeff * f1[q];
            for (size_t p = 0; p < m; ++p)
                if (p != q) prod *= f0[p];
            g[t.factors[q].coord] += prod;
        }
    }
    return g;
}

MatrixXd TestFunction::hess(const VectorXd& v) const {
    MatrixXd h = MatrixXd::Zero(v.size(), v.size());
    for (const Term& t : terms_) {
        const size_t m = t.factors.size();
        std::vector<double> f0(m), f1(m), f2(m);
        for (size_t q = 0; q < m; ++q)
            factor_derivs(t.factors[q], v[t.factors[q].coord], f0[q], f1[q], f2[q]);
        for (size_t q = 0; q < m; ++q) {
            // diagonal-in-factor part
            double prod = t.coeff * f2[q];
            for (size_t p = 0; p < m; ++p)
                if (p != q) prod *= f0[p];
            const int cq = t.factors[q].coord;
            h(cq, cq) += prod;
            // cross-factor part
            for (size_t s = q + 1; s < m; ++s) {
                double cross = t.coeff * f1[q] * f1[s];
                for (size_t p = 0; p < m; ++p)
                    if (p != q && p != s) cross *= f0[p];
                const int cs = t.factors[s].coord;
                h(cq, cs) += cross;
                if (cq != cs)
                    h(cs, cq) += cross;
                else
                    h(cq, cq) += cross;  // same coordinate twice
            }
        }
    }
    return h;
}

bool TestFunction::base_only() const {
    const int first_e = 1 + layout_.n;
    for (const Term& t : terms_)
        for (const Factor& f : t.factors)
            if (f.coord >= first_e) return false;
    return true;
}

bool TestFunction::spatial_block_only() const {
    const int first_e = 1 + layout_.n;
    for (const Term& t : terms_)
        for (const Factor& f : t.factors) {
            if (f.coord < first_e) continue;
            const int flat = f.coord - first_e;
            const int i = flat / layout_.r, b = flat % layout_.r;
            if (i == 0 || b == 0) return false;
        }
    return true;
}

std::vector<TestFunction> scalar_battery(int n) {
    CoordLayout L{n, 0};
    using TF = TestFunction;
    std::vector<TestFunction> out;
    auto term = [](double c, std::vector<TF::Factor> fs) { return TF::Term{c, std::move(fs)}; };
    out.emplace_back(L, "tau", std::vector<TF::Term>{term(1.0, {TF::pw(L.tau(), 1)})});
    out.emplace_back(L, "tau^2", std::vector<TF::Term>{term(1.0, {TF::pw(L.tau(), 2)})});
    out.emplace_back(L, "cos(x1)", std::vector<TF::Term>{term(1.0, {TF::cosf(L.x(0))})});
    out.emplace_back(L, "tau*cos(x1)",
                     std::vector<TF::Term>{term(1.0, {TF::pw(L.tau(), 1), TF::cosf(L.x(0))})});
    if (n >= 2) {
        out.emplace_back(L, "cos(x1)cos(x2)",
                         std::vector<TF::Term>{term(1.0, {TF::cosf(L.x(0)), TF::cosf(L.x(1))})});
        out.emplace_back(L, "tau^2*sin(x2)+tau",
                         std::vector<TF::Term>{term(1.0, {TF::pw(L.tau(), 2), TF::sinf(L.x(1))}),
                                               term(1.0, {TF::pw(L.tau(), 1)})});
        out.emplace_back(L, "x1*x2*tau",
                         std::vector<TF::Term>{term(1.0, {TF::pw(L.x(0), 1), TF::pw(L.x(1), 1),
                                                          TF::pw(L.tau(), 1)})});
    }
    return out;
}

std::vector<TestFunction> frame_battery(int n) {
    const int r = n + 1;
    CoordLayout L{n, r};
    using TF = TestFunction;
    std::vector<TestFunction> out;
    auto term = [](double c, std::vector<TF::Factor> fs) { return TF::Term{c, std::move(fs)}; };
    out.emplace_back(L, "e00", std::vector<TF::Term>{term(1.0, {TF::pw(L.e(0, 0), 1)})});
    out.emplace_back(L, "e00^2", std::vector<TF::Term>{term(1.0, {TF::pw(L.e(0, 0), 2)})});
    out.emplace_back(L, "e11^2", std::vector<TF::Term>{term(1.0, {TF::pw(L.e(1, 1), 2)})});
    out.emplace_back(L, "e12*e21", std::vector<TF::Term>{term(1.0, {TF::pw(L.e(1, 2), 1),
                                                                    TF::pw(L.e(2, 1), 1)})});
    out.emplace_back(L, "cos(x1)*e11",
                     std::vector<TF::Term>{term(1.0, {TF::cosf(L.x(0)), TF::pw(L.e(1, 1), 1)})});
    out.emplace_back(L, "tau*e01^2",
                     std::vector<TF::Term>{term(1.0, {TF::pw(L.tau(), 1), TF::pw(L.e(0, 1), 2)})});
    out.emplace_back(L, "e10*e22",
                     std::vector<TF::Term>{term(1.0, {TF::pw(L.e(1, 0), 1), TF::pw(L.e(2, 2), 1)})});
    out.emplace_back(L, "sin(x2)*e20*e00",
                     std::vector<TF::Term>{term(1.0, {TF::sinf(L.x(1)), TF::pw(L.e(2, 0), 1),
                                                      TF::pw(L.e(0, 0), 1)})});
    out.emplace_back(L, "x1*e21*e12",
                     std::vector<TF::Term>{term(1.0, {TF::pw(L.x(0), 1), TF::pw(L.e(2, 1), 1),
                                                      TF::pw(L.e(1, 2), 1)})});
    out.emplace_back(L, "e11^3+tau*e00",
                     std::vector<TF::Term>{term(1.0, {TF::pw(L.e(1, 1), 3)}),
                                           term(1.0, {TF::pw(L.tau(), 1), TF::pw(L.e(0, 0), 1)})});
    return out;
}

std::vector<TestFunction> spatial_block_battery(int n) {
    const int r = n + 1;
    CoordLayout L{n, r};
    using TF = TestFunction;
    std::vector<TestFunction> out;
    auto term = [](double c, std::vector<TF::Factor> fs) { return TF::Term{c, std::move(fs)}; };
    out.emplace_back(L, "u11", std::vector<TF::Term>{term(1.0, {TF::pw(L.e(1, 1), 1)})});
    out.emplace_back(L, "u11^2", std::vector<TF::Term>{term(1.0, {TF::pw(L.e(1, 1), 2)})});
    out.emplace_back(L, "u12*u21", std::vector<TF::Term>{term(1.0, {TF::pw(L.e(1, 2), 1),
                                                                    TF::pw(L.e(2, 1), 1)})});
    out.emplace_back(L, "det_u",
                     std::vector<TF::Term>{term(1.0, {TF::pw(L.e(1, 1), 1), TF::pw(L.e(2, 2), 1)}),
                                           term(-1.0, {TF::pw(L.e(1, 2), 1), TF::pw(L.e(2, 1), 1)})});
    out.emplace_back(L, "cos(x1)*u22",
                     std::vector<TF::Term>{term(1.0, {TF::cosf(L.x(0)), TF::pw(L.e(2, 2), 1)})});
    out.emplace_back(L, "tau*u21^2",
                     std::vector<TF::Term>{term(1.0, {TF::pw(L.tau(), 1), TF::pw(L.e(2, 1), 2)})});
    out.emplace_back(L, "sin(x2)*u22^3",
                     std::vector<TF::Term>{term(1.0, {TF::sinf(L.x(1)), TF::pw(L.e(2, 2), 3)})});
    out.emplace_back(L, "x1*tau*u12",
                     std::vector<TF::Term>{term(1.0, {TF::pw(L.x(0), 1), TF::pw(L.tau(), 1),
                                                      TF::pw(L.e(1, 2), 1)})});
    return out;
}

double derivative_check(const TestFunction& f, const VectorXd& v, double h) {
    const int m = static_cast<int>(v.size());
    const VectorXd g = f.grad(v);
    const MatrixXd H = f.hess(v);
    double worst = 0.0;
    VectorXd e = v;
    for (int i = 0; i < m; ++i) {
        e[i] = v[i] + h;
        const double fp = f.eval(e);
        const VectorXd gp = f.grad(e);
        e[i] = v[i] - h;
        const double fm = f.eval(e);
        const VectorXd gm = f.grad(e);
        e[i] = v[i];
        worst = std::max(worst, std::abs((fp - fm) / (2 * h) - g[i]));
        for (int j = 0; j < m; ++j)
            worst = std::max(worst, std::abs((gp[j] - gm[j]) / (2 * h) - H(i, j)));
    }
    return worst;
}

}  // namespace riccilab
