#include "wavefreeze/model.hpp"

#include <cmath>
#include <limits>

#include "wavefreeze/errors.hpp"

namespace wavefreeze {

ReactionModel::ReactionModel(std::string name, int n, int m, int r, Eigen::VectorXd u_minus,
                             Eigen::VectorXd u_plus)
    : name_(std::move(name)), n_(n), m_(m), r_(r), u_minus_(std::move(u_minus)), u_plus_(std::move(u_plus)) {
    if (n_ < 1 || m_ < 1) throw ConfigError("model dimensions must satisfy n >= 1 and m >= 1");
    if (r_ < 3) throw ConfigError("expansion order must satisfy r >= 3");
    if (u_minus_.size() != n_ || u_plus_.size() != n_) throw ConfigError("pinning states must have n entries");
}

Eigen::VectorXd eval_derivative_tensor(const ReactionModel& model, Which which, int order,
                                       const Eigen::VectorXd& point,
                                       const std::vector<Eigen::VectorXd>& directions) {
    if (order < 0 || order > model.max_order(which))
        throw ConfigError("derivative order " + std::to_string(order) + " out of range (max " +
                          std::to_string(model.max_order(which)) + ")");
    if (static_cast<int>(directions.size()) != order)
        throw ConfigError("number of directions must equal the derivative order");
    if (point.size() != model.n()) throw ConfigError("point must have n entries");
    std::vector<const double*> dirs;
    for (const auto& d : directions) {
        if (d.size() != model.n()) throw ConfigError("directions must have n entries");
        dirs.push_back(d.data());
    }
    Eigen::VectorXd out(model.out_size(which));
    model.derivative(which, order, point.data(), dirs.data(), out.data());
    return out;
}

namespace {

// Polynomial lead * prod (u - root); values use the product so roots are exact zeros.
struct Factored {
    double lead;
    std::vector<double> roots;
    std::vector<double> coef;

    Factored(double lead_, std::vector<double> roots_) : lead(lead_), roots(std::move(roots_)), coef{lead} {
        for (double z : roots) {
            std::vector<double> next(coef.size() + 1, 0.0);
            for (std::size_t p = 0; p < coef.size(); ++p) {
                next[p + 1] += coef[p];
                next[p] -= z * coef[p];
            }
            coef = std::move(next);
        }
    }

    double derivative(int order, double u) const {
        if (order == 0) {
            double v = lead;
            for (double z : roots) v *= u - z;
            return v;
        }
        double acc = 0.0;
        for (int p = static_cast<int>(coef.size()) - 1; p >= order; --p) {
            double falling = 1.0;
            for (int q = 0; q < order; ++q) falling *= p - q;
            acc = acc * u + falling * coef[p];
        }
        return acc;
    }
};

// Scalar model whose f and g are polynomials; derivative tensors are
// h^(k)(u) times the product of the scalar directions.
class ScalarPolynomialModel : public ReactionModel {
public:
    ScalarPolynomialModel(std::string name, int r, Factored f, Factored g, double u_minus, double u_plus)
        : ReactionModel(std::move(name), 1, 1, r, Eigen::VectorXd::Constant(1, u_minus),
                        Eigen::VectorXd::Constant(1, u_plus)),
          f_(std::move(f)),
          g_(std::move(g)) {}

    int max_order(Which) const override { return 64; }

    void derivative(Which which, int order, const double* point, const double* const* dirs,
                    double* out) const override {
        const auto& c = which == Which::f ? f_ : g_;
        double prod = 1.0;
        for (int i = 0; i < order; ++i) prod *= dirs[i][0];
        out[0] = prod * c.derivative(order, point[0]);
    }


private:
    Factored f_, g_;
};

class NagumoRelayModel : public ReactionModel {
public:
    NagumoRelayModel(double a, double k, int r)
        : ReactionModel("nagumo_relay", 2, 1, r, Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(1.0, 1.0)),
          f1_(-1.0, {0.0, 1.0, a}),
          g1_(-1.0, {0.0, 1.0}),
          k_(k) {}

    int max_order(Which) const override { return 64; }

    void derivative(Which which, int order, const double* point, const double* const* dirs,
                    double* out) const override {
        double prod = 1.0;
        for (int i = 0; i < order; ++i) prod *= dirs[i][0];
        if (which == Which::f) {
            out[0] = prod * f1_.derivative(order, point[0]);
            if (order == 0)
                out[1] = k_ * (point[0] - point[1]);
            else if (order == 1)
                out[1] = k_ * (dirs[0][0] - dirs[0][1]);
            else
                out[1] = 0.0;
        } else {
            out[0] = prod * g1_.derivative(order, point[0]);
            out[1] = 0.0;
        }
    }

private:
    Factored f1_, g1_;
    double k_;
};

}  // namespace

ModelPtr builtin_nagumo(double a, int r) {
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("nagumo parameter a must lie in (0,1)");
    return std::make_shared<ScalarPolynomialModel>("nagumo", r, Factored(-1.0, {0.0, 1.0, a}),
                                                   Factored(-1.0, {0.0, 1.0}), 0.0, 1.0);
}

ModelPtr builtin_nagumo_relay(double a, double k, int r) {
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("nagumo_relay parameter a must lie in (0,1)");
    if (!(k > 0.0)) throw ConfigError("nagumo_relay parameter k must be positive");
    return std::make_shared<NagumoRelayModel>(a, k, r);
}

ModelPtr make_builtin_model(const std::string& name, const std::map<std::string, double>& params, int r) {
    auto get = [&](const std::string& key, double fallback) {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    };
    if (name == "nagumo") return builtin_nagumo(get("a", 0.25), r);
    if (name == "nagumo_relay") return builtin_nagumo_relay(get("a", 0.25), get("k", 1.0), r);
    throw ConfigError("unknown model '" + name + "'");
}

FiniteDifferenceModel::FiniteDifferenceModel(std::string name, int n, int m, int r, Eigen::VectorXd u_minus,
                                             Eigen::VectorXd u_plus, PointMap f, PointMap g, int max_order)
    : ReactionModel(std::move(name), n, m, r, std::move(u_minus), std::move(u_plus)),
      f_(std::move(f)),
      g_(std::move(g)),
      max_order_(max_order) {}

void FiniteDifferenceModel::derivative(Which which, int order, const double* point, const double* const* dirs,
                                       double* out) const {
    std::vector<double> p(point, point + n());
    nested(which, order, p, dirs, out);
}

void FiniteDifferenceModel::nested(Which which, int order, std::vector<double>& point, const double* const* dirs,
                                   double* out) const {
    const int size = out_size(which);
    if (order == 0) {
        (which == Which::f ? f_ : g_)(point.data(), out);
        return;
    }
    const double* d = dirs[order - 1];
    double dnorm = 0.0, pnorm = 0.0;
    for (int i = 0; i < n(); ++i) {
        dnorm = std::max(dnorm, std::abs(d[i]));
        pnorm = std::max(pnorm, std::abs(point[i]));
    }
    if (dnorm == 0.0) {
        std::fill(out, out + size, 0.0);
        return;
    }
    // Each nesting level loses accuracy; widen the step accordingly.
    const double h = std::pow(std::numeric_limits<double>::epsilon(), 1.0 / (2.0 + order)) * (1.0 + pnorm) / dnorm;
    std::vector<double> plus(size), minus(size);
    for (int i = 0; i < n(); ++i) point[i] += h * d[i];
    nested(which, order - 1, point, dirs, plus.data());
    for (int i = 0; i < n(); ++i) point[i] -= 2.0 * h * d[i];
    nested(which, order - 1, point, dirs, minus.data());
    for (int i = 0; i < n(); ++i) point[i] += h * d[i];
    for (int k = 0; k < size; ++k) out[k] = (plus[k] - minus[k]) / (2.0 * h);
}

}  // namespace wavefreeze
