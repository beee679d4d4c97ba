#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace wavefreeze {

enum class Which { f, g };

// Reaction term f: R^n -> R^n and noise amplitude g: R^n -> R^{n x m}
// together with their pointwise derivative tensors. Results for g are
// stored row-major (n rows, m columns).
class ReactionModel {
public:
    ReactionModel(std::string name, int n, int m, int r, Eigen::VectorXd u_minus, Eigen::VectorXd u_plus);
    virtual ~ReactionModel() = default;

    const std::string& name() const { return name_; }
    int n() const { return n_; }
    int m() const { return m_; }
    int r() const { return r_; }
    const Eigen::VectorXd& u_minus() const { return u_minus_; }
    const Eigen::VectorXd& u_plus() const { return u_plus_; }
    int out_size(Which which) const { return which == Which::f ? n_ : n_ * m_; }

    virtual int max_order(Which which) const = 0;

    // Unchecked hot-path contraction D^order h(point)[dirs[0], ..., dirs[order-1]].
    virtual void derivative(Which which, int order, const double* point, const double* const* dirs,
                            double* out) const = 0;

private:
    std::string name_;
    int n_, m_, r_;
    Eigen::VectorXd u_minus_, u_plus_;
};

using ModelPtr = std::shared_ptr<const ReactionModel>;

// Checked contraction; throws ConfigError when the order exceeds the declared
// maximum or the number of directions does not match.
Eigen::VectorXd eval_derivative_tensor(const ReactionModel& model, Which which, int order,
                                       const Eigen::VectorXd& point,
                                       const std::vector<Eigen::VectorXd>& directions);

// f(u) = u(1-u)(u-a), g(u) = u(1-u), u_- = 0, u_+ = 1.
ModelPtr builtin_nagumo(double a, int r = 3);

// Two-component model: a Nagumo front in u1 that drags a linearly relaxing
// u2 along, f2 = k(u1 - u2). Noise enters the first component only.
ModelPtr builtin_nagumo_relay(double a, double k, int r = 3);

// Builds a built-in model from its name and parameter map.
ModelPtr make_builtin_model(const std::string& name, const std::map<std::string, double>& params, int r);

// Model given only by f and g; derivatives by nested central differences.
class FiniteDifferenceModel : public ReactionModel {
public:
    using PointMap = std::function<void(const double* u, double* out)>;

    FiniteDifferenceModel(std::string name, int n, int m, int r, Eigen::VectorXd u_minus,
                          Eigen::VectorXd u_plus, PointMap f, PointMap g, int max_order = 4);

    int max_order(Which) const override { return max_order_; }
    void derivative(Which which, int order, const double* point, const double* const* dirs,
                    double* out) const override;

private:
    void nested(Which which, int order, std::vector<double>& point, const double* const* dirs,
                double* out) const;

    PointMap f_, g_;
    int max_order_;
};

}  // namespace wavefreeze
