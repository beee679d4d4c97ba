#include "wavefreeze/linear_flow.hpp"

#include <cmath>
#include <limits>

#include "wavefreeze/errors.hpp"
#include "wavefreeze/fft.hpp"

namespace wavefreeze {

namespace {

std::vector<int> transverse_shape(const Grid& grid) { return std::vector<int>(grid.d - 1, grid.N_perp); }

std::vector<double> transverse_wave_sq(const Grid& grid) {
    const int tp = grid.transverse_points();
    std::vector<double> out(tp, 0.0);
    for (int t = 0; t < tp; ++t) {
        int rem = t;
        double s = 0.0;
        for (int a = grid.d - 1; a >= 1; --a) {
            const int j = rem % grid.N_perp;
            rem /= grid.N_perp;
            const double xi = wavenumber(j, grid.N_perp, grid.T_perp);
            s += xi * xi;
        }
        out[t] = s;
    }
    return out;
}

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

ComplexMatrix transverse_fourier(const Field& v) {
    const Grid& grid = v.grid();
    const int tp = grid.transverse_points();
    const Eigen::Index rows = static_cast<Eigen::Index>(v.components()) * grid.N;
    ComplexMatrix out(rows, tp);
    std::vector<std::complex<double>> buf(tp);
    const auto shape = transverse_shape(grid);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (int t = 0; t < tp; ++t) buf[t] = v.data()[r * tp + t];
        if (tp > 1) fft_forward(shape, buf.data());
        for (int t = 0; t < tp; ++t) out(r, t) = buf[t];
    }
    return out;
}

Field inverse_transverse_fourier(const ComplexMatrix& coeffs, const Grid& grid, int components) {
    const int tp = grid.transverse_points();
    Field out(grid, components);
    std::vector<std::complex<double>> buf(tp);
    const auto shape = transverse_shape(grid);
    for (Eigen::Index r = 0; r < coeffs.rows(); ++r) {
        for (int t = 0; t < tp; ++t) buf[t] = coeffs(r, t);
        if (tp > 1) fft_inverse(shape, buf.data());
        for (int t = 0; t < tp; ++t) out.data()[r * tp + t] = buf[t].real() / tp;
    }
    return out;
}

Eigen::MatrixXd sobolev_weight_matrix(const Grid& line, int n, double power, double shift) {
    const int N = line.N;
    Eigen::MatrixXd W(N, N);
    Field e(line, 1);
    for (int j = 0; j < N; ++j) {
        e.set_zero();
        e(0, j) = 1.0;
        Field col = apply_multiplier(e, [&](const double* xi, const bool*) -> std::complex<double> {
            return std::pow(1.0 + xi[0] * xi[0] + shift, power);
        });
        for (int i = 0; i < N; ++i) W(i, j) = col(0, i);
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n * N, n * N);
    for (int a = 0; a < n; ++a) out.block(a * N, a * N, N, N) = W;
    return out;
}

LinearOperator::LinearOperator(const ReactionModel& model, const WaveProfile& profile, const Grid& grid)
    : grid_(grid), n_(model.n()) {
    if (profile.line.N != grid.N || profile.line.L != grid.L) throw ConfigError("profile and grid do not match");
    A_ = linearization_matrix(model, profile);
    Eigen::EigenSolver<Eigen::MatrixXd> es(A_);
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition of the linearization failed");
    lambda_ = es.eigenvalues();
    R_ = es.eigenvectors();
    Eigen::PartialPivLU<ComplexMatrix> lu(R_);
    Rinv_ = lu.inverse();
    Eigen::BDCSVD<ComplexMatrix> svd(R_);
    const auto& sv = svd.singularValues();
    cond_ = sv[0] / sv[sv.size() - 1];
    if (!(cond_ < 1e8)) throw NumericalError("eigenvector matrix is too ill-conditioned");
    const Eigen::MatrixXd rec = (R_ * lambda_.asDiagonal() * Rinv_).real();
    recon_ = (A_ - rec).norm() / A_.norm();
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < lambda_.size(); ++k)
        if (std::abs(lambda_[k]) < best) {
            best = std::abs(lambda_[k]);
            neutral_ = k;
        }
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < lambda_.size(); ++k)
        if (k != neutral_) top = std::max(top, lambda_[k].real());
    if (top >= 0.0) throw NumericalError("spectral stability violated");
    gap_ = -top;
    lambda_perp_ = transverse_wave_sq(grid_);
}

double LinearOperator::beta() const { return std::min(beta_tw(), 0.5 * grid_.lambda1()); }

Eigen::MatrixXd LinearOperator::exp_matrix(double t) const {
    Eigen::VectorXcd e(lambda_.size());
    for (Eigen::Index k = 0; k < lambda_.size(); ++k) e[k] = k == neutral_ ? 1.0 : std::exp(lambda_[k] * t);
    return (R_ * e.asDiagonal() * Rinv_).real();
}

Field LinearOperator::apply_longitudinal(const Eigen::MatrixXd& M, const Field& v) const {
    const int tp = v.grid().transverse_points();
    const Eigen::Index rows = static_cast<Eigen::Index>(v.components()) * v.grid().N;
    if (M.cols() != rows) throw ConfigError("longitudinal operator size mismatch");
    Field out(v.grid(), v.components());
    if (tp == 1) {
        out.vec().noalias() = M * v.vec();
    } else {
        Eigen::Map<const RowMajor> V(v.data(), rows, tp);
        Eigen::Map<RowMajor> O(out.data(), rows, tp);
        O.noalias() = M * V;
    }
    return out;
}

Field LinearOperator::apply_transverse(const Field& v, const std::function<double(double)>& mult) const {
    if (v.grid().d == 1) {
        Field out = v;
        out *= mult(0.0);
        return out;
    }
    ComplexMatrix c = transverse_fourier(v);
    for (Eigen::Index t = 0; t < c.cols(); ++t) c.col(t) *= mult(lambda_perp_[t]);
    return inverse_transverse_fourier(c, v.grid(), v.components());
}

Field LinearOperator::apply(const Field& v) const {
    Field out = apply_longitudinal(A_, v);
    if (grid_.d > 1) out += apply_transverse(v, [](double l) { return -l; });
    return out;
}

Field LinearOperator::apply_adjoint(const Field& w) const {
    Field out = apply_longitudinal(A_.transpose(), w);
    if (grid_.d > 1) out += apply_transverse(w, [](double l) { return -l; });
    return out;
}

Field LinearOperator::apply_semigroup(double t, const Field& v) const {
    if (t < 0) throw ConfigError("semigroup time must be non-negative");
    if (t == 0) return v;
    Field out = apply_longitudinal(exp_matrix(t), v);
    if (grid_.d > 1) out = apply_transverse(out, [t](double l) { return std::exp(-l * t); });
    return out;
}

Propagator::Propagator(const LinearOperator& op, double dt) : op_(&op), dt_(dt), S_(op.exp_matrix(dt)) {}

Field Propagator::apply(const Field& v) const {
    Field out = op_->apply_longitudinal(S_, v);
    if (op_->grid().d > 1) {
        const double dt = dt_;
        out = op_->apply_transverse(out, [dt](double l) { return std::exp(-l * dt); });
    }
    return out;
}

Projector::Projector(const WaveProfile& profile, const Grid& grid)
    : grid_(grid),
      dphi0_(Field::broadcast(profile.dphi0[0], grid)),
      psi_(Field::broadcast(profile.psi, grid)),
      dphi0_line_(profile.dphi0[0]),
      psi_line_(profile.psi) {}

double Projector::coefficient(const Field& v) const { return inner_product(v, psi_) / grid_.torus_volume(); }

Field Projector::apply(const Field& v) const {
    Field out = dphi0_;
    out *= coefficient(v);
    return out;
}

Field Projector::complement(const Field& v) const {
    Field out = v;
    out.axpy(-coefficient(v), dphi0_);
    return out;
}

Eigen::MatrixXd Projector::complement_matrix() const {
    const Eigen::Index size = static_cast<Eigen::Index>(dphi0_line_.size());
    Eigen::MatrixXd P = Eigen::MatrixXd::Identity(size, size);
    P.noalias() -= grid_.dx() * dphi0_line_.vec() * psi_line_.vec().transpose();
    return P;
}

namespace {

double largest_singular_value(const Eigen::MatrixXd& B) {
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(B.cols(), 1.0, 2.0);
    for (Eigen::Index i = 0; i < x.size(); i += 2) x[i] = -x[i];
    x.normalize();
    double est = 0.0;
    for (int it = 0; it < 1000; ++it) {
        Eigen::VectorXd y = B.transpose() * (B * x);
        const double nrm = y.norm();
        if (nrm == 0.0) return 0.0;
        const double next = std::sqrt(nrm);
        x = y / nrm;
        if (std::abs(next - est) <= 1e-12 * next) {
            est = next;
            break;
        }
        est = next;
    }
    return est;
}

}  // namespace

double semigroup_norm(const LinearOperator& op, const Projector& proj, double t, double k) {
    const Grid line = op.grid().longitudinal();
    const Eigen::MatrixXd S = op.exp_matrix(t);
    const Eigen::MatrixXd W = sobolev_weight_matrix(line, op.n(), 0.5 * k);
    const Eigen::MatrixXd Wi = sobolev_weight_matrix(line, op.n(), -0.5 * k);
    double norm = largest_singular_value(W * S * proj.complement_matrix() * Wi);
    if (op.grid().d > 1) {
        const double l1 = op.grid().lambda1();
        const Eigen::MatrixXd W1 = sobolev_weight_matrix(line, op.n(), 0.5 * k, l1);
        const Eigen::MatrixXd W1i = sobolev_weight_matrix(line, op.n(), -0.5 * k, l1);
        norm = std::max(norm, std::exp(-l1 * t) * largest_singular_value(W1 * S * W1i));
    }
    return norm;
}

DecayCertificate decay_certificate(const LinearOperator& op, const Projector& proj, double k) {
    DecayCertificate cert;
    const double rate_ref = std::min(op.gap(), op.grid().lambda1());
    const double t_max = 20.0 / rate_ref;
    const int count = 24;
    for (int i = 0; i < count; ++i) {
        const double t = 0.25 * std::pow(t_max / 0.25, static_cast<double>(i) / (count - 1));
        cert.times.push_back(t);
        cert.norms.push_back(semigroup_norm(op, proj, t, k));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (int i = 0; i < count; ++i) {
        if (cert.times[i] < t_max / 2.0) continue;
        const double y = std::log(cert.norms[i]);
        sx += cert.times[i];
        sy += y;
        sxx += cert.times[i] * cert.times[i];
        sxy += cert.times[i] * y;
        ++cnt;
    }
    cert.beta_hat = -(cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    cert.M_hat = 1.0;
    for (int i = 0; i < count; ++i)
        cert.M_hat = std::max(cert.M_hat, cert.norms[i] * std::exp(cert.beta_hat * cert.times[i]));
    if (!(cert.beta_hat >= 0.9 * op.beta()))
        throw NumericalError("decay certificate failed: fitted rate below 0.9 beta");
    return cert;
}

Field apply_evolution_family(const LinearOperator& op, const std::function<double(double)>& nu, double s, double t,
                             const Field& v) {
    if (t < s) throw ConfigError("evolution family requires s <= t");
    const int steps = std::max(1, static_cast<int>(std::ceil((t - s) / 0.01)));
    const double h = (t - s) / steps;
    double integral = 0.0;
    for (int i = 0; i < steps; ++i) {
        const double value = nu(s + (i + 0.5) * h);
        if (!(value >= 0.5 && value <= 2.0)) throw ConfigError("nu outside the bracket [1/2, 2]");
        integral += value * h;
    }
    Field out = op.apply_longitudinal(op.exp_matrix(t - s), v);
    if (op.grid().d > 1) out = op.apply_transverse(out, [integral](double l) { return std::exp(-l * integral); });
    return out;
}

namespace {

void check_orthogonal(const Projector& proj, const Field& rhs) {
    if (std::abs(proj.coefficient(rhs)) > 1e-6) throw NumericalError("right-hand side is not orthogonal to psi");
}

}  // namespace

Field solve_on_range(const LinearOperator& op, const Projector& proj, const Field& rhs) {
    check_orthogonal(proj, rhs);
    ComplexMatrix c = transverse_fourier(rhs);
    const auto& lp = op.transverse_eigenvalues();
    for (Eigen::Index t = 0; t < c.cols(); ++t) {
        Eigen::VectorXcd y = op.left() * c.col(t);
        for (Eigen::Index k = 0; k < y.size(); ++k) {
            if (k == op.neutral_index() && lp[t] == 0.0)
                y[k] = 0.0;
            else
                y[k] *= -1.0 / (op.eigenvalues()[k] - lp[t]);
        }
        c.col(t) = op.right() * y;
    }
    return inverse_transverse_fourier(c, rhs.grid(), rhs.components());
}

Field solve_on_range_direct(const LinearOperator& op, const Projector& proj, const Field& rhs) {
    check_orthogonal(proj, rhs);
    ComplexMatrix c = transverse_fourier(rhs);
    const auto& lp = op.transverse_eigenvalues();
    const Eigen::Index size = op.matrix().rows();
    const Grid line = op.grid().longitudinal();
    const Field& dphi = proj.dphi0();
    const Field& psi = proj.psi();
    const int tp = op.grid().transverse_points();
    Eigen::VectorXd dphi_line(size), psi_line(size);
    for (Eigen::Index r = 0; r < size; ++r) {
        dphi_line[r] = dphi.data()[r * tp];
        psi_line[r] = psi.data()[r * tp];
    }
    for (Eigen::Index t = 0; t < c.cols(); ++t) {
        Eigen::VectorXcd sol;
        if (lp[t] == 0.0) {
            Eigen::MatrixXd M = Eigen::MatrixXd::Zero(size + 1, size + 1);
            M.topLeftCorner(size, size) = op.matrix();
            M.block(0, size, size, 1) = dphi_line;
            M.block(size, 0, 1, size) = line.dx() * psi_line.transpose();
            Eigen::VectorXcd b = Eigen::VectorXcd::Zero(size + 1);
            b.head(size) = -c.col(t);
            sol = M.cast<std::complex<double>>().partialPivLu().solve(b).head(size);
        } else {
            Eigen::MatrixXd M = op.matrix() - lp[t] * Eigen::MatrixXd::Identity(size, size);
            sol = M.cast<std::complex<double>>().partialPivLu().solve(Eigen::VectorXcd(-c.col(t)));
        }
        c.col(t) = sol;
    }
    return inverse_transverse_fourier(c, rhs.grid(), rhs.components());
}

}  // namespace wavefreeze
