#include "wavefreeze/limits.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wavefreeze/errors.hpp"

namespace wavefreeze {

Eigen::MatrixXd lyapunov_spectral(const Eigen::VectorXcd& lambda, const ComplexMatrix& R,
                                  const ComplexMatrix& Rinv, const Eigen::MatrixXd& G, Eigen::Index skip) {
    const ComplexMatrix H = Rinv * G.cast<std::complex<double>>() * Rinv.transpose();
    ComplexMatrix X(H.rows(), H.cols());
    for (Eigen::Index l = 0; l < H.cols(); ++l)
        for (Eigen::Index k = 0; k < H.rows(); ++k)
            X(k, l) = (k == skip || l == skip) ? std::complex<double>(0.0) : -H(k, l) / (lambda(k) + lambda(l));
    const Eigen::MatrixXd C = (R * X * R.transpose()).real();
    return 0.5 * (C + C.transpose());
}

Eigen::MatrixXd lyapunov_smith(const Eigen::MatrixXd& A, const Eigen::MatrixXd& G, double p) {
    if (!(p > 0.0)) throw ConfigError("Cayley shift must be positive");
    const Eigen::Index n = A.rows();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(A - p * I);
    Eigen::MatrixXd Ak = lu.solve(A + p * I);
    const Eigen::MatrixXd U = lu.solve(I);
    Eigen::MatrixXd X = 2.0 * p * U * G * U.transpose();
    for (int it = 0; it < 80; ++it) {
        const Eigen::MatrixXd add = Ak * X * Ak.transpose();
        X += add;
        if (add.norm() <= 1e-17 * X.norm()) break;
        Ak = Ak * Ak;
        if (!Ak.allFinite()) throw NumericalError("Smith iteration diverged");
    }
    return 0.5 * (X + X.transpose());
}

double lyapunov_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C, const Eigen::MatrixXd& G) {
    const double g = G.norm();
    return g == 0.0 ? (A * C + C * A.transpose()).norm() : (A * C + C * A.transpose() + G).norm() / g;
}

namespace {

Eigen::VectorXd line_vector(const Field& f) { return f.vec(); }

// Longitudinal circulant blocks of the point covariance for transverse mode t.
Eigen::MatrixXd noise_mode_matrix(const NoiseModel& noise, const Grid& grid, int t) {
    const int N = grid.N, m = noise.m(), P = grid.transverse_points();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m * N, m * N);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            std::vector<double> kappa(N, 0.0);
            for (int delta = 0; delta < N; ++delta) {
                double s = 0.0;
                for (int i = 0; i < N; ++i)
                    s += noise.q_hat(static_cast<std::size_t>(i) * P + t)(a, b) *
                         std::cos(2.0 * std::numbers::pi * static_cast<double>(i) * delta / N);
                kappa[delta] = s / N;
            }
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j) M(a * N + i, b * N + j) = kappa[((i - j) % N + N) % N];
        }
    return M;
}

}  // namespace

CovarianceOperator stationary_covariance(const FreezeContext& ctx, const LinearOperator& op, const Projector& proj,
                                         bool smith_route) {
    const Grid& grid = ctx.grid();
    const int N = grid.N, n = ctx.n(), m = ctx.m(), P = grid.transverse_points();
    const double dV = grid.cell_volume();
    const PhaseData pd0 = phase_data(ctx, Field(grid, n));
    const WaveProfile& prof = ctx.profile();
    const Eigen::VectorXd dphi = line_vector(prof.dphi0[0]);
    const Eigen::VectorXd psi = line_vector(prof.psi);
    const double dx = grid.dx();

    Eigen::MatrixXd Bg = Eigen::MatrixXd::Zero(n * N, m * N);
    Eigen::MatrixXd Bw = Eigen::MatrixXd::Zero(n * N, m * N);
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < m; ++a)
            for (int x = 0; x < N; ++x) {
                const std::size_t p = static_cast<std::size_t>(x) * P;
                Bg(i * N + x, a * N + x) = pd0.g(i * m + a, p);
                for (int y = 0; y < N; ++y)
                    Bw(i * N + x, a * N + y) = P * dV * dphi(i * N + x) * pd0.w_b(a, static_cast<std::size_t>(y) * P);
            }

    const Eigen::MatrixXd A = op.matrix();
    const Eigen::MatrixXd Pc = proj.complement_matrix();
    const Eigen::MatrixXd Ad = A - dphi * psi.transpose() * dx;
    double lam_lo = 1.0, lam_hi = 0.0;
    for (Eigen::Index k = 0; k < op.eigenvalues().size(); ++k) {
        lam_hi = std::max(lam_hi, std::abs(op.eigenvalues()(k)));
        if (k != op.neutral_index()) lam_lo = std::min(lam_lo, std::abs(op.eigenvalues()(k).real()));
    }

    CovarianceOperator cov;
    cov.grid = grid;
    cov.n = n;
    const auto& lperp = op.transverse_eigenvalues();
    for (int t = 0; t < P; ++t) {
        const Eigen::MatrixXd Mq = noise_mode_matrix(ctx.noise(), grid, t) / dV;
        const Eigen::MatrixXd B = t == 0 ? Eigen::MatrixXd(Bg + Bw) : Bg;
        Eigen::MatrixXd G = B * Mq * B.transpose();
        if (t == 0) G = Pc * G * Pc.transpose();
        G = 0.5 * (G + G.transpose());
        const double lp = lperp[t];
        Eigen::VectorXcd lam = op.eigenvalues();
        for (Eigen::Index k = 0; k < lam.size(); ++k) lam(k) -= lp;
        const Eigen::Index skip = (t == 0 && lp == 0.0) ? op.neutral_index() : -1;
        Eigen::MatrixXd C = lyapunov_spectral(lam, op.right(), op.left(), G, skip);
        const Eigen::MatrixXd At = (t == 0 ? Ad : A) - lp * Eigen::MatrixXd::Identity(A.rows(), A.cols());
        cov.lyapunov_residual = std::max(cov.lyapunov_residual, lyapunov_residual(At, C, G));
        if (smith_route) {
            const double p = std::sqrt((lam_lo + lp) * (lam_hi + lp));
            Eigen::MatrixXd Cs = lyapunov_smith(At, G, p);
            const double scale = std::max(C.norm(), 1e-300);
            cov.route_difference = std::max(cov.route_difference, (C - Cs).norm() / scale);
            cov.trace_smith += dV * Cs.trace();
            cov.modes_smith.push_back(std::move(Cs));
        }
        cov.trace += dV * C.trace();
        cov.modes.push_back(std::move(C));
        cov.forcing.push_back(std::move(G));
    }
    if (!smith_route) cov.trace_smith = cov.trace;

    cov.diagonal = Field(grid, n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int x = 0; x < N; ++x) {
                double s = 0.0;
                for (int t = 0; t < P; ++t) s += cov.modes[t](i * N + x, j * N + x);
                for (int y = 0; y < P; ++y) cov.diagonal(i * n + j, static_cast<std::size_t>(x) * P + y) = s / P;
            }

    double top = 0.0, bottom = 0.0;
    for (const auto& C : cov.modes) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C, Eigen::EigenvaluesOnly);
        top = std::max(top, es.eigenvalues().maxCoeff());
        bottom = std::min(bottom, es.eigenvalues().minCoeff());
    }
    cov.min_eigenvalue = top > 0.0 ? bottom / top : 0.0;
    const double cn = cov.modes[0].norm();
    cov.psi_pairing = cn > 0.0 ? (psi.transpose() * cov.modes[0]).norm() / (cn * psi.norm()) : 0.0;
    return cov;
}

void CovarianceOperator::eigenpairs(Eigen::VectorXd& values, Eigen::MatrixXd& vectors) const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(modes.at(0));
    values = es.eigenvalues().reverse();
    vectors = es.eigenvectors().rowwise().reverse();
}

Field CovarianceOperator::mode_field(const Eigen::VectorXd& column) const {
    if (grid.d != 1) throw ConfigError("covariance mode fields are available for d = 1 only");
    Field f(grid, n);
    f.vec() = column;
    return f;
}

Field hessian_contraction(const FreezeContext& ctx, const CovarianceOperator& cov) {
    const int n = ctx.n();
    Field out(ctx.grid(), n);
    std::vector<double> u(n), ei(n), ej(n), val(n);
    for (std::size_t p = 0; p < out.points(); ++p) {
        for (int i = 0; i < n; ++i) u[i] = ctx.phi0()(i, p);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                std::fill(ei.begin(), ei.end(), 0.0);
                std::fill(ej.begin(), ej.end(), 0.0);
                ei[i] = 1.0;
                ej[j] = 1.0;
                const double* dirs[2] = {ei.data(), ej.data()};
                ctx.model().derivative(Which::f, 2, u.data(), dirs, val.data());
                const double c = cov.diagonal(i * n + j, p);
                for (int k = 0; k < n; ++k) out(k, p) += val[k] * c;
            }
    }
    return out;
}

namespace {

// P-tilde applied as in D^2 R_I(0): h - chi_l(0) <h, psi> phi0'.
Field tilde_project(const FreezeContext& ctx, const PhaseData& pd0, Field h) {
    h.axpy(-pd0.chi_l * inner_product(h, ctx.psi()), ctx.dphi0());
    return h;
}

// Pointwise D^2 f(phi0)[e, e].
Field hessian_along(const FreezeContext& ctx, const Field& e) {
    const int n = ctx.n();
    Field out(e.grid(), n);
    std::vector<double> u(n), d(n), val(n);
    const double* dirs[2] = {d.data(), d.data()};
    for (std::size_t p = 0; p < e.points(); ++p) {
        for (int i = 0; i < n; ++i) {
            u[i] = ctx.phi0()(i, p);
            d[i] = e(i, p);
        }
        ctx.model().derivative(Which::f, 2, u.data(), dirs, val.data());
        for (int k = 0; k < n; ++k) out(k, p) = val[k];
    }
    return out;
}

}  // namespace

MeanLimit mean_limit_Y2(const FreezeContext& ctx, const LinearOperator& op, const Projector& proj,
                        const CovarianceOperator& cov, int modes) {
    const Field zero(ctx.grid(), ctx.n());
    const PhaseData pd0 = phase_data(ctx, zero);
    Field half = hessian_contraction(ctx, cov);
    half *= 0.5;
    const Field contraction = tilde_project(ctx, pd0, half);
    MeanLimit out;
    out.source = contraction;
    out.source += R_II_plus_Upsilon(ctx, pd0);
    out.source = proj.complement(out.source);
    out.mean = solve_on_range(op, proj, out.source);

    if (modes > 0 && ctx.grid().d == 1) {
        Eigen::VectorXd mu;
        Eigen::MatrixXd E;
        cov.eigenpairs(mu, E);
        const int k = std::min<int>(modes, static_cast<int>(mu.size()));
        Field analytic(ctx.grid(), ctx.n()), fd(ctx.grid(), ctx.n());
        const FieldMap RI = [&ctx](const Field& v) { return R_I(ctx, v); };
        for (int i = 0; i < k; ++i) {
            if (mu(i) <= 0.0) break;
            const Field e = cov.mode_field(E.col(i));
            analytic.axpy(0.5 * mu(i), tilde_project(ctx, pd0, hessian_along(ctx, e)));
            fd.axpy(0.5 * mu(i), directional_derivative(RI, {&e, &e}, zero));
        }
        const double a = l2_norm(analytic), c = l2_norm(contraction);
        out.fd_error = a > 0.0 ? l2_norm(fd - analytic) / a : 0.0;
        out.truncation_error = c > 0.0 ? l2_norm(contraction - analytic) / c : 0.0;
    }
    return out;
}

SpeedCoefficient wave_speed_c2(const FreezeContext& ctx, const CovarianceOperator& cov) {
    const PhaseData pd0 = phase_data(ctx, Field(ctx.grid(), ctx.n()));
    const Field F = hessian_contraction(ctx, cov);
    SpeedCoefficient s;
    s.chi_l = pd0.chi_l;
    s.hessian_term = 0.5 * inner_product(F, ctx.psi());
    s.K_term = inner_product(K_C_pair(ctx, ctx.phi0()).K, ctx.dpsi());
    s.nu_term = pd0.nu_tilde * ctx.pair_phi0_ddpsi();
    s.c2 = -pd0.chi_l * (s.hessian_term - s.K_term + s.nu_term);
    return s;
}

namespace {

double first_difference(const ScalarFunctional& phi, const Field& zero, const Field& d) {
    const double nrm = l2_norm(d);
    if (nrm == 0.0) return 0.0;
    auto central = [&](double h) {
        Field p = zero, q = zero;
        p.axpy(h, d);
        q.axpy(-h, d);
        return (phi(p) - phi(q)) / (2.0 * h);
    };
    const double h = 1e-3 / nrm;
    return (4.0 * central(0.5 * h) - central(h)) / 3.0;
}

double second_difference(const ScalarFunctional& phi, const Field& zero, const Field& d, double f0) {
    const double nrm = l2_norm(d);
    if (nrm == 0.0) return 0.0;
    auto central = [&](double h) {
        Field p = zero, q = zero;
        p.axpy(h, d);
        q.axpy(-h, d);
        return (phi(p) - 2.0 * f0 + phi(q)) / (h * h);
    };
    const double h = 1e-3 / nrm;
    return (4.0 * central(0.5 * h) - central(h)) / 3.0;
}

}  // namespace

LimitCoefficients functional_h_infinity(const FreezeContext& ctx, const LinearOperator& op, const Projector& proj,
                                        const CovarianceOperator& cov, const ScalarFunctional& phi, int r) {
    if (r != 3) throw ConfigError("limiting coefficients are implemented for r = 3 only");
    if (ctx.grid().d != 1) throw ConfigError("limiting coefficients are implemented for d = 1 only");
    const Field zero(ctx.grid(), ctx.n());
    LimitCoefficients out;
    const double f0 = phi(zero);
    const MeanLimit ml = mean_limit_Y2(ctx, op, proj, cov, 0);
    Eigen::VectorXd mu;
    Eigen::MatrixXd E;
    cov.eigenpairs(mu, E);
    double quad = 0.0;
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
        if (mu(i) <= 1e-13 * mu(0)) break;
        quad += mu(i) * second_difference(phi, zero, cov.mode_field(E.col(i)), f0);
    }
    out.h_inf = {f0, 0.0, first_difference(phi, zero, ml.mean) + 0.5 * quad};
    out.c2 = wave_speed_c2(ctx, cov).c2;
    return out;
}

RateFit convergence_rate_fit(const std::vector<double>& t, const std::vector<double>& y) {
    if (t.size() != y.size()) throw ConfigError("rate fit needs matching time and value series");
    if (t.size() < 6) throw ConfigError("rate fit needs at least six time points");
    const Eigen::Index n = static_cast<Eigen::Index>(t.size());
    const Eigen::Map<const Eigen::VectorXd> Y(y.data(), n);
    auto solve = [&](double c, RateFit* fit) {
        Eigen::MatrixXd M(n, 2);
        for (Eigen::Index i = 0; i < n; ++i) {
            M(i, 0) = 1.0;
            M(i, 1) = std::exp(-c * t[i]);
        }
        const Eigen::Vector2d ab = M.colPivHouseholderQr().solve(Y);
        const double rms = std::sqrt((M * ab - Y).squaredNorm() / n);
        if (fit) *fit = {ab(0), ab(1), c, rms};
        return rms;
    };
    const double lo = std::log(1e-4), hi = std::log(1e2);
    const int scan = 400;
    int best = 0;
    double best_r = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= scan; ++i) {
        const double r = solve(std::exp(lo + (hi - lo) * i / scan), nullptr);
        if (r < best_r) {
            best_r = r;
            best = i;
        }
    }
    if (best == 0 || best == scan) throw NumericalError("rate fit failed: optimum at the scan boundary");
    double a = lo + (hi - lo) * (best - 1) / scan, b = lo + (hi - lo) * (best + 1) / scan;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = solve(std::exp(x1), nullptr), f2 = solve(std::exp(x2), nullptr);
    for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = solve(std::exp(x1), nullptr);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = solve(std::exp(x2), nullptr);
        }
    }
    RateFit fit{};
    solve(std::exp(0.5 * (a + b)), &fit);
    if (!std::isfinite(fit.limit)) throw NumericalError("rate fit failed");
    return fit;
}

}  // namespace wavefreeze
