#include "wavefreeze/wave.hpp"

#include <cmath>
#include <limits>

#include "wavefreeze/errors.hpp"

namespace wavefreeze {

double logistic_derivative(double x, int order) {
    const double s = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    const double s1 = s * (1.0 - s);
    switch (order) {
        case 0: return s;
        case 1: return s1;
        case 2: return s1 * (1.0 - 2.0 * s);
        case 3: return s1 * (1.0 - 6.0 * s + 6.0 * s * s);
        case 4: return s1 * (1.0 - 2.0 * s) * (1.0 - 12.0 * s + 12.0 * s * s);
        default: throw ConfigError("logistic derivative order must be in 0..4");
    }
}

Eigen::MatrixXd derivative_matrix(const Grid& line, int order) {
    const int N = line.N;
    Eigen::MatrixXd D(N, N);
    Field e(line, 1);
    for (int j = 0; j < N; ++j) {
        e.set_zero();
        e(0, j) = 1.0;
        Field col = spectral_derivative(e, 0, order);
        for (int i = 0; i < N; ++i) D(i, j) = col(0, i);
    }
    return D;
}

namespace {

// Reference connection ref(x - shift) and derivatives for every component.
Field reference_field(const Grid& line, const Eigen::VectorXd& um, const Eigen::VectorXd& up, int order,
                      double shift) {
    Field out(line, static_cast<int>(um.size()));
    for (int c = 0; c < um.size(); ++c)
        for (int i = 0; i < line.N; ++i) {
            const double s = logistic_derivative(line.x(i) - shift, order);
            out(c, i) = (order == 0 ? um[c] : 0.0) + (up[c] - um[c]) * s;
        }
    return out;
}

Eigen::VectorXd point_of(const Field& f, int i) {
    Eigen::VectorXd p(f.components());
    for (int c = 0; c < f.components(); ++c) p[c] = f(c, i);
    return p;
}

void fill_profile_fields(WaveProfile& prof, double shift) {
    const Grid& line = prof.line;
    prof.phi0 = reference_field(line, prof.ref_minus, prof.ref_plus, 0, shift) + prof.w;
    for (int k = 1; k <= 4; ++k)
        prof.dphi0[k - 1] =
            reference_field(line, prof.ref_minus, prof.ref_plus, k, shift) + spectral_derivative(prof.w, 0, k);
}

}  // namespace

WaveProfile WaveProfile::translated(double gamma) const {
    WaveProfile out = *this;
    out.w = translate(w, gamma);
    fill_profile_fields(out, gamma);
    out.psi = translate(psi, gamma);
    return out;
}

Eigen::MatrixXd linearization_matrix(const ReactionModel& model, const WaveProfile& profile) {
    const int N = profile.line.N, n = model.n();
    const Eigen::MatrixXd D1 = derivative_matrix(profile.line, 1);
    const Eigen::MatrixXd D2 = derivative_matrix(profile.line, 2);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n * N, n * N);
    for (int a = 0; a < n; ++a) A.block(a * N, a * N, N, N) = D2 + profile.c0 * D1;
    Eigen::VectorXd col(n), dir(n);
    for (int i = 0; i < N; ++i) {
        Eigen::VectorXd p = point_of(profile.phi0, i);
        for (int b = 0; b < n; ++b) {
            dir.setZero();
            dir[b] = 1.0;
            const double* dirs[1] = {dir.data()};
            model.derivative(Which::f, 1, p.data(), dirs, col.data());
            for (int a = 0; a < n; ++a) A(a * N + i, b * N + i) += col[a];
        }
    }
    return A;
}

WaveProfile solve_profile(const ReactionModel& model, const Grid& grid, const std::optional<Field>& init,
                          const ProfileOptions& options) {
    const Grid line = grid.longitudinal();
    const int N = line.N, n = model.n();
    const double dx = line.dx();
    WaveProfile prof;
    prof.line = line;
    prof.ref_minus = model.u_minus();
    prof.ref_plus = model.u_plus();
    if (std::abs(prof.ref_plus[0] - prof.ref_minus[0]) == 0.0)
        throw ConfigError("first component must connect distinct pinning states");

    const Field ref0 = reference_field(line, prof.ref_minus, prof.ref_plus, 0, 0.0);
    const Field ref1 = reference_field(line, prof.ref_minus, prof.ref_plus, 1, 0.0);
    const Field ref2 = reference_field(line, prof.ref_minus, prof.ref_plus, 2, 0.0);
    prof.w = Field(line, n);
    if (init) {
        if (init->components() != n || init->grid().N != N)
            throw ConfigError("initial profile shape does not match the model and grid");
        Field line_init(line, n);
        for (int c = 0; c < n; ++c)
            for (int i = 0; i < N; ++i) line_init(c, i) = (*init)(c, static_cast<std::size_t>(i) * init->grid().transverse_points());
        prof.w = line_init - ref0;
    }

    const int anchor = static_cast<int>(std::lround((options.phase_anchor + line.L) / dx));
    if (anchor < 0 || anchor >= N) throw ConfigError("phase anchor outside the grid");
    const double mid = 0.5 * (prof.ref_minus[0] + prof.ref_plus[0]);

    const Eigen::MatrixXd D1 = derivative_matrix(line, 1);
    const Eigen::MatrixXd D2 = derivative_matrix(line, 2);

    auto evaluate = [&](const Field& w, double c, Eigen::VectorXd& F, Field& phi, Field& dphi) {
        phi = ref0 + w;
        dphi = ref1 + spectral_derivative(w, 0, 1);
        const Field ddphi = ref2 + spectral_derivative(w, 0, 2);
        F.resize(n * N + 1);
        Eigen::VectorXd fv(n);
        for (int i = 0; i < N; ++i) {
            Eigen::VectorXd p = point_of(phi, i);
            model.derivative(Which::f, 0, p.data(), nullptr, fv.data());
            for (int a = 0; a < n; ++a) F[a * N + i] = ddphi(a, i) + c * dphi(a, i) + fv[a];
        }
        F[n * N] = phi(0, anchor) - mid;
        return F.cwiseAbs().maxCoeff();
    };

    Field phi, dphi;
    Eigen::VectorXd F;
    evaluate(prof.w, 0.0, F, phi, dphi);
    {
        // Speed guess from the energy identity c |Phi'|^2 = -<f(Phi), Phi'>.
        double num = 0.0, den = 0.0;
        Eigen::VectorXd fv(n);
        for (int i = 0; i < N; ++i) {
            Eigen::VectorXd p = point_of(phi, i);
            model.derivative(Which::f, 0, p.data(), nullptr, fv.data());
            for (int a = 0; a < n; ++a) {
                num += fv[a] * dphi(a, i);
                den += dphi(a, i) * dphi(a, i);
            }
        }
        prof.c0 = den > 0 ? -num / den : 0.0;
    }

    double res = evaluate(prof.w, prof.c0, F, phi, dphi);
    int it = 0;
    for (; it < options.max_iterations && res > options.tolerance; ++it) {
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n * N + 1, n * N + 1);
        for (int a = 0; a < n; ++a) J.block(a * N, a * N, N, N) = D2 + prof.c0 * D1;
        Eigen::VectorXd col(n), dir(n);
        for (int i = 0; i < N; ++i) {
            Eigen::VectorXd p = point_of(phi, i);
            for (int b = 0; b < n; ++b) {
                dir.setZero();
                dir[b] = 1.0;
                const double* dirs[1] = {dir.data()};
                model.derivative(Which::f, 1, p.data(), dirs, col.data());
                for (int a = 0; a < n; ++a) J(a * N + i, b * N + i) += col[a];
            }
            for (int a = 0; a < n; ++a) J(a * N + i, n * N) = dphi(a, i);
        }
        J(n * N, anchor) = 1.0;
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
        if (!(lu.rcond() > 1e-15)) throw NumericalError("degenerate Newton Jacobian for the wave profile");
        const Eigen::VectorXd step = lu.solve(-F);
        double lambda = 1.0;
        for (;; lambda *= 0.5) {
            Field trial_w = prof.w;
            for (int a = 0; a < n; ++a)
                for (int i = 0; i < N; ++i) trial_w(a, i) += lambda * step[a * N + i];
            const double trial_c = prof.c0 + lambda * step[n * N];
            Eigen::VectorXd trial_F;
            Field tphi, tdphi;
            const double trial_res = evaluate(trial_w, trial_c, trial_F, tphi, tdphi);
            if (trial_res < res || lambda < 1e-4) {
                prof.w = trial_w;
                prof.c0 = trial_c;
                res = trial_res;
                F = trial_F;
                phi = tphi;
                dphi = tdphi;
                break;
            }
        }
    }
    if (!(res <= options.tolerance)) throw NumericalError("wave profile Newton iteration did not converge");
    prof.residual = res;
    prof.newton_iterations = it;
    fill_profile_fields(prof, 0.0);
    double ff = 0.0;
    for (int c = 0; c < n; ++c) {
        ff = std::max(ff, std::abs(prof.phi0(c, 0) - prof.ref_minus[c]));
        ff = std::max(ff, std::abs(prof.phi0(c, N - 1) - prof.ref_plus[c]));
    }
    prof.far_field_error = ff;
    return prof;
}

Field compute_adjoint(const ReactionModel& model, const Grid& grid, const WaveProfile& profile) {
    (void)grid;
    const int N = profile.line.N, n = model.n();
    const int size = n * N;
    const double dx = profile.line.dx();
    const Eigen::MatrixXd A = linearization_matrix(model, profile);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(size + 1, size + 1);
    M.topLeftCorner(size, size) = A.transpose();
    const Eigen::Map<const Eigen::VectorXd> dphi(profile.dphi0[0].data(), size);
    M.block(0, size, size, 1) = dphi;
    M.block(size, 0, 1, size) = dx * dphi.transpose();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(size + 1);
    rhs[size] = 1.0;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
    if (!(lu.rcond() > 1e-15)) throw NumericalError("adjoint null vector is not isolated");
    const Eigen::VectorXd sol = lu.solve(rhs);
    Field psi(profile.line, n);
    psi.vec() = sol.head(size);
    psi *= 1.0 / inner_product(psi, profile.dphi0[0]);
    return psi;
}

SpectralGap spectral_gap(const ReactionModel& model, const Grid& grid, const WaveProfile& profile,
                         double zero_tolerance) {
    (void)grid;
    const Eigen::MatrixXd A = linearization_matrix(model, profile);
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
    if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed on the linearization");
    SpectralGap out;
    out.eigenvalues = es.eigenvalues();
    out.near_zero_count = 0;
    out.lambda0_residual = std::numeric_limits<double>::infinity();
    Eigen::Index neutral = 0;
    for (Eigen::Index k = 0; k < out.eigenvalues.size(); ++k) {
        const double mag = std::abs(out.eigenvalues[k]);
        if (mag < zero_tolerance) ++out.near_zero_count;
        if (mag < out.lambda0_residual) {
            out.lambda0_residual = mag;
            neutral = k;
        }
    }
    if (out.near_zero_count > 1) throw NumericalError("neutral eigenvalue is not simple");
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < out.eigenvalues.size(); ++k)
        if (k != neutral) top = std::max(top, out.eigenvalues[k].real());
    if (top >= 0.0) throw NumericalError("spectral stability violated: eigenvalue with Re >= 0 besides the neutral one");
    out.gap = -top;
    out.beta_tw = 0.5 * out.gap;
    return out;
}

namespace {

// Slope of log|phi0 - u| against x over the tail window on one side.
double fit_tail_rate(const WaveProfile& prof, const Eigen::VectorXd& u, bool left) {
    const Grid& line = prof.line;
    const double scale = (prof.ref_plus - prof.ref_minus).cwiseAbs().maxCoeff();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (int i = 0; i < line.N; ++i) {
        const double x = line.x(i);
        if ((left && x >= 0) || (!left && x <= 0)) continue;
        double e = 0.0;
        for (int c = 0; c < prof.phi0.components(); ++c) e = std::max(e, std::abs(prof.phi0(c, i) - u[c]));
        e /= scale;
        if (e < 1e-9 || e > 1e-3) continue;
        const double y = std::log(e);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++cnt;
    }
    if (cnt < 4) return std::numeric_limits<double>::quiet_NaN();
    const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    return left ? slope : -slope;
}

// Slowest spatial decay rate of the linearization about a pinning state.
double linear_tail_rate(const ReactionModel& model, double c0, const Eigen::VectorXd& u, bool left) {
    const int n = model.n();
    Eigen::MatrixXd Df(n, n);
    Eigen::VectorXd dir(n), col(n);
    for (int b = 0; b < n; ++b) {
        dir.setZero();
        dir[b] = 1.0;
        const double* dirs[1] = {dir.data()};
        model.derivative(Which::f, 1, u.data(), dirs, col.data());
        Df.col(b) = col;
    }
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    C.topRightCorner(n, n).setIdentity();
    C.bottomLeftCorner(n, n) = -Df;
    C.bottomRightCorner(n, n) = -c0 * Eigen::MatrixXd::Identity(n, n);
    Eigen::EigenSolver<Eigen::MatrixXd> es(C, false);
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
        const double re = es.eigenvalues()[k].real();
        if (left && re > 0) best = std::min(best, re);
        if (!left && re < 0) best = std::min(best, -re);
    }
    return best;
}

}  // namespace

WaveProfile compute_wave(const ReactionModel& model, const Grid& grid, const std::optional<Field>& init,
                         const ProfileOptions& options) {
    WaveProfile prof = solve_profile(model, grid, init, options);
    prof.psi = compute_adjoint(model, grid, prof);
    const Eigen::MatrixXd A = linearization_matrix(model, prof);
    Field adj(prof.line, model.n());
    adj.vec() = A.transpose() * prof.psi.vec();
    prof.adjoint_residual = l2_norm(adj);
    const SpectralGap gap = spectral_gap(model, grid, prof);
    prof.lambda0_residual = gap.lambda0_residual;
    prof.beta_tw = gap.beta_tw;
    prof.gap = gap.gap;
    prof.nu_minus = fit_tail_rate(prof, model.u_minus(), true);
    prof.nu_plus = fit_tail_rate(prof, model.u_plus(), false);
    prof.nu_minus_linear = linear_tail_rate(model, prof.c0, model.u_minus(), true);
    prof.nu_plus_linear = linear_tail_rate(model, prof.c0, model.u_plus(), false);
    return prof;
}

}  // namespace wavefreeze
