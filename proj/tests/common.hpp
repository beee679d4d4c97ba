#pragma once

#include <cmath>
#include <memory>
#include <random>

#include "wavefreeze/field.hpp"
#include "wavefreeze/linear_flow.hpp"
#include "wavefreeze/model.hpp"
#include "wavefreeze/noise.hpp"
#include "wavefreeze/nonlinear.hpp"
#include "wavefreeze/wave.hpp"

namespace wftest {

using namespace wavefreeze;

// Nagumo setup shared by most tests: a = 0.25 on [-32, 32) with 256 points.
struct Setup {
    ModelPtr model;
    Grid grid;
    WaveProfile profile;
    NoisePtr noise;
    std::shared_ptr<LinearOperator> op;
    std::shared_ptr<Projector> proj;

    explicit Setup(Grid g = Grid::make(1, 32.0, 256), double a = 0.25, double q0 = 1.0, double ell = 2.0,
                   ModelPtr m = nullptr)
        : model(m ? m : builtin_nagumo(a)), grid(g) {
        profile = compute_wave(*model, grid);
        noise = std::make_shared<NoiseModel>(grid, model->m(), q0, ell);
        op = std::make_shared<LinearOperator>(*model, profile, grid);
        proj = std::make_shared<Projector>(profile, grid);
    }

    FreezeContext context(double sigma) const { return FreezeContext(model, profile, grid, noise, sigma); }

    static const Setup& nagumo() {
        static Setup s;
        return s;
    }
};

// Smooth localized random field with the given components.
inline Field random_bump(const Grid& grid, int comps, std::uint64_t seed, double amplitude = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Field f(grid, comps);
    const int tp = grid.transverse_points();
    for (int c = 0; c < comps; ++c) {
        const double a1 = nd(rng), a2 = nd(rng), a3 = nd(rng), shift = 0.5 * nd(rng);
        for (int i = 0; i < grid.N; ++i) {
            const double x = grid.x(i) - shift;
            for (int t = 0; t < tp; ++t) {
                const double y = tp > 1 ? grid.dx_perp() * t : 0.0;
                const double tr = tp > 1 ? 1.0 + 0.3 * a3 * std::sin(2.0 * 3.141592653589793 * y / grid.T_perp) : 1.0;
                f(c, static_cast<std::size_t>(i) * tp + t) =
                    amplitude * (a1 + a2 * x + a3 * x * x / 4.0) * std::exp(-x * x / 2.0) * tr;
            }
        }
    }
    return f;
}

inline double rel_diff(const Field& a, const Field& b) {
    const double scale = std::max(l2_norm(a), l2_norm(b));
    return scale == 0.0 ? 0.0 : l2_norm(a - b) / scale;
}

}  // namespace wftest
