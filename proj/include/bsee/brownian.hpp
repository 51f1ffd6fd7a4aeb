#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rng.hpp"
#include "time_grid.hpp"

namespace bsee {

//Pre-sampled d-dimensional Brownian increments on a grid.
//increment(path, step, comp) ~ N(0, dt), and the whole path is a pure
//function of (master_seed, path): adding paths or reordering evaluation
//never changes existing ones.
class BrownianBundle {
public:
    BrownianBundle(const TimeGrid& grid, int n_paths, int d, std::uint64_t master_seed)
        : grid_(grid), n_paths_(n_paths), d_(d), seed_(master_seed) {
        if (n_paths < 1) throw std::invalid_argument("BrownianBundle: need >= 1 path");
        if (d < 1) throw std::invalid_argument("BrownianBundle: need >= 1 noise component");
        const int n = grid.n_steps();
        const double sdt = std::sqrt(grid.dt());
        inc_.resize(static_cast<size_t>(n_paths) * n * d);
        val_.resize(static_cast<size_t>(n_paths) * (n + 1) * d);
        for (int p = 0; p < n_paths; ++p) {
            std::uint64_t key = path_key(master_seed, static_cast<std::uint64_t>(p));
            for (int i = 0; i < d; ++i) val_[vidx(p, 0, i)] = 0.0;
            for (int k = 0; k < n; ++k)
                for (int i = 0; i < d; ++i) {
                    double z = standard_normal(key, static_cast<std::uint64_t>(k) * d + i);
                    inc_[iidx(p, k, i)] = sdt * z;
                    val_[vidx(p, k + 1, i)] = val_[vidx(p, k, i)] + inc_[iidx(p, k, i)];
                }
        }
    }

    const TimeGrid& grid() const { return grid_; }
    int n_paths() const { return n_paths_; }
    int dim_noise() const { return d_; }
    std::uint64_t master_seed() const { return seed_; }

    double increment(int path, int step, int comp) const {
        check(path, comp); grid_.check_step(step);
        return inc_[iidx(path, step, comp)];
    }

    //W(t_k); cumulative sum of increments.
    double value(int path, int node, int comp) const {
        check(path, comp); grid_.check_node(node);
        return val_[vidx(path, node, comp)];
    }

    //Copy with increments at steps >= from_step regenerated from another seed.
    //Used by adaptedness tests: outputs at earlier nodes must not change.
    BrownianBundle with_tail_resampled(int from_step, std::uint64_t other_seed) const {
        grid_.check_node(from_step);
        BrownianBundle out(*this);
        const int n = grid_.n_steps();
        const double sdt = std::sqrt(grid_.dt());
        for (int p = 0; p < n_paths_; ++p) {
            std::uint64_t key = path_key(other_seed, static_cast<std::uint64_t>(p));
            for (int k = from_step; k < n; ++k)
                for (int i = 0; i < d_; ++i) {
                    double z = standard_normal(key, static_cast<std::uint64_t>(k) * d_ + i);
                    out.inc_[iidx(p, k, i)] = sdt * z;
                }
            for (int k = from_step; k < n; ++k)
                for (int i = 0; i < d_; ++i)
                    out.val_[vidx(p, k + 1, i)] = out.val_[vidx(p, k, i)] + out.inc_[iidx(p, k, i)];
        }
        return out;
    }

private:
    size_t iidx(int p, int k, int i) const {
        return (static_cast<size_t>(p) * grid_.n_steps() + k) * d_ + i;
    }
    size_t vidx(int p, int k, int i) const {
        return (static_cast<size_t>(p) * (grid_.n_steps() + 1) + k) * d_ + i;
    }
    void check(int path, int comp) const {
        if (path < 0 || path >= n_paths_) throw std::invalid_argument("BrownianBundle: path out of range");
        if (comp < 0 || comp >= d_) throw std::invalid_argument("BrownianBundle: component out of range");
    }

    TimeGrid grid_;
    int n_paths_, d_;
    std::uint64_t seed_;
    std::vector<double> inc_, val_;
};

inline BrownianBundle sample_brownian(const TimeGrid& grid, int n_paths, int d, std::uint64_t seed) {
    return BrownianBundle(grid, n_paths, d, seed);
}

} // namespace bsee
