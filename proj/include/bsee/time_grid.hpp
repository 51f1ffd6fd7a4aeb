#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace bsee {

//Uniform grid on [t_start, t_end] with n_steps intervals.
//node(k) is evaluated as t_start + span * (k/n) so that dyadic refinements
//share node values bit-exactly with their parents.
class TimeGrid {
public:
    TimeGrid(double t_start, double t_end, int n_steps)
        : t0_(t_start), t1_(t_end), n_(n_steps) {
        if (!(t_end > t_start)) throw std::invalid_argument("TimeGrid: t_end must exceed t_start");
        if (n_steps < 1) throw std::invalid_argument("TimeGrid: n_steps must be >= 1");
        if (!std::isfinite(t_start) || !std::isfinite(t_end))
            throw std::invalid_argument("TimeGrid: endpoints must be finite");
    }

    double t_start() const { return t0_; }
    double t_end() const { return t1_; }
    int n_steps() const { return n_; }
    double dt() const { return (t1_ - t0_) / static_cast<double>(n_); }

    double node(int k) const {
        check_node(k);
        return t0_ + (t1_ - t0_) * (static_cast<double>(k) / static_cast<double>(n_));
    }

    TimeGrid refined(int factor) const {
        if (factor < 1) throw std::invalid_argument("TimeGrid: refinement factor must be >= 1");
        return TimeGrid(t0_, t1_, n_ * factor);
    }

    //Number of grid steps per block when [t0,t1] is split into n_blocks equal blocks.
    //Blocks must align with grid nodes.
    int steps_per_block(int n_blocks) const {
        if (n_blocks < 1 || n_ % n_blocks != 0)
            throw std::invalid_argument("TimeGrid: block count " + std::to_string(n_blocks) +
                                        " does not divide " + std::to_string(n_) + " steps");
        return n_ / n_blocks;
    }

    int block_of_step(int k, int n_blocks) const {
        check_step(k);
        return k / steps_per_block(n_blocks);
    }

    int block_start_step(int block, int n_blocks) const {
        int spb = steps_per_block(n_blocks);
        if (block < 0 || block >= n_blocks) throw std::invalid_argument("TimeGrid: block out of range");
        return block * spb;
    }

    void check_step(int k) const {
        if (k < 0 || k >= n_) throw std::invalid_argument("TimeGrid: step index out of range");
    }
    void check_node(int k) const {
        if (k < 0 || k > n_) throw std::invalid_argument("TimeGrid: node index out of range");
    }

private:
    double t0_, t1_;
    int n_;
};

} // namespace bsee
