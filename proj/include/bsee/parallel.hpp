#pragma once

#include <functional>
#include <stdexcept>
#include <thread>
#include <vector>

namespace bsee {

//Runs fn(path_begin, path_end) over a contiguous partition of [0, n_paths).
//Each worker owns a disjoint path range and must write only to its own slots;
//reductions are performed by the caller in fixed path order, so results do
//not depend on n_workers.
inline void for_each_path_range(int n_paths, int n_workers,
                                const std::function<void(int, int)>& fn) {
    if (n_paths < 0) throw std::invalid_argument("for_each_path_range: negative path count");
    if (n_workers < 1) throw std::invalid_argument("for_each_path_range: need >= 1 worker");
    if (n_workers == 1 || n_paths <= 1) {
        fn(0, n_paths);
        return;
    }
    int workers = std::min(n_workers, n_paths);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    int chunk = (n_paths + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        int lo = w * chunk;
        int hi = std::min(n_paths, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back(fn, lo, hi);
    }
    for (auto& th : pool) th.join();
}

} // namespace bsee
