#include "minvae/common.hpp"

#include <algorithm>
#include <thread>
#include <vector>

namespace minvae {

namespace {
int g_max_threads = 0;
}

void set_max_threads(int n) { g_max_threads = n; }

void parallel_for(std::ptrdiff_t n, const std::function<void(std::ptrdiff_t, std::ptrdiff_t)>& body) {
    if (n <= 0) return;
    unsigned hw = std::thread::hardware_concurrency();
    std::ptrdiff_t workers = std::min<std::ptrdiff_t>(hw == 0 ? 1 : hw, 16);
    if (g_max_threads > 0) workers = std::min<std::ptrdiff_t>(workers, g_max_threads);
    workers = std::min(workers, n);
    if (workers <= 1 || n < 4) {
        body(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    std::ptrdiff_t chunk = (n + workers - 1) / workers;
    for (std::ptrdiff_t w = 0; w < workers; ++w) {
        std::ptrdiff_t begin = w * chunk;
        std::ptrdiff_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([=, &body] { body(begin, end); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace minvae
