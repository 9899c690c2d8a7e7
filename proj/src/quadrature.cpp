#include "fdot/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace fdot {

namespace {

QuadRule compute_gauss_legendre(std::size_t n) {
    QuadRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const std::size_t m = (n + 1) / 2;
    for (std::size_t i = 0; i < m; ++i) {
        // Newton iteration from the Chebyshev-based initial guess.
        double x = std::cos(M_PI * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - static_cast<double>(j) * p2) / (j + 1.0);
            }
            pp = static_cast<double>(n) * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * pp * pp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

}  // namespace

const QuadRule& gauss_legendre(std::size_t n) {
    static std::mutex mtx;
    static std::map<std::size_t, QuadRule> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
    return it->second;
}

const std::vector<double>& chebyshev_nodes(std::size_t n) {
    static std::mutex mtx;
    static std::map<std::size_t, std::vector<double>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) {
        std::vector<double> nodes(n);
        for (std::size_t k = 0; k < n; ++k)
            nodes[k] = std::cos((2.0 * static_cast<double>(k) + 1.0) * M_PI / (2.0 * static_cast<double>(n)));
        it = cache.emplace(n, std::move(nodes)).first;
    }
    return it->second;
}

}  // namespace fdot
