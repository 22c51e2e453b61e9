#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "femon/lrv.hpp"
#include "femon/parallel.hpp"
#include "femon/rng.hpp"

namespace femon {

/// Settings for simulating the limit process sup_{0 < t <= 1} |W(t)| / t^gamma.
struct MonteCarloConfig {
    std::size_t replicates = 200000;  ///< number of Wiener paths
    std::size_t grid = 20000;         ///< grid points per path
    std::uint64_t seed = 20240817;
    std::size_t workers = 0;  ///< 0 = hardware concurrency

    void validate() const {
        if (replicates < 10000)
            throw std::invalid_argument("MonteCarloConfig: replicates must be >= 10000");
        if (grid < 10000) throw std::invalid_argument("MonteCarloConfig: grid must be >= 10000");
    }

    std::size_t resolved_workers() const {
        if (workers > 0) return workers;
        const unsigned hc = std::thread::hardware_concurrency();
        return hc > 0 ? hc : 1;
    }
};

/// Cached critical constants c_alpha for a set of (gamma, alpha) pairs,
/// together with the simulation settings that produced them.
struct CriticalTable {
    struct Entry {
        double gamma = 0.0;
        double alpha = 0.0;
        double value = 0.0;
    };

    std::vector<Entry> entries;
    std::size_t replicates = 0;
    std::size_t grid = 0;
    std::uint64_t seed = 0;

    std::optional<double> lookup(double gamma, double alpha) const {
        for (const auto& e : entries)
            if (std::abs(e.gamma - gamma) < 1e-12 && std::abs(e.alpha - alpha) < 1e-12)
                return e.value;
        return std::nullopt;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["replicates"] = replicates;
        j["grid"] = grid;
        j["seed"] = seed;
        j["entries"] = nlohmann::json::array();
        for (const auto& e : entries)
            j["entries"].push_back({{"gamma", e.gamma}, {"alpha", e.alpha}, {"value", e.value}});
        return j;
    }

    static CriticalTable from_json(const nlohmann::json& j) {
        CriticalTable table;
        table.replicates = j.at("replicates").get<std::size_t>();
        table.grid = j.at("grid").get<std::size_t>();
        table.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& e : j.at("entries")) {
            table.entries.push_back({e.at("gamma").get<double>(), e.at("alpha").get<double>(),
                                     e.at("value").get<double>()});
        }
        return table;
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
        out << to_json().dump(2) << '\n';
        if (!out) throw std::runtime_error("write to '" + path + "' failed");
    }

    static CriticalTable load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("invalid critical table '" + path + "': " + e.what());
        }
        return from_json(j);
    }

    /// Table shipped with the library: gamma in {0, 0.25, 0.45} x alpha in
    /// {0.01, 0.05, 0.10}, produced by critical_values() at the default
    /// MonteCarloConfig.  Regenerable with the `calibrate` command.
    static const CriticalTable& defaults();
};

/// Simulates critical constants: the (1 - alpha) empirical quantiles of
/// sup_{0 < t <= 1} |W(t)| / t^gamma over Wiener paths on a uniform grid.
/// The result is deterministic in (replicates, grid, seed) and independent
/// of the worker count: each path draws from its own seeded substream and
/// results are stored by path index before sorting.
inline CriticalTable critical_values(const std::vector<double>& gammas,
                                     const std::vector<double>& alphas,
                                     const MonteCarloConfig& config = {}) {
    config.validate();
    if (gammas.empty() || alphas.empty())
        throw std::invalid_argument("critical_values: need at least one gamma and alpha");
    for (double g : gammas)
        if (!(g >= 0.0 && g < 0.5))
            throw std::invalid_argument("critical_values: gamma must lie in [0, 0.5)");
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0))
            throw std::invalid_argument("critical_values: alpha must lie in (0, 1)");

    const std::size_t n_paths = config.replicates;
    const std::size_t grid = config.grid;
    const auto grid_d = static_cast<double>(grid);
    const double step_sd = std::sqrt(1.0 / grid_d);

    // Per-gamma table of t^{-gamma} over the grid, shared across paths.
    std::vector<std::vector<double>> scale(gammas.size(), std::vector<double>(grid));
    for (std::size_t g = 0; g < gammas.size(); ++g)
        for (std::size_t i = 0; i < grid; ++i)
            scale[g][i] = std::pow(static_cast<double>(i + 1) / grid_d, -gammas[g]);

    std::vector<std::vector<double>> sups(gammas.size(), std::vector<double>(n_paths));
    parallel_chunks(n_paths, config.resolved_workers(), [&](std::size_t first, std::size_t last) {
        std::vector<double> path_sup(gammas.size());
        for (std::size_t p = first; p < last; ++p) {
            Rng rng(config.seed, p);
            std::fill(path_sup.begin(), path_sup.end(), 0.0);
            double w = 0.0;
            for (std::size_t i = 0; i < grid; ++i) {
                w += step_sd * rng.normal();
                const double aw = std::abs(w);
                for (std::size_t g = 0; g < gammas.size(); ++g) {
                    const double v = aw * scale[g][i];
                    if (v > path_sup[g]) path_sup[g] = v;
                }
            }
            for (std::size_t g = 0; g < gammas.size(); ++g) sups[g][p] = path_sup[g];
        }
    });

    CriticalTable table;
    table.replicates = config.replicates;
    table.grid = config.grid;
    table.seed = config.seed;
    for (std::size_t g = 0; g < gammas.size(); ++g) {
        std::sort(sups[g].begin(), sups[g].end());
        for (double a : alphas) {
            const auto idx =
                static_cast<std::size_t>(std::ceil((1.0 - a) * static_cast<double>(n_paths)));
            table.entries.push_back({gammas[g], a, sups[g][std::max<std::size_t>(idx, 1) - 1]});
        }
    }
    return table;
}

/// Single critical constant for one (gamma, alpha) pair.
inline double critical_value(double gamma, double alpha, const MonteCarloConfig& config = {}) {
    const CriticalTable table = critical_values({gamma}, {alpha}, config);
    return table.entries.front().value;
}

inline const CriticalTable& CriticalTable::defaults() {
    // Values produced by critical_values({0, 0.25, 0.45}, {0.01, 0.05, 0.10})
    // at the default MonteCarloConfig; see data/critical_values.json.
    static const CriticalTable table = [] {
        CriticalTable t;
        t.replicates = 200000;
        t.grid = 20000;
        t.seed = 20240817;
        t.entries = {
            {0.0, 0.01, 2.802772165342751},
            {0.0, 0.05, 2.2333373789858593},
            {0.0, 0.1, 1.953842310969164},
            {0.25, 0.01, 2.9184603114880465},
            {0.25, 0.05, 2.3769547802548563},
            {0.25, 0.1, 2.108539950350163},
            {0.45, 0.01, 3.2940232931457256},
            {0.45, 0.05, 2.7940308890235523},
            {0.45, 0.1, 2.549950084839654},
        };
        return t;
    }();
    return table;
}

}  // namespace femon
