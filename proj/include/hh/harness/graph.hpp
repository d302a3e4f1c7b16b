#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hh/common.hpp"

namespace hh::graph {

/// Directed graph in compressed sparse row form.
struct Csr {
    std::uint64_t vertices = 0;
    std::vector<std::uint64_t> offsets{0};
    std::vector<std::uint64_t> targets;

    std::uint64_t edges() const { return targets.size(); }
    std::uint64_t degree(std::uint64_t v) const { return offsets[v + 1] - offsets[v]; }
};

inline Csr from_edges(std::uint64_t n, std::vector<std::pair<std::uint64_t, std::uint64_t>> edges) {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    Csr g;
    g.vertices = n;
    g.offsets.assign(n + 1, 0);
    for (auto [u, v] : edges)
        ++g.offsets[u + 1];
    for (std::uint64_t i = 0; i < n; ++i)
        g.offsets[i + 1] += g.offsets[i];
    g.targets.reserve(edges.size());
    for (auto [u, v] : edges)
        g.targets.push_back(v);
    return g;
}

/// Seeded random digraph: every vertex gets `degree` uniformly chosen
/// out-neighbours (self loops and duplicates dropped).
inline Csr random_digraph(std::uint64_t n, std::uint64_t degree, std::uint64_t seed) {
    HH_CHECK(n >= 1, "graph needs at least one vertex");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint64_t> pick(0, n - 1);
    std::vector<std::pair<std::uint64_t, std::uint64_t>> edges;
    edges.reserve(n * degree);
    for (std::uint64_t u = 0; u < n; ++u)
        for (std::uint64_t k = 0; k < degree; ++k) {
            std::uint64_t v = pick(rng);
            if (v != u)
                edges.emplace_back(u, v);
        }
    return from_edges(n, std::move(edges));
}

/// One "u v" edge per line; blank lines and lines starting with '#' or '%'
/// are skipped.
inline Csr load_edge_list(std::istream& in) {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> edges;
    std::uint64_t n = 0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#' || line[first] == '%')
            continue;
        std::istringstream ls(line);
        std::uint64_t u, v;
        if (!(ls >> u >> v))
            throw std::runtime_error("malformed edge on line " + std::to_string(lineno));
        edges.emplace_back(u, v);
        n = std::max({n, u + 1, v + 1});
    }
    return from_edges(std::max<std::uint64_t>(n, 1), std::move(edges));
}

inline Csr load_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open graph file " + path);
    return load_edge_list(in);
}

inline constexpr std::uint64_t kUnreached = ~std::uint64_t{0};

/// Sequential BFS distances from source.
inline std::vector<std::uint64_t> bfs_distances(const Csr& g, std::uint64_t source) {
    std::vector<std::uint64_t> dist(g.vertices, kUnreached);
    std::queue<std::uint64_t> q;
    dist[source] = 0;
    q.push(source);
    while (!q.empty()) {
        std::uint64_t u = q.front();
        q.pop();
        for (std::uint64_t e = g.offsets[u]; e < g.offsets[u + 1]; ++e) {
            std::uint64_t v = g.targets[e];
            if (dist[v] == kUnreached) {
                dist[v] = dist[u] + 1;
                q.push(v);
            }
        }
    }
    return dist;
}

inline bool has_edge(const Csr& g, std::uint64_t u, std::uint64_t v) {
    auto b = g.targets.begin() + static_cast<std::ptrdiff_t>(g.offsets[u]);
    auto e = g.targets.begin() + static_cast<std::ptrdiff_t>(g.offsets[u + 1]);
    return std::binary_search(b, e, v);
}

} // namespace hh::graph
