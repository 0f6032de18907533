#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <limits>
#include <queue>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "swarmrelay/channel.hpp"
#include "swarmrelay/core.hpp"
#include "swarmrelay/scenario.hpp"

namespace swarmrelay {

struct FlowEdge {
    std::size_t from = 0;
    std::size_t to = 0;
    std::uint64_t capacity = 0;

    friend bool operator==(const FlowEdge&, const FlowEdge&) = default;
};

/// Capacitated directed graph. Node 0 is the source, node_count - 1 the sink.
struct FlowGraph {
    std::size_t node_count = 2;
    std::vector<FlowEdge> edges;

    friend bool operator==(const FlowGraph&, const FlowGraph&) = default;

    [[nodiscard]] std::size_t source() const { return 0; }
    [[nodiscard]] std::size_t sink() const { return node_count - 1; }

    /// Throws SchemaError when an invariant is broken.
    void validate() const {
        if (node_count < 2) throw SchemaError("flow graph: need at least source and sink");
        std::vector<std::vector<bool>> seen(node_count, std::vector<bool>(node_count, false));
        for (const auto& e : edges) {
            if (e.from >= node_count || e.to >= node_count) throw SchemaError("flow graph: edge endpoint out of range");
            if (e.from == e.to) throw SchemaError("flow graph: self-loop");
            if (e.to == source()) throw SchemaError("flow graph: edge into source");
            if (e.from == sink()) throw SchemaError("flow graph: edge out of sink");
            if (seen[e.from][e.to]) throw SchemaError("flow graph: duplicate edge");
            seen[e.from][e.to] = true;
        }
    }

    [[nodiscard]] std::optional<std::size_t> find_edge(std::size_t from, std::size_t to) const {
        for (std::size_t i = 0; i < edges.size(); ++i)
            if (edges[i].from == from && edges[i].to == to) return i;
        return std::nullopt;
    }
};

/// Directed edges implied by one adjacency entry: the device only transmits,
/// the access point only receives, swarm pairs get both directions.
inline std::vector<std::pair<std::size_t, std::size_t>> directed_links(const Scenario& s) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    const std::size_t n = s.node_count(), sink = s.sink();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j || !s.adjacency[i][j]) continue;
            if (j == 0 || i == sink) continue;
            out.emplace_back(i, j);
        }
    return out;
}

/// Transmitter element count of a graph node (1 for the device).
inline std::size_t transmitter_size(const Scenario& s, std::size_t node) {
    return node == 0 ? 1 : s.swarms.at(node - 1).uav_count;
}

/// Flow graph with ideal-beamforming capacities between node reference points.
inline FlowGraph build_flow_graph(const Scenario& s) {
    FlowGraph g{s.node_count(), {}};
    for (auto [i, j] : directed_links(s)) {
        const double c = link_capacity_bound(transmitter_size(s, i), s.node_position(i), s.node_position(j), s.channel);
        g.edges.push_back({i, j, quantize_capacity(c)});
    }
    return g;
}

struct AugmentingPath {
    std::vector<std::size_t> nodes;
    std::uint64_t bottleneck = 0;

    friend bool operator==(const AugmentingPath&, const AugmentingPath&) = default;
};

struct FlowSolution {
    std::vector<std::uint64_t> flow;  // per edge of the graph, same order
    std::uint64_t total = 0;
    std::vector<AugmentingPath> augmenting_paths;

    friend bool operator==(const FlowSolution&, const FlowSolution&) = default;
};

/// Residual arcs: forward arcs carry capacity - flow, reverse arcs carry flow.
class ResidualNetwork {
public:
    struct Arc {
        std::size_t to;
        std::size_t edge;
        bool reverse;
    };

    explicit ResidualNetwork(const FlowGraph& g) : graph_(&g), flow_(g.edges.size(), 0), arcs_(g.node_count) {
        for (std::size_t e = 0; e < g.edges.size(); ++e) {
            arcs_[g.edges[e].from].push_back({g.edges[e].to, e, false});
            arcs_[g.edges[e].to].push_back({g.edges[e].from, e, true});
        }
        for (auto& list : arcs_)
            std::sort(list.begin(), list.end(), [](const Arc& a, const Arc& b) {
                return std::tie(a.to, a.reverse, a.edge) < std::tie(b.to, b.reverse, b.edge);
            });
    }

    ResidualNetwork(const FlowGraph& g, std::vector<std::uint64_t> flow) : ResidualNetwork(g) {
        if (flow.size() != g.edges.size()) throw DimensionError("residual network: one flow value per edge");
        flow_ = std::move(flow);
    }

    [[nodiscard]] std::uint64_t residual(const Arc& a) const {
        return a.reverse ? flow_[a.edge] : graph_->edges[a.edge].capacity - flow_[a.edge];
    }

    [[nodiscard]] const std::vector<Arc>& arcs(std::size_t node) const { return arcs_[node]; }
    [[nodiscard]] const std::vector<std::uint64_t>& flow() const { return flow_; }

    void push(const Arc& a, std::uint64_t amount) {
        if (a.reverse)
            flow_[a.edge] -= amount;
        else
            flow_[a.edge] += amount;
    }

    /// Depth-first search for an augmenting path, neighbors in ascending node
    /// index. Returns the arcs of the path, empty when none exists.
    [[nodiscard]] std::vector<Arc> find_augmenting_path() const {
        const std::size_t n = graph_->node_count, s = graph_->source(), t = graph_->sink();
        std::vector<bool> visited(n, false);
        std::vector<Arc> path;
        std::vector<std::size_t> cursor(n, 0);
        std::vector<std::size_t> stack{s};
        visited[s] = true;
        while (!stack.empty()) {
            const std::size_t u = stack.back();
            if (u == t) return path;
            bool advanced = false;
            while (cursor[u] < arcs_[u].size()) {
                const Arc& a = arcs_[u][cursor[u]++];
                if (visited[a.to] || residual(a) == 0) continue;
                visited[a.to] = true;
                path.push_back(a);
                stack.push_back(a.to);
                advanced = true;
                break;
            }
            if (!advanced) {
                stack.pop_back();
                if (!path.empty()) path.pop_back();
            }
        }
        return {};
    }

private:
    const FlowGraph* graph_;
    std::vector<std::uint64_t> flow_;
    std::vector<std::vector<Arc>> arcs_;
};

/// Ford-Fulkerson maximum flow with depth-first augmenting paths.
inline FlowSolution max_flow_ford_fulkerson(const FlowGraph& g) {
    g.validate();
    ResidualNetwork r(g);
    FlowSolution sol;
    for (;;) {
        const auto path = r.find_augmenting_path();
        if (path.empty()) break;
        std::uint64_t b = std::numeric_limits<std::uint64_t>::max();
        for (const auto& a : path) b = std::min(b, r.residual(a));
        AugmentingPath log{{g.source()}, b};
        for (const auto& a : path) {
            r.push(a, b);
            log.nodes.push_back(a.to);
        }
        sol.total += b;
        sol.augmenting_paths.push_back(std::move(log));
    }
    sol.flow = r.flow();
    return sol;
}

/// Net outflow minus inflow at `node`.
inline std::int64_t flow_excess(const FlowGraph& g, const std::vector<std::uint64_t>& flow, std::size_t node) {
    std::int64_t x = 0;
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        if (g.edges[e].from == node) x += static_cast<std::int64_t>(flow[e]);
        if (g.edges[e].to == node) x -= static_cast<std::int64_t>(flow[e]);
    }
    return x;
}

/// Capacity and conservation check of a flow assignment.
inline bool is_valid_flow(const FlowGraph& g, const std::vector<std::uint64_t>& flow) {
    if (flow.size() != g.edges.size()) return false;
    for (std::size_t e = 0; e < g.edges.size(); ++e)
        if (flow[e] > g.edges[e].capacity) return false;
    for (std::size_t v = 1; v + 1 < g.node_count; ++v)
        if (flow_excess(g, flow, v) != 0) return false;
    return true;
}

/// Link of the optimized network with its expected rate.
struct NetworkLink {
    std::size_t from = 0;
    std::size_t to = 0;
    std::uint64_t capacity = 0;
    std::uint64_t expected_rate = 0;

    friend bool operator==(const NetworkLink&, const NetworkLink&) = default;
};

/// Flow-positive subgraph: surviving nodes (original labels, ascending) and
/// links with their expected rates.
struct OptimizedNetwork {
    std::size_t original_node_count = 2;
    std::vector<std::size_t> nodes;
    std::vector<NetworkLink> links;
    std::uint64_t total = 0;

    friend bool operator==(const OptimizedNetwork&, const OptimizedNetwork&) = default;

    [[nodiscard]] std::size_t source() const { return 0; }
    [[nodiscard]] std::size_t sink() const { return original_node_count - 1; }
    [[nodiscard]] std::size_t link_count() const { return links.size(); }

    /// Zero-based swarm indices of the relaying swarms.
    [[nodiscard]] std::vector<std::size_t> participating_swarms() const {
        std::vector<std::size_t> out;
        for (std::size_t v : nodes)
            if (v != source() && v != sink()) out.push_back(v - 1);
        return out;
    }
    [[nodiscard]] std::size_t swarm_count() const { return participating_swarms().size(); }

    [[nodiscard]] FlowGraph as_graph() const {
        FlowGraph g{original_node_count, {}};
        for (const auto& l : links) g.edges.push_back({l.from, l.to, l.capacity});
        return g;
    }
};

namespace detail {

// Removes circulations from a flow: opposing pairs first, then any directed
// cycle of positive-flow edges, each reduced by its minimum flow.
inline void cancel_flow_cycles(const FlowGraph& g, std::vector<std::uint64_t>& flow) {
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        if (auto r = g.find_edge(g.edges[e].to, g.edges[e].from)) {
            const std::uint64_t m = std::min(flow[e], flow[*r]);
            flow[e] -= m;
            flow[*r] -= m;
        }
    }
    for (;;) {
        const std::size_t n = g.node_count;
        std::vector<int> state(n, 0);  // 0 new, 1 on stack, 2 done
        std::vector<std::size_t> via(n, 0);
        std::vector<std::size_t> cycle;
        std::function<bool(std::size_t)> dfs = [&](std::size_t u) {
            state[u] = 1;
            for (std::size_t e = 0; e < g.edges.size(); ++e) {
                if (g.edges[e].from != u || flow[e] == 0) continue;
                const std::size_t v = g.edges[e].to;
                if (state[v] == 1) {
                    cycle.push_back(e);
                    for (std::size_t w = u; w != v; w = g.edges[via[w]].from) cycle.push_back(via[w]);
                    return true;
                }
                if (state[v] == 0) {
                    via[v] = e;
                    if (dfs(v)) return true;
                }
            }
            state[u] = 2;
            return false;
        };
        bool found = false;
        for (std::size_t v = 0; v < n && !found; ++v)
            if (state[v] == 0) found = dfs(v);
        if (!found) return;
        std::uint64_t m = std::numeric_limits<std::uint64_t>::max();
        for (std::size_t e : cycle) m = std::min(m, flow[e]);
        for (std::size_t e : cycle) flow[e] -= m;
    }
}

}  // namespace detail

/// Drops zero-flow links and idle swarms after removing circulations, so
/// every surviving link lies on a source-to-sink path.
inline OptimizedNetwork extract_optimized_network(const FlowGraph& g, const FlowSolution& f) {
    if (!is_valid_flow(g, f.flow)) throw SchemaError("extract_optimized_network: not a valid flow");
    std::vector<std::uint64_t> flow = f.flow;
    detail::cancel_flow_cycles(g, flow);
    OptimizedNetwork net;
    net.original_node_count = g.node_count;
    net.total = f.total;
    std::vector<bool> used(g.node_count, false);
    used[g.source()] = used[g.sink()] = true;
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        if (flow[e] == 0) continue;
        net.links.push_back({g.edges[e].from, g.edges[e].to, g.edges[e].capacity, flow[e]});
        used[g.edges[e].from] = used[g.edges[e].to] = true;
    }
    std::sort(net.links.begin(), net.links.end(),
              [](const NetworkLink& a, const NetworkLink& b) { return std::tie(a.from, a.to) < std::tie(b.from, b.to); });
    for (std::size_t v = 0; v < g.node_count; ++v)
        if (used[v]) net.nodes.push_back(v);
    return net;
}

enum class RoutingProtocol { RIP, OSPF, GPSR, ZRP, TORA };

inline constexpr RoutingProtocol all_protocols[] = {RoutingProtocol::RIP, RoutingProtocol::OSPF, RoutingProtocol::GPSR,
                                                    RoutingProtocol::ZRP, RoutingProtocol::TORA};

inline std::string_view to_string(RoutingProtocol p) {
    switch (p) {
        case RoutingProtocol::RIP: return "RIP";
        case RoutingProtocol::OSPF: return "OSPF";
        case RoutingProtocol::GPSR: return "GPSR";
        case RoutingProtocol::ZRP: return "ZRP";
        case RoutingProtocol::TORA: return "TORA";
    }
    return "?";
}

inline RoutingProtocol parse_protocol(std::string_view name) {
    for (auto p : all_protocols)
        if (to_string(p) == name) return p;
    throw ParseError("unknown routing protocol: " + std::string(name));
}

struct PathSolution {
    RoutingProtocol protocol = RoutingProtocol::RIP;
    std::vector<std::size_t> path;
    std::uint64_t bottleneck = 0;

    friend bool operator==(const PathSolution&, const PathSolution&) = default;
};

namespace detail {

// Positive-capacity out-neighbors in ascending index with edge capacities.
inline std::vector<std::vector<std::pair<std::size_t, std::uint64_t>>> out_neighbors(const FlowGraph& g) {
    std::vector<std::vector<std::pair<std::size_t, std::uint64_t>>> adj(g.node_count);
    for (const auto& e : g.edges)
        if (e.capacity > 0) adj[e.from].emplace_back(e.to, e.capacity);
    for (auto& l : adj) std::sort(l.begin(), l.end());
    return adj;
}

inline constexpr std::size_t unreachable = std::numeric_limits<std::size_t>::max();

// Hop distance of every node to the sink over positive-capacity edges.
inline std::vector<std::size_t> hops_to_sink(const FlowGraph& g) {
    std::vector<std::size_t> h(g.node_count, unreachable);
    std::vector<std::vector<std::size_t>> rev(g.node_count);
    for (const auto& e : g.edges)
        if (e.capacity > 0) rev[e.to].push_back(e.from);
    std::queue<std::size_t> q;
    h[g.sink()] = 0;
    q.push(g.sink());
    while (!q.empty()) {
        const std::size_t v = q.front();
        q.pop();
        for (std::size_t u : rev[v])
            if (h[u] == unreachable) {
                h[u] = h[v] + 1;
                q.push(u);
            }
    }
    return h;
}

inline std::vector<std::size_t> trace_parents(const std::vector<std::size_t>& parent, std::size_t s, std::size_t t) {
    std::vector<std::size_t> path{t};
    while (path.back() != s) path.push_back(parent[path.back()]);
    std::reverse(path.begin(), path.end());
    return path;
}

inline std::vector<std::size_t> route_rip(const FlowGraph& g) {
    const auto adj = out_neighbors(g);
    std::vector<std::size_t> parent(g.node_count, unreachable);
    std::vector<bool> seen(g.node_count, false);
    std::queue<std::size_t> q;
    seen[g.source()] = true;
    q.push(g.source());
    while (!q.empty()) {
        const std::size_t u = q.front();
        q.pop();
        for (auto [v, c] : adj[u])
            if (!seen[v]) {
                seen[v] = true;
                parent[v] = u;
                q.push(v);
            }
    }
    if (!seen[g.sink()]) throw UnreachableError("RIP: sink unreachable");
    return trace_parents(parent, g.source(), g.sink());
}

inline std::vector<std::size_t> route_ospf(const FlowGraph& g) {
    const auto adj = out_neighbors(g);
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(g.node_count, inf);
    std::vector<std::size_t> parent(g.node_count, unreachable);
    std::vector<bool> done(g.node_count, false);
    dist[g.source()] = 0.0;
    for (;;) {
        std::size_t u = unreachable;
        for (std::size_t v = 0; v < g.node_count; ++v)
            if (!done[v] && dist[v] < inf && (u == unreachable || dist[v] < dist[u])) u = v;
        if (u == unreachable) break;
        done[u] = true;
        for (auto [v, c] : adj[u]) {
            const double nd = dist[u] + 1.0 / static_cast<double>(c);
            if (nd < dist[v]) {
                dist[v] = nd;
                parent[v] = u;
            }
        }
    }
    if (!(dist[g.sink()] < inf)) throw UnreachableError("OSPF: sink unreachable");
    return trace_parents(parent, g.source(), g.sink());
}

inline std::vector<std::size_t> route_gpsr(const FlowGraph& g, const std::vector<Position3>& positions) {
    if (positions.size() != g.node_count) throw DimensionError("GPSR: one position per node");
    if (hops_to_sink(g)[g.source()] == unreachable) throw UnreachableError("GPSR: sink unreachable");
    const auto adj = out_neighbors(g);
    const Position3 target = positions[g.sink()];
    std::vector<std::size_t> path{g.source()};
    while (path.back() != g.sink()) {
        const std::size_t u = path.back();
        double best = distance(positions[u], target);
        std::size_t next = unreachable;
        for (auto [v, c] : adj[u]) {
            const double d = distance(positions[v], target);
            if (d < best) {
                best = d;
                next = v;
            }
        }
        if (next == unreachable) throw DeadEndError("GPSR: greedy forwarding stuck at node " + std::to_string(u));
        path.push_back(next);
    }
    return path;
}

// Next hop is the neighbor with the smallest hop distance to the sink, ties
// by index. Used for TORA heights and for the ZRP border-node choice.
inline std::vector<std::size_t> route_by_height(const FlowGraph& g, const char* name) {
    const auto h = hops_to_sink(g);
    if (h[g.source()] == unreachable) throw UnreachableError(std::string(name) + ": sink unreachable");
    const auto adj = out_neighbors(g);
    std::vector<std::size_t> path{g.source()};
    while (path.back() != g.sink()) {
        std::size_t next = unreachable;
        for (auto [v, c] : adj[path.back()])
            if (h[v] != unreachable && (next == unreachable || h[v] < h[next])) next = v;
        path.push_back(next);
    }
    return path;
}

// Zone radius one hop: the sink is delivered directly when it lies in the
// current zone; otherwise the request is bordercast and the border node with
// the fewest remaining hops wins, ties by index.
inline std::vector<std::size_t> route_zrp(const FlowGraph& g) {
    const auto h = hops_to_sink(g);
    if (h[g.source()] == unreachable) throw UnreachableError("ZRP: sink unreachable");
    const auto adj = out_neighbors(g);
    std::vector<std::size_t> path{g.source()};
    while (path.back() != g.sink()) {
        const auto& zone = adj[path.back()];
        const bool in_zone =
            std::any_of(zone.begin(), zone.end(), [&](const auto& nc) { return nc.first == g.sink(); });
        if (in_zone) {
            path.push_back(g.sink());
            break;
        }
        std::size_t next = unreachable;
        for (auto [v, c] : zone)
            if (h[v] != unreachable && (next == unreachable || h[v] < h[next])) next = v;
        path.push_back(next);
    }
    return path;
}

}  // namespace detail

/// Minimum edge capacity along `path`.
inline std::uint64_t path_bottleneck(const FlowGraph& g, const std::vector<std::size_t>& path) {
    std::uint64_t b = std::numeric_limits<std::uint64_t>::max();
    for (std::size_t i = 1; i < path.size(); ++i) {
        auto e = g.find_edge(path[i - 1], path[i]);
        if (!e) throw SchemaError("path uses a missing edge");
        b = std::min(b, g.edges[*e].capacity);
    }
    return path.size() < 2 ? 0 : b;
}

/// Single-path route under one protocol. `positions` (one per node) is used
/// by GPSR only.
inline PathSolution route_single_path(const FlowGraph& g, const std::vector<Position3>& positions,
                                      RoutingProtocol protocol) {
    g.validate();
    PathSolution out{protocol, {}, 0};
    switch (protocol) {
        case RoutingProtocol::RIP: out.path = detail::route_rip(g); break;
        case RoutingProtocol::OSPF: out.path = detail::route_ospf(g); break;
        case RoutingProtocol::GPSR: out.path = detail::route_gpsr(g, positions); break;
        case RoutingProtocol::ZRP: out.path = detail::route_zrp(g); break;
        case RoutingProtocol::TORA: out.path = detail::route_by_height(g, "TORA"); break;
    }
    out.bottleneck = path_bottleneck(g, out.path);
    return out;
}

inline PathSolution route_single_path(const FlowGraph& g, const Scenario& s, RoutingProtocol protocol) {
    std::vector<Position3> pos(s.node_count());
    for (std::size_t v = 0; v < pos.size(); ++v) pos[v] = s.node_position(v);
    return route_single_path(g, pos, protocol);
}

inline nlohmann::json to_json(const FlowGraph& g) {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : g.edges) edges.push_back({e.from, e.to, e.capacity});
    return {{"node_count", g.node_count}, {"edges", edges}};
}

/// Reads {"node_count": n, "edges": [[from, to, capacity], ...]}.
inline FlowGraph flow_graph_from_json(const nlohmann::json& j) {
    FlowGraph g;
    try {
        g.node_count = j.at("node_count").get<std::size_t>();
        for (const auto& e : j.at("edges"))
            g.edges.push_back({e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>(), e.at(2).get<std::uint64_t>()});
    } catch (const nlohmann::json::exception& ex) {
        throw SchemaError(std::string("flow graph: ") + ex.what());
    }
    g.validate();
    return g;
}

/// Flow report: nodes, edges with capacity and flow, total, augmenting paths,
/// and the surviving network.
inline nlohmann::json flow_report(const FlowGraph& g, const FlowSolution& f, const OptimizedNetwork& net) {
    nlohmann::json edges = nlohmann::json::array();
    for (std::size_t e = 0; e < g.edges.size(); ++e)
        edges.push_back({{"from", g.edges[e].from}, {"to", g.edges[e].to}, {"capacity_bps", g.edges[e].capacity},
                         {"flow_bps", f.flow[e]}});
    nlohmann::json paths = nlohmann::json::array();
    for (const auto& p : f.augmenting_paths) paths.push_back({{"path", p.nodes}, {"bottleneck_bps", p.bottleneck}});
    nlohmann::json links = nlohmann::json::array();
    for (const auto& l : net.links)
        links.push_back({{"from", l.from}, {"to", l.to}, {"capacity_bps", l.capacity}, {"expected_rate_bps", l.expected_rate}});
    std::vector<std::size_t> all(g.node_count);
    for (std::size_t v = 0; v < all.size(); ++v) all[v] = v;
    return {{"nodes", all},
            {"edges", edges},
            {"total_bps", f.total},
            {"augmenting_paths", paths},
            {"optimized_network",
             {{"nodes", net.nodes}, {"links", links}, {"swarm_count", net.swarm_count()}, {"link_count", net.link_count()}}}};
}

inline nlohmann::json to_json(const OptimizedNetwork& net) {
    nlohmann::json links = nlohmann::json::array();
    for (const auto& l : net.links) links.push_back({l.from, l.to, l.capacity, l.expected_rate});
    return {{"original_node_count", net.original_node_count}, {"nodes", net.nodes}, {"links", links}, {"total_bps", net.total}};
}

inline OptimizedNetwork optimized_network_from_json(const nlohmann::json& j) {
    OptimizedNetwork net;
    net.original_node_count = j.at("original_node_count").get<std::size_t>();
    net.nodes = j.at("nodes").get<std::vector<std::size_t>>();
    for (const auto& l : j.at("links"))
        net.links.push_back({l.at(0).get<std::size_t>(), l.at(1).get<std::size_t>(), l.at(2).get<std::uint64_t>(),
                             l.at(3).get<std::uint64_t>()});
    net.total = j.at("total_bps").get<std::uint64_t>();
    return net;
}

}  // namespace swarmrelay
