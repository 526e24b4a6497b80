#pragma once

// ============================================================================
// FILE: topograph.hpp
//
// BRIEF: MST-pruned centroid graph of the map and its GEXF/DOT exports.
// The pruned graph keeps every centroid pair whose distance is at most the
// heaviest MST edge, so it is connected and contains an MST by construction.
// All orderings are ascending-id for byte-stable output.
// ============================================================================

#include <topomap/cluster_model.hpp>
#include <topomap/matrix_io.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace topomap {

struct TopoNode {
    long id = 0;
    long size = 0;               // assigned input count
    double kill_strength = 0.0;  // rho_a, 0 when unknown
};

struct TopoEdge {
    long a = 0;  // a < b
    long b = 0;
    double weight = 0.0;  // euclidean centroid distance
};

struct TopoGraph {
    std::vector<TopoNode> nodes;
    std::vector<TopoEdge> edges;      // ascending (a, b)
    std::vector<TopoEdge> mst_edges;  // the k-1 tree edges, in pick order
    bool pruned = true;
    double max_mst_edge = 0.0;
};

namespace detail {

struct UnionFind {
    std::vector<long> parent;
    explicit UnionFind(long n) : parent(static_cast<std::size_t>(n)) {
        std::iota(parent.begin(), parent.end(), 0L);
    }
    long find(long x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    }
    bool unite(long a, long b) {
        long ra = find(a), rb = find(b);
        if (ra == rb) return false;
        parent[static_cast<std::size_t>(ra)] = rb;
        return true;
    }
};

}  // namespace detail

// Complete centroid graph, Kruskal MST with (weight, a, b) tie order, then
// every edge at most the heaviest MST edge is kept.
inline TopoGraph build_topograph(const ClusterModel& model,
                                 const std::vector<double>& strengths = {}) {
    const long k = model.k;
    if (k < 1) throw std::runtime_error("build_topograph: model has no clusters");
    if (!strengths.empty() && static_cast<long>(strengths.size()) != k)
        throw std::runtime_error("build_topograph: " + std::to_string(strengths.size()) +
                                 " strengths for " + std::to_string(k) + " clusters");
    for (double s : strengths)
        if (!(s >= 0.0 && s <= 1.0))
            throw std::runtime_error("build_topograph: kill strength outside [0, 1]");

    TopoGraph g;
    for (long c = 0; c < k; ++c) {
        TopoNode node;
        node.id = c;
        node.kill_strength = strengths.empty() ? 0.0 : strengths[static_cast<std::size_t>(c)];
        g.nodes.push_back(node);
    }
    for (long a : model.assignments)
        if (a >= 0 && a < k) ++g.nodes[static_cast<std::size_t>(a)].size;

    std::vector<TopoEdge> all;
    for (long i = 0; i < k; ++i)
        for (long j = i + 1; j < k; ++j) {
            TopoEdge e;
            e.a = i;
            e.b = j;
            e.weight = (model.centroids.row(i) - model.centroids.row(j)).norm();
            all.push_back(e);
        }
    std::vector<TopoEdge> sorted = all;
    std::sort(sorted.begin(), sorted.end(), [](const TopoEdge& x, const TopoEdge& y) {
        if (x.weight != y.weight) return x.weight < y.weight;
        if (x.a != y.a) return x.a < y.a;
        return x.b < y.b;
    });
    detail::UnionFind uf(k);
    for (const TopoEdge& e : sorted) {
        if (!uf.unite(e.a, e.b)) continue;
        g.mst_edges.push_back(e);
        g.max_mst_edge = std::max(g.max_mst_edge, e.weight);
        if (static_cast<long>(g.mst_edges.size()) == k - 1) break;
    }
    for (const TopoEdge& e : all)
        if (e.weight <= g.max_mst_edge) g.edges.push_back(e);
    return g;
}

// GEXF 1.3, undirected, sizes and kill strengths as node attributes.
inline std::string graph_to_gexf(const TopoGraph& g) {
    std::string out =
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        "<gexf xmlns=\"http://gexf.net/1.3\" version=\"1.3\">\n"
        "  <graph defaultedgetype=\"undirected\">\n"
        "    <attributes class=\"node\">\n"
        "      <attribute id=\"0\" title=\"size\" type=\"long\"/>\n"
        "      <attribute id=\"1\" title=\"kill_strength\" type=\"double\"/>\n"
        "    </attributes>\n"
        "    <nodes>\n";
    for (const TopoNode& n : g.nodes) {
        out += "      <node id=\"" + std::to_string(n.id) + "\" label=\"cluster " +
               std::to_string(n.id) + "\">\n";
        out += "        <attvalues>\n";
        out += "          <attvalue for=\"0\" value=\"" + std::to_string(n.size) + "\"/>\n";
        out += "          <attvalue for=\"1\" value=\"" + format_double(n.kill_strength) +
               "\"/>\n";
        out += "        </attvalues>\n";
        out += "      </node>\n";
    }
    out += "    </nodes>\n    <edges>\n";
    long id = 0;
    for (const TopoEdge& e : g.edges) {
        out += "      <edge id=\"" + std::to_string(id++) + "\" source=\"" +
               std::to_string(e.a) + "\" target=\"" + std::to_string(e.b) + "\" weight=\"" +
               format_double(e.weight) + "\"/>\n";
    }
    out += "    </edges>\n  </graph>\n</gexf>\n";
    return out;
}

// Undirected DOT with the same attributes.
inline std::string graph_to_dot(const TopoGraph& g) {
    std::string out = "graph topomap {\n";
    for (const TopoNode& n : g.nodes)
        out += "  " + std::to_string(n.id) + " [size=" + std::to_string(n.size) +
               ", kill_strength=" + format_double(n.kill_strength) + "];\n";
    for (const TopoEdge& e : g.edges)
        out += "  " + std::to_string(e.a) + " -- " + std::to_string(e.b) +
               " [weight=" + format_double(e.weight) + "];\n";
    out += "}\n";
    return out;
}

enum class GraphFormat { gexf, dot };

inline GraphFormat graph_format_from(const std::string& name) {
    if (name == "gexf") return GraphFormat::gexf;
    if (name == "dot") return GraphFormat::dot;
    throw std::runtime_error("unknown graph format '" + name + "' (expected gexf or dot)");
}

inline void export_graph(const TopoGraph& g, GraphFormat format,
                         const std::filesystem::path& path) {
    atomic_write_file(path, format == GraphFormat::gexf ? graph_to_gexf(g) : graph_to_dot(g));
}

}  // namespace topomap
