#pragma once

// ============================================================================
// FILE: cluster_model.hpp
//
// BRIEF: Fitted clustering result shared by K-means and BIRCH: centroids,
// per-row assignments, and nearest-centroid assignment of new rows.
// Persisted as a manifest + centroids TMX + assignments CSV.
// ============================================================================

#include <topomap/embedding.hpp>
#include <topomap/matrix_io.hpp>

#include <json.hpp>

#include <sstream>
#include <string>
#include <vector>

namespace topomap {

struct ClusterModel {
    std::string method;  // "kmeans" | "birch"
    long k = 0;
    Matrix centroids;                // k x out_dim
    std::vector<long> assignments;   // cluster id per fitted row
    std::uint64_t seed = 0;
    double inertia = 0.0;            // total within-cluster squared distance
    std::vector<bool> empty;         // clusters with no fitted rows
    std::vector<double> lloyd_inertia_trace;  // winning restart, kmeans only
};

// Nearest centroid by Euclidean distance; exact ties go to the lowest id.
inline long assign_row(const ClusterModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    long best = 0;
    double bd = (row - model.centroids.row(0)).squaredNorm();
    for (long c = 1; c < model.k; ++c) {
        double d = (row - model.centroids.row(c)).squaredNorm();
        if (d < bd) {
            bd = d;
            best = c;
        }
    }
    return best;
}

inline std::vector<long> assign(const ClusterModel& model, const EmbeddedSet& e) {
    if (e.matrix.cols() != model.centroids.cols())
        throw std::runtime_error("assign: dimension mismatch: model centroids have " +
                                 std::to_string(model.centroids.cols()) + " columns, rows have " +
                                 std::to_string(e.matrix.cols()));
    std::vector<long> out(static_cast<std::size_t>(e.matrix.rows()));
    for (long r = 0; r < e.matrix.rows(); ++r) out[static_cast<std::size_t>(r)] = assign_row(model, e.matrix.row(r));
    return out;
}

namespace detail {

inline void refresh_empty_flags(ClusterModel& model) {
    model.empty.assign(static_cast<std::size_t>(model.k), true);
    for (long a : model.assignments) model.empty[static_cast<std::size_t>(a)] = false;
}

inline double total_inertia(const Matrix& pts, const Matrix& centroids, const std::vector<long>& asg) {
    double s = 0.0;
    for (long r = 0; r < pts.rows(); ++r)
        s += (pts.row(r) - centroids.row(asg[static_cast<std::size_t>(r)])).squaredNorm();
    return s;
}

}  // namespace detail

inline void save_cluster_model(const std::filesystem::path& prefix, const ClusterModel& model) {
    nlohmann::json j;
    j["method"] = model.method;
    j["k"] = model.k;
    j["seed"] = model.seed;
    j["inertia"] = model.inertia;
    atomic_write_file(prefix.string() + ".json", j.dump(2) + "\n");
    save_tmx(prefix.string() + ".centroids.tmx", model.centroids);
    std::string csv = "row,cluster\n";
    for (std::size_t r = 0; r < model.assignments.size(); ++r)
        csv += std::to_string(r) + "," + std::to_string(model.assignments[r]) + "\n";
    atomic_write_file(prefix.string() + ".assignments.csv", csv);
}

inline ClusterModel load_cluster_model(const std::filesystem::path& prefix) {
    nlohmann::json j = nlohmann::json::parse(read_file(prefix.string() + ".json"));
    ClusterModel model;
    model.method = j.at("method").get<std::string>();
    model.k = j.at("k").get<long>();
    model.seed = j.at("seed").get<std::uint64_t>();
    model.inertia = j.at("inertia").get<double>();
    model.centroids = load_tmx(prefix.string() + ".centroids.tmx");
    std::string text = read_file(prefix.string() + ".assignments.csv");
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || detail::strip_cr(line) != "row,cluster")
        throw std::runtime_error("malformed header in " + prefix.string() + ".assignments.csv");
    long expect = 0;
    while (std::getline(in, line)) {
        auto sv = detail::strip_cr(line);
        if (sv.empty()) continue;
        auto toks = detail::split_char(sv, ',');
        if (toks.size() != 2 || parse_long(toks[0], "assignments") != expect)
            throw std::runtime_error("row index mismatch in " + prefix.string() + ".assignments.csv");
        model.assignments.push_back(parse_long(toks[1], "assignments"));
        ++expect;
    }
    detail::refresh_empty_flags(model);
    return model;
}

}  // namespace topomap
