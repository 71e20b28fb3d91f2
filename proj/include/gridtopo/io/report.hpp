#pragma once
#include <string>
#include <json.hpp>
#include <gridtopo/metrics/metrics.hpp>
#include <gridtopo/solver/path.hpp>
#include <gridtopo/topology/estimate.hpp>

namespace gridtopo::io {

/// Objects keep keys in std::map order, so dumps are stable across runs.
using json = nlohmann::json;

inline std::string dump(const json& j)
{
    return j.dump(2) + "\n";
}

inline json to_json(const Eigen::MatrixXd& m)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(std::move(row));
    }
    return out;
}

inline json to_json(const Edge& e)
{
    return json::array({e.a, e.b});
}

inline json to_json(const EdgeSet& edges)
{
    json out = json::array();
    for (const auto& [e, tag] : edges) out.push_back({{"a", e.a}, {"b", e.b}, {"tag", to_string(tag)}});
    return out;
}

inline EdgeTag parse_edge_tag(const std::string& s)
{
    if (s == "AND") return EdgeTag::and_rule;
    if (s == "OR") return EdgeTag::or_rule;
    if (s == "AND-OR-added") return EdgeTag::and_or_added;
    if (s == "given") return EdgeTag::given;
    throw error(errc::parse_error, "unknown edge tag '" + s + "'");
}

/// Reads the `edges` array written by to_json(EdgeSet).
inline EdgeSet edges_from_json(const json& arr)
{
    if (!arr.is_array()) throw error(errc::parse_error, "edges must be an array");
    EdgeSet out;
    try {
        for (const auto& e : arr) {
            out.insert(e.at("a").get<bus_t>(), e.at("b").get<bus_t>(),
                       parse_edge_tag(e.value("tag", std::string("given"))));
        }
    } catch (const json::exception& ex) {
        throw error(errc::parse_error, std::string("malformed edge entry: ") + ex.what());
    }
    return out;
}

inline json to_json(const solver::BicTrace& t)
{
    json rec = json::array();
    for (const auto& r : t.records) {
        rec.push_back({{"lambda", r.lambda}, {"rss", r.rss}, {"active", r.active}, {"bic", r.bic}});
    }
    return {{"records", rec}, {"sigma2", t.sigma2}, {"n_obs", t.n_obs}};
}

/// Estimation report without wall-clock timings (those live in the manifest).
inline json to_json(const topo::TopologyResult& r)
{
    json buses = json::array();
    for (const auto& b : r.buses) {
        buses.push_back({{"bus", b.target},
                         {"lambda", b.lambda},
                         {"active", b.active},
                         {"cap_exceeded", b.cap_exceeded},
                         {"converged", b.converged},
                         {"candidates", b.candidates},
                         {"neighbors", b.neighbors},
                         {"ambiguous", b.ambiguous}});
    }
    json out{{"edges", to_json(r.edges)},
             {"edge_count", r.edges.size()},
             {"buses", buses},
             {"isolated", r.isolated},
             {"warnings", r.warnings}};
    if (r.joint_lambda) out["joint_lambda"] = *r.joint_lambda;
    return out;
}

inline json to_json(const metrics::EvaluationReport& r)
{
    json fe = json::array(), me = json::array(), be = json::object();
    for (const auto& e : r.false_edges) fe.push_back(to_json(e));
    for (const auto& e : r.missing_edges) me.push_back(to_json(e));
    for (const auto& [b, n] : r.bus_errors) be[std::to_string(b)] = n;
    return {{"error_rate", r.error_rate},
            {"false_edges", fe},
            {"missing_edges", me},
            {"bus_errors", be},
            {"true_edges", r.true_edges},
            {"estimated_edges", r.estimated_edges},
            {"precision", r.precision},
            {"recall", r.recall},
            {"trial", {{"seed", r.trial.seed}, {"T", r.trial.T}, {"noise_level", r.trial.noise_level}, {"rule", r.trial.rule}}}};
}

} // namespace gridtopo::io
