#pragma once

#include "polyhom/finite_temp.hpp"
#include "polyhom/scaling_fit.hpp"
#include "polyhom/zero_temp.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <string>
#include <vector>

namespace polyhom {

struct GridTooSmall : std::runtime_error {
    using std::runtime_error::runtime_error;
};

PairPotential pair_from_json(const nlohmann::json& j);
VolumetricPotential vol_from_json(const nlohmann::json& j);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);

struct StudyConfig {
    std::string kind;  // w-inf-convergence | beta-gap | phantom | two-temp |
                       // growth-sandwich | rank-one | concentration | poincare |
                       // subadditivity
    nlohmann::json raw;  // the full config document (canonical input)

    GraphParams graph;
    bool lattice_fixture = false;  // use the deterministic unit-lattice fixture
    double clamp_width = -1.0;
    nlohmann::json pair;
    nlohmann::json vol;
    std::vector<Eigen::MatrixXd> lambdas;
    std::vector<double> windows;  // micro window sides
    std::vector<double> grid;     // beta / N1 / t grid depending on kind
    std::vector<std::uint64_t> seeds;
    nlohmann::json budgets;  // restarts, chain lengths, tolerances
    std::string output_path;
};

StudyConfig study_config_from_json(const nlohmann::json& j);
StudyConfig load_study_config(const std::string& path);

std::uint64_t config_hash(const StudyConfig& cfg);

struct StudyRecord {
    int point_id = 0;
    nlohmann::json inputs;
    double value = 0.0;
    double stderr_value = 0.0;
    bool ok = true;
    std::string error;
    nlohmann::json diagnostics;
};

struct StudyResult {
    std::string kind;
    std::uint64_t hash = 0;
    std::string version;
    std::vector<StudyRecord> records;
    nlohmann::json summary;  // fits, spreads, per-criterion numbers
    bool verdict = false;
};

// Runs the study points on a pool (POLYHOM_THREADS caps it), checkpointing
// each finished point to <output>.checkpoint.jsonl so an interrupted run
// resumes without recomputation. Failed points are recorded, not fatal.
StudyResult run_study(const StudyConfig& cfg, std::atomic<bool>* interrupted = nullptr);

std::string result_csv(const StudyResult& r);
void write_result_files(const StudyResult& r, const std::string& output_path);

struct PoincareReport {
    std::vector<double> window_sides;
    std::vector<double> max_ratios;  // per window, over seeds
    double spread = 0.0;             // max/min across the sweep
};

PoincareReport poincare_probe(const StudyConfig& cfg);

// build the graph for one study point; windows are micro side lengths
ExtendedGraph study_graph(const StudyConfig& cfg, double window_side, std::uint64_t seed);
Box study_domain(const StudyConfig& cfg, const ExtendedGraph& g, double window_side);

int thread_budget();
void parallel_for(int count, const std::function<void(int)>& body,
                  std::atomic<bool>* interrupted = nullptr);

}  // namespace polyhom
