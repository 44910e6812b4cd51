#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "qsynth/errors.hpp"
#include "qsynth/eval/metrics.hpp"
#include "qsynth/eval/stats.hpp"
#include "qsynth/rng.hpp"

namespace qsynth::eval {

struct SweepPoint {
    std::size_t budget = 0;
    double mean_rca = 0.0;
    double mean_bca = 0.0;
    double std_rca = 0.0;
    double std_bca = 0.0;
    std::size_t runs = 0;
    std::vector<double> rca_values;  ///< one per run, in run order
    std::vector<double> bca_values;
    std::vector<std::uint64_t> seeds;
};

struct SweepCurve {
    std::vector<SweepPoint> points;

    void write_csv(std::ostream& out) const {
        out << "budget,mean_rca,mean_bca,std_rca,std_bca,runs\n";
        for (const auto& p : points) {
            out << p.budget << ',' << p.mean_rca << ',' << p.mean_bca << ',' << p.std_rca << ',' << p.std_bca << ','
                << p.runs << '\n';
        }
    }
};

struct SweepResult {
    SweepCurve curve;
    bool complete = true;
    std::string error;  ///< message of the failure that stopped an incomplete sweep
};

/// closure(budget, run index, run seed) -> report for that run.
using SweepClosure = std::function<MetricReport(std::size_t, std::size_t, std::uint64_t)>;

/// Seed of run r in a sweep: derive_seed(master, r, "run"). Budgets share it,
/// so the runs at different budgets are paired.
inline std::uint64_t sweep_run_seed(std::uint64_t master, std::size_t run) { return derive_seed(master, run, "run"); }

inline SweepPoint summarize(std::size_t budget, std::vector<double> rca_values, std::vector<double> bca_values,
                            std::vector<std::uint64_t> seeds) {
    SweepPoint p;
    p.budget = budget;
    p.runs = rca_values.size();
    p.mean_rca = mean(rca_values);
    p.mean_bca = mean(bca_values);
    p.std_rca = stddev(rca_values);
    p.std_bca = stddev(bca_values);
    p.rca_values = std::move(rca_values);
    p.bca_values = std::move(bca_values);
    p.seeds = std::move(seeds);
    return p;
}

/// Runs `closure` for every budget (outer) and run (inner). A throwing
/// closure stops the sweep; finished points, plus the finished runs of the
/// interrupted budget, are kept and the result is flagged incomplete.
inline SweepResult run_sweep(const std::vector<std::size_t>& budgets, std::size_t runs, std::uint64_t master_seed,
                             const SweepClosure& closure) {
    if (budgets.empty()) throw InvalidArgument("sweep: no budgets");
    if (runs < 1) throw InvalidArgument("sweep: runs must be >= 1");
    for (std::size_t i = 1; i < budgets.size(); ++i) {
        if (budgets[i] <= budgets[i - 1]) throw InvalidArgument("sweep: budgets must be strictly increasing");
    }
    SweepResult result;
    for (std::size_t budget : budgets) {
        std::vector<double> r, b;
        std::vector<std::uint64_t> seeds;
        for (std::size_t run = 0; run < runs; ++run) {
            const std::uint64_t seed = sweep_run_seed(master_seed, run);
            try {
                const MetricReport report = closure(budget, run, seed);
                r.push_back(report.rca);
                b.push_back(report.bca);
                seeds.push_back(seed);
            } catch (const std::exception& e) {
                result.complete = false;
                result.error = "budget " + std::to_string(budget) + ", run " + std::to_string(run) + ": " + e.what();
                if (!r.empty()) result.curve.points.push_back(summarize(budget, r, b, seeds));
                return result;
            }
        }
        result.curve.points.push_back(summarize(budget, std::move(r), std::move(b), std::move(seeds)));
    }
    return result;
}

}  // namespace qsynth::eval
