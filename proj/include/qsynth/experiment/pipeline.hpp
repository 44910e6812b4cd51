#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <ostream>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "qsynth/attack.hpp"
#include "qsynth/data/balance.hpp"
#include "qsynth/data/epoch_file.hpp"
#include "qsynth/data/generators.hpp"
#include "qsynth/epoch.hpp"
#include "qsynth/errors.hpp"
#include "qsynth/eval/metrics.hpp"
#include "qsynth/experiment/config.hpp"
#include "qsynth/nn/checkpoint.hpp"
#include "qsynth/nn/model.hpp"
#include "qsynth/nn/train.hpp"
#include "qsynth/oracle.hpp"
#include "qsynth/rng.hpp"
#include "qsynth/synthesis/active.hpp"
#include "qsynth/synthesis/jacobian.hpp"

namespace qsynth::experiment {

/// Every seed a run consumes, each derive_seed(run seed, 0, stage name).
struct RunSeeds {
    std::uint64_t run = 0;
    std::uint64_t data = 0;
    std::uint64_t target_init = 0;
    std::uint64_t target_shuffle = 0;
    std::uint64_t noise = 0;
    std::uint64_t balance = 0;
    std::uint64_t substitute_init = 0;
    std::uint64_t substitute_shuffle = 0;
    std::uint64_t synthesis = 0;
    std::uint64_t jacobian = 0;

    explicit RunSeeds(std::uint64_t seed = 0)
        : run(seed),
          data(derive_seed(seed, 0, "data")),
          target_init(derive_seed(seed, 0, "target-init")),
          target_shuffle(derive_seed(seed, 0, "target-shuffle")),
          noise(derive_seed(seed, 0, "noise")),
          balance(derive_seed(seed, 0, "balance")),
          substitute_init(derive_seed(seed, 0, "substitute-init")),
          substitute_shuffle(derive_seed(seed, 0, "substitute-shuffle")),
          synthesis(derive_seed(seed, 0, "synthesis")),
          jacobian(derive_seed(seed, 0, "jacobian")) {}

    nlohmann::json to_json() const {
        return {{"run", run},
                {"data", data},
                {"target_init", target_init},
                {"target_shuffle", target_shuffle},
                {"noise", noise},
                {"balance", balance},
                {"substitute_init", substitute_init},
                {"substitute_shuffle", substitute_shuffle},
                {"synthesis", synthesis},
                {"jacobian", jacobian}};
    }
};

struct Splits {
    LabeledSet train;
    LabeledSet test;
    LabeledSet pool;
};

/// One generator draw of (train + test + pool) epochs per class, split in
/// that order within each class. Same seed, same splits.
inline Splits generate_splits(const DatasetConfig& d, std::uint64_t seed) {
    const std::size_t per_class = d.train_per_class + d.test_per_class + d.pool_per_class;
    const Shape shape{d.channels, d.samples};
    const LabeledSet all = d.generator == "blobs"
                               ? data::gen_blobs(per_class, d.num_classes, shape, d.separation, d.sigma, seed)
                               : data::gen_synthetic_epochs(per_class, d.num_classes, d.channels, d.samples, seed,
                                                            d.noise);
    Splits s;
    for (std::size_t c = 0; c < d.num_classes; ++c) {
        const auto idx = all.indices_of(static_cast<Label>(c));
        for (std::size_t k = 0; k < idx.size(); ++k) {
            LabeledSet& dst = k < d.train_per_class                    ? s.train
                              : k < d.train_per_class + d.test_per_class ? s.test
                                                                         : s.pool;
            dst.add(all.epoch(idx[k]), all.label(idx[k]));
        }
    }
    return s;
}

inline Splits load_splits(const DatasetConfig& d, std::uint64_t seed) {
    Splits s = generate_splits(d, seed);
    if (!d.train_file.empty()) s.train = data::read_epochs(d.train_file);
    if (!d.test_file.empty()) s.test = data::read_epochs(d.test_file);
    if (!d.pool_file.empty()) s.pool = data::read_epochs(d.pool_file);
    const Shape shape{d.channels, d.samples};
    for (const LabeledSet* set : {&s.train, &s.test, &s.pool}) {
        if (set->empty()) throw ConfigError("dataset: a split is empty");
        if (set->shape() != shape) {
            throw ConfigError("dataset: file shape " + to_string(set->shape()) + " does not match configured " +
                              to_string(shape));
        }
    }
    return s;
}

inline nn::Model train_target(const ExperimentConfig& cfg, const LabeledSet& train, const RunSeeds& seeds) {
    nn::Model target(cfg.target.spec(train.shape(), cfg.dataset.num_classes, seeds.target_init));
    nn::TrainConfig tc = cfg.target.train;
    tc.shuffle_seed = seeds.target_shuffle;
    nn::train(target, train, tc);
    return target;
}

/// Everything about a run that does not depend on the attack method or
/// budget. Methods run against the same task share data, target and S0.
struct Task {
    RunSeeds seeds;
    Splits splits;
    nn::Model target;
    std::vector<Label> target_test_predictions;
    eval::MetricReport baseline;
    eval::MetricReport noisy;
};

inline Task prepare_task(const ExperimentConfig& cfg, std::uint64_t run_seed) {
    const RunSeeds seeds(run_seed);
    Splits splits = load_splits(cfg.dataset, seeds.data);
    nn::Model target = cfg.target_checkpoint.empty() ? train_target(cfg, splits.train, seeds)
                                                     : nn::read_checkpoint(cfg.target_checkpoint);
    if (target.input_shape() != splits.test.shape() || target.num_classes() != cfg.dataset.num_classes) {
        throw ConfigError("target model does not match the dataset shape or class count");
    }
    const auto& test = splits.test;
    auto preds = eval::predict_all(target, std::span<const Epoch>(test.epochs()));
    auto baseline = eval::evaluate(preds, test.labels(), cfg.dataset.num_classes);

    const auto noise = attack::craft_noise(test, cfg.attack.epsilon, seeds.noise);
    const auto noisy_epochs = attack::perturbed_epochs(noise);
    const auto noisy_preds = eval::predict_all(target, std::span<const Epoch>(noisy_epochs));
    auto noisy = eval::evaluate(noisy_preds, test.labels(), cfg.dataset.num_classes);
    return {seeds, std::move(splits), std::move(target), std::move(preds), std::move(baseline), std::move(noisy)};
}

/// Query plan for one method at one budget. The budget counts labels spent on
/// substitute training (|S0| + augmentation); pool balancing is charged
/// separately.
struct Plan {
    Method method = Method::active;
    std::size_t initial = 0;
    std::size_t budget = 0;
    synthesis::SynthesisConfig synthesis;
    synthesis::JacobianConfig jacobian;
};

inline Plan make_plan(const ExperimentConfig& cfg, Method method, std::optional<std::size_t> budget) {
    Plan p;
    p.method = method;
    p.initial = cfg.initial_size();
    p.synthesis = cfg.synthesis;
    p.jacobian = cfg.jacobian;
    switch (method) {
        case Method::noise_only:
            p.budget = 0;
            break;
        case Method::active:
            if (budget) {
                const std::size_t n = cfg.synthesis.per_iteration;
                if (*budget <= p.initial || (*budget - p.initial) % n != 0) {
                    throw ConfigError("budget " + std::to_string(*budget) + " is not |S0| (" +
                                      std::to_string(p.initial) + ") plus a positive multiple of per_iteration (" +
                                      std::to_string(n) + ")");
                }
                p.synthesis.max_iterations = (*budget - p.initial) / n;
            }
            p.budget = p.synthesis.planned_queries(p.initial);
            break;
        case Method::jacobian:
            if (budget) {
                if (*budget <= p.initial) {
                    throw ConfigError("budget " + std::to_string(*budget) + " leaves no queries after |S0| (" +
                                      std::to_string(p.initial) + ")");
                }
                const std::size_t cap = *budget - p.initial;
                std::size_t rounds = 0;
                for (std::size_t added = 0, set = p.initial; added < cap; ++rounds) {
                    added += set;
                    set *= 2;
                }
                p.jacobian.iterations = rounds;
                p.jacobian.query_cap = cap;
            }
            p.budget = p.jacobian.planned_queries(p.initial);
            break;
    }
    return p;
}

namespace detail {

/// Runs fn(); a qsynth::Error escaping it is rethrown as a StageError naming
/// `stage`, with the original nested.
template <class Fn>
decltype(auto) in_stage(const char* stage, Fn&& fn) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        std::throw_with_nested(StageError(stage, e.what()));
    }
}

}  // namespace detail

struct RunOutcome {
    Method method = Method::active;
    std::size_t budget = 0;
    RunSeeds seeds;
    std::size_t balancing_queries = 0;
    std::size_t total_target_queries = 0;
    std::vector<Epoch> initial;  ///< S0
    std::optional<synthesis::SubstituteRun> substitute;
    std::vector<attack::AdversarialExample> adversarial;
    eval::MetricReport baseline;
    eval::MetricReport noisy;
    eval::MetricReport attacked;
    double agreement = 0.0;  ///< substitute vs target labels on the test set (0 without a substitute)
};

/// Balance the pool, train the substitute under `plan`, craft adversarial
/// test epochs from it and score the target on them. The oracle's hard
/// budget is |pool| + plan.budget. The noise-only method skips substitute
/// training and reports the noisy scores as attacked scores.
inline RunOutcome run_method(const ExperimentConfig& cfg, const Task& task, const Plan& plan) {
    const std::size_t k = cfg.dataset.num_classes;
    const auto& pool = task.splits.pool;
    const auto& test = task.splits.test;

    TargetOracle<nn::Model> oracle(task.target, pool.shape(), pool.size() + std::max<std::size_t>(plan.budget, 1));

    RunOutcome out;
    out.method = plan.method;
    out.budget = plan.budget;
    out.seeds = task.seeds;
    out.baseline = task.baseline;
    out.noisy = task.noisy;
    out.initial = detail::in_stage("balance", [&] {
        return data::balance_by_predicted_label(oracle, std::span<const Epoch>(pool.epochs()), cfg.balance.per_class,
                                                k, task.seeds.balance, cfg.balance.strict);
    });
    out.balancing_queries = oracle.query_count();

    if (plan.method == Method::noise_only) {
        out.attacked = task.noisy;
        out.total_target_queries = oracle.query_count();
        return out;
    }

    const nn::ModelSpec spec = cfg.substitute.spec(pool.shape(), k, task.seeds.substitute_init);
    nn::TrainConfig tc = cfg.substitute.train;
    tc.shuffle_seed = task.seeds.substitute_shuffle;
    if (plan.method == Method::active) {
        auto sc = plan.synthesis;
        sc.seed = task.seeds.synthesis;
        out.substitute = detail::in_stage(
            "active-synthesis", [&] { return synthesis::train_substitute_active(oracle, out.initial, spec, tc, sc); });
    } else {
        auto jc = plan.jacobian;
        jc.seed = task.seeds.jacobian;
        out.substitute = detail::in_stage("jacobian-augmentation", [&] {
            return synthesis::train_substitute_jacobian(oracle, out.initial, spec, tc, jc);
        });
    }
    out.total_target_queries = oracle.query_count();

    const nn::Model& sub = out.substitute->model;
    attack::AttackConfig ac = cfg.attack;
    ac.noise_seed = task.seeds.noise;
    out.adversarial = detail::in_stage("attack", [&] { return attack::craft(sub, test, ac); });
    const auto adv_epochs = attack::perturbed_epochs(out.adversarial);
    const auto adv_preds = eval::predict_all(task.target, std::span<const Epoch>(adv_epochs));
    out.attacked = eval::evaluate(adv_preds, test.labels(), k);
    out.agreement =
        eval::boundary_agreement(sub, task.target_test_predictions, std::span<const Epoch>(test.epochs()));
    return out;
}

inline RunOutcome run_method(const ExperimentConfig& cfg, const Task& task, Method method,
                             std::optional<std::size_t> budget = std::nullopt) {
    return run_method(cfg, task, make_plan(cfg, method, budget));
}

inline std::string model_label(const ModelConfig& m) {
    std::string s(nn::to_string(m.architecture));
    for (std::size_t h : m.hidden) {
        if (m.architecture == nn::Architecture::linear_softmax) break;
        s += "-" + std::to_string(h);
    }
    return s;
}

inline constexpr const char* kResultsHeader =
    "dataset,target_model,substitute_model,method,budget,seed,rca,bca,baseline_rca,baseline_bca,noisy_rca,noisy_bca";

/// One results.csv row (no trailing newline).
inline std::string results_row(const ExperimentConfig& cfg, const RunOutcome& r) {
    std::ostringstream os;
    os.precision(10);
    os << cfg.dataset.name << ',' << model_label(cfg.target) << ','
       << (r.method == Method::noise_only ? std::string("none") : model_label(cfg.substitute)) << ','
       << to_string(r.method) << ',' << r.budget << ',' << r.seeds.run << ',' << r.attacked.rca << ','
       << r.attacked.bca << ',' << r.baseline.rca << ',' << r.baseline.bca << ',' << r.noisy.rca << ','
       << r.noisy.bca;
    return os.str();
}

/// trace.csv rows; target_queries include the balancing queries so the
/// last row equals the oracle's final count. Noise-only runs get one row.
inline void write_trace(std::ostream& out, const RunOutcome& r) {
    if (r.substitute) {
        r.substitute->trace.write_csv(out, r.balancing_queries);
    } else {
        out << "iteration,target_queries,substitute_queries,train_set_size\n";
        out << 0 << ',' << r.balancing_queries << ',' << 0 << ',' << 0 << '\n';
    }
}

}  // namespace qsynth::experiment
