// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "qsynth/qsynth.hpp"

using namespace qsynth;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v, int precision = 4) {
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

nn::Model random_binary_mlp(Rng& rng, Shape shape) {
    nn::ModelSpec spec;
    spec.architecture = nn::Architecture::mlp;
    spec.input = shape;
    spec.num_classes = 2;
    spec.hidden = {std::uniform_int_distribution<std::size_t>(4, 12)(rng)};
    spec.activation = nn::Activation::tanh;
    spec.seed = rng();
    return nn::Model(spec);
}

/// Random epochs until the model labels them differently.
synthesis::OppositePair random_opposite_pair(const nn::Model& m, Rng& rng) {
    for (;;) {
        Epoch a = fixtures::random_epoch(m.input_shape(), rng, 3.0);
        Epoch b = fixtures::random_epoch(m.input_shape(), rng, 3.0);
        const Label la = m.predict(a), lb = m.predict(b);
        if (la != lb) return {std::move(a), std::move(b), la, lb};
    }
}

// 1. Analytic input gradients match long-double central differences.
Outcome gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    std::size_t checks = 0;
    for (auto arch : {nn::Architecture::linear_softmax, nn::Architecture::mlp, nn::Architecture::temporal_conv}) {
        Rng rng(derive_seed(101, static_cast<std::size_t>(arch), "acceptance-gradients"));
        for (int model = 0; model < 10; ++model) {
            const auto m = fixtures::random_model(arch, rng);
            for (int input = 0; input < 10; ++input) {
                const Label y = static_cast<Label>(rng() % m.num_classes());
                Epoch x = fixtures::random_epoch(m.input_shape(), rng);
                while (!fixtures::smooth_at(m, x, y, 1e-3)) x = fixtures::random_epoch(m.input_shape(), rng);
                const auto numeric = fixtures::numeric_input_gradient(m, x, y, 1e-3);
                worst = std::max(worst, fixtures::relative_error(m.input_gradient(x, y), numeric));
                ++checks;
            }
        }
    }
    const double elapsed = seconds_since(t0);
    return {worst < 1e-4 && elapsed < 30.0,
            std::to_string(checks) + " checks, worst relative error " + num(worst) + ", " + num(elapsed, 3) + " s"};
}

// 2. Every perturbation is eps times a sign vector.
Outcome perturbation_bounds() {
    Rng rng(202);
    std::size_t bad = 0;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto m = fixtures::random_model(static_cast<nn::Architecture>(i % 3), rng);
        const Epoch x = fixtures::random_epoch(m.input_shape(), rng, 2.0);
        const double eps = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        attack::AdversarialExample adv;
        switch (i % 3) {
            case 0: adv = attack::fgsm(m, x, static_cast<Label>(rng() % m.num_classes()), eps); break;
            case 1: adv = attack::ufgsm(m, x, eps); break;
            default: adv = attack::random_noise(x, eps, rng); break;
        }
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double d = adv.perturbation[j];
            const double realized = adv.perturbed[j] - x[j];
            worst = std::max(worst, std::fabs(realized));
            const bool in_set = d == eps || d == -eps || d == 0.0;
            if (!in_set || std::fabs(realized) > eps + 1e-9 || std::fabs(realized - d) > 1e-9) ++bad;
        }
    }
    return {bad == 0, "1000 triples, " + std::to_string(bad) + " bad components"};
}

// 3. m bisection steps shrink the pair by 2^-m and keep it bracketing.
Outcome bisection_contraction() {
    Rng rng(303);
    const std::size_t m = 10;
    double worst = 0.0;
    std::size_t lost = 0;
    for (int i = 0; i < 100; ++i) {
        const auto sub = random_binary_mlp(rng, {2, 6});
        const auto pair = random_opposite_pair(sub, rng);
        const double initial = norm2(pair.positive - pair.negative);
        const auto r = synthesis::binary_search_pair(pair, sub, m);
        const double final = norm2(r.pair.positive - r.pair.negative);
        worst = std::max(worst, std::fabs(final - initial * std::ldexp(1.0, -static_cast<int>(m))) /
                                    (initial * std::ldexp(1.0, -static_cast<int>(m))));
        if (sub.predict(r.pair.positive) == sub.predict(r.pair.negative) || r.queries != m) ++lost;
    }
    return {worst <= 1e-6 && lost == 0,
            "100 pairs, worst relative distance error " + num(worst) + ", " + std::to_string(lost) + " lost"};
}

// 4. The mid-perpendicular offset is orthogonal to the pair and has norm q.
Outcome perpendicular_offset() {
    Rng rng(404);
    std::size_t bad = 0;
    double worst_cos = 0.0, worst_norm = 0.0;
    for (int i = 0; i < 100; ++i) {
        const auto sub = random_binary_mlp(rng, {3, 5});
        const auto pair = random_opposite_pair(sub, rng);
        const double q = std::uniform_real_distribution<double>(0.1, 5.0)(rng);
        const auto r = synthesis::mid_perpendicular(pair, sub, 10, q, rng);
        const Epoch d = pair.positive - pair.negative;
        const double cosine = std::fabs(dot(r.offset, d)) / (norm2(r.offset) * norm2(d));
        const double norm_err = std::fabs(norm2(r.offset) - q);
        const Epoch back = r.synthesized - midpoint(r.refined.positive, r.refined.negative);
        worst_cos = std::max(worst_cos, cosine);
        worst_norm = std::max(worst_norm, norm_err);
        if (cosine > 1e-6 || norm_err > 1e-6 || norm2(back - r.offset) > 1e-9 * (1.0 + q)) ++bad;
    }
    return {bad == 0, "100 cases, worst |cos| " + num(worst_cos) + ", worst norm error " + num(worst_norm)};
}

// 5. Query accounting of both augmentation methods.
Outcome query_accounting() {
    const experiment::ExperimentConfig cfg;
    const auto task = experiment::prepare_task(cfg, eval::sweep_run_seed(cfg.seed, 0));
    const auto active = experiment::run_method(cfg, task, experiment::Method::active, std::nullopt);
    const auto& trace = active.substitute->trace;
    const std::size_t s0 = trace.iterations.front().target_queries;
    const std::size_t total = trace.target_queries();
    bool ok = total == 800 && s0 == 400 && total - s0 == 400 &&
              active.total_target_queries == task.splits.pool.size() + 800;

    std::ostringstream detail;
    detail << "active: |S0| " << s0 << " + augmentation " << total - s0 << " = " << total << "; jacobian:";
    nn::TrainConfig tc = cfg.substitute.train;
    tc.max_epochs = 20;
    const std::vector<Epoch> initial(task.splits.pool.epochs().begin(), task.splits.pool.epochs().begin() + 100);
    for (std::size_t n = 1; n <= 3; ++n) {
        TargetOracle oracle(task.target, task.splits.pool.shape());
        synthesis::JacobianConfig jc;
        jc.iterations = n;
        const auto run = synthesis::train_substitute_jacobian(oracle, initial, cfg.substitute.spec(task.splits.pool.shape(), 2, 5), tc, jc);
        const std::size_t added = oracle.query_count() - initial.size();
        ok = ok && added == initial.size() * ((std::size_t{1} << n) - 1) && run.data.size() == oracle.query_count();
        detail << " N=" << n << " adds " << added;
    }
    return {ok, detail.str()};
}

struct PairedRuns {
    std::vector<double> baseline, noisy, active, jacobian, agree_active, agree_jacobian;
};

const PairedRuns& paired_runs() {
    static const PairedRuns runs = [] {
        PairedRuns r;
        const experiment::ExperimentConfig cfg;
        for (std::size_t i = 0; i < 20; ++i) {
            const auto task = experiment::prepare_task(cfg, eval::sweep_run_seed(cfg.seed, i));
            const auto a = experiment::run_method(cfg, task, experiment::Method::active, 800);
            const auto j = experiment::run_method(cfg, task, experiment::Method::jacobian, 800);
            r.baseline.push_back(task.baseline.rca);
            r.noisy.push_back(task.noisy.rca);
            r.active.push_back(a.attacked.rca);
            r.jacobian.push_back(j.attacked.rca);
            r.agree_active.push_back(a.agreement);
            r.agree_jacobian.push_back(j.agreement);
        }
        return r;
    }();
    return runs;
}

// 6. Random-sign noise barely moves accuracy; UFGSM from the substitute does.
Outcome attack_effect() {
    const auto& r = paired_runs();
    const double noise_drop = eval::mean(r.baseline) - eval::mean(r.noisy);
    const double attack_drop = eval::mean(r.baseline) - eval::mean(r.active);
    return {noise_drop < 0.02 && attack_drop >= noise_drop + 0.15,
            std::to_string(r.baseline.size()) + " seeds, baseline " + num(eval::mean(r.baseline)) + ", noise drop " +
                num(noise_drop) + ", ufgsm drop " + num(attack_drop)};
}

// 7. Active synthesis beats Jacobian augmentation at equal budget.
Outcome active_vs_jacobian() {
    const auto& r = paired_runs();
    const double a = eval::mean(r.active), j = eval::mean(r.jacobian);
    const auto st = eval::sign_test(r.active, r.jacobian);
    const double ag_a = eval::mean(r.agree_active), ag_j = eval::mean(r.agree_jacobian);
    const bool ok = a <= j && (st.p_value < 0.1 || j - a >= 0.02) && ag_a >= ag_j;
    return {ok, std::to_string(r.active.size()) + " paired runs at budget 800: attacked rca active " + num(a) +
                    " vs jacobian " + num(j) + ", sign " + std::to_string(st.wins) + "/" + std::to_string(st.losses) +
                    " p=" + num(st.p_value, 3) + ", agreement " + num(ag_a) + " vs " + num(ag_j)};
}

// 8. Attacked accuracy falls as the query budget grows.
Outcome budget_sweep() {
    const auto cfg = experiment::load_config(std::string(QSYNTH_CONFIG_DIR) + "/sweep.json");
    std::map<std::uint64_t, experiment::Task> tasks;
    const auto result = eval::run_sweep(cfg.budgets, cfg.runs, cfg.seed, [&](std::size_t budget, std::size_t, std::uint64_t seed) {
        auto it = tasks.find(seed);
        if (it == tasks.end()) it = tasks.emplace(seed, experiment::prepare_task(cfg, seed)).first;
        return experiment::run_method(cfg, it->second, cfg.method, budget).attacked;
    });
    if (!result.complete) return {false, "sweep incomplete: " + result.error};
    std::vector<double> budgets, means;
    std::ostringstream detail;
    detail << cfg.runs << " runs, mean rca";
    for (const auto& p : result.curve.points) {
        budgets.push_back(static_cast<double>(p.budget));
        means.push_back(p.mean_rca);
        detail << " " << p.budget << ":" << num(p.mean_rca, 3);
    }
    const double rho = eval::spearman(budgets, means);
    detail << ", spearman " << num(rho, 3);
    return {cfg.runs >= 10 && rho < 0.0, detail.str()};
}

// 9. RCA and BCA against a brute-force count.
Outcome metrics() {
    Rng rng(909);
    std::size_t bad = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t k = 2 + rng() % 5;
        const std::size_t n = 1 + rng() % 100;
        std::vector<Label> p(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = static_cast<Label>(rng() % k);
            y[i] = static_cast<Label>(rng() % k);
        }
        std::size_t hits = 0;
        std::vector<std::size_t> support(k, 0), correct(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            hits += p[i] == y[i];
            ++support[static_cast<std::size_t>(y[i])];
            correct[static_cast<std::size_t>(y[i])] += p[i] == y[i];
        }
        double recall_sum = 0.0;
        std::size_t present = 0;
        for (std::size_t c = 0; c < k; ++c) {
            if (support[c] == 0) continue;
            recall_sum += static_cast<double>(correct[c]) / static_cast<double>(support[c]);
            ++present;
        }
        const auto r = eval::evaluate(p, y, k);
        if (r.rca != static_cast<double>(hits) / static_cast<double>(n) ||
            std::fabs(r.bca - recall_sum / static_cast<double>(present)) > 1e-12) {
            ++bad;
        }
    }
    const double hand = eval::bca(std::vector<Label>{0, 0, 1, 1}, std::vector<Label>{0, 0, 0, 1});
    return {bad == 0 && std::fabs(hand - 5.0 / 6.0) < 1e-15,
            "1000 random vectors, " + std::to_string(bad) + " mismatches; hand case bca " + num(hand, 6)};
}

struct NearestCentre {
    std::vector<Epoch> centres;
    Label predict(const Epoch& x) const {
        std::size_t best = 0;
        for (std::size_t c = 1; c < centres.size(); ++c) {
            if (norm2(x - centres[c]) < norm2(x - centres[best])) best = c;
        }
        return static_cast<Label>(best);
    }
};

// 10. One-vs-one synthesis for four classes: six pairs, n_max per round.
Outcome one_vs_one() {
    const std::size_t k = 4, n_max = 200;
    const auto pairs = synthesis::class_pairs(k);
    bool ok = pairs.size() == 6;
    const auto quotas = synthesis::one_vs_one_quotas(k, {0, 1, 2, 3}, n_max);
    std::size_t quota_sum = 0;
    for (const auto& q : quotas) quota_sum += q.count;
    ok = ok && quotas.size() == 6 && quota_sum == n_max;

    const Shape shape{2, 4};
    const auto blobs = data::gen_blobs(25, k, shape, 6.0, 1.0, 1010);
    NearestCentre target;
    for (std::size_t c = 0; c < k; ++c) {
        Epoch centre(shape);
        for (std::size_t i : blobs.indices_of(static_cast<Label>(c))) centre += blobs.epoch(i);
        centre *= 1.0 / 25.0;
        target.centres.push_back(centre);
    }
    TargetOracle oracle(target, shape);
    synthesis::SynthesisConfig sc;
    sc.max_iterations = 3;
    sc.per_iteration = n_max;
    sc.seed = 11;
    nn::ModelSpec spec;
    spec.input = shape;
    spec.num_classes = k;
    spec.hidden = {16};
    nn::TrainConfig tc;
    tc.max_epochs = 40;
    const auto run = synthesis::train_substitute_active(oracle, blobs.epochs(), spec, tc, sc);
    std::ostringstream detail;
    detail << pairs.size() << " pairs, quota sum " << quota_sum << ", per-round additions";
    for (std::size_t r = 1; r < run.trace.iterations.size(); ++r) {
        const auto& it = run.trace.iterations[r];
        const std::size_t delta = it.target_queries - run.trace.iterations[r - 1].target_queries;
        ok = ok && it.added.size() == n_max && delta == n_max;
        detail << " " << it.added.size();
    }
    ok = ok && run.trace.iterations.size() == sc.max_iterations + 1;
    return {ok, detail.str()};
}

// 11. Epoch file round trip and exact byte lengths.
Outcome epoch_file() {
    Rng rng(1111);
    bool ok = true;
    std::ostringstream detail;
    for (Shape shape : {Shape{1, 1}, Shape{4, 16}, Shape{3, 250}}) {
        const std::size_t n = 1 + rng() % 20;
        LabeledSet set;
        for (std::size_t i = 0; i < n; ++i) {
            Epoch e = fixtures::random_epoch(shape, rng, 10.0);
            for (std::size_t j = 0; j < e.size(); ++j) e[j] = data::storable(e[j]);
            set.add(std::move(e), static_cast<Label>(rng() % 3));
        }
        const auto bytes = data::encode_epochs(set);
        const std::size_t expected = 4 + 3 * 4 + n * (shape.channels * shape.samples * 4 + 4);
        const auto back = data::decode_epochs(bytes);
        ok = ok && bytes.size() == expected && back == set;
        detail << " " << shape.channels << "x" << shape.samples << "/n=" << n << ":" << bytes.size() << "B";
    }
    return {ok, "round trip and sizes" + detail.str()};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"input gradients match central differences", gradients},
        {"perturbations are eps-bounded sign vectors", perturbation_bounds},
        {"bisection contracts by 2^-m and keeps the bracket", bisection_contraction},
        {"mid-perpendicular offset is orthogonal with norm q", perpendicular_offset},
        {"query accounting", query_accounting},
        {"noise control vs ufgsm", attack_effect},
        {"active synthesis vs jacobian augmentation", active_vs_jacobian},
        {"attacked accuracy falls with budget", budget_sweep},
        {"rca and bca", metrics},
        {"one-vs-one synthesis", one_vs_one},
        {"epoch file format", epoch_file},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].first << ": " << o.detail << " ["
                  << num(seconds_since(t0), 3) << " s]" << std::endl;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
