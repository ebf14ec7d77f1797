#pragma once

#include <algorithm>
#include <atomic>
#include <functional>
#include <limits>
#include <mutex>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "gridres/investments.hpp"
#include "gridres/npv.hpp"
#include "gridres/parallel.hpp"
#include "gridres/random.hpp"
#include "gridres/twin.hpp"

namespace gridres {

/// Binary portfolio encoding: bit i selects candidate i.
using Genome = std::vector<std::uint8_t>;

inline std::string genome_key(const Genome& g) {
    std::string key(g.size(), '0');
    for (size_t i = 0; i < g.size(); ++i) {
        key[i] = g[i] ? '1' : '0';
    }
    return key;
}

inline std::uint64_t genome_hash(const Genome& g) {
    return fnv1a64(g.data(), g.size());
}

struct Evaluation {
    double unserved_mwh = 0.0; // objective 1, mean over Monte Carlo runs
    double losses_mwh = 0.0;   // objective 2, mean over Monte Carlo runs
    double penalty = 0.0;      // normalized budget + timeline overshoot
    bool feasible = true;      // penalty == 0
    double portfolio_cost = 0.0;
    int fifo_days = 0;
};

struct GaConfig {
    int population_size = 0;
    int generations = 0;
    int mc_runs = 1;
    double crossover_prob = 0.9;
    double mutation_prob = -1.0; // < 0 -> 1 / genome length
    std::uint64_t master_seed = 0;

    void validate() const {
        if (population_size < 2) {
            throw ConfigError("ga.population_size must be >= 2");
        }
        if (generations < 0) {
            throw ConfigError("ga.generations must be >= 0");
        }
        if (mc_runs < 1) {
            throw ConfigError("ga.mc_runs must be >= 1");
        }
        if (crossover_prob < 0.0 || crossover_prob > 1.0) {
            throw ConfigError("ga.crossover_prob must be in [0, 1]");
        }
    }
};

// ---------------------------------------------------------------------------
// Pareto machinery
// ---------------------------------------------------------------------------

/// Constraint-dominated comparison: feasible beats infeasible, infeasible
/// solutions compare by penalty, feasible ones by Pareto dominance on the
/// two objectives.
inline bool dominates(const Evaluation& a, const Evaluation& b) {
    if (a.feasible != b.feasible) {
        return a.feasible;
    }
    if (!a.feasible) {
        return a.penalty < b.penalty;
    }
    bool no_worse = a.unserved_mwh <= b.unserved_mwh && a.losses_mwh <= b.losses_mwh;
    bool better = a.unserved_mwh < b.unserved_mwh || a.losses_mwh < b.losses_mwh;
    return no_worse && better;
}

/// Fast non-dominated sort; returns fronts as index lists, best first.
inline std::vector<std::vector<int>> non_dominated_sort(const std::vector<Evaluation>& evals) {
    const int n = static_cast<int>(evals.size());
    std::vector<std::vector<int>> dominated_by(n);
    std::vector<int> domination_count(n, 0);
    std::vector<std::vector<int>> fronts;
    std::vector<int> current;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) {
                continue;
            }
            if (dominates(evals[i], evals[j])) {
                dominated_by[i].push_back(j);
            } else if (dominates(evals[j], evals[i])) {
                ++domination_count[i];
            }
        }
        if (domination_count[i] == 0) {
            current.push_back(i);
        }
    }
    while (!current.empty()) {
        fronts.push_back(current);
        std::vector<int> next;
        for (int i : current) {
            for (int j : dominated_by[i]) {
                if (--domination_count[j] == 0) {
                    next.push_back(j);
                }
            }
        }
        std::sort(next.begin(), next.end());
        current = std::move(next);
    }
    return fronts;
}

/// NSGA-II crowding distance within one front: boundary points are infinite,
/// interior points sum the normalized neighbour gaps per objective. An
/// objective with zero range contributes nothing.
inline std::vector<double> crowding_distance(const std::vector<Evaluation>& front) {
    const size_t n = front.size();
    std::vector<double> dist(n, 0.0);
    if (n <= 2) {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
        return dist;
    }
    auto objective = [&](size_t i, int obj) {
        return obj == 0 ? front[i].unserved_mwh : front[i].losses_mwh;
    };
    std::vector<size_t> order(n);
    for (int obj = 0; obj < 2; ++obj) {
        for (size_t i = 0; i < n; ++i) {
            order[i] = i;
        }
        std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            return objective(a, obj) < objective(b, obj);
        });
        double lo = objective(order.front(), obj);
        double hi = objective(order.back(), obj);
        dist[order.front()] = std::numeric_limits<double>::infinity();
        dist[order.back()] = std::numeric_limits<double>::infinity();
        if (hi <= lo) {
            continue;
        }
        for (size_t k = 1; k + 1 < n; ++k) {
            dist[order[k]] +=
                (objective(order[k + 1], obj) - objective(order[k - 1], obj)) / (hi - lo);
        }
    }
    return dist;
}

/// Hypervolume dominated by a 2D minimization front relative to a reference
/// point. Points outside the reference box are ignored.
inline double hypervolume_2d(std::vector<std::pair<double, double>> points, double ref1,
                             double ref2) {
    std::erase_if(points, [&](const auto& p) { return p.first >= ref1 || p.second >= ref2; });
    std::sort(points.begin(), points.end());
    double hv = 0.0;
    double prev2 = ref2;
    for (const auto& [f1, f2] : points) {
        if (f2 >= prev2) {
            continue; // dominated by an earlier point
        }
        hv += (ref1 - f1) * (prev2 - f2);
        prev2 = f2;
    }
    return hv;
}

// ---------------------------------------------------------------------------
// Evaluation via the digital twin
// ---------------------------------------------------------------------------

/// Grid-aware evaluation function: applies the genome's investments, runs
/// Monte Carlo weather scenarios through the twin and averages the
/// objectives. Results are cached by genome, and scenario seeds derive from
/// (master seed, genome hash, run index) so caching can never change results.
class TwinEvaluator {
  public:
    TwinEvaluator(const Network& net, const TimeSeries& ts, const CandidateSet& candidates,
                  const WeatherConfig& weather, const SimSpan& span, int mc_runs,
                  std::uint64_t master_seed, int jobs = 1)
        : net_(net), ts_(ts), candidates_(candidates), weather_(weather), span_(span),
          mc_runs_(mc_runs), master_seed_(master_seed), jobs_(jobs) {}

    Evaluation evaluate(const Genome& genome) {
        if (genome.size() != candidates_.investments.size()) {
            throw Error(strf("genome length %zu does not match candidate count %zu",
                             genome.size(), candidates_.investments.size()));
        }
        std::string key = genome_key(genome);
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto it = cache_.find(key);
            if (it != cache_.end()) {
                return it->second;
            }
        }
        Evaluation ev = evaluate_uncached(genome);
        std::lock_guard<std::mutex> lock(mutex_);
        cache_.emplace(std::move(key), ev);
        return ev;
    }

    size_t simulations_run() const { return simulations_.load(); }

  private:
    Evaluation evaluate_uncached(const Genome& genome) {
        std::vector<Investment> selected;
        for (size_t i = 0; i < genome.size(); ++i) {
            if (genome[i]) {
                selected.push_back(candidates_.investments[i]);
            }
        }
        Evaluation ev;
        for (const auto& inv : selected) {
            ev.portfolio_cost += inv.capital_cost;
        }

        // Cheap FIFO feasibility estimate for the timeline; the exact ILP
        // schedule is solved only once, after selection.
        bool crew_ok = true;
        for (const auto& inv : selected) {
            if (inv.technicians_required > candidates_.technician_pool) {
                crew_ok = false;
            }
        }
        if (crew_ok && !selected.empty()) {
            ev.fifo_days = fifo_schedule(selected, candidates_.technician_pool).makespan_days;
        } else if (!crew_ok) {
            int serial = 0;
            for (const auto& inv : selected) {
                serial += inv.work_days;
            }
            ev.fifo_days = serial;
            ev.penalty += 1.0; // unstaffable project
        }

        double budget_denom = candidates_.budget > 0.0 ? candidates_.budget : 1.0;
        ev.penalty += std::max(0.0, ev.portfolio_cost - candidates_.budget) / budget_denom;
        double horizon_denom = candidates_.horizon_days > 0 ? candidates_.horizon_days : 1.0;
        ev.penalty +=
            std::max(0.0, static_cast<double>(ev.fifo_days - candidates_.horizon_days)) /
            horizon_denom;
        ev.feasible = ev.penalty == 0.0;

        Network invested = apply_investments(net_, selected);
        std::uint64_t ghash = genome_hash(genome);
        std::vector<double> unserved(mc_runs_), losses(mc_runs_);
        parallel_for(static_cast<size_t>(mc_runs_), jobs_, [&](size_t r) {
            std::uint64_t seed = derive_seed(master_seed_, ghash, r);
            SimulationResult res = run_scenario(invested, ts_, weather_, seed, span_);
            unserved[r] = res.total_unserved_mwh();
            losses[r] = res.total_losses_mwh();
            simulations_.fetch_add(1);
        });
        for (int r = 0; r < mc_runs_; ++r) {
            ev.unserved_mwh += unserved[r] / mc_runs_;
            ev.losses_mwh += losses[r] / mc_runs_;
        }
        return ev;
    }

    const Network& net_;
    const TimeSeries& ts_;
    const CandidateSet& candidates_;
    WeatherConfig weather_;
    SimSpan span_;
    int mc_runs_;
    std::uint64_t master_seed_;
    int jobs_;
    std::mutex mutex_;
    std::unordered_map<std::string, Evaluation> cache_;
    std::atomic<size_t> simulations_{0};
};

// ---------------------------------------------------------------------------
// The algorithm
// ---------------------------------------------------------------------------

struct GaEntry {
    Genome genome;
    Evaluation eval;
};

struct GenerationStats {
    int generation = 0;
    size_t evaluations = 0; // eval calls so far, cache hits included
    size_t archive_size = 0;
    double archive_hypervolume = 0.0;
    std::vector<GaEntry> front; // feasible first front this generation
};

struct GaResult {
    std::vector<GaEntry> archive; // all nondominated feasible solutions seen
    std::vector<GenerationStats> history;
    std::vector<GaEntry> final_population;
};

namespace detail {

inline void archive_insert(std::vector<GaEntry>& archive, const GaEntry& entry) {
    if (!entry.eval.feasible) {
        return;
    }
    for (const auto& a : archive) {
        if (dominates(a.eval, entry.eval) || a.genome == entry.genome) {
            return;
        }
    }
    std::erase_if(archive, [&](const GaEntry& a) { return dominates(entry.eval, a.eval); });
    archive.push_back(entry);
}

inline double archive_hypervolume(const std::vector<GaEntry>& archive, double ref1,
                                  double ref2) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(archive.size());
    for (const auto& a : archive) {
        pts.push_back({a.eval.unserved_mwh, a.eval.losses_mwh});
    }
    return hypervolume_2d(std::move(pts), ref1, ref2);
}

} // namespace detail

/// Elitist (mu+lambda) NSGA-II over binary genomes: binary tournaments on
/// (rank, crowding), single-point crossover, per-bit flip mutation, survival
/// by front then crowding. Besides the surviving population, a separate
/// archive accumulates every nondominated feasible solution encountered, so
/// the best known front can only improve between generations.
inline GaResult run_nsga2(const GaConfig& cfg, size_t genome_length,
                          const std::function<Evaluation(const Genome&)>& eval_fn,
                          int jobs = 1) {
    cfg.validate();
    if (genome_length == 0) {
        throw ConfigError("cannot optimize an empty candidate set");
    }
    const int pop_size = cfg.population_size;
    const double pm = cfg.mutation_prob >= 0.0 ? cfg.mutation_prob
                                               : 1.0 / static_cast<double>(genome_length);
    Rng rng(derive_seed(cfg.master_seed, fnv1a64("nsga2")));
    size_t eval_calls = 0;

    auto evaluate_all = [&](const std::vector<Genome>& genomes) {
        std::vector<Evaluation> evals(genomes.size());
        parallel_for(genomes.size(), jobs, [&](size_t i) { evals[i] = eval_fn(genomes[i]); });
        eval_calls += genomes.size();
        return evals;
    };

    std::vector<Genome> population;
    population.reserve(pop_size);
    for (int i = 0; i < pop_size; ++i) {
        Genome g(genome_length, 0);
        for (auto& bit : g) {
            bit = rng.bernoulli(0.5) ? 1 : 0;
        }
        population.push_back(std::move(g));
    }
    std::vector<Evaluation> evals = evaluate_all(population);

    GaResult result;
    for (size_t i = 0; i < population.size(); ++i) {
        detail::archive_insert(result.archive, {population[i], evals[i]});
    }

    auto record_generation = [&](int gen) {
        GenerationStats st;
        st.generation = gen;
        st.evaluations = eval_calls;
        st.archive_size = result.archive.size();
        st.archive_hypervolume = detail::archive_hypervolume(result.archive, 1e18, 1e18);
        auto fronts = non_dominated_sort(evals);
        for (int idx : fronts.front()) {
            if (evals[idx].feasible) {
                st.front.push_back({population[idx], evals[idx]});
            }
        }
        result.history.push_back(std::move(st));
    };
    record_generation(0);

    for (int gen = 1; gen <= cfg.generations; ++gen) {
        // Ranks and crowding of the current population, for selection.
        auto fronts = non_dominated_sort(evals);
        std::vector<int> rank(population.size(), 0);
        std::vector<double> crowd(population.size(), 0.0);
        for (size_t f = 0; f < fronts.size(); ++f) {
            std::vector<Evaluation> fe;
            for (int idx : fronts[f]) {
                fe.push_back(evals[idx]);
            }
            auto cd = crowding_distance(fe);
            for (size_t k = 0; k < fronts[f].size(); ++k) {
                rank[fronts[f][k]] = static_cast<int>(f);
                crowd[fronts[f][k]] = cd[k];
            }
        }
        auto tournament = [&]() {
            int a = static_cast<int>(rng.next_u64() % population.size());
            int b = static_cast<int>(rng.next_u64() % population.size());
            if (rank[a] != rank[b]) {
                return rank[a] < rank[b] ? a : b;
            }
            if (crowd[a] != crowd[b]) {
                return crowd[a] > crowd[b] ? a : b;
            }
            return a;
        };

        // Offspring that duplicate a current or already-generated genome are
        // redrawn (with a retry budget), keeping the small populations this
        // problem runs with from collapsing onto a handful of genomes. With
        // variation disabled every child is a clone, so after the budget is
        // spent clones are admitted as-is.
        std::set<std::string> seen;
        for (const auto& g : population) {
            seen.insert(genome_key(g));
        }
        std::vector<Genome> offspring;
        offspring.reserve(pop_size);
        int redraws_left = 100 * pop_size;
        while (static_cast<int>(offspring.size()) < pop_size) {
            Genome c1 = population[tournament()];
            Genome c2 = population[tournament()];
            if (genome_length >= 2 && rng.bernoulli(cfg.crossover_prob)) {
                size_t point = 1 + static_cast<size_t>(rng.next_u64() % (genome_length - 1));
                for (size_t k = point; k < genome_length; ++k) {
                    std::swap(c1[k], c2[k]);
                }
            }
            for (auto& bit : c1) {
                if (rng.bernoulli(pm)) {
                    bit ^= 1;
                }
            }
            for (auto& bit : c2) {
                if (rng.bernoulli(pm)) {
                    bit ^= 1;
                }
            }
            for (Genome* child : {&c1, &c2}) {
                if (static_cast<int>(offspring.size()) >= pop_size) {
                    break; // odd populations drop the last child
                }
                bool fresh = seen.insert(genome_key(*child)).second;
                if (fresh || --redraws_left < 0) {
                    offspring.push_back(std::move(*child));
                }
            }
        }
        std::vector<Evaluation> off_evals = evaluate_all(offspring);
        for (size_t i = 0; i < offspring.size(); ++i) {
            detail::archive_insert(result.archive, {offspring[i], off_evals[i]});
        }

        // (mu + lambda) survival by fronts, then crowding.
        std::vector<Genome> combined = population;
        combined.insert(combined.end(), offspring.begin(), offspring.end());
        std::vector<Evaluation> combined_evals = evals;
        combined_evals.insert(combined_evals.end(), off_evals.begin(), off_evals.end());

        auto comb_fronts = non_dominated_sort(combined_evals);
        std::vector<Genome> next_pop;
        std::vector<Evaluation> next_evals;
        for (const auto& front : comb_fronts) {
            if (static_cast<int>(next_pop.size()) >= pop_size) {
                break;
            }
            if (static_cast<int>(next_pop.size() + front.size()) <= pop_size) {
                for (int idx : front) {
                    next_pop.push_back(combined[idx]);
                    next_evals.push_back(combined_evals[idx]);
                }
            } else {
                std::vector<Evaluation> fe;
                for (int idx : front) {
                    fe.push_back(combined_evals[idx]);
                }
                auto cd = crowding_distance(fe);
                std::vector<size_t> order(front.size());
                for (size_t k = 0; k < front.size(); ++k) {
                    order[k] = k;
                }
                std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
                    if (cd[a] != cd[b]) {
                        return cd[a] > cd[b];
                    }
                    return front[a] < front[b];
                });
                for (size_t k = 0; static_cast<int>(next_pop.size()) < pop_size; ++k) {
                    next_pop.push_back(combined[front[order[k]]]);
                    next_evals.push_back(combined_evals[front[order[k]]]);
                }
            }
        }
        population = std::move(next_pop);
        evals = std::move(next_evals);
        record_generation(gen);
    }

    for (size_t i = 0; i < population.size(); ++i) {
        result.final_population.push_back({population[i], evals[i]});
    }
    return result;
}

/// Picks the compromise solution from a feasible front: min-max normalize
/// each objective over the front, take the minimal normalized sum, break
/// ties by portfolio cost.
inline const GaEntry& select_compromise(const std::vector<GaEntry>& front) {
    if (front.empty()) {
        throw InfeasibleError("no feasible portfolio on the Pareto front");
    }
    double lo1 = front[0].eval.unserved_mwh, hi1 = lo1;
    double lo2 = front[0].eval.losses_mwh, hi2 = lo2;
    for (const auto& e : front) {
        lo1 = std::min(lo1, e.eval.unserved_mwh);
        hi1 = std::max(hi1, e.eval.unserved_mwh);
        lo2 = std::min(lo2, e.eval.losses_mwh);
        hi2 = std::max(hi2, e.eval.losses_mwh);
    }
    auto score = [&](const GaEntry& e) {
        double s1 = hi1 > lo1 ? (e.eval.unserved_mwh - lo1) / (hi1 - lo1) : 0.0;
        double s2 = hi2 > lo2 ? (e.eval.losses_mwh - lo2) / (hi2 - lo2) : 0.0;
        return s1 + s2;
    };
    const GaEntry* best = &front[0];
    double best_score = score(front[0]);
    for (const auto& e : front) {
        double s = score(e);
        if (s < best_score ||
            (s == best_score && e.eval.portfolio_cost < best->eval.portfolio_cost)) {
            best = &e;
            best_score = s;
        }
    }
    return *best;
}

/// Portfolio view of a genome.
inline Portfolio portfolio_from_genome(const Genome& genome, const CandidateSet& candidates,
                                       const Evaluation& eval) {
    Portfolio p;
    for (size_t i = 0; i < genome.size(); ++i) {
        if (genome[i]) {
            p.investment_ids.push_back(static_cast<int>(i));
        }
    }
    p.total_cost = eval.portfolio_cost;
    p.mean_unserved_mwh = eval.unserved_mwh;
    p.mean_losses_mwh = eval.losses_mwh;
    p.evaluated = true;
    (void)candidates;
    return p;
}

} // namespace gridres
