#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "gridres/investments.hpp"
#include "gridres/metrics.hpp"
#include "gridres/twin.hpp"

namespace gridres {

struct NpvAssessment {
    int investment_id = 0;
    double annual_benefit = 0.0; // B_t, $/yr
    double annual_om_cost = 0.0; // C_t, $/yr
    double npv = 0.0;
    bool included = true;
    std::string exclusion_reason; // empty when included
};

/// NPV = sum_{t=0..T} (B - C_om) / (1+r)^t - capex, with the capital cost
/// booked at t = 0.
inline double npv_sum(double annual_benefit, double annual_om_cost, double capital_cost,
                      double discount_rate, int horizon_years) {
    double npv = -capital_cost;
    for (int t = 0; t <= horizon_years; ++t) {
        npv += (annual_benefit - annual_om_cost) / std::pow(1.0 + discount_rate, t);
    }
    return npv;
}

/// Exclusion rule: negative NPV and |NPV|/B_t above 1.1. A non-positive
/// benefit makes the ratio infinite, so money-losing projects with no benefit
/// are always excluded.
inline bool npv_excluded(double npv, double annual_benefit) {
    if (npv >= 0.0) {
        return false;
    }
    double ratio = annual_benefit > 0.0 ? std::abs(npv) / annual_benefit
                                        : std::numeric_limits<double>::infinity();
    return ratio > 1.1;
}

/// The one-outage-per-year assumption used to monetize undergrounding: every
/// overhead line is assumed down exactly once per year, on this date for this
/// long, in the base case; burying it prevents that outage.
struct OutageAssumption {
    TimePoint date = 0;
    double duration_h = 24.0;
};

/// Model-free assessment engine. Benefits come from two deterministic,
/// weather-free digital-twin comparisons per candidate:
///   - bury candidates: unserved energy during the assumed annual outage of
///     the target line (prevented entirely by undergrounding), plus the
///     resistive-loss reduction;
///   - upgrade candidates: the resistive-loss reduction only.
/// Loss reductions are simulated over the configured span and scaled to a
/// year; O&M is a fixed fraction of capex.
class NpvAssessor {
  public:
    NpvAssessor(const Network& net, const TimeSeries& ts, const EconParams& econ,
                const OutageAssumption& outage, const SimSpan& span)
        : net_(net), ts_(ts), econ_(econ), outage_(outage), span_(span) {
        econ.validate();
        size_t outage_steps =
            static_cast<size_t>(std::ceil(outage.duration_h / 24.0)) * kStepsPerDay;
        outage_span_ = SimSpan{outage.date, outage_steps};
        SimulationResult base = run_scenario(net_, ts_, no_weather_, 0, span_);
        baseline_losses_mwh_ = base.total_losses_mwh();
        annualize_ = kHoursPerYear / (static_cast<double>(span_.n_steps) * 0.25);
    }

    NpvAssessment assess(const Investment& inv) const {
        NpvAssessment a;
        a.investment_id = inv.id;

        double benefit = 0.0;
        if (inv.kind == InvestmentKind::Bury) {
            std::vector<ForcedOutage> forced{{inv.line_id, outage_.date, outage_.duration_h}};
            SimulationResult with_outage =
                run_scenario(net_, ts_, no_weather_, 0, outage_span_, forced);
            benefit += with_outage.total_unserved_mwh() * 1000.0 * econ_.value_of_lost_load;
        }
        Network invested = apply_investments(net_, std::span(&inv, 1));
        SimulationResult upgraded = run_scenario(invested, ts_, no_weather_, 0, span_);
        double delta_loss_mwh = baseline_losses_mwh_ - upgraded.total_losses_mwh();
        benefit += delta_loss_mwh * 1000.0 * econ_.cost_per_kwh * annualize_;

        a.annual_benefit = benefit;
        a.annual_om_cost = econ_.om_fraction * inv.capital_cost;
        a.npv = npv_sum(a.annual_benefit, a.annual_om_cost, inv.capital_cost,
                        econ_.discount_rate, econ_.npv_horizon_years);
        if (npv_excluded(a.npv, a.annual_benefit)) {
            a.included = false;
            a.exclusion_reason = "negative NPV with |NPV|/B_t > 1.1";
        }
        return a;
    }

    double baseline_losses_mwh() const { return baseline_losses_mwh_; }

  private:
    const Network& net_;
    const TimeSeries& ts_;
    EconParams econ_;
    OutageAssumption outage_;
    SimSpan span_;
    SimSpan outage_span_;
    WeatherConfig no_weather_{}; // base rate 0: weather disabled
    double baseline_losses_mwh_ = 0.0;
    double annualize_ = 1.0;
};

struct RankResult {
    Portfolio portfolio;
    std::vector<NpvAssessment> assessments; // annotated with budget cuts
    std::vector<int> ranked_ids;            // selected ids in ranking order
};

/// Ranks by NPV descending (ties to the lower id) and greedily selects
/// non-excluded candidates while they fit the budget. Unaffordable items are
/// skipped and scanning continues down the ranking.
inline RankResult rank_and_select(std::vector<NpvAssessment> assessments,
                                  const CandidateSet& candidates, double budget) {
    std::vector<int> order(assessments.size());
    for (size_t i = 0; i < order.size(); ++i) {
        order[i] = static_cast<int>(i);
    }
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (assessments[a].npv != assessments[b].npv) {
            return assessments[a].npv > assessments[b].npv;
        }
        return assessments[a].investment_id < assessments[b].investment_id;
    });

    RankResult out;
    double spent = 0.0;
    for (int idx : order) {
        NpvAssessment& a = assessments[idx];
        if (!a.included) {
            continue;
        }
        double cost = candidates.by_id(a.investment_id).capital_cost;
        if (spent + cost > budget) {
            a.included = false;
            a.exclusion_reason = "over budget";
            continue;
        }
        spent += cost;
        out.ranked_ids.push_back(a.investment_id);
    }
    out.portfolio.investment_ids = out.ranked_ids;
    std::sort(out.portfolio.investment_ids.begin(), out.portfolio.investment_ids.end());
    out.portfolio.total_cost = spent;
    out.assessments = std::move(assessments);
    return out;
}

/// First-in-first-out crew scheduling: projects start in ranking order, each
/// on the earliest day where it fits the technician pool together with every
/// still-running predecessor, and never before its queue predecessor starts.
/// Projects run contiguously once started.
inline CrewSchedule fifo_schedule(const std::vector<Investment>& ranked, int technician_pool) {
    CrewSchedule sched;
    std::vector<int> usage; // day (1-indexed) -> crew in use
    int prev_start = 1;
    for (const auto& inv : ranked) {
        if (inv.technicians_required > technician_pool) {
            throw InfeasibleError(strf(
                "investment %d needs %d technicians but the pool has only %d", inv.id,
                inv.technicians_required, technician_pool));
        }
        int day = prev_start;
        for (;;) {
            bool fits = true;
            for (int d = day; d < day + inv.work_days; ++d) {
                if (d < static_cast<int>(usage.size()) &&
                    usage[d] + inv.technicians_required > technician_pool) {
                    fits = false;
                    break;
                }
            }
            if (fits) {
                break;
            }
            ++day;
        }
        ScheduledProject p;
        p.investment_id = inv.id;
        p.start_day = day;
        p.completion_day = day + inv.work_days - 1;
        p.technicians = inv.technicians_required;
        if (static_cast<int>(usage.size()) <= p.completion_day) {
            usage.resize(static_cast<size_t>(p.completion_day) + 1, 0);
        }
        for (int d = day; d <= p.completion_day; ++d) {
            p.active_days.push_back(d);
            usage[d] += inv.technicians_required;
        }
        sched.makespan_days = std::max(sched.makespan_days, p.completion_day);
        prev_start = day;
        sched.projects.push_back(std::move(p));
    }
    return sched;
}

} // namespace gridres
