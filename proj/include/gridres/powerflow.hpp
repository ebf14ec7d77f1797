#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "gridres/grid_model.hpp"

namespace gridres {

/// System power base. With S_base = 1 MVA, MW and per-unit power coincide.
constexpr double kSBaseMva = 1.0;

struct BranchAdmittance {
    bool is_trafo = false;
    int index = 0;    // into network.lines or network.transformers
    int from_pos = 0; // positions in the energized bus list
    int to_pos = 0;
    std::complex<double> y; // series admittance, per-unit
    double ratio = 1.0;     // 1.0 for lines
};

/// Nodal admittance of the slack-connected component for a given set of
/// active lines. Transformer branches are always energized; only lines are
/// exposed to weather. Shunt-free branch model.
struct AdmittanceMatrix {
    std::vector<int> bus_idx;              // network bus indices, energized only
    std::vector<int> pos_of_bus;           // network bus index -> position, -1 if dead
    int slack_pos = -1;
    Eigen::SparseMatrix<std::complex<double>> y;
    std::vector<BranchAdmittance> branches;

    int size() const { return static_cast<int>(bus_idx.size()); }

    std::complex<double> at(int row_pos, int col_pos) const { return y.coeff(row_pos, col_pos); }
};

inline double impedance_base_ohm(double nominal_kv) {
    return nominal_kv * nominal_kv / kSBaseMva;
}

/// Builds the admittance matrix over the slack-connected component reachable
/// through `line_active` lines and all transformer branches. Inactive or
/// unreachable elements are simply absent from the matrix.
inline AdmittanceMatrix build_admittance(const Network& net,
                                         const std::vector<char>& line_active) {
    const size_t nb = net.buses.size();
    std::vector<std::vector<std::pair<int, int>>> adj(nb); // bus -> (bus, branch key)
    // branch key: line index i -> i, transformer index k -> lines.size()+k
    for (size_t i = 0; i < net.lines.size(); ++i) {
        if (!line_active[i]) {
            continue;
        }
        int a = net.bus_index(net.lines[i].from_bus);
        int b = net.bus_index(net.lines[i].to_bus);
        adj[a].push_back({b, static_cast<int>(i)});
        adj[b].push_back({a, static_cast<int>(i)});
    }
    for (size_t k = 0; k < net.transformers.size(); ++k) {
        int a = net.bus_index(net.transformers[k].from_bus);
        int b = net.bus_index(net.transformers[k].to_bus);
        int key = static_cast<int>(net.lines.size() + k);
        adj[a].push_back({b, key});
        adj[b].push_back({a, key});
    }

    AdmittanceMatrix adm;
    adm.pos_of_bus.assign(nb, -1);
    int slack_bus = net.slack_bus_index();
    std::vector<int> stack{slack_bus};
    adm.pos_of_bus[slack_bus] = 0;
    adm.bus_idx.push_back(slack_bus);
    std::vector<char> branch_seen(net.lines.size() + net.transformers.size(), 0);
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (auto [v, key] : adj[u]) {
            branch_seen[key] = 1;
            if (adm.pos_of_bus[v] < 0) {
                adm.pos_of_bus[v] = static_cast<int>(adm.bus_idx.size());
                adm.bus_idx.push_back(v);
                stack.push_back(v);
            }
        }
    }
    adm.slack_pos = 0;

    for (size_t i = 0; i < net.lines.size(); ++i) {
        if (!line_active[i] || !branch_seen[i]) {
            continue;
        }
        const Line& ln = net.lines[i];
        const Bus& from = net.buses[net.bus_index(ln.from_bus)];
        const Bus& to = net.buses[net.bus_index(ln.to_bus)];
        if (from.nominal_kv != to.nominal_kv) {
            throw Error(strf("line %d connects different voltage levels; use a transformer",
                             ln.id));
        }
        std::complex<double> z(ln.conductor.r_per_km * ln.length_km,
                               ln.conductor.x_per_km * ln.length_km);
        z /= impedance_base_ohm(from.nominal_kv);
        BranchAdmittance br;
        br.is_trafo = false;
        br.index = static_cast<int>(i);
        br.from_pos = adm.pos_of_bus[net.bus_index(ln.from_bus)];
        br.to_pos = adm.pos_of_bus[net.bus_index(ln.to_bus)];
        br.y = 1.0 / z;
        adm.branches.push_back(br);
    }
    for (size_t k = 0; k < net.transformers.size(); ++k) {
        if (!branch_seen[net.lines.size() + k]) {
            continue;
        }
        const TransformerBranch& tr = net.transformers[k];
        BranchAdmittance br;
        br.is_trafo = true;
        br.index = static_cast<int>(k);
        br.from_pos = adm.pos_of_bus[net.bus_index(tr.from_bus)];
        br.to_pos = adm.pos_of_bus[net.bus_index(tr.to_bus)];
        br.y = 1.0 / std::complex<double>(tr.r_pu, tr.x_pu);
        br.ratio = tr.ratio;
        adm.branches.push_back(br);
    }

    const int n = adm.size();
    std::vector<Eigen::Triplet<std::complex<double>>> trip;
    trip.reserve(adm.branches.size() * 4 + n);
    for (const auto& br : adm.branches) {
        double t = br.ratio;
        trip.emplace_back(br.from_pos, br.from_pos, br.y / (t * t));
        trip.emplace_back(br.to_pos, br.to_pos, br.y);
        trip.emplace_back(br.from_pos, br.to_pos, -br.y / t);
        trip.emplace_back(br.to_pos, br.from_pos, -br.y / t);
    }
    adm.y.resize(n, n);
    adm.y.setFromTriplets(trip.begin(), trip.end());
    return adm;
}

struct PowerFlowOptions {
    double tolerance = 1e-8; // max |mismatch|, per-unit
    int max_iterations = 30;
};

struct PowerFlowSolution {
    bool converged = false;
    int iterations = 0;
    double mismatch = 0.0; // final max |mismatch|, per-unit

    // Indexed by network bus position; NaN for de-energized buses.
    std::vector<double> vm_pu;
    std::vector<double> va_rad;

    // Indexed by network line position; zero for inactive/de-energized lines.
    std::vector<double> line_p_from_mw;
    std::vector<double> line_q_from_mvar;
    std::vector<double> line_p_to_mw;
    std::vector<double> line_q_to_mvar;
    std::vector<double> line_loading; // |I| / conductor max current

    double losses_mw = 0.0;
    double slack_p_mw = 0.0;
    double slack_q_mvar = 0.0;

    /// |slack + generation - load - losses| over the energized component,
    /// for conservation checks. Valid only when converged.
    double power_balance_mw(double gen_p_mw, double load_p_mw) const {
        return std::abs(slack_p_mw + gen_p_mw - load_p_mw - losses_mw);
    }
};

/// Newton-Raphson AC power flow on the energized component described by
/// `adm`. Injections are net MW/MVAr per network bus (generation positive,
/// load negative); the slack bus entry is ignored. Flat start, polar
/// mismatch formulation, full Jacobian each iteration.
inline PowerFlowSolution solve_power_flow(const Network& net, const AdmittanceMatrix& adm,
                                          const std::vector<double>& p_inj_mw,
                                          const std::vector<double>& q_inj_mvar,
                                          const PowerFlowOptions& opt = {}) {
    const int n = adm.size();
    const size_t nb = net.buses.size();
    PowerFlowSolution sol;
    sol.vm_pu.assign(nb, std::numeric_limits<double>::quiet_NaN());
    sol.va_rad.assign(nb, std::numeric_limits<double>::quiet_NaN());
    sol.line_p_from_mw.assign(net.lines.size(), 0.0);
    sol.line_q_from_mvar.assign(net.lines.size(), 0.0);
    sol.line_p_to_mw.assign(net.lines.size(), 0.0);
    sol.line_q_to_mvar.assign(net.lines.size(), 0.0);
    sol.line_loading.assign(net.lines.size(), 0.0);

    Eigen::VectorXd vm = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd va = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd p_spec(n), q_spec(n);
    for (int i = 0; i < n; ++i) {
        p_spec(i) = p_inj_mw[adm.bus_idx[i]] / kSBaseMva;
        q_spec(i) = q_inj_mvar[adm.bus_idx[i]] / kSBaseMva;
    }

    const int s = adm.slack_pos;
    const int m = n - 1; // non-slack count
    // map position -> unknown index (angle block), -1 for slack
    std::vector<int> unk(n, -1);
    {
        int k = 0;
        for (int i = 0; i < n; ++i) {
            if (i != s) {
                unk[i] = k++;
            }
        }
    }

    Eigen::VectorXd p_calc(n), q_calc(n);
    auto compute_injections = [&]() {
        p_calc.setZero();
        q_calc.setZero();
        for (int col = 0; col < adm.y.outerSize(); ++col) {
            for (Eigen::SparseMatrix<std::complex<double>>::InnerIterator it(adm.y, col); it;
                 ++it) {
                int i = static_cast<int>(it.row());
                int j = col;
                double g = it.value().real();
                double b = it.value().imag();
                double th = va(i) - va(j);
                double c = std::cos(th), sn = std::sin(th);
                p_calc(i) += vm(i) * vm(j) * (g * c + b * sn);
                q_calc(i) += vm(i) * vm(j) * (g * sn - b * c);
            }
        }
    };

    double max_mis = 0.0;
    int iter = 0;
    bool converged = false;
    Eigen::SparseMatrix<double> jac(2 * m, 2 * m);
    Eigen::VectorXd rhs(2 * m);
    std::vector<Eigen::Triplet<double>> trip;

    for (;; ++iter) {
        compute_injections();
        max_mis = 0.0;
        for (int i = 0; i < n; ++i) {
            if (i == s) {
                continue;
            }
            double dp = p_spec(i) - p_calc(i);
            double dq = q_spec(i) - q_calc(i);
            rhs(unk[i]) = dp;
            rhs(m + unk[i]) = dq;
            max_mis = std::max(max_mis, std::max(std::abs(dp), std::abs(dq)));
        }
        if (max_mis < opt.tolerance) {
            converged = true;
            break;
        }
        if (iter >= opt.max_iterations) {
            break;
        }

        trip.clear();
        for (int col = 0; col < adm.y.outerSize(); ++col) {
            for (Eigen::SparseMatrix<std::complex<double>>::InnerIterator it(adm.y, col); it;
                 ++it) {
                int i = static_cast<int>(it.row());
                int j = col;
                if (i == s) {
                    continue;
                }
                double g = it.value().real();
                double b = it.value().imag();
                int r = unk[i];
                if (i == j) {
                    // Closed-form diagonals; complete, no accumulation needed.
                    double dp_dth = -q_calc(i) - b * vm(i) * vm(i);
                    double dp_dv = p_calc(i) / vm(i) + g * vm(i);
                    double dq_dth = p_calc(i) - g * vm(i) * vm(i);
                    double dq_dv = q_calc(i) / vm(i) - b * vm(i);
                    trip.emplace_back(r, r, dp_dth);
                    trip.emplace_back(r, m + r, dp_dv);
                    trip.emplace_back(m + r, r, dq_dth);
                    trip.emplace_back(m + r, m + r, dq_dv);
                } else if (j != s) {
                    double th = va(i) - va(j);
                    double c = std::cos(th), sn = std::sin(th);
                    double dp_dth = vm(i) * vm(j) * (g * sn - b * c);
                    double dp_dv = vm(i) * (g * c + b * sn);
                    double dq_dth = -vm(i) * vm(j) * (g * c + b * sn);
                    double dq_dv = vm(i) * (g * sn - b * c);
                    trip.emplace_back(r, unk[j], dp_dth);
                    trip.emplace_back(r, m + unk[j], dp_dv);
                    trip.emplace_back(m + r, unk[j], dq_dth);
                    trip.emplace_back(m + r, m + unk[j], dq_dv);
                }
            }
        }
        jac.setFromTriplets(trip.begin(), trip.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.analyzePattern(jac);
        lu.factorize(jac);
        if (lu.info() != Eigen::Success) {
            break; // singular Jacobian: report non-convergence
        }
        Eigen::VectorXd dx = lu.solve(rhs);
        if (!dx.allFinite()) {
            break;
        }
        for (int i = 0; i < n; ++i) {
            if (i == s) {
                continue;
            }
            va(i) += dx(unk[i]);
            vm(i) += dx(m + unk[i]);
            if (vm(i) < 1e-6) {
                vm(i) = 1e-6; // keep magnitudes positive during iterations
            }
        }
    }

    sol.converged = converged;
    sol.iterations = iter;
    sol.mismatch = max_mis;
    if (!converged) {
        return sol;
    }

    for (int i = 0; i < n; ++i) {
        sol.vm_pu[adm.bus_idx[i]] = vm(i);
        sol.va_rad[adm.bus_idx[i]] = va(i);
    }

    using cd = std::complex<double>;
    auto voltage = [&](int pos) { return std::polar(vm(pos), va(pos)); };
    double losses = 0.0;
    for (const auto& br : adm.branches) {
        cd vf = voltage(br.from_pos);
        cd vt = voltage(br.to_pos);
        double t = br.ratio;
        cd i_from = br.y / (t * t) * vf - br.y / t * vt;
        cd i_to = br.y * vt - br.y / t * vf;
        cd s_from = vf * std::conj(i_from) * kSBaseMva;
        cd s_to = vt * std::conj(i_to) * kSBaseMva;
        losses += s_from.real() + s_to.real();
        if (!br.is_trafo) {
            const Line& ln = net.lines[br.index];
            sol.line_p_from_mw[br.index] = s_from.real();
            sol.line_q_from_mvar[br.index] = s_from.imag();
            sol.line_p_to_mw[br.index] = s_to.real();
            sol.line_q_to_mvar[br.index] = s_to.imag();
            double kv = net.buses[net.bus_index(ln.from_bus)].nominal_kv;
            double i_base_ka = kSBaseMva / (std::sqrt(3.0) * kv);
            double i_ka = std::max(std::abs(i_from), std::abs(i_to)) * i_base_ka;
            sol.line_loading[br.index] = i_ka / ln.conductor.max_current;
        }
    }
    sol.losses_mw = losses;

    // Slack injection from the full nodal equation at the slack position.
    {
        cd vs = voltage(s);
        cd sum = 0.0;
        for (int col = 0; col < adm.y.outerSize(); ++col) {
            for (Eigen::SparseMatrix<std::complex<double>>::InnerIterator it(adm.y, col); it;
                 ++it) {
                if (static_cast<int>(it.row()) == s) {
                    sum += it.value() * voltage(col);
                }
            }
        }
        cd s_slack = vs * std::conj(sum) * kSBaseMva;
        sol.slack_p_mw = s_slack.real();
        sol.slack_q_mvar = s_slack.imag();
    }
    return sol;
}

} // namespace gridres
