#include "robust/dkiter.hpp"

#include <algorithm>
#include <map>

namespace robust {

namespace {

void require(bool ok, ErrorKind kind, const std::string& msg) {
    if (!ok) throw Error(kind, msg);
}

// Rethrows with the iteration index attached.
template <class F>
auto at_iteration(int k, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        throw Error(e.kind(), "iteration " + std::to_string(k) + ": " + e.detail(), k);
    }
}

void validate(const RobustPerformanceSpec& spec) {
    const auto& p = spec.plant;
    const int nw1 = p.n_w - spec.perf_w;
    const int nz1 = p.n_z - spec.perf_z;
    require(spec.perf_w >= 1 && spec.perf_z >= 1, ErrorKind::DimensionMismatch, "performance channels must be nonempty");
    require(nw1 >= 0 && nz1 >= 0, ErrorKind::DimensionMismatch, "performance channels exceed the plant's w/z channels");
    if (spec.uncertainty.blocks.empty()) {
        require(nw1 == 0 && nz1 == 0, ErrorKind::DimensionMismatch, "uncertainty channels present without blocks");
        return;
    }
    require(spec.uncertainty.w_dim() == nw1, ErrorKind::DimensionMismatch,
            "uncertainty structure consumes " + std::to_string(spec.uncertainty.w_dim()) + " w channels, plant has " +
                std::to_string(nw1));
    require(spec.uncertainty.z_dim() == nz1, ErrorKind::DimensionMismatch,
            "uncertainty structure consumes " + std::to_string(spec.uncertainty.z_dim()) + " z channels, plant has " +
                std::to_string(nz1));
}

std::vector<int> uniform(const BlockStructure& s, int order) {
    return std::vector<int>(free_dscale_entries(s).size(), order);
}

std::vector<MagnitudeData> free_magnitudes(const DScaleResponse& d, const BlockStructure& s) {
    auto all = dscale_magnitudes(d, s);
    if (const auto fixed = normalized_entry(s)) all.erase(all.begin() + static_cast<std::ptrdiff_t>(*fixed));
    return all;
}

struct NextStep {
    bool stop = false;
    StopReason reason = StopReason::BudgetExhausted;
    std::vector<int> orders;
};

}  // namespace

std::string_view to_string(StopReason r) {
    switch (r) {
        case StopReason::BudgetExhausted: return "budget_exhausted";
        case StopReason::Converged: return "converged";
        case StopReason::Accepted: return "accepted";
        case StopReason::Stopped: return "stopped";
        case StopReason::Cancelled: return "cancelled";
    }
    return "unknown";
}

BlockStructure augment_for_performance(const RobustPerformanceSpec& spec) {
    validate(spec);
    std::vector<UncertaintyBlock> blocks = spec.uncertainty.blocks;
    blocks.push_back(UncertaintyBlock::full(spec.perf_z, spec.perf_w));
    return BlockStructure(std::move(blocks));
}

GeneralizedPlant scale_plant(const GeneralizedPlant& p, const DScaleSystem& d) {
    require(d.system.outputs() == p.n_z && d.system.inputs() == p.n_z, ErrorKind::DimensionMismatch,
            "D(s) must be n_z x n_z");
    require(d.inverse.outputs() == p.n_w && d.inverse.inputs() == p.n_w, ErrorKind::DimensionMismatch,
            "D^{-1}(s) must be n_w x n_w");
    const StateSpace right = append(d.inverse, StateSpace::gain(Matrix(Matrix::Identity(p.n_u, p.n_u))));
    const StateSpace left = append(d.system, StateSpace::gain(Matrix(Matrix::Identity(p.n_y, p.n_y))));
    return GeneralizedPlant(series(series(right, p.ss), left), p.n_w, p.n_u, p.n_z, p.n_y);
}

std::vector<DScaleEntry> free_dscale_entries(const BlockStructure& s) {
    auto all = dscale_entries(s);
    if (const auto fixed = normalized_entry(s)) all.erase(all.begin() + static_cast<std::ptrdiff_t>(*fixed));
    return all;
}

std::vector<int> choose_order_auto(const DScaleResponse& d, const BlockStructure& s, int max_order, double error_tol,
                                   const FitOptions& opts) {
    require(max_order >= 0, ErrorKind::InvalidArgument, "max_order must be nonnegative");
    std::vector<int> out;
    for (const auto& data : free_magnitudes(d, s)) {
        int best = 0;
        double best_err = INFINITY;
        int chosen = -1;
        for (int o = 0; o <= max_order; ++o) {
            const double e = fit_minphase_magnitude(data, o, FitMode::Approximate, opts).fit_error;
            if (e <= error_tol) {
                chosen = o;
                break;
            }
            if (e < best_err) {
                best_err = e;
                best = o;
            }
        }
        out.push_back(chosen >= 0 ? chosen : best);
    }
    return out;
}

DkResult dk_iterate(const RobustPerformanceSpec& spec, const FrequencyGrid& grid, const OrderStrategy& strategy,
                    const DkOptions& opts) {
    const BlockStructure structure = augment_for_performance(spec);
    require(grid.size() >= 1, ErrorKind::InvalidArgument, "empty frequency grid");
    std::visit(
        [](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, FixedOrder>) {
                require(s.order >= 0 && s.iterations >= 1, ErrorKind::InvalidArgument,
                        "fixed strategy needs order >= 0 and iterations >= 1");
            } else if constexpr (std::is_same_v<T, ListOrder>) {
                require(!s.orders.empty(), ErrorKind::InvalidArgument, "order list is empty");
                for (int o : s.orders) require(o >= 0, ErrorKind::InvalidArgument, "orders must be nonnegative");
            } else if constexpr (std::is_same_v<T, AutoOrder>) {
                require(s.max_order >= 0 && s.max_iterations >= 1, ErrorKind::InvalidArgument,
                        "auto strategy needs max_order >= 0 and max_iterations >= 1");
            } else {
                require(s.channel != nullptr, ErrorKind::InvalidArgument, "interactive strategy needs a channel");
                require(s.max_order >= 0, ErrorKind::InvalidArgument, "max_order must be nonnegative");
            }
        },
        strategy);

    auto phase = [&](DkPhase ph, int k) {
        if (opts.on_phase) opts.on_phase(ph, k);
    };
    auto cancelled = [&] { return opts.cancelled && opts.cancelled(); };

    DkResult result;
    DScaleSystem d = DScaleSystem::identity(structure);
    std::vector<int> d_orders;
    std::vector<double> d_errors;
    for (int k = 1;; ++k) {
        if (cancelled()) {
            result.reason = StopReason::Cancelled;
            break;
        }
        phase(DkPhase::Synthesizing, k);
        const auto syn = at_iteration(k, [&] { return hinf_syn_lmi(scale_plant(spec.plant, d), opts.hinf); });
        if (cancelled()) {
            result.reason = StopReason::Cancelled;
            break;
        }
        phase(DkPhase::Analyzing, k);
        const StateSpace clp = at_iteration(k, [&] { return lft_lower(spec.plant, syn.controller); });
        IterationRecord rec;
        rec.index = k;
        rec.d_orders = d_orders;
        rec.d_fit_errors = d_errors;
        rec.gamma = syn.gamma;
        rec.controller = syn.controller;
        rec.nominal_stable = is_stable(clp);
        rec.ssv = at_iteration(k, [&] { return ssv_upper(freq_response(clp, grid), structure, opts.ssv); });
        rec.peak = rec.ssv.peak;
        result.records.push_back(rec);
        const IterationRecord& last = result.records.back();

        if (opts.stop_when_converged && last.peak <= 1.0) {
            result.reason = StopReason::Converged;
            break;
        }

        // Decide the fit orders for the next iteration.
        NextStep next;
        std::map<int, DScaleSystem> candidate_fits;
        std::visit(
            [&](const auto& s) {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, FixedOrder>) {
                    if (k >= s.iterations) next.stop = true;
                    else next.orders = uniform(structure, s.order);
                } else if constexpr (std::is_same_v<T, ListOrder>) {
                    if (k >= static_cast<int>(s.orders.size())) next.stop = true;
                    else next.orders = uniform(structure, s.orders[static_cast<std::size_t>(k - 1)]);
                } else if constexpr (std::is_same_v<T, AutoOrder>) {
                    if (k >= s.max_iterations) {
                        next.stop = true;
                    } else {
                        next.orders = at_iteration(k, [&] {
                            return choose_order_auto(last.ssv.d_scales, structure, s.max_order, s.error_tol, opts.fit);
                        });
                    }
                } else {
                    IterationMessage msg;
                    msg.index = k;
                    msg.omega = grid.omegas();
                    msg.mu_upper = last.ssv.mu_upper;
                    msg.peak = last.peak;
                    msg.gamma = last.gamma;
                    const auto names = free_dscale_entries(structure);
                    const auto mags = free_magnitudes(last.ssv.d_scales, structure);
                    for (std::size_t e = 0; e < names.size(); ++e) msg.d_entries.push_back({names[e].name, mags[e].mags});
                    phase(DkPhase::Fitting, k);
                    for (int o = 0; o <= s.max_order; ++o) {
                        auto fit = at_iteration(
                            k, [&] { return fit_dscale(last.ssv.d_scales, structure, uniform(structure, o), opts.fit); });
                        double worst = 0.0;
                        for (const auto& w : fit.entries) worst = std::max(worst, w.fit_error);
                        msg.candidates.push_back({o, worst});
                        candidate_fits.emplace(o, std::move(fit));
                    }
                    phase(DkPhase::AwaitingChoice, k);
                    const auto answer = s.channel->decide(msg);
                    if (!answer || answer->kind == Decision::Kind::Stop) {
                        next.stop = true;
                        next.reason = StopReason::Stopped;
                    } else if (answer->kind == Decision::Kind::Accept) {
                        next.stop = true;
                        next.reason = StopReason::Accepted;
                    } else {
                        require(answer->order >= 0, ErrorKind::InvalidArgument, "chosen order must be nonnegative");
                        next.orders = uniform(structure, answer->order);
                    }
                }
            },
            strategy);
        if (next.stop) {
            result.reason = next.reason;
            break;
        }
        if (cancelled()) {
            result.reason = StopReason::Cancelled;
            break;
        }
        phase(DkPhase::Fitting, k);
        const bool same = !next.orders.empty() && std::all_of(next.orders.begin(), next.orders.end(),
                                                               [&](int o) { return o == next.orders.front(); });
        auto cached = same ? candidate_fits.find(next.orders.front()) : candidate_fits.end();
        if (cached != candidate_fits.end()) {
            d = std::move(cached->second);
        } else {
            d = at_iteration(k, [&] { return fit_dscale(last.ssv.d_scales, structure, next.orders, opts.fit); });
        }
        d_orders = next.orders;
        d_errors.clear();
        const auto fixed = normalized_entry(structure);
        for (std::size_t e = 0; e < d.entries.size(); ++e) {
            if (!fixed || e != *fixed) d_errors.push_back(d.entries[e].fit_error);
        }
    }

    if (result.records.empty()) throw Error(ErrorKind::InvalidArgument, "run cancelled before the first iteration");
    std::size_t best = 0;
    for (std::size_t i = 1; i < result.records.size(); ++i) {
        if (result.records[i].peak < result.records[best].peak) best = i;
    }
    result.best_index = best;
    result.controller = result.records[best].controller;
    result.peak = result.records[best].peak;
    result.converged = result.peak <= 1.0;
    return result;
}

}  // namespace robust
