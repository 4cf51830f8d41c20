#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "robust/dfit.hpp"
#include "robust/hinf.hpp"
#include "robust/ssv.hpp"

namespace robust {

// Plant channels are ordered w = [w1; w2], z = [z1; z2]: w1/z1 close the
// uncertainty loop, w2/z2 are the performance channels.
struct RobustPerformanceSpec {
    GeneralizedPlant plant;
    BlockStructure uncertainty;  // may be empty
    int perf_w = 0;              // n_w2
    int perf_z = 0;              // n_z2
};

/// Uncertainty blocks followed by one full block z2 -> w2.
BlockStructure augment_for_performance(const RobustPerformanceSpec& spec);

/// diag(D, I) P diag(D^{-1}, I)
GeneralizedPlant scale_plant(const GeneralizedPlant& p, const DScaleSystem& d);

// Interactive decision protocol.
struct CandidateFit {
    int order = 0;
    double fit_error = 0.0;  // worst over the free entries
};

struct DEntrySeries {
    std::string name;
    std::vector<double> mag;
};

struct IterationMessage {
    int index = 0;
    std::vector<double> omega;
    std::vector<double> mu_upper;
    double peak = 0.0;
    double gamma = 0.0;
    std::vector<DEntrySeries> d_entries;
    std::vector<CandidateFit> candidates;
};

struct Decision {
    enum class Kind { Choose, Accept, Stop };
    Kind kind = Kind::Stop;
    int order = 0;

    static Decision choose(int o) { return {Kind::Choose, o}; }
    static Decision accept() { return {Kind::Accept, 0}; }
    static Decision stop() { return {Kind::Stop, 0}; }
};

class DecisionChannel {
  public:
    virtual ~DecisionChannel() = default;
    /// Blocks until the engineer answers. nullopt means the channel closed.
    virtual std::optional<Decision> decide(const IterationMessage& msg) = 0;
};

struct FixedOrder {
    int order = 0;
    int iterations = 1;
};

// orders[k-1] is the fit order after iteration k; the list length is the
// iteration budget, so the last entry is never fitted.
struct ListOrder {
    std::vector<int> orders;
};

struct AutoOrder {
    int max_order = 4;
    double error_tol = 1e-2;
    int max_iterations = 3;
};

struct InteractiveOrder {
    std::shared_ptr<DecisionChannel> channel;
    int max_order = 4;  // candidates offered are 0..max_order
};

using OrderStrategy = std::variant<FixedOrder, ListOrder, AutoOrder, InteractiveOrder>;

enum class DkPhase { Synthesizing, Analyzing, AwaitingChoice, Fitting };

struct DkOptions {
    HinfOptions hinf;
    SsvOptions ssv;
    FitOptions fit;
    bool stop_when_converged = false;
    std::function<void(DkPhase, int iteration)> on_phase;
    std::function<bool()> cancelled;  // polled between steps
};

struct IterationRecord {
    int index = 0;
    std::vector<int> d_orders;         // orders of the D(s) used in this synthesis; empty for D = I
    std::vector<double> d_fit_errors;  // matching fit errors
    SsvResult ssv;
    double peak = 0.0;
    double gamma = 0.0;
    StateSpace controller;
    bool nominal_stable = false;
};

enum class StopReason { BudgetExhausted, Converged, Accepted, Stopped, Cancelled };

struct DkResult {
    StateSpace controller;
    double peak = 0.0;
    std::size_t best_index = 0;  // into records
    std::vector<IterationRecord> records;
    bool converged = false;  // peak <= 1
    StopReason reason = StopReason::BudgetExhausted;
};

DkResult dk_iterate(const RobustPerformanceSpec& spec, const FrequencyGrid& grid, const OrderStrategy& strategy,
                    const DkOptions& opts = {});

/// Per free entry: the smallest order whose fit error is within error_tol,
/// else the order with the least error.
std::vector<int> choose_order_auto(const DScaleResponse& d, const BlockStructure& s, int max_order, double error_tol,
                                   const FitOptions& opts = {});

/// Entries held fixed by the ssv normalization are excluded.
std::vector<DScaleEntry> free_dscale_entries(const BlockStructure& s);

std::string_view to_string(StopReason r);

}  // namespace robust
