#pragma once

#include <cstdint>
#include <random>
#include <string>

#include <json.hpp>

#include "sass/error.hpp"
#include "sass/services/storage.hpp"
#include "sass/time.hpp"

namespace sass::services {

enum class ActionState { queued, executing, committed, rolled_back };

inline std::string to_string(ActionState s) {
    switch (s) {
        case ActionState::queued: return "queued";
        case ActionState::executing: return "executing";
        case ActionState::committed: return "committed";
        case ActionState::rolled_back: return "rolled_back";
    }
    return "?";
}

inline ActionState parse_action_state(const std::string& s) {
    if (s == "queued") return ActionState::queued;
    if (s == "executing") return ActionState::executing;
    if (s == "committed") return ActionState::committed;
    if (s == "rolled_back") return ActionState::rolled_back;
    throw ValidationError("unknown action state: " + s);
}

inline bool legal_transition(ActionState from, ActionState to) {
    return (from == ActionState::queued && to == ActionState::executing) ||
           (from == ActionState::executing && (to == ActionState::committed || to == ActionState::rolled_back));
}

struct ActionCommand {
    std::string action_id;
    std::string device_id;
    ojson command;
    ActionState state = ActionState::queued;
    std::string pre_version_id;  // set on entering executing
};

inline ojson to_json(const ActionCommand& a) {
    ojson j{{"action_id", a.action_id}, {"device_id", a.device_id}, {"command", a.command}, {"state", to_string(a.state)}};
    if (!a.pre_version_id.empty()) j["pre_version_id"] = a.pre_version_id;
    return j;
}

enum class ExecOutcome { ok, unreachable, fault };

/// Applies a command to a device. It may mutate `config` even when it
/// reports a fault; the queue restores the pre-action snapshot in that case.
class Actuator {
public:
    virtual ~Actuator() = default;
    virtual ExecOutcome execute(const std::string& device_id, const ojson& command, ojson& config) = 0;
};

/// Commands of the form {"set": {...}} are merged into the configuration.
class ConfigActuator : public Actuator {
public:
    ExecOutcome execute(const std::string&, const ojson& command, ojson& config) override {
        if (!command.is_object() || !command.contains("set") || !command["set"].is_object()) return ExecOutcome::fault;
        if (!config.is_object()) config = ojson::object();
        config.merge_patch(command["set"]);
        return ExecOutcome::ok;
    }
};

/// Test actuator: with probability `fault_rate` the command half-applies and
/// then fails; with probability `unreachable_rate` the device does not answer.
class FaultInjectingActuator final : public Actuator {
public:
    FaultInjectingActuator(double fault_rate, double unreachable_rate, std::uint64_t seed)
        : fault_rate_(fault_rate), unreachable_rate_(unreachable_rate), rng_(seed) {}

    ExecOutcome execute(const std::string& device_id, const ojson& command, ojson& config) override {
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
        if (u < unreachable_rate_) {
            ++unreachable_;
            return ExecOutcome::unreachable;
        }
        if (u < unreachable_rate_ + fault_rate_) {
            ++faults_;
            if (!config.is_object()) config = ojson::object();
            config["__partial"] = command;
            config["__corrupted_by"] = device_id;
            return ExecOutcome::fault;
        }
        return inner_.execute(device_id, command, config);
    }

    int faults() const { return faults_; }
    int unreachable() const { return unreachable_; }

private:
    double fault_rate_, unreachable_rate_;
    std::mt19937_64 rng_;
    ConfigActuator inner_;
    int faults_ = 0, unreachable_ = 0;
};

struct RetryPolicy {
    int max_attempts = 3;
    Duration base_backoff = milliseconds(100);

    /// Wait before attempt `n` (n >= 2): base * 2^(n-2).
    Duration backoff_before(int n) const { return base_backoff * (std::int64_t{1} << (n - 2)); }
};

}  // namespace sass::services
