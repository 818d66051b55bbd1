#pragma once

#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sass/error.hpp"
#include "sass/services/actions.hpp"
#include "sass/services/clock.hpp"
#include "sass/services/device.hpp"
#include "sass/services/storage.hpp"
#include "sass/services/token.hpp"

namespace sass::services {

struct DeviceEntry {
    DeviceRecord record;
    ojson config = ojson::object();
    std::string current_version;
};

/// Everything the activity log determines. Live operations and replay both
/// go through apply(), so a log replayed from empty reproduces this exactly.
struct RegistryState {
    std::map<std::string, DeviceEntry> devices;
    std::map<std::string, VersionSnapshot> versions;
    std::map<std::string, ActionCommand> actions;
    std::map<std::string, std::deque<std::string>> queues;
    std::size_t applied = 0;

    DeviceEntry& device(const std::string& id) {
        auto it = devices.find(id);
        if (it == devices.end()) throw IntegrityError("log references unknown device " + id);
        return it->second;
    }

    void add_version(const std::string& vid, const std::string& dev, const ojson& config, Timestamp at) {
        if (vid.empty() || versions.count(vid)) throw IntegrityError("duplicate or empty version id " + vid);
        versions[vid] = VersionSnapshot{vid, dev, config, at};
        device(dev).current_version = vid;
    }

    void apply(const ActivityLogEntry& e) {
        const ojson& d = e.details;
        try {
            if (e.activity_type == "register") apply_register(e);
            else if (e.activity_type == "update") apply_update(e);
            else if (e.activity_type == "rollback") {
                auto& dev = device(d.at("device_id").get<std::string>());
                const auto target = d.at("new_version_id").get<std::string>();
                auto it = versions.find(target);
                if (it == versions.end() || it->second.device_id != dev.record.device_id)
                    throw IntegrityError("rollback to unknown version " + target);
                dev.config = it->second.config;
                dev.current_version = target;
            } else if (e.activity_type == "action") apply_action(e);
            else if (e.activity_type != "data_access") throw IntegrityError("unknown activity type " + e.activity_type);
        } catch (const nlohmann::json::exception& ex) {
            throw IntegrityError(std::string("malformed log details: ") + ex.what());
        }
        ++applied;
    }

    ojson to_json() const {
        ojson j;
        ojson devs = ojson::object();
        for (const auto& [id, d] : devices)
            devs[id] = {{"record", services::to_json(d.record)}, {"config", d.config}, {"current_version", d.current_version}};
        ojson vers = ojson::object();
        for (const auto& [id, v] : versions) vers[id] = services::to_json(v);
        ojson acts = ojson::object();
        for (const auto& [id, a] : actions) acts[id] = services::to_json(a);
        ojson qs = ojson::object();
        for (const auto& [id, q] : queues)
            if (!q.empty()) qs[id] = std::vector<std::string>(q.begin(), q.end());
        j["devices"] = devs;
        j["versions"] = vers;
        j["actions"] = acts;
        j["queues"] = qs;
        j["log_length"] = applied;
        return j;
    }

    static RegistryState from_json(const ojson& j) {
        RegistryState s;
        try {
            for (const auto& [id, d] : j.at("devices").items())
                s.devices[id] = DeviceEntry{device_from_json(d.at("record")), d.at("config"),
                                            d.at("current_version").get<std::string>()};
            for (const auto& [id, v] : j.at("versions").items())
                s.versions[id] = VersionSnapshot{id, v.at("device_id").get<std::string>(), v.at("config"),
                                                 parse_iso(v.at("created_at").get<std::string>())};
            for (const auto& [id, a] : j.at("actions").items()) {
                ActionCommand c{id, a.at("device_id").get<std::string>(), a.at("command"),
                                parse_action_state(a.at("state").get<std::string>()), ""};
                if (a.contains("pre_version_id")) c.pre_version_id = a["pre_version_id"].get<std::string>();
                s.actions[id] = c;
            }
            for (const auto& [id, q] : j.at("queues").items())
                for (const auto& a : q) s.queues[id].push_back(a.get<std::string>());
            s.applied = j.at("log_length").get<std::size_t>();
        } catch (const nlohmann::json::exception& ex) {
            throw IntegrityError(std::string("malformed registry state: ") + ex.what());
        } catch (const ValidationError& ex) {
            throw IntegrityError(std::string("malformed registry state: ") + ex.what());
        }
        return s;
    }

private:
    void apply_register(const ActivityLogEntry& e) {
        const ojson& d = e.details;
        DeviceRecord rec = device_from_json(d.at("record"));
        if (devices.count(rec.device_id)) throw IntegrityError("device registered twice: " + rec.device_id);
        devices[rec.device_id] = DeviceEntry{rec, d.at("config"), ""};
        add_version(d.at("version_id").get<std::string>(), rec.device_id, d.at("config"), e.timestamp);
    }

    void apply_update(const ActivityLogEntry& e) {
        const ojson& d = e.details;
        const auto id = d.at("device_id").get<std::string>();
        auto& dev = device(id);
        if (d.contains("status")) {
            dev.record.status = parse_status(d["status"].get<std::string>());
            dev.record.last_sync_timestamp = parse_iso(d.at("last_sync_timestamp").get<std::string>());
        } else {
            dev.config = d.at("config");
            add_version(d.at("version_id").get<std::string>(), id, dev.config, e.timestamp);
        }
    }

    void apply_action(const ActivityLogEntry& e) {
        const ojson& d = e.details;
        const auto aid = d.at("action_id").get<std::string>();
        const auto dev_id = d.at("device_id").get<std::string>();
        const auto to = parse_action_state(d.at("state").get<std::string>());
        auto& dev = device(dev_id);
        if (to == ActionState::queued) {
            if (actions.count(aid)) throw IntegrityError("action queued twice: " + aid);
            actions[aid] = ActionCommand{aid, dev_id, d.at("command"), ActionState::queued, ""};
            queues[dev_id].push_back(aid);
            return;
        }
        auto it = actions.find(aid);
        if (it == actions.end()) throw IntegrityError("transition of unknown action " + aid);
        auto& a = it->second;
        if (a.device_id != dev_id || !legal_transition(a.state, to))
            throw IntegrityError("illegal action transition " + to_string(a.state) + " -> " + to_string(to));
        auto& q = queues[dev_id];
        if (q.empty() || q.front() != aid) throw IntegrityError("action " + aid + " is not at the head of its queue");
        a.state = to;
        if (to == ActionState::executing) {
            a.pre_version_id = d.at("version_id").get<std::string>();
            add_version(a.pre_version_id, dev_id, dev.config, e.timestamp);
        } else if (to == ActionState::committed) {
            dev.config = d.at("config");
            add_version(d.at("version_id").get<std::string>(), dev_id, dev.config, e.timestamp);
            q.pop_front();
        } else {
            dev.config = versions.at(a.pre_version_id).config;
            dev.current_version = a.pre_version_id;
            q.pop_front();
        }
    }
};

inline RegistryState replay(const std::vector<ojson>& log) {
    RegistryState s;
    for (const auto& j : log) s.apply(entry_from_json(j));
    return s;
}

struct RegistryOptions {
    std::string key;
    Duration device_token_ttl = std::chrono::hours(24);
    RetryPolicy retry;
    std::size_t checkpoint_every = 64;
};

class Registry {
public:
    static constexpr const char* kLogStream = "activity";

    /// Restores from the store's state checkpoint plus the log tail, if any.
    Registry(Storage& storage, Clock& clock, IdGenerator& ids, RegistryOptions opts)
        : storage_(storage), clock_(clock), ids_(ids), opts_(std::move(opts)), actuator_(&default_actuator_) {
        if (opts_.key.empty()) throw ConfigError("registry requires a token key");
        const auto log = storage_.read(kLogStream);
        if (auto st = storage_.get_state()) state_ = RegistryState::from_json(*st);
        if (state_.applied > log.size()) throw IntegrityError("state checkpoint is ahead of the activity log");
        for (std::size_t i = state_.applied; i < log.size(); ++i) state_.apply(entry_from_json(log[i]));
    }

    void set_actuator(Actuator* a) {
        std::lock_guard lock(mu_);
        actuator_ = a ? a : &default_actuator_;
    }

    const RegistryOptions& options() const { return opts_; }
    Clock& clock() { return clock_; }

    std::string issue(const std::string& subject, const std::set<Role>& roles, Duration ttl) const {
        return issue_token(subject, roles, ttl, opts_.key, clock_.now());
    }

    Claims authenticate(const std::string& token, std::initializer_list<Role> any_of) const {
        Claims c = validate_token(token, opts_.key, clock_.now());
        for (Role r : any_of)
            if (c.has(r)) return c;
        throw AuthError("token lacks the required role");
    }

    /// Body is a device record; an optional "config" member seeds the
    /// initial snapshot. Returns the device's bearer token.
    std::string register_device(const ojson& body, const std::string& admin_token) {
        authenticate(admin_token, {Role::admin});
        DeviceRecord rec = device_from_json(body);
        ojson config = body.contains("config") ? body["config"] : ojson::object();
        std::lock_guard lock(mu_);
        if (state_.devices.count(rec.device_id)) throw ConflictError("device already registered: " + rec.device_id);
        const Timestamp now = truncate_iso(clock_.now());
        rec.registration_timestamp = now;
        if (!body.contains("last_sync_timestamp")) rec.last_sync_timestamp = now;
        commit({now, "register", {{"device_id", rec.device_id}, {"record", to_json(rec)}, {"version_id", ids_.uuid4()},
                                  {"config", config}}});
        return issue_token(rec.device_id, {Role::device}, opts_.device_token_ttl, opts_.key, clock_.now());
    }

    ActivityLogEntry update_status(const std::string& device_token, const std::string& device_id, DeviceStatus status,
                                   std::optional<Timestamp> sync_ts = std::nullopt) {
        const Claims c = authenticate(device_token, {Role::device});
        if (c.subject != device_id) throw AuthError("token subject does not match device " + device_id);
        std::lock_guard lock(mu_);
        require_device(device_id);
        const Timestamp now = truncate_iso(clock_.now());
        ActivityLogEntry e{now, "update",
                           {{"device_id", device_id}, {"status", to_string(status)},
                            {"last_sync_timestamp", format_iso(truncate_iso(sync_ts.value_or(now)))}}};
        commit(e);
        return e;
    }

    /// Replaces the device configuration and records it as a new version.
    VersionSnapshot snapshot_config(const std::string& token, const std::string& device_id, const ojson& config) {
        const Claims c = authenticate(token, {Role::admin, Role::device});
        if (!c.has(Role::admin) && c.subject != device_id) throw AuthError("token subject does not match device " + device_id);
        std::lock_guard lock(mu_);
        require_device(device_id);
        const Timestamp now = truncate_iso(clock_.now());
        const std::string vid = ids_.uuid4();
        commit({now, "update", {{"device_id", device_id}, {"version_id", vid}, {"config", config}}});
        return state_.versions.at(vid);
    }

    ActivityLogEntry rollback(const std::string& admin_token, const std::string& device_id, const std::string& version_id) {
        authenticate(admin_token, {Role::admin});
        std::lock_guard lock(mu_);
        const auto& dev = require_device(device_id);
        auto it = state_.versions.find(version_id);
        if (it == state_.versions.end() || it->second.device_id != device_id)
            throw NotFoundError("no version " + version_id + " for device " + device_id);
        ActivityLogEntry e{truncate_iso(clock_.now()), "rollback",
                           {{"device_id", device_id}, {"old_version_id", dev.current_version}, {"new_version_id", version_id}}};
        if (dev.current_version == version_id) e.details["noop"] = true;
        commit(e);
        return e;
    }

    std::string enqueue_action(const std::string& app_token, const std::string& device_id, const ojson& command) {
        authenticate(app_token, {Role::app, Role::admin});
        std::lock_guard lock(mu_);
        const auto& dev = require_device(device_id);
        if (dev.record.type != DeviceType::actuator) throw ValidationError("device " + device_id + " is not an actuator");
        const std::string aid = ids_.uuid4();
        commit({truncate_iso(clock_.now()), "action",
                {{"action_id", aid}, {"device_id", device_id}, {"state", "queued"}, {"command", command}}});
        return aid;
    }

    /// Advances every per-device queue as far as the clock allows. Returns the
    /// number of state transitions made.
    std::size_t process_actions() {
        std::lock_guard lock(mu_);
        std::size_t transitions = 0;
        std::vector<std::string> devs;
        for (const auto& [id, q] : state_.queues)
            if (!q.empty()) devs.push_back(id);
        for (const auto& dev_id : devs) transitions += drain(dev_id);
        return transitions;
    }

    /// Earliest pending retry, if any action is waiting on backoff.
    std::optional<Timestamp> next_retry() const {
        std::lock_guard lock(mu_);
        std::optional<Timestamp> best;
        for (const auto& [id, q] : state_.queues) {
            if (q.empty()) continue;
            auto it = retry_.find(q.front());
            if (it != retry_.end() && (!best || it->second.next < *best)) best = it->second.next;
        }
        return best;
    }

    std::size_t pending_actions() const {
        std::lock_guard lock(mu_);
        std::size_t n = 0;
        for (const auto& [id, q] : state_.queues) n += q.size();
        return n;
    }

    /// Logged without changing registry state; used for capture tagging.
    void log_data_access(const ojson& details) {
        std::lock_guard lock(mu_);
        commit({truncate_iso(clock_.now()), "data_access", details});
    }

    DeviceRecord device(const std::string& id) const {
        std::lock_guard lock(mu_);
        return require_device(id).record;
    }
    ojson config(const std::string& id) const {
        std::lock_guard lock(mu_);
        return require_device(id).config;
    }
    std::string current_version(const std::string& id) const {
        std::lock_guard lock(mu_);
        return require_device(id).current_version;
    }
    VersionSnapshot version(const std::string& vid) const {
        std::lock_guard lock(mu_);
        auto it = state_.versions.find(vid);
        if (it == state_.versions.end()) throw NotFoundError("no version " + vid);
        return it->second;
    }
    ActionCommand action(const std::string& aid) const {
        std::lock_guard lock(mu_);
        auto it = state_.actions.find(aid);
        if (it == state_.actions.end()) throw NotFoundError("no action " + aid);
        return it->second;
    }
    std::vector<DeviceRecord> devices() const {
        std::lock_guard lock(mu_);
        std::vector<DeviceRecord> out;
        for (const auto& [id, d] : state_.devices) out.push_back(d.record);
        return out;
    }
    std::vector<ActivityLogEntry> log() const {
        std::vector<ActivityLogEntry> out;
        for (const auto& j : storage_.read(kLogStream)) out.push_back(entry_from_json(j));
        return out;
    }
    ojson state_json() const {
        std::lock_guard lock(mu_);
        return state_.to_json();
    }
    void checkpoint() {
        std::lock_guard lock(mu_);
        storage_.put_state(state_.to_json());
        since_checkpoint_ = 0;
    }

private:
    struct RetryState {
        int attempts = 0;
        Timestamp next{};
    };

    const DeviceEntry& require_device(const std::string& id) const {
        auto it = state_.devices.find(id);
        if (it == state_.devices.end()) throw NotFoundError("unknown device " + id);
        return it->second;
    }

    void commit(const ActivityLogEntry& e) {
        storage_.append(kLogStream, to_json(e));
        state_.apply(e);
        if (opts_.checkpoint_every > 0 && ++since_checkpoint_ >= opts_.checkpoint_every) {
            storage_.put_state(state_.to_json());
            since_checkpoint_ = 0;
        }
    }

    void finish(const ActionCommand& a, const char* state, ojson extra) {
        ojson d{{"action_id", a.action_id}, {"device_id", a.device_id}, {"state", state}};
        for (auto& [k, v] : extra.items()) d[k] = v;
        commit({truncate_iso(clock_.now()), "action", d});
        retry_.erase(a.action_id);
    }

    std::size_t drain(const std::string& dev_id) {
        std::size_t n = 0;
        const Timestamp now = clock_.now();
        while (true) {
            auto& q = state_.queues[dev_id];
            if (q.empty()) break;
            const ActionCommand a = state_.actions.at(q.front());
            if (a.state == ActionState::queued) {
                commit({truncate_iso(now), "action",
                        {{"action_id", a.action_id}, {"device_id", dev_id}, {"state", "executing"}, {"version_id", ids_.uuid4()}}});
                retry_[a.action_id] = RetryState{0, now};
                ++n;
                continue;
            }
            auto& r = retry_.try_emplace(a.action_id, RetryState{0, now}).first->second;
            if (now < r.next) break;
            ++r.attempts;
            const int attempts = r.attempts;
            const auto& dev = state_.devices.at(dev_id);
            ojson cfg = dev.config;
            const ExecOutcome out = dev.record.status == DeviceStatus::offline
                                        ? ExecOutcome::unreachable
                                        : actuator_->execute(dev_id, a.command, cfg);
            if (out == ExecOutcome::ok) {
                finish(a, "committed", {{"version_id", ids_.uuid4()}, {"config", cfg}, {"attempts", attempts}});
            } else if (out == ExecOutcome::fault) {
                finish(a, "rolled_back", {{"restored_version_id", a.pre_version_id}, {"reason", "fault"}, {"attempts", attempts}});
            } else if (attempts >= opts_.retry.max_attempts) {
                finish(a, "rolled_back",
                       {{"restored_version_id", a.pre_version_id}, {"reason", "unreachable"}, {"attempts", attempts}});
            } else {
                r.next = now + opts_.retry.backoff_before(attempts + 1);
                break;
            }
            ++n;
        }
        return n;
    }

    Storage& storage_;
    Clock& clock_;
    IdGenerator& ids_;
    RegistryOptions opts_;
    ConfigActuator default_actuator_;
    Actuator* actuator_;
    RegistryState state_;
    std::map<std::string, RetryState> retry_;
    std::size_t since_checkpoint_ = 0;
    mutable std::mutex mu_;
};

}  // namespace sass::services
