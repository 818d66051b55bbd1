#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <string>
#include <vector>

#include "sass/error.hpp"
#include "sass/services/capture.hpp"
#include "sass/services/registry.hpp"

namespace sass::services {

struct Response {
    int status = 200;
    ojson body;
};

using Headers = std::map<std::string, std::string>;

namespace detail {

inline std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : path) {
        if (c == '/') {
            if (!cur.empty()) parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) parts.push_back(cur);
    return parts;
}

inline std::map<std::string, std::string> parse_query(const std::string& q) {
    std::map<std::string, std::string> out;
    std::size_t i = 0;
    while (i < q.size()) {
        std::size_t amp = q.find('&', i);
        if (amp == std::string::npos) amp = q.size();
        const std::string kv = q.substr(i, amp - i);
        const auto eq = kv.find('=');
        if (!kv.empty()) out[kv.substr(0, eq)] = eq == std::string::npos ? "" : kv.substr(eq + 1);
        i = amp + 1;
    }
    return out;
}

inline std::string bearer(const Headers& h) {
    for (const auto& [k, v] : h) {
        std::string lk = k;
        std::transform(lk.begin(), lk.end(), lk.begin(), [](unsigned char c) { return std::tolower(c); });
        if (lk == "authorization" && v.rfind("Bearer ", 0) == 0) return v.substr(7);
    }
    throw AuthError("missing bearer token");
}

inline std::int64_t int_param(const std::map<std::string, std::string>& q, const std::string& k, std::int64_t dflt) {
    auto it = q.find(k);
    if (it == q.end()) return dflt;
    try {
        std::size_t used = 0;
        const auto v = std::stoll(it->second, &used);
        if (used != it->second.size()) throw ValidationError("bad integer");
        return v;
    } catch (const std::exception&) {
        throw ValidationError("query parameter " + k + " must be an integer");
    }
}

}  // namespace detail

/// Transport-independent request handler. Paths:
///   POST /tokens                      admin: issue {subject, roles, ttl_s}
///   GET  /tokens                      introspect the presented token
///   POST /devices                     admin: register, returns device token
///   GET  /devices, /devices/{id}
///   POST /devices/{id}/status         device: {status, last_sync_timestamp?}
///   POST /devices/{id}/config         admin or device: new config version
///   POST /devices/{id}/rollback       admin: {version_id}
///   POST /actions                     app: {device_id, command}
///   GET  /actions/{id}
///   POST /capture                     device: {samples: [...]}
///   GET  /capture?device_id=&from_ns=&to_ns=
///   GET  /log                         admin
class ServiceApi {
public:
    ServiceApi(Registry& registry, CaptureService& capture) : reg_(registry), cap_(capture) {}

    Response handle(const std::string& method, const std::string& target, const Headers& headers, const std::string& body) {
        try {
            return route(method, target, headers, body);
        } catch (const AuthError& e) {
            return error(401, e.what());
        } catch (const NotFoundError& e) {
            return error(404, e.what());
        } catch (const ConflictError& e) {
            return error(409, e.what());
        } catch (const ValidationError& e) {
            return error(400, e.what());
        } catch (const ConfigError& e) {
            return error(400, e.what());
        } catch (const UsageError& e) {
            return error(400, e.what());
        } catch (const DomainError& e) {
            return error(400, e.what());
        } catch (const nlohmann::json::exception& e) {
            return error(400, std::string("bad request body: ") + e.what());
        } catch (const std::exception& e) {
            return error(500, e.what());
        }
    }

private:
    static Response error(int status, const std::string& msg) { return {status, {{"error", msg}}}; }

    static ojson parse_body(const std::string& body) {
        if (body.empty()) return ojson::object();
        try {
            return ojson::parse(body);
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError(std::string("body is not JSON: ") + e.what());
        }
    }

    Response route(const std::string& method, const std::string& target, const Headers& headers, const std::string& raw) {
        const auto qpos = target.find('?');
        const auto parts = detail::split_path(target.substr(0, qpos));
        const auto query = detail::parse_query(qpos == std::string::npos ? "" : target.substr(qpos + 1));
        const auto n = parts.size();
        if (n == 0) throw NotFoundError("no such resource: " + target);
        const std::string& root = parts[0];
        const bool get = method == "GET", post = method == "POST" || method == "PUT";

        if (root == "tokens" && n == 1) {
            const std::string tok = detail::bearer(headers);
            if (get) {
                const Claims c = reg_.authenticate(tok, {Role::admin, Role::app, Role::device});
                std::vector<std::string> roles;
                for (Role r : c.roles) roles.push_back(to_string(r));
                return {200, {{"subject", c.subject}, {"roles", roles}, {"expires_at", format_iso(c.expires_at)}}};
            }
            if (post) {
                reg_.authenticate(tok, {Role::admin});
                const ojson b = parse_body(raw);
                std::set<Role> roles;
                for (const auto& r : b.at("roles")) roles.insert(parse_role(r.get<std::string>()));
                const double ttl = b.value("ttl_s", 3600.0);
                if (!(ttl >= 0.0)) throw ValidationError("ttl_s must be >= 0");
                return {201, {{"token", reg_.issue(b.at("subject").get<std::string>(), roles, from_seconds(ttl))}}};
            }
        }

        if (root == "devices") {
            const std::string tok = detail::bearer(headers);
            if (n == 1 && post) {
                const ojson b = parse_body(raw);
                const std::string token = reg_.register_device(b, tok);
                const auto id = b.at("device_id").get<std::string>();
                return {201, {{"device_id", id}, {"token", token}, {"record", to_json(reg_.device(id))}}};
            }
            if (n == 1 && get) {
                reg_.authenticate(tok, {Role::admin, Role::app, Role::device});
                ojson list = ojson::array();
                for (const auto& d : reg_.devices()) list.push_back(to_json(d));
                return {200, list};
            }
            const std::string& id = parts[1];
            if (n == 2 && get) {
                reg_.authenticate(tok, {Role::admin, Role::app, Role::device});
                return {200, to_json(reg_.device(id))};
            }
            if (n == 3 && post) {
                const ojson b = parse_body(raw);
                if (parts[2] == "status") {
                    std::optional<Timestamp> ts;
                    if (b.contains("last_sync_timestamp")) ts = parse_iso(b["last_sync_timestamp"].get<std::string>());
                    return {200, to_json(reg_.update_status(tok, id, parse_status(b.at("status").get<std::string>()), ts))};
                }
                if (parts[2] == "config") return {201, to_json(reg_.snapshot_config(tok, id, b))};
                if (parts[2] == "rollback")
                    return {200, to_json(reg_.rollback(tok, id, b.at("version_id").get<std::string>()))};
            }
        }

        if (root == "actions") {
            const std::string tok = detail::bearer(headers);
            if (n == 1 && post) {
                const ojson b = parse_body(raw);
                const auto aid = reg_.enqueue_action(tok, b.at("device_id").get<std::string>(), b.at("command"));
                reg_.process_actions();
                return {202, {{"action_id", aid}, {"state", to_string(reg_.action(aid).state)}}};
            }
            if (n == 2 && get) {
                reg_.authenticate(tok, {Role::admin, Role::app});
                reg_.process_actions();
                return {200, to_json(reg_.action(parts[1]))};
            }
        }

        if (root == "capture" && n == 1) {
            const std::string tok = detail::bearer(headers);
            if (post) {
                const ojson b = parse_body(raw);
                std::vector<timebase::SensorSample> samples;
                for (const auto& s : b.at("samples"))
                    samples.push_back(timebase::sample_from_json(nlohmann::json::parse(s.dump())));
                const auto cid = cap_.ingest(samples, tok);
                return {201, {{"capture_id", cid}, {"count", samples.size()}}};
            }
            if (get) {
                reg_.authenticate(tok, {Role::admin, Role::app});
                auto it = query.find("device_id");
                if (it == query.end()) throw ValidationError("device_id query parameter required");
                ojson list = ojson::array();
                for (const auto& s : cap_.query(it->second, Timestamp{detail::int_param(query, "from_ns", INT64_MIN)},
                                                Timestamp{detail::int_param(query, "to_ns", INT64_MAX)}))
                    list.push_back(to_json(s));
                return {200, list};
            }
        }

        if (root == "log" && n == 1 && get) {
            reg_.authenticate(detail::bearer(headers), {Role::admin});
            ojson list = ojson::array();
            for (const auto& e : reg_.log()) list.push_back(to_json(e));
            return {200, list};
        }

        throw NotFoundError("no route for " + method + " " + target);
    }

    Registry& reg_;
    CaptureService& cap_;
};

}  // namespace sass::services
