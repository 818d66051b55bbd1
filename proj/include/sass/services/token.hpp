#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>
#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>

#include "sass/error.hpp"
#include "sass/time.hpp"

namespace sass::services {

enum class Role { admin, app, device };

inline std::string to_string(Role r) {
    switch (r) {
        case Role::admin: return "admin";
        case Role::app: return "app";
        case Role::device: return "device";
    }
    return "?";
}

inline Role parse_role(const std::string& s) {
    if (s == "admin") return Role::admin;
    if (s == "app") return Role::app;
    if (s == "device") return Role::device;
    throw ValidationError("unknown role: " + s);
}

struct Claims {
    std::string subject;
    std::set<Role> roles;
    Timestamp issued_at{};
    Timestamp expires_at{};

    bool has(Role r) const { return roles.count(r) > 0; }
    friend bool operator==(const Claims&, const Claims&) = default;
};

namespace detail {

inline std::string base64url_encode(const std::string& raw) {
    std::string out(4 * ((raw.size() + 2) / 3) + 1, '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(raw.data()), static_cast<int>(raw.size()));
    out.resize(static_cast<std::size_t>(n));
    while (!out.empty() && out.back() == '=') out.pop_back();
    std::replace(out.begin(), out.end(), '+', '-');
    std::replace(out.begin(), out.end(), '/', '_');
    return out;
}

/// Strict: rejects characters outside the url-safe alphabet and any encoding
/// that does not round-trip to the same text.
inline std::string base64url_decode(const std::string& text) {
    std::string s = text;
    for (char& c : s) {
        if (c == '-') c = '+';
        else if (c == '_') c = '/';
        else if (!std::isalnum(static_cast<unsigned char>(c))) throw AuthError("malformed token encoding");
    }
    if (s.size() % 4 == 1) throw AuthError("malformed token encoding");
    const std::size_t pad = (4 - s.size() % 4) % 4;
    s.append(pad, '=');
    std::string out(3 * s.size() / 4, '\0');
    const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(s.data()), static_cast<int>(s.size()));
    if (n < 0) throw AuthError("malformed token encoding");
    out.resize(static_cast<std::size_t>(n) - pad);
    if (base64url_encode(out) != text) throw AuthError("non-canonical token encoding");
    return out;
}

inline std::string hmac_sha256(const std::string& key, const std::string& msg) {
    unsigned char mac[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), reinterpret_cast<const unsigned char*>(msg.data()),
              msg.size(), mac, &len))
        throw AuthError("MAC computation failed");
    return std::string(reinterpret_cast<const char*>(mac), len);
}

}  // namespace detail

/// Token text: base64url(canonical JSON claims) "." base64url(HMAC-SHA256).
inline std::string issue_token(const std::string& subject, const std::set<Role>& roles, Duration ttl,
                               const std::string& key, Timestamp now) {
    if (key.empty()) throw ConfigError("token key is not configured");
    if (ttl < Duration::zero()) throw ConfigError("token ttl must be >= 0");
    std::vector<std::string> r;
    for (Role x : roles) r.push_back(to_string(x));
    const nlohmann::json payload{{"sub", subject}, {"roles", r}, {"iat", now.ns}, {"exp", (now + ttl).ns}};
    const std::string body = detail::base64url_encode(payload.dump());
    return body + "." + detail::base64url_encode(detail::hmac_sha256(key, body));
}

inline Claims validate_token(const std::string& token, const std::string& key, Timestamp now) {
    if (key.empty()) throw ConfigError("token key is not configured");
    const auto dot = token.find('.');
    if (dot == std::string::npos || token.find('.', dot + 1) != std::string::npos)
        throw AuthError("malformed token");
    const std::string body = token.substr(0, dot);
    const std::string sig = detail::base64url_decode(token.substr(dot + 1));
    const std::string expect = detail::hmac_sha256(key, body);
    if (sig.size() != expect.size() || CRYPTO_memcmp(sig.data(), expect.data(), sig.size()) != 0)
        throw AuthError("bad token signature");
    const std::string raw = detail::base64url_decode(body);
    Claims c;
    try {
        const auto j = nlohmann::json::parse(raw);
        if (j.dump() != raw) throw AuthError("non-canonical token payload");
        c.subject = j.at("sub").get<std::string>();
        for (const auto& r : j.at("roles")) c.roles.insert(parse_role(r.get<std::string>()));
        c.issued_at = Timestamp{j.at("iat").get<std::int64_t>()};
        c.expires_at = Timestamp{j.at("exp").get<std::int64_t>()};
    } catch (const nlohmann::json::exception&) {
        throw AuthError("malformed token payload");
    } catch (const ValidationError&) {
        throw AuthError("token carries an unknown role");
    }
    if (!(now < c.expires_at)) throw AuthError("token expired");
    return c;
}

}  // namespace sass::services
