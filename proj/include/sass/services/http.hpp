#pragma once

#include <string>

#include <httplib.h>

#include "sass/services/api.hpp"

namespace sass::services {

/// Binds a ServiceApi to an HTTP listener. Blocks until the server stops.
inline bool serve_http(ServiceApi& api, const std::string& host, int port, httplib::Server& server) {
    auto handler = [&api](const httplib::Request& req, httplib::Response& res) {
        Headers h(req.headers.begin(), req.headers.end());
        std::string target = req.path;
        if (!req.params.empty()) {
            char sep = '?';
            for (const auto& [k, v] : req.params) {
                target += sep + k + "=" + v;
                sep = '&';
            }
        }
        const Response r = api.handle(req.method, target, h, req.body);
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    const std::string pattern = R"(/.*)";
    server.Get(pattern, handler);
    server.Post(pattern, handler);
    server.Put(pattern, handler);
    return server.listen(host, port);
}

}  // namespace sass::services
