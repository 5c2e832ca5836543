// Our headers come first: httplib pulls in <resolv.h>, whose `_res` macro
// breaks Eigen's headers.
#include "formsim/errors.hpp"
#include "formsim/service.hpp"

#include <httplib.h>

namespace formsim {

struct HttpServer::Impl {
    AnalyticsService& service;
    httplib::Server server;

    explicit Impl(AnalyticsService& s) : service(s) {
        auto handler = [this](const httplib::Request& req, httplib::Response& res) {
            ApiRequest request;
            request.method = req.method;
            request.path = req.path;
            for (const auto& [k, v] : req.params) request.query[k] = v;
            request.body = req.body;
            const auto response = service.handle(request);
            res.status = response.status;
            for (const auto& [k, v] : response.headers) res.set_header(k, v);
            res.set_content(response.body, response.content_type.c_str());
        };
        const std::string any = ".*";
        server.Get(any, handler);
        server.Post(any, handler);
        server.Put(any, handler);
        server.Delete(any, handler);
        server.Patch(any, handler);
    }
};

HttpServer::HttpServer(AnalyticsService& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
    return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
}

}  // namespace formsim
