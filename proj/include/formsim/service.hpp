#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include "formsim/store.hpp"

namespace formsim {

struct ApiRequest {
    std::string method;
    /// Path without the query string, e.g. "/v1/matches".
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
};

struct ApiResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
    std::map<std::string, std::string> headers;
};

struct ServiceOptions {
    /// Default frame rate for animation data; `raw=true` bypasses it.
    double animation_fps = 5.0;
    std::size_t default_top_k = 5;
};

/// Transport-independent implementation of the /v1 API. Reads run
/// concurrently; writes are serialized.
class AnalyticsService {
public:
    explicit AnalyticsService(std::filesystem::path store_root, ServiceOptions options = {});

    ApiResponse handle(const ApiRequest& request);

private:
    struct MatchCache;

    ApiResponse route(const ApiRequest& request);
    ApiResponse get_matches();
    ApiResponse get_match(const std::string& id);
    ApiResponse get_segments(const std::string& match_id, const ApiRequest& request);
    ApiResponse get_frames(const std::string& segment_id, const ApiRequest& request);
    ApiResponse get_vfs(const std::string& segment_id);
    ApiResponse get_vfs_svg(const std::string& segment_id, const ApiRequest& request);
    ApiResponse get_classification(const std::string& segment_id, const ApiRequest& request);
    ApiResponse get_templates();
    ApiResponse get_annotations(const std::string& segment_id);
    ApiResponse post_annotation(const std::string& segment_id, const ApiRequest& request);
    ApiResponse get_scenesets();
    ApiResponse get_sceneset(const std::string& id);
    ApiResponse post_sceneset(const ApiRequest& request);

    /// Cached per match; loaded on first use under the write lock.
    std::shared_ptr<const MatchCache> cache_for(const std::string& match_id);
    std::pair<std::shared_ptr<const MatchCache>, const SegmentRecord*> find_segment(const std::string& segment_id);

    std::shared_mutex mutex_;
    std::mutex cache_mutex_;
    ProjectStore store_;
    ServiceOptions options_;
    std::map<std::string, std::shared_ptr<const MatchCache>> cache_;
};

/// HTTP transport for AnalyticsService.
class HttpServer {
public:
    explicit HttpServer(AnalyticsService& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds the socket; port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port);
    /// Serves until stop() is called.
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace formsim
