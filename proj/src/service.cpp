#include "formsim/service.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <regex>

#include "formsim/errors.hpp"
#include "formsim/render.hpp"

namespace formsim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct FieldIssue {
    std::string field;
    std::string message;
};

ApiResponse json_response(int status, const json& body) {
    ApiResponse r;
    r.status = status;
    r.body = body.dump();
    return r;
}

ApiResponse problem(int status, std::string title, std::string detail, const std::vector<FieldIssue>& fields = {}) {
    json doc{{"type", "about:blank"}, {"title", std::move(title)}, {"status", status}, {"detail", std::move(detail)}};
    if (!fields.empty()) {
        json errors = json::array();
        for (const auto& f : fields) errors.push_back({{"field", f.field}, {"message", f.message}});
        doc["errors"] = errors;
    }
    auto r = json_response(status, doc);
    r.content_type = "application/problem+json";
    return r;
}

ApiResponse not_found(const std::string& what) { return problem(404, "Not Found", what); }

ApiResponse bad_field(const std::string& field, const std::string& message) {
    return problem(400, "Bad Request", fmt::format("invalid field '{}'", field), {{field, message}});
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::size_t i = 0;
    while (i < path.size()) {
        while (i < path.size() && path[i] == '/') ++i;
        auto j = path.find('/', i);
        if (j == std::string::npos) j = path.size();
        if (j > i) parts.push_back(path.substr(i, j - i));
        i = j;
    }
    return parts;
}

std::optional<std::string> query_value(const ApiRequest& r, const std::string& key) {
    auto it = r.query.find(key);
    if (it == r.query.end()) return std::nullopt;
    return it->second;
}

std::optional<long> parse_long(const std::string& text) {
    long v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size()) return std::nullopt;
    return v;
}

std::optional<double> parse_double(const std::string& text) {
    try {
        std::size_t used = 0;
        double v = std::stod(text, &used);
        if (used != text.size() || !std::isfinite(v)) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

bool truthy(const std::optional<std::string>& v) { return v && (*v == "true" || *v == "1" || *v == "yes"); }

fs::file_time_type stamp(const fs::path& p) {
    std::error_code ec;
    auto t = fs::last_write_time(p, ec);
    return ec ? fs::file_time_type::min() : t;
}

/// Evenly spaced picks from n items, k of them.
std::vector<std::size_t> even_sample(std::size_t n, std::size_t k) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back((2 * i + 1) * n / (2 * k));
    return out;
}

}  // namespace

struct AnalyticsService::MatchCache {
    MatchRecord record;
    std::vector<SegmentRecord> segments;
    std::vector<Frame> frames;
    std::map<std::string, Formation> vfs;
    std::map<std::string, ClassificationRecord> classifications;
    std::map<std::string, std::string> rejected;
    std::vector<fs::file_time_type> stamps;

    const SegmentRecord* segment(const std::string& id) const {
        for (const auto& s : segments)
            if (s.id == id) return &s;
        return nullptr;
    }
};

AnalyticsService::AnalyticsService(fs::path store_root, ServiceOptions options)
    : store_(std::move(store_root)), options_(options) {
    if (!(options_.animation_fps > 0.0)) throw ConfigError("animation frame rate must be positive");
}

std::shared_ptr<const AnalyticsService::MatchCache> AnalyticsService::cache_for(const std::string& match_id) {
    const auto dir = store_.root() / "matches" / match_id;
    std::vector<fs::file_time_type> stamps;
    for (const char* f : {"match.json", "frames.jsonl", "segments.jsonl", "vfs.jsonl", "classifications.jsonl"})
        stamps.push_back(stamp(dir / f));

    std::lock_guard lock(cache_mutex_);
    auto it = cache_.find(match_id);
    // Classification runs out-of-band, so a changed file invalidates the entry.
    if (it != cache_.end() && it->second->stamps == stamps) return it->second;
    auto record = store_.match(match_id);
    if (!record) return nullptr;
    auto c = std::make_shared<MatchCache>();
    c->record = *record;
    c->segments = store_.segments(match_id);
    c->frames = store_.frames(match_id);
    for (auto& f : store_.vfs(match_id)) c->vfs.emplace(f.segment_id, std::move(f));
    for (auto& x : store_.classifications(match_id)) c->classifications.emplace(x.segment_id, std::move(x));
    for (auto& r : store_.rejected(match_id)) c->rejected.emplace(r.segment_id, r.reason);
    c->stamps = std::move(stamps);
    cache_[match_id] = c;
    return c;
}

std::pair<std::shared_ptr<const AnalyticsService::MatchCache>, const SegmentRecord*> AnalyticsService::find_segment(
    const std::string& segment_id) {
    // Segment ids carry their match id as prefix: "<match>-s<frame>".
    for (const auto& m : store_.match_ids()) {
        if (segment_id.rfind(m + "-s", 0) != 0) continue;
        auto c = cache_for(m);
        if (!c) continue;
        if (const auto* s = c->segment(segment_id)) return {c, s};
    }
    return {nullptr, nullptr};
}

ApiResponse AnalyticsService::handle(const ApiRequest& request) {
    try {
        if (request.method == "POST") {
            std::unique_lock lock(mutex_);
            return route(request);
        }
        std::shared_lock lock(mutex_);
        return route(request);
    } catch (const FieldError& e) {
        return bad_field(e.field(), e.what());
    } catch (const json::exception& e) {
        return problem(400, "Bad Request", e.what());
    } catch (const LookupError& e) {
        return not_found(e.what());
    } catch (const std::exception& e) {
        return problem(500, "Internal Server Error", e.what());
    }
}

ApiResponse AnalyticsService::route(const ApiRequest& request) {
    const auto p = split_path(request.path);
    const auto& m = request.method;
    auto allow = [&](const char* methods) {
        auto r = problem(405, "Method Not Allowed", fmt::format("{} is not supported on {}", m, request.path));
        r.headers["Allow"] = methods;
        return r;
    };
    if (p.empty() || p[0] != "v1") return not_found("unknown path " + request.path);
    const auto n = p.size();

    if (n == 2 && p[1] == "matches") return m == "GET" ? get_matches() : allow("GET");
    if (n == 3 && p[1] == "matches") return m == "GET" ? get_match(p[2]) : allow("GET");
    if (n == 4 && p[1] == "matches" && p[3] == "segments")
        return m == "GET" ? get_segments(p[2], request) : allow("GET");
    if (n == 2 && p[1] == "templates") return m == "GET" ? get_templates() : allow("GET");
    if (n == 2 && p[1] == "scenesets") {
        if (m == "GET") return get_scenesets();
        if (m == "POST") return post_sceneset(request);
        return allow("GET, POST");
    }
    if (n == 3 && p[1] == "scenesets") return m == "GET" ? get_sceneset(p[2]) : allow("GET");
    if (n >= 3 && n <= 4 && p[1] == "segments") {
        const auto& id = p[2];
        if (n == 3) {
            if (m != "GET") return allow("GET");
            auto [cache, segment] = find_segment(id);
            if (!segment) return not_found("unknown segment " + id);
            return json_response(200, to_json(*segment));
        }
        const auto& leaf = p[3];
        if (leaf == "frames") return m == "GET" ? get_frames(id, request) : allow("GET");
        if (leaf == "vfs") return m == "GET" ? get_vfs(id) : allow("GET");
        if (leaf == "vfs.svg") return m == "GET" ? get_vfs_svg(id, request) : allow("GET");
        if (leaf == "classification") return m == "GET" ? get_classification(id, request) : allow("GET");
        if (leaf == "annotations") {
            if (m == "GET") return get_annotations(id);
            if (m == "POST") return post_annotation(id, request);
            return allow("GET, POST");
        }
    }
    return not_found("unknown path " + request.path);
}

ApiResponse AnalyticsService::get_matches() {
    json out = json::array();
    for (const auto& m : store_.matches()) out.push_back(to_json(m));
    return json_response(200, out);
}

ApiResponse AnalyticsService::get_match(const std::string& id) {
    auto m = store_.match(id);
    if (!m) return not_found("unknown match " + id);
    return json_response(200, to_json(*m));
}

ApiResponse AnalyticsService::get_segments(const std::string& match_id, const ApiRequest& request) {
    auto cache = cache_for(match_id);
    if (!cache) return not_found("unknown match " + match_id);
    std::optional<Possession> possession;
    std::optional<DurationClass> bucket;
    if (auto v = query_value(request, "possession")) {
        try {
            possession = parse_possession(*v);
        } catch (const Error&) {
            return bad_field("possession", "must be one of own, opponent");
        }
    }
    if (auto v = query_value(request, "bucket")) {
        try {
            bucket = parse_duration_class(*v);
        } catch (const Error&) {
            return bad_field("bucket", "must be one of short, mid, long");
        }
    }
    json out = json::array();
    for (const auto& s : cache->segments) {
        if (possession && s.possession != *possession) continue;
        if (bucket && s.bucket != *bucket) continue;
        auto j = to_json(s);
        j["classified"] = cache->classifications.count(s.id) > 0;
        out.push_back(std::move(j));
    }
    return json_response(200, out);
}

ApiResponse AnalyticsService::get_frames(const std::string& segment_id, const ApiRequest& request) {
    auto [cache, record] = find_segment(segment_id);
    if (!record) return not_found("unknown segment " + segment_id);
    const double source_fps = cache->record.frame_rate;
    double fps = std::min(options_.animation_fps, source_fps);
    const bool raw = truthy(query_value(request, "raw"));
    if (raw) fps = source_fps;
    if (auto v = query_value(request, "fps"); v && !raw) {
        auto parsed = parse_double(*v);
        if (!parsed || *parsed <= 0.0) return bad_field("fps", "must be a positive number");
        fps = std::min(*parsed, source_fps);
    }
    const auto step = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(source_fps / fps)));
    const auto segment = store_.load_segment(*record, cache->frames);
    json frames = json::array();
    for (std::size_t i = 0; i < segment.frames.size(); ++i) {
        // The last frame is always kept so playback ends where the segment ends.
        if (i % step == 0 || i + 1 == segment.frames.size()) frames.push_back(to_json(segment.frames[i]));
    }
    return json_response(200, {{"segment_id", segment_id},
                               {"source_fps", source_fps},
                               {"fps", source_fps / static_cast<double>(step)},
                               {"step", step},
                               {"frames", frames}});
}

ApiResponse AnalyticsService::get_vfs(const std::string& segment_id) {
    auto [cache, record] = find_segment(segment_id);
    if (!record) return not_found("unknown segment " + segment_id);
    if (auto it = cache->rejected.find(segment_id); it != cache->rejected.end())
        return problem(422, "Unprocessable Entity", "segment was rejected by classification: " + it->second);
    auto it = cache->vfs.find(segment_id);
    if (it == cache->vfs.end()) return problem(404, "Not Classified", "segment " + segment_id + " has no VFS yet");
    return json_response(200, to_json(it->second));
}

ApiResponse AnalyticsService::get_vfs_svg(const std::string& segment_id, const ApiRequest& request) {
    auto [cache, record] = find_segment(segment_id);
    if (!record) return not_found("unknown segment " + segment_id);
    auto it = cache->vfs.find(segment_id);
    if (it == cache->vfs.end()) return problem(404, "Not Classified", "segment " + segment_id + " has no VFS yet");
    std::optional<TemplateOverlay> overlay;
    if (auto scheme = query_value(request, "overlay")) {
        const auto& ranking = cache->classifications.at(segment_id).result.ranking;
        const RankedScheme* hit = nullptr;
        for (const auto& r : ranking)
            if (r.scheme == *scheme || (*scheme == "best" && &r == &ranking.front())) hit = &r;
        if (!hit) return bad_field("overlay", "scheme is not in the stored ranking");
        auto templates = store_.templates();
        if (!templates) return problem(404, "Not Found", "store has no template bank");
        const auto& variants = templates->at(hit->scheme).variants;
        if (hit->variant >= variants.size()) return problem(409, "Conflict", "stored variant no longer in the bank");
        overlay = TemplateOverlay{hit->scheme, variants[hit->variant], hit->row_to_col};
    }
    ApiResponse r;
    r.content_type = "image/svg+xml";
    r.body = render_vfs_svg(it->second.roles, overlay);
    return r;
}

ApiResponse AnalyticsService::get_classification(const std::string& segment_id, const ApiRequest& request) {
    auto [cache, record] = find_segment(segment_id);
    if (!record) return not_found("unknown segment " + segment_id);
    auto it = cache->classifications.find(segment_id);
    if (it == cache->classifications.end())
        return problem(404, "Not Classified", "segment " + segment_id + " has no classification yet");
    const auto size = it->second.result.ranking.size();
    std::size_t k = std::min(options_.default_top_k, size);
    if (auto v = query_value(request, "k")) {
        auto parsed = parse_long(*v);
        if (!parsed || *parsed < 1 || static_cast<std::size_t>(*parsed) > size)
            return bad_field("k", fmt::format("must be an integer in [1, {}]", size));
        k = static_cast<std::size_t>(*parsed);
    }
    return json_response(200, to_json(it->second, k));
}

ApiResponse AnalyticsService::get_templates() {
    const auto path = store_.root() / "templates.json";
    if (!fs::exists(path)) return problem(404, "Not Found", "store has no template bank; run classify");
    return json_response(200, json::parse(read_file(path)));
}

ApiResponse AnalyticsService::get_annotations(const std::string& segment_id) {
    auto [cache, record] = find_segment(segment_id);
    if (!record) return not_found("unknown segment " + segment_id);
    json out = json::array();
    for (const auto& a : store_.annotations())
        if (a.segment_id == segment_id) out.push_back(to_json(a));
    return json_response(200, out);
}

ApiResponse AnalyticsService::post_annotation(const std::string& segment_id, const ApiRequest& request) {
    auto [cache, record] = find_segment(segment_id);
    if (!record) return not_found("unknown segment " + segment_id);
    json body;
    try {
        body = json::parse(request.body);
    } catch (const json::parse_error& e) {
        return problem(400, "Bad Request", std::string("body is not valid JSON: ") + e.what());
    }
    if (!body.is_object()) return problem(400, "Bad Request", "body must be a JSON object");
    if (body.contains("segment_id") && body["segment_id"] != segment_id)
        return bad_field("segment_id", "does not match the path");
    body["segment_id"] = segment_id;
    // The server assigns revision numbers.
    body.erase("seq");
    auto stored = store_.append_annotation(annotation_from_json(body));
    auto r = json_response(201, to_json(stored));
    r.headers["Location"] = "/v1/segments/" + segment_id + "/annotations";
    return r;
}

ApiResponse AnalyticsService::get_scenesets() {
    json out = json::array();
    for (const auto& s : store_.scenesets()) out.push_back(to_json(s));
    return json_response(200, out);
}

ApiResponse AnalyticsService::get_sceneset(const std::string& id) {
    for (const auto& s : store_.scenesets())
        if (s.id == id) return json_response(200, to_json(s));
    return not_found("unknown scene set " + id);
}

ApiResponse AnalyticsService::post_sceneset(const ApiRequest& request) {
    json body;
    try {
        body = json::parse(request.body);
    } catch (const json::parse_error& e) {
        return problem(400, "Bad Request", std::string("body is not valid JSON: ") + e.what());
    }
    if (!body.is_object()) return problem(400, "Bad Request", "body must be a JSON object");

    std::vector<FieldIssue> issues;
    auto count = [&](const char* field, std::size_t fallback) -> std::size_t {
        if (!body.contains(field)) return fallback;
        if (!body[field].is_number_unsigned()) {
            issues.push_back({field, "must be a non-negative integer"});
            return 0;
        }
        return body[field].get<std::size_t>();
    };
    if (!body.contains("match_id") || !body["match_id"].is_string())
        return bad_field("match_id", "is required and must be a string");
    const auto match_id = body["match_id"].get<std::string>();
    int half = 1;
    if (body.contains("half")) {
        if (!body["half"].is_number_integer() || (body["half"] != 1 && body["half"] != 2))
            issues.push_back({"half", "must be 1 or 2"});
        else
            half = body["half"].get<int>();
    }
    const auto own = count("own", 25);
    const auto opponent = count("opponent", 25);
    std::string id;
    if (body.contains("id")) {
        static const std::regex valid("[A-Za-z0-9_-]{1,64}");
        if (!body["id"].is_string() || !std::regex_match(body["id"].get<std::string>(), valid))
            issues.push_back({"id", "must match [A-Za-z0-9_-]{1,64}"});
        else
            id = body["id"].get<std::string>();
    }
    if (!issues.empty()) return problem(400, "Bad Request", "invalid scene set request", issues);
    if (own + opponent == 0) return bad_field("own", "a scene set needs at least one scene");

    auto cache = cache_for(match_id);
    if (!cache) return not_found("unknown match " + match_id);

    std::vector<const SegmentRecord*> pool[2];
    for (const auto& s : cache->segments)
        if (s.half == half) pool[static_cast<int>(s.possession)].push_back(&s);
    if (pool[0].size() < own) issues.push_back({"own", fmt::format("only {} own-possession segments in half {}", pool[0].size(), half)});
    if (pool[1].size() < opponent)
        issues.push_back({"opponent", fmt::format("only {} opponent-possession segments in half {}", pool[1].size(), half)});
    if (!issues.empty()) return problem(400, "Bad Request", "not enough segments to sample", issues);

    std::vector<const SegmentRecord*> picked;
    for (auto i : even_sample(pool[0].size(), own)) picked.push_back(pool[0][i]);
    for (auto i : even_sample(pool[1].size(), opponent)) picked.push_back(pool[1][i]);
    std::sort(picked.begin(), picked.end(),
              [](const SegmentRecord* a, const SegmentRecord* b) { return a->first_frame < b->first_frame; });

    const auto existing = store_.scenesets();
    auto taken = [&](const std::string& candidate) {
        return std::any_of(existing.begin(), existing.end(), [&](const SceneSet& s) { return s.id == candidate; });
    };
    if (id.empty()) {
        for (std::size_t n = existing.size() + 1; id.empty() || taken(id); ++n) id = fmt::format("ss{:04d}", n);
    } else if (taken(id)) {
        return problem(409, "Conflict", "scene set " + id + " already exists");
    }

    SceneSet set{id, match_id, half, own, opponent, {}};
    for (const auto* s : picked) set.segment_ids.push_back(s->id);
    store_.write_sceneset(set);
    auto r = json_response(201, to_json(set));
    r.headers["Location"] = "/v1/scenesets/" + id;
    return r;
}

}  // namespace formsim
