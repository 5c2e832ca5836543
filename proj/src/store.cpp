#include "formsim/store.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "formsim/errors.hpp"

namespace formsim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json point(Vec2 p) { return json::array({p.x, p.y}); }

Vec2 point_from(const json& j) {
    if (!j.is_array() || j.size() != 2) throw SchemaError("expected [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

json optional_point(const std::optional<Vec2>& p) { return p ? point(*p) : json(nullptr); }

std::optional<Vec2> optional_point_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    return point_from(j);
}

json player_map(const std::map<std::string, Vec2>& m) {
    json out = json::object();
    for (const auto& [id, p] : m) out[id] = point(p);
    return out;
}

std::map<std::string, Vec2> player_map_from(const json& j) {
    std::map<std::string, Vec2> out;
    for (const auto& [id, p] : j.items()) out[id] = point_from(p);
    return out;
}

std::string jsonl(const std::vector<json>& records) {
    std::string out;
    for (const auto& r : records) {
        out += r.dump();
        out += '\n';
    }
    return out;
}

template <class T, class F>
std::vector<T> read_lines(const fs::path& path, F decode) {
    std::vector<T> out;
    if (!fs::exists(path)) return out;
    for (const auto& j : read_json_records(path)) out.push_back(decode(j));
    return out;
}

std::string required_string(const json& j, const char* field) {
    if (!j.contains(field)) throw FieldError(field, "is required");
    if (!j[field].is_string()) throw FieldError(field, "must be a string");
    auto value = j[field].get<std::string>();
    if (value.empty()) throw FieldError(field, "must not be empty");
    return value;
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << text;
        if (!out) throw Error("failed writing " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<json> read_json_records(const fs::path& path) {
    const auto text = read_file(path);
    std::vector<json> out;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '[') {
        try {
            for (auto& j : json::parse(text)) out.push_back(std::move(j));
        } catch (const json::parse_error& e) {
            throw ParseError(path.string() + ": " + e.what(), 0);
        }
        return out;
    }
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw ParseError(path.string() + ": " + e.what(), line_no);
        }
    }
    return out;
}

// ---------------------------------------------------------------- codecs

json to_json(const Frame& f) {
    return {{"index", f.index},
            {"time", f.time},
            {"half", f.half},
            {"status", to_string(f.status)},
            {"event", f.event ? json(to_string(*f.event)) : json(nullptr)},
            {"possession", f.possession ? json(*f.possession) : json(nullptr)},
            {"players", player_map(f.players)},
            {"goalkeeper", optional_point(f.goalkeeper)},
            {"opponents", player_map(f.opponents)},
            {"ball", optional_point(f.ball)},
            {"clamped", f.clamped}};
}

Frame frame_from_json(const json& j) {
    Frame f;
    f.index = j.at("index").get<std::int64_t>();
    f.time = j.at("time").get<double>();
    f.half = j.at("half").get<int>();
    f.status = parse_game_status(j.at("status").get<std::string>());
    if (!j.at("event").is_null()) f.event = parse_event_kind(j["event"].get<std::string>());
    if (!j.at("possession").is_null()) f.possession = j["possession"].get<std::string>();
    f.players = player_map_from(j.at("players"));
    f.goalkeeper = optional_point_from(j.at("goalkeeper"));
    f.opponents = player_map_from(j.at("opponents"));
    f.ball = optional_point_from(j.at("ball"));
    f.clamped = j.value("clamped", false);
    return f;
}

SegmentRecord SegmentRecord::from_segment(const Segment& s) {
    SegmentRecord r;
    r.id = s.id;
    r.match_id = s.match_id;
    r.possession = s.possession;
    r.bucket = s.bucket;
    r.duration_s = s.duration;
    r.half = s.frames.front().half;
    r.first_frame = s.first_frame();
    r.last_frame = s.last_frame();
    r.frame_count = s.frames.size();
    r.frame_runs = s.frame_runs();
    r.possession_imputed = s.possession_imputed;
    return r;
}

json to_json(const SegmentRecord& s) {
    json runs = json::array();
    for (const auto& [a, b] : s.frame_runs) runs.push_back({a, b});
    return {{"id", s.id},
            {"match_id", s.match_id},
            {"possession", to_string(s.possession)},
            {"bucket", to_string(s.bucket)},
            {"duration_s", s.duration_s},
            {"half", s.half},
            {"first_frame", s.first_frame},
            {"last_frame", s.last_frame},
            {"frame_count", s.frame_count},
            {"frame_runs", runs},
            {"possession_imputed", s.possession_imputed}};
}

SegmentRecord segment_from_json(const json& j) {
    SegmentRecord s;
    s.id = j.at("id").get<std::string>();
    s.match_id = j.at("match_id").get<std::string>();
    s.possession = parse_possession(j.at("possession").get<std::string>());
    s.bucket = parse_duration_class(j.at("bucket").get<std::string>());
    s.duration_s = j.at("duration_s").get<double>();
    s.half = j.value("half", 1);
    s.first_frame = j.at("first_frame").get<std::int64_t>();
    s.last_frame = j.at("last_frame").get<std::int64_t>();
    s.frame_count = j.at("frame_count").get<std::size_t>();
    for (const auto& r : j.at("frame_runs")) s.frame_runs.emplace_back(r[0].get<std::int64_t>(), r[1].get<std::int64_t>());
    s.possession_imputed = j.value("possession_imputed", false);
    return s;
}

json to_json(const Formation& f) {
    json roles = json::array();
    for (const auto& r : f.roles) roles.push_back(point(r));
    return {{"segment_id", f.segment_id}, {"n", f.n()}, {"roles", roles}, {"role_compensation", f.role_compensation}};
}

Formation formation_from_json(const json& j) {
    Formation f;
    f.segment_id = j.at("segment_id").get<std::string>();
    for (const auto& r : j.at("roles")) f.roles.push_back(point_from(r));
    f.role_compensation = j.value("role_compensation", true);
    if (j.value("n", f.n()) != f.n()) throw SchemaError("VFS record " + f.segment_id + ": n does not match roles");
    return f;
}

json to_json(const ClassificationRecord& c, std::size_t top_k) {
    json ranking = json::array();
    for (std::size_t i = 0; i < c.result.ranking.size() && i < top_k; ++i) {
        const auto& r = c.result.ranking[i];
        ranking.push_back({{"rank", i + 1},
                           {"scheme", r.scheme},
                           {"fsim", r.fsim},
                           {"variant", r.variant},
                           {"assignment", r.row_to_col}});
    }
    return {{"segment_id", c.segment_id},
            {"delta", c.delta},
            {"role_compensation", c.role_compensation},
            {"templates_version", c.templates_version},
            {"best", c.result.ranking.empty() ? json(nullptr) : json(c.result.best().scheme)},
            {"ranking", ranking}};
}

ClassificationRecord classification_from_json(const json& j) {
    ClassificationRecord c;
    c.segment_id = j.at("segment_id").get<std::string>();
    c.delta = j.at("delta").get<double>();
    c.role_compensation = j.at("role_compensation").get<bool>();
    c.templates_version = j.value("templates_version", std::string{});
    for (const auto& r : j.at("ranking")) {
        RankedScheme s;
        s.scheme = r.at("scheme").get<std::string>();
        s.fsim = r.at("fsim").get<double>();
        s.variant = r.value("variant", std::size_t{0});
        s.row_to_col = r.value("assignment", std::vector<std::size_t>{});
        c.result.ranking.push_back(std::move(s));
    }
    return c;
}

json to_json(const AnnotationRecord& a) {
    return {{"segment_id", a.segment_id},
            {"annotator_id", a.annotator_id},
            {"scheme", a.label.str()},
            {"clarity", to_string(a.clarity)},
            {"vfs_rating", a.vfs_rating ? json(to_string(*a.vfs_rating)) : json(nullptr)},
            {"seq", a.seq}};
}

AnnotationRecord annotation_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("annotation must be a JSON object");
    AnnotationRecord a;
    a.segment_id = required_string(j, "segment_id");
    a.annotator_id = required_string(j, "annotator_id");
    try {
        a.label = AnnotationLabel::parse(required_string(j, "scheme"));
    } catch (const FieldError&) {
        throw;
    } catch (const SchemaError& e) {
        throw FieldError("scheme", e.what());
    }
    try {
        a.clarity = parse_clarity(required_string(j, "clarity"));
    } catch (const FieldError&) {
        throw;
    } catch (const SchemaError& e) {
        throw FieldError("clarity", e.what());
    }
    if (j.contains("vfs_rating") && !j["vfs_rating"].is_null()) {
        if (!j["vfs_rating"].is_string()) throw FieldError("vfs_rating", "must be a string");
        try {
            a.vfs_rating = parse_vfs_rating(j["vfs_rating"].get<std::string>());
        } catch (const SchemaError& e) {
            throw FieldError("vfs_rating", e.what());
        }
    }
    if (j.contains("seq") && j["seq"].is_number_integer()) a.seq = j["seq"].get<std::int64_t>();
    return a;
}

json to_json(const SceneSet& s) {
    return {{"id", s.id},         {"match_id", s.match_id}, {"half", s.half},
            {"own", s.own},       {"opponent", s.opponent}, {"segment_ids", s.segment_ids}};
}

SceneSet sceneset_from_json(const json& j) {
    SceneSet s;
    s.id = j.at("id").get<std::string>();
    s.match_id = j.at("match_id").get<std::string>();
    s.half = j.at("half").get<int>();
    s.own = j.at("own").get<std::size_t>();
    s.opponent = j.at("opponent").get<std::size_t>();
    s.segment_ids = j.at("segment_ids").get<std::vector<std::string>>();
    return s;
}

json to_json(const MatchRecord& m) {
    return {{"match_id", m.match_id}, {"observed_team", m.observed_team}, {"source", m.source},
            {"frame_rate", m.frame_rate}, {"frames", m.frames},           {"segments", m.segments}};
}

MatchRecord match_from_json(const json& j) {
    MatchRecord m;
    m.match_id = j.at("match_id").get<std::string>();
    m.observed_team = j.at("observed_team").get<std::string>();
    m.source = j.value("source", std::string{});
    m.frame_rate = j.at("frame_rate").get<double>();
    m.frames = j.at("frames").get<std::size_t>();
    m.segments = j.at("segments").get<std::size_t>();
    return m;
}

// ---------------------------------------------------------------- store

ProjectStore::ProjectStore(fs::path root) : root_(std::move(root)) {
    const auto index = root_ / "index.json";
    if (!fs::exists(index)) return;
    json doc;
    try {
        doc = json::parse(read_file(index));
    } catch (const json::parse_error& e) {
        throw ParseError(index.string() + ": " + e.what(), 0);
    }
    if (doc.value("schema_version", std::string{}) != kStoreSchema)
        throw SchemaError(index.string() + ": unsupported store version");
    match_ids_ = doc.at("matches").get<std::vector<std::string>>();
}

fs::path ProjectStore::match_dir(const std::string& id) const { return root_ / "matches" / id; }

void ProjectStore::write_index() const {
    json doc{{"schema_version", kStoreSchema}, {"matches", match_ids_}};
    write_file_atomic(root_ / "index.json", doc.dump(2) + "\n");
}

std::vector<MatchRecord> ProjectStore::matches() const {
    std::vector<MatchRecord> out;
    for (const auto& id : match_ids_) out.push_back(*match(id));
    return out;
}

std::optional<MatchRecord> ProjectStore::match(const std::string& id) const {
    if (std::find(match_ids_.begin(), match_ids_.end(), id) == match_ids_.end()) return std::nullopt;
    return match_from_json(json::parse(read_file(match_dir(id) / "match.json")));
}

void ProjectStore::write_match(const MatchRecord& record, const std::vector<Frame>& frames,
                               const std::vector<Segment>& segments) {
    std::vector<json> frame_lines, segment_lines;
    frame_lines.reserve(frames.size());
    for (const auto& f : frames) frame_lines.push_back(to_json(f));
    for (const auto& s : segments) segment_lines.push_back(to_json(SegmentRecord::from_segment(s)));

    // Build the new match directory next to the old one, then swap it in.
    const auto dir = match_dir(record.match_id);
    auto staging = dir;
    staging += ".staging";
    fs::remove_all(staging);
    fs::create_directories(staging);
    write_file_atomic(staging / "match.json", to_json(record).dump(2) + "\n");
    write_file_atomic(staging / "frames.jsonl", jsonl(frame_lines));
    write_file_atomic(staging / "segments.jsonl", jsonl(segment_lines));
    fs::remove_all(dir);
    fs::rename(staging, dir);

    if (std::find(match_ids_.begin(), match_ids_.end(), record.match_id) == match_ids_.end()) {
        match_ids_.push_back(record.match_id);
        std::sort(match_ids_.begin(), match_ids_.end());
    }
    write_index();
}

std::vector<SegmentRecord> ProjectStore::segments(const std::string& match_id) const {
    return read_lines<SegmentRecord>(match_dir(match_id) / "segments.jsonl", segment_from_json);
}

std::optional<SegmentRecord> ProjectStore::find_segment(const std::string& segment_id) const {
    for (const auto& m : match_ids_)
        for (auto& s : segments(m))
            if (s.id == segment_id) return s;
    return std::nullopt;
}

std::vector<Frame> ProjectStore::frames(const std::string& match_id) const {
    return read_lines<Frame>(match_dir(match_id) / "frames.jsonl", frame_from_json);
}

Segment ProjectStore::load_segment(const SegmentRecord& record, const std::vector<Frame>& match_frames) const {
    Segment s;
    s.id = record.id;
    s.match_id = record.match_id;
    s.possession = record.possession;
    s.bucket = record.bucket;
    s.duration = record.duration_s;
    s.possession_imputed = record.possession_imputed;
    // Frame logs are sorted by index, so runs resolve by binary search.
    for (const auto& [a, b] : record.frame_runs) {
        auto it = std::lower_bound(match_frames.begin(), match_frames.end(), a,
                                   [](const Frame& f, std::int64_t idx) { return f.index < idx; });
        for (; it != match_frames.end() && it->index <= b; ++it) s.frames.push_back(*it);
    }
    if (s.frames.size() != record.frame_count)
        throw IntegrityError(fmt::format("segment {}: {} frames found in the frame log, record says {}", record.id,
                                         s.frames.size(), record.frame_count));
    return s;
}

void ProjectStore::write_classifications(const std::string& match_id, const std::vector<Formation>& vfs,
                                         const std::vector<ClassificationRecord>& classifications,
                                         const std::vector<RejectedSegment>& rejected) {
    std::vector<json> v, c, r;
    for (const auto& f : vfs) v.push_back(to_json(f));
    for (const auto& x : classifications) c.push_back(to_json(x));
    for (const auto& x : rejected) r.push_back({{"segment_id", x.segment_id}, {"reason", x.reason}});
    const auto dir = match_dir(match_id);
    write_file_atomic(dir / "vfs.jsonl", jsonl(v));
    write_file_atomic(dir / "classifications.jsonl", jsonl(c));
    write_file_atomic(dir / "rejected.jsonl", jsonl(r));
}

std::vector<Formation> ProjectStore::vfs(const std::string& match_id) const {
    return read_lines<Formation>(match_dir(match_id) / "vfs.jsonl", formation_from_json);
}

std::vector<ClassificationRecord> ProjectStore::classifications(const std::string& match_id) const {
    return read_lines<ClassificationRecord>(match_dir(match_id) / "classifications.jsonl", classification_from_json);
}

std::vector<RejectedSegment> ProjectStore::rejected(const std::string& match_id) const {
    return read_lines<RejectedSegment>(match_dir(match_id) / "rejected.jsonl", [](const json& j) {
        return RejectedSegment{j.at("segment_id").get<std::string>(), j.at("reason").get<std::string>()};
    });
}

void ProjectStore::write_templates(const TemplateSet& templates) {
    write_file_atomic(root_ / "templates.json", template_set_to_json(templates));
}

std::optional<TemplateSet> ProjectStore::templates() const {
    const auto path = root_ / "templates.json";
    if (!fs::exists(path)) return std::nullopt;
    return parse_template_set(read_file(path));
}

std::vector<AnnotationRecord> ProjectStore::annotations() const {
    return read_lines<AnnotationRecord>(root_ / "annotations.jsonl", annotation_from_json);
}

AnnotationRecord ProjectStore::append_annotation(AnnotationRecord record) {
    std::int64_t last = 0;
    for (const auto& a : annotations()) last = std::max(last, a.seq);
    record.seq = last + 1;
    fs::create_directories(root_);
    std::ofstream out(root_ / "annotations.jsonl", std::ios::app | std::ios::binary);
    if (!out) throw Error("cannot append to annotation log in " + root_.string());
    out << to_json(record).dump() << '\n';
    out.flush();
    if (!out) throw Error("failed appending to annotation log");
    return record;
}

std::vector<SceneSet> ProjectStore::scenesets() const {
    std::vector<SceneSet> out;
    const auto dir = root_ / "scenesets";
    if (!fs::exists(dir)) return out;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out.push_back(sceneset_from_json(json::parse(read_file(f))));
    return out;
}

void ProjectStore::write_sceneset(const SceneSet& set) {
    write_file_atomic(root_ / "scenesets" / (set.id + ".json"), to_json(set).dump(2) + "\n");
}

}  // namespace formsim
