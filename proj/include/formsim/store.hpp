#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "formsim/evaluation.hpp"
#include "formsim/formation_similarity.hpp"
#include "formsim/role_assignment.hpp"
#include "formsim/segmentation.hpp"

namespace formsim {

inline constexpr std::string_view kStoreSchema = "formsim-store/1";

struct MatchRecord {
    std::string match_id;
    std::string observed_team;
    std::string source;
    double frame_rate = 25.0;
    std::size_t frames = 0;
    std::size_t segments = 0;
};

/// Segment metadata as persisted; the frames themselves live in the match frame log.
struct SegmentRecord {
    std::string id;
    std::string match_id;
    Possession possession = Possession::Own;
    DurationClass bucket = DurationClass::Short;
    double duration_s = 0.0;
    int half = 1;
    std::int64_t first_frame = 0;
    std::int64_t last_frame = 0;
    std::size_t frame_count = 0;
    std::vector<std::pair<std::int64_t, std::int64_t>> frame_runs;
    bool possession_imputed = false;

    static SegmentRecord from_segment(const Segment& s);
};

struct ClassificationRecord {
    std::string segment_id;
    double delta = kDefaultDelta;
    bool role_compensation = true;
    std::string templates_version;
    ClassificationResult result;
};

struct RejectedSegment {
    std::string segment_id;
    std::string reason;
};

struct SceneSet {
    std::string id;
    std::string match_id;
    int half = 1;
    std::size_t own = 0;
    std::size_t opponent = 0;
    /// Chronological order.
    std::vector<std::string> segment_ids;
};

// JSON codecs shared by the store, the CLI and the HTTP layer. Keys are
// sorted, so dumps are byte-stable.
nlohmann::json to_json(const Frame& f);
Frame frame_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SegmentRecord& s);
SegmentRecord segment_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Formation& f);
Formation formation_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ClassificationRecord& c, std::size_t top_k = SIZE_MAX);
ClassificationRecord classification_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AnnotationRecord& a);
/// Validates enums and the scheme label; throws SchemaError naming the field.
AnnotationRecord annotation_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SceneSet& s);
SceneSet sceneset_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MatchRecord& m);
MatchRecord match_from_json(const nlohmann::json& j);

/// Reads JSON Lines, or a JSON array when the file starts with '['.
std::vector<nlohmann::json> read_json_records(const std::filesystem::path& path);

/// File-backed project store:
///
///   index.json                       store version and match list
///   templates.json                   bank used by the last classification
///   annotations.jsonl                append-only annotation log
///   scenesets/<id>.json
///   matches/<id>/match.json
///   matches/<id>/frames.jsonl        normalized frames, one per line
///   matches/<id>/segments.jsonl
///   matches/<id>/vfs.jsonl
///   matches/<id>/classifications.jsonl
///   matches/<id>/rejected.jsonl
///
/// Not thread-safe; the service serializes access.
class ProjectStore {
public:
    /// Opens a store; a missing directory yields an empty store that is
    /// created on the first write.
    explicit ProjectStore(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }

    std::vector<MatchRecord> matches() const;
    std::optional<MatchRecord> match(const std::string& id) const;
    std::vector<std::string> match_ids() const { return match_ids_; }

    /// Replaces everything stored for the match, including stale VFS and
    /// classification records. Annotations are untouched.
    void write_match(const MatchRecord& record, const std::vector<Frame>& frames,
                     const std::vector<Segment>& segments);

    std::vector<SegmentRecord> segments(const std::string& match_id) const;
    std::optional<SegmentRecord> find_segment(const std::string& segment_id) const;
    std::vector<Frame> frames(const std::string& match_id) const;
    /// Rebuilds a segment with its frames from the frame log.
    Segment load_segment(const SegmentRecord& record, const std::vector<Frame>& match_frames) const;

    void write_classifications(const std::string& match_id, const std::vector<Formation>& vfs,
                               const std::vector<ClassificationRecord>& classifications,
                               const std::vector<RejectedSegment>& rejected);
    std::vector<Formation> vfs(const std::string& match_id) const;
    std::vector<ClassificationRecord> classifications(const std::string& match_id) const;
    std::vector<RejectedSegment> rejected(const std::string& match_id) const;

    void write_templates(const TemplateSet& templates);
    std::optional<TemplateSet> templates() const;

    std::vector<AnnotationRecord> annotations() const;
    /// Appends with the next sequence number and returns the stored record.
    AnnotationRecord append_annotation(AnnotationRecord record);

    std::vector<SceneSet> scenesets() const;
    void write_sceneset(const SceneSet& set);

private:
    std::filesystem::path match_dir(const std::string& id) const;
    void write_index() const;

    std::filesystem::path root_;
    std::vector<std::string> match_ids_;
};

/// Writes text to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_file(const std::filesystem::path& path);

}  // namespace formsim
