#include "caan/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>

#include <json.hpp>

#include "caan/postprocess.hpp"
#include "caan/rng.hpp"

namespace caan {

namespace {

constexpr char kMagic[4] = {'C', 'A', 'A', 'N'};
constexpr unsigned char kFeatureVersion = 0x01;

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8 & 0xff));
    out.push_back(static_cast<char>(v >> 16 & 0xff));
    out.push_back(static_cast<char>(v >> 24 & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

void write_file(const std::filesystem::path& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError("short write to " + path.string());
}

}  // namespace

void save_features(const std::filesystem::path& path, const FeatureSequence& x) {
    validate_feature_sequence(x);
    std::string out;
    out.reserve(9 + x.values.size() * 4);
    out.append(kMagic, 4);
    out.push_back(static_cast<char>(kFeatureVersion));
    put_u32(out, static_cast<std::uint32_t>(x.frames));
    put_u32(out, static_cast<std::uint32_t>(x.dim));
    for (float v : x.values) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put_u32(out, bits);
    }
    write_file(path, out);
}

FeatureSequence load_features(const std::filesystem::path& path) {
    const std::string data = read_file(path);
    if (data.size() < 4 || std::memcmp(data.data(), kMagic, 4) != 0)
        throw BadMagicError(path.string() + ": not a CAAN feature file");
    if (data.size() < 5)
        throw TruncatedError(path.string() + ": missing version byte");
    const auto* p = reinterpret_cast<const unsigned char*>(data.data());
    if (p[4] != kFeatureVersion)
        throw VersionError(path.string() + ": unsupported feature format version " +
                           std::to_string(static_cast<int>(p[4])));
    if (data.size() < 13) throw TruncatedError(path.string() + ": missing header");
    const std::uint32_t frames = get_u32(p + 5);
    const std::uint32_t dim = get_u32(p + 9);
    if (frames == 0 || dim == 0)
        throw IoError(path.string() + ": header declares an empty matrix");
    const std::size_t expected = 13 + static_cast<std::size_t>(frames) * dim * 4;
    if (data.size() < expected)
        throw TruncatedError(path.string() + ": header declares " + std::to_string(frames) + "x" +
                             std::to_string(dim) + " but payload is short by " +
                             std::to_string(expected - data.size()) + " bytes");
    if (data.size() > expected)
        throw IoError(path.string() + ": trailing bytes after payload");
    FeatureSequence x;
    x.frames = static_cast<int>(frames);
    x.dim = static_cast<int>(dim);
    x.values.resize(static_cast<std::size_t>(frames) * dim);
    for (std::size_t i = 0; i < x.values.size(); ++i) {
        const std::uint32_t bits = get_u32(p + 13 + i * 4);
        float v;
        std::memcpy(&v, &bits, 4);
        if (!std::isfinite(v))
            throw NonFiniteError(path.string() + ": non-finite value at element " + std::to_string(i));
        x.values[i] = v;
    }
    return x;
}

namespace {

constexpr const char* kAnnotationFormat = "caan-annotation";
constexpr int kAnnotationVersion = 1;

}  // namespace

void save_annotations(const std::filesystem::path& path, const VideoRecord& rec) {
    nlohmann::json j;
    j["format"] = kAnnotationFormat;
    j["version"] = kAnnotationVersion;
    j["id"] = rec.id;
    j["frames"] = rec.features.frames;
    if (rec.gt_scores) j["gt_scores"] = rec.gt_scores->values;
    if (rec.change_points) j["change_points"] = rec.change_points->boundaries;
    if (!rec.user_summaries.empty()) {
        nlohmann::json users = nlohmann::json::array();
        for (const auto& user : rec.user_summaries) {
            nlohmann::json intervals = nlohmann::json::array();
            for (const auto& iv : user) intervals.push_back({iv.first, iv.second});
            users.push_back(intervals);
        }
        j["user_summaries"] = users;
    }
    write_file(path, j.dump(2) + "\n");
}

void load_annotations(const std::filesystem::path& path, VideoRecord& rec) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    if (!j.contains("format") || j["format"] != kAnnotationFormat)
        throw BadMagicError(path.string() + ": not a caan annotation file");
    if (!j.contains("version") || !j["version"].is_number_integer() ||
        j["version"].get<int>() != kAnnotationVersion)
        throw VersionError(path.string() + ": unsupported annotation version");
    const int frames = rec.features.frames;
    if (j.contains("frames") && j["frames"].get<int>() != frames)
        throw DimensionError(path.string() + ": annotation covers " +
                             std::to_string(j["frames"].get<int>()) + " frames, features have " +
                             std::to_string(frames));
    if (j.contains("id") && j["id"].is_string()) rec.id = j["id"].get<std::string>();

    if (j.contains("gt_scores")) {
        const auto& arr = j["gt_scores"];
        if (!arr.is_array() || static_cast<int>(arr.size()) != frames)
            throw DimensionError(path.string() + ": gt_scores holds " + std::to_string(arr.size()) +
                                 " entries for " + std::to_string(frames) + " frames");
        ScoreSequence s;
        s.values.reserve(arr.size());
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const double v = arr[i].get<double>();
            if (!(v >= 0.0 && v <= 1.0))
                throw RangeError(path.string() + ": gt_scores[" + std::to_string(i) + "] = " +
                                 std::to_string(v) + " outside [0,1]");
            s.values.push_back(static_cast<float>(v));
        }
        rec.gt_scores = std::move(s);
    }
    if (j.contains("change_points")) {
        ShotSegmentation seg;
        for (const auto& b : j["change_points"]) seg.boundaries.push_back(b.get<int>());
        try {
            validate_segmentation(seg, frames);
        } catch (const BoundsError& e) {
            throw BoundsError(path.string() + ": change_points: " + e.what());
        }
        rec.change_points = std::move(seg);
    }
    if (j.contains("user_summaries")) {
        std::vector<std::vector<Interval>> users;
        std::size_t ui = 0;
        for (const auto& user : j["user_summaries"]) {
            std::vector<Interval> intervals;
            for (const auto& iv : user) {
                if (!iv.is_array() || iv.size() != 2)
                    throw IoError(path.string() + ": user_summaries[" + std::to_string(ui) +
                                  "] holds a malformed interval");
                const int a = iv[0].get<int>(), b = iv[1].get<int>();
                if (a < 0 || b > frames || a >= b)
                    throw BoundsError(path.string() + ": user_summaries[" + std::to_string(ui) +
                                      "] interval [" + std::to_string(a) + "," + std::to_string(b) +
                                      ") outside [0," + std::to_string(frames) + ")");
                intervals.emplace_back(a, b);
            }
            std::vector<Interval> sorted = intervals;
            std::sort(sorted.begin(), sorted.end());
            for (std::size_t i = 1; i < sorted.size(); ++i)
                if (sorted[i].first < sorted[i - 1].second)
                    throw OverlapError(path.string() + ": user_summaries[" + std::to_string(ui) +
                                       "] has overlapping intervals at [" +
                                       std::to_string(sorted[i].first) + "," +
                                       std::to_string(sorted[i].second) + ")");
            users.push_back(std::move(intervals));
            ++ui;
        }
        rec.user_summaries = std::move(users);
    }
}

void save_dataset(const std::filesystem::path& dir, const std::vector<VideoRecord>& records) {
    std::filesystem::create_directories(dir);
    for (const auto& rec : records) {
        save_features(dir / (rec.id + ".feat"), rec.features);
        save_annotations(dir / (rec.id + ".json"), rec);
    }
}

std::vector<VideoRecord> load_dataset(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw IoError("dataset directory " + dir.string() + " does not exist");
    std::vector<std::string> ids;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.path().extension() == ".feat") ids.push_back(entry.path().stem().string());
    std::sort(ids.begin(), ids.end());
    if (ids.empty()) throw IoError("no .feat files under " + dir.string());
    std::vector<VideoRecord> records;
    records.reserve(ids.size());
    for (const auto& id : ids) {
        VideoRecord rec;
        rec.id = id;
        rec.features = load_features(dir / (id + ".feat"));
        const auto sidecar = dir / (id + ".json");
        if (std::filesystem::exists(sidecar)) load_annotations(sidecar, rec);
        rec.id = id;  // the filename is authoritative
        records.push_back(std::move(rec));
    }
    return records;
}

void SyntheticSpec::validate() const {
    if (videos < 1) throw ConfigError("synthetic: videos must be positive");
    if (frames_min < 2 || frames_max < frames_min)
        throw ConfigError("synthetic: frame range must satisfy 2 <= min <= max");
    if (dim < 1) throw ConfigError("synthetic: dim must be positive");
    if (segments_min < 1 || segments_max < segments_min)
        throw ConfigError("synthetic: segment range must satisfy 1 <= min <= max");
    if (!(important_fraction > 0.0f && important_fraction < 1.0f))
        throw ConfigError("synthetic: important_fraction must be in (0,1)");
    if (noise_sigma < 0.0f) throw ConfigError("synthetic: noise_sigma must be non-negative");
    if (importance_boost <= 0.0f) throw ConfigError("synthetic: importance_boost must be positive");
}

std::vector<VideoRecord> gen_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    std::vector<VideoRecord> out;
    out.reserve(static_cast<std::size_t>(spec.videos));
    for (int v = 0; v < spec.videos; ++v) {
        Rng rng(Rng::mix(spec.seed, static_cast<std::uint64_t>(v)));
        VideoRecord rec;
        {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "video_%03d", v);
            rec.id = buf;
        }
        const int frames = rng.uniform_int(spec.frames_min, spec.frames_max);
        int segs = rng.uniform_int(spec.segments_min, spec.segments_max);
        segs = std::min(segs, frames);

        // Near-equal segment lengths with seeded jitter. Comparable shot
        // sizes keep key-shot selection driven by scores rather than by
        // how many small shots happen to fit the budget.
        ShotSegmentation seg;
        seg.boundaries.push_back(0);
        const double ideal = static_cast<double>(frames) / segs;
        const double amp = ideal / 5.0;
        for (int i = 1; i < segs; ++i) {
            int b = static_cast<int>(std::lround(ideal * i + rng.uniform(-amp, amp)));
            b = std::max(b, seg.boundaries.back() + 1);
            b = std::min(b, frames - (segs - i));
            seg.boundaries.push_back(b);
        }
        seg.boundaries.push_back(frames);

        // A seeded subset of segments carries the planted signal.
        const int n_imp = std::max(
            1, static_cast<int>(std::lround(static_cast<double>(spec.important_fraction) * segs)));
        std::vector<int> order(static_cast<std::size_t>(segs));
        for (int i = 0; i < segs; ++i) order[static_cast<std::size_t>(i)] = i;
        rng.shuffle(order);
        std::vector<bool> important(static_cast<std::size_t>(segs), false);
        for (int i = 0; i < std::min(n_imp, segs); ++i) important[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;

        rec.features.frames = frames;
        rec.features.dim = spec.dim;
        rec.features.values.resize(static_cast<std::size_t>(frames) * spec.dim);
        ScoreSequence gt;
        gt.values.resize(static_cast<std::size_t>(frames));
        std::vector<float> proto(static_cast<std::size_t>(spec.dim));
        for (int si = 0; si < segs; ++si) {
            // Important prototypes are boosted in magnitude and carry a
            // fixed zero-mean alternating pattern. The magnitude drives the
            // reconstruction differential; the pattern survives per-frame
            // feature normalization so the score head can express it.
            const bool imp = important[static_cast<std::size_t>(si)];
            const float scale = imp ? spec.importance_boost : 1.0f;
            for (int k = 0; k < spec.dim; ++k) {
                const float pattern = imp ? spec.importance_boost * (k % 2 == 0 ? 1.0f : -1.0f) : 0.0f;
                proto[static_cast<std::size_t>(k)] =
                    static_cast<float>(rng.normal(0.0, 1.0)) * scale + pattern;
            }
            for (int f = seg.shot_begin(si); f < seg.shot_end(si); ++f) {
                for (int k = 0; k < spec.dim; ++k)
                    rec.features.at(f, k) =
                        proto[static_cast<std::size_t>(k)] +
                        spec.noise_sigma * static_cast<float>(rng.normal(0.0, 1.0));
                gt.values[static_cast<std::size_t>(f)] =
                    important[static_cast<std::size_t>(si)]
                        ? rng.uniform_f(0.8f, 1.0f)
                        : rng.uniform_f(0.0f, 0.2f);
            }
        }
        rec.gt_scores = gt;
        rec.change_points = seg;

        // User summary: the artifact's own key-shot selection on the
        // ground-truth scores at the 15% budget.
        Summary user = scores_to_summary(gt, seg, 0.15, false);
        std::vector<Interval> intervals;
        for (int si : user.selected_shots) intervals.emplace_back(seg.shot_begin(si), seg.shot_end(si));
        rec.user_summaries.push_back(std::move(intervals));

        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<Split> assemble_split(SplitMode mode, const std::vector<std::string>& target_ids,
                                  const std::vector<std::string>& aux_ids, int k, std::uint64_t seed) {
    if (target_ids.empty()) throw ConfigError("assemble_split: empty target dataset");
    {
        std::set<std::string> aux_set(aux_ids.begin(), aux_ids.end());
        for (const auto& id : target_ids)
            if (aux_set.count(id))
                throw LeakError("assemble_split: id " + id + " appears in both target and auxiliary sets");
    }

    std::vector<Split> splits;
    if (mode == SplitMode::Transfer) {
        if (aux_ids.empty()) throw ConfigError("assemble_split: transfer mode needs auxiliary videos");
        Split s;
        s.train_ids = aux_ids;
        s.test_ids = target_ids;
        splits.push_back(std::move(s));
    } else {
        if (static_cast<int>(target_ids.size()) < k)
            throw ConfigError("assemble_split: " + std::to_string(target_ids.size()) +
                              " videos cannot form " + std::to_string(k) + " folds");
        std::vector<std::string> shuffled = target_ids;
        Rng rng(seed);
        rng.shuffle(shuffled);
        const int n = static_cast<int>(shuffled.size());
        const int base = n / k, extra = n % k;
        int pos = 0;
        std::vector<std::vector<std::string>> folds;
        for (int f = 0; f < k; ++f) {
            const int len = base + (f < extra ? 1 : 0);
            folds.emplace_back(shuffled.begin() + pos, shuffled.begin() + pos + len);
            pos += len;
        }
        for (int f = 0; f < k; ++f) {
            Split s;
            s.test_ids = folds[static_cast<std::size_t>(f)];
            for (int g = 0; g < k; ++g)
                if (g != f)
                    s.train_ids.insert(s.train_ids.end(), folds[static_cast<std::size_t>(g)].begin(),
                                       folds[static_cast<std::size_t>(g)].end());
            if (mode == SplitMode::Augmented)
                s.train_ids.insert(s.train_ids.end(), aux_ids.begin(), aux_ids.end());
            splits.push_back(std::move(s));
        }
    }
    for (const auto& s : splits) {
        std::set<std::string> train(s.train_ids.begin(), s.train_ids.end());
        for (const auto& id : s.test_ids)
            if (train.count(id))
                throw LeakError("assemble_split: id " + id + " leaked into both train and test");
    }
    return splits;
}

}  // namespace caan
