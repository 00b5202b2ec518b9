#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lp {

// Point in the intermediate latent space. Stored as f32, which is also the
// on-disk precision; arithmetic on latents is carried out in double.
struct LatentVector {
    std::vector<float> values;

    LatentVector() = default;
    explicit LatentVector(std::vector<float> v) : values(std::move(v)) {}
    static LatentVector from_doubles(std::span<const double> v);

    std::size_t dim() const noexcept { return values.size(); }
    std::vector<double> as_doubles() const { return {values.begin(), values.end()}; }
    bool all_finite() const;

    bool operator==(const LatentVector&) const = default;
};

enum class Side : std::uint8_t { Left = 0, Right = 1 };

std::string_view side_name(Side side) noexcept;
Side parse_side(std::string_view text);

struct KneeKey {
    std::string subject_id;
    Side side = Side::Right;

    auto operator<=>(const KneeKey&) const = default;
    bool operator==(const KneeKey&) const = default;
};

struct VisitKey {
    KneeKey knee;
    int visit_month = 0;

    auto operator<=>(const VisitKey&) const = default;
    bool operator==(const VisitKey&) const = default;
};

std::string to_string(const KneeKey& key);

struct KneeRecord {
    std::string subject_id;
    Side side = Side::Right;
    int visit_month = 0;
    std::optional<int> kls;
    LatentVector latent;

    KneeKey knee() const { return {subject_id, side}; }
    VisitKey visit() const { return {knee(), visit_month}; }
    bool operator==(const KneeRecord&) const = default;
};

// Row of the visit metadata CSV.
struct VisitRow {
    std::string subject_id;
    Side side = Side::Right;
    int visit_month = 0;
    std::optional<int> kls;

    KneeKey knee() const { return {subject_id, side}; }
    VisitKey visit() const { return {knee(), visit_month}; }
    bool operator==(const VisitRow&) const = default;
};

using LatentTable = std::map<VisitKey, LatentVector>;

// Immutable, sorted by (subject_id, side, visit_month).
class LatentDictionary {
public:
    LatentDictionary() = default;

    int dimension() const noexcept { return dimension_; }
    std::span<const KneeRecord> records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }

    // Records of one knee in visit order; empty when the knee is unknown.
    std::span<const KneeRecord> visits(const KneeKey& key) const;
    std::vector<KneeKey> knees() const;
    const KneeRecord* find(const VisitKey& key) const;

private:
    friend LatentDictionary make_dictionary(int dimension, std::vector<KneeRecord> records);

    int dimension_ = 0;
    std::vector<KneeRecord> records_;
    std::map<KneeKey, std::pair<std::size_t, std::size_t>> ranges_;
};

// Validates and sorts records. Throws DimensionMismatch, DuplicateVisit,
// InvalidGrade or InvalidArgument (non-finite entries, month < 0, d < 2).
LatentDictionary make_dictionary(int dimension, std::vector<KneeRecord> records);

// Joins metadata rows with latents. Throws MissingLatent when a row has no
// latent, DimensionMismatch when latent lengths differ, DuplicateVisit.
LatentDictionary build_dictionary(std::span<const VisitRow> meta, const LatentTable& latents);

struct TrajectoryPair {
    KneeKey key;
    LatentVector baseline;
    LatentVector followup;
    int baseline_month = 0;
    int followup_month = 0;
    int delta_t = 0;
};

// One pair per follow-up visit, each against the knee's earliest visit.
std::vector<TrajectoryPair> pair_trajectories(const LatentDictionary& dict);

// Binary latent store ("LTNT", version 1, little-endian).
void save_latent_store(const std::filesystem::path& path, const LatentDictionary& dict);
LatentDictionary load_latent_store(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_latent_store(const LatentDictionary& dict);
LatentDictionary decode_latent_store(std::span<const std::uint8_t> bytes);

// Visit metadata CSV: subject_id,side,visit_month,kls (kls may be empty).
std::vector<VisitRow> read_visit_csv(const std::filesystem::path& path);
void write_visit_csv(const std::filesystem::path& path, std::span<const VisitRow> rows);
std::vector<VisitRow> parse_visit_csv(const std::string& text);

} // namespace lp
